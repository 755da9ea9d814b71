//! Exact solvers for the aggregated problems.

pub mod bnb;
pub mod kernel;
pub mod lp;
pub mod qp;
pub mod svm;

pub use bnb::{solve_s3vm_bnb, BnbLimits, BnbProblem, BnbSolution};
pub use kernel::{FunctionKernel, GramMatrix, KernelKind, KernelMatrix, LinearKernel, MAX_GRAM_SIZE};
pub use lp::{lad_objective, solve_weighted_lad, LadSolution, WeightedLadInstance};
pub use qp::{solve_box_qp, BoxQp, QpOptions, QpSolution};
pub use svm::{
    optimal_bias_interval, solve_svm, solve_svm_with, solve_weighted_svm, solve_weighted_svm_with, DualSolution,
    HyperplaneConstraint, SvmInput, SvmProblem, SvmSolution, WeightedSvmInstance,
};
