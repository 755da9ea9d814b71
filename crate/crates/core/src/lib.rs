//! Aggregate-and-iterative-disaggregate solvers for least absolute deviation regression,
//! soft-margin SVM and semi-supervised SVM.

pub mod clustering;
pub mod data;
pub mod error;
pub mod framework;
pub mod lad;
pub mod metrics;
pub mod s3vm;
pub mod subsolvers;
pub mod svm;

pub use clustering::ClusterPartition;
pub use data::{Dataset, DenseMatrix, Features, ProblemKind, SparseMatrix, SyntheticSpec, Target};
pub use error::{AidError, Result};
pub use framework::{run_aid, Adapter, AidConfig, AidRun, IterationRecord, Mode, RunLog, TerminationReason};
pub use lad::{LadAdapter, LadModel};
pub use s3vm::{BalanceMode, S3vmAdapter, S3vmData, S3vmModel, S3vmParams};
pub use subsolvers::KernelKind;
pub use svm::{SvmAdapter, SvmModel};
