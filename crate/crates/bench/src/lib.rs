//! Fixed instances shared by the benchmarks.

use aid_core::data::{generate_lad, generate_s3vm, generate_svm};
use aid_core::{Dataset, SyntheticSpec};

pub fn lad_instance(n: usize, m: usize) -> Dataset {
    generate_lad(&SyntheticSpec::lad(n, m, 17)).expect("valid spec")
}

pub fn svm_instance(n: usize, m: usize) -> Dataset {
    generate_svm(&SyntheticSpec::svm(n, m, 17)).expect("valid spec")
}

pub fn s3vm_instance(n: usize, m: usize, labeled_fraction: f64) -> Dataset {
    generate_s3vm(&SyntheticSpec::s3vm(n, m, labeled_fraction, 17)).expect("valid spec")
}
