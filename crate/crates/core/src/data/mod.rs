//! Datasets, loaders, synthetic generators and model files.

pub mod csv_io;
pub mod dataset;
pub mod model;
pub mod rng;
pub mod svmlight;
pub mod synth;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv, CsvOptions, TargetKind};
pub use dataset::{Dataset, DenseMatrix, Features, SparseMatrix, Target};
pub use model::{config_digest, load_model, model_from_str, model_to_string, save_model, ModelMetadata, ModelParams, SavedModel};
pub use svmlight::{load_svmlight, read_svmlight};
pub use synth::{generate, generate_lad, generate_s3vm, generate_svm, ProblemKind, SyntheticSpec};
