//! Data readers, model persistence and run configuration.

mod config;
mod data;
mod model_file;

pub use config::{
    apply_override, run_training, run_training_on, DataFormat, DataSpec, FeatureKind, FeatureSpec, OutputSpec,
    RunConfig, SigmaHalfSpec, SolverSpec, TrainOutcome, UncertaintySpec, VerifySpec,
};
pub use data::{parse_csv, parse_libsvm, MAX_DENSE_CELLS, MAX_FEATURE_INDEX};
pub use model_file::{load_model, save_model, ModelFile, TrainingMeta, MODEL_FORMAT, MODEL_VERSION};
