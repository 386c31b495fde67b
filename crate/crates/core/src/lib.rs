//! Robust kernel support vector machines trained in an explicit feature space.
//!
//! Input-space uncertainty sets are mapped to feature-space bounds through
//! random Fourier features or a Nyström approximation of the Gaussian kernel,
//! and the resulting robust hinge objective is minimized by stochastic
//! subgradient or proximal steps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod error;
pub mod io;
pub mod linalg;
pub mod map;
pub mod model;
pub mod norm;
pub mod nystrom;
pub mod objective;
pub mod rff;
pub mod rng;
pub mod solver;
pub mod verify;

pub use bound::{BoundTransform, FeatureBound, RotationBlocks};
pub use error::{Error, Result};
pub use map::FeatureMap;
pub use model::{Dataset, SampleMode, SigmaHalf, UncertaintyModel, UncertaintySet};
pub use norm::{NormExponent, NormPair};
pub use nystrom::NystromMap;
pub use objective::{RobustClassifier, SolverProblem};
pub use rff::{RffMap, RffVariant};
pub use solver::{train, Method, Schedule, SolverConfig, StepSchedule, TrainingTrace};
