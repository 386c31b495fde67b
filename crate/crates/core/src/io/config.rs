//! Run configuration: one JSON document, any field overridable by a dotted
//! path such as `solver.lambda=0.5`, and all randomness derived from the
//! top-level `seed`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::map::FeatureMap;
use crate::model::{Dataset, SigmaHalf, UncertaintyModel, UncertaintySet};
use crate::norm::NormExponent;
use crate::nystrom::{select_landmarks, NystromMap};
use crate::objective::SolverProblem;
use crate::rff::{RffMap, RffVariant};
use crate::rng::{derive_seed, SeedStream};
use crate::solver::{train, Method, SolverConfig, StepSchedule, TrainingTrace};
use crate::verify::standard_error;

use super::data::{parse_csv, parse_libsvm};
use super::model_file::{ModelFile, TrainingMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub path: Option<PathBuf>,
    pub format: DataFormat,
    /// CSV only: 0-based column holding the label.
    pub label_column: usize,
    /// CSV only.
    pub has_header: bool,
    /// Map labels 0/1 to -1/+1.
    pub remap01: bool,
}

impl DataSpec {
    pub fn load(&self) -> Result<Dataset> {
        let path = self.path.as_ref().ok_or_else(|| Error::Config("data.path is not set".into()))?;
        let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let reader = BufReader::new(file);
        match self.format {
            DataFormat::Libsvm => parse_libsvm(reader, self.remap01),
            DataFormat::Csv => parse_csv(reader, self.label_column, self.has_header, self.remap01),
        }
    }
}

/// `Σ^{1/2}` as `s·I`, a diagonal, or a dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaHalfSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

impl SigmaHalfSpec {
    pub fn build(&self, n: usize) -> Result<SigmaHalf> {
        match self {
            SigmaHalfSpec::Scalar(s) => SigmaHalf::scaled_identity(*s, n),
            SigmaHalfSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: d.len() });
                }
                SigmaHalf::diagonal(d.clone())
            }
            SigmaHalfSpec::Dense(rows) => {
                let m = DenseMatrix::from_rows(rows)?;
                if m.rows() != n || m.cols() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: m.rows().max(m.cols()) });
                }
                SigmaHalf::dense(m)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintySpec {
    pub gamma: f64,
    pub p: NormExponent,
    pub sigma_half: SigmaHalfSpec,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        UncertaintySpec { gamma: 0.1, p: NormExponent::TWO, sigma_half: SigmaHalfSpec::Scalar(1.0) }
    }
}

impl UncertaintySpec {
    pub fn build(&self, n: usize) -> Result<UncertaintyModel> {
        UncertaintyModel::new(self.sigma_half.build(n)?, self.gamma, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Identity,
    #[default]
    Rff,
    Nystrom,
}

/// Feature map settings. Fields that do not apply to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    /// Kernel bandwidth `σ` (rff, nystrom).
    pub sigma: f64,
    /// Output dimension `D` (rff).
    pub dim: usize,
    pub variant: RffVariant,
    /// Number of landmarks `m` (nystrom).
    pub landmarks: usize,
    /// Eigenvalue cutoff (nystrom); unset means relative to the largest.
    pub rank_tol: Option<f64>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            kind: FeatureKind::Rff,
            sigma: 1.0,
            dim: 64,
            variant: RffVariant::Paired,
            landmarks: 50,
            rank_tol: None,
        }
    }
}

/// Solver settings; the seed comes from the run's top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub method: Method,
    pub epochs: u32,
    pub step: StepSchedule,
    pub lambda: f64,
    pub trace_every: u64,
    pub tail_average: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSpec {
            method: c.method,
            epochs: c.epochs,
            step: c.step,
            lambda: c.lambda,
            trace_every: c.trace_every,
            tail_average: c.tail_average,
        }
    }
}

impl SolverSpec {
    pub fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            method: self.method,
            epochs: self.epochs,
            step: self.step,
            lambda: self.lambda,
            seed,
            trace_every: self.trace_every,
            tail_average: self.tail_average,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub model: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Settings for the verification and evaluation subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Monte-Carlo perturbations per bound check.
    pub trials: usize,
    /// Number of leading dataset samples used as nominal points.
    pub points: usize,
    /// Radii to check; empty means `uncertainty.gamma` only.
    pub gammas: Vec<f64>,
    /// Feature norms to check; empty means `pbar` only.
    pub pbars: Vec<NormExponent>,
    /// Perturbations per sample for the robust error.
    pub robust_trials: usize,
    /// Number of leading dataset samples used for kernel error statistics.
    pub kernel_points: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            trials: 10_000,
            points: 5,
            gammas: Vec::new(),
            pbars: Vec::new(),
            robust_trials: 100,
            kernel_points: 20,
        }
    }
}

fn default_pbar() -> NormExponent {
    NormExponent::TWO
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub uncertainty: UncertaintySpec,
    #[serde(default)]
    pub features: FeatureSpec,
    /// Feature-space norm of the bound; `q̄` is its dual.
    #[serde(default = "default_pbar")]
    pub pbar: NormExponent,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data: DataSpec::default(),
            uncertainty: UncertaintySpec::default(),
            features: FeatureSpec::default(),
            pbar: default_pbar(),
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
            verify: VerifySpec::default(),
        }
    }
}

/// Sets `path` (dot-separated keys) in a JSON object to `raw`, read as JSON
/// when it parses and as a string otherwise. Missing objects are created.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj =
            node.as_object_mut().ok_or_else(|| Error::Config(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one key")
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an optional config file and applies `(path, value)` overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for (k, v) in overrides {
            apply_override(&mut value, k, v)?;
        }
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.uncertainty.gamma >= 0.0) || !self.uncertainty.gamma.is_finite() {
            return Err(Error::Config(format!(
                "uncertainty.gamma = {} must be finite and >= 0",
                self.uncertainty.gamma
            )));
        }
        if self.verify.gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::Config("verify.gammas must be finite and >= 0".into()));
        }
        self.solver.config(0).validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        match self.features.kind {
            FeatureKind::Nystrom => {
                if self.uncertainty.p != NormExponent::TWO {
                    return Err(Error::Config("the Nystrom bound needs uncertainty.p = 2".into()));
                }
                if self.pbar != NormExponent::TWO {
                    return Err(Error::Config("the Nystrom bound needs pbar = 2".into()));
                }
            }
            FeatureKind::Rff => {
                if !self.pbar.is_standard() {
                    return Err(Error::Config(format!("pbar = {} must be 1, 2 or inf", self.pbar)));
                }
                if self.features.variant == RffVariant::Offset && self.uncertainty.gamma > 0.0 {
                    return Err(Error::Config("robust training needs the paired RFF variant".into()));
                }
            }
            FeatureKind::Identity => {}
        }
        Ok(())
    }

    pub fn seed_for(&self, stream: SeedStream) -> u64 {
        derive_seed(self.seed, stream)
    }

    pub fn uncertainty_model(&self, n: usize) -> Result<UncertaintyModel> {
        self.uncertainty.build(n)
    }

    /// Samples or fits the configured feature map on `data`.
    pub fn build_feature_map(&self, data: &Dataset) -> Result<FeatureMap> {
        let n = data.n_features();
        let f = &self.features;
        match f.kind {
            FeatureKind::Identity => Ok(FeatureMap::Identity { dim: n }),
            FeatureKind::Rff => Ok(FeatureMap::Rff(RffMap::sample(
                n,
                f.dim,
                f.sigma,
                f.variant,
                self.seed_for(SeedStream::FeatureMap),
            )?)),
            FeatureKind::Nystrom => {
                let points = select_landmarks(data, f.landmarks, self.seed_for(SeedStream::Landmarks))?;
                Ok(FeatureMap::Nystrom(NystromMap::fit(points, f.sigma, f.rank_tol)?))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub trace: TrainingTrace,
    pub samples: usize,
    pub train_accuracy: f64,
}

/// Loads data, builds the map and bounds, and trains.
pub fn run_training(cfg: &RunConfig) -> Result<TrainOutcome> {
    let data = cfg.data.load()?;
    run_training_on(cfg, &data)
}

pub fn run_training_on(cfg: &RunConfig, data: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    let unc = UncertaintySet::Shared(cfg.uncertainty_model(data.n_features())?);
    let map = cfg.build_feature_map(data)?;
    let problem = SolverProblem::build(data, map, &unc, cfg.pbar, cfg.solver.lambda)?;
    let solver = cfg.solver.config(cfg.seed_for(SeedStream::Solver));
    let (classifier, trace) = train(&problem, &solver)?;
    let train_accuracy = 1.0 - standard_error(&classifier, data)?;
    let meta = TrainingMeta {
        lambda: solver.lambda,
        method: solver.method,
        epochs: solver.epochs,
        seed: cfg.seed,
        gamma: cfg.uncertainty.gamma,
        pbar: cfg.pbar,
    };
    Ok(TrainOutcome { model: ModelFile::new(&classifier, meta), trace, samples: data.len(), train_accuracy })
}
