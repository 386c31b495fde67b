//! Versioned JSON model files.
//!
//! Floats are written in shortest round-trip form and read back with exact
//! parsing, so a saved model predicts bitwise identically after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::FeatureMap;
use crate::norm::NormExponent;
use crate::objective::RobustClassifier;
use crate::solver::Method;

pub const MODEL_FORMAT: &str = "rosvm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub lambda: f64,
    pub method: Method,
    pub epochs: u32,
    pub seed: u64,
    pub gamma: f64,
    pub pbar: NormExponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_map: FeatureMap,
    pub zeta: Vec<f64>,
    pub bias: f64,
    pub training: TrainingMeta,
}

impl ModelFile {
    pub fn new(classifier: &RobustClassifier, training: TrainingMeta) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            feature_map: classifier.feature_map.clone(),
            zeta: classifier.zeta.clone(),
            bias: classifier.bias,
            training,
        }
    }

    pub fn classifier(&self) -> Result<RobustClassifier> {
        self.feature_map.validate().map_err(|e| Error::CorruptModel(e.to_string()))?;
        RobustClassifier::new(self.zeta.clone(), self.bias, self.feature_map.clone())
            .map_err(|e| Error::CorruptModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    /// Parses a model file, checking the header before the body so a newer
    /// file is reported as a version problem rather than a parse failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| Error::CorruptModel("top level is not an object".into()))?;
        match obj.get("format").and_then(|f| f.as_str()) {
            Some(MODEL_FORMAT) => {}
            Some(other) => return Err(Error::CorruptModel(format!("unknown format `{other}`"))),
            None => return Err(Error::CorruptModel("missing `format`".into())),
        }
        let version = obj.get("version").ok_or_else(|| Error::CorruptModel("missing `version`".into()))?;
        if version.as_u64() != Some(MODEL_VERSION as u64) {
            return Err(Error::ModelVersion(format!("file has version {version}, this build reads {MODEL_VERSION}")));
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("unknown field") {
                Error::ModelVersion(format!("{msg}; the file was written by a newer version"))
            } else {
                Error::CorruptModel(msg)
            }
        })?;
        file.classifier()?;
        Ok(file)
    }
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, file.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ModelFile::from_json(&text)
}
