//! The explicit feature map a classifier operates in.

use serde::{Deserialize, Serialize};

use crate::bound::FeatureBound;
use crate::error::{check_dim, Error, Result};
use crate::model::UncertaintyModel;
use crate::norm::NormExponent;
use crate::nystrom::{nystrom_bound, NystromMap};
use crate::rff::{rff_bound, RffMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FeatureMap {
    /// Linear model: features are the raw inputs.
    Identity {
        dim: usize,
    },
    Rff(RffMap),
    Nystrom(NystromMap),
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Rff(m) => m.n_inputs,
            FeatureMap::Nystrom(m) => m.n_inputs(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Rff(m) => m.dim,
            FeatureMap::Nystrom(m) => m.rank(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FeatureMap::Identity { .. } => "identity",
            FeatureMap::Rff(_) => "rff",
            FeatureMap::Nystrom(_) => "nystrom",
        }
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureMap::Identity { dim } => {
                check_dim(*dim, x.len())?;
                Ok(x.to_vec())
            }
            FeatureMap::Rff(m) => m.transform(x),
            FeatureMap::Nystrom(m) => m.transform(x),
        }
    }

    /// Feature-space bound for sample `x`. `pbar` selects the feature norm
    /// for RFF; Nyström is always Euclidean and the identity map uses the
    /// input-space pair `(p, q)`.
    pub fn bound(&self, x: &[f64], unc: &UncertaintyModel, pbar: NormExponent) -> Result<FeatureBound> {
        match self {
            FeatureMap::Identity { dim } => {
                check_dim(*dim, x.len())?;
                check_dim(*dim, unc.dim())?;
                Ok(FeatureBound::linear(unc))
            }
            FeatureMap::Rff(m) => rff_bound(m, x, unc, pbar),
            FeatureMap::Nystrom(m) => {
                if pbar != NormExponent::TWO {
                    return Err(Error::UnsupportedNorm(pbar.value()));
                }
                nystrom_bound(m, x, unc)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureMap::Identity { dim } if *dim == 0 => Err(crate::error::invalid("dim", "must be positive")),
            FeatureMap::Identity { .. } => Ok(()),
            FeatureMap::Rff(m) => m.validate(),
            FeatureMap::Nystrom(_) => Ok(()),
        }
    }
}
