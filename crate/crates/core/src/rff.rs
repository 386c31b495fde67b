//! Random Fourier features for the Gaussian kernel and their uncertainty
//! bounds.
//!
//! The paired map sends `x` to
//! `√(2/D) (cos ω_1ᵀx, sin ω_1ᵀx, …, cos ω_{D/2}ᵀx, sin ω_{D/2}ᵀx)` with
//! `ω_j ~ N(0, σ⁻² I)`. Each (cos, sin) block lives on a circle of radius
//! `√(2/D)`, so a perturbation of `x` moves every block along its circle by
//! the angle `ω_jᵀΔx`. Rotating block `j` back by `ω_jᵀx` turns the
//! displacement into `√(2/D) (cos θ - 1, sin θ)` with `θ = ω_jᵀΔx`, and
//! Hölder gives `|θ| ≤ γ ‖Σ^{⊤/2} ω_j‖_q`.
//!
//! The offset map `√(2/D) cos(ω_jᵀx + ν_j)` is kept for kernel
//! approximation only; it has no bound.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bound::{BoundTransform, FeatureBound, RotationBlocks};
use crate::error::{check_dim, invalid, Error, Result};
use crate::model::{SigmaHalf, UncertaintyModel};
use crate::norm::{dot, lp_norm, NormExponent};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RffVariant {
    /// (cos, sin) pairs sharing one frequency.
    #[default]
    Paired,
    /// One cosine per frequency with a uniform phase offset.
    Offset,
}

impl RffVariant {
    pub fn name(self) -> &'static str {
        match self {
            RffVariant::Paired => "paired",
            RffVariant::Offset => "offset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffMap {
    pub sigma: f64,
    /// Output dimension `D`.
    pub dim: usize,
    pub variant: RffVariant,
    pub seed: u64,
    pub n_inputs: usize,
    /// `D/2` rows (paired) or `D` rows (offset), each of length `n_inputs`.
    pub omegas: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
}

impl RffMap {
    /// Samples frequencies `ω_j ~ N(0, σ⁻² I)` (and, for the offset variant,
    /// phases `ν_j ~ U[0, 2π]`) from `seed`.
    pub fn sample(n_inputs: usize, dim: usize, sigma: f64, variant: RffVariant, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("D", format!("{dim} must be at least 2")));
        }
        if variant == RffVariant::Paired && !dim.is_multiple_of(2) {
            return Err(Error::OddFeatureDimension(dim));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", format!("{sigma} must be positive")));
        }
        if n_inputs == 0 {
            return Err(invalid("n", "input dimension must be positive"));
        }
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, 1.0 / sigma).map_err(|e| invalid("sigma", e.to_string()))?;
        let n_freq = match variant {
            RffVariant::Paired => dim / 2,
            RffVariant::Offset => dim,
        };
        let omegas = (0..n_freq).map(|_| (0..n_inputs).map(|_| normal.sample(&mut rng)).collect()).collect();
        let offsets = (variant == RffVariant::Offset)
            .then(|| (0..dim).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect());
        Ok(RffMap { sigma, dim, variant, seed, n_inputs, omegas, offsets })
    }

    /// Structural checks for maps that did not come from [`RffMap::sample`].
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(invalid("sigma", "must be positive"));
        }
        let rows = match self.variant {
            RffVariant::Paired => {
                if !self.dim.is_multiple_of(2) {
                    return Err(Error::OddFeatureDimension(self.dim));
                }
                if self.offsets.is_some() {
                    return Err(invalid("offsets", "present on a paired map"));
                }
                self.dim / 2
            }
            RffVariant::Offset => {
                let off = self.offsets.as_ref().ok_or_else(|| invalid("offsets", "missing on an offset map"))?;
                check_dim(self.dim, off.len())?;
                if !off.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("offsets"));
                }
                self.dim
            }
        };
        check_dim(rows, self.omegas.len())?;
        for w in &self.omegas {
            check_dim(self.n_inputs, w.len())?;
            if !w.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("omegas"));
            }
        }
        Ok(())
    }

    /// The angles `ω_jᵀx`.
    pub fn angles(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_inputs, x.len())?;
        Ok(self.omegas.iter().map(|w| dot(w, x)).collect())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let angles = self.angles(x)?;
        let scale = (2.0 / self.dim as f64).sqrt();
        Ok(match (&self.variant, &self.offsets) {
            (RffVariant::Offset, Some(nu)) => angles.iter().zip(nu).map(|(a, v)| scale * (a + v).cos()).collect(),
            _ => angles
                .iter()
                .flat_map(|a| {
                    let (s, c) = a.sin_cos();
                    [scale * c, scale * s]
                })
                .collect(),
        })
    }

    /// `‖Σ^{⊤/2} ω_j‖_q` for every frequency, `q` dual to `unc.p`.
    ///
    /// These depend only on the map and the shape of the uncertainty set,
    /// so callers with a shared set compute them once.
    pub fn frequency_dual_norms(&self, unc: &UncertaintyModel) -> Result<Vec<f64>> {
        check_dim(self.n_inputs, unc.dim())?;
        let q = unc.q();
        Ok(self.omegas.iter().map(|w| lp_norm(&unc.sigma_half.apply_transpose(w), q)).collect())
    }
}

/// Certified bound for the paired map at `x` under `unc`, in the feature
/// norm `p̄ ∈ {1, 2, ∞}`.
pub fn rff_bound(map: &RffMap, x: &[f64], unc: &UncertaintyModel, pbar: NormExponent) -> Result<FeatureBound> {
    let norms = map.frequency_dual_norms(unc)?;
    rff_bound_from_norms(map, x, unc.gamma, &norms, pbar)
}

/// [`rff_bound`] with the frequency norms already computed.
pub fn rff_bound_from_norms(
    map: &RffMap,
    x: &[f64],
    gamma: f64,
    freq_norms: &[f64],
    pbar: NormExponent,
) -> Result<FeatureBound> {
    if map.variant != RffVariant::Paired {
        return Err(Error::UnsupportedVariant(map.variant.name()));
    }
    if !pbar.is_standard() {
        return Err(Error::UnsupportedNorm(pbar.value()));
    }
    check_dim(map.omegas.len(), freq_norms.len())?;
    let angles = map.angles(x)?;
    let gamma_feat = rff_gamma(gamma, freq_norms, map.dim, pbar);
    Ok(FeatureBound::new(gamma_feat, BoundTransform::Rotation(RotationBlocks::from_angles(&angles)), pbar))
}

/// `Γ` from the saturated per-frequency bounds
/// `α_j = min(2, (γ a_j)²/2)` on `|cos θ - 1|` and `β_j = min(1, γ a_j)` on
/// `|sin θ|`, where `a_j = ‖Σ^{⊤/2} ω_j‖_q`.
pub(crate) fn rff_gamma(gamma: f64, freq_norms: &[f64], dim: usize, pbar: NormExponent) -> f64 {
    let d = dim as f64;
    let (alphas, betas): (Vec<f64>, Vec<f64>) = freq_norms
        .iter()
        .map(|a| {
            let t = gamma * a;
            ((t * t / 2.0).min(2.0), t.min(1.0))
        })
        .unzip();
    let p = pbar.value();
    if p == 1.0 {
        (2.0 / d).sqrt() * alphas.iter().zip(&betas).map(|(a, b)| a + b).sum::<f64>()
    } else if p == 2.0 {
        // (4 Σα) / D keeps the saturated value exactly 4 for every D.
        (4.0 * alphas.iter().sum::<f64>() / d).sqrt()
    } else {
        let ma = alphas.iter().fold(0.0f64, |m, &a| m.max(a));
        let mb = betas.iter().fold(0.0f64, |m, &b| m.max(b));
        (2.0 / d).sqrt() * ma.max(mb)
    }
}

/// Smallest bandwidth keeping every angle `|ω_jᵀΔx|` below `theta_max`
/// whenever all frequency coordinates lie within `±3/σ`:
/// `3 γ ‖Σ^{1/2}‖_F / θ_max`. Needs a diagonal `Σ^{1/2}`.
pub fn rff_sigma_min(gamma: f64, sigma_half: &SigmaHalf, theta_max: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma", format!("{gamma} must be finite and >= 0")));
    }
    if !(theta_max > 0.0) || !theta_max.is_finite() {
        return Err(invalid("theta_max", format!("{theta_max} must be positive")));
    }
    let diag = sigma_half
        .diagonal_entries()
        .ok_or_else(|| invalid("sigma_half", "the sigma lower bound needs a diagonal sigma_half"))?;
    Ok(3.0 * gamma * crate::norm::l2_norm(&diag) / theta_max)
}
