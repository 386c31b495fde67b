//! Per-sample feature-space uncertainty bounds `‖R Δφ‖_p̄ ≤ Γ`.

use std::sync::Arc;

use crate::model::{SigmaHalf, UncertaintyModel};
use crate::norm::{lp_norm, NormExponent};

/// Block-diagonal matrix of 2×2 rotations, stored as one angle per block.
///
/// Block `j` is the rotation by `-θ_j`, i.e. the transpose of the rotation
/// by `θ_j = ω_jᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationBlocks {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RotationBlocks {
    pub fn from_angles(angles: &[f64]) -> Self {
        let (sin, cos) = angles.iter().map(|a| a.sin_cos()).unzip();
        RotationBlocks { cos, sin }
    }

    pub fn n_blocks(&self) -> usize {
        self.cos.len()
    }

    /// The 2×2 block `j` as `[[a, b], [c, d]]`.
    pub fn block(&self, j: usize) -> [[f64; 2]; 2] {
        let (c, s) = (self.cos[j], self.sin[j]);
        [[c, s], [-s, c]]
    }

    /// `R v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (j, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (a, b) = (v[2 * j], v[2 * j + 1]);
            out[2 * j] = c * a + s * b;
            out[2 * j + 1] = -s * a + c * b;
        }
        out
    }

    /// `Rᵀ v`
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (j, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (a, b) = (v[2 * j], v[2 * j + 1]);
            out[2 * j] = c * a - s * b;
            out[2 * j + 1] = s * a + c * b;
        }
        out
    }
}

/// The matrix `R` of a bound.
#[derive(Debug, Clone)]
pub enum BoundTransform {
    Identity,
    /// Random Fourier features: per-sample rotation blocks.
    Rotation(RotationBlocks),
    /// Nyström: `diag(√λ_k)`, shared by every sample of a map.
    Scaling(Arc<Vec<f64>>),
    /// Identity feature map: `R = Σ^{1/2}`, so `‖Rᵀw‖_q` is the dual-norm
    /// term `‖Σ^{⊤/2}w‖_q` of the linear robust loss.
    SigmaHalf(Arc<SigmaHalf>),
}

/// `Γ`, `R` and the norm pair `(p̄, q̄)` for one sample.
#[derive(Debug, Clone)]
pub struct FeatureBound {
    pub gamma_feat: f64,
    pub transform: BoundTransform,
    pub pbar: NormExponent,
    pub qbar: NormExponent,
}

impl FeatureBound {
    pub fn new(gamma_feat: f64, transform: BoundTransform, pbar: NormExponent) -> Self {
        FeatureBound { gamma_feat, transform, pbar, qbar: pbar.dual() }
    }

    /// A bound with `Γ = 0` (no uncertainty) in `p̄ = 2`.
    pub fn zero() -> Self {
        Self::new(0.0, BoundTransform::Identity, NormExponent::TWO)
    }

    /// Bound for the identity feature map, reproducing the linear robust
    /// loss: `Γ = γ`, `R = Σ^{1/2}`, `(p̄, q̄) = (p, q)`.
    pub fn linear(unc: &UncertaintyModel) -> Self {
        Self::new(unc.gamma, BoundTransform::SigmaHalf(unc.sigma_half.clone()), unc.p)
    }

    /// `R v`
    pub fn apply_r(&self, v: &[f64]) -> Vec<f64> {
        match &self.transform {
            BoundTransform::Identity => v.to_vec(),
            BoundTransform::Rotation(r) => r.apply(v),
            BoundTransform::Scaling(s) => s.iter().zip(v).map(|(a, b)| a * b).collect(),
            BoundTransform::SigmaHalf(s) => s.apply(v),
        }
    }

    /// `Rᵀ v`
    pub fn apply_rt(&self, v: &[f64]) -> Vec<f64> {
        match &self.transform {
            BoundTransform::Identity => v.to_vec(),
            BoundTransform::Rotation(r) => r.apply_transpose(v),
            BoundTransform::Scaling(s) => s.iter().zip(v).map(|(a, b)| a * b).collect(),
            BoundTransform::SigmaHalf(s) => s.apply_transpose(v),
        }
    }

    /// `‖R v‖_p̄`, the quantity the bound controls.
    pub fn displacement_norm(&self, dphi: &[f64]) -> f64 {
        lp_norm(&self.apply_r(dphi), self.pbar)
    }

    /// `Γ ‖Rᵀζ‖_q̄`, the worst-case margin erosion in the robust hinge.
    pub fn robust_term(&self, zeta: &[f64]) -> f64 {
        if self.gamma_feat == 0.0 {
            return 0.0;
        }
        self.gamma_feat * lp_norm(&self.apply_rt(zeta), self.qbar)
    }
}
