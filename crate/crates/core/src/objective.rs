//! Robust hinge losses, their subgradients, the ridge proximal step and the
//! full regularized objective
//! `(λ/2)‖ζ‖² + Σ_i max{0, 1 - y_i(ζᵀφ_i + b) + Γ_i ‖R_iᵀζ‖_q̄}`.

use rayon::prelude::*;

use crate::bound::FeatureBound;
use crate::error::{check_dim, invalid, Error, Result};
use crate::map::FeatureMap;
use crate::model::{Dataset, UncertaintyModel, UncertaintySet};
use crate::norm::{dot, lp_norm, NormExponent};
use crate::rff::rff_bound_from_norms;

/// Weights `ζ`, bias `b` and the feature map they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustClassifier {
    pub zeta: Vec<f64>,
    pub bias: f64,
    pub feature_map: FeatureMap,
}

impl RobustClassifier {
    pub fn new(zeta: Vec<f64>, bias: f64, feature_map: FeatureMap) -> Result<Self> {
        check_dim(feature_map.output_dim(), zeta.len())?;
        if !zeta.iter().all(|v| v.is_finite()) || !bias.is_finite() {
            return Err(Error::NonFinite("classifier weights"));
        }
        Ok(RobustClassifier { zeta, bias, feature_map })
    }

    pub fn zeros(feature_map: FeatureMap) -> Self {
        RobustClassifier { zeta: vec![0.0; feature_map.output_dim()], bias: 0.0, feature_map }
    }

    /// `ζᵀφ(x) + b`
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let phi = self.feature_map.transform(x)?;
        Ok(dot(&self.zeta, &phi) + self.bias)
    }

    /// Predicted label; a zero score goes to `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign_label(self.decision_value(x)?))
    }
}

#[inline]
pub fn sign_label(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Precomputed features and per-sample bounds for training.
#[derive(Debug, Clone)]
pub struct SolverProblem {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub bounds: Vec<FeatureBound>,
    pub lambda: f64,
    pub feature_map: FeatureMap,
}

impl SolverProblem {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<f64>,
        bounds: Vec<FeatureBound>,
        lambda: f64,
        feature_map: FeatureMap,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(invalid("features", "no samples"));
        }
        check_dim(features.len(), labels.len())?;
        check_dim(features.len(), bounds.len())?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", format!("{lambda} must be positive")));
        }
        let d = feature_map.output_dim();
        for f in &features {
            check_dim(d, f.len())?;
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(invalid("label", format!("{y} is not -1 or +1")));
        }
        if bounds.iter().any(|b| !(b.gamma_feat >= 0.0)) {
            return Err(invalid("bounds", "negative or NaN gamma"));
        }
        Ok(SolverProblem { features, labels, bounds, lambda, feature_map })
    }

    /// Maps every sample and computes its bound. Runs in parallel; output
    /// order follows the dataset.
    pub fn build(
        data: &Dataset,
        feature_map: FeatureMap,
        uncertainty: &UncertaintySet,
        pbar: NormExponent,
        lambda: f64,
    ) -> Result<Self> {
        uncertainty.validate_for(data)?;
        check_dim(feature_map.input_dim(), data.n_features())?;
        // Shared sets: the RFF frequency norms do not depend on the sample.
        let shared_norms = match (&feature_map, uncertainty) {
            (FeatureMap::Rff(m), UncertaintySet::Shared(u)) => Some(m.frequency_dual_norms(u)?),
            _ => None,
        };
        let rows: Vec<(Vec<f64>, FeatureBound)> = (0..data.len())
            .into_par_iter()
            .map(|i| {
                let (x, _) = data.sample(i);
                let unc: &UncertaintyModel = uncertainty.get(i);
                let phi = feature_map.transform(x)?;
                let bound = match (&feature_map, &shared_norms) {
                    (FeatureMap::Rff(m), Some(norms)) => rff_bound_from_norms(m, x, unc.gamma, norms, pbar)?,
                    _ => feature_map.bound(x, unc, pbar)?,
                };
                Ok((phi, bound))
            })
            .collect::<Result<_>>()?;
        let (features, bounds) = rows.into_iter().unzip();
        Self::new(features, data.labels().to_vec(), bounds, lambda, feature_map)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_map.output_dim()
    }
}

/// `max{0, 1 - y(ζᵀφ + b)}`
pub fn hinge(zeta: &[f64], bias: f64, phi: &[f64], y: f64) -> f64 {
    (1.0 - y * (dot(zeta, phi) + bias)).max(0.0)
}

/// `max{0, 1 - y(ζᵀφ + b) + Γ‖Rᵀζ‖_q̄}`
pub fn robust_hinge(zeta: &[f64], bias: f64, phi: &[f64], y: f64, bound: &FeatureBound) -> f64 {
    hinge_argument(zeta, bias, phi, y, bound).max(0.0)
}

pub(crate) fn hinge_argument(zeta: &[f64], bias: f64, phi: &[f64], y: f64, bound: &FeatureBound) -> f64 {
    1.0 - y * (dot(zeta, phi) + bias) + bound.robust_term(zeta)
}

/// One subgradient of `‖v‖_q` at `v`.
///
/// Ties: zero at the origin, `sign(0) = 0` for `q = 1`, and the smallest
/// maximizing index for `q = ∞`.
pub fn norm_subgradient(v: &[f64], q: NormExponent) -> Vec<f64> {
    let qv = q.value();
    let mut g = vec![0.0; v.len()];
    if qv == 1.0 {
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi = if *vi > 0.0 {
                1.0
            } else if *vi < 0.0 {
                -1.0
            } else {
                0.0
            };
        }
        return g;
    }
    let norm = lp_norm(v, q);
    if norm == 0.0 {
        return g;
    }
    if qv.is_infinite() {
        let (j, _) =
            v.iter().enumerate().fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        g[j] = v[j].signum();
        return g;
    }
    if qv == 2.0 {
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi = vi / norm;
        }
        return g;
    }
    for (gi, vi) in g.iter_mut().zip(v) {
        *gi = vi.signum() * (vi.abs() / norm).powf(qv - 1.0);
    }
    g
}

/// A subgradient `(g_ζ, g_b)` of [`robust_hinge`] in `(ζ, b)`.
///
/// The flat branch is taken only when the hinge argument is strictly
/// negative; at the kink the active branch is returned.
pub fn robust_hinge_subgrad(zeta: &[f64], bias: f64, phi: &[f64], y: f64, bound: &FeatureBound) -> (Vec<f64>, f64) {
    let (_, g, gb) = evaluate_with_subgrad(zeta, bias, phi, y, bound);
    (g, gb)
}

/// Hinge argument together with the subgradient of [`robust_hinge_subgrad`].
pub(crate) fn evaluate_with_subgrad(
    zeta: &[f64],
    bias: f64,
    phi: &[f64],
    y: f64,
    bound: &FeatureBound,
) -> (f64, Vec<f64>, f64) {
    let v = (bound.gamma_feat != 0.0).then(|| bound.apply_rt(zeta));
    let erosion = v.as_ref().map_or(0.0, |v| bound.gamma_feat * lp_norm(v, bound.qbar));
    let arg = 1.0 - y * (dot(zeta, phi) + bias) + erosion;
    if arg < 0.0 {
        return (arg, vec![0.0; zeta.len()], 0.0);
    }
    let mut g: Vec<f64> = phi.iter().map(|p| -y * p).collect();
    if let Some(v) = v {
        let gv = norm_subgradient(&v, bound.qbar);
        for (gi, ri) in g.iter_mut().zip(bound.apply_r(&gv)) {
            *gi += bound.gamma_feat * ri;
        }
    }
    (arg, g, -y)
}

/// Linear robust loss `max{0, 1 - y(wᵀx + b) + γ‖Σ^{⊤/2}w‖_q}`, the worst
/// case of the plain hinge over the uncertainty set.
pub fn linear_robust_loss(w: &[f64], b: f64, x: &[f64], y: f64, unc: &UncertaintyModel) -> f64 {
    let erosion = if unc.gamma == 0.0 { 0.0 } else { unc.gamma * lp_norm(&unc.sigma_half.apply_transpose(w), unc.q()) };
    (1.0 - y * (dot(w, x) + b) + erosion).max(0.0)
}

/// `argmin_u (1/2η)‖u - w‖² + (λ/2)‖u‖² = w / (1 + ηλ)`
pub fn prox_ridge(w: &[f64], eta: f64, lambda: f64) -> Vec<f64> {
    let s = 1.0 / (1.0 + eta * lambda);
    w.iter().map(|v| v * s).collect()
}

/// Per-sample robust losses at `(ζ, b)`, in sample order.
pub fn sample_losses(problem: &SolverProblem, zeta: &[f64], bias: f64) -> Vec<f64> {
    (0..problem.len())
        .into_par_iter()
        .map(|i| robust_hinge(zeta, bias, &problem.features[i], problem.labels[i], &problem.bounds[i]))
        .collect()
}

/// `(λ/2)‖ζ‖² + Σ_i robust_hinge_i`, summed in sample order.
pub fn objective_at(problem: &SolverProblem, zeta: &[f64], bias: f64) -> f64 {
    let reg = 0.5 * problem.lambda * dot(zeta, zeta);
    reg + sample_losses(problem, zeta, bias).iter().sum::<f64>()
}

pub fn full_objective(problem: &SolverProblem, classifier: &RobustClassifier) -> Result<f64> {
    check_dim(problem.dim(), classifier.zeta.len())?;
    Ok(objective_at(problem, &classifier.zeta, classifier.bias))
}
