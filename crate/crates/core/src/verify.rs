//! Monte-Carlo certificates for feature-space bounds, finite-difference
//! gradient checks and evaluation metrics.
//!
//! Parallel work is split into fixed chunks, each with its own ChaCha
//! stream, and reduced in chunk order, so results do not depend on the
//! thread count.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::FeatureBound;
use crate::error::{check_dim, invalid, Error, Result};
use crate::map::FeatureMap;
use crate::model::{
    gaussian_kernel_unchecked, sample_uncertainty_with, Dataset, SampleMode, UncertaintyModel, UncertaintySet,
};
use crate::norm::{dot, NormExponent};
use crate::objective::{hinge_argument, robust_hinge, robust_hinge_subgrad, RobustClassifier};
use crate::rng::chunk_rng;

/// Absolute slack on `‖RΔφ‖_p̄ ≤ Γ` separating rounding from a real failure.
pub const VIOLATION_TOL: f64 = 1e-10;

const CHUNK: usize = 512;

/// Even trial indices sample the interior, odd ones the surface.
fn trial_mode(t: usize) -> SampleMode {
    if t.is_multiple_of(2) {
        SampleMode::Interior
    } else {
        SampleMode::Surface
    }
}

fn chunks(total: usize) -> impl ParallelIterator<Item = (usize, std::ops::Range<usize>)> {
    let n_chunks = total.div_ceil(CHUNK);
    (0..n_chunks).into_par_iter().map(move |c| (c, c * CHUNK..((c + 1) * CHUNK).min(total)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub trials: usize,
    pub gamma_feat: f64,
    pub pbar: NormExponent,
    /// Largest observed `‖RΔφ‖_p̄`.
    pub max_norm: f64,
    /// `max_norm / Γ`; 0 when both are 0 and infinite when only `Γ` is.
    pub max_ratio: f64,
    /// Trials with `‖RΔφ‖_p̄ > Γ + 1e-10`.
    pub violations: usize,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "trials={} gamma_feat={:.6e} pbar={} max_norm={:.6e} max_ratio={:.6} violations={}",
            self.trials, self.gamma_feat, self.pbar, self.max_norm, self.max_ratio, self.violations
        )
    }
}

/// Samples `trials` perturbations `Δx` of `x` (half on the surface of the
/// set) and measures `‖R(φ(x + Δx) - φ(x))‖_p̄` against `Γ`.
pub fn verify_bound_mc(
    map: &FeatureMap,
    x: &[f64],
    unc: &UncertaintyModel,
    bound: &FeatureBound,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    if let FeatureMap::Identity { .. } = map {
        return Err(Error::UnsupportedVariant("identity"));
    }
    check_dim(map.input_dim(), unc.dim())?;
    let phi0 = map.transform(x)?;
    let gamma = bound.gamma_feat;

    let per_chunk: Vec<(f64, usize)> = chunks(trials)
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c as u64);
            let mut xp = vec![0.0; x.len()];
            let mut max_norm = 0.0f64;
            let mut violations = 0;
            for t in range {
                let dx = sample_uncertainty_with(unc, trial_mode(t), &mut rng);
                for ((o, a), d) in xp.iter_mut().zip(x).zip(&dx) {
                    *o = a + d;
                }
                let phi = map.transform(&xp).expect("dimension checked above");
                let dphi: Vec<f64> = phi.iter().zip(&phi0).map(|(a, b)| a - b).collect();
                let norm = bound.displacement_norm(&dphi);
                if !(norm <= gamma + VIOLATION_TOL) {
                    violations += 1;
                }
                max_norm = max_norm.max(norm);
            }
            (max_norm, violations)
        })
        .collect();

    let max_norm = per_chunk.iter().fold(0.0f64, |m, c| m.max(c.0));
    let violations = per_chunk.iter().map(|c| c.1).sum();
    let max_ratio = if gamma > 0.0 {
        max_norm / gamma
    } else if max_norm == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BoundReport { trials, gamma_feat: gamma, pbar: bound.pbar, max_norm, max_ratio, violations })
}

/// Which smooth piece of the robust hinge a point lies in.
#[derive(Debug, PartialEq)]
struct Piece {
    active: bool,
    signs: Vec<i8>,
    argmax: Option<usize>,
}

fn piece(zeta: &[f64], bias: f64, phi: &[f64], y: f64, bound: &FeatureBound) -> Piece {
    let active = hinge_argument(zeta, bias, phi, y, bound) >= 0.0;
    if bound.gamma_feat == 0.0 || !active {
        return Piece { active, signs: Vec::new(), argmax: None };
    }
    let v = bound.apply_rt(zeta);
    let q = bound.qbar.value();
    // ‖v‖_q is smooth away from v = 0 for 2 <= q < ∞; otherwise sign changes
    // (q < 2) or a change of the maximizing index (q = ∞) are kinks.
    let signs = if q < 2.0 || q.is_infinite() {
        v.iter()
            .map(|x| {
                if *x > 0.0 {
                    1
                } else if *x < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    } else if v.iter().all(|x| *x == 0.0) {
        vec![0]
    } else {
        vec![1]
    };
    let argmax = bound.qbar.is_inf().then(|| {
        v.iter().enumerate().fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best }).0
    });
    Piece { active, signs, argmax }
}

/// Central finite differences of [`robust_hinge`] against
/// [`robust_hinge_subgrad`], coordinatewise over `(ζ, b)`.
///
/// Returns `max |fd - g| / max(‖g‖_∞, 1e-300)`, which is 0 for an inactive
/// sample. Points where moving any coordinate by `10h` changes the hinge
/// activity or the sign/argmax pattern of `Rᵀζ` are rejected.
pub fn grad_check(zeta: &[f64], bias: f64, phi: &[f64], y: f64, bound: &FeatureBound, h: f64) -> Result<f64> {
    check_dim(zeta.len(), phi.len())?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("{h} must be positive")));
    }
    let reach = 10.0 * h;
    let base = piece(zeta, bias, phi, y, bound);
    let zero_norm = bound.gamma_feat != 0.0 && base.active && base.signs.iter().all(|&s| s == 0);
    if zero_norm {
        return Err(Error::NearKink(reach));
    }

    let dim = zeta.len();
    let mut z = zeta.to_vec();
    let loss = |z: &[f64], b: f64| robust_hinge(z, b, phi, y, bound);
    let mut fd = vec![0.0; dim + 1];
    for k in 0..=dim {
        for sign in [-1.0, 1.0] {
            let (zk, bk) = if k < dim {
                z[k] = zeta[k] + sign * reach;
                (z.clone(), bias)
            } else {
                (z.clone(), bias + sign * reach)
            };
            if k < dim {
                z[k] = zeta[k];
            }
            if piece(&zk, bk, phi, y, bound) != base {
                return Err(Error::NearKink(reach));
            }
        }
        fd[k] = if k < dim {
            z[k] = zeta[k] + h;
            let up = loss(&z, bias);
            z[k] = zeta[k] - h;
            let down = loss(&z, bias);
            z[k] = zeta[k];
            (up - down) / (2.0 * h)
        } else {
            (loss(&z, bias + h) - loss(&z, bias - h)) / (2.0 * h)
        };
    }

    let (g, gb) = robust_hinge_subgrad(zeta, bias, phi, y, bound);
    let scale = g.iter().fold(gb.abs(), |m, v| m.max(v.abs())).max(1e-300);
    let err = g.iter().chain(std::iter::once(&gb)).zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(err / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelErrorStats {
    pub pairs: usize,
    pub max: f64,
    pub mean: f64,
}

impl KernelErrorStats {
    pub fn summary(&self) -> String {
        format!("pairs={} max_abs_error={:.6e} mean_abs_error={:.6e}", self.pairs, self.max, self.mean)
    }
}

/// `|φ(x_i)ᵀφ(x_j) - k_σ(x_i, x_j)|` over all pairs `i ≤ j`.
pub fn kernel_approx_error(map: &FeatureMap, points: &[Vec<f64>], sigma: f64) -> Result<KernelErrorStats> {
    if points.is_empty() {
        return Err(invalid("points", "at least one point is required"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("{sigma} must be positive")));
    }
    for p in points {
        check_dim(map.input_dim(), p.len())?;
    }
    let feats: Vec<Vec<f64>> = points.par_iter().map(|p| map.transform(p)).collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            (i..points.len()).fold((0.0f64, 0.0), |(mx, sum), j| {
                let e = (dot(&feats[i], &feats[j]) - gaussian_kernel_unchecked(&points[i], &points[j], sigma)).abs();
                (mx.max(e), sum + e)
            })
        })
        .collect();
    let pairs = points.len() * (points.len() + 1) / 2;
    let max = rows.iter().fold(0.0f64, |m, r| m.max(r.0));
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / pairs as f64;
    Ok(KernelErrorStats { pairs, max, mean })
}

/// Fraction of samples the classifier gets wrong.
pub fn standard_error(classifier: &RobustClassifier, data: &Dataset) -> Result<f64> {
    let wrong: Vec<bool> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = data.sample(i);
            classifier.predict(x).map(|p| p != y)
        })
        .collect::<Result<_>>()?;
    Ok(wrong.iter().filter(|&&w| w).count() as f64 / data.len() as f64)
}

/// Fraction of samples for which the nominal point or any of `trials`
/// sampled perturbations (half on the surface of the set) is misclassified.
pub fn robust_error(
    classifier: &RobustClassifier,
    data: &Dataset,
    unc: &UncertaintySet,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    unc.validate_for(data)?;
    let wrong: Vec<bool> = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let (x, y) = data.sample(i);
            if classifier.predict(x)? != y {
                return Ok(true);
            }
            let model = unc.get(i);
            if model.gamma == 0.0 {
                return Ok(false);
            }
            let mut rng = chunk_rng(seed, i as u64);
            let mut xp = vec![0.0; x.len()];
            for t in 0..trials {
                let dx = sample_uncertainty_with(model, trial_mode(t), &mut rng);
                for ((o, a), d) in xp.iter_mut().zip(x).zip(&dx) {
                    *o = a + d;
                }
                if classifier.predict(&xp)? != y {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<_>>()?;
    Ok(wrong.iter().filter(|&&w| w).count() as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleReport {
    pub draws: usize,
    /// Draws with every `|ω_k| ≤ 3/σ`.
    pub conditioned: usize,
    /// Conditioned draws with `|ωᵀΔx| > θ_max`.
    pub counterexamples: usize,
    pub max_conditioned_angle: f64,
    /// All draws with `|ωᵀΔx| > θ_max`, conditioned or not.
    pub exceed_any: usize,
}

/// Draws `ω ~ N(0, σ⁻² I)` and an admissible `Δx` (half on the surface) and
/// checks `|ωᵀΔx| ≤ θ_max` whenever all coordinates of `ω` lie in `±3/σ`.
/// Requires `p = 2` and a diagonal `Σ^{1/2}`.
pub fn check_angle_bound(
    unc: &UncertaintyModel,
    sigma: f64,
    theta_max: f64,
    draws: usize,
    seed: u64,
) -> Result<AngleReport> {
    if unc.p != NormExponent::TWO {
        return Err(Error::UnsupportedNorm(unc.p.value()));
    }
    if unc.sigma_half.diagonal_entries().is_none() {
        return Err(invalid("sigma_half", "the angle bound needs a diagonal sigma_half"));
    }
    let normal = Normal::new(0.0, 1.0 / sigma).map_err(|_| invalid("sigma", format!("{sigma} must be positive")))?;
    let cut = 3.0 / sigma;
    let n = unc.dim();
    let per_chunk: Vec<(usize, usize, f64, usize)> = chunks(draws)
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c as u64);
            let (mut cond, mut bad, mut max_angle, mut exceed) = (0, 0, 0.0f64, 0);
            for t in range {
                let omega: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                let dx = sample_uncertainty_with(unc, trial_mode(t), &mut rng);
                let angle = dot(&omega, &dx).abs();
                if angle > theta_max {
                    exceed += 1;
                }
                if omega.iter().all(|w| w.abs() <= cut) {
                    cond += 1;
                    max_angle = max_angle.max(angle);
                    if angle > theta_max + 1e-12 {
                        bad += 1;
                    }
                }
            }
            (cond, bad, max_angle, exceed)
        })
        .collect();
    Ok(AngleReport {
        draws,
        conditioned: per_chunk.iter().map(|c| c.0).sum(),
        counterexamples: per_chunk.iter().map(|c| c.1).sum(),
        max_conditioned_angle: per_chunk.iter().fold(0.0f64, |m, c| m.max(c.2)),
        exceed_any: per_chunk.iter().map(|c| c.3).sum(),
    })
}
