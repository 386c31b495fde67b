//! Nyström feature maps for the Gaussian kernel and their uncertainty bound.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bound::{BoundTransform, FeatureBound};
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::model::{gaussian_kernel_unchecked, Dataset, UncertaintyModel};
use crate::norm::{dot, l2_norm, sq_distance, NormExponent};
use crate::rng::rng_from_seed;

/// Relative eigenvalue cutoff used when no explicit tolerance is given.
pub const DEFAULT_RELATIVE_RANK_TOL: f64 = 1e-10;

/// `φ(x) = Λ^{-1/2} Uᵀ k̂(x)` with `k̂(x)_j = k(x, x̂_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NystromRaw", into = "NystromRaw")]
pub struct NystromMap {
    landmarks: Vec<Vec<f64>>,
    sigma: f64,
    /// `eigvecs[k]` is the k-th retained eigenvector (length m).
    eigvecs: Vec<Vec<f64>>,
    eigvals: Vec<f64>,
    rank_tol: f64,
    sqrt_eigvals: Arc<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NystromRaw {
    sigma: f64,
    rank: usize,
    rank_tol: f64,
    landmarks: Vec<Vec<f64>>,
    eigvals: Vec<f64>,
    eigvecs: Vec<Vec<f64>>,
}

impl From<NystromMap> for NystromRaw {
    fn from(m: NystromMap) -> Self {
        NystromRaw {
            sigma: m.sigma,
            rank: m.eigvals.len(),
            rank_tol: m.rank_tol,
            landmarks: m.landmarks,
            eigvals: m.eigvals,
            eigvecs: m.eigvecs,
        }
    }
}

impl TryFrom<NystromRaw> for NystromMap {
    type Error = Error;

    fn try_from(r: NystromRaw) -> Result<Self> {
        if r.landmarks.is_empty() {
            return Err(invalid("landmarks", "empty"));
        }
        if !(r.sigma > 0.0) || !r.sigma.is_finite() {
            return Err(invalid("sigma", "must be positive"));
        }
        check_dim(r.rank, r.eigvals.len())?;
        check_dim(r.rank, r.eigvecs.len())?;
        let n = r.landmarks[0].len();
        for l in &r.landmarks {
            check_dim(n, l.len())?;
        }
        for u in &r.eigvecs {
            check_dim(r.landmarks.len(), u.len())?;
        }
        if r.rank == 0 || !r.eigvals.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(invalid("eigvals", "must be positive and finite"));
        }
        Ok(NystromMap::from_parts(r.landmarks, r.sigma, r.eigvecs, r.eigvals, r.rank_tol))
    }
}

impl NystromMap {
    fn from_parts(
        landmarks: Vec<Vec<f64>>,
        sigma: f64,
        eigvecs: Vec<Vec<f64>>,
        eigvals: Vec<f64>,
        rank_tol: f64,
    ) -> Self {
        let sqrt_eigvals = Arc::new(eigvals.iter().map(|v| v.sqrt()).collect());
        NystromMap { landmarks, sigma, eigvecs, eigvals, rank_tol, sqrt_eigvals }
    }

    /// Fits the map on `landmarks`, keeping eigenpairs with eigenvalue above
    /// `rank_tol`. `None` uses `1e-10` times the largest eigenvalue.
    pub fn fit(landmarks: Vec<Vec<f64>>, sigma: f64, rank_tol: Option<f64>) -> Result<Self> {
        let (values, vectors) = Self::decompose(&landmarks, sigma)?;
        let cutoff = match rank_tol {
            Some(t) if t >= 0.0 && t.is_finite() => t,
            Some(t) => return Err(invalid("rank_tol", format!("{t} must be finite and >= 0"))),
            None => DEFAULT_RELATIVE_RANK_TOL * values[0].max(0.0),
        };
        let keep = values.iter().take_while(|&&v| v > cutoff).count();
        if keep == 0 {
            return Err(Error::DegenerateMap(cutoff));
        }
        Ok(Self::from_parts(
            landmarks,
            sigma,
            vectors.into_iter().take(keep).collect(),
            values.into_iter().take(keep).collect(),
            cutoff,
        ))
    }

    /// Fits the map keeping exactly the top `rank` eigenpairs.
    pub fn fit_truncated(landmarks: Vec<Vec<f64>>, sigma: f64, rank: usize) -> Result<Self> {
        let (values, vectors) = Self::decompose(&landmarks, sigma)?;
        if rank == 0 || rank > values.len() {
            return Err(invalid("rank", format!("{rank} not in 1..={}", values.len())));
        }
        if !(values[rank - 1] > 0.0) {
            return Err(Error::DegenerateMap(0.0));
        }
        let cutoff = values.get(rank).copied().unwrap_or(0.0).max(0.0);
        Ok(Self::from_parts(
            landmarks,
            sigma,
            vectors.into_iter().take(rank).collect(),
            values.into_iter().take(rank).collect(),
            cutoff,
        ))
    }

    fn decompose(landmarks: &[Vec<f64>], sigma: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if landmarks.is_empty() {
            return Err(invalid("landmarks", "need at least one landmark"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", format!("{sigma} must be positive")));
        }
        let n = landmarks[0].len();
        for l in landmarks {
            check_dim(n, l.len())?;
            if !l.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("landmark"));
            }
        }
        let k = kernel_matrix(landmarks, sigma);
        let eig = symmetric_eigen(&k)?;
        Ok((eig.values, eig.vectors))
    }

    pub fn landmarks(&self) -> &[Vec<f64>] {
        &self.landmarks
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.landmarks[0].len()
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &[Vec<f64>] {
        &self.eigvecs
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// `Λ^{1/2}` diagonal, shared with every bound built from this map.
    pub fn sqrt_eigvals(&self) -> Arc<Vec<f64>> {
        self.sqrt_eigvals.clone()
    }

    /// `k̂(x) = (k(x, x̂_1), …, k(x, x̂_m))`
    pub fn kernel_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_inputs(), x.len())?;
        Ok(self.landmarks.iter().map(|l| gaussian_kernel_unchecked(x, l, self.sigma)).collect())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let kx = self.kernel_vector(x)?;
        Ok(self.eigvecs.iter().zip(self.sqrt_eigvals.iter()).map(|(u, s)| dot(u, &kx) / s).collect())
    }
}

/// `K̂_ij = k(x̂_i, x̂_j)`
pub fn kernel_matrix(points: &[Vec<f64>], sigma: f64) -> DenseMatrix {
    let m = points.len();
    let mut k = DenseMatrix::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = 1.0;
        for j in i + 1..m {
            let v = gaussian_kernel_unchecked(&points[i], &points[j], sigma);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Uniform choice of `m` distinct training samples as landmarks, in index order.
pub fn select_landmarks(data: &Dataset, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if m == 0 || m > data.len() {
        return Err(invalid("m", format!("{m} landmarks requested from {} samples", data.len())));
    }
    let mut rng = rng_from_seed(seed);
    let mut idx = rand::seq::index::sample(&mut rng, data.len(), m).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| data.samples()[i].clone()).collect())
}

/// Certified bound `‖Λ^{1/2} Δφ‖₂ ≤ Γ` for Euclidean uncertainty sets.
///
/// With `k_j = k(x, x̂_j)`, `τ_j = exp(-γ‖Σ^{⊤/2}(x - x̂_j)‖ / σ²)` and
/// `ρ = exp(-γ²‖Σ^{1/2}‖² / (2σ²))`,
/// `Γ² = r (Σ_j k_j² (1/τ_j² + 1) - 2ρ Σ_j k_j² τ_j)`.
pub fn nystrom_bound(map: &NystromMap, x: &[f64], unc: &UncertaintyModel) -> Result<FeatureBound> {
    if unc.p != NormExponent::TWO {
        return Err(Error::UnsupportedNorm(unc.p.value()));
    }
    check_dim(map.n_inputs(), x.len())?;
    check_dim(map.n_inputs(), unc.dim())?;
    let s2 = map.sigma * map.sigma;
    let gamma = unc.gamma;
    let spec = unc.sigma_half.spectral_norm();
    let rho = (-(gamma * gamma * spec * spec) / (2.0 * s2)).exp();

    // k²/τ² and k²τ are formed in log space so large γ cannot produce inf·0.
    let mut inv_tau_sq = 0.0;
    let mut plain = 0.0;
    let mut with_tau = 0.0;
    for l in &map.landmarks {
        let diff: Vec<f64> = x.iter().zip(l).map(|(a, b)| a - b).collect();
        let d2 = sq_distance(x, l);
        let t = if gamma == 0.0 { 0.0 } else { gamma * l2_norm(&unc.sigma_half.apply_transpose(&diff)) };
        inv_tau_sq += ((-d2 + 2.0 * t) / s2).exp();
        plain += (-d2 / s2).exp();
        with_tau += ((-d2 - t) / s2).exp();
    }
    let radicand = inv_tau_sq + plain - 2.0 * rho * with_tau;
    if radicand < -1e-12 * (inv_tau_sq + plain).max(1.0) || radicand.is_nan() {
        return Err(Error::Internal(format!("negative Nystrom radicand {radicand:e}")));
    }
    let gamma_feat = (map.rank() as f64 * radicand.max(0.0)).sqrt();
    Ok(FeatureBound::new(gamma_feat, BoundTransform::Scaling(map.sqrt_eigvals()), NormExponent::TWO))
}
