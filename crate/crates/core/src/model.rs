//! Domain types shared across the crate: datasets, uncertainty sets, the
//! Gaussian kernel, and sampling of admissible perturbations.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::norm::{lp_norm, sq_distance, NormExponent};
use crate::rng::rng_from_seed;

/// Labelled dense samples. Labels are stored as `-1.0` / `+1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Vec<f64>>,
    labels: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("dataset", "no samples"));
        }
        check_dim(samples.len(), labels.len())?;
        let n = samples[0].len();
        for s in &samples {
            check_dim(n, s.len())?;
            if !s.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("sample"));
            }
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(invalid("label", format!("{bad} is not -1 or +1")));
        }
        Ok(Dataset { samples, labels, n_features: n })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], f64) {
        (&self.samples[i], self.labels[i])
    }

    /// Pads every sample with zeros up to `n` features.
    pub fn pad_to(&mut self, n: usize) {
        if n > self.n_features {
            for s in &mut self.samples {
                s.resize(n, 0.0);
            }
            self.n_features = n;
        }
    }
}

/// `k(x, z) = exp(-‖x - z‖² / (2σ²))`.
pub fn gaussian_kernel(x: &[f64], z: &[f64], sigma: f64) -> Result<f64> {
    check_dim(x.len(), z.len())?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("{sigma} must be positive")));
    }
    Ok(gaussian_kernel_unchecked(x, z, sigma))
}

#[inline]
pub(crate) fn gaussian_kernel_unchecked(x: &[f64], z: &[f64], sigma: f64) -> f64 {
    (-sq_distance(x, z) / (2.0 * sigma * sigma)).exp()
}

/// The shape factor `Σ^{1/2}` of an uncertainty set.
#[derive(Debug, Clone)]
pub enum SigmaHalf {
    Diagonal(Vec<f64>),
    Dense { matrix: DenseMatrix, lu: Lu, spectral: f64 },
}

impl SigmaHalf {
    pub fn identity(n: usize) -> Self {
        SigmaHalf::Diagonal(vec![1.0; n])
    }

    pub fn scaled_identity(scale: f64, n: usize) -> Result<Self> {
        Self::diagonal(vec![scale; n])
    }

    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(invalid("sigma_half", "empty diagonal"));
        }
        if !d.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::SingularSigmaHalf);
        }
        Ok(SigmaHalf::Diagonal(d))
    }

    pub fn dense(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite("sigma_half"));
        }
        let lu = Lu::factor(&matrix)?;
        let spectral = matrix.spectral_norm()?;
        Ok(SigmaHalf::Dense { matrix, lu, spectral })
    }

    pub fn dim(&self) -> usize {
        match self {
            SigmaHalf::Diagonal(d) => d.len(),
            SigmaHalf::Dense { matrix, .. } => matrix.rows(),
        }
    }

    /// `Σ^{1/2} v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SigmaHalf::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            SigmaHalf::Dense { matrix, .. } => matrix.mul_vec(v),
        }
    }

    /// `Σ^{⊤/2} v`
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SigmaHalf::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            SigmaHalf::Dense { matrix, .. } => matrix.mul_t_vec(v),
        }
    }

    /// `Σ^{-1/2} v`
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SigmaHalf::Diagonal(d) => v.iter().zip(d).map(|(a, b)| a / b).collect(),
            SigmaHalf::Dense { lu, .. } => lu.solve(v),
        }
    }

    /// Operator 2-norm (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        match self {
            SigmaHalf::Diagonal(d) => d.iter().fold(0.0, |m, x| m.max(x.abs())),
            SigmaHalf::Dense { spectral, .. } => *spectral,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            SigmaHalf::Diagonal(d) => crate::norm::l2_norm(d),
            SigmaHalf::Dense { matrix, .. } => matrix.frobenius_norm(),
        }
    }

    /// Diagonal entries when the factor is diagonal (including a dense
    /// matrix with exactly zero off-diagonal entries).
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        match self {
            SigmaHalf::Diagonal(d) => Some(d.clone()),
            SigmaHalf::Dense { matrix, .. } => {
                let n = matrix.rows();
                let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || matrix[(i, j)] == 0.0));
                off_zero.then(|| (0..n).map(|i| matrix[(i, i)]).collect())
            }
        }
    }
}

/// The set `{Δx : ‖Σ^{-1/2} Δx‖_p ≤ γ}`.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    pub sigma_half: Arc<SigmaHalf>,
    pub gamma: f64,
    pub p: NormExponent,
}

impl UncertaintyModel {
    pub fn new(sigma_half: SigmaHalf, gamma: f64, p: NormExponent) -> Result<Self> {
        Self::with_shared(Arc::new(sigma_half), gamma, p)
    }

    pub fn with_shared(sigma_half: Arc<SigmaHalf>, gamma: f64, p: NormExponent) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(invalid("gamma", format!("{gamma} must be finite and >= 0")));
        }
        Ok(UncertaintyModel { sigma_half, gamma, p })
    }

    /// Isotropic ball `‖Δx‖_p ≤ γ` in `n` dimensions.
    pub fn isotropic(n: usize, gamma: f64, p: NormExponent) -> Result<Self> {
        Self::new(SigmaHalf::identity(n), gamma, p)
    }

    pub fn dim(&self) -> usize {
        self.sigma_half.dim()
    }

    pub fn q(&self) -> NormExponent {
        self.p.dual()
    }

    /// `‖Σ^{-1/2} Δx‖_p`
    pub fn set_norm(&self, dx: &[f64]) -> f64 {
        lp_norm(&self.sigma_half.solve(dx), self.p)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_shared(self.sigma_half.clone(), gamma, self.p)
    }
}

/// Uncertainty for a whole dataset: one shared model or one per sample.
#[derive(Debug, Clone)]
pub enum UncertaintySet {
    Shared(UncertaintyModel),
    PerSample(Vec<UncertaintyModel>),
}

impl UncertaintySet {
    pub fn get(&self, i: usize) -> &UncertaintyModel {
        match self {
            UncertaintySet::Shared(m) => m,
            UncertaintySet::PerSample(v) => &v[i],
        }
    }

    /// Checks the set against a dataset's sample count and feature dimension.
    pub fn validate_for(&self, data: &Dataset) -> Result<()> {
        match self {
            UncertaintySet::Shared(m) => check_dim(data.n_features(), m.dim()),
            UncertaintySet::PerSample(v) => {
                check_dim(data.len(), v.len())?;
                v.iter().try_for_each(|m| check_dim(data.n_features(), m.dim()))
            }
        }
    }
}

/// Where in the unit ball perturbation directions are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Uniform in the unit p-ball.
    Interior,
    /// On the unit p-sphere.
    Surface,
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Draws a point in the unit p-ball (or on its boundary).
///
/// Exponents 1, 2 and infinity use exact constructions. Other exponents use
/// the generalized-Gaussian construction: with `|g_i|^p ~ Gamma(1/p)` and
/// `W ~ Exp(1)`, `g / (‖g‖_p^p + W)^{1/p}` is uniform in the ball and
/// `g / ‖g‖_p` lies on the sphere.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, p: NormExponent, mode: SampleMode, rng: &mut R) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let pv = p.value();
    if pv.is_infinite() {
        let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if mode == SampleMode::Surface {
            let k = rng.random_range(0..n);
            u[k] = random_sign(rng);
        }
        return u;
    }
    if pv == 1.0 {
        let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let mut total: f64 = e.iter().sum();
        if mode == SampleMode::Interior {
            let extra: f64 = Exp1.sample(rng);
            total += extra;
        }
        if total == 0.0 {
            return vec![0.0; n];
        }
        return e.into_iter().map(|x| random_sign(rng) * x / total).collect();
    }
    if pv == 2.0 {
        let g = loop {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            if g.iter().any(|&x| x != 0.0) {
                break g;
            }
        };
        let norm = crate::norm::l2_norm(&g);
        let radius = match mode {
            SampleMode::Surface => 1.0,
            SampleMode::Interior => rng.random::<f64>().powf(1.0 / n as f64),
        };
        return g.into_iter().map(|x| x / norm * radius).collect();
    }
    let gamma = Gamma::new(1.0 / pv, 1.0).expect("shape 1/p is positive");
    let g = loop {
        let g: Vec<f64> = (0..n).map(|_| random_sign(rng) * gamma.sample(rng).powf(1.0 / pv)).collect();
        if g.iter().any(|&x| x != 0.0) {
            break g;
        }
    };
    let denom = match mode {
        SampleMode::Surface => lp_norm(&g, p),
        SampleMode::Interior => {
            let s: f64 = g.iter().map(|x| x.abs().powf(pv)).sum();
            let w: f64 = Exp1.sample(rng);
            (s + w).powf(1.0 / pv)
        }
    };
    g.into_iter().map(|x| x / denom).collect()
}

/// `Δx = γ Σ^{1/2} u` with `u` drawn by [`sample_unit_ball`].
pub fn sample_uncertainty_with<R: Rng + ?Sized>(model: &UncertaintyModel, mode: SampleMode, rng: &mut R) -> Vec<f64> {
    let n = model.dim();
    if model.gamma == 0.0 {
        return vec![0.0; n];
    }
    let u = sample_unit_ball(n, model.p, mode, rng);
    let mut dx = model.sigma_half.apply(&u);
    dx.iter_mut().for_each(|x| *x *= model.gamma);
    dx
}

/// Seeded single draw of an admissible perturbation.
pub fn sample_uncertainty(model: &UncertaintyModel, mode: SampleMode, seed: u64) -> Vec<f64> {
    sample_uncertainty_with(model, mode, &mut rng_from_seed(seed))
}
