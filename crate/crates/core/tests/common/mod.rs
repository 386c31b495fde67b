//! Deterministic data generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use rosvm::rng::rng_from_seed;
use rosvm::Dataset;

pub fn uniform_points(count: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect()).collect()
}

pub fn normal_vec<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Points in `[-2, 2]²` labelled by the side of `x₀ + x₁ = 0`, keeping only
/// those at distance at least `margin` from the line.
pub fn separable_2d(count: usize, margin: f64, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    while samples.len() < count {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = (x[0] + x[1]) / std::f64::consts::SQRT_2;
        if s.abs() >= margin {
            labels.push(if s > 0.0 { 1.0 } else { -1.0 });
            samples.push(x);
        }
    }
    Dataset::new(samples, labels).unwrap()
}

/// A disc of `+1` points (radius below 0.5) inside a ring of `-1` points
/// (radius in `[1.0, 1.4]`). Ring angles are evenly spread with jitter.
pub fn ring_center(each: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(2 * each);
    let mut labels = Vec::with_capacity(2 * each);
    for _ in 0..each {
        let r = 0.5 * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        samples.push(vec![r * a.cos(), r * a.sin()]);
        labels.push(1.0);
    }
    for k in 0..each {
        let r = rng.random_range(1.0..1.4);
        let a = std::f64::consts::TAU * (k as f64 + rng.random_range(0.0..0.5)) / each as f64;
        samples.push(vec![r * a.cos(), r * a.sin()]);
        labels.push(-1.0);
    }
    Dataset::new(samples, labels).unwrap()
}

/// True when `p` lies strictly inside the triangle `(a, b, c)`.
pub fn in_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let cross = |o: &[f64], u: &[f64], v: &[f64]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
}
