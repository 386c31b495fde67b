//! Stochastic subgradient and stochastic proximal-gradient training.
//!
//! Each update draws one sample index `l` uniformly (with replacement) and
//! uses `L · ∂g_l` as an unbiased estimate of the subgradient of the loss
//! sum. One epoch is `L` updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{evaluate_with_subgrad, objective_at, prox_ridge, RobustClassifier, SolverProblem};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// `(ζ, b) ← (ζ, b) - η(λζ + L ∂g_l)`.
    Subgradient,
    /// Forward step on `L g_l`, then the ridge proximal step on `ζ`.
    Proximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// `η_t = η₀ / (1 + λ η₀ t)`
    #[default]
    InverseScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSchedule {
    pub schedule: Schedule,
    pub eta0: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::inverse_scaled(0.1)
    }
}

impl StepSchedule {
    pub fn constant(eta0: f64) -> Self {
        StepSchedule { schedule: Schedule::Constant, eta0 }
    }

    pub fn inverse_scaled(eta0: f64) -> Self {
        StepSchedule { schedule: Schedule::InverseScaled, eta0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub epochs: u32,
    pub step: StepSchedule,
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    /// Objective is recorded every `trace_every` updates; 0 disables tracing.
    #[serde(default)]
    pub trace_every: u64,
    /// Return the average of the iterates over the last epoch.
    #[serde(default)]
    pub tail_average: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Proximal,
            epochs: 20,
            step: StepSchedule::default(),
            lambda: 1.0,
            seed: 0,
            trace_every: 0,
            tail_average: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        let eta0 = self.step.eta0;
        if !(eta0 > 0.0) || !eta0.is_finite() {
            return Err(invalid("eta0", format!("{eta0} must be positive")));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", format!("{} must be positive", self.lambda)));
        }
        Ok(())
    }
}

/// Step size at update `t >= 1`.
pub fn step_size(config: &SolverConfig, t: u64) -> f64 {
    let eta0 = config.step.eta0;
    match config.step.schedule {
        Schedule::Constant => eta0,
        Schedule::InverseScaled => eta0 / (1.0 + config.lambda * eta0 * t as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    /// `(update index, objective)`; index 0 is the starting point.
    pub points: Vec<(u64, f64)>,
    /// Total updates, `epochs · L`.
    pub updates: u64,
    pub initial_objective: f64,
    pub final_objective: f64,
}

impl TrainingTrace {
    /// CSV with header `update_index,objective`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("update_index,objective\n");
        for (t, v) in &self.points {
            s.push_str(&format!("{t},{v:e}\n"));
        }
        s
    }
}

/// Stochastic direction for sample `l` at `(ζ, b)`: `(λζ + L g_ζ, L g_b)`.
/// Its average over all `l` is a subgradient of the full objective.
pub fn stochastic_direction(problem: &SolverProblem, zeta: &[f64], bias: f64, l: usize) -> (Vec<f64>, f64) {
    let scale = problem.len() as f64;
    let (_, g, gb) = evaluate_with_subgrad(zeta, bias, &problem.features[l], problem.labels[l], &problem.bounds[l]);
    let dir = zeta.iter().zip(&g).map(|(z, gi)| problem.lambda * z + scale * gi).collect();
    (dir, scale * gb)
}

/// Runs `config.epochs · L` stochastic updates from `(ζ, b) = (0, 0)`.
pub fn train(problem: &SolverProblem, config: &SolverConfig) -> Result<(RobustClassifier, TrainingTrace)> {
    config.validate()?;
    if config.lambda != problem.lambda {
        return Err(invalid(
            "lambda",
            format!("solver lambda {} differs from problem lambda {}", config.lambda, problem.lambda),
        ));
    }
    let n_samples = problem.len();
    let scale = n_samples as f64;
    let total = config.epochs as u64 * n_samples as u64;
    let tail_start = total - n_samples as u64;

    let mut rng = rng_from_seed(config.seed);
    let mut zeta = vec![0.0; problem.dim()];
    let mut bias = 0.0;
    let mut avg_zeta = vec![0.0; problem.dim()];
    let mut avg_bias = 0.0;

    let initial_objective = objective_at(problem, &zeta, bias);
    let mut trace = TrainingTrace { updates: total, initial_objective, ..Default::default() };
    if config.trace_every > 0 {
        trace.points.push((0, initial_objective));
    }

    for t in 1..=total {
        let l = rng.random_range(0..n_samples);
        let eta = step_size(config, t);
        let (arg, g, gb) =
            evaluate_with_subgrad(&zeta, bias, &problem.features[l], problem.labels[l], &problem.bounds[l]);
        if !arg.is_finite() {
            return Err(Error::Diverged(t));
        }
        match config.method {
            Method::Subgradient => {
                for (z, gi) in zeta.iter_mut().zip(&g) {
                    *z -= eta * (config.lambda * *z + scale * gi);
                }
            }
            Method::Proximal => {
                for (z, gi) in zeta.iter_mut().zip(&g) {
                    *z -= eta * scale * gi;
                }
                zeta = prox_ridge(&zeta, eta, config.lambda);
            }
        }
        bias -= eta * scale * gb;
        if !bias.is_finite() || !zeta.iter().all(|z| z.is_finite()) {
            return Err(Error::Diverged(t));
        }
        if config.tail_average && t > tail_start {
            let k = (t - tail_start) as f64;
            for (a, z) in avg_zeta.iter_mut().zip(&zeta) {
                *a += (z - *a) / k;
            }
            avg_bias += (bias - avg_bias) / k;
        }
        if config.trace_every > 0 && t % config.trace_every == 0 {
            let obj = objective_at(problem, &zeta, bias);
            if !obj.is_finite() {
                return Err(Error::Diverged(t));
            }
            trace.points.push((t, obj));
        }
    }

    let (zeta, bias) = if config.tail_average { (avg_zeta, avg_bias) } else { (zeta, bias) };
    trace.final_objective = objective_at(problem, &zeta, bias);
    if !trace.final_objective.is_finite() {
        return Err(Error::Diverged(total));
    }
    let classifier = RobustClassifier::new(zeta, bias, problem.feature_map.clone())?;
    Ok((classifier, trace))
}
