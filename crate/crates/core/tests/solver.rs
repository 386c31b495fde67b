mod common;

use common::{ring_center, separable_2d};
use proptest::prelude::*;
use rand::Rng;
use rosvm::objective::{objective_at, prox_ridge, robust_hinge_subgrad};
use rosvm::rng::rng_from_seed;
use rosvm::solver::stochastic_direction;
use rosvm::{
    train, Error, FeatureMap, Method, NormExponent, RffMap, RffVariant, SolverConfig, SolverProblem, StepSchedule,
    UncertaintyModel, UncertaintySet,
};

fn rff_problem(lambda: f64, gamma: f64) -> SolverProblem {
    let data = ring_center(20, 11);
    let map = FeatureMap::Rff(RffMap::sample(2, 24, 0.8, RffVariant::Paired, 6).unwrap());
    let unc = UncertaintySet::Shared(UncertaintyModel::isotropic(2, gamma, NormExponent::TWO).unwrap());
    SolverProblem::build(&data, map, &unc, NormExponent::TWO, lambda).unwrap()
}

fn config(method: Method, step: StepSchedule, lambda: f64, epochs: u32, seed: u64) -> SolverConfig {
    SolverConfig { method, epochs, step, lambda, seed, ..SolverConfig::default() }
}

#[test]
fn direction_average_is_a_subgradient() {
    let problem = rff_problem(0.3, 0.05);
    assert_eq!(problem.len(), 40);
    let mut rng = rng_from_seed(21);
    let zeta: Vec<f64> = (0..problem.dim()).map(|_| rng.random_range(-0.6..0.6)).collect();
    let bias = 0.2;

    // enumerate every index instead of sampling
    let l = problem.len() as f64;
    let mut mean = vec![0.0; problem.dim()];
    let mut mean_b = 0.0;
    for i in 0..problem.len() {
        let (d, db) = stochastic_direction(&problem, &zeta, bias, i);
        for (m, v) in mean.iter_mut().zip(&d) {
            *m += v / l;
        }
        mean_b += db / l;
    }

    let mut full: Vec<f64> = zeta.iter().map(|z| problem.lambda * z).collect();
    let mut full_b = 0.0;
    for i in 0..problem.len() {
        let (g, gb) = robust_hinge_subgrad(&zeta, bias, &problem.features[i], problem.labels[i], &problem.bounds[i]);
        for (f, v) in full.iter_mut().zip(&g) {
            *f += v;
        }
        full_b += gb;
    }
    for (a, b) in mean.iter().zip(&full) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
    assert!((mean_b - full_b).abs() <= 1e-12 * full_b.abs().max(1.0));

    // away from kinks the subgradient is the gradient
    let h = 1e-6;
    let mut z = zeta.clone();
    for k in 0..problem.dim() {
        z[k] = zeta[k] + h;
        let up = objective_at(&problem, &z, bias);
        z[k] = zeta[k] - h;
        let down = objective_at(&problem, &z, bias);
        z[k] = zeta[k];
        let fd = (up - down) / (2.0 * h);
        assert!((fd - full[k]).abs() < 1e-4 * full[k].abs().max(1.0), "coord {k}: fd {fd} vs {}", full[k]);
    }
    let fd_b = (objective_at(&problem, &zeta, bias + h) - objective_at(&problem, &zeta, bias - h)) / (2.0 * h);
    assert!((fd_b - full_b).abs() < 1e-4 * full_b.abs().max(1.0));
}

proptest! {
    #[test]
    fn prox_never_grows_the_norm(
        w in prop::collection::vec(-1e3f64..1e3, 1..20),
        eta in 1e-8f64..1e3,
        lambda in 1e-8f64..1e3,
    ) {
        let u = prox_ridge(&w, eta, lambda);
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(n(&u) <= n(&w));
        for (a, b) in u.iter().zip(&w) {
            prop_assert!(a.signum() == b.signum() || *a == 0.0);
        }
    }
}

#[test]
fn separable_data_is_fit_exactly() {
    let data = separable_2d(100, 0.3, 5);
    let unc = UncertaintySet::Shared(UncertaintyModel::isotropic(2, 0.05, NormExponent::TWO).unwrap());
    let lambda = 0.01;
    let problem =
        SolverProblem::build(&data, FeatureMap::Identity { dim: 2 }, &unc, NormExponent::TWO, lambda).unwrap();
    for method in [Method::Subgradient, Method::Proximal] {
        let cfg = config(method, StepSchedule::inverse_scaled(0.01), lambda, 40, 3);
        let (clf, trace) = train(&problem, &cfg).unwrap();
        let correct = data.samples().iter().zip(data.labels()).filter(|(x, y)| clf.predict(x).unwrap() == **y).count();
        assert_eq!(correct, data.len(), "{method:?}");
        assert!(trace.final_objective < trace.initial_objective);
    }
}

#[test]
fn kernel_training_lowers_the_objective() {
    let problem = rff_problem(0.1, 0.1);
    for method in [Method::Subgradient, Method::Proximal] {
        let cfg = config(method, StepSchedule::inverse_scaled(0.01), 0.1, 15, 8);
        let (clf, trace) = train(&problem, &cfg).unwrap();
        assert!(trace.final_objective < trace.initial_objective, "{method:?}");
        let recomputed = objective_at(&problem, &clf.zeta, clf.bias);
        assert_eq!(recomputed.to_bits(), trace.final_objective.to_bits());
    }
}

#[test]
fn same_seed_same_model() {
    let problem = rff_problem(0.1, 0.1);
    let cfg = SolverConfig { trace_every: 7, ..config(Method::Proximal, StepSchedule::constant(0.002), 0.1, 5, 42) };
    let (a, ta) = train(&problem, &cfg).unwrap();
    let (b, tb) = train(&problem, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (c, _) = train(&problem, &SolverConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.zeta, c.zeta);
}

#[test]
fn trace_records_every_k_updates() {
    let problem = rff_problem(0.1, 0.1);
    let cfg = SolverConfig { trace_every: 10, ..config(Method::Proximal, StepSchedule::constant(0.002), 0.1, 2, 1) };
    let (_, trace) = train(&problem, &cfg).unwrap();
    assert_eq!(trace.updates, 80);
    let idx: Vec<u64> = trace.points.iter().map(|p| p.0).collect();
    assert_eq!(idx, (0..=80).step_by(10).collect::<Vec<_>>());
    let csv = trace.to_csv();
    assert!(csv.starts_with("update_index,objective\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn tail_average_differs_from_last_iterate() {
    let problem = rff_problem(0.1, 0.1);
    let base = config(Method::Subgradient, StepSchedule::constant(0.005), 0.1, 4, 9);
    let (last, _) = train(&problem, &base).unwrap();
    let (avg, trace) = train(&problem, &SolverConfig { tail_average: true, ..base }).unwrap();
    assert_ne!(last.zeta, avg.zeta);
    assert!(trace.final_objective.is_finite());
}

#[test]
fn huge_steps_report_divergence() {
    let problem = rff_problem(0.1, 0.1);
    let cfg = config(Method::Subgradient, StepSchedule::constant(1e300), 0.1, 5, 2);
    assert!(matches!(train(&problem, &cfg), Err(Error::Diverged(_))));
}

#[test]
fn bad_configs_are_rejected() {
    let problem = rff_problem(0.1, 0.1);
    let ok = config(Method::Proximal, StepSchedule::constant(0.01), 0.1, 1, 0);
    assert!(train(&problem, &SolverConfig { lambda: 0.2, ..ok.clone() }).is_err());
    assert!(train(&problem, &SolverConfig { epochs: 0, ..ok.clone() }).is_err());
    assert!(train(&problem, &SolverConfig { step: StepSchedule::constant(-1.0), ..ok.clone() }).is_err());
    assert!(train(&problem, &SolverConfig { step: StepSchedule::constant(f64::NAN), ..ok }).is_err());
}
