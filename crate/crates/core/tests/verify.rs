mod common;

use rosvm::model::sample_uncertainty;
use rosvm::rff::{rff_bound, rff_sigma_min};
use rosvm::solver::train;
use rosvm::verify::{grad_check, kernel_approx_error, robust_error, standard_error, verify_bound_mc};
use rosvm::{
    FeatureBound, FeatureMap, Method, NormExponent, RffMap, RffVariant, RobustClassifier, SampleMode, SigmaHalf,
    SolverConfig, SolverProblem, StepSchedule, UncertaintyModel, UncertaintySet,
};

use common::{ring_center, separable_2d, uniform_points};

fn rff_report(sigma: f64, unc: &UncertaintyModel, seed: u64) -> f64 {
    let x = [0.4, -0.3];
    let map = RffMap::sample(2, 64, sigma, RffVariant::Paired, seed).unwrap();
    let b = rff_bound(&map, &x, unc, NormExponent::TWO).unwrap();
    let r = verify_bound_mc(&FeatureMap::Rff(map), &x, unc, &b, 10_000, seed).unwrap();
    assert_eq!(r.violations, 0);
    r.max_ratio
}

#[test]
fn tightness_metric_is_logged() {
    let unc = UncertaintyModel::isotropic(2, 0.2, NormExponent::TWO).unwrap();
    let ratio = rff_report(1.0, &unc, 1);
    println!("rff gamma=0.2 sigma=1 D=64 pbar=2 max_ratio={ratio:.6}");
    assert!(ratio > 0.0 && ratio <= 1.0);
}

#[test]
fn rff_bound_tightens_with_bandwidth() {
    let unc = UncertaintyModel::new(SigmaHalf::diagonal(vec![0.5, 1.5]).unwrap(), 0.2, NormExponent::TWO).unwrap();
    let sigma_min = rff_sigma_min(0.2, &unc.sigma_half, 0.5).unwrap();
    let mut rows = Vec::new();
    for factor in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let mean: f64 = (0..5).map(|s| rff_report(factor * sigma_min, &unc, 40 + s)).sum::<f64>() / 5.0;
        println!("sigma = {factor} * sigma_min: mean max_ratio {mean:.4}");
        rows.push(mean);
    }
    assert!(rows[4] >= rows[0], "{rows:?}");
}

#[test]
fn robust_error_is_zero_for_a_robust_margin() {
    // margin 0.3 on the separable set; radius 0.1 cannot cross the line x0 + x1 = 0
    let data = separable_2d(100, 0.3, 8);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let clf = RobustClassifier::new(vec![s, s], 0.0, FeatureMap::Identity { dim: 2 }).unwrap();
    let unc = UncertaintySet::Shared(UncertaintyModel::isotropic(2, 0.1, NormExponent::TWO).unwrap());
    assert_eq!(standard_error(&clf, &data).unwrap(), 0.0);
    assert_eq!(robust_error(&clf, &data, &unc, 200, 3).unwrap(), 0.0);
    let wide = UncertaintySet::Shared(UncertaintyModel::isotropic(2, 1.0, NormExponent::TWO).unwrap());
    assert!(robust_error(&clf, &data, &wide, 200, 3).unwrap() > 0.0);
}

#[test]
fn robust_error_on_trained_kernel_model() {
    let data = ring_center(60, 2);
    let unc = UncertaintyModel::isotropic(2, 0.05, NormExponent::TWO).unwrap();
    let set = UncertaintySet::Shared(unc);
    let map = FeatureMap::Rff(RffMap::sample(2, 64, 0.5, RffVariant::Paired, 1).unwrap());
    let prob = SolverProblem::build(&data, map, &set, NormExponent::TWO, 0.01).unwrap();
    let cfg = SolverConfig {
        method: Method::Proximal,
        epochs: 40,
        step: StepSchedule::inverse_scaled(0.01),
        lambda: 0.01,
        seed: 2,
        ..SolverConfig::default()
    };
    let (clf, _) = train(&prob, &cfg).unwrap();
    let std = standard_error(&clf, &data).unwrap();
    let rob = robust_error(&clf, &data, &set, 100, 5).unwrap();
    assert!(rob >= std);
    let none = UncertaintySet::Shared(UncertaintyModel::isotropic(2, 0.0, NormExponent::TWO).unwrap());
    assert_eq!(robust_error(&clf, &data, &none, 100, 5).unwrap(), std);
}

#[test]
fn central_differences_converge() {
    let map = RffMap::sample(3, 16, 1.0, RffVariant::Paired, 4).unwrap();
    let unc = UncertaintyModel::isotropic(3, 0.3, NormExponent::TWO).unwrap();
    let x = [0.2, 0.1, -0.5];
    let phi = map.transform(&x).unwrap();
    let b: FeatureBound = rff_bound(&map, &x, &unc, NormExponent::TWO).unwrap();
    // a short ζ puts real curvature into the norm term
    let zeta: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.01 + 0.003).collect();
    let e4 = grad_check(&zeta, 0.0, &phi, -1.0, &b, 1e-4).unwrap();
    let e6 = grad_check(&zeta, 0.0, &phi, -1.0, &b, 1e-6).unwrap();
    assert!(e6 <= e4, "{e6} > {e4}");
    assert!(e6 < 1e-4);
}

#[test]
fn kernel_error_shrinks_with_dimension() {
    let points = uniform_points(20, 2, -1.0, 1.0, 6);
    let mean = |d: usize| -> f64 {
        (0..20u64)
            .map(|s| {
                let m = FeatureMap::Rff(RffMap::sample(2, d, 0.8, RffVariant::Paired, s).unwrap());
                kernel_approx_error(&m, &points, 0.8).unwrap().mean
            })
            .sum::<f64>()
            / 20.0
    };
    let (a, b, c) = (mean(16), mean(64), mean(256));
    assert!(a >= b && b >= c, "{a} {b} {c}");
}

#[test]
fn surface_samples_stay_on_the_set() {
    let unc =
        UncertaintyModel::new(SigmaHalf::diagonal(vec![0.5, 2.0, 1.0]).unwrap(), 0.7, NormExponent::new(2.5).unwrap())
            .unwrap();
    for seed in 0..1000 {
        let dx = sample_uncertainty(&unc, SampleMode::Surface, seed);
        assert!((unc.set_norm(&dx) - 0.7).abs() < 1e-10);
    }
}
