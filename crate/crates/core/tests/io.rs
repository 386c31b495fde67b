mod common;

use common::{ring_center, uniform_points};
use rand::Rng;
use rosvm::io::{
    load_model, parse_csv, parse_libsvm, run_training_on, save_model, ModelFile, RunConfig, TrainingMeta, MODEL_VERSION,
};
use rosvm::rng::{chunk_rng, rng_from_seed};
use rosvm::{Error, FeatureMap, Method, NormExponent, NystromMap, RffMap, RffVariant, RobustClassifier};
use serde_json::json;

const ALPHABET: &[u8] = b"0123456789.:-+eE #,\n\n\r\tnaif";

fn random_text<R: Rng>(rng: &mut R) -> Vec<u8> {
    let len = rng.random_range(0..80);
    (0..len)
        .map(|_| if rng.random_bool(0.05) { rng.random() } else { ALPHABET[rng.random_range(0..ALPHABET.len())] })
        .collect()
}

fn check_located(result: rosvm::Result<rosvm::Dataset>, input: &[u8]) {
    let lines = input.split(|b| *b == b'\n').count();
    match result {
        Ok(d) => assert!(!d.is_empty()),
        Err(Error::Parse { line, .. }) => assert!(line >= 1 && line <= lines, "line {line} of {lines}: {input:?}"),
        Err(Error::EmptyDataset) => {}
        Err(e) => panic!("unlocated error {e:?} for {input:?}"),
    }
}

#[test]
fn parsers_survive_random_input() {
    for i in 0..10_000u64 {
        let mut rng = chunk_rng(77, i);
        let bytes = random_text(&mut rng);
        check_located(parse_libsvm(bytes.as_slice(), false), &bytes);
        check_located(parse_csv(bytes.as_slice(), 0, false, false), &bytes);
    }
}

#[test]
fn libsvm_error_names_the_line() {
    let text = "+1 1:0.5 2:1\n-1 1:0.25\n# note\n+1 3:abc\n";
    match parse_libsvm(text.as_bytes(), false) {
        Err(Error::Parse { line, message }) => {
            assert_eq!(line, 4);
            assert!(message.contains("abc"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let d = parse_libsvm("1 2:3\n0 1:1\n".as_bytes(), true).unwrap();
    assert_eq!(d.labels(), &[1.0, -1.0]);
    assert_eq!(d.samples()[0], vec![0.0, 3.0]);
}

#[test]
fn csv_error_names_the_line() {
    let text = "a,b,y\n1,2,1\n3,4\n";
    match parse_csv(text.as_bytes(), 2, true, false) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let d = parse_csv("y,a\n-1,0.5\n1,2\n".as_bytes(), 0, true, false).unwrap();
    assert_eq!(d.samples(), &[vec![0.5], vec![2.0]]);
}

fn meta() -> TrainingMeta {
    TrainingMeta { lambda: 0.1, method: Method::Proximal, epochs: 3, seed: 9, gamma: 0.1, pbar: NormExponent::TWO }
}

fn random_classifier(map: FeatureMap, seed: u64) -> RobustClassifier {
    let mut rng = rng_from_seed(seed);
    let zeta = (0..map.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    RobustClassifier::new(zeta, rng.random_range(-0.5..0.5), map).unwrap()
}

#[test]
fn saved_models_predict_identically() {
    let dir = tempfile::tempdir().unwrap();
    let landmarks = uniform_points(12, 3, -1.0, 1.0, 4);
    let maps = [
        FeatureMap::Identity { dim: 3 },
        FeatureMap::Rff(RffMap::sample(3, 32, 0.9, RffVariant::Paired, 1).unwrap()),
        FeatureMap::Rff(RffMap::sample(3, 17, 0.9, RffVariant::Offset, 2).unwrap()),
        FeatureMap::Nystrom(NystromMap::fit(landmarks, 0.8, None).unwrap()),
    ];
    let inputs = uniform_points(100, 3, -2.0, 2.0, 5);
    for (k, map) in maps.into_iter().enumerate() {
        let clf = random_classifier(map, 10 + k as u64);
        let path = dir.path().join(format!("m{k}.json"));
        save_model(&path, &ModelFile::new(&clf, meta())).unwrap();
        let back = load_model(&path).unwrap().classifier().unwrap();
        assert_eq!(back, clf);
        for x in &inputs {
            let a = clf.decision_value(x).unwrap();
            let b = back.decision_value(x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let clf = random_classifier(FeatureMap::Rff(RffMap::sample(2, 8, 1.0, RffVariant::Paired, 3).unwrap()), 1);
    let text = ModelFile::new(&clf, meta()).to_json();

    for cut in [1, text.len() / 3, text.len() / 2, text.len() - 2] {
        assert!(matches!(ModelFile::from_json(&text[..cut]), Err(Error::CorruptModel(_))), "cut at {cut}");
    }

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["version"] = json!(MODEL_VERSION + 1);
    assert!(matches!(ModelFile::from_json(&v.to_string()), Err(Error::ModelVersion(_))));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["format"] = json!("something-else");
    assert!(ModelFile::from_json(&v.to_string()).is_err());

    // right shape, inconsistent content
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["zeta"] = json!([1.0, 2.0]);
    let rejected = ModelFile::from_json(&v.to_string()).and_then(|f| f.classifier());
    assert!(matches!(rejected, Err(Error::CorruptModel(_))));

    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_model(&dir.path().join("missing.json")), Err(Error::Io(_))));
}

#[test]
fn constant_and_negated_models() {
    let map = FeatureMap::Rff(RffMap::sample(2, 16, 1.0, RffVariant::Paired, 8).unwrap());
    let inputs = uniform_points(50, 2, -3.0, 3.0, 6);
    for b in [1.0, -1.0] {
        let clf = RobustClassifier::new(vec![0.0; 16], b, map.clone()).unwrap();
        assert!(inputs.iter().all(|x| clf.predict(x).unwrap() == b));
    }
    let clf = random_classifier(map, 33);
    let neg = RobustClassifier::new(clf.zeta.iter().map(|z| -z).collect(), -clf.bias, clf.feature_map.clone()).unwrap();
    for x in &inputs {
        if clf.decision_value(x).unwrap() != 0.0 {
            assert_eq!(clf.predict(x).unwrap(), -neg.predict(x).unwrap());
        }
    }
}

#[test]
fn config_overrides_reach_training() {
    let overrides: Vec<(String, String)> = [
        ("seed", "5"),
        ("features.kind", "nystrom"),
        ("features.landmarks", "10"),
        ("features.sigma", "0.7"),
        ("uncertainty.gamma", "0.0001"),
        ("solver.epochs", "3"),
        ("solver.lambda", "0.1"),
        ("solver.step.eta0", "0.01"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let cfg = RunConfig::load(None, &overrides).unwrap();
    assert_eq!(cfg.features.landmarks, 10);
    let data = ring_center(15, 2);
    let out = run_training_on(&cfg, &data).unwrap();
    assert!(matches!(out.model.feature_map, FeatureMap::Nystrom(_)));
    assert_eq!(out.model.training.epochs, 3);
    assert_eq!(out.model.training.seed, 5);
    assert_eq!(out.trace.updates, 90);

    // a second run is bitwise identical
    let again = run_training_on(&cfg, &data).unwrap();
    assert_eq!(out.model, again.model);

    let bad = [("solver.nope".to_string(), "1".to_string())];
    assert!(matches!(RunConfig::load(None, &bad), Err(Error::Config(_))));
    let bad = [("solver.epochs".to_string(), "many".to_string())];
    assert!(matches!(RunConfig::load(None, &bad), Err(Error::Config(_))));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"seed": 3, "solver": {"lambda": 0.5, "epochs": 7}}"#).unwrap();
    let cfg = RunConfig::load(Some(&path), &[("solver.epochs".into(), "2".into())]).unwrap();
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.solver.lambda, 0.5);
    assert_eq!(cfg.solver.epochs, 2);
    std::fs::write(&path, "{not json").unwrap();
    assert!(matches!(RunConfig::load(Some(&path), &[]), Err(Error::Config(_))));
}
