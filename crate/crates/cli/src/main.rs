//! `rosvm` command-line interface.
//!
//! Every subcommand reads an optional JSON run configuration (`--config`)
//! and accepts overrides of any configuration field by its dotted name,
//! e.g. `--solver.lambda=0.5` or `--features.kind nystrom`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 diverged training.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use rosvm::io::{load_model, run_training, save_model, FeatureKind, RunConfig};
use rosvm::rng::{mix64, SeedStream};
use rosvm::verify::{kernel_approx_error, robust_error, standard_error, verify_bound_mc};
use rosvm::{Dataset, Error, FeatureMap, NormExponent, RobustClassifier, UncertaintySet};

/// Top-level configuration keys; flags starting with one of these are
/// configuration overrides.
const CONFIG_KEYS: &[&str] = &["seed", "data", "uncertainty", "features", "pbar", "solver", "output", "verify"];

#[derive(Parser, Debug)]
#[command(name = "rosvm", version, about = "Robust kernel SVM training and bound verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a classifier; writes the model to `output.model`.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Predict labels for `data.path` and report accuracy.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Write one predicted label per line to this file.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Monte-Carlo check of the feature-space bounds over a grid.
    VerifyBounds {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Kernel approximation error of the configured feature map.
    KernelError {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fraction of samples misclassified under sampled perturbations.
    RobustError {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                Error::Diverged(_) => 3,
                Error::Config(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidExponent(_)
                | Error::UnsupportedNorm(_)
                | Error::UnsupportedVariant(_)
                | Error::OddFeatureDimension(_)
                | Error::SingularSigmaHalf => 1,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn is_override(name: &str) -> bool {
    let head = name.split('.').next().unwrap_or("");
    CONFIG_KEYS.contains(&head)
}

type Overrides = Vec<(String, String)>;

/// Splits configuration overrides out of the argument list.
fn split_overrides(args: Vec<String>) -> CliResult<(Vec<String>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !is_override(&name) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => iter.next().ok_or_else(|| CliError::Usage(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> CliResult<RunConfig> {
    RunConfig::load(path, overrides).map_err(|e| match e {
        Error::Config(m) => CliError::Usage(format!("invalid configuration: {m}")),
        other => CliError::Core(other),
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Core(Error::Io(format!("{}: {e}", path.display()))))
}

/// Prints the text lines followed by the JSON block, and saves the JSON
/// to `output.report` when set.
fn emit(cfg: &RunConfig, lines: &[String], report: &Value) -> CliResult<()> {
    for l in lines {
        println!("{l}");
    }
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    println!("{text}");
    if let Some(p) = &cfg.output.report {
        write_file(p, &text)?;
    }
    Ok(())
}

/// Loads `data.path` and zero-pads it to the model's input dimension.
fn load_data_for(cfg: &RunConfig, input_dim: usize) -> CliResult<Dataset> {
    let mut data = cfg.data.load()?;
    if data.n_features() > input_dim {
        return Err(Error::DimensionMismatch { expected: input_dim, found: data.n_features() }.into());
    }
    data.pad_to(input_dim);
    Ok(data)
}

fn load_classifier(path: &Path) -> CliResult<RobustClassifier> {
    Ok(load_model(path)?.classifier()?)
}

fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let model_path =
        cfg.output.model.clone().ok_or_else(|| CliError::Usage("output.model is required for train".into()))?;
    let out = run_training(cfg)?;
    save_model(&model_path, &out.model)?;
    if let Some(p) = &cfg.output.trace {
        write_file(p, &out.trace.to_csv())?;
    }
    let map = &out.model.feature_map;
    let lines = vec![
        format!("samples={} feature_map={} feature_dim={}", out.samples, map.kind(), map.output_dim()),
        format!(
            "updates={} initial_objective={:.6e} final_objective={:.6e}",
            out.trace.updates, out.trace.initial_objective, out.trace.final_objective
        ),
        format!("train_accuracy={:.6}", out.train_accuracy),
        format!("model={}", model_path.display()),
    ];
    let report = json!({
        "command": "train",
        "samples": out.samples,
        "feature_map": map.kind(),
        "feature_dim": map.output_dim(),
        "updates": out.trace.updates,
        "initial_objective": out.trace.initial_objective,
        "final_objective": out.trace.final_objective,
        "train_accuracy": out.train_accuracy,
        "model": model_path,
    });
    emit(cfg, &lines, &report)
}

fn cmd_predict(cfg: &RunConfig, model: &Path, labels: Option<&Path>) -> CliResult<()> {
    let clf = load_classifier(model)?;
    let data = load_data_for(cfg, clf.feature_map.input_dim())?;
    let preds: Vec<f64> = data.samples().iter().map(|x| clf.predict(x)).collect::<rosvm::Result<_>>()?;
    let correct = preds.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
    let accuracy = correct as f64 / data.len() as f64;
    if let Some(p) = labels {
        let text: String = preds.iter().map(|&y| if y > 0.0 { "+1\n" } else { "-1\n" }).collect();
        write_file(p, &text)?;
    }
    let lines = vec![format!("samples={} correct={} accuracy={:.6}", data.len(), correct, accuracy)];
    let report = json!({"command": "predict", "samples": data.len(), "correct": correct, "accuracy": accuracy});
    emit(cfg, &lines, &report)
}

fn cmd_verify_bounds(cfg: &RunConfig) -> CliResult<()> {
    if cfg.features.kind == FeatureKind::Identity {
        return Err(CliError::Usage("verify-bounds needs features.kind = rff or nystrom".into()));
    }
    let data = cfg.data.load()?;
    let map = cfg.build_feature_map(&data)?;
    let gammas = if cfg.verify.gammas.is_empty() { vec![cfg.uncertainty.gamma] } else { cfg.verify.gammas.clone() };
    let pbars = match (&map, cfg.verify.pbars.is_empty()) {
        (FeatureMap::Nystrom(_), _) => vec![NormExponent::TWO],
        (_, true) => vec![cfg.pbar],
        (_, false) => cfg.verify.pbars.clone(),
    };
    let base_seed = cfg.seed_for(SeedStream::Oracle);
    let n_points = cfg.verify.points.min(data.len());
    let mut lines = Vec::new();
    let mut cells = Vec::new();
    let mut total_violations = 0;
    let mut cell = 0u64;
    for &gamma in &gammas {
        let unc = cfg.uncertainty.build(data.n_features())?.with_gamma(gamma)?;
        for &pbar in &pbars {
            for i in 0..n_points {
                let x = data.sample(i).0;
                let bound = map.bound(x, &unc, pbar)?;
                let r = verify_bound_mc(&map, x, &unc, &bound, cfg.verify.trials, mix64(base_seed ^ cell))?;
                cell += 1;
                total_violations += r.violations;
                lines.push(format!("point={i} gamma={gamma} {}", r.summary()));
                cells.push(json!({"point": i, "gamma": gamma, "report": r}));
            }
        }
    }
    let passed = total_violations == 0;
    lines.push(format!(
        "feature_map={} cells={} total_violations={} {}",
        map.kind(),
        cells.len(),
        total_violations,
        if passed { "PASS" } else { "FAIL" }
    ));
    let report = json!({
        "command": "verify-bounds",
        "feature_map": map.kind(),
        "cells": cells,
        "total_violations": total_violations,
        "passed": passed,
    });
    emit(cfg, &lines, &report)
}

fn cmd_kernel_error(cfg: &RunConfig) -> CliResult<()> {
    if cfg.features.kind == FeatureKind::Identity {
        return Err(CliError::Usage("kernel-error needs features.kind = rff or nystrom".into()));
    }
    let data = cfg.data.load()?;
    let map = cfg.build_feature_map(&data)?;
    let k = cfg.verify.kernel_points.min(data.len());
    let stats = kernel_approx_error(&map, &data.samples()[..k], cfg.features.sigma)?;
    let lines = vec![format!("feature_map={} feature_dim={} {}", map.kind(), map.output_dim(), stats.summary())];
    let report = json!({
        "command": "kernel-error",
        "feature_map": map.kind(),
        "feature_dim": map.output_dim(),
        "sigma": cfg.features.sigma,
        "stats": stats,
    });
    emit(cfg, &lines, &report)
}

fn cmd_robust_error(cfg: &RunConfig, model: &Path) -> CliResult<()> {
    let clf = load_classifier(model)?;
    let data = load_data_for(cfg, clf.feature_map.input_dim())?;
    let unc = UncertaintySet::Shared(cfg.uncertainty.build(data.n_features())?);
    let std_err = standard_error(&clf, &data)?;
    let rob_err = robust_error(&clf, &data, &unc, cfg.verify.robust_trials, cfg.seed_for(SeedStream::Oracle))?;
    let lines = vec![format!(
        "samples={} gamma={} trials={} standard_error={:.6} robust_error={:.6}",
        data.len(),
        cfg.uncertainty.gamma,
        cfg.verify.robust_trials,
        std_err,
        rob_err
    )];
    let report = json!({
        "command": "robust-error",
        "samples": data.len(),
        "gamma": cfg.uncertainty.gamma,
        "trials": cfg.verify.robust_trials,
        "standard_error": std_err,
        "robust_error": rob_err,
    });
    emit(cfg, &lines, &report)
}

fn run(args: Vec<String>) -> CliResult<()> {
    let (rest, overrides) = split_overrides(args)?;
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    match cli.command {
        Command::Train { config } => cmd_train(&load_config(config.as_deref(), &overrides)?),
        Command::Predict { config, model, labels } => {
            cmd_predict(&load_config(config.as_deref(), &overrides)?, &model, labels.as_deref())
        }
        Command::VerifyBounds { config } => cmd_verify_bounds(&load_config(config.as_deref(), &overrides)?),
        Command::KernelError { config } => cmd_kernel_error(&load_config(config.as_deref(), &overrides)?),
        Command::RobustError { config, model } => {
            cmd_robust_error(&load_config(config.as_deref(), &overrides)?, &model)
        }
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message().trim_end());
            ExitCode::from(e.exit_code())
        }
    }
}
