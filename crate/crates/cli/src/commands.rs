use std::path::{Path, PathBuf};

use lmdan::data::{
    default_smoothing, derive_seed, gen_drifted_pair, label_kl, load_feature_csv, write_feature_csv, Domain,
    LabeledDataset,
};
use lmdan::nn::save_checkpoint;
use lmdan::trainer::{drift_sweep, summarize, summary_csv, sweep_csv, train as run_training, TrainOptions};
use lmdan::verify::run_all;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::failed(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::failed(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::failed(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    files: [&'static str; 4],
    source_counts: Vec<usize>,
    target_counts: Vec<usize>,
    label_kl: f64,
    kl_smoothing: f64,
}

pub fn gen(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let pair = gen_drifted_pair(&cfg.blob(), &cfg.drift(), cfg.seed)?;
    let files = ["source_clean.csv", "target_clean.csv", "source.csv", "target.csv"];
    for (name, ds) in files.iter().zip([&pair.source_clean, &pair.target_clean, &pair.source, &pair.target]) {
        write(&dir.join(name), &write_feature_csv(ds))?;
    }
    let smoothing = default_smoothing(&pair.source, &pair.target);
    let manifest = Manifest {
        config: cfg,
        files,
        source_counts: pair.source.class_counts(),
        target_counts: pair.target.class_counts(),
        label_kl: label_kl(&pair.source, &pair.target, smoothing)?,
        kl_smoothing: smoothing,
    };
    write(&dir.join("manifest.json"), &to_json(&manifest)?)?;
    println!("label KL(source || target) = {:.6} -> {}", manifest.label_kl, dir.display());
    Ok(())
}

fn load_input(path: &Path, domain: Domain, classes: Option<usize>) -> Result<LabeledDataset, CliError> {
    if !path.exists() {
        return Err(CliError::usage(format!("input file not found: {}", path.display())));
    }
    load_feature_csv(path, domain, classes).map_err(|e| CliError::usage(e.to_string()))
}

fn training_data(cfg: &ExperimentConfig) -> Result<(LabeledDataset, LabeledDataset), CliError> {
    match (&cfg.source_csv, &cfg.target_csv) {
        (Some(s), Some(t)) => {
            let classes = Some(cfg.class_count);
            Ok((load_input(s, Domain::Source, classes)?, load_input(t, Domain::Target, classes)?))
        }
        _ => {
            let pair = gen_drifted_pair(&cfg.blob(), &cfg.drift(), cfg.seed)?;
            Ok((pair.source, pair.target))
        }
    }
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    config: &'a ExperimentConfig,
    report: &'a lmdan::trainer::RunReport,
}

pub fn train(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (src, tgt) = training_data(cfg)?;
    let dir = out_dir(cfg)?;
    let train_cfg = cfg.train(derive_seed(cfg.seed, 4));
    let outcome = run_training(cfg.method, &src, &tgt, &train_cfg, &TrainOptions::default())?;
    let report = &outcome.report;
    write(&dir.join("config.json"), &to_json(cfg)?)?;
    write(&dir.join("report.json"), &to_json(&TrainOutput { config: cfg, report })?)?;
    save_checkpoint(&outcome.nets, &dir.join("model.json"))?;
    println!(
        "{}: target accuracy {:.4} (macro {:.4}) over {} steps",
        cfg.method, report.accuracy, report.macro_accuracy, report.steps
    );
    if let Some(why) = &report.diverged {
        return Err(CliError::failed(format!("training diverged at {why}; last finite report written")));
    }
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let rows = drift_sweep(&cfg.sweep())?;
    write(&dir.join("config.json"), &to_json(cfg)?)?;
    write(&dir.join("sweep.csv"), &sweep_csv(&rows, cfg.class_count))?;
    let summary = summarize(&rows);
    write(&dir.join("summary.csv"), &summary_csv(&summary))?;
    for s in &summary {
        println!(
            "{:<11} alpha {:<4} rate {:<6} KL {:.4}  accuracy {:.4} ± {:.4} ({} runs)",
            s.method.name(),
            s.alpha,
            s.rate,
            s.kl_mean,
            s.accuracy_mean,
            s.accuracy_std,
            s.runs
        );
    }
    let diverged = rows.iter().filter(|r| r.diverged).count();
    if diverged > 0 {
        return Err(CliError::failed(format!("{diverged} sweep runs diverged")));
    }
    Ok(())
}

pub fn verify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let report = run_all(&cfg.verify())?;
    for c in &report.checks {
        println!(
            "{} {:<30} max error {:.3e} (tolerance {:.0e}, {} cases) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.max_error,
            c.tolerance,
            c.cases,
            c.detail
        );
    }
    if cfg.out.is_some() {
        let dir = out_dir(cfg)?;
        write(&dir.join("verify.json"), &to_json(&report)?)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::failed("verification failed"))
    }
}
