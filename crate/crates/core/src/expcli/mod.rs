//! Experiment drivers behind the `spdcov` binary. Each subcommand is a plain
//! function returning a serializable report, so tests can call them directly.

mod checks;
mod distgap;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use checks::{
    check_logs, gbwm_aim, CheckLogsConfig, CheckLogsReport, GbwmAimConfig, GbwmAimReport, GbwmAimTrial, Violation,
    CHECK_TOL, GBWM_AIM_TOL,
};
pub use distgap::{
    gaps_csv, pair_gap, pair_gaps, run_distgap, run_distgap_multi, DistGapConfig, DistGapSummary, PairGap, Sampler, REFERENCE_MEAN_GAP,
    REFERENCE_STD_GAP,
};

use crate::error::{Error, Result};
use crate::gcp::{
    load_features, synth_dataset, train_with, write_atomic, Dataset, FeatureFormat, RunRecord, TrainConfig,
};
use crate::heads::HeadTag;
use crate::optim::{powtmlr_divergence, scalepow_equivalence, theorem_equivalence, EquivInstance, SgdConfig};

/// Runs `f` on a rayon pool capped by `SPD_GEOM_THREADS` when that is a positive integer.
pub fn run_parallel<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("SPD_GEOM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&k| k > 0);
    match cap.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Mean and sample standard deviation.
pub fn stats(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Error::Io(format!("serializing report: {e}")))
}

#[derive(Parser, Debug)]
#[command(name = "spdcov", version, about = "SPD geometry experiments and covariance-pooling classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Power-Euclidean vs log-Euclidean distances on random SPD pairs.
    Distgap(DistgapArgs),
    /// Logarithm/exponential invariants for every metric family.
    CheckLogs(CheckLogsArgs),
    /// Paired-training equivalence checks.
    Equiv(EquivArgs),
    /// Train a covariance-pooling classifier.
    Train(TrainArgs),
    /// Deformed GBWM against a quarter of the deformed AIM.
    GbwmAim(GbwmAimArgs),
}

#[derive(Args, Debug)]
pub struct DistgapArgs {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta: f64,
    /// wishart or logexp
    #[arg(long, default_value = "wishart")]
    pub sampler: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-pair CSV; the JSON summary goes next to it as `<stem>.summary.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckLogsArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inject a small error into every logarithm.
    #[arg(long)]
    pub perturb: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EquivArgs {
    /// scalepow, rsgd or powtmlr
    #[arg(long)]
    pub which: String,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// Matrix size of the synthetic inputs.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Random instances for the powtmlr check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// `synth` or a feature file.
    #[arg(long, default_value = "synth")]
    pub data: String,
    /// Validation feature file (file data only).
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// csv or f64bin; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<String>,
    /// log, pow, scalepow, powtmlr, chotmlr or powprime
    #[arg(long, default_value = "pow")]
    pub head: String,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub classifier_factor: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    #[arg(long)]
    pub eps_reg: Option<f64>,
    /// `epoch:divisor`, repeatable.
    #[arg(long = "schedule", value_parser = parse_schedule)]
    pub schedule: Vec<(usize, f64)>,
    /// Newton–Schulz iterations for the square-root head.
    #[arg(long)]
    pub newton_schulz: Option<usize>,
    #[arg(long)]
    pub reduce_to: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub positions: usize,
    #[arg(long, default_value_t = 40)]
    pub per_class: usize,
    #[arg(long, default_value_t = 20)]
    pub val_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Output directory for `run.json` and `epochs.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GbwmAimArgs {
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub theta: f64,
    /// Draw θ per trial instead of using `--theta`.
    #[arg(long)]
    pub random_theta: bool,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inject a small error into the GBWM side.
    #[arg(long)]
    pub perturb: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> std::result::Result<(usize, f64), String> {
    let (e, d) = s.split_once(':').ok_or_else(|| format!("expected epoch:divisor, got `{s}`"))?;
    let epoch = e.trim().parse().map_err(|err| format!("bad epoch in `{s}`: {err}"))?;
    let div = d.trim().parse().map_err(|err| format!("bad divisor in `{s}`: {err}"))?;
    Ok((epoch, div))
}

/// What a subcommand prints and whether its invariants held.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub report: String,
    /// One-line human summary for stderr.
    pub note: String,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Distgap(a) => cmd_distgap(a),
        Command::CheckLogs(a) => cmd_check_logs(a),
        Command::Equiv(a) => cmd_equiv(a),
        Command::Train(a) => cmd_train(a),
        Command::GbwmAim(a) => cmd_gbwm_aim(a),
    }
}

fn write_report(out: Option<&Path>, report: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, report.as_bytes()),
        None => Ok(()),
    }
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

pub fn cmd_distgap(a: &DistgapArgs) -> Result<Outcome> {
    let cfg = DistGapConfig { n: a.n, pairs: a.pairs, theta: a.theta, sampler: a.sampler.parse()?, seed: a.seed };
    let (gaps, summary) = run_distgap(&cfg)?;
    let report = to_json(&summary)?;
    write_atomic(&a.out, gaps_csv(&gaps).as_bytes())?;
    write_atomic(&summary_path(&a.out), report.as_bytes())?;
    let note = format!(
        "mean |d_pem - d_lem| = {:.4} ± {:.4} (reference {REFERENCE_MEAN_GAP} ± {REFERENCE_STD_GAP}, not asserted)",
        summary.mean_abs_diff, summary.std_abs_diff
    );
    Ok(Outcome { passed: summary.passed, report, note })
}

pub fn cmd_check_logs(a: &CheckLogsArgs) -> Result<Outcome> {
    let cfg = CheckLogsConfig { n: a.n, trials: a.trials, seed: a.seed, perturb: a.perturb };
    let r = check_logs(&cfg)?;
    let report = to_json(&r)?;
    write_report(a.out.as_deref(), &report)?;
    let note = match r.violations.first() {
        None => format!("{} checks passed, max error {:.3e}", r.checks, r.max_error),
        Some(v) => format!(
            "{} of {} checks failed; first: {} `{}` in trial {} (error {:.3e})",
            r.violations.len(),
            r.checks,
            v.metric,
            v.invariant,
            v.trial,
            v.error
        ),
    };
    Ok(Outcome { passed: r.passed, report, note })
}

pub fn cmd_equiv(a: &EquivArgs) -> Result<Outcome> {
    let r = match a.which.as_str() {
        "scalepow" | "rsgd" => {
            if !(a.theta > 0.0) {
                return Err(Error::Config(format!("{} needs theta > 0, got {}", a.which, a.theta)));
            }
            let inst = EquivInstance::synthetic(a.n, a.classes, 3, a.seed);
            if a.which == "scalepow" {
                scalepow_equivalence(&inst, a.theta, a.steps, a.lr)?
            } else {
                theorem_equivalence(&inst, a.theta, a.steps, a.lr)?
            }
        }
        "powtmlr" => powtmlr_divergence(a.n, a.classes, a.theta, a.lr, a.trials, a.seed)?,
        other => return Err(Error::Config(format!("unknown equivalence `{other}` (expected scalepow, rsgd or powtmlr)"))),
    };
    let report = to_json(&r)?;
    write_report(a.out.as_deref(), &report)?;
    let mut note = format!("{}: max deviation {:.3e} / {:.3e}", r.which, r.max_param_dev, r.max_output_dev);
    if let Some(step) = r.first_violation.filter(|_| !r.passed) {
        write!(note, "; first offending step {step}").expect("writing to a string");
    }
    Ok(Outcome { passed: r.passed, report, note })
}

pub fn cmd_gbwm_aim(a: &GbwmAimArgs) -> Result<Outcome> {
    let cfg = GbwmAimConfig {
        n: a.n,
        theta: if a.random_theta { None } else { Some(a.theta) },
        trials: a.trials,
        seed: a.seed,
        perturb: a.perturb,
    };
    let r = gbwm_aim(&cfg)?;
    let report = to_json(&r)?;
    write_report(a.out.as_deref(), &report)?;
    let note = match &r.first_violation {
        None => format!("{} trials passed, max relative deviation {:.3e}", cfg.trials, r.max_rel_dev),
        Some(t) => format!(
            "trial {} (θ={}) deviates: gbwm {:.12e} vs aim/4 {:.12e}, relative {:.3e}",
            t.trial, t.theta, t.gbwm, t.quarter_aim, t.rel_dev
        ),
    };
    Ok(Outcome { passed: r.passed, report, note })
}

/// Where the training data came from, echoed into `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synth { classes: usize, dim: usize, positions: usize, per_class: usize, val_per_class: usize, spread: f64 },
    File { train: PathBuf, val: Option<PathBuf> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub data: DataSource,
    pub run: RunRecord,
}

fn load(path: &Path, format: Option<&str>) -> Result<Dataset> {
    let fmt = match format {
        Some(f) => f.parse()?,
        None => FeatureFormat::from_path(path),
    };
    load_features(path, fmt).map_err(|e| e.context(path.display().to_string()))
}

pub fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        head: a.head.parse::<HeadTag>()?,
        theta: a.theta,
        newton_schulz: a.newton_schulz,
        epochs: a.epochs,
        batch_size: a.batch_size,
        sgd: SgdConfig { lr: a.lr, classifier_factor: a.classifier_factor, seed: a.seed },
        weight_decay: a.weight_decay,
        eps_reg: a.eps_reg,
        lr_schedule: a.schedule.clone(),
        weight_lr_scale: 1.0,
        reduce_to: a.reduce_to,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn epochs_csv(record: &RunRecord) -> String {
    let mut out = String::from("epoch,lr,loss,top1,top5,val_top1,val_top5\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for e in &record.epochs {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{},{}",
            e.epoch,
            e.lr,
            e.train_loss,
            e.train_top1,
            e.train_top5,
            opt(e.val_top1),
            opt(e.val_top5)
        )
        .expect("writing to a string");
    }
    out
}

pub fn cmd_train(a: &TrainArgs) -> Result<Outcome> {
    let cfg = train_config(a)?;
    let (train, val, data) = if a.data == "synth" {
        let total = a.per_class + a.val_per_class;
        let all = synth_dataset(a.classes, a.dim, a.positions, total, a.spread, a.seed)?;
        let (train, val) = all.split_at(a.classes * a.per_class);
        let data = DataSource::Synth {
            classes: a.classes,
            dim: a.dim,
            positions: a.positions,
            per_class: a.per_class,
            val_per_class: a.val_per_class,
            spread: a.spread,
        };
        (train, (!val.is_empty()).then_some(val), data)
    } else {
        let path = PathBuf::from(&a.data);
        let train = load(&path, a.format.as_deref())?;
        let val = a.val.as_deref().map(|p| load(p, a.format.as_deref())).transpose()?;
        (train, val, DataSource::File { train: path, val: a.val.clone() })
    };
    let (_, run) = train_with(&train, val.as_ref(), &cfg, None)?;
    std::fs::create_dir_all(&a.out)?;
    let csv = epochs_csv(&run);
    let last = run.epochs.last().cloned();
    let wall = run.wall_time_secs;
    let report = to_json(&TrainReport { data, run })?;
    write_atomic(&a.out.join("epochs.csv"), csv.as_bytes())?;
    write_atomic(&a.out.join("run.json"), report.as_bytes())?;
    let note = match last {
        Some(e) => format!(
            "final epoch: loss {:.4}, train top-1 {:.3}, val top-1 {}; {wall:.2}s",
            e.train_loss,
            e.train_top1,
            e.val_top1.map_or("n/a".into(), |v| format!("{v:.3}"))
        ),
        None => String::new(),
    };
    Ok(Outcome { passed: true, report, note })
}
