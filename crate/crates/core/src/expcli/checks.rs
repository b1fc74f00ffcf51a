use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::run_parallel;
use crate::error::{Error, Result};
use crate::manifold::{gbwm_aim_check, rieexp_identity, rielog_at, rielog_identity, MetricSpec};
use crate::symlin::random::{log_exp_spd, random_spd_with_cond, random_symmetric, trial_rng};
use crate::symlin::{mpow, SpdMatrix, SymMatrix};

pub const CHECK_TOL: f64 = 1e-9;
pub const GBWM_AIM_TOL: f64 = 1e-8;
/// Relative error injected by `--perturb`.
const FAULT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLogsConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub perturb: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub metric: String,
    pub invariant: String,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLogsReport {
    pub config: CheckLogsConfig,
    pub tolerance: f64,
    pub checks: usize,
    pub max_error: f64,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

/// One metric per family, with non-trivial deformation and inner-product parameters,
/// paired with its undeformed counterpart and the deformation power.
fn families(n: usize, rng: &mut impl Rng) -> Vec<(MetricSpec, MetricSpec, f64)> {
    let m = log_exp_spd(n, 0.5, rng);
    vec![
        (MetricSpec::Lem { alpha: 1.0, beta: 0.0 }, MetricSpec::Lem { alpha: 1.0, beta: 0.0 }, 1.0),
        (
            MetricSpec::Aim { theta: 0.6, alpha: 1.0, beta: 0.3 },
            MetricSpec::Aim { theta: 1.0, alpha: 1.0, beta: 0.3 },
            0.6,
        ),
        (
            MetricSpec::Em { theta: 0.5, alpha: 2.0, beta: -0.1 },
            MetricSpec::Em { theta: 1.0, alpha: 2.0, beta: -0.1 },
            0.5,
        ),
        (MetricSpec::Mpem { theta1: 0.4, theta2: 1.2 }, MetricSpec::Mpem { theta1: 0.5, theta2: 1.5 }, 0.8),
        (MetricSpec::Lcm { theta: 0.5 }, MetricSpec::Lcm { theta: 1.0 }, 0.5),
        (MetricSpec::Bwm { theta: 0.75 }, MetricSpec::Bwm { theta: 0.5 }, 1.5),
        (MetricSpec::Gbwm { theta: 0.25, m: Some(m.clone()) }, MetricSpec::Gbwm { theta: 0.5, m: Some(m) }, 0.5),
    ]
}

fn rel_err(got: &SymMatrix, want: &SymMatrix) -> f64 {
    (got.as_matrix() - want.as_matrix()).frobenius_norm() / want.frobenius_norm().max(1.0)
}

fn check_trial(cfg: &CheckLogsConfig, trial: usize) -> Result<Vec<(String, String, f64)>> {
    let n = cfg.n;
    let mut rng = trial_rng(cfg.seed, trial as u64);
    let p = random_spd_with_cond(n, 100.0, &mut rng);
    let v = random_symmetric(n, &mut rng).scale(0.2 / (n as f64).sqrt());
    let mut out = Vec::new();
    for (spec, base, power) in families(n, &mut rng) {
        let name = spec.to_string();
        let mut record = |invariant: &str, err: f64| out.push((name.clone(), invariant.to_string(), err));

        let mut log_p = rielog_identity(&spec, &p)?;
        if cfg.perturb {
            log_p = log_p.scale(1.0 + FAULT);
        }
        let back = rieexp_identity(&spec, &log_p)?;
        record("exp(log P) = P", rel_err(&back.as_sym(), &p.as_sym()));

        let v_back = rielog_identity(&spec, &rieexp_identity(&spec, &v)?)?;
        record("log(exp V) = V", rel_err(&v_back, &v));

        let general = rielog_at(&spec, &SpdMatrix::identity(n), &p)?.vec;
        record("log at I matches closed form", rel_err(&log_p, &general));

        // the log at I of a deformed metric is the undeformed log of P^p, divided by p
        let scaled = rielog_identity(&base, &mpow(&p, power)?)?.scale(1.0 / power);
        let expected = match spec {
            MetricSpec::Lem { .. } => rielog_identity(&spec, &p)?,
            _ => scaled,
        };
        record("power-deformation scaling", rel_err(&log_p, &expected));
        if let MetricSpec::Lem { .. } = spec {
            let half = rielog_identity(&spec, &mpow(&p, 0.5)?)?.scale(2.0);
            record("log P^t = t log P", rel_err(&half, &log_p));
        }
    }
    Ok(out)
}

/// Round trips, closed form against the general logarithm, and power-deformation scaling
/// for all seven families.
pub fn check_logs(cfg: &CheckLogsConfig) -> Result<CheckLogsReport> {
    if cfg.n < 2 || cfg.trials == 0 {
        return Err(Error::Config(format!("need n >= 2 and trials >= 1, got n={} trials={}", cfg.n, cfg.trials)));
    }
    let results = run_parallel(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| check_trial(cfg, t).map_err(|e| e.context(format!("trial {t}"))))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut checks = 0;
    let mut max_error: f64 = 0.0;
    let mut violations = Vec::new();
    for (trial, rows) in results.into_iter().enumerate() {
        for (metric, invariant, error) in rows {
            checks += 1;
            max_error = max_error.max(error);
            if !(error <= CHECK_TOL) {
                violations.push(Violation { trial, metric, invariant, error });
            }
        }
    }
    Ok(CheckLogsReport {
        config: cfg.clone(),
        tolerance: CHECK_TOL,
        checks,
        max_error,
        passed: violations.is_empty(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GbwmAimConfig {
    pub n: usize,
    /// `None` draws θ uniformly from `[0.1, 1.5)` per trial.
    pub theta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub perturb: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GbwmAimTrial {
    pub trial: usize,
    pub theta: f64,
    pub gbwm: f64,
    pub quarter_aim: f64,
    pub rel_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GbwmAimReport {
    pub config: GbwmAimConfig,
    pub tolerance: f64,
    pub max_rel_dev: f64,
    pub first_violation: Option<GbwmAimTrial>,
    pub passed: bool,
}

/// GBWM with weight `P^{2θ}` against a quarter of the `2θ`-deformed AIM on random triples.
pub fn gbwm_aim(cfg: &GbwmAimConfig) -> Result<GbwmAimReport> {
    if cfg.n < 1 || cfg.trials == 0 {
        return Err(Error::Config("need n >= 1 and trials >= 1".into()));
    }
    if cfg.theta == Some(0.0) {
        return Err(Error::Config("theta must be nonzero".into()));
    }
    let trials = run_parallel(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(cfg.seed, trial as u64);
                let theta = cfg.theta.unwrap_or_else(|| rng.random_range(0.1..1.5));
                let p = random_spd_with_cond(cfg.n, 100.0, &mut rng);
                let v = random_symmetric(cfg.n, &mut rng);
                let w = random_symmetric(cfg.n, &mut rng);
                let (mut gbwm, quarter_aim) =
                    gbwm_aim_check(theta, &p, &v, &w).map_err(|e| e.context(format!("trial {trial}")))?;
                if cfg.perturb {
                    gbwm *= 1.0 + FAULT;
                }
                let rel_dev = (gbwm - quarter_aim).abs() / quarter_aim.abs().max(f64::MIN_POSITIVE);
                Ok(GbwmAimTrial { trial, theta, gbwm, quarter_aim, rel_dev })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let max_rel_dev = trials.iter().map(|t| t.rel_dev).fold(0.0, f64::max);
    let first_violation = trials.into_iter().find(|t| !(t.rel_dev < GBWM_AIM_TOL));
    Ok(GbwmAimReport {
        config: cfg.clone(),
        tolerance: GBWM_AIM_TOL,
        max_rel_dev,
        passed: first_violation.is_none(),
        first_violation,
    })
}
