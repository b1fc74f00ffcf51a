use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_parallel, stats};
use crate::error::{Error, Result};
use crate::symlin::random::{log_exp_spd, trial_rng, wishart_plus_identity};
use crate::symlin::{sym_eig, EigDecomp, SpdMatrix};

/// Mean power-vs-log-Euclidean gap reported for 256×256 pairs in the literature; logged, not asserted.
pub const REFERENCE_MEAN_GAP: f64 = 335.84;
pub const REFERENCE_STD_GAP: f64 = 1.61;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// `A Aᵀ/n + I`, `A` standard normal.
    Wishart,
    /// `exp(B/√n)`, `B` random symmetric.
    Logexp,
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wishart" => Ok(Sampler::Wishart),
            "logexp" => Ok(Sampler::Logexp),
            _ => Err(Error::Config(format!("unsupported sampler `{s}` (expected wishart or logexp)"))),
        }
    }
}

impl Sampler {
    pub fn draw(self, n: usize, rng: &mut impl rand::Rng) -> SpdMatrix {
        match self {
            Sampler::Wishart => wishart_plus_identity(n, rng),
            Sampler::Logexp => log_exp_spd(n, 1.0, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistGapConfig {
    pub n: usize,
    pub pairs: usize,
    pub theta: f64,
    pub sampler: Sampler,
    pub seed: u64,
}

impl DistGapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.pairs == 0 {
            return Err(Error::Config(format!("need n >= 2 and pairs >= 1, got n={} pairs={}", self.n, self.pairs)));
        }
        if !(self.theta.is_finite() && self.theta != 0.0) {
            return Err(Error::Config(format!("theta must be finite and nonzero, got {}", self.theta)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairGap {
    pub pair_id: usize,
    pub d_pem: f64,
    pub d_lem: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistGapSummary {
    pub config: DistGapConfig,
    pub mean_abs_diff: f64,
    pub std_abs_diff: f64,
    /// Mean of `|d_PEM − d_LEM| / d_LEM`.
    pub mean_rel_diff: f64,
    pub mean_d_pem: f64,
    pub mean_d_lem: f64,
    pub reference_mean_gap: f64,
    pub reference_std_gap: f64,
    pub passed: bool,
}

/// `‖U F Uᵀ − V G Vᵀ‖_F` from per-eigenvalue images `f`, `g`, with `W = UᵀV`.
fn spectral_distance(p: &EigDecomp, q: &EigDecomp, w2: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let fp: Vec<f64> = p.values.iter().map(|&l| f(l)).collect();
    let fq: Vec<f64> = q.values.iter().map(|&l| f(l)).collect();
    let n = fq.len();
    let cross: f64 = fp.iter().enumerate().map(|(i, a)| a * (0..n).map(|j| fq[j] * w2[i * n + j]).sum::<f64>()).sum();
    let sq = fp.iter().map(|v| v * v).sum::<f64>() + fq.iter().map(|v| v * v).sum::<f64>() - 2.0 * cross;
    sq.max(0.0).sqrt()
}

/// Power-Euclidean and log-Euclidean distances between `p` and `q`, sharing one
/// eigendecomposition per matrix.
pub fn pair_gap(p: &SpdMatrix, q: &SpdMatrix, theta: f64) -> Result<(f64, f64)> {
    let (d_pem, d_lem) = pair_gaps(p, q, &[theta])?;
    Ok((d_pem[0], d_lem))
}

/// [`pair_gap`] for several deformation powers at once.
pub fn pair_gaps(p: &SpdMatrix, q: &SpdMatrix, thetas: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (ep, eq) = (sym_eig(&p.as_sym())?, sym_eig(&q.as_sym())?);
    if let Some(l) = ep.values.iter().chain(&eq.values).find(|&&l| !(l > 0.0)) {
        return Err(Error::numeric("pair_gap", format!("eigenvalue {l:.3e} is not positive")));
    }
    let w = ep.vectors.tr_matmul(&eq.vectors);
    let w2: Vec<f64> = w.as_slice().iter().map(|v| v * v).collect();
    // (λ^θ − 1)/θ differs from λ^θ/θ by a shared constant that cancels in the difference
    let d_pem = thetas
        .iter()
        .map(|&theta| spectral_distance(&ep, &eq, &w2, |l| (theta * l.ln()).exp_m1() / theta.abs()))
        .collect();
    Ok((d_pem, spectral_distance(&ep, &eq, &w2, f64::ln)))
}

fn summarize(cfg: DistGapConfig, gaps: &[PairGap]) -> DistGapSummary {
    let column = |f: fn(&PairGap) -> f64| gaps.iter().map(f).collect::<Vec<f64>>();
    let (mean_abs_diff, std_abs_diff) = stats(&column(|g| g.abs_diff));
    DistGapSummary {
        config: cfg,
        mean_abs_diff,
        std_abs_diff,
        mean_rel_diff: stats(&column(|g| g.abs_diff / g.d_lem)).0,
        mean_d_pem: stats(&column(|g| g.d_pem)).0,
        mean_d_lem: stats(&column(|g| g.d_lem)).0,
        reference_mean_gap: REFERENCE_MEAN_GAP,
        reference_std_gap: REFERENCE_STD_GAP,
        passed: mean_abs_diff > 0.0,
    }
}

pub fn run_distgap(cfg: &DistGapConfig) -> Result<(Vec<PairGap>, DistGapSummary)> {
    let mut runs = run_distgap_multi(cfg, &[cfg.theta])?;
    Ok(runs.remove(0))
}

/// Same pairs as `cfg`, evaluated for every power in `thetas` (`cfg.theta` is ignored).
pub fn run_distgap_multi(cfg: &DistGapConfig, thetas: &[f64]) -> Result<Vec<(Vec<PairGap>, DistGapSummary)>> {
    let configs: Vec<DistGapConfig> = thetas.iter().map(|&theta| DistGapConfig { theta, ..cfg.clone() }).collect();
    for c in &configs {
        c.validate()?;
    }
    let rows = run_parallel(|| {
        (0..cfg.pairs)
            .into_par_iter()
            .map(|pair_id| {
                let mut rng = trial_rng(cfg.seed, pair_id as u64);
                let p = cfg.sampler.draw(cfg.n, &mut rng);
                let q = cfg.sampler.draw(cfg.n, &mut rng);
                pair_gaps(&p, &q, thetas).map_err(|e| e.context(format!("pair {pair_id}")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(configs
        .into_iter()
        .enumerate()
        .map(|(t, c)| {
            let gaps: Vec<PairGap> = rows
                .iter()
                .enumerate()
                .map(|(pair_id, (d_pem, d_lem))| PairGap {
                    pair_id,
                    d_pem: d_pem[t],
                    d_lem: *d_lem,
                    abs_diff: (d_pem[t] - d_lem).abs(),
                })
                .collect();
            let summary = summarize(c, &gaps);
            (gaps, summary)
        })
        .collect())
}

pub fn gaps_csv(gaps: &[PairGap]) -> String {
    let mut out = String::from("pair_id,d_pem,d_lem,abs_diff\n");
    for g in gaps {
        writeln!(out, "{},{:?},{:?},{:?}", g.pair_id, g.d_pem, g.d_lem, g.abs_diff).expect("writing to a string");
    }
    out
}
