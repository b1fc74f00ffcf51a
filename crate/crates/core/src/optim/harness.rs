use rand::Rng;
use serde::Serialize;

use super::{phi, scaled_init, sgd_step, sgd_step_matrix, RsgdState};
use crate::error::{Error, Result};
use crate::heads::{
    emlr_logits_anchor, head_backward, head_feature, fc_forward, softmax_xent, spd_mlr_logits_pem, HeadKind, HeadTag,
    SpdMlrParams,
};
use crate::manifold::MetricSpec;
use crate::symlin::random::{log_exp_spd, random_symmetric, trial_rng};
use crate::symlin::{dpow, mexp, Matrix, SpdMatrix, SymMatrix};

/// A small labelled set of SPD inputs for the paired-run harnesses.
#[derive(Clone, Debug)]
pub struct EquivInstance {
    pub inputs: Vec<SpdMatrix>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub seed: u64,
}

impl EquivInstance {
    /// `per_class` inputs `exp(B_c + 0.3·E)` for each of `classes` random class centres `B_c`.
    pub fn synthetic(n: usize, classes: usize, per_class: usize, seed: u64) -> Self {
        let mut rng = trial_rng(seed, 0);
        let scale = 1.0 / (n as f64).sqrt();
        let centres: Vec<SymMatrix> = (0..classes).map(|_| random_symmetric(n, &mut rng).scale(scale)).collect();
        let (mut inputs, mut labels) = (Vec::new(), Vec::new());
        for _ in 0..per_class {
            for (c, centre) in centres.iter().enumerate() {
                let noise = random_symmetric(n, &mut rng).scale(0.3 * scale);
                inputs.push(mexp(&centre.add(&noise)).expect("exponential of a symmetric matrix"));
                labels.push(c);
            }
        }
        Self { inputs, labels, classes, seed }
    }

    pub fn n(&self) -> usize {
        self.inputs[0].n()
    }

    fn sample(&self, step: usize) -> (&SpdMatrix, usize) {
        let i = step % self.inputs.len();
        (&self.inputs[i], self.labels[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDeviation {
    pub step: usize,
    /// Parameter-relation deviation after the step.
    pub param_dev: f64,
    /// Loss or logit deviation observed at the step.
    pub output_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivReport {
    pub which: String,
    pub theta: f64,
    pub lr: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub steps: Vec<StepDeviation>,
    pub max_param_dev: f64,
    pub max_output_dev: f64,
    pub passed: bool,
    /// First step whose deviation breaks the tolerance (equivalence modes only).
    pub first_violation: Option<usize>,
}

fn finish(which: &str, theta: f64, lr: f64, seed: u64, tolerance: f64, steps: Vec<StepDeviation>) -> EquivReport {
    let max_param_dev = steps.iter().map(|s| s.param_dev).fold(0.0, f64::max);
    let max_output_dev = steps.iter().map(|s| s.output_dev).fold(0.0, f64::max);
    let first_violation = steps
        .iter()
        .find(|s| !(s.param_dev <= tolerance && s.output_dev <= tolerance))
        .map(|s| s.step);
    EquivReport {
        which: which.into(),
        theta,
        lr,
        seed,
        tolerance,
        passed: first_violation.is_none(),
        steps,
        max_param_dev,
        max_output_dev,
        first_violation,
    }
}

fn uniform_matrix(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

struct FcState {
    a: Matrix,
    b: Vec<f64>,
}

impl FcState {
    /// One SGD step on one sample; returns the loss before the step.
    fn step(&mut self, kind: &HeadKind, s: &SpdMatrix, label: usize, weight_lr: f64, bias_lr: f64) -> Result<f64> {
        let cache = head_feature(kind, s)?;
        let logits = fc_forward(kind, &cache.feature, &self.a, &self.b)?;
        let (loss, g) = softmax_xent(&logits, label)?;
        let grads = head_backward(kind, &cache, &self.a, &g, false)?;
        sgd_step_matrix(&mut self.a, &grads.weights, weight_lr)?;
        self.b = sgd_step(&self.b, &grads.bias, bias_lr)?;
        Ok(loss)
    }
}

/// Paired power / scaled-power runs started from `scaled_init`; checks `A_t = Ā_t/θ`
/// (relative Frobenius) and equal losses at every step.
pub fn scalepow_equivalence(inst: &EquivInstance, theta: f64, steps: usize, lr: f64) -> Result<EquivReport> {
    let n = inst.n();
    let mut rng = trial_rng(inst.seed, 1);
    let fan_in = (n * n) as f64;
    let a0 = uniform_matrix(inst.classes, n * n, 1.0 / fan_in.sqrt(), &mut rng);
    let b0: Vec<f64> = (0..inst.classes).map(|_| rng.random_range(-0.1..0.1)).collect();
    let (a_bar, lr_bar) = scaled_init(&a0, lr, theta)?;
    let pow_kind = HeadKind::new(HeadTag::PowEmlr, theta);
    let scale_kind = HeadKind::new(HeadTag::ScalePowEmlr, theta);
    let mut pow = FcState { a: a0, b: b0.clone() };
    let mut scaled = FcState { a: a_bar, b: b0 };

    let mut devs = Vec::with_capacity(steps);
    for t in 0..steps {
        let (s, label) = inst.sample(t);
        let l1 = pow.step(&pow_kind, s, label, lr, lr)?;
        let l2 = scaled.step(&scale_kind, s, label, lr_bar, lr)?;
        let relation = (&pow.a - &scaled.a.scale(1.0 / theta)).frobenius_norm() / pow.a.frobenius_norm();
        let bias_gap = pow.b.iter().zip(&scaled.b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        devs.push(StepDeviation { step: t, param_dev: relation.max(bias_gap), output_dev: (l1 - l2).abs() });
    }
    Ok(finish("scalepow", theta, lr, inst.seed, 1e-6, devs))
}

/// SPD MLR under `(θ,1,0)`-EM trained with RSGD, paired with a Euclidean MLR on
/// `φ_θ(S) = S^θ/|θ|` whose anchors start at `φ_θ(P_k)`.  The parameter deviation
/// is `max_k ‖φ_θ(P_k) − P̄_k‖_F / (1 + ‖P̄_k‖_F)`; the output deviation is the
/// largest logit difference.
pub fn theorem_equivalence(inst: &EquivInstance, theta: f64, steps: usize, lr: f64) -> Result<EquivReport> {
    let n = inst.n();
    let c = inst.classes;
    let mut rng = trial_rng(inst.seed, 2);
    let anchors: Vec<SpdMatrix> = (0..c).map(|_| log_exp_spd(n, 0.3, &mut rng)).collect();
    let directions: Vec<SymMatrix> = (0..c).map(|_| random_symmetric(n, &mut rng).scale(0.3)).collect();

    let mut euc_anchors: Vec<Vec<f64>> =
        anchors.iter().map(|p| Ok(phi(p, theta)?.into_matrix().into_vec())).collect::<Result<_>>()?;
    let mut euc_dirs: Vec<Vec<f64>> = directions.iter().map(|a| a.as_matrix().as_slice().to_vec()).collect();
    let mut state = RsgdState { spec: MetricSpec::pem(theta), anchors, directions };

    let mut devs = Vec::with_capacity(steps);
    for t in 0..steps {
        let (s, label) = inst.sample(t);
        let params = SpdMlrParams::new(state.anchors.clone(), state.directions.clone())?;
        let z_spd = spd_mlr_logits_pem(s, &params, theta, 1.0, 0.0)?;
        let phi_s = phi(s, theta)?;
        let x = phi_s.as_matrix().as_slice();
        let z_euc = emlr_logits_anchor(x, &euc_anchors, &euc_dirs)?;
        let logit_dev = z_spd.iter().zip(&z_euc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

        let (_, g) = softmax_xent(&z_spd, label)?;
        let (_, g_euc) = softmax_xent(&z_euc, label)?;

        let mut anchor_grads = Vec::with_capacity(c);
        let mut dir_grads = Vec::with_capacity(c);
        for k in 0..c {
            let p = &state.anchors[k];
            anchor_grads.push(dpow(p, theta, &state.directions[k])?.scale(-g[k] / theta.abs()));
            dir_grads.push(phi_s.sub(&phi(p, theta)?).scale(g[k]));
        }
        state.step(&anchor_grads, &dir_grads, lr)?;

        for k in 0..c {
            let ga: Vec<f64> = euc_dirs[k].iter().map(|a| -g_euc[k] * a).collect();
            let gd: Vec<f64> = x.iter().zip(&euc_anchors[k]).map(|(xi, pi)| g_euc[k] * (xi - pi)).collect();
            euc_anchors[k] = sgd_step(&euc_anchors[k], &ga, lr)?;
            euc_dirs[k] = sgd_step(&euc_dirs[k], &gd, lr)?;
        }

        let mut param_dev: f64 = 0.0;
        for k in 0..c {
            let pk = phi(&state.anchors[k], theta)?;
            let bar = Matrix::new(n, n, euc_anchors[k].clone())?;
            let dev = (pk.as_matrix() - &bar).frobenius_norm() / (1.0 + bar.frobenius_norm());
            param_dev = param_dev.max(dev);
        }
        devs.push(StepDeviation { step: t, param_dev, output_dev: logit_dev });
    }
    Ok(finish("rsgd", theta, lr, inst.seed, 1e-8, devs))
}

/// One Pow-TMLR step versus one step of the Pow-EMLR it rewrites to
/// (`Ã = A/θ`, `b̃ = b − A·vec(I)/θ`, weight rate `lr/θ²`), on `trials` random
/// instances. `param_dev` is the largest entry gap of the implied `(Ã, b̃)`;
/// the report passes when at least 95% of trials diverge by more than `1e-6`.
pub fn powtmlr_divergence(n: usize, classes: usize, theta: f64, lr: f64, trials: usize, seed: u64) -> Result<EquivReport> {
    if theta == 0.0 {
        return Err(Error::Config("powtmlr divergence needs theta != 0".into()));
    }
    let tmlr_kind = HeadKind::new(HeadTag::PowTmlr, theta);
    let emlr_kind = HeadKind::new(HeadTag::PowEmlr, theta);
    let vec_i = Matrix::identity(n).into_vec();
    let mut devs = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = trial_rng(seed, 100 + t as u64);
        let s = log_exp_spd(n, 1.0, &mut rng);
        let label = rng.random_range(0..classes);
        let a = uniform_matrix(classes, n * n, 1.0 / n as f64, &mut rng);
        let b: Vec<f64> = (0..classes).map(|_| rng.random_range(-0.1..0.1)).collect();

        let rewrite = |a: &Matrix, b: &[f64]| -> (Matrix, Vec<f64>) {
            let a_t = a.scale(1.0 / theta);
            let shift = a_t.mat_vec(&vec_i);
            (a_t, b.iter().zip(&shift).map(|(bk, sk)| bk - sk).collect())
        };
        let (a_tilde, b_tilde) = rewrite(&a, &b);

        let mut tmlr = FcState { a, b };
        tmlr.step(&tmlr_kind, &s, label, lr, lr)?;
        let (implied_a, implied_b) = rewrite(&tmlr.a, &tmlr.b);

        let mut emlr = FcState { a: a_tilde, b: b_tilde };
        emlr.step(&emlr_kind, &s, label, lr / (theta * theta), lr)?;

        let weight_gap = (&implied_a - &emlr.a).max_abs();
        let bias_gap = implied_b.iter().zip(&emlr.b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        devs.push(StepDeviation { step: t, param_dev: weight_gap.max(bias_gap), output_dev: 0.0 });
    }
    let diverged = devs.iter().filter(|d| d.param_dev > 1e-6).count();
    let mut report = finish("powtmlr", theta, lr, seed, 1e-6, devs);
    report.passed = diverged * 100 >= 95 * trials;
    report.first_violation = report.steps.iter().find(|d| d.param_dev <= 1e-6).map(|d| d.step);
    Ok(report)
}
