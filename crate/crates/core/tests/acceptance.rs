//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use spdcov::expcli::{check_logs, gbwm_aim, run_distgap_multi, CheckLogsConfig, DistGapConfig, GbwmAimConfig, Sampler};
use spdcov::gcp::{lr_grid_search, synth_dataset, train_with, BenchmarkShape, FcInit, TrainConfig, LR_GRID};
use spdcov::heads::{
    emlr_logits, head_backward, head_feature, head_forward, softmax_xent, spd_mlr_logits_pem, EuclideanMlrParams,
    HeadKind, HeadTag, SpdMlrParams,
};
use spdcov::optim::{powtmlr_divergence, scaled_init, scalepow_equivalence, theorem_equivalence, EquivInstance};
use spdcov::symlin::random::{random_spd_with_cond, random_symmetric, trial_rng};
use spdcov::symlin::{
    cholesky, dchol, dlog, dpow, lyapunov, mlog, mpow, newton_schulz_sqrt, rel_frobenius, spd_inverse, Matrix,
    SpdMatrix, SymMatrix,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

fn log_exp_suite() -> Verdict {
    let start = Instant::now();
    let r = check_logs(&CheckLogsConfig { n: 8, trials: 100, seed: 11, perturb: false }).expect("log suite runs");
    let t = start.elapsed();
    verdict(
        r.passed && within(t, 10),
        format!("{} checks over 7 families, max error {:.2e} (tol 1e-9), {:.2}s (budget 10s)", r.checks, r.max_error, t.as_secs_f64()),
    )
}

fn scalepow_pairing() -> Verdict {
    let start = Instant::now();
    let inst = EquivInstance::synthetic(8, 4, 5, 21);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for theta in [0.25, 0.5, 0.7] {
        let r = scalepow_equivalence(&inst, theta, 100, 0.05).expect("paired run");
        ok &= r.passed;
        worst = worst.max(r.max_param_dev).max(r.max_output_dev);

        // full pipeline from feature maps: same data, same shuffles, paired initializations
        let data = synth_dataset(4, 8, 16, 10, 1.0, 22).expect("synthetic data");
        let cfg = TrainConfig { head: HeadTag::PowEmlr, theta, epochs: 10, batch_size: 4, ..TrainConfig::default() };
        let mut rng = trial_rng(23, 0);
        let a0 = Matrix::from_fn(4, 64, |_, _| rng.random_range(-0.125..0.125));
        let (a_bar, lr_bar) = scaled_init(&a0, cfg.sgd.lr, theta).expect("scaled init");
        let pow_init = FcInit { weights: a0, bias: vec![0.0; 4] };
        let (pow, pow_rec) = train_with(&data, None, &cfg, Some(pow_init)).expect("pow run");
        let scaled_cfg = TrainConfig { head: HeadTag::ScalePowEmlr, weight_lr_scale: lr_bar / cfg.sgd.lr, ..cfg };
        let scaled_init_fc = FcInit { weights: a_bar, bias: vec![0.0; 4] };
        let (scaled, scaled_rec) = train_with(&data, None, &scaled_cfg, Some(scaled_init_fc)).expect("scalepow run");
        let relation = rel_frobenius(&pow.weights, &scaled.weights.scale(1.0 / theta));
        let loss_gap = pow_rec
            .epochs
            .iter()
            .zip(&scaled_rec.epochs)
            .map(|(a, b)| (a.train_loss - b.train_loss).abs())
            .fold(0.0, f64::max);
        ok &= relation <= 1e-6 && loss_gap <= 1e-6;
        worst = worst.max(relation).max(loss_gap);
    }
    let t = start.elapsed();
    verdict(
        ok && within(t, 30),
        format!("theta in {{0.25,0.5,0.7}}, 100 steps: max deviation {worst:.2e} (tol 1e-6), {:.2}s (budget 30s)", t.as_secs_f64()),
    )
}

fn rsgd_pairing() -> Verdict {
    let start = Instant::now();
    let inst = EquivInstance::synthetic(8, 4, 5, 31);
    let mut ok = true;
    let (mut param, mut logit): (f64, f64) = (0.0, 0.0);
    for theta in [0.25, 0.5, 1.0] {
        let r = theorem_equivalence(&inst, theta, 100, 0.05).expect("rsgd run");
        ok &= r.passed;
        param = param.max(r.max_param_dev);
        logit = logit.max(r.max_output_dev);
    }
    let t = start.elapsed();
    verdict(
        ok && within(t, 60),
        format!(
            "theta in {{0.25,0.5,1}}, 100 steps: anchor deviation {param:.2e}, logit deviation {logit:.2e} (tol 1e-8), {:.2}s (budget 60s)",
            t.as_secs_f64()
        ),
    )
}

fn powtmlr_non_equivalence() -> Verdict {
    let r = powtmlr_divergence(8, 4, 0.5, 0.1, 100, 41).expect("divergence run");
    let diverged = r.steps.iter().filter(|s| s.param_dev > 1e-6).count();
    verdict(r.passed && diverged >= 95, format!("{diverged}/100 instances diverge by more than 1e-6 (need 95)"))
}

fn gbwm_quarter_aim() -> Verdict {
    let start = Instant::now();
    let r = gbwm_aim(&GbwmAimConfig { n: 8, theta: None, trials: 100, seed: 51, perturb: false }).expect("gbwm run");
    let t = start.elapsed();
    verdict(
        r.passed && within(t, 5),
        format!("100 random (P,V,W,theta): max relative deviation {:.2e} (tol 1e-8), {:.2}s (budget 5s)", r.max_rel_dev, t.as_secs_f64()),
    )
}

fn distance_gap() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for sampler in [Sampler::Wishart, Sampler::Logexp] {
        let cfg = DistGapConfig { n: 256, pairs: 1000, theta: 0.5, sampler, seed: 61 };
        let runs = run_distgap_multi(&cfg, &[0.5, 1e-3]).expect("distance gap run");
        let (half, tiny) = (&runs[0].1, &runs[1].1);
        ok &= half.mean_abs_diff > 0.0 && tiny.mean_rel_diff < 1e-2;
        parts.push(format!(
            "{sampler:?}: mean gap {:.3} ± {:.3}, rel gap at 1e-3 {:.2e}",
            half.mean_abs_diff, half.std_abs_diff, tiny.mean_rel_diff
        ));
    }
    let t = start.elapsed();
    verdict(
        ok && within(t, 300),
        format!(
            "{} (reference 335.84 ± 1.61 logged only), {:.1}s (budget 300s)",
            parts.join("; "),
            t.as_secs_f64()
        ),
    )
}

fn rel_dir(fd: &Matrix, analytic: &Matrix) -> f64 {
    (fd - analytic).frobenius_norm() / analytic.frobenius_norm().max(1e-12)
}

fn central<F: Fn(&SpdMatrix) -> Matrix>(p: &SpdMatrix, v: &SymMatrix, h: f64, f: F) -> Matrix {
    let plus = SpdMatrix::new(p.as_matrix() + &v.as_matrix().scale(h)).expect("SPD perturbation");
    let minus = SpdMatrix::new(p.as_matrix() - &v.as_matrix().scale(h)).expect("SPD perturbation");
    (&f(&plus) - &f(&minus)).scale(1.0 / (2.0 * h))
}

fn gradient_suite() -> Verdict {
    let n = 6;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    let mut note = |name: String, err: f64| {
        if err > worst {
            worst = err;
            worst_name = name;
        }
    };
    for (trial, cond) in [10.0, 1e2, 1e3, 1e4].into_iter().enumerate() {
        let mut rng = trial_rng(71, trial as u64);
        let p = random_spd_with_cond(n, cond, &mut rng);
        let v = random_symmetric(n, &mut rng);
        let v = v.scale(1.0 / v.frobenius_norm());

        for theta in [0.5, -1.0, 1.5, 0.25] {
            let an = dpow(&p, theta, &v).expect("dpow").into_matrix();
            let fd = central(&p, &v, h, |q| mpow(q, theta).expect("pow").into_matrix());
            note(format!("dpow({theta}) cond {cond:e}"), rel_dir(&fd, &an));
        }
        let an = dlog(&p, &v).expect("dlog").into_matrix();
        note(format!("dlog cond {cond:e}"), rel_dir(&central(&p, &v, h, |q| mlog(q).expect("log").into_matrix()), &an));

        let root = mpow(&p, 0.5).expect("sqrt");
        let an = lyapunov(&root, &v).expect("lyapunov").into_matrix();
        let fd = central(&p, &v, h, |q| mpow(q, 0.5).expect("sqrt").into_matrix());
        note(format!("dsqrt cond {cond:e}"), rel_dir(&fd, &an));

        let an = dchol(&p, &v).expect("dchol").into_matrix();
        let fd = central(&p, &v, h, |q| cholesky(q).expect("chol").into_matrix());
        note(format!("dchol cond {cond:e}"), rel_dir(&fd, &an));

        let classes = 3;
        let a = Matrix::from_fn(classes, n * n, |_, _| rng.random_range(-0.3..0.3));
        let b: Vec<f64> = (0..classes).map(|_| rng.random_range(-0.1..0.1)).collect();
        for tag in HeadTag::ALL {
            let mut kind = HeadKind::new(tag, 0.5);
            if tag == HeadTag::PowEmlrPrime {
                kind.shared_p = Some(random_symmetric(n, &mut rng).scale(0.1));
            }
            let loss = |q: &SpdMatrix, a: &Matrix| {
                let z = head_forward(&kind, q, a, &b).expect("forward");
                softmax_xent(&z, 1).expect("loss").0
            };
            let cache = head_feature(&kind, &p).expect("feature");
            let z = head_forward(&kind, &p, &a, &b).expect("forward");
            let (_, g) = softmax_xent(&z, 1).expect("loss");
            let grads = head_backward(&kind, &cache, &a, &g, true).expect("backward");

            let analytic = grads.input.expect("input gradient").frob_dot(&v);
            let plus = SpdMatrix::new(p.as_matrix() + &v.as_matrix().scale(h)).expect("SPD");
            let minus = SpdMatrix::new(p.as_matrix() - &v.as_matrix().scale(h)).expect("SPD");
            let fd = (loss(&plus, &a) - loss(&minus, &a)) / (2.0 * h);
            note(format!("{tag} input cond {cond:e}"), (fd - analytic).abs() / analytic.abs().max(1e-8));

            let dir = Matrix::from_fn(classes, n * n, |_, _| rng.random_range(-1.0..1.0));
            let analytic = grads.weights.frob_dot(&dir);
            let (mut ap, mut am) = (a.clone(), a.clone());
            ap.axpy(1e-6, &dir);
            am.axpy(-1e-6, &dir);
            let fd = (loss(&p, &ap) - loss(&p, &am)) / 2e-6;
            note(format!("{tag} weights cond {cond:e}"), (fd - analytic).abs() / analytic.abs().max(1e-8));
        }
    }
    verdict(worst < 1e-5, format!("pow/log/sqrt/chol differentials and 6 heads, cond up to 1e4: worst {worst:.2e} ({worst_name}), tol 1e-5"))
}

fn newton_schulz_vs_eig() -> Verdict {
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = trial_rng(81, trial);
        let cond = rng.random_range(1.0..100.0);
        let p = random_spd_with_cond(16, cond, &mut rng);
        let ns = newton_schulz_sqrt(&p, 15).expect("newton-schulz");
        let exact = mpow(&p, 0.5).expect("eig sqrt");
        worst = worst.max(rel_frobenius(ns.as_matrix(), exact.as_matrix()));
    }
    verdict(worst < 1e-6, format!("100 random 16x16, cond <= 100, 15 iterations: worst relative error {worst:.2e} (tol 1e-6)"))
}

fn toy_benchmark_trend() -> Verdict {
    let start = Instant::now();
    let shape = BenchmarkShape::default();
    let heads = [HeadTag::PowEmlr, HeadTag::PowTmlr, HeadTag::ScalePowEmlr];
    let mut means = [0.0; 3];
    let seeds = 10;
    for seed in 0..seeds {
        let (train, val, test) = shape.generate(1000 + seed).expect("benchmark data");
        for (i, head) in heads.iter().enumerate() {
            let mut cfg = TrainConfig { head: *head, ..TrainConfig::default() };
            cfg.sgd.seed = seed;
            let r = lr_grid_search(&train, &val, &test, &cfg, &LR_GRID).expect("grid search");
            means[i] += r.test_top1 / seeds as f64;
        }
    }
    let t = start.elapsed();
    let [pow, tmlr, scaled] = means;
    verdict(
        pow >= tmlr && (pow - scaled).abs() <= 0.03 && within(t, 600),
        format!(
            "10 seeds, mean test top-1: pow {pow:.4}, powtmlr {tmlr:.4}, scalepow {scaled:.4}; {:.1}s (budget 600s)",
            t.as_secs_f64()
        ),
    )
}

fn inverse_covariance_head() -> Verdict {
    let n = 5;
    let classes = 4;
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let mut rng = trial_rng(91, trial);
        let anchors: Vec<SpdMatrix> = (0..classes).map(|_| random_spd_with_cond(n, 50.0, &mut rng)).collect();
        let directions: Vec<SymMatrix> = (0..classes).map(|_| random_symmetric(n, &mut rng)).collect();
        let s = random_spd_with_cond(n, 50.0, &mut rng);
        let params = SpdMlrParams::new(anchors.clone(), directions.clone()).expect("params");
        let z = spd_mlr_logits_pem(&s, &params, -1.0, 1.0, 0.0).expect("logits");

        // Euclidean MLR on vec(S⁻¹) with bias ⟨P_k⁻¹, A_k⟩, inverses via Cholesky
        let x = spd_inverse(&s).expect("inverse").into_matrix().into_vec();
        let biases: Vec<f64> = anchors
            .iter()
            .zip(&directions)
            .map(|(p, a)| spd_inverse(p).expect("inverse").as_matrix().frob_dot(a.as_matrix()))
            .collect();
        let euc = EuclideanMlrParams::new(directions.iter().map(|a| a.as_matrix().as_slice().to_vec()).collect(), biases)
            .expect("euclidean params");
        let want = emlr_logits(&x, &euc).expect("euclidean logits");
        for (got, want) in z.iter().zip(&want) {
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    verdict(worst <= 1e-10, format!("20 random instances: worst logit gap {worst:.2e} (tol 1e-10)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("log/exp closed forms and round trips, all families", log_exp_suite),
        ("power vs scaled-power paired training", scalepow_pairing),
        ("RSGD SPD MLR vs Euclidean MLR in the power codomain", rsgd_pairing),
        ("Pow-TMLR one-step update is not a reparameterization", powtmlr_non_equivalence),
        ("deformed GBWM equals a quarter of deformed AIM", gbwm_quarter_aim),
        ("power vs log-Euclidean distance gap at n=256", distance_gap),
        ("differentials and head gradients vs finite differences", gradient_suite),
        ("Newton-Schulz vs eigendecomposition square root", newton_schulz_vs_eig),
        ("toy benchmark ordering", toy_benchmark_trend),
        ("theta = -1 SPD MLR is the inverse-covariance MLR", inverse_covariance_head),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        println!("[{:>2}] {} {name}: {}", i + 1, if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
