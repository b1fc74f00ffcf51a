use super::spec::MetricSpec;
use super::{check_same_n, eig_of, spd_from_eig};
use crate::error::Result;
use crate::symlin::funcs::{apply_loewner, spectral_loewner};
use crate::symlin::{cholesky, dchol_with_factor, gen_lyapunov, lyapunov, mpow, SpdMatrix, SpectralFn, SymMatrix};

/// Evaluates the metric tensor `g_P(V, W)`.
pub fn metric_at(spec: &MetricSpec, p: &SpdMatrix, v: &SymMatrix, w: &SymMatrix) -> Result<f64> {
    let n = p.n();
    spec.validate(n)?;
    check_same_n("metric_at", n, v.n())?;
    check_same_n("metric_at", n, w.n())?;
    let (alpha, beta) = spec.alpha_beta();
    let eig = eig_of(p)?;

    if let MetricSpec::Lem { .. } = spec {
        let kernel = spectral_loewner(&eig.values, SpectralFn::Log);
        let (dv, dw) = (apply_loewner(&eig, &kernel, v), apply_loewner(&eig, &kernel, w));
        return Ok(alpha * dv.frob_dot(&dw) + beta * dv.trace() * dw.trace());
    }
    if let MetricSpec::Mpem { theta1, theta2 } = *spec {
        let dv = apply_loewner(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(theta1)), v);
        let dw = apply_loewner(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(theta2)), w);
        return Ok(dv.frob_dot(&dw) / (theta1 * theta2));
    }

    let pw = spec.deformation_power().expect("deformed family");
    let kernel = spectral_loewner(&eig.values, SpectralFn::Pow(pw));
    let (vt, wt) = (apply_loewner(&eig, &kernel, v), apply_loewner(&eig, &kernel, w));
    let base = spd_from_eig(&eig, |l| l.powf(pw));
    let g = match spec {
        MetricSpec::Aim { .. } => {
            let inv = spd_from_eig(&eig, |l| l.powf(-pw));
            let a = inv.as_matrix().matmul(vt.as_matrix());
            let b = inv.as_matrix().matmul(wt.as_matrix());
            alpha * a.matmul(&b).trace() + beta * a.trace() * b.trace()
        }
        MetricSpec::Em { .. } => alpha * vt.frob_dot(&wt) + beta * vt.trace() * wt.trace(),
        MetricSpec::Lcm { .. } => {
            let l = cholesky(&base)?;
            let (xv, xw) = (dchol_with_factor(&l, &vt), dchol_with_factor(&l, &wt));
            let (xv, xw) = (xv.as_matrix(), xw.as_matrix());
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..i {
                    s += xv[(i, j)] * xw[(i, j)];
                }
                s += xv[(i, i)] * xw[(i, i)] / (l[(i, i)] * l[(i, i)]);
            }
            s
        }
        MetricSpec::Bwm { .. } => 0.5 * lyapunov(&base, &vt)?.frob_dot(&wt),
        MetricSpec::Gbwm { m, .. } => {
            let m = m.as_ref().unwrap_or(&base);
            0.5 * gen_lyapunov(&base, m, &vt)?.frob_dot(&wt)
        }
        MetricSpec::Lem { .. } | MetricSpec::Mpem { .. } => unreachable!(),
    };
    Ok(g / (pw * pw))
}

/// Returns `(g^GBWM_P(V,W), ¼·g^AIM_P(V,W))` for the `(2θ, P^{2θ})`-GBWM and the
/// `(2θ,1,0)`-AIM; the two agree identically.
pub fn gbwm_aim_check(theta: f64, p: &SpdMatrix, v: &SymMatrix, w: &SymMatrix) -> Result<(f64, f64)> {
    let m = mpow(p, 2.0 * theta)?;
    let gbwm = metric_at(&MetricSpec::Gbwm { theta, m: Some(m) }, p, v, w)?;
    let aim = metric_at(&MetricSpec::aim(2.0 * theta), p, v, w)?;
    Ok((gbwm, 0.25 * aim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::dpow;
    use crate::symlin::testutil::{random_spd, random_sym};

    fn all_specs(n: usize) -> Vec<MetricSpec> {
        vec![
            MetricSpec::Lem { alpha: 1.3, beta: 0.2 },
            MetricSpec::Aim { theta: 0.7, alpha: 1.0, beta: -0.1 },
            MetricSpec::Em { theta: 0.5, alpha: 2.0, beta: 0.3 },
            MetricSpec::Mpem { theta1: 0.5, theta2: 1.5 },
            MetricSpec::Lcm { theta: 0.5 },
            MetricSpec::Bwm { theta: 0.5 },
            MetricSpec::Gbwm { theta: 0.5, m: None },
            MetricSpec::Gbwm { theta: 0.5, m: Some(random_spd(n, 10.0, 99)) },
        ]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn lem_at_identity_is_frobenius() {
        let (v, w) = (random_sym(4, 1), random_sym(4, 2));
        let g = metric_at(&MetricSpec::lem(), &SpdMatrix::identity(4), &v, &w).unwrap();
        assert!(close(g, v.frob_dot(&w), 1e-14));
    }

    #[test]
    fn bwm_at_identity_is_quarter_frobenius() {
        let (v, w) = (random_sym(4, 3), random_sym(4, 4));
        for theta in [0.5, 1.0] {
            let g = metric_at(&MetricSpec::Bwm { theta }, &SpdMatrix::identity(4), &v, &w).unwrap();
            // pow_{2θ} differential at I is 2θ·id, cancelling the 1/(4θ²) scale
            assert!(close(g, v.frob_dot(&w) / 4.0, 1e-13));
        }
    }

    #[test]
    fn em_expands_to_scaled_power_differential() {
        let p = random_spd(5, 50.0, 5);
        let v = random_sym(5, 6);
        let theta = 0.3;
        let g = metric_at(&MetricSpec::pem(theta), &p, &v, &v).unwrap();
        let d = dpow(&p, theta, &v).unwrap();
        assert!(close(g, d.frob_dot(&d) / (theta * theta), 1e-12));
    }

    #[test]
    fn symmetric_bilinear_positive() {
        let n = 5;
        let p = random_spd(n, 30.0, 7);
        let (v, w, u) = (random_sym(n, 8), random_sym(n, 9), random_sym(n, 10));
        for spec in all_specs(n) {
            let g = |a: &SymMatrix, b: &SymMatrix| metric_at(&spec, &p, a, b).unwrap();
            let (gvw, gwv) = (g(&v, &w), g(&w, &v));
            assert!(close(gvw, gwv, 1e-10), "{spec}: {gvw} vs {gwv}");
            let combo = v.scale(0.3).add(&u.scale(-1.7));
            assert!(close(g(&combo, &w), 0.3 * gvw - 1.7 * g(&u, &w), 1e-10), "{spec}");
            assert!(g(&v, &v) > 0.0, "{spec}");
        }
    }

    #[test]
    fn gbwm_matches_quarter_aim() {
        let n = 3;
        let i = SpdMatrix::identity(n);
        let ident = SymMatrix::identity(n);
        let (a, b) = gbwm_aim_check(0.5, &i, &ident, &ident).unwrap();
        assert!(close(a, n as f64 / 4.0, 1e-14) && close(b, n as f64 / 4.0, 1e-14));

        for seed in 0..10 {
            let p = random_spd(6, 50.0, seed);
            let (v, w) = (random_sym(6, seed + 20), random_sym(6, seed + 40));
            for theta in [0.25, 0.5, 1.0] {
                let (a, b) = gbwm_aim_check(theta, &p, &v, &w).unwrap();
                assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()), "θ={theta}: {a} vs {b}");
            }
        }
    }
}
