use super::spec::MetricSpec;
use super::{check_same_n, commutator_check, eig_of, spd_from_eig, sqrt_of_product};
use crate::error::{Error, Result};
use crate::symlin::{cholesky, mlog, mpow, sym_eig, SpdMatrix, SymMatrix};

/// Geodesic distance in closed form.
///
/// MPEM is supported only for commuting pairs, and GBWM only with an explicit
/// weight `M`, where it reduces to BWM after the congruence by `M^{-1/2}`.
pub fn geodesic_dist(spec: &MetricSpec, p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    let n = p.n();
    spec.validate(n)?;
    check_same_n("geodesic_dist", n, q.n())?;
    let (alpha, beta) = spec.alpha_beta();
    let ab_norm = |d: &SymMatrix| (alpha * d.frob_dot(d) + beta * d.trace() * d.trace()).max(0.0).sqrt();
    match *spec {
        MetricSpec::Lem { .. } => Ok(ab_norm(&mlog(p)?.sub(&mlog(q)?))),
        MetricSpec::Em { theta, .. } => {
            let d = mpow(p, theta)?.as_sym().sub(&mpow(q, theta)?.as_sym());
            Ok(ab_norm(&d) / theta.abs())
        }
        MetricSpec::Aim { theta, .. } => {
            let (a, b) = (mpow(p, theta)?, mpow(q, theta)?);
            let eig = eig_of(&a)?;
            let ihalf = spd_from_eig(&eig, |l| 1.0 / l.sqrt());
            let inner = SymMatrix::from_matrix_unchecked(ihalf.as_matrix().matmul(b.as_matrix()).matmul(ihalf.as_matrix()));
            let logs: Vec<f64> = sym_eig(&inner)?.values.iter().map(|m| m.ln()).collect();
            let sq: f64 = logs.iter().map(|l| l * l).sum();
            let tr: f64 = logs.iter().sum();
            Ok((alpha * sq + beta * tr * tr).max(0.0).sqrt() / theta.abs())
        }
        MetricSpec::Lcm { theta } => {
            let (l, k) = (cholesky(&mpow(p, theta)?)?, cholesky(&mpow(q, theta)?)?);
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..i {
                    let d = k[(i, j)] - l[(i, j)];
                    s += d * d;
                }
                let d = (k[(i, i)] / l[(i, i)]).ln();
                s += d * d;
            }
            Ok(s.sqrt() / theta.abs())
        }
        MetricSpec::Bwm { theta } => {
            let (a, b) = (mpow(p, 2.0 * theta)?, mpow(q, 2.0 * theta)?);
            Ok(bures_wasserstein(&a, &b)? / (2.0 * theta.abs()))
        }
        MetricSpec::Gbwm { theta, m: Some(ref m) } => {
            let eig = eig_of(m)?;
            let ihalf = spd_from_eig(&eig, |l| 1.0 / l.sqrt());
            let cong = |x: &SpdMatrix| {
                SpdMatrix::new(ihalf.as_matrix().matmul(x.as_matrix()).matmul(ihalf.as_matrix()).symmetrized())
            };
            let (a, b) = (cong(&mpow(p, 2.0 * theta)?)?, cong(&mpow(q, 2.0 * theta)?)?);
            Ok(bures_wasserstein(&a, &b)? / (2.0 * theta.abs()))
        }
        MetricSpec::Gbwm { m: None, .. } => Err(Error::Unsupported(
            "GBWM distance needs a fixed weight M; the basepoint-dependent weight has no closed form".into(),
        )),
        MetricSpec::Mpem { .. } => {
            commutator_check(p, q).map_err(|e| Error::Unsupported(format!("MPEM distance for non-commuting pair ({e})")))?;
            let t0 = spec.theta0().expect("power family");
            let d = mpow(p, t0)?.as_sym().sub(&mpow(q, t0)?.as_sym());
            Ok(d.frobenius_norm() / t0.abs())
        }
    }
}

/// `tr A + tr B − 2 tr (A^{1/2} B A^{1/2})^{1/2}`, square-rooted.
fn bures_wasserstein(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    // tr (AB)^{1/2} = tr (A^{1/2} B A^{1/2})^{1/2}
    let cross = sqrt_of_product(a, b)?.trace();
    Ok((a.trace() + b.trace() - 2.0 * cross).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::testutil::random_spd;

    fn supported(n: usize) -> Vec<MetricSpec> {
        vec![
            MetricSpec::Lem { alpha: 1.0, beta: 0.3 },
            MetricSpec::Aim { theta: 0.5, alpha: 1.0, beta: 0.1 },
            MetricSpec::Em { theta: 0.5, alpha: 1.0, beta: 0.0 },
            MetricSpec::Lcm { theta: 0.5 },
            MetricSpec::Bwm { theta: 0.5 },
            MetricSpec::Gbwm { theta: 0.5, m: Some(random_spd(n, 5.0, 50)) },
        ]
    }

    #[test]
    fn zero_on_diagonal_and_symmetric() {
        let (p, q) = (random_spd(5, 100.0, 1), random_spd(5, 100.0, 2));
        for spec in supported(5) {
            assert!(geodesic_dist(&spec, &p, &p).unwrap() < 1e-7, "{spec}");
            let (a, b) = (geodesic_dist(&spec, &p, &q).unwrap(), geodesic_dist(&spec, &q, &p).unwrap());
            assert!(a > 0.0 && (a - b).abs() < 1e-9 * a, "{spec}: {a} vs {b}");
        }
    }

    #[test]
    fn hand_examples() {
        let p = SpdMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let i = SpdMatrix::identity(2);
        let pem = geodesic_dist(&MetricSpec::pem(0.5), &p, &i).unwrap();
        let lem = geodesic_dist(&MetricSpec::lem(), &p, &i).unwrap();
        assert!((pem - 2.0).abs() < 1e-14);
        assert!((lem - 4f64.ln()).abs() < 1e-14);
        assert!((pem - lem - 0.6137).abs() < 1e-4);
    }

    #[test]
    fn deformation_limit() {
        for seed in 0..5 {
            let (p, q) = (random_spd(6, 100.0, seed), random_spd(6, 100.0, seed + 10));
            let lem = geodesic_dist(&MetricSpec::lem(), &p, &q).unwrap();
            for spec in [MetricSpec::pem(1e-3), MetricSpec::aim(1e-3)] {
                let d = geodesic_dist(&spec, &p, &q).unwrap();
                assert!((d - lem).abs() / lem < 1e-2, "{spec}: {d} vs {lem}");
            }
        }
    }

    #[test]
    fn bwm_commuting_closed_form() {
        // for commuting pairs d_BW(A,B) = ‖A^{1/2} − B^{1/2}‖_F
        let a = SpdMatrix::from_diag(&[4.0, 9.0]).unwrap();
        let b = SpdMatrix::from_diag(&[1.0, 16.0]).unwrap();
        let d = geodesic_dist(&MetricSpec::Bwm { theta: 0.5 }, &a, &b).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unsupported_cases() {
        let (p, q) = (random_spd(4, 10.0, 3), random_spd(4, 10.0, 4));
        let gb = MetricSpec::Gbwm { theta: 0.5, m: None };
        assert!(matches!(geodesic_dist(&gb, &p, &q), Err(Error::Unsupported(_))));
        let mp = MetricSpec::Mpem { theta1: 0.5, theta2: 1.0 };
        assert!(matches!(geodesic_dist(&mp, &p, &q), Err(Error::Unsupported(_))));
        assert!(geodesic_dist(&mp, &SpdMatrix::identity(4), &q).is_ok());
    }
}
