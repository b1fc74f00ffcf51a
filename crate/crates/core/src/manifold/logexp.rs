use super::spec::{MetricSpec, TangentAt};
use super::{check_same_n, commutator_check, eig_of, spd_from_eig, sqrt_of_product, sym_from_eig};
use crate::error::{Error, Result};
use crate::symlin::funcs::{apply_loewner, apply_loewner_inverse, spectral_loewner};
use crate::symlin::{
    cholesky, dchol_inverse, diag_part, dlog_diag, gen_lyapunov, mexp, mlog, mpow, spd_inverse, strict_lower, sym_eig,
    LowerTri, Matrix, SpdMatrix, SpectralFn, SymMatrix,
};

/// Riemannian logarithm at the identity in closed form.
pub fn rielog_identity(spec: &MetricSpec, p: &SpdMatrix) -> Result<SymMatrix> {
    let n = p.n();
    spec.validate(n)?;
    match spec {
        MetricSpec::Lem { .. } | MetricSpec::Aim { .. } => mlog(p),
        MetricSpec::Lcm { theta } => {
            let lt = cholesky(&mpow(p, *theta)?)?;
            let low = strict_lower(lt.as_matrix());
            let mut x = &low + &low.transpose();
            x.axpy(2.0, &dlog_diag(lt.as_matrix())?);
            Ok(SymMatrix::from_matrix_unchecked(x.scale(1.0 / theta)))
        }
        MetricSpec::Gbwm { theta, m: Some(m) } => {
            check_same_n("rielog_identity", n, m.n())?;
            // log at I of the base GBWM is R M + M R − 2I, R = (M⁻¹ Q M⁻¹)^{1/2}
            let q = mpow(p, 2.0 * theta)?;
            let minv = spd_inverse(m)?;
            let inner = SpdMatrix::from_matrix_unchecked(
                minv.as_matrix().matmul(q.as_matrix()).matmul(minv.as_matrix()).symmetrized(),
            );
            let r = mpow(&inner, 0.5)?;
            let rm = r.as_matrix().matmul(m.as_matrix());
            let mut x = &rm + &rm.transpose();
            x.axpy(-2.0, &Matrix::identity(n));
            Ok(SymMatrix::from_matrix_unchecked(x.scale(1.0 / (2.0 * theta))))
        }
        _ => {
            let t0 = spec.theta0().expect("power family");
            let eig = eig_of(p)?;
            Ok(sym_from_eig(&eig, |l| (t0 * l.ln()).exp_m1() / t0))
        }
    }
}

/// Riemannian exponential at the identity, inverting [`rielog_identity`].
pub fn rieexp_identity(spec: &MetricSpec, v: &SymMatrix) -> Result<SpdMatrix> {
    let n = v.n();
    spec.validate(n)?;
    match spec {
        MetricSpec::Lem { .. } | MetricSpec::Aim { .. } => mexp(v),
        MetricSpec::Lcm { theta } => {
            let tv = v.as_matrix().scale(*theta);
            let mut k = strict_lower(&tv);
            for i in 0..n {
                k[(i, i)] = (0.5 * tv[(i, i)]).exp();
            }
            let gram = SpdMatrix::new(LowerTri::from_matrix_unchecked(k).gram())?;
            mpow(&gram, 1.0 / theta)
        }
        MetricSpec::Gbwm { theta, m: Some(m) } => {
            check_same_n("rieexp_identity", n, m.n())?;
            let mut rhs = v.as_matrix().scale(2.0 * theta);
            rhs.axpy(2.0, &Matrix::identity(n));
            // R M + M R = 2θV + 2I
            let r = gen_lyapunov(&SpdMatrix::identity(n), m, &SymMatrix::from_matrix_unchecked(rhs))?;
            let r = SpdMatrix::from_sym(r).map_err(|e| {
                Error::domain("rieexp_identity", format!("tangent vector outside the GBWM exponential domain: {e}"))
            })?;
            let rm = r.as_matrix().matmul(m.as_matrix());
            let q = SpdMatrix::new(rm.tr_matmul(&rm).symmetrized())?;
            mpow(&q, 1.0 / (2.0 * theta))
        }
        _ => {
            let t0 = spec.theta0().expect("power family");
            let eig = sym_eig(v)?;
            power_exp(&eig.values, t0).map(|s| spd_from_eig(&eig, |l| s(l)))
        }
    }
}

/// `(1 + θv)^{1/θ}` per eigenvalue, with a domain check on `1 + θv > 0`.
fn power_exp(values: &[f64], t0: f64) -> Result<impl Fn(f64) -> f64> {
    if let Some(&l) = values.iter().find(|&&l| !(1.0 + t0 * l > 0.0)) {
        return Err(Error::domain(
            "rieexp_identity",
            format!("I + θ₀V has eigenvalue {:.3e}; the power exponential is undefined", 1.0 + t0 * l),
        ));
    }
    Ok(move |l: f64| ((t0 * l).ln_1p() / t0).exp())
}

/// Riemannian logarithm `log_P Q` at an arbitrary basepoint.
pub fn rielog_at(spec: &MetricSpec, p: &SpdMatrix, q: &SpdMatrix) -> Result<TangentAt> {
    let n = p.n();
    spec.validate(n)?;
    check_same_n("rielog_at", n, q.n())?;
    let eig = eig_of(p)?;
    let vec = match *spec {
        MetricSpec::Lem { .. } => {
            let diff = mlog(q)?.sub(&sym_from_eig(&eig, f64::ln));
            apply_loewner_inverse(&eig, &spectral_loewner(&eig.values, SpectralFn::Log), &diff)
        }
        MetricSpec::Mpem { .. } => {
            commutator_check(p, q)?;
            let t0 = spec.theta0().expect("power family");
            let diff = mpow(q, t0)?.as_sym().sub(&sym_from_eig(&eig, |l| l.powf(t0)));
            apply_loewner_inverse(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(t0)), &diff)
        }
        _ => {
            let pw = spec.deformation_power().expect("deformed family");
            let a = spd_from_eig(&eig, |l| l.powf(pw));
            let b = mpow(q, pw)?;
            let x = base_log(spec, &a, &b)?;
            apply_loewner_inverse(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(pw)), &x)
        }
    };
    Ok(TangentAt { base: p.clone(), vec })
}

/// Logarithm of the undeformed metric at `A` towards `B`.
fn base_log(spec: &MetricSpec, a: &SpdMatrix, b: &SpdMatrix) -> Result<SymMatrix> {
    let n = a.n();
    let x = match spec {
        MetricSpec::Aim { .. } => {
            let eig = eig_of(a)?;
            let half = eig.recompose_with(&eig.values.iter().map(|l| l.sqrt()).collect::<Vec<_>>());
            let ihalf = eig.recompose_with(&eig.values.iter().map(|l| 1.0 / l.sqrt()).collect::<Vec<_>>());
            let inner = SpdMatrix::new(ihalf.matmul(b.as_matrix()).matmul(&ihalf).symmetrized())?;
            half.matmul(mlog(&inner)?.as_matrix()).matmul(&half)
        }
        MetricSpec::Em { .. } => b.as_matrix() - a.as_matrix(),
        MetricSpec::Lcm { .. } => {
            let (l, k) = (cholesky(a)?, cholesky(b)?);
            let (lm, km) = (l.as_matrix(), k.as_matrix());
            let ratio = Matrix::from_fn(n, n, |i, j| if i == j { km[(i, i)] / lm[(i, i)] } else { 0.0 });
            let mut x = &strict_lower(km) - &strict_lower(lm);
            x.axpy(1.0, &diag_part(lm).matmul(&dlog_diag(&ratio)?));
            return Ok(dchol_inverse(&l, &x));
        }
        MetricSpec::Bwm { .. } => {
            let root = sqrt_of_product(a, b)?;
            let mut x = &root + &root.transpose();
            x.axpy(-2.0, a.as_matrix());
            x
        }
        MetricSpec::Gbwm { m, .. } => {
            let m = m.as_ref().unwrap_or(a);
            let minv = spd_inverse(m)?;
            let c = SpdMatrix::new(minv.as_matrix().matmul(a.as_matrix()).matmul(minv.as_matrix()).symmetrized())?;
            let root = m.as_matrix().matmul(&sqrt_of_product(&c, b)?);
            let mut x = &root + &root.transpose();
            x.axpy(-2.0, a.as_matrix());
            x
        }
        MetricSpec::Lem { .. } | MetricSpec::Mpem { .. } => unreachable!(),
    };
    Ok(SymMatrix::from_matrix_unchecked(x))
}

/// Riemannian exponential at an arbitrary basepoint (LEM, AIM and EM families).
pub fn rieexp_at(spec: &MetricSpec, t: &TangentAt) -> Result<SpdMatrix> {
    let p = &t.base;
    let n = p.n();
    spec.validate(n)?;
    check_same_n("rieexp_at", n, t.vec.n())?;
    let eig = eig_of(p)?;
    match *spec {
        MetricSpec::Lem { .. } => {
            let dv = apply_loewner(&eig, &spectral_loewner(&eig.values, SpectralFn::Log), &t.vec);
            mexp(&sym_from_eig(&eig, f64::ln).add(&dv))
        }
        MetricSpec::Aim { theta, .. } => {
            let vt = apply_loewner(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(theta)), &t.vec);
            let half = eig.recompose_with(&eig.values.iter().map(|l| l.powf(0.5 * theta)).collect::<Vec<_>>());
            let ihalf = eig.recompose_with(&eig.values.iter().map(|l| l.powf(-0.5 * theta)).collect::<Vec<_>>());
            let inner = SymMatrix::from_matrix_unchecked(ihalf.matmul(vt.as_matrix()).matmul(&ihalf));
            let e = mexp(&inner)?;
            let q = SpdMatrix::new(half.matmul(e.as_matrix()).matmul(&half).symmetrized())?;
            mpow(&q, 1.0 / theta)
        }
        MetricSpec::Em { theta, .. } => {
            let vt = apply_loewner(&eig, &spectral_loewner(&eig.values, SpectralFn::Pow(theta)), &t.vec);
            let moved = sym_from_eig(&eig, |l| l.powf(theta)).add(&vt);
            let q = SpdMatrix::from_sym(moved).map_err(|e| {
                Error::domain("rieexp_at", format!("P^θ + dpow(V) leaves the SPD cone: {e}"))
            })?;
            mpow(&q, 1.0 / theta)
        }
        _ => Err(Error::Unsupported(format!(
            "exponential at a general basepoint is only available for LEM, AIM and EM, not {}",
            spec.family()
        ))),
    }
}
