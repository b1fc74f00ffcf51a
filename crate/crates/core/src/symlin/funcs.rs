//! Spectral matrix functions `U f(Λ) Uᵀ` and their Fréchet derivatives via
//! the first divided-difference (Loewner) matrix.

use super::eig::{sym_eig, EigDecomp};
use super::matrix::{Matrix, SpdMatrix, SymMatrix};
use crate::error::{Error, Result};

/// Relative eigenvalue gap below which a divided difference is replaced by the derivative.
pub const DEGENERATE_GAP: f64 = 1e-8;

/// Scalar functions with closed-form, cancellation-free divided differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralFn {
    Log,
    Exp,
    Pow(f64),
}

impl SpectralFn {
    pub fn value(self, x: f64) -> f64 {
        match self {
            SpectralFn::Log => x.ln(),
            SpectralFn::Exp => x.exp(),
            SpectralFn::Pow(t) => x.powf(t),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            SpectralFn::Log => 1.0 / x,
            SpectralFn::Exp => x.exp(),
            SpectralFn::Pow(t) => t * x.powf(t - 1.0),
        }
    }

    /// `(f(a) − f(b)) / (a − b)`, or `f'` at the midpoint for near-equal arguments.
    pub fn divided_difference(self, a: f64, b: f64) -> f64 {
        let gap = a - b;
        if gap.abs() < DEGENERATE_GAP * a.abs().max(b.abs()) || gap == 0.0 {
            return self.derivative(0.5 * (a + b));
        }
        match self {
            // ratio form keeps full precision for clustered spectra
            SpectralFn::Log => (gap / b).ln_1p() / gap,
            SpectralFn::Pow(t) => {
                let rel = gap / b;
                b.powf(t - 1.0) * (t * rel.ln_1p()).exp_m1() / rel
            }
            SpectralFn::Exp => b.exp() * gap.exp_m1() / gap,
        }
    }
}

fn check_spectrum(op: &'static str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(op, format!("scalar function produced {v}")));
    }
    Ok(())
}

/// `f` applied to the spectrum of an already decomposed matrix.
pub fn eig_fun(eig: &EigDecomp, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let spectrum: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    check_spectrum("mat_fun", &spectrum)?;
    Ok(SymMatrix::from_matrix_unchecked(eig.recompose_with(&spectrum)))
}

/// `U f(Λ) Uᵀ` for an SPD argument.
pub fn mat_fun(p: &SpdMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    eig_fun(&sym_eig(&p.as_sym())?, f)
}

/// `U f(Λ) Uᵀ` for any symmetric argument.
pub fn sym_fun(s: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    eig_fun(&sym_eig(s)?, f)
}

pub fn mlog(p: &SpdMatrix) -> Result<SymMatrix> {
    mat_fun(p, f64::ln)
}

/// Matrix exponential of a symmetric matrix (always SPD).
pub fn mexp(v: &SymMatrix) -> Result<SpdMatrix> {
    let e = sym_fun(v, f64::exp)?;
    positive_result("mexp", e)
}

pub fn mpow(p: &SpdMatrix, theta: f64) -> Result<SpdMatrix> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Config(format!("matrix power requires a finite nonzero exponent, got {theta}")));
    }
    let eig = sym_eig(&p.as_sym())?;
    mpow_eig(&eig, theta)
}

pub fn mpow_eig(eig: &EigDecomp, theta: f64) -> Result<SpdMatrix> {
    if let Some(&l) = eig.values.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::domain("mpow", format!("eigenvalue {l:.3e} is not positive")));
    }
    positive_result("mpow", eig_fun(eig, |l| l.powf(theta))?)
}

fn positive_result(op: &'static str, s: SymMatrix) -> Result<SpdMatrix> {
    SpdMatrix::from_sym(s).map_err(|e| Error::numeric(op, format!("result lost positive definiteness: {e}")))
}

/// Loewner matrix `[f(λᵢ) − f(λⱼ)] / (λᵢ − λⱼ)` from two closures.
pub fn loewner_matrix(values: &[f64], f: impl Fn(f64) -> f64, fprime: impl Fn(f64) -> f64) -> Matrix {
    let n = values.len();
    Matrix::from_fn(n, n, |i, j| {
        let (a, b) = (values[i], values[j]);
        if i == j {
            fprime(a)
        } else if (a - b).abs() < DEGENERATE_GAP * a.abs().max(b.abs()) {
            fprime(0.5 * (a + b))
        } else {
            (f(a) - f(b)) / (a - b)
        }
    })
}

pub fn spectral_loewner(values: &[f64], func: SpectralFn) -> Matrix {
    let n = values.len();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            func.derivative(values[i])
        } else {
            func.divided_difference(values[i], values[j])
        }
    })
}

fn hadamard(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * b[(i, j)])
}

fn hadamard_div(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] / b[(i, j)])
}

/// Applies `V ↦ U (K ∘ UᵀVU) Uᵀ` for a Loewner kernel `K`.
pub fn apply_loewner(eig: &EigDecomp, kernel: &Matrix, v: &SymMatrix) -> SymMatrix {
    let vt = eig.to_eigenbasis(v.as_matrix());
    SymMatrix::from_matrix_unchecked(eig.from_eigenbasis(&hadamard(kernel, &vt)))
}

/// Inverse of [`apply_loewner`]; requires a kernel without zero entries.
pub fn apply_loewner_inverse(eig: &EigDecomp, kernel: &Matrix, v: &SymMatrix) -> SymMatrix {
    let vt = eig.to_eigenbasis(v.as_matrix());
    SymMatrix::from_matrix_unchecked(eig.from_eigenbasis(&hadamard_div(&vt, kernel)))
}

/// Differential `df_P(V)` of the matrix function induced by `f` (with derivative `fprime`).
pub fn dmat_fun(
    p: &SpdMatrix,
    f: impl Fn(f64) -> f64,
    fprime: impl Fn(f64) -> f64,
    v: &SymMatrix,
) -> Result<SymMatrix> {
    let eig = sym_eig(&p.as_sym())?;
    Ok(apply_loewner(&eig, &loewner_matrix(&eig.values, f, fprime), v))
}

/// Differential of a [`SpectralFn`] at `P` applied to `V`.
pub fn dspectral(p: &SpdMatrix, func: SpectralFn, v: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(&p.as_sym())?;
    Ok(apply_loewner(&eig, &spectral_loewner(&eig.values, func), v))
}

/// `(pow_θ)_{*,P}(V)`
pub fn dpow(p: &SpdMatrix, theta: f64, v: &SymMatrix) -> Result<SymMatrix> {
    dspectral(p, SpectralFn::Pow(theta), v)
}

/// `mlog_{*,P}(V)`
pub fn dlog(p: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    dspectral(p, SpectralFn::Log, v)
}

/// Full `n²` row-major flattening; preserves the Frobenius inner product.
pub fn vec_sym(s: &SymMatrix) -> Vec<f64> {
    s.as_matrix().as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::chol::spd_inverse;
    use crate::symlin::matrix::rel_frobenius;
    use crate::symlin::testutil::{random_spd, random_sym};

    #[test]
    fn log_of_identity_is_zero() {
        let z = mlog(&SpdMatrix::identity(4)).unwrap();
        assert_eq!(z.as_matrix().max_abs(), 0.0);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let p = SpdMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let s = mat_fun(&p, f64::sqrt).unwrap();
        assert!(rel_frobenius(s.as_matrix(), &Matrix::from_diag(&[2.0, 1.0])) < 1e-15);
        let s = mpow(&p, 0.5).unwrap();
        assert!(rel_frobenius(s.as_matrix(), &Matrix::from_diag(&[2.0, 1.0])) < 1e-15);
    }

    #[test]
    fn log_of_diagonal() {
        let e = std::f64::consts::E;
        let l = mlog(&SpdMatrix::from_diag(&[e, 1.0]).unwrap()).unwrap();
        assert!((l[(0, 0)] - 1.0).abs() < 1e-15 && l[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn exp_log_round_trip() {
        for seed in 0..5 {
            let p = random_spd(8, 1e3, seed);
            let back = mexp(&mlog(&p).unwrap()).unwrap();
            assert!(rel_frobenius(back.as_matrix(), p.as_matrix()) < 1e-10);
        }
    }

    #[test]
    fn power_laws() {
        let p = random_spd(7, 100.0, 1);
        assert!(rel_frobenius(mpow(&p, 1.0).unwrap().as_matrix(), p.as_matrix()) < 1e-12);
        let composed = mpow(&mpow(&p, 0.3).unwrap(), 2.5).unwrap();
        assert!(rel_frobenius(composed.as_matrix(), mpow(&p, 0.75).unwrap().as_matrix()) < 1e-9);
        let prod = mpow(&p, 0.4).unwrap().as_matrix().matmul(mpow(&p, 0.6).unwrap().as_matrix());
        assert!(rel_frobenius(&prod, p.as_matrix()) < 1e-9);
        let inv = mpow(&p, -1.0).unwrap();
        assert!(rel_frobenius(inv.as_matrix(), spd_inverse(&p).unwrap().as_matrix()) < 1e-10);
    }

    #[test]
    fn power_rejects_zero_exponent() {
        assert!(matches!(mpow(&SpdMatrix::identity(2), 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn domain_error_on_undefined_function() {
        let p = SpdMatrix::from_diag(&[2.0, 0.5]).unwrap();
        let res = mat_fun(&p, |x| (x - 1.0).ln());
        assert!(matches!(res, Err(Error::Domain { .. })));
    }

    #[test]
    fn differentials_at_identity() {
        let v = random_sym(5, 3);
        let id = SpdMatrix::identity(5);
        let d = dpow(&id, 0.37, &v).unwrap();
        assert!(rel_frobenius(d.as_matrix(), v.scale(0.37).as_matrix()) < 1e-14);
        let d = dlog(&id, &v).unwrap();
        assert!(rel_frobenius(d.as_matrix(), v.as_matrix()) < 1e-14);
    }

    #[test]
    fn accurate_and_generic_loewner_agree() {
        let vals = [5.0, 2.0, 2.0 + 1e-3, 0.1];
        for func in [SpectralFn::Log, SpectralFn::Pow(0.5), SpectralFn::Pow(-1.0), SpectralFn::Exp] {
            let a = spectral_loewner(&vals, func);
            let b = loewner_matrix(&vals, |x| func.value(x), |x| func.derivative(x));
            assert!(rel_frobenius(&a, &b) < 1e-10, "{func:?}");
        }
    }

    #[test]
    fn loewner_inverse_round_trip() {
        let p = random_spd(6, 50.0, 5);
        let eig = sym_eig(&p.as_sym()).unwrap();
        let k = spectral_loewner(&eig.values, SpectralFn::Pow(0.5));
        let v = random_sym(6, 6);
        let back = apply_loewner_inverse(&eig, &k, &apply_loewner(&eig, &k, &v));
        assert!(rel_frobenius(back.as_matrix(), v.as_matrix()) < 1e-10);
    }

    #[test]
    fn vec_sym_properties() {
        assert_eq!(vec_sym(&SymMatrix::identity(2)), vec![1.0, 0.0, 0.0, 1.0]);
        assert!(vec_sym(&SymMatrix::zeros(3)).iter().all(|&x| x == 0.0));
        let (a, b) = (random_sym(4, 1), random_sym(4, 2));
        let flat: f64 = vec_sym(&a).iter().zip(vec_sym(&b)).map(|(x, y)| x * y).sum();
        assert_eq!(flat, a.frob_dot(&b));
    }
}
