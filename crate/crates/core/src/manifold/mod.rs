//! Seven parameterized Riemannian metric families on the SPD cone: metric
//! tensors, logarithms, exponentials at the identity and geodesic distances.

mod distance;
mod logexp;
mod spec;
mod tensor;

pub use distance::geodesic_dist;
pub use logexp::{rieexp_at, rieexp_identity, rielog_at, rielog_identity};
pub use spec::{inner_ab, Family, MetricSpec, TangentAt};
pub use tensor::{gbwm_aim_check, metric_at};

use crate::error::{Error, Result};
use crate::symlin::{sym_eig, EigDecomp, Matrix, SpdMatrix, SymMatrix};

/// Relative commutator tolerance for the mixed-power logarithm.
pub const COMMUTE_TOL: f64 = 1e-8;

fn check_same_n(op: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{op}: {a}x{a} vs {b}x{b}")));
    }
    Ok(())
}

fn eig_of(p: &SpdMatrix) -> Result<EigDecomp> {
    sym_eig(&p.as_sym())
}

/// `U f(Λ) Uᵀ` as an SPD matrix; the caller guarantees `f > 0`.
fn spd_from_eig(eig: &EigDecomp, f: impl Fn(f64) -> f64) -> SpdMatrix {
    let spectrum: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    SpdMatrix::from_matrix_unchecked(eig.recompose_with(&spectrum))
}

fn sym_from_eig(eig: &EigDecomp, f: impl Fn(f64) -> f64) -> SymMatrix {
    let spectrum: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    SymMatrix::from_matrix_unchecked(eig.recompose_with(&spectrum))
}

fn commutator_check(p: &SpdMatrix, q: &SpdMatrix) -> Result<()> {
    let (pm, qm) = (p.as_matrix(), q.as_matrix());
    let commutator = (&pm.matmul(qm) - &qm.matmul(pm)).frobenius_norm();
    let tolerance = COMMUTE_TOL * p.frobenius_norm() * q.frobenius_norm();
    if commutator > tolerance {
        return Err(Error::NonCommuting { commutator, tolerance });
    }
    Ok(())
}

/// `(C B)^{1/2}` for SPD `C` and `B`, via `C^{1/2} (C^{1/2} B C^{1/2})^{1/2} C^{-1/2}`.
/// Its transpose is `(B C)^{1/2}`.
fn sqrt_of_product(c: &SpdMatrix, b: &SpdMatrix) -> Result<Matrix> {
    let eig = eig_of(c)?;
    let c_half = eig.recompose_with(&eig.values.iter().map(|l| l.sqrt()).collect::<Vec<_>>());
    let c_ihalf = eig.recompose_with(&eig.values.iter().map(|l| 1.0 / l.sqrt()).collect::<Vec<_>>());
    let inner = SymMatrix::from_matrix_unchecked(c_half.matmul(b.as_matrix()).matmul(&c_half));
    let inner_eig = sym_eig(&inner)?;
    let root = inner_eig.recompose_with(&inner_eig.values.iter().map(|l| l.max(0.0).sqrt()).collect::<Vec<_>>());
    Ok(c_half.matmul(&root).matmul(&c_ihalf))
}
