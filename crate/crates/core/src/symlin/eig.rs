//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! implicit QL iterations with Wilkinson-style shifts.
//!
//! Both phases work on the transposed eigenvector matrix.

use super::matrix::{Matrix, SymMatrix};
use crate::error::{Error, Result};

/// `S = U · diag(values) · Uᵀ`, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    /// Eigenvectors stored as columns.
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

impl EigDecomp {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `U · diag(f(λ)) · Uᵀ` for precomputed spectral values.
    pub fn recompose_with(&self, spectrum: &[f64]) -> Matrix {
        let n = self.n();
        let ut = self.vectors.transpose();
        let mut scaled = ut.clone();
        for (i, &s) in spectrum.iter().enumerate() {
            for x in &mut scaled.as_mut_slice()[i * n..(i + 1) * n] {
                *x *= s;
            }
        }
        ut.tr_matmul(&scaled).symmetrized()
    }

    pub fn recompose(&self) -> Matrix {
        self.recompose_with(&self.values)
    }

    /// Expresses `V` in the eigenbasis: `Uᵀ V U`.
    pub fn to_eigenbasis(&self, v: &Matrix) -> Matrix {
        self.vectors.tr_matmul(v).matmul(&self.vectors)
    }

    /// Maps an eigenbasis matrix back: `U X Uᵀ`.
    pub fn from_eigenbasis(&self, x: &Matrix) -> Matrix {
        self.vectors.matmul(x).matmul_tr(&self.vectors)
    }
}

/// Eigendecomposition of a symmetric matrix.
pub fn sym_eig(s: &SymMatrix) -> Result<EigDecomp> {
    sym_eig_raw(s.as_matrix())
}

pub(crate) fn sym_eig_raw(a: &Matrix) -> Result<EigDecomp> {
    let n = a.rows();
    if n == 0 {
        return Ok(EigDecomp { vectors: Matrix::zeros(0, 0), values: vec![] });
    }
    // w holds Vᵀ: row j of w is column j of the accumulated transform.
    let mut w: Vec<f64> = a.transpose().into_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut w, &mut d, &mut e);
    ql_implicit(n, &mut w, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| w[order[c] * n + r]);
    Ok(EigDecomp { vectors, values })
}

#[inline]
fn at(n: usize, row: usize, col: usize) -> usize {
    // index of V[row][col] inside the transposed store
    col * n + row
}

fn tridiagonalize(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = w[at(n, n - 1, j)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[at(n, i - 1, j)];
                w[at(n, i, j)] = 0.0;
                w[at(n, j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                f = d[j];
                w[at(n, j, i)] = f;
                let col = &w[j * n..j * n + i];
                g = e[j] + col[j] * f;
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut w[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = col[i - 1];
                w[at(n, i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n - 1 {
        w[at(n, n - 1, i)] = w[at(n, i, i)];
        w[at(n, i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = w[at(n, k, i + 1)] / h;
            }
            let (head, tail) = w.split_at_mut((i + 1) * n);
            let pivot = &tail[..=i];
            for j in 0..=i {
                let col = &mut head[j * n..j * n + i + 1];
                let g: f64 = pivot.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            w[at(n, k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = w[at(n, n - 1, j)];
        w[at(n, n - 1, j)] = 0.0;
    }
    w[at(n, n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn ql_implicit(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let max_iter = 30 * n;
    let mut total_iter = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                total_iter += 1;
                if total_iter > max_iter {
                    return Err(Error::numeric(
                        "sym_eig",
                        format!("QL iteration cap {max_iter} exceeded; off-diagonal residual {:.3e}", e[l].abs()),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in &mut d[l + 2..n] {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::matrix::rel_frobenius;
    use crate::symlin::testutil::random_sym;

    fn orthogonality_defect(u: &Matrix) -> f64 {
        (&u.tr_matmul(u) - &Matrix::identity(u.rows())).frobenius_norm()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0]);
        assert!(orthogonality_defect(&eig.vectors) < 1e-14);
    }

    #[test]
    fn diagonal_input_sorted_descending() {
        let eig = sym_eig(&SymMatrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(eig.values, vec![4.0, 1.0]);
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..20 {
            for &n in &[1usize, 2, 3, 8, 17, 40] {
                let s = random_sym(n, seed);
                let eig = sym_eig(&s).unwrap();
                assert!(orthogonality_defect(&eig.vectors) < 1e-10);
                assert!(rel_frobenius(&eig.recompose(), s.as_matrix()) < 1e-10, "n={n} seed={seed}");
                assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        // rank-one update of identity: eigenvalues {1 + n, 1, ..., 1}
        let n = 6;
        let s = SymMatrix::new(Matrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 1.0 })).unwrap();
        let eig = sym_eig(&s).unwrap();
        assert!((eig.values[0] - (n as f64 + 1.0)).abs() < 1e-12);
        for v in &eig.values[1..] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(rel_frobenius(&eig.recompose(), s.as_matrix()) < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let eig = sym_eig(&SymMatrix::zeros(4)).unwrap();
        assert!(eig.values.iter().all(|&v| v == 0.0));
    }
}
