use crate::error::{Error, Result};
use crate::manifold::inner_ab;
use crate::symlin::{mlog, mpow, SpdMatrix, SymMatrix};

/// Per-class anchors `P_k` and directions `A_k` of an SPD MLR.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMlrParams {
    pub anchors: Vec<SpdMatrix>,
    pub directions: Vec<SymMatrix>,
}

impl SpdMlrParams {
    pub fn new(anchors: Vec<SpdMatrix>, directions: Vec<SymMatrix>) -> Result<Self> {
        if anchors.len() != directions.len() || anchors.is_empty() {
            return Err(Error::Shape(format!("{} anchors for {} directions", anchors.len(), directions.len())));
        }
        let n = anchors[0].n();
        for (k, (p, a)) in anchors.iter().zip(&directions).enumerate() {
            if p.n() != n || a.n() != n {
                return Err(Error::Shape(format!("class {k} parameters are not {n}x{n}")));
            }
            if a.frobenius_norm() == 0.0 {
                return Err(Error::DegenerateDirection(format!("class {k} has a zero direction")));
            }
        }
        Ok(Self { anchors, directions })
    }

    pub fn classes(&self) -> usize {
        self.anchors.len()
    }
}

fn check_input(s: &SpdMatrix, params: &SpdMlrParams) -> Result<()> {
    let n = params.anchors.first().map_or(0, |p| p.n());
    if s.n() != n {
        return Err(Error::Shape(format!("input is {}x{0}, parameters are {n}x{n}", s.n())));
    }
    Ok(())
}

/// `⟨log S − log P_k, A_k⟩_{αβ}`
pub fn spd_mlr_logits_lem(s: &SpdMatrix, params: &SpdMlrParams, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_input(s, params)?;
    let log_s = mlog(s)?;
    params
        .anchors
        .iter()
        .zip(&params.directions)
        .map(|(p, a)| inner_ab(&log_s.sub(&mlog(p)?), a, alpha, beta))
        .collect()
}

/// `(1/|θ|) ⟨S^θ − P_k^θ, A_k⟩_{αβ}`; negative `θ` gives the inverse-covariance classifier at `θ = −1`.
pub fn spd_mlr_logits_pem(
    s: &SpdMatrix,
    params: &SpdMlrParams,
    theta: f64,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Config(format!("SPD MLR needs a finite nonzero theta, got {theta}")));
    }
    check_input(s, params)?;
    let s_pow = mpow(s, theta)?.as_sym();
    params
        .anchors
        .iter()
        .zip(&params.directions)
        .map(|(p, a)| Ok(inner_ab(&s_pow.sub(&mpow(p, theta)?.as_sym()), a, alpha, beta)? / theta.abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::classifier::{head_forward, HeadKind, HeadTag};
    use crate::symlin::testutil::{random_spd, random_sym};
    use crate::symlin::{spd_inverse, vec_sym, Matrix};

    fn params(n: usize, c: usize, seed: u64) -> SpdMlrParams {
        SpdMlrParams::new(
            (0..c as u64).map(|k| random_spd(n, 20.0, seed + k)).collect(),
            (0..c as u64).map(|k| random_sym(n, seed + 100 + k)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn anchor_logit_vanishes() {
        let p = params(4, 3, 0);
        for k in 0..3 {
            let s = &p.anchors[k];
            assert!(spd_mlr_logits_lem(s, &p, 1.0, 0.2).unwrap()[k].abs() < 1e-12);
            assert!(spd_mlr_logits_pem(s, &p, 0.5, 1.0, 0.0).unwrap()[k].abs() < 1e-12);
        }
    }

    #[test]
    fn pem_hand_example() {
        let p = SpdMlrParams::new(vec![SpdMatrix::identity(2)], vec![SymMatrix::identity(2)]).unwrap();
        let s = SpdMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let z = spd_mlr_logits_pem(&s, &p, 0.5, 1.0, 0.0).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lem_at_identity_anchor_is_log_head() {
        let n = 3;
        let dirs: Vec<_> = (0..2).map(|k| random_sym(n, k)).collect();
        let p = SpdMlrParams::new(vec![SpdMatrix::identity(n); 2], dirs.clone()).unwrap();
        let s = random_spd(n, 30.0, 5);
        let rows: Vec<Vec<f64>> = dirs.iter().map(vec_sym).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let head = head_forward(&HeadKind::new(HeadTag::LogEmlr, 1.0), &s, &a, &[0.0, 0.0]).unwrap();
        let z = spd_mlr_logits_lem(&s, &p, 1.0, 0.0).unwrap();
        for k in 0..2 {
            assert!((head[k] - z[k]).abs() < 1e-12 * z[k].abs().max(1.0));
        }
    }

    #[test]
    fn linear_in_direction() {
        let p = params(3, 2, 10);
        let s = random_spd(3, 10.0, 20);
        let mut scaled = p.clone();
        scaled.directions[1] = scaled.directions[1].scale(-2.5);
        let (z, zs) = (spd_mlr_logits_lem(&s, &p, 1.0, 0.0).unwrap(), spd_mlr_logits_lem(&s, &scaled, 1.0, 0.0).unwrap());
        assert!((zs[1] + 2.5 * z[1]).abs() < 1e-12 * z[1].abs().max(1.0));
    }

    #[test]
    fn deformation_limit_approaches_lem() {
        let p = params(4, 3, 30);
        let s = random_spd(4, 50.0, 40);
        let lem = spd_mlr_logits_lem(&s, &p, 1.0, 0.0).unwrap();
        let pem = spd_mlr_logits_pem(&s, &p, 1e-3, 1.0, 0.0).unwrap();
        for k in 0..3 {
            assert!((lem[k] - pem[k]).abs() / lem[k].abs() < 1e-2);
        }
    }

    #[test]
    fn inverse_covariance_at_minus_one() {
        let p = params(4, 2, 50);
        let s = random_spd(4, 50.0, 60);
        let z = spd_mlr_logits_pem(&s, &p, -1.0, 1.0, 0.0).unwrap();
        let s_inv = spd_inverse(&s).unwrap();
        for k in 0..2 {
            let p_inv = spd_inverse(&p.anchors[k]).unwrap();
            let want = (s_inv.as_matrix() - p_inv.as_matrix()).frob_dot(p.directions[k].as_matrix());
            assert!((z[k] - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_zero_theta() {
        let p = params(2, 1, 0);
        assert!(matches!(spd_mlr_logits_pem(&p.anchors[0], &p, 0.0, 1.0, 0.0), Err(Error::Config(_))));
    }
}
