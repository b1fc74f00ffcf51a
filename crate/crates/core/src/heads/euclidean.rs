use crate::error::{Error, Result};
use crate::symlin::matrix::dot;

/// Per-class directions `a_k` and biases `b_k` of a Euclidean MLR.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanMlrParams {
    directions: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl EuclideanMlrParams {
    pub fn new(directions: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        if directions.len() != biases.len() || directions.is_empty() {
            return Err(Error::Shape(format!(
                "{} directions for {} biases",
                directions.len(),
                biases.len()
            )));
        }
        let d = directions[0].len();
        for (k, a) in directions.iter().enumerate() {
            if a.len() != d {
                return Err(Error::Shape(format!("direction {k} has length {}, expected {d}", a.len())));
            }
            if norm_sq(a) == 0.0 {
                return Err(Error::DegenerateDirection(format!("class {k} has a zero direction")));
            }
        }
        Ok(Self { directions, biases })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn classes(&self) -> usize {
        self.biases.len()
    }
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn check_len(x: &[f64], a: &[f64]) -> Result<()> {
    if x.len() != a.len() {
        return Err(Error::Shape(format!("input has length {}, direction {}", x.len(), a.len())));
    }
    Ok(())
}

/// `⟨a_k, x⟩ − b_k`
pub fn emlr_logits(x: &[f64], params: &EuclideanMlrParams) -> Result<Vec<f64>> {
    params
        .directions
        .iter()
        .zip(&params.biases)
        .map(|(a, b)| {
            check_len(x, a)?;
            Ok(dot(a, x) - b)
        })
        .collect()
}

/// `⟨a_k, x − p_k⟩`
pub fn emlr_logits_anchor(x: &[f64], anchors: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<Vec<f64>> {
    if anchors.len() != directions.len() {
        return Err(Error::Shape(format!("{} anchors for {} directions", anchors.len(), directions.len())));
    }
    anchors
        .iter()
        .zip(directions)
        .map(|(p, a)| {
            check_len(x, a)?;
            check_len(p, a)?;
            Ok(a.iter().zip(x).zip(p).map(|((ai, xi), pi)| ai * (xi - pi)).sum())
        })
        .collect()
}

/// Minimum-norm `p` with `⟨a, p⟩ = b`.
pub fn bias_to_anchor(a: &[f64], b: f64) -> Result<Vec<f64>> {
    let nsq = norm_sq(a);
    if nsq == 0.0 {
        return Err(Error::DegenerateDirection("cannot place an anchor along a zero direction".into()));
    }
    Ok(a.iter().map(|ai| ai * b / nsq).collect())
}

/// Signed margin form: `sign(⟨a_k, x − p_k⟩) · ‖a_k‖ · dist(x, H_k)`.
pub fn emlr_logits_margin(x: &[f64], anchors: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<Vec<f64>> {
    let raw = emlr_logits_anchor(x, anchors, directions)?;
    raw.iter()
        .zip(directions)
        .map(|(&s, a)| {
            let norm = norm_sq(a).sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateDirection("zero direction has no hyperplane".into()));
            }
            let distance = s.abs() / norm;
            Ok(s.signum() * norm * distance)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::random::trial_rng;
    use rand::Rng;

    fn random_vec(d: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn unit_directions() {
        let dirs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let params = EuclideanMlrParams::new(dirs, vec![0.0; 3]).unwrap();
        assert_eq!(emlr_logits(&[1.0, 0.0, 0.0], &params).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn three_forms_agree() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..50 {
            let (d, c) = (6, 4);
            let dirs: Vec<_> = (0..c).map(|_| random_vec(d, &mut rng)).collect();
            let biases = random_vec(c, &mut rng);
            let x = random_vec(d, &mut rng);
            let params = EuclideanMlrParams::new(dirs.clone(), biases.clone()).unwrap();
            let plain = emlr_logits(&x, &params).unwrap();
            let anchors: Vec<_> = dirs.iter().zip(&biases).map(|(a, &b)| bias_to_anchor(a, b).unwrap()).collect();
            for (a, (p, &b)) in dirs.iter().zip(anchors.iter().zip(&biases)) {
                assert!((dot(a, p) - b).abs() < 1e-12 * b.abs().max(1.0));
            }
            let anchored = emlr_logits_anchor(&x, &anchors, &dirs).unwrap();
            let margin = emlr_logits_margin(&x, &anchors, &dirs).unwrap();
            for k in 0..c {
                assert!((plain[k] - anchored[k]).abs() < 1e-12 * plain[k].abs().max(1.0));
                assert!((margin[k] - anchored[k]).abs() < 1e-12 * plain[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn anchor_examples() {
        assert_eq!(bias_to_anchor(&[2.0, 0.0], 4.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(bias_to_anchor(&[2.0, 3.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(bias_to_anchor(&[0.0, 0.0], 1.0), Err(Error::DegenerateDirection(_))));
    }

    #[test]
    fn hyperplane_and_sign() {
        let dirs = vec![vec![1.0, 2.0]];
        let anchors = vec![vec![0.5, 0.5]];
        assert_eq!(emlr_logits_margin(&[0.5, 0.5], &anchors, &dirs).unwrap(), vec![0.0]);
        let x = [3.0, -1.0];
        let pos = emlr_logits_margin(&x, &anchors, &dirs).unwrap()[0];
        let neg = emlr_logits_margin(&x, &anchors, &[vec![-1.0, -2.0]]).unwrap()[0];
        assert_eq!(pos, -neg);
    }

    #[test]
    fn bias_shift_changes_logits_uniformly() {
        let dirs = vec![vec![1.0, -1.0], vec![0.5, 2.0]];
        let x = [0.3, 0.7];
        let a = emlr_logits(&x, &EuclideanMlrParams::new(dirs.clone(), vec![0.1, -0.2]).unwrap()).unwrap();
        let b = emlr_logits(&x, &EuclideanMlrParams::new(dirs, vec![1.1, 0.8]).unwrap()).unwrap();
        for k in 0..2 {
            assert!((a[k] - b[k] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(EuclideanMlrParams::new(vec![vec![0.0, 0.0]], vec![1.0]).is_err());
    }
}
