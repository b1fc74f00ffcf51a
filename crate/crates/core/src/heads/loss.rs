use crate::error::{Error, Result};

/// Softmax probabilities with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `softmax(logits)` against `label`, and its gradient in the logits.
pub fn softmax_xent(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::Shape(format!("label {label} out of range for {} classes", logits.len())));
    }
    if let Some(z) = logits.iter().find(|z| !z.is_finite()) {
        return Err(Error::numeric("softmax_xent", format!("non-finite logit {z}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((lse - logits[label], grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let (loss, grad) = softmax_xent(&[0.3; 5], 2).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-15);
        assert!(grad.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn large_logits_stay_finite() {
        let (loss, _) = softmax_xent(&[1e4, -1e4, 0.0], 0).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
    }

    #[test]
    fn finite_difference_gradient() {
        let z = vec![0.2, -1.3, 0.7, 2.1];
        let (_, grad) = softmax_xent(&z, 1).unwrap();
        let h = 1e-6;
        for k in 0..z.len() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[k] += h;
            zm[k] -= h;
            let fd = (softmax_xent(&zp, 1).unwrap().0 - softmax_xent(&zm, 1).unwrap().0) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6 * grad[k].abs().max(1e-3), "k={k}");
        }
    }
}
