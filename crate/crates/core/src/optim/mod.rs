//! Plain SGD, Riemannian SGD under power-Euclidean pullbacks, and the
//! weight/learning-rate rescaling that pairs power and scaled-power heads.

mod harness;

pub use harness::{
    powtmlr_divergence, scalepow_equivalence, theorem_equivalence, EquivInstance, EquivReport, StepDeviation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::MetricSpec;
use crate::symlin::funcs::{apply_loewner_inverse, spectral_loewner};
use crate::symlin::{sym_eig, EigDecomp, Matrix, SpdMatrix, SpectralFn, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub lr: f64,
    /// Learning-rate multiplier for the FC layer.
    pub classifier_factor: f64,
    pub seed: u64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be finite and nonnegative, got {}", self.lr)));
        }
        if !(self.classifier_factor > 0.0) || !self.classifier_factor.is_finite() {
            return Err(Error::Config(format!("classifier factor must be positive, got {}", self.classifier_factor)));
        }
        Ok(())
    }
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self { lr: 0.1, classifier_factor: 1.0, seed: 0 }
    }
}

/// `param − lr·grad`
pub fn sgd_step(param: &[f64], grad: &[f64], lr: f64) -> Result<Vec<f64>> {
    if param.len() != grad.len() {
        return Err(Error::Shape(format!("parameter has {} entries, gradient {}", param.len(), grad.len())));
    }
    if let Some(g) = grad.iter().find(|g| !g.is_finite()) {
        return Err(Error::numeric("sgd_step", format!("non-finite gradient entry {g}")));
    }
    Ok(param.iter().zip(grad).map(|(p, g)| p - lr * g).collect())
}

/// In-place variant on a matrix.
pub fn sgd_step_matrix(param: &mut Matrix, grad: &Matrix, lr: f64) -> Result<()> {
    let updated = sgd_step(param.as_slice(), grad.as_slice(), lr)?;
    param.as_mut_slice().copy_from_slice(&updated);
    Ok(())
}

/// Power of the `(θ,1,0)`-EM pullback, the only family RSGD supports.
fn pullback_theta(spec: &MetricSpec) -> Result<f64> {
    match *spec {
        MetricSpec::Em { theta, alpha, beta } if alpha == 1.0 && beta == 0.0 && theta != 0.0 && theta.is_finite() => {
            Ok(theta)
        }
        _ => Err(Error::Unsupported(format!("RSGD is implemented for (θ,1,0)-EM only, not {spec}"))),
    }
}

/// `φ_{*,P}⁻¹` for `φ(S) = S^θ/|θ|`, applied in the eigenbasis of `P`.
fn dphi_inverse(eig: &EigDecomp, theta: f64, g: &SymMatrix) -> SymMatrix {
    let kernel = spectral_loewner(&eig.values, SpectralFn::Pow(theta)).scale(1.0 / theta.abs());
    apply_loewner_inverse(eig, &kernel, g)
}

fn spd_eig(p: &SpdMatrix) -> Result<EigDecomp> {
    sym_eig(&p.as_sym())
}

/// Riemannian gradient `φ_{*,P}⁻¹ φ_{*,P}⁻¹ (G)` under the `(θ,1,0)`-EM.
pub fn egrad_to_rgrad(spec: &MetricSpec, p: &SpdMatrix, egrad: &SymMatrix) -> Result<SymMatrix> {
    let theta = pullback_theta(spec)?;
    let eig = spd_eig(p)?;
    Ok(dphi_inverse(&eig, theta, &dphi_inverse(&eig, theta, egrad)))
}

/// One Riemannian SGD step: `φ⁻¹(φ(P) − lr·φ_{*,P}⁻¹(G))`.
pub fn rsgd_step(spec: &MetricSpec, p: &SpdMatrix, egrad: &SymMatrix, lr: f64) -> Result<SpdMatrix> {
    let theta = pullback_theta(spec)?;
    if p.n() != egrad.n() {
        return Err(Error::Shape("rsgd_step: gradient does not match the parameter".into()));
    }
    let eig = spd_eig(p)?;
    let phi_p = SymMatrix::from_matrix_unchecked(
        eig.recompose_with(&eig.values.iter().map(|l| l.powf(theta) / theta.abs()).collect::<Vec<_>>()),
    );
    let moved = phi_p.sub(&dphi_inverse(&eig, theta, egrad).scale(lr));
    phi_inverse(&moved, theta)
}

/// `φ⁻¹(Y) = (|θ| Y)^{1/θ}`, rejecting `Y` outside the cone.
pub(crate) fn phi_inverse(y: &SymMatrix, theta: f64) -> Result<SpdMatrix> {
    let eig = sym_eig(y)?;
    let min = *eig.values.last().expect("non-empty");
    if !(min > 0.0) {
        return Err(Error::StepRejected { min_eigenvalue: min });
    }
    let spectrum: Vec<f64> = eig.values.iter().map(|l| (theta.abs() * l).powf(1.0 / theta)).collect();
    Ok(SpdMatrix::from_matrix_unchecked(eig.recompose_with(&spectrum)))
}

/// `φ(P) = P^θ/|θ|`
pub fn phi(p: &SpdMatrix, theta: f64) -> Result<SymMatrix> {
    let eig = spd_eig(p)?;
    Ok(SymMatrix::from_matrix_unchecked(
        eig.recompose_with(&eig.values.iter().map(|l| l.powf(theta) / theta.abs()).collect::<Vec<_>>()),
    ))
}

/// Scaled-power initialization `(θ·A₀, θ²·lr)` matching a power head started at `(A₀, lr)`.
pub fn scaled_init(a0: &Matrix, lr: f64, theta: f64) -> Result<(Matrix, f64)> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Config(format!("scaled_init needs theta > 0, got {theta}")));
    }
    Ok((a0.scale(theta), theta * theta * lr))
}

/// Anchors and directions of an SPD MLR trained by RSGD on the anchors.
#[derive(Clone, Debug)]
pub struct RsgdState {
    pub spec: MetricSpec,
    pub anchors: Vec<SpdMatrix>,
    pub directions: Vec<SymMatrix>,
}

impl RsgdState {
    /// Updates classes in ascending order, anchor before direction.
    pub fn step(&mut self, anchor_grads: &[SymMatrix], direction_grads: &[SymMatrix], lr: f64) -> Result<()> {
        if anchor_grads.len() != self.anchors.len() || direction_grads.len() != self.directions.len() {
            return Err(Error::Shape("one gradient per class is required".into()));
        }
        for k in 0..self.anchors.len() {
            self.anchors[k] = rsgd_step(&self.spec, &self.anchors[k], &anchor_grads[k], lr)
                .map_err(|e| e.context(format!("anchor {k}")))?;
            let d = sgd_step(self.directions[k].as_matrix().as_slice(), direction_grads[k].as_matrix().as_slice(), lr)?;
            self.directions[k] = SymMatrix::from_matrix_unchecked(Matrix::new(self.directions[k].n(), self.directions[k].n(), d)?);
        }
        Ok(())
    }
}
