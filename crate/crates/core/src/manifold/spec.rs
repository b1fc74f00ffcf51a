use std::fmt;

use crate::error::{Error, Result};
use crate::symlin::{SpdMatrix, SymMatrix};

/// The seven metric families on the SPD cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Lem,
    Aim,
    Em,
    Mpem,
    Lcm,
    Bwm,
    Gbwm,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Lem, Family::Aim, Family::Em, Family::Mpem, Family::Lcm, Family::Bwm, Family::Gbwm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Lem => "LEM",
            Family::Aim => "AIM",
            Family::Em => "EM",
            Family::Mpem => "MPEM",
            Family::Lcm => "LCM",
            Family::Bwm => "BWM",
            Family::Gbwm => "GBWM",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameterized Riemannian metric on SPD matrices.
///
/// `theta` is the power deformation. For the Bures–Wasserstein families the
/// underlying pullback is through `P ↦ P^{2θ}` with a `1/(4θ²)` scale, so
/// `theta` keeps the same meaning as for the other families at the identity.
/// A GBWM without an explicit weight uses `M = P^{2θ}` at basepoint `P`,
/// the locally-AIM choice.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    Lem { alpha: f64, beta: f64 },
    Aim { theta: f64, alpha: f64, beta: f64 },
    Em { theta: f64, alpha: f64, beta: f64 },
    Mpem { theta1: f64, theta2: f64 },
    Lcm { theta: f64 },
    Bwm { theta: f64 },
    Gbwm { theta: f64, m: Option<SpdMatrix> },
}

impl MetricSpec {
    /// Standard log-Euclidean metric.
    pub fn lem() -> Self {
        MetricSpec::Lem { alpha: 1.0, beta: 0.0 }
    }

    /// Power-Euclidean metric, i.e. `(θ,1,0)`-EM.
    pub fn pem(theta: f64) -> Self {
        MetricSpec::Em { theta, alpha: 1.0, beta: 0.0 }
    }

    pub fn aim(theta: f64) -> Self {
        MetricSpec::Aim { theta, alpha: 1.0, beta: 0.0 }
    }

    pub fn family(&self) -> Family {
        match self {
            MetricSpec::Lem { .. } => Family::Lem,
            MetricSpec::Aim { .. } => Family::Aim,
            MetricSpec::Em { .. } => Family::Em,
            MetricSpec::Mpem { .. } => Family::Mpem,
            MetricSpec::Lcm { .. } => Family::Lcm,
            MetricSpec::Bwm { .. } => Family::Bwm,
            MetricSpec::Gbwm { .. } => Family::Gbwm,
        }
    }

    /// `(α, β)` of the O(n)-invariant inner product; `(1, 0)` for families without it.
    pub fn alpha_beta(&self) -> (f64, f64) {
        match *self {
            MetricSpec::Lem { alpha, beta }
            | MetricSpec::Aim { alpha, beta, .. }
            | MetricSpec::Em { alpha, beta, .. } => (alpha, beta),
            _ => (1.0, 0.0),
        }
    }

    /// The exponent `θ₀` appearing in the power-type logarithm at the identity.
    pub fn theta0(&self) -> Option<f64> {
        match *self {
            MetricSpec::Lem { .. } => None,
            MetricSpec::Mpem { theta1, theta2 } => Some(0.5 * (theta1 + theta2)),
            MetricSpec::Aim { theta, .. }
            | MetricSpec::Em { theta, .. }
            | MetricSpec::Lcm { theta }
            | MetricSpec::Bwm { theta }
            | MetricSpec::Gbwm { theta, .. } => Some(theta),
        }
    }

    /// Power of the deformation map `P ↦ P^p` the family is pulled back through
    /// (`None` for LEM, which is deformation-invariant, and MPEM, which is not a pullback).
    pub(crate) fn deformation_power(&self) -> Option<f64> {
        match *self {
            MetricSpec::Aim { theta, .. } | MetricSpec::Em { theta, .. } | MetricSpec::Lcm { theta } => Some(theta),
            MetricSpec::Bwm { theta } | MetricSpec::Gbwm { theta, .. } => Some(2.0 * theta),
            MetricSpec::Lem { .. } | MetricSpec::Mpem { .. } => None,
        }
    }

    /// Checks parameter constraints against the matrix dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let (alpha, beta) = self.alpha_beta();
        check_alpha_beta(alpha, beta, n)?;
        let nonzero = |name: &str, t: f64| {
            if t == 0.0 || !t.is_finite() {
                Err(Error::Config(format!("{}: {name} must be finite and nonzero, got {t}", self.family())))
            } else {
                Ok(())
            }
        };
        match self {
            MetricSpec::Lem { .. } => {}
            MetricSpec::Mpem { theta1, theta2 } => {
                nonzero("theta1", *theta1)?;
                nonzero("theta2", *theta2)?;
                nonzero("theta1 + theta2", theta1 + theta2)?;
            }
            MetricSpec::Gbwm { theta, m } => {
                nonzero("theta", *theta)?;
                if let Some(m) = m {
                    if m.n() != n {
                        return Err(Error::Shape(format!("GBWM weight is {}x{0}, expected {n}x{n}", m.n())));
                    }
                }
            }
            MetricSpec::Aim { theta, .. }
            | MetricSpec::Em { theta, .. }
            | MetricSpec::Lcm { theta }
            | MetricSpec::Bwm { theta } => nonzero("theta", *theta)?,
        }
        Ok(())
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Lem { alpha, beta } => write!(f, "({alpha},{beta})-LEM"),
            MetricSpec::Aim { theta, alpha, beta } => write!(f, "({theta},{alpha},{beta})-AIM"),
            MetricSpec::Em { theta, alpha, beta } => write!(f, "({theta},{alpha},{beta})-EM"),
            MetricSpec::Mpem { theta1, theta2 } => write!(f, "({theta1},{theta2})-MPEM"),
            MetricSpec::Lcm { theta } => write!(f, "{theta}-LCM"),
            MetricSpec::Bwm { theta } => write!(f, "{theta}-BWM"),
            MetricSpec::Gbwm { theta, m: None } => write!(f, "({theta},local)-GBWM"),
            MetricSpec::Gbwm { theta, m: Some(_) } => write!(f, "({theta},M)-GBWM"),
        }
    }
}

pub(crate) fn check_alpha_beta(alpha: f64, beta: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0) || !(alpha + n as f64 * beta > 0.0) {
        return Err(Error::Config(format!(
            "(alpha, beta) = ({alpha}, {beta}) violates alpha > 0 and alpha + n*beta > 0 for n = {n}"
        )));
    }
    Ok(())
}

/// The O(n)-invariant inner product `α⟨V,W⟩ + β tr(V) tr(W)`.
pub fn inner_ab(v: &SymMatrix, w: &SymMatrix, alpha: f64, beta: f64) -> Result<f64> {
    if v.n() != w.n() {
        return Err(Error::Shape(format!("inner_ab: {}x{0} vs {}x{1}", v.n(), w.n())));
    }
    check_alpha_beta(alpha, beta, v.n())?;
    Ok(alpha * v.frob_dot(w) + beta * v.trace() * w.trace())
}

/// A tangent vector together with its basepoint.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentAt {
    pub base: SpdMatrix,
    pub vec: SymMatrix,
}
