use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::symlin::funcs::{apply_loewner, spectral_loewner};
use crate::symlin::{
    cholesky, dchol_adjoint, newton_schulz_sqrt, strict_lower, sym_eig, EigDecomp, LowerTri, Matrix, SpdMatrix,
    SpectralFn, SymMatrix,
};

/// Matrix map applied to the pooled covariance before the FC layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadTag {
    LogEmlr,
    PowEmlr,
    ScalePowEmlr,
    PowTmlr,
    ChoTmlr,
    PowEmlrPrime,
}

impl HeadTag {
    pub const ALL: [HeadTag; 6] = [
        HeadTag::LogEmlr,
        HeadTag::PowEmlr,
        HeadTag::ScalePowEmlr,
        HeadTag::PowTmlr,
        HeadTag::ChoTmlr,
        HeadTag::PowEmlrPrime,
    ];

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            HeadTag::LogEmlr => "log",
            HeadTag::PowEmlr => "pow",
            HeadTag::ScalePowEmlr => "scalepow",
            HeadTag::PowTmlr => "powtmlr",
            HeadTag::ChoTmlr => "chotmlr",
            HeadTag::PowEmlrPrime => "powprime",
        }
    }

    pub fn uses_theta(self) -> bool {
        self != HeadTag::LogEmlr
    }
}

impl serde::Serialize for HeadTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.cli_name())
    }
}

impl<'de> serde::Deserialize<'de> for HeadTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for HeadTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for HeadTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeadTag::ALL
            .into_iter()
            .find(|t| t.cli_name() == s)
            .ok_or_else(|| Error::Config(format!("unknown head `{s}`")))
    }
}

/// A classifier head: tag, power and the shared anchor of the primed variant.
///
/// The anchor starts SPD but is trained by plain SGD on its entries, so it is
/// only required to be symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadKind {
    pub tag: HeadTag,
    pub theta: f64,
    pub shared_p: Option<SymMatrix>,
    /// Newton–Schulz iterations for the forward square root; only valid at `theta = 0.5`.
    pub newton_schulz: Option<usize>,
}

impl HeadKind {
    pub fn new(tag: HeadTag, theta: f64) -> Self {
        Self { tag, theta, shared_p: None, newton_schulz: None }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.tag.uses_theta() && (self.theta == 0.0 || !self.theta.is_finite()) {
            return Err(Error::Config(format!("head {} needs a finite nonzero theta", self.tag)));
        }
        if self.newton_schulz.is_some() && (self.theta != 0.5 || !self.tag.uses_theta()) {
            return Err(Error::Config("Newton–Schulz square root is only available for theta = 0.5".into()));
        }
        match (&self.shared_p, self.tag) {
            (Some(p), HeadTag::PowEmlrPrime) if p.n() != n => {
                Err(Error::Shape(format!("shared anchor is {}x{0}, input is {n}x{n}", p.n())))
            }
            (None, HeadTag::PowEmlrPrime) => Err(Error::Config("powprime head needs a shared anchor".into())),
            _ => Ok(()),
        }
    }
}

/// Intermediate values of a forward pass, reused by the backward pass.
#[derive(Clone, Debug)]
pub struct HeadCache {
    pub feature: SymMatrix,
    eig: EigDecomp,
    chol: Option<LowerTri>,
}

impl HeadCache {
    /// Same cache with the FC input replaced, e.g. after the shared anchor moved.
    pub fn with_feature(&self, feature: SymMatrix) -> HeadCache {
        HeadCache { feature, eig: self.eig.clone(), chol: self.chol.clone() }
    }
}

fn check_fc(n: usize, a: &Matrix, b: &[f64]) -> Result<()> {
    if a.cols() != n * n || a.rows() != b.len() {
        return Err(Error::Shape(format!(
            "FC weights {}x{} and bias {} do not fit {n}x{n} inputs",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    Ok(())
}

fn spectrum_map(eig: &EigDecomp, f: impl Fn(f64) -> f64) -> SymMatrix {
    let s: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    SymMatrix::from_matrix_unchecked(eig.recompose_with(&s))
}

/// The matrix fed to the FC layer (before flattening).
pub fn head_feature(kind: &HeadKind, s: &SpdMatrix) -> Result<HeadCache> {
    let n = s.n();
    kind.validate(n)?;
    let eig = sym_eig(&s.as_sym())?;
    if let Some(&l) = eig.values.last() {
        if !(l > 0.0) {
            return Err(Error::domain("head_feature", format!("input eigenvalue {l:.3e} is not positive")));
        }
    }
    let theta = kind.theta;
    let power = || -> Result<SymMatrix> {
        match kind.newton_schulz {
            Some(iters) => Ok(newton_schulz_sqrt(s, iters)?.as_sym()),
            None => Ok(spectrum_map(&eig, |l| l.powf(theta))),
        }
    };
    let mut chol = None;
    let feature = match kind.tag {
        HeadTag::LogEmlr => spectrum_map(&eig, f64::ln),
        HeadTag::PowEmlr => power()?,
        HeadTag::ScalePowEmlr => power()?.scale(1.0 / theta.abs()),
        HeadTag::PowTmlr => power()?.sub(&SymMatrix::identity(n)).scale(1.0 / theta),
        HeadTag::ChoTmlr => {
            let l = cholesky(&SpdMatrix::from_sym(power()?)?)?;
            let low = strict_lower(l.as_matrix());
            let mut x = &low + &low.transpose();
            for i in 0..n {
                x[(i, i)] = 2.0 * l[(i, i)].ln();
            }
            chol = Some(l);
            SymMatrix::from_matrix_unchecked(x.scale(1.0 / theta))
        }
        HeadTag::PowEmlrPrime => {
            let p = kind.shared_p.as_ref().expect("validated");
            power()?.sub(p)
        }
    };
    Ok(HeadCache { feature, eig, chol })
}

/// `A · vec(X) + b`; the primed head has no bias.
pub fn fc_forward(kind: &HeadKind, feature: &SymMatrix, a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = feature.n();
    check_fc(n, a, b)?;
    let mut logits = a.mat_vec(feature.as_matrix().as_slice());
    if kind.tag != HeadTag::PowEmlrPrime {
        for (z, bk) in logits.iter_mut().zip(b) {
            *z += bk;
        }
    }
    Ok(logits)
}

/// Logits of the head: matrix map, flattening, then the FC layer `A·vec(X) + b`.
pub fn head_forward(kind: &HeadKind, s: &SpdMatrix, a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_fc(s.n(), a, b)?;
    let cache = head_feature(kind, s)?;
    fc_forward(kind, &cache.feature, a, b)
}

/// Gradients of a scalar loss given `dL/dlogits`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// `dL/dS`, present when requested.
    pub input: Option<SymMatrix>,
    /// `dL/dP` of the primed head's shared anchor.
    pub shared_p: Option<SymMatrix>,
}

/// Backward pass through the FC layer and, if `want_input`, through the matrix map.
///
/// With Newton–Schulz enabled the input gradient uses the exact square-root
/// differential rather than differentiating the iteration.
pub fn head_backward(
    kind: &HeadKind,
    cache: &HeadCache,
    a: &Matrix,
    dlogits: &[f64],
    want_input: bool,
) -> Result<HeadGrads> {
    let n = cache.feature.n();
    if a.rows() != dlogits.len() || a.cols() != n * n {
        return Err(Error::Shape("head_backward: weights do not match cotangent".into()));
    }
    let x = cache.feature.as_matrix().as_slice();
    let weights = Matrix::from_fn(a.rows(), a.cols(), |k, j| dlogits[k] * x[j]);
    let bias = if kind.tag == HeadTag::PowEmlrPrime { vec![0.0; dlogits.len()] } else { dlogits.to_vec() };

    let need_feature_grad = want_input || kind.tag == HeadTag::PowEmlrPrime;
    let mut grads = HeadGrads { weights, bias, input: None, shared_p: None };
    if !need_feature_grad {
        return Ok(grads);
    }
    // dL/dX = Σ_k g_k · mat(A_k), symmetrized onto Sym(n)
    let flat: Vec<f64> = (0..n * n)
        .map(|j| (0..a.rows()).map(|k| dlogits[k] * a[(k, j)]).sum())
        .collect();
    let xbar = SymMatrix::from_matrix_unchecked(Matrix::new(n, n, flat)?);
    if kind.tag == HeadTag::PowEmlrPrime {
        grads.shared_p = Some(xbar.scale(-1.0));
    }
    if want_input {
        grads.input = Some(feature_vjp(kind, cache, &xbar));
    }
    Ok(grads)
}

/// Pulls a feature cotangent back to the input covariance.
fn feature_vjp(kind: &HeadKind, cache: &HeadCache, xbar: &SymMatrix) -> SymMatrix {
    let theta = kind.theta;
    let eig = &cache.eig;
    let pow_vjp = |g: &SymMatrix| apply_loewner(eig, &spectral_loewner(&eig.values, SpectralFn::Pow(theta)), g);
    match kind.tag {
        HeadTag::LogEmlr => apply_loewner(eig, &spectral_loewner(&eig.values, SpectralFn::Log), xbar),
        HeadTag::PowEmlr | HeadTag::PowEmlrPrime => pow_vjp(xbar),
        HeadTag::ScalePowEmlr => pow_vjp(&xbar.scale(1.0 / theta.abs())),
        HeadTag::PowTmlr => pow_vjp(&xbar.scale(1.0 / theta)),
        HeadTag::ChoTmlr => {
            let l = cache.chol.as_ref().expect("cholesky cached for ChoTMLR");
            let n = l.n();
            let xm = xbar.as_matrix();
            let gl = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Greater => (xm[(i, j)] + xm[(j, i)]) / theta,
                std::cmp::Ordering::Equal => 2.0 * xm[(i, i)] / (theta * l[(i, i)]),
                std::cmp::Ordering::Less => 0.0,
            });
            pow_vjp(&dchol_adjoint(l, &gl))
        }
    }
}
