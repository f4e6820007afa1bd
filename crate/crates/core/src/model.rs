//! Nonlinearity `m`, dissipation `b`, regime classification and the corrector
//! initial velocity.

use serde::{Deserialize, Serialize};

use crate::spectral::{ModalVector, Spectrum};
use crate::{Error, Result};

/// Stiffness coefficient `m(sigma)`, evaluated at `sigma = |A^{1/2} u|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NonlinearitySpec", into = "NonlinearitySpec")]
pub enum Nonlinearity {
    /// `m(sigma) = sigma^gamma`.
    Power { gamma: f64 },
    Table(LipschitzTable),
}

/// Piecewise-linear `m` through `(sigma_i, m_i)`, extended constantly past the
/// last breakpoint. The first breakpoint is at `sigma = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTable {
    sigma: Vec<f64>,
    values: Vec<f64>,
    /// `M(sigma_i)`, exact integrals of the linear pieces.
    primitive: Vec<f64>,
    mu: f64,
}

impl LipschitzTable {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let Some(&(first, _)) = points.first() else {
            return Err(Error::Config("`m.points` must contain at least one breakpoint".into()));
        };
        if first != 0.0 {
            return Err(Error::Config("`m.points` must start at sigma = 0".into()));
        }
        for &(s, v) in points {
            if !s.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "`m.points` entry ({s}, {v}) must be finite with m >= 0"
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("`m.points` sigma values must be strictly increasing".into()));
        }
        let sigma: Vec<f64> = points.iter().map(|p| p.0).collect();
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut primitive = Vec::with_capacity(points.len());
        primitive.push(0.0);
        for i in 1..points.len() {
            let area = 0.5 * (values[i - 1] + values[i]) * (sigma[i] - sigma[i - 1]);
            primitive.push(primitive[i - 1] + area);
        }
        let mu = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            sigma,
            values,
            primitive,
            mu,
        })
    }

    /// Constant table `m == value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(&[(0.0, value)])
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.sigma.iter().copied().zip(self.values.iter().copied()).collect()
    }

    /// Index of the segment `[sigma_i, sigma_{i+1})` containing `s`, or the last
    /// breakpoint index when `s` lies past the table.
    fn segment(&self, s: f64) -> usize {
        self.sigma.partition_point(|&x| x <= s).saturating_sub(1)
    }

    fn eval(&self, s: f64) -> NonlinearityValue {
        let i = self.segment(s);
        if i + 1 >= self.sigma.len() {
            let last = self.values[i];
            return NonlinearityValue {
                m: last,
                primitive: self.primitive[i] + last * (s - self.sigma[i]),
                derivative: 0.0,
            };
        }
        let slope = (self.values[i + 1] - self.values[i]) / (self.sigma[i + 1] - self.sigma[i]);
        let ds = s - self.sigma[i];
        NonlinearityValue {
            m: self.values[i] + slope * ds,
            primitive: self.primitive[i] + self.values[i] * ds + 0.5 * slope * ds * ds,
            derivative: slope,
        }
    }
}

/// `m`, its primitive `M(sigma) = int_0^sigma m` and its right derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityValue {
    pub m: f64,
    pub primitive: f64,
    /// `f64::INFINITY` at the kink of `sigma^gamma`, `gamma < 1`, `sigma = 0`.
    pub derivative: f64,
}

impl Nonlinearity {
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("`m.gamma` = {gamma} must be positive")));
        }
        Ok(Nonlinearity::Power { gamma })
    }

    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        LipschitzTable::new(points).map(Nonlinearity::Table)
    }

    pub fn constant(value: f64) -> Result<Self> {
        LipschitzTable::constant(value).map(Nonlinearity::Table)
    }

    pub fn eval(&self, sigma: f64) -> Result<NonlinearityValue> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!("m evaluated at sigma = {sigma} < 0")));
        }
        Ok(self.eval_unchecked(sigma))
    }

    pub(crate) fn eval_unchecked(&self, sigma: f64) -> NonlinearityValue {
        match self {
            Nonlinearity::Power { gamma } => {
                let g = *gamma;
                let derivative = if sigma == 0.0 {
                    if g < 1.0 {
                        f64::INFINITY
                    } else if g == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    g * sigma.powf(g - 1.0)
                };
                NonlinearityValue {
                    m: sigma.powf(g),
                    primitive: sigma.powf(g + 1.0) / (g + 1.0),
                    derivative,
                }
            }
            Nonlinearity::Table(t) => t.eval(sigma),
        }
    }

    /// `m(sigma)` alone; `sigma` is clamped at zero against roundoff.
    pub(crate) fn m(&self, sigma: f64) -> f64 {
        let s = sigma.max(0.0);
        match self {
            Nonlinearity::Power { gamma } => {
                if *gamma == 1.0 {
                    s
                } else {
                    s.powf(*gamma)
                }
            }
            Nonlinearity::Table(t) => t.eval(s).m,
        }
    }

    /// `mu = inf m`.
    pub fn mu(&self) -> f64 {
        match self {
            Nonlinearity::Power { .. } => 0.0,
            Nonlinearity::Table(t) => t.mu(),
        }
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.mu() > 0.0
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Nonlinearity::Power { gamma } => Some(*gamma),
            Nonlinearity::Table(_) => None,
        }
    }

    /// `max_{0 <= s <= sigma} m(s)`.
    pub fn max_on(&self, sigma: f64) -> f64 {
        match self {
            Nonlinearity::Power { .. } => self.m(sigma),
            Nonlinearity::Table(t) => {
                let i = t.segment(sigma.max(0.0));
                t.values[..=i]
                    .iter()
                    .copied()
                    .fold(t.eval(sigma.max(0.0)).m, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NonlinearitySpec {
    Power { gamma: f64 },
    Table { points: Vec<(f64, f64)> },
}

impl TryFrom<NonlinearitySpec> for Nonlinearity {
    type Error = Error;
    fn try_from(s: NonlinearitySpec) -> Result<Self> {
        match s {
            NonlinearitySpec::Power { gamma } => Nonlinearity::power(gamma),
            NonlinearitySpec::Table { points } => Nonlinearity::table(&points),
        }
    }
}

impl From<Nonlinearity> for NonlinearitySpec {
    fn from(n: Nonlinearity) -> Self {
        match n {
            Nonlinearity::Power { gamma } => NonlinearitySpec::Power { gamma },
            Nonlinearity::Table(t) => NonlinearitySpec::Table { points: t.points() },
        }
    }
}

/// Damping coefficient `b(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DissipationSpec", into = "DissipationSpec")]
pub enum Dissipation {
    /// `b(t) = (1+t)^{-p}`.
    PowerLaw { p: f64 },
    /// `b(t) = delta`.
    Constant { delta: f64 },
}

impl Dissipation {
    pub fn power_law(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Config(format!("`b.p` = {p} must be nonnegative")));
        }
        Ok(Dissipation::PowerLaw { p })
    }

    pub fn constant(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Config(format!("`b.delta` = {delta} must be positive")));
        }
        Ok(Dissipation::Constant { delta })
    }

    /// `b(t)`.
    pub fn b(&self, t: f64) -> f64 {
        match *self {
            Dissipation::PowerLaw { p } => {
                if p == 0.0 {
                    1.0
                } else {
                    (-p * t.ln_1p()).exp()
                }
            }
            Dissipation::Constant { delta } => delta,
        }
    }

    /// `B(t) = int_0^t b`, in closed form. `t = +inf` gives the total integral.
    pub fn primitive(&self, t: f64) -> f64 {
        match *self {
            Dissipation::PowerLaw { p } => {
                let log1t = t.ln_1p();
                if p == 1.0 {
                    log1t
                } else {
                    let k = 1.0 - p;
                    (k * log1t).exp_m1() / k
                }
            }
            Dissipation::Constant { delta } => delta * t,
        }
    }

    /// `(b(t), B(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.b(t), self.primitive(t))
    }

    pub fn b0(&self) -> f64 {
        self.b(0.0)
    }

    /// Decay exponent `p`; constant dissipation counts as `p = 0`.
    pub fn p(&self) -> f64 {
        match *self {
            Dissipation::PowerLaw { p } => p,
            Dissipation::Constant { .. } => 0.0,
        }
    }

    /// `delta = inf b`.
    pub fn delta(&self) -> f64 {
        match *self {
            Dissipation::PowerLaw { p } => {
                if p == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Dissipation::Constant { delta } => delta,
        }
    }

    /// Whether `int_0^inf b < inf`.
    pub fn is_integrable(&self) -> bool {
        match *self {
            Dissipation::PowerLaw { p } => p > 1.0,
            Dissipation::Constant { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DissipationSpec {
    Power { p: f64 },
    Constant { delta: f64 },
}

impl TryFrom<DissipationSpec> for Dissipation {
    type Error = Error;
    fn try_from(s: DissipationSpec) -> Result<Self> {
        match s {
            DissipationSpec::Power { p } => Dissipation::power_law(p),
            DissipationSpec::Constant { delta } => Dissipation::constant(delta),
        }
    }
}

impl From<Dissipation> for DissipationSpec {
    fn from(d: Dissipation) -> Self {
        match d {
            Dissipation::PowerLaw { p } => DissipationSpec::Power { p },
            Dissipation::Constant { delta } => DissipationSpec::Constant { delta },
        }
    }
}

/// Threshold of the parabolic region for `m = sigma^gamma` on a noncoercive
/// operator.
pub fn p_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
    }
    Ok(if gamma >= 1.0 {
        let g2 = gamma * gamma;
        (g2 + 1.0) / (g2 + 2.0 * gamma - 1.0)
    } else {
        gamma / (gamma + 2.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    Parabolic,
    Hyperbolic,
    NoMansLand,
    NoTheory,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Parabolic => "Parabolic",
            RegimeTag::Hyperbolic => "Hyperbolic",
            RegimeTag::NoMansLand => "NoMansLand",
            RegimeTag::NoTheory => "NoTheory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// `p_gamma`, reported for power nonlinearities on noncoercive operators.
    pub threshold: Option<f64>,
}

pub fn classify_regime(nl: &Nonlinearity, dis: &Dissipation, coercive: bool) -> Regime {
    let p = dis.p();
    let threshold = match nl {
        Nonlinearity::Power { gamma } if !coercive => p_gamma(*gamma).ok(),
        _ => None,
    };
    let tag = if p > 1.0 {
        RegimeTag::Hyperbolic
    } else if nl.is_nondegenerate() {
        RegimeTag::Parabolic
    } else {
        match nl {
            Nonlinearity::Power { .. } if coercive => RegimeTag::Parabolic,
            Nonlinearity::Power { .. } => {
                if p <= threshold.expect("threshold set for noncoercive power") {
                    RegimeTag::Parabolic
                } else {
                    RegimeTag::NoMansLand
                }
            }
            Nonlinearity::Table(_) => {
                if p > 0.0 {
                    RegimeTag::NoTheory
                } else {
                    RegimeTag::Parabolic
                }
            }
        }
    };
    Regime { tag, threshold }
}

/// Corrector initial velocity `w0 = u1 + m(|A^{1/2}u0|^2) A u0 / b(0)`.
pub fn compute_w0(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    u0: &ModalVector,
    u1: &ModalVector,
) -> Result<ModalVector> {
    spec.check(u0, "u0")?;
    spec.check(u1, "u1")?;
    let c0 = nl.m(spec.norm_sq_unchecked(u0.as_slice(), 0.5));
    let scale = c0 / dis.b0();
    Ok(ModalVector(
        spec.eigenvalues()
            .iter()
            .zip(u0.iter().zip(u1.iter()))
            .map(|(l, (a, v))| v + scale * l * a)
            .collect(),
    ))
}

/// The mild degeneracy condition `m(|A^{1/2}u0|^2) != 0`.
pub fn is_mildly_degenerate(spec: &Spectrum, nl: &Nonlinearity, u0: &ModalVector) -> bool {
    nl.m(spec.norm_sq_unchecked(u0.as_slice(), 0.5)) != 0.0
}
