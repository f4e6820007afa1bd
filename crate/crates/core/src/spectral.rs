//! Finite spectral model of a nonnegative self-adjoint operator.
//!
//! `A` is diagonal in its eigenbasis, so it is stored as the list of its
//! eigenvalues and vectors are stored as coefficients in that basis.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Nondecreasing list of nonnegative eigenvalues. Multiplicity is expressed by
/// repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Config("spectrum must have at least one eigenvalue".into()));
        }
        for (k, &lambda) in eigenvalues.iter().enumerate() {
            if !lambda.is_finite() || lambda < 0.0 {
                return Err(Error::Config(format!(
                    "eigenvalue {} = {lambda} is not a finite nonnegative number",
                    k + 1
                )));
            }
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("eigenvalues must be sorted nondecreasing".into()));
        }
        Ok(Self { eigenvalues })
    }

    /// `lambda_k = a * k^q` for `k = 1..=n`.
    pub fn power_law(a: f64, q: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spectrum size n must be at least 1".into()));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!("spectrum coefficient a = {a} must be nonnegative")));
        }
        if !q.is_finite() || q < 0.0 {
            return Err(Error::Config(format!("spectrum exponent q = {q} must be nonnegative")));
        }
        Self::new((1..=n).map(|k| a * (k as f64).powf(q)).collect())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is nonempty")
    }

    /// Coercivity constant `nu`, the smallest eigenvalue.
    pub fn coercivity(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn is_coercive(&self) -> bool {
        self.coercivity() > 0.0
    }

    /// Smallest strictly positive eigenvalue, if any.
    pub fn smallest_positive(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&l| l > 0.0)
    }

    pub fn check(&self, x: &ModalVector, name: &str) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::Config(format!(
                "`{name}` has {} coefficients but the spectrum has {} eigenvalues",
                x.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// `|A^order x|^2 = sum_k lambda_k^(2 order) x_k^2`, with `0^0 = 1`.
    pub fn sobolev_norm_sq(&self, x: &ModalVector, order: f64) -> Result<f64> {
        self.check(x, "x")?;
        if !(order >= 0.0) {
            return Err(Error::Domain(format!("norm order {order} must be nonnegative")));
        }
        Ok(self.norm_sq_unchecked(x.as_slice(), order))
    }

    /// `sobolev_norm_sq` without validation, for hot loops over solver states.
    pub(crate) fn norm_sq_unchecked(&self, x: &[f64], order: f64) -> f64 {
        let exponent = 2.0 * order;
        let mut acc = CompensatedSum::default();
        for (&lambda, &xk) in self.eigenvalues.iter().zip(x) {
            let weight = if exponent == 0.0 {
                1.0
            } else if exponent == 1.0 {
                lambda
            } else if exponent == 2.0 {
                lambda * lambda
            } else {
                lambda.powf(exponent)
            };
            acc.add(weight * xk * xk);
        }
        acc.value()
    }

    /// `(Ax)_k = lambda_k x_k`.
    pub fn apply_a(&self, x: &ModalVector) -> Result<ModalVector> {
        self.check(x, "x")?;
        Ok(ModalVector(
            self.eigenvalues.iter().zip(x.iter()).map(|(l, xk)| l * xk).collect(),
        ))
    }
}

/// Configuration form of a spectrum: `{"kind": "explicit", "values": [...]}` or
/// `{"kind": "power", "a": .., "q": .., "n": ..}` for `lambda_k = a k^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumSpec {
    Explicit { values: Vec<f64> },
    Power { a: f64, q: f64, n: usize },
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<Spectrum> {
        match self {
            SpectrumSpec::Explicit { values } => Spectrum::new(values.clone()),
            SpectrumSpec::Power { a, q, n } => Spectrum::power_law(*a, *q, *n),
        }
    }
}

/// Coefficients of a vector of `H` in the eigenbasis of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModalVector(pub Vec<f64>);

impl ModalVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    /// `self - other`, coefficientwise.
    pub fn sub(&self, other: &ModalVector) -> ModalVector {
        ModalVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, factor: f64) -> ModalVector {
        ModalVector(self.0.iter().map(|x| factor * x).collect())
    }
}

impl From<Vec<f64>> for ModalVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for ModalVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
