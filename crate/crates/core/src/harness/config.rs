//! Experiment configuration documents.
//!
//! A configuration is a JSON object. Unknown keys are rejected everywhere.
//!
//! ```json
//! {
//!   "kind": "simulate",
//!   "spectrum": { "kind": "explicit", "values": [1.0, 4.0] },
//!   "m": { "kind": "power", "gamma": 1.0 },
//!   "b": { "kind": "power", "p": 0.0 },
//!   "eps": 0.01,
//!   "u0": [1.0, 0.5],
//!   "u1": [0.0, 0.0],
//!   "settings": { "grid": { "kind": "log", "t_end": 100.0 } }
//! }
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::DEFAULT_TOL_EXPONENT;
use crate::integrate::IntegratorSettings;
use crate::model::{Dissipation, Nonlinearity};
use crate::spectral::{ModalVector, Spectrum, SpectrumSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Simulate,
    Limit,
    SweepEps,
    RegimeGrid,
    Verify,
    Corrector,
}

impl PlanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanKind::Simulate => "simulate",
            PlanKind::Limit => "limit",
            PlanKind::SweepEps => "sweep_eps",
            PlanKind::RegimeGrid => "regime_grid",
            PlanKind::Verify => "verify",
            PlanKind::Corrector => "corrector",
        }
    }
}

/// Bisection bounds for the empirical `eps_0` probe of a `simulate` plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eps0Probe {
    pub eps_lo: f64,
    pub eps_hi: f64,
    #[serde(default = "default_bisections")]
    pub bisections: usize,
}

fn default_bisections() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Fit window in `t`; defaults to the last two decades of `1+t`.
    pub fit_window: Option<(f64, f64)>,
    pub tol_exponent: f64,
    /// Sobolev orders `k` of the `E_k` energy channels.
    pub orders: Vec<f64>,
    /// Expected `eps`-order of the sweep error channels and its tolerance.
    pub expected_order: f64,
    pub order_tol: f64,
    /// Bound on `max / min` over the sweep of `sup (1+t)^{p+1} |A^{1/2} rho|^2 / eps^2`.
    pub weighted_ratio_max: f64,
    /// Sup-relative agreement required between the two parabolic solvers.
    pub equivalence_tol: f64,
    /// Relative slack on Hamiltonian increases and floor violations.
    pub hamiltonian_slack: f64,
    pub eps0_probe: Option<Eps0Probe>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            fit_window: None,
            tol_exponent: DEFAULT_TOL_EXPONENT,
            orders: vec![0.0, 0.5, 1.0],
            expected_order: 2.0,
            order_tol: 0.3,
            weighted_ratio_max: 10.0,
            equivalence_tol: 1e-6,
            hamiltonian_slack: 1e-8,
            eps0_probe: None,
        }
    }
}

/// Lattice axis: an explicit list or `count` equispaced points on `[from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Axis {
    List(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { from, to, count } => match count {
                0 => Vec::new(),
                1 => vec![*from],
                n => (0..*n)
                    .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// `(gamma, p)` lattice of a regime map for `m(sigma) = sigma^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub gamma: Axis,
    pub p: Axis,
    #[serde(default)]
    pub coercive: bool,
}

/// The configuration document as written, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default)]
    pub kind: Option<PlanKind>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default)]
    pub m: Option<Nonlinearity>,
    #[serde(default)]
    pub b: Option<Dissipation>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub u0: Option<ModalVector>,
    #[serde(default)]
    pub u1: Option<ModalVector>,
    #[serde(default)]
    pub settings: IntegratorSettings,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub lattice: Option<Lattice>,
    /// Worker threads for sweeps; defaults to the available parallelism.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

/// Spectrum, coefficients and initial data of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSetup {
    pub spectrum: Spectrum,
    pub m: Nonlinearity,
    pub b: Dissipation,
    pub u0: ModalVector,
    pub u1: ModalVector,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub kind: PlanKind,
    pub config: PlanConfig,
    /// Absent only for regime maps.
    pub model: Option<ModelSetup>,
    pub jobs: usize,
    /// Echoed into the manifest; no solver reads it.
    pub seed: Option<u64>,
}

pub fn load_config(text: &str) -> Result<ExperimentPlan> {
    let config: PlanConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    ExperimentPlan::from_config(config)
}

pub fn load_config_file(path: impl AsRef<std::path::Path>) -> Result<ExperimentPlan> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config(&text)
}

fn require<T: Clone>(value: &Option<T>, key: &str, kind: PlanKind) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::Config(format!("`{key}` is required for a {} plan", kind.as_str())))
}

fn check_eps(eps: f64, key: &str) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("`{key}` = {eps} must be positive")))
    }
}

impl ExperimentPlan {
    pub fn from_config(config: PlanConfig) -> Result<Self> {
        let kind = config
            .kind
            .ok_or_else(|| Error::Config("`kind` is required".into()))?;
        config.settings.validate()?;
        let a = &config.analysis;
        for (key, v) in [
            ("analysis.tol_exponent", a.tol_exponent),
            ("analysis.order_tol", a.order_tol),
            ("analysis.weighted_ratio_max", a.weighted_ratio_max),
            ("analysis.equivalence_tol", a.equivalence_tol),
            ("analysis.hamiltonian_slack", a.hamiltonian_slack),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("`{key}` = {v} must be positive")));
            }
        }
        if let Some((lo, hi)) = a.fit_window {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::Config(format!("`analysis.fit_window` = ({lo}, {hi}) is empty")));
            }
        }
        if let Some(probe) = &a.eps0_probe {
            if !(probe.eps_lo > 0.0 && probe.eps_lo < probe.eps_hi) {
                return Err(Error::Config("`analysis.eps0_probe` needs 0 < eps_lo < eps_hi".into()));
            }
        }
        if a.orders.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::Config("`analysis.orders` must be nonnegative".into()));
        }
        if config.jobs == Some(0) {
            return Err(Error::Config("`jobs` must be at least 1".into()));
        }
        if let Some(eps) = config.eps {
            check_eps(eps, "eps")?;
        }

        let model = if kind == PlanKind::RegimeGrid {
            let lattice = require(&config.lattice, "lattice", kind)?;
            for (key, axis) in [("lattice.gamma", &lattice.gamma), ("lattice.p", &lattice.p)] {
                let v = axis.values();
                if v.is_empty() {
                    return Err(Error::Config(format!("`{key}` is empty")));
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::Config(format!("`{key}` must be nonnegative")));
                }
            }
            if lattice.gamma.values().iter().any(|g| *g <= 0.0) {
                return Err(Error::Config("`lattice.gamma` must be positive".into()));
            }
            None
        } else {
            let spectrum = require(&config.spectrum, "spectrum", kind)?.build()?;
            let u0 = require(&config.u0, "u0", kind)?;
            spectrum.check(&u0, "u0")?;
            let u1 = config.u1.clone().unwrap_or_else(|| ModalVector::zeros(spectrum.len()));
            spectrum.check(&u1, "u1")?;
            Some(ModelSetup {
                m: require(&config.m, "m", kind)?,
                b: require(&config.b, "b", kind)?,
                spectrum,
                u0,
                u1,
            })
        };

        match kind {
            PlanKind::Simulate | PlanKind::Corrector => {
                require(&config.eps, "eps", kind)?;
            }
            PlanKind::SweepEps => {
                let list = require(&config.eps_list, "eps_list", kind)?;
                if list.len() < 2 {
                    return Err(Error::Config("`eps_list` needs at least two values".into()));
                }
                for e in &list {
                    check_eps(*e, "eps_list")?;
                }
                if list.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::Config("`eps_list` must be strictly decreasing".into()));
                }
            }
            _ => {}
        }

        let jobs = config
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Ok(ExperimentPlan {
            kind,
            config,
            model,
            jobs,
            seed: None,
        })
    }

    /// Overrides the plan kind, rejecting a document that names a different one.
    pub fn expect_kind(text: &str, kind: PlanKind) -> Result<Self> {
        let mut config: PlanConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match config.kind {
            Some(k) if k != kind => {
                return Err(Error::Config(format!(
                    "`kind` is {} but a {} plan was requested",
                    k.as_str(),
                    kind.as_str()
                )))
            }
            _ => config.kind = Some(kind),
        }
        Self::from_config(config)
    }

    /// Hash of everything that can change the payload files; `jobs` and the
    /// seed are excluded.
    pub fn config_hash(&self) -> String {
        let mut echo = self.config.clone();
        echo.kind = Some(self.kind);
        echo.jobs = None;
        let text = serde_json::to_string(&echo).expect("configuration serializes");
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..6])
    }

    pub fn dir_name(&self) -> String {
        format!("{}-{}", self.kind.as_str(), self.config_hash())
    }

    pub(crate) fn model(&self) -> &ModelSetup {
        self.model.as_ref().expect("validated plans other than regime maps carry a model")
    }

    pub(crate) fn eps(&self) -> Option<f64> {
        self.config.eps
    }
}
