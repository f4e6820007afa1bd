//! Decay-rate fitting, theoretical decay bounds, verification of trajectories
//! against them, singular-perturbation error series and the Hamiltonian floor.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energies::{hamiltonian_unchecked, EnergySeries};
use crate::integrate::{fmt_num, CorrectorTrajectory, Trajectory};
use crate::model::{classify_regime, Dissipation, Nonlinearity, RegimeTag};
use crate::spectral::{ModalVector, Spectrum};
use crate::{Error, Result};

/// Least-squares fit `ln(value) = log_coefficient + slope * x` over a window.
///
/// For power fits `exponent` is the slope against `ln(1+t)`. For exponential
/// fits it is the decay rate `alpha` in `C exp(-alpha (1+t)^{p+1})`, i.e. the
/// negated slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub log_coefficient: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
}

const MIN_FIT_SAMPLES: usize = 8;

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Samples inside `[lo, hi]`; `Ok(None)` when a value there is nonpositive or
/// undefined.
fn window_samples(times: &[f64], values: &[Option<f64>], window: (f64, f64)) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    if times.len() != values.len() {
        return Err(Error::Usage("times and values differ in length".into()));
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Usage(format!("fit window ({lo}, {hi}) is empty")));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    let mut bad = false;
    for (&ti, vi) in times.iter().zip(values) {
        if ti < lo || ti > hi {
            continue;
        }
        match vi {
            Some(x) if *x > 0.0 && x.is_finite() => {
                t.push(ti);
                v.push(*x);
            }
            _ => bad = true,
        }
    }
    if t.len() + usize::from(bad) < MIN_FIT_SAMPLES {
        return Err(Error::Usage(format!(
            "fit window ({lo}, {hi}) holds fewer than {MIN_FIT_SAMPLES} samples"
        )));
    }
    Ok((!bad).then_some((t, v)))
}

fn defined(values: &[f64]) -> Vec<Option<f64>> {
    values.iter().map(|&v| Some(v)).collect()
}

/// Fits `value ~ C (1+t)^beta`.
pub fn fit_power_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<Option<RateFit>> {
    fit_power_rate_opt(times, &defined(values), window)
}

pub fn fit_power_rate_opt(times: &[f64], values: &[Option<f64>], window: (f64, f64)) -> Result<Option<RateFit>> {
    let Some((t, v)) = window_samples(times, values, window)? else {
        return Ok(None);
    };
    let x: Vec<f64> = t.iter().map(|t| t.ln_1p()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let (slope, intercept, rms) = least_squares(&x, &y);
    Ok(Some(RateFit {
        exponent: slope,
        log_coefficient: intercept,
        window,
        rms_residual: rms,
    }))
}

/// Fits `value ~ C exp(-alpha (1+t)^{p+1})`; the returned exponent is `alpha`.
pub fn fit_exponential_rate(times: &[f64], values: &[f64], p: f64, window: (f64, f64)) -> Result<Option<RateFit>> {
    fit_exponential_rate_opt(times, &defined(values), p, window)
}

pub fn fit_exponential_rate_opt(
    times: &[f64],
    values: &[Option<f64>],
    p: f64,
    window: (f64, f64),
) -> Result<Option<RateFit>> {
    let Some((t, v)) = window_samples(times, values, window)? else {
        return Ok(None);
    };
    let x: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(p + 1.0)).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let (slope, intercept, rms) = least_squares(&x, &y);
    Ok(Some(RateFit {
        exponent: -slope,
        log_coefficient: intercept,
        window,
        rms_residual: rms,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// `|A^{1/2}u|^2`
    #[serde(rename = "E_half")]
    EHalf,
    /// `|Au|^2`
    #[serde(rename = "E_one")]
    EOne,
    /// `|u'|^2`
    #[serde(rename = "V")]
    V,
}

impl Quantity {
    pub fn channel_name(&self) -> &'static str {
        match self {
            Quantity::EHalf => "E_half",
            Quantity::EOne => "E_one",
            Quantity::V => "V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    PolyUpper,
    PolyLower,
    ExpUpper,
    ExpLower,
    IntegralUpper,
}

impl BoundKind {
    fn is_lower(&self) -> bool {
        matches!(self, BoundKind::PolyLower | BoundKind::ExpLower)
    }
}

/// One decay estimate.
///
/// * poly: `quantity <~ (1+t)^exponent` (upper) or `>~` (lower);
/// * exp: `quantity ~ (1+t)^weight exp(-a (1+t)^exponent)` for some `a > 0`;
/// * integral: `int (1+t)^weight quantity dt < inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub quantity: Quantity,
    pub kind: BoundKind,
    pub exponent: f64,
    pub weight_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub entries: Vec<BoundEntry>,
    pub regime: RegimeTag,
    pub coercive: bool,
    /// Dissipation exponent the bounds were generated for.
    pub p: f64,
    /// Set when no estimate applies to the configuration.
    pub skipped: Option<String>,
}

fn entry(quantity: Quantity, kind: BoundKind, exponent: f64, weight_exponent: Option<f64>) -> BoundEntry {
    BoundEntry {
        quantity,
        kind,
        exponent,
        weight_exponent,
    }
}

/// Decay estimates for the configuration, from the parabolic decay table and,
/// for hyperbolic runs with a nondegenerate nonlinearity, the weighted
/// estimates of the global hyperbolic theory.
pub fn predicted_bounds(nl: &Nonlinearity, dis: &Dissipation, coercive: bool, hyperbolic_run: bool) -> BoundSet {
    use BoundKind::*;
    use Quantity::*;
    let regime = classify_regime(nl, dis, coercive).tag;
    let p = dis.p();
    let mut set = BoundSet {
        entries: Vec::new(),
        regime,
        coercive,
        p,
        skipped: None,
    };
    // The decay table describes the parabolic problem for every p in [0, 1];
    // the regime only decides whether a hyperbolic run inherits it.
    if p > 1.0 || regime == RegimeTag::NoTheory || (hyperbolic_run && regime != RegimeTag::Parabolic) {
        set.skipped = Some(format!("no decay estimates in the {} regime", regime.as_str()));
        return set;
    }
    let e = &mut set.entries;
    if nl.is_nondegenerate() {
        if coercive {
            for q in [EHalf, EOne] {
                e.push(entry(q, ExpLower, p + 1.0, None));
                e.push(entry(q, ExpUpper, p + 1.0, None));
            }
            e.push(entry(V, ExpLower, p + 1.0, Some(2.0 * p)));
            e.push(entry(V, ExpUpper, p + 1.0, Some(2.0 * p)));
        } else {
            e.push(entry(EHalf, ExpLower, p + 1.0, None));
            e.push(entry(EHalf, PolyUpper, -(p + 1.0), None));
            e.push(entry(EOne, PolyUpper, -2.0 * (p + 1.0), None));
            e.push(entry(V, PolyUpper, -2.0, None));
        }
        if hyperbolic_run {
            if coercive {
                e.push(entry(EHalf, PolyUpper, -(p + 1.0), None));
                e.push(entry(EOne, PolyUpper, -2.0 * (p + 1.0), None));
                e.push(entry(V, PolyUpper, -2.0, None));
            }
            e.push(entry(EHalf, IntegralUpper, 0.0, Some(p)));
            e.push(entry(V, IntegralUpper, 0.0, Some(p)));
            e.push(entry(EOne, IntegralUpper, 0.0, Some(2.0 * p + 1.0)));
        }
    } else if let Some(g) = nl.gamma() {
        let rate = (p + 1.0) / g;
        if coercive {
            for q in [EHalf, EOne] {
                e.push(entry(q, PolyLower, -rate, None));
                e.push(entry(q, PolyUpper, -rate, None));
            }
            e.push(entry(V, PolyUpper, -(2.0 + rate), None));
        } else {
            e.push(entry(EHalf, PolyLower, -rate, None));
            e.push(entry(EHalf, PolyUpper, -(p + 1.0) / (g + 1.0), None));
            e.push(entry(EOne, PolyUpper, -rate, None));
            let v = (2.0 * g * g + (1.0 - p) * g + p + 1.0) / (g * g + g);
            e.push(entry(V, PolyUpper, -v, None));
        }
    } else {
        set.skipped = Some("degenerate tabulated nonlinearity has no decay table".into());
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub predicted: BoundEntry,
    pub fitted: Option<RateFit>,
    pub verdict: Verdict,
    /// Positive when the estimate holds with room to spare.
    pub margin: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub window: (f64, f64),
    pub tol_exponent: f64,
    pub entries: Vec<VerificationEntry>,
}

impl VerificationReport {
    pub fn worst(&self) -> Verdict {
        if self.entries.iter().any(|e| e.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.entries.iter().any(|e| e.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Skipped
        }
    }

    /// `{ config, entries: [{quantity, kind, predicted_exponent, fitted_exponent, verdict, margin}] }`.
    pub fn to_json(&self, config: serde_json::Value) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "quantity": e.predicted.quantity,
                    "kind": e.predicted.kind,
                    "predicted_exponent": e.predicted.exponent,
                    "weight_exponent": e.predicted.weight_exponent,
                    "fitted_exponent": e.fitted.map(|f| f.exponent),
                    "rms_residual": e.fitted.map(|f| f.rms_residual),
                    "verdict": e.verdict,
                    "margin": e.margin,
                    "note": e.note,
                })
            })
            .collect();
        serde_json::json!({
            "config": config,
            "window": [self.window.0, self.window.1],
            "tol_exponent": self.tol_exponent,
            "entries": entries,
        })
    }
}

/// The last two decades of `1+t`: `[(1+t_end)/100 - 1, t_end]`.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    let t_end = *times.last().unwrap_or(&0.0);
    ((1.0 + t_end) / 100.0 - 1.0, t_end)
}

pub const DEFAULT_TOL_EXPONENT: f64 = 0.07;

/// Whether `(1+t)^{-exponent} q(t)` does not grow across the window: its sup on
/// the second half is at most its sup on the first half.
fn weighted_sup_bounded(times: &[f64], values: &[f64], exponent: f64) -> bool {
    let w: Vec<f64> = times
        .iter()
        .zip(values)
        .map(|(t, v)| v * (1.0 + t).powf(-exponent))
        .collect();
    let half = w.len() / 2;
    let first = w[..half.max(1)].iter().copied().fold(0.0, f64::max);
    let second = w[half..].iter().copied().fold(0.0, f64::max);
    second <= first * (1.0 + 1e-9)
}

pub fn verify_bounds(
    series: &EnergySeries,
    bounds: &BoundSet,
    tol_exponent: f64,
    window: Option<(f64, f64)>,
) -> Result<VerificationReport> {
    let window = window.unwrap_or_else(|| default_window(&series.times));
    let mut entries = Vec::with_capacity(bounds.entries.len());
    for b in &bounds.entries {
        let skipped = |note: &str| VerificationEntry {
            predicted: *b,
            fitted: None,
            verdict: Verdict::Skipped,
            margin: None,
            note: Some(note.to_string()),
        };
        let values = series
            .channel(b.quantity.channel_name())
            .ok_or_else(|| Error::Usage(format!("energy series lacks channel {}", b.quantity.channel_name())))?;
        if b.kind.is_lower() && !bounds.coercive {
            entries.push(skipped("lower bounds are only checked for coercive operators"));
            continue;
        }
        let weight = b.weight_exponent.unwrap_or(0.0);
        let unweighted: Vec<Option<f64>> = match b.kind {
            BoundKind::ExpUpper | BoundKind::ExpLower => series
                .times
                .iter()
                .zip(values)
                .map(|(t, v)| v.map(|v| v * (1.0 + t).powf(-weight)))
                .collect(),
            _ => values.to_vec(),
        };
        let Some(poly) = fit_power_rate_opt(&series.times, &unweighted, window)? else {
            entries.push(skipped("quantity undefined or vanishing in the window"));
            continue;
        };
        let entry = match b.kind {
            BoundKind::PolyUpper => {
                let limit = b.exponent + tol_exponent;
                let (t, v) = window_samples(&series.times, &unweighted, window)?.expect("checked by fit");
                let bounded = weighted_sup_bounded(&t, &v, b.exponent);
                let pass = poly.exponent <= limit || bounded;
                VerificationEntry {
                    predicted: *b,
                    fitted: Some(poly),
                    verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                    margin: Some(limit - poly.exponent),
                    note: (poly.exponent > limit && bounded).then(|| "weighted sup bounded".to_string()),
                }
            }
            BoundKind::PolyLower => {
                let limit = b.exponent - tol_exponent;
                VerificationEntry {
                    predicted: *b,
                    fitted: Some(poly),
                    verdict: if poly.exponent >= limit { Verdict::Pass } else { Verdict::Fail },
                    margin: Some(poly.exponent - limit),
                    note: None,
                }
            }
            BoundKind::ExpUpper | BoundKind::ExpLower => {
                let exp = fit_exponential_rate_opt(&series.times, &unweighted, b.exponent - 1.0, window)?
                    .expect("same samples as the power fit");
                let dominant = exp.rms_residual < poly.rms_residual && exp.exponent > 0.0;
                VerificationEntry {
                    predicted: *b,
                    fitted: Some(exp),
                    verdict: if dominant { Verdict::Pass } else { Verdict::Fail },
                    margin: Some(poly.rms_residual - exp.rms_residual),
                    note: Some(format!("power-law rms residual {:.3e}", poly.rms_residual)),
                }
            }
            BoundKind::IntegralUpper => {
                let limit = -1.0 + tol_exponent;
                let integrand = poly.exponent + weight;
                VerificationEntry {
                    predicted: *b,
                    fitted: Some(poly),
                    verdict: if integrand < limit { Verdict::Pass } else { Verdict::Fail },
                    margin: Some(limit - integrand),
                    note: None,
                }
            }
        };
        entries.push(entry);
    }
    Ok(VerificationReport {
        window,
        tol_exponent,
        entries,
    })
}

/// Remainders `rho = u_eps - u`, `r = rho - theta`, `r' = u_eps' - u' - theta'`
/// with their norms, weighted norms and cumulative weighted integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub rho: Vec<ModalVector>,
    pub r: Vec<ModalVector>,
    pub r_prime: Vec<ModalVector>,
    pub channels: Vec<(String, Vec<f64>)>,
}

pub const ERROR_CHANNELS: [&str; 10] = [
    "rho_sq",
    "a_half_rho_sq",
    "a_rho_sq",
    "r_prime_sq",
    "a_half_r_prime_sq",
    "w_a_half_rho_sq",
    "w_a_rho_sq",
    "w_r_prime_sq",
    "int_p",
    "int_2p1",
];

impl ErrorSeries {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn sup(&self, name: &str) -> Option<f64> {
        self.channel(name).map(|v| v.iter().copied().fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names: Vec<&str> = self.channels.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(w, "t,{}", names.join(","))?;
        for (i, &t) in self.times.iter().enumerate() {
            let mut row = vec![fmt_num(t)];
            row.extend(self.channels.iter().map(|(_, v)| fmt_num(v[i])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn perturbation_errors(
    traj_eps: &Trajectory,
    traj_par: &Trajectory,
    corr: &CorrectorTrajectory,
    spec: &Spectrum,
    dis: &Dissipation,
) -> Result<ErrorSeries> {
    if traj_eps.times != traj_par.times || traj_eps.times != corr.times {
        return Err(Error::Usage(
            "hyperbolic, parabolic and corrector samples must share one output grid".into(),
        ));
    }
    if traj_eps.dim() != spec.len() || traj_par.dim() != spec.len() {
        return Err(Error::Config("trajectory dimension does not match the spectrum".into()));
    }
    let p = dis.p();
    let n = traj_eps.len();
    let mut rho = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut r_prime = Vec::with_capacity(n);
    let mut ch: Vec<Vec<f64>> = vec![Vec::with_capacity(n); ERROR_CHANNELS.len()];
    let mut int_p = 0.0;
    let mut int_2p1 = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for i in 0..n {
        let t = traj_eps.times[i];
        let rho_i = traj_eps.u[i].sub(&traj_par.u[i]);
        let r_i = rho_i.sub(&corr.theta[i]);
        let rp_i = traj_eps.uprime[i].sub(&traj_par.uprime[i]).sub(&corr.theta_prime[i]);

        let rho_sq = rho_i.norm_sq();
        let a_half_rho = spec.norm_sq_unchecked(rho_i.as_slice(), 0.5);
        let a_rho = spec.norm_sq_unchecked(rho_i.as_slice(), 1.0);
        let rp_sq = rp_i.norm_sq();
        let a_half_rp = spec.norm_sq_unchecked(rp_i.as_slice(), 0.5);
        let s = 1.0 + t;

        let f_p = s.powf(p) * (rp_sq + a_half_rho);
        let f_2p1 = s.powf(2.0 * p + 1.0) * (a_half_rp + a_rho);
        if let Some((t_prev, fp_prev, f2_prev)) = prev {
            let dt = t - t_prev;
            int_p += 0.5 * dt * (fp_prev + f_p);
            int_2p1 += 0.5 * dt * (f2_prev + f_2p1);
        }
        prev = Some((t, f_p, f_2p1));

        let row = [
            rho_sq,
            a_half_rho,
            a_rho,
            rp_sq,
            a_half_rp,
            s.powf(p + 1.0) * a_half_rho,
            s.powf(2.0 * (p + 1.0)) * a_rho,
            s * s * rp_sq,
            int_p,
            int_2p1,
        ];
        for (c, v) in ch.iter_mut().zip(row) {
            c.push(v);
        }
        rho.push(rho_i);
        r.push(r_i);
        r_prime.push(rp_i);
    }
    Ok(ErrorSeries {
        times: traj_eps.times.clone(),
        rho,
        r,
        r_prime,
        channels: ERROR_CHANNELS.iter().map(|s| s.to_string()).zip(ch).collect(),
    })
}

/// Slope of `ln(sup)` against `ln(eps)`.
pub fn fit_eps_order(eps_list: &[f64], sup_values: &[f64]) -> Result<Option<RateFit>> {
    if eps_list.len() != sup_values.len() {
        return Err(Error::Usage("eps list and sup values differ in length".into()));
    }
    if eps_list.len() < 4 {
        return Err(Error::Usage("an eps-order fit needs at least 4 values of eps".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Usage("eps values must be positive".into()));
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Usage("eps values must span at least two decades".into()));
    }
    if sup_values.iter().any(|&s| !(s > 0.0)) {
        return Ok(None);
    }
    let x: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = sup_values.iter().map(|s| s.ln()).collect();
    let (slope, intercept, rms) = least_squares(&x, &y);
    Ok(Some(RateFit {
        exponent: slope,
        log_coefficient: intercept,
        window: (lo, hi),
        rms_residual: rms,
    }))
}

/// `max_i |a(t_i) - b(t_i)| / max(|a(t_i)|, |b(t_i)|)` over the coefficient
/// vectors of two trajectories on the same grid; zero where both vanish.
pub fn sup_relative_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.times != b.times || a.dim() != b.dim() {
        return Err(Error::Usage("trajectories must share grid and dimension".into()));
    }
    Ok(a.u
        .iter()
        .zip(&b.u)
        .map(|(x, y)| {
            let scale = x.norm_sq().max(y.norm_sq()).sqrt();
            if scale == 0.0 {
                0.0
            } else {
                x.sub(y).norm_sq().sqrt() / scale
            }
        })
        .fold(0.0, f64::max))
}

/// `max_{i,k} |theta'_k(t_i) - w0_k exp(-B(t_i)/eps)| / max_k |w0_k|`.
pub fn corrector_deviation(corr: &CorrectorTrajectory, w0: &ModalVector, dis: &Dissipation, eps: f64) -> f64 {
    let scale = w0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale == 0.0 {
        return corr
            .theta_prime
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |a, b| a.max(b.abs()));
    }
    corr.times
        .iter()
        .zip(&corr.theta_prime)
        .map(|(&t, tp)| {
            let decay = (-dis.primitive(t) / eps).exp();
            tp.iter()
                .zip(w0.iter())
                .map(|(a, w)| (a - w * decay).abs())
                .fold(0.0, f64::max)
                / scale
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorSample {
    pub t: f64,
    pub h: f64,
    /// `H(0) exp(-2 B(t) / eps)`.
    pub floor: f64,
    pub margin: f64,
}

pub fn hamiltonian_floor(
    traj: &Trajectory,
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    eps: f64,
) -> Result<Vec<FloorSample>> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    if traj.is_empty() || traj.dim() != spec.len() {
        return Err(Error::Usage("hamiltonian floor needs a nonempty trajectory matching the spectrum".into()));
    }
    let h: Vec<f64> = (0..traj.len())
        .map(|i| hamiltonian_unchecked(spec, nl, eps, traj.u[i].as_slice(), traj.uprime[i].as_slice()))
        .collect();
    let h0 = h[0];
    Ok(traj
        .times
        .iter()
        .zip(&h)
        .map(|(&t, &h)| {
            let floor = h0 * (-2.0 * dis.primitive(t) / eps).exp();
            FloorSample {
                t,
                h,
                floor,
                margin: h - floor,
            }
        })
        .collect())
}

pub fn write_floor_csv<W: Write>(samples: &[FloorSample], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,H,floor,margin")?;
    for s in samples {
        writeln!(w, "{},{},{},{}", fmt_num(s.t), fmt_num(s.h), fmt_num(s.floor), fmt_num(s.margin))?;
    }
    Ok(())
}

/// Largest relative increase `(H_{i+1} - H_i) / H_i` between consecutive
/// samples; nonpositive when the Hamiltonian is nonincreasing.
pub fn max_hamiltonian_increase(samples: &[FloorSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let scale = w[0].h.abs().max(f64::MIN_POSITIVE);
            (w[1].h - w[0].h) / scale
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
