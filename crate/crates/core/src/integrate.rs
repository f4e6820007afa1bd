//! Time integration of the hyperbolic problem, its parabolic limit (by time
//! reparametrization of the heat semigroup, and directly), and the boundary
//! layer corrector.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::model::{compute_w0, is_mildly_degenerate, Dissipation, Nonlinearity};
use crate::rk::{self, OdeSystem, SolveStatus, StepControl};
use crate::spectral::{ModalVector, Spectrum};
use crate::{Error, Result};

/// Output sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OutputGrid {
    /// Equispaced in `ln(1+t)`; defaults to 400 points per decade of `1+t`.
    Log { count: Option<usize>, t_end: f64 },
    Linear { count: Option<usize>, t_end: f64 },
    /// `t = 0` followed by points equispaced in `ln t` on `[t_min, t_end]`.
    /// Resolves an initial layer of any width above `t_min` uniformly.
    Geometric {
        count: Option<usize>,
        t_min: f64,
        t_end: f64,
    },
}

impl OutputGrid {
    pub fn log(count: usize, t_end: f64) -> Self {
        OutputGrid::Log {
            count: Some(count),
            t_end,
        }
    }

    pub fn linear(count: usize, t_end: f64) -> Self {
        OutputGrid::Linear {
            count: Some(count),
            t_end,
        }
    }

    pub fn geometric(count: usize, t_min: f64, t_end: f64) -> Self {
        OutputGrid::Geometric {
            count: Some(count),
            t_min,
            t_end,
        }
    }

    pub fn t_end(&self) -> f64 {
        match *self {
            OutputGrid::Log { t_end, .. }
            | OutputGrid::Linear { t_end, .. }
            | OutputGrid::Geometric { t_end, .. } => t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t_end = self.t_end();
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Config(format!("`settings.grid.t_end` = {t_end} must be positive")));
        }
        let count = self.count();
        match self {
            OutputGrid::Geometric { t_min, .. } => {
                if !(*t_min > 0.0 && *t_min < t_end) {
                    return Err(Error::Config(format!(
                        "`settings.grid.t_min` = {t_min} must lie in (0, t_end)"
                    )));
                }
                if count < 3 {
                    return Err(Error::Config("`settings.grid.count` must be at least 3".into()));
                }
            }
            _ => {
                if count < 2 {
                    return Err(Error::Config("`settings.grid.count` must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        match *self {
            OutputGrid::Log { count, t_end } => {
                count.unwrap_or_else(|| (400.0 * (1.0 + t_end).log10()).ceil() as usize + 1)
            }
            OutputGrid::Linear { count, .. } => count.unwrap_or(1001),
            OutputGrid::Geometric { count, t_min, t_end } => {
                count.unwrap_or_else(|| (400.0 * (t_end / t_min).log10()).ceil() as usize + 2)
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.count();
        let t_end = self.t_end();
        let mut t: Vec<f64> = match *self {
            OutputGrid::Log { .. } => {
                let span = t_end.ln_1p();
                (0..n)
                    .map(|i| (span * i as f64 / (n - 1) as f64).exp_m1())
                    .collect()
            }
            OutputGrid::Linear { .. } => (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect(),
            OutputGrid::Geometric { t_min, .. } => {
                let span = (t_end / t_min).ln();
                std::iter::once(0.0)
                    .chain((0..n - 1).map(|j| t_min * (span * j as f64 / (n - 2) as f64).exp()))
                    .collect()
            }
        };
        *t.last_mut().expect("count >= 2") = t_end;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `c` in the hyperbolic step cap `h <= c sqrt(eps / (lambda_max m + eps))`.
    pub max_step_factor: f64,
    /// Threshold on `|u|^2 + |u'|^2`.
    pub blowup_threshold: f64,
    pub grid: OutputGrid,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step_factor: 0.5,
            blowup_threshold: 1e8,
            grid: OutputGrid::Log {
                count: None,
                t_end: 100.0,
            },
        }
    }
}

impl IntegratorSettings {
    pub fn with_grid(grid: OutputGrid) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step_factor", self.max_step_factor),
            ("blowup_threshold", self.blowup_threshold),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("`settings.{name}` = {v} must be positive")));
            }
        }
        self.grid.validate()
    }

    fn control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            blowup_threshold: self.blowup_threshold,
        }
    }
}

/// Sampled solution `(u, u')`, with the reparametrization `alpha` for runs of
/// [`solve_parabolic_reparam`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u: Vec<ModalVector>,
    pub uprime: Vec<ModalVector>,
    pub status: SolveStatus,
    pub alpha: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.u.first().map_or(0, ModalVector::len)
    }

    /// A stationary trajectory `u == u0`, `u' == 0` on the given times.
    pub fn stationary(times: Vec<f64>, u0: &ModalVector) -> Self {
        let n = times.len();
        Self {
            u: vec![u0.clone(); n],
            uprime: vec![ModalVector::zeros(u0.len()); n],
            times,
            status: SolveStatus::Completed,
            alpha: None,
        }
    }

    /// Writes `t,u_1..u_N,up_1..up_N[,alpha]` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("u_{k}")));
        header.extend((1..=n).map(|k| format!("up_{k}")));
        if self.alpha.is_some() {
            header.push("alpha".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = Vec::with_capacity(2 * n + 2);
            row.push(fmt_num(self.times[i]));
            row.extend(self.u[i].iter().map(|&x| fmt_num(x)));
            row.extend(self.uprime[i].iter().map(|&x| fmt_num(x)));
            if let Some(alpha) = &self.alpha {
                row.push(fmt_num(alpha[i]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sampled corrector `theta` and `theta'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorTrajectory {
    pub times: Vec<f64>,
    pub theta: Vec<ModalVector>,
    pub theta_prime: Vec<ModalVector>,
}

impl CorrectorTrajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.theta.first().map_or(0, ModalVector::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("theta_{k}")));
        header.extend((1..=n).map(|k| format!("thetap_{k}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.times.len() {
            let mut row = vec![fmt_num(self.times[i])];
            row.extend(self.theta[i].iter().map(|&x| fmt_num(x)));
            row.extend(self.theta_prime[i].iter().map(|&x| fmt_num(x)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_inputs(spec: &Spectrum, settings: &IntegratorSettings, vectors: &[(&ModalVector, &str)]) -> Result<()> {
    settings.validate()?;
    for (v, name) in vectors {
        spec.check(v, name)?;
    }
    Ok(())
}

fn warn_if_really_degenerate(spec: &Spectrum, nl: &Nonlinearity, u0: &ModalVector) {
    if !is_mildly_degenerate(spec, nl, u0) {
        warn!("m(|A^1/2 u0|^2) = 0: really degenerate data, no theory applies to this run");
    }
}

struct Hyperbolic<'a> {
    spec: &'a Spectrum,
    nl: &'a Nonlinearity,
    dis: &'a Dissipation,
    eps: f64,
    cap_factor: f64,
}

impl OdeSystem for Hyperbolic<'_> {
    fn dim(&self) -> usize {
        2 * self.spec.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.spec.len();
        let (u, v) = y.split_at(n);
        let (du, dv) = dy.split_at_mut(n);
        let c = self.nl.m(self.spec.norm_sq_unchecked(u, 0.5));
        let b = self.dis.b(t);
        let inv_eps = 1.0 / self.eps;
        for (k, &lambda) in self.spec.eigenvalues().iter().enumerate() {
            du[k] = v[k];
            dv[k] = -(b * v[k] + c * lambda * u[k]) * inv_eps;
        }
    }

    fn max_step(&self, _t: f64, y: &[f64]) -> f64 {
        let n = self.spec.len();
        let m_ref = self.nl.m(self.spec.norm_sq_unchecked(&y[..n], 0.5));
        self.cap_factor * (self.eps / (self.spec.max_eigenvalue() * m_ref + self.eps)).sqrt()
    }

    fn blowup_measure(&self, y: &[f64]) -> f64 {
        y.iter().map(|x| x * x).sum()
    }
}

/// Solves `eps u'' + b(t) u' + m(|A^{1/2}u|^2) A u = 0`, `u(0) = u0`, `u'(0) = u1`.
pub fn solve_hyperbolic(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    eps: f64,
    u0: &ModalVector,
    u1: &ModalVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    check_inputs(spec, settings, &[(u0, "u0"), (u1, "u1")])?;
    warn_if_really_degenerate(spec, nl, u0);
    let sys = Hyperbolic {
        spec,
        nl,
        dis,
        eps,
        cap_factor: settings.max_step_factor,
    };
    let y0: Vec<f64> = u0.iter().chain(u1.iter()).copied().collect();
    let sol = rk::solve(&sys, &y0, &settings.grid.times(), &settings.control());
    let n = spec.len();
    let (u, uprime) = sol
        .states
        .iter()
        .map(|y| (ModalVector(y[..n].to_vec()), ModalVector(y[n..].to_vec())))
        .unzip();
    Ok(Trajectory {
        times: sol.times,
        u,
        uprime,
        status: sol.status,
        alpha: None,
    })
}

struct Reparam<'a> {
    spec: &'a Spectrum,
    nl: &'a Nonlinearity,
    dis: &'a Dissipation,
    u0: &'a [f64],
}

impl Reparam<'_> {
    /// `|A^{1/2} v(alpha)|^2` for the heat flow `v(alpha) = e^{-alpha A} u0`.
    fn sigma(&self, alpha: f64) -> f64 {
        let mut acc = crate::spectral::CompensatedSum::default();
        for (&lambda, &c) in self.spec.eigenvalues().iter().zip(self.u0) {
            acc.add(lambda * c * c * (-2.0 * lambda * alpha).exp());
        }
        acc.value()
    }

    fn alpha_prime(&self, t: f64, alpha: f64) -> f64 {
        self.nl.m(self.sigma(alpha)) / self.dis.b(t)
    }
}

impl OdeSystem for Reparam<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = self.alpha_prime(t, y[0]);
    }
}

/// Parabolic limit `b u' + m(|A^{1/2}u|^2) A u = 0` as `u(t) = e^{-alpha(t) A} u0`
/// with `b(t) alpha' = m(|A^{1/2} e^{-alpha A} u0|^2)`, `alpha(0) = 0`. Only the
/// scalar `alpha` is integrated; modes are reconstructed exactly.
pub fn solve_parabolic_reparam(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    u0: &ModalVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    check_inputs(spec, settings, &[(u0, "u0")])?;
    warn_if_really_degenerate(spec, nl, u0);
    let sys = Reparam {
        spec,
        nl,
        dis,
        u0: u0.as_slice(),
    };
    let control = StepControl {
        blowup_threshold: f64::INFINITY,
        ..settings.control()
    };
    let sol = rk::solve(&sys, &[0.0], &settings.grid.times(), &control);
    let mut u = Vec::with_capacity(sol.times.len());
    let mut uprime = Vec::with_capacity(sol.times.len());
    let mut alpha = Vec::with_capacity(sol.times.len());
    for (&t, y) in sol.times.iter().zip(&sol.states) {
        let a = y[0];
        let da = sys.alpha_prime(t, a);
        let uk: Vec<f64> = spec
            .eigenvalues()
            .iter()
            .zip(u0.iter())
            .map(|(&lambda, &c)| c * (-lambda * a).exp())
            .collect();
        let upk = spec
            .eigenvalues()
            .iter()
            .zip(&uk)
            .map(|(&lambda, &x)| -da * lambda * x)
            .collect();
        u.push(ModalVector(uk));
        uprime.push(ModalVector(upk));
        alpha.push(a);
    }
    Ok(Trajectory {
        times: sol.times,
        u,
        uprime,
        status: sol.status,
        alpha: Some(alpha),
    })
}

struct ParabolicDirect<'a> {
    spec: &'a Spectrum,
    nl: &'a Nonlinearity,
    dis: &'a Dissipation,
}

impl OdeSystem for ParabolicDirect<'_> {
    fn dim(&self) -> usize {
        self.spec.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let c = self.nl.m(self.spec.norm_sq_unchecked(y, 0.5)) / self.dis.b(t);
        for ((d, &lambda), &x) in dy.iter_mut().zip(self.spec.eigenvalues()).zip(y) {
            *d = -c * lambda * x;
        }
    }
}

/// Parabolic limit integrated as an `N`-dimensional first-order system. Serves
/// as an independent check of [`solve_parabolic_reparam`].
pub fn solve_parabolic_direct(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    u0: &ModalVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    check_inputs(spec, settings, &[(u0, "u0")])?;
    warn_if_really_degenerate(spec, nl, u0);
    let sys = ParabolicDirect { spec, nl, dis };
    let control = StepControl {
        blowup_threshold: f64::INFINITY,
        ..settings.control()
    };
    let sol = rk::solve(&sys, u0.as_slice(), &settings.grid.times(), &control);
    let mut uprime = Vec::with_capacity(sol.times.len());
    for (&t, y) in sol.times.iter().zip(&sol.states) {
        let mut d = vec![0.0; y.len()];
        sys.rhs(t, y, &mut d);
        uprime.push(ModalVector(d));
    }
    Ok(Trajectory {
        u: sol.states.into_iter().map(ModalVector).collect(),
        times: sol.times,
        uprime,
        status: sol.status,
        alpha: None,
    })
}

/// Corrector `eps theta'' + b theta' = 0`, `theta(0) = 0`, `theta'(0) = w0`:
/// `theta'(t) = w0 e^{-B(t)/eps}` and `theta(t) = w0 int_0^t e^{-B(s)/eps} ds`.
pub fn corrector(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    eps: f64,
    u0: &ModalVector,
    u1: &ModalVector,
    times: &[f64],
) -> Result<CorrectorTrajectory> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    if times.first() != Some(&0.0) {
        return Err(Error::Usage("corrector times must start at 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("corrector times must be strictly increasing".into()));
    }
    let w0 = compute_w0(spec, nl, dis, u0, u1)?;
    let layer = |s: f64| (-dis.primitive(s) / eps).exp();

    // int_0^t e^{-B/eps}, in closed form when B is linear
    let rate = match *dis {
        Dissipation::PowerLaw { p } if p == 0.0 => Some(1.0),
        Dissipation::Constant { delta } => Some(delta),
        _ => None,
    };
    let integrals: Vec<f64> = match rate {
        Some(r) => times.iter().map(|&t| -(eps / r) * (-r * t / eps).exp_m1()).collect(),
        None => {
            let t_end = *times.last().expect("nonempty");
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(times.len());
            out.push(0.0);
            for w in times.windows(2) {
                let tol = 1e-12 * ((w[1] - w[0]) / t_end).max(1e-4);
                acc += adaptive_gauss_kronrod(&layer, w[0], w[1], tol);
                out.push(acc);
            }
            out
        }
    };

    let theta = integrals.iter().map(|&i| w0.scaled(i)).collect();
    let theta_prime = times.iter().map(|&t| w0.scaled(layer(t))).collect();
    Ok(CorrectorTrajectory {
        times: times.to_vec(),
        theta,
        theta_prime,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = GK_WEIGHTS_K[7] * fc;
    let mut gauss = GK_WEIGHTS_G[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += GK_WEIGHTS_K[i] * pair;
        if i % 2 == 1 {
            gauss += GK_WEIGHTS_G[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adaptive_gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gauss_kronrod_15(f, a, b);
        if err <= tol || depth >= 40 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

/// Largest defect of the equation at interior samples, from five-point divided
/// differences on the (possibly nonuniform) grid, relative to
/// `1 + |u| + |u'|`. With `eps = 0` the parabolic equation is checked.
pub fn residual_norm(
    traj: &Trajectory,
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    eps: f64,
) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!(
            "residual needs at least 3 samples, trajectory has {}",
            traj.len()
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be nonnegative")));
    }
    let n = spec.len();
    if traj.dim() != n {
        return Err(Error::Config("trajectory dimension does not match the spectrum".into()));
    }
    let n_t = traj.len();
    let width = n_t.min(5);
    let mut worst: f64 = 0.0;
    for i in 1..n_t - 1 {
        let first = i.saturating_sub(width / 2).min(n_t - width);
        let w = derivative_weights(traj.times[i], &traj.times[first..first + width]);
        let d = |s: &[ModalVector], k: usize| -> f64 { w.iter().enumerate().map(|(j, wj)| wj * s[first + j][k]).sum() };
        let t0 = traj.times[i];

        let u = &traj.u[i];
        let up = &traj.uprime[i];
        let c = nl.m(spec.norm_sq_unchecked(u.as_slice(), 0.5));
        let b = dis.b(t0);
        let mut defect = 0.0;
        for (k, &lambda) in spec.eigenvalues().iter().enumerate() {
            let du = d(&traj.u, k);
            let consistency = du - up[k];
            let equation = if eps > 0.0 {
                eps * d(&traj.uprime, k) + b * up[k] + c * lambda * u[k]
            } else {
                b * du + c * lambda * u[k]
            };
            defect += consistency * consistency + equation * equation;
        }
        let scale = 1.0 + u.norm_sq().sqrt() + up.norm_sq().sqrt();
        worst = worst.max(defect.sqrt() / scale);
    }
    Ok(worst)
}

/// Weights of the first derivative at `x0` from values at the distinct nodes
/// `xs` (Fornberg's recursion).
fn derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Empirical bracket for the largest `eps` with a completed run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eps0Bracket {
    /// Largest probed `eps` whose run completed.
    pub completed: Option<f64>,
    /// Smallest probed `eps` whose run did not complete.
    pub failed: Option<f64>,
    pub probes: Vec<(f64, SolveStatus)>,
}

/// Geometric bisection on `eps` in `[eps_lo, eps_hi]` over the outcome
/// {completed, blew up or underflowed}.
#[allow(clippy::too_many_arguments)]
pub fn probe_eps0(
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    u0: &ModalVector,
    u1: &ModalVector,
    settings: &IntegratorSettings,
    eps_lo: f64,
    eps_hi: f64,
    bisections: usize,
) -> Result<Eps0Bracket> {
    if !(eps_lo > 0.0 && eps_lo < eps_hi) {
        return Err(Error::Usage("need 0 < eps_lo < eps_hi".into()));
    }
    let mut probes = Vec::new();
    let mut run = |eps: f64| -> Result<bool> {
        let status = solve_hyperbolic(spec, nl, dis, eps, u0, u1, settings)?.status;
        probes.push((eps, status));
        Ok(status.is_completed())
    };
    let lo_ok = run(eps_lo)?;
    let hi_ok = run(eps_hi)?;
    let (mut good, mut bad) = match (lo_ok, hi_ok) {
        (true, false) => (eps_lo, eps_hi),
        (true, true) => {
            return Ok(Eps0Bracket {
                completed: Some(eps_hi),
                failed: None,
                probes,
            })
        }
        (false, _) => {
            return Ok(Eps0Bracket {
                completed: None,
                failed: Some(eps_lo),
                probes,
            })
        }
    };
    for _ in 0..bisections {
        let mid = (good * bad).sqrt();
        if run(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Eps0Bracket {
        completed: Some(good),
        failed: Some(bad),
        probes,
    })
}
