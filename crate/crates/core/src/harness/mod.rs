//! Experiment orchestration: validated plans in, artifact directories out.
//!
//! Each plan writes into `<out>/<kind>-<confighash>/`. Payload files (CSV,
//! JSON reports, SVG plots) depend only on the plan; `manifest.json` is
//! written last and adds timings, per-run solver status, the verdict summary
//! and the SHA-256 of every other file.

mod config;
pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{
    load_config, load_config_file, AnalysisOptions, Axis, Eps0Probe, ExperimentPlan, Lattice, ModelSetup, PlanConfig,
    PlanKind,
};

use crate::analysis::{
    corrector_deviation, fit_eps_order, hamiltonian_floor, max_hamiltonian_increase, perturbation_errors,
    predicted_bounds, sup_relative_difference, verify_bounds, write_floor_csv, Verdict, ERROR_CHANNELS,
};
use crate::energies::{apriori_margin, energy_suite, satisfies_apriori_regime, write_apriori_csv, EnergySeries};
use crate::integrate::{
    corrector, fmt_num, probe_eps0, residual_norm, solve_hyperbolic, solve_parabolic_direct, solve_parabolic_reparam,
    OutputGrid, Trajectory,
};
use crate::model::{classify_regime, compute_w0, p_gamma, Dissipation, Nonlinearity, RegimeTag};
use crate::rk::SolveStatus;
use crate::{Error, Result};
use plot::{line_chart, regime_map, Axes, Series};

/// Residual gate for trajectories on log grids.
const RESIDUAL_GATE: f64 = 1e-4;
/// Relative agreement of the sampled corrector velocity with its closed form.
const CORRECTOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub label: String,
    /// Solver outcome, or the error message when the run could not start.
    pub status: Value,
    pub seconds: f64,
}

impl RunRecord {
    fn failed(&self) -> bool {
        self.status.get("kind").and_then(Value::as_str) != Some("Completed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactBundle {
    pub dir: PathBuf,
    pub files: Vec<FileRecord>,
    pub checks: Vec<Check>,
    pub runs: Vec<RunRecord>,
}

impl ArtifactBundle {
    pub fn solver_failed(&self) -> bool {
        self.runs.iter().any(RunRecord::failed)
    }

    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Skipped
        }
    }

    /// 0 all pass, 1 verification failures, 2 solver failure.
    pub fn exit_code(&self) -> i32 {
        if self.solver_failed() {
            2
        } else if self.verdict() == Verdict::Fail {
            1
        } else {
            0
        }
    }

    pub fn file(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.path == name)
    }
}

/// Process exit status for an error raised before or while running a plan.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => 3,
        _ => 2,
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<FileRecord>,
    checks: Vec<Check>,
    runs: Vec<RunRecord>,
    plots: bool,
}

impl Writer {
    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn put_csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf).map_err(|e| Error::io(self.dir.join(name), e))?;
        self.put(name, buf)
    }

    fn put_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, text.into_bytes())
    }

    fn put_svg(&mut self, name: &str, svg: String) -> Result<()> {
        if self.plots {
            self.put(name, svg.into_bytes())?;
        }
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, verdict: Verdict, detail: Value) {
        self.checks.push(Check {
            name: name.into(),
            verdict,
            detail,
        });
    }

    fn pass_if(&mut self, name: impl Into<String>, ok: bool, detail: Value) {
        self.check(name, if ok { Verdict::Pass } else { Verdict::Fail }, detail);
    }

    fn record(&mut self, label: impl Into<String>, status: Value, seconds: f64) {
        self.runs.push(RunRecord {
            label: label.into(),
            status,
            seconds,
        });
    }

    /// Runs a solver, recording its status; `None` when it could not run.
    fn run(&mut self, label: &str, f: impl FnOnce() -> Result<Trajectory>) -> Option<Trajectory> {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        match out {
            Ok(traj) => {
                self.record(label, status_json(&traj.status), seconds);
                Some(traj)
            }
            Err(e) => {
                self.record(label, json!({ "kind": "Error", "message": e.to_string() }), seconds);
                None
            }
        }
    }
}

fn status_json(status: &SolveStatus) -> Value {
    serde_json::to_value(status).expect("status serializes")
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs a validated plan and writes its artifact directory under `out`.
///
/// Solver failures are recorded in the bundle; only I/O problems are errors.
pub fn run_plan(plan: &ExperimentPlan, out: &Path) -> Result<ArtifactBundle> {
    let started = Instant::now();
    let dir = out.join(plan.dir_name());
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    log::info!("running {} plan into {}", plan.kind.as_str(), dir.display());

    let mut w = Writer {
        dir: dir.clone(),
        files: Vec::new(),
        checks: Vec::new(),
        runs: Vec::new(),
        plots: plan.config.plots,
    };
    match plan.kind {
        PlanKind::Simulate => run_simulate(plan, &mut w)?,
        PlanKind::Limit => run_limit(plan, &mut w)?,
        PlanKind::SweepEps => run_sweep(plan, &mut w)?,
        PlanKind::RegimeGrid => run_regime_grid(plan, &mut w)?,
        PlanKind::Verify => run_verify(plan, &mut w)?,
        PlanKind::Corrector => run_corrector(plan, &mut w)?,
    }

    let bundle = ArtifactBundle {
        dir,
        files: w.files,
        checks: w.checks,
        runs: w.runs,
    };
    let mut echo = plan.config.clone();
    echo.kind = Some(plan.kind);
    let manifest = json!({
        "kind": plan.kind.as_str(),
        "config_hash": plan.config_hash(),
        "plan": echo,
        "jobs": plan.jobs,
        "seed": plan.seed,
        "versions": { env!("CARGO_PKG_NAME"): env!("CARGO_PKG_VERSION") },
        "timings": {
            "total_seconds": started.elapsed().as_secs_f64(),
            "runs": bundle.runs.iter().map(|r| json!({ "label": r.label, "seconds": r.seconds })).collect::<Vec<_>>(),
        },
        "runs": bundle.runs.iter().map(|r| json!({ "label": r.label, "status": r.status })).collect::<Vec<_>>(),
        "verdict": {
            "overall": bundle.verdict(),
            "exit_code": bundle.exit_code(),
            "checks": bundle.checks,
        },
        "files": bundle.files,
    });
    let path = bundle.dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(bundle)
}

fn energy_chart(series: &EnergySeries, names: &[&str]) -> String {
    let lines: Vec<Series> = names
        .iter()
        .filter_map(|name| {
            let values = series.channel(name)?;
            let pts = series
                .times
                .iter()
                .zip(values)
                .filter_map(|(t, v)| v.map(|v| (*t, v)))
                .collect();
            Some(Series::new(*name, pts))
        })
        .collect();
    line_chart(
        "energies",
        "t",
        "value",
        &lines,
        Axes {
            x_log: true,
            y_log: true,
        },
    )
}

/// Gates the divided-difference residual on log grids whose first spacing
/// resolves the initial layer of width `layer`; coarser grids only report it.
fn residual_check(w: &mut Writer, grid: &OutputGrid, layer: f64, name: &str, residual: Result<f64>) -> Value {
    match residual {
        Ok(r) => {
            let times = grid.times();
            let first = times.get(1).copied().unwrap_or(f64::INFINITY);
            let detail = json!({ "residual": r, "gate": RESIDUAL_GATE });
            if matches!(grid, OutputGrid::Log { .. }) {
                if first <= 0.05 * layer {
                    w.pass_if(format!("{name} residual"), r <= RESIDUAL_GATE, detail);
                } else {
                    w.check(
                        format!("{name} residual"),
                        Verdict::Skipped,
                        json!({ "residual": r, "reason": "output grid does not resolve the initial layer" }),
                    );
                }
            }
            json!(r)
        }
        Err(e) => Value::String(e.to_string()),
    }
}

fn run_simulate(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let m = plan.model();
    let eps = plan.eps().expect("validated");
    let settings = &plan.config.settings;
    let a = &plan.config.analysis;
    let Some(traj) = w.run("hyperbolic", || {
        solve_hyperbolic(&m.spectrum, &m.m, &m.b, eps, &m.u0, &m.u1, settings)
    }) else {
        return Ok(());
    };
    w.put_csv("trajectory.csv", |b| traj.write_csv(b))?;
    let energies = energy_suite(&traj, &m.spectrum, &m.m, eps, &a.orders)?;
    w.put_csv("energies.csv", |b| energies.write_csv(b))?;
    let apriori = apriori_margin(&traj, &m.spectrum, &m.m, &m.b, eps)?;
    w.put_csv("apriori.csv", |b| write_apriori_csv(&apriori, b))?;
    let floor = hamiltonian_floor(&traj, &m.spectrum, &m.m, &m.b, eps)?;
    w.put_csv("floor.csv", |b| write_floor_csv(&floor, b))?;

    let h0 = floor[0].h;
    let increase = max_hamiltonian_increase(&floor);
    let min_margin = floor.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    w.pass_if(
        "hamiltonian nonincreasing",
        increase <= a.hamiltonian_slack,
        json!({ "max_relative_increase": increase }),
    );
    w.pass_if(
        "hamiltonian floor",
        min_margin >= -a.hamiltonian_slack * h0,
        json!({ "min_margin": min_margin, "h0": h0 }),
    );
    let residual = residual_check(
        w,
        &settings.grid,
        eps / m.b.b0(),
        "hyperbolic",
        residual_norm(&traj, &m.spectrum, &m.m, &m.b, eps),
    );

    let mut report = json!({
        "status": traj.status,
        "eps": eps,
        "residual_norm": residual,
        "hamiltonian_max_relative_increase": increase,
        "floor_min_margin": min_margin,
        "apriori_holds_past_layer": satisfies_apriori_regime(&apriori, eps),
        "regime": classify_regime(&m.m, &m.b, m.spectrum.is_coercive()),
    });
    if let Some(probe) = &a.eps0_probe {
        let start = Instant::now();
        let bracket = probe_eps0(
            &m.spectrum,
            &m.m,
            &m.b,
            &m.u0,
            &m.u1,
            settings,
            probe.eps_lo,
            probe.eps_hi,
            probe.bisections,
        )?;
        w.record("eps0 probe", json!({ "kind": "Completed" }), start.elapsed().as_secs_f64());
        report["eps0"] = serde_json::to_value(&bracket)?;
    }
    w.put_json("report.json", &report)?;
    w.put_svg("energies.svg", energy_chart(&energies, &["E_half", "E_one", "V", "H_eps"]))?;
    Ok(())
}

fn run_limit(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let m = plan.model();
    let settings = &plan.config.settings;
    let a = &plan.config.analysis;
    let reparam = w.run("parabolic reparametrized", || {
        solve_parabolic_reparam(&m.spectrum, &m.m, &m.b, &m.u0, settings)
    });
    let direct = w.run("parabolic direct", || {
        solve_parabolic_direct(&m.spectrum, &m.m, &m.b, &m.u0, settings)
    });
    if let Some(t) = &reparam {
        w.put_csv("parabolic_reparam.csv", |b| t.write_csv(b))?;
        let energies = energy_suite(t, &m.spectrum, &m.m, 0.0, &a.orders)?;
        w.put_csv("energies.csv", |b| energies.write_csv(b))?;
        w.put_svg("energies.svg", energy_chart(&energies, &["E_half", "E_one", "V"]))?;
    }
    if let Some(t) = &direct {
        w.put_csv("parabolic_direct.csv", |b| t.write_csv(b))?;
    }
    let mut report = json!({});
    if let (Some(r), Some(d)) = (&reparam, &direct) {
        if d.status.is_completed() {
            let diff = sup_relative_difference(r, d)?;
            w.pass_if(
                "parabolic solvers agree",
                diff <= a.equivalence_tol,
                json!({ "sup_relative_difference": diff, "tol": a.equivalence_tol }),
            );
            report["sup_relative_difference"] = json!(diff);
        }
        // the fastest mode relaxes on the scale b(0) / (lambda_max m(sigma_0))
        let sigma0 = m.spectrum.sobolev_norm_sq(&m.u0, 0.5)?;
        let rate = m.spectrum.max_eigenvalue() * m.m.eval(sigma0)?.m / m.b.b0();
        let layer = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
        report["residual_norm"] = residual_check(
            w,
            &settings.grid,
            layer,
            "parabolic",
            residual_norm(r, &m.spectrum, &m.m, &m.b, 0.0),
        );
    }
    w.put_json("report.json", &report)?;
    Ok(())
}

struct SweepRun {
    eps: f64,
    traj: Result<Trajectory>,
    seconds: f64,
}

fn run_sweep(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let m = plan.model();
    let settings = &plan.config.settings;
    let a = &plan.config.analysis;
    let eps_list = plan.config.eps_list.clone().expect("validated");
    let Some(par) = w.run("parabolic", || {
        solve_parabolic_reparam(&m.spectrum, &m.m, &m.b, &m.u0, settings)
    }) else {
        return Ok(());
    };
    w.put_csv("parabolic.csv", |b| par.write_csv(b))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<SweepRun> = pool.install(|| {
        eps_list
            .par_iter()
            .map(|&eps| {
                let start = Instant::now();
                let traj = solve_hyperbolic(&m.spectrum, &m.m, &m.b, eps, &m.u0, &m.u1, settings);
                SweepRun {
                    eps,
                    traj,
                    seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    });

    let w0 = compute_w0(&m.spectrum, &m.m, &m.b, &m.u0, &m.u1)?;
    let mut rows = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let label = format!("hyperbolic eps={}", run.eps);
        let traj = match run.traj {
            Ok(t) => {
                w.record(label, status_json(&t.status), run.seconds);
                t
            }
            Err(e) => {
                w.record(label, json!({ "kind": "Error", "message": e.to_string() }), run.seconds);
                continue;
            }
        };
        if !traj.status.is_completed() {
            continue;
        }
        let corr = corrector(&m.spectrum, &m.m, &m.b, run.eps, &m.u0, &m.u1, &traj.times)?;
        let errors = perturbation_errors(&traj, &par, &corr, &m.spectrum, &m.b)?;
        w.put_csv(&format!("hyperbolic-{i:02}.csv"), |b| traj.write_csv(b))?;
        w.put_csv(&format!("corrector-{i:02}.csv"), |b| corr.write_csv(b))?;
        w.put_csv(&format!("errors-{i:02}.csv"), |b| errors.write_csv(b))?;
        let sups: Vec<f64> = ERROR_CHANNELS
            .iter()
            .map(|c| errors.sup(c).expect("known channel"))
            .collect();
        rows.push((run.eps, sups, corrector_deviation(&corr, &w0, &m.b, run.eps)));
    }

    let mut csv = format!(
        "eps,{},weighted_ratio_quantity,corrector_deviation\n",
        ERROR_CHANNELS.map(|c| format!("sup_{c}")).join(",")
    );
    let weighted_col = ERROR_CHANNELS.iter().position(|c| *c == "w_a_half_rho_sq").expect("channel");
    for (eps, sups, dev) in &rows {
        let mut cells = vec![fmt_num(*eps)];
        cells.extend(sups.iter().map(|s| fmt_num(*s)));
        cells.push(fmt_num(sups[weighted_col] / (eps * eps)));
        cells.push(fmt_num(*dev));
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    w.put("sweep.csv", csv.into_bytes())?;

    let eps_done: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut fits = serde_json::Map::new();
    for (c, name) in ERROR_CHANNELS.iter().enumerate() {
        let sups: Vec<f64> = rows.iter().map(|r| r.1[c]).collect();
        let fit = fit_eps_order(&eps_done, &sups);
        let entry = match &fit {
            Ok(Some(f)) => json!({ "order": f.exponent, "log_coefficient": f.log_coefficient, "rms_residual": f.rms_residual }),
            Ok(None) => json!({ "skipped": "zero sup" }),
            Err(e) => json!({ "skipped": e.to_string() }),
        };
        if *name == "rho_sq" || *name == "r_prime_sq" {
            match fit {
                Ok(Some(f)) => w.pass_if(
                    format!("eps order of sup {name}"),
                    (f.exponent - a.expected_order).abs() <= a.order_tol,
                    json!({ "order": f.exponent, "expected": a.expected_order, "tol": a.order_tol }),
                ),
                _ => w.check(format!("eps order of sup {name}"), Verdict::Skipped, entry.clone()),
            }
        }
        fits.insert(name.to_string(), entry);
    }

    let weighted: Vec<f64> = rows.iter().map(|r| r.1[weighted_col] / (r.0 * r.0)).collect();
    let (lo, hi) = weighted
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let ratio = if weighted.is_empty() { f64::NAN } else { hi / lo };
    if weighted.len() >= 2 {
        w.pass_if(
            "weighted error over eps^2 bounded",
            ratio <= a.weighted_ratio_max,
            json!({ "ratio": ratio, "max": a.weighted_ratio_max }),
        );
    }
    let dev = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    if !rows.is_empty() {
        w.pass_if(
            "corrector velocity closed form",
            dev <= CORRECTOR_TOL,
            json!({ "max_relative_deviation": dev }),
        );
    }
    w.put_json(
        "report.json",
        &json!({
            "eps": eps_done,
            "orders": fits,
            "weighted_ratio": ratio,
            "corrector_max_deviation": dev,
            "w0": w0,
        }),
    )?;

    let lines: Vec<Series> = ["rho_sq", "r_prime_sq", "a_half_rho_sq"]
        .iter()
        .map(|name| {
            let c = ERROR_CHANNELS.iter().position(|x| x == name).expect("channel");
            Series::new(format!("sup {name}"), rows.iter().map(|r| (r.0, r.1[c])).collect())
        })
        .collect();
    w.put_svg(
        "sweep.svg",
        line_chart(
            "error sups against eps",
            "eps",
            "sup over t",
            &lines,
            Axes {
                x_log: true,
                y_log: true,
            },
        ),
    )?;
    Ok(())
}

fn run_regime_grid(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let lattice = plan.config.lattice.as_ref().expect("validated");
    let gammas = lattice.gamma.values();
    let ps = lattice.p.values();
    let mut csv = String::from("gamma,p,tag,p_gamma\n");
    let mut tags = Vec::with_capacity(gammas.len());
    let mut counts = std::collections::BTreeMap::new();
    for &g in &gammas {
        let nl = Nonlinearity::power(g)?;
        let mut row = Vec::with_capacity(ps.len());
        for &p in &ps {
            let r = classify_regime(&nl, &Dissipation::power_law(p)?, lattice.coercive);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_num(g),
                fmt_num(p),
                r.tag.as_str(),
                r.threshold.map(fmt_num).unwrap_or_default()
            ));
            *counts.entry(r.tag.as_str()).or_insert(0usize) += 1;
            row.push(r.tag);
        }
        tags.push(row);
    }
    w.put("regime.csv", csv.into_bytes())?;
    let threshold: Vec<(f64, f64)> = if lattice.coercive {
        Vec::new()
    } else {
        let (g0, g1) = (gammas[0], gammas[gammas.len() - 1]);
        (0..=200)
            .map(|i| g0 + (g1 - g0) * i as f64 / 200.0)
            .map(|g| (g, p_gamma(g).unwrap_or(f64::NAN)))
            .collect()
    };
    w.put_svg("regime.svg", regime_map(&gammas, &ps, &tags, &threshold))?;
    let hyperbolic_ok = gammas.iter().zip(&tags).all(|(_, row)| {
        ps.iter()
            .zip(row)
            .all(|(p, t)| (*p > 1.0) == (*t == RegimeTag::Hyperbolic))
    });
    w.pass_if(
        "hyperbolic exactly for p > 1",
        hyperbolic_ok,
        json!({ "counts": counts }),
    );
    w.put_json("report.json", &json!({ "coercive": lattice.coercive, "counts": counts }))?;
    Ok(())
}

fn run_verify(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let m = plan.model();
    let settings = &plan.config.settings;
    let a = &plan.config.analysis;
    let eps = plan.eps();
    let traj = match eps {
        Some(eps) => w.run("hyperbolic", || {
            solve_hyperbolic(&m.spectrum, &m.m, &m.b, eps, &m.u0, &m.u1, settings)
        }),
        None => w.run("parabolic reparametrized", || {
            solve_parabolic_reparam(&m.spectrum, &m.m, &m.b, &m.u0, settings)
        }),
    };
    let Some(traj) = traj else {
        return Ok(());
    };
    w.put_csv("trajectory.csv", |b| traj.write_csv(b))?;
    let energies = energy_suite(&traj, &m.spectrum, &m.m, eps.unwrap_or(0.0), &a.orders)?;
    w.put_csv("energies.csv", |b| energies.write_csv(b))?;
    let bounds = predicted_bounds(&m.m, &m.b, m.spectrum.is_coercive(), eps.is_some());
    let mut echo = plan.config.clone();
    echo.kind = Some(plan.kind);
    if !traj.status.is_completed() {
        w.put_json("report.json", &json!({ "config": echo, "entries": [], "status": traj.status }))?;
        return Ok(());
    }
    let report = match verify_bounds(&energies, &bounds, a.tol_exponent, a.fit_window) {
        Ok(r) => r,
        Err(e) => {
            w.check("decay bounds", Verdict::Skipped, json!(e.to_string()));
            w.put_json("report.json", &json!({ "config": echo, "entries": [], "error": e.to_string() }))?;
            return Ok(());
        }
    };
    if let Some(reason) = &bounds.skipped {
        w.check("decay bounds", Verdict::Skipped, json!(reason));
    }
    for e in &report.entries {
        let mut name = format!("{} {:?} {}", e.predicted.quantity.channel_name(), e.predicted.kind, e.predicted.exponent);
        if let Some(wt) = e.predicted.weight_exponent {
            name.push_str(&format!(" weight {wt}"));
        }
        w.check(
            name,
            e.verdict,
            json!({
                "fitted_exponent": e.fitted.map(|f| f.exponent),
                "margin": e.margin,
                "note": e.note,
            }),
        );
    }
    let mut json_report = report.to_json(serde_json::to_value(&echo)?);
    json_report["regime"] = serde_json::to_value(bounds.regime)?;
    json_report["skipped"] = json!(bounds.skipped);
    w.put_json("report.json", &json_report)?;
    w.put_svg("energies.svg", energy_chart(&energies, &["E_half", "E_one", "V"]))?;
    Ok(())
}

fn run_corrector(plan: &ExperimentPlan, w: &mut Writer) -> Result<()> {
    let m = plan.model();
    let eps = plan.eps().expect("validated");
    let times = plan.config.settings.grid.times();
    let start = Instant::now();
    let corr = corrector(&m.spectrum, &m.m, &m.b, eps, &m.u0, &m.u1, &times);
    let seconds = start.elapsed().as_secs_f64();
    let corr = match corr {
        Ok(c) => {
            w.record("corrector", json!({ "kind": "Completed" }), seconds);
            c
        }
        Err(e) => {
            w.record("corrector", json!({ "kind": "Error", "message": e.to_string() }), seconds);
            return Ok(());
        }
    };
    w.put_csv("corrector.csv", |b| corr.write_csv(b))?;
    let w0 = compute_w0(&m.spectrum, &m.m, &m.b, &m.u0, &m.u1)?;
    let dev = corrector_deviation(&corr, &w0, &m.b, eps);
    w.check(
        "corrector velocity closed form",
        verdict_of(dev <= CORRECTOR_TOL),
        json!({ "max_relative_deviation": dev }),
    );
    w.put_json("report.json", &json!({ "eps": eps, "w0": w0, "max_relative_deviation": dev }))?;
    Ok(())
}
