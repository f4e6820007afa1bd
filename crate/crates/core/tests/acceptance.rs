//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use kirchhoff_core::analysis::{
    default_window, fit_eps_order, fit_exponential_rate, fit_power_rate_opt, hamiltonian_floor,
    max_hamiltonian_increase, perturbation_errors, predicted_bounds, sup_relative_difference, verify_bounds,
    BoundKind, Quantity, Verdict,
};
use kirchhoff_core::energies::energy_suite;
use kirchhoff_core::harness::{load_config, run_plan};
use kirchhoff_core::integrate::{
    corrector, solve_hyperbolic, solve_parabolic_direct, solve_parabolic_reparam, IntegratorSettings, OutputGrid,
};
use kirchhoff_core::model::{classify_regime, Dissipation, Nonlinearity, RegimeTag};
use kirchhoff_core::spectral::{ModalVector, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mv(x: &[f64]) -> ModalVector {
    ModalVector(x.to_vec())
}

fn criterion_1() -> Outcome {
    let s = Spectrum::new(vec![1.0]).unwrap();
    let nl = Nonlinearity::power(1.0).unwrap();
    let dis = Dissipation::power_law(0.0).unwrap();
    let settings = IntegratorSettings::with_grid(OutputGrid::log(400, 1e4));
    let traj = solve_parabolic_reparam(&s, &nl, &dis, &mv(&[1.0]), &settings).unwrap();
    let err = traj
        .times
        .iter()
        .zip(&traj.u)
        .map(|(t, u)| {
            let exact = 1.0 / (1.0 + 2.0 * t);
            (u[0] * u[0] - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    outcome(
        err <= 1e-8 && traj.len() == 400 && *traj.times.last().unwrap() == 1e4,
        format!("sup relative error of u^2 against 1/(1+2t): {err:.2e} (tol 1e-8)"),
    )
}

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Spectrum {
    let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    values.sort_by(f64::total_cmp);
    Spectrum::new(values).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> ModalVector {
    ModalVector((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let settings = IntegratorSettings::with_grid(OutputGrid::log(801, 100.0));
    let mut worst: f64 = 0.0;
    let mut incomplete = 0;
    for _ in 0..30 {
        let n = rng.gen_range(1..=8);
        let s = random_spectrum(&mut rng, n, 0.1, 5.0);
        let gamma = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let p = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
        let nl = Nonlinearity::power(gamma).unwrap();
        let dis = Dissipation::power_law(p).unwrap();
        let u0 = random_vector(&mut rng, n);
        let a = solve_parabolic_reparam(&s, &nl, &dis, &u0, &settings).unwrap();
        let b = solve_parabolic_direct(&s, &nl, &dis, &u0, &settings).unwrap();
        if !b.status.is_completed() {
            incomplete += 1;
            continue;
        }
        worst = worst.max(sup_relative_difference(&a, &b).unwrap());
    }
    outcome(
        worst <= 1e-6 && incomplete == 0,
        format!("30 instances, worst sup relative difference {worst:.2e} (tol 1e-6), {incomplete} incomplete"),
    )
}

/// Fitted exponent of `quantity` against its `poly_*` prediction.
fn exponent_check(
    label: &str,
    nl: &Nonlinearity,
    dis: &Dissipation,
    s: &Spectrum,
    u0: &ModalVector,
    targets: &[(Quantity, f64)],
) -> (bool, String) {
    let settings = IntegratorSettings::with_grid(OutputGrid::log(2001, 1e5));
    let traj = solve_parabolic_reparam(s, nl, dis, u0, &settings).unwrap();
    let series = energy_suite(&traj, s, nl, 0.0, &[]).unwrap();
    let window = default_window(&series.times);
    let bounds = predicted_bounds(nl, dis, s.is_coercive(), false);
    let report = verify_bounds(&series, &bounds, 0.07, Some(window)).unwrap();
    let mut ok = report.worst() == Verdict::Pass;
    let mut parts = Vec::new();
    for &(q, target) in targets {
        let predicted = bounds
            .entries
            .iter()
            .find(|e| e.quantity == q && e.kind == BoundKind::PolyUpper)
            .map(|e| e.exponent);
        let fit = fit_power_rate_opt(&series.times, series.channel(q.channel_name()).unwrap(), window)
            .unwrap()
            .unwrap();
        ok &= predicted == Some(target) && (fit.exponent - target).abs() <= 0.07;
        parts.push(format!("{} {:.4} vs {target}", q.channel_name(), fit.exponent));
    }
    (ok, format!("{label}: {}", parts.join(", ")))
}

fn criterion_3() -> Outcome {
    let s = Spectrum::new(vec![1.0, 4.0]).unwrap();
    let u0 = mv(&[1.0, 0.5]);
    let (ok1, d1) = exponent_check(
        "gamma=1 p=0",
        &Nonlinearity::power(1.0).unwrap(),
        &Dissipation::power_law(0.0).unwrap(),
        &s,
        &u0,
        &[(Quantity::EHalf, -1.0), (Quantity::V, -3.0)],
    );
    let (ok2, d2) = exponent_check(
        "gamma=2 p=1",
        &Nonlinearity::power(2.0).unwrap(),
        &Dissipation::power_law(1.0).unwrap(),
        &s,
        &u0,
        &[(Quantity::EHalf, -1.0)],
    );

    // nondegenerate m = 1 + sigma (capped at 2), single mode: |A^{1/2}u|^2 ~ exp(-2 lambda m(0) t)
    let lambda = 0.5;
    let single = Spectrum::new(vec![lambda]).unwrap();
    let nl = Nonlinearity::table(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
    let dis = Dissipation::power_law(0.0).unwrap();
    let settings = IntegratorSettings::with_grid(OutputGrid::log(801, 100.0));
    let traj = solve_parabolic_reparam(&single, &nl, &dis, &mv(&[1.0]), &settings).unwrap();
    let e_half: Vec<f64> = traj.u.iter().map(|u| lambda * u[0] * u[0]).collect();
    let fit = fit_exponential_rate(&traj.times, &e_half, 0.0, (1.0, 100.0)).unwrap().unwrap();
    let ok3 = (fit.exponent - 2.0 * lambda).abs() <= 0.05 * 2.0 * lambda;
    outcome(
        ok1 && ok2 && ok3,
        format!(
            "{d1}; {d2}; mu>0 p=0: alpha {:.5} vs 2 lambda = {} (5%)",
            fit.exponent,
            2.0 * lambda
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let settings = IntegratorSettings::default();
    let mut worst_increase = f64::NEG_INFINITY;
    let mut worst_floor: f64 = f64::INFINITY;
    let mut worst_nondecay: f64 = f64::INFINITY;
    let mut failures = Vec::new();
    for run in 0..20 {
        let n = rng.gen_range(1..=4);
        let s = random_spectrum(&mut rng, n, 0.5, 4.0);
        let gamma = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let p = [0.0, 0.5, 2.0][run % 3];
        let eps = 10f64.powf(rng.gen_range(-3.0..-1.0));
        let nl = Nonlinearity::power(gamma).unwrap();
        let dis = Dissipation::power_law(p).unwrap();
        let u0 = random_vector(&mut rng, n);
        let u1 = random_vector(&mut rng, n);
        let traj = solve_hyperbolic(&s, &nl, &dis, eps, &u0, &u1, &settings).unwrap();
        if !traj.status.is_completed() {
            failures.push(format!("run {run} did not complete"));
            continue;
        }
        let floor = hamiltonian_floor(&traj, &s, &nl, &dis, eps).unwrap();
        let h0 = floor[0].h;
        let inc = max_hamiltonian_increase(&floor);
        worst_increase = worst_increase.max(inc);
        if inc > 1e-8 {
            failures.push(format!("run {run}: H increased by {inc:.2e}"));
        }
        if p == 2.0 {
            let margin = floor.iter().map(|f| f.margin).fold(f64::INFINITY, f64::min) / h0;
            worst_floor = worst_floor.min(margin);
            if margin < -1e-8 {
                failures.push(format!("run {run}: floor margin {margin:.2e} H0"));
            }
            // min over [0, 100] of |u'|^2 + |A^{1/2}u|^2 against
            // 0.5 H0 exp(-2/eps) / max(1, m-scale), compared in logarithms
            let mut sigma_max: f64 = 0.0;
            let mut min_sum = f64::INFINITY;
            for (i, &t) in traj.times.iter().enumerate() {
                let sigma = s.sobolev_norm_sq(&traj.u[i], 0.5).unwrap();
                sigma_max = sigma_max.max(sigma);
                if t <= 100.0 {
                    min_sum = min_sum.min(traj.uprime[i].norm_sq() + sigma);
                }
            }
            let m_scale = nl.max_on(sigma_max);
            let log_bound = (0.5 * h0).ln() - 2.0 / eps - m_scale.max(1.0).ln();
            let gap = min_sum.ln() - log_bound;
            worst_nondecay = worst_nondecay.min(gap);
            if !(min_sum > 0.0 && gap >= 0.0) {
                failures.push(format!("run {run}: non-decay bound violated (log gap {gap:.3})"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 runs, max relative H increase {worst_increase:.2e} (slack 1e-8), p=2 worst floor margin {worst_floor:.2e} H0, \
             worst non-decay log gap {worst_nondecay:.1}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

const EPS_LIST: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

struct SweepResult {
    rho_sq: Vec<f64>,
    r_prime_sq: Vec<f64>,
    weighted: Vec<f64>,
    corrector_dev: f64,
}

fn sweep(nl: &Nonlinearity, dis: &Dissipation) -> SweepResult {
    let s = Spectrum::new(vec![1.0, 4.0]).unwrap();
    let u0 = mv(&[1.0, 0.5]);
    let u1 = mv(&[0.0, 0.0]);
    let settings = IntegratorSettings::with_grid(OutputGrid::geometric(2801, 1e-7, 1.0));
    let par = solve_parabolic_reparam(&s, nl, dis, &u0, &settings).unwrap();
    let p = dis.p();
    // w0 = u1 + m(|A^{1/2}u0|^2) A u0 / b(0), evaluated by hand
    let sigma0: f64 = 1.0 * 1.0 + 4.0 * 0.25;
    let m0 = match nl {
        Nonlinearity::Power { gamma } => sigma0.powf(*gamma),
        Nonlinearity::Table(_) => nl.eval(sigma0).unwrap().m,
    };
    let w0 = [u1[0] + m0 * 1.0 * u0[0], u1[1] + m0 * 4.0 * u0[1]];
    let mut out = SweepResult {
        rho_sq: Vec::new(),
        r_prime_sq: Vec::new(),
        weighted: Vec::new(),
        corrector_dev: 0.0,
    };
    for &eps in &EPS_LIST {
        let traj = solve_hyperbolic(&s, nl, dis, eps, &u0, &u1, &settings).unwrap();
        assert!(traj.status.is_completed());
        let corr = corrector(&s, nl, dis, eps, &u0, &u1, &traj.times).unwrap();
        for (i, &t) in corr.times.iter().enumerate() {
            // B(t) = ((1+t)^{1-p} - 1)/(1-p), or ln(1+t) at p = 1
            let big_b = if p == 1.0 {
                t.ln_1p()
            } else {
                ((1.0 + t).powf(1.0 - p) - 1.0) / (1.0 - p)
            };
            for k in 0..2 {
                let exact = w0[k] * (-big_b / eps).exp();
                let dev = (corr.theta_prime[i][k] - exact).abs() / w0[k].abs();
                out.corrector_dev = out.corrector_dev.max(dev);
            }
        }
        let errors = perturbation_errors(&traj, &par, &corr, &s, dis).unwrap();
        out.rho_sq.push(errors.sup("rho_sq").unwrap());
        out.r_prime_sq.push(errors.sup("r_prime_sq").unwrap());
        out.weighted.push(errors.sup("w_a_half_rho_sq").unwrap() / (eps * eps));
    }
    out
}

fn criterion_5() -> Outcome {
    let r = sweep(&Nonlinearity::power(1.0).unwrap(), &Dissipation::power_law(0.0).unwrap());
    let rho = fit_eps_order(&EPS_LIST, &r.rho_sq).unwrap().unwrap().exponent;
    let rp = fit_eps_order(&EPS_LIST, &r.r_prime_sq).unwrap().unwrap().exponent;
    outcome(
        (rho - 2.0).abs() <= 0.3 && (rp - 2.0).abs() <= 0.3 && r.corrector_dev <= 1e-10,
        format!(
            "slope of sup|rho|^2 {rho:.3}, of sup|r'|^2 {rp:.3} (2 +- 0.3); corrector velocity deviation {:.1e} (tol 1e-10)",
            r.corrector_dev
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = sweep(&Nonlinearity::constant(1.0).unwrap(), &Dissipation::power_law(0.5).unwrap());
    let lo = r.weighted.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.weighted.iter().copied().fold(0.0, f64::max);
    let ratio = hi / lo;
    outcome(
        ratio <= 10.0 && lo > 0.0,
        format!("sup (1+t)^1.5 |A^(1/2) rho|^2 / eps^2 ranges over [{lo:.4}, {hi:.4}], ratio {ratio:.3} (max 10)"),
    )
}

fn criterion_7() -> Outcome {
    use RegimeTag::{Hyperbolic as H, NoMansLand as N, Parabolic as P};
    let ps = [0.0, 0.2, 0.71, 0.72, 1.0, 1.01, 1.5];
    // thresholds: 1/9, 1/5, 1, 5/7, 17/23
    let expected: [(f64, [RegimeTag; 7]); 5] = [
        (0.25, [P, N, N, N, N, H, H]),
        (0.5, [P, P, N, N, N, H, H]),
        (1.0, [P, P, P, P, P, H, H]),
        (2.0, [P, P, P, N, N, H, H]),
        (4.0, [P, P, P, P, N, H, H]),
    ];
    let mut mismatches = Vec::new();
    for (gamma, row) in expected {
        for (p, want) in ps.iter().zip(row) {
            let got = classify_regime(
                &Nonlinearity::power(gamma).unwrap(),
                &Dissipation::power_law(*p).unwrap(),
                false,
            )
            .tag;
            if got != want {
                mismatches.push(format!("gamma={gamma} p={p}: {} != {}", got.as_str(), want.as_str()));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "35 lattice points match".to_string()
        } else {
            mismatches.join("; ")
        },
    )
}

const CRITERION_PLANS: [&str; 7] = [
    r#"{"kind": "limit", "spectrum": {"kind": "explicit", "values": [1.0]},
        "m": {"kind": "power", "gamma": 1.0}, "b": {"kind": "power", "p": 0.0}, "u0": [1.0],
        "settings": {"grid": {"kind": "log", "count": 400, "t_end": 10000.0}}}"#,
    r#"{"kind": "limit", "spectrum": {"kind": "explicit", "values": [0.3, 1.2, 2.5, 4.0]},
        "m": {"kind": "power", "gamma": 2.0}, "b": {"kind": "power", "p": 0.5}, "u0": [0.5, -0.2, 0.7, 0.1]}"#,
    r#"{"kind": "verify", "spectrum": {"kind": "explicit", "values": [1.0, 4.0]},
        "m": {"kind": "power", "gamma": 1.0}, "b": {"kind": "power", "p": 0.0}, "u0": [1.0, 0.5],
        "settings": {"grid": {"kind": "log", "count": 2001, "t_end": 100000.0}}}"#,
    r#"{"kind": "simulate", "spectrum": {"kind": "explicit", "values": [1.0, 2.0]},
        "m": {"kind": "power", "gamma": 1.0}, "b": {"kind": "power", "p": 2.0}, "eps": 0.01,
        "u0": [0.6, -0.3], "u1": [0.2, 0.4]}"#,
    r#"{"kind": "sweep_eps", "spectrum": {"kind": "explicit", "values": [1.0, 4.0]},
        "m": {"kind": "power", "gamma": 1.0}, "b": {"kind": "power", "p": 0.0},
        "eps_list": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4], "u0": [1.0, 0.5], "u1": [0.0, 0.0],
        "settings": {"grid": {"kind": "geometric", "count": 2801, "t_min": 1e-7, "t_end": 1.0}}}"#,
    r#"{"kind": "sweep_eps", "spectrum": {"kind": "explicit", "values": [1.0, 4.0]},
        "m": {"kind": "table", "points": [[0.0, 1.0]]}, "b": {"kind": "power", "p": 0.5},
        "eps_list": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4], "u0": [1.0, 0.5], "u1": [0.0, 0.0],
        "settings": {"grid": {"kind": "geometric", "count": 2801, "t_min": 1e-7, "t_end": 1.0}}}"#,
    r#"{"kind": "regime_grid",
        "lattice": {"gamma": [0.25, 0.5, 1.0, 2.0, 4.0], "p": [0.0, 0.2, 0.71, 0.72, 1.0, 1.01, 1.5]}}"#,
];

fn csv_hashes(dir: &Path, files: &[kirchhoff_core::harness::FileRecord]) -> BTreeMap<String, String> {
    files
        .iter()
        .filter(|f| f.path.ends_with(".csv"))
        .map(|f| {
            assert!(dir.join(&f.path).is_file());
            (f.path.clone(), f.sha256.clone())
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut compared = 0;
    for (i, text) in CRITERION_PLANS.iter().enumerate() {
        let mut serial = load_config(text).unwrap();
        serial.jobs = 1;
        let mut parallel = serial.clone();
        parallel.jobs = 4;
        let a = run_plan(&serial, &root.path().join("a")).unwrap();
        let b = run_plan(&parallel, &root.path().join("b")).unwrap();
        let (ha, hb) = (csv_hashes(&a.dir, &a.files), csv_hashes(&b.dir, &b.files));
        // byte comparison of the payloads themselves, not only their hashes
        for name in ha.keys() {
            let x = std::fs::read(a.dir.join(name)).unwrap();
            let y = std::fs::read(b.dir.join(name)).unwrap_or_default();
            if x != y {
                differing.push(format!("plan {} {name}", i + 1));
            }
        }
        if ha != hb || ha.is_empty() {
            differing.push(format!("plan {} file set", i + 1));
        }
        compared += ha.len();
    }
    outcome(
        differing.is_empty(),
        format!(
            "{compared} CSV payloads from 7 plans compared across reruns (1 and 4 workers){}",
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("closed-form parabolic oracle", criterion_1, Duration::from_secs(1)),
        ("oracle equivalence of parabolic solvers", criterion_2, Duration::from_secs(30)),
        ("decay-table exponents", criterion_3, Duration::from_secs(60)),
        ("Hamiltonian monotonicity and floor", criterion_4, Duration::from_secs(60)),
        ("singular-perturbation order", criterion_5, Duration::from_secs(120)),
        ("weighted decay-error boundedness", criterion_6, Duration::from_secs(120)),
        ("regime map", criterion_7, Duration::from_secs(1)),
        ("determinism", criterion_8, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run);
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *limit, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {} {name}: {detail} [{:.2} s, limit {} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
