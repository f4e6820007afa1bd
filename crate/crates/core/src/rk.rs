//! Dormand-Prince 5(4) embedded pair with step-size control.
//!
//! The driver lands exactly on every requested output time, so samples carry
//! no interpolation error. Steps are additionally capped by
//! [`OdeSystem::max_step`], which the hyperbolic solver uses to resolve the fast
//! time scale.

use serde::{Deserialize, Serialize};

/// First-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Upper bound on the step taken from state `(t, y)`.
    fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
        f64::INFINITY
    }

    /// Quantity compared against the blow-up threshold after every accepted step.
    fn blowup_measure(&self, _y: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub blowup_threshold: f64,
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t_stop")]
pub enum SolveStatus {
    Completed,
    BlewUp(f64),
    StepUnderflow(f64),
}

impl SolveStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, SolveStatus::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: SolveStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], ctl: &StepControl) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = ctl.abs_tol + ctl.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    let v = (sum / n).sqrt();
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// One trial step of size `h` from `(t, y)`; `s.k[0]` must hold `f(t, y)`.
/// Leaves the candidate in `s.y_new`, `f(t+h, y_new)` in `s.k[6]` and returns
/// the scaled error.
fn trial_step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], h: f64, s: &mut Stages, ctl: &StepControl) -> f64 {
    let n = y.len();
    macro_rules! stage {
        ($dst:expr, $c:expr, $($a:expr => $j:expr),+) => {{
            for i in 0..n {
                s.tmp[i] = y[i] + h * (0.0 $(+ $a * s.k[$j][i])+);
            }
            let (tmp, k) = (&s.tmp, &mut s.k);
            sys.rhs(t + $c * h, tmp, &mut k[$dst]);
        }};
    }
    stage!(1, C2, A21 => 0);
    stage!(2, C3, A31 => 0, A32 => 1);
    stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..n {
        s.y_new[i] = y[i]
            + h * (A71 * s.k[0][i] + A73 * s.k[2][i] + A74 * s.k[3][i] + A75 * s.k[4][i] + A76 * s.k[5][i]);
    }
    {
        let (y_new, k) = (&s.y_new, &mut s.k);
        sys.rhs(t + h, y_new, &mut k[6]);
    }
    for i in 0..n {
        s.err[i] = h
            * (E1 * s.k[0][i] + E3 * s.k[2][i] + E4 * s.k[3][i] + E5 * s.k[4][i] + E6 * s.k[5][i]
                + E7 * s.k[6][i]);
    }
    error_norm(&s.err, y, &s.y_new, ctl)
}

/// Starting step from the usual derivative-scale heuristic.
fn initial_step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], f0: &[f64], ctl: &StepControl) -> f64 {
    let scale = |v: &[f64]| {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(y)
            .map(|(x, yi)| (x / (ctl.abs_tol + ctl.rel_tol * yi.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scale(y);
    let d1 = scale(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scale(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6
    }
}

/// Integrates from `grid[0]` through every time in `grid` (strictly increasing).
pub fn solve<S: OdeSystem>(sys: &S, y0: &[f64], grid: &[f64], ctl: &StepControl) -> Solution {
    assert!(!grid.is_empty(), "output grid must be nonempty");
    assert_eq!(y0.len(), sys.dim(), "initial state has the wrong dimension");
    let n = y0.len();
    let mut times = vec![grid[0]];
    let mut states = vec![y0.to_vec()];
    let mut accepted_steps = 0;
    let mut rejected_steps = 0;

    let mut t = grid[0];
    let mut y = y0.to_vec();
    if sys.blowup_measure(&y) > ctl.blowup_threshold {
        return Solution {
            times,
            states,
            status: SolveStatus::BlewUp(t),
            accepted_steps,
            rejected_steps,
        };
    }

    let mut s = Stages::new(n);
    sys.rhs(t, &y, &mut s.k[0]);
    let mut h = initial_step(sys, t, &y, &s.k[0].clone(), ctl);
    let mut last_rejected = false;
    let mut status = SolveStatus::Completed;

    'outer: for &t_out in &grid[1..] {
        while t < t_out {
            let h_ctrl = h.min(sys.max_step(t, &y));
            if !(h_ctrl >= 1e-14 * (1.0 + t.abs())) {
                status = SolveStatus::StepUnderflow(t);
                break 'outer;
            }
            let remaining = t_out - t;
            let lands = 1.01 * h_ctrl >= remaining;
            let h_try = if lands { remaining } else { h_ctrl };

            let err = trial_step(sys, t, &y, h_try, &mut s, ctl);
            if err <= 1.0 {
                accepted_steps += 1;
                t = if lands { t_out } else { t + h_try };
                std::mem::swap(&mut y, &mut s.y_new);
                s.k.swap(0, 6);
                let fac_max = if last_rejected { 1.0 } else { FAC_MAX };
                let fac = if err == 0.0 {
                    fac_max
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, fac_max)
                };
                // a step shortened to hit an output time says nothing new about
                // the admissible size, so keep the larger proposal
                h = if lands { (h_try * fac).max(h) } else { h_try * fac };
                last_rejected = false;
                if sys.blowup_measure(&y) > ctl.blowup_threshold {
                    times.push(t);
                    states.push(y.clone());
                    status = SolveStatus::BlewUp(t);
                    break 'outer;
                }
            } else {
                rejected_steps += 1;
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                h = h_try * fac;
                last_rejected = true;
            }
        }
        times.push(t);
        states.push(y.clone());
    }

    if let SolveStatus::StepUnderflow(t_stop) = status {
        if *times.last().expect("nonempty") < t_stop {
            times.push(t_stop);
            states.push(y);
        }
    }

    Solution {
        times,
        states,
        status,
        accepted_steps,
        rejected_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -self.0 * y[0];
        }
    }

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
        fn blowup_measure(&self, y: &[f64]) -> f64 {
            y[0] * y[0] + y[1] * y[1]
        }
    }

    fn ctl(tol: f64) -> StepControl {
        StepControl {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            blowup_threshold: f64::INFINITY,
        }
    }

    #[test]
    fn lands_on_grid_and_matches_exponential() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let sol = solve(&Decay(1.5), &[2.0], &grid, &ctl(1e-11));
        assert_eq!(sol.status, SolveStatus::Completed);
        assert_eq!(sol.times, grid);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let exact = 2.0 * (-1.5 * t).exp();
            assert!((y[0] - exact).abs() < 1e-10 * exact.max(1e-3), "t={t}");
        }
    }

    #[test]
    fn fifth_order_convergence_on_fixed_steps() {
        // with tolerance effectively off, the cap fixes h and the error must
        // scale like h^5
        struct Capped(f64);
        impl OdeSystem for Capped {
            fn dim(&self) -> usize {
                2
            }
            fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
                Oscillator.rhs(t, y, dy)
            }
            fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
                self.0
            }
        }
        let loose = StepControl {
            rel_tol: 1.0,
            abs_tol: 1.0,
            blowup_threshold: f64::INFINITY,
        };
        let err = |h: f64| {
            let sol = solve(&Capped(h), &[1.0, 0.0], &[0.0, 2.0], &loose);
            (sol.states[1][0] - 2.0f64.cos()).abs()
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!(order > 4.5 && order < 5.6, "observed order {order}");
    }

    #[test]
    fn reports_blow_up() {
        struct Growth;
        impl OdeSystem for Growth {
            fn dim(&self) -> usize {
                1
            }
            fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
                dy[0] = y[0];
            }
            fn blowup_measure(&self, y: &[f64]) -> f64 {
                y[0] * y[0]
            }
        }
        let c = StepControl {
            blowup_threshold: 1e4,
            ..ctl(1e-8)
        };
        let sol = solve(&Growth, &[1.0], &[0.0, 1.0, 10.0], &c);
        let SolveStatus::BlewUp(t_stop) = sol.status else {
            panic!("expected blow-up, got {:?}", sol.status)
        };
        assert!(t_stop > 1.0 && t_stop < 10.0);
        assert_eq!(*sol.times.last().unwrap(), t_stop);
        assert!(sol.states.last().unwrap()[0].powi(2) > 1e4);
    }

    #[test]
    fn reports_step_underflow_for_unattainable_tolerance() {
        let c = StepControl {
            rel_tol: 1e-300,
            abs_tol: 1e-300,
            blowup_threshold: f64::INFINITY,
        };
        let sol = solve(&Oscillator, &[1.0, 0.0], &[0.0, 1.0], &c);
        assert!(matches!(sol.status, SolveStatus::StepUnderflow(t) if t < 1.0));
    }

    #[test]
    fn deterministic() {
        let grid: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).exp_m1()).collect();
        let a = solve(&Oscillator, &[0.3, -0.7], &grid, &ctl(1e-10));
        let b = solve(&Oscillator, &[0.3, -0.7], &grid, &ctl(1e-10));
        assert_eq!(a.states, b.states);
    }
}
