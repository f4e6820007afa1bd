//! Energy functionals along trajectories and the a-priori inequality
//! diagnostics.

use std::io::Write;

use serde::Serialize;

use crate::integrate::{fmt_num, Trajectory};
use crate::model::{Dissipation, Nonlinearity};
use crate::spectral::{ModalVector, Spectrum};
use crate::{Error, Result};

/// `H = eps |u'|^2 + M(|A^{1/2}u|^2)`.
pub fn hamiltonian(
    spec: &Spectrum,
    nl: &Nonlinearity,
    eps: f64,
    u: &ModalVector,
    uprime: &ModalVector,
) -> Result<f64> {
    spec.check(u, "u")?;
    spec.check(uprime, "uprime")?;
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be nonnegative")));
    }
    Ok(hamiltonian_unchecked(spec, nl, eps, u.as_slice(), uprime.as_slice()))
}

pub(crate) fn hamiltonian_unchecked(spec: &Spectrum, nl: &Nonlinearity, eps: f64, u: &[f64], up: &[f64]) -> f64 {
    let sigma = spec.norm_sq_unchecked(u, 0.5);
    let kinetic: f64 = up.iter().map(|x| x * x).sum();
    eps * kinetic + nl.eval_unchecked(sigma).primitive
}

/// One named column of an [`EnergySeries`]; `None` marks samples where a
/// denominator vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Energy channels sampled along a trajectory.
///
/// Always present: `E_half = |A^{1/2}u|^2`, `E_one = |Au|^2`, `V = |u'|^2`,
/// `E_{k}` for each requested `k` and `P_par`. With `eps > 0` also `c_eps`,
/// `H_eps`, `E_eps_{k}`, `G_eps`, `P_eps` and `Q_eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl EnergySeries {
    pub fn channel(&self, name: &str) -> Option<&[Option<f64>]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names: Vec<&str> = self.channels.iter().map(|c| c.name.as_str()).collect();
        writeln!(w, "t,{}", names.join(","))?;
        for (i, &t) in self.times.iter().enumerate() {
            let mut row = vec![fmt_num(t)];
            row.extend(
                self.channels
                    .iter()
                    .map(|c| c.values[i].map(fmt_num).unwrap_or_default()),
            );
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn k_label(k: f64) -> String {
    if k.fract() == 0.0 {
        format!("{}", k as i64)
    } else {
        format!("{k}")
    }
}

/// `|A^{1/2}u|^2 |A^{1/2}v|^2 - <Au, v>^2` through Lagrange's identity,
/// `sum_{j<k} lambda_j lambda_k (u_j v_k - u_k v_j)^2`, which is a sum of
/// nonnegative terms and avoids cancellation.
fn gram_defect(spec: &Spectrum, u: &[f64], v: &[f64]) -> f64 {
    let l = spec.eigenvalues();
    let mut acc = crate::spectral::CompensatedSum::default();
    for j in 0..l.len() {
        for k in j + 1..l.len() {
            let cross = u[j] * v[k] - u[k] * v[j];
            acc.add(l[j] * l[k] * cross * cross);
        }
    }
    acc.value()
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn energy_suite(
    traj: &Trajectory,
    spec: &Spectrum,
    nl: &Nonlinearity,
    eps: f64,
    ks: &[f64],
) -> Result<EnergySeries> {
    if traj.is_empty() {
        return Err(Error::Usage("energy suite needs a nonempty trajectory".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be nonnegative")));
    }
    if let Some(k) = ks.iter().find(|k| !(**k >= 0.0)) {
        return Err(Error::Domain(format!("energy index k = {k} must be nonnegative")));
    }
    if traj.dim() != spec.len() {
        return Err(Error::Config("trajectory dimension does not match the spectrum".into()));
    }
    let hyperbolic = eps > 0.0;
    let n = traj.len();
    let mut channels: Vec<Channel> = Vec::new();
    let mut push = |name: String, values: Vec<Option<f64>>| channels.push(Channel { name, values });

    let sample = |f: &dyn Fn(&[f64], &[f64]) -> Option<f64>| -> Vec<Option<f64>> {
        (0..n)
            .map(|i| f(traj.u[i].as_slice(), traj.uprime[i].as_slice()))
            .collect()
    };
    let sigma = |u: &[f64]| spec.norm_sq_unchecked(u, 0.5);

    push("E_half".into(), sample(&|u, _| Some(sigma(u))));
    push("E_one".into(), sample(&|u, _| Some(spec.norm_sq_unchecked(u, 1.0))));
    push("V".into(), sample(&|_, v| Some(v.iter().map(|x| x * x).sum())));
    for &k in ks {
        push(
            format!("E_{}", k_label(k)),
            sample(&|u, _| Some(spec.norm_sq_unchecked(u, k / 2.0))),
        );
    }
    push(
        "P_par".into(),
        sample(&|u, _| ratio(spec.norm_sq_unchecked(u, 1.0), sigma(u))),
    );

    if hyperbolic {
        let c = |u: &[f64]| nl.m(sigma(u));
        push("c_eps".into(), sample(&|u, _| Some(c(u))));
        push(
            "H_eps".into(),
            sample(&|u, v| Some(hamiltonian_unchecked(spec, nl, eps, u, v))),
        );
        for &k in ks {
            push(
                format!("E_eps_{}", k_label(k)),
                sample(&|u, v| {
                    ratio(eps * spec.norm_sq_unchecked(v, k / 2.0), c(u))
                        .map(|kin| kin + spec.norm_sq_unchecked(u, (k + 1.0) / 2.0))
                }),
            );
        }
        push(
            "G_eps".into(),
            sample(&|u, v| ratio(v.iter().map(|x| x * x).sum(), c(u).powi(2))),
        );
        push(
            "P_eps".into(),
            sample(&|u, v| {
                let s = sigma(u);
                let cu = c(u);
                if s == 0.0 || cu == 0.0 {
                    return None;
                }
                Some(eps / cu * gram_defect(spec, u, v) / (s * s) + spec.norm_sq_unchecked(u, 1.0) / s)
            }),
        );
        push(
            "Q_eps".into(),
            sample(&|u, v| {
                let s = sigma(u);
                let cu = c(u);
                if s == 0.0 || cu == 0.0 {
                    return None;
                }
                Some(v.iter().map(|x| x * x).sum::<f64>() / (cu * cu * s))
            }),
        );
    }

    Ok(EnergySeries {
        times: traj.times.clone(),
        channels,
    })
}

/// Both sides of the a-priori inequalities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriSample {
    pub t: f64,
    /// `eps |m'(sigma)| / m(sigma) |Au| |u'|`, `+inf` where it is unbounded.
    pub lhs_basic: f64,
    /// `eps |Au| |u'| / |A^{1/2}u|^2`.
    pub lhs_basic_plus: f64,
    /// `b(t)`.
    pub rhs: f64,
}

pub fn apriori_margin(
    traj: &Trajectory,
    spec: &Spectrum,
    nl: &Nonlinearity,
    dis: &Dissipation,
    eps: f64,
) -> Result<Vec<AprioriSample>> {
    if traj.dim() != spec.len() {
        return Err(Error::Config("trajectory dimension does not match the spectrum".into()));
    }
    Ok((0..traj.len())
        .map(|i| {
            let u = traj.u[i].as_slice();
            let v = traj.uprime[i].as_slice();
            let sigma = spec.norm_sq_unchecked(u, 0.5);
            let product = eps * spec.norm_sq_unchecked(u, 1.0).sqrt() * v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let value = nl.eval_unchecked(sigma);
            let lhs_basic = if product == 0.0 {
                0.0
            } else if value.m == 0.0 || value.derivative.is_infinite() {
                f64::INFINITY
            } else {
                value.derivative.abs() / value.m * product
            };
            let lhs_basic_plus = if product == 0.0 {
                0.0
            } else if sigma == 0.0 {
                f64::INFINITY
            } else {
                product / sigma
            };
            AprioriSample {
                t: traj.times[i],
                lhs_basic,
                lhs_basic_plus,
                rhs: dis.b(traj.times[i]),
            }
        })
        .collect())
}

/// Whether `lhs_basic <= b(t)` at every sample past the initial layer `t >= 10 eps`.
pub fn satisfies_apriori_regime(samples: &[AprioriSample], eps: f64) -> bool {
    samples
        .iter()
        .filter(|s| s.t >= 10.0 * eps)
        .all(|s| s.lhs_basic <= s.rhs)
}

pub fn write_apriori_csv<W: Write>(samples: &[AprioriSample], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,lhs_basic,lhs_basic_plus,rhs")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(s.t),
            fmt_num(s.lhs_basic),
            fmt_num(s.lhs_basic_plus),
            fmt_num(s.rhs)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{solve_hyperbolic, solve_parabolic_reparam, IntegratorSettings, OutputGrid};
    use crate::rk::SolveStatus;
    use proptest::prelude::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    fn mv(v: &[f64]) -> ModalVector {
        ModalVector(v.to_vec())
    }

    fn single(u: &[f64], up: &[f64]) -> Trajectory {
        Trajectory {
            times: vec![0.0],
            u: vec![mv(u)],
            uprime: vec![mv(up)],
            status: SolveStatus::Completed,
            alpha: None,
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let sigma = Nonlinearity::power(1.0).unwrap();
        let h = hamiltonian(&spec(&[1.0]), &sigma, 0.5, &mv(&[1.0]), &mv(&[1.0])).unwrap();
        assert!((h - 1.0).abs() < 1e-15);
        assert_eq!(hamiltonian(&spec(&[1.0]), &sigma, 0.5, &mv(&[0.0]), &mv(&[0.0])).unwrap(), 0.0);
        let one = Nonlinearity::constant(1.0).unwrap();
        assert_eq!(hamiltonian(&spec(&[4.0]), &one, 1.0, &mv(&[1.0]), &mv(&[0.0])).unwrap(), 4.0);
        assert!(hamiltonian(&spec(&[4.0]), &one, 1.0, &mv(&[1.0, 2.0]), &mv(&[0.0])).is_err());
    }

    #[test]
    fn suite_single_mode_example() {
        let s = spec(&[1.0]);
        let nl = Nonlinearity::power(1.0).unwrap();
        let e = energy_suite(&single(&[1.0], &[0.0]), &s, &nl, 1.0, &[0.0, 1.0]).unwrap();
        let at = |name: &str| e.channel(name).unwrap()[0];
        assert_eq!(at("c_eps"), Some(1.0));
        assert_eq!(at("E_eps_0"), Some(1.0));
        assert_eq!(at("G_eps"), Some(0.0));
        assert_eq!(at("P_eps"), Some(1.0));
        assert_eq!(at("Q_eps"), Some(0.0));
        assert_eq!(at("H_eps"), Some(0.5));
    }

    #[test]
    fn sentinels_where_denominators_vanish() {
        let s = spec(&[0.0, 2.0]);
        let nl = Nonlinearity::power(1.0).unwrap();
        let e = energy_suite(&single(&[1.0, 0.0], &[0.5, 0.0]), &s, &nl, 0.1, &[0.0]).unwrap();
        for name in ["E_eps_0", "G_eps", "P_eps", "Q_eps", "P_par"] {
            assert_eq!(e.channel(name).unwrap()[0], None, "{name}");
        }
        assert_eq!(e.channel("H_eps").unwrap()[0], Some(0.1 * 0.25));
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",,"));
    }

    #[test]
    fn parabolic_suite_has_no_hyperbolic_channels() {
        let s = spec(&[1.0]);
        let nl = Nonlinearity::constant(1.0).unwrap();
        let settings = IntegratorSettings::with_grid(OutputGrid::log(50, 5.0));
        let traj = solve_parabolic_reparam(&s, &nl, &Dissipation::power_law(0.0).unwrap(), &mv(&[1.0]), &settings).unwrap();
        let e = energy_suite(&traj, &s, &nl, 0.0, &[0.0]).unwrap();
        assert!(e.channel("H_eps").is_none());
        for (i, &t) in e.times.iter().enumerate() {
            let e0 = e.channel("E_0").unwrap()[i].unwrap();
            assert!((e0 - (-2.0 * t).exp()).abs() < 1e-12);
            assert!((e.channel("P_par").unwrap()[i].unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn apriori_examples() {
        let s = spec(&[1.0, 3.0]);
        let one = Nonlinearity::constant(1.0).unwrap();
        let dis = Dissipation::power_law(0.5).unwrap();
        let traj = single(&[1.0, -0.5], &[0.3, 0.2]);
        let a = apriori_margin(&traj, &s, &one, &dis, 0.1).unwrap();
        assert_eq!(a[0].lhs_basic, 0.0);
        assert_eq!(a[0].rhs, 1.0);

        let g = 1.7;
        let pw = Nonlinearity::power(g).unwrap();
        let a = apriori_margin(&traj, &s, &pw, &dis, 0.1).unwrap();
        assert!((a[0].lhs_basic - g * a[0].lhs_basic_plus).abs() < 1e-14 * a[0].lhs_basic);
    }

    #[test]
    fn apriori_reference_run() {
        let s = spec(&[1.0]);
        let nl = Nonlinearity::power(1.0).unwrap();
        let dis = Dissipation::power_law(0.5).unwrap();
        let eps = 1e-3;
        let settings = IntegratorSettings::with_grid(OutputGrid::log(800, 100.0));
        let traj = solve_hyperbolic(&s, &nl, &dis, eps, &mv(&[1.0]), &mv(&[0.0]), &settings).unwrap();
        let a = apriori_margin(&traj, &s, &nl, &dis, eps).unwrap();
        assert!(satisfies_apriori_regime(&a, eps));
    }

    #[test]
    fn dissipation_identity_on_fine_grid() {
        // (H_{i+1} - H_i) / dt against the trapezoid average of -2 b |u'|^2
        let s = spec(&[1.0, 2.5]);
        let nl = Nonlinearity::power(1.0).unwrap();
        let dis = Dissipation::power_law(0.5).unwrap();
        let eps = 0.05;
        let settings = IntegratorSettings::with_grid(OutputGrid::linear(4001, 4.0));
        let traj = solve_hyperbolic(&s, &nl, &dis, eps, &mv(&[1.0, 0.5]), &mv(&[0.0, 1.0]), &settings).unwrap();
        let h: Vec<f64> = (0..traj.len())
            .map(|i| hamiltonian(&s, &nl, eps, &traj.u[i], &traj.uprime[i]).unwrap())
            .collect();
        let rate = |i: usize| -2.0 * dis.b(traj.times[i]) * traj.uprime[i].norm_sq();
        let scale = (0..traj.len()).map(|i| rate(i).abs()).fold(0.0, f64::max);
        for i in 0..traj.len() - 1 {
            let dt = traj.times[i + 1] - traj.times[i];
            let fd = (h[i + 1] - h[i]) / dt;
            let mid = 0.5 * (rate(i) + rate(i + 1));
            assert!((fd - mid).abs() <= 4e-3 * mid.abs().max(1e-3 * scale), "i = {i}");
        }
    }

    #[test]
    fn parabolic_dissipation_identity() {
        // d/dt M(|A^{1/2}u|^2) = -2 b |u'|^2
        let s = spec(&[0.5, 1.0, 3.0]);
        let nl = Nonlinearity::power(2.0).unwrap();
        let dis = Dissipation::power_law(1.0).unwrap();
        let settings = IntegratorSettings::with_grid(OutputGrid::linear(2001, 2.0));
        let traj = solve_parabolic_reparam(&s, &nl, &dis, &mv(&[0.7, -0.4, 0.2]), &settings).unwrap();
        let big_m: Vec<f64> = traj.u.iter().map(|u| hamiltonian(&s, &nl, 0.0, u, u).unwrap()).collect();
        let rate = |i: usize| -2.0 * dis.b(traj.times[i]) * traj.uprime[i].norm_sq();
        for i in 0..traj.len() - 1 {
            let fd = (big_m[i + 1] - big_m[i]) / (traj.times[i + 1] - traj.times[i]);
            let mid = 0.5 * (rate(i) + rate(i + 1));
            assert!((fd - mid).abs() <= 1e-3 * mid.abs(), "i = {i}");
        }
    }

    proptest! {
        #[test]
        fn channels_even_and_cauchy_schwarz(
            u in proptest::collection::vec(-3.0f64..3.0, 3),
            v in proptest::collection::vec(-3.0f64..3.0, 3),
            eps in 0.001f64..1.0,
        ) {
            let s = spec(&[0.3, 1.0, 5.0]);
            let nl = Nonlinearity::power(1.3).unwrap();
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            let negv: Vec<f64> = v.iter().map(|x| -x).collect();
            let a = energy_suite(&single(&u, &v), &s, &nl, eps, &[0.0, 1.0]).unwrap();
            let b = energy_suite(&single(&neg, &negv), &s, &nl, eps, &[0.0, 1.0]).unwrap();
            prop_assert_eq!(&a, &b);
            if let (Some(p), Some(par)) = (a.channel("P_eps").unwrap()[0], a.channel("P_par").unwrap()[0]) {
                prop_assert!(p >= par);
            }
            prop_assert!(a.channel("H_eps").unwrap()[0].unwrap() >= 0.0);
        }
    }
}
