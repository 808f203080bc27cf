//! Cross-model checks. Each check compares a model against something built
//! independently of it and reports the measured residual next to its
//! threshold.

use serde::Serialize;

use crate::baton::{simulate_baton, BatonConfig};
use crate::error::Result;
use crate::integrator::penalty::penalty_contact_sim;
use crate::integrator::{integrate_adaptive, Event, IntegratorSettings};
use crate::prismatic::PrismaticConfig;
use crate::rhomboid::{simulate_rhomboid, simulate_rhomboid_fixed, RhomboidConfig};
use crate::takeoff::DEFAULT_IDEAL_TOLERANCE;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes when `measured < threshold`.
    pub fn below(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured < threshold,
        }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: measured {:.3e}, threshold {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )
    }
}

/// Halton radical inverse, used for reproducible well-spread test states.
pub fn halton(index: usize, base: usize) -> f64 {
    let (mut f, mut r, mut i) = (1.0, 0.0, index);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Knee-joint dynamics assembled from raw geometry: component positions are
/// built from the linkage itself, velocities and the inertia are obtained by
/// finite differences, and the Euler-Lagrange equation is solved for the
/// knee acceleration. Nothing here reuses the closed-form model.
pub struct LagrangianOracle<'c> {
    cfg: &'c RhomboidConfig,
}

/// Centre position and orientation angle of each of the eight components.
type Pose = [(f64, f64, f64); 8];

impl<'c> LagrangianOracle<'c> {
    pub fn new(cfg: &'c RhomboidConfig) -> Self {
        Self { cfg }
    }

    fn pose(&self, theta: f64) -> Pose {
        let l = self.cfg.segment_length;
        // lower segments leave the foot at theta/2 above the horizontal, upper
        // segments close the rhombus at the body
        let foot = (0.0, 0.0);
        let dir_left = (-(0.5 * theta).cos(), (0.5 * theta).sin());
        let knee_l = (foot.0 + l * dir_left.0, foot.1 + l * dir_left.1);
        let knee_r = (-knee_l.0, knee_l.1);
        let body = (knee_l.0 - l * dir_left.0, knee_l.1 + l * dir_left.1);
        let mid = |a: (f64, f64), b: (f64, f64)| (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        let ang = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1).atan2(b.0 - a.0);
        let up_l = mid(knee_l, body);
        let up_r = mid(knee_r, body);
        let lo_l = mid(foot, knee_l);
        let lo_r = mid(foot, knee_r);
        [
            (body.0, body.1, 0.0),
            (up_l.0, up_l.1, ang(knee_l, body)),
            (up_r.0, up_r.1, ang(knee_r, body)),
            (knee_l.0, knee_l.1, 0.0),
            (knee_r.0, knee_r.1, 0.0),
            (lo_l.0, lo_l.1, ang(foot, knee_l)),
            (lo_r.0, lo_r.1, ang(foot, knee_r)),
            (foot.0, foot.1, 0.0),
        ]
    }

    fn pose_rate(&self, theta: f64) -> Pose {
        let h = 1e-3;
        let p = [
            self.pose(theta - 2.0 * h),
            self.pose(theta - h),
            self.pose(theta + h),
            self.pose(theta + 2.0 * h),
        ];
        let d = |a: f64, b: f64, c: f64, e: f64| (a - 8.0 * b + 8.0 * c - e) / (12.0 * h);
        let mut out = [(0.0, 0.0, 0.0); 8];
        for i in 0..8 {
            out[i] = (
                d(p[0][i].0, p[1][i].0, p[2][i].0, p[3][i].0),
                d(p[0][i].1, p[1][i].1, p[2][i].1, p[3][i].1),
                d(p[0][i].2, p[1][i].2, p[2][i].2, p[3][i].2),
            );
        }
        out
    }

    /// Kinetic energy at unit knee rate, i.e. half the generalized inertia.
    fn unit_kinetic_energy(&self, theta: f64) -> f64 {
        let m = self.cfg.masses.as_array();
        let l = self.cfg.segment_length;
        let rate = self.pose_rate(theta);
        let segment = [false, true, true, false, false, true, true, false];
        (0..8)
            .map(|i| {
                let (vx, vy, w) = rate[i];
                let rot = if segment[i] { m[i] * l * l / 12.0 * w * w } else { 0.0 };
                0.5 * (m[i] * (vx * vx + vy * vy) + rot)
            })
            .sum()
    }

    fn potential(&self, theta: f64) -> f64 {
        let m = self.cfg.masses.as_array();
        let pose = self.pose(theta);
        let gravity: f64 = (0..8).map(|i| m[i] * self.cfg.g * pose[i].1).sum();
        gravity + self.cfg.k_r * (self.cfg.theta_ini - theta).powi(2)
    }

    /// Knee acceleration and the sum of the magnitudes of its contributing
    /// terms, for relative comparisons near zero acceleration.
    pub fn acceleration(&self, theta: f64, thetadot: f64) -> (f64, f64) {
        let h = 1e-3;
        let inertia = |th: f64| 2.0 * self.unit_kinetic_energy(th);
        let d = |f: &dyn Fn(f64) -> f64| {
            (f(theta - 2.0 * h) - 8.0 * f(theta - h) + 8.0 * f(theta + h) - f(theta + 2.0 * h)) / (12.0 * h)
        };
        let m = inertia(theta);
        let dm = d(&inertia);
        let dv = d(&|th| self.potential(th));
        let centripetal = -0.5 * dm * thetadot * thetadot;
        ((centripetal - dv) / m, (centripetal.abs() + dv.abs()) / m)
    }
}

/// Largest relative deviation between `accel` and the Lagrangian oracle over
/// `n` states spread across the open linkage range.
pub fn lagrangian_deviation(cfg: &RhomboidConfig, n: usize, accel: impl Fn(f64, f64) -> f64) -> f64 {
    let oracle = LagrangianOracle::new(cfg);
    (1..=n)
        .map(|i| {
            let theta = 0.1 + 3.0 * halton(i, 2);
            let thetadot = -80.0 + 160.0 * halton(i, 3);
            let (expect, scale) = oracle.acceleration(theta, thetadot);
            (accel(theta, thetadot) - expect).abs() / scale
        })
        .fold(0.0, f64::max)
}

pub fn check_lagrangian(cfg: &RhomboidConfig, perturbation: f64) -> CheckResult {
    let dev = lagrangian_deviation(cfg, 100, |th, w| {
        let a = cfg.knee_angular_acceleration(th, w).unwrap_or(f64::NAN);
        if perturbation == 0.0 {
            a
        } else {
            // scale only the spring torque contribution of the numerator
            let spring = 2.0 * cfg.k_r * (cfg.theta_ini - th) / cfg.effective_inertia(th);
            a + perturbation * spring
        }
    });
    CheckResult::below("knee dynamics vs Lagrangian assembly", dev, 1e-6)
}

/// Closed-form prismatic motion against the adaptive integrator.
pub fn check_prismatic_closed_form(settings: &IntegratorSettings) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for (alpha, frac) in [(3.0, 0.9), (10.0, 0.4), (25.0, 0.7)] {
        let c = PrismaticConfig::from_force_to_weight(frac, 1.0 - frac, alpha, 0.2, 9.81)?;
        let t_to = c.takeoff_time().expect("configuration takes off");
        let ev = Event::new("t_to", 1e-15, move |t, _| t_to - t);
        let sol = integrate_adaptive(|t, s| c.deriv(t, s), 0.0, [0.0, 0.0], &[ev], |_| true, settings)?;
        let scale_y = c.takeoff_displacement();
        let scale_v = (c.k * c.d - c.m_body * c.g) / (c.k * c.m_body).sqrt();
        for s in &sol.samples[1..] {
            let (y, v, _) = c.trajectory(s.t.min(t_to))?;
            worst = worst.max((s.y[0] - y).abs() / scale_y).max((s.y[1] - v).abs() / scale_v);
        }
    }
    Ok(CheckResult::below("prismatic closed form vs adaptive ODE", worst, 1e-8))
}

pub fn check_penalty_contact(cfg: &RhomboidConfig, settings: &IntegratorSettings) -> Result<CheckResult> {
    let ev = simulate_rhomboid(cfg, settings, DEFAULT_IDEAL_TOLERANCE)?.report;
    let pen = penalty_contact_sim(cfg, settings, DEFAULT_IDEAL_TOLERANCE)?.report;
    let rel = (pen.v_cg_to - ev.v_cg_to).abs() / ev.v_cg_to.abs();
    Ok(CheckResult::below("event take-off vs penalty contact", rel, 0.01))
}

pub fn check_fixed_step(cfg: &RhomboidConfig, settings: &IntegratorSettings) -> Result<CheckResult> {
    let a = simulate_rhomboid(cfg, settings, DEFAULT_IDEAL_TOLERANCE)?.report;
    let f = simulate_rhomboid_fixed(cfg, settings, DEFAULT_IDEAL_TOLERANCE)?.report;
    let rel = (f.v_cg_to - a.v_cg_to).abs() / a.v_cg_to.abs();
    Ok(CheckResult::below("adaptive vs fixed-step take-off velocity", rel, 1e-3))
}

/// Largest relative energy drift across rhomboid and baton runs.
pub fn check_energy(cfg: &RhomboidConfig, settings: &IntegratorSettings) -> Result<CheckResult> {
    let mut worst = simulate_rhomboid(cfg, settings, DEFAULT_IDEAL_TOLERANCE)?.energy_drift();
    for k in [4.5, 5.5, 10.0] {
        let b = BatonConfig::from_normalized_stiffness(1.0, 1.0, k, 30f64.to_radians(), 9.81)?;
        let run = simulate_baton(&b, settings, DEFAULT_IDEAL_TOLERANCE)?;
        let e0 = b.epe_initial();
        for s in &run.samples {
            worst = worst.max((s.kinetic + s.epe + s.gpe - e0).abs() / e0);
        }
    }
    Ok(CheckResult::below("energy conservation drift", worst, 1e-6))
}

/// Take-off time of the k_norm = 5.5 baton against a rerun at a tenth of
/// the tolerance.
pub fn check_self_convergence(settings: &IntegratorSettings) -> Result<CheckResult> {
    let b = BatonConfig::from_normalized_stiffness(1.0, 1.0, 5.5, 30f64.to_radians(), 9.81)?;
    let t1 = simulate_baton(&b, settings, DEFAULT_IDEAL_TOLERANCE)?.report.state_at_takeoff.t;
    let tight = IntegratorSettings {
        rel_tol: settings.rel_tol / 10.0,
        max_step: settings.max_step / 10.0,
        ..*settings
    };
    let t2 = simulate_baton(&b, &tight, DEFAULT_IDEAL_TOLERANCE)?.report.state_at_takeoff.t;
    Ok(CheckResult::below("baton take-off time self-convergence (s)", (t1 - t2).abs(), 1e-6))
}

/// Knobs for deliberately breaking a model to confirm a check notices.
#[derive(Debug, Clone, Copy, Default)]
pub struct Perturbations {
    /// Relative error injected into the knee spring torque.
    pub knee_torque: f64,
}

/// Every oracle on the demonstrator configuration. A check that cannot run
/// is reported as failed with an infinite residual.
pub fn run_all(settings: &IntegratorSettings, perturb: Perturbations) -> Vec<CheckResult> {
    let cfg = RhomboidConfig::demonstrator();
    let or_fail = |name: &str, r: Result<CheckResult>| {
        r.unwrap_or_else(|e| CheckResult {
            name: format!("{name} ({e})"),
            measured: f64::INFINITY,
            threshold: 0.0,
            passed: false,
        })
    };
    vec![
        or_fail("prismatic closed form", check_prismatic_closed_form(settings)),
        check_lagrangian(&cfg, perturb.knee_torque),
        or_fail("penalty contact", check_penalty_contact(&cfg, settings)),
        or_fail("fixed step", check_fixed_step(&cfg, settings)),
        or_fail("energy", check_energy(&cfg, settings)),
        or_fail("self-convergence", check_self_convergence(settings)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhomboid::MassLayout;
    use proptest::prelude::*;

    #[test]
    fn halton_first_terms() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_geometry_closes() {
        let cfg = RhomboidConfig::demonstrator();
        let p = LagrangianOracle::new(&cfg).pose(1.3);
        assert!(p[0].0.abs() < 1e-15);
        assert!((p[0].1 - 2.0 * 0.15 * 0.65f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn all_checks_pass_by_default() {
        for c in run_all(&IntegratorSettings::default(), Perturbations::default()) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn one_percent_torque_error_is_caught() {
        let c = check_lagrangian(&RhomboidConfig::demonstrator(), 0.01);
        assert!(!c.passed, "{c}");
    }

    #[test]
    fn soft_ground_is_caught() {
        let s = IntegratorSettings {
            contact_stiffness: 1e4,
            ..IntegratorSettings::default()
        };
        let c = check_penalty_contact(&RhomboidConfig::demonstrator(), &s).unwrap();
        assert!(!c.passed, "{c}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn oracle_agrees_on_random_layouts(m in proptest::array::uniform8(0.0f64..0.2), th in 0.1f64..3.1, w in -80.0f64..80.0) {
            let masses = MassLayout::new(m);
            prop_assume!(masses.is_ok());
            let cfg = RhomboidConfig { masses: masses.unwrap(), ..RhomboidConfig::demonstrator() };
            let oracle = LagrangianOracle::new(&cfg);
            let (expect, scale) = oracle.acceleration(th, w);
            prop_assume!(scale.is_finite());
            let got = cfg.knee_angular_acceleration(th, w).unwrap();
            prop_assert!((got - expect).abs() <= 1e-6 * scale, "{} vs {}", got, expect);
        }
    }
}
