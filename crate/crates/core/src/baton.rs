//! Inverted baton: a point mass on a massless rod pivoting at the ground,
//! driven by a rotational spring at the pivot. Depending on the balance of
//! gravity and centripetal load it can leave the ground early, on time or
//! late relative to the spring's natural angle.

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::integrator::{integrate_adaptive, integrate_fixed, Event, IntegratorSettings, Solution};
use crate::takeoff::{classify_takeoff, EnergyLedger, SimState, TakeoffClass, TakeoffReport};

/// Rod angle beyond which the integration stops without a take-off.
pub const ANGLE_CLAMP: f64 = 89.9 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatonConfig {
    pub m_body: f64,
    /// Rod length, also the characteristic length.
    pub d: f64,
    /// Pivot spring stiffness, N·m/rad.
    pub k_r: f64,
    /// Natural spring angle measured from the ground, rad.
    pub theta_ini: f64,
    pub g: f64,
}

/// The three contributions to the vertical ground reaction. `total` is
/// `spring + gravity - centripetal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundReaction {
    pub spring: f64,
    pub gravity: f64,
    pub centripetal: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatonSample {
    pub state: SimState,
    pub reaction: GroundReaction,
    pub kinetic: f64,
    pub epe: f64,
    pub gpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatonRun {
    pub report: TakeoffReport,
    pub samples: Vec<BatonSample>,
}

impl BatonConfig {
    pub fn new(m_body: f64, d: f64, k_r: f64, theta_ini: f64, g: f64) -> Result<Self> {
        positive("m_body", m_body)?;
        positive("d", d)?;
        positive("k_r", k_r)?;
        positive("g", g)?;
        positive("theta_ini", theta_ini)?;
        if theta_ini > std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid(
                "theta_ini",
                format!("must lie in (0, pi/2], got {theta_ini}"),
            ));
        }
        Ok(Self {
            m_body,
            d,
            k_r,
            theta_ini,
            g,
        })
    }

    /// Builds a config from the normalized stiffness `k_r / (m·g·d)`.
    pub fn from_normalized_stiffness(m_body: f64, d: f64, k_norm: f64, theta_ini: f64, g: f64) -> Result<Self> {
        positive("k_norm", k_norm)?;
        Self::new(m_body, d, k_norm * m_body * g * d, theta_ini, g)
    }

    pub fn normalized_stiffness(&self) -> f64 {
        self.k_r / (self.m_body * self.g * self.d)
    }

    pub fn spring_torque(&self, theta: f64) -> f64 {
        self.k_r * (self.theta_ini - theta)
    }

    pub fn acceleration(&self, theta: f64, _thetadot: f64) -> f64 {
        (self.spring_torque(theta) / self.d - self.m_body * self.g * theta.cos()) / (self.m_body * self.d)
    }

    /// Axial rod load: gravity component minus centripetal force. Sign is
    /// reported as computed.
    pub fn tension(&self, theta: f64, thetadot: f64) -> f64 {
        self.m_body * self.g * theta.sin() - self.m_body * self.d * thetadot * thetadot
    }

    pub fn ground_reaction_components(&self, theta: f64, thetadot: f64) -> GroundReaction {
        let (s, c) = theta.sin_cos();
        let spring = self.spring_torque(theta) / self.d * c;
        let gravity = self.m_body * self.g * s * s;
        let centripetal = self.m_body * self.d * thetadot * thetadot * s;
        GroundReaction {
            spring,
            gravity,
            centripetal,
            total: spring + gravity - centripetal,
        }
    }

    pub fn epe_initial(&self) -> f64 {
        0.5 * self.k_r * self.theta_ini * self.theta_ini
    }

    /// Ledger of the point mass. It is its own centre of mass, so there is no
    /// relative or rotational term.
    pub fn energy_ledger(&self, theta: f64, thetadot: f64) -> EnergyLedger {
        let (s, c) = theta.sin_cos();
        let v = self.d * thetadot;
        let vx = -v * s;
        let vy = v * c;
        EnergyLedger::new(
            0.5 * self.m_body * vx * vx,
            0.5 * self.m_body * vy * vy,
            0.0,
            0.0,
            self.m_body * self.g * self.d * s,
            0.5 * self.k_r * (self.theta_ini - theta).powi(2),
        )
    }

    pub fn deriv(&self, _t: f64, s: &[f64; 2]) -> [f64; 2] {
        [s[1], self.acceleration(s[0], s[1])]
    }

    fn sample(&self, t: f64, y: &[f64; 2]) -> BatonSample {
        let l = self.energy_ledger(y[0], y[1]);
        BatonSample {
            state: SimState::new(t, y[0], y[1]),
            reaction: self.ground_reaction_components(y[0], y[1]),
            kinetic: l.kinetic(),
            epe: l.epe,
            gpe: l.gpe,
        }
    }
}

const EV_TAKEOFF: usize = 0;
const EV_CLAMP: usize = 1;
const EV_STALL: usize = 2;

fn run_baton(
    cfg: &BatonConfig,
    settings: &IntegratorSettings,
    tol_rel: f64,
    fixed: bool,
) -> Result<BatonRun> {
    if cfg.spring_torque(0.0) / cfg.d <= cfg.m_body * cfg.g {
        return Err(Error::CannotLift(format!(
            "spring force {} N at the charged angle does not exceed the weight {} N",
            cfg.spring_torque(0.0) / cfg.d,
            cfg.m_body * cfg.g
        )));
    }
    let weight = cfg.m_body * cfg.g;
    let events = [
        Event::new("takeoff", 1e-9 * weight, |_, y: &[f64; 2]| {
            cfg.ground_reaction_components(y[0], y[1]).total
        }),
        Event::new("clamp", 1e-12, |_, y: &[f64; 2]| ANGLE_CLAMP - y[0]),
        Event::new("stall", 1e-12, |_, y: &[f64; 2]| y[1]),
    ];
    let deriv = |t: f64, y: &[f64; 2]| cfg.deriv(t, y);
    let admissible = |y: &[f64; 2]| y[0] >= 0.0;
    let sol: Solution<2> = if fixed {
        integrate_fixed(deriv, 0.0, [0.0, 0.0], &events, admissible, settings)?
    } else {
        integrate_adaptive(deriv, 0.0, [0.0, 0.0], &events, admissible, settings)?
    };

    let samples: Vec<BatonSample> = sol.samples.iter().map(|s| cfg.sample(s.t, &s.y)).collect();
    let hit = &sol.event;
    let (theta, thetadot) = (hit.y[0], hit.y[1]);
    let state = SimState::new(hit.t, theta, thetadot);
    let ledger = cfg.energy_ledger(theta, thetadot);
    let (class, v_cg, diagnostic) = match hit.index {
        EV_TAKEOFF => (
            classify_takeoff(theta, cfg.theta_ini, tol_rel),
            cfg.d * thetadot * theta.cos(),
            None,
        ),
        EV_CLAMP => (
            TakeoffClass::NoTakeoff,
            0.0,
            Some(format!(
                "rod reached the {:.1} deg clamp with ground reaction {:.6} N",
                ANGLE_CLAMP.to_degrees(),
                cfg.ground_reaction_components(theta, thetadot).total
            )),
        ),
        EV_STALL => (
            TakeoffClass::NoTakeoff,
            0.0,
            Some("angular velocity returned to zero before the ground reaction vanished".into()),
        ),
        _ => unreachable!("three events registered"),
    };
    let report = TakeoffReport::assemble(
        state,
        class,
        v_cg,
        ledger,
        cfg.epe_initial(),
        cfg.g,
        cfg.d,
        diagnostic,
    )?;
    Ok(BatonRun { report, samples })
}

/// Releases the baton from the charged posture (rod on the ground, at rest)
/// and integrates until the ground reaction first vanishes.
pub fn simulate_baton(cfg: &BatonConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<BatonRun> {
    run_baton(cfg, settings, tol_rel, false)
}

/// Same as [`simulate_baton`] on the fixed-step RK4 integrator.
pub fn simulate_baton_fixed(cfg: &BatonConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<BatonRun> {
    run_baton(cfg, settings, tol_rel, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prismatic::PrismaticConfig;
    use crate::takeoff::DEFAULT_IDEAL_TOLERANCE as TOL;

    const G: f64 = 9.81;

    fn unit_baton(k_norm: f64) -> BatonConfig {
        BatonConfig::from_normalized_stiffness(1.0, 1.0, k_norm, 30f64.to_radians(), G).unwrap()
    }

    #[test]
    fn zero_gravity_equilibrium() {
        let c = BatonConfig {
            g: 0.0,
            ..unit_baton(5.0)
        };
        assert_eq!(c.acceleration(c.theta_ini, 0.0), 0.0);
    }

    #[test]
    fn horizontal_rod_acceleration() {
        let c = unit_baton(10.0);
        let expect = G / c.d * (10.0 * std::f64::consts::FRAC_PI_6 - 1.0);
        assert!((c.acceleration(0.0, 0.0) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn small_angle_matches_prismatic_form() {
        // at theta = 0 the tangential motion obeys m·a = F_spring - m·g with
        // F_spring = tau/d, the prismatic equation with k(d - y) -> tau/d
        let c = unit_baton(7.0);
        let f_spring = c.spring_torque(0.0) / c.d;
        let p = PrismaticConfig::new(c.m_body, 0.0, f_spring / c.d, c.d, G).unwrap();
        let a_baton = c.acceleration(0.0, 0.0) * c.d;
        assert!((a_baton - p.body_acceleration(0.0)).abs() < 1e-12 * a_baton.abs());
    }

    #[test]
    fn reaction_at_zero_angle_is_spring_only() {
        let c = unit_baton(5.5);
        for w in [0.0, 1.0, 7.3] {
            let r = c.ground_reaction_components(0.0, w);
            assert_eq!(r.gravity, 0.0);
            assert_eq!(r.centripetal, 0.0);
            assert!((r.total - c.spring_torque(0.0) / c.d).abs() < 1e-12);
        }
    }

    #[test]
    fn reaction_at_rest_at_natural_angle() {
        let c = unit_baton(5.5);
        let r = c.ground_reaction_components(c.theta_ini, 0.0);
        let expect = c.m_body * G * c.theta_ini.sin().powi(2);
        assert!(r.spring.abs() < 1e-15);
        assert!((r.total - expect).abs() < 1e-12);
        assert!(r.total > 0.0);
    }

    #[test]
    fn tension_value() {
        let c = unit_baton(5.5);
        let t = c.tension(0.3, 2.0);
        assert!((t - (G * 0.3f64.sin() - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn fig3_classification_triple() {
        let s = IntegratorSettings::default();
        let delayed = simulate_baton(&unit_baton(4.5), &s, TOL).unwrap().report;
        let ideal = simulate_baton(&unit_baton(5.5), &s, TOL).unwrap().report;
        let early = simulate_baton(&unit_baton(10.0), &s, TOL).unwrap().report;
        assert_eq!(delayed.classification, TakeoffClass::Delayed);
        assert_eq!(ideal.classification, TakeoffClass::Idealised);
        assert_eq!(early.classification, TakeoffClass::Premature);
        assert!(early.state_at_takeoff.q < 30f64.to_radians());
    }

    #[test]
    fn takeoff_reaction_vanishes_and_balances() {
        let c = unit_baton(10.0);
        let rep = simulate_baton(&c, &IntegratorSettings::default(), TOL).unwrap().report;
        let st = rep.state_at_takeoff;
        let r = c.ground_reaction_components(st.q, st.qdot);
        assert!(r.total.abs() < 1e-6 * c.m_body * G);
        assert!((r.spring + r.gravity - r.centripetal).abs() < 1e-6 * c.m_body * G);
    }

    #[test]
    fn energy_conserved_along_trajectory() {
        let c = unit_baton(4.5);
        let run = simulate_baton(&c, &IntegratorSettings::default(), TOL).unwrap();
        let e0 = c.epe_initial();
        for s in &run.samples {
            let e = s.kinetic + s.epe + s.gpe;
            assert!((e - e0).abs() < 1e-8 * e0, "{e} vs {e0}");
        }
    }

    #[test]
    fn weak_spring_is_an_error() {
        let c = unit_baton(0.5);
        assert!(matches!(
            simulate_baton(&c, &IntegratorSettings::default(), TOL),
            Err(Error::CannotLift(_))
        ));
    }

    #[test]
    fn larger_natural_angle_is_more_premature() {
        let s = IntegratorSettings::default();
        let ratio = |deg: f64| {
            let c = BatonConfig::from_normalized_stiffness(1.0, 1.0, 5.5, deg.to_radians(), G).unwrap();
            let r = simulate_baton(&c, &s, TOL).unwrap().report;
            r.state_at_takeoff.q / c.theta_ini
        };
        let (a, b, c) = (ratio(30.0), ratio(45.0), ratio(60.0));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn config_validation() {
        assert!(BatonConfig::new(1.0, 1.0, 10.0, 2.0, G).is_err());
        assert!(BatonConfig::new(-1.0, 1.0, 10.0, 0.5, G).is_err());
        let c = unit_baton(5.5);
        assert!((c.k_r - 5.5 * G).abs() < 1e-12);
        assert!((c.normalized_stiffness() - 5.5).abs() < 1e-12);
    }
}
