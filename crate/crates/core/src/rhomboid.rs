//! Rhomboidal spring-linkage: four equal segments joined at the body (top),
//! two knees and the foot, with a rotational spring pair at each knee.
//!
//! The linkage has one degree of freedom, the knee angle θ between the upper
//! and lower segment on one side. The foot sits at the origin; the body moves
//! straight up. Component index `i` (0-based) corresponds to mass `m{i+1}`:
//!
//! | idx | component            | height            | horizontal offset |
//! |-----|----------------------|-------------------|-------------------|
//! | 0   | body joint B         | 2L·sin(θ/2)       | 0                 |
//! | 1,2 | upper segments       | 1.5L·sin(θ/2)     | ∓(L/2)·cos(θ/2)   |
//! | 3,4 | knee joints A, D     | L·sin(θ/2)        | ∓L·cos(θ/2)       |
//! | 5,6 | lower segments       | 0.5L·sin(θ/2)     | ∓(L/2)·cos(θ/2)   |
//! | 7   | foot joint F         | 0                 | 0                 |
//!
//! Segments are thin uniform beams with `I = m·L²/12` spinning at `θ̇/2`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::integrator::{integrate_adaptive, integrate_fixed, Event, IntegratorSettings, Solution};
use crate::takeoff::{classify_takeoff, EnergyLedger, SimState, TakeoffClass, TakeoffReport};

/// Knee angle at which the leg counts as fully extended.
pub const EXTENSION_CLAMP: f64 = 179.9 * std::f64::consts::PI / 180.0;

/// Height coefficient of each component in units of `L·sin(θ/2)`.
const HEIGHT_COEF: [f64; 8] = [2.0, 1.5, 1.5, 1.0, 1.0, 0.5, 0.5, 0.0];
/// Signed horizontal coefficient in units of `L·cos(θ/2)`.
const WIDTH_COEF: [f64; 8] = [0.0, -0.5, 0.5, -1.0, 1.0, -0.5, 0.5, 0.0];
const IS_SEGMENT: [bool; 8] = [false, true, true, false, false, true, true, false];

/// Point and segment masses of the linkage, kg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassLayout {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
    pub m7: f64,
    pub m8: f64,
}

impl MassLayout {
    pub fn new(m: [f64; 8]) -> Result<Self> {
        const NAMES: [&str; 8] = ["m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8"];
        for (name, v) in NAMES.iter().zip(m) {
            non_negative(name, v)?;
        }
        let layout = Self::from_array(m);
        if layout.total() <= 0.0 {
            return Err(Error::invalid("masses", "total mass must be positive"));
        }
        Ok(layout)
    }

    fn from_array(m: [f64; 8]) -> Self {
        Self {
            m1: m[0],
            m2: m[1],
            m3: m[2],
            m4: m[3],
            m5: m[4],
            m6: m[5],
            m7: m[6],
            m8: m[7],
        }
    }

    /// Mass budget of the 205.6 g demonstrator, pair totals split evenly.
    pub fn demonstrator() -> Self {
        Self::from_array([
            0.1155, 0.00405, 0.00405, 0.0317, 0.0317, 0.00405, 0.00405, 0.0105,
        ])
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.m1, self.m2, self.m3, self.m4, self.m5, self.m6, self.m7, self.m8,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn body_mass_fraction(&self) -> f64 {
        self.m1 / self.total()
    }

    /// True when nothing above the foot has mass.
    pub fn is_massless_linkage(&self) -> bool {
        self.as_array()[..7].iter().all(|m| *m == 0.0)
    }
}

/// Weighted mass sums that collapse the eight-body Lagrangian to one
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassAggregates {
    /// Horizontal-inertia weight.
    pub agg_a: f64,
    /// Vertical-inertia weight.
    pub agg_b: f64,
    /// Segment rotational-inertia weight.
    pub agg_c: f64,
    /// Gravity / CG-height weight.
    pub agg_d: f64,
}

pub fn compute_aggregates(masses: &MassLayout) -> MassAggregates {
    let m = masses;
    let segs = m.m2 + m.m3 + m.m6 + m.m7;
    let knees = m.m4 + m.m5;
    let upper = m.m2 + m.m3;
    let lower = m.m6 + m.m7;
    MassAggregates {
        agg_a: segs + 4.0 * knees,
        agg_b: 16.0 * m.m1 + 9.0 * upper + 4.0 * knees + lower,
        agg_c: segs,
        agg_d: 4.0 * m.m1 + 3.0 * upper + 2.0 * knees + lower,
    }
}

/// Position, velocity and acceleration of one component centre.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PointKinematics {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
}

/// Kinematics of all eight component centres, index order `m1..m8`.
pub fn joint_kinematics(l: f64, theta: f64, thetadot: f64, thetaddot: f64) -> [PointKinematics; 8] {
    let (s, c) = (0.5 * theta).sin_cos();
    let w2 = thetadot * thetadot;
    let mut out = [PointKinematics::default(); 8];
    for (i, p) in out.iter_mut().enumerate() {
        let a = WIDTH_COEF[i] * l;
        let b = HEIGHT_COEF[i] * l;
        *p = PointKinematics {
            x: a * c,
            y: b * s,
            vx: -0.5 * a * s * thetadot,
            vy: 0.5 * b * c * thetadot,
            ax: -0.5 * a * (thetaddot * s + 0.5 * w2 * c),
            ay: 0.5 * b * (thetaddot * c - 0.5 * w2 * s),
        };
    }
    out
}

/// Spring stiffness that makes the quasi-static charging force reach
/// `f_max` at the charged angle `theta_end`.
pub fn spring_stiffness_from_peak_force(f_max: f64, theta_ini: f64, theta_end: f64, l: f64) -> Result<f64> {
    positive("theta_end", theta_end)?;
    positive("l", l)?;
    non_negative("f_max", f_max)?;
    if theta_end >= theta_ini {
        return Err(Error::invalid(
            "theta_end",
            format!("charged angle {theta_end} must be below the natural angle {theta_ini}"),
        ));
    }
    Ok(f_max * l * (0.5 * theta_end).cos() / (2.0 * (theta_ini - theta_end)))
}

/// Inverse of [`spring_stiffness_from_peak_force`].
pub fn peak_force_from_stiffness(k_r: f64, theta_ini: f64, theta_end: f64, l: f64) -> f64 {
    2.0 * k_r * (theta_ini - theta_end) / (l * (0.5 * theta_end).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhomboidConfig {
    pub masses: MassLayout,
    /// Segment length `L`; the characteristic length is `2L`.
    pub segment_length: f64,
    /// Stiffness of each knee spring pair, N·m/rad.
    pub k_r: f64,
    pub theta_ini: f64,
    /// Charged knee angle.
    pub theta_end: f64,
    pub g: f64,
}

impl RhomboidConfig {
    pub fn new(masses: MassLayout, segment_length: f64, k_r: f64, theta_ini: f64, theta_end: f64, g: f64) -> Result<Self> {
        let cfg = Self {
            masses,
            segment_length,
            k_r,
            theta_ini,
            theta_end,
            g,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Derives `k_r` from the force-to-weight ratio `F_max / (m_T·g)`.
    pub fn with_force_to_weight(masses: MassLayout, segment_length: f64, alpha: f64, theta_ini: f64, theta_end: f64, g: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("g", g)?;
        let f_max = alpha * masses.total() * g;
        let k_r = spring_stiffness_from_peak_force(f_max, theta_ini, theta_end, segment_length)?;
        Self::new(masses, segment_length, k_r, theta_ini, theta_end, g)
    }

    /// The 205.6 g demonstrator: L = 0.15 m, k_r = 0.7 N·m/rad, natural angle
    /// 178°, charged angle 25°.
    pub fn demonstrator() -> Self {
        Self {
            masses: MassLayout::demonstrator(),
            segment_length: 0.15,
            k_r: 0.7,
            theta_ini: 178f64.to_radians(),
            theta_end: 25f64.to_radians(),
            g: crate::takeoff::STANDARD_GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        MassLayout::new(self.masses.as_array())?;
        positive("segment_length", self.segment_length)?;
        positive("k_r", self.k_r)?;
        non_negative("g", self.g)?;
        positive("theta_end", self.theta_end)?;
        if !(self.theta_end < self.theta_ini && self.theta_ini < std::f64::consts::PI) {
            return Err(Error::invalid(
                "theta_ini",
                format!(
                    "need 0 < theta_end < theta_ini < pi, got theta_end = {}, theta_ini = {}",
                    self.theta_end, self.theta_ini
                ),
            ));
        }
        Ok(())
    }

    pub fn char_length(&self) -> f64 {
        2.0 * self.segment_length
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.total()
    }

    pub fn aggregates(&self) -> MassAggregates {
        compute_aggregates(&self.masses)
    }

    pub fn peak_force(&self) -> f64 {
        peak_force_from_stiffness(self.k_r, self.theta_ini, self.theta_end, self.segment_length)
    }

    pub fn force_to_weight(&self) -> f64 {
        self.peak_force() / (self.total_mass() * self.g)
    }

    /// Elastic energy stored in both spring pairs at the charged angle.
    pub fn epe_initial(&self) -> f64 {
        self.epe(self.theta_end)
    }

    pub fn epe(&self, theta: f64) -> f64 {
        self.k_r * (self.theta_ini - theta).powi(2)
    }

    /// Effective inertia about the knee coordinate.
    pub fn effective_inertia(&self, theta: f64) -> f64 {
        let MassAggregates { agg_a, agg_b, agg_c, .. } = self.aggregates();
        let l2 = self.segment_length * self.segment_length;
        let (s, c) = (0.5 * theta).sin_cos();
        l2 / 16.0 * (agg_a * s * s + agg_b * c * c) + l2 / 48.0 * agg_c
    }

    pub fn knee_angular_acceleration(&self, theta: f64, thetadot: f64) -> Result<f64> {
        let MassAggregates { agg_a, agg_b, agg_d, .. } = self.aggregates();
        let l = self.segment_length;
        let num = 2.0 * self.k_r * (self.theta_ini - theta)
            - l * l * thetadot * thetadot / 64.0 * theta.sin() * (agg_a - agg_b)
            - agg_d * l * self.g / 4.0 * (0.5 * theta).cos();
        let den = self.effective_inertia(theta);
        if !(den > 0.0) {
            return Err(Error::NonPositiveInertia(den));
        }
        Ok(num / den)
    }

    /// Vertical CG height, velocity and acceleration from the body-joint
    /// kinematics scaled by `agg_D / (4 m_T)`.
    pub fn cg_vertical(&self, theta: f64, thetadot: f64, thetaddot: f64) -> (f64, f64, f64) {
        let ratio = self.aggregates().agg_d / (4.0 * self.total_mass());
        let b = joint_kinematics(self.segment_length, theta, thetadot, thetaddot)[0];
        (ratio * b.y, ratio * b.vy, ratio * b.ay)
    }

    /// Vertical ground reaction on the foot, summed over all components.
    pub fn ground_reaction(&self, theta: f64, thetadot: f64) -> Result<f64> {
        let thetaddot = self.knee_angular_acceleration(theta, thetadot)?;
        Ok(self.ground_reaction_with(theta, thetadot, thetaddot))
    }

    /// Ground reaction for a prescribed `thetaddot`.
    pub fn ground_reaction_with(&self, theta: f64, thetadot: f64, thetaddot: f64) -> f64 {
        let kin = joint_kinematics(self.segment_length, theta, thetadot, thetaddot);
        self.masses
            .as_array()
            .iter()
            .zip(kin.iter())
            .map(|(m, p)| m * (self.g + p.ay))
            .sum()
    }

    pub fn energy_ledger(&self, theta: f64, thetadot: f64) -> EnergyLedger {
        let kin = joint_kinematics(self.segment_length, theta, thetadot, 0.0);
        let rest = joint_kinematics(self.segment_length, self.theta_end, 0.0, 0.0);
        let masses = self.masses.as_array();
        let m_t = self.total_mass();
        let (_, v_cg, _) = self.cg_vertical(theta, thetadot, 0.0);
        let omega = 0.5 * thetadot;
        let l2 = self.segment_length * self.segment_length;

        let mut ke_x = 0.0;
        let mut ke_y_rel = 0.0;
        let mut ke_rot = 0.0;
        let mut gpe = 0.0;
        for i in 0..8 {
            let m = masses[i];
            let p = &kin[i];
            ke_x += 0.5 * m * p.vx * p.vx;
            ke_y_rel += 0.5 * m * (p.vy - v_cg).powi(2);
            if IS_SEGMENT[i] {
                ke_rot += 0.5 * (m * l2 / 12.0) * omega * omega;
            }
            gpe += m * self.g * (p.y - rest[i].y);
        }
        EnergyLedger::new(ke_x, 0.5 * m_t * v_cg * v_cg, ke_y_rel, ke_rot, gpe, self.epe(theta))
    }

    /// Left and right sides of the take-off condition at `(theta, thetadot)`:
    /// the body acceleration that puts the CG in free fall, and the body
    /// acceleration the linkage produces, with the spring torque written
    /// through the force-to-weight ratio. Both are `None` when `g` or
    /// `agg_D` vanish.
    pub fn takeoff_condition_sides(&self, theta: f64, thetadot: f64) -> Option<(f64, f64)> {
        let MassAggregates { agg_a, agg_b, agg_c, agg_d } = self.aggregates();
        if self.g == 0.0 || agg_d == 0.0 {
            return None;
        }
        let m_t = self.total_mass();
        let g = self.g;
        let l = self.segment_length;
        let alpha = self.force_to_weight();
        let (s, c) = (0.5 * theta).sin_cos();
        let lhs = -4.0 * m_t * g / agg_d;
        let spring = alpha * m_t * g * (0.5 * self.theta_end).cos() * (self.theta_ini - theta)
            / (self.theta_ini - self.theta_end);
        let num = (spring - agg_d * g / 4.0 * c) * c - l * thetadot * thetadot / 96.0 * (3.0 * agg_a + agg_c) * s;
        let den = (agg_a * s * s + agg_b * c * c) / 16.0 + agg_c / 48.0;
        Some((lhs, num / den))
    }

    pub fn deriv(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
        // a corrupt layout is rejected before integration starts
        let a = self.knee_angular_acceleration(y[0], y[1]).unwrap_or(f64::NAN);
        [y[1], a]
    }
}

/// One trajectory point of a rhomboid run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhomboidSample {
    pub state: SimState,
    pub y_cg: f64,
    pub ydot_cg: f64,
    pub yddot_cg: f64,
    pub ground_reaction: f64,
    pub ledger: EnergyLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhomboidRun {
    pub report: TakeoffReport,
    pub samples: Vec<RhomboidSample>,
}

impl RhomboidRun {
    /// Largest CG acceleration seen on the sampled trajectory, m/s².
    pub fn peak_cg_acceleration(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.yddot_cg)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative deviation of the ledger total from the stored energy.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.report.epe_initial;
        self.samples
            .iter()
            .map(|s| (s.ledger.total - e0).abs() / e0)
            .fold(0.0, f64::max)
    }
}

impl RhomboidConfig {
    fn sample(&self, t: f64, theta: f64, thetadot: f64) -> RhomboidSample {
        let thetaddot = self.knee_angular_acceleration(theta, thetadot).unwrap_or(f64::NAN);
        let (y_cg, ydot_cg, yddot_cg) = self.cg_vertical(theta, thetadot, thetaddot);
        RhomboidSample {
            state: SimState::new(t, theta, thetadot),
            y_cg,
            ydot_cg,
            yddot_cg,
            ground_reaction: self.ground_reaction_with(theta, thetadot, thetaddot),
            ledger: self.energy_ledger(theta, thetadot),
        }
    }
}

const EV_TAKEOFF: usize = 0;
const EV_CLAMP: usize = 1;
const EV_STALL: usize = 2;

fn run_rhomboid(cfg: &RhomboidConfig, settings: &IntegratorSettings, tol_rel: f64, fixed: bool) -> Result<RhomboidRun> {
    cfg.validate()?;
    let start = cfg.sample(0.0, cfg.theta_end, 0.0);
    if cfg.masses.is_massless_linkage() {
        // the spring does no work on the CG when all mass sits on the foot
        let report = TakeoffReport::assemble(
            start.state,
            TakeoffClass::NoTakeoff,
            0.0,
            start.ledger,
            cfg.epe_initial(),
            cfg.g,
            cfg.char_length(),
            Some("all mass is on the foot; the linkage cannot lift it".into()),
        )?;
        return Ok(RhomboidRun {
            report,
            samples: vec![start],
        });
    }
    let a0 = cfg.knee_angular_acceleration(cfg.theta_end, 0.0)?;
    if a0 <= 0.0 {
        return Err(Error::CannotLift(format!(
            "net knee torque at the charged angle is non-positive (knee acceleration {a0} rad/s^2)"
        )));
    }

    let fr_tol = 1e-9 * cfg.total_mass() * cfg.g.max(1.0);
    let events = [
        Event::new("takeoff", fr_tol, |_, y: &[f64; 2]| {
            cfg.ground_reaction(y[0], y[1]).unwrap_or(f64::NAN)
        }),
        Event::new("clamp", 1e-12, |_, y: &[f64; 2]| EXTENSION_CLAMP - y[0]),
        Event::new("stall", 1e-12, |_, y: &[f64; 2]| y[1]),
    ];
    let deriv = |t: f64, y: &[f64; 2]| cfg.deriv(t, y);
    let admissible = |y: &[f64; 2]| y[0] > 0.0 && y[0] < std::f64::consts::PI;
    let sol: Solution<2> = if fixed {
        integrate_fixed(deriv, 0.0, [cfg.theta_end, 0.0], &events, admissible, settings)?
    } else {
        integrate_adaptive(deriv, 0.0, [cfg.theta_end, 0.0], &events, admissible, settings)?
    };

    let samples: Vec<RhomboidSample> = sol
        .samples
        .iter()
        .map(|s| cfg.sample(s.t, s.y[0], s.y[1]))
        .collect();
    let hit = &sol.event;
    let last = cfg.sample(hit.t, hit.y[0], hit.y[1]);
    let (class, v_cg, diagnostic) = match hit.index {
        EV_TAKEOFF => (classify_takeoff(hit.y[0], cfg.theta_ini, tol_rel), last.ydot_cg, None),
        EV_CLAMP => (
            TakeoffClass::Delayed,
            last.ydot_cg,
            Some(format!(
                "leg reached the {:.1} deg extension clamp before the ground reaction vanished (F_R = {:.6} N)",
                EXTENSION_CLAMP.to_degrees(),
                last.ground_reaction
            )),
        ),
        EV_STALL => (
            TakeoffClass::NoTakeoff,
            0.0,
            Some("knee rate returned to zero before the ground reaction vanished".into()),
        ),
        _ => unreachable!("three events registered"),
    };
    let report = TakeoffReport::assemble(
        last.state,
        class,
        v_cg,
        last.ledger,
        cfg.epe_initial(),
        cfg.g,
        cfg.char_length(),
        diagnostic,
    )?;
    Ok(RhomboidRun { report, samples })
}

/// Releases the linkage from the charged angle at rest and integrates the
/// knee dynamics until the ground reaction first vanishes.
pub fn simulate_rhomboid(cfg: &RhomboidConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<RhomboidRun> {
    run_rhomboid(cfg, settings, tol_rel, false)
}

/// [`simulate_rhomboid`] on the fixed-step RK4 integrator.
pub fn simulate_rhomboid_fixed(cfg: &RhomboidConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<RhomboidRun> {
    run_rhomboid(cfg, settings, tol_rel, true)
}
