//! Penalty-contact variant of the rhomboid: the foot is free to move
//! vertically and rests on a stiff one-sided ground spring, so take-off is the
//! moment the contact spring unloads rather than an imposed reaction root.
//!
//! State is `[y_foot, theta, ydot_foot, thetadot]`.

use serde::Serialize;

use super::{integrate_fixed, Event, IntegratorSettings};
use crate::error::{Error, Result};
use crate::rhomboid::{RhomboidConfig, EXTENSION_CLAMP};
use crate::takeoff::{classify_takeoff, EnergyLedger, SimState, TakeoffClass, TakeoffReport};

/// One-sided linear ground spring.
pub fn contact_force(stiffness: f64, y_foot: f64) -> f64 {
    stiffness * (-y_foot).max(0.0)
}

/// Ground penetration that carries the whole weight of a standing linkage.
pub fn static_deflection(cfg: &RhomboidConfig, stiffness: f64) -> f64 {
    cfg.total_mass() * cfg.g / stiffness
}

/// Coupled foot/knee dynamics.
struct PenaltyModel<'c> {
    cfg: &'c RhomboidConfig,
    k_c: f64,
    /// `agg_D·L/2`: CG height times total mass is `p_scale·sin(θ/2)`.
    p_scale: f64,
}

impl<'c> PenaltyModel<'c> {
    fn new(cfg: &'c RhomboidConfig, k_c: f64) -> Self {
        Self {
            cfg,
            k_c,
            p_scale: cfg.aggregates().agg_d * cfg.segment_length / 2.0,
        }
    }

    fn p1(&self, theta: f64) -> f64 {
        0.5 * self.p_scale * (0.5 * theta).cos()
    }

    fn p2(&self, theta: f64) -> f64 {
        -0.25 * self.p_scale * (0.5 * theta).sin()
    }

    /// Solves the 2x2 mass-matrix system for `(yddot_foot, thetaddot)`.
    fn accelerations(&self, y: &[f64; 4]) -> Result<(f64, f64)> {
        let cfg = self.cfg;
        let (theta, w) = (y[1], y[3]);
        let m_t = cfg.total_mass();
        let p1 = self.p1(theta);
        let m = cfg.effective_inertia(theta);
        let a = cfg.aggregates();
        let l2 = cfg.segment_length * cfg.segment_length;
        let half_dm = l2 * (a.agg_a - a.agg_b) * theta.sin() / 64.0;

        let r1 = -m_t * cfg.g + contact_force(self.k_c, y[0]) - self.p2(theta) * w * w;
        let r2 = 2.0 * cfg.k_r * (cfg.theta_ini - theta) - cfg.g * p1 - half_dm * w * w;
        let det = m_t * m - p1 * p1;
        if !(det > 0.0) {
            return Err(Error::NonPositiveInertia(det));
        }
        Ok(((m * r1 - p1 * r2) / det, (m_t * r2 - p1 * r1) / det))
    }

    fn deriv(&self, y: &[f64; 4]) -> [f64; 4] {
        match self.accelerations(y) {
            Ok((ay, at)) => [y[2], y[3], ay, at],
            Err(_) => [f64::NAN; 4],
        }
    }

    fn cg_velocity(&self, y: &[f64; 4]) -> f64 {
        y[2] + self.p1(y[1]) * y[3] / self.cfg.total_mass()
    }

    /// Energy split with the contact spring folded into `gpe` so the total is
    /// conserved; it vanishes at take-off.
    fn ledger(&self, y: &[f64; 4]) -> EnergyLedger {
        let cfg = self.cfg;
        let rel = cfg.energy_ledger(y[1], y[3]);
        let m_t = cfg.total_mass();
        let v = self.cg_velocity(y);
        let pen = (-y[0]).max(0.0);
        let y0 = self.initial_foot_height();
        let gpe = rel.gpe + m_t * cfg.g * (y[0] - y0) + 0.5 * self.k_c * (pen * pen - y0 * y0);
        EnergyLedger::new(rel.ke_x, 0.5 * m_t * v * v, rel.ke_y_rel, rel.ke_rot, gpe, rel.epe)
    }

    /// Foot height at release: the ground carries the weight plus the
    /// reaction of the accelerating linkage, so the foot starts at rest.
    fn initial_foot_height(&self) -> f64 {
        let cfg = self.cfg;
        let a0 = cfg.knee_angular_acceleration(cfg.theta_end, 0.0).unwrap_or(f64::NAN);
        -(cfg.total_mass() * cfg.g + self.p1(cfg.theta_end) * a0) / self.k_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyRun {
    pub report: TakeoffReport,
    /// Foot velocity when the contact spring unloads, m/s.
    pub foot_velocity: f64,
    /// Ground penetration at release, m (negative into the ground).
    pub initial_foot_height: f64,
    pub steps: usize,
}

/// Runs the rhomboid with penalty contact on the fixed-step integrator at
/// `settings.fixed_step` and ground stiffness `settings.contact_stiffness`.
pub fn penalty_contact_sim(cfg: &RhomboidConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<PenaltyRun> {
    cfg.validate()?;
    settings.validate()?;
    let model = PenaltyModel::new(cfg, settings.contact_stiffness);
    let a0 = cfg.knee_angular_acceleration(cfg.theta_end, 0.0)?;
    if a0 <= 0.0 {
        return Err(Error::CannotLift(format!(
            "net knee torque at the charged angle is non-positive (knee acceleration {a0} rad/s^2)"
        )));
    }
    let y0 = [model.initial_foot_height(), cfg.theta_end, 0.0, 0.0];
    model.accelerations(&y0)?;

    let events = [
        Event::new("takeoff", 1e-15, |_, y: &[f64; 4]| -y[0]),
        Event::new("clamp", 1e-12, |_, y: &[f64; 4]| EXTENSION_CLAMP - y[1]),
        Event::new("stall", 1e-12, |_, y: &[f64; 4]| y[3]),
    ];
    let sol = integrate_fixed(
        |_, y: &[f64; 4]| model.deriv(y),
        0.0,
        y0,
        &events,
        |y: &[f64; 4]| y[1] > 0.0 && y[1] < std::f64::consts::PI,
        settings,
    )?;
    let hit = &sol.event;
    let y = hit.y;
    let state = SimState::new(hit.t, y[1], y[3]);
    let v_cg = model.cg_velocity(&y);
    let (class, v_cg, diagnostic) = match hit.index {
        0 => (classify_takeoff(y[1], cfg.theta_ini, tol_rel), v_cg, None),
        1 => (
            TakeoffClass::Delayed,
            v_cg,
            Some("leg reached the extension clamp while the foot was still in contact".to_string()),
        ),
        _ => (
            TakeoffClass::NoTakeoff,
            0.0,
            Some("knee rate returned to zero while the foot was still in contact".to_string()),
        ),
    };
    let report = TakeoffReport::assemble(
        state,
        class,
        v_cg,
        model.ledger(&y),
        cfg.epe_initial(),
        cfg.g,
        cfg.char_length(),
        diagnostic,
    )?;
    Ok(PenaltyRun {
        report,
        foot_velocity: y[2],
        initial_foot_height: y0[0],
        steps: sol.accepted_steps,
    })
}
