//! Prismatic jumper: a sprung body mass on a massless translational spring
//! above an unsprung foot mass. Everything before take-off has a closed form.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::takeoff::{classify_takeoff, EnergyLedger, SimState, TakeoffClass, TakeoffReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrismaticConfig {
    pub m_body: f64,
    pub m_foot: f64,
    /// Spring stiffness, N/m.
    pub k: f64,
    /// Natural spring length, also the characteristic length.
    pub d: f64,
    pub g: f64,
}

impl PrismaticConfig {
    pub fn new(m_body: f64, m_foot: f64, k: f64, d: f64, g: f64) -> Result<Self> {
        positive("m_body", m_body)?;
        non_negative("m_foot", m_foot)?;
        positive("k", k)?;
        positive("d", d)?;
        non_negative("g", g)?;
        Ok(Self {
            m_body,
            m_foot,
            k,
            d,
            g,
        })
    }

    /// Derives the stiffness from the force-to-weight ratio through the
    /// charged-state balance `k·d = α·m_T·g + m_B·g`.
    pub fn from_force_to_weight(m_body: f64, m_foot: f64, alpha: f64, d: f64, g: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("m_body", m_body)?;
        non_negative("m_foot", m_foot)?;
        positive("d", d)?;
        positive("g", g)?;
        let k = (alpha * (m_body + m_foot) * g + m_body * g) / d;
        Self::new(m_body, m_foot, k, d, g)
    }

    pub fn total_mass(&self) -> f64 {
        self.m_body + self.m_foot
    }

    pub fn body_mass_fraction(&self) -> f64 {
        self.m_body / self.total_mass()
    }

    /// Force-to-weight ratio implied by the stiffness.
    pub fn force_to_weight(&self) -> f64 {
        (self.k * self.d - self.m_body * self.g) / (self.total_mass() * self.g)
    }

    pub fn angular_frequency(&self) -> f64 {
        (self.k / self.m_body).sqrt()
    }

    /// Stored elastic energy in the charged state `y = 0`.
    pub fn epe_initial(&self) -> f64 {
        0.5 * self.k * self.d * self.d
    }

    /// Net upward force on the body at release; must be positive to move.
    fn release_force(&self) -> f64 {
        self.k * self.d - self.m_body * self.g
    }

    /// Body acceleration from the equation of motion (valid for any `y`).
    pub fn body_acceleration(&self, y: f64) -> f64 {
        (self.k * (self.d - y) - self.m_body * self.g) / self.m_body
    }

    /// Ground reaction on the foot: spring force plus unsprung weight.
    pub fn ground_reaction(&self, y: f64) -> f64 {
        self.k * (self.d - y) + self.m_foot * self.g
    }

    /// Body displacement at which the foot unloads.
    pub fn takeoff_displacement(&self) -> f64 {
        self.d + self.m_foot * self.g / self.k
    }

    /// First zero of the ground reaction, or `None` when the spring never
    /// unloads the foot.
    pub fn takeoff_time(&self) -> Option<f64> {
        let amp = self.release_force();
        if amp <= 0.0 {
            return None;
        }
        // y(t) = (amp/k)(1 - cos wt) reaches y_to where cos wt = -m_T g / amp
        let c = -self.total_mass() * self.g / amp;
        if c < -1.0 {
            return None;
        }
        Some(c.acos() / self.angular_frequency())
    }

    /// Closed-form body displacement, velocity and acceleration.
    pub fn trajectory(&self, t: f64) -> Result<(f64, f64, f64)> {
        let amp = self.release_force();
        if amp <= 0.0 {
            return Err(Error::CannotLift(format!(
                "k·d = {} N does not exceed the body weight {} N",
                self.k * self.d,
                self.m_body * self.g
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
        }
        if let Some(t_to) = self.takeoff_time() {
            if t > t_to * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "t",
                    format!("{t} s is past take-off at {t_to} s"),
                ));
            }
        }
        let w = self.angular_frequency();
        let (s, c) = (w * t).sin_cos();
        Ok((
            amp / self.k * (1.0 - c),
            amp / (self.k * self.m_body).sqrt() * s,
            amp / self.m_body * c,
        ))
    }

    /// Body velocity at take-off, from energy conservation of the sprung
    /// body between release and `y_to`.
    fn body_takeoff_velocity_squared(&self) -> f64 {
        let kd = self.k * self.d;
        let (mb, mf, g) = (self.m_body, self.m_foot, self.g);
        (kd * (kd - 2.0 * mb * g) - mf * g * g * (2.0 * mb + mf)) / (self.k * mb)
    }

    /// Energy ledger at body displacement `y` and velocity `ydot` with the
    /// foot still on the ground.
    pub fn energy_ledger(&self, y: f64, ydot: f64) -> EnergyLedger {
        let m_t = self.total_mass();
        let v_cg = self.m_body / m_t * ydot;
        let ke_y_cg = 0.5 * m_t * v_cg * v_cg;
        let ke_y_rel = 0.5 * self.m_body * (ydot - v_cg).powi(2) + 0.5 * self.m_foot * v_cg * v_cg;
        let gpe = self.m_body * self.g * y;
        let epe = 0.5 * self.k * (self.d - y).powi(2);
        EnergyLedger::new(0.0, ke_y_cg, ke_y_rel, 0.0, gpe, epe)
    }

    pub fn takeoff_report(&self, tol_rel: f64) -> Result<TakeoffReport> {
        let epe0 = self.epe_initial();
        let v2 = self.body_takeoff_velocity_squared();
        let t_to = match self.takeoff_time() {
            Some(t) if v2 >= 0.0 => t,
            _ => {
                let ledger = self.energy_ledger(0.0, 0.0);
                return TakeoffReport::assemble(
                    SimState::new(0.0, 0.0, 0.0),
                    TakeoffClass::NoTakeoff,
                    0.0,
                    ledger,
                    epe0,
                    self.g,
                    self.d,
                    Some("spring cannot unload the foot".into()),
                );
            }
        };
        let y_to = self.takeoff_displacement();
        let ydot_to = v2.max(0.0).sqrt();
        let v_cg = self.m_body / self.total_mass() * ydot_to;
        let ledger = self.energy_ledger(y_to, ydot_to);
        TakeoffReport::assemble(
            SimState::new(t_to, y_to, ydot_to),
            classify_takeoff(y_to, self.d, tol_rel),
            v_cg,
            ledger,
            epe0,
            self.g,
            self.d,
            None,
        )
    }

    /// Right-hand side of the body equation of motion for `[y, ydot]`.
    pub fn deriv(&self, _t: f64, s: &[f64; 2]) -> [f64; 2] {
        [s[1], self.body_acceleration(s[0])]
    }
}
