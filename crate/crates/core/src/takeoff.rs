//! Shared vocabulary of the three jumper models: spring parameters, the
//! generalized state, the energy ledger and the take-off classification.
//!
//! Everything here is SI. Angles are radians; conversion from degrees happens
//! once at the configuration boundary.

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Standard gravity used when a configuration does not override it.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default relative band around the natural spring state inside which a
/// take-off counts as idealised.
pub const DEFAULT_IDEAL_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringKind {
    Rotational,
    Translational,
}

/// A Hookean spring. `stiffness` is N·m/rad for rotational springs and N/m for
/// translational ones; `natural` is the natural angle (rad) or length (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    pub kind: SpringKind,
    pub stiffness: f64,
    pub natural: f64,
}

impl SpringSpec {
    pub fn rotational(stiffness: f64, natural_angle: f64) -> Result<Self> {
        positive("stiffness", stiffness)?;
        positive("natural", natural_angle)?;
        if natural_angle >= std::f64::consts::PI {
            return Err(Error::invalid(
                "natural",
                format!("rotational natural angle must be below pi, got {natural_angle}"),
            ));
        }
        Ok(Self {
            kind: SpringKind::Rotational,
            stiffness,
            natural: natural_angle,
        })
    }

    pub fn translational(stiffness: f64, natural_length: f64) -> Result<Self> {
        positive("stiffness", stiffness)?;
        positive("natural", natural_length)?;
        Ok(Self {
            kind: SpringKind::Translational,
            stiffness,
            natural: natural_length,
        })
    }
}

/// Generalized coordinate `q` (rad or m), its rate and the time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
}

impl SimState {
    pub fn new(t: f64, q: f64, qdot: f64) -> Self {
        Self { t, q, qdot }
    }
}

/// Instantaneous split of the system energy, in joules.
///
/// `gpe` is measured from the charged posture, so at release every entry but
/// `epe` is zero and `total` equals the stored elastic energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub ke_x: f64,
    pub ke_y_cg: f64,
    pub ke_y_rel: f64,
    pub ke_rot: f64,
    pub gpe: f64,
    pub epe: f64,
    pub total: f64,
}

impl EnergyLedger {
    pub fn new(ke_x: f64, ke_y_cg: f64, ke_y_rel: f64, ke_rot: f64, gpe: f64, epe: f64) -> Self {
        Self {
            ke_x,
            ke_y_cg,
            ke_y_rel,
            ke_rot,
            gpe,
            epe,
            total: ke_x + ke_y_cg + ke_y_rel + ke_rot + gpe + epe,
        }
    }

    /// Every component (and the total) divided by `reference`.
    pub fn fractions_of(&self, reference: f64) -> EnergyLedger {
        EnergyLedger::new(
            self.ke_x / reference,
            self.ke_y_cg / reference,
            self.ke_y_rel / reference,
            self.ke_rot / reference,
            self.gpe / reference,
            self.epe / reference,
        )
    }

    pub fn kinetic(&self) -> f64 {
        self.ke_x + self.ke_y_cg + self.ke_y_rel + self.ke_rot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TakeoffClass {
    Premature,
    Idealised,
    Delayed,
    NoTakeoff,
}

impl TakeoffClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TakeoffClass::Premature => "premature",
            TakeoffClass::Idealised => "idealised",
            TakeoffClass::Delayed => "delayed",
            TakeoffClass::NoTakeoff => "no_takeoff",
        }
    }

    pub fn took_off(&self) -> bool {
        !matches!(self, TakeoffClass::NoTakeoff)
    }
}

impl std::fmt::Display for TakeoffClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one acceleration phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeoffReport {
    pub state_at_takeoff: SimState,
    pub classification: TakeoffClass,
    /// Vertical CG velocity at take-off, m/s.
    pub v_cg_to: f64,
    pub ledger_at_takeoff: EnergyLedger,
    pub epe_initial: f64,
    pub efficiency: f64,
    pub jump_height: f64,
    pub jump_height_normalized: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl TakeoffReport {
    /// Builds a report from the take-off state and ledger; jump height and
    /// efficiency follow from `v_cg_to`, `g` and the characteristic length.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        state: SimState,
        classification: TakeoffClass,
        v_cg_to: f64,
        ledger: EnergyLedger,
        epe_initial: f64,
        g: f64,
        char_length: f64,
        diagnostic: Option<String>,
    ) -> Result<Self> {
        let eff = efficiency(&ledger, epe_initial)?;
        // nothing is launched without a take-off
        let eff = if classification.took_off() { eff } else { 0.0 };
        let (h, h_norm) = jump_height(v_cg_to.max(0.0), g, char_length);
        Ok(Self {
            state_at_takeoff: state,
            classification,
            v_cg_to,
            ledger_at_takeoff: ledger,
            epe_initial,
            efficiency: eff,
            jump_height: h,
            jump_height_normalized: h_norm,
            diagnostic,
        })
    }
}

/// Classifies a take-off from the spring state relative to its natural state.
pub fn classify_takeoff(spring_state: f64, natural: f64, tol_rel: f64) -> TakeoffClass {
    if spring_state < natural * (1.0 - tol_rel) {
        TakeoffClass::Premature
    } else if spring_state > natural * (1.0 + tol_rel) {
        TakeoffClass::Delayed
    } else {
        TakeoffClass::Idealised
    }
}

/// Elastic-kinetic conversion efficiency: vertical CG kinetic energy at
/// take-off over the stored elastic energy.
pub fn efficiency(ledger_at_takeoff: &EnergyLedger, epe_initial: f64) -> Result<f64> {
    if !(epe_initial.is_finite() && epe_initial > 0.0) {
        return Err(Error::DegenerateCharge(epe_initial));
    }
    Ok(ledger_at_takeoff.ke_y_cg / epe_initial)
}

/// Ballistic apex rise of the CG above its take-off height, and that rise over
/// the characteristic length. Zero gravity has no apex; it maps to infinity.
pub fn jump_height(v_cg_to: f64, g: f64, char_length: f64) -> (f64, f64) {
    let h = if v_cg_to == 0.0 {
        0.0
    } else {
        v_cg_to * v_cg_to / (2.0 * g)
    };
    (h, h / char_length)
}
