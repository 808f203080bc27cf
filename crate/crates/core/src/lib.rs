//! Take-off dynamics of spring-driven jumpers.
//!
//! Three models of increasing fidelity share one vocabulary
//! ([`takeoff`]): a prismatic spring between body and foot with a closed-form
//! solution ([`prismatic`]), a rotating rod on a torsion spring ([`baton`]),
//! and a four-segment rhomboidal linkage with knee springs ([`rhomboid`]).
//! [`analysis`] sweeps the rhomboid over mass distributions and stiffness;
//! [`verify`] cross-checks the models against independent oracles.

pub mod analysis;
pub mod baton;
pub mod error;
pub mod integrator;
pub mod prismatic;
pub mod rhomboid;
pub mod takeoff;
pub mod verify;

pub use error::{Error, Result};
pub use integrator::IntegratorSettings;
pub use takeoff::{EnergyLedger, SimState, TakeoffClass, TakeoffReport};
