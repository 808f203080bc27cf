use std::io::Write;

use jumpsim::baton::{simulate_baton, simulate_baton_fixed};
use jumpsim::integrator::penalty::penalty_contact_sim;
use jumpsim::prismatic::PrismaticConfig;
use jumpsim::rhomboid::{simulate_rhomboid, simulate_rhomboid_fixed};
use jumpsim::{EnergyLedger, TakeoffReport};
use serde::Serialize;

use crate::config::{Method, Model, Resolved};

#[derive(Serialize)]
pub struct ReportDoc<'r> {
    pub model: &'static str,
    pub method: Method,
    #[serde(flatten)]
    pub report: &'r TakeoffReport,
}

const LEDGER_COLUMNS: [&str; 7] = ["ke_x", "ke_y_cg", "ke_y_rel", "ke_rot", "gpe", "epe", "total"];

pub struct Trajectory {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl Trajectory {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Header `lead` followed by the energy ledger columns.
    fn with_ledger(lead: &[&'static str]) -> Self {
        let mut header = lead.to_vec();
        header.extend_from_slice(&LEDGER_COLUMNS);
        Self::new(&header)
    }

    fn push(&mut self, lead: &[f64], l: &EnergyLedger) {
        let mut row = lead.to_vec();
        row.extend_from_slice(&[l.ke_x, l.ke_y_cg, l.ke_y_rel, l.ke_rot, l.gpe, l.epe, l.total]);
        self.rows.push(row);
    }

    pub fn write_csv(&self, writer: impl Write) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of evenly spaced samples of the closed-form prismatic motion.
const PRISMATIC_SAMPLES: usize = 201;

fn prismatic(cfg: &PrismaticConfig, tol: f64) -> anyhow::Result<(TakeoffReport, Option<Trajectory>)> {
    let report = cfg.takeoff_report(tol)?;
    let mut t = Trajectory::with_ledger(&["t", "y", "ydot", "y_cg", "ydot_cg", "F_R"]);
    let m_t = cfg.total_mass();
    if let Some(t_to) = cfg.takeoff_time() {
        for i in 0..PRISMATIC_SAMPLES {
            let time = t_to * i as f64 / (PRISMATIC_SAMPLES - 1) as f64;
            let (y, ydot, _) = cfg.trajectory(time)?;
            let frac = cfg.m_body / m_t;
            t.push(
                &[time, y, ydot, frac * y, frac * ydot, cfg.ground_reaction(y)],
                &cfg.energy_ledger(y, ydot),
            );
        }
    }
    Ok((report, Some(t)))
}

/// Runs the configured model and method.
pub fn run_model(run: &Resolved) -> anyhow::Result<(TakeoffReport, Option<Trajectory>)> {
    let (s, tol) = (&run.settings, run.ideal_tolerance);
    match (&run.model, run.method) {
        (Model::Prismatic(c), _) => prismatic(c, tol),
        (Model::Baton(c), m) => {
            let out = match m {
                Method::Fixed => simulate_baton_fixed(c, s, tol)?,
                _ => simulate_baton(c, s, tol)?,
            };
            let mut t = Trajectory::new(&[
                "t",
                "theta",
                "thetadot",
                "F_R_spring",
                "F_R_gravity",
                "F_R_centripetal",
                "F_R_total",
                "E_kin",
                "E_epe",
                "E_gpe",
            ]);
            for smp in &out.samples {
                let r = &smp.reaction;
                t.rows.push(vec![
                    smp.state.t,
                    smp.state.q,
                    smp.state.qdot,
                    r.spring,
                    r.gravity,
                    r.centripetal,
                    r.total,
                    smp.kinetic,
                    smp.epe,
                    smp.gpe,
                ]);
            }
            Ok((out.report, Some(t)))
        }
        (Model::Rhomboid(c), Method::Penalty) => Ok((penalty_contact_sim(c, s, tol)?.report, None)),
        (Model::Rhomboid(c), m) => {
            let out = match m {
                Method::Fixed => simulate_rhomboid_fixed(c, s, tol)?,
                _ => simulate_rhomboid(c, s, tol)?,
            };
            let mut t = Trajectory::with_ledger(&["t", "theta_deg", "thetadot", "y_cg", "ydot_cg", "F_R"]);
            for smp in &out.samples {
                t.push(
                    &[
                        smp.state.t,
                        smp.state.q.to_degrees(),
                        smp.state.qdot,
                        smp.y_cg,
                        smp.ydot_cg,
                        smp.ground_reaction,
                    ],
                    &smp.ledger,
                );
            }
            Ok((out.report, Some(t)))
        }
    }
}
