//! Design-space sweeps over the rhomboid, theoretical jump-height bounds and
//! arithmetic on published robot figures.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegratorSettings;
use crate::rhomboid::{simulate_rhomboid, MassLayout, RhomboidConfig};
use crate::takeoff::{EnergyLedger, TakeoffClass};

/// Default payload added to the demonstrator in the payload family, kg.
pub const DEFAULT_PAYLOAD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    /// Demonstrator masses plus a payload split between body and foot.
    ExperimentalPlusPayload,
    /// Massless linkage, mass only at body and foot.
    BodyFoot,
    /// Massless linkage, mass only at body and the two knees.
    BodyKnees,
}

impl std::str::FromStr for SweepFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "experimental_plus_payload" => Ok(Self::ExperimentalPlusPayload),
            "body_foot" => Ok(Self::BodyFoot),
            "body_knees" => Ok(Self::BodyKnees),
            other => Err(Error::invalid(
                "family",
                format!("unknown family `{other}` (expected experimental_plus_payload, body_foot or body_knees)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParam {
    BodyMassFraction,
    ForceToWeight,
}

impl std::str::FromStr for SweptParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "body_mass_fraction" => Ok(Self::BodyMassFraction),
            "force_to_weight" => Ok(Self::ForceToWeight),
            other => Err(Error::invalid(
                "param",
                format!("unknown parameter `{other}` (expected body_mass_fraction or force_to_weight)"),
            )),
        }
    }
}

/// Admissible body-mass-fraction range of a family for a given base layout.
pub fn fraction_range(family: SweepFamily, base: &MassLayout, payload: f64) -> (f64, f64) {
    match family {
        SweepFamily::BodyFoot | SweepFamily::BodyKnees => (0.0, 1.0),
        SweepFamily::ExperimentalPlusPayload => {
            let total = base.total() + payload;
            (base.m1 / total, (base.m1 + payload) / total)
        }
    }
}

/// Mass layout of a family at body mass fraction `fraction`. Every family
/// carries the base mass plus `payload` in total.
pub fn family_layout(family: SweepFamily, base: &MassLayout, payload: f64, fraction: f64) -> Result<MassLayout> {
    let (lo, hi) = fraction_range(family, base, payload);
    // grid points computed as start + i·step may overshoot by rounding
    let slack = 1e-12;
    if !(fraction >= lo - slack && fraction <= hi + slack) {
        return Err(Error::OutOfRange {
            what: "body mass fraction",
            value: fraction,
            lo,
            hi,
        });
    }
    let f = fraction.clamp(lo, hi);
    let total = base.total() + payload;
    let mut m = [0.0; 8];
    match family {
        SweepFamily::BodyFoot => {
            m[0] = f * total;
            m[7] = (1.0 - f) * total;
        }
        SweepFamily::BodyKnees => {
            m[0] = f * total;
            m[3] = 0.5 * (1.0 - f) * total;
            m[4] = m[3];
        }
        SweepFamily::ExperimentalPlusPayload => {
            let to_body = (f * total - base.m1).clamp(0.0, payload);
            m = base.as_array();
            m[0] += to_body;
            m[7] += payload - to_body;
        }
    }
    MassLayout::new(m)
}

/// Where the knee mass of a layout goes in a force-to-weight study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassVariant {
    Experimental,
    KneesToBody,
    KneesToFoot,
}

impl MassVariant {
    pub fn apply(&self, m: &MassLayout) -> MassLayout {
        let knees = m.m4 + m.m5;
        let mut out = *m;
        match self {
            MassVariant::Experimental => {}
            MassVariant::KneesToBody => {
                out.m1 += knees;
                out.m4 = 0.0;
                out.m5 = 0.0;
            }
            MassVariant::KneesToFoot => {
                out.m8 += knees;
                out.m4 = 0.0;
                out.m5 = 0.0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub swept_param: SweptParam,
    pub grid: Vec<f64>,
    pub base_config: RhomboidConfig,
    pub payload: f64,
    /// Body mass fraction held fixed in a force-to-weight sweep; `None` keeps
    /// the base layout unchanged.
    pub fraction: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base_config.validate()?;
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "sweep grid is empty"));
        }
        if let Some(w) = self.grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "grid",
                format!("grid must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        if !(self.payload >= 0.0 && self.payload.is_finite()) {
            return Err(Error::invalid("payload", format!("must be >= 0, got {}", self.payload)));
        }
        if self.family == SweepFamily::ExperimentalPlusPayload && self.payload == 0.0 {
            return Err(Error::invalid("payload", "the payload family needs a positive payload"));
        }
        let base = &self.base_config.masses;
        match self.swept_param {
            SweptParam::BodyMassFraction => {
                for f in [self.grid[0], self.grid[self.grid.len() - 1]] {
                    family_layout(self.family, base, self.payload, f)?;
                }
            }
            SweptParam::ForceToWeight => {
                if let Some(w) = self.grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                    return Err(Error::OutOfRange {
                        what: "force-to-weight ratio",
                        value: *w,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                if let Some(f) = self.fraction {
                    family_layout(self.family, base, self.payload, f)?;
                }
            }
        }
        Ok(())
    }

    /// Configuration simulated at grid value `value`.
    pub fn config_at(&self, value: f64) -> Result<RhomboidConfig> {
        let base = &self.base_config;
        match self.swept_param {
            SweptParam::BodyMassFraction => {
                let masses = family_layout(self.family, &base.masses, self.payload, value)?;
                RhomboidConfig::new(masses, base.segment_length, base.k_r, base.theta_ini, base.theta_end, base.g)
            }
            SweptParam::ForceToWeight => {
                let masses = match self.fraction {
                    Some(f) => family_layout(self.family, &base.masses, self.payload, f)?,
                    None => base.masses,
                };
                RhomboidConfig::with_force_to_weight(masses, base.segment_length, value, base.theta_ini, base.theta_end, base.g)
            }
        }
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub efficiency: f64,
    pub h_norm: f64,
    pub class: TakeoffClass,
    pub frac_gpe: f64,
    pub frac_ke_y_cg: f64,
    pub frac_epe: f64,
    pub frac_ke_x: f64,
    pub frac_ke_y_rel: f64,
    pub frac_ke_rot: f64,
    #[serde(skip)]
    pub diagnostic: Option<String>,
}

impl SweepRow {
    fn new(param: f64, efficiency: f64, h_norm: f64, class: TakeoffClass, f: &EnergyLedger, diagnostic: Option<String>) -> Self {
        Self {
            param,
            efficiency,
            h_norm,
            class,
            frac_gpe: f.gpe,
            frac_ke_y_cg: f.ke_y_cg,
            frac_epe: f.epe,
            frac_ke_x: f.ke_x,
            frac_ke_y_rel: f.ke_y_rel,
            frac_ke_rot: f.ke_rot,
            diagnostic,
        }
    }
}

/// Simulates one configuration; a spring too weak to lift the linkage is a
/// no-take-off row rather than an error.
pub fn evaluate_point(param: f64, cfg: &RhomboidConfig, settings: &IntegratorSettings, tol_rel: f64) -> Result<SweepRow> {
    match simulate_rhomboid(cfg, settings, tol_rel) {
        Ok(run) => {
            let r = run.report;
            let f = r.ledger_at_takeoff.fractions_of(r.epe_initial);
            Ok(SweepRow::new(param, r.efficiency, r.jump_height_normalized, r.classification, &f, r.diagnostic))
        }
        Err(Error::CannotLift(msg)) => {
            let f = cfg.energy_ledger(cfg.theta_end, 0.0).fractions_of(cfg.epe_initial());
            Ok(SweepRow::new(param, 0.0, 0.0, TakeoffClass::NoTakeoff, &f, Some(msg)))
        }
        Err(e) => Err(e),
    }
}

/// Evaluates every grid point on a pool of `jobs` workers. Row order follows
/// the grid.
pub fn sweep(spec: &SweepSpec, settings: &IntegratorSettings, tol_rel: f64, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    pool.install(|| {
        spec.grid
            .par_iter()
            .map(|&v| evaluate_point(v, &spec.config_at(v)?, settings, tol_rel))
            .collect()
    })
}

/// Efficiency against force-to-weight ratio at fixed masses and geometry;
/// only the spring stiffness changes.
pub fn force_to_weight_sweep(
    base: &RhomboidConfig,
    variant: MassVariant,
    alphas: &[f64],
    settings: &IntegratorSettings,
    tol_rel: f64,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let cfg = RhomboidConfig {
        masses: variant.apply(&base.masses),
        ..*base
    };
    let spec = SweepSpec {
        family: SweepFamily::BodyFoot,
        swept_param: SweptParam::ForceToWeight,
        grid: alphas.to_vec(),
        base_config: cfg,
        payload: 0.0,
        fraction: None,
    };
    sweep(&spec, settings, tol_rel, jobs)
}

/// Normalized jump-height ceilings at force-to-weight ratio `alpha`: an ideal
/// constant-force spring reaches `alpha`, a linear spring `(alpha - 1)/2`.
pub fn bounds(alpha: f64) -> (f64, f64) {
    (alpha, 0.5 * (alpha - 1.0))
}

/// Published figures of one jumping robot. Absent values stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub name: String,
    #[serde(rename = "total_mass_kg")]
    pub total_mass: f64,
    #[serde(rename = "char_length_m")]
    pub char_length: f64,
    #[serde(rename = "stored_energy_J")]
    pub stored_energy: Option<f64>,
    #[serde(rename = "peak_force_N")]
    pub peak_force: Option<f64>,
    #[serde(rename = "takeoff_velocity_mps")]
    pub takeoff_velocity: Option<f64>,
}

impl RobotRecord {
    pub fn validate(&self) -> Result<()> {
        crate::error::positive("total_mass_kg", self.total_mass)?;
        crate::error::positive("char_length_m", self.char_length)?;
        if self.stored_energy.is_none() && self.peak_force.is_none() {
            return Err(Error::MissingField("stored_energy_J or peak_force_N"));
        }
        for (name, v) in [
            ("stored_energy_J", self.stored_energy),
            ("peak_force_N", self.peak_force),
            ("takeoff_velocity_mps", self.takeoff_velocity),
        ] {
            if let Some(v) = v {
                crate::error::non_negative(name, v)?;
            }
        }
        Ok(())
    }
}

/// Reads robot records from CSV. Lines starting with `#` are comments and
/// blank cells are absent values. Each row parses independently so one bad
/// row does not hide the rest.
pub fn read_robots<R: Read>(reader: R) -> Result<Vec<Result<RobotRecord>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    const EXPECTED: [&str; 6] = [
        "name",
        "total_mass_kg",
        "char_length_m",
        "stored_energy_J",
        "peak_force_N",
        "takeoff_velocity_mps",
    ];
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(EXPECTED.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header `{}` (expected `{}`)",
            headers.iter().collect::<Vec<_>>().join(","),
            EXPECTED.join(",")
        )));
    }
    Ok(rdr
        .deserialize::<RobotRecord>()
        .map(|r| {
            let rec = r?;
            rec.validate()?;
            Ok(rec)
        })
        .collect())
}

/// Peak spring force: the published value when present, otherwise the
/// constant-force equivalent of the stored energy over the stroke.
pub fn peak_force_estimate(record: &RobotRecord) -> Result<f64> {
    match (record.peak_force, record.stored_energy) {
        (Some(f), _) => Ok(f),
        (None, Some(e)) => Ok(2.0 * e / record.char_length),
        (None, None) => Err(Error::MissingField("stored_energy_J or peak_force_N")),
    }
}

/// Measured normalized jump height from the take-off velocity, and the
/// height the same stored energy would reach with all mass at the top of the
/// stroke. The second never falls below the first.
pub fn inertialess_prediction(record: &RobotRecord, g: f64) -> Result<(f64, f64)> {
    let e = record.stored_energy.ok_or(Error::MissingField("stored_energy_J"))?;
    let v = record.takeoff_velocity.ok_or(Error::MissingField("takeoff_velocity_mps"))?;
    let d = record.char_length;
    let measured = v * v / (2.0 * g * d);
    let inertialess = (e / (record.total_mass * g) - d) / d;
    Ok((measured, inertialess.max(measured)))
}

/// One row of a robot comparison table. Numeric cells are `None` when the
/// record lacks the inputs; `warning` says which.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub h_norm_measured: Option<f64>,
    pub h_norm_inertialess: Option<f64>,
    pub alpha: Option<f64>,
    pub bound_ideal: Option<f64>,
    pub bound_linear: Option<f64>,
    pub warning: String,
}

pub fn compare_record(record: &RobotRecord, g: f64) -> ComparisonRow {
    let mut warnings = Vec::new();
    let alpha = match peak_force_estimate(record) {
        Ok(f) => Some(f / (record.total_mass * g)),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    let (measured, inertialess) = match inertialess_prediction(record, g) {
        Ok((m, i)) => (Some(m), Some(i)),
        Err(e) => {
            warnings.push(e.to_string());
            let measured = record
                .takeoff_velocity
                .map(|v| v * v / (2.0 * g * record.char_length));
            (measured, None)
        }
    };
    let b = alpha.map(bounds);
    ComparisonRow {
        name: record.name.clone(),
        h_norm_measured: measured,
        h_norm_inertialess: inertialess,
        alpha,
        bound_ideal: b.map(|b| b.0),
        bound_linear: b.map(|b| b.1),
        warning: warnings.join("; "),
    }
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    if rows.is_empty() {
        w.write_record([
            "param",
            "efficiency",
            "h_norm",
            "class",
            "frac_gpe",
            "frac_ke_y_cg",
            "frac_epe",
            "frac_ke_x",
            "frac_ke_y_rel",
            "frac_ke_rot",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_comparison_csv<W: Write>(writer: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    if rows.is_empty() {
        w.write_record([
            "name",
            "h_norm_measured",
            "h_norm_inertialess",
            "alpha",
            "bound_ideal",
            "bound_linear",
            "warning",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
