use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use jumpsim::analysis::{
    self, compare_record, read_robots, ComparisonRow, MassVariant, SweepFamily, SweepSpec, SweptParam,
    DEFAULT_PAYLOAD,
};
use jumpsim::rhomboid::RhomboidConfig;
use jumpsim::takeoff::STANDARD_GRAVITY;
use jumpsim::verify::{self, Perturbations};
use jumpsim::TakeoffReport;

mod config;
mod output;

use config::{load_or_default, Method, Model, ModelKind};

#[derive(Parser)]
#[command(name = "jumpsim", version, about = "Take-off dynamics of spring-driven jumpers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one acceleration phase and write its trajectory and report.
    Simulate(SimulateArgs),
    /// Sweep the rhomboid over body mass fraction or force-to-weight ratio.
    Sweep(SweepArgs),
    /// Normalized jump-height bounds for force-to-weight ratios.
    Bounds(BoundsArgs),
    /// Compare published robots with their inertialess predictions.
    Compare(CompareArgs),
    /// Run every cross-model check and report residuals.
    Verify(VerifyArgs),
}

#[derive(Args, Default)]
struct SolverFlags {
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    fixed_step: Option<f64>,
    #[arg(long)]
    contact_stiffness: Option<f64>,
}

impl SolverFlags {
    fn apply(&self, cfg: &mut config::RunConfig) {
        let i = &mut cfg.integrator;
        i.rel_tol = self.rel_tol.or(i.rel_tol);
        i.max_step = self.max_step.or(i.max_step);
        i.fixed_step = self.fixed_step.or(i.fixed_step);
        i.contact_stiffness = self.contact_stiffness.or(i.contact_stiffness);
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model to run; without --config the built-in defaults are used.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Trajectory CSV path.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Baton normalized stiffness, replacing the configured spring.
    #[arg(long)]
    k_norm: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Rhomboid configuration supplying geometry, spring and base masses;
    /// the demonstrator when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "body_mass_fraction")]
    param: String,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value = "experimental_plus_payload")]
    family: String,
    #[arg(long, default_value_t = DEFAULT_PAYLOAD)]
    payload: f64,
    /// Body mass fraction held fixed in a force-to-weight sweep.
    #[arg(long)]
    fraction: Option<f64>,
    /// Knee-mass placement applied to the base layout.
    #[arg(long, default_value = "experimental")]
    variant: String,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct BoundsArgs {
    /// Force-to-weight ratios, `start:stop:count` or a comma-separated list.
    #[arg(long)]
    alpha: String,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    robots: PathBuf,
    #[arg(long, default_value_t = STANDARD_GRAVITY)]
    g: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    solver: SolverFlags,
    /// Relative error injected into the knee spring torque.
    #[arg(long, default_value_t = 0.0, hide = true)]
    perturb_knee_torque: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Bounds(a) => bounds(a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Parses `start:stop:count` (inclusive, evenly spaced) or `a,b,c`.
fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        bail!("grid is empty");
    }
    let num = |s: &str| -> anyhow::Result<f64> {
        s.trim().parse::<f64>().with_context(|| format!("bad grid value `{}`", s.trim()))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts[..] else {
            bail!("grid `{text}` is not start:stop:count");
        };
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.trim().parse().with_context(|| format!("bad grid count `{}`", count.trim()))?;
        return match count {
            0 => bail!("grid count must be at least 1"),
            1 => Ok(vec![start]),
            n => Ok((0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect()),
        };
    }
    text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect()
}

fn simulate(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let (mut cfg, src) = load_or_default(a.config.as_deref(), a.model)?;
    a.solver.apply(&mut cfg);
    if let Some(m) = a.method {
        cfg.integrator.method = Some(m);
    }
    if let Some(k) = a.k_norm {
        if cfg.model.kind != Some(ModelKind::Baton) {
            bail!("--k-norm applies to the baton model only");
        }
        cfg.spring.k_norm = Some(k);
        cfg.spring.stiffness = None;
    }
    if a.trajectory.is_some() {
        cfg.output.trajectory = a.trajectory.clone();
    }
    if a.report.is_some() {
        cfg.output.report = a.report.clone();
    }
    if a.dump_config {
        // resolve first so an invalid configuration is never printed as valid
        cfg.resolve(src.as_deref())?;
        print!("{}", cfg.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    let run = cfg.resolve(src.as_deref())?;
    let kind = cfg.model.kind.expect("resolved configs have a model");

    let (report, trajectory) = output::run_model(&run)?;
    if let Some(path) = &run.trajectory {
        let t = trajectory.with_context(|| {
            format!("no trajectory is recorded by the {:?} method", run.method).to_lowercase()
        })?;
        t.write_csv(sink(Some(path))?)?;
    }
    let doc = output::ReportDoc {
        model: kind.as_str(),
        method: run.method,
        report: &report,
    };
    let mut w = sink(run.report.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(exit_for(&report))
}

fn exit_for(report: &TakeoffReport) -> ExitCode {
    if report.classification.took_off() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let (mut cfg, src) = load_or_default(a.config.as_deref(), Some(ModelKind::Rhomboid))?;
    a.solver.apply(&mut cfg);
    let run = cfg.resolve(src.as_deref())?;
    let Model::Rhomboid(base_cfg) = run.model else {
        unreachable!("load_or_default pins the rhomboid model")
    };
    let family: SweepFamily = a.family.parse()?;
    let param: SweptParam = a.param.parse()?;
    let variant: MassVariant = match a.variant.as_str() {
        "experimental" => MassVariant::Experimental,
        "knees_to_body" => MassVariant::KneesToBody,
        "knees_to_foot" => MassVariant::KneesToFoot,
        other => bail!("unknown variant `{other}` (expected experimental, knees_to_body or knees_to_foot)"),
    };
    let grid = parse_grid(&a.grid)?;
    let spec = SweepSpec {
        family,
        swept_param: param,
        grid,
        base_config: RhomboidConfig {
            masses: variant.apply(&base_cfg.masses),
            ..base_cfg
        },
        payload: a.payload,
        fraction: a.fraction,
    };
    let rows = analysis::sweep(&spec, &run.settings, run.ideal_tolerance, a.jobs)?;
    analysis::write_sweep_csv(sink(a.output.as_deref())?, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn bounds(a: BoundsArgs) -> anyhow::Result<ExitCode> {
    let alphas = parse_grid(&a.alpha)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(io::stdout().lock());
    w.write_record(["alpha", "h_norm_ideal", "h_norm_linear"])?;
    for alpha in alphas {
        let (ideal, linear) = analysis::bounds(alpha);
        w.serialize((alpha, ideal, linear))?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn compare(a: CompareArgs) -> anyhow::Result<ExitCode> {
    let file = File::open(&a.robots).with_context(|| format!("opening {}", a.robots.display()))?;
    let records = read_robots(file)?;
    let rows: Vec<ComparisonRow> = records
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(rec) => compare_record(rec, a.g),
            Err(e) => ComparisonRow {
                name: format!("row {}", i + 1),
                h_norm_measured: None,
                h_norm_inertialess: None,
                alpha: None,
                bound_ideal: None,
                bound_linear: None,
                warning: e.to_string(),
            },
        })
        .collect();
    analysis::write_comparison_csv(sink(a.output.as_deref())?, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = config::RunConfig::default_for(ModelKind::Rhomboid);
    a.solver.apply(&mut cfg);
    let settings = cfg.resolve(None)?.settings;
    let checks = verify::run_all(
        &settings,
        Perturbations {
            knee_torque: a.perturb_knee_torque,
        },
    );
    let mut all = true;
    for c in &checks {
        println!("{c}");
        all &= c.passed;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} checks passed", checks.len());
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[cfg(test)]
mod tests {
    use super::parse_grid;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:9:1").unwrap(), vec![2.0]);
        assert_eq!(parse_grid("0.1, 0.2,0.4").unwrap(), vec![0.1, 0.2, 0.4]);
        assert_eq!(parse_grid("0:1:21").unwrap().len(), 21);
    }

    #[test]
    fn grid_errors() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
