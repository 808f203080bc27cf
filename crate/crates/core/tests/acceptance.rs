//! Acceptance criteria for the demonstrator and the design-space studies.
//! Runs without the libtest harness so every criterion prints exactly one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::process::ExitCode;

use jumpsim::analysis::{
    bounds, fraction_range, force_to_weight_sweep, sweep, MassVariant, SweepFamily, SweepSpec, SweptParam,
    DEFAULT_PAYLOAD,
};
use jumpsim::baton::{simulate_baton, BatonConfig};
use jumpsim::integrator::penalty::penalty_contact_sim;
use jumpsim::integrator::{integrate_adaptive, Event};
use jumpsim::prismatic::PrismaticConfig;
use jumpsim::rhomboid::{simulate_rhomboid, simulate_rhomboid_fixed, MassLayout, RhomboidConfig, RhomboidRun};
use jumpsim::takeoff::DEFAULT_IDEAL_TOLERANCE as TOL;
use jumpsim::verify::LagrangianOracle;
use jumpsim::{IntegratorSettings, TakeoffClass};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRng, TestRunner};

const G: f64 = 9.81;
const JOBS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn settings() -> IntegratorSettings {
    IntegratorSettings::default()
}

fn demonstrator_run() -> RhomboidRun {
    simulate_rhomboid(&RhomboidConfig::demonstrator(), &settings(), TOL).expect("demonstrator run")
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            ..Config::default()
        },
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

/// Draws `n` values from `strategy` with a fixed seed.
fn draw<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut r = runner(n as u32);
    (0..n)
        .map(|_| strategy.new_tree(&mut r).expect("strategy").current())
        .collect()
}

fn stored_energy() -> Outcome {
    let e = RhomboidConfig::demonstrator().epe_initial();
    outcome(within(e, 4.99, 0.0499), format!("EPE_initial = {e:.4} J (target 4.99 J +/- 1%)"))
}

fn takeoff_angle() -> Outcome {
    let q = demonstrator_run().report.state_at_takeoff.q.to_degrees();
    outcome((100.0..=108.0).contains(&q), format!("theta_to = {q:.2} deg (target [100, 108] deg)"))
}

fn takeoff_velocity() -> Outcome {
    let v = demonstrator_run().report.v_cg_to;
    outcome(within(v, 5.0, 0.15), format!("v_cg_to = {v:.4} m/s (target 5.00 +/- 0.15)"))
}

fn energy_breakdown() -> Outcome {
    let r = demonstrator_run().report;
    let f = r.ledger_at_takeoff.fractions_of(r.epe_initial);
    let pct = |x: f64| 100.0 * x;
    let checks = [
        ("gpe", pct(f.gpe), within(pct(f.gpe), 6.0, 1.5)),
        ("ke_y_cg", pct(f.ke_y_cg), within(pct(f.ke_y_cg), 51.0, 2.0)),
        ("epe", pct(f.epe), within(pct(f.epe), 19.0, 2.0)),
        ("ke_x", pct(f.ke_x), within(pct(f.ke_x), 16.0, 2.0)),
        ("ke_y_rel", pct(f.ke_y_rel), within(pct(f.ke_y_rel), 8.0, 1.5)),
        ("ke_rot", pct(f.ke_rot), pct(f.ke_rot) < 1.0),
    ];
    let detail = checks
        .iter()
        .map(|(n, v, ok)| format!("{n} {v:.2}%{}", if *ok { "" } else { " (out of band)" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(checks.iter().all(|c| c.2), detail)
}

fn phase_duration() -> Outcome {
    let t = demonstrator_run().report.state_at_takeoff.t;
    outcome(within(t, 0.05, 0.0075), format!("acceleration phase {t:.4} s (target 0.05 s +/- 15%)"))
}

fn peak_acceleration() -> Outcome {
    let a = demonstrator_run().peak_cg_acceleration() / G;
    outcome(a > 10.0, format!("peak CG acceleration {a:.2} g (target > 10 g)"))
}

fn baton(k_norm: f64) -> jumpsim::TakeoffReport {
    let cfg = BatonConfig::from_normalized_stiffness(1.0, 1.0, k_norm, 30f64.to_radians(), G).expect("baton config");
    simulate_baton(&cfg, &settings(), TOL).expect("baton run").report
}

fn baton_triple() -> Outcome {
    let ini = 30f64.to_radians();
    let (a, b, c) = (baton(4.5), baton(5.5), baton(10.0));
    let dev = (b.state_at_takeoff.q - ini).abs() / ini;
    let pass = a.classification == TakeoffClass::Delayed && dev <= 0.02 && c.classification == TakeoffClass::Premature;
    outcome(
        pass,
        format!(
            "k_norm 4.5 -> {}, 5.5 -> |dtheta|/theta_ini = {:.4}, 10 -> {}",
            a.classification, dev, c.classification
        ),
    )
}

fn payload_landmark() -> Outcome {
    let base = RhomboidConfig::demonstrator();
    let (lo, hi) = fraction_range(SweepFamily::ExperimentalPlusPayload, &base.masses, DEFAULT_PAYLOAD);
    let n = 41;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let spec = SweepSpec {
        family: SweepFamily::ExperimentalPlusPayload,
        swept_param: SweptParam::BodyMassFraction,
        grid,
        base_config: base,
        payload: DEFAULT_PAYLOAD,
        fraction: None,
    };
    let rows = sweep(&spec, &settings(), TOL, JOBS).expect("payload sweep");
    let r = rows
        .iter()
        .min_by(|a, b| (a.param - 0.78).abs().total_cmp(&(b.param - 0.78).abs()))
        .expect("rows");
    let pass = within(r.param, 0.78, 0.03) && within(r.efficiency, 0.60, 0.05) && within(r.h_norm, 2.4, 0.15);
    outcome(
        pass,
        format!(
            "fraction {:.4}: efficiency {:.4}, h_norm {:.4} (target 0.78 +/- 0.03 / 0.60 +/- 0.05 / 2.4 +/- 0.15)",
            r.param, r.efficiency, r.h_norm
        ),
    )
}

fn all_mass_at_body() -> Outcome {
    let base = RhomboidConfig::demonstrator();
    let total = base.masses.total() + DEFAULT_PAYLOAD;
    let masses = MassLayout::new([total, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).expect("layout");
    let cfg = RhomboidConfig { masses, ..base };
    let r = simulate_rhomboid(&cfg, &settings(), TOL).expect("run").report;
    outcome(
        within(r.efficiency, 0.80, 0.03),
        format!("efficiency {:.4} ({}) (target 0.80 +/- 0.03)", r.efficiency, r.classification),
    )
}

fn force_to_weight() -> Outcome {
    let base = RhomboidConfig::demonstrator();
    let alpha_exp = base.force_to_weight();
    let large = [300.0, 1000.0, 3000.0];
    let plateau = force_to_weight_sweep(&base, MassVariant::Experimental, &large, &settings(), TOL, JOBS).expect("sweep");
    let p = plateau.last().expect("rows").efficiency;
    let settled = (plateau[2].efficiency - plateau[1].efficiency).abs() < 1e-3;
    let knees = force_to_weight_sweep(&base, MassVariant::KneesToBody, &[alpha_exp], &settings(), TOL, 1).expect("sweep")[0]
        .efficiency;
    let ok_plateau = settled && within(p, 0.58, 0.03);
    let ok_knees = within(knees, 0.75, 0.04);
    outcome(
        ok_plateau && ok_knees,
        format!(
            "plateau {:.4} at alpha {}{} (target 0.58 +/- 0.03); knees to body at alpha {:.2}: {:.4}{} (target 0.75 +/- 0.04)",
            p,
            large[2],
            if ok_plateau { "" } else { " (out of band)" },
            alpha_exp,
            knees,
            if ok_knees { "" } else { " (out of band)" },
        ),
    )
}

/// Relative deviation of the adaptive prismatic trajectory from the closed
/// form over randomized configurations.
fn prismatic_oracle() -> f64 {
    let cases = draw((2.0f64..30.0, 0.2f64..1.0, 0.05f64..0.5), 24);
    let mut worst: f64 = 0.0;
    for (alpha, frac, d) in cases {
        let c = PrismaticConfig::from_force_to_weight(frac, 1.0 - frac, alpha, d, G).expect("config");
        let Some(t_to) = c.takeoff_time() else { continue };
        let ev = Event::new("t_to", 1e-15, move |t, _| t_to - t);
        let sol = integrate_adaptive(|t, s| c.deriv(t, s), 0.0, [0.0, 0.0], &[ev], |_| true, &settings()).expect("ode");
        let scale_y = c.takeoff_displacement();
        let scale_v = (c.k * c.d - c.m_body * G) / (c.k * c.m_body).sqrt();
        for s in &sol.samples[1..] {
            let (y, v, _) = c.trajectory(s.t.min(t_to)).expect("closed form");
            worst = worst.max((s.y[0] - y).abs() / scale_y).max((s.y[1] - v).abs() / scale_v);
        }
    }
    worst
}

/// Relative deviation of the knee dynamics from the Lagrangian assembly at
/// 100 random states.
fn lagrangian_oracle() -> f64 {
    let cfg = RhomboidConfig::demonstrator();
    let oracle = LagrangianOracle::new(&cfg);
    draw((0.05f64..3.1, -100.0f64..100.0), 100)
        .into_iter()
        .map(|(th, w)| {
            let (expect, scale) = oracle.acceleration(th, w);
            let got = cfg.knee_angular_acceleration(th, w).expect("acceleration");
            (got - expect).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn oracles() -> Outcome {
    let cfg = RhomboidConfig::demonstrator();
    let s = settings();
    let a = prismatic_oracle();
    let b = lagrangian_oracle();
    let ev = simulate_rhomboid(&cfg, &s, TOL).expect("event run").report;
    let pen = penalty_contact_sim(&cfg, &s, TOL).expect("penalty run").report;
    let c = (pen.v_cg_to - ev.v_cg_to).abs() / ev.v_cg_to;
    let fixed = simulate_rhomboid_fixed(&cfg, &s, TOL).expect("fixed run").report;
    let d = (fixed.v_cg_to - ev.v_cg_to).abs() / ev.v_cg_to;

    // energy drift over randomized rhomboid layouts and the baton cases
    let mut e = simulate_rhomboid(&cfg, &s, TOL).expect("run").energy_drift();
    for m in draw(proptest::array::uniform8(0.001f64..0.2), 16) {
        let masses = MassLayout::new(m).expect("layout");
        let c = RhomboidConfig { masses, ..cfg };
        if let Ok(run) = simulate_rhomboid(&c, &s, TOL) {
            e = e.max(run.energy_drift());
        }
    }
    for k in [4.5, 5.5, 7.0, 10.0] {
        let b = BatonConfig::from_normalized_stiffness(1.0, 1.0, k, 30f64.to_radians(), G).expect("baton");
        let run = simulate_baton(&b, &s, TOL).expect("baton run");
        let e0 = b.epe_initial();
        for smp in &run.samples {
            e = e.max((smp.kinetic + smp.epe + smp.gpe - e0).abs() / e0);
        }
    }
    let parts = [
        ("a", a, 1e-8),
        ("b", b, 1e-6),
        ("c", c, 1e-2),
        ("d", d, 1e-3),
        ("e", e, 1e-6),
    ];
    let detail = parts
        .iter()
        .map(|(n, v, t)| format!("({n}) {v:.2e} < {t:.0e}{}", if v < t { "" } else { " FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(parts.iter().all(|(_, v, t)| v < t), detail)
}

fn bound_identities() -> Outcome {
    let alphas: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
    let exact = alphas.iter().all(|&a| bounds(a) == (a, (a - 1.0) / 2.0));
    let base = RhomboidConfig::demonstrator();
    let mut worst = f64::NEG_INFINITY;
    for fam in [SweepFamily::BodyFoot, SweepFamily::BodyKnees, SweepFamily::ExperimentalPlusPayload] {
        let (lo, hi) = fraction_range(fam, &base.masses, DEFAULT_PAYLOAD);
        let grid: Vec<f64> = (0..=10).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect();
        let spec = SweepSpec {
            family: fam,
            swept_param: SweptParam::BodyMassFraction,
            grid: grid.clone(),
            base_config: base,
            payload: DEFAULT_PAYLOAD,
            fraction: None,
        };
        let rows = sweep(&spec, &settings(), TOL, JOBS).expect("sweep");
        for r in rows {
            let alpha = spec.config_at(r.param).expect("config").force_to_weight();
            worst = worst.max(r.h_norm - alpha);
        }
    }
    let alphas_ftw = [2.0, 5.0, 12.66, 50.0];
    for v in [MassVariant::Experimental, MassVariant::KneesToBody, MassVariant::KneesToFoot] {
        for r in force_to_weight_sweep(&base, v, &alphas_ftw, &settings(), TOL, JOBS).expect("sweep") {
            worst = worst.max(r.h_norm - r.param);
        }
    }
    outcome(
        exact && worst <= 0.0,
        format!("bounds exact on 41 alphas: {exact}; max(h_norm - alpha) over simulated configs {worst:.4}"),
    )
}

fn monotonicity() -> Outcome {
    let base = RhomboidConfig::demonstrator();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut notes = Vec::new();
    let mut pass = true;
    for fam in [SweepFamily::BodyFoot, SweepFamily::BodyKnees] {
        let spec = SweepSpec {
            family: fam,
            swept_param: SweptParam::BodyMassFraction,
            grid: grid.clone(),
            base_config: base,
            payload: DEFAULT_PAYLOAD,
            fraction: None,
        };
        let rows = sweep(&spec, &settings(), TOL, JOBS).expect("sweep");
        let ok = rows.windows(2).all(|w| w[1].efficiency >= w[0].efficiency);
        pass &= ok;
        notes.push(format!("{fam:?} non-decreasing: {ok}"));
    }
    let ks = [4.5, 5.5, 7.0, 10.0];
    let reports: Vec<_> = ks.iter().map(|&k| baton(k)).collect();
    let ok_q = reports.windows(2).all(|w| w[1].state_at_takeoff.q <= w[0].state_at_takeoff.q);
    let ok_w = reports.windows(2).all(|w| w[1].state_at_takeoff.qdot > w[0].state_at_takeoff.qdot);
    pass &= ok_q && ok_w;
    notes.push(format!("baton theta_to non-increasing: {ok_q}, thetadot_to increasing: {ok_w}"));
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("stored energy", stored_energy),
        ("take-off angle", takeoff_angle),
        ("take-off CG velocity", takeoff_velocity),
        ("energy breakdown at take-off", energy_breakdown),
        ("acceleration-phase duration", phase_duration),
        ("peak CG acceleration", peak_acceleration),
        ("baton classification triple", baton_triple),
        ("payload sweep landmark", payload_landmark),
        ("all mass at body", all_mass_at_body),
        ("force-to-weight plateau and knee repositioning", force_to_weight),
        ("oracle equivalences", oracles),
        ("bound identities", bound_identities),
        ("monotonicity", monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} | {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
