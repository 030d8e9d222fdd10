//! Cross-module behaviour: model building, strategies, replay and the
//! command layer working on real instances.

mod common;

use std::path::Path;

use common::tiny_instance;
use dcflex_core::harness::commands::{self, held_out};
use dcflex_core::harness::{generate_instance, ExperimentConfig, GenParams, Matrix};
use dcflex_core::instance::{Instance, BUNDLE_FILES, SIGNAL_FILE};
use dcflex_core::optimizer::config::DcQueue;
use dcflex_core::optimizer::strategy::solve_built;
use dcflex_core::optimizer::*;
use dcflex_core::signal::RegulationTrace;
use dcflex_core::simulator::{monte_carlo, Replayer, SimSettings};
use dcflex_core::workload::{FlexClass, JobCluster, ScheduleMatrix};
use dcflex_core::Error;

fn demo() -> Instance {
    Instance::read_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")).unwrap()
}

fn solve(inst: &Instance, cfg: &ModelConfig) -> commands::Solved {
    let x_base = inst.baseline().unwrap();
    commands::solve_config(inst, &x_base, &ExperimentConfig::default(), cfg).unwrap()
}

#[test]
fn tiny_model_variable_count() {
    let inst = tiny_instance();
    let cfg = ModelConfig::default();
    let sig = commands::fit_models(&inst, &cfg, 0.7).unwrap();
    let built = build_model(&inst, &inst.baseline().unwrap(), &cfg, &sig, &BuildOptions::default()).unwrap();
    // x: 3 clusters × 3 slots × 2 DCs; R: 2·3; p, u: 1·3 each; θ, q: 2·3 each
    let tally = 3 * 3 * 2 + 2 * 3 + 2 * (1 * 3) + 2 * (2 * 3);
    assert_eq!(tally, 42);
    assert_eq!(built.layout.variable_count(), tally);
    assert_eq!(built.model.vars.len(), tally);
    assert_eq!(built.model.vars.iter().filter(|v| v.integer).count(), 3, "only the commitment binaries");
}

#[test]
fn no_shifting_keeps_the_baseline_and_its_dispatch_cost() {
    let inst = demo();
    let x_base = inst.baseline().unwrap();
    let none = solve(&inst, &ModelConfig { shifting_mode: ShiftingMode::None, ..ModelConfig::default() });
    assert_eq!(none.solution.x, x_base);

    // Reference path: the joint model with the schedule pinned from outside.
    let cfg = ModelConfig::default();
    let sig = commands::fit_models(&inst, &cfg, 0.7).unwrap();
    let opts = BuildOptions { fix_x: Some(x_base.clone()), ..BuildOptions::default() };
    let built = build_model(&inst, &x_base, &cfg, &sig, &opts).unwrap();
    let ctx = SolveContext { inst: &inst, x_base: &x_base, signals: &sig, backend: &Backend::Bundled };
    let pinned = solve_built(&built, &ctx, &cfg).unwrap();
    let (a, b) = (none.solution.objective_total, pinned.objective_total);
    assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
}

#[test]
fn median_risk_level_uses_the_mean_as_coefficient() {
    let inst = demo();
    let cfg = ModelConfig { eps_p: 0.5, signal_model: SignalModel::DirectGaussian, ..ModelConfig::default() };
    let sig = commands::fit_models(&inst, &cfg, 0.7).unwrap();
    let built = build_model(&inst, &inst.baseline().unwrap(), &cfg, &sig, &BuildOptions::default()).unwrap();
    assert!((built.chance_coefficient - sig.gaussian.mu.max(0.0)).abs() < 1e-12);
}

fn cluster(id: u32, slot: usize, energy_mwh: f64) -> JobCluster {
    JobCluster {
        id,
        user_region: 1,
        arrival_slot: slot,
        class: FlexClass::Fixed,
        weight: energy_mwh * 1000.0,
        r_cpu: 1.0,
        r_mem: 1.0,
        r_io: 1.0,
        d_kwh_per_task: 1.0,
    }
}

#[test]
fn queue_expression_examples() {
    let jobs = vec![cluster(1, 1, 2.0), cluster(2, 2, 4.0)];
    let mut x = ScheduleMatrix::zeros(2, 2, 1);
    x.set(0, 0, 0, 1.0);
    x.set(1, 1, 0, 1.0);
    let q = DcQueue { q0: 0.0, arrivals: vec![5.0, 3.0], q_min: -10.0, q_max: 10.0 };
    assert!((queue_baseline_expr(&jobs, &q, 0, 2.0).unwrap().eval(&x) - 2.0).abs() < 1e-12);
    // halfway through slot 2: 5 − 2 + (3 − 4)/2
    assert!((queue_baseline_expr(&jobs, &q, 0, 1.5).unwrap().eval(&x) - 2.5).abs() < 1e-12);

    let idle = DcQueue { q0: 1.25, arrivals: vec![0.0, 0.0], q_min: -10.0, q_max: 10.0 };
    let none = ScheduleMatrix::zeros(2, 2, 1);
    for tau in [0.0, 0.5, 1.0, 2.0] {
        assert_eq!(queue_baseline_expr(&jobs, &idle, 0, tau).unwrap().eval(&none), 1.25);
    }
    assert!(queue_baseline_expr(&jobs, &q, 0, 2.5).is_err());
}

#[test]
fn zero_signal_replay_follows_the_queue_expression() {
    let inst = demo();
    let cfg = ModelConfig::default();
    let sol = solve(&inst, &cfg).solution;
    let n = 3600 / 2 * inst.n_slots();
    let quiet = RegulationTrace::new(vec![0.0; n], 2.0).unwrap();
    let rp = Replayer::new(&inst, &sol, &cfg, &SimSettings::default()).unwrap();
    let per_slot = 1800;
    for l in 0..inst.n_dc() {
        let tr = rp.trajectory(&quiet, 0, l).unwrap();
        for t in 1..=inst.n_slots() {
            let want = queue_baseline_expr(&inst.jobs, &inst.queues.dcs[l], l, t as f64).unwrap().eval(&sol.x);
            let got = tr.queue[t * per_slot - 1];
            assert!((got - want).abs() < 1e-9, "dc {l} slot {t}: {got} vs {want}");
        }
    }
    // and nothing violates: the plan itself sits inside every band
    assert_eq!(rp.replay(&quiet, 0, 0).unwrap().dcs.iter().map(|d| d.violations).sum::<usize>(), 0);
}

/// With nothing paid for regulation both strategies solve the same
/// scheduling problem. The schedules themselves may be different optimal
/// vertices, so each is checked against the other's cost.
#[test]
fn zero_prices_make_decoupled_and_cooperative_agree() {
    let inst = demo();
    let free = ModelConfig { reg_prices: vec![RegPrice { c_rc: 0.0, c_rp: 0.0, m_bar: None }], ..ModelConfig::default() };
    let coop = solve(&inst, &free).solution;
    let dec = solve(&inst, &ModelConfig { strategy: Strategy::Decoupled, ..free.clone() }).solution;
    let (a, b) = (coop.objective_total, dec.objective_total);
    assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
    assert_eq!(coop.breakdown.regulation_revenue, 0.0);
    // pinning the cooperative model to the decoupled schedule costs nothing extra
    let x_base = inst.baseline().unwrap();
    let sig = commands::fit_models(&inst, &free, 0.7).unwrap();
    let opts = BuildOptions { fix_x: Some(dec.x.clone()), ..BuildOptions::default() };
    let built = build_model(&inst, &x_base, &free, &sig, &opts).unwrap();
    let ctx = SolveContext { inst: &inst, x_base: &x_base, signals: &sig, backend: &Backend::Bundled };
    let pinned = solve_built(&built, &ctx, &free).unwrap().objective_total;
    assert!((pinned - a).abs() <= 1e-6 * a.abs(), "{pinned} vs {a}");
}

#[test]
fn idle_regulation_is_always_compliant() {
    let inst = demo();
    let cfg = ModelConfig::default();
    let mut sol = solve(&inst, &cfg).solution;
    for row in &mut sol.r {
        row.fill(0.0);
    }
    let held = held_out(&inst, &ExperimentConfig::default()).unwrap();
    let settings = SimSettings { scenarios: 20, ..SimSettings::default() };
    let (sum, replays) = monte_carlo(&inst, &sol, &cfg, &settings, &held, 1).unwrap();
    assert_eq!(sum.violation_rate, 0.0);
    assert_eq!(sum.active_samples, 0);
    assert!(sum.per_dc.iter().all(|d| d.compliance_rate == 1.0));
    assert_eq!(sum.revenue_mean, 0.0);
    assert!(replays.iter().all(|r| r.dcs.iter().all(|d| d.slots_passed == inst.n_slots())));
}

#[test]
fn saturated_signal_over_the_floor_violates_every_sample() {
    let inst = demo();
    let cfg = ModelConfig::default();
    let mut sol = solve(&inst, &cfg).solution;
    let idx = inst.index().unwrap();
    let load = dcflex_core::workload::aggregate_load(&sol.x, &inst.jobs, &idx, 1.0).unwrap();
    let t_n = inst.n_slots();
    for t in 0..t_n {
        sol.r[0][t] = load[t] - inst.dcs[0].p_min[t] + 1.0;
    }
    let up = RegulationTrace::new(vec![1.0; 1800 * t_n], 2.0).unwrap();
    let d0 = &Replayer::new(&inst, &sol, &cfg, &SimSettings::default()).unwrap().replay(&up, 0, 0).unwrap().dcs[0];
    assert_eq!(d0.violations, d0.samples);
    assert_eq!((d0.slots_passed, d0.revenue), (0, 0.0));
}

#[test]
fn identical_scenarios_have_no_spread() {
    let inst = demo();
    let cfg = ModelConfig::default();
    let sol = solve(&inst, &cfg).solution;
    let flat = RegulationTrace::new(vec![0.3; 1800 * 20], 2.0).unwrap();
    let settings = SimSettings { scenarios: 30, ..SimSettings::default() };
    let (sum, _) = monte_carlo(&inst, &sol, &cfg, &settings, &flat, 9).unwrap();
    assert_eq!(sum.revenue_p5, sum.revenue_p95);
    assert!((sum.revenue_p5 - sum.revenue_mean).abs() <= 1e-12 * sum.revenue_mean);
}

#[test]
fn generated_bundles_validate_and_round_trip() {
    let p = GenParams { n_dc: 8, n_slots: 6, n_clusters: 60, n_buses: 10, n_generators: 3, ..GenParams::default() };
    let inst = generate_instance(&p, 5).unwrap();
    assert_eq!(inst.n_dc(), 8);
    let buses: Vec<usize> = inst.grid.buses.iter().map(|b| b.bus_id).collect();
    assert!(inst.dcs.iter().all(|d| buses.contains(&d.bus)));
    assert!(dcflex_core::grid::validate_case(&inst.grid).is_empty());

    let dir = tempfile::tempdir().unwrap();
    inst.write_dir(dir.path(), false).unwrap();
    let back = Instance::read_dir(dir.path()).unwrap();
    back.validate().unwrap();
    assert_eq!(back.jobs, inst.jobs);
    assert_eq!(back.dcs, inst.dcs);
    assert_eq!(back.grid, inst.grid);
    assert_eq!(back.queues, inst.queues);
    assert_eq!(back.signal.samples.len(), inst.signal.samples.len());
}

#[test]
fn broken_bundles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    demo().write_dir(dir.path(), false).unwrap();
    std::fs::remove_file(dir.path().join(SIGNAL_FILE)).unwrap();
    assert!(matches!(Instance::read_dir(dir.path()), Err(Error::Io { .. })));
    for f in BUNDLE_FILES {
        assert!(f == SIGNAL_FILE || dir.path().join(f).is_file());
    }
}

#[test]
fn fit_reports_flag_what_they_see() {
    use dcflex_core::signal::synth::{generate, SignalKind};
    let cfg = ExperimentConfig::default();
    let gaussian = commands::fit_report(&generate(SignalKind::Gaussian, 100_000, 2.0, 4), &cfg).unwrap();
    assert!((gaussian.envelope.sigma / gaussian.direct.sigma - 1.0).abs() < 0.05, "{}", gaussian.sigma_ratio);
    assert!(gaussian.warnings.is_empty());

    let heavy = commands::fit_report(&generate(SignalKind::HeavyTailed, 100_000, 2.0, 4), &cfg).unwrap();
    assert!(heavy.envelope.sigma > heavy.direct.sigma);
    assert!(heavy.warnings.iter().any(|w| w.contains("heavy upper tail")));

    let flat = RegulationTrace::new(vec![0.4; 100_000], 2.0).unwrap();
    let r = commands::fit_report(&flat, &cfg).unwrap();
    assert_eq!(r.direct.sigma, 0.0);
    assert!(r.warnings.iter().any(|w| w.contains("sigma = 0")));
}

#[test]
fn commands_write_their_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig { generator: GenParams::demo(), ..ExperimentConfig::default() };
    cfg.simulation.scenarios = 30;
    let bundle = out.path().join("bundle");
    commands::gen_instance(&cfg, &bundle).unwrap();
    cfg.instance = Some(bundle);

    let (m, _) = commands::compare(&cfg, &Matrix::Strategies.cells(), &out.path().join("strategies")).unwrap();
    assert!(m.artifacts.iter().any(|a| a.path == "compare.csv"));
    let (_, rows) = commands::compare(&cfg, &Matrix::Modes.cells(), &out.path().join("modes")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.system_load_curve.len() == 8 && r.dc_load_curve.len() == 8));
    let single = vec![Matrix::Strategies.cells().remove(2)];
    let (_, rows) = commands::compare(&cfg, &single, &out.path().join("one")).unwrap();
    assert_eq!(rows.len(), 1);
    let curves = std::fs::read_to_string(out.path().join("modes/load_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 8 * 4, "header plus one row per mode and slot");

    let sim = out.path().join("sim");
    let (m, summary) = commands::simulate(&cfg, None, &sim).unwrap();
    assert_eq!(summary.scenarios, 30);
    for name in ["simulation_summary.json", "scenarios.csv", "frontier.csv", "trajectory_dc1.csv"] {
        assert!(m.artifacts.iter().any(|a| a.path == name), "{name} missing");
    }
    let frontier = std::fs::read_to_string(sim.join("frontier.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(frontier.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "total_regulation_mw").unwrap();
    let totals: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(totals.len(), 3);
    assert!(totals.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{totals:?}");

    let m = commands::report(&cfg, &sim, &sim).unwrap();
    let text = std::fs::read_to_string(sim.join("report.md")).unwrap();
    assert!(text.contains("Delivery simulation"));
    // every artifact listed in the manifest matches its bytes on disk
    for a in &m.artifacts {
        let bytes = std::fs::read(sim.join(&a.path)).unwrap();
        assert_eq!(commands::sha256_hex(&bytes), a.sha256, "{}", a.path);
    }
}

#[test]
fn infeasible_plans_surface_as_infeasible() {
    let mut inst = demo();
    // a power floor above the ceiling cannot be met by any schedule
    for dc in &mut inst.dcs {
        dc.p_min.iter_mut().for_each(|p| *p = 1e4);
    }
    let x_base = inst.baseline().unwrap();
    let err = commands::solve_config(&inst, &x_base, &ExperimentConfig::default(), &ModelConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_) | Error::Validation(_)), "{err}");
}
