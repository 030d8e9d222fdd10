//! The six pipeline commands. Each writes its artifacts under an output
//! directory and records their hashes in `manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{Instance, CONFIG_FILE, SIGNAL_FILE};
use crate::optimizer::config::SignalModels;
use crate::optimizer::mps::write_mps;
use crate::optimizer::{
    build_model, run_strategy, validate_solution, BuildOptions, ModelConfig, SolveContext, Solution,
    ValidationReport, FEASIBILITY_TOL,
};
use crate::signal::{build_var_table, fit_direct_gaussian, GaussianEnvelope, RegulationTrace, VaRTable};
use crate::simulator::{monte_carlo, replays_csv, Replayer, SimulationSummary};
use crate::workload::{aggregate_load, ScheduleMatrix};

use super::experiment::{CompareCell, ExperimentConfig};
use super::generate::{generate_instance, SEED_SIMULATION};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Hashes of everything written to an output directory, merged across
/// commands so a directory shared by several steps keeps one manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub commands: Vec<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects artifacts for one command run.
pub struct OutDir {
    root: PathBuf,
    written: Vec<ArtifactEntry>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.record(name, bytes);
        Ok(())
    }

    /// Records a file some other writer already put in place.
    pub fn adopt(&mut self, name: &str) -> Result<()> {
        let path = self.root.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.written.retain(|a| a.path != name);
        self.written.push(ArtifactEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
    }

    /// Merges this run into `manifest.json` and returns the result.
    pub fn finish(self, command: &str, seed: u64) -> Result<Manifest> {
        let path = self.root.join(MANIFEST_FILE);
        let mut manifest = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => Manifest {
                tool: "dcflex".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                commands: Vec::new(),
                artifacts: Vec::new(),
            },
        };
        manifest.seed = seed;
        if !manifest.commands.iter().any(|c| c == command) {
            manifest.commands.push(command.to_string());
        }
        for a in self.written {
            manifest.artifacts.retain(|b| b.path != a.path);
            manifest.artifacts.push(a);
        }
        manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

fn instance_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.instance
        .as_deref()
        .ok_or_else(|| Error::Invalid("no instance bundle given (set \"instance\" in the config or pass one)".into()))
}

/// Loads and validates the bundle named in the config.
pub fn load_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let inst = Instance::read_dir(instance_dir(cfg)?)?;
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------- gen-instance

pub fn gen_instance(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let inst = generate_instance(&cfg.generator, cfg.seed)?;
    let mut dir = OutDir::create(out)?;
    inst.write_dir(out, false)?;
    for name in crate::instance::BUNDLE_FILES {
        dir.adopt(name)?;
    }
    let bundle_cfg = ExperimentConfig { instance: None, ..cfg.clone() };
    dir.write(CONFIG_FILE, bundle_cfg.to_json()?.as_bytes())?;
    dir.finish("gen-instance", cfg.seed)
}

// ------------------------------------------------------------------ fit-signal

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit_samples: usize,
    pub held_out_samples: usize,
    pub dt_seconds: f64,
    pub mean_abs: f64,
    pub direct: GaussianEnvelope,
    pub envelope: GaussianEnvelope,
    /// `(level, envelope quantile − empirical quantile)`; all ≥ 0.
    pub dominance_margins: Vec<(f64, f64)>,
    pub sigma_ratio: f64,
    pub var_table: VaRTable,
    pub warnings: Vec<String>,
}

pub fn fit_report(trace: &RegulationTrace, cfg: &ExperimentConfig) -> Result<FitReport> {
    let (fit, held) = trace.split(cfg.simulation.fit_fraction)?;
    let direct = fit_direct_gaussian(&fit)?;
    let env_cfg = ModelConfig { signal_model: crate::optimizer::SignalModel::Envelope, ..cfg.model.clone() };
    let envelope = SignalModels::fit(&fit, &env_cfg)?.gaussian;
    let var_table = build_var_table(&fit, &cfg.model.effective_var_horizons(), cfg.model.eps_e, cfg.model.var_stride_hours)?;
    let mut warnings = Vec::new();
    if direct.degenerate || envelope.degenerate {
        warnings.push("signal is constant: sigma = 0, chance rows reduce to the mean".into());
    }
    if envelope.sigma > direct.sigma * 1.05 {
        warnings.push(format!(
            "heavy upper tail: envelope sigma {:.4} exceeds direct sigma {:.4}",
            envelope.sigma, direct.sigma
        ));
    }
    Ok(FitReport {
        fit_samples: fit.len(),
        held_out_samples: held.len(),
        dt_seconds: trace.dt,
        mean_abs: fit.mean_abs(),
        sigma_ratio: if direct.sigma > 0.0 { envelope.sigma / direct.sigma } else { 1.0 },
        dominance_margins: envelope.margins.clone(),
        direct,
        envelope,
        var_table,
        warnings,
    })
}

/// Fits both signal models. `trace_path` overrides the bundle's signal.
pub fn fit_signal(cfg: &ExperimentConfig, trace_path: Option<&Path>, out: &Path) -> Result<(Manifest, FitReport)> {
    let path = match trace_path {
        Some(p) => p.to_path_buf(),
        None => instance_dir(cfg)?.join(SIGNAL_FILE),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let trace = RegulationTrace::read_csv(text.as_bytes())?;
    let report = fit_report(&trace, cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let mut dir = OutDir::create(out)?;
    dir.write_json("direct.json", &report.direct)?;
    dir.write_json("envelope.json", &report.envelope)?;
    dir.write_json("var_table.json", &report.var_table)?;
    dir.write_json("fit_report.json", &report)?;
    Ok((dir.finish("fit-signal", cfg.seed)?, report))
}

// ----------------------------------------------------------------------- solve

/// A solved configuration together with what was needed to produce it.
#[derive(Debug)]
pub struct Solved {
    pub cfg: ModelConfig,
    pub signals: SignalModels,
    pub solution: Solution,
    pub validation: ValidationReport,
}

pub fn fit_models(inst: &Instance, cfg: &ModelConfig, fit_fraction: f64) -> Result<SignalModels> {
    let (fit, _) = inst.signal.split(fit_fraction)?;
    SignalModels::fit(&fit, cfg)
}

pub fn solve_config(inst: &Instance, x_base: &ScheduleMatrix, exp: &ExperimentConfig, cfg: &ModelConfig) -> Result<Solved> {
    cfg.validate(inst.n_slots(), inst.max_generator_cost())?;
    let backend = exp.backend()?;
    let signals = fit_models(inst, cfg, exp.simulation.fit_fraction)?;
    let ctx = SolveContext { inst, x_base, signals: &signals, backend: &backend };
    let solution = run_strategy(&ctx, cfg)?;
    let validation = validate_solution(inst, x_base, cfg, &signals, &solution, FEASIBILITY_TOL)?;
    Ok(Solved { cfg: cfg.clone(), signals, solution, validation })
}

fn validation_error(report: &ValidationReport) -> Error {
    let failing: Vec<String> = report
        .failing()
        .iter()
        .map(|c| format!("{} ({} violations, max {:.3e})", c.family, c.violations, c.max_violation))
        .collect();
    Error::Validation(format!("solution violates: {}", failing.join(", ")))
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<(Manifest, Solved)> {
    cfg.validate()?;
    let inst = load_instance(cfg)?;
    let x_base = inst.baseline()?;
    let solved = solve_config(&inst, &x_base, cfg, &cfg.model)?;
    let mut dir = OutDir::create(out)?;
    dir.write("solution.json", (solved.solution.to_json()? + "\n").as_bytes())?;
    dir.write_json("validation.json", &solved.validation)?;
    dir.write_json("signal_models.json", &solved.signals)?;
    if cfg.export_mps {
        let built = build_model(&inst, &x_base, &cfg.model, &solved.signals, &BuildOptions::default())?;
        dir.write("model.mps", write_mps(&built.model).as_bytes())?;
    }
    let manifest = dir.finish("solve", cfg.seed)?;
    if !solved.validation.is_ok() {
        return Err(validation_error(&solved.validation));
    }
    Ok((manifest, solved))
}

// -------------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub eps_p: f64,
    pub chance_coefficient: f64,
    pub total_regulation_mw: f64,
    pub nominal_revenue: f64,
    pub revenue_mean: f64,
    pub active_violation_rate: f64,
    pub net_cost: f64,
}

fn frontier_csv(points: &[FrontierPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn held_out(inst: &Instance, exp: &ExperimentConfig) -> Result<RegulationTrace> {
    Ok(inst.signal.split(exp.simulation.fit_fraction)?.1)
}

/// Replays `solution` (or solves first when none is given) and sweeps ε_p.
pub fn simulate(cfg: &ExperimentConfig, solution: Option<&Path>, out: &Path) -> Result<(Manifest, SimulationSummary)> {
    cfg.validate()?;
    let inst = load_instance(cfg)?;
    let x_base = inst.baseline()?;
    let held = held_out(&inst, cfg)?;
    let sol = match solution {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Solution::from_json(&text)?
        }
        None => solve_config(&inst, &x_base, cfg, &cfg.model)?.solution,
    };
    if sol.x.dims() != x_base.dims() {
        return Err(Error::Validation("solution shape does not match the instance".into()));
    }
    let sim_seed = cfg.seed.wrapping_add(SEED_SIMULATION);
    let (summary, replays) = monte_carlo(&inst, &sol, &cfg.model, &cfg.simulation, &held, sim_seed)?;
    let mut dir = OutDir::create(out)?;
    dir.write_json("simulation_summary.json", &summary)?;
    dir.write("scenarios.csv", replays_csv(&replays)?.as_bytes())?;
    let rp = Replayer::new(&inst, &sol, &cfg.model, &cfg.simulation)?;
    for (l, spec) in inst.dcs.iter().enumerate() {
        let tr = rp.trajectory(&held, replays[0].offset, l)?;
        dir.write(&format!("trajectory_dc{}.csv", spec.id), tr.to_csv()?.as_bytes())?;
    }

    let mut points = Vec::new();
    for &eps in &cfg.eps_sweep {
        let mcfg = ModelConfig { eps_p: eps, ..cfg.model.clone() };
        let solved = solve_config(&inst, &x_base, cfg, &mcfg)?;
        let (s, _) = monte_carlo(&inst, &solved.solution, &mcfg, &cfg.simulation, &held, sim_seed)?;
        points.push(FrontierPoint {
            eps_p: eps,
            chance_coefficient: solved.solution.meta.chance_coefficient,
            total_regulation_mw: solved.solution.total_regulation(),
            nominal_revenue: s.nominal_revenue,
            revenue_mean: s.revenue_mean,
            active_violation_rate: s.active_violation_rate,
            net_cost: solved.solution.breakdown.net(),
        });
    }
    if !points.is_empty() {
        dir.write("frontier.csv", frontier_csv(&points)?.as_bytes())?;
    }
    Ok((dir.finish("simulate", cfg.seed)?, summary))
}

// --------------------------------------------------------------------- compare

/// One comparison row; costs in $, loads in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub strategy: String,
    pub shifting_mode: String,
    pub signal_model: String,
    pub avg_load_mw: f64,
    pub total_cost: f64,
    pub avg_regulation_mw: f64,
    pub regulation_profit: f64,
    pub net_cost: f64,
    pub peak_system_load_mw: f64,
    /// Per-slot total DC load, MW.
    pub dc_load_curve: Vec<f64>,
    /// Per-slot system load (base + DC), MW.
    pub system_load_curve: Vec<f64>,
    pub error: Option<String>,
}

/// Aggregates used by comparison tables.
pub fn compare_row(inst: &Instance, label: String, cfg: &ModelConfig, sol: &Solution) -> Result<CompareRow> {
    let idx = inst.index()?;
    let load = aggregate_load(&sol.x, &inst.jobs, &idx, cfg.slot_hours)?;
    let (n_l, n_t) = (inst.n_dc(), inst.n_slots());
    let dc_curve: Vec<f64> = (0..n_t).map(|t| (0..n_l).map(|l| load[idx.offset(l, t)]).sum()).collect();
    let system: Vec<f64> = (0..n_t)
        .map(|t| dc_curve[t] + inst.grid.buses.iter().map(|b| b.base_load[t]).sum::<f64>())
        .collect();
    let cells = (n_l * n_t) as f64;
    let b = sol.breakdown;
    Ok(CompareRow {
        label,
        strategy: cfg.strategy.to_string(),
        shifting_mode: cfg.shifting_mode.to_string(),
        signal_model: cfg.signal_model.to_string(),
        avg_load_mw: load.iter().sum::<f64>() / cells,
        total_cost: b.generation_cost + b.penalty_cost,
        avg_regulation_mw: sol.total_regulation() / cells,
        regulation_profit: b.regulation_revenue,
        net_cost: b.net(),
        peak_system_load_mw: system.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        dc_load_curve: dc_curve,
        system_load_curve: system,
        error: None,
    })
}

fn failed_row(label: String, cfg: &ModelConfig, e: &Error) -> CompareRow {
    CompareRow {
        label,
        strategy: cfg.strategy.to_string(),
        shifting_mode: cfg.shifting_mode.to_string(),
        signal_model: cfg.signal_model.to_string(),
        avg_load_mw: f64::NAN,
        total_cost: f64::NAN,
        avg_regulation_mw: f64::NAN,
        regulation_profit: f64::NAN,
        net_cost: f64::NAN,
        peak_system_load_mw: f64::NAN,
        dc_load_curve: Vec::new(),
        system_load_curve: Vec::new(),
        error: Some(e.to_string()),
    }
}

/// Solves every cell; failures become rows with an error message.
pub fn compare_rows(inst: &Instance, exp: &ExperimentConfig, cells: &[CompareCell]) -> Result<Vec<(CompareRow, Option<Error>)>> {
    let x_base = inst.baseline()?;
    let run = |cell: &CompareCell| {
        let cfg = cell.apply(&exp.model);
        let label = cell.label_for(&cfg);
        let result = solve_config(inst, &x_base, exp, &cfg).and_then(|s| {
            if s.validation.is_ok() {
                compare_row(inst, label.clone(), &cfg, &s.solution)
            } else {
                Err(validation_error(&s.validation))
            }
        });
        match result {
            Ok(row) => (row, None),
            Err(e) => (failed_row(label, &cfg, &e), Some(e)),
        }
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = cells.iter().map(run).collect();
    Ok(rows)
}

fn kilo(v: f64) -> String {
    if v.is_nan() { String::new() } else { format!("{:.3}", v / 1000.0) }
}

fn mw(v: f64) -> String {
    if v.is_nan() { String::new() } else { format!("{v:.3}") }
}

/// Table with costs in k$ (the JSON keeps raw dollars).
pub fn compare_csv(rows: &[CompareRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "strategy",
        "shifting_mode",
        "signal_model",
        "avg_load_mw",
        "total_cost_k$",
        "avg_regulation_mw",
        "regulation_profit_k$",
        "net_cost_k$",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.strategy.clone(),
            r.shifting_mode.clone(),
            r.signal_model.clone(),
            mw(r.avg_load_mw),
            kilo(r.total_cost),
            mw(r.avg_regulation_mw),
            kilo(r.regulation_profit),
            kilo(r.net_cost),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn load_curves_csv(rows: &[CompareRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "slot", "dc_load_mw", "system_load_mw"])?;
    for r in rows {
        for (t, (d, s)) in r.dc_load_curve.iter().zip(&r.system_load_curve).enumerate() {
            w.write_record([r.label.clone(), (t + 1).to_string(), format!("{d:?}"), format!("{s:?}")])?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).map_err(|e| Error::Invalid(e.to_string()))
}

/// Writes all rows that solved, then reports the first failure, if any.
pub fn compare(cfg: &ExperimentConfig, cells: &[CompareCell], out: &Path) -> Result<(Manifest, Vec<CompareRow>)> {
    cfg.validate()?;
    if cells.is_empty() {
        return Err(Error::Invalid("comparison needs at least one configuration".into()));
    }
    let inst = load_instance(cfg)?;
    let results = compare_rows(&inst, cfg, cells)?;
    let rows: Vec<CompareRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let mut dir = OutDir::create(out)?;
    dir.write_json("compare.json", &rows)?;
    dir.write("compare.csv", compare_csv(&rows)?.as_bytes())?;
    dir.write("load_curves.csv", load_curves_csv(&rows)?.as_bytes())?;
    let manifest = dir.finish("compare", cfg.seed)?;
    if let Some(e) = results.into_iter().find_map(|(_, e)| e) {
        return Err(e);
    }
    Ok((manifest, rows))
}

// ---------------------------------------------------------------------- report

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<Option<T>> {
    let path = dir.join(name);
    match std::fs::read_to_string(&path) {
        Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(&path, e)),
    }
}

/// Markdown summary of whatever artifacts exist in `run_dir`.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let mut md = String::from("# dcflex run report\n");
    let mut any = false;
    if let Some(rows) = read_json::<Vec<CompareRow>>(run_dir, "compare.json")? {
        any = true;
        md.push_str("\n## Comparison\n\n");
        md.push_str("| configuration | avg load (MW) | total cost (k$) | avg regulation (MW) | regulation profit (k$) | net cost (k$) |\n");
        md.push_str("|---|---:|---:|---:|---:|---:|\n");
        for r in &rows {
            match &r.error {
                Some(e) => md.push_str(&format!("| {} | failed: {} | | | | |\n", r.label, e.replace('|', "/"))),
                None => md.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} |\n",
                    r.label,
                    mw(r.avg_load_mw),
                    kilo(r.total_cost),
                    mw(r.avg_regulation_mw),
                    kilo(r.regulation_profit),
                    kilo(r.net_cost)
                )),
            }
        }
    }
    if let Some(sol) = read_json::<Solution>(run_dir, "solution.json")? {
        any = true;
        let b = sol.breakdown;
        md.push_str("\n## Solution\n\n");
        md.push_str(&format!(
            "- strategy {}, shifting mode {}, signal model {}, ε_p = {}\n",
            sol.meta.strategy, sol.meta.shifting_mode, sol.meta.signal_model, sol.meta.eps_p
        ));
        md.push_str(&format!(
            "- generation {} k$, shedding penalty {} k$, regulation revenue {} k$, net {} k$\n",
            kilo(b.generation_cost),
            kilo(b.penalty_cost),
            kilo(b.regulation_revenue),
            kilo(b.net())
        ));
        md.push_str(&format!("- committed regulation {:.3} MW·slots\n", sol.total_regulation()));
    }
    if let Some(v) = read_json::<ValidationReport>(run_dir, "validation.json")? {
        any = true;
        md.push_str(&format!(
            "- validation: {} checks, {} violations at tolerance {:e}\n",
            v.checks.len(),
            v.total_violations(),
            v.tolerance
        ));
    }
    if let Some(s) = read_json::<SimulationSummary>(run_dir, "simulation_summary.json")? {
        any = true;
        md.push_str("\n## Delivery simulation\n\n");
        md.push_str(&format!(
            "- {} scenarios, {} samples ({} with regulation committed)\n",
            s.scenarios, s.samples, s.active_samples
        ));
        md.push_str(&format!(
            "- power-band violation rate {:.4} (active samples {:.4}, worst scenario {:.4})\n",
            s.violation_rate, s.active_violation_rate, s.max_active_violation_rate
        ));
        md.push_str(&format!(
            "- queue inside bounds on {:.4} of sub-horizon checks ({:.4} where active)\n",
            s.window_inside_share, s.active_window_inside_share
        ));
        md.push_str(&format!(
            "- revenue mean {} k$ (p5 {}, p95 {}; nominal {})\n",
            kilo(s.revenue_mean),
            kilo(s.revenue_p5),
            kilo(s.revenue_p95),
            kilo(s.nominal_revenue)
        ));
    }
    if let Some(f) = read_json::<FitReport>(run_dir, "fit_report.json")? {
        any = true;
        md.push_str("\n## Signal fit\n\n");
        md.push_str(&format!(
            "- direct σ {:.4}, envelope σ {:.4} (ratio {:.3}), mean |s| {:.4}\n",
            f.direct.sigma, f.envelope.sigma, f.sigma_ratio, f.mean_abs
        ));
        for w in &f.warnings {
            md.push_str(&format!("- warning: {w}\n"));
        }
    }
    if !any {
        return Err(Error::Invalid(format!("{} holds no run artifacts to report on", run_dir.display())));
    }
    Ok(md)
}

pub fn report(cfg: &ExperimentConfig, run_dir: &Path, out: &Path) -> Result<Manifest> {
    let md = render_report(run_dir)?;
    let mut dir = OutDir::create(out)?;
    dir.write("report.md", md.as_bytes())?;
    dir.finish("report", cfg.seed)
}
