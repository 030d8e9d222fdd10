//! Browser bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers (32-bit, so JavaScript never needs
//! BigInt) and strings and returns a JSON string, so
//! the page needs no generated TypeScript types. The work happens in the
//! `*_view` functions, which the native tests exercise directly.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dcflex_core::harness::commands::{self, held_out, CompareRow};
use dcflex_core::harness::{generate_instance, ExperimentConfig, GenParams, Matrix};
use dcflex_core::instance::Instance;
use dcflex_core::optimizer::{ModelConfig, SignalModel, SignalModels};
use dcflex_core::signal::synth::{generate, SignalKind};
use dcflex_core::signal::RegulationTrace;
use dcflex_core::simulator::{Replayer, SimSettings, Trajectory};
use dcflex_core::Result;

const HISTOGRAM_BINS: usize = 41;

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitView {
    pub samples: usize,
    pub direct_mu: f64,
    pub direct_sigma: f64,
    pub envelope_mu: f64,
    pub envelope_sigma: f64,
    pub direct_k: f64,
    pub envelope_k: f64,
    pub empirical_quantile: f64,
    pub histogram: Histogram,
    pub warnings: Vec<String>,
}

fn histogram(samples: &[f64]) -> Histogram {
    let width = 2.0 / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &s in samples {
        let b = (((s + 1.0) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    let n = samples.len().max(1) as f64;
    Histogram {
        edges: (0..=HISTOGRAM_BINS).map(|b| -1.0 + b as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    }
}

/// Synthesizes a regulation trace and fits both signal models to it.
pub fn fit_view(kind: SignalKind, hours: f64, seed: u64, eps_p: f64) -> Result<FitView> {
    let dt = 2.0;
    let n = (hours * 3600.0 / dt).round() as usize;
    let trace = generate(kind, n, dt, seed);
    let cfg = ExperimentConfig { model: ModelConfig { eps_p, ..ModelConfig::default() }, ..ExperimentConfig::default() };
    let report = commands::fit_report(&trace, &cfg)?;
    let (fit, _) = trace.split(cfg.simulation.fit_fraction)?;
    let k = |model| -> Result<f64> {
        let m = ModelConfig { signal_model: model, ..cfg.model.clone() };
        SignalModels::fit(&fit, &m)?.chance_coefficient(eps_p, m.envelope_inflation)
    };
    Ok(FitView {
        samples: trace.len(),
        direct_mu: report.direct.mu,
        direct_sigma: report.direct.sigma,
        envelope_mu: report.envelope.mu,
        envelope_sigma: report.envelope.sigma,
        direct_k: k(SignalModel::DirectGaussian)?,
        envelope_k: k(SignalModel::Envelope)?,
        empirical_quantile: dcflex_core::signal::empirical_quantile(&fit.samples, 1.0 - eps_p)?,
        histogram: histogram(&fit.samples),
        warnings: report.warnings,
    })
}

fn instance(seed: u64, demo: bool) -> Result<Instance> {
    let params = if demo { GenParams::demo() } else { GenParams::default() };
    generate_instance(&params, seed)
}

#[derive(Debug, Serialize)]
pub struct CompareView {
    pub rows: Vec<CompareRow>,
    pub errors: Vec<Option<String>>,
}

/// Solves a strategy or shifting-mode matrix on a generated instance.
pub fn compare_view(matrix: Matrix, seed: u64, demo: bool) -> Result<CompareView> {
    let inst = instance(seed, demo)?;
    let exp = ExperimentConfig { seed, ..ExperimentConfig::default() };
    let rows = commands::compare_rows(&inst, &exp, &matrix.cells())?;
    Ok(CompareView {
        errors: rows.iter().map(|(_, e)| e.as_ref().map(|e| e.to_string())).collect(),
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ReplayView {
    pub regulation_mw: Vec<f64>,
    pub violation_rate: f64,
    pub window_inside_share: f64,
    pub revenue: f64,
    pub nominal_revenue: f64,
    pub trajectory: Trajectory,
}

/// Solves the cooperative plan and replays one held-out day against it.
pub fn replay_view(seed: u64, demo: bool, model: SignalModel, eps_p: f64, dc: usize, window: u64) -> Result<ReplayView> {
    let inst = instance(seed, demo)?;
    let exp = ExperimentConfig { seed, ..ExperimentConfig::default() };
    let cfg = ModelConfig { signal_model: model, eps_p, ..ModelConfig::default() };
    let x_base = inst.baseline()?;
    let solved = commands::solve_config(&inst, &x_base, &exp, &cfg)?;
    let held: RegulationTrace = held_out(&inst, &exp)?;
    let settings = SimSettings::default();
    let replayer = Replayer::new(&inst, &solved.solution, &cfg, &settings)?;
    let span = held.len().saturating_sub(replayer.horizon_samples(&held)).max(1);
    let offset = (window as usize * 997) % span;
    let l = dc.min(inst.n_dc() - 1);
    let replay = replayer.replay(&held, offset, seed)?;
    let d = &replay.dcs[l];
    Ok(ReplayView {
        regulation_mw: solved.solution.r[l].clone(),
        violation_rate: if d.active_samples > 0 { d.active_violations as f64 / d.active_samples as f64 } else { 0.0 },
        window_inside_share: if d.windows > 0 { d.windows_inside as f64 / d.windows as f64 } else { 1.0 },
        revenue: d.revenue,
        nominal_revenue: d.nominal_revenue,
        trajectory: replayer.trajectory(&held, offset, l)?,
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let v = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, JsError> {
    s.parse().map_err(|_| JsError::new(&format!("unknown {what} {s:?}")))
}

/// Fit summary and histogram for a synthetic trace, as JSON.
#[wasm_bindgen]
pub fn fit_signal(kind: &str, hours: f64, seed: u32, eps_p: f64) -> std::result::Result<String, JsError> {
    to_js(fit_view(parse(kind, "signal kind")?, hours, seed.into(), eps_p))
}

/// `matrix` is `strategies` or `modes`.
#[wasm_bindgen]
pub fn compare(matrix: &str, seed: u32, demo: bool) -> std::result::Result<String, JsError> {
    to_js(compare_view(parse(matrix, "matrix")?, seed.into(), demo))
}

#[wasm_bindgen]
pub fn replay(seed: u32, demo: bool, signal_model: &str, eps_p: f64, dc: u32, window: u32) -> std::result::Result<String, JsError> {
    to_js(replay_view(seed.into(), demo, parse(signal_model, "signal model")?, eps_p, dc as usize, window.into()))
}
