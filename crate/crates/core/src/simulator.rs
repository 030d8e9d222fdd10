//! Replays held-out regulation signals against a committed schedule and
//! regulation capacity, tracking power-band violations, virtual-queue
//! excursions and compliance-adjusted revenue.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::optimizer::build::queue_baseline_expr;
use crate::optimizer::config::ModelConfig;
use crate::optimizer::solution::Solution;
use crate::signal::empirical_quantile;
use crate::signal::RegulationTrace;
use crate::workload::aggregate_load;

const ACTIVE_R: f64 = 1e-9;
const BAND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevenueMode {
    /// A failing slot forfeits all of its revenue; a passing slot keeps it all.
    Forfeit,
    /// A passing slot keeps the share of its revenue it actually delivered
    /// (one minus its violation fraction); a failing slot keeps nothing.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub scenarios: usize,
    /// Largest intra-slot violation fraction a regulating slot may show and
    /// still be paid.
    pub compliance_threshold: f64,
    /// Share of the signal used for fitting; the rest is replayed.
    pub fit_fraction: f64,
    pub revenue_mode: RevenueMode,
    /// Std-dev of multiplicative load noise (0 disables it).
    pub load_noise: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            scenarios: 200,
            compliance_threshold: 0.25,
            fit_fraction: 0.7,
            revenue_mode: RevenueMode::Forfeit,
            load_noise: 0.0,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios == 0 {
            return Err(Error::Domain("scenarios must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.compliance_threshold) {
            return Err(Error::Domain("compliance threshold must lie in [0, 1]".into()));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction < 1.0) {
            return Err(Error::Domain("fit fraction must lie in (0, 1)".into()));
        }
        if !(self.load_noise >= 0.0 && self.load_noise.is_finite()) {
            return Err(Error::Domain("load noise must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Per-DC tallies of one replay.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DcReplay {
    pub dc_id: usize,
    pub samples: usize,
    pub violations: usize,
    pub active_samples: usize,
    pub active_violations: usize,
    /// Sub-horizon checks: queue re-evaluated from the slot's start.
    pub windows: usize,
    pub windows_inside: usize,
    pub active_windows: usize,
    pub active_windows_inside: usize,
    /// Share of samples whose running queue stayed within bounds.
    pub queue_samples_inside: usize,
    /// Intra-slot power-violation fraction per slot (0 for idle slots).
    pub slot_violation_share: Vec<f64>,
    pub slots_passed: usize,
    pub revenue: f64,
    pub nominal_revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub offset: usize,
    pub dcs: Vec<DcReplay>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

impl Replay {
    fn sum(&self, f: impl Fn(&DcReplay) -> usize) -> usize {
        self.dcs.iter().map(f).sum()
    }
    pub fn violation_rate(&self) -> f64 {
        ratio(self.sum(|d| d.violations), self.sum(|d| d.samples))
    }
    pub fn active_violation_rate(&self) -> f64 {
        ratio(self.sum(|d| d.active_violations), self.sum(|d| d.active_samples))
    }
    pub fn window_inside_share(&self) -> f64 {
        ratio(self.sum(|d| d.windows_inside), self.sum(|d| d.windows))
    }
    pub fn active_window_inside_share(&self) -> f64 {
        ratio(self.sum(|d| d.active_windows_inside), self.sum(|d| d.active_windows))
    }
    pub fn revenue(&self) -> f64 {
        self.dcs.iter().map(|d| d.revenue).sum()
    }
}

/// Precomputed, signal-independent parts of a replay.
pub struct Replayer<'a> {
    inst: &'a Instance,
    sol: &'a Solution,
    settings: SimSettings,
    slot_hours: f64,
    /// `[l][t]` scheduled load, MW.
    load: Vec<Vec<f64>>,
    /// `[l][t][k]` baseline queue level at horizon k of slot t.
    window_base: Vec<Vec<Vec<f64>>>,
    horizons: Vec<f64>,
    unit_revenue: Vec<f64>,
}

impl<'a> Replayer<'a> {
    pub fn new(inst: &'a Instance, sol: &'a Solution, cfg: &ModelConfig, settings: &SimSettings) -> Result<Self> {
        settings.validate()?;
        let idx = inst.index()?;
        let (n_l, n_t) = (inst.n_dc(), inst.n_slots());
        if sol.x.dims() != (inst.jobs.len(), n_t, n_l) || sol.r.len() != n_l {
            return Err(Error::Dimension("solution does not match the instance".into()));
        }
        let flat = aggregate_load(&sol.x, &inst.jobs, &idx, cfg.slot_hours)?;
        let load: Vec<Vec<f64>> = (0..n_l).map(|l| (0..n_t).map(|t| flat[idx.offset(l, t)]).collect()).collect();
        let horizons = cfg.effective_var_horizons();
        let mut window_base = vec![vec![Vec::new(); n_t]; n_l];
        for (l, per_slot) in window_base.iter_mut().enumerate() {
            for (t, cell) in per_slot.iter_mut().enumerate() {
                for h in &horizons {
                    let tau = t as f64 + h / cfg.slot_hours;
                    cell.push(queue_baseline_expr(&inst.jobs, &inst.queues.dcs[l], l, tau)?.eval(&sol.x));
                }
            }
        }
        let unit_revenue = (0..n_t).map(|t| cfg.unit_revenue(t, sol.meta.m_bar)).collect();
        Ok(Self {
            inst,
            sol,
            settings: settings.clone(),
            slot_hours: cfg.slot_hours,
            load,
            window_base,
            horizons,
            unit_revenue,
        })
    }

    fn slot_samples(&self, trace: &RegulationTrace) -> usize {
        trace.samples_per(self.slot_hours)
    }

    /// Samples needed to replay the whole horizon.
    pub fn horizon_samples(&self, trace: &RegulationTrace) -> usize {
        self.slot_samples(trace) * self.inst.n_slots()
    }

    pub fn replay(&self, trace: &RegulationTrace, offset: usize, noise_seed: u64) -> Result<Replay> {
        let per_slot = self.slot_samples(trace);
        if per_slot == 0 || offset + self.horizon_samples(trace) > trace.len() {
            return Err(Error::Invalid(format!(
                "held-out trace has {} samples; replay at offset {offset} needs {}",
                trace.len(),
                self.horizon_samples(trace)
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let noise = Normal::new(0.0, self.settings.load_noise).map_err(|e| Error::Domain(e.to_string()))?;
        let scale = trace.dt / 3600.0;
        let dcs = (0..self.inst.n_dc())
            .map(|l| {
                let spec = &self.inst.dcs[l];
                let queue = &self.inst.queues.dcs[l];
                let mut out = DcReplay { dc_id: spec.id, ..DcReplay::default() };
                let mut q = queue.q0;
                for t in 0..self.inst.n_slots() {
                    let (base, r) = (self.load[l][t], self.sol.r[l][t]);
                    let active = r > ACTIVE_R;
                    let inflow = queue.arrivals[t] / self.slot_hours;
                    let mut slot_bad = 0usize;
                    let mut cum = 0.0;
                    let mut next_h = 0;
                    for k in 0..per_slot {
                        let s = trace.samples[offset + t * per_slot + k];
                        let drift = if self.settings.load_noise > 0.0 { base * noise.sample(&mut rng) } else { 0.0 };
                        let target = base - s * r;
                        let want = target + drift;
                        let bad = want < spec.p_min[t] - BAND_TOL || want > spec.p_max[t] + BAND_TOL;
                        let delivered = want.clamp(spec.p_min[t], spec.p_max[t]);
                        out.samples += 1;
                        out.violations += bad as usize;
                        if active {
                            out.active_samples += 1;
                            out.active_violations += bad as usize;
                            slot_bad += bad as usize;
                        }
                        q += (inflow - delivered) * scale;
                        out.queue_samples_inside += (q >= queue.q_min - BAND_TOL && q <= queue.q_max + BAND_TOL) as usize;
                        cum += s * scale;
                        // sub-horizon check once the window anchored at slot start closes
                        while next_h < self.horizons.len()
                            && k + 1 == trace.samples_per(self.horizons[next_h]).min(per_slot)
                        {
                            let level = self.window_base[l][t][next_h] + r * cum;
                            let inside = level >= queue.q_min - BAND_TOL && level <= queue.q_max + BAND_TOL;
                            out.windows += 1;
                            out.windows_inside += inside as usize;
                            if active {
                                out.active_windows += 1;
                                out.active_windows_inside += inside as usize;
                            }
                            next_h += 1;
                        }
                    }
                    let nominal = r * self.unit_revenue[t] * self.slot_hours;
                    let share = slot_bad as f64 / per_slot as f64;
                    let passed = share <= self.settings.compliance_threshold;
                    let paid = match (passed, self.settings.revenue_mode) {
                        (false, _) => 0.0,
                        (true, RevenueMode::Forfeit) => nominal,
                        (true, RevenueMode::Proportional) => nominal * (1.0 - share),
                    };
                    out.slot_violation_share.push(share);
                    out.slots_passed += passed as usize;
                    out.nominal_revenue += nominal;
                    out.revenue += paid;
                }
                out
            })
            .collect();
        Ok(Replay { offset, dcs })
    }

    /// Per-sample view of one DC over one replay, for plotting.
    pub fn trajectory(&self, trace: &RegulationTrace, offset: usize, l: usize) -> Result<Trajectory> {
        let per_slot = self.slot_samples(trace);
        if l >= self.inst.n_dc() || offset + self.horizon_samples(trace) > trace.len() {
            return Err(Error::Invalid("trajectory request outside the trace or DC range".into()));
        }
        let spec = &self.inst.dcs[l];
        let queue = &self.inst.queues.dcs[l];
        let scale = trace.dt / 3600.0;
        let mut tr = Trajectory { dc_id: spec.id, q_min: queue.q_min, q_max: queue.q_max, ..Trajectory::default() };
        let mut q = queue.q0;
        for t in 0..self.inst.n_slots() {
            for k in 0..per_slot {
                let n = t * per_slot + k;
                let s = trace.samples[offset + n];
                let power = self.load[l][t] - s * self.sol.r[l][t];
                q += (queue.arrivals[t] / self.slot_hours - power.clamp(spec.p_min[t], spec.p_max[t])) * scale;
                tr.hours.push((n + 1) as f64 * scale);
                tr.signal.push(s);
                tr.power.push(power);
                tr.p_min.push(spec.p_min[t]);
                tr.p_max.push(spec.p_max[t]);
                tr.queue.push(q);
            }
        }
        Ok(tr)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dc_id: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub hours: Vec<f64>,
    pub signal: Vec<f64>,
    pub power: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    pub queue: Vec<f64>,
}

impl Trajectory {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["hours", "signal", "power_mw", "p_min", "p_max", "queue_mwh"])?;
        for k in 0..self.hours.len() {
            w.write_record(
                [self.hours[k], self.signal[k], self.power[k], self.p_min[k], self.p_max[k], self.queue[k]]
                    .map(|v| format!("{v:?}")),
            )?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
            .map_err(|e| Error::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcSummary {
    pub dc_id: usize,
    pub violation_rate: f64,
    pub active_violation_rate: f64,
    pub window_inside_share: f64,
    pub active_window_inside_share: f64,
    pub queue_inside_share: f64,
    /// Share of slots whose violation fraction stayed within the threshold.
    pub compliance_rate: f64,
    pub mean_revenue: f64,
    pub nominal_revenue: f64,
}

/// Aggregate over all Monte Carlo replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub scenarios: usize,
    pub samples: usize,
    pub active_samples: usize,
    pub violation_rate: f64,
    pub active_violation_rate: f64,
    pub max_active_violation_rate: f64,
    pub windows: usize,
    pub active_windows: usize,
    pub window_inside_share: f64,
    pub active_window_inside_share: f64,
    pub revenue_mean: f64,
    pub revenue_p5: f64,
    pub revenue_p95: f64,
    pub nominal_revenue: f64,
    pub per_dc: Vec<DcSummary>,
}

/// Replays `settings.scenarios` random windows of the held-out trace.
pub fn monte_carlo(
    inst: &Instance,
    sol: &Solution,
    cfg: &ModelConfig,
    settings: &SimSettings,
    held_out: &RegulationTrace,
    seed: u64,
) -> Result<(SimulationSummary, Vec<Replay>)> {
    let rp = Replayer::new(inst, sol, cfg, settings)?;
    let span = rp.horizon_samples(held_out);
    if span > held_out.len() {
        return Err(Error::Invalid(format!(
            "held-out trace ({:.2} h) shorter than the {:.2} h horizon",
            held_out.duration_hours(),
            span as f64 * held_out.dt / 3600.0
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(usize, u64)> =
        (0..settings.scenarios).map(|_| (rng.random_range(0..=held_out.len() - span), rng.random())).collect();
    let run = |&(offset, noise_seed): &(usize, u64)| rp.replay(held_out, offset, noise_seed);
    #[cfg(feature = "parallel")]
    let replays: Vec<Result<Replay>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let replays: Vec<Result<Replay>> = jobs.iter().map(run).collect();
    let replays = replays.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((summarize(&replays)?, replays))
}

pub fn summarize(replays: &[Replay]) -> Result<SimulationSummary> {
    if replays.is_empty() {
        return Err(Error::Invalid("no replays to summarize".into()));
    }
    let total = |f: &dyn Fn(&DcReplay) -> usize| replays.iter().map(|r| r.sum(f)).sum::<usize>();
    let revenues: Vec<f64> = replays.iter().map(Replay::revenue).collect();
    let n = replays.len() as f64;
    let per_dc = (0..replays[0].dcs.len())
        .map(|l| {
            let g = |f: &dyn Fn(&DcReplay) -> usize| replays.iter().map(|r| f(&r.dcs[l])).sum::<usize>();
            DcSummary {
                dc_id: replays[0].dcs[l].dc_id,
                violation_rate: ratio(g(&|d| d.violations), g(&|d| d.samples)),
                active_violation_rate: ratio(g(&|d| d.active_violations), g(&|d| d.active_samples)),
                window_inside_share: ratio(g(&|d| d.windows_inside), g(&|d| d.windows)),
                active_window_inside_share: ratio(g(&|d| d.active_windows_inside), g(&|d| d.active_windows)),
                queue_inside_share: ratio(g(&|d| d.queue_samples_inside), g(&|d| d.samples)),
                compliance_rate: ratio(g(&|d| d.slots_passed), g(&|d| d.slot_violation_share.len())),
                mean_revenue: replays.iter().map(|r| r.dcs[l].revenue).sum::<f64>() / n,
                nominal_revenue: replays[0].dcs[l].nominal_revenue,
            }
        })
        .collect();
    Ok(SimulationSummary {
        scenarios: replays.len(),
        samples: total(&|d| d.samples),
        active_samples: total(&|d| d.active_samples),
        violation_rate: ratio(total(&|d| d.violations), total(&|d| d.samples)),
        active_violation_rate: ratio(total(&|d| d.active_violations), total(&|d| d.active_samples)),
        max_active_violation_rate: replays.iter().map(Replay::active_violation_rate).fold(0.0, f64::max),
        windows: total(&|d| d.windows),
        active_windows: total(&|d| d.active_windows),
        window_inside_share: ratio(total(&|d| d.windows_inside), total(&|d| d.windows)),
        active_window_inside_share: ratio(total(&|d| d.active_windows_inside), total(&|d| d.active_windows)),
        revenue_mean: revenues.iter().sum::<f64>() / n,
        revenue_p5: empirical_quantile(&revenues, 0.05)?,
        revenue_p95: empirical_quantile(&revenues, 0.95)?,
        nominal_revenue: replays[0].dcs.iter().map(|d| d.nominal_revenue).sum(),
        per_dc,
    })
}

/// Per-replay rows for CSV export.
pub fn replays_csv(replays: &[Replay]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "offset", "violation_rate", "active_violation_rate", "window_inside_share", "revenue"])?;
    for (k, r) in replays.iter().enumerate() {
        w.write_record([
            k.to_string(),
            r.offset.to_string(),
            format!("{:?}", r.violation_rate()),
            format!("{:?}", r.active_violation_rate()),
            format!("{:?}", r.window_inside_share()),
            format!("{:?}", r.revenue()),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).map_err(|e| Error::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bus, Generator, GridCase};
    use crate::optimizer::config::{DcQueue, QueueParameters};
    use crate::optimizer::solution::{CostBreakdown, SolutionMeta, SolveStatus};
    use crate::optimizer::{ShiftingMode, SignalModel, Strategy};
    use crate::workload::tests::job;
    use crate::workload::{DataCenterSpec, FlexClass, JobCluster, LatencyMap, ScheduleMatrix};

    /// One DC, one slot of one hour, a single 10 MWh cluster (10 MW load).
    fn fixture(samples: Vec<f64>, r: f64) -> (Instance, Solution) {
        let mut latency = LatencyMap::new();
        latency.insert(1, 1, 5.0);
        let inst = Instance {
            grid: GridCase {
                mva_base: 100.0,
                slack_bus: 1,
                buses: vec![Bus { bus_id: 1, base_load: vec![0.0], generator_ids: vec![1], dc_ids: vec![1] }],
                lines: vec![],
                generators: vec![Generator {
                    gen_id: 1,
                    bus_id: 1,
                    cost_per_mwh: 20.0,
                    p_min: 0.0,
                    p_max: 50.0,
                    ramp_up: 50.0,
                    ramp_down: 50.0,
                    startup_ramp: 50.0,
                    shutdown_ramp: 50.0,
                    initial_output: None,
                }],
            },
            jobs: vec![JobCluster { d_kwh_per_task: 1.0, ..job(1, 1, 1, FlexClass::Fixed, 10_000.0, 1.0) }],
            latency,
            dcs: vec![DataCenterSpec {
                id: 1,
                bus: 1,
                cpu_cap: vec![1e6],
                mem_cap: vec![1e6],
                io_cap: vec![1e6],
                p_min: vec![6.0],
                p_max: vec![14.0],
                q_min: -1.0,
                q_max: 1.0,
            }],
            queues: QueueParameters { dcs: vec![DcQueue { q0: 0.0, arrivals: vec![10.0], q_min: -1.0, q_max: 1.0 }] },
            signal: RegulationTrace::new(samples, 900.0).unwrap(),
        };
        let mut x = ScheduleMatrix::zeros(1, 1, 1);
        x.set(0, 0, 0, 1.0);
        let sol = Solution {
            status: SolveStatus::Optimal,
            x,
            r: vec![vec![r]],
            p: vec![vec![10.0]],
            u: vec![vec![1.0]],
            theta: vec![vec![0.0]],
            q: vec![vec![0.0]],
            objective_total: 0.0,
            breakdown: CostBreakdown::default(),
            meta: SolutionMeta {
                strategy: Strategy::Cooperative,
                shifting_mode: ShiftingMode::None,
                signal_model: SignalModel::Envelope,
                eps_p: 0.05,
                eps_e: 0.05,
                slot_hours: 1.0,
                chance_coefficient: 1.0,
                m_bar: 0.5,
                nodes: 0,
                lp_iterations: 0,
            },
        };
        (inst, sol)
    }

    fn cfg() -> ModelConfig {
        ModelConfig { var_horizons: vec![0.5], ..ModelConfig::default() }
    }

    #[test]
    fn hand_computed_replay() {
        // four 15-minute samples; the load is 10 MW - s·5 MW
        let (inst, sol) = fixture(vec![0.2, 1.0, -0.4, -1.0], 5.0);
        let rp = Replayer::new(&inst, &sol, &cfg(), &SimSettings::default()).unwrap();
        let r = rp.replay(&inst.signal, 0, 0).unwrap();
        let d = &r.dcs[0];
        // powers 9, 5, 12, 15 → 5 < 6 and 15 > 14 violate
        assert_eq!((d.samples, d.violations, d.active_samples), (4, 2, 4));
        // windows: 0.5 h (cum 0.3 signal-hours) and 1 h (cum -0.05)
        assert_eq!(d.windows, 2);
        // 0.5 h: Q^base = 0 → level 5·0.3 = 1.5 > 1 is outside; 1 h: -0.25 inside
        assert_eq!(d.windows_inside, 1);
        // half the samples violate, above the 0.25 allowance → forfeited
        assert_eq!(d.slot_violation_share, vec![0.5]);
        assert_eq!((d.slots_passed, d.revenue), (0, 0.0));
        assert!((d.nominal_revenue - 5.0 * 35.0).abs() < 1e-9);
        let lenient = SimSettings { compliance_threshold: 0.5, ..SimSettings::default() };
        let rp = Replayer::new(&inst, &sol, &cfg(), &lenient).unwrap();
        assert!((rp.replay(&inst.signal, 0, 0).unwrap().dcs[0].revenue - 175.0).abs() < 1e-9);
        // running queue: 0.25, 1.25, 0.75, -0.25 (MWh) → three inside
        assert_eq!(d.queue_samples_inside, 3);
    }

    #[test]
    fn thirty_percent_violations_fail_a_quarter_allowance() {
        // ten 6-minute samples, three of which push the load below P_min
        let mut samples = vec![0.0; 10];
        samples[..3].fill(1.0);
        let (mut inst, sol) = fixture(samples, 5.0);
        inst.signal.dt = 360.0;
        let rp = Replayer::new(&inst, &sol, &cfg(), &SimSettings::default()).unwrap();
        let d = &rp.replay(&inst.signal, 0, 0).unwrap().dcs[0];
        assert!((d.slot_violation_share[0] - 0.3).abs() < 1e-12);
        assert_eq!((d.slots_passed, d.revenue), (0, 0.0));
        let prop = SimSettings { revenue_mode: RevenueMode::Proportional, compliance_threshold: 0.3, ..SimSettings::default() };
        let rp = Replayer::new(&inst, &sol, &cfg(), &prop).unwrap();
        let d = &rp.replay(&inst.signal, 0, 0).unwrap().dcs[0];
        assert!((d.revenue - 0.7 * 5.0 * 35.0).abs() < 1e-9);
    }

    #[test]
    fn full_threshold_pays_regardless() {
        let (inst, sol) = fixture(vec![1.0; 4], 20.0);
        let rp = Replayer::new(&inst, &sol, &cfg(), &SimSettings::default()).unwrap();
        let d = &rp.replay(&inst.signal, 0, 0).unwrap().dcs[0];
        // load 10 - 20 = -10 MW: every sample violates
        assert_eq!((d.violations, d.samples), (4, 4));
        assert_eq!(d.revenue, 0.0);
        let all = SimSettings { compliance_threshold: 1.0, ..SimSettings::default() };
        let rp = Replayer::new(&inst, &sol, &cfg(), &all).unwrap();
        let d = &rp.replay(&inst.signal, 0, 0).unwrap().dcs[0];
        assert_eq!(d.slots_passed, 1);
        assert!((d.revenue - 20.0 * 35.0).abs() < 1e-9);
    }

    #[test]
    fn zero_capacity_is_inactive() {
        let (inst, sol) = fixture(vec![0.5; 4], 0.0);
        let rp = Replayer::new(&inst, &sol, &cfg(), &SimSettings::default()).unwrap();
        let r = rp.replay(&inst.signal, 0, 0).unwrap();
        assert_eq!(r.dcs[0].active_samples, 0);
        assert_eq!(r.violation_rate(), 0.0);
        assert_eq!(r.window_inside_share(), 1.0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let samples: Vec<f64> = (0..40).map(|k| ((k * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let (inst, sol) = fixture(samples, 3.0);
        let s = SimSettings { scenarios: 16, ..SimSettings::default() };
        let a = monte_carlo(&inst, &sol, &cfg(), &s, &inst.signal, 9).unwrap();
        let b = monte_carlo(&inst, &sol, &cfg(), &s, &inst.signal, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.samples, 16 * 4);
        assert!(a.0.revenue_p5 <= a.0.revenue_mean && a.0.revenue_mean <= a.0.revenue_p95);
        let short = RegulationTrace::new(vec![0.0; 3], 900.0).unwrap();
        assert!(monte_carlo(&inst, &sol, &cfg(), &s, &short, 9).is_err());
    }

    #[test]
    fn trajectory_matches_replay_queue() {
        let (inst, sol) = fixture(vec![0.2, 1.0, -0.4, -1.0], 5.0);
        let rp = Replayer::new(&inst, &sol, &cfg(), &SimSettings::default()).unwrap();
        let tr = rp.trajectory(&inst.signal, 0, 0).unwrap();
        assert_eq!(tr.power, vec![9.0, 5.0, 12.0, 15.0]);
        assert!((tr.queue[3] + 0.25).abs() < 1e-12);
        assert!(tr.to_csv().unwrap().lines().count() == 5);
    }
}
