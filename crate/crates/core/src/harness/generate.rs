//! Seeded synthetic instance generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{demo_case, validate_case, Bus, Generator, GridCase, Line};
use crate::instance::Instance;
use crate::optimizer::config::QueueParameters;
use crate::signal::synth::{generate, SignalKind};
use crate::workload::{baseline_assignment, DataCenterSpec, FlexClass, JobCluster, LatencyMap, Resource};

/// Fixed offsets deriving subsystem seeds from the single user seed.
pub const SEED_WORKLOAD: u64 = 0;
pub const SEED_GRID: u64 = 1;
pub const SEED_SIGNAL: u64 = 2;
pub const SEED_SIMULATION: u64 = 3;

/// Latency of every region to its home data center.
pub const HOME_LATENCY: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSource {
    /// The fixed six-bus case (requires three data centers).
    Demo,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub n_dc: usize,
    pub n_slots: usize,
    pub n_clusters: usize,
    pub n_buses: usize,
    pub n_generators: usize,
    pub grid: GridSource,
    pub fixed_share: f64,
    pub interactive_share: f64,
    /// Mean DC load per (data center, slot) at baseline, MW.
    pub mean_dc_load: f64,
    /// Queue half-width as a multiple of the mean slot energy of each DC.
    pub queue_band: f64,
    pub signal_kind: SignalKind,
    pub signal_dt: f64,
    /// Trace length; `None` picks enough for fitting plus held-out replay.
    pub signal_hours: Option<f64>,
    pub slot_hours: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_dc: 3,
            n_slots: 8,
            n_clusters: 24,
            n_buses: 6,
            n_generators: 2,
            grid: GridSource::Random,
            fixed_share: 0.5,
            interactive_share: 0.3,
            mean_dc_load: 8.0,
            queue_band: 1.5,
            signal_kind: SignalKind::ClippedGaussian,
            signal_dt: 2.0,
            signal_hours: None,
            slot_hours: 1.0,
        }
    }
}

impl GenParams {
    /// Parameters of the shipped demo bundle.
    pub fn demo() -> Self {
        Self { grid: GridSource::Demo, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dc == 0 || self.n_slots == 0 || self.n_clusters == 0 {
            return Err(Error::Domain("n_dc, n_slots and n_clusters must be ≥ 1".into()));
        }
        if self.grid == GridSource::Random && (self.n_buses == 0 || self.n_generators == 0) {
            return Err(Error::Domain("random grids need ≥ 1 bus and ≥ 1 generator".into()));
        }
        if self.grid == GridSource::Demo && self.n_dc != 3 {
            return Err(Error::Domain("the demo grid hosts exactly 3 data centers".into()));
        }
        let rest = 1.0 - self.fixed_share - self.interactive_share;
        if !(self.fixed_share >= 0.0 && self.interactive_share >= 0.0 && rest >= -1e-12) {
            return Err(Error::Domain("class shares must be ≥ 0 and sum to ≤ 1".into()));
        }
        if !(self.mean_dc_load > 0.0 && self.queue_band > 0.0 && self.signal_dt > 0.0 && self.slot_hours > 0.0) {
            return Err(Error::Domain("load, queue band, dt and slot length must be > 0".into()));
        }
        Ok(())
    }

    pub fn trace_hours(&self) -> f64 {
        let horizon = self.n_slots as f64 * self.slot_hours;
        // the 30% replay segment must cover the horizon with room for offsets
        self.signal_hours.unwrap_or_else(|| (horizon / 0.3 * 1.25).ceil().max(72.0))
    }
}

fn class_plan(p: &GenParams, rng: &mut ChaCha8Rng) -> Vec<FlexClass> {
    let m = p.n_clusters;
    let n_fixed = (p.fixed_share * m as f64).round() as usize;
    let n_inter = ((p.interactive_share * m as f64).round() as usize).min(m - n_fixed.min(m));
    let mut classes: Vec<FlexClass> = (0..m)
        .map(|k| match k {
            k if k < n_fixed => FlexClass::Fixed,
            k if k < n_fixed + n_inter => FlexClass::Interactive,
            _ => FlexClass::Deferrable,
        })
        .collect();
    classes.shuffle(rng);
    classes
}

fn clusters(p: &GenParams, rng: &mut ChaCha8Rng) -> Vec<JobCluster> {
    let classes = class_plan(p, rng);
    let cells = p.n_dc * p.n_slots;
    let mean_energy_mwh = p.mean_dc_load * p.slot_hours * cells as f64 / p.n_clusters as f64;
    (0..p.n_clusters)
        .map(|k| {
            // the first N·T clusters cover every (home DC, slot) cell once
            let (region, slot) = if k < cells {
                (k % p.n_dc, k / p.n_dc)
            } else {
                (rng.random_range(0..p.n_dc), rng.random_range(0..p.n_slots))
            };
            let d = 1.7 * rng.random_range(0.8..1.2);
            let energy = mean_energy_mwh * rng.random_range(0.5..1.5);
            JobCluster {
                id: k as u32 + 1,
                user_region: region as u32 + 1,
                arrival_slot: slot + 1,
                class: classes[k],
                weight: (energy * 1000.0 / d).round(),
                r_cpu: rng.random_range(0.8..1.2),
                r_mem: rng.random_range(0.5..1.5),
                r_io: rng.random_range(0.2..0.6),
                d_kwh_per_task: d,
            }
        })
        .collect()
}

fn latency_map(p: &GenParams, rng: &mut ChaCha8Rng) -> LatencyMap {
    let mut map = LatencyMap::new();
    for r in 1..=p.n_dc as u32 {
        for l in 1..=p.n_dc {
            let v = if l == r as usize { HOME_LATENCY } else { HOME_LATENCY + rng.random_range(3.0..15.0) };
            map.insert(r, l, (v * 100.0).round() / 100.0);
        }
    }
    map
}

fn base_profile(n_slots: usize, peak: f64) -> Vec<f64> {
    (0..n_slots)
        .map(|t| {
            let phase = if n_slots > 1 { t as f64 / (n_slots - 1) as f64 } else { 0.5 };
            peak * (0.62 + 0.38 * (std::f64::consts::PI * phase).sin())
        })
        .collect()
}

/// Random connected case: spanning tree plus extra chords, generators sorted
/// so the cheapest unit covers most but not all of the peak.
pub fn random_case(n_buses: usize, n_gens: usize, n_slots: usize, peak_total: f64, rng: &mut ChaCha8Rng) -> GridCase {
    let mut shares: Vec<f64> = (0..n_buses).map(|_| rng.random_range(0.5..1.5)).collect();
    let sum: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|s| *s /= sum);
    let profile = base_profile(n_slots, peak_total);
    let mut lines = Vec::new();
    let mut push_line = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        let id = lines.len() + 1;
        lines.push(Line {
            line_id: id,
            from_bus: a,
            to_bus: b,
            susceptance: (rng.random_range(4.0..12.0) * 100.0f64).round() / 100.0,
            flow_limit: (peak_total * rng.random_range(0.35..0.8)).round(),
        });
    };
    for b in 2..=n_buses {
        let a = rng.random_range(1..b);
        push_line(a, b, rng);
    }
    for _ in 0..n_buses / 2 {
        let a = rng.random_range(1..=n_buses);
        let b = rng.random_range(1..=n_buses);
        if a != b {
            push_line(a.min(b), a.max(b), rng);
        }
    }
    let mut gen_buses: Vec<usize> = (1..=n_buses).collect();
    gen_buses.shuffle(rng);
    let mut costs: Vec<f64> = (0..n_gens).map(|_| rng.random_range(15.0..60.0f64).round()).collect();
    costs.sort_by(f64::total_cmp);
    let generators: Vec<Generator> = (0..n_gens)
        .map(|g| {
            let share = if g == 0 { 0.8 } else { 0.7 / (n_gens - 1) as f64 };
            let cap = (share * peak_total * 1.3).round();
            let p_min = (0.15 * cap).round();
            Generator {
                gen_id: g + 1,
                bus_id: gen_buses[g % n_buses],
                cost_per_mwh: costs[g],
                p_min,
                p_max: cap,
                ramp_up: (0.6 * cap).round(),
                ramp_down: (0.6 * cap).round(),
                startup_ramp: (0.6 * cap).round().max(p_min),
                shutdown_ramp: (0.6 * cap).round().max(p_min),
                initial_output: None,
            }
        })
        .collect();
    let buses = (0..n_buses)
        .map(|b| Bus {
            bus_id: b + 1,
            base_load: profile.iter().map(|v| (v * shares[b] * 1000.0).round() / 1000.0).collect(),
            generator_ids: generators.iter().filter(|g| g.bus_id == b + 1).map(|g| g.gen_id).collect(),
            dc_ids: Vec::new(),
        })
        .collect();
    GridCase { mva_base: 100.0, slack_bus: gen_buses[0], buses, lines, generators }
}

/// Builds a complete, validated instance from `params` and `seed`.
pub fn generate_instance(p: &GenParams, seed: u64) -> Result<Instance> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(SEED_WORKLOAD));
    let jobs = clusters(p, &mut rng);
    let latency = latency_map(p, &mut rng);

    // home loads drive DC sizing; the baseline puts every cluster at home
    let n_t = p.n_slots;
    let mut load = vec![vec![0.0; n_t]; p.n_dc];
    let mut demand = vec![vec![[0.0; 3]; n_t]; p.n_dc];
    for j in &jobs {
        let (l, t) = (j.user_region as usize - 1, j.arrival());
        load[l][t] += j.energy_mwh() / p.slot_hours;
        for (k, r) in Resource::ALL.iter().enumerate() {
            demand[l][t][k] += r.demand(j);
        }
    }
    let round3 = |v: f64| (v * 1000.0).round() / 1000.0;
    let mut dcs: Vec<DataCenterSpec> = (0..p.n_dc)
        .map(|l| {
            let peak = load[l].iter().cloned().fold(0.0, f64::max);
            let low = load[l].iter().cloned().fold(f64::INFINITY, f64::min);
            let cap = |k: usize| round3(1.6 * demand[l].iter().map(|d| d[k]).fold(0.0, f64::max)) + 1.0;
            let slot_energy = load[l].iter().sum::<f64>() / n_t as f64 * p.slot_hours;
            let band = round3(p.queue_band * slot_energy);
            DataCenterSpec {
                id: l + 1,
                bus: 0,
                cpu_cap: vec![cap(0); n_t],
                mem_cap: vec![cap(1); n_t],
                io_cap: vec![cap(2); n_t],
                p_min: vec![round3(0.3 * low); n_t],
                p_max: vec![round3(1.8 * peak); n_t],
                q_min: -band,
                q_max: band,
            }
        })
        .collect();

    let dc_peak: f64 = dcs.iter().map(|d| d.p_max[0]).sum();
    let mut grid_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(SEED_GRID));
    let mut grid = match p.grid {
        GridSource::Demo => demo_case(&base_profile(n_t, 150.0)),
        GridSource::Random => {
            let base_peak = 4.0 * dc_peak;
            let mut g = random_case(p.n_buses, p.n_generators, n_t, base_peak, &mut grid_rng);
            // generators were sized on base load; leave room for DC demand
            for gen in &mut g.generators {
                gen.p_max = (gen.p_max * (1.0 + dc_peak / base_peak)).round();
            }
            g
        }
    };
    let dc_buses: Vec<usize> = match p.grid {
        GridSource::Demo => vec![2, 4, 6],
        GridSource::Random => {
            let mut order: Vec<usize> = (1..=grid.buses.len()).collect();
            order.shuffle(&mut grid_rng);
            (0..p.n_dc).map(|l| order[l % order.len()]).collect()
        }
    };
    for (l, dc) in dcs.iter_mut().enumerate() {
        dc.bus = dc_buses[l];
    }
    for bus in &mut grid.buses {
        bus.dc_ids = dcs.iter().filter(|d| d.bus == bus.bus_id).map(|d| d.id).collect();
    }
    let problems = validate_case(&grid);
    if !problems.is_empty() {
        return Err(Error::Validation(format!("generated grid failed validation: {}", problems.join("; "))));
    }

    let x_base = baseline_assignment(&jobs, &latency, &dcs, n_t)?;
    let queues = QueueParameters::from_baseline(&dcs, &vec![0.0; p.n_dc], &jobs, &x_base)?;
    let n_samples = (p.trace_hours() * 3600.0 / p.signal_dt).round() as usize;
    let signal = generate(p.signal_kind, n_samples, p.signal_dt, seed.wrapping_add(SEED_SIGNAL));
    let inst = Instance { grid, jobs, latency, dcs, queues, signal };
    inst.validate()?;
    Ok(inst)
}
