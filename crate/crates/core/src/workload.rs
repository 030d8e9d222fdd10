//! Aggregated workload clusters, latency data and data-center capacities.
//!
//! Schedules are fractions `x[i][t][l]` of cluster `i` executed at data center
//! `l` in slot `t`. Public indices on this module are 0-based (`i`, `t`, `l`);
//! conversion to virtual node ids goes through [`SpaceTimeIndex`].

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::SpaceTimeIndex;

const KWH_PER_MWH: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlexClass {
    /// Pinned to its baseline placement.
    Fixed,
    /// Any data center, arrival slot only.
    Interactive,
    /// Any data center, any slot at or after arrival.
    Deferrable,
}

impl std::fmt::Display for FlexClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlexClass::Fixed => "fixed",
            FlexClass::Interactive => "interactive",
            FlexClass::Deferrable => "deferrable",
        })
    }
}

/// One CSV row / aggregated job cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobCluster {
    pub id: u32,
    pub user_region: u32,
    /// 1-based slot in which the cluster arrives.
    pub arrival_slot: usize,
    pub class: FlexClass,
    /// Task count.
    pub weight: f64,
    pub r_cpu: f64,
    pub r_mem: f64,
    pub r_io: f64,
    pub d_kwh_per_task: f64,
}

impl JobCluster {
    pub fn validate(&self, n_slots: usize) -> Result<()> {
        let fields = [
            ("weight", self.weight),
            ("r_cpu", self.r_cpu),
            ("r_mem", self.r_mem),
            ("r_io", self.r_io),
            ("d_kwh_per_task", self.d_kwh_per_task),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!("cluster {}: {name} = {v} must be ≥ 0", self.id)));
            }
        }
        if self.arrival_slot == 0 || self.arrival_slot > n_slots {
            return Err(Error::Invalid(format!(
                "cluster {}: arrival_slot {} outside 1..={n_slots}",
                self.id, self.arrival_slot
            )));
        }
        Ok(())
    }

    /// Energy of the whole cluster in MWh.
    pub fn energy_mwh(&self) -> f64 {
        self.weight * self.d_kwh_per_task / KWH_PER_MWH
    }

    /// Zero-based arrival slot.
    pub fn arrival(&self) -> usize {
        self.arrival_slot - 1
    }
}

/// User-region to data-center latency costs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyMap {
    entries: BTreeMap<(u32, usize), f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LatencyRow {
    user_region: u32,
    dc_id: usize,
    latency: f64,
}

impl LatencyMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// `dc_id` is 1-based.
    pub fn insert(&mut self, region: u32, dc_id: usize, latency: f64) {
        self.entries.insert((region, dc_id), latency);
    }

    /// Latency for region and 0-based data center index.
    pub fn get(&self, region: u32, l: usize) -> Result<f64> {
        self.entries
            .get(&(region, l + 1))
            .copied()
            .ok_or_else(|| Error::Invalid(format!("no latency entry for region {region}, dc {}", l + 1)))
    }

    pub fn regions(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.entries.keys().map(|k| k.0).collect();
        r.dedup();
        r
    }

    /// Checks non-negativity and completeness over `regions × 1..=n_dc`.
    pub fn validate(&self, regions: &[u32], n_dc: usize) -> Result<()> {
        for (&(r, l), &v) in &self.entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!("latency ({r}, {l}) = {v} must be ≥ 0")));
            }
        }
        for &r in regions {
            for l in 1..=n_dc {
                if !self.entries.contains_key(&(r, l)) {
                    return Err(Error::Invalid(format!("latency map missing ({r}, {l})")));
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut map = Self::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for (row_no, rec) in rdr.deserialize::<LatencyRow>().enumerate() {
            let row = rec.map_err(|e| Error::Parse { line: row_no + 2, detail: e.to_string() })?;
            map.insert(row.user_region, row.dc_id, row.latency);
        }
        Ok(map)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (&(user_region, dc_id), &latency) in &self.entries {
            wtr.serialize(LatencyRow { user_region, dc_id, latency })?;
        }
        wtr.flush().map_err(|e| Error::io("latency.csv", e))?;
        Ok(())
    }
}

pub fn read_workload_csv<R: Read>(reader: R) -> Result<Vec<JobCluster>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut jobs = Vec::new();
    for (row_no, rec) in rdr.deserialize::<JobCluster>().enumerate() {
        jobs.push(rec.map_err(|e| Error::Parse { line: row_no + 2, detail: e.to_string() })?);
    }
    Ok(jobs)
}

pub fn write_workload_csv<W: Write>(jobs: &[JobCluster], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for j in jobs {
        wtr.serialize(j)?;
    }
    wtr.flush().map_err(|e| Error::io("workload.csv", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenterSpec {
    /// 1-based data center id.
    pub id: usize,
    pub bus: usize,
    pub cpu_cap: Vec<f64>,
    pub mem_cap: Vec<f64>,
    pub io_cap: Vec<f64>,
    /// Power bounds in MW per slot.
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    /// Queue bounds in MWh-equivalent.
    pub q_min: f64,
    pub q_max: f64,
}

impl DataCenterSpec {
    pub fn validate(&self, n_slots: usize) -> Result<()> {
        let series = [
            ("cpu_cap", &self.cpu_cap),
            ("mem_cap", &self.mem_cap),
            ("io_cap", &self.io_cap),
            ("p_min", &self.p_min),
            ("p_max", &self.p_max),
        ];
        for (name, s) in series {
            if s.len() != n_slots {
                return Err(Error::Dimension(format!(
                    "dc {}: {name} has {} entries, expected {n_slots}",
                    self.id,
                    s.len()
                )));
            }
            if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Invalid(format!("dc {}: {name} must be finite and ≥ 0", self.id)));
            }
        }
        for t in 0..n_slots {
            if self.p_min[t] > self.p_max[t] {
                return Err(Error::Invalid(format!(
                    "dc {}: p_min {} > p_max {} at slot {}",
                    self.id,
                    self.p_min[t],
                    self.p_max[t],
                    t + 1
                )));
            }
        }
        if self.q_min > self.q_max {
            return Err(Error::Invalid(format!("dc {}: q_min > q_max", self.id)));
        }
        Ok(())
    }

    pub fn cap(&self, resource: Resource, t: usize) -> f64 {
        match resource {
            Resource::Cpu => self.cpu_cap[t],
            Resource::Mem => self.mem_cap[t],
            Resource::Io => self.io_cap[t],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Cpu,
    Mem,
    Io,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::Cpu, Resource::Mem, Resource::Io];

    pub fn demand(self, job: &JobCluster) -> f64 {
        let r = match self {
            Resource::Cpu => job.r_cpu,
            Resource::Mem => job.r_mem,
            Resource::Io => job.r_io,
        };
        r * job.weight
    }
}

impl std::fmt::Display for Resource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "cpu",
            Resource::Mem => "mem",
            Resource::Io => "io",
        })
    }
}

/// Dense `x[i][t][l]` fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMatrix {
    n_jobs: usize,
    n_slots: usize,
    n_dc: usize,
    data: Vec<f64>,
}

pub const COMPLETION_TOL: f64 = 1e-9;

impl ScheduleMatrix {
    pub fn zeros(n_jobs: usize, n_slots: usize, n_dc: usize) -> Self {
        Self { n_jobs, n_slots, n_dc, data: vec![0.0; n_jobs * n_slots * n_dc] }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_jobs, self.n_slots, self.n_dc)
    }

    #[inline]
    fn pos(&self, i: usize, t: usize, l: usize) -> usize {
        debug_assert!(i < self.n_jobs && t < self.n_slots && l < self.n_dc);
        (i * self.n_slots + t) * self.n_dc + l
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize, l: usize) -> f64 {
        self.data[self.pos(i, t, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, l: usize, v: f64) {
        let p = self.pos(i, t, l);
        self.data[p] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `a·self + (1-a)·other`.
    pub fn blend(&self, other: &Self, a: f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension("schedule shapes differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + (1.0 - a) * y).collect();
        Ok(Self { data, ..*self })
    }

    /// Nonzero entries as `(i, t, l, value)` with 0-based indices.
    pub fn triplets(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n_jobs {
            for t in 0..self.n_slots {
                for l in 0..self.n_dc {
                    let v = self.get(i, t, l);
                    if v != 0.0 {
                        out.push((i, t, l, v));
                    }
                }
            }
        }
        out
    }

    pub fn from_triplets(
        dims: (usize, usize, usize),
        triplets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let mut x = Self::zeros(dims.0, dims.1, dims.2);
        for &(i, t, l, v) in triplets {
            if i >= dims.0 || t >= dims.1 || l >= dims.2 {
                return Err(Error::Dimension(format!("triplet ({i},{t},{l}) outside {dims:?}")));
            }
            x.set(i, t, l, v);
        }
        Ok(x)
    }

    /// Σ_{t,l} x[i][t][l].
    pub fn completion(&self, i: usize) -> f64 {
        let start = i * self.n_slots * self.n_dc;
        self.data[start..start + self.n_slots * self.n_dc].iter().sum()
    }

    /// Checks `0 ≤ x ≤ 1` and per-cluster completion within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(v) = self.data.iter().find(|v| !(**v >= -tol && **v <= 1.0 + tol)) {
            return Err(Error::Invalid(format!("schedule entry {v} outside [0, 1]")));
        }
        for i in 0..self.n_jobs {
            let c = self.completion(i);
            if (c - 1.0).abs() > tol {
                return Err(Error::Invalid(format!("cluster index {i} completes {c}, expected 1")));
            }
        }
        Ok(())
    }
}

fn check_dims(x: &ScheduleMatrix, jobs: &[JobCluster], idx: &SpaceTimeIndex) -> Result<()> {
    let want = (jobs.len(), idx.n_slots(), idx.n_dc());
    if x.dims() != want {
        return Err(Error::Dimension(format!("schedule {:?} vs instance {:?}", x.dims(), want)));
    }
    Ok(())
}

/// Nodal DC load in MW, stored by 0-based node offset `l·T + t`.
pub fn aggregate_load(
    x: &ScheduleMatrix,
    jobs: &[JobCluster],
    idx: &SpaceTimeIndex,
    slot_hours: f64,
) -> Result<Vec<f64>> {
    check_dims(x, jobs, idx)?;
    if !(slot_hours > 0.0) {
        return Err(Error::Domain(format!("slot_hours must be > 0, got {slot_hours}")));
    }
    let mut load = vec![0.0; idx.node_count()];
    for (i, job) in jobs.iter().enumerate() {
        let mw = job.energy_mwh() / slot_hours;
        for t in 0..idx.n_slots() {
            for l in 0..idx.n_dc() {
                load[idx.offset(l, t)] += mw * x.get(i, t, l);
            }
        }
    }
    Ok(load)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub value: f64,
    /// Set when the slot carries no scheduled work; `value` is then 0.
    pub no_jobs: bool,
}

/// Schedule-weighted mean latency at 0-based slot `t`.
pub fn effective_latency(
    x: &ScheduleMatrix,
    jobs: &[JobCluster],
    t: usize,
    latmap: &LatencyMap,
) -> Result<Latency> {
    let (_, n_slots, n_dc) = x.dims();
    if t >= n_slots {
        return Err(Error::Domain(format!("slot {t} outside 0..{n_slots}")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, job) in jobs.iter().enumerate() {
        for l in 0..n_dc {
            let v = x.get(i, t, l);
            if v != 0.0 {
                num += latmap.get(job.user_region, l)? * v;
                den += v;
            }
        }
    }
    if den <= 0.0 {
        return Ok(Latency { value: 0.0, no_jobs: true });
    }
    Ok(Latency { value: num / den, no_jobs: false })
}

/// Σ_i x·weight·r for each resource at (l, t).
pub fn resource_usage(x: &ScheduleMatrix, jobs: &[JobCluster], l: usize, t: usize) -> (f64, f64, f64) {
    let mut usage = (0.0, 0.0, 0.0);
    for (i, job) in jobs.iter().enumerate() {
        let v = x.get(i, t, l);
        if v != 0.0 {
            usage.0 += v * job.weight * job.r_cpu;
            usage.1 += v * job.weight * job.r_mem;
            usage.2 += v * job.weight * job.r_io;
        }
    }
    usage
}

/// Per-slot `L_t − L̄_t`. Slots where either schedule is empty report 0.
pub fn qos_deviation(
    x: &ScheduleMatrix,
    x_base: &ScheduleMatrix,
    jobs: &[JobCluster],
    latmap: &LatencyMap,
) -> Result<Vec<f64>> {
    if x.dims() != x_base.dims() {
        return Err(Error::Dimension("schedule shapes differ".into()));
    }
    (0..x.dims().1)
        .map(|t| {
            let cur = effective_latency(x, jobs, t, latmap)?;
            let base = effective_latency(x_base, jobs, t, latmap)?;
            Ok(if cur.no_jobs || base.no_jobs { 0.0 } else { cur.value - base.value })
        })
        .collect()
}

pub fn qos_satisfied(deviation: &[f64], delta_qos: f64, tol: f64) -> bool {
    deviation.iter().all(|d| *d <= delta_qos + tol)
}

/// Why a baseline could not be built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub cluster_id: u32,
    pub slot: usize,
    pub resource: Resource,
    pub demand: f64,
    pub best_remaining: f64,
}

impl std::fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cluster {} cannot be placed at slot {}: {} demand {} exceeds best remaining {}",
            self.cluster_id, self.slot, self.resource, self.demand, self.best_remaining
        )
    }
}

/// Greedy nominal assignment: clusters in input order, each placed whole at
/// its arrival slot on the lowest-latency data center with room on every
/// resource (ties to the lowest id).
pub fn baseline_assignment(
    jobs: &[JobCluster],
    latmap: &LatencyMap,
    dcs: &[DataCenterSpec],
    n_slots: usize,
) -> Result<ScheduleMatrix> {
    let n_dc = dcs.len();
    for job in jobs {
        job.validate(n_slots)?;
    }
    for t in 0..n_slots {
        for r in Resource::ALL {
            let demand: f64 = jobs.iter().filter(|j| j.arrival() == t).map(|j| r.demand(j)).sum();
            let cap: f64 = dcs.iter().map(|d| d.cap(r, t)).sum();
            if demand > cap * (1.0 + 1e-12) {
                return Err(Error::Infeasible(format!(
                    "slot {}: aggregate {r} demand {demand} exceeds aggregate capacity {cap}",
                    t + 1
                )));
            }
        }
    }
    let mut used = vec![[0.0f64; 3]; n_dc * n_slots];
    let mut x = ScheduleMatrix::zeros(jobs.len(), n_slots, n_dc);
    for (i, job) in jobs.iter().enumerate() {
        let t = job.arrival();
        let mut order: Vec<(f64, usize)> =
            (0..n_dc).map(|l| Ok((latmap.get(job.user_region, l)?, l))).collect::<Result<_>>()?;
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let fits = |l: usize, used: &[[f64; 3]]| {
            Resource::ALL.iter().enumerate().all(|(k, r)| {
                used[l * n_slots + t][k] + r.demand(job) <= dcs[l].cap(*r, t) * (1.0 + 1e-12) + 1e-12
            })
        };
        match order.iter().find(|(_, l)| fits(*l, &used)) {
            Some(&(_, l)) => {
                for (k, r) in Resource::ALL.iter().enumerate() {
                    used[l * n_slots + t][k] += r.demand(job);
                }
                x.set(i, t, l, 1.0);
            }
            None => {
                let (resource, best_remaining) = Resource::ALL
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        let best = (0..n_dc)
                            .map(|l| dcs[l].cap(*r, t) - used[l * n_slots + t][k])
                            .fold(f64::NEG_INFINITY, f64::max);
                        (*r, best, r.demand(job) - best)
                    })
                    .max_by(|a, b| a.2.total_cmp(&b.2))
                    .map(|(r, best, _)| (r, best))
                    .expect("three resources");
                let report = InfeasibilityReport {
                    cluster_id: job.id,
                    slot: t + 1,
                    resource,
                    demand: resource.demand(job),
                    best_remaining,
                };
                return Err(Error::Infeasible(report.to_string()));
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn job(id: u32, region: u32, slot: usize, class: FlexClass, weight: f64, cpu: f64) -> JobCluster {
        JobCluster {
            id,
            user_region: region,
            arrival_slot: slot,
            class,
            weight,
            r_cpu: cpu,
            r_mem: cpu,
            r_io: 0.0,
            d_kwh_per_task: 1.7,
        }
    }

    fn dc(id: usize, cap: f64, n_slots: usize) -> DataCenterSpec {
        DataCenterSpec {
            id,
            bus: 1,
            cpu_cap: vec![cap; n_slots],
            mem_cap: vec![cap; n_slots],
            io_cap: vec![cap; n_slots],
            p_min: vec![0.0; n_slots],
            p_max: vec![100.0; n_slots],
            q_min: 0.0,
            q_max: 10.0,
        }
    }

    #[test]
    fn aggregate_load_examples() {
        let idx = SpaceTimeIndex::new(1, 1).unwrap();
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 1000.0, 0.0)];
        let mut x = ScheduleMatrix::zeros(1, 1, 1);
        x.set(0, 0, 0, 1.0);
        let load = aggregate_load(&x, &jobs, &idx, 1.0).unwrap();
        assert_abs_diff_eq!(load[0], 1.7, epsilon = 1e-12);

        let zero = ScheduleMatrix::zeros(1, 1, 1);
        assert_eq!(aggregate_load(&zero, &jobs, &idx, 1.0).unwrap(), vec![0.0]);

        let idx2 = SpaceTimeIndex::new(2, 1).unwrap();
        let jobs2 = vec![job(1, 1, 1, FlexClass::Fixed, 10.0, 0.0), job(2, 1, 1, FlexClass::Fixed, 10.0, 0.0)];
        let mut x2 = ScheduleMatrix::zeros(2, 1, 2);
        for i in 0..2 {
            x2.set(i, 0, 0, 0.5);
            x2.set(i, 0, 1, 0.5);
        }
        let l2 = aggregate_load(&x2, &jobs2, &idx2, 1.0).unwrap();
        assert_abs_diff_eq!(l2[0], l2[1], epsilon = 1e-15);
    }

    #[test]
    fn aggregate_load_dimension_mismatch() {
        let idx = SpaceTimeIndex::new(2, 2).unwrap();
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 1.0, 0.0)];
        let x = ScheduleMatrix::zeros(1, 1, 1);
        assert!(matches!(aggregate_load(&x, &jobs, &idx, 1.0), Err(Error::Dimension(_))));
    }

    fn latmap2() -> LatencyMap {
        let mut m = LatencyMap::new();
        m.insert(1, 1, 10.0);
        m.insert(1, 2, 20.0);
        m.insert(2, 1, 4.0);
        m.insert(2, 2, 8.0);
        m
    }

    #[test]
    fn effective_latency_examples() {
        let lm = latmap2();
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 1.0, 0.0), job(2, 1, 1, FlexClass::Fixed, 1.0, 0.0)];
        let mut x = ScheduleMatrix::zeros(2, 1, 2);
        x.set(0, 0, 0, 1.0);
        x.set(1, 0, 1, 1.0);
        assert_abs_diff_eq!(effective_latency(&x, &jobs, 0, &lm).unwrap().value, 15.0);

        let jobs = vec![job(1, 2, 1, FlexClass::Fixed, 1.0, 0.0)];
        let mut x = ScheduleMatrix::zeros(1, 1, 2);
        x.set(0, 0, 0, 0.25);
        x.set(0, 0, 1, 0.75);
        assert_abs_diff_eq!(effective_latency(&x, &jobs, 0, &lm).unwrap().value, 7.0);

        let empty = ScheduleMatrix::zeros(1, 1, 2);
        let lat = effective_latency(&empty, &jobs, 0, &lm).unwrap();
        assert!(lat.no_jobs);
        assert_eq!(lat.value, 0.0);
    }

    #[test]
    fn constant_latency_when_one_region_one_dc() {
        let mut lm = LatencyMap::new();
        lm.insert(1, 1, 5.0);
        lm.insert(1, 2, 9.0);
        let jobs: Vec<_> = (0..4).map(|k| job(k, 1, 1, FlexClass::Fixed, 1.0 + k as f64, 0.0)).collect();
        let mut x = ScheduleMatrix::zeros(4, 1, 2);
        for i in 0..4 {
            x.set(i, 0, 0, 1.0);
        }
        assert_abs_diff_eq!(effective_latency(&x, &jobs, 0, &lm).unwrap().value, 5.0);
        let mut moved = ScheduleMatrix::zeros(4, 1, 2);
        for i in 0..4 {
            moved.set(i, 0, 1, 1.0);
        }
        let dev = qos_deviation(&moved, &x, &jobs, &lm).unwrap();
        assert_abs_diff_eq!(dev[0], 4.0, epsilon = 1e-12);
        assert_eq!(qos_deviation(&x, &x, &jobs, &lm).unwrap(), vec![0.0]);
    }

    #[test]
    fn resource_usage_examples() {
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 10.0, 2.0)];
        let mut x = ScheduleMatrix::zeros(1, 1, 1);
        assert_eq!(resource_usage(&x, &jobs, 0, 0), (0.0, 0.0, 0.0));
        x.set(0, 0, 0, 0.5);
        assert_eq!(resource_usage(&x, &jobs, 0, 0).0, 10.0);
    }

    #[test]
    fn baseline_single_job() {
        let lm = latmap2();
        let jobs = vec![job(1, 1, 2, FlexClass::Deferrable, 5.0, 1.0)];
        let dcs = vec![dc(1, 100.0, 3)];
        let mut lm1 = LatencyMap::new();
        lm1.insert(1, 1, 3.0);
        let x = baseline_assignment(&jobs, &lm1, &dcs, 3).unwrap();
        assert_eq!(x.get(0, 1, 0), 1.0);
        x.validate(COMPLETION_TOL).unwrap();
        let _ = lm;
    }

    #[test]
    fn baseline_spills_when_nearest_full() {
        let lm = latmap2();
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 10.0, 1.0), job(2, 1, 1, FlexClass::Fixed, 10.0, 1.0)];
        let dcs = vec![dc(1, 15.0, 1), dc(2, 15.0, 1)];
        let x = baseline_assignment(&jobs, &lm, &dcs, 1).unwrap();
        assert_eq!(x.get(0, 0, 0), 1.0);
        assert_eq!(x.get(1, 0, 1), 1.0);
    }

    #[test]
    fn baseline_reports_infeasibility() {
        let lm = latmap2();
        let jobs = vec![job(1, 1, 1, FlexClass::Fixed, 10.0, 1.0), job(7, 1, 1, FlexClass::Fixed, 10.0, 1.0)];
        let dcs = vec![dc(1, 12.0, 1), dc(2, 9.0, 1)];
        match baseline_assignment(&jobs, &lm, &dcs, 1) {
            Err(Error::Infeasible(msg)) => {
                assert!(msg.contains("cluster 7"), "{msg}");
                assert!(msg.contains("slot 1"), "{msg}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        let dcs = vec![dc(1, 5.0, 1), dc(2, 5.0, 1)];
        assert!(matches!(baseline_assignment(&jobs, &lm, &dcs, 1), Err(Error::Infeasible(_))));
    }

    /// Exhaustive minimum-latency integral assignment for a tiny instance.
    #[test]
    fn baseline_matches_bruteforce_on_tiny_instance() {
        let mut lm = LatencyMap::new();
        lm.insert(1, 1, 2.0);
        lm.insert(1, 2, 6.0);
        lm.insert(2, 1, 5.0);
        lm.insert(2, 2, 1.0);
        let jobs = vec![
            job(1, 1, 1, FlexClass::Fixed, 4.0, 1.0),
            job(2, 2, 1, FlexClass::Fixed, 3.0, 1.0),
            job(3, 1, 1, FlexClass::Fixed, 5.0, 1.0),
        ];
        let dcs = vec![dc(1, 9.0, 1), dc(2, 8.0, 1)];
        let x = baseline_assignment(&jobs, &lm, &dcs, 1).unwrap();
        let greedy: f64 = jobs
            .iter()
            .enumerate()
            .map(|(i, j)| (0..2).map(|l| x.get(i, 0, l) * lm.get(j.user_region, l).unwrap()).sum::<f64>())
            .sum();
        let mut best = f64::INFINITY;
        for code in 0..8u32 {
            let assign: Vec<usize> = (0..3).map(|i| ((code >> i) & 1) as usize).collect();
            let mut used = [0.0; 2];
            for (i, &l) in assign.iter().enumerate() {
                used[l] += jobs[i].weight * jobs[i].r_cpu;
            }
            if used[0] <= 9.0 && used[1] <= 8.0 {
                let lat: f64 = assign.iter().enumerate().map(|(i, &l)| lm.get(jobs[i].user_region, l).unwrap()).sum();
                best = best.min(lat);
            }
        }
        assert_abs_diff_eq!(greedy, best, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let jobs = vec![job(1, 3, 2, FlexClass::Interactive, 12.5, 0.25)];
        let mut buf = Vec::new();
        write_workload_csv(&jobs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,user_region,arrival_slot,class,weight,r_cpu,r_mem,r_io,d_kwh_per_task"));
        assert_eq!(read_workload_csv(buf.as_slice()).unwrap(), jobs);

        let lm = latmap2();
        let mut buf = Vec::new();
        lm.write_csv(&mut buf).unwrap();
        assert_eq!(LatencyMap::read_csv(buf.as_slice()).unwrap(), lm);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "id,user_region,arrival_slot,class,weight,r_cpu,r_mem,r_io,d_kwh_per_task\n1,1,1,fixed,1,1,1,1,1.7\n2,1,1,bogus,1,1,1,1,1.7\n";
        match read_workload_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn aggregate_load_is_linear(a in 0.0f64..=1.0, seed_a in proptest::collection::vec(0.0f64..1.0, 12),
                                        seed_b in proptest::collection::vec(0.0f64..1.0, 12)) {
                let idx = SpaceTimeIndex::new(2, 3).unwrap();
                let jobs = vec![job(1, 1, 1, FlexClass::Deferrable, 700.0, 0.0), job(2, 2, 2, FlexClass::Deferrable, 300.0, 0.0)];
                let mk = |v: &[f64]| {
                    let mut x = ScheduleMatrix::zeros(2, 3, 2);
                    let mut k = 0;
                    for i in 0..2 { for t in 0..3 { for l in 0..2 { x.set(i, t, l, v[k % v.len()]); k += 1; } } }
                    x
                };
                let (x1, x2) = (mk(&seed_a), mk(&seed_b));
                let mix = aggregate_load(&x1.blend(&x2, a).unwrap(), &jobs, &idx, 1.0).unwrap();
                let l1 = aggregate_load(&x1, &jobs, &idx, 1.0).unwrap();
                let l2 = aggregate_load(&x2, &jobs, &idx, 1.0).unwrap();
                for k in 0..mix.len() {
                    prop_assert!((mix[k] - (a * l1[k] + (1.0 - a) * l2[k])).abs() <= 1e-9);
                }
            }
        }
    }
}
