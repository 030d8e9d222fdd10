//! A complete problem instance and its on-disk bundle layout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{validate_attachments, validate_case, GridCase};
use crate::optimizer::config::{DcQueue, QueueParameters};
use crate::signal::RegulationTrace;
use crate::spacetime::SpaceTimeIndex;
use crate::workload::{
    baseline_assignment, read_workload_csv, write_workload_csv, DataCenterSpec, JobCluster, LatencyMap,
    ScheduleMatrix,
};

pub const GRID_FILE: &str = "grid.json";
pub const WORKLOAD_FILE: &str = "workload.csv";
pub const LATENCY_FILE: &str = "latency.csv";
pub const SIGNAL_FILE: &str = "signal.csv";
pub const DC_FILE: &str = "dc.json";
pub const CONFIG_FILE: &str = "config.json";

/// The data files of a bundle, in write order (config excluded).
pub const BUNDLE_FILES: [&str; 5] = [GRID_FILE, WORKLOAD_FILE, LATENCY_FILE, SIGNAL_FILE, DC_FILE];

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub grid: GridCase,
    pub jobs: Vec<JobCluster>,
    pub latency: LatencyMap,
    pub dcs: Vec<DataCenterSpec>,
    pub queues: QueueParameters,
    pub signal: RegulationTrace,
}

/// Queue entry as stored in `dc.json`; arrivals default to baseline energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub dc_id: usize,
    pub q0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcFile {
    pub data_centers: Vec<DataCenterSpec>,
    pub queues: Vec<QueueEntry>,
}

impl Instance {
    pub fn n_dc(&self) -> usize {
        self.dcs.len()
    }

    pub fn n_slots(&self) -> usize {
        self.grid.n_slots()
    }

    pub fn index(&self) -> Result<SpaceTimeIndex> {
        SpaceTimeIndex::new(self.n_dc(), self.n_slots())
    }

    pub fn baseline(&self) -> Result<ScheduleMatrix> {
        baseline_assignment(&self.jobs, &self.latency, &self.dcs, self.n_slots())
    }

    pub fn max_generator_cost(&self) -> f64 {
        self.grid.generators.iter().map(|g| g.cost_per_mwh).fold(0.0, f64::max)
    }

    /// Bus position (in case order) of each data center.
    pub fn dc_bus_positions(&self) -> Result<Vec<usize>> {
        self.dcs
            .iter()
            .map(|d| {
                self.grid
                    .bus_position(d.bus)
                    .ok_or_else(|| Error::Invalid(format!("dc {} attached to unknown bus {}", d.id, d.bus)))
            })
            .collect()
    }

    /// Runs every module validator and collects all problems.
    pub fn validate(&self) -> Result<()> {
        let mut problems = validate_case(&self.grid);
        let n_slots = self.n_slots();
        if n_slots == 0 {
            problems.push("grid case has no slots".into());
        }
        for (k, d) in self.dcs.iter().enumerate() {
            if d.id != k + 1 {
                problems.push(format!("data center ids must be 1..N in order; found {} at position {}", d.id, k + 1));
            }
            if let Err(e) = d.validate(n_slots) {
                problems.push(e.to_string());
            }
        }
        let pairs: Vec<(usize, usize)> = self.dcs.iter().map(|d| (d.id, d.bus)).collect();
        problems.extend(validate_attachments(&self.grid, &pairs));
        let mut seen = std::collections::BTreeSet::new();
        for j in &self.jobs {
            if !seen.insert(j.id) {
                problems.push(format!("duplicate cluster id {}", j.id));
            }
            if let Err(e) = j.validate(n_slots) {
                problems.push(e.to_string());
            }
        }
        let regions: Vec<u32> = self.jobs.iter().map(|j| j.user_region).collect();
        if let Err(e) = self.latency.validate(&regions, self.n_dc()) {
            problems.push(e.to_string());
        }
        if let Err(e) = self.queues.validate(self.n_dc(), n_slots) {
            problems.push(e.to_string());
        }
        if let Err(e) = self.signal.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            if let Err(e) = self.baseline() {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| Error::io(dir.join(name), e));
        let grid = GridCase::read_json(&read(GRID_FILE)?)?;
        let jobs = read_workload_csv(read(WORKLOAD_FILE)?.as_bytes())?;
        let latency = LatencyMap::read_csv(read(LATENCY_FILE)?.as_bytes())?;
        let signal = RegulationTrace::read_csv(read(SIGNAL_FILE)?.as_bytes())?;
        let dc_file: DcFile = serde_json::from_str(&read(DC_FILE)?)?;
        let queues = resolve_queues(&dc_file, &jobs, &latency, grid.n_slots())?;
        Ok(Self { grid, jobs, latency, dcs: dc_file.data_centers, queues, signal })
    }

    /// Writes the five instance files (config is written by the caller).
    pub fn write_dir(&self, dir: &Path, explicit_arrivals: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, bytes: &[u8]| fs::write(dir.join(name), bytes).map_err(|e| Error::io(dir.join(name), e));
        write(GRID_FILE, (self.grid.to_json()? + "\n").as_bytes())?;
        let mut buf = Vec::new();
        write_workload_csv(&self.jobs, &mut buf)?;
        write(WORKLOAD_FILE, &buf)?;
        let mut buf = Vec::new();
        self.latency.write_csv(&mut buf)?;
        write(LATENCY_FILE, &buf)?;
        let mut buf = Vec::new();
        self.signal.write_csv(&mut buf)?;
        write(SIGNAL_FILE, &buf)?;
        let dc_file = DcFile {
            data_centers: self.dcs.clone(),
            queues: self
                .queues
                .dcs
                .iter()
                .enumerate()
                .map(|(l, q)| QueueEntry {
                    dc_id: l + 1,
                    q0: q.q0,
                    arrivals: explicit_arrivals.then(|| q.arrivals.clone()),
                })
                .collect(),
        };
        write(DC_FILE, (serde_json::to_string_pretty(&dc_file)? + "\n").as_bytes())?;
        Ok(())
    }
}

fn resolve_queues(dc_file: &DcFile, jobs: &[JobCluster], latency: &LatencyMap, n_slots: usize) -> Result<QueueParameters> {
    let dcs = &dc_file.data_centers;
    if dc_file.queues.len() != dcs.len() {
        return Err(Error::Dimension(format!(
            "dc.json lists {} queues for {} data centers",
            dc_file.queues.len(),
            dcs.len()
        )));
    }
    let mut entries = dc_file.queues.clone();
    entries.sort_by_key(|q| q.dc_id);
    let base_arrivals = if entries.iter().any(|q| q.arrivals.is_none()) {
        let x_base = baseline_assignment(jobs, latency, dcs, n_slots)?;
        let q0: Vec<f64> = entries.iter().map(|q| q.q0).collect();
        Some(QueueParameters::from_baseline(dcs, &q0, jobs, &x_base)?)
    } else {
        None
    };
    let queues = entries
        .iter()
        .enumerate()
        .map(|(l, q)| {
            if q.dc_id != l + 1 {
                return Err(Error::Invalid(format!("queue entry for unknown dc {}", q.dc_id)));
            }
            let arrivals = match (&q.arrivals, &base_arrivals) {
                (Some(a), _) => a.clone(),
                (None, Some(b)) => b.dcs[l].arrivals.clone(),
                (None, None) => unreachable!("baseline arrivals computed when any entry lacks them"),
            };
            Ok(DcQueue { q0: q.q0, arrivals, q_min: dcs[l].q_min, q_max: dcs[l].q_max })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueueParameters { dcs: queues })
}
