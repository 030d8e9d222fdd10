//! Transmission case data and DC power-flow physics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub bus_id: usize,
    /// Non-DC demand in MW per slot.
    pub base_load: Vec<f64>,
    #[serde(default)]
    pub generator_ids: Vec<usize>,
    #[serde(default)]
    pub dc_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub line_id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Per-unit on the case MVA base.
    pub susceptance: f64,
    /// MW.
    pub flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub gen_id: usize,
    pub bus_id: usize,
    pub cost_per_mwh: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// MW per slot while online.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// MW reachable in the slot a unit starts / the slot before it stops.
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    /// State before slot 1; when absent no ramp limit applies to slot 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_output: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    #[serde(default = "default_mva_base")]
    pub mva_base: f64,
    pub slack_bus: usize,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

fn default_mva_base() -> f64 {
    100.0
}

/// `mva_base·B·(θ_b − θ_j)` in MW, positive from `b` to `j`.
pub fn line_flow(theta_b: f64, theta_j: f64, line: &Line, mva_base: f64) -> f64 {
    mva_base * line.susceptance * (theta_b - theta_j)
}

/// Solved dispatch quantities indexed `[g][t]` / `[b][t]` in case order.
#[derive(Debug, Clone, Copy)]
pub struct GridState<'a> {
    pub p: &'a [Vec<f64>],
    pub theta: &'a [Vec<f64>],
    pub q: &'a [Vec<f64>],
}

impl GridCase {
    pub fn n_slots(&self) -> usize {
        self.buses.first().map_or(0, |b| b.base_load.len())
    }

    pub fn bus_position(&self, bus_id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.bus_id == bus_id)
    }

    pub fn line_endpoints(&self, line: &Line) -> Result<(usize, usize)> {
        match (self.bus_position(line.from_bus), self.bus_position(line.to_bus)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Invalid(format!("line {} references unknown bus", line.line_id))),
        }
    }

    pub fn read_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per (bus, slot): `Σ gen − Σ DC load − base + shed − Σ outgoing flow`.
    /// `dc_load[b][t]` is the DC demand attached to bus position `b`.
    pub fn power_balance_residual(&self, state: GridState<'_>, dc_load: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n_b = self.buses.len();
        let n_t = self.n_slots();
        let dims_ok = state.p.len() == self.generators.len()
            && state.theta.len() == n_b
            && state.q.len() == n_b
            && dc_load.len() == n_b
            && state.p.iter().chain(state.theta).chain(state.q).chain(dc_load).all(|v| v.len() == n_t);
        if !dims_ok {
            return Err(Error::Dimension("dispatch arrays do not match the grid case".into()));
        }
        let mut res: Vec<Vec<f64>> = (0..n_b)
            .map(|b| (0..n_t).map(|t| state.q[b][t] - dc_load[b][t] - self.buses[b].base_load[t]).collect())
            .collect();
        for (g, gen) in self.generators.iter().enumerate() {
            let b = self
                .bus_position(gen.bus_id)
                .ok_or_else(|| Error::Invalid(format!("generator {} on unknown bus", gen.gen_id)))?;
            for t in 0..n_t {
                res[b][t] += state.p[g][t];
            }
        }
        for line in &self.lines {
            let (a, b) = self.line_endpoints(line)?;
            for t in 0..n_t {
                let f = line_flow(state.theta[a][t], state.theta[b][t], line, self.mva_base);
                res[a][t] -= f;
                res[b][t] += f;
            }
        }
        Ok(res)
    }
}

/// Every problem found in a case; empty when valid.
pub fn validate_case(case: &GridCase) -> Vec<String> {
    let mut v = Vec::new();
    let n_t = case.n_slots();
    let mut ids = BTreeSet::new();
    for bus in &case.buses {
        if !ids.insert(bus.bus_id) {
            v.push(format!("duplicate bus id {}", bus.bus_id));
        }
        if bus.base_load.len() != n_t {
            v.push(format!("bus {}: base_load has {} slots, expected {n_t}", bus.bus_id, bus.base_load.len()));
        }
        if bus.base_load.iter().any(|x| !(*x >= 0.0)) {
            v.push(format!("bus {}: negative base load", bus.bus_id));
        }
    }
    if case.buses.is_empty() {
        v.push("case has no buses".into());
    }
    if !ids.contains(&case.slack_bus) {
        v.push(format!("slack bus {} does not exist", case.slack_bus));
    }
    if !(case.mva_base > 0.0) {
        v.push("mva_base must be > 0".into());
    }
    for line in &case.lines {
        if !ids.contains(&line.from_bus) || !ids.contains(&line.to_bus) {
            v.push(format!("line {} references a missing bus", line.line_id));
        }
        if line.from_bus == line.to_bus {
            v.push(format!("line {} is a self-loop", line.line_id));
        }
        if !(line.susceptance > 0.0) {
            v.push(format!("line {}: susceptance must be > 0", line.line_id));
        }
        if !(line.flow_limit > 0.0) {
            v.push(format!("line {}: flow limit must be > 0", line.line_id));
        }
    }
    let mut listed: BTreeMap<usize, usize> = BTreeMap::new();
    for bus in &case.buses {
        for g in &bus.generator_ids {
            listed.insert(*g, bus.bus_id);
        }
    }
    for gen in &case.generators {
        if !ids.contains(&gen.bus_id) {
            v.push(format!("generator {} references missing bus {}", gen.gen_id, gen.bus_id));
        }
        if let Some(&b) = listed.get(&gen.gen_id) {
            if b != gen.bus_id {
                v.push(format!("generator {} listed on bus {b} but attached to {}", gen.gen_id, gen.bus_id));
            }
        }
        if !(0.0 <= gen.p_min && gen.p_min <= gen.p_max) {
            v.push(format!("generator {}: need 0 ≤ p_min ≤ p_max", gen.gen_id));
        }
        let ramps = [gen.ramp_up, gen.ramp_down, gen.startup_ramp, gen.shutdown_ramp];
        if ramps.iter().any(|r| !(*r >= 0.0)) {
            v.push(format!("generator {}: ramps must be ≥ 0", gen.gen_id));
        }
    }
    for (&g, &b) in &listed {
        if !case.generators.iter().any(|gen| gen.gen_id == g) {
            v.push(format!("bus {b} lists unknown generator {g}"));
        }
    }
    // connectivity by BFS over lines
    if !case.buses.is_empty() {
        let pos: BTreeMap<usize, usize> = case.buses.iter().enumerate().map(|(k, b)| (b.bus_id, k)).collect();
        let mut adj = vec![Vec::new(); case.buses.len()];
        for line in &case.lines {
            if let (Some(&a), Some(&b)) = (pos.get(&line.from_bus), pos.get(&line.to_bus)) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; case.buses.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        let unreached = seen.iter().filter(|s| !**s).count();
        if unreached > 0 {
            v.push(format!("grid is disconnected: {unreached} bus(es) unreachable from bus {}", case.buses[0].bus_id));
        }
    }
    v
}

/// Checks that every data center bus exists and bus `dc_ids` lists agree.
pub fn validate_attachments(case: &GridCase, dc_buses: &[(usize, usize)]) -> Vec<String> {
    let mut v = Vec::new();
    for &(dc, bus) in dc_buses {
        match case.buses.iter().find(|b| b.bus_id == bus) {
            None => v.push(format!("data center {dc} references missing bus {bus}")),
            Some(b) if !b.dc_ids.is_empty() && !b.dc_ids.contains(&dc) => {
                v.push(format!("bus {bus} does not list data center {dc}"))
            }
            _ => {}
        }
    }
    v
}

/// Six-bus, two-generator reduction with three DC buses (2, 4, 6).
///
/// Bus 1 hosts a cheap base unit and bus 5 a peaking unit; the 1–2–3 and
/// 4–5–6 halves are joined by two weaker tie lines.
pub fn demo_case(base_profile: &[f64]) -> GridCase {
    let shares = [0.10, 0.20, 0.25, 0.15, 0.10, 0.20];
    let buses = shares
        .iter()
        .enumerate()
        .map(|(k, s)| Bus {
            bus_id: k + 1,
            base_load: base_profile.iter().map(|p| p * s).collect(),
            generator_ids: match k {
                0 => vec![1],
                4 => vec![2],
                _ => vec![],
            },
            dc_ids: match k {
                1 => vec![1],
                3 => vec![2],
                5 => vec![3],
                _ => vec![],
            },
        })
        .collect();
    let line = |id, a, b, x: f64, lim| Line { line_id: id, from_bus: a, to_bus: b, susceptance: 1.0 / x, flow_limit: lim };
    GridCase {
        mva_base: 100.0,
        slack_bus: 1,
        buses,
        lines: vec![
            line(1, 1, 2, 0.10, 120.0),
            line(2, 2, 3, 0.12, 100.0),
            line(3, 1, 3, 0.15, 100.0),
            line(4, 3, 4, 0.25, 45.0),
            line(5, 4, 5, 0.10, 120.0),
            line(6, 5, 6, 0.12, 100.0),
            line(7, 6, 2, 0.30, 40.0),
        ],
        generators: vec![
            Generator {
                gen_id: 1,
                bus_id: 1,
                cost_per_mwh: 22.0,
                p_min: 20.0,
                p_max: 140.0,
                ramp_up: 60.0,
                ramp_down: 60.0,
                startup_ramp: 60.0,
                shutdown_ramp: 60.0,
                initial_output: None,
            },
            Generator {
                gen_id: 2,
                bus_id: 5,
                cost_per_mwh: 48.0,
                p_min: 10.0,
                p_max: 120.0,
                ramp_up: 80.0,
                ramp_down: 80.0,
                startup_ramp: 80.0,
                shutdown_ramp: 80.0,
                initial_output: None,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_bus(load: f64) -> GridCase {
        GridCase {
            mva_base: 100.0,
            slack_bus: 1,
            buses: vec![Bus { bus_id: 1, base_load: vec![load], generator_ids: vec![1], dc_ids: vec![] }],
            lines: vec![],
            generators: vec![Generator {
                gen_id: 1,
                bus_id: 1,
                cost_per_mwh: 10.0,
                p_min: 0.0,
                p_max: 10.0,
                ramp_up: 10.0,
                ramp_down: 10.0,
                startup_ramp: 10.0,
                shutdown_ramp: 10.0,
                initial_output: None,
            }],
        }
    }

    #[test]
    fn line_flow_examples() {
        let line = Line { line_id: 1, from_bus: 1, to_bus: 2, susceptance: 10.0, flow_limit: 5.0 };
        assert_abs_diff_eq!(line_flow(0.1, 0.0, &line, 1.0), 1.0, epsilon = 1e-15);
        assert_eq!(line_flow(0.3, 0.3, &line, 100.0), 0.0);
        assert_eq!(line_flow(0.2, -0.1, &line, 100.0), -line_flow(-0.1, 0.2, &line, 100.0));
    }

    #[test]
    fn residual_examples() {
        let case = one_bus(0.0);
        let p = vec![vec![5.0]];
        let zero = vec![vec![0.0]];
        let r = case
            .power_balance_residual(GridState { p: &p, theta: &zero, q: &zero }, &[vec![5.0]])
            .unwrap();
        assert_eq!(r, vec![vec![0.0]]);

        let case = one_bus(3.0);
        let p0 = vec![vec![0.0]];
        let q = vec![vec![3.0]];
        let r = case.power_balance_residual(GridState { p: &p0, theta: &zero, q: &q }, &[vec![0.0]]).unwrap();
        assert_eq!(r, vec![vec![0.0]]);

        assert!(case.power_balance_residual(GridState { p: &[], theta: &zero, q: &q }, &[vec![0.0]]).is_err());
    }

    #[test]
    fn residual_flows_telescope() {
        let case = demo_case(&[100.0, 140.0]);
        let theta: Vec<Vec<f64>> = (0..6).map(|b| vec![0.01 * b as f64, -0.02 * b as f64]).collect();
        let p = vec![vec![70.0, 90.0], vec![40.0, 55.0]];
        let q: Vec<Vec<f64>> = (0..6).map(|b| vec![b as f64 * 0.5, 0.0]).collect();
        let dc: Vec<Vec<f64>> = (0..6).map(|b| vec![b as f64, 2.0 * b as f64]).collect();
        let r = case.power_balance_residual(GridState { p: &p, theta: &theta, q: &q }, &dc).unwrap();
        for t in 0..2 {
            let total: f64 = (0..6).map(|b| r[b][t]).sum();
            let expect = p[0][t] + p[1][t] - (0..6).map(|b| dc[b][t] + case.buses[b].base_load[t]).sum::<f64>()
                + (0..6).map(|b| q[b][t]).sum::<f64>();
            assert!((total - expect).abs() <= 1e-9);
        }
    }

    #[test]
    fn demo_case_is_valid() {
        assert!(validate_case(&demo_case(&[100.0; 4])).is_empty());
        let case = demo_case(&[1.0]);
        let json = case.to_json().unwrap();
        assert_eq!(GridCase::read_json(&json).unwrap(), case);
    }

    #[test]
    fn dangling_generator_bus() {
        let mut case = demo_case(&[100.0]);
        case.generators[1].bus_id = 42;
        case.buses[4].generator_ids.clear();
        let v = validate_case(&case);
        assert_eq!(v.len(), 1, "{v:?}");
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let mut case = demo_case(&[100.0]);
        case.lines.retain(|l| l.line_id != 4 && l.line_id != 7);
        let v = validate_case(&case);
        assert!(v.iter().any(|m| m.contains("disconnected")), "{v:?}");
    }

    #[test]
    fn removing_a_bridge_disconnects() {
        let mut case = demo_case(&[1.0]);
        // drop one tie: still connected
        case.lines.retain(|l| l.line_id != 7);
        assert!(validate_case(&case).is_empty());
        // drop the remaining tie: disconnected
        case.lines.retain(|l| l.line_id != 4);
        assert!(!validate_case(&case).is_empty());
    }
}
