//! Solved decision variables and their cost breakdown.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::workload::ScheduleMatrix;

use super::build::{BuiltModel, Dispatch};
use super::config::{ModelConfig, ShiftingMode, SignalModel, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub generation_cost: f64,
    pub penalty_cost: f64,
    pub regulation_revenue: f64,
}

impl CostBreakdown {
    pub fn net(&self) -> f64 {
        self.generation_cost + self.penalty_cost - self.regulation_revenue
    }
}

/// Provenance of a solution: how it was configured and produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub strategy: Strategy,
    pub shifting_mode: ShiftingMode,
    pub signal_model: SignalModel,
    pub eps_p: f64,
    pub eps_e: f64,
    pub slot_hours: f64,
    /// Coefficient of R in the instantaneous chance rows.
    pub chance_coefficient: f64,
    pub m_bar: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SolutionFile", try_from = "SolutionFile")]
pub struct Solution {
    pub status: SolveStatus,
    pub x: ScheduleMatrix,
    /// `[l][t]` committed regulation capacity, MW.
    pub r: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub objective_total: f64,
    pub breakdown: CostBreakdown,
    pub meta: SolutionMeta,
}

/// One nonzero schedule entry with 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XEntry {
    pub cluster: usize,
    pub slot: usize,
    pub dc: usize,
    pub value: f64,
}

/// On-disk layout of a solution (sparse schedule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective_total: f64,
    pub breakdown: CostBreakdown,
    pub meta: SolutionMeta,
    /// `[n_clusters, n_slots, n_dc]`.
    pub x_dims: [usize; 3],
    pub x: Vec<XEntry>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl From<Solution> for SolutionFile {
    fn from(s: Solution) -> Self {
        let (a, b, c) = s.x.dims();
        let x = s
            .x
            .triplets()
            .into_iter()
            .map(|(i, t, l, value)| XEntry { cluster: i + 1, slot: t + 1, dc: l + 1, value })
            .collect();
        Self {
            status: s.status,
            objective_total: s.objective_total,
            breakdown: s.breakdown,
            meta: s.meta,
            x_dims: [a, b, c],
            x,
            r: s.r,
            p: s.p,
            u: s.u,
            theta: s.theta,
            q: s.q,
        }
    }
}

impl TryFrom<SolutionFile> for Solution {
    type Error = Error;
    fn try_from(f: SolutionFile) -> Result<Self> {
        let [a, b, c] = f.x_dims;
        let trip: Vec<(usize, usize, usize, f64)> = f
            .x
            .iter()
            .map(|e| {
                if e.cluster == 0 || e.slot == 0 || e.dc == 0 {
                    return Err(Error::Invalid("schedule entries use 1-based indices".into()));
                }
                Ok((e.cluster - 1, e.slot - 1, e.dc - 1, e.value))
            })
            .collect::<Result<_>>()?;
        let x = ScheduleMatrix::from_triplets((a, b, c), &trip)?;
        if f.r.len() != c || f.r.iter().any(|row| row.len() != b) {
            return Err(Error::Dimension("R must be [n_dc][n_slots]".into()));
        }
        Ok(Self {
            status: f.status,
            x,
            r: f.r,
            p: f.p,
            u: f.u,
            theta: f.theta,
            q: f.q,
            objective_total: f.objective_total,
            breakdown: f.breakdown,
            meta: f.meta,
        })
    }
}

impl Solution {
    pub fn dispatch(&self) -> Dispatch {
        Dispatch { p: self.p.clone(), u: self.u.clone(), theta: self.theta.clone(), q: self.q.clone() }
    }

    pub fn total_regulation(&self) -> f64 {
        self.r.iter().flatten().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Unpacks solver values and recomputes the cost breakdown from them.
    pub fn from_values(
        inst: &Instance,
        cfg: &ModelConfig,
        built: &BuiltModel,
        values: &[f64],
        status: SolveStatus,
        stats: (usize, usize),
    ) -> Result<Self> {
        let lay = built.layout;
        if values.len() != lay.variable_count() {
            return Err(Error::Dimension(format!(
                "solver returned {} values for {} variables",
                values.len(),
                lay.variable_count()
            )));
        }
        let (n_j, n_t, n_l) = (lay.n_jobs, lay.n_slots, lay.n_dc);
        let mut x = ScheduleMatrix::zeros(n_j, n_t, n_l);
        for i in 0..n_j {
            for t in 0..n_t {
                for l in 0..n_l {
                    let v = values[lay.x(i, t, l)];
                    let v = if cfg.integral_x { v.round() } else { v };
                    x.set(i, t, l, clean(v));
                }
            }
        }
        let grab = |n: usize, f: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<f64>> {
            (0..n).map(|a| (0..n_t).map(|t| clean(values[f(a, t)])).collect()).collect()
        };
        let r = grab(n_l, &|l, t| lay.r(l, t));
        let p = grab(lay.n_gen, &|g, t| lay.p(g, t));
        let u: Vec<Vec<f64>> = grab(lay.n_gen, &|g, t| lay.u(g, t)).into_iter().map(|row| row.into_iter().map(f64::round).collect()).collect();
        let theta = grab(lay.n_bus, &|b, t| lay.theta(b, t));
        let q = grab(lay.n_bus, &|b, t| lay.q(b, t));
        let breakdown = cost_breakdown(inst, cfg, built.m_bar, &r, &p, &q);
        Ok(Self {
            status,
            x,
            r,
            p,
            u,
            theta,
            q,
            objective_total: breakdown.net(),
            breakdown,
            meta: SolutionMeta {
                strategy: cfg.strategy,
                shifting_mode: cfg.shifting_mode,
                signal_model: cfg.signal_model,
                eps_p: cfg.eps_p,
                eps_e: cfg.eps_e,
                slot_hours: cfg.slot_hours,
                chance_coefficient: built.chance_coefficient,
                m_bar: built.m_bar,
                nodes: stats.0,
                lp_iterations: stats.1,
            },
        })
    }
}

/// Zeroes float dust so exported artifacts stay stable.
fn clean(v: f64) -> f64 {
    if v.abs() < 1e-12 { 0.0 } else { v }
}

pub fn cost_breakdown(
    inst: &Instance,
    cfg: &ModelConfig,
    m_bar: f64,
    r: &[Vec<f64>],
    p: &[Vec<f64>],
    q: &[Vec<f64>],
) -> CostBreakdown {
    let h = cfg.slot_hours;
    let generation_cost = inst
        .grid
        .generators
        .iter()
        .zip(p)
        .map(|(g, row)| row.iter().map(|v| h * g.cost_per_mwh * v).sum::<f64>())
        .sum();
    let penalty_cost = q.iter().flatten().map(|v| h * cfg.c_penal * v).sum();
    let regulation_revenue = r
        .iter()
        .map(|row| row.iter().enumerate().map(|(t, v)| h * cfg.unit_revenue(t, m_bar) * v).sum::<f64>())
        .sum();
    CostBreakdown { generation_cost, penalty_cost, regulation_revenue }
}
