//! Post-solve checks that re-derive every physical and operational
//! constraint from first principles instead of reusing model rows.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{line_flow, GridState};
use crate::instance::Instance;
use crate::workload::{aggregate_load, qos_deviation, resource_usage, FlexClass, ScheduleMatrix};

use super::build::allowed_cells;
use super::config::{ModelConfig, SignalModels};
use super::solution::Solution;

pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub family: String,
    pub evaluated: usize,
    pub violations: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.violations > 0).collect()
    }
}

struct Tally {
    tol: f64,
    checks: Vec<Check>,
}

impl Tally {
    fn family(&mut self, name: &str) -> &mut Check {
        let pos = match self.checks.iter().position(|c| c.family == name) {
            Some(pos) => pos,
            None => {
                self.checks.push(Check { family: name.into(), evaluated: 0, violations: 0, max_violation: 0.0 });
                self.checks.len() - 1
            }
        };
        &mut self.checks[pos]
    }

    /// Records a violation amount (≤ 0 means satisfied).
    fn record(&mut self, name: &str, amount: f64) {
        let tol = self.tol;
        let c = self.family(name);
        c.evaluated += 1;
        let amount = if amount.is_nan() { f64::INFINITY } else { amount };
        if amount > c.max_violation {
            c.max_violation = amount;
        }
        if amount > tol {
            c.violations += 1;
        }
    }
}

/// Independent feasibility audit of `sol` against the instance and config.
pub fn validate_solution(
    inst: &Instance,
    x_base: &ScheduleMatrix,
    cfg: &ModelConfig,
    signals: &SignalModels,
    sol: &Solution,
    tol: f64,
) -> Result<ValidationReport> {
    let mut tally = Tally { tol, checks: Vec::new() };
    let jobs = &inst.jobs;
    let n_t = inst.n_slots();
    let n_l = inst.n_dc();
    let h = cfg.slot_hours;
    let x = &sol.x;

    // schedule bounds and completion
    for i in 0..jobs.len() {
        let mut total = 0.0;
        for t in 0..n_t {
            for l in 0..n_l {
                let v = x.get(i, t, l);
                tally.record("schedule_bounds", (-v).max(v - 1.0));
                total += v;
            }
        }
        tally.record("completion", (total - 1.0).abs());
    }

    // flexibility-class semantics, checked directly from the class definitions
    for (i, job) in jobs.iter().enumerate() {
        for t in 0..n_t {
            for l in 0..n_l {
                let v = x.get(i, t, l);
                let outside = match job.class {
                    FlexClass::Fixed => (v - x_base.get(i, t, l)).abs(),
                    FlexClass::Interactive if t != job.arrival() => v.abs(),
                    FlexClass::Deferrable if t < job.arrival() => v.abs(),
                    _ => 0.0,
                };
                tally.record("flex_class", outside);
            }
        }
    }
    // shifting-mode pins (the independent strategy's per-DC scope is a subset)
    let cells = allowed_cells(jobs, x_base, cfg.shifting_mode, None);
    for (i, allowed) in cells.iter().enumerate() {
        for t in 0..n_t {
            for l in 0..n_l {
                if !allowed.contains(&(t, l)) {
                    tally.record("shifting_mode", x.get(i, t, l).abs());
                }
            }
        }
    }

    for d in qos_deviation(x, x_base, jobs, &inst.latency)? {
        tally.record("qos", d - cfg.delta_qos);
    }

    for (l, spec) in inst.dcs.iter().enumerate() {
        for t in 0..n_t {
            let (cpu, mem, io) = resource_usage(x, jobs, l, t);
            tally.record("resource", cpu - spec.cpu_cap[t]);
            tally.record("resource", mem - spec.mem_cap[t]);
            tally.record("resource", io - spec.io_cap[t]);
        }
    }

    let idx = inst.index()?;
    let load = aggregate_load(x, jobs, &idx, h)?;
    let k = signals.chance_coefficient(cfg.eps_p, cfg.envelope_inflation)?;
    for (l, spec) in inst.dcs.iter().enumerate() {
        for t in 0..n_t {
            let r = sol.r[l][t];
            let vt = load[idx.offset(l, t)];
            tally.record("regulation_nonneg", -r);
            tally.record("power_cap", vt + r - spec.p_max[t]);
            tally.record("chance", k * r - (vt - spec.p_min[t]));
        }
    }

    // queue VaR rows via the served-energy recursion
    let horizons = cfg.effective_var_horizons();
    for (l, queue) in inst.queues.dcs.iter().enumerate() {
        let mut level = queue.q0;
        for t in 0..n_t {
            let served = load[idx.offset(l, t)] * h;
            for &hz in &horizons {
                let f = hz / h;
                let q_base = level + f * (queue.arrivals[t] - served);
                match signals.var_table.get(hz) {
                    Some(e) => {
                        let r = sol.r[l][t];
                        tally.record("queue_var", q_base + r * e.s_high - queue.q_max);
                        tally.record("queue_var", queue.q_min - (q_base + r * e.s_low));
                    }
                    None => tally.record("queue_var", f64::INFINITY),
                }
            }
            level += queue.arrivals[t] - served;
        }
    }

    // grid physics
    let dc_bus = inst.dc_bus_positions()?;
    let mut dc_load = vec![vec![0.0; n_t]; inst.grid.buses.len()];
    for (l, &b) in dc_bus.iter().enumerate() {
        for t in 0..n_t {
            dc_load[b][t] += load[idx.offset(l, t)];
        }
    }
    let state = GridState { p: &sol.p, theta: &sol.theta, q: &sol.q };
    for row in inst.grid.power_balance_residual(state, &dc_load)? {
        for v in row {
            tally.record("balance", v.abs());
        }
    }
    for line in &inst.grid.lines {
        let (a, b) = inst.grid.line_endpoints(line)?;
        for t in 0..n_t {
            let f = line_flow(sol.theta[a][t], sol.theta[b][t], line, inst.grid.mva_base);
            tally.record("line", f.abs() - line.flow_limit);
        }
    }
    if let Some(s) = inst.grid.bus_position(inst.grid.slack_bus) {
        for t in 0..n_t {
            tally.record("slack_angle", sol.theta[s][t].abs());
        }
    }
    for row in &sol.q {
        for v in row {
            tally.record("shedding", -v);
        }
    }
    for (g, gen) in inst.grid.generators.iter().enumerate() {
        for t in 0..n_t {
            let (p, u) = (sol.p[g][t], sol.u[g][t]);
            tally.record("commitment", (u - u.round()).abs().max(-u).max(u - 1.0));
            tally.record("generator", (p - gen.p_max * u).max(gen.p_min * u - p));
            let (prev_p, prev_u) = match t {
                0 => match gen.initial_output {
                    Some(p0) => (p0, if p0 > 0.0 { 1.0 } else { 0.0 }),
                    None => continue,
                },
                _ => (sol.p[g][t - 1], sol.u[g][t - 1]),
            };
            let up_room = if prev_u > 0.5 { gen.ramp_up } else { gen.startup_ramp };
            let down_room = if u > 0.5 { gen.ramp_down } else { gen.shutdown_ramp };
            tally.record("ramp", (p - prev_p) - up_room);
            tally.record("ramp", (prev_p - p) - down_room);
        }
    }

    // relative identity check with its own fixed 1e-6 tolerance
    let identity = (sol.objective_total - sol.breakdown.net()).abs() / sol.objective_total.abs().max(1.0);
    tally.checks.push(Check {
        family: "objective_identity".into(),
        evaluated: 1,
        violations: usize::from(!(identity <= 1e-6)),
        max_violation: identity,
    });

    Ok(ValidationReport { tolerance: tol, checks: tally.checks })
}
