//! Best-first branch-and-bound over integer columns using LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{solve_lp, LpOptions, LpStatus};
use super::model::StandardFormModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped early; an incumbent may exist.
    TimeLimit { gap: f64 },
    NodeLimit { gap: f64 },
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MipResult {
    pub fn has_solution(&self) -> bool {
        self.objective.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub time_limit_secs: Option<f64>,
    pub max_nodes: usize,
    pub int_tol: f64,
    /// Relative optimality tolerance used for pruning.
    pub rel_gap: f64,
    pub lp: LpOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self { time_limit_secs: None, max_nodes: 200_000, int_tol: 1e-6, rel_gap: 1e-9, lp: LpOptions::default() }
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smaller bound first, then deeper, then older
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn most_fractional(model: &StandardFormModel, x: &[f64], tol: f64) -> Option<usize> {
    model
        .vars
        .iter()
        .enumerate()
        .filter(|(j, v)| v.integer && (x[*j] - x[*j].round()).abs() > tol)
        .map(|(j, _)| (j, (x[j] - x[j].floor() - 0.5).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(j, _)| j)
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: Option<std::time::Instant>,
    limit: Option<f64>,
}

impl Clock {
    fn new(limit: Option<f64>) -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: limit.map(|_| std::time::Instant::now()),
            limit,
        }
    }

    fn expired(&self) -> bool {
        #[cfg(not(target_arch = "wasm32"))]
        if let (Some(start), Some(limit)) = (self.start, self.limit) {
            return start.elapsed().as_secs_f64() > limit;
        }
        let _ = self.limit;
        false
    }
}

pub fn solve_mip(model: &StandardFormModel, opts: &MipOptions) -> MipResult {
    let lb0: Vec<f64> = model.vars.iter().map(|v| if v.integer { v.lb.ceil() } else { v.lb }).collect();
    let ub0: Vec<f64> = model.vars.iter().map(|v| if v.integer { v.ub.floor() } else { v.ub }).collect();
    let clock = Clock::new(opts.time_limit_secs);
    let mut lp_iterations = 0;
    let mut nodes = 0;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let prune_tol = |inc: f64| opts.rel_gap * inc.abs().max(1.0);

    let root = solve_lp(model, &lb0, &ub0, &opts.lp);
    lp_iterations += root.iterations;
    nodes += 1;
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return MipResult {
                status: MipStatus::Infeasible,
                x: root.x,
                objective: f64::INFINITY,
                bound: f64::INFINITY,
                nodes,
                lp_iterations,
            }
        }
        LpStatus::Unbounded => {
            return MipResult {
                status: MipStatus::Unbounded,
                x: root.x,
                objective: f64::NEG_INFINITY,
                bound: f64::NEG_INFINITY,
                nodes,
                lp_iterations,
            }
        }
        LpStatus::IterationLimit => {
            return MipResult {
                status: MipStatus::NodeLimit { gap: f64::INFINITY },
                x: root.x,
                objective: f64::INFINITY,
                bound: f64::NEG_INFINITY,
                nodes,
                lp_iterations,
            }
        }
    }

    // rounding heuristics at the root: nearest, then up
    if most_fractional(model, &root.x, opts.int_tol).is_some() {
        for mode in [0u8, 1] {
            let (mut lb, mut ub) = (lb0.clone(), ub0.clone());
            for (j, v) in model.vars.iter().enumerate() {
                if v.integer {
                    let r = if mode == 0 { root.x[j].round() } else { (root.x[j] - opts.int_tol).ceil() };
                    let r = r.clamp(lb0[j], ub0[j]);
                    lb[j] = r;
                    ub[j] = r;
                }
            }
            let h = solve_lp(model, &lb, &ub, &opts.lp);
            lp_iterations += h.iterations;
            if h.status == LpStatus::Optimal && incumbent.as_ref().is_none_or(|(o, _)| h.objective < *o) {
                incumbent = Some((h.objective, h.x));
            }
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node { bound: root.objective, depth: 0, seq, lb: lb0, ub: ub0 });
    let mut root_x = Some(root.x);
    let mut stopped: Option<fn(f64) -> MipStatus> = None;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - prune_tol(*inc) {
                continue;
            }
        }
        if clock.expired() {
            heap.push(node);
            stopped = Some(|gap| MipStatus::TimeLimit { gap });
            break;
        }
        if nodes >= opts.max_nodes {
            heap.push(node);
            stopped = Some(|gap| MipStatus::NodeLimit { gap });
            break;
        }
        let (obj, x) = match root_x.take() {
            Some(x) => (node.bound, x),
            None => {
                let s = solve_lp(model, &node.lb, &node.ub, &opts.lp);
                lp_iterations += s.iterations;
                nodes += 1;
                if s.status != LpStatus::Optimal {
                    continue;
                }
                (s.objective, s.x)
            }
        };
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - prune_tol(*inc) {
                continue;
            }
        }
        match most_fractional(model, &x, opts.int_tol) {
            None => {
                let mut x = x;
                for (j, v) in model.vars.iter().enumerate() {
                    if v.integer {
                        x[j] = x[j].round();
                    }
                }
                incumbent = Some((obj, x));
            }
            Some(j) => {
                let down = x[j].floor();
                let mut ub = node.ub.clone();
                ub[j] = down;
                let mut lb = node.lb.clone();
                lb[j] = down + 1.0;
                seq += 1;
                heap.push(Node { bound: obj, depth: node.depth + 1, seq, lb: node.lb, ub });
                seq += 1;
                heap.push(Node { bound: obj, depth: node.depth + 1, seq, lb, ub: node.ub });
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((obj, x)) => {
            let bound = open_bound.min(obj);
            let status = match stopped {
                Some(f) => f((obj - bound).abs() / obj.abs().max(1.0)),
                None => MipStatus::Optimal,
            };
            MipResult { status, x, objective: obj, bound, nodes, lp_iterations }
        }
        None => {
            let status = match stopped {
                Some(f) => f(f64::INFINITY),
                None => MipStatus::Infeasible,
            };
            MipResult {
                status,
                x: vec![0.0; model.n_vars()],
                objective: f64::INFINITY,
                bound: open_bound,
                nodes,
                lp_iterations,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::model::Sense;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_binaries_reduce_to_lp() {
        let mut m = StandardFormModel::new("fx");
        let u = m.add_var("u", 1.0, 1.0, true, 0.0);
        let p = m.add_var("p", 0.0, 10.0, false, 2.0);
        m.add_row("min", vec![(p, 1.0), (u, -3.0)], Sense::Ge, 0.0);
        let r = solve_mip(&m, &MipOptions::default());
        assert_eq!(r.status, MipStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 6.0, epsilon = 1e-9);
        let lp = solve_lp(&m, &[1.0, 0.0], &[1.0, 10.0], &LpOptions::default());
        assert_abs_diff_eq!(r.objective, lp.objective, epsilon = 1e-12);
    }

    /// 0/1 knapsack checked against full enumeration.
    #[test]
    fn knapsack_matches_bruteforce() {
        let values = [10.0, 13.0, 7.0, 8.0, 11.0, 4.0, 9.0];
        let weights = [5.0, 7.0, 3.0, 4.0, 6.0, 2.0, 5.0];
        let cap = 15.0;
        let mut m = StandardFormModel::new("knap");
        let xs: Vec<usize> = values.iter().enumerate().map(|(k, v)| m.add_var(format!("x{k}"), 0.0, 1.0, true, -v)).collect();
        m.add_row("cap", xs.iter().zip(weights).map(|(&j, w)| (j, w)).collect(), Sense::Le, cap);
        let r = solve_mip(&m, &MipOptions::default());
        let mut best = 0.0f64;
        for code in 0u32..(1 << values.len()) {
            let (mut v, mut w) = (0.0, 0.0);
            for k in 0..values.len() {
                if code >> k & 1 == 1 {
                    v += values[k];
                    w += weights[k];
                }
            }
            if w <= cap {
                best = best.max(v);
            }
        }
        assert_eq!(r.status, MipStatus::Optimal);
        assert_abs_diff_eq!(-r.objective, best, epsilon = 1e-9);
    }

    /// One unit over two slots with min output: enumerate the four on/off patterns.
    #[test]
    fn unit_commitment_toy_matches_enumeration() {
        let demand: [f64; 2] = [3.0, 12.0];
        let (pmin, pmax, cost, shed): (f64, f64, f64, f64) = (5.0, 20.0, 10.0, 100.0);
        let mut m = StandardFormModel::new("uc");
        let mut best = f64::INFINITY;
        for pattern in 0..4u32 {
            let mut total = 0.0;
            for (t, d) in demand.iter().enumerate() {
                let on = pattern >> t & 1 == 1;
                // when on, output clamps to [pmin, pmax]; surplus is infeasible without sinks
                if on {
                    if *d < pmin {
                        total = f64::INFINITY;
                    } else {
                        total += cost * d.min(pmax) + shed * (d - pmax).max(0.0);
                    }
                } else {
                    total += shed * d;
                }
            }
            best = best.min(total);
        }
        for t in 0..2 {
            let u = m.add_var(format!("u{t}"), 0.0, 1.0, true, 0.0);
            let p = m.add_var(format!("p{t}"), 0.0, pmax, false, cost);
            let q = m.add_var(format!("q{t}"), 0.0, f64::INFINITY, false, shed);
            m.add_row(format!("bal{t}"), vec![(p, 1.0), (q, 1.0)], Sense::Eq, demand[t]);
            m.add_row(format!("hi{t}"), vec![(p, 1.0), (u, -pmax)], Sense::Le, 0.0);
            m.add_row(format!("lo{t}"), vec![(p, 1.0), (u, -pmin)], Sense::Ge, 0.0);
        }
        let r = solve_mip(&m, &MipOptions::default());
        assert_eq!(r.status, MipStatus::Optimal);
        assert_abs_diff_eq!(r.objective, best, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut m = StandardFormModel::new("inf");
        let x = m.add_var("x", 0.0, 1.0, true, 1.0);
        let y = m.add_var("y", 0.0, 1.0, true, 1.0);
        m.add_row("half", vec![(x, 2.0), (y, 2.0)], Sense::Eq, 1.0);
        assert_eq!(solve_mip(&m, &MipOptions::default()).status, MipStatus::Infeasible);
    }
}
