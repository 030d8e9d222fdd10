//! Bundled LP backend: two-phase bounded-variable primal simplex on a dense
//! tableau.
//!
//! Variables are shifted/reflected so every tableau column lives in
//! `[0, u]`; nonbasic columns sit at either bound. Pricing is Dantzig's
//! rule, switching to Bland's rule after a run of degenerate pivots.

use super::model::{Sense, StandardFormModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Reduced-cost optimality tolerance.
    pub dual_tol: f64,
    /// Primal feasibility tolerance (phase-one residual).
    pub primal_tol: f64,
    pub pivot_tol: f64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_iterations: 200_000, dual_tol: 1e-9, primal_tol: 1e-7, pivot_tol: 1e-9, degenerate_limit: 40 }
    }
}

/// Maps a tableau column back to the model: `x[var] += sign·y`.
#[derive(Debug, Clone, Copy)]
struct ColMap {
    var: usize,
    sign: f64,
}

struct Tableau {
    m: usize,
    n: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    blocked: Vec<bool>,
}

enum Step {
    Optimal,
    Unbounded,
    Progress { degenerate: bool },
}

impl Tableau {
    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let piv = self.a[r * n + j];
        let inv = 1.0 / piv;
        for v in &mut self.a[r * n..(r + 1) * n] {
            *v *= inv;
        }
        self.a[r * n + j] = 1.0;
        let prow: Vec<f64> = self.a[r * n..(r + 1) * n].to_vec();
        let nz: Vec<usize> = (0..n).filter(|&k| prow[k] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for &k in &nz {
                row[k] -= f * prow[k];
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn step(&mut self, opts: &LpOptions, bland: bool) -> Step {
        // pricing
        let mut enter = None;
        let mut best = 0.0;
        for j in 0..self.n {
            if self.is_basic[j] || self.blocked[j] {
                continue;
            }
            let dj = self.d[j];
            let score = if self.at_upper[j] { dj } else { -dj };
            if score > opts.dual_tol && (enter.is_none() || (!bland && score > best)) {
                enter = Some(j);
                best = score;
                if bland {
                    break;
                }
            }
        }
        let Some(j) = enter else { return Step::Optimal };
        let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

        // ratio test
        let mut best: Option<(usize, bool, f64)> = None;
        let mut best_alpha = 0.0;
        let mut best_basis = usize::MAX;
        for i in 0..self.m {
            let alpha = self.a[i * self.n + j];
            if alpha.abs() <= opts.pivot_tol {
                continue;
            }
            let rate = -dir * alpha;
            let bvar = self.basis[i];
            let (limit, to_upper) = if rate < 0.0 {
                (self.beta[i].max(0.0) / -rate, false)
            } else if self.upper[bvar].is_finite() {
                ((self.upper[bvar] - self.beta[i]).max(0.0) / rate, true)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((_, _, bl)) if limit < bl - 1e-12 => true,
                Some((_, _, bl)) if limit <= bl + 1e-12 => {
                    if bland { bvar < best_basis } else { alpha.abs() > best_alpha }
                }
                _ => false,
            };
            if better {
                best = Some((i, to_upper, limit));
                best_alpha = alpha.abs();
                best_basis = bvar;
            }
        }
        let flip_limit = self.upper[j];
        let (t, leave) = match best {
            None if !flip_limit.is_finite() => return Step::Unbounded,
            None => (flip_limit, None),
            Some((_, _, l)) if flip_limit <= l => (flip_limit, None),
            Some((r, to_upper, l)) => (l, Some((r, to_upper))),
        };
        if t != 0.0 {
            for i in 0..self.m {
                let alpha = self.a[i * self.n + j];
                if alpha != 0.0 {
                    self.beta[i] -= dir * alpha * t;
                }
            }
        }
        match leave {
            // bound flip
            None => {
                self.at_upper[j] = !self.at_upper[j];
            }
            Some((r, to_upper)) => {
                let start = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                let leaving = self.basis[r];
                self.at_upper[leaving] = to_upper;
                self.pivot(r, j);
                self.at_upper[j] = false;
                self.beta[r] = start + dir * t;
            }
        }
        Step::Progress { degenerate: t <= 1e-12 }
    }

    fn run(&mut self, opts: &LpOptions, iterations: &mut usize) -> Result<(), LpStatus> {
        let mut degenerate_run = 0;
        let mut bland = false;
        loop {
            if *iterations >= opts.max_iterations {
                return Err(LpStatus::IterationLimit);
            }
            *iterations += 1;
            match self.step(opts, bland) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(LpStatus::Unbounded),
                Step::Progress { degenerate } => {
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run > opts.degenerate_limit {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
        }
    }

    fn set_costs(&mut self, costs: &[f64]) {
        self.d = costs.to_vec();
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.n..(i + 1) * self.n];
            for (dk, rk) in self.d.iter_mut().zip(row) {
                *dk -= cb * rk;
            }
        }
    }

    /// Column values: basic from `beta`, nonbasic at their bound.
    fn values(&self) -> Vec<f64> {
        let mut y: Vec<f64> = (0..self.n).map(|j| if self.at_upper[j] { self.upper[j] } else { 0.0 }).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.beta[i];
        }
        y
    }
}

/// Solves the LP relaxation of `model` under the bound overrides `lb`/`ub`.
pub fn solve_lp(model: &StandardFormModel, lb: &[f64], ub: &[f64], opts: &LpOptions) -> LpSolution {
    let nv = model.n_vars();
    let fail = |status| LpSolution { status, x: vec![0.0; nv], objective: f64::NAN, iterations: 0 };
    if lb.iter().zip(ub).any(|(l, u)| l > &(u + 1e-9)) {
        return fail(LpStatus::Infeasible);
    }

    // column transformation
    let mut x_const = vec![0.0; nv];
    let mut cols: Vec<ColMap> = Vec::new();
    let mut col_upper: Vec<f64> = Vec::new();
    let mut var_cols: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for j in 0..nv {
        let (l, u) = (lb[j], ub[j].max(lb[j]));
        if (u - l).abs() <= 1e-12 {
            x_const[j] = l;
        } else if l.is_finite() {
            x_const[j] = l;
            var_cols[j].push(cols.len());
            cols.push(ColMap { var: j, sign: 1.0 });
            col_upper.push(u - l);
        } else if u.is_finite() {
            x_const[j] = u;
            var_cols[j].push(cols.len());
            cols.push(ColMap { var: j, sign: -1.0 });
            col_upper.push(f64::INFINITY);
        } else {
            var_cols[j].push(cols.len());
            cols.push(ColMap { var: j, sign: 1.0 });
            col_upper.push(f64::INFINITY);
            var_cols[j].push(cols.len());
            cols.push(ColMap { var: j, sign: -1.0 });
            col_upper.push(f64::INFINITY);
        }
    }
    let n_struct = cols.len();

    // rows in terms of tableau columns
    struct Row {
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(model.rows.len());
    for r in &model.rows {
        let mut rhs = r.rhs;
        let mut coeffs = Vec::with_capacity(r.coeffs.len());
        for &(j, a) in &r.coeffs {
            rhs -= a * x_const[j];
            for &c in &var_cols[j] {
                coeffs.push((c, a * cols[c].sign));
            }
        }
        if coeffs.is_empty() {
            let tol = 1e-9 * (1.0 + r.rhs.abs());
            let ok = match r.sense {
                Sense::Le => rhs >= -tol,
                Sense::Ge => rhs <= tol,
                Sense::Eq => rhs.abs() <= tol,
            };
            if !ok {
                return fail(LpStatus::Infeasible);
            }
            continue;
        }
        rows.push(Row { coeffs, sense: r.sense, rhs });
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();

    // decide which rows need artificials
    let mut slack_of = vec![usize::MAX; m];
    let mut flip = vec![false; m];
    let mut needs_art = vec![false; m];
    let mut next_slack = n_struct;
    for (i, r) in rows.iter().enumerate() {
        flip[i] = r.rhs < 0.0;
        if r.sense != Sense::Eq {
            slack_of[i] = next_slack;
            next_slack += 1;
            let slack_coef = if r.sense == Sense::Le { 1.0 } else { -1.0 };
            let eff = if flip[i] { -slack_coef } else { slack_coef };
            needs_art[i] = eff < 0.0;
        } else {
            needs_art[i] = true;
        }
    }
    let n_art = needs_art.iter().filter(|b| **b).count();
    let n = n_struct + n_slack + n_art;

    let mut tab = Tableau {
        m,
        n,
        a: vec![0.0; m * n],
        beta: vec![0.0; m],
        d: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
        at_upper: vec![false; n],
        basis: vec![0; m],
        is_basic: vec![false; n],
        blocked: vec![false; n],
    };
    tab.upper[..n_struct].copy_from_slice(&col_upper);
    let mut next_art = n_struct + n_slack;
    for (i, r) in rows.iter().enumerate() {
        let s = if flip[i] { -1.0 } else { 1.0 };
        let row = &mut tab.a[i * n..(i + 1) * n];
        for &(c, a) in &r.coeffs {
            row[c] += s * a;
        }
        if slack_of[i] != usize::MAX {
            let slack_coef = if r.sense == Sense::Le { 1.0 } else { -1.0 };
            row[slack_of[i]] = s * slack_coef;
        }
        tab.beta[i] = s * r.rhs;
        if needs_art[i] {
            row[next_art] = 1.0;
            tab.basis[i] = next_art;
            next_art += 1;
        } else {
            tab.basis[i] = slack_of[i];
        }
        tab.is_basic[tab.basis[i]] = true;
    }

    let mut iterations = 0;
    let art_start = n_struct + n_slack;
    if n_art > 0 {
        let mut phase1 = vec![0.0; n];
        for c in &mut phase1[art_start..] {
            *c = 1.0;
        }
        tab.set_costs(&phase1);
        if let Err(status) = tab.run(opts, &mut iterations) {
            // phase one is bounded below; only the iteration limit can stop it
            return LpSolution { iterations, ..fail(status) };
        }
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= art_start).map(|i| tab.beta[i]).sum();
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > opts.primal_tol * scale {
            return LpSolution { iterations, ..fail(LpStatus::Infeasible) };
        }
        // drive remaining artificials out of the basis
        for i in 0..m {
            if tab.basis[i] < art_start {
                continue;
            }
            let row = tab.row(i);
            let cand = (0..art_start)
                .filter(|&k| !tab.is_basic[k])
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            if let Some(k) = cand.filter(|&k| row[k].abs() > 1e-7) {
                let val = if tab.at_upper[k] { tab.upper[k] } else { 0.0 };
                tab.pivot(i, k);
                tab.at_upper[k] = false;
                tab.beta[i] = val;
            }
        }
        for k in art_start..n {
            tab.blocked[k] = true;
            tab.upper[k] = 0.0;
        }
    }

    let mut costs = vec![0.0; n];
    for (c, map) in cols.iter().enumerate() {
        costs[c] = model.objective[map.var] * map.sign;
    }
    tab.set_costs(&costs);
    let status = match tab.run(opts, &mut iterations) {
        Ok(()) => LpStatus::Optimal,
        Err(s) => s,
    };
    let y = tab.values();
    let mut x = x_const;
    for (c, map) in cols.iter().enumerate() {
        x[map.var] += map.sign * y[c];
    }
    // clamp round-off against the original bounds
    for j in 0..nv {
        x[j] = x[j].clamp(lb[j], ub[j].max(lb[j]));
    }
    let objective = model.objective_value(&x);
    LpSolution { status, x, objective, iterations }
}
