//! Assembly of the joint scheduling / regulation / dispatch model.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::workload::{effective_latency, FlexClass, JobCluster, Resource, ScheduleMatrix};

use super::config::{DcQueue, ModelConfig, ShiftingMode, SignalModels};
use super::model::{Sense, StandardFormModel};

/// Column positions of every variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_jobs: usize,
    pub n_slots: usize,
    pub n_dc: usize,
    pub n_gen: usize,
    pub n_bus: usize,
    x0: usize,
    r0: usize,
    p0: usize,
    u0: usize,
    th0: usize,
    q0: usize,
    end: usize,
}

impl VarLayout {
    pub fn new(n_jobs: usize, n_slots: usize, n_dc: usize, n_gen: usize, n_bus: usize) -> Self {
        let x0 = 0;
        let r0 = x0 + n_jobs * n_slots * n_dc;
        let p0 = r0 + n_dc * n_slots;
        let u0 = p0 + n_gen * n_slots;
        let th0 = u0 + n_gen * n_slots;
        let q0 = th0 + n_bus * n_slots;
        let end = q0 + n_bus * n_slots;
        Self { n_jobs, n_slots, n_dc, n_gen, n_bus, x0, r0, p0, u0, th0, q0, end }
    }

    pub fn x(&self, i: usize, t: usize, l: usize) -> usize {
        self.x0 + (i * self.n_slots + t) * self.n_dc + l
    }
    pub fn r(&self, l: usize, t: usize) -> usize {
        self.r0 + l * self.n_slots + t
    }
    pub fn p(&self, g: usize, t: usize) -> usize {
        self.p0 + g * self.n_slots + t
    }
    pub fn u(&self, g: usize, t: usize) -> usize {
        self.u0 + g * self.n_slots + t
    }
    pub fn theta(&self, b: usize, t: usize) -> usize {
        self.th0 + b * self.n_slots + t
    }
    pub fn q(&self, b: usize, t: usize) -> usize {
        self.q0 + b * self.n_slots + t
    }
    pub fn variable_count(&self) -> usize {
        self.end
    }
}

/// How the regulation capacity columns are treated.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum RPolicy {
    #[default]
    Free,
    Zero,
    /// `[l][t]` values.
    Fixed(Vec<Vec<f64>>),
}

/// Grid-side decisions, `[g][t]` / `[b][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// Restrictions layered on top of the configured model (used by strategies).
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub fix_x: Option<ScheduleMatrix>,
    pub r_policy: RPolicy,
    pub fix_dispatch: Option<Dispatch>,
    /// Optimize only this data center (0-based): its own baseline clusters may
    /// move between slots, everything else stays at baseline with no capacity.
    pub owner: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: StandardFormModel,
    pub layout: VarLayout,
    /// Row ranges per constraint family, in emission order.
    pub families: Vec<(&'static str, Range<usize>)>,
    pub chance_coefficient: f64,
    pub m_bar: f64,
}

impl BuiltModel {
    pub fn family_of(&self, row: usize) -> Option<&'static str> {
        self.families.iter().find(|(_, r)| r.contains(&row)).map(|(f, _)| *f)
    }
}

/// Affine function of the schedule: `constant + Σ coeff·x[i][t][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueExpr {
    pub constant: f64,
    pub terms: Vec<((usize, usize, usize), f64)>,
}

impl QueueExpr {
    pub fn eval(&self, x: &ScheduleMatrix) -> f64 {
        self.constant + self.terms.iter().map(|((i, t, l), c)| c * x.get(*i, *t, *l)).sum::<f64>()
    }
}

/// Baseline queue level of DC `l` (0-based) after `tau` slots (fractional
/// values interpolate within a slot): `Q0 + Σ (A − served energy)`.
pub fn queue_baseline_expr(jobs: &[JobCluster], queue: &DcQueue, l: usize, tau: f64) -> Result<QueueExpr> {
    let n_slots = queue.arrivals.len();
    if !(tau >= 0.0 && tau <= n_slots as f64 + 1e-9) {
        return Err(Error::Domain(format!("tau = {tau} outside [0, {n_slots}]")));
    }
    let mut constant = queue.q0;
    let mut terms = Vec::new();
    for t in 0..n_slots {
        let w = (tau - t as f64).clamp(0.0, 1.0);
        // snap interpolation weights that are float noise away from 0 or 1
        let w = if w < 1e-12 { 0.0 } else if w > 1.0 - 1e-12 { 1.0 } else { w };
        if w == 0.0 {
            break;
        }
        constant += w * queue.arrivals[t];
        for (i, job) in jobs.iter().enumerate() {
            let e = job.energy_mwh();
            if e != 0.0 {
                terms.push(((i, t, l), -w * e));
            }
        }
    }
    Ok(QueueExpr { constant, terms })
}

/// The single baseline cell of each cluster, if the baseline is integral.
fn baseline_cell(x_base: &ScheduleMatrix, i: usize) -> Option<(usize, usize)> {
    let (_, n_slots, n_dc) = x_base.dims();
    let cells: Vec<(usize, usize)> =
        (0..n_slots).flat_map(|t| (0..n_dc).map(move |l| (t, l))).filter(|&(t, l)| x_base.get(i, t, l) > 0.0).collect();
    match cells.as_slice() {
        [only] if x_base.get(i, only.0, only.1) == 1.0 => Some(*only),
        _ => None,
    }
}

/// Cells `(t, l)` each cluster may occupy; clusters with a single allowed
/// cell are pinned to their baseline.
pub fn allowed_cells(
    jobs: &[JobCluster],
    x_base: &ScheduleMatrix,
    mode: ShiftingMode,
    owner: Option<usize>,
) -> Vec<Vec<(usize, usize)>> {
    let (_, n_slots, n_dc) = x_base.dims();
    jobs.iter()
        .enumerate()
        .map(|(i, job)| {
            let Some((tb, lb)) = baseline_cell(x_base, i) else {
                return (0..n_slots)
                    .flat_map(|t| (0..n_dc).map(move |l| (t, l)))
                    .filter(|&(t, l)| x_base.get(i, t, l) > 0.0)
                    .collect();
            };
            let movable = job.class != FlexClass::Fixed && owner.is_none_or(|o| o == lb);
            if !movable {
                return vec![(tb, lb)];
            }
            let temporal = mode.allows_temporal() && job.class == FlexClass::Deferrable;
            let spatial = mode.allows_spatial() && owner.is_none();
            let mut cells = Vec::new();
            for t in 0..n_slots {
                let slot_ok = t == tb || (temporal && t >= job.arrival());
                if !slot_ok {
                    continue;
                }
                for l in 0..n_dc {
                    if l == lb || spatial {
                        cells.push((t, l));
                    }
                }
            }
            cells
        })
        .collect()
}

fn build_err(family: &str, detail: impl Into<String>) -> Error {
    Error::Build { family: family.to_string(), detail: detail.into() }
}

struct Families {
    list: Vec<(&'static str, Range<usize>)>,
}

impl Families {
    fn mark(&mut self, name: &'static str, start: usize, end: usize) {
        if end > start {
            self.list.push((name, start..end));
        }
    }
}

pub fn build_model(
    inst: &Instance,
    x_base: &ScheduleMatrix,
    cfg: &ModelConfig,
    signals: &SignalModels,
    opts: &BuildOptions,
) -> Result<BuiltModel> {
    let n_slots = inst.n_slots();
    let n_dc = inst.n_dc();
    let jobs = &inst.jobs;
    let grid = &inst.grid;
    let (n_gen, n_bus) = (grid.generators.len(), grid.buses.len());
    if x_base.dims() != (jobs.len(), n_slots, n_dc) {
        return Err(build_err("completion", format!("baseline shape {:?} does not match instance", x_base.dims())));
    }
    cfg.validate(n_slots, inst.max_generator_cost()).map_err(|e| build_err("config", e.to_string()))?;
    if let Some(o) = opts.owner {
        if o >= n_dc {
            return Err(build_err("config", format!("owner dc {o} out of range")));
        }
    }
    let h = cfg.slot_hours;
    let lay = VarLayout::new(jobs.len(), n_slots, n_dc, n_gen, n_bus);
    let k_cc = signals
        .chance_coefficient(cfg.eps_p, cfg.envelope_inflation)
        .map_err(|e| build_err("chance", e.to_string()))?;
    if !k_cc.is_finite() {
        return Err(build_err("chance", "signal model not fitted"));
    }
    let horizons = cfg.effective_var_horizons();
    let var_rows: Vec<(f64, f64, f64)> = horizons
        .iter()
        .map(|&hz| {
            signals
                .var_table
                .get(hz)
                .map(|e| (hz, e.s_low, e.s_high))
                .ok_or_else(|| build_err("queue_var", format!("VaR table has no {hz} h horizon")))
        })
        .collect::<Result<_>>()?;
    let dc_bus = inst.dc_bus_positions().map_err(|e| build_err("balance", e.to_string()))?;
    if inst.queues.dcs.len() != n_dc {
        return Err(build_err("queue_var", "queue parameters do not cover every data center"));
    }

    let mut m = StandardFormModel::new("dcflex");

    // x
    let cells = allowed_cells(jobs, x_base, cfg.shifting_mode, opts.owner);
    for i in 0..jobs.len() {
        let pinned = cells[i].len() <= 1;
        for t in 0..n_slots {
            for l in 0..n_dc {
                let (lb, ub) = match &opts.fix_x {
                    Some(fx) => (fx.get(i, t, l), fx.get(i, t, l)),
                    None if pinned => (x_base.get(i, t, l), x_base.get(i, t, l)),
                    None if cells[i].contains(&(t, l)) => (0.0, 1.0),
                    None => (0.0, 0.0),
                };
                let integer = cfg.integral_x && lb < ub;
                m.add_var(format!("x_{}_{}_{}", i + 1, t + 1, l + 1), lb, ub, integer, 0.0);
            }
        }
    }
    // R
    for l in 0..n_dc {
        let spec = &inst.dcs[l];
        for t in 0..n_slots {
            let rev = h * cfg.unit_revenue(t, signals.m_bar);
            let (lb, ub) = match &opts.r_policy {
                _ if opts.owner.is_some_and(|o| o != l) => (0.0, 0.0),
                RPolicy::Free => (0.0, spec.p_max[t]),
                RPolicy::Zero => (0.0, 0.0),
                RPolicy::Fixed(r) => (r[l][t], r[l][t]),
            };
            m.add_var(format!("R_{}_{}", l + 1, t + 1), lb, ub, false, -rev);
        }
    }
    // p, u
    let fixed = opts.fix_dispatch.as_ref();
    for (g, gen) in grid.generators.iter().enumerate() {
        for t in 0..n_slots {
            let (lb, ub) = fixed.map_or((0.0, gen.p_max), |d| (d.p[g][t], d.p[g][t]));
            m.add_var(format!("p_{}_{}", g + 1, t + 1), lb, ub, false, h * gen.cost_per_mwh);
        }
    }
    for g in 0..n_gen {
        for t in 0..n_slots {
            let (lb, ub) = fixed.map_or((0.0, 1.0), |d| (d.u[g][t], d.u[g][t]));
            m.add_var(format!("u_{}_{}", g + 1, t + 1), lb, ub, true, 0.0);
        }
    }
    // theta, q
    for (b, bus) in grid.buses.iter().enumerate() {
        for t in 0..n_slots {
            let (lb, ub) = match fixed {
                Some(d) => (d.theta[b][t], d.theta[b][t]),
                None if bus.bus_id == grid.slack_bus => (0.0, 0.0),
                None => (-std::f64::consts::PI, std::f64::consts::PI),
            };
            m.add_var(format!("th_{}_{}", b + 1, t + 1), lb, ub, false, 0.0);
        }
    }
    for (b, bus) in grid.buses.iter().enumerate() {
        for t in 0..n_slots {
            let attached: f64 = dc_bus.iter().enumerate().filter(|(_, &db)| db == b).map(|(l, _)| inst.dcs[l].p_max[t]).sum();
            let (lb, ub) = fixed.map_or((0.0, bus.base_load[t].max(0.0) + attached), |d| (d.q[b][t], d.q[b][t]));
            m.add_var(format!("q_{}_{}", b + 1, t + 1), lb, ub, false, h * cfg.c_penal);
        }
    }
    debug_assert_eq!(m.n_vars(), lay.variable_count());

    let mw = |job: &JobCluster| job.energy_mwh() / h;
    let dc_load_terms = |l: usize, t: usize, sign: f64| -> Vec<(usize, f64)> {
        jobs.iter().enumerate().map(|(i, j)| (lay.x(i, t, l), sign * mw(j))).filter(|c| c.1 != 0.0).collect()
    };
    let mut fam = Families { list: Vec::new() };

    // nodal balance: Σp + q − DC load − out + in = base load
    let start = m.rows.len();
    for (b, bus) in grid.buses.iter().enumerate() {
        for t in 0..n_slots {
            let mut row = Vec::new();
            for (g, gen) in grid.generators.iter().enumerate() {
                if gen.bus_id == bus.bus_id {
                    row.push((lay.p(g, t), 1.0));
                }
            }
            row.push((lay.q(b, t), 1.0));
            for (l, &db) in dc_bus.iter().enumerate() {
                if db == b {
                    row.extend(dc_load_terms(l, t, -1.0));
                }
            }
            for line in &grid.lines {
                let (a, c) = grid.line_endpoints(line).map_err(|e| build_err("balance", e.to_string()))?;
                let k = grid.mva_base * line.susceptance;
                if a == b {
                    row.push((lay.theta(a, t), -k));
                    row.push((lay.theta(c, t), k));
                }
                if c == b {
                    row.push((lay.theta(a, t), k));
                    row.push((lay.theta(c, t), -k));
                }
            }
            m.add_row(format!("bal_{}_{}", b + 1, t + 1), row, Sense::Eq, bus.base_load[t]);
        }
    }
    fam.mark("balance", start, m.rows.len());

    let start = m.rows.len();
    for (k, line) in grid.lines.iter().enumerate() {
        let (a, c) = grid.line_endpoints(line).map_err(|e| build_err("line", e.to_string()))?;
        let s = grid.mva_base * line.susceptance;
        for t in 0..n_slots {
            let row = vec![(lay.theta(a, t), s), (lay.theta(c, t), -s)];
            m.add_row(format!("lnp_{}_{}", k + 1, t + 1), row.clone(), Sense::Le, line.flow_limit);
            m.add_row(format!("lnn_{}_{}", k + 1, t + 1), row, Sense::Ge, -line.flow_limit);
        }
    }
    fam.mark("line", start, m.rows.len());

    let start = m.rows.len();
    for (g, gen) in grid.generators.iter().enumerate() {
        for t in 0..n_slots {
            m.add_row(format!("gmx_{}_{}", g + 1, t + 1), vec![(lay.p(g, t), 1.0), (lay.u(g, t), -gen.p_max)], Sense::Le, 0.0);
            m.add_row(format!("gmn_{}_{}", g + 1, t + 1), vec![(lay.p(g, t), 1.0), (lay.u(g, t), -gen.p_min)], Sense::Ge, 0.0);
        }
    }
    fam.mark("generator", start, m.rows.len());

    let start = m.rows.len();
    for (g, gen) in grid.generators.iter().enumerate() {
        let (ru, rd, su, sd) = (gen.ramp_up, gen.ramp_down, gen.startup_ramp, gen.shutdown_ramp);
        for t in 0..n_slots {
            if t == 0 {
                let Some(p_init) = gen.initial_output else { continue };
                let was_on = p_init > 0.0;
                let up_room = if was_on { ru } else { su };
                m.add_row(format!("rup_{}_{}", g + 1, t + 1), vec![(lay.p(g, 0), 1.0)], Sense::Le, p_init + up_room);
                // p_init − p_1 ≤ RD·u_1 + SD·(1 − u_1)
                m.add_row(
                    format!("rdn_{}_{}", g + 1, t + 1),
                    vec![(lay.p(g, 0), -1.0), (lay.u(g, 0), sd - rd)],
                    Sense::Le,
                    sd - p_init,
                );
                continue;
            }
            // p_t − p_{t−1} ≤ RU·u_{t−1} + SU·(1 − u_{t−1})
            m.add_row(
                format!("rup_{}_{}", g + 1, t + 1),
                vec![(lay.p(g, t), 1.0), (lay.p(g, t - 1), -1.0), (lay.u(g, t - 1), su - ru)],
                Sense::Le,
                su,
            );
            // p_{t−1} − p_t ≤ RD·u_t + SD·(1 − u_t)
            m.add_row(
                format!("rdn_{}_{}", g + 1, t + 1),
                vec![(lay.p(g, t - 1), 1.0), (lay.p(g, t), -1.0), (lay.u(g, t), sd - rd)],
                Sense::Le,
                sd,
            );
        }
    }
    fam.mark("ramp", start, m.rows.len());

    let start = m.rows.len();
    for i in 0..jobs.len() {
        let row = (0..n_slots).flat_map(|t| (0..n_dc).map(move |l| (lay.x(i, t, l), 1.0))).collect();
        m.add_row(format!("cmp_{}", i + 1), row, Sense::Eq, 1.0);
    }
    fam.mark("completion", start, m.rows.len());

    // QoS: Σ (d − L̄_t − Δ)·x ≤ 0. A single owner gets its baseline share
    // plus an equal split of the slot's slack, so merged owner plans still
    // satisfy the system-wide row.
    let start = m.rows.len();
    for t in 0..n_slots {
        let base = effective_latency(x_base, jobs, t, &inst.latency).map_err(|e| build_err("qos", e.to_string()))?;
        if base.no_jobs {
            continue;
        }
        let bound = base.value + cfg.delta_qos;
        let mut row = Vec::new();
        let (mut own_base, mut total_base) = (0.0, 0.0);
        for (i, job) in jobs.iter().enumerate() {
            for l in 0..n_dc {
                let d = inst.latency.get(job.user_region, l).map_err(|e| build_err("qos", e.to_string()))?;
                total_base += (d - bound) * x_base.get(i, t, l);
                if opts.owner.is_some_and(|o| o != l) {
                    continue;
                }
                own_base += (d - bound) * x_base.get(i, t, l);
                row.push((lay.x(i, t, l), d - bound));
            }
        }
        let rhs = if opts.owner.is_some() { own_base - total_base.min(0.0) / n_dc as f64 } else { 0.0 };
        m.add_row(format!("qos_{}", t + 1), row, Sense::Le, rhs);
    }
    fam.mark("qos", start, m.rows.len());

    let start = m.rows.len();
    for (l, spec) in inst.dcs.iter().enumerate() {
        for t in 0..n_slots {
            for (res, tag) in Resource::ALL.iter().zip(["cpu", "mem", "io"]) {
                let row = jobs.iter().enumerate().map(|(i, j)| (lay.x(i, t, l), res.demand(j))).collect();
                m.add_row(format!("{tag}_{}_{}", l + 1, t + 1), row, Sense::Le, spec.cap(*res, t));
            }
        }
    }
    fam.mark("resource", start, m.rows.len());

    let start = m.rows.len();
    for (l, spec) in inst.dcs.iter().enumerate() {
        for t in 0..n_slots {
            let mut row = dc_load_terms(l, t, 1.0);
            row.push((lay.r(l, t), 1.0));
            m.add_row(format!("pmx_{}_{}", l + 1, t + 1), row, Sense::Le, spec.p_max[t]);
        }
    }
    fam.mark("power_cap", start, m.rows.len());

    // k·R ≤ ϑ̄ − P_min
    let start = m.rows.len();
    for (l, spec) in inst.dcs.iter().enumerate() {
        for t in 0..n_slots {
            let mut row = dc_load_terms(l, t, -1.0);
            row.push((lay.r(l, t), k_cc));
            m.add_row(format!("cc_{}_{}", l + 1, t + 1), row, Sense::Le, -spec.p_min[t]);
        }
    }
    fam.mark("chance", start, m.rows.len());

    let start = m.rows.len();
    for l in 0..n_dc {
        let queue = &inst.queues.dcs[l];
        if queue.arrivals.len() != n_slots {
            return Err(build_err("queue_var", format!("dc {} arrivals length {}", l + 1, queue.arrivals.len())));
        }
        for t in 0..n_slots {
            for (k, &(hz, s_low, s_high)) in var_rows.iter().enumerate() {
                let tau = t as f64 + hz / h;
                let expr = queue_baseline_expr(jobs, queue, l, tau)?;
                let base: Vec<(usize, f64)> = expr.terms.iter().map(|((i, tt, ll), c)| (lay.x(*i, *tt, *ll), *c)).collect();
                let mut hi = base.clone();
                hi.push((lay.r(l, t), s_high));
                m.add_row(format!("qhi_{}_{}_{}", l + 1, t + 1, k + 1), hi, Sense::Le, queue.q_max - expr.constant);
                let mut lo = base;
                lo.push((lay.r(l, t), s_low));
                m.add_row(format!("qlo_{}_{}_{}", l + 1, t + 1, k + 1), lo, Sense::Ge, queue.q_min - expr.constant);
            }
        }
    }
    fam.mark("queue_var", start, m.rows.len());

    m.validate().map_err(|e| build_err("model", e.to_string()))?;
    Ok(BuiltModel { model: m, layout: lay, families: fam.list, chance_coefficient: k_cc, m_bar: signals.m_bar })
}
