//! Coordination strategies: one joint solve, schedule-then-adjust, and
//! per-data-center solves followed by a system re-dispatch.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::workload::ScheduleMatrix;

use super::backend::{solve_model, Backend};
use super::build::{build_model, BuildOptions, BuiltModel, RPolicy};
use super::config::{ModelConfig, SignalModels, Strategy};
use super::lp::{solve_lp, LpOptions, LpStatus};
use super::model::StandardFormModel;
use super::solution::{Solution, SolveStatus};

/// Everything a strategy needs besides the configuration.
#[derive(Debug, Clone, Copy)]
pub struct SolveContext<'a> {
    pub inst: &'a Instance,
    pub x_base: &'a ScheduleMatrix,
    pub signals: &'a SignalModels,
    pub backend: &'a Backend,
}

/// Families whose removal makes the LP relaxation feasible.
pub fn diagnose_infeasibility(built: &BuiltModel) -> Vec<&'static str> {
    let mut culprits = Vec::new();
    for (family, range) in &built.families {
        let mut relaxed = StandardFormModel {
            name: built.model.name.clone(),
            vars: built.model.vars.clone(),
            rows: Vec::new(),
            objective: vec![0.0; built.model.n_vars()],
        };
        relaxed.rows = built
            .model
            .rows
            .iter()
            .enumerate()
            .filter(|(k, _)| !range.contains(k))
            .map(|(_, r)| r.clone())
            .collect();
        let lb: Vec<f64> = relaxed.vars.iter().map(|v| v.lb).collect();
        let ub: Vec<f64> = relaxed.vars.iter().map(|v| v.ub).collect();
        if solve_lp(&relaxed, &lb, &ub, &LpOptions::default()).status == LpStatus::Optimal {
            culprits.push(*family);
        }
    }
    culprits
}

/// Solves a built model; infeasibility becomes an error naming the
/// constraint families involved.
pub fn solve_built(built: &BuiltModel, ctx: &SolveContext<'_>, cfg: &ModelConfig) -> Result<Solution> {
    let raw = solve_model(&built.model, ctx.backend, cfg.time_limit_secs)?;
    if raw.status == SolveStatus::Infeasible {
        let culprits = diagnose_infeasibility(built);
        let detail = if culprits.is_empty() {
            "no single constraint family explains it".to_string()
        } else {
            format!("binding families: {}", culprits.join(", "))
        };
        return Err(Error::Infeasible(format!("model {} is infeasible; {detail}", built.model.name)));
    }
    Solution::from_values(ctx.inst, cfg, built, &raw.values, raw.status, (raw.nodes, raw.lp_iterations))
}

fn solve_with(ctx: &SolveContext<'_>, cfg: &ModelConfig, opts: &BuildOptions) -> Result<Solution> {
    let built = build_model(ctx.inst, ctx.x_base, cfg, ctx.signals, opts)?;
    solve_built(&built, ctx, cfg)
}

fn merge_stats(sol: &mut Solution, parts: &[&Solution]) {
    for p in parts {
        sol.meta.nodes += p.meta.nodes;
        sol.meta.lp_iterations += p.meta.lp_iterations;
    }
}

pub fn run_strategy(ctx: &SolveContext<'_>, cfg: &ModelConfig) -> Result<Solution> {
    match cfg.strategy {
        Strategy::Cooperative => solve_with(ctx, cfg, &BuildOptions::default()),
        Strategy::Decoupled => {
            let phase1 = solve_with(ctx, cfg, &BuildOptions { r_policy: RPolicy::Zero, ..BuildOptions::default() })?;
            let opts = BuildOptions {
                fix_x: Some(phase1.x.clone()),
                fix_dispatch: Some(phase1.dispatch()),
                ..BuildOptions::default()
            };
            let mut sol = solve_with(ctx, cfg, &opts)?;
            merge_stats(&mut sol, &[&phase1]);
            Ok(sol)
        }
        Strategy::Independent => {
            let n_dc = ctx.inst.n_dc();
            let solve_owner = |o: usize| solve_with(ctx, cfg, &BuildOptions { owner: Some(o), ..BuildOptions::default() });
            #[cfg(feature = "parallel")]
            let parts: Vec<Result<Solution>> = {
                use rayon::prelude::*;
                (0..n_dc).into_par_iter().map(solve_owner).collect()
            };
            #[cfg(not(feature = "parallel"))]
            let parts: Vec<Result<Solution>> = (0..n_dc).map(solve_owner).collect();
            let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;

            // each cluster follows the data center that hosts it at baseline
            let (n_j, n_t, _) = ctx.x_base.dims();
            let mut x = ctx.x_base.clone();
            for i in 0..n_j {
                let home = (0..n_t)
                    .flat_map(|t| (0..n_dc).map(move |l| (t, l)))
                    .find(|&(t, l)| ctx.x_base.get(i, t, l) > 0.0)
                    .map(|(_, l)| l);
                if let Some(o) = home {
                    for t in 0..n_t {
                        for l in 0..n_dc {
                            x.set(i, t, l, parts[o].x.get(i, t, l));
                        }
                    }
                }
            }
            let r: Vec<Vec<f64>> = (0..n_dc).map(|o| parts[o].r[o].clone()).collect();
            let opts = BuildOptions { fix_x: Some(x), r_policy: RPolicy::Fixed(r), ..BuildOptions::default() };
            let mut sol = solve_with(ctx, cfg, &opts)?;
            merge_stats(&mut sol, &parts.iter().collect::<Vec<_>>());
            Ok(sol)
        }
    }
}
