//! Reporting view of a schedule change as signed flows on virtual links.

use crate::error::{Error, Result};
use crate::spacetime::{LinkKind, SpaceTimeIndex, VirtualLink};
use crate::workload::{JobCluster, ScheduleMatrix};

fn spatial_link(idx: &SpaceTimeIndex, t: usize, a: usize, b: usize) -> usize {
    let n = idx.n_dc();
    let pairs = n * (n - 1) / 2;
    let pair = a * n - a * (a + 1) / 2 + (b - a - 1);
    t * pairs + pair
}

fn temporal_link(idx: &SpaceTimeIndex, l: usize, t: usize) -> usize {
    idx.link_counts().0 + l * (idx.n_slots() - 1) + t
}

/// Adds `mass` moving from cell `(t0, l0)` to `(t1, l1)`: first along the
/// source DC's temporal links, then across one spatial link.
fn route(idx: &SpaceTimeIndex, flows: &mut [f64], (t0, l0): (usize, usize), (t1, l1): (usize, usize), mass: f64) {
    if t1 > t0 {
        for t in t0..t1 {
            flows[temporal_link(idx, l0, t)] += mass;
        }
    } else {
        for t in t1..t0 {
            flows[temporal_link(idx, l0, t)] -= mass;
        }
    }
    if l0 < l1 {
        flows[spatial_link(idx, t1, l0, l1)] += mass;
    } else if l1 < l0 {
        flows[spatial_link(idx, t1, l1, l0)] -= mass;
    }
}

/// Unweighted per-link flows for one cluster, in canonical link order.
pub fn cluster_link_flows(x: &ScheduleMatrix, x_base: &ScheduleMatrix, i: usize, idx: &SpaceTimeIndex) -> Vec<f64> {
    let (k_sp, k_tm) = idx.link_counts();
    let mut flows = vec![0.0; k_sp + k_tm];
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for t in 0..idx.n_slots() {
        for l in 0..idx.n_dc() {
            let d = x.get(i, t, l) - x_base.get(i, t, l);
            if d < 0.0 {
                sources.push(((t, l), -d));
            } else if d > 0.0 {
                sinks.push(((t, l), d));
            }
        }
    }
    // greedy pairing in canonical cell order; any pairing conserves mass
    let (mut a, mut b) = (0, 0);
    while a < sources.len() && b < sinks.len() {
        let m = sources[a].1.min(sinks[b].1);
        route(idx, &mut flows, sources[a].0, sinks[b].0, m);
        sources[a].1 -= m;
        sinks[b].1 -= m;
        if sources[a].1 <= 1e-15 {
            a += 1;
        }
        if sinks[b].1 <= 1e-15 {
            b += 1;
        }
    }
    flows
}

/// Weight-scaled signed flows on every virtual link. Positive values follow
/// the link's canonical orientation.
pub fn derived_link_flows(
    x: &ScheduleMatrix,
    x_base: &ScheduleMatrix,
    jobs: &[JobCluster],
) -> Result<Vec<(VirtualLink, f64)>> {
    if x.dims() != x_base.dims() || x.dims().0 != jobs.len() {
        return Err(Error::Dimension("schedules and clusters disagree on shape".into()));
    }
    let (_, n_t, n_l) = x.dims();
    let idx = SpaceTimeIndex::new(n_l, n_t)?;
    let links = idx.enumerate_links();
    let mut total = vec![0.0; links.len()];
    for (i, job) in jobs.iter().enumerate() {
        for (acc, f) in total.iter_mut().zip(cluster_link_flows(x, x_base, i, &idx)) {
            *acc += job.weight * f;
        }
    }
    Ok(links.into_iter().zip(total).collect())
}

/// Net inflow minus outflow at every node (0-based offset), for checking
/// conservation.
pub fn node_divergence(links: &[(VirtualLink, f64)], idx: &SpaceTimeIndex) -> Vec<f64> {
    let mut div = vec![0.0; idx.node_count()];
    for (link, f) in links {
        div[link.to - 1] += f;
        div[link.from - 1] -= f;
    }
    div
}

pub fn is_spatial(link: &VirtualLink) -> bool {
    link.kind == LinkKind::Spatial
}
