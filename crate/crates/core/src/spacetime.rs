//! Space–time virtual-node indexing.
//!
//! Every (data center, slot) pair maps to a single virtual node so schedules
//! and loads can be stored as flat vectors. Indices on the public surface
//! are 1-based: data centers `1..=N`, slots `1..=T`, nodes `1..=N·T`.
//! Virtual links connect nodes that share a slot (spatial migration) or
//! that share a data center in adjacent slots (temporal deferral). Each
//! unordered link is listed once; the sign of a flow on it gives direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceTimeIndex {
    n_dc: usize,
    n_slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Spatial,
    Temporal,
}

/// An undirected link stored with its canonical orientation `from → to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualLink {
    pub kind: LinkKind,
    pub from: usize,
    pub to: usize,
    /// Optional migration cost per unit of flow; zero unless configured.
    #[serde(default)]
    pub cost: f64,
}

impl SpaceTimeIndex {
    pub fn new(n_dc: usize, n_slots: usize) -> Result<Self> {
        if n_dc == 0 || n_slots == 0 {
            return Err(Error::Domain(format!(
                "space-time index needs N ≥ 1 and T ≥ 1, got N={n_dc}, T={n_slots}"
            )));
        }
        Ok(Self { n_dc, n_slots })
    }

    pub fn n_dc(&self) -> usize {
        self.n_dc
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// Total number of virtual nodes, N·T.
    pub fn node_count(&self) -> usize {
        self.n_dc * self.n_slots
    }

    /// Node id of data center `l` at slot `t` (both 1-based): `(l-1)·T + t`.
    pub fn node_index(&self, l: usize, t: usize) -> Result<usize> {
        if l == 0 || l > self.n_dc || t == 0 || t > self.n_slots {
            return Err(Error::Domain(format!(
                "(l={l}, t={t}) outside 1..={} × 1..={}",
                self.n_dc, self.n_slots
            )));
        }
        Ok((l - 1) * self.n_slots + t)
    }

    pub fn node_inverse(&self, p: usize) -> Result<(usize, usize)> {
        if p == 0 || p > self.node_count() {
            return Err(Error::Domain(format!(
                "node {p} outside 1..={}",
                self.node_count()
            )));
        }
        let z = p - 1;
        Ok((z / self.n_slots + 1, z % self.n_slots + 1))
    }

    /// Zero-based flat offset for 0-based `(l, t)`; used for internal storage.
    #[inline]
    pub(crate) fn offset(&self, l: usize, t: usize) -> usize {
        l * self.n_slots + t
    }

    /// `(K_sp, K_tm)` = `(C(N,2)·T, N·(T-1))`.
    pub fn link_counts(&self) -> (usize, usize) {
        let pairs = self.n_dc * (self.n_dc - 1) / 2;
        (pairs * self.n_slots, self.n_dc * (self.n_slots - 1))
    }

    /// All links in canonical order: spatial links slot-major then pair-major,
    /// followed by temporal links data-center-major then slot-major.
    pub fn enumerate_links(&self) -> Vec<VirtualLink> {
        let (k_sp, k_tm) = self.link_counts();
        let mut links = Vec::with_capacity(k_sp + k_tm);
        for t in 1..=self.n_slots {
            for a in 1..=self.n_dc {
                for b in (a + 1)..=self.n_dc {
                    links.push(VirtualLink {
                        kind: LinkKind::Spatial,
                        from: (a - 1) * self.n_slots + t,
                        to: (b - 1) * self.n_slots + t,
                        cost: 0.0,
                    });
                }
            }
        }
        for l in 1..=self.n_dc {
            for t in 1..self.n_slots {
                let base = (l - 1) * self.n_slots;
                links.push(VirtualLink {
                    kind: LinkKind::Temporal,
                    from: base + t,
                    to: base + t + 1,
                    cost: 0.0,
                });
            }
        }
        links
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_index_examples() {
        let idx = SpaceTimeIndex::new(2, 3).unwrap();
        assert_eq!(idx.node_index(1, 1).unwrap(), 1);
        assert_eq!(idx.node_index(2, 3).unwrap(), 6);
        assert_eq!(idx.node_count(), 6);
        let big = SpaceTimeIndex::new(8, 24).unwrap();
        assert_eq!(big.node_index(3, 5).unwrap(), 53);
    }

    #[test]
    fn node_inverse_examples() {
        let idx = SpaceTimeIndex::new(2, 3).unwrap();
        assert_eq!(idx.node_inverse(6).unwrap(), (2, 3));
        assert_eq!(idx.node_inverse(1).unwrap(), (1, 1));
        let big = SpaceTimeIndex::new(8, 24).unwrap();
        assert_eq!(big.node_inverse(53).unwrap(), (3, 5));
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let idx = SpaceTimeIndex::new(2, 3).unwrap();
        assert!(matches!(idx.node_index(0, 1), Err(Error::Domain(_))));
        assert!(matches!(idx.node_index(3, 1), Err(Error::Domain(_))));
        assert!(matches!(idx.node_index(1, 4), Err(Error::Domain(_))));
        assert!(matches!(idx.node_inverse(0), Err(Error::Domain(_))));
        assert!(matches!(idx.node_inverse(7), Err(Error::Domain(_))));
        assert!(SpaceTimeIndex::new(0, 3).is_err());
    }

    #[test]
    fn link_count_examples() {
        assert_eq!(SpaceTimeIndex::new(8, 24).unwrap().link_counts(), (672, 184));
        assert_eq!(SpaceTimeIndex::new(1, 5).unwrap().link_counts(), (0, 4));
        assert_eq!(SpaceTimeIndex::new(3, 1).unwrap().link_counts(), (3, 0));
    }

    #[test]
    fn enumerate_examples() {
        let links = SpaceTimeIndex::new(2, 2).unwrap().enumerate_links();
        assert_eq!(links.len(), 4);
        assert_eq!(links.iter().filter(|l| l.kind == LinkKind::Spatial).count(), 2);
        assert!(SpaceTimeIndex::new(1, 1).unwrap().enumerate_links().is_empty());
        let links = SpaceTimeIndex::new(3, 2).unwrap().enumerate_links();
        assert_eq!(links.iter().filter(|l| l.kind == LinkKind::Spatial).count(), 6);
        assert_eq!(links.iter().filter(|l| l.kind == LinkKind::Temporal).count(), 3);
    }

    #[test]
    fn link_endpoints_respect_kind() {
        let idx = SpaceTimeIndex::new(4, 5).unwrap();
        for link in idx.enumerate_links() {
            let (la, ta) = idx.node_inverse(link.from).unwrap();
            let (lb, tb) = idx.node_inverse(link.to).unwrap();
            match link.kind {
                LinkKind::Spatial => {
                    assert_eq!(ta, tb);
                    assert!(la < lb);
                }
                LinkKind::Temporal => {
                    assert_eq!(la, lb);
                    assert_eq!(tb, ta + 1);
                }
            }
        }
    }

    #[test]
    fn exhaustive_bijection_and_counts() {
        for n in 1..=12 {
            for t in 1..=48 {
                let idx = SpaceTimeIndex::new(n, t).unwrap();
                for p in 1..=idx.node_count() {
                    let (l, s) = idx.node_inverse(p).unwrap();
                    assert_eq!(idx.node_index(l, s).unwrap(), p);
                }
                let links = idx.enumerate_links();
                let (k_sp, k_tm) = idx.link_counts();
                let sp = links.iter().filter(|l| l.kind == LinkKind::Spatial).count();
                assert_eq!((sp, links.len() - sp), (k_sp, k_tm));
                assert_eq!(links, idx.enumerate_links());
            }
        }
    }
}
