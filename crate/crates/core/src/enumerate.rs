//! Enumeration of the finite `phi`-connected clusters containing the origin.
//!
//! Redelmeier's untried-set algorithm on the whole lattice, rooted at the
//! origin: every connected site set containing the origin is produced
//! exactly once. Clusters at different positions are different events, so
//! nothing is identified up to translation or symmetry.

use crate::error::EnumerationError;
use crate::lattice::{Site, ORIGIN};

/// Limits on the enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterCaps {
    /// Largest cluster size emitted.
    pub max_size: usize,
    /// Largest bounding-box width and height, in sites.
    pub max_span: Option<usize>,
    /// Safety limit on the number of clusters visited.
    pub max_count: Option<u64>,
}

impl ClusterCaps {
    pub fn size(max_size: usize) -> Self {
        ClusterCaps {
            max_size,
            max_span: None,
            max_count: None,
        }
    }

    pub fn with_span(mut self, span: usize) -> Self {
        self.max_span = Some(span);
        self
    }

    pub fn with_count_limit(mut self, limit: u64) -> Self {
        self.max_count = Some(limit);
        self
    }
}

const FREE: u8 = 0;
const SEEN: u8 = 1;

#[derive(Clone, Copy)]
struct BBox {
    xmin: i32,
    xmax: i32,
    ymin: i32,
    ymax: i32,
}

struct Redelmeier<'a, F> {
    caps: ClusterCaps,
    radius: i32,
    side: usize,
    marks: Vec<u8>,
    cluster: Vec<Site>,
    visited: u64,
    emit: &'a mut F,
}

impl<F: FnMut(&[Site])> Redelmeier<'_, F> {
    fn idx(&self, s: Site) -> Option<usize> {
        let r = self.radius;
        (s.x.abs() <= r && s.y.abs() <= r)
            .then(|| (s.y + r) as usize * self.side + (s.x + r) as usize)
    }

    fn recurse(&mut self, mut untried: Vec<Site>, bbox: BBox) -> Result<(), EnumerationError> {
        while let Some(v) = untried.pop() {
            let nb = BBox {
                xmin: bbox.xmin.min(v.x),
                xmax: bbox.xmax.max(v.x),
                ymin: bbox.ymin.min(v.y),
                ymax: bbox.ymax.max(v.y),
            };
            if let Some(span) = self.caps.max_span {
                let span = span as i32;
                if nb.xmax - nb.xmin >= span || nb.ymax - nb.ymin >= span {
                    // Every extension through v is at least as wide.
                    continue;
                }
            }
            self.visited += 1;
            if let Some(limit) = self.caps.max_count {
                if self.visited > limit {
                    return Err(EnumerationError::CapExceeded {
                        what: "clusters",
                        limit,
                    });
                }
            }
            self.cluster.push(v);
            (self.emit)(&self.cluster);
            if self.cluster.len() < self.caps.max_size {
                let mut fresh = Vec::with_capacity(4);
                for n in crate::lattice::phi_neighbors(v) {
                    if let Some(i) = self.idx(n) {
                        if self.marks[i] == FREE {
                            self.marks[i] = SEEN;
                            fresh.push(n);
                        }
                    }
                }
                let mut child = untried.clone();
                child.extend_from_slice(&fresh);
                let res = self.recurse(child, nb);
                for n in fresh {
                    let i = self.idx(n).unwrap();
                    self.marks[i] = FREE;
                }
                res?;
            }
            self.cluster.pop();
        }
        Ok(())
    }
}

/// Calls `emit` once for every `phi`-connected site set containing the
/// origin within `caps`. Sites are passed in insertion order, not sorted.
/// Returns the number of clusters emitted.
pub fn for_each_origin_cluster<F>(caps: ClusterCaps, mut emit: F) -> Result<u64, EnumerationError>
where
    F: FnMut(&[Site]),
{
    if caps.max_size == 0 {
        return Err(EnumerationError::InvalidArgument(
            "max_cluster_size must be at least 1".into(),
        ));
    }
    if caps.max_span == Some(0) {
        return Err(EnumerationError::InvalidArgument("span cap must be at least 1".into()));
    }
    // No cluster site is farther than this from the origin; its neighbours
    // need one more ring of marks.
    let reach = match caps.max_span {
        Some(span) => (span - 1).min(caps.max_size - 1),
        None => caps.max_size - 1,
    } as i32;
    let radius = reach + 1;
    let side = 2 * radius as usize + 1;
    let mut walker = Redelmeier {
        caps,
        radius,
        side,
        marks: vec![FREE; side * side],
        cluster: Vec::with_capacity(caps.max_size),
        visited: 0,
        emit: &mut emit,
    };
    let root = walker.idx(ORIGIN).unwrap();
    walker.marks[root] = SEEN;
    let bbox = BBox {
        xmin: 0,
        xmax: 0,
        ymin: 0,
        ymax: 0,
    };
    walker.recurse(vec![ORIGIN], bbox)?;
    Ok(walker.visited)
}

/// All origin clusters with at most `max_cluster_size` sites, each as a
/// sorted site list.
pub fn enumerate_origin_clusters(max_cluster_size: usize) -> Result<Vec<Vec<Site>>, EnumerationError> {
    enumerate_origin_clusters_with(ClusterCaps::size(max_cluster_size).with_count_limit(50_000_000))
}

pub fn enumerate_origin_clusters_with(caps: ClusterCaps) -> Result<Vec<Vec<Site>>, EnumerationError> {
    let mut out = Vec::new();
    for_each_origin_cluster(caps, |w| {
        let mut v = w.to_vec();
        v.sort_unstable();
        out.push(v);
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_sizes() {
        assert_eq!(enumerate_origin_clusters(1).unwrap(), vec![vec![ORIGIN]]);
        assert_eq!(enumerate_origin_clusters(2).unwrap().len(), 5);
        assert_eq!(enumerate_origin_clusters(3).unwrap().len(), 23);
    }

    #[test]
    fn clusters_are_distinct_connected_and_rooted() {
        let all = enumerate_origin_clusters(6).unwrap();
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        for w in &all {
            assert!(crate::cluster::Cluster::from_sites(w.iter().copied(), ORIGIN).is_ok());
        }
    }

    #[test]
    fn zero_size_is_rejected() {
        assert!(matches!(
            enumerate_origin_clusters(0),
            Err(EnumerationError::InvalidArgument(_))
        ));
    }

    #[test]
    fn count_limit() {
        let err = for_each_origin_cluster(ClusterCaps::size(6).with_count_limit(100), |_| {});
        assert_eq!(
            err,
            Err(EnumerationError::CapExceeded {
                what: "clusters",
                limit: 100
            })
        );
    }

    #[test]
    fn span_cap_matches_filter() {
        let span = 3;
        let capped = enumerate_origin_clusters_with(ClusterCaps::size(9).with_span(span)).unwrap();
        let filtered: Vec<_> = enumerate_origin_clusters(9)
            .unwrap()
            .into_iter()
            .filter(|w| {
                let dx = w.iter().map(|s| s.x).max().unwrap() - w.iter().map(|s| s.x).min().unwrap();
                let dy = w.iter().map(|s| s.y).max().unwrap() - w.iter().map(|s| s.y).min().unwrap();
                dx < span as i32 && dy < span as i32
            })
            .collect();
        let a: HashSet<_> = capped.into_iter().collect();
        let b: HashSet<_> = filtered.into_iter().collect();
        assert_eq!(a, b);
    }
}
