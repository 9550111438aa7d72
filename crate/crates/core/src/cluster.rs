//! Clusters of occupied sites and the probability of the cluster event.

use std::collections::{HashSet, VecDeque};

use crate::error::GeometryError;
use crate::lattice::{phi_neighbors, CoupledField, Site};

/// A finite `phi`-connected set of sites together with its site boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    sites: Vec<Site>,
    boundary: Vec<Site>,
    origin: Site,
}

impl Cluster {
    /// Builds a cluster from an arbitrary collection of sites, checking that
    /// it is nonempty, contains `origin` and is `phi`-connected.
    pub fn from_sites<I>(sites: I, origin: Site) -> Result<Self, GeometryError>
    where
        I: IntoIterator<Item = Site>,
    {
        let mut sites: Vec<Site> = sites.into_iter().collect();
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(GeometryError::EmptyCluster);
        }
        if sites.binary_search(&origin).is_err() {
            return Err(GeometryError::OriginNotInCluster(origin));
        }
        let members: HashSet<Site> = sites.iter().copied().collect();
        let mut seen = HashSet::from([origin]);
        let mut stack = vec![origin];
        while let Some(s) = stack.pop() {
            for n in phi_neighbors(s) {
                if members.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        if seen.len() != sites.len() {
            return Err(GeometryError::Disconnected);
        }
        Ok(Self::from_sorted_unchecked(sites, origin))
    }

    pub(crate) fn from_sorted_unchecked(sites: Vec<Site>, origin: Site) -> Self {
        let boundary = site_boundary(&sites);
        Cluster {
            sites,
            boundary,
            origin,
        }
    }

    /// The sites of the cluster, sorted.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Vacant `phi`-neighbours of the cluster, sorted.
    pub fn boundary(&self) -> &[Site] {
        &self.boundary
    }

    pub fn origin(&self) -> Site {
        self.origin
    }

    pub fn contains(&self, s: Site) -> bool {
        self.sites.binary_search(&s).is_ok()
    }

    /// `(|W|, |boundary of W|)`, the exponents of the cluster event weight.
    pub fn sizes(&self) -> (usize, usize) {
        (self.sites.len(), self.boundary.len())
    }
}

/// Sorted set of sites outside `sorted_sites` that are `phi`-adjacent to it.
pub fn site_boundary(sorted_sites: &[Site]) -> Vec<Site> {
    let mut out: Vec<Site> = sorted_sites
        .iter()
        .flat_map(|&s| phi_neighbors(s))
        .filter(|n| sorted_sites.binary_search(n).is_err())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// What the cluster through a site looks like inside a finite window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClusterOutcome {
    /// The site itself is vacant.
    Vacant,
    /// The cluster touches the window border; the finite stand-in for an
    /// infinite cluster.
    EscapesWindow,
    Finite(Cluster),
}

impl ClusterOutcome {
    pub fn escapes(&self) -> bool {
        matches!(self, ClusterOutcome::EscapesWindow)
    }
}

/// The cluster containing `s` in the configuration `field` thresholded at `c`.
pub fn cluster_at(field: &CoupledField, c: f64, s: Site) -> Result<ClusterOutcome, GeometryError> {
    let window = field.window();
    if !window.contains(s) {
        return Err(GeometryError::SiteOutsideWindow(s));
    }
    if !field.occupied(s, c) {
        return Ok(ClusterOutcome::Vacant);
    }
    let mut seen = HashSet::from([s]);
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        if window.on_border(v) {
            return Ok(ClusterOutcome::EscapesWindow);
        }
        for n in phi_neighbors(v) {
            if field.occupied(n, c) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let mut sites: Vec<Site> = seen.into_iter().collect();
    sites.sort_unstable();
    Ok(ClusterOutcome::Finite(Cluster::from_sorted_unchecked(sites, s)))
}

/// `c^|W| (1 - c)^|boundary|`, the probability that the cluster through the
/// origin is exactly `w`.
pub fn cluster_event_probability(w: &Cluster, c: f64) -> f64 {
    let (n, b) = w.sizes();
    c.powi(n as i32) * (1.0 - c).powi(b as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_field, Window, ORIGIN};

    fn s(x: i32, y: i32) -> Site {
        Site::new(x, y)
    }

    #[test]
    fn single_site_cluster() {
        let w = Cluster::from_sites([ORIGIN], ORIGIN).unwrap();
        assert_eq!(w.boundary(), {
            let mut b = phi_neighbors(ORIGIN).to_vec();
            b.sort();
            b
        });
        assert_eq!(w.sizes(), (1, 4));
    }

    #[test]
    fn domino_has_six_boundary_sites() {
        let w = Cluster::from_sites([s(0, 0), s(1, 0)], ORIGIN).unwrap();
        assert_eq!(
            w.boundary(),
            &[s(-1, 0), s(0, -1), s(0, 1), s(1, -1), s(1, 1), s(2, 0)]
        );
    }

    #[test]
    fn invalid_clusters_are_rejected() {
        assert_eq!(
            Cluster::from_sites(Vec::<Site>::new(), ORIGIN),
            Err(GeometryError::EmptyCluster)
        );
        assert_eq!(
            Cluster::from_sites([s(1, 0)], ORIGIN),
            Err(GeometryError::OriginNotInCluster(ORIGIN))
        );
        assert_eq!(
            Cluster::from_sites([s(0, 0), s(1, 1)], ORIGIN),
            Err(GeometryError::Disconnected)
        );
    }

    #[test]
    fn event_probability() {
        let w = Cluster::from_sites([ORIGIN], ORIGIN).unwrap();
        assert_eq!(cluster_event_probability(&w, 0.5), 1.0 / 32.0);
        let d = Cluster::from_sites([s(0, 0), s(0, 1), s(0, 2)], ORIGIN).unwrap();
        assert_eq!(cluster_event_probability(&d, 1.0), 0.0);
    }

    #[test]
    fn cluster_at_extremes() {
        let f = sample_field(Window::new(5).unwrap(), 3);
        assert_eq!(cluster_at(&f, 1.0, ORIGIN).unwrap(), ClusterOutcome::EscapesWindow);
        assert_eq!(cluster_at(&f, 0.0, ORIGIN).unwrap(), ClusterOutcome::Vacant);
        assert_eq!(
            cluster_at(&f, 0.5, s(6, 0)),
            Err(GeometryError::SiteOutsideWindow(s(6, 0)))
        );
    }

    #[test]
    fn isolated_origin() {
        // Find a field whose origin is occupied with all four neighbours vacant.
        let window = Window::new(3).unwrap();
        let (f, c) = (0..10_000u64)
            .map(|seed| sample_field(window, seed))
            .find_map(|f| {
                let u0 = f.value(ORIGIN);
                let min_n = phi_neighbors(ORIGIN)
                    .iter()
                    .map(|&n| f.value(n))
                    .fold(f64::INFINITY, f64::min);
                (u0 < min_n).then(|| (f, (u0 + min_n) / 2.0))
            })
            .unwrap();
        match cluster_at(&f, c, ORIGIN).unwrap() {
            ClusterOutcome::Finite(w) => {
                assert_eq!(w.sites(), &[ORIGIN]);
                assert_eq!(w.boundary().len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
