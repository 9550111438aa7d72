//! Outer boundaries of clusters as closed `phibar`-contours.
//!
//! The outer boundary of a cluster `W` is the part of its site boundary that
//! can be reached from infinity by a `phi`-path touching `W` and its boundary
//! only at the endpoint. It is found by flood-filling the exterior of
//! `W ∪ boundary` and keeping the boundary sites next to it. The cycle order
//! comes from following the crack between the exterior and everything else
//! with the exterior on the right, which yields a counter-clockwise tour.

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::error::GeometryError;
use crate::lattice::{Direction, Site, ORIGIN};

/// A closed `phibar`-contour: a canonical site set plus a counter-clockwise
/// cycle through all of its sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Contour {
    sites: Vec<Site>,
    cycle: Vec<Site>,
}

impl Contour {
    /// Validates `cycle` as a closed `phibar`-cycle of at least four distinct
    /// sites.
    pub fn from_cycle(cycle: Vec<Site>) -> Result<Self, GeometryError> {
        if cycle.len() < 4 {
            return Err(GeometryError::InvalidCycle(format!(
                "length {} is below 4",
                cycle.len()
            )));
        }
        for (i, &a) in cycle.iter().enumerate() {
            let b = cycle[(i + 1) % cycle.len()];
            if !a.is_phibar_adjacent(b) {
                return Err(GeometryError::InvalidCycle(format!(
                    "{a} and {b} are not phibar-adjacent"
                )));
            }
        }
        let mut sites = cycle.clone();
        sites.sort_unstable();
        if let Some(w) = sites.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeometryError::ContourNotSimple(w[0]));
        }
        Ok(Contour { sites, cycle })
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sorted site set; the identity of the contour.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn cycle(&self) -> &[Site] {
        &self.cycle
    }

    pub fn contains(&self, s: Site) -> bool {
        self.sites.binary_search(&s).is_ok()
    }

    /// The site following `s` in the cycle.
    pub fn successor(&self, s: Site) -> Option<Site> {
        let i = self.cycle.iter().position(|&t| t == s)?;
        Some(self.cycle[(i + 1) % self.cycle.len()])
    }

    /// Winding number of the cycle around `p`.
    pub fn winding_number(&self, p: Site) -> i32 {
        winding_number(&self.cycle, p)
    }

    pub fn encloses_origin(&self) -> bool {
        self.winding_number(ORIGIN) != 0
    }

    /// Turn angles (in eighths) at every vertex of the cycle, in cycle order.
    pub fn turns(&self) -> Vec<i32> {
        let n = self.cycle.len();
        let dir = |i: usize| {
            Direction::from_offset(self.cycle[(i + 1) % n] - self.cycle[i % n])
                .expect("cycle steps are phibar moves")
        };
        (0..n).map(|i| dir(i + n - 1).turn_to(dir(i))).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ContourRecord {
    length: usize,
    cycle: Vec<Site>,
}

impl Serialize for Contour {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ContourRecord {
            length: self.len(),
            cycle: self.cycle.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Contour {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rec = ContourRecord::deserialize(deserializer)?;
        let contour = Contour::from_cycle(rec.cycle).map_err(serde::de::Error::custom)?;
        if contour.len() != rec.length {
            return Err(serde::de::Error::custom("length does not match cycle"));
        }
        Ok(contour)
    }
}

/// Winding number of the closed polygon through `cycle` around `p`, in exact
/// integer arithmetic. `p` must not be a vertex.
pub fn winding_number(cycle: &[Site], p: Site) -> i32 {
    let cross = |a: Site, b: Site| {
        (b.x - a.x) as i64 * (p.y - a.y) as i64 - (p.x - a.x) as i64 * (b.y - a.y) as i64
    };
    let mut wn = 0;
    for (i, &a) in cycle.iter().enumerate() {
        let b = cycle[(i + 1) % cycle.len()];
        if a.y <= p.y {
            if b.y > p.y && cross(a, b) > 0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross(a, b) < 0 {
            wn -= 1;
        }
    }
    wn
}

pub fn outer_boundary(w: &Cluster) -> Result<Contour, GeometryError> {
    BoundaryScratch::default().contour(w.sites())
}

const OTHER: u8 = 0;
const MEMBER: u8 = 1;
const BOUNDARY: u8 = 2;
const EXTERIOR: u8 = 3;

/// Reusable grid for outer-boundary computations over many clusters.
#[derive(Default, Debug)]
pub struct BoundaryScratch {
    cells: Vec<u8>,
    stack: Vec<usize>,
    x0: i32,
    y0: i32,
    h: usize,
    w: usize,
}

/// Sizes and outer boundary of one cluster, as produced by
/// [`BoundaryScratch::analyze`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryInfo {
    /// `|boundary of W|`.
    pub boundary_len: usize,
    /// Sorted outer-boundary sites.
    pub outer: Vec<Site>,
}

impl BoundaryScratch {
    // Column-major so ascending index order matches `Site` ordering.
    #[inline]
    fn idx(&self, s: Site) -> usize {
        (s.x - self.x0) as usize * self.h + (s.y - self.y0) as usize
    }

    #[inline]
    fn site(&self, i: usize) -> Site {
        Site::new((i / self.h) as i32 + self.x0, (i % self.h) as i32 + self.y0)
    }

    #[inline]
    fn in_box(&self, s: Site) -> bool {
        s.x >= self.x0
            && s.y >= self.y0
            && ((s.x - self.x0) as usize) < self.w
            && ((s.y - self.y0) as usize) < self.h
    }

    /// Classifies cells of a box padded by two around `sites`.
    fn fill(&mut self, sites: &[Site]) -> usize {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for s in sites {
            xmin = xmin.min(s.x);
            xmax = xmax.max(s.x);
            ymin = ymin.min(s.y);
            ymax = ymax.max(s.y);
        }
        self.x0 = xmin - 2;
        self.y0 = ymin - 2;
        self.w = (xmax - xmin + 5) as usize;
        self.h = (ymax - ymin + 5) as usize;
        self.cells.clear();
        self.cells.resize(self.w * self.h, OTHER);
        for &s in sites {
            let i = self.idx(s);
            self.cells[i] = MEMBER;
        }
        let h = self.h;
        let mut boundary_len = 0;
        for &s in sites {
            let i = self.idx(s);
            for j in [i + h, i + 1, i - h, i - 1] {
                if self.cells[j] == OTHER {
                    self.cells[j] = BOUNDARY;
                    boundary_len += 1;
                }
            }
        }
        // The outermost ring is never in W or its boundary, so the corner
        // seeds the unbounded component.
        self.stack.clear();
        self.cells[0] = EXTERIOR;
        self.stack.push(0);
        let (w, cells, stack) = (self.w, &mut self.cells, &mut self.stack);
        while let Some(i) = stack.pop() {
            let (col, row) = (i / h, i % h);
            let candidates = [
                (col + 1 < w).then(|| i + h),
                (row + 1 < h).then(|| i + 1),
                (col > 0).then(|| i - h),
                (row > 0).then(|| i - 1),
            ];
            for j in candidates.into_iter().flatten() {
                if cells[j] == OTHER {
                    cells[j] = EXTERIOR;
                    stack.push(j);
                }
            }
        }
        boundary_len
    }

    fn is_outer(&self, i: usize) -> bool {
        let h = self.h;
        self.cells[i] == BOUNDARY
            && [i + h, i + 1, i - h, i - 1]
                .iter()
                .any(|&j| self.cells[j] == EXTERIOR)
    }

    /// `|boundary|` and the sorted outer boundary of the cluster `sites`.
    /// `sites` must be nonempty and `phi`-connected; no check is made.
    pub fn analyze(&mut self, sites: &[Site]) -> BoundaryInfo {
        let boundary_len = self.fill(sites);
        let outer = (0..self.cells.len())
            .filter(|&i| self.is_outer(i))
            .map(|i| self.site(i))
            .collect();
        BoundaryInfo {
            boundary_len,
            outer,
        }
    }

    /// The outer boundary of `sites` as a counter-clockwise contour.
    pub fn contour(&mut self, sites: &[Site]) -> Result<Contour, GeometryError> {
        if sites.is_empty() {
            return Err(GeometryError::EmptyCluster);
        }
        let info = self.analyze(sites);
        let filled = |s: Site| self.in_box(s) && self.cells[self.idx(s)] != EXTERIOR;

        // The smallest outer site is leftmost, so its west side faces the
        // exterior. Walk down that side: the filled region stays on the left.
        let start_site = info.outer[0];
        let start = (start_site, Direction::S);
        let (mut cell, mut heading) = start;
        let mut cycle = vec![start_site];
        let limit = 4 * self.cells.len();
        for _ in 0..limit {
            let right = heading.rotate(-2);
            let ahead = cell.step(heading);
            let diagonal = ahead.step(right);
            if filled(diagonal) {
                cell = diagonal;
                heading = right;
            } else if filled(ahead) {
                cell = ahead;
            } else {
                heading = heading.rotate(2);
            }
            if (cell, heading) == start {
                break;
            }
            if *cycle.last().unwrap() != cell {
                cycle.push(cell);
            }
        }
        if cycle.len() > 1 && cycle.last() == cycle.first() {
            cycle.pop();
        }
        let contour = Contour::from_cycle(cycle)?;
        if contour.sites() != info.outer.as_slice() {
            return Err(GeometryError::InvalidCycle(
                "crack trace does not cover the outer boundary".into(),
            ));
        }
        Ok(contour)
    }
}

/// Bit-parallel outer-boundary analysis in a fixed square box around the
/// origin, one `u64` mask per row.
///
/// Sites must satisfy `|x|, |y| <= radius - 2` so that the outer ring of the
/// box belongs to the exterior. [`BitBoundary::analyze`] returns `None` for
/// clusters that leave that range.
#[derive(Clone, Debug)]
pub struct BitBoundary {
    radius: i32,
    member: Vec<u64>,
    boundary: Vec<u64>,
    free: Vec<u64>,
    exterior: Vec<u64>,
    outer: Vec<u64>,
}

/// Result of [`BitBoundary::analyze`]; the outer boundary itself is left in
/// the analyzer and read through [`BitBoundary::outer_rows`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitInfo {
    pub boundary_len: usize,
    pub outer_len: usize,
}

impl BitBoundary {
    /// Largest radius whose box fits in 64 columns.
    pub const MAX_RADIUS: i32 = 31;

    pub fn new(radius: i32) -> Option<Self> {
        if !(2..=Self::MAX_RADIUS).contains(&radius) {
            return None;
        }
        let side = (2 * radius + 1) as usize;
        let rows = vec![0u64; side];
        Some(BitBoundary {
            radius,
            member: rows.clone(),
            boundary: rows.clone(),
            free: rows.clone(),
            exterior: rows.clone(),
            outer: rows,
        })
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn analyze(&mut self, sites: &[Site]) -> Option<BitInfo> {
        self.analyze_up_to(sites, usize::MAX)
    }

    /// Like [`BitBoundary::analyze`], but may stop early once the outer
    /// boundary is known to have more than `limit` sites. In that case the
    /// returned `outer_len` exceeds `limit` without being exact, and
    /// `boundary_len` and the outer rows are unspecified.
    pub fn analyze_up_to(&mut self, sites: &[Site], limit: usize) -> Option<BitInfo> {
        let r = self.radius;
        let inner = r - 2;
        if sites.is_empty() {
            return None;
        }
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for s in sites {
            if s.x.abs() > inner || s.y.abs() > inner {
                return None;
            }
            xmin = xmin.min(s.x);
            xmax = xmax.max(s.x);
            ymin = ymin.min(s.y);
            ymax = ymax.max(s.y);
        }
        // Work in the bounding box padded by two; everything outside it is
        // exterior.
        let lo = (ymin + r - 2) as usize;
        let hi = (ymax + r + 2) as usize;
        let width = (xmax - xmin + 5) as u32;
        let cols = ((1u64 << width) - 1) << (xmin + r - 2);
        let member = &mut self.member[lo..=hi];
        member.iter_mut().for_each(|m| *m = 0);
        for s in sites {
            member[(s.y + r) as usize - lo] |= 1u64 << (s.x + r);
        }
        let rows = hi - lo + 1;
        let (boundary, free, ext) = (
            &mut self.boundary[lo..=hi],
            &mut self.free[lo..=hi],
            &mut self.exterior[lo..=hi],
        );
        for y in 0..rows {
            let m = member[y];
            let mut d = (m << 1) | (m >> 1);
            if y > 0 {
                d |= member[y - 1];
            }
            if y + 1 < rows {
                d |= member[y + 1];
            }
            boundary[y] = d & !m;
            free[y] = cols & !(d | m);
        }
        // Free cells with a clear line to the box edge along their row or
        // column are exterior.
        let mut seen = 0u64;
        for y in 0..rows {
            let blocked = cols & !free[y];
            let left = blocked.wrapping_sub(1) & !blocked;
            let right = if blocked == 0 { !0 } else { !(u64::MAX >> blocked.leading_zeros()) };
            ext[y] = free[y] & (left | right | !seen);
            seen |= blocked;
        }
        seen = 0;
        for y in (0..rows).rev() {
            ext[y] |= free[y] & !seen;
            seen |= cols & !free[y];
        }
        let near = |ext: &[u64], y: usize| {
            let e = ext[y];
            e | (e << 1) | (e >> 1) | ext[y - 1] | ext[y + 1]
        };
        let visible: usize = (1..rows - 1)
            .map(|y| (boundary[y] & near(ext, y)).count_ones() as usize)
            .sum();
        if visible > limit {
            return Some(BitInfo {
                boundary_len: 0,
                outer_len: visible,
            });
        }
        let spread = |seed: u64, free: u64| {
            let mut x = seed & free;
            loop {
                let nx = (x | (x << 1) | (x >> 1)) & free;
                if nx == x {
                    return x;
                }
                x = nx;
            }
        };
        loop {
            let mut changed = false;
            for y in (1..rows - 1).chain((1..rows - 1).rev()) {
                let e = spread(ext[y] | ext[y - 1] | ext[y + 1], free[y]);
                changed |= e != ext[y];
                ext[y] = e;
            }
            if !changed {
                break;
            }
        }
        self.outer.iter_mut().for_each(|o| *o = 0);
        let mut boundary_len = 0;
        let mut outer_len = 0;
        for y in 1..rows - 1 {
            let o = boundary[y] & near(ext, y);
            self.outer[lo + y] = o;
            boundary_len += boundary[y].count_ones() as usize;
            outer_len += o.count_ones() as usize;
        }
        Some(BitInfo {
            boundary_len,
            outer_len,
        })
    }

    /// Row masks of the outer boundary from the last successful
    /// [`BitBoundary::analyze`]; row `y + radius`, bit `x + radius`.
    pub fn outer_rows(&self) -> &[u64] {
        &self.outer
    }

    /// Sorted outer-boundary sites from the last analysis.
    pub fn outer_sites(&self) -> Vec<Site> {
        let r = self.radius;
        let mut out = Vec::new();
        for (y, &row) in self.outer.iter().enumerate() {
            let mut bits = row;
            while bits != 0 {
                let x = bits.trailing_zeros() as i32;
                out.push(Site::new(x - r, y as i32 - r));
                bits &= bits - 1;
            }
        }
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Cluster;
    use crate::lattice::phi_neighbors;

    fn s(x: i32, y: i32) -> Site {
        Site::new(x, y)
    }

    fn cluster(sites: &[(i32, i32)]) -> Cluster {
        Cluster::from_sites(sites.iter().map(|&(x, y)| s(x, y)), ORIGIN).unwrap()
    }

    #[test]
    fn diamond_around_single_site() {
        let g = outer_boundary(&cluster(&[(0, 0)])).unwrap();
        assert_eq!(g.len(), 4);
        let mut expect = phi_neighbors(ORIGIN).to_vec();
        expect.sort();
        assert_eq!(g.sites(), expect.as_slice());
        // Counter-clockwise: after (1, 0) comes (0, 1).
        assert_eq!(g.successor(s(1, 0)), Some(s(0, 1)));
        assert_eq!(g.winding_number(ORIGIN), 1);
    }

    #[test]
    fn domino_contour_is_whole_boundary() {
        let w = cluster(&[(0, 0), (1, 0)]);
        let g = outer_boundary(&w).unwrap();
        assert_eq!(g.sites(), w.boundary());
        assert_eq!(g.len(), 6);
    }

    #[test]
    fn ring_excludes_hole() {
        let mut ring = vec![];
        for x in -1..=1 {
            for y in -1..=1 {
                if (x, y) != (0, 0) {
                    ring.push((x + 1, y));
                }
            }
        }
        // Ring centred on (1, 0); the origin is its middle-left site.
        let w = Cluster::from_sites(ring.iter().map(|&(x, y)| s(x, y)), ORIGIN).unwrap();
        assert!(w.boundary().contains(&s(1, 0)));
        let g = outer_boundary(&w).unwrap();
        assert!(!g.contains(s(1, 0)));
        assert_eq!(g.len(), w.boundary().len() - 1);
        assert_eq!(g.len(), 12);
    }

    #[test]
    fn fjord_sites_behind_the_mouth_are_inner() {
        // U-shape open to the north with a two-deep slot at x = 1.
        let w = cluster(&[(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (2, 2)]);
        let g = outer_boundary(&w).unwrap();
        assert!(g.contains(s(1, 2)));
        assert!(!g.contains(s(1, 1)));
        assert!(w.boundary().contains(&s(1, 1)));
    }

    #[test]
    fn tent_contour_touches_ray_from_below() {
        // An arch over (2, 0): the contour dips to (2, 0) from below.
        let w = cluster(&[(0, 0), (1, 0), (1, 1), (2, 1), (3, 1), (3, 0)]);
        let g = outer_boundary(&w).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.successor(s(2, 0)), Some(s(3, -1)));
        assert_eq!(g.winding_number(ORIGIN), 1);
    }

    #[test]
    fn from_cycle_validation() {
        assert!(Contour::from_cycle(vec![s(1, 0), s(0, 1), s(-1, 0)]).is_err());
        assert!(Contour::from_cycle(vec![s(2, 0), s(0, 1), s(-1, 0), s(0, -1)]).is_err());
        assert!(matches!(
            Contour::from_cycle(vec![s(1, 0), s(0, 1), s(1, 0), s(0, 1)]),
            Err(GeometryError::ContourNotSimple(_))
        ));
    }

    #[test]
    fn winding_of_clockwise_diamond() {
        let cw = [s(1, 0), s(0, -1), s(-1, 0), s(0, 1)];
        assert_eq!(winding_number(&cw, ORIGIN), -1);
        assert_eq!(winding_number(&cw, s(5, 5)), 0);
    }

    #[test]
    fn json_record() {
        let g = outer_boundary(&cluster(&[(0, 0)])).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"length":4,"cycle":[[-1,0],[0,-1],[1,0],[0,1]]}"#);
        let back: Contour = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn bit_analysis_matches_grid() {
        let mut grid = BoundaryScratch::default();
        let mut bits = BitBoundary::new(9).unwrap();
        crate::enumerate::for_each_origin_cluster(crate::enumerate::ClusterCaps::size(8), |w| {
            let info = grid.analyze(w);
            let b = bits.analyze(w).unwrap();
            assert_eq!(b.boundary_len, info.boundary_len);
            assert_eq!(b.outer_len, info.outer.len());
            assert_eq!(bits.outer_sites(), info.outer);
        })
        .unwrap();
    }

    #[test]
    fn bit_analysis_rejects_sites_near_the_edge() {
        let mut bits = BitBoundary::new(3).unwrap();
        assert!(bits.analyze(&[s(0, 0), s(1, 0)]).is_some());
        assert!(bits.analyze(&[s(0, 0), s(1, 0), s(2, 0)]).is_none());
        assert!(BitBoundary::new(32).is_none());
    }
}
