//! Exact outer-boundary contour counts `S_k` from the cluster oracle, the
//! `(l, i)` class decomposition, the analytic walk bound, and the combined
//! [`CountTable`].
//!
//! Every contour of length `k` around the origin bounds a cluster whose
//! bounding box is at most `k / 2 - 1` sites wide and high: the contour
//! reaches one site past the cluster on every side and a closed king walk
//! needs at least twice its horizontal (and vertical) extent in steps.
//! Enumerating clusters under that span cap therefore sees every contour of
//! length `<= k_max`, along with every cluster that realizes it.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::contour::{BitBoundary, BoundaryScratch, Contour};
use crate::enumerate::{for_each_origin_cluster, ClusterCaps};
use crate::error::{EnumerationError, GeometryError};
use crate::lattice::{Direction, Site};
use crate::walks::{self_avoiding_circuit_count, ContinuationRule, WalkCounts};

/// Class of a contour around the origin: `l` is the position of its
/// designated crossing `(l, 0)` of the positive horizontal ray, `i` the index
/// (1-based) of the step taken next in [`FIRST_STEPS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassKey {
    pub l: u32,
    pub i: u8,
}

/// Admissible first steps after the ray crossing: `+e1`, `+e1+e2`, `+e2`,
/// `-e1+e2`.
pub const FIRST_STEPS: [Direction; 4] = [Direction::E, Direction::NE, Direction::N, Direction::NW];

pub fn first_step_index(d: Direction) -> Option<u8> {
    FIRST_STEPS.iter().position(|&f| f == d).map(|i| i as u8 + 1)
}

/// Designated ray crossing of a counter-clockwise contour around the origin.
///
/// Takes the site of the contour on the ray `{(j, 0) : j >= 1}` nearest the
/// origin whose successor lies in [`FIRST_STEPS`]. Sites where the contour
/// only dips onto the ray from below (successor below the axis) are passed
/// over; a counter-clockwise contour around the origin always has at least
/// one upward departure from the ray.
pub fn class_decomposition(gamma: &Contour) -> Result<ClassKey, GeometryError> {
    let mut on_ray: Vec<Site> = gamma
        .sites()
        .iter()
        .copied()
        .filter(|s| s.y == 0 && s.x >= 1)
        .collect();
    on_ray.sort_by_key(|s| s.x);
    for z in on_ray {
        let next = gamma.successor(z).expect("site is on the contour");
        let step = Direction::from_offset(next - z).expect("contour steps are phibar moves");
        if let Some(i) = first_step_index(step) {
            return Ok(ClassKey { l: z.x as u32, i });
        }
    }
    Err(GeometryError::NoRayIntersection)
}

/// `4 * 5^(k-2) * (k-1)`, the bound on the number of contours of length `k`.
/// Zero for `k < 2`.
pub fn walk_bound(k: usize) -> BigUint {
    if k < 2 {
        return BigUint::from(0u32);
    }
    BigUint::from(4u32) * BigUint::from(5u32).pow((k - 2) as u32) * BigUint::from((k - 1) as u64)
}

/// Bounding-box span that guarantees completeness up to contour length `k_max`.
pub fn span_cap(k_max: usize) -> usize {
    (k_max / 2).saturating_sub(1).max(1)
}

/// Cluster-size bound implied by [`span_cap`].
pub fn size_cap(k_max: usize) -> usize {
    span_cap(k_max).pow(2)
}

/// One distinct contour together with every cluster that realizes it,
/// tallied by `(|W|, |boundary|)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourEntry {
    pub contour: Contour,
    pub class: ClassKey,
    pub weights: BTreeMap<(u32, u32), u64>,
}

impl ContourEntry {
    /// `P(gamma) = sum over clusters of c^|W| (1 - c)^|boundary|`.
    pub fn probability(&self, c: f64) -> f64 {
        let terms = self
            .weights
            .iter()
            .map(|(&(a, b), &n)| n as f64 * c.powi(a as i32) * (1.0 - c).powi(b as i32));
        crate::numeric::neumaier_sum(terms)
    }
}

/// Options for [`ContourInventory::build`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InventoryOptions {
    /// Cluster-size cap. `None` uses [`size_cap`], which is complete by
    /// construction; a smaller cap is accepted only if raising it by 2
    /// reveals no new contour.
    pub max_size: Option<usize>,
    /// Safety limit on visited clusters.
    pub max_clusters: Option<u64>,
}

/// All contours of length `<= k_max` around the origin, found by computing
/// the outer boundary of every origin cluster and grouping by site set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourInventory {
    k_max: usize,
    max_size: usize,
    span: usize,
    clusters_visited: u64,
    entries: BTreeMap<Vec<Site>, ContourEntry>,
}

impl ContourInventory {
    pub fn build(k_max: usize, opts: InventoryOptions) -> Result<Self, EnumerationError> {
        let complete_size = size_cap(k_max);
        match opts.max_size {
            Some(n) if n < complete_size => {
                let inv = Self::scan(k_max, n, opts.max_clusters)?;
                let raised = Self::scan(k_max, n + 2, opts.max_clusters)?;
                if inv.entries.keys().ne(raised.entries.keys()) {
                    return Err(EnumerationError::Incomplete {
                        k_max,
                        cap: n,
                        cap_plus: n + 2,
                    });
                }
                Ok(inv)
            }
            _ => Self::scan(k_max, complete_size, opts.max_clusters),
        }
    }

    fn scan(k_max: usize, max_size: usize, max_clusters: Option<u64>) -> Result<Self, EnumerationError> {
        let span = span_cap(k_max);
        let caps = ClusterCaps {
            max_size,
            max_span: Some(span),
            max_count: max_clusters,
        };
        // Clusters lie within `span - 1` of the origin in each coordinate.
        let mut bits = BitBoundary::new(span as i32 + 1);
        let mut scratch = BoundaryScratch::default();
        let mut trace = BoundaryScratch::default();
        let mut found: FxHashMap<Box<[u64]>, ContourEntry> = FxHashMap::default();
        let mut wide: FxHashMap<Vec<Site>, ContourEntry> = FxHashMap::default();
        let mut failure: Option<GeometryError> = None;
        let mut record = |w: &[Site], key: (u32, u32), slot: Option<&mut ContourEntry>| -> Option<ContourEntry> {
            if let Some(entry) = slot {
                *entry.weights.entry(key).or_default() += 1;
                return None;
            }
            let built = trace
                .contour(w)
                .and_then(|contour| Ok((class_decomposition(&contour)?, contour)));
            match built {
                Ok((class, contour)) => Some(ContourEntry {
                    contour,
                    class,
                    weights: BTreeMap::from([(key, 1)]),
                }),
                Err(e) => {
                    failure = Some(e);
                    None
                }
            }
        };
        let visited = for_each_origin_cluster(caps, |w| {
            if let Some(info) = bits.as_mut().and_then(|b| b.analyze_up_to(w, k_max)) {
                if info.outer_len > k_max {
                    return;
                }
                let key = (w.len() as u32, info.boundary_len as u32);
                let rows = bits.as_ref().unwrap().outer_rows();
                if let Some(entry) = found.get_mut(rows) {
                    *entry.weights.entry(key).or_default() += 1;
                } else if let Some(entry) = record(w, key, None) {
                    found.insert(rows.into(), entry);
                }
                return;
            }
            let info = scratch.analyze(w);
            if info.outer.len() > k_max {
                return;
            }
            let key = (w.len() as u32, info.boundary_len as u32);
            if let Some(entry) = record(w, key, wide.get_mut(&info.outer)) {
                wide.insert(info.outer, entry);
            }
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        let entries = found
            .into_values()
            .chain(wide.into_values())
            .map(|e| (e.contour.sites().to_vec(), e))
            .collect();
        Ok(ContourInventory {
            k_max,
            max_size,
            span,
            clusters_visited: visited,
            entries,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn clusters_visited(&self) -> u64 {
        self.clusters_visited
    }

    /// Entries in canonical (sorted site set) order.
    pub fn entries(&self) -> impl Iterator<Item = &ContourEntry> {
        self.entries.values()
    }

    pub fn get(&self, sorted_sites: &[Site]) -> Option<&ContourEntry> {
        self.entries.get(sorted_sites)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `S_k` for `k` in `0..=k_max`.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k_max + 1];
        for e in self.entries.values() {
            counts[e.contour.len()] += 1;
        }
        counts
    }

    /// `|C_l^(i)|` restricted to each length `k`, keyed by `(k, class)`.
    pub fn class_counts(&self) -> BTreeMap<(usize, ClassKey), u64> {
        let mut out = BTreeMap::new();
        for e in self.entries.values() {
            *out.entry((e.contour.len(), e.class)).or_default() += 1;
        }
        out
    }
}

/// Exact `S_k` with its class breakdown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactCounts {
    pub k_max: usize,
    /// Indexed by `k`, `0..=k_max`.
    pub counts: Vec<u64>,
    pub classes: BTreeMap<(usize, ClassKey), u64>,
    pub max_size: usize,
    pub span: usize,
    pub clusters_visited: u64,
}

pub fn exact_contour_counts(k_max: usize) -> Result<ExactCounts, EnumerationError> {
    exact_contour_counts_with(k_max, InventoryOptions::default())
}

pub fn exact_contour_counts_with(k_max: usize, opts: InventoryOptions) -> Result<ExactCounts, EnumerationError> {
    if k_max < 4 {
        return Err(EnumerationError::InvalidArgument(format!("k_max must be >= 4, got {k_max}")));
    }
    let inv = ContourInventory::build(k_max, opts)?;
    Ok(ExactCounts::from_inventory(&inv))
}

impl ExactCounts {
    pub fn from_inventory(inv: &ContourInventory) -> Self {
        ExactCounts {
            k_max: inv.k_max(),
            counts: inv.counts(),
            classes: inv.class_counts(),
            max_size: inv.max_size(),
            span: inv.span(),
            clusters_visited: inv.clusters_visited(),
        }
    }
}

/// One row of a [`CountTable`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub k: usize,
    pub exact: u64,
    /// Rooted self-avoiding circuits.
    pub sa_walk: u64,
    /// The same circuits identified by site set.
    pub sa_circuits: u64,
    #[serde(with = "decimal")]
    pub walk_bound: BigUint,
}

/// Big integers as decimal strings, so JSON readers need no bignum support.
mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub k: usize,
    pub l: u32,
    pub i: u8,
    pub count: u64,
}

/// `S_k`, the self-avoiding refinement and the analytic bound side by side,
/// for `4 <= k <= k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub k_max: usize,
    pub rule: ContinuationRule,
    pub max_cluster_size: usize,
    pub max_span: usize,
    pub clusters_visited: u64,
    pub rows: Vec<CountRow>,
    pub classes: Vec<ClassRow>,
}

impl CountTable {
    pub fn compute(k_max: usize, rule: ContinuationRule) -> Result<Self, EnumerationError> {
        let exact = exact_contour_counts(k_max)?;
        let walks = self_avoiding_circuit_count(k_max, rule)?;
        Ok(Self::assemble(&exact, &walks))
    }

    pub fn assemble(exact: &ExactCounts, walks: &WalkCounts) -> Self {
        let k_max = exact.k_max.min(walks.k_max);
        let rows = (4..=k_max)
            .map(|k| CountRow {
                k,
                exact: exact.counts[k],
                sa_walk: walks.walks[k],
                sa_circuits: walks.circuits[k],
                walk_bound: walk_bound(k),
            })
            .collect();
        let classes = exact
            .classes
            .iter()
            .filter(|((k, _), _)| *k <= k_max)
            .map(|(&(k, key), &count)| ClassRow {
                k,
                l: key.l,
                i: key.i,
                count,
            })
            .collect();
        CountTable {
            k_max,
            rule: walks.rule,
            max_cluster_size: exact.max_size,
            max_span: exact.span,
            clusters_visited: exact.clusters_visited,
            rows,
            classes,
        }
    }

    pub fn row(&self, k: usize) -> Option<&CountRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}
