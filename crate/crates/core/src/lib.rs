//! Outer-boundary contours of site-percolation clusters on the square
//! lattice, Peierls-type bounds built from their counts, and Monte Carlo
//! checks of those bounds.
//!
//! Module map:
//!
//! - [`lattice`]: sites, adjacency, windows and the coupled random field.
//! - [`cluster`], [`contour`]: clusters, their boundaries and outer contours.
//! - [`enumerate`], [`counts`], [`walks`]: exact contour counts from cluster
//!   enumeration, the `(l, i)` classes, the walk bound and self-avoiding
//!   circuit counts.
//! - [`bounds`]: the Peierls sum, its tail, threshold bounds and `Q_r(c)`.
//! - [`monte_carlo`]: finite-window estimates and threshold bisection.

pub mod bounds;
pub mod cluster;
pub mod contour;
pub mod counts;
pub mod enumerate;
pub mod error;
pub mod lattice;
pub mod monte_carlo;
pub mod numeric;
pub mod union_find;
pub mod walks;

pub use bounds::{
    series_bound, tail_bound, threshold_upper_bound, truncated_q, BoundReport, Counts, ThresholdBound,
    TruncatedPolynomial,
};
pub use cluster::{cluster_at, cluster_event_probability, Cluster, ClusterOutcome};
pub use contour::{outer_boundary, Contour};
pub use counts::{class_decomposition, exact_contour_counts, walk_bound, ClassKey, CountTable};
pub use enumerate::enumerate_origin_clusters;
pub use error::{BoundsError, EnumerationError, GeometryError, LatticeError, McError};
pub use lattice::{phi_neighbors, phibar_neighbors, sample_field, CoupledField, Site, Window};
pub use monte_carlo::{estimate_crossing, estimate_origin_reach, estimate_threshold, McEstimate};
pub use walks::{self_avoiding_circuit_count, ContinuationRule, WalkCounts};
