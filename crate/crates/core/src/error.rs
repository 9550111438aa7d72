use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("window radius must be at least 1")]
    EmptyWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("site {0} lies outside the window")]
    SiteOutsideWindow(Site),
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("cluster does not contain its origin {0}")]
    OriginNotInCluster(Site),
    #[error("cluster is not phi-connected")]
    Disconnected,
    #[error("outer boundary is not a simple closed phibar-cycle (site {0} repeats)")]
    ContourNotSimple(Site),
    #[error("sequence is not a closed phibar-cycle: {0}")]
    InvalidCycle(String),
    #[error("contour does not meet the positive ray from the origin")]
    NoRayIntersection,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("enumeration cap exceeded: more than {limit} {what}")]
    CapExceeded { what: &'static str, limit: u64 },
    #[error(
        "size cap {cap} cannot guarantee completeness up to length {k_max}: \
         raising it to {cap_plus} produced new contours"
    )]
    Incomplete { k_max: usize, cap: usize, cap_plus: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("series diverges at c = {c}: 5(1 - c) = {zeta} >= 1")]
    DivergentSeries { c: f64, zeta: f64 },
    #[error("refined threshold needs counts up to k >= {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
