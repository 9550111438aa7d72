//! Monte Carlo estimates on finite windows: the probability that the origin
//! cluster reaches the window border (a stand-in for `Q(c)`), the left-right
//! crossing probability, and a bisection estimate of the threshold.
//!
//! Trial `t` of a run with seed `s` always uses the field seeded by
//! `derive_seed(s, t)`, so any trial can be recomputed on its own and the
//! tally does not depend on how trials are spread over threads. Estimates at
//! different `c` (or radii) with the same seed share their fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::McError;
use crate::lattice::{derive_seed, phi_neighbors, CoupledField, Site, Window, ORIGIN};
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    #[serde(rename = "L")]
    pub radius: u32,
    pub c: f64,
    pub trials: u64,
    pub value: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, trials: u64, radius: u32, c: f64, seed: u64) -> Self {
        let value = hits as f64 / trials as f64;
        McEstimate {
            value,
            std_error: (value * (1.0 - value) / trials as f64).sqrt(),
            trials,
            radius,
            c,
            seed,
        }
    }
}

pub fn trial_field(window: Window, seed: u64, trial: u64) -> CoupledField {
    CoupledField::new(window, derive_seed(seed, trial))
}

/// Depth-first search from the origin that stops at the first border site.
#[derive(Debug)]
pub struct ReachScratch {
    window: Window,
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<Site>,
}

impl ReachScratch {
    pub fn new(window: Window) -> Self {
        ReachScratch {
            window,
            stamp: vec![0; window.site_count()],
            generation: 0,
            stack: Vec::new(),
        }
    }

    /// Whether the origin's cluster touches the border of `field`'s window.
    pub fn origin_reaches_border(&mut self, field: &CoupledField, c: f64) -> bool {
        if field.window() != self.window {
            *self = ReachScratch::new(field.window());
        }
        if !field.occupied(ORIGIN, c) {
            return false;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
        let gen = self.generation;
        let window = self.window;
        self.stack.clear();
        self.stack.push(ORIGIN);
        self.stamp[window.index(ORIGIN).unwrap()] = gen;
        while let Some(v) = self.stack.pop() {
            if window.on_border(v) {
                return true;
            }
            for n in phi_neighbors(v) {
                let i = window.index(n).expect("interior site has in-window neighbours");
                if self.stamp[i] != gen && field.occupied(n, c) {
                    self.stamp[i] = gen;
                    self.stack.push(n);
                }
            }
        }
        false
    }
}

/// Union-find over the whole window with two virtual columns.
#[derive(Debug)]
pub struct CrossingScratch {
    occupied: Vec<bool>,
    uf: UnionFind,
}

impl CrossingScratch {
    pub fn new(window: Window) -> Self {
        CrossingScratch {
            occupied: vec![false; window.site_count()],
            uf: UnionFind::new(window.site_count() + 2),
        }
    }

    /// Whether an occupied `phi`-path joins the left and right columns.
    pub fn crosses_left_right(&mut self, field: &CoupledField, c: f64) -> bool {
        let window = field.window();
        let n = window.site_count();
        let side = window.side();
        let (left, right) = (n, n + 1);
        self.occupied.clear();
        self.occupied.extend(window.sites().map(|s| field.occupied(s, c)));
        self.uf.reset(n + 2);
        for i in 0..n {
            if !self.occupied[i] {
                continue;
            }
            let col = i % side;
            if col == 0 {
                self.uf.union(i, left);
            }
            if col + 1 == side {
                self.uf.union(i, right);
            } else if self.occupied[i + 1] {
                self.uf.union(i, i + 1);
            }
            if i + side < n && self.occupied[i + side] {
                self.uf.union(i, i + side);
            }
        }
        self.uf.same(left, right)
    }
}

pub fn origin_reaches_border(field: &CoupledField, c: f64) -> bool {
    ReachScratch::new(field.window()).origin_reaches_border(field, c)
}

pub fn crosses_left_right(field: &CoupledField, c: f64) -> bool {
    CrossingScratch::new(field.window()).crosses_left_right(field, c)
}

fn validate(radius: u32, c: f64, trials: u64) -> Result<Window, McError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(McError::InvalidArgument(format!("concentration {c} outside [0, 1]")));
    }
    if trials == 0 {
        return Err(McError::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(Window::new(radius)?)
}

fn count_hits<S, F>(trials: u64, exec: Execution, init: impl Fn() -> S + Sync + Send, hit: F) -> u64
where
    F: Fn(&mut S, u64) -> bool + Sync + Send,
{
    match exec {
        Execution::Serial => {
            let mut scratch = init();
            (0..trials).filter(|&t| hit(&mut scratch, t)).count() as u64
        }
        Execution::Parallel => (0..trials)
            .into_par_iter()
            .map_init(&init, |s, t| hit(s, t) as u64)
            .sum(),
    }
}

pub fn estimate_origin_reach(radius: u32, c: f64, trials: u64, seed: u64) -> Result<McEstimate, McError> {
    estimate_origin_reach_with(radius, c, trials, seed, Execution::Parallel)
}

pub fn estimate_origin_reach_with(
    radius: u32,
    c: f64,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate, McError> {
    let window = validate(radius, c, trials)?;
    let hits = count_hits(
        trials,
        exec,
        || ReachScratch::new(window),
        |s, t| s.origin_reaches_border(&trial_field(window, seed, t), c),
    );
    Ok(McEstimate::from_hits(hits, trials, radius, c, seed))
}

pub fn estimate_crossing(radius: u32, c: f64, trials: u64, seed: u64) -> Result<McEstimate, McError> {
    estimate_crossing_with(radius, c, trials, seed, Execution::Parallel)
}

pub fn estimate_crossing_with(
    radius: u32,
    c: f64,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate, McError> {
    let window = validate(radius, c, trials)?;
    let hits = count_hits(
        trials,
        exec,
        || CrossingScratch::new(window),
        |s, t| s.crosses_left_right(&trial_field(window, seed, t), c),
    );
    Ok(McEstimate::from_hits(hits, trials, radius, c, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub estimate: McEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub steps: Vec<BisectionStep>,
}

pub const MIN_BISECTION_TOL: f64 = 1e-3;

/// Bisects `[0, 1]` for the concentration where the crossing probability is
/// one half, until the bracket is narrower than `tol`.
pub fn estimate_threshold(radius: u32, trials: u64, tol: f64, seed: u64) -> Result<ThresholdEstimate, McError> {
    estimate_threshold_with(radius, trials, tol, seed, Execution::Parallel)
}

pub fn estimate_threshold_with(
    radius: u32,
    trials: u64,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<ThresholdEstimate, McError> {
    if !(tol >= MIN_BISECTION_TOL) {
        return Err(McError::InvalidArgument(format!(
            "tolerance {tol} below {MIN_BISECTION_TOL}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = Vec::new();
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        let estimate = estimate_crossing_with(radius, mid, trials, seed, exec)?;
        steps.push(BisectionStep {
            lo,
            hi,
            estimate: estimate.clone(),
        });
        if estimate.value < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdEstimate {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        tol,
        steps,
    })
}
