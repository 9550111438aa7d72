//! Self-avoiding `phibar`-circuits around the origin, counted by length.
//!
//! Circuits are generated the way the walk bound counts them: start at a ray
//! site `(l, 0)`, take one of the four [`FIRST_STEPS`], continue with the
//! turns the [`ContinuationRule`] admits, and close back onto the start. On
//! top of that a circuit must not revisit a site, must wind once
//! counter-clockwise around the origin, and `(l, 0)` must be its designated
//! crossing in the sense of [`class_decomposition`], so each oriented
//! circuit is generated from exactly one root.
//!
//! [`class_decomposition`]: crate::counts::class_decomposition

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::winding_number;
use crate::counts::FIRST_STEPS;
use crate::error::EnumerationError;
use crate::lattice::{Direction, Site, ORIGIN};

/// Which continuations are admissible after a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuationRule {
    /// Straight on or a turn of at most 90 degrees: excludes the reversal
    /// and both directions next to it. Outer boundaries never turn sharper.
    #[default]
    Five,
    /// Anything but the immediate reversal.
    Seven,
}

impl ContinuationRule {
    #[inline]
    pub fn allows(self, turn: i32) -> bool {
        match self {
            ContinuationRule::Five => turn.abs() <= 2,
            ContinuationRule::Seven => turn.abs() <= 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContinuationRule::Five => "five",
            ContinuationRule::Seven => "seven",
        }
    }
}

/// Circuit counts indexed by length `0..=k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCounts {
    pub k_max: usize,
    pub rule: ContinuationRule,
    /// Distinct rooted, oriented circuits.
    pub walks: Vec<u64>,
    /// Distinct site sets among them.
    pub circuits: Vec<u64>,
    /// Search nodes expanded.
    pub nodes: u64,
}

/// Default safety limit on expanded search nodes.
pub const DEFAULT_NODE_LIMIT: u64 = 20_000_000_000;

pub fn self_avoiding_circuit_count(k_max: usize, rule: ContinuationRule) -> Result<WalkCounts, EnumerationError> {
    self_avoiding_circuit_count_with(k_max, rule, DEFAULT_NODE_LIMIT)
}

pub fn self_avoiding_circuit_count_with(
    k_max: usize,
    rule: ContinuationRule,
    node_limit: u64,
) -> Result<WalkCounts, EnumerationError> {
    if k_max < 4 {
        return Err(EnumerationError::InvalidArgument(format!("k_max must be >= 4, got {k_max}")));
    }
    if k_max > 100 {
        return Err(EnumerationError::InvalidArgument(format!("k_max {k_max} is not feasible")));
    }
    // A circuit through (l, 0) around the origin also meets (x, 0) with
    // x <= -1, so it has at least 2(l + 1) steps.
    let roots: Vec<(i32, Direction)> = (1..=(k_max / 2).saturating_sub(1) as i32)
        .flat_map(|l| FIRST_STEPS.iter().map(move |&d| (l, d)))
        .collect();
    let per_root: Vec<Result<RootResult, EnumerationError>> = roots
        .par_iter()
        .map(|&(l, d)| Search::new(k_max, rule, l, node_limit).run(d))
        .collect();

    let mut walks = vec![0u64; k_max + 1];
    let mut sets: Vec<HashSet<Vec<u16>>> = vec![HashSet::new(); k_max + 1];
    let mut nodes = 0u64;
    for r in per_root {
        let r = r?;
        nodes += r.nodes;
        if nodes > node_limit {
            return Err(EnumerationError::CapExceeded {
                what: "search nodes",
                limit: node_limit,
            });
        }
        for (k, n) in r.walks.iter().enumerate() {
            walks[k] += n;
        }
        for (k, s) in r.sets.into_iter().enumerate() {
            sets[k].extend(s);
        }
    }
    Ok(WalkCounts {
        k_max,
        rule,
        walks,
        circuits: sets.iter().map(|s| s.len() as u64).collect(),
        nodes,
    })
}

struct RootResult {
    walks: Vec<u64>,
    sets: Vec<HashSet<Vec<u16>>>,
    nodes: u64,
}

struct Search {
    k_max: usize,
    rule: ContinuationRule,
    l: i32,
    start: Site,
    radius: i32,
    side: usize,
    occupied: Vec<bool>,
    path: Vec<Site>,
    dirs: Vec<Direction>,
    /// Path sites on the negative horizontal axis.
    left_crossings: usize,
    result: RootResult,
    node_limit: u64,
}

impl Search {
    fn new(k_max: usize, rule: ContinuationRule, l: i32, node_limit: u64) -> Self {
        let radius = k_max as i32 + 1;
        let side = 2 * radius as usize + 1;
        Search {
            k_max,
            rule,
            l,
            start: Site::new(l, 0),
            radius,
            side,
            occupied: vec![false; side * side],
            path: Vec::with_capacity(k_max),
            dirs: Vec::with_capacity(k_max),
            left_crossings: 0,
            result: RootResult {
                walks: vec![0; k_max + 1],
                sets: vec![HashSet::new(); k_max + 1],
                nodes: 0,
            },
            node_limit,
        }
    }

    #[inline]
    fn idx(&self, s: Site) -> usize {
        (s.y + self.radius) as usize * self.side + (s.x + self.radius) as usize
    }

    /// A step out of a ray site nearer than the root would make that site the
    /// designated crossing instead.
    #[inline]
    fn preempts_root(&self, from: Site, d: Direction) -> bool {
        from.y == 0 && from.x >= 1 && from.x < self.l && FIRST_STEPS.contains(&d)
    }

    #[inline]
    fn steps_needed(&self, s: Site) -> u32 {
        let home = s.chebyshev(self.start);
        if self.left_crossings > 0 || (s.y == 0 && s.x <= -1) {
            home
        } else {
            s.chebyshev(Site::new(-1, 0)) + self.l as u32 + 1
        }
    }

    fn push(&mut self, s: Site, d: Option<Direction>) {
        let i = self.idx(s);
        self.occupied[i] = true;
        if s.y == 0 && s.x <= -1 {
            self.left_crossings += 1;
        }
        self.path.push(s);
        if let Some(d) = d {
            self.dirs.push(d);
        }
    }

    fn pop(&mut self) {
        let s = self.path.pop().unwrap();
        self.dirs.pop();
        let i = self.idx(s);
        self.occupied[i] = false;
        if s.y == 0 && s.x <= -1 {
            self.left_crossings -= 1;
        }
    }

    fn run(mut self, first: Direction) -> Result<RootResult, EnumerationError> {
        let x1 = self.start.step(first);
        if x1 == ORIGIN || self.steps_needed(x1) as usize > self.k_max - 1 {
            return Ok(self.result);
        }
        self.push(self.start, None);
        self.push(x1, Some(first));
        self.extend()?;
        Ok(self.result)
    }

    fn try_close(&mut self) {
        let t = self.path.len();
        let cur = self.path[t - 1];
        if t < 4 || !cur.is_phibar_adjacent(self.start) {
            return;
        }
        let closing = Direction::from_offset(self.start - cur).unwrap();
        let last = self.dirs[t - 2];
        if !self.rule.allows(last.turn_to(closing))
            || !self.rule.allows(closing.turn_to(self.dirs[0]))
            || self.preempts_root(cur, closing)
            || winding_number(&self.path, ORIGIN) != 1
        {
            return;
        }
        self.result.walks[t] += 1;
        let mut key: Vec<u16> = self
            .path
            .iter()
            .map(|s| (((s.x + 128) as u16) << 8) | (s.y + 128) as u16)
            .collect();
        key.sort_unstable();
        self.result.sets[t].insert(key);
    }

    fn extend(&mut self) -> Result<(), EnumerationError> {
        self.result.nodes += 1;
        if self.result.nodes > self.node_limit {
            return Err(EnumerationError::CapExceeded {
                what: "search nodes",
                limit: self.node_limit,
            });
        }
        self.try_close();
        let t = self.path.len();
        if t == self.k_max {
            return Ok(());
        }
        let cur = self.path[t - 1];
        let last = self.dirs[t - 2];
        // After placing the next site (index t) the circuit still needs
        // to get home in at most k_max - t steps.
        let budget = (self.k_max - t) as u32;
        for turn in -3..=3 {
            if !self.rule.allows(turn) {
                continue;
            }
            let d = last.rotate(turn);
            let next = cur.step(d);
            if next == ORIGIN
                || next == self.start
                || self.occupied[self.idx(next)]
                || self.preempts_root(cur, d)
                || self.steps_needed(next) > budget
            {
                continue;
            }
            self.push(next, Some(d));
            let res = self.extend();
            self.pop();
            res?;
        }
        Ok(())
    }
}
