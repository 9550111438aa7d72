//! Square-lattice geometry, finite windows and the coupled random field.
//!
//! Two adjacency relations are used throughout the crate: `phi` (the four
//! nearest neighbours) for clusters and `phibar` (the eight king-move
//! neighbours) for contours. Neighbour lists always come out in the fixed
//! counter-clockwise order starting from east.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// A site of the integer lattice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

/// Unit step along the positive horizontal axis; the ray used for contour
/// classes runs along it.
pub const E1: Site = Site { x: 1, y: 0 };
/// Unit step along the positive vertical axis.
pub const E2: Site = Site { x: 0, y: 1 };

pub const ORIGIN: Site = Site { x: 0, y: 0 };

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// Chebyshev distance, i.e. the number of king moves between two sites.
    pub fn chebyshev(self, other: Site) -> u32 {
        (self.x - other.x)
            .unsigned_abs()
            .max((self.y - other.y).unsigned_abs())
    }

    pub fn step(self, dir: Direction) -> Site {
        self + dir.offset()
    }

    pub fn is_phi_adjacent(self, other: Site) -> bool {
        let d = other - self;
        d.x.abs() + d.y.abs() == 1
    }

    pub fn is_phibar_adjacent(self, other: Site) -> bool {
        self != other && self.chebyshev(other) == 1
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, rhs: Site) -> Site {
        Site::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, rhs: Site) -> Site {
        Site::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

// Sites travel as `[x, y]` pairs in every JSON file.
impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x, y] = <[i32; 2]>::deserialize(deserializer)?;
        Ok(Site { x, y })
    }
}

/// The eight king-move directions, counter-clockwise from east.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];

    pub const AXIAL: [Direction; 4] = [Direction::E, Direction::N, Direction::W, Direction::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 8]
    }

    pub fn offset(self) -> Site {
        match self {
            Direction::E => E1,
            Direction::NE => E1 + E2,
            Direction::N => E2,
            Direction::NW => E2 - E1,
            Direction::W => -E1,
            Direction::SW => -E1 - E2,
            Direction::S => -E2,
            Direction::SE => E1 - E2,
        }
    }

    pub fn from_offset(d: Site) -> Option<Direction> {
        Self::ALL.into_iter().find(|dir| dir.offset() == d)
    }

    /// Rotate counter-clockwise by `eighths` multiples of 45 degrees.
    pub fn rotate(self, eighths: i32) -> Direction {
        Self::from_index((self.index() as i32 + eighths).rem_euclid(8) as usize)
    }

    pub fn opposite(self) -> Direction {
        self.rotate(4)
    }

    pub fn is_axial(self) -> bool {
        self.index().is_multiple_of(2)
    }

    /// Signed turn from `self` to `next` in eighths of a full turn, in -3..=4.
    pub fn turn_to(self, next: Direction) -> i32 {
        let t = (next.index() as i32 - self.index() as i32).rem_euclid(8);
        if t > 4 {
            t - 8
        } else {
            t
        }
    }
}

/// The four `phi` neighbours in the order E, N, W, S.
pub fn phi_neighbors(s: Site) -> [Site; 4] {
    Direction::AXIAL.map(|d| s.step(d))
}

/// The eight `phibar` neighbours in the order E, NE, N, NW, W, SW, S, SE.
pub fn phibar_neighbors(s: Site) -> [Site; 8] {
    Direction::ALL.map(|d| s.step(d))
}

/// The square `{(x, y) : max(|x|, |y|) <= radius}` centred on the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    radius: u32,
}

impl Window {
    pub fn new(radius: u32) -> Result<Self, LatticeError> {
        if radius == 0 {
            return Err(LatticeError::EmptyWindow);
        }
        Ok(Window { radius })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn site_count(&self) -> usize {
        self.side() * self.side()
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x.unsigned_abs() <= self.radius && s.y.unsigned_abs() <= self.radius
    }

    pub fn on_border(&self, s: Site) -> bool {
        s.x.unsigned_abs().max(s.y.unsigned_abs()) == self.radius
    }

    /// Row-major index of a site inside the window.
    pub fn index(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let r = self.radius as i32;
        Some((s.y + r) as usize * self.side() + (s.x + r) as usize)
    }

    pub fn site_at(&self, index: usize) -> Site {
        let r = self.radius as i32;
        let side = self.side();
        Site::new((index % side) as i32 - r, (index / side) as i32 - r)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.site_count()).map(|i| self.site_at(i))
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th member of a family of fields rooted at `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0x5851_F42D_4C95_7F2D).wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform field on the lattice, thresholded at a concentration to give the
/// Bernoulli occupation field.
///
/// Each value is a pure function of `(seed, x, y)`, so the same field viewed
/// through a larger window agrees with the smaller one on their overlap, and
/// `occupied(s, c)` is monotone in `c` for every site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoupledField {
    window: Window,
    seed: u64,
    key: u64,
}

impl CoupledField {
    pub fn new(window: Window, seed: u64) -> Self {
        CoupledField {
            window,
            seed,
            key: mix64(seed.wrapping_mul(GOLDEN_GAMMA) ^ 0xD1B5_4A32_D192_ED03),
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same field, viewed through a different window.
    pub fn with_window(&self, window: Window) -> Self {
        CoupledField { window, ..*self }
    }

    /// The uniform value `u(s)` in `[0, 1)`. Defined for every lattice site,
    /// not only those inside the window.
    #[inline]
    pub fn value(&self, s: Site) -> f64 {
        let packed = ((s.x as u32 as u64) << 32) | s.y as u32 as u64;
        let h = mix64(self.key ^ mix64(packed.wrapping_add(GOLDEN_GAMMA)));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn occupied(&self, s: Site, c: f64) -> bool {
        self.value(s) < c
    }

    /// Values of every window site in row-major order.
    pub fn values(&self) -> Vec<f64> {
        self.window.sites().map(|s| self.value(s)).collect()
    }
}

pub fn sample_field(window: Window, seed: u64) -> CoupledField {
    CoupledField::new(window, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_neighbors_of_origin() {
        assert_eq!(
            phi_neighbors(ORIGIN),
            [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)]
        );
    }

    #[test]
    fn phibar_neighbors_are_king_moves() {
        let n = phibar_neighbors(ORIGIN);
        assert_eq!(n.len(), 8);
        for s in n {
            assert_eq!(s.chebyshev(ORIGIN), 1);
        }
        for s in phi_neighbors(ORIGIN) {
            assert!(n.contains(&s));
        }
        let mut sorted = n.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
    }

    #[test]
    fn translated_neighbors() {
        let a = Site::new(5, -3);
        let shifted: Vec<_> = phi_neighbors(ORIGIN).iter().map(|&s| s + a).collect();
        assert_eq!(phi_neighbors(a).to_vec(), shifted);
    }

    #[test]
    fn turns() {
        assert_eq!(Direction::E.turn_to(Direction::N), 2);
        assert_eq!(Direction::N.turn_to(Direction::E), -2);
        assert_eq!(Direction::E.turn_to(Direction::W), 4);
        assert_eq!(Direction::SE.turn_to(Direction::NE), 2);
        assert_eq!(Direction::NE.turn_to(Direction::S), -3);
    }

    #[test]
    fn window_basics() {
        assert!(Window::new(0).is_err());
        let w = Window::new(3).unwrap();
        assert_eq!(w.site_count(), 49);
        for (i, s) in w.sites().enumerate() {
            assert_eq!(w.index(s), Some(i));
        }
        assert!(w.on_border(Site::new(3, -1)));
        assert!(!w.on_border(Site::new(2, 2)));
        assert_eq!(w.index(Site::new(4, 0)), None);
    }

    #[test]
    fn field_is_reproducible() {
        let w = Window::new(8).unwrap();
        assert_eq!(sample_field(w, 42).values(), sample_field(w, 42).values());
        assert_ne!(sample_field(w, 42).values(), sample_field(w, 43).values());
    }

    #[test]
    fn field_is_window_independent() {
        let small = sample_field(Window::new(4).unwrap(), 9);
        let large = small.with_window(Window::new(10).unwrap());
        for s in small.window().sites() {
            assert_eq!(small.value(s).to_bits(), large.value(s).to_bits());
        }
    }

    #[test]
    fn occupation_frequency_at_one_half() {
        let w = Window::new(64).unwrap();
        let mut below = 0usize;
        let mut total = 0usize;
        for seed in 0..100 {
            let f = sample_field(w, seed);
            below += w.sites().filter(|&s| f.value(s) < 0.5).count();
            total += w.site_count();
        }
        let frac = below as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn occupation_frequency_within_three_sigma() {
        let w = Window::new(40).unwrap();
        for &c in &[0.1, 0.3, 0.5927, 0.9] {
            let f = sample_field(w, 1234);
            let n = w.site_count() as f64;
            let hits = w.sites().filter(|&s| f.occupied(s, c)).count() as f64;
            let sigma = (c * (1.0 - c) / n).sqrt();
            assert!((hits / n - c).abs() < 3.0 * sigma, "c = {c}");
        }
    }

    proptest! {
        #[test]
        fn neighbors_translate(x in -1000i32..1000, y in -1000i32..1000,
                               ax in -1000i32..1000, ay in -1000i32..1000) {
            let s = Site::new(x, y);
            let a = Site::new(ax, ay);
            prop_assert_eq!(phi_neighbors(s + a), phi_neighbors(s).map(|t| t + a));
            prop_assert_eq!(phibar_neighbors(s + a), phibar_neighbors(s).map(|t| t + a));
        }

        #[test]
        fn occupation_is_monotone(seed in any::<u64>(), c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let f = sample_field(Window::new(6).unwrap(), seed);
            for s in f.window().sites() {
                prop_assert!(!f.occupied(s, lo) || f.occupied(s, hi));
            }
        }

        #[test]
        fn values_in_unit_interval(seed in any::<u64>(), x in any::<i32>(), y in any::<i32>()) {
            let u = sample_field(Window::new(1).unwrap(), seed).value(Site::new(x, y));
            prop_assert!((0.0..1.0).contains(&u));
        }
    }
}
