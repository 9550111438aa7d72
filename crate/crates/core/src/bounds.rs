//! The Peierls sum over contours, its closed-form tail, the threshold bound
//! and the truncated approximation `Q_r(c)`.
//!
//! With the analytic counts `S_k <= 4 * 5^(k-2) * (k-1)` the tail from length
//! `r` on is
//!
//! ```text
//! T(r, c) = 4 (1-c)^2 * d/dz [ z^(r-1) / (1-z) ]  at z = 5(1-c)
//!         = 4 (1-c)^2 * z^(r-2) * ((r-1)(1-z) + z) / (1-z)^2
//! ```
//!
//! which is finite exactly when `c > 4/5`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::counts::{ContourInventory, CountTable, InventoryOptions};
use crate::error::BoundsError;
use crate::numeric::neumaier_sum;

/// Threshold bound from the analytic counts.
pub const ANALYTIC_THRESHOLD: f64 = 0.8;

/// Lower bound on the threshold, used only as a sanity floor.
pub const LOWER_THRESHOLD: f64 = 1.0 / 3.0;

/// Which contour counts feed a bound.
#[derive(Clone, Copy, Debug)]
pub enum Counts<'a> {
    /// `4 * 5^(k-2) * (k-1)` for every `k`.
    Analytic,
    /// Exact `S_k` up to the table's `k_max`, analytic beyond.
    Exact(&'a CountTable),
    /// Rooted self-avoiding circuit counts up to `k_max`, analytic beyond.
    SelfAvoiding(&'a CountTable),
}

impl Counts<'_> {
    pub fn mode(&self) -> &'static str {
        match self {
            Counts::Analytic => "analytic",
            Counts::Exact(_) => "exact",
            Counts::SelfAvoiding(_) => "sa",
        }
    }

    fn table(&self) -> Option<(&CountTable, fn(&crate::counts::CountRow) -> u64)> {
        match self {
            Counts::Analytic => None,
            Counts::Exact(t) => Some((t, |r| r.exact)),
            Counts::SelfAvoiding(t) => Some((t, |r| r.sa_walk)),
        }
    }
}

pub fn zeta(c: f64) -> f64 {
    5.0 * (1.0 - c)
}

fn check_c(c: f64) -> Result<(), BoundsError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(BoundsError::InvalidArgument(format!("concentration {c} outside [0, 1]")));
    }
    Ok(())
}

fn analytic_tail(c: f64, r: usize) -> Result<f64, BoundsError> {
    let z = zeta(c);
    // 5 * (1 - 0.8) rounds to just below 1, so compare c itself as well.
    if c <= ANALYTIC_THRESHOLD || z >= 1.0 {
        return Err(BoundsError::DivergentSeries { c, zeta: z });
    }
    let q = 1.0 - c;
    let rm1 = (r - 1) as f64;
    Ok(4.0 * q * q * z.powi(r as i32 - 2) * (rm1 * (1.0 - z) + z) / ((1.0 - z) * (1.0 - z)))
}

/// `sum_{k >= r} (1-c)^k S_k` for the chosen counts.
pub fn tail_bound(c: f64, r: usize, counts: Counts<'_>) -> Result<f64, BoundsError> {
    check_c(c)?;
    if r < 4 {
        return Err(BoundsError::InvalidArgument(format!("truncation length must be >= 4, got {r}")));
    }
    match counts.table() {
        None => analytic_tail(c, r),
        Some((table, column)) => {
            let remainder = analytic_tail(c, r.max(table.k_max + 1))?;
            let q = 1.0 - c;
            let head = table
                .rows
                .iter()
                .filter(|row| row.k >= r)
                .map(|row| q.powi(row.k as i32) * column(row) as f64);
            Ok(neumaier_sum(head.chain(std::iter::once(remainder))))
        }
    }
}

/// The Peierls sum `sum_{k >= 4} (1-c)^k S_k`.
pub fn series_bound(c: f64, counts: Counts<'_>) -> Result<f64, BoundsError> {
    tail_bound(c, 4, counts)
}

/// Upper bound on the percolation threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBound {
    pub mode: String,
    pub value: f64,
    /// Growth-rate estimate behind `value` (5 for the analytic counts).
    pub growth_rate: f64,
    /// `(k, count_k / count_{k-1})` for the ratios used.
    pub ratios: Vec<(usize, f64)>,
    /// Spread of `1 - 1/ratio` over the ratios used.
    pub spread: f64,
}

/// Counts needed before a growth-rate estimate is attempted.
pub const MIN_REFINED_K: usize = 8;

/// `c*` bound: `4/5` for the analytic counts; `1 - 1/lambda` for a table,
/// with `lambda` the largest of the last three successive count ratios.
pub fn threshold_upper_bound(counts: Counts<'_>) -> Result<ThresholdBound, BoundsError> {
    let Some((table, column)) = counts.table() else {
        return Ok(ThresholdBound {
            mode: counts.mode().into(),
            value: ANALYTIC_THRESHOLD,
            growth_rate: 5.0,
            ratios: vec![],
            spread: 0.0,
        });
    };
    if table.k_max < MIN_REFINED_K {
        return Err(BoundsError::InsufficientData {
            needed: MIN_REFINED_K,
            have: table.k_max,
        });
    }
    let value_at = |k: usize| table.row(k).map(column).unwrap_or(0) as f64;
    let ratios: Vec<(usize, f64)> = (table.k_max - 2..=table.k_max)
        .map(|k| (k, value_at(k) / value_at(k - 1)))
        .collect();
    if ratios.iter().any(|(_, q)| !q.is_finite() || *q <= 0.0) {
        return Err(BoundsError::InsufficientData {
            needed: table.k_max + 1,
            have: table.k_max,
        });
    }
    let lam_max = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let lam_min = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    Ok(ThresholdBound {
        mode: counts.mode().into(),
        value: 1.0 - 1.0 / lam_max,
        growth_rate: lam_max,
        ratios,
        spread: (1.0 - 1.0 / lam_max) - (1.0 - 1.0 / lam_min),
    })
}

/// `Q_r(c) = c - sum_{|gamma| < r} P(gamma)`, kept as integer counts
/// `n(a, b)` of clusters with `|W| = a`, `|boundary| = b` whose outer
/// boundary is shorter than `r`:
///
/// `Q_r(c) = c - sum n(a, b) c^a (1-c)^b`.
///
/// The leading `c` is `1 - P(origin vacant)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedPolynomial {
    pub r: usize,
    pub terms: BTreeMap<(u32, u32), u64>,
    pub contours: usize,
}

impl TruncatedPolynomial {
    pub fn from_inventory(inv: &ContourInventory, r: usize) -> Result<Self, BoundsError> {
        if r > inv.k_max() + 1 {
            return Err(BoundsError::InvalidArgument(format!(
                "inventory up to length {} cannot truncate at r = {r}",
                inv.k_max()
            )));
        }
        let mut terms = BTreeMap::new();
        let mut contours = 0;
        for e in inv.entries().filter(|e| e.contour.len() < r) {
            contours += 1;
            for (&key, &n) in &e.weights {
                *terms.entry(key).or_default() += n;
            }
        }
        Ok(TruncatedPolynomial { r, terms, contours })
    }

    /// Enumerates every cluster whose outer boundary is shorter than `r`.
    pub fn compute(r: usize) -> Result<Self, BoundsError> {
        if r <= 4 {
            return Ok(TruncatedPolynomial {
                r,
                terms: BTreeMap::new(),
                contours: 0,
            });
        }
        let inv = ContourInventory::build(r - 1, InventoryOptions::default())?;
        Self::from_inventory(&inv, r)
    }

    pub fn eval(&self, c: f64) -> f64 {
        let q = 1.0 - c;
        let terms = self
            .terms
            .iter()
            .map(|(&(a, b), &n)| -(n as f64) * c.powi(a as i32) * q.powi(b as i32));
        neumaier_sum(std::iter::once(c).chain(terms))
    }

    pub fn eval_exact(&self, c: &BigRational) -> BigRational {
        let q = BigRational::one() - c;
        let mut acc = c.clone();
        for (&(a, b), &n) in &self.terms {
            acc -= BigRational::from_integer(BigInt::from(n)) * pow(c, a) * pow(&q, b);
        }
        acc
    }

    /// Coefficients of `Q_r` in powers of `c`, lowest first.
    pub fn power_coefficients(&self) -> Vec<BigInt> {
        let degree = self.terms.keys().map(|&(a, b)| (a + b) as usize).max().unwrap_or(1).max(1);
        let mut coeffs = vec![BigInt::zero(); degree + 1];
        coeffs[1] += 1;
        for (&(a, b), &n) in &self.terms {
            // c^a (1-c)^b = sum_j binom(b, j) (-1)^j c^(a+j)
            let mut binom = BigInt::one();
            for j in 0..=b {
                let term = &binom * BigInt::from(n);
                if j % 2 == 0 {
                    coeffs[(a + j) as usize] -= term;
                } else {
                    coeffs[(a + j) as usize] += term;
                }
                binom = binom * BigInt::from(b - j) / BigInt::from(j + 1);
            }
        }
        while coeffs.len() > 2 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        coeffs
    }
}

fn pow(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Everything known about `Q(c)` at one concentration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub c: f64,
    pub r: usize,
    pub mode: String,
    /// Peierls sum; `None` where it diverges.
    pub series_bound: Option<f64>,
    /// `T(r, c)`, the guaranteed error of `q_truncated`; `None` where it
    /// diverges.
    pub tail: Option<f64>,
    /// `c - series_bound`, clamped to `[0, 1]`.
    pub q_lower: Option<f64>,
    pub q_truncated: f64,
    pub threshold_bound: f64,
    /// Whether `|Q(c) - q_truncated| <= tail` is guaranteed (`c > 4/5`).
    pub guarantee: bool,
}

impl BoundReport {
    pub fn new(c: f64, poly: &TruncatedPolynomial, counts: Counts<'_>) -> Result<Self, BoundsError> {
        check_c(c)?;
        let r = poly.r.max(4);
        let finite = |res: Result<f64, BoundsError>| match res {
            Ok(v) => Ok(Some(v)),
            Err(BoundsError::DivergentSeries { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        let series_bound = finite(series_bound(c, counts))?;
        let tail = finite(tail_bound(c, r, counts))?;
        Ok(BoundReport {
            c,
            r: poly.r,
            mode: counts.mode().into(),
            series_bound,
            tail,
            q_lower: series_bound.map(|s| (c - s).clamp(0.0, 1.0)),
            q_truncated: poly.eval(c),
            threshold_bound: threshold_upper_bound(counts)?.value,
            guarantee: tail.is_some(),
        })
    }
}

/// Builds the truncated polynomial for `r` and reports at `c`.
pub fn truncated_q(c: f64, r: usize, counts: Counts<'_>) -> Result<BoundReport, BoundsError> {
    let poly = TruncatedPolynomial::compute(r)?;
    BoundReport::new(c, &poly, counts)
}

/// `walk_bound(k)` as a float, for plotting.
pub fn walk_bound_f64(k: usize) -> f64 {
    crate::counts::walk_bound(k).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn direct_sum(c: f64, r: usize, k_end: usize) -> f64 {
        (r..=k_end)
            .map(|k| (1.0 - c).powi(k as i32) * 4.0 * 5f64.powi(k as i32 - 2) * (k - 1) as f64)
            .sum()
    }

    #[test]
    fn tail_at_nine_tenths() {
        let t = tail_bound(0.9, 4, Counts::Analytic).unwrap();
        assert!((t - 0.08).abs() <= 1e-12 * 0.08);
        let direct = direct_sum(0.9, 4, 200);
        assert!((t - direct).abs() < 1e-12);
    }

    #[test]
    fn series_at_095() {
        let s = series_bound(0.95, Counts::Analytic).unwrap();
        let expect = 4.0 * 0.0025 * (3.0 * 0.0625 * 0.75 + 0.015625) / 0.5625;
        assert!((s - expect).abs() < 1e-15);
        assert!((s - 0.00278).abs() < 1e-5);
        assert!((s - direct_sum(0.95, 4, 200)).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_reported() {
        assert!(matches!(
            tail_bound(0.8, 4, Counts::Analytic),
            Err(BoundsError::DivergentSeries { .. })
        ));
        assert!(matches!(
            tail_bound(0.5, 10, Counts::Analytic),
            Err(BoundsError::DivergentSeries { .. })
        ));
        let near = tail_bound(0.8 + 1e-6, 4, Counts::Analytic).unwrap();
        assert!(near > 1e6);
    }

    #[test]
    fn tail_decreases_to_zero() {
        let mut prev = f64::INFINITY;
        for r in 4..400 {
            let t = tail_bound(0.9, r, Counts::Analytic).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn invalid_arguments() {
        assert!(tail_bound(0.9, 3, Counts::Analytic).is_err());
        assert!(tail_bound(1.5, 4, Counts::Analytic).is_err());
    }

    #[test]
    fn analytic_threshold() {
        assert_eq!(threshold_upper_bound(Counts::Analytic).unwrap().value, 0.8);
    }

    #[test]
    fn single_contour_polynomial() {
        let p = TruncatedPolynomial::compute(5).unwrap();
        assert_eq!(p.contours, 1);
        assert_eq!(p.terms, BTreeMap::from([((1, 4), 1)]));
        assert!((p.eval(0.9) - 0.89991).abs() < 1e-12);
        let exact = p.eval_exact(&BigRational::new(9.into(), 10.into()));
        assert_eq!(exact, BigRational::new(89991.into(), 100000.into()));
        assert_eq!(p.eval(1.0), 1.0);
    }

    #[test]
    fn power_basis_matches_eval() {
        let p = TruncatedPolynomial::compute(9).unwrap();
        let coeffs = p.power_coefficients();
        for &c in &[0.0, 0.3, 0.85, 1.0] {
            let horner = coeffs
                .iter()
                .rev()
                .fold(0.0, |acc, a| acc * c + a.to_f64().unwrap());
            assert!((horner - p.eval(c)).abs() < 1e-9, "c = {c}");
        }
        // c(1-c)^4 contributes -c to the linear term; with the leading c
        // the linear coefficient vanishes.
        assert_eq!(coeffs[1], BigInt::zero());
        assert_eq!(coeffs[0], BigInt::zero());
    }

    #[test]
    fn trivial_truncation() {
        let p = TruncatedPolynomial::compute(4).unwrap();
        assert_eq!(p.eval(0.7), 0.7);
    }

    #[test]
    fn report_flags_missing_guarantee() {
        let p = TruncatedPolynomial::compute(5).unwrap();
        let rep = BoundReport::new(0.8, &p, Counts::Analytic).unwrap();
        assert!(!rep.guarantee);
        assert_eq!(rep.tail, None);
        let rep = BoundReport::new(0.9, &p, Counts::Analytic).unwrap();
        assert!(rep.guarantee);
        assert!((rep.q_truncated - 0.89991).abs() < 1e-12);
        assert!((rep.q_lower.unwrap() - 0.82).abs() < 1e-12);
    }
}
