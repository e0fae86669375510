//! Generalized harmonic numbers `H_x = Σ_{k≥1} x / (k (x + k))` for real `x ≥ 0`,
//! and the GPAV score `Σ_i H_{u_i(A)}`.
//!
//! Non-integer arguments sum the first `K - 1` terms directly and estimate the
//! tail `Σ_{k≥K}` with Euler–Maclaurin corrections. The summand
//! `1/s - 1/(s + x)` is completely monotone in `s`, so the remainder after the
//! last correction is bounded by the first omitted one; that bound plus a
//! floating-point rounding allowance is reported as `abs_error_bound`.
//!
//! This is the only module where floating point appears.

use std::sync::OnceLock;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Integers up to this bound use the exact rational partial sum.
pub const EXACT_INTEGER_LIMIT: usize = 1000;

/// Integers up to this bound use compensated summation of `1/k`.
pub const COMPENSATED_INTEGER_LIMIT: u64 = 1_000_000;

// B_2, B_4, ..., B_14 divided by their index: B_{2j} / (2j).
const BERNOULLI_OVER_INDEX: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

// B_2, ..., B_14.
const BERNOULLI: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

const CORRECTIONS: usize = 6;
const SPLIT: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicValue {
    pub value: f64,
    pub abs_error_bound: f64,
}

impl HarmonicValue {
    pub const ZERO: HarmonicValue = HarmonicValue {
        value: 0.0,
        abs_error_bound: 0.0,
    };

    pub fn add(self, other: HarmonicValue) -> HarmonicValue {
        HarmonicValue {
            value: self.value + other.value,
            abs_error_bound: self.abs_error_bound
                + other.abs_error_bound
                + f64::EPSILON * (self.value + other.value).abs(),
        }
    }
}

fn exact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut sum = Rational::zero();
        let mut out = Vec::with_capacity(EXACT_INTEGER_LIMIT + 1);
        out.push(0.0);
        for k in 1..=EXACT_INTEGER_LIMIT {
            sum += rational::ratio(1, k as i64);
            out.push(rational::to_f64(&sum));
        }
        out
    })
}

fn compensated_integer(x: u64) -> f64 {
    // Neumaier summation, smallest terms first.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in (1..=x).rev() {
        let term = 1.0 / k as f64;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `(value, truncation bound)` of the series at `x` via the split point `a`.
fn series(x: f64, a: f64) -> (f64, f64) {
    let last = a as u64;
    let mut head = 0.0;
    for k in 1..last {
        let k = k as f64;
        head += x / (k * (x + k));
    }
    let ax = a + x;
    let mut tail = (x / a).ln_1p() + x / (2.0 * a * ax);
    let (mut pa, mut pax) = (1.0, 1.0);
    let (a2, ax2) = (1.0 / (a * a), 1.0 / (ax * ax));
    for c in BERNOULLI_OVER_INDEX.iter().take(CORRECTIONS) {
        pa *= a2;
        pax *= ax2;
        tail += c * (pa - pax);
    }
    let omitted = (BERNOULLI_OVER_INDEX[CORRECTIONS] * (pa * a2 - pax * ax2)).abs();
    (head + tail, omitted)
}

fn rounding_allowance(value: f64) -> f64 {
    64.0 * f64::EPSILON * (value.abs() + 1.0)
}

/// `H_x` for a real `x ≥ 0`, with `|value - H_x| ≤ abs_error_bound ≤ tol`.
pub fn harmonic(x: f64, tol: f64) -> Result<HarmonicValue> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "harmonic numbers need a finite x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(HarmonicValue::ZERO);
    }
    let result = if x.fract() == 0.0 && x <= EXACT_INTEGER_LIMIT as f64 {
        let value = exact_table()[x as usize];
        HarmonicValue {
            value,
            abs_error_bound: f64::EPSILON * value,
        }
    } else if x.fract() == 0.0 && x <= COMPENSATED_INTEGER_LIMIT as f64 {
        let value = compensated_integer(x as u64);
        HarmonicValue {
            value,
            abs_error_bound: 4.0 * f64::EPSILON * value,
        }
    } else {
        let (value, omitted) = series(x, SPLIT);
        HarmonicValue {
            value,
            abs_error_bound: omitted + rounding_allowance(value),
        }
    };
    if result.abs_error_bound > tol {
        return Err(Error::Domain(format!(
            "tolerance {tol} is below the attainable accuracy {} at x = {x}",
            result.abs_error_bound
        )));
    }
    Ok(result)
}

/// `H_x` for a rational argument. Integers take the exact path.
pub fn harmonic_rational(x: &Rational, tol: f64) -> Result<HarmonicValue> {
    if x < &Rational::zero() {
        return Err(Error::Domain(format!(
            "harmonic numbers need x >= 0, got {x}"
        )));
    }
    if x.is_integer() {
        if let Some(k) = x.to_integer().to_u64() {
            return harmonic(k as f64, tol);
        }
    }
    harmonic(rational::to_f64(x), tol)
}

/// `H'_x = Σ_{k≥1} 1/(x + k)^2`, decreasing from `π²/6` at `x = 0`.
pub fn harmonic_slope(x: f64) -> f64 {
    let a = SPLIT;
    let mut head = 0.0;
    for k in 1..(a as u64) {
        let s = x + k as f64;
        head += 1.0 / (s * s);
    }
    let ax = a + x;
    let inv = 1.0 / ax;
    let inv2 = inv * inv;
    let mut tail = inv + 0.5 * inv2;
    let mut p = inv;
    for b in BERNOULLI.iter().take(CORRECTIONS) {
        p *= inv2;
        tail += b * p;
    }
    head + tail
}

/// `Σ_i H_{u_i}` over the given utilities.
pub fn score_of_utilities(utilities: &[Rational], tol: f64) -> Result<HarmonicValue> {
    utilities.iter().try_fold(HarmonicValue::ZERO, |acc, u| {
        Ok(acc.add(harmonic_rational(u, tol)?))
    })
}

/// The GPAV score `H(A) = Σ_{i∈N} H_{u_i(A)}`.
pub fn gpav_score(inst: &Instance, allocation: &Bundle, tol: f64) -> Result<HarmonicValue> {
    score_of_utilities(&inst.utilities(allocation), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    /// Direct partial sums with the integral bracket on the tail; slow but independent.
    fn brute_force(x: f64) -> f64 {
        let terms = 2_000_000u64;
        let mut sum = 0.0;
        for k in (1..=terms).rev() {
            let k = k as f64;
            sum += x / (k * (x + k));
        }
        let k = terms as f64;
        // Tail lies between ln((k+1+x)/(k+1)) and ln((k+x)/k); take the midpoint.
        let lo = (x / (k + 1.0)).ln_1p();
        let hi = (x / k).ln_1p();
        sum + 0.5 * (lo + hi)
    }

    #[test]
    fn small_integers_are_exact() {
        assert_eq!(harmonic(0.0, DEFAULT_TOL).unwrap().value, 0.0);
        assert_eq!(harmonic(1.0, DEFAULT_TOL).unwrap().value, 1.0);
        assert_eq!(harmonic(2.0, DEFAULT_TOL).unwrap().value, 1.5);
        assert_eq!(harmonic_rational(&ratio(3, 1), DEFAULT_TOL).unwrap().value, 11.0 / 6.0);
    }

    #[test]
    fn series_matches_brute_force() {
        for &x in &[0.001, 0.5, 0.9, 1.9, 3.25, 17.7] {
            let h = harmonic(x, DEFAULT_TOL).unwrap();
            let reference = brute_force(x);
            assert!(
                (h.value - reference).abs() < 1e-11,
                "x = {x}: {} vs {reference}",
                h.value
            );
        }
    }

    #[test]
    fn series_agrees_with_integer_paths() {
        for k in [1u32, 2, 5, 40, 999] {
            let exact = harmonic(k as f64, DEFAULT_TOL).unwrap().value;
            let (via_series, _) = series(k as f64, SPLIT);
            assert!((exact - via_series).abs() < 1e-12, "k = {k}");
        }
        let big = harmonic(5000.0, DEFAULT_TOL).unwrap().value;
        let (via_series, _) = series(5000.0, SPLIT);
        assert!((big - via_series).abs() < 1e-12);
    }

    #[test]
    fn fig1_inequality() {
        let lhs = harmonic(1.9, DEFAULT_TOL).unwrap().value + harmonic(0.9, DEFAULT_TOL).unwrap().value;
        assert!(lhs > 1.45 + 0.93);
        // Reference value from a 30-digit mpmath evaluation.
        assert!((lhs - 2.393_115_441_604_869_3).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(harmonic(-0.5, DEFAULT_TOL).is_err());
        assert!(harmonic(f64::NAN, DEFAULT_TOL).is_err());
        assert!(harmonic(1.5, 0.0).is_err());
        assert!(harmonic(1.5, 1e-30).is_err());
        assert!(harmonic_rational(&ratio(-1, 3), DEFAULT_TOL).is_err());
    }

    #[test]
    fn slope_matches_finite_differences() {
        for &x in &[0.0, 0.3, 1.0, 2.5, 10.0] {
            let h = 1e-5;
            let fd = (harmonic(x + h, DEFAULT_TOL).unwrap().value
                - harmonic((x - h).max(0.0), DEFAULT_TOL).unwrap().value)
                / (x + h - (x - h).max(0.0));
            // One-sided at 0, where the error is about h·ζ(3).
            let allowance = if x == 0.0 { 2e-5 } else { 1e-6 };
            assert!((fd - harmonic_slope(x)).abs() < allowance, "x = {x}");
        }
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((harmonic_slope(0.0) - zeta2).abs() < 1e-14);
    }
}
