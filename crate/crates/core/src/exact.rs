//! Exact rational arithmetic substrate.
//!
//! Every certified quantity in this crate is a `Rat` (arbitrary-precision
//! rational) or a `ScalarBound` (a closed rational interval enclosing a
//! possibly irrational value). Comparisons against irrational quantities
//! such as k^(1/p) are decided either by clearing exponents into integer
//! arithmetic or by directed-rounding interval refinement; a comparison
//! that stays unresolved at the precision cap raises
//! [`Error::Indeterminate`] instead of guessing.

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Builds `n / d`. Panics on `d == 0`; intended for literals.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_u64(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"num/den"` or `"num"` with an optional leading sign.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    match t.split_once('/') {
        None => t
            .parse::<BigInt>()
            .map(Rat::from_integer)
            .map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}"))),
        Some((n, d)) => {
            let n = n
                .trim()
                .parse::<BigInt>()
                .map_err(|e| Error::Parse(format!("bad numerator in {t:?}: {e}")))?;
            let d = d
                .trim()
                .parse::<BigInt>()
                .map_err(|e| Error::Parse(format!("bad denominator in {t:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {t:?}")));
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// Renders a rational as `"num/den"`, or `"num"` when the denominator is 1.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A closed rational interval `[lower, upper]` enclosing a real value.
/// Exact values are encoded as degenerate intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarBound {
    pub lower: Rat,
    pub upper: Rat,
}

impl ScalarBound {
    pub fn new(lower: Rat, upper: Rat) -> Self {
        assert!(lower <= upper, "inverted bound [{lower}, {upper}]");
        ScalarBound { lower, upper }
    }

    pub fn exact(v: Rat) -> Self {
        ScalarBound {
            lower: v.clone(),
            upper: v,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> Rat {
        &self.upper - &self.lower
    }

    pub fn add(&self, other: &ScalarBound) -> ScalarBound {
        ScalarBound::new(&self.lower + &other.lower, &self.upper + &other.upper)
    }

    /// Interval product; both operands must be non-negative.
    pub fn mul_nonneg(&self, other: &ScalarBound) -> ScalarBound {
        assert!(!self.lower.is_negative() && !other.lower.is_negative());
        ScalarBound::new(&self.lower * &other.lower, &self.upper * &other.upper)
    }

    /// Scales by a non-negative rational.
    pub fn scale(&self, c: &Rat) -> ScalarBound {
        assert!(!c.is_negative());
        ScalarBound::new(&self.lower * c, &self.upper * c)
    }

    /// Integer power of a non-negative interval.
    pub fn pow(&self, e: u32) -> ScalarBound {
        assert!(!self.lower.is_negative());
        ScalarBound::new(pow_rat(&self.lower, e), pow_rat(&self.upper, e))
    }

    pub fn max_with(&self, other: &ScalarBound) -> ScalarBound {
        ScalarBound::new(
            self.lower.clone().max(other.lower.clone()),
            self.upper.clone().max(other.upper.clone()),
        )
    }

    /// Three-way comparison against an exact rational, when the interval
    /// decides it.
    pub fn cmp_rat(&self, t: &Rat) -> Option<Ordering> {
        if self.upper < *t {
            Some(Ordering::Less)
        } else if self.lower > *t {
            Some(Ordering::Greater)
        } else if self.is_exact() && self.lower == *t {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

pub fn pow_rat(r: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    let mut base = r.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

fn biguint_pow(b: &BigUint, e: u32) -> BigUint {
    b.pow(e)
}

/// Exact rational s-th root of a non-negative rational, if one exists.
pub fn exact_nth_root(t: &Rat, s: u32) -> Option<Rat> {
    assert!(s >= 1 && !t.is_negative());
    if s == 1 || t.is_zero() || t.is_one() {
        return Some(t.clone());
    }
    let (num, den) = (
        t.numer().magnitude().clone(),
        t.denom().magnitude().clone(),
    );
    let rn = num.nth_root(s);
    if biguint_pow(&rn, s) != num {
        return None;
    }
    let rd = den.nth_root(s);
    if biguint_pow(&rd, s) != den {
        return None;
    }
    Some(Rat::new(
        BigInt::from_biguint(Sign::Plus, rn),
        BigInt::from_biguint(Sign::Plus, rd),
    ))
}

/// Encloses `t^(1/s)` for `t >= 0` within `2^-bits`.
pub fn nth_root_enclosure(t: &Rat, s: u32, bits: u64) -> ScalarBound {
    assert!(s >= 1 && !t.is_negative());
    if let Some(r) = exact_nth_root(t, s) {
        return ScalarBound::exact(r);
    }
    // t^(1/s) = (a * b^(s-1))^(1/s) / b with t = a/b; scale the radicand by
    // 2^(s*bits) so the integer root carries `bits` fractional bits.
    let a = t.numer().magnitude();
    let b = t.denom().magnitude();
    let radicand = a * biguint_pow(b, s - 1) << (s as u64 * bits);
    let root = radicand.nth_root(s);
    let denom = BigInt::from_biguint(Sign::Plus, b << bits);
    let lower = Rat::new(BigInt::from_biguint(Sign::Plus, root.clone()), denom.clone());
    let upper = Rat::new(BigInt::from_biguint(Sign::Plus, root + 1u32), denom);
    ScalarBound::new(lower, upper)
}

/// Encloses `t^(num/den)` for `t >= 0` and a positive rational exponent.
pub fn pow_ratio_enclosure(t: &Rat, num: u32, den: u32, bits: u64) -> ScalarBound {
    nth_root_enclosure(&pow_rat(t, num), den, bits)
}

/// Encloses the sum of s-th roots of non-negative rationals.
pub fn sum_roots_enclosure(terms: &[Rat], s: u32, bits: u64) -> ScalarBound {
    let mut lo = Rat::zero();
    let mut hi = Rat::zero();
    for t in terms {
        let e = nth_root_enclosure(t, s, bits);
        lo += e.lower;
        hi += e.upper;
    }
    ScalarBound::new(lo, hi)
}

/// Decides the exact order of `sum_i t_i^(1/s)` against `target`.
///
/// Fast paths keep the comparison in rational arithmetic: terms whose
/// s-th root is rational are summed exactly, and the residual irrational
/// part (if any) is refined with directed rounding until the interval
/// separates from the rational residue. The refinement is capped at
/// `max_bits` fractional bits.
pub fn cmp_sum_roots(terms: &[Rat], s: u32, target: &Rat, max_bits: u64) -> Result<Ordering> {
    let mut rational_part = Rat::zero();
    let mut irrational = Vec::new();
    for t in terms {
        assert!(!t.is_negative());
        match exact_nth_root(t, s) {
            Some(r) => rational_part += r,
            None => irrational.push(t.clone()),
        }
    }
    let residue = target - &rational_part;
    if irrational.is_empty() {
        // sum vs target is 0 vs residue, since residue = target - sum.
        return Ok(Rat::zero().cmp(&residue));
    }
    if !residue.is_positive() {
        // A non-empty sum of positive roots always exceeds a non-positive
        // residue.
        return Ok(Ordering::Greater);
    }
    let mut bits = 32u64;
    loop {
        let enc = sum_roots_enclosure(&irrational, s, bits);
        if enc.upper < residue {
            return Ok(Ordering::Less);
        }
        if enc.lower > residue {
            return Ok(Ordering::Greater);
        }
        if bits >= max_bits {
            return Err(Error::Indeterminate(format!(
                "sum of {} roots vs {} at {} bits",
                irrational.len(),
                fmt_rat(target),
                bits
            )));
        }
        bits = (bits * 2).min(max_bits);
    }
}

/// Compares `a^p` against `b^q` exactly, for non-negative rationals.
pub fn cmp_pow(a: &Rat, p: u32, b: &Rat, q: u32) -> Ordering {
    pow_rat(a, p).cmp(&pow_rat(b, q))
}

/// The smallest-denominator rational strictly inside `(lo, hi)`.
pub fn simplest_rational_in(lo: &Rat, hi: &Rat) -> Rat {
    assert!(lo < hi, "empty interval ({lo}, {hi})");
    let fl = lo.floor();
    let cand = &fl + Rat::one();
    if cand < *hi {
        return cand;
    }
    let lo_frac = lo - &fl;
    let hi_frac = hi - &fl;
    if lo_frac.is_zero() {
        // (0, hi_frac): the simplest is 1/q with the least q > 1/hi_frac.
        let q = hi_frac.recip().floor() + Rat::one();
        return fl + q.recip();
    }
    fl + simplest_rational_in(&hi_frac.recip(), &lo_frac.recip()).recip()
}
