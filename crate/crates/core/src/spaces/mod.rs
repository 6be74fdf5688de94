//! Norm, dual-norm, ball-membership, and block-estimate oracles for the
//! base spaces Z the engine can run on: ℓ_p (1 < p < ∞), c₀, the
//! sum space (Σc₀)_ℓp over successive finite groups, and Tsirelson's
//! space. Every answer is an exact rational or a rational enclosure;
//! comparisons against irrational ℓ_p quantities clear exponents into
//! integer arithmetic whenever possible and fall back to adaptive
//! directed-rounding refinement otherwise.

pub mod tsirelson;

use std::cmp::Ordering;
use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{
    cmp_pow, cmp_sum_roots, exact_nth_root, fmt_rat, nth_root_enclosure, parse_rat, pow_rat,
    rat_u64, sum_roots_enclosure, Rat, ScalarBound,
};
use crate::sparse::SparseVector;

/// Refinement cap for directed-rounding comparisons, in fractional bits.
const MAX_REFINEMENT_BITS: u64 = 1 << 14;
/// Iteration cap for the Tsirelson dual-norm cutting-plane loop.
const T_DUAL_ITERATION_CAP: u32 = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseSpace {
    /// ℓ_p with rational p > 1.
    Lp { p: Rat },
    /// c₀ with the sup norm.
    C0,
    /// (Σc₀)_ℓp: coordinates are partitioned into successive finite
    /// groups; the norm is the ℓ_p norm of the per-group sup norms.
    /// Coordinates beyond the listed groups fall into singleton groups.
    C0SumLp { p: Rat, groups: Vec<u64> },
    /// Tsirelson's space with its implicit successive-admissible norm.
    Tsirelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallPosition {
    Inside,
    Boundary,
    Outside,
}

impl BaseSpace {
    pub fn lp(p: Rat) -> Result<Self> {
        check_p(&p)?;
        Ok(BaseSpace::Lp { p })
    }

    pub fn c0_sum_lp(p: Rat, groups: Vec<u64>) -> Result<Self> {
        check_p(&p)?;
        if groups.is_empty() || groups.iter().any(|&g| g == 0) {
            return Err(Error::InvalidInput(
                "group sizes must be positive and nonempty".into(),
            ));
        }
        Ok(BaseSpace::C0SumLp { p, groups })
    }

    /// Parses `"lp:3/2"`, `"c0"`, `"c0sum-lp:2:blocks=2,3,4"`,
    /// `"tsirelson"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "c0" {
            return Ok(BaseSpace::C0);
        }
        if t == "tsirelson" {
            return Ok(BaseSpace::Tsirelson);
        }
        if let Some(p) = t.strip_prefix("lp:") {
            return BaseSpace::lp(parse_rat(p)?);
        }
        if let Some(rest) = t.strip_prefix("c0sum-lp:") {
            let (p, blocks) = rest.split_once(':').ok_or_else(|| {
                Error::Parse(format!("expected c0sum-lp:p:blocks=..., got {t:?}"))
            })?;
            let sizes = blocks
                .strip_prefix("blocks=")
                .ok_or_else(|| Error::Parse(format!("expected blocks=..., got {blocks:?}")))?;
            let groups = sizes
                .split(',')
                .map(|g| {
                    g.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::Parse(format!("bad group size {g:?}: {e}")))
                })
                .collect::<Result<Vec<u64>>>()?;
            return BaseSpace::c0_sum_lp(parse_rat(p)?, groups);
        }
        Err(Error::Parse(format!("unknown space id {t:?}")))
    }
}

impl fmt::Display for BaseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseSpace::Lp { p } => write!(f, "lp:{}", fmt_rat(p)),
            BaseSpace::C0 => write!(f, "c0"),
            BaseSpace::C0SumLp { p, groups } => {
                let sizes: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
                write!(f, "c0sum-lp:{}:blocks={}", fmt_rat(p), sizes.join(","))
            }
            BaseSpace::Tsirelson => write!(f, "tsirelson"),
        }
    }
}

fn check_p(p: &Rat) -> Result<()> {
    if *p <= Rat::one() {
        return Err(Error::InvalidInput(format!(
            "exponent p must exceed 1, got {}",
            fmt_rat(p)
        )));
    }
    Ok(())
}

/// Decomposes p = r/s into positive integer parts r > s.
fn p_parts(p: &Rat) -> Result<(u32, u32)> {
    check_p(p)?;
    let r = u32::try_from(p.numer().clone())
        .map_err(|_| Error::InvalidInput(format!("exponent numerator too large: {p}")))?;
    let s = u32::try_from(p.denom().clone())
        .map_err(|_| Error::InvalidInput(format!("exponent denominator too large: {p}")))?;
    Ok((r, s))
}

/// Conjugate exponent parts: q = p/(p-1) = r/(r-s).
fn q_parts(p: &Rat) -> Result<(u32, u32)> {
    let (r, s) = p_parts(p)?;
    Ok((r, r - s))
}

/// Per-group sup of absolute values for the sum space. Group boundaries
/// come from the listed sizes; coordinates past them form singleton
/// groups, so the map is total.
fn group_sups(groups: &[u64], x: &SparseVector) -> Vec<Rat> {
    let total: u64 = groups.iter().sum();
    let mut boundaries = Vec::with_capacity(groups.len());
    let mut acc = 0u64;
    for &g in groups {
        acc += g;
        boundaries.push(acc);
    }
    let mut sups: std::collections::BTreeMap<u64, Rat> = std::collections::BTreeMap::new();
    for (idx, val) in x.iter() {
        let group = if idx <= total {
            boundaries.partition_point(|&b| b < idx) as u64
        } else {
            groups.len() as u64 + (idx - total) - 1
        };
        let v = val.abs();
        sups.entry(group)
            .and_modify(|m| {
                if v > *m {
                    *m = v.clone();
                }
            })
            .or_insert(v);
    }
    sups.into_values().collect()
}

/// Enclosure of (Σ v_i^(r/s))^(s/r) for non-negative rationals v_i,
/// refined until its width is at most `precision`. Exact whenever every
/// intermediate root is rational.
fn lp_norm_enclosure(vals: &[Rat], r: u32, s: u32, precision: &Rat) -> Result<ScalarBound> {
    if vals.is_empty() {
        return Ok(ScalarBound::exact(Rat::zero()));
    }
    let terms: Vec<Rat> = vals.iter().map(|v| pow_rat(v, r)).collect();
    // Exact path: every s-th root rational, and the final r-th root too.
    let roots: Option<Vec<Rat>> = terms.iter().map(|t| exact_nth_root(t, s)).collect();
    if let Some(roots) = roots {
        let inner: Rat = roots.into_iter().sum();
        if let Some(outer) = exact_nth_root(&pow_rat(&inner, s), r) {
            return Ok(ScalarBound::exact(outer));
        }
        let mut bits = 32u64;
        loop {
            let e = nth_root_enclosure(&pow_rat(&inner, s), r, bits);
            if e.width() <= *precision {
                return Ok(e);
            }
            if bits >= MAX_REFINEMENT_BITS {
                return Err(Error::Indeterminate("lp norm enclosure".into()));
            }
            bits *= 2;
        }
    }
    let mut bits = 32u64;
    loop {
        let inner = sum_roots_enclosure(&terms, s, bits);
        let lo = nth_root_enclosure(&pow_rat(&inner.lower, s), r, bits).lower;
        let hi = nth_root_enclosure(&pow_rat(&inner.upper, s), r, bits).upper;
        let e = ScalarBound::new(lo, hi);
        if e.width() <= *precision {
            return Ok(e);
        }
        if bits >= MAX_REFINEMENT_BITS {
            return Err(Error::Indeterminate("lp norm enclosure".into()));
        }
        bits *= 2;
    }
}

/// Exact trichotomy of (Σ v_i^(r/s))^(s/r) against 1, i.e. of
/// Σ (v_i^r)^(1/s) against 1.
fn lp_ball_position(vals: &[Rat], r: u32, s: u32) -> Result<BallPosition> {
    let terms: Vec<Rat> = vals.iter().map(|v| pow_rat(v, r)).collect();
    let ord = cmp_sum_roots(&terms, s, &Rat::one(), MAX_REFINEMENT_BITS)?;
    Ok(match ord {
        Ordering::Less => BallPosition::Inside,
        Ordering::Equal => BallPosition::Boundary,
        Ordering::Greater => BallPosition::Outside,
    })
}

/// Enclosure of ‖x‖_Z with width at most `precision`. Exact (degenerate)
/// for c₀ and Tsirelson. The lattice property ‖x‖ = ‖|x|‖ holds by
/// construction: only absolute values enter.
pub fn norm(space: &BaseSpace, x: &SparseVector, precision: &Rat) -> Result<ScalarBound> {
    if !precision.is_positive() {
        return Err(Error::InvalidInput("precision must be positive".into()));
    }
    match space {
        BaseSpace::C0 => Ok(ScalarBound::exact(x.norm_inf())),
        BaseSpace::Tsirelson => Ok(ScalarBound::exact(tsirelson::norm(x))),
        BaseSpace::Lp { p } => {
            let (r, s) = p_parts(p)?;
            let vals: Vec<Rat> = x.iter().map(|(_, v)| v.abs()).collect();
            lp_norm_enclosure(&vals, r, s, precision)
        }
        BaseSpace::C0SumLp { p, groups } => {
            let (r, s) = p_parts(p)?;
            lp_norm_enclosure(&group_sups(groups, x), r, s, precision)
        }
    }
}

/// Exact trichotomy of x against the unit ball of Z.
pub fn ball_member(space: &BaseSpace, x: &SparseVector) -> Result<BallPosition> {
    match space {
        BaseSpace::C0 => Ok(position_of(x.norm_inf().cmp(&Rat::one()))),
        BaseSpace::Tsirelson => Ok(position_of(tsirelson::norm(x).cmp(&Rat::one()))),
        BaseSpace::Lp { p } => {
            let (r, s) = p_parts(p)?;
            let vals: Vec<Rat> = x.iter().map(|(_, v)| v.abs()).collect();
            lp_ball_position(&vals, r, s)
        }
        BaseSpace::C0SumLp { p, groups } => {
            let (r, s) = p_parts(p)?;
            lp_ball_position(&group_sups(groups, x), r, s)
        }
    }
}

fn position_of(ord: Ordering) -> BallPosition {
    match ord {
        Ordering::Less => BallPosition::Inside,
        Ordering::Equal => BallPosition::Boundary,
        Ordering::Greater => BallPosition::Outside,
    }
}

/// Enclosure of the dual norm ‖f‖_{Z*}: ℓ_q for ℓ_p (1/p + 1/q = 1),
/// ℓ₁ for c₀, the (Σℓ₁)_ℓq norm for the sum space, and an exact
/// cutting-plane linear program for Tsirelson.
pub fn dual_norm(space: &BaseSpace, f: &SparseVector, precision: &Rat) -> Result<ScalarBound> {
    if !precision.is_positive() {
        return Err(Error::InvalidInput("precision must be positive".into()));
    }
    match space {
        BaseSpace::C0 => Ok(ScalarBound::exact(f.norm_l1())),
        BaseSpace::Tsirelson => {
            let (value, _) = tsirelson::dual_norm(f, T_DUAL_ITERATION_CAP)?;
            Ok(ScalarBound::exact(value))
        }
        BaseSpace::Lp { p } => {
            let (qr, qs) = q_parts(p)?;
            let vals: Vec<Rat> = f.iter().map(|(_, v)| v.abs()).collect();
            lp_norm_enclosure(&vals, qr, qs, precision)
        }
        BaseSpace::C0SumLp { p, groups } => {
            let (qr, qs) = q_parts(p)?;
            lp_norm_enclosure(&group_l1_sums(groups, f), qr, qs, precision)
        }
    }
}

/// Exact trichotomy of f against the dual unit ball of Z.
pub fn dual_ball_member(space: &BaseSpace, f: &SparseVector) -> Result<BallPosition> {
    match space {
        BaseSpace::C0 => Ok(position_of(f.norm_l1().cmp(&Rat::one()))),
        BaseSpace::Tsirelson => {
            let (value, _) = tsirelson::dual_norm(f, T_DUAL_ITERATION_CAP)?;
            Ok(position_of(value.cmp(&Rat::one())))
        }
        BaseSpace::Lp { p } => {
            let (qr, qs) = q_parts(p)?;
            let vals: Vec<Rat> = f.iter().map(|(_, v)| v.abs()).collect();
            lp_ball_position(&vals, qr, qs)
        }
        BaseSpace::C0SumLp { p, groups } => {
            let (qr, qs) = q_parts(p)?;
            lp_ball_position(&group_l1_sums(groups, f), qr, qs)
        }
    }
}

fn group_l1_sums(groups: &[u64], f: &SparseVector) -> Vec<Rat> {
    let total: u64 = groups.iter().sum();
    let mut boundaries = Vec::with_capacity(groups.len());
    let mut acc = 0u64;
    for &g in groups {
        acc += g;
        boundaries.push(acc);
    }
    let mut sums: std::collections::BTreeMap<u64, Rat> = std::collections::BTreeMap::new();
    for (idx, val) in f.iter() {
        let group = if idx <= total {
            boundaries.partition_point(|&b| b < idx) as u64
        } else {
            groups.len() as u64 + (idx - total) - 1
        };
        *sums.entry(group).or_insert_with(Rat::zero) += val.abs();
    }
    sums.into_values().collect()
}

/// Best disjoint-block estimate φ_Z(k): the supremum of ‖u_1 + … + u_k‖
/// over disjointly supported blocks of norm at most 1.
///
/// For ℓ_p and the sum space this is exactly k^(1/p) (k blocks in
/// separate positions/groups attain it; the p-estimate gives the upper
/// bound), returned as a tight enclosure. For c₀ it is exactly 1. For
/// Tsirelson the enclosure is a certified lower bound from an explicit
/// admissible family placed within `support_budget` coordinates together
/// with the trivial upper bound k; it is never exact for k ≥ 2.
pub fn phi(space: &BaseSpace, k: u64, support_budget: u64) -> Result<ScalarBound> {
    if k < 1 {
        return Err(Error::InvalidInput("phi requires k >= 1".into()));
    }
    let needed = match space {
        BaseSpace::Tsirelson => 2 * k - 1,
        _ => k,
    };
    if support_budget < needed {
        return Err(Error::InvalidInput(format!(
            "support budget {support_budget} cannot place {k} disjoint blocks (need {needed})"
        )));
    }
    if k == 1 {
        return Ok(ScalarBound::exact(Rat::one()));
    }
    match space {
        BaseSpace::C0 => Ok(ScalarBound::exact(Rat::one())),
        BaseSpace::Lp { p } | BaseSpace::C0SumLp { p, .. } => {
            let (r, s) = p_parts(p)?;
            let kr = rat_u64(k);
            if let Some(exact) = exact_nth_root(&pow_rat(&kr, s), r) {
                return Ok(ScalarBound::exact(exact));
            }
            Ok(nth_root_enclosure(&pow_rat(&kr, s), r, 64))
        }
        BaseSpace::Tsirelson => {
            let mut family = SparseVector::zero();
            for c in k..2 * k {
                family.set(c, Rat::one());
            }
            Ok(ScalarBound::new(tsirelson::norm(&family), rat_u64(k)))
        }
    }
}

/// Refines φ(k) until the enclosure certifies φ(k) < threshold, or
/// reports that no such certificate is available. The decision itself is
/// made symbolically for ℓ_p-like spaces (k^s vs threshold^r after
/// clearing exponents), so the refinement always terminates when the
/// strict inequality is true.
pub fn phi_certified_below(
    space: &BaseSpace,
    k: u64,
    support_budget: u64,
    threshold: &Rat,
) -> Result<Option<ScalarBound>> {
    let base = phi(space, k, support_budget)?;
    if base.upper < *threshold {
        return Ok(Some(base));
    }
    match space {
        BaseSpace::C0 => Ok(if Rat::one() < *threshold {
            Some(ScalarBound::exact(Rat::one()))
        } else {
            None
        }),
        BaseSpace::Tsirelson => Ok(None),
        BaseSpace::Lp { p } | BaseSpace::C0SumLp { p, .. } => {
            let (r, s) = p_parts(p)?;
            let kr = rat_u64(k);
            if cmp_pow(&kr, s, threshold, r) != Ordering::Less {
                return Ok(None);
            }
            let radicand = pow_rat(&kr, s);
            let mut bits = 64u64;
            loop {
                let e = nth_root_enclosure(&radicand, r, bits);
                if e.upper < *threshold {
                    return Ok(Some(e));
                }
                if bits >= MAX_REFINEMENT_BITS {
                    return Err(Error::Indeterminate("phi refinement".into()));
                }
                bits *= 2;
            }
        }
    }
}

/// Certifies φ(mn) ≤ φ(m)·φ(n). Exact for c₀ and the ℓ_p-like spaces,
/// where both sides clear to the same integer; Indeterminate for
/// Tsirelson, whose enclosures [·, k] can never certify the product
/// inequality.
pub fn verify_submultiplicative(space: &BaseSpace, m: u64, n: u64) -> Result<bool> {
    if m < 1 || n < 1 {
        return Err(Error::InvalidInput(
            "submultiplicativity requires m, n >= 1".into(),
        ));
    }
    match space {
        BaseSpace::C0 => Ok(true),
        BaseSpace::Lp { p } | BaseSpace::C0SumLp { p, .. } => {
            let (r, s) = p_parts(p)?;
            let _ = (r, s);
            // (mn)^(1/p) vs m^(1/p)·n^(1/p): raising both sides to the
            // p-th power compares mn with m·n.
            Ok(rat_u64(m * n) <= rat_u64(m) * rat_u64(n))
        }
        BaseSpace::Tsirelson => Err(Error::Indeterminate(
            "phi enclosures for tsirelson cannot certify submultiplicativity".into(),
        )),
    }
}
