//! The averaging functionals uₙ*, the induced quotient map Q onto the
//! base space, and instance verifiers for the domination inequalities
//! that make Q bounded with a bounded right inverse on coefficients.
//!
//! Every verifier separates hypothesis checks from the verdict: a
//! violated hypothesis raises `HypothesisFailed`, while a verdict is a
//! plain boolean computed with exact arithmetic (or an enclosure
//! trichotomy when an irrational base norm is involved).

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::construction::{BlockSystem, ParameterLedger};
use crate::error::{Error, Result};
use crate::exact::{fmt_rat, rat_u64, Rat, ScalarBound};
use crate::measures::{
    in_m, in_p1, is_admissible, is_zbounded, zbounded_optimum, AtomicMeasure, SegmentProfile,
};
use crate::norm::{dual_norm_m, norm_m, DualAscent, DualStep, SearchBudget};
use crate::schreier::FiniteSet;
use crate::spaces::{ball_member, dual_ball_member, dual_norm, norm, BallPosition, BaseSpace};
use crate::sparse::SparseVector;

/// uₙ* = Σ_{i∈Fₙ} (1/|Fₙ|) eᵢ*, the convex average over block n.
pub fn u_star(n: u32, blocks: &BlockSystem) -> Result<SparseVector> {
    let size = rat_u64(blocks.size(n)?);
    let mut f = SparseVector::zero();
    for j in blocks.coords(n)? {
        f.set(j, size.clone().recip());
    }
    Ok(f)
}

/// Σₙ aₙ uₙ* as a coordinate functional; a is indexed by block number.
pub fn combine_u_star(a: &SparseVector, blocks: &BlockSystem) -> Result<SparseVector> {
    let mut f = SparseVector::zero();
    for (i, c) in a.iter() {
        if i > blocks.depth() as u64 {
            return Err(Error::InvalidInput(format!(
                "coefficient index {i} exceeds the materialized depth {}",
                blocks.depth()
            )));
        }
        let size = rat_u64(blocks.size(i as u32)?);
        for j in blocks.coords(i as u32)? {
            let w = f.get(j) + c / &size;
            f.set(j, w);
        }
    }
    Ok(f)
}

/// Q(Σ aⱼeⱼ) = Σₙ (Σ_{k∈Fₙ} a_k / |Fₙ|) zₙ; the result is indexed by
/// block number. Coordinates outside every block are ignored.
pub fn apply_q(x: &SparseVector, blocks: &BlockSystem) -> SparseVector {
    let mut sums: BTreeMap<u32, Rat> = BTreeMap::new();
    for (j, v) in x.iter() {
        if let Some(n) = blocks.block_of(j) {
            *sums.entry(n).or_insert_with(Rat::zero) += v;
        }
    }
    let mut q = SparseVector::zero();
    for (n, s) in sums {
        let size = rat_u64(blocks.size(n).expect("block_of returned a valid index"));
        let w = s / size;
        if !w.is_zero() {
            q.set(n as u64, w);
        }
    }
    q
}

/// The functional x ↦ zₙ*(Q x), materialized coordinate by coordinate
/// through Q itself (one coordinate past the last block included, to
/// witness that outside coordinates map to zero).
pub fn adjoint_functional(n: u32, blocks: &BlockSystem) -> Result<SparseVector> {
    let last = blocks.max(blocks.depth())?;
    let mut f = SparseVector::zero();
    for j in 1..=last + 1 {
        let w = apply_q(&SparseVector::unit(j), blocks).get(n as u64);
        if !w.is_zero() {
            f.set(j, w);
        }
    }
    Ok(f)
}

/// Q*(zₙ*) = uₙ*, checked coordinate-exactly.
pub fn verify_adjoint(n: u32, blocks: &BlockSystem) -> Result<bool> {
    Ok(adjoint_functional(n, blocks)? == u_star(n, blocks)?)
}

/// A canonical preimage of zₙ under Q: |Fₙ| times the first coordinate
/// of block n.
pub fn z_preimage(n: u32, blocks: &BlockSystem) -> Result<SparseVector> {
    let mut x = SparseVector::zero();
    x.set(blocks.min(n)?, rat_u64(blocks.size(n)?));
    Ok(x)
}

/// True when the claimed inequality lhs ≤ rhs is certain from the
/// enclosures, false when its negation is certain, Indeterminate when
/// the enclosures overlap.
fn certified_le(lhs: &ScalarBound, rhs: &ScalarBound, context: &str) -> Result<bool> {
    if lhs.upper <= rhs.lower {
        return Ok(true);
    }
    if lhs.lower > rhs.upper {
        return Ok(false);
    }
    Err(Error::Indeterminate(format!(
        "{context}: enclosures [{}, {}] and [{}, {}] overlap",
        fmt_rat(&lhs.lower),
        fmt_rat(&lhs.upper),
        fmt_rat(&rhs.lower),
        fmt_rat(&rhs.upper)
    )))
}

#[derive(Debug, Clone)]
pub struct OperatorBoundReport {
    pub image_norm: ScalarBound,
    pub engine_norm: Rat,
    pub bound: Rat,
    pub ok: bool,
}

/// ‖Q x‖_Z ≤ C·‖x‖_M for the ledger constant C.
pub fn operator_bound_report(
    x: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<OperatorBoundReport> {
    let q = apply_q(x, &ledger.blocks);
    let qz = norm(&ledger.space, &q, precision)?;
    let cert = norm_m(x, &ledger.space, &ledger.blocks)?;
    if !cert.exhaustive {
        return Err(Error::BudgetExceeded(
            "operator bound needs an exhaustive norm certificate".into(),
        ));
    }
    let bound = &ledger.constant_c * &cert.value;
    let ok = certified_le(&qz, &ScalarBound::exact(bound.clone()), "operator bound")?;
    Ok(OperatorBoundReport {
        image_norm: qz,
        engine_norm: cert.value,
        bound,
        ok,
    })
}

pub fn verify_operator_bound(
    x: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<bool> {
    Ok(operator_bound_report(x, ledger, precision)?.ok)
}

#[derive(Debug, Clone)]
pub struct SegmentIndicatorReport {
    pub indicator_norm: Rat,
    pub ok: bool,
}

/// Indicator of a union of initial segments has norm at most 1 whenever
/// the matching combination of base vectors lies in the Z-ball.
pub fn segment_indicator_report(
    index_set: &FiniteSet,
    profile: &SegmentProfile,
    space: &BaseSpace,
    blocks: &BlockSystem,
) -> Result<SegmentIndicatorReport> {
    for (n, _) in profile.iter() {
        if !index_set.contains(n as u64) {
            return Err(Error::InvalidInput(format!(
                "profile touches block {n} outside the index set"
            )));
        }
    }
    for n in index_set.iter() {
        if n == 0 || n > blocks.depth() as u64 {
            return Err(Error::InvalidInput(format!(
                "index {n} is not a materialized block"
            )));
        }
    }
    let cv = profile.constraint_vector(blocks)?;
    if ball_member(space, &cv)? == BallPosition::Outside {
        return Err(Error::HypothesisFailed(
            "segment combination lies outside the Z-ball".into(),
        ));
    }
    let mut u = SparseVector::zero();
    for (n, g) in profile.iter() {
        let start = blocks.min(n)?;
        for j in start..start + g {
            u.set(j, Rat::one());
        }
    }
    let cert = norm_m(&u, space, blocks)?;
    if !cert.exhaustive {
        return Err(Error::BudgetExceeded(
            "segment indicator needs an exhaustive norm certificate".into(),
        ));
    }
    let ok = cert.value <= Rat::one();
    Ok(SegmentIndicatorReport {
        indicator_norm: cert.value,
        ok,
    })
}

pub fn verify_segment_indicator(
    index_set: &FiniteSet,
    profile: &SegmentProfile,
    space: &BaseSpace,
    blocks: &BlockSystem,
) -> Result<bool> {
    Ok(segment_indicator_report(index_set, profile, space, blocks)?.ok)
}

#[derive(Debug, Clone)]
pub struct DominationReport {
    pub engine_norm: ScalarBound,
    pub base_norm: ScalarBound,
    pub main_ok: bool,
    /// Set only for non-negative a inside the dual unit ball.
    pub sharper_ok: Option<bool>,
}

impl DominationReport {
    pub fn ok(&self) -> bool {
        self.main_ok && self.sharper_ok.unwrap_or(true)
    }
}

/// Lower domination: ‖Σ aᵢuᵢ*‖_* ≥ A·‖Σ aᵢzᵢ*‖_{Z*}, and for
/// non-negative a inside the dual unit ball also the sharper form
/// ‖Σ aᵢuᵢ*‖_* ≥ ‖Σ aᵢzᵢ*‖_{Z*} − Σ_{i ∈ supp a} 1/|Fᵢ|.
pub fn domination_report(
    a: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<DominationReport> {
    let f = combine_u_star(a, &ledger.blocks)?;
    let mid = dual_norm_m(&f, &ledger.space, &ledger.blocks, precision)?.value;
    let z = dual_norm(&ledger.space, a, precision)?;
    let main_ok = mid.lower >= &ledger.constant_a * &z.upper;
    let sharper_ok = if a.is_nonnegative() && z.upper <= Rat::one() {
        let mut recip = Rat::zero();
        for (i, _) in a.iter() {
            recip += rat_u64(ledger.blocks.size(i as u32)?).recip();
        }
        Some(mid.lower >= &z.upper - &recip)
    } else {
        None
    };
    Ok(DominationReport {
        engine_norm: mid,
        base_norm: z,
        main_ok,
        sharper_ok,
    })
}

pub fn verify_dual_domination(
    a: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<bool> {
    Ok(domination_report(a, ledger, precision)?.ok())
}

#[derive(Debug, Clone)]
pub struct FlatMeasureReport {
    pub dual_norm: ScalarBound,
    pub heavy_blocks: Vec<u32>,
    pub light_chunks: Vec<Vec<u32>>,
    pub parts_certified: bool,
    pub ok: bool,
}

/// Dual bound for a Z-bounded measure whose atoms sit under coordinates
/// of size at least ε_{n+1} in a norm-one non-negative vector:
/// ‖μ‖_* ≤ 2, witnessed by splitting into a heavy part (weights ≥ 1/2)
/// and greedily chunked light remainder, both members of the norming
/// set.
pub fn flat_measure_report(
    mu: &AtomicMeasure,
    u: &SparseVector,
    n: u32,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<FlatMeasureReport> {
    let space = &ledger.space;
    let blocks = &ledger.blocks;
    if !u.is_nonnegative() {
        return Err(Error::HypothesisFailed("u has a negative coordinate".into()));
    }
    let ucert = norm_m(u, space, blocks)?;
    if !ucert.exhaustive {
        return Err(Error::BudgetExceeded(
            "hypothesis check needs an exhaustive norm certificate".into(),
        ));
    }
    if ucert.value > Rat::one() {
        return Err(Error::HypothesisFailed("‖u‖ exceeds 1".into()));
    }
    let eps_next = ledger.eps(n + 1);
    for (i, j, _) in mu.atoms() {
        if i <= n {
            return Err(Error::HypothesisFailed(format!(
                "atom block {i} is not above the level index {n}"
            )));
        }
        if u.get(j) < eps_next {
            return Err(Error::HypothesisFailed(format!(
                "u is below ε_{} at coordinate {j}",
                n + 1
            )));
        }
    }
    if !is_zbounded(mu, space, blocks)? {
        return Err(Error::HypothesisFailed("measure is not Z-bounded".into()));
    }
    if mu.is_zero_measure() {
        return Ok(FlatMeasureReport {
            dual_norm: ScalarBound::exact(Rat::zero()),
            heavy_blocks: vec![],
            light_chunks: vec![],
            parts_certified: true,
            ok: true,
        });
    }

    let half = Rat::new(1.into(), 2.into());
    let heavy: Vec<u32> = mu
        .atoms()
        .filter(|(_, _, w)| **w >= half)
        .map(|(i, _, _)| i)
        .collect();
    let light: Vec<u32> = mu
        .atoms()
        .filter(|(_, _, w)| **w < half)
        .map(|(i, _, _)| i)
        .collect();

    let mut witnessed = true;
    if !heavy.is_empty() {
        let sub = mu.sub_measure(&heavy);
        let parts: Vec<AtomicMeasure> = heavy
            .iter()
            .map(|&i| sub.sub_measure(&[i]))
            .collect();
        witnessed &= is_admissible(&parts, blocks)?
            && parts.iter().all(in_p1)
            && is_zbounded(&sub, space, blocks)?
            && in_m(&sub, space, blocks)?.is_some();
    }
    let mut chunks: Vec<Vec<u32>> = Vec::new();
    if !light.is_empty() {
        let sub = mu.sub_measure(&light);
        let mut current: Vec<u32> = Vec::new();
        let mut running = Rat::zero();
        for &i in &light {
            let w = sub.atom_in_block(i).expect("light atom present").1.clone();
            if !current.is_empty() && &running + &w > Rat::one() {
                chunks.push(std::mem::take(&mut current));
                running = Rat::zero();
            }
            running += w;
            current.push(i);
        }
        if !current.is_empty() {
            chunks.push(current);
        }
        let parts: Vec<AtomicMeasure> = chunks.iter().map(|c| sub.sub_measure(c)).collect();
        witnessed &= is_admissible(&parts, blocks)?
            && parts.iter().all(in_p1)
            && is_zbounded(&sub, space, blocks)?
            && in_m(&sub, space, blocks)?.is_some();
    }

    let dual = dual_norm_m(&mu.to_vector(), space, blocks, precision)?.value;
    let ok = witnessed && dual.upper <= rat_u64(2);
    Ok(FlatMeasureReport {
        dual_norm: dual,
        heavy_blocks: heavy,
        light_chunks: chunks,
        parts_certified: witnessed,
        ok,
    })
}

pub fn verify_flat_measure_bound(
    mu: &AtomicMeasure,
    u: &SparseVector,
    n: u32,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<bool> {
    Ok(flat_measure_report(mu, u, n, ledger, precision)?.ok)
}

/// An instance of the disjoint-family counting bounds: segment lengths
/// per block of the index set, dual coefficients ρ, the claimed family
/// of subsets, and the vector u carrying the coordinate hypothesis.
#[derive(Debug, Clone)]
pub struct DisjointFamilyInstance {
    pub level: u32,
    pub segment_lengths: BTreeMap<u32, u64>,
    pub rho: SparseVector,
    pub family: Vec<Vec<u32>>,
    pub u: SparseVector,
}

fn segment_combination(
    subset: &[u32],
    lengths: &BTreeMap<u32, u64>,
    blocks: &BlockSystem,
) -> Result<SparseVector> {
    let mut v = SparseVector::zero();
    for &i in subset {
        let g = *lengths
            .get(&i)
            .ok_or_else(|| Error::InvalidInput(format!("no segment for block {i}")))?;
        v.set(i as u64, rat_u64(g) / rat_u64(blocks.size(i)?));
    }
    Ok(v)
}

fn family_weight(subset: &[u32], lengths: &BTreeMap<u32, u64>, rho: &SparseVector, blocks: &BlockSystem) -> Result<Rat> {
    let mut s = Rat::zero();
    for &i in subset {
        let g = lengths[&i];
        s += rho.get(i as u64) * rat_u64(g) / rat_u64(blocks.size(i)?);
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct DisjointFamilyReport {
    pub family_size: u64,
    pub size_cap: Rat,
    pub family_weight: Rat,
    pub weight_bound: ScalarBound,
    pub size_ok: bool,
    pub weight_ok: bool,
}

impl DisjointFamilyReport {
    pub fn ok(&self) -> bool {
        self.size_ok && self.weight_ok
    }
}

/// Both conclusions of the counting bounds: the family has fewer than
/// (1/ε_{n+1})(1+⌊1/δₙ⌋) members, and its total collected weight is at
/// most (1 + 1/δₙ)·φ(k₀)ⁿ⁺¹.
pub fn disjoint_family_report(
    inst: &DisjointFamilyInstance,
    ledger: &ParameterLedger,
) -> Result<DisjointFamilyReport> {
    let space = &ledger.space;
    let blocks = &ledger.blocks;
    let n = inst.level;
    let eps_next = ledger.eps(n + 1);
    let delta = ledger.delta(n);

    if !inst.u.is_nonnegative() || !inst.rho.is_nonnegative() {
        return Err(Error::HypothesisFailed("u and ρ must be non-negative".into()));
    }
    let ucert = norm_m(&inst.u, space, blocks)?;
    if !ucert.exhaustive {
        return Err(Error::BudgetExceeded(
            "hypothesis check needs an exhaustive norm certificate".into(),
        ));
    }
    if ucert.value > Rat::one() {
        return Err(Error::HypothesisFailed("‖u‖ exceeds 1".into()));
    }
    if dual_ball_member(space, &inst.rho)? == BallPosition::Outside {
        return Err(Error::HypothesisFailed(
            "ρ lies outside the dual unit ball".into(),
        ));
    }
    for (&i, &g) in &inst.segment_lengths {
        if i as u64 <= n as u64 || i > blocks.depth() {
            return Err(Error::HypothesisFailed(format!(
                "block {i} is not strictly above level {n} and materialized"
            )));
        }
        if g == 0 || g > blocks.size(i)? {
            return Err(Error::HypothesisFailed(format!(
                "segment length {g} invalid for block {i}"
            )));
        }
        let deep = blocks.min(i)? + g - 1;
        if inst.u.get(deep) < eps_next {
            return Err(Error::HypothesisFailed(format!(
                "u is below ε_{} at the segment end {deep}",
                n + 1
            )));
        }
    }
    let mut seen: Vec<u32> = Vec::new();
    for subset in &inst.family {
        for &i in subset {
            if seen.contains(&i) {
                return Err(Error::HypothesisFailed(format!(
                    "family members are not pairwise disjoint at block {i}"
                )));
            }
            seen.push(i);
        }
        let cv = segment_combination(subset, &inst.segment_lengths, blocks)?;
        if ball_member(space, &cv)? == BallPosition::Outside {
            return Err(Error::HypothesisFailed(
                "a family member violates the Z-ball condition".into(),
            ));
        }
        if family_weight(subset, &inst.segment_lengths, &inst.rho, blocks)? < delta {
            return Err(Error::HypothesisFailed(
                "a family member collects less than δₙ".into(),
            ));
        }
    }

    let delta_floor = delta.clone().recip().floor().to_integer();
    let cap = eps_next.clone().recip() * (Rat::one() + Rat::from_integer(delta_floor));
    let size_ok = rat_u64(inst.family.len() as u64) < cap;
    let mut total = Rat::zero();
    for subset in &inst.family {
        total += family_weight(subset, &inst.segment_lengths, &inst.rho, blocks)?;
    }
    let factor = Rat::one() + delta.recip();
    let bound = ledger.phi_k0.pow(n + 1).scale(&factor);
    let weight_ok = certified_le(&ScalarBound::exact(total.clone()), &bound, "family weight bound")?;
    Ok(DisjointFamilyReport {
        family_size: inst.family.len() as u64,
        size_cap: cap,
        family_weight: total,
        weight_bound: bound,
        size_ok,
        weight_ok,
    })
}

pub fn verify_disjoint_family_bounds(
    inst: &DisjointFamilyInstance,
    ledger: &ParameterLedger,
) -> Result<bool> {
    Ok(disjoint_family_report(inst, ledger)?.ok())
}

/// Greedy maximal family of pairwise disjoint bad subsets of the given
/// participants, smallest bitmask first; a subset is bad when its
/// segment combination stays in the Z-ball while collecting at least δₙ
/// of the ρ-weight. The loop ends exactly when no subset of the
/// remainder is bad, which certifies maximality.
pub fn extract_bad_family(
    participants: &[u32],
    lengths: &BTreeMap<u32, u64>,
    rho: &SparseVector,
    space: &BaseSpace,
    blocks: &BlockSystem,
    delta: &Rat,
) -> Result<(Vec<Vec<u32>>, Vec<u32>)> {
    let mut remaining: Vec<u32> = participants.to_vec();
    let mut family: Vec<Vec<u32>> = Vec::new();
    'extract: loop {
        for mask in 1u64..(1u64 << remaining.len()) {
            let subset: Vec<u32> = remaining
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &i)| i)
                .collect();
            let cv = segment_combination(&subset, lengths, blocks)?;
            if ball_member(space, &cv)? == BallPosition::Outside {
                continue;
            }
            if family_weight(&subset, lengths, rho, blocks)? < *delta {
                continue;
            }
            remaining.retain(|i| !subset.contains(i));
            family.push(subset);
            continue 'extract;
        }
        break;
    }
    Ok((family, remaining))
}

/// One level of the layered estimate: the blocks whose coordinates fall
/// in (ε_{n+1}, εₙ], the deepest such coordinate per block above the
/// level index, the extracted maximal family of bad subsets, the
/// leftover measure, and the exact quantities entering the per-level
/// bounds.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub level: u32,
    pub deep_coordinate: BTreeMap<u32, u64>,
    pub segment_length: BTreeMap<u32, u64>,
    pub bad_family: Vec<Vec<u32>>,
    pub leftover: AtomicMeasure,
    pub small_contribution: Rat,
    pub small_bound: Rat,
    pub leftover_optimum: Rat,
    pub leftover_pairing: Rat,
    pub bad_surrogate: Rat,
    pub bad_bound: Rat,
    pub level_contribution: Rat,
    pub level_bound: Rat,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct LevelDecomposition {
    pub levels: Vec<LevelData>,
    pub total: Rat,
    pub total_bound: Rat,
    pub pass: bool,
}

/// The unique n ≥ 0 with v ∈ (ε_{n+1}, εₙ], for v ∈ (0, 1].
fn level_of(v: &Rat, k0: u64) -> u32 {
    let k = rat_u64(k0);
    let mut n = 0u32;
    let mut scaled = v.clone();
    loop {
        let next = &scaled * &k;
        if next > Rat::one() {
            return n;
        }
        scaled = next;
        n += 1;
    }
}

/// Splits Σᵢ ρᵢ uᵢ*(u) by coordinate levels and certifies every
/// estimate of the layered bound: small-index blocks contribute at most
/// n·εₙ per level, the leftover measure stays Z-bounded after scaling
/// by 1/δₙ and pairs below 2δₙ, the bad family's inflated weight stays
/// below Bₙ, and the grand total stays below the ledger constant C.
pub fn decompose_levels(
    u: &SparseVector,
    rho: &SparseVector,
    ledger: &ParameterLedger,
) -> Result<LevelDecomposition> {
    let space = &ledger.space;
    let blocks = &ledger.blocks;
    if !u.is_nonnegative() || !rho.is_nonnegative() {
        return Err(Error::HypothesisFailed("u and ρ must be non-negative".into()));
    }
    for (i, _) in rho.iter() {
        if i == 0 || i > blocks.depth() as u64 {
            return Err(Error::InvalidInput(format!(
                "coefficient index {i} is not a materialized block"
            )));
        }
    }
    if dual_ball_member(space, rho)? == BallPosition::Outside {
        return Err(Error::HypothesisFailed(
            "ρ lies outside the dual unit ball".into(),
        ));
    }
    let ucert = norm_m(u, space, blocks)?;
    if !ucert.exhaustive {
        return Err(Error::BudgetExceeded(
            "hypothesis check needs an exhaustive norm certificate".into(),
        ));
    }
    if ucert.value > Rat::one() {
        return Err(Error::HypothesisFailed("‖u‖ exceeds 1".into()));
    }

    let k0 = rat_u64(ledger.k0);
    let two = rat_u64(2);

    // Group the positive coordinates of u over the touched blocks by
    // level; every positive value ≤ 1 lands in exactly one level.
    let mut by_level: BTreeMap<u32, BTreeMap<u32, Vec<(u64, Rat)>>> = BTreeMap::new();
    for (i, r) in rho.iter() {
        if r.is_zero() {
            continue;
        }
        let i = i as u32;
        for j in blocks.coords(i)? {
            let v = u.get(j);
            if v > Rat::zero() {
                by_level
                    .entry(level_of(&v, ledger.k0))
                    .or_default()
                    .entry(i)
                    .or_default()
                    .push((j, v));
            }
        }
    }

    let mut levels = Vec::new();
    let mut total = Rat::zero();
    let mut all_pass = true;
    for (lvl, per_block) in by_level {
        let eps_n = ledger.eps(lvl);
        let delta_n = ledger.delta(lvl);
        let b_n = ledger.b_bound(lvl).upper;

        let mut small_contribution = Rat::zero();
        let mut deep_coordinate = BTreeMap::new();
        let mut segment_length = BTreeMap::new();
        let mut level_contribution = Rat::zero();
        let mut e2_ok = true;
        for (&i, coords) in &per_block {
            let size = rat_u64(blocks.size(i)?);
            let level_mass: Rat =
                coords.iter().map(|(_, v)| v / &size).sum::<Rat>() * rho.get(i as u64);
            level_contribution += &level_mass;
            if (i as u64) <= lvl as u64 {
                small_contribution += level_mass;
                continue;
            }
            let (deep, deep_value) = coords.last().expect("level group is non-empty");
            let g = deep - blocks.min(i)? + 1;
            deep_coordinate.insert(i, *deep);
            segment_length.insert(i, g);
            // Per-coordinate inflation: the level-n mass of the block is
            // at most k₀ times the deepest value spread over the segment.
            let surrogate = &k0 * rho.get(i as u64) * deep_value * rat_u64(g) / &size;
            e2_ok &= level_mass <= surrogate;
        }

        let participants: Vec<u32> = segment_length.keys().copied().collect();
        let (bad_family, remaining) =
            extract_bad_family(&participants, &segment_length, rho, space, blocks, &delta_n)?;

        let leftover = AtomicMeasure::from_coords(
            blocks,
            remaining.iter().map(|&i| {
                let g = segment_length[&i];
                let w = rho.get(i as u64) * rat_u64(g)
                    / rat_u64(blocks.size(i).expect("participant block exists"));
                (deep_coordinate[&i], w)
            }),
        )?;
        let (leftover_optimum, _) = zbounded_optimum(&leftover, space, blocks)?;
        let leftover_pairing = leftover.pair_abs(u);

        let mut bad_surrogate = Rat::zero();
        for subset in &bad_family {
            for &i in subset {
                let g = segment_length[&i];
                bad_surrogate += &k0
                    * rho.get(i as u64)
                    * u.get(deep_coordinate[&i])
                    * rat_u64(g)
                    / rat_u64(blocks.size(i)?);
            }
        }

        let small_bound = rat_u64(lvl as u64) * &eps_n;
        let level_bound = &small_bound + &two * &k0 * &delta_n + &b_n;
        let pass = e2_ok
            && small_contribution <= small_bound
            && leftover_optimum.upper <= delta_n
            && leftover_pairing <= &two * &delta_n
            && bad_surrogate <= b_n
            && level_contribution <= level_bound;
        all_pass &= pass;
        total += &level_contribution;
        levels.push(LevelData {
            level: lvl,
            deep_coordinate,
            segment_length,
            bad_family,
            leftover,
            small_contribution,
            small_bound,
            leftover_optimum: leftover_optimum.upper,
            leftover_pairing,
            bad_surrogate,
            bad_bound: b_n,
            level_contribution,
            level_bound,
            pass,
        });
    }

    // Cross-check the level split against the direct evaluation.
    let mut direct = Rat::zero();
    for (i, r) in rho.iter() {
        let size = rat_u64(blocks.size(i as u32)?);
        let mut s = Rat::zero();
        for j in blocks.coords(i as u32)? {
            s += u.get(j);
        }
        direct += r * s / &size;
    }
    debug_assert_eq!(direct, total, "level split must cover every coordinate once");

    all_pass &= total <= ledger.constant_c;
    Ok(LevelDecomposition {
        levels,
        total,
        total_bound: ledger.constant_c.clone(),
        pass: all_pass,
    })
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub engine_norm: ScalarBound,
    pub base_norm: ScalarBound,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl SandwichReport {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Two-sided equivalence on coefficients:
/// A·‖Σaᵢzᵢ*‖_{Z*} ≤ ‖Σaᵢuᵢ*‖_* ≤ C·‖Σaᵢzᵢ*‖_{Z*}.
///
/// The dual enclosure is driven only as far as the comparison needs:
/// the cutting planes stop once both inequalities are certified (or
/// refuted) against the enclosure of the base dual norm, falling back
/// to the requested precision when the slack is too small to decide
/// earlier.
pub fn norm_sandwich_report(
    a: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<SandwichReport> {
    let f = combine_u_star(a, &ledger.blocks)?;
    let z = dual_norm(&ledger.space, a, precision)?;
    let need_lower = &ledger.constant_a * &z.upper;
    let cap_upper = &ledger.constant_c * &z.lower;
    let budget = SearchBudget::default();
    let mut ascent = DualAscent::new(&f, &ledger.space, &ledger.blocks, budget.clone())?;
    let mut mid = None;
    for _ in 0..budget.max_dual_iterations {
        match ascent.step()? {
            DualStep::Exact(cert) => {
                mid = Some(cert.value);
                break;
            }
            DualStep::Bounds(lower, upper) => {
                let lower_settled = lower >= need_lower || upper < need_lower;
                let upper_settled = upper <= cap_upper || lower > cap_upper;
                if (lower_settled && upper_settled) || &upper - &lower <= *precision {
                    mid = Some(ScalarBound::new(lower, upper));
                    break;
                }
            }
        }
    }
    let Some(mid) = mid else {
        return Err(Error::IterationCap {
            context: "dual norm inside the sandwich comparison".into(),
            lower: fmt_rat(ascent.lower()),
            upper: "unresolved".into(),
        });
    };
    let lower_ok = need_lower <= mid.lower;
    let upper_ok = mid.upper <= cap_upper;
    Ok(SandwichReport {
        engine_norm: mid,
        base_norm: z,
        lower_ok,
        upper_ok,
    })
}

pub fn verify_norm_sandwich(
    a: &SparseVector,
    ledger: &ParameterLedger,
    precision: &Rat,
) -> Result<bool> {
    Ok(norm_sandwich_report(a, ledger, precision)?.ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_ledger, LedgerOptions};
    use crate::exact::{rat, rat_int};

    fn c0_ledger() -> ParameterLedger {
        build_ledger(&BaseSpace::C0, 4, &LedgerOptions::default()).unwrap()
    }

    fn l2_ledger(depth: u32) -> ParameterLedger {
        let space = BaseSpace::lp(rat_int(2)).unwrap();
        build_ledger(&space, depth, &LedgerOptions::default()).unwrap()
    }

    fn prec() -> Rat {
        rat(1, 1_000_000_000)
    }

    fn ones(range: std::ops::RangeInclusive<u64>) -> SparseVector {
        let mut x = SparseVector::zero();
        for j in range {
            x.set(j, Rat::one());
        }
        x
    }

    #[test]
    fn block_average_functional_examples() {
        let l = c0_ledger();
        let u1 = u_star(1, &l.blocks).unwrap();
        let block = ones(l.blocks.coords(1).unwrap());
        assert_eq!(u1.dot(&block), Rat::one());
        assert_eq!(u1.get(l.blocks.max(1).unwrap() + 1), Rat::zero());
        let mut spike = SparseVector::zero();
        spike.set(
            l.blocks.min(1).unwrap(),
            rat_u64(l.blocks.size(1).unwrap()),
        );
        assert_eq!(u1.dot(&spike), Rat::one());
        assert!(u_star(l.depth + 1, &l.blocks).is_err());
    }

    #[test]
    fn quotient_map_averages_blocks() {
        let l = c0_ledger();
        let block = ones(l.blocks.coords(2).unwrap());
        assert_eq!(apply_q(&block, &l.blocks), SparseVector::unit(2));
        let e = SparseVector::unit(l.blocks.min(3).unwrap());
        let q = apply_q(&e, &l.blocks);
        assert_eq!(q.get(3), rat_u64(l.blocks.size(3).unwrap()).recip());
        // A coordinate in no block maps to zero.
        assert!(apply_q(&SparseVector::unit(1), &l.blocks).is_zero_vector());
        // Linearity on a sample.
        let x = SparseVector::parse("5:1/2,10:1,11:-1").unwrap();
        let y = SparseVector::parse("5:1/2,23:2").unwrap();
        assert_eq!(
            apply_q(&x.add(&y), &l.blocks),
            apply_q(&x, &l.blocks).add(&apply_q(&y, &l.blocks))
        );
    }

    #[test]
    fn adjoint_identity_holds_on_every_block() {
        let l = c0_ledger();
        for n in 1..=l.depth {
            assert!(verify_adjoint(n, &l.blocks).unwrap(), "block {n}");
        }
        // Negative control: a perturbed weight breaks the identity.
        let mut wrong = u_star(2, &l.blocks).unwrap();
        wrong.set(l.blocks.min(2).unwrap(), rat(1, 3));
        assert_ne!(adjoint_functional(2, &l.blocks).unwrap(), wrong);
    }

    #[test]
    fn preimages_hit_the_base_vectors() {
        let l = c0_ledger();
        for n in 1..=l.depth {
            let x = z_preimage(n, &l.blocks).unwrap();
            assert_eq!(apply_q(&x, &l.blocks), SparseVector::unit(n as u64));
        }
    }

    #[test]
    fn operator_bound_holds_on_samples() {
        let l = c0_ledger();
        for s in ["5:1,10:-1/2", "8:3,17:3,38:3", "1:5,23:1/4", "54:-2/3,85:1"] {
            let x = SparseVector::parse(s).unwrap();
            assert!(verify_operator_bound(&x, &l, &prec()).unwrap(), "sample {s}");
        }
        let l2 = l2_ledger(4);
        for s in ["5:1,10:-1/2", "8:1,17:1"] {
            let x = SparseVector::parse(s).unwrap();
            assert!(verify_operator_bound(&x, &l2, &prec()).unwrap(), "sample {s}");
        }
    }

    #[test]
    fn segment_indicators_stay_in_the_ball() {
        let l = c0_ledger();
        let full = SegmentProfile::from_lengths(&l.blocks, [(2u32, l.blocks.size(2).unwrap())])
            .unwrap();
        let idx = FiniteSet::parse("{2}").unwrap();
        assert!(verify_segment_indicator(&idx, &full, &l.space, &l.blocks).unwrap());
        let empty = SegmentProfile::empty();
        assert!(
            verify_segment_indicator(&FiniteSet::empty(), &empty, &l.space, &l.blocks).unwrap()
        );
        // Over a Euclidean base two full blocks overflow the ball.
        let l2 = l2_ledger(4);
        let two = SegmentProfile::from_lengths(
            &l2.blocks,
            [
                (1u32, l2.blocks.size(1).unwrap()),
                (2u32, l2.blocks.size(2).unwrap()),
            ],
        )
        .unwrap();
        let idx2 = FiniteSet::parse("{1,2}").unwrap();
        match verify_segment_indicator(&idx2, &two, &l2.space, &l2.blocks) {
            Err(Error::HypothesisFailed(_)) => {}
            other => panic!("expected a hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn dual_domination_on_samples() {
        let l = c0_ledger();
        assert!(verify_dual_domination(&SparseVector::unit(1), &l, &prec()).unwrap());
        let half = SparseVector::parse("1:1/2,2:1/2").unwrap();
        assert!(verify_dual_domination(&half, &l, &prec()).unwrap());
        let mixed = SparseVector::parse("1:1/2,2:-1/2").unwrap();
        assert!(verify_dual_domination(&mixed, &l, &prec()).unwrap());
        let deep = SparseVector::parse("3:1/3,4:-1/4").unwrap();
        assert!(verify_dual_domination(&deep, &l, &prec()).unwrap());
    }

    #[test]
    fn flat_measure_bound_with_heavy_atoms() {
        let l = c0_ledger();
        let j = l.blocks.max(1).unwrap();
        let mu = AtomicMeasure::single(&l.blocks, j, Rat::one()).unwrap();
        let u = SparseVector::unit(j);
        assert!(verify_flat_measure_bound(&mu, &u, 0, &l, &prec()).unwrap());
    }

    #[test]
    fn flat_measure_bound_chunks_light_atoms() {
        let l = l2_ledger(6);
        // Four deep weight-2/5 atoms on blocks above level 2: the joint
        // mass exceeds 1, so the light part needs two greedy chunks.
        let coords: Vec<u64> = (3..=6).map(|i| l.blocks.max(i).unwrap()).collect();
        let mu = AtomicMeasure::from_coords(
            &l.blocks,
            coords.iter().map(|&j| (j, rat(2, 5))),
        )
        .unwrap();
        let mut u = SparseVector::zero();
        for &j in &coords {
            u.set(j, rat(1, 8));
        }
        assert_eq!(
            norm_m(&u, &l.space, &l.blocks).unwrap().value,
            rat(1, 2),
            "hypothesis vector norm"
        );
        assert!(verify_flat_measure_bound(&mu, &u, 2, &l, &prec()).unwrap());
        // Violating the coordinate hypothesis must fail loudly.
        let mut low = u.clone();
        low.set(coords[0], rat(1, 100));
        match verify_flat_measure_bound(&mu, &low, 2, &l, &prec()) {
            Err(Error::HypothesisFailed(_)) => {}
            other => panic!("expected a hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_family_bounds_on_small_instances() {
        let l = c0_ledger();
        let u = ones(l.blocks.coords(1).unwrap());
        // Empty family: both conclusions are vacuous.
        let empty = DisjointFamilyInstance {
            level: 0,
            segment_lengths: BTreeMap::from([(1u32, l.blocks.size(1).unwrap())]),
            rho: SparseVector::unit(1),
            family: vec![],
            u: u.clone(),
        };
        assert!(verify_disjoint_family_bounds(&empty, &l).unwrap());
        // A single bad set at level 0: cardinality 1 against the cap
        // (1/ε₁)(1+⌊1/δ₀⌋) = 2k₀ = 4, weight 1 against 2·φ(2) = 2.
        let single = DisjointFamilyInstance {
            family: vec![vec![1]],
            ..empty.clone()
        };
        assert!(verify_disjoint_family_bounds(&single, &l).unwrap());
        // An overweight ρ is a hypothesis violation, not a verdict.
        let heavy = DisjointFamilyInstance {
            rho: SparseVector::parse("1:2").unwrap(),
            ..single.clone()
        };
        match verify_disjoint_family_bounds(&heavy, &l) {
            Err(Error::HypothesisFailed(_)) => {}
            other => panic!("expected a hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn level_split_on_a_shallow_coordinate() {
        let l = c0_ledger();
        let u = SparseVector::unit(l.blocks.min(1).unwrap());
        let d = decompose_levels(&u, &SparseVector::unit(1), &l).unwrap();
        assert!(d.pass);
        assert_eq!(d.total, rat_u64(l.blocks.size(1).unwrap()).recip());
        assert_eq!(d.levels.len(), 1);
        assert_eq!(d.levels[0].level, 0);
        assert!(d.levels[0].bad_family.is_empty());
    }

    #[test]
    fn level_split_on_a_full_block() {
        let l = c0_ledger();
        let u = ones(l.blocks.coords(1).unwrap());
        let d = decompose_levels(&u, &SparseVector::unit(1), &l).unwrap();
        assert!(d.pass);
        assert_eq!(d.total, Rat::one());
        // A full block at weight 1 collects δ₀ = 1, so it forms a bad set.
        assert_eq!(d.levels[0].bad_family, vec![vec![1]]);
        assert!(d.levels[0].leftover.is_zero_measure());
    }

    #[test]
    fn level_split_with_mixed_levels() {
        let l = c0_ledger();
        let mut u = SparseVector::zero();
        u.set(l.blocks.min(1).unwrap(), Rat::one());
        u.set(l.blocks.min(2).unwrap(), rat(1, 3));
        u.set(l.blocks.min(2).unwrap() + 1, rat(1, 5));
        u.set(l.blocks.min(3).unwrap(), rat(1, 17));
        let rho = SparseVector::parse("1:1/3,2:1/3,3:1/3").unwrap();
        let d = decompose_levels(&u, &rho, &l).unwrap();
        assert!(d.pass);
        let seen: Vec<u32> = d.levels.iter().map(|lv| lv.level).collect();
        assert_eq!(seen, vec![0, 1, 2, 4]);
        assert!(d.total <= l.constant_c);
        // Oversized ρ trips the hypothesis gate.
        match decompose_levels(&u, &SparseVector::parse("1:2").unwrap(), &l) {
            Err(Error::HypothesisFailed(_)) => {}
            other => panic!("expected a hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn sandwich_on_samples() {
        let l = c0_ledger();
        for s in ["1:1", "1:1,2:1", "1:1/2,3:-1/3", "2:1,4:1"] {
            let a = SparseVector::parse(s).unwrap();
            assert!(verify_norm_sandwich(&a, &l, &prec()).unwrap(), "sample {s}");
        }
        let l2 = l2_ledger(4);
        for s in ["1:1", "1:3/5,2:-4/5"] {
            let a = SparseVector::parse(s).unwrap();
            assert!(verify_norm_sandwich(&a, &l2, &prec()).unwrap(), "sample {s}");
        }
    }
}
