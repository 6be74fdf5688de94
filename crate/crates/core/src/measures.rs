//! The norming-set machinery: atomic measures with at most one atom per
//! block, the mass class P₁, Z-boundedness as an exact optimization over
//! initial-segment profiles, admissibility of measure families, and
//! membership in the norming set M with a full witnessing decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{One, Signed, Zero};

use crate::construction::BlockSystem;
use crate::error::{Error, Result};
use crate::exact::{fmt_rat, parse_rat, rat_u64, Rat, ScalarBound};
use crate::schreier::{is_s1, FiniteSet};
use crate::spaces::{ball_member, BallPosition, BaseSpace};
use crate::sparse::SparseVector;

/// A non-negative finitely supported measure with at most one atom per
/// block: weight λₙ ∈ (0, 1] at coordinate jₙ ∈ Fₙ. Zero weights are
/// normalized away on construction, so emptiness means the zero measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicMeasure {
    /// block index → (coordinate, weight)
    atoms: BTreeMap<u32, (u64, Rat)>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        AtomicMeasure { atoms: BTreeMap::new() }
    }

    /// Builds a measure from (coordinate, weight) pairs, validating that
    /// every coordinate lies in a materialized block, no block carries
    /// two atoms, and weights lie in [0, 1]. Zero weights are dropped.
    pub fn from_coords(
        blocks: &BlockSystem,
        pairs: impl IntoIterator<Item = (u64, Rat)>,
    ) -> Result<Self> {
        let mut atoms = BTreeMap::new();
        for (coord, weight) in pairs {
            if weight.is_negative() || weight > Rat::one() {
                return Err(Error::InvalidInput(format!(
                    "weight {} at coordinate {coord} is outside [0, 1]",
                    fmt_rat(&weight)
                )));
            }
            if weight.is_zero() {
                continue;
            }
            let n = blocks.block_of(coord).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "coordinate {coord} lies outside every materialized block"
                ))
            })?;
            if atoms.insert(n, (coord, weight)).is_some() {
                return Err(Error::InvalidInput(format!(
                    "block {n} carries two atoms"
                )));
            }
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn single(blocks: &BlockSystem, coord: u64, weight: Rat) -> Result<Self> {
        AtomicMeasure::from_coords(blocks, [(coord, weight)])
    }

    /// (block, coordinate, weight) triples in block order.
    pub fn atoms(&self) -> impl Iterator<Item = (u32, u64, &Rat)> {
        self.atoms.iter().map(|(&n, (j, w))| (n, *j, w))
    }

    pub fn touched_blocks(&self) -> Vec<u32> {
        self.atoms.keys().copied().collect()
    }

    pub fn atom_in_block(&self, n: u32) -> Option<(u64, &Rat)> {
        self.atoms.get(&n).map(|(j, w)| (*j, w))
    }

    pub fn is_zero_measure(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> Rat {
        self.atoms.values().map(|(_, w)| w).sum()
    }

    pub fn support(&self) -> BTreeSet<u64> {
        self.atoms.values().map(|(j, _)| *j).collect()
    }

    pub fn min_supp(&self) -> Option<u64> {
        self.atoms.values().map(|(j, _)| *j).min()
    }

    /// Σₙ λₙ·|x(jₙ)|, the pairing that defines the engine norm.
    pub fn pair_abs(&self, x: &SparseVector) -> Rat {
        self.atoms
            .values()
            .map(|(j, w)| w * x.get(*j).abs())
            .sum()
    }

    /// The measure as a coordinate vector of its weights.
    pub fn to_vector(&self) -> SparseVector {
        let mut v = SparseVector::zero();
        for (j, w) in self.atoms.values() {
            v.set(*j, w.clone());
        }
        v
    }

    /// Restriction to the coordinates satisfying the predicate.
    pub fn restrict_where(&self, keep: impl Fn(u64) -> bool) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .filter(|(_, (j, _))| keep(*j))
                .map(|(&n, (j, w))| (n, (*j, w.clone())))
                .collect(),
        }
    }

    /// Restriction to a finite coordinate set.
    pub fn restrict(&self, set: &FiniteSet) -> AtomicMeasure {
        self.restrict_where(|j| set.contains(j))
    }

    /// The sub-measure carried by the listed blocks.
    pub fn sub_measure(&self, selected: &[u32]) -> AtomicMeasure {
        AtomicMeasure {
            atoms: selected
                .iter()
                .filter_map(|n| self.atoms.get(n).map(|a| (*n, a.clone())))
                .collect(),
        }
    }

    /// Parses "n:(j,num/den)" triples, validating block labels against
    /// the block system.
    pub fn parse(s: &str, blocks: &BlockSystem) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Ok(AtomicMeasure::zero());
        }
        let mut pairs = Vec::new();
        let mut labels = Vec::new();
        for part in t.split("),") {
            let part = part.trim().trim_end_matches(')');
            let (n, rest) = part.split_once(":(").ok_or_else(|| {
                Error::Parse(format!("expected n:(j,weight), got {part:?}"))
            })?;
            let n: u32 = n
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad block label {n:?}: {e}")))?;
            let (j, w) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected j,weight in {rest:?}")))?;
            let j: u64 = j
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad coordinate {j:?}: {e}")))?;
            pairs.push((j, parse_rat(w)?));
            labels.push((n, j));
        }
        let m = AtomicMeasure::from_coords(blocks, pairs)?;
        for (n, j) in labels {
            if blocks.block_of(j) != Some(n) {
                return Err(Error::Parse(format!(
                    "coordinate {j} is labeled block {n} but lies elsewhere"
                )));
            }
        }
        Ok(m)
    }
}

impl fmt::Display for AtomicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(n, (j, w))| format!("{n}:({j},{})", fmt_rat(w)))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Total mass at most 1: the class P₁.
pub fn in_p1(mu: &AtomicMeasure) -> bool {
    mu.mass() <= Rat::one()
}

/// Per block n, the length gₙ of the initial segment Gₙ of Fₙ (empty
/// segments are simply absent from the map).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SegmentProfile {
    lengths: BTreeMap<u32, u64>,
}

impl SegmentProfile {
    pub fn empty() -> Self {
        SegmentProfile::default()
    }

    pub fn from_lengths(
        blocks: &BlockSystem,
        lengths: impl IntoIterator<Item = (u32, u64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, g) in lengths {
            if g > blocks.size(n)? {
                return Err(Error::InvalidInput(format!(
                    "segment length {g} exceeds block {n} of size {}",
                    blocks.size(n)?
                )));
            }
            if g == 0 {
                continue;
            }
            if map.insert(n, g).is_some() {
                return Err(Error::InvalidInput(format!("block {n} listed twice")));
            }
        }
        Ok(SegmentProfile { lengths: map })
    }

    pub fn length(&self, n: u32) -> u64 {
        self.lengths.get(&n).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.lengths.iter().map(|(&n, &g)| (n, g))
    }

    /// μ(Gₙ) summed over the profile: the atom of block n is collected
    /// exactly when the initial segment reaches its position.
    pub fn mass_captured(&self, mu: &AtomicMeasure, blocks: &BlockSystem) -> Result<Rat> {
        let mut total = Rat::zero();
        for (n, j, w) in mu.atoms() {
            let pos = j - blocks.min(n)? + 1;
            if self.length(n) >= pos {
                total += w;
            }
        }
        Ok(total)
    }

    /// The constraint vector Σₙ (gₙ/|Fₙ|) zₙ on block indices.
    pub fn constraint_vector(&self, blocks: &BlockSystem) -> Result<SparseVector> {
        let mut v = SparseVector::zero();
        for (&n, &g) in &self.lengths {
            v.set(n as u64, rat_u64(g) / rat_u64(blocks.size(n)?));
        }
        Ok(v)
    }

    pub fn parse(s: &str, blocks: &BlockSystem) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Ok(SegmentProfile::empty());
        }
        let mut lengths = Vec::new();
        for part in t.split(',') {
            let (n, g) = part.trim().split_once(':').ok_or_else(|| {
                Error::Parse(format!("expected n:len, got {part:?}"))
            })?;
            let n: u32 = n
                .parse()
                .map_err(|e| Error::Parse(format!("bad block label {n:?}: {e}")))?;
            let g: u64 = g
                .parse()
                .map_err(|e| Error::Parse(format!("bad segment length {g:?}: {e}")))?;
            lengths.push((n, g));
        }
        SegmentProfile::from_lengths(blocks, lengths)
    }
}

impl fmt::Display for SegmentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lengths
            .iter()
            .map(|(n, g)| format!("{n}:{g}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// The exact optimum of the Z-boundedness program: the maximum of
/// Σₙ μ(Gₙ) over segment profiles whose constraint vector stays in the
/// unit ball of Z, together with a maximizing profile.
///
/// The search space collapses to subset selection: for a profile to
/// collect the atom of block n it must have gₙ ≥ pos(jₙ), and extending
/// a segment beyond the atom position only grows the constraint vector
/// (coordinatewise, hence in norm, since Z-norms here are monotone on
/// non-negative vectors) without collecting more mass. So the optimal
/// profile takes gₙ ∈ {0, pos(jₙ)}. Subsets are explored depth-first in
/// block order, include-branch first; a branch whose constraint vector
/// already leaves the ball is pruned wholesale by the same monotonicity,
/// and a branch that cannot strictly beat the incumbent is dropped, so
/// the reported optimum is exact and the witness is the first maximizer
/// in that fixed order.
pub fn zbounded_optimum(
    mu: &AtomicMeasure,
    space: &BaseSpace,
    blocks: &BlockSystem,
) -> Result<(ScalarBound, SegmentProfile)> {
    struct Item {
        n: u32,
        pos: u64,
        size: u64,
        weight: Rat,
    }
    let mut items = Vec::new();
    for (n, j, w) in mu.atoms() {
        items.push(Item {
            n,
            pos: j - blocks.min(n)? + 1,
            size: blocks.size(n)?,
            weight: w.clone(),
        });
    }
    // Suffix mass sums for the incumbent bound.
    let mut suffix = vec![Rat::zero(); items.len() + 1];
    for i in (0..items.len()).rev() {
        suffix[i] = &suffix[i + 1] + &items[i].weight;
    }

    struct Search<'a> {
        items: &'a [Item],
        suffix: &'a [Rat],
        space: &'a BaseSpace,
        best_mass: Rat,
        best_set: Vec<u32>,
    }

    impl Search<'_> {
        fn dfs(
            &mut self,
            idx: usize,
            vector: &SparseVector,
            mass: &Rat,
            chosen: &mut Vec<u32>,
        ) -> Result<()> {
            if mass + &self.suffix[idx] <= self.best_mass {
                return Ok(());
            }
            if idx == self.items.len() {
                // The incumbent check above guarantees strict improvement.
                self.best_mass = mass.clone();
                self.best_set = chosen.clone();
                return Ok(());
            }
            let item = &self.items[idx];
            let mut extended = vector.clone();
            extended.set(item.n as u64, rat_u64(item.pos) / rat_u64(item.size));
            if ball_member(self.space, &extended)? != BallPosition::Outside {
                chosen.push(item.n);
                let with = mass + &item.weight;
                self.dfs(idx + 1, &extended, &with, chosen)?;
                chosen.pop();
            }
            self.dfs(idx + 1, vector, mass, chosen)
        }
    }

    let mut search = Search {
        items: &items,
        suffix: &suffix,
        space,
        best_mass: Rat::zero(),
        best_set: Vec::new(),
    };
    // The empty profile is always feasible, so the optimum starts at 0
    // with an empty witness and only strict improvements replace it.
    search.dfs(0, &SparseVector::zero(), &Rat::zero(), &mut Vec::new())?;

    let best_set = search.best_set;
    let lengths: Vec<(u32, u64)> = items
        .iter()
        .filter(|it| best_set.contains(&it.n))
        .map(|it| (it.n, it.pos))
        .collect();
    let profile = SegmentProfile::from_lengths(blocks, lengths)?;
    Ok((ScalarBound::exact(search.best_mass), profile))
}

/// Σᵢ μ(Gᵢ) ≤ 1 for every ball-feasible profile.
pub fn is_zbounded(mu: &AtomicMeasure, space: &BaseSpace, blocks: &BlockSystem) -> Result<bool> {
    let (value, _) = zbounded_optimum(mu, space, blocks)?;
    Ok(value.upper <= Rat::one())
}

/// A family (μ₁,…,μ_k) is admissible when the parts are non-zero with
/// pairwise disjoint supports, no block meets two parts, and k ≤ min Fₙ
/// for every touched block.
pub fn is_admissible(parts: &[AtomicMeasure], blocks: &BlockSystem) -> Result<bool> {
    let k = parts.len() as u64;
    let mut seen_blocks = BTreeSet::new();
    let mut seen_coords = BTreeSet::new();
    for part in parts {
        if part.is_zero_measure() {
            return Ok(false);
        }
        for (n, j, _) in part.atoms() {
            if !seen_blocks.insert(n) {
                return Ok(false);
            }
            if !seen_coords.insert(j) {
                return Ok(false);
            }
            if k > blocks.min(n)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A full membership certificate for M: the parts of an admissible P₁
/// decomposition together with the Z-boundedness optimum and its
/// maximizing profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MDecomposition {
    pub parts: Vec<AtomicMeasure>,
    pub optimum: Rat,
    pub witness: SegmentProfile,
}

/// Membership of μ ∈ P in the norming set M: μ must be Z-bounded and
/// split into an admissible sequence of P₁ parts. The zero measure is a
/// member by fiat (empty decomposition). Returns the first witnessing
/// decomposition in a fixed deterministic order, or None.
///
/// The split assigns whole blocks to parts (parts must touch disjoint
/// blocks), so the search enumerates partitions of the touched blocks
/// into k non-empty groups of mass at most 1, for k from 1 up to
/// min(min Fₙ over touched n, number of touched blocks), in restricted
/// growth order; mass overflow prunes a prefix immediately.
pub fn in_m(
    mu: &AtomicMeasure,
    space: &BaseSpace,
    blocks: &BlockSystem,
) -> Result<Option<MDecomposition>> {
    let (value, witness) = zbounded_optimum(mu, space, blocks)?;
    if value.upper > Rat::one() {
        return Ok(None);
    }
    if mu.is_zero_measure() {
        return Ok(Some(MDecomposition {
            parts: Vec::new(),
            optimum: value.upper,
            witness,
        }));
    }
    let touched = mu.touched_blocks();
    let mut k_cap = touched.len() as u64;
    for &n in &touched {
        k_cap = k_cap.min(blocks.min(n)?);
    }

    fn assign(
        mu: &AtomicMeasure,
        touched: &[u32],
        idx: usize,
        k: usize,
        groups: &mut Vec<Vec<u32>>,
        masses: &mut Vec<Rat>,
    ) -> Option<Vec<Vec<u32>>> {
        if idx == touched.len() {
            if groups.len() == k {
                return Some(groups.clone());
            }
            return None;
        }
        // Opening all remaining groups must still be possible.
        if groups.len() + (touched.len() - idx) < k {
            return None;
        }
        let n = touched[idx];
        let (_, w) = mu.atom_in_block(n).unwrap();
        let w = w.clone();
        let open = groups.len();
        for g in 0..=open.min(k - 1) {
            if g < open {
                if &masses[g] + &w > Rat::one() {
                    continue;
                }
                groups[g].push(n);
                masses[g] += &w;
                if let Some(hit) = assign(mu, touched, idx + 1, k, groups, masses) {
                    return Some(hit);
                }
                masses[g] -= &w;
                groups[g].pop();
            } else {
                groups.push(vec![n]);
                masses.push(w.clone());
                if let Some(hit) = assign(mu, touched, idx + 1, k, groups, masses) {
                    return Some(hit);
                }
                masses.pop();
                groups.pop();
            }
        }
        None
    }

    for k in 1..=k_cap as usize {
        let mut groups = Vec::new();
        let mut masses = Vec::new();
        if let Some(hit) = assign(mu, &touched, 0, k, &mut groups, &mut masses) {
            let parts: Vec<AtomicMeasure> =
                hit.iter().map(|g| mu.sub_measure(g)).collect();
            debug_assert!(is_admissible(&parts, blocks)?);
            debug_assert!(parts.iter().all(in_p1));
            return Ok(Some(MDecomposition {
                parts,
                optimum: value.upper,
                witness,
            }));
        }
    }
    Ok(None)
}

/// Reindexes a decomposition's parts by their support minima: the set
/// F = {min supp μᵢ} together with the pieces (b_k*)_{k∈F}. Admissibility
/// makes F a member of S₁ and gives every piece mass at most 1 and
/// min supp b_k* ≥ k; all three are re-checked here rather than assumed.
pub fn p1_decompose(witness: &MDecomposition) -> Result<(FiniteSet, Vec<(u64, AtomicMeasure)>)> {
    let mut pieces: Vec<(u64, AtomicMeasure)> = Vec::new();
    for part in &witness.parts {
        let m = part.min_supp().ok_or_else(|| {
            Error::InvalidInput("decomposition contains an empty part".into())
        })?;
        pieces.push((m, part.clone()));
    }
    pieces.sort_by_key(|(m, _)| *m);
    for window in pieces.windows(2) {
        if window[0].0 == window[1].0 {
            return Err(Error::InvalidInput(
                "two parts share a support minimum; parts are not disjoint".into(),
            ));
        }
    }
    let f = FiniteSet::from_iter(pieces.iter().map(|(m, _)| *m))?;
    if !is_s1(&f) {
        return Err(Error::InvalidInput(format!(
            "reindexing set {f} escapes the admissible family"
        )));
    }
    for (m, piece) in &pieces {
        if !in_p1(piece) {
            return Err(Error::InvalidInput(format!(
                "piece at support minimum {m} has mass above 1"
            )));
        }
        if piece.min_supp() != Some(*m) {
            return Err(Error::InvalidInput(format!(
                "piece at support minimum {m} was reindexed inconsistently"
            )));
        }
    }
    Ok((f, pieces))
}
