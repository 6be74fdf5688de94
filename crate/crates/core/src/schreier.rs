//! Combinatorics of the first Schreier family S₁ and of successive
//! finite sets.
//!
//! S₁ consists of the empty set together with every finite F ⊂ ℕ whose
//! cardinality is at most its minimum. Admissible measure decompositions
//! elsewhere in the crate reduce to membership checks in this family.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A finite set of positive integers kept in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteSet {
    elements: BTreeSet<u64>,
}

impl FiniteSet {
    pub fn empty() -> Self {
        FiniteSet::default()
    }

    pub fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Result<Self> {
        let mut elements = BTreeSet::new();
        for e in iter {
            if e == 0 {
                return Err(Error::InvalidInput("set elements start at 1".into()));
            }
            elements.insert(e);
        }
        Ok(FiniteSet { elements })
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn min(&self) -> Option<u64> {
        self.elements.iter().next().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.elements.iter().next_back().copied()
    }

    pub fn contains(&self, e: u64) -> bool {
        self.elements.contains(&e)
    }

    pub fn insert(&mut self, e: u64) {
        assert!(e >= 1, "set elements start at 1");
        self.elements.insert(e);
    }

    pub fn as_set(&self) -> &BTreeSet<u64> {
        &self.elements
    }

    /// Parses `"{a,b,c}"`; `"{}"` is the empty set.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("expected {{a,b,c}}, got {t:?}")))?;
        let inner = inner.trim();
        if inner.is_empty() {
            return Ok(FiniteSet::empty());
        }
        let mut elements = BTreeSet::new();
        for part in inner.split(',') {
            let e: u64 = part
                .trim()
                .parse()
                .map_err(|err| Error::Parse(format!("bad element {part:?}: {err}")))?;
            if e == 0 {
                return Err(Error::Parse("set elements start at 1".into()));
            }
            if !elements.insert(e) {
                return Err(Error::Parse(format!("duplicate element {e}")));
            }
        }
        Ok(FiniteSet { elements })
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for e in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// Membership in S₁: empty, or |F| ≤ min F.
pub fn is_s1(f: &FiniteSet) -> bool {
    match f.min() {
        None => true,
        Some(min) => f.len() as u64 <= min,
    }
}

/// Successiveness E < F, meaning max E < min F. By convention the empty
/// set precedes and is preceded by everything, so vacuous admissibility
/// cases stay well-defined.
pub fn precedes(e: &FiniteSet, f: &FiniteSet) -> bool {
    match (e.max(), f.min()) {
        (Some(max_e), Some(min_f)) => max_e < min_f,
        _ => true,
    }
}

/// Finite-sample closure check: a listed family is closed under pointwise
/// limits at this scale iff it is hereditary, i.e. every subset of every
/// member is itself listed.
pub fn is_pointwise_limit_closed_sample(family: &[FiniteSet]) -> bool {
    let listed: BTreeSet<Vec<u64>> = family.iter().map(|f| f.iter().collect()).collect();
    for member in family {
        let elems: Vec<u64> = member.iter().collect();
        let n = elems.len();
        assert!(n < 64, "sample members must stay small");
        for mask in 0u64..(1u64 << n) {
            let subset: Vec<u64> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| elems[i])
                .collect();
            if !listed.contains(&subset) {
                return false;
            }
        }
    }
    true
}
