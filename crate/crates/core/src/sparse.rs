//! Sparse rational vectors over positive integer coordinates.
//!
//! The same type carries vectors x = Σ a_i e_i and coefficient tuples for
//! functionals; pairing is the plain coordinatewise dot product. Zero
//! entries are never stored, so equality of values implies equality of
//! representations.

use std::collections::BTreeSet;
use std::fmt;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{fmt_rat, parse_rat, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVector {
    entries: std::collections::BTreeMap<u64, Rat>,
}

impl SparseVector {
    pub fn zero() -> Self {
        SparseVector::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (u64, Rat)>>(iter: I) -> Result<Self> {
        let mut v = SparseVector::zero();
        for (idx, val) in iter {
            if idx == 0 {
                return Err(Error::InvalidInput("coordinate indices start at 1".into()));
            }
            if v.entries.contains_key(&idx) {
                return Err(Error::InvalidInput(format!("duplicate coordinate {idx}")));
            }
            v.set(idx, val);
        }
        Ok(v)
    }

    pub fn unit(idx: u64) -> Self {
        let mut v = SparseVector::zero();
        v.set(idx, Rat::from_integer(1.into()));
        v
    }

    /// Sets a coordinate, dropping the entry when the value is zero.
    pub fn set(&mut self, idx: u64, val: Rat) {
        assert!(idx >= 1, "coordinate indices start at 1");
        if val.is_zero() {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, val);
        }
    }

    pub fn get(&self, idx: u64) -> Rat {
        self.entries.get(&idx).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Rat)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_set(&self) -> BTreeSet<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn is_zero_vector(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn min_support(&self) -> Option<u64> {
        self.entries.keys().next().copied()
    }

    pub fn max_support(&self) -> Option<u64> {
        self.entries.keys().next_back().copied()
    }

    pub fn abs(&self) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (*k, v.abs()))
                .collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|v| !v.is_negative())
    }

    pub fn scale(&self, c: &Rat) -> SparseVector {
        if c.is_zero() {
            return SparseVector::zero();
        }
        SparseVector {
            entries: self.entries.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn add(&self, other: &SparseVector) -> SparseVector {
        let mut out = self.clone();
        for (idx, val) in other.iter() {
            let sum = out.get(idx) + val;
            out.set(idx, sum);
        }
        out
    }

    /// Restriction to a coordinate set: coordinates outside `keep` are
    /// zeroed.
    pub fn restrict(&self, keep: &BTreeSet<u64>) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn restrict_where<F: Fn(u64) -> bool>(&self, keep: F) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(**k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Pairing Σ_i f_i x_i over the common support.
    pub fn dot(&self, other: &SparseVector) -> Rat {
        let (small, large) = if self.nnz() <= other.nnz() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Rat::zero();
        for (idx, val) in small.iter() {
            if let Some(w) = large.entries.get(&idx) {
                acc += val * w;
            }
        }
        acc
    }

    pub fn norm_inf(&self) -> Rat {
        self.entries
            .values()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn norm_l1(&self) -> Rat {
        self.entries.values().map(|v| v.abs()).sum()
    }

    /// Parses `"idx:num/den,idx:num/den,..."` with strictly increasing
    /// indices. The empty string denotes the zero vector.
    pub fn parse(s: &str) -> Result<SparseVector> {
        let t = s.trim();
        let mut v = SparseVector::zero();
        if t.is_empty() {
            return Ok(v);
        }
        let mut last = 0u64;
        for part in t.split(',') {
            let (idx, val) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected idx:value, got {part:?}")))?;
            let idx: u64 = idx
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad index {idx:?}: {e}")))?;
            if idx == 0 {
                return Err(Error::Parse("coordinate indices start at 1".into()));
            }
            if idx <= last {
                return Err(Error::Parse(format!(
                    "indices must be strictly increasing at {idx}"
                )));
            }
            last = idx;
            v.set(idx, parse_rat(val)?);
        }
        Ok(v)
    }
}

impl fmt::Display for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, val) in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{idx}:{}", fmt_rat(val))?;
        }
        Ok(())
    }
}
