//! Exact Tsirelson norm oracle.
//!
//! The norm is the least solution of the implicit equation
//!
//! ```text
//! ‖x‖ = max( ‖x‖_∞ , 1/2 · sup Σ_i ‖E_i x‖ )
//! ```
//!
//! where the supremum runs over families of successive intervals
//! E_1 < … < E_k with k ≤ min E_1 (and k ≥ 2; singleton families never
//! attain the maximum). On a finite support the optimum is reached by
//! intervals that are consecutive groups of support points covering a
//! tail of the support, so the norm is a finite bottom-up computation.
//! All values are exact rationals.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{fmt_rat, parse_rat, Rat};
use crate::simplex::{maximize, LinearProgram};
use crate::sparse::SparseVector;

type MemoKey = Vec<(u64, Rat)>;

fn memo() -> &'static Mutex<HashMap<MemoKey, Rat>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, Rat>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exact Tsirelson norm.
pub fn norm(x: &SparseVector) -> Rat {
    let abs = x.abs();
    if abs.is_zero_vector() {
        return Rat::zero();
    }
    // Scale so the largest coordinate is 1; the norm is homogeneous, so
    // the memo only ever stores canonical vectors.
    let scale = abs.iter().map(|(_, v)| v.clone()).max().unwrap();
    let scaled = abs.scale(&scale.recip());
    let key: MemoKey = scaled.iter().map(|(i, v)| (i, v.clone())).collect();
    if let Some(hit) = memo().lock().unwrap().get(&key) {
        return hit * &scale;
    }
    let coords: Vec<u64> = scaled.support().collect();
    let vals: Vec<Rat> = coords.iter().map(|&i| scaled.get(i)).collect();
    let mut dp = Dp::new(&coords, &vals);
    let value = dp.interval_norm(0, coords.len() - 1);
    memo().lock().unwrap().insert(key, value.clone());
    value * &scale
}

/// Norm plus a maximizing functional φ from the norming set, with
/// non-negative coefficients and φ(|x|) = ‖x‖. Used as the separation
/// oracle of the dual linear program.
pub fn norm_with_witness(x: &SparseVector) -> (Rat, SparseVector) {
    let abs = x.abs();
    if abs.is_zero_vector() {
        return (Rat::zero(), SparseVector::zero());
    }
    let coords: Vec<u64> = abs.support().collect();
    let vals: Vec<Rat> = coords.iter().map(|&i| abs.get(i)).collect();
    let mut dp = Dp::new(&coords, &vals);
    let value = dp.interval_norm(0, coords.len() - 1);
    let witness = dp.witness(0, coords.len() - 1);
    debug_assert_eq!(witness.dot(&abs), value);
    (value, witness)
}

struct Dp<'a> {
    coords: &'a [u64],
    vals: &'a [Rat],
    intervals: HashMap<(usize, usize), Rat>,
    splits: HashMap<(usize, usize, usize), Rat>,
}

impl<'a> Dp<'a> {
    fn new(coords: &'a [u64], vals: &'a [Rat]) -> Self {
        Dp {
            coords,
            vals,
            intervals: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    /// Norm of the restriction to support points i..=j.
    fn interval_norm(&mut self, i: usize, j: usize) -> Rat {
        if let Some(hit) = self.intervals.get(&(i, j)) {
            return hit.clone();
        }
        let mut best = self.vals[i..=j].iter().max().unwrap().clone();
        let half = Rat::new(1.into(), 2.into());
        for a in i..=j {
            let avail = j - a + 1;
            let kmax = (self.coords[a].min(avail as u64)) as usize;
            for k in 2..=kmax {
                let s = self.split_sum(a, j, k);
                let cand = s * &half;
                if cand > best {
                    best = cand;
                }
            }
        }
        self.intervals.insert((i, j), best.clone());
        best
    }

    /// Max of Σ group norms over partitions of points i..=j into exactly
    /// k consecutive nonempty groups.
    fn split_sum(&mut self, i: usize, j: usize, k: usize) -> Rat {
        if k == 1 {
            return self.interval_norm(i, j);
        }
        if let Some(hit) = self.splits.get(&(i, j, k)) {
            return hit.clone();
        }
        let mut best: Option<Rat> = None;
        for t in i..=j - (k - 1) {
            let head = self.interval_norm(i, t);
            let tail = self.split_sum(t + 1, j, k - 1);
            let cand = head + tail;
            if best.as_ref().map_or(true, |b| cand > *b) {
                best = Some(cand);
            }
        }
        let best = best.unwrap();
        self.splits.insert((i, j, k), best.clone());
        best
    }

    /// Reconstructs a maximizing functional for points i..=j by walking
    /// the memoized values; first match in enumeration order wins, so
    /// witnesses are deterministic.
    fn witness(&mut self, i: usize, j: usize) -> SparseVector {
        let target = self.interval_norm(i, j);
        for t in i..=j {
            if self.vals[t] == target {
                return SparseVector::unit(self.coords[t]);
            }
        }
        let two = Rat::from_integer(2.into());
        let half = two.recip();
        for a in i..=j {
            let avail = j - a + 1;
            let kmax = (self.coords[a].min(avail as u64)) as usize;
            for k in 2..=kmax {
                if self.split_sum(a, j, k) == &target * &two {
                    let parts = self.split_witness(a, j, k);
                    return parts
                        .into_iter()
                        .fold(SparseVector::zero(), |acc, w| acc.add(&w))
                        .scale(&half);
                }
            }
        }
        unreachable!("norm value must be attained");
    }

    fn split_witness(&mut self, i: usize, j: usize, k: usize) -> Vec<SparseVector> {
        if k == 1 {
            return vec![self.witness(i, j)];
        }
        let target = self.split_sum(i, j, k);
        for t in i..=j - (k - 1) {
            if self.interval_norm(i, t) + self.split_sum(t + 1, j, k - 1) == target {
                let mut parts = vec![self.witness(i, t)];
                parts.extend(self.split_witness(t + 1, j, k - 1));
                return parts;
            }
        }
        unreachable!("split value must be attained");
    }
}

/// Exact dual norm: max f(x) over the unit ball restricted to supp f,
/// computed by cutting planes. Each round solves an exact linear program
/// over the cuts found so far and calls the norm oracle on the maximizer;
/// the maximizing functional becomes a new cut. The norming set on a
/// finite support is finite, so the loop terminates with an exact value
/// and an attaining vector.
pub fn dual_norm(f: &SparseVector, iteration_cap: u32) -> Result<(Rat, SparseVector)> {
    let absf = f.abs();
    if absf.is_zero_vector() {
        return Ok((Rat::zero(), SparseVector::zero()));
    }
    let coords: Vec<u64> = absf.support().collect();
    let n = coords.len();
    let col = |c: u64| coords.binary_search(&c).unwrap();
    let objective: Vec<Rat> = coords.iter().map(|&c| absf.get(c)).collect();
    let mut constraints: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for i in 0..n {
        let mut row = vec![Rat::zero(); n];
        row[i] = Rat::one();
        constraints.push((row, Rat::one()));
    }
    let mut best_lower = Rat::zero();
    for _ in 0..iteration_cap {
        let sol = maximize(&LinearProgram {
            objective: objective.clone(),
            constraints: constraints.clone(),
        })?;
        let mut x = SparseVector::zero();
        for (i, v) in sol.point.iter().enumerate() {
            x.set(coords[i], v.clone());
        }
        let (t, phi) = norm_with_witness(&x);
        if t <= Rat::one() {
            return Ok((sol.value, x));
        }
        if &sol.value / &t > best_lower {
            best_lower = &sol.value / &t;
        }
        let mut row = vec![Rat::zero(); n];
        for (c, w) in phi.iter() {
            row[col(c)] = w.clone();
        }
        constraints.push((row, Rat::one()));
    }
    Err(Error::IterationCap {
        context: "tsirelson dual norm".into(),
        lower: fmt_rat(&best_lower),
        upper: "unbounded".into(),
    })
}

/// Serializes the memo cache as `vector=value` lines for the optional
/// on-disk cache.
pub fn dump_cache() -> String {
    let memo = memo().lock().unwrap();
    let mut lines: Vec<String> = memo
        .iter()
        .map(|(key, val)| {
            let mut v = SparseVector::zero();
            for (i, r) in key {
                v.set(*i, r.clone());
            }
            format!("{v}={}", fmt_rat(val))
        })
        .collect();
    lines.sort();
    lines.join("\n")
}

/// Loads `vector=value` lines produced by [`dump_cache`]. Malformed lines
/// are rejected, not skipped.
pub fn load_cache(text: &str) -> Result<usize> {
    let mut parsed = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (vec_part, val_part) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("cache line {line:?} lacks '='")))?;
        let v = SparseVector::parse(vec_part)?;
        let val = parse_rat(val_part)?;
        let key: MemoKey = v.iter().map(|(i, r)| (i, r.clone())).collect();
        parsed.push((key, val));
    }
    let count = parsed.len();
    let mut memo = memo().lock().unwrap();
    for (k, v) in parsed {
        memo.insert(k, v);
    }
    Ok(count)
}
