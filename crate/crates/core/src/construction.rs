//! Parameter selection and block-system construction.
//!
//! Everything downstream runs against a `ParameterLedger`: the base
//! space Z, the branching constant k₀ with a certified enclosure of its
//! best disjoint-block estimate φ(k₀) < k₀, the decay ratio λ strictly
//! between φ(k₀)/k₀ and 1, the scale sequences εₙ = k₀⁻ⁿ and δₙ = λⁿ,
//! successive coordinate blocks F₁ < F₂ < … < F_N sized so that the
//! reciprocal sum stays below σ < 1 and each block starts late enough
//! that 1 + 1/δₙ < εₙ₊₁·min Fₙ₊₁, and the two derived constants: the
//! lower constant A = ½(1 − Σ1/|Fₙ| − tail) and the upper constant
//! C = Σₙ (nεₙ + 2k₀δₙ + Bₙ) summed in closed form.

use std::fmt;

use num::{One, Signed};

use crate::error::{Error, Result};
use crate::exact::{
    fmt_rat, parse_rat, pow_rat, rat, rat_u64, simplest_rational_in, Rat, ScalarBound,
};
use crate::spaces::{phi, phi_certified_below, BaseSpace};

/// Largest coordinate the engine will place a block at. Beyond this the
/// construction is refused rather than silently truncated.
pub const MAX_COORDINATE: u64 = 1 << 44;

/// Support budget used when certifying φ values for a ledger. The
/// enclosure itself does not depend on the budget; the budget only
/// guards against degenerate requests.
const PHI_SUPPORT_BUDGET: u64 = 1 << 20;

/// Denominator cutoff under which the midpoint of the admissible λ
/// window is kept verbatim instead of being simplified.
const LAMBDA_MIDPOINT_DENOM_CAP: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sizing {
    /// |Fₙ| = 2^(n+1)·c, which keeps Σ 1/|Fₙ| ≤ 1/(2c) including the
    /// unmaterialized tail.
    Doubling { c: u64 },
    /// Caller-supplied intervals; the tail bound is recorded as given.
    Explicit,
}

impl fmt::Display for Sizing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sizing::Doubling { c } => write!(f, "doubling:{c}"),
            Sizing::Explicit => write!(f, "explicit"),
        }
    }
}

impl Sizing {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "explicit" {
            return Ok(Sizing::Explicit);
        }
        if let Some(c) = s.strip_prefix("doubling:") {
            let c: u64 = c
                .parse()
                .map_err(|e| Error::Parse(format!("bad sizing constant {c:?}: {e}")))?;
            if c == 0 {
                return Err(Error::Parse("sizing constant must be positive".into()));
            }
            return Ok(Sizing::Doubling { c });
        }
        Err(Error::Parse(format!("unknown sizing scheme {s:?}")))
    }
}

/// Successive coordinate blocks, stored as inclusive intervals and
/// indexed 1..=depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSystem {
    intervals: Vec<(u64, u64)>,
}

impl BlockSystem {
    pub fn from_intervals(intervals: Vec<(u64, u64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInput("a block system needs at least one block".into()));
        }
        let mut prev_end = 0u64;
        for &(start, end) in &intervals {
            if start == 0 {
                return Err(Error::InvalidInput("block coordinates start at 1".into()));
            }
            if start > end {
                return Err(Error::InvalidInput(format!(
                    "block interval {start}..{end} is empty"
                )));
            }
            if start <= prev_end {
                return Err(Error::InvalidInput(format!(
                    "blocks must be strictly successive; {start}..{end} overlaps or touches \
                     the previous block"
                )));
            }
            if end > MAX_COORDINATE {
                return Err(Error::OverflowBudget(format!(
                    "block end {end} exceeds the coordinate cap {MAX_COORDINATE}"
                )));
            }
            prev_end = end;
        }
        Ok(BlockSystem { intervals })
    }

    pub fn depth(&self) -> u32 {
        self.intervals.len() as u32
    }

    /// Inclusive interval of block n (1-indexed).
    pub fn interval(&self, n: u32) -> Result<(u64, u64)> {
        if n == 0 || n as usize > self.intervals.len() {
            return Err(Error::InvalidInput(format!(
                "block index {n} out of range 1..={}",
                self.intervals.len()
            )));
        }
        Ok(self.intervals[(n - 1) as usize])
    }

    pub fn min(&self, n: u32) -> Result<u64> {
        Ok(self.interval(n)?.0)
    }

    pub fn max(&self, n: u32) -> Result<u64> {
        Ok(self.interval(n)?.1)
    }

    pub fn size(&self, n: u32) -> Result<u64> {
        let (s, e) = self.interval(n)?;
        Ok(e - s + 1)
    }

    /// The block containing the coordinate, if any.
    pub fn block_of(&self, coord: u64) -> Option<u32> {
        let idx = self.intervals.partition_point(|&(_, end)| end < coord);
        match self.intervals.get(idx) {
            Some(&(start, _)) if coord >= start => Some(idx as u32 + 1),
            _ => None,
        }
    }

    pub fn coords(&self, n: u32) -> Result<std::ops::RangeInclusive<u64>> {
        let (s, e) = self.interval(n)?;
        Ok(s..=e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64, u64)> + '_ {
        self.intervals
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| (i as u32 + 1, s, e))
    }

    /// Σₙ 1/|Fₙ| over the materialized blocks.
    pub fn reciprocal_sum(&self) -> Rat {
        self.intervals
            .iter()
            .map(|&(s, e)| rat_u64(e - s + 1).recip())
            .sum()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for part in s.split(',') {
            let (a, b) = part.trim().split_once("..").ok_or_else(|| {
                Error::Parse(format!("expected start..end, got {part:?}"))
            })?;
            let start: u64 = a
                .parse()
                .map_err(|e| Error::Parse(format!("bad block start {a:?}: {e}")))?;
            let end: u64 = b
                .parse()
                .map_err(|e| Error::Parse(format!("bad block end {b:?}: {e}")))?;
            intervals.push((start, end));
        }
        BlockSystem::from_intervals(intervals)
    }
}

impl fmt::Display for BlockSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(s, e)| format!("{s}..{e}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Every certified quantity the engine needs, in one immutable record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterLedger {
    pub space: BaseSpace,
    pub depth: u32,
    pub k0: u64,
    pub phi_k0: ScalarBound,
    pub lambda: Rat,
    pub sigma: Rat,
    pub sizing: Sizing,
    pub blocks: BlockSystem,
    pub tail_bound: Rat,
    pub constant_a: Rat,
    pub constant_c: Rat,
}

impl ParameterLedger {
    /// εₙ = k₀⁻ⁿ.
    pub fn eps(&self, n: u32) -> Rat {
        pow_rat(&rat_u64(self.k0).recip(), n)
    }

    /// δₙ = λⁿ.
    pub fn delta(&self, n: u32) -> Rat {
        pow_rat(&self.lambda, n)
    }

    /// Per-index bound Bₙ = k₀·φ(k₀)·[(φ(k₀)/k₀)ⁿ + (φ(k₀)/(λk₀))ⁿ],
    /// evaluated as an enclosure from the φ enclosure.
    pub fn b_bound(&self, n: u32) -> ScalarBound {
        let k = rat_u64(self.k0);
        let lk = &self.lambda * &k;
        let term = |p: &Rat| -> Rat {
            p * &k * (pow_rat(&(p / &k), n) + pow_rat(&(p / &lk), n))
        };
        ScalarBound::new(term(&self.phi_k0.lower), term(&self.phi_k0.upper))
    }

    /// Re-derives every derivable field and checks every structural
    /// invariant. A ledger read back from disk must pass this before
    /// anything downstream consumes it.
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidInput("depth must be at least 1".into()));
        }
        if self.blocks.depth() != self.depth {
            return Err(Error::InvalidInput(format!(
                "depth {} disagrees with {} materialized blocks",
                self.depth,
                self.blocks.depth()
            )));
        }
        if self.k0 < 2 {
            return Err(Error::InvalidInput("k0 must be at least 2".into()));
        }
        let recomputed = phi(&self.space, self.k0, PHI_SUPPORT_BUDGET)?;
        if recomputed != self.phi_k0 {
            return Err(Error::InvalidInput(format!(
                "phi enclosure [{}, {}] does not match the recomputed [{}, {}]",
                fmt_rat(&self.phi_k0.lower),
                fmt_rat(&self.phi_k0.upper),
                fmt_rat(&recomputed.lower),
                fmt_rat(&recomputed.upper),
            )));
        }
        let k = rat_u64(self.k0);
        if self.phi_k0.upper >= k {
            return Err(Error::NoUpperEstimateWitness { k_max: self.k0 });
        }
        if &self.lambda * &k <= self.phi_k0.upper || self.lambda >= Rat::one() {
            return Err(Error::InvalidInput(format!(
                "lambda {} must lie strictly between phi(k0)/k0 and 1",
                fmt_rat(&self.lambda)
            )));
        }
        if !self.sigma.is_positive() || self.sigma >= Rat::one() {
            return Err(Error::InvalidInput("sigma must lie in (0, 1)".into()));
        }
        if self.tail_bound.is_negative() {
            return Err(Error::InvalidInput("tail bound must be non-negative".into()));
        }
        if let Sizing::Doubling { c } = self.sizing {
            for (n, s, e) in self.blocks.iter() {
                let expected = 1u64
                    .checked_shl(n + 1)
                    .and_then(|v| v.checked_mul(c))
                    .ok_or_else(|| {
                        Error::OverflowBudget(format!("block size overflows at depth {n}"))
                    })?;
                if e - s + 1 != expected {
                    return Err(Error::InvalidInput(format!(
                        "block {n} has size {} but the doubling scheme requires {expected}",
                        e - s + 1
                    )));
                }
            }
            let expected_tail = rat(1, 1) / (rat_u64(c) * pow_rat(&rat_u64(2), self.depth + 1));
            if self.tail_bound != expected_tail {
                return Err(Error::InvalidInput(format!(
                    "tail bound {} disagrees with the doubling-scheme tail {}",
                    fmt_rat(&self.tail_bound),
                    fmt_rat(&expected_tail)
                )));
            }
        }
        let recip = self.blocks.reciprocal_sum();
        if &recip + &self.tail_bound > self.sigma {
            return Err(Error::InvalidInput(format!(
                "reciprocal block sum {} plus tail {} exceeds sigma {}",
                fmt_rat(&recip),
                fmt_rat(&self.tail_bound),
                fmt_rat(&self.sigma)
            )));
        }
        // Start-late invariant: 1 + 1/δₙ < εₙ₊₁·min Fₙ₊₁ for 0 ≤ n < N.
        for n in 0..self.depth {
            let lhs = Rat::one() + self.delta(n).recip();
            let rhs = self.eps(n + 1) * rat_u64(self.blocks.min(n + 1)?);
            if lhs >= rhs {
                return Err(Error::InvalidInput(format!(
                    "block {} starts too early: 1 + 1/delta_{n} = {} is not below \
                     eps_{}*min = {}",
                    n + 1,
                    fmt_rat(&lhs),
                    n + 1,
                    fmt_rat(&rhs)
                )));
            }
        }
        let a = constant_a(&recip, &self.tail_bound)?;
        if a != self.constant_a {
            return Err(Error::InvalidInput(format!(
                "lower constant {} disagrees with the recomputed {}",
                fmt_rat(&self.constant_a),
                fmt_rat(&a)
            )));
        }
        let c = constant_c(self.k0, &self.phi_k0.upper, &self.lambda)?;
        if c != self.constant_c {
            return Err(Error::InvalidInput(format!(
                "upper constant {} disagrees with the recomputed {}",
                fmt_rat(&self.constant_c),
                fmt_rat(&c)
            )));
        }
        Ok(())
    }
}

/// The smallest k in 2..=k_max with a certified φ(k) < k, together with
/// the certifying enclosure. Spaces without such a witness (Tsirelson,
/// where φ(k) ≥ k/2 admits no strict certificate from the enclosure
/// side) report `NoUpperEstimateWitness`.
pub fn select_k0(space: &BaseSpace, k_max: u64) -> Result<(u64, ScalarBound)> {
    if k_max < 2 {
        return Err(Error::InvalidInput("k_max must be at least 2".into()));
    }
    for k in 2..=k_max {
        if let Some(enclosure) = phi_certified_below(space, k, PHI_SUPPORT_BUDGET, &rat_u64(k))? {
            return Ok((k, enclosure));
        }
    }
    Err(Error::NoUpperEstimateWitness { k_max })
}

/// λ rule: take the exact midpoint of the admissible window
/// (φ(k₀)/k₀, 1) when its denominator is small, otherwise the
/// smallest-denominator rational in a narrow band around that midpoint.
fn choose_lambda(phi_upper: &Rat, k0: u64) -> Rat {
    let low = phi_upper / rat_u64(k0);
    let mid = (&low + Rat::one()) / rat_u64(2);
    if mid.denom() <= &num::BigInt::from(LAMBDA_MIDPOINT_DENOM_CAP) {
        return mid;
    }
    let width = (Rat::one() - &low) / rat_u64(8);
    simplest_rational_in(&(&mid - &width), &(&mid + &width))
}

/// A = ½(1 − Σ1/|Fₙ| − tail); the construction is refused when the
/// blocks are too small for this to stay positive.
pub fn constant_a(reciprocal_sum: &Rat, tail_bound: &Rat) -> Result<Rat> {
    let a = (Rat::one() - reciprocal_sum - tail_bound) / rat_u64(2);
    if !a.is_positive() {
        return Err(Error::InvalidInput(format!(
            "reciprocal block sum {} plus tail {} leaves no positive lower constant",
            fmt_rat(reciprocal_sum),
            fmt_rat(tail_bound)
        )));
    }
    Ok(a)
}

/// C = Σₙ₌₀^∞ (nεₙ + 2k₀δₙ + Bₙ) in closed form:
/// k₀/(k₀−1)² + 2k₀/(1−λ) + k₀φ·[1/(1−φ/k₀) + 1/(1−φ/(λk₀))],
/// evaluated at the certified upper bound for φ. Every geometric ratio
/// must be strictly below 1 or the series diverges.
pub fn constant_c(k0: u64, phi_upper: &Rat, lambda: &Rat) -> Result<Rat> {
    let k = rat_u64(k0);
    if *lambda >= Rat::one() {
        return Err(Error::DivergenceGuard(format!(
            "delta ratio {} is not below 1",
            fmt_rat(lambda)
        )));
    }
    let ratio_plain = phi_upper / &k;
    let ratio_scaled = phi_upper / (lambda * &k);
    if ratio_plain >= Rat::one() || ratio_scaled >= Rat::one() {
        return Err(Error::DivergenceGuard(format!(
            "phi upper bound {} is not dominated by k0 = {k0} at decay {}",
            fmt_rat(phi_upper),
            fmt_rat(lambda)
        )));
    }
    let ones = &k / pow_rat(&(&k - Rat::one()), 2);
    let twos = rat_u64(2) * &k / (Rat::one() - lambda);
    let bees = &k
        * phi_upper
        * ((Rat::one() - ratio_plain).recip() + (Rat::one() - ratio_scaled).recip());
    Ok(ones + twos + bees)
}

/// Options for [`build_ledger`]; `Default` gives the engine's standard
/// choices and `select_k0` search up to 16.
#[derive(Debug, Clone)]
pub struct LedgerOptions {
    pub k0: Option<u64>,
    pub lambda: Option<Rat>,
    pub sigma: Option<Rat>,
    pub sizing_c: Option<u64>,
    pub k_search_max: u64,
}

impl Default for LedgerOptions {
    fn default() -> Self {
        LedgerOptions {
            k0: None,
            lambda: None,
            sigma: None,
            sizing_c: None,
            k_search_max: 16,
        }
    }
}

/// Builds the block system for the doubling sizing scheme: block 1
/// starts at 2k₀ + 1 and each later block starts past both the previous
/// block and the start-late threshold (1 + 1/δₙ)/εₙ₊₁.
fn build_blocks(k0: u64, lambda: &Rat, depth: u32, c: u64) -> Result<BlockSystem> {
    let mut intervals = Vec::with_capacity(depth as usize);
    let mut prev_end = 0u64;
    for n in 1..=depth {
        let size = 1u64
            .checked_shl(n + 1)
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| Error::OverflowBudget(format!("block size overflows at depth {n}")))?;
        // Start-late threshold (1 + 1/δₙ₋₁)/εₙ = (1 + λ⁻⁽ⁿ⁻¹⁾)·k₀ⁿ;
        // at n = 1 this is the familiar 2k₀.
        let threshold =
            (Rat::one() + pow_rat(lambda, n - 1).recip()) * pow_rat(&rat_u64(k0), n);
        let floor = threshold.floor().to_integer();
        let min_start = u64::try_from(floor)
            .map_err(|_| Error::OverflowBudget(format!("block start overflows at depth {n}")))?
            .checked_add(1)
            .ok_or_else(|| Error::OverflowBudget(format!("block start overflows at depth {n}")))?;
        let start = min_start.max(prev_end + 1);
        let end = start
            .checked_add(size - 1)
            .ok_or_else(|| Error::OverflowBudget(format!("block end overflows at depth {n}")))?;
        if end > MAX_COORDINATE {
            return Err(Error::OverflowBudget(format!(
                "block {n} would end at {end}, past the coordinate cap {MAX_COORDINATE}"
            )));
        }
        intervals.push((start, end));
        prev_end = end;
    }
    BlockSystem::from_intervals(intervals)
}

/// Assembles and validates a full ledger for the given space and depth.
pub fn build_ledger(space: &BaseSpace, depth: u32, options: &LedgerOptions) -> Result<ParameterLedger> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let (k0, phi_k0) = match options.k0 {
        Some(k) => {
            if k < 2 {
                return Err(Error::InvalidInput("k0 must be at least 2".into()));
            }
            let enclosure = phi_certified_below(space, k, PHI_SUPPORT_BUDGET, &rat_u64(k))?
                .ok_or(Error::NoUpperEstimateWitness { k_max: k })?;
            (k, enclosure)
        }
        None => select_k0(space, options.k_search_max)?,
    };
    let lambda = match &options.lambda {
        Some(l) => {
            if l * rat_u64(k0) <= phi_k0.upper || *l >= Rat::one() {
                return Err(Error::InvalidInput(format!(
                    "lambda {} must lie strictly between phi(k0)/k0 and 1",
                    fmt_rat(l)
                )));
            }
            l.clone()
        }
        None => choose_lambda(&phi_k0.upper, k0),
    };
    let sigma = match &options.sigma {
        Some(s) => {
            if !s.is_positive() || *s >= Rat::one() {
                return Err(Error::InvalidInput("sigma must lie in (0, 1)".into()));
            }
            s.clone()
        }
        None => rat(1, 2),
    };
    // Smallest c with full-series reciprocal sum 1/(2c) at most sigma.
    let c = match options.sizing_c {
        Some(c) if c > 0 => c,
        Some(_) => return Err(Error::InvalidInput("sizing constant must be positive".into())),
        None => {
            let needed = (rat_u64(2) * &sigma).recip().ceil().to_integer();
            u64::try_from(needed).map_err(|_| {
                Error::OverflowBudget("sizing constant overflows a machine word".into())
            })?.max(1)
        }
    };
    let blocks = build_blocks(k0, &lambda, depth, c)?;
    let tail_bound = rat(1, 1) / (rat_u64(c) * pow_rat(&rat_u64(2), depth + 1));
    let constant_a = constant_a(&blocks.reciprocal_sum(), &tail_bound)?;
    let constant_c = constant_c(k0, &phi_k0.upper, &lambda)?;
    let ledger = ParameterLedger {
        space: space.clone(),
        depth,
        k0,
        phi_k0,
        lambda,
        sigma,
        sizing: Sizing::Doubling { c },
        blocks,
        tail_bound,
        constant_a,
        constant_c,
    };
    ledger.validate()?;
    Ok(ledger)
}

/// Serializes a ledger as `key = value` lines. Parsing the result back
/// reproduces the ledger bit for bit.
pub fn to_params_string(ledger: &ParameterLedger) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("space", ledger.space.to_string());
    push("depth", ledger.depth.to_string());
    push("k0", ledger.k0.to_string());
    push("phi_k0_lower", fmt_rat(&ledger.phi_k0.lower));
    push("phi_k0_upper", fmt_rat(&ledger.phi_k0.upper));
    push("lambda", fmt_rat(&ledger.lambda));
    push("sigma", fmt_rat(&ledger.sigma));
    push("sizing", ledger.sizing.to_string());
    push("blocks", ledger.blocks.to_string());
    push("tail_bound", fmt_rat(&ledger.tail_bound));
    push("constant_a", fmt_rat(&ledger.constant_a));
    push("constant_c", fmt_rat(&ledger.constant_c));
    out
}

/// Parses a `key = value` params file and validates the result. Every
/// key is required exactly once; unknown keys are rejected.
pub fn parse_params(text: &str) -> Result<ParameterLedger> {
    let mut fields: std::collections::BTreeMap<&str, &str> = std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected key = value", lineno + 1))
        })?;
        let k = k.trim();
        if fields.insert(k, v.trim()).is_some() {
            return Err(Error::Parse(format!("duplicate key {k:?}")));
        }
    }
    let known = [
        "space", "depth", "k0", "phi_k0_lower", "phi_k0_upper", "lambda", "sigma", "sizing",
        "blocks", "tail_bound", "constant_a", "constant_c",
    ];
    for k in fields.keys() {
        if !known.contains(k) {
            return Err(Error::Parse(format!("unknown key {k:?}")));
        }
    }
    let get = |k: &str| -> Result<&str> {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing key {k:?}")))
    };
    let phi_lower = parse_rat(get("phi_k0_lower")?)?;
    let phi_upper = parse_rat(get("phi_k0_upper")?)?;
    if phi_lower > phi_upper {
        return Err(Error::Parse("phi bounds are out of order".into()));
    }
    let ledger = ParameterLedger {
        space: BaseSpace::parse(get("space")?)?,
        depth: get("depth")?
            .parse()
            .map_err(|e| Error::Parse(format!("bad depth: {e}")))?,
        k0: get("k0")?
            .parse()
            .map_err(|e| Error::Parse(format!("bad k0: {e}")))?,
        phi_k0: ScalarBound::new(phi_lower, phi_upper),
        lambda: parse_rat(get("lambda")?)?,
        sigma: parse_rat(get("sigma")?)?,
        sizing: Sizing::parse(get("sizing")?)?,
        blocks: BlockSystem::parse(get("blocks")?)?,
        tail_bound: parse_rat(get("tail_bound")?)?,
        constant_a: parse_rat(get("constant_a")?)?,
        constant_c: parse_rat(get("constant_c")?)?,
    };
    ledger.validate()?;
    Ok(ledger)
}
