//! Self-contained certificate files for norm and dual-norm queries.
//!
//! A certificate carries the space, the blocks, the query, the stated
//! value, and the witness, so that re-validation needs nothing beyond
//! the file itself: the witness is checked for membership in the
//! norming set and re-evaluated against the query, and the result must
//! equal the stated value.

use std::collections::BTreeMap;

use mnorm_core::construction::{BlockSystem, ParameterLedger};
use mnorm_core::error::{Error, Result};
use mnorm_core::exact::{fmt_rat, parse_rat, Rat};
use mnorm_core::measures::{in_p1, is_admissible, is_zbounded, AtomicMeasure};
use mnorm_core::norm::{norm_m, DualNormCertificate, Maximizer, NormCertificate};
use mnorm_core::spaces::BaseSpace;
use mnorm_core::sparse::SparseVector;

use num::{Signed, Zero};

pub fn maximizer_line(m: &Maximizer) -> String {
    match m {
        Maximizer::Zero => "zero".into(),
        Maximizer::Unit(j) => format!("unit {j}"),
        Maximizer::Measure(d) => {
            let parts: Vec<String> = d.parts.iter().map(|p| p.to_string()).collect();
            format!("parts {}", parts.join(";"))
        }
    }
}

pub fn norm_certificate(ledger: &ParameterLedger, x: &SparseVector, cert: &NormCertificate) -> String {
    let mut out = String::new();
    push(&mut out, "kind", "norm".into());
    push(&mut out, "space", ledger.space.to_string());
    push(&mut out, "blocks", ledger.blocks.to_string());
    push(&mut out, "vector", x.to_string());
    push(&mut out, "value", fmt_rat(&cert.value));
    push(&mut out, "exhaustive", cert.exhaustive.to_string());
    push(&mut out, "maximizer", maximizer_line(&cert.maximizer));
    out
}

pub fn dual_certificate(
    ledger: &ParameterLedger,
    f: &SparseVector,
    cert: &DualNormCertificate,
) -> String {
    let mut out = String::new();
    push(&mut out, "kind", "dualnorm".into());
    push(&mut out, "space", ledger.space.to_string());
    push(&mut out, "blocks", ledger.blocks.to_string());
    push(&mut out, "functional", f.to_string());
    push(&mut out, "value_lower", fmt_rat(&cert.value.lower));
    push(&mut out, "value_upper", fmt_rat(&cert.value.upper));
    push(&mut out, "witness", cert.witness.to_string());
    out
}

fn push(out: &mut String, k: &str, v: String) {
    out.push_str(k);
    out.push_str(" = ");
    out.push_str(&v);
    out.push('\n');
}

fn fields(text: &str) -> Result<BTreeMap<&str, &str>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        if map.insert(k.trim(), v.trim()).is_some() {
            return Err(Error::Parse(format!("duplicate key {:?}", k.trim())));
        }
    }
    Ok(map)
}

fn required<'a>(map: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    map.get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("missing key {key:?}")))
}

/// Re-evaluates the stored witness against the stored query and demands
/// exact agreement with the stated value.
pub fn revalidate(text: &str) -> Result<()> {
    let map = fields(text)?;
    let space = BaseSpace::parse(required(&map, "space")?)?;
    let blocks = BlockSystem::parse(required(&map, "blocks")?)?;
    match required(&map, "kind")? {
        "norm" => {
            let x = SparseVector::parse(required(&map, "vector")?)?;
            let value = parse_rat(required(&map, "value")?)?;
            let attained = evaluate_maximizer(required(&map, "maximizer")?, &x, &space, &blocks)?;
            if attained != value {
                return Err(Error::InvalidInput(format!(
                    "witness evaluates to {}, certificate states {}",
                    fmt_rat(&attained),
                    fmt_rat(&value)
                )));
            }
            Ok(())
        }
        "dualnorm" => {
            let f = SparseVector::parse(required(&map, "functional")?)?;
            let lower = parse_rat(required(&map, "value_lower")?)?;
            let upper = parse_rat(required(&map, "value_upper")?)?;
            if lower > upper {
                return Err(Error::InvalidInput("enclosure ends are crossed".into()));
            }
            let witness = SparseVector::parse(required(&map, "witness")?)?;
            let wn = norm_m(&witness, &space, &blocks)?;
            if !wn.exhaustive {
                return Err(Error::BudgetExceeded(
                    "witness norm could not be certified exhaustively".into(),
                ));
            }
            if wn.value > Rat::from_integer(1.into()) {
                return Err(Error::InvalidInput(
                    "witness lies outside the unit ball".into(),
                ));
            }
            let pairing = f.dot(&witness);
            if pairing != lower {
                return Err(Error::InvalidInput(format!(
                    "witness pairs to {}, certificate states lower end {}",
                    fmt_rat(&pairing),
                    fmt_rat(&lower)
                )));
            }
            Ok(())
        }
        other => Err(Error::Parse(format!("unknown certificate kind {other:?}"))),
    }
}

fn evaluate_maximizer(
    line: &str,
    x: &SparseVector,
    space: &BaseSpace,
    blocks: &BlockSystem,
) -> Result<Rat> {
    if line == "zero" {
        return Ok(Rat::zero());
    }
    if let Some(j) = line.strip_prefix("unit ") {
        let j: u64 = j
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad coordinate index {j:?}")))?;
        return Ok(x.get(j).abs());
    }
    if let Some(body) = line.strip_prefix("parts ") {
        let parts: Vec<AtomicMeasure> = body
            .split(';')
            .map(|p| AtomicMeasure::parse(p, blocks))
            .collect::<Result<_>>()?;
        if !is_admissible(&parts, blocks)? {
            return Err(Error::InvalidInput(
                "stored parts are not an admissible sequence".into(),
            ));
        }
        for part in &parts {
            if !in_p1(part) || !is_zbounded(part, space, blocks)? {
                return Err(Error::InvalidInput(
                    "a stored part lies outside the norming set".into(),
                ));
            }
        }
        return Ok(parts.iter().map(|p| p.pair_abs(x)).sum());
    }
    Err(Error::Parse(format!("unknown maximizer form {line:?}")))
}
