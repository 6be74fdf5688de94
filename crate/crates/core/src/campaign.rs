//! Deterministic verification campaigns: seeded instance generators for
//! every instance verifier, each trial reported with its hypothesis
//! status and exact measured quantities.
//!
//! Generators either enforce the verifier's hypotheses by construction
//! (scaling vectors into the relevant balls, shrinking index sets until
//! norms fit) or, in violation mode, break exactly one hypothesis so
//! the verifier must answer with `HypothesisFailed`. Each trial draws
//! from its own generator seeded by (campaign seed, trial index), so
//! reports are reproducible record by record regardless of execution
//! order.

use std::collections::BTreeMap;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::ParameterLedger;
use crate::error::{Error, Result};
use crate::exact::{fmt_rat, rat, rat_u64, Rat};
use crate::measures::{zbounded_optimum, AtomicMeasure, SegmentProfile};
use crate::norm::norm_m;
use crate::quotient::{
    decompose_levels, disjoint_family_report, domination_report, extract_bad_family,
    flat_measure_report, norm_sandwich_report, operator_bound_report, segment_indicator_report,
    verify_adjoint, DisjointFamilyInstance,
};
use crate::schreier::FiniteSet;
use crate::spaces::{ball_member, dual_norm, BallPosition, BaseSpace};
use crate::sparse::SparseVector;

/// The verification campaigns, one per instance verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CampaignKind {
    SegmentIndicator,
    DualDomination,
    FlatMeasureBound,
    DisjointFamily,
    LevelSplit,
    NormSandwich,
    QuotientMap,
}

impl CampaignKind {
    pub fn name(self) -> &'static str {
        match self {
            CampaignKind::SegmentIndicator => "segment_indicator",
            CampaignKind::DualDomination => "dual_domination",
            CampaignKind::FlatMeasureBound => "flat_measure_bound",
            CampaignKind::DisjointFamily => "disjoint_family",
            CampaignKind::LevelSplit => "level_split",
            CampaignKind::NormSandwich => "norm_sandwich",
            CampaignKind::QuotientMap => "quotient_map",
        }
    }

    pub fn has_violation_mode(self) -> bool {
        matches!(
            self,
            CampaignKind::SegmentIndicator
                | CampaignKind::FlatMeasureBound
                | CampaignKind::DisjointFamily
                | CampaignKind::LevelSplit
        )
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub trials: u64,
    pub seed: u64,
    pub precision: Rat,
    pub violate_hypothesis: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            trials: 100,
            seed: 0,
            precision: rat(1, 1_000_000_000),
            violate_hypothesis: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisRejected(String),
    Indeterminate(String),
    Budget(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub instance: String,
    pub hypothesis_ok: bool,
    pub quantities: Vec<(String, String)>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub trials: u64,
    pub passed: u64,
    pub failed: u64,
    pub rejected: u64,
    pub indeterminate: u64,
    pub budget: u64,
}

impl CampaignSummary {
    /// In normal mode every trial must pass; in violation mode every
    /// trial must be rejected at the hypothesis gate.
    pub fn all_expected(&self, violate_hypothesis: bool) -> bool {
        if violate_hypothesis {
            self.rejected == self.trials
        } else {
            self.passed == self.trials
        }
    }
}

pub fn summarize(records: &[TrialRecord]) -> CampaignSummary {
    let mut s = CampaignSummary {
        trials: records.len() as u64,
        ..CampaignSummary::default()
    };
    for r in records {
        match r.verdict {
            Verdict::Pass => s.passed += 1,
            Verdict::Fail => s.failed += 1,
            Verdict::HypothesisRejected(_) => s.rejected += 1,
            Verdict::Indeterminate(_) => s.indeterminate += 1,
            Verdict::Budget(_) => s.budget += 1,
        }
    }
    s
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A rational in (0, 1] with denominator at most 8.
fn unit_rat(rng: &mut ChaCha8Rng) -> Rat {
    let den = rng.gen_range(1u64..=8);
    let num = rng.gen_range(1u64..=den);
    rat(num as i64, den as i64)
}

/// A nonzero rational in [-1, 1] with denominator at most 8.
fn signed_rat(rng: &mut ChaCha8Rng) -> Rat {
    let v = unit_rat(rng);
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// A non-empty subset of lo..=hi, in increasing order.
fn block_subset(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> Vec<u32> {
    loop {
        let picked: Vec<u32> = (lo..=hi).filter(|_| rng.gen_bool(0.5)).collect();
        if !picked.is_empty() {
            return picked;
        }
    }
}

fn classify(outcome: Result<bool>) -> Result<(bool, Verdict)> {
    match outcome {
        Ok(true) => Ok((true, Verdict::Pass)),
        Ok(false) => Ok((true, Verdict::Fail)),
        Err(Error::HypothesisFailed(m)) => Ok((false, Verdict::HypothesisRejected(m))),
        Err(Error::Indeterminate(m)) => Ok((true, Verdict::Indeterminate(m))),
        Err(Error::BudgetExceeded(m)) => Ok((true, Verdict::Budget(m))),
        Err(Error::IterationCap { context, lower, upper }) => Ok((
            true,
            Verdict::Budget(format!("{context}: enclosure [{lower}, {upper}]")),
        )),
        Err(e) => Err(e),
    }
}

/// Scales a non-negative coefficient vector into the dual unit ball of
/// the base space, exactly, using the enclosure's upper end.
fn scale_into_dual_ball(
    a: &SparseVector,
    space: &BaseSpace,
    precision: &Rat,
) -> Result<SparseVector> {
    let z = dual_norm(space, a, precision)?;
    if z.upper <= Rat::one() || z.upper.is_zero() {
        return Ok(a.clone());
    }
    Ok(a.scale(&z.upper.clone().recip()))
}

/// Scales a vector to engine norm exactly 1 (or leaves zero alone).
fn scale_to_unit_norm(x: &SparseVector, ledger: &ParameterLedger) -> Result<SparseVector> {
    let cert = norm_m(x, &ledger.space, &ledger.blocks)?;
    if !cert.exhaustive {
        return Err(Error::BudgetExceeded(
            "instance generation needs an exhaustive norm certificate".into(),
        ));
    }
    if cert.value.is_zero() {
        return Ok(x.clone());
    }
    Ok(x.scale(&cert.value.recip()))
}

fn lengths_display(lengths: &BTreeMap<u32, u64>) -> String {
    lengths
        .iter()
        .map(|(n, g)| format!("{n}:{g}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn family_display(family: &[Vec<u32>]) -> String {
    family
        .iter()
        .map(|j| {
            format!(
                "{{{}}}",
                j.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn segment_indicator_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let blocks = &ledger.blocks;
    let space = &ledger.space;
    let chosen = block_subset(&mut rng, 1, ledger.depth);
    let mut lengths: BTreeMap<u32, u64> = chosen
        .iter()
        .map(|&n| Ok((n, rng.gen_range(1..=blocks.size(n)?))))
        .collect::<Result<_>>()?;

    if opts.violate_hypothesis {
        // The only hypothesis is Z-ball membership of the full-weight
        // combination; over a base where even all full blocks fit in the
        // ball, no violating profile exists.
        for n in 1..=ledger.depth {
            lengths.insert(n, blocks.size(n)?);
        }
        let profile = SegmentProfile::from_lengths(blocks, lengths.clone())?;
        if ball_member(space, &profile.constraint_vector(blocks)?)? != BallPosition::Outside {
            return Err(Error::InvalidInput(
                "every initial-segment profile lies in the Z-ball for this base space".into(),
            ));
        }
        let index_set = FiniteSet::from_iter(lengths.keys().map(|&n| n as u64))?;
        let (hypothesis_ok, verdict) = classify(
            segment_indicator_report(&index_set, &profile, space, blocks).map(|r| r.ok),
        )?;
        return Ok(TrialRecord {
            index,
            instance: format!("profile={profile}"),
            hypothesis_ok,
            quantities: vec![],
            verdict,
        });
    }

    // Shrink the longest segment until the combination fits the ball.
    loop {
        let profile = SegmentProfile::from_lengths(blocks, lengths.clone())?;
        if ball_member(space, &profile.constraint_vector(blocks)?)? != BallPosition::Outside {
            break;
        }
        let (&widest, _) = lengths
            .iter()
            .max_by_key(|(&n, &g)| (rat_u64(g) / rat_u64(blocks.size(n).unwrap()), n))
            .expect("profile is non-empty while outside the ball");
        let g = lengths[&widest] / 2;
        if g == 0 {
            lengths.remove(&widest);
        } else {
            lengths.insert(widest, g);
        }
    }
    let profile = SegmentProfile::from_lengths(blocks, lengths)?;
    let index_set = FiniteSet::from_iter(chosen.iter().map(|&n| n as u64))?;
    let report = segment_indicator_report(&index_set, &profile, space, blocks);
    let quantities = match &report {
        Ok(r) => vec![("indicator_norm".into(), fmt_rat(&r.indicator_norm))],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok))?;
    Ok(TrialRecord {
        index,
        instance: format!("profile={profile}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

fn dual_domination_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let mut a = SparseVector::zero();
    for n in block_subset(&mut rng, 1, ledger.depth) {
        a.set(n as u64, signed_rat(&mut rng));
    }
    // Every other trial exercises the sharper non-negative form from
    // inside the dual unit ball.
    if index % 2 == 0 {
        a = scale_into_dual_ball(&a.abs(), &ledger.space, &opts.precision)?;
    }
    let report = domination_report(&a, ledger, &opts.precision);
    let quantities = match &report {
        Ok(r) => vec![
            ("engine_norm_lower".into(), fmt_rat(&r.engine_norm.lower)),
            ("base_norm_upper".into(), fmt_rat(&r.base_norm.upper)),
            ("constant_a".into(), fmt_rat(&ledger.constant_a)),
        ],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok()))?;
    Ok(TrialRecord {
        index,
        instance: format!("coefficients={a}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

/// ε_{n+1}-valued spikes at the chosen coordinates, shrunk block by
/// block until the engine norm fits below 1.
fn spike_vector(
    coords: &mut Vec<(u32, u64)>,
    eps_next: &Rat,
    ledger: &ParameterLedger,
) -> Result<SparseVector> {
    loop {
        let mut u = SparseVector::zero();
        for (_, j) in coords.iter() {
            u.set(*j, eps_next.clone());
        }
        let cert = norm_m(&u, &ledger.space, &ledger.blocks)?;
        if !cert.exhaustive {
            return Err(Error::BudgetExceeded(
                "instance generation needs an exhaustive norm certificate".into(),
            ));
        }
        if cert.value <= Rat::one() {
            return Ok(u);
        }
        coords.pop();
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "spike construction emptied the index set".into(),
            ));
        }
    }
}

fn flat_measure_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let blocks = &ledger.blocks;
    let level = rng.gen_range(0..=ledger.depth.saturating_sub(2).min(2));
    let eps_next = ledger.eps(level + 1);
    let mut coords: Vec<(u32, u64)> = block_subset(&mut rng, level + 1, ledger.depth)
        .into_iter()
        .map(|i| {
            let start = blocks.min(i)?;
            let pos = rng.gen_range(0..blocks.size(i)?);
            Ok((i, start + pos))
        })
        .collect::<Result<_>>()?;

    if opts.violate_hypothesis {
        return flat_measure_violation(index, &mut rng, coords, level, ledger, opts);
    }

    let u = spike_vector(&mut coords, &eps_next, ledger)?;
    let mut mu = AtomicMeasure::from_coords(
        blocks,
        coords.iter().map(|&(_, j)| (j, unit_rat(&mut rng))),
    )?;
    let (opt, _) = zbounded_optimum(&mu, &ledger.space, blocks)?;
    if opt.upper > Rat::one() {
        let shrink = opt.upper.clone().recip();
        mu = AtomicMeasure::from_coords(
            blocks,
            mu.atoms().map(|(_, j, w)| (j, w * &shrink)),
        )?;
    }
    let report = flat_measure_report(&mu, &u, level, ledger, &opts.precision);
    let quantities = match &report {
        Ok(r) => vec![
            ("dual_norm_upper".into(), fmt_rat(&r.dual_norm.upper)),
            ("heavy_blocks".into(), r.heavy_blocks.len().to_string()),
            ("light_chunks".into(), r.light_chunks.len().to_string()),
        ],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok))?;
    Ok(TrialRecord {
        index,
        instance: format!("level={level} measure={mu}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

fn flat_measure_violation(
    index: u64,
    rng: &mut ChaCha8Rng,
    mut coords: Vec<(u32, u64)>,
    level: u32,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let blocks = &ledger.blocks;
    let eps_next = ledger.eps(level + 1);
    let variant = index % 3;
    let (mu, u, n, label) = match variant {
        0 => {
            // The vector dips below ε_{n+1} at one atom.
            let u = spike_vector(&mut coords, &eps_next, ledger)?;
            let mu = AtomicMeasure::from_coords(
                blocks,
                coords.iter().map(|&(_, j)| (j, unit_rat(rng))),
            )?;
            let mut low = u.clone();
            low.set(coords[0].1, &eps_next / rat_u64(2));
            (mu, low, level, "coordinate below threshold")
        }
        1 => {
            // Full weight on two shallow atoms overflows every profile
            // that collects them both, so the measure is not Z-bounded.
            let hi = ledger.depth;
            let lo = level + 1;
            let shallow = vec![(lo, blocks.min(lo)?), (hi, blocks.min(hi)?)];
            let mut c = shallow.clone();
            let u = spike_vector(&mut c, &eps_next, ledger)?;
            let mu = AtomicMeasure::from_coords(
                blocks,
                shallow.iter().map(|&(_, j)| (j, Rat::one())),
            )?;
            (mu, u, level, "unbounded measure")
        }
        _ => {
            // The level index collides with the lowest touched block.
            let u = spike_vector(&mut coords, &eps_next, ledger)?;
            let mu = AtomicMeasure::from_coords(
                blocks,
                coords.iter().map(|&(_, j)| (j, unit_rat(rng))),
            )?;
            (mu, u, coords[0].0, "level not below the blocks")
        }
    };
    let (hypothesis_ok, verdict) =
        classify(flat_measure_report(&mu, &u, n, ledger, &opts.precision).map(|r| r.ok))?;
    Ok(TrialRecord {
        index,
        instance: format!("violation={label} level={n} measure={mu}"),
        hypothesis_ok,
        quantities: vec![],
        verdict,
    })
}

fn disjoint_family_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let blocks = &ledger.blocks;
    let level = rng.gen_range(0..=ledger.depth.saturating_sub(2).min(2));
    let eps_next = ledger.eps(level + 1);
    let delta = ledger.delta(level);

    let picked = block_subset(&mut rng, level + 1, ledger.depth);
    let mut lengths: BTreeMap<u32, u64> = picked
        .iter()
        .map(|&i| Ok((i, rng.gen_range(1..=blocks.size(i)?))))
        .collect::<Result<_>>()?;
    let mut coords: Vec<(u32, u64)> = lengths
        .iter()
        .map(|(&i, &g)| Ok((i, blocks.min(i)? + g - 1)))
        .collect::<Result<_>>()?;
    let u = spike_vector(&mut coords, &eps_next, ledger)?;
    lengths.retain(|i, _| coords.iter().any(|(b, _)| b == i));

    let mut rho = SparseVector::zero();
    for (&i, _) in &lengths {
        rho.set(i as u64, unit_rat(&mut rng));
    }
    let rho = scale_into_dual_ball(&rho, &ledger.space, &opts.precision)?;

    if opts.violate_hypothesis {
        let participants: Vec<u32> = lengths.keys().copied().collect();
        let variant = index % 3;
        let (inst, label) = match variant {
            0 => {
                // A family member that collects less than δₙ.
                let tiny = rho.scale(&(&delta / rat_u64(1000)));
                let inst = DisjointFamilyInstance {
                    level,
                    segment_lengths: lengths.clone(),
                    rho: tiny,
                    family: vec![vec![participants[0]]],
                    u: u.clone(),
                    };
                (inst, "member below delta")
            }
            1 => {
                // Family members that overlap.
                let inst = DisjointFamilyInstance {
                    level,
                    segment_lengths: lengths.clone(),
                    rho: rho.clone(),
                    family: vec![vec![participants[0]], vec![participants[0]]],
                    u: u.clone(),
                };
                (inst, "overlapping members")
            }
            _ => {
                // ρ outside the dual unit ball.
                let inst = DisjointFamilyInstance {
                    level,
                    segment_lengths: lengths.clone(),
                    rho: SparseVector::unit(participants[0] as u64).scale(&rat_u64(3)),
                    family: vec![],
                    u: u.clone(),
                };
                (inst, "oversized coefficients")
            }
        };
        let (hypothesis_ok, verdict) =
            classify(disjoint_family_report(&inst, ledger).map(|r| r.ok()))?;
        return Ok(TrialRecord {
            index,
            instance: format!("violation={label} level={level}"),
            hypothesis_ok,
            quantities: vec![],
            verdict,
        });
    }

    let participants: Vec<u32> = lengths.keys().copied().collect();
    let (family, _) = extract_bad_family(
        &participants,
        &lengths,
        &rho,
        &ledger.space,
        blocks,
        &delta,
    )?;
    let inst = DisjointFamilyInstance {
        level,
        segment_lengths: lengths.clone(),
        rho,
        family,
        u,
    };
    let report = disjoint_family_report(&inst, ledger);
    let quantities = match &report {
        Ok(r) => vec![
            ("family_size".into(), r.family_size.to_string()),
            ("size_cap".into(), fmt_rat(&r.size_cap)),
            ("family_weight".into(), fmt_rat(&r.family_weight)),
            ("weight_bound_upper".into(), fmt_rat(&r.weight_bound.upper)),
        ],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok()))?;
    Ok(TrialRecord {
        index,
        instance: format!(
            "level={level} segments={} family={}",
            lengths_display(&inst.segment_lengths),
            family_display(&inst.family)
        ),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

fn level_split_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let blocks = &ledger.blocks;
    let mut u = SparseVector::zero();
    let coords = rng.gen_range(3..=8u32);
    for _ in 0..coords {
        let i = rng.gen_range(1..=ledger.depth);
        let j = blocks.min(i)? + rng.gen_range(0..blocks.size(i)?);
        u.set(j, unit_rat(&mut rng));
    }
    let mut rho = SparseVector::zero();
    for i in block_subset(&mut rng, 1, ledger.depth) {
        rho.set(i as u64, unit_rat(&mut rng));
    }

    if opts.violate_hypothesis {
        let variant = index % 3;
        let (u, rho, label) = match variant {
            0 => {
                let mut bad = u.clone();
                let j = bad.support().next().expect("generated vector is non-empty");
                bad.set(j, -Rat::one());
                (bad, scale_into_dual_ball(&rho, &ledger.space, &opts.precision)?, "negative coordinate")
            }
            1 => {
                let z = dual_norm(&ledger.space, &rho, &opts.precision)?;
                let inflated = rho.scale(&(rat_u64(2) / &z.lower));
                (scale_to_unit_norm(&u, ledger)?, inflated, "oversized coefficients")
            }
            _ => {
                let unit = scale_to_unit_norm(&u, ledger)?;
                (unit.scale(&rat_u64(2)), scale_into_dual_ball(&rho, &ledger.space, &opts.precision)?, "oversized vector")
            }
        };
        let (hypothesis_ok, verdict) = classify(decompose_levels(&u, &rho, ledger).map(|d| d.pass))?;
        return Ok(TrialRecord {
            index,
            instance: format!("violation={label}"),
            hypothesis_ok,
            quantities: vec![],
            verdict,
        });
    }

    let u = scale_to_unit_norm(&u, ledger)?;
    let rho = scale_into_dual_ball(&rho, &ledger.space, &opts.precision)?;
    let report = decompose_levels(&u, &rho, ledger);
    let quantities = match &report {
        Ok(d) => {
            let mut q = vec![
                ("total".into(), fmt_rat(&d.total)),
                ("total_bound".into(), fmt_rat(&d.total_bound)),
                ("levels".into(), d.levels.len().to_string()),
            ];
            for lv in &d.levels {
                q.push((
                    format!("level_{}_contribution", lv.level),
                    fmt_rat(&lv.level_contribution),
                ));
                q.push((format!("level_{}_bound", lv.level), fmt_rat(&lv.level_bound)));
            }
            q
        }
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|d| d.pass))?;
    Ok(TrialRecord {
        index,
        instance: format!("vector={u} coefficients={rho}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

fn norm_sandwich_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let mut a = SparseVector::zero();
    for n in block_subset(&mut rng, 1, ledger.depth) {
        a.set(n as u64, signed_rat(&mut rng));
    }
    let report = norm_sandwich_report(&a, ledger, &opts.precision);
    let quantities = match &report {
        Ok(r) => vec![
            ("engine_norm_lower".into(), fmt_rat(&r.engine_norm.lower)),
            ("engine_norm_upper".into(), fmt_rat(&r.engine_norm.upper)),
            ("base_norm_lower".into(), fmt_rat(&r.base_norm.lower)),
            ("base_norm_upper".into(), fmt_rat(&r.base_norm.upper)),
        ],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok()))?;
    Ok(TrialRecord {
        index,
        instance: format!("coefficients={a}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

fn quotient_map_trial(
    index: u64,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(opts.seed, index);
    let blocks = &ledger.blocks;
    let mut x = SparseVector::zero();
    let coords = rng.gen_range(3..=8u32);
    for _ in 0..coords {
        let i = rng.gen_range(1..=ledger.depth);
        let j = blocks.min(i)? + rng.gen_range(0..blocks.size(i)?);
        x.set(j, signed_rat(&mut rng));
    }
    let n = (index % ledger.depth as u64) as u32 + 1;
    let adjoint_ok = verify_adjoint(n, blocks)?;
    let report = operator_bound_report(&x, ledger, &opts.precision);
    let quantities = match &report {
        Ok(r) => vec![
            ("image_norm_upper".into(), fmt_rat(&r.image_norm.upper)),
            ("engine_norm".into(), fmt_rat(&r.engine_norm)),
            ("bound".into(), fmt_rat(&r.bound)),
            ("adjoint_block".into(), n.to_string()),
        ],
        Err(_) => vec![],
    };
    let (hypothesis_ok, verdict) = classify(report.map(|r| r.ok && adjoint_ok))?;
    Ok(TrialRecord {
        index,
        instance: format!("vector={x} adjoint_block={n}"),
        hypothesis_ok,
        quantities,
        verdict,
    })
}

/// Runs a campaign and returns one record per trial, ordered by index.
pub fn run_campaign(
    kind: CampaignKind,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
) -> Result<Vec<TrialRecord>> {
    if opts.violate_hypothesis && !kind.has_violation_mode() {
        return Err(Error::InvalidInput(
            "this campaign verifies an unconditional statement; there is no hypothesis to violate"
                .into(),
        ));
    }
    let mut records = Vec::with_capacity(opts.trials as usize);
    for index in 0..opts.trials {
        let record = match kind {
            CampaignKind::SegmentIndicator => segment_indicator_trial(index, ledger, opts)?,
            CampaignKind::DualDomination => dual_domination_trial(index, ledger, opts)?,
            CampaignKind::FlatMeasureBound => flat_measure_trial(index, ledger, opts)?,
            CampaignKind::DisjointFamily => disjoint_family_trial(index, ledger, opts)?,
            CampaignKind::LevelSplit => level_split_trial(index, ledger, opts)?,
            CampaignKind::NormSandwich => norm_sandwich_trial(index, ledger, opts)?,
            CampaignKind::QuotientMap => quotient_map_trial(index, ledger, opts)?,
        };
        records.push(record);
    }
    Ok(records)
}
