//! Line-oriented report files: one JSON header line carrying the run
//! configuration and the only timestamp, followed by one JSON record
//! per trial in index order, plus a one-row CSV summary.

use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use mnorm_core::campaign::{CampaignKind, CampaignOptions, CampaignSummary, TrialRecord};
use mnorm_core::construction::ParameterLedger;
use mnorm_core::error::{Error, Result};
use mnorm_core::exact::fmt_rat;

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportHeader {
    pub report: String,
    pub kind: String,
    pub space: String,
    pub depth: u32,
    pub trials: u64,
    pub seed: u64,
    pub precision: String,
    pub violate_hypothesis: bool,
    pub timestamp_unix: u64,
}

pub fn records_document(
    kind: CampaignKind,
    ledger: &ParameterLedger,
    opts: &CampaignOptions,
    records: &[TrialRecord],
) -> Result<String> {
    let header = ReportHeader {
        report: "campaign".into(),
        kind: kind.name().into(),
        space: ledger.space.to_string(),
        depth: ledger.depth,
        trials: opts.trials,
        seed: opts.seed,
        precision: fmt_rat(&opts.precision),
        violate_hypothesis: opts.violate_hypothesis,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut out = to_line(&header)?;
    for record in records {
        out.push_str(&to_line(record)?);
    }
    Ok(out)
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    let mut line = serde_json::to_string(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    line.push('\n');
    Ok(line)
}

pub fn parse_records_document(text: &str) -> Result<(ReportHeader, Vec<TrialRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse("empty records file".into()))?;
    let header: ReportHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Parse(format!("header line: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let record: TrialRecord = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("record {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok((header, records))
}

pub fn summary_csv(kind_name: &str, summary: &CampaignSummary, violate_hypothesis: bool) -> String {
    let mut out = String::from(
        "kind,trials,passed,failed,rejected,indeterminate,budget,all_expected\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        kind_name,
        summary.trials,
        summary.passed,
        summary.failed,
        summary.rejected,
        summary.indeterminate,
        summary.budget,
        summary.all_expected(violate_hypothesis),
    ));
    out
}

/// Exit policy: a wrong conclusion outranks a rejected instance, which
/// outranks an undecided search. In violation mode any record that got
/// past the hypothesis gate is a wrong conclusion.
pub fn summary_exit(summary: &CampaignSummary, violate_hypothesis: bool) -> ExitCode {
    if violate_hypothesis {
        return if summary.rejected == summary.trials {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        };
    }
    if summary.failed > 0 {
        ExitCode::from(1)
    } else if summary.rejected > 0 {
        ExitCode::from(2)
    } else if summary.indeterminate > 0 || summary.budget > 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
