//! Batch front end: parameter building, norm and dual-norm queries,
//! verification campaigns, and report emission.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 malformed
//! input or a rejected hypothesis, 3 a search budget or precision cap
//! left the outcome undecided.

mod certificate;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mnorm_core::campaign::{run_campaign, summarize, CampaignKind, CampaignOptions};
use mnorm_core::construction::{build_ledger, parse_params, to_params_string, LedgerOptions,
    ParameterLedger};
use mnorm_core::error::Error;
use mnorm_core::exact::{fmt_rat, parse_rat};
use mnorm_core::norm::{dual_norm_m_with_budget, norm_m_with_budget, SearchBudget};
use mnorm_core::spaces::{tsirelson, BaseSpace};
use mnorm_core::sparse::SparseVector;

#[derive(Parser)]
#[command(name = "mnorm", version, about = "Exact norm engine for a polyhedral sequence space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the parameter ledger and print the certified constants.
    Params(ParamsArgs),
    /// Compute the engine norm of a vector with its maximizer.
    Norm(NormArgs),
    /// Compute the dual norm of a functional with its witness.
    Dualnorm(DualnormArgs),
    /// Run a verification campaign and emit its records.
    Verify(VerifyArgs),
    /// Summarize a records file or re-validate a certificate.
    Report(ReportArgs),
}

#[derive(Args)]
struct LedgerArgs {
    /// Base space id: c0, lp:P, c0sum-lp:P:blocks=..., tsirelson.
    #[arg(long, default_value = "c0")]
    space: String,
    /// Number of materialized blocks.
    #[arg(long, default_value_t = 4)]
    depth: u32,
    /// Read the ledger from a params file instead of rebuilding it.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override the block-count witness k0.
    #[arg(long)]
    k0: Option<u64>,
    /// Decay ratio lambda as an exact rational in (phi(k0)/k0, 1).
    #[arg(long)]
    lambda: Option<String>,
    /// Doubling constant for block sizing.
    #[arg(long)]
    sizing: Option<u64>,
}

impl LedgerArgs {
    fn ledger(&self) -> Result<ParameterLedger, Error> {
        if let Some(path) = &self.params {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            let ledger = parse_params(&text)?;
            ledger.validate()?;
            return Ok(ledger);
        }
        let space = BaseSpace::parse(&self.space)?;
        let options = LedgerOptions {
            k0: self.k0,
            lambda: self.lambda.as_deref().map(parse_rat).transpose()?,
            sizing_c: self.sizing,
            ..LedgerOptions::default()
        };
        build_ledger(&space, self.depth, &options)
    }
}

#[derive(Args)]
struct BudgetArgs {
    /// Cap on measure-support assignments explored per norm query.
    #[arg(long)]
    max_assignments: Option<u64>,
    /// Cap on multi-part weight programs per norm query.
    #[arg(long)]
    max_partitions: Option<u64>,
    /// Cap on separation rounds per weight program.
    #[arg(long)]
    max_cut_rounds: Option<u32>,
    /// Cap on cutting-plane iterations per dual-norm query.
    #[arg(long)]
    max_dual_iterations: Option<u32>,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        let mut b = SearchBudget::default();
        if let Some(v) = self.max_assignments {
            b.max_assignments = v;
        }
        if let Some(v) = self.max_partitions {
            b.max_partition_programs = v;
        }
        if let Some(v) = self.max_cut_rounds {
            b.max_cut_rounds = v;
        }
        if let Some(v) = self.max_dual_iterations {
            b.max_dual_iterations = v;
        }
        b
    }
}

#[derive(Args)]
struct ParamsArgs {
    #[command(flatten)]
    ledger: LedgerArgs,
    /// Write the ledger as a key = value params file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    ledger: LedgerArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Vector as "idx:num/den,idx:num/den,...".
    #[arg(long)]
    vector: String,
    /// Write a self-contained certificate file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DualnormArgs {
    #[command(flatten)]
    ledger: LedgerArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Functional as "idx:num/den,idx:num/den,...".
    #[arg(long)]
    functional: String,
    /// Enclosure width target as an exact rational.
    #[arg(long, default_value = "1/1000000000")]
    precision: String,
    /// Write a self-contained certificate file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    ledger: LedgerArgs,
    /// Campaign code: L1, L2, L3, L4, L5, T3, or C3.
    #[arg(long)]
    lemma: String,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enclosure width target as an exact rational.
    #[arg(long, default_value = "1/1000000000")]
    precision: String,
    /// Generate instances that each break one hypothesis; every trial
    /// must then be rejected at the hypothesis gate.
    #[arg(long)]
    violate_hypothesis: bool,
    /// Write records as JSON lines (header line first).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the summary row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Records file produced by `verify --report`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Certificate file produced by `norm --out` or `dualnorm --out`.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Write the summary row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Campaign codes are fixed command-line vocabulary; everything behind
/// the flag speaks in terms of what the campaign checks.
fn campaign_for_code(code: &str) -> Result<CampaignKind, Error> {
    match code.to_ascii_uppercase().as_str() {
        "L1" => Ok(CampaignKind::SegmentIndicator),
        "L2" => Ok(CampaignKind::DualDomination),
        "L3" => Ok(CampaignKind::FlatMeasureBound),
        "L4" => Ok(CampaignKind::DisjointFamily),
        "L5" => Ok(CampaignKind::LevelSplit),
        "T3" => Ok(CampaignKind::NormSandwich),
        "C3" => Ok(CampaignKind::QuotientMap),
        other => Err(Error::InvalidInput(format!(
            "unknown campaign code {other:?}; expected one of L1, L2, L3, L4, L5, T3, C3"
        ))),
    }
}

fn exit_code_for_error(e: &Error) -> ExitCode {
    match e {
        Error::Indeterminate(_) | Error::BudgetExceeded(_) | Error::IterationCap { .. } => {
            ExitCode::from(3)
        }
        _ => ExitCode::from(2),
    }
}

fn write_text(path: &PathBuf, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Prints without panicking when the consumer closes the pipe early.
fn say(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.write_all(b"\n");
}

fn cmd_params(args: &ParamsArgs) -> Result<ExitCode, Error> {
    let ledger = args.ledger.ledger()?;
    say(to_params_string(&ledger).trim_end());
    if let Some(path) = &args.out {
        write_text(path, &to_params_string(&ledger))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_norm(args: &NormArgs) -> Result<ExitCode, Error> {
    let ledger = args.ledger.ledger()?;
    let x = SparseVector::parse(&args.vector)?;
    let cert = norm_m_with_budget(&x, &ledger.space, &ledger.blocks, &args.budget.budget())?;
    say(&format!("value = {}", fmt_rat(&cert.value)));
    say(&format!("maximizer = {}", certificate::maximizer_line(&cert.maximizer)));
    say(&format!("exhaustive = {}", cert.exhaustive));
    if let Some(path) = &args.out {
        write_text(path, &certificate::norm_certificate(&ledger, &x, &cert))?;
    }
    if cert.exhaustive {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_dualnorm(args: &DualnormArgs) -> Result<ExitCode, Error> {
    let ledger = args.ledger.ledger()?;
    let f = SparseVector::parse(&args.functional)?;
    let precision = parse_rat(&args.precision)?;
    let cert = dual_norm_m_with_budget(
        &f,
        &ledger.space,
        &ledger.blocks,
        &precision,
        &args.budget.budget(),
    )?;
    say(&format!("value_lower = {}", fmt_rat(&cert.value.lower)));
    say(&format!("value_upper = {}", fmt_rat(&cert.value.upper)));
    say(&format!("witness = {}", cert.witness));
    if let Some(path) = &args.out {
        write_text(path, &certificate::dual_certificate(&ledger, &f, &cert))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, Error> {
    let ledger = args.ledger.ledger()?;
    let kind = campaign_for_code(&args.lemma)?;
    let opts = CampaignOptions {
        trials: args.trials,
        seed: args.seed,
        precision: parse_rat(&args.precision)?,
        violate_hypothesis: args.violate_hypothesis,
    };
    let records = run_campaign(kind, &ledger, &opts)?;
    let summary = summarize(&records);

    if let Some(path) = &args.report {
        let text = report::records_document(kind, &ledger, &opts, &records)?;
        write_text(path, &text)?;
    }
    if let Some(path) = &args.csv {
        write_text(path, &report::summary_csv(kind.name(), &summary, opts.violate_hypothesis))?;
    }
    say(&format!(
        "{}: trials={} passed={} failed={} rejected={} indeterminate={} budget={}",
        kind.name(),
        summary.trials,
        summary.passed,
        summary.failed,
        summary.rejected,
        summary.indeterminate,
        summary.budget,
    ));
    Ok(report::summary_exit(&summary, opts.violate_hypothesis))
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode, Error> {
    match (&args.input, &args.certificate) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            let (header, records) = report::parse_records_document(&text)?;
            let summary = summarize(&records);
            if let Some(csv) = &args.csv {
                write_text(
                    csv,
                    &report::summary_csv(&header.kind, &summary, header.violate_hypothesis),
                )?;
            }
            say(&format!(
                "{}: trials={} passed={} failed={} rejected={} indeterminate={} budget={}",
                header.kind,
                summary.trials,
                summary.passed,
                summary.failed,
                summary.rejected,
                summary.indeterminate,
                summary.budget,
            ));
            Ok(report::summary_exit(&summary, header.violate_hypothesis))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            certificate::revalidate(&text)?;
            say("certificate re-validated");
            Ok(ExitCode::SUCCESS)
        }
        _ => Err(Error::InvalidInput(
            "report needs exactly one of --input or --certificate".into(),
        )),
    }
}

fn cache_file() -> Option<PathBuf> {
    std::env::var_os("MNORM_CACHE_DIR").map(|dir| PathBuf::from(dir).join("tsirelson.cache"))
}

fn load_cache() {
    if let Some(path) = cache_file() {
        if let Ok(text) = fs::read_to_string(&path) {
            if let Err(e) = tsirelson::load_cache(&text) {
                eprintln!("warning: ignoring cache {}: {e}", path.display());
            }
        }
    }
}

fn store_cache() {
    if let Some(path) = cache_file() {
        if let Some(dir) = path.parent() {
            let _ = fs::create_dir_all(dir);
        }
        if let Err(e) = fs::write(&path, tsirelson::dump_cache()) {
            eprintln!("warning: could not write cache {}: {e}", path.display());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    load_cache();
    let outcome = match &cli.command {
        Command::Params(args) => cmd_params(args),
        Command::Norm(args) => cmd_norm(args),
        Command::Dualnorm(args) => cmd_dualnorm(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    };
    store_cache();
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for_error(&e)
        }
    }
}
