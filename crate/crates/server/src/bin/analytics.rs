use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use voxchat::analytics::{compute_metrics, load_logs, weighted_ranks, AnalyticsError, MetricsReport, RankingMatrix};
use voxchat::memory::Mode;

/// Compute session metrics from a directory of JSONL logs.
#[derive(Debug, Parser)]
#[command(name = "analytics", version)]
struct Cli {
    /// Directory holding `<session id>.jsonl` logs.
    #[arg(long)]
    logs: PathBuf,
    /// Keep only sessions of this mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    out: PathBuf,
    /// Rank counts as JSON or CSV; adds weighted ranks to the report.
    #[arg(long)]
    ranking: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|_| format!("unknown mode `{s}` (expected command or llm)"))
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted_ranks: Option<BTreeMap<String, f64>>,
}

fn run(cli: &Cli) -> Result<Report, AnalyticsError> {
    let logs = load_logs(&cli.logs, cli.mode)?;
    let metrics = compute_metrics(&logs)?;
    let weighted_ranks = match &cli.ranking {
        Some(path) => Some(weighted_ranks(&RankingMatrix::from_path(path)?)?),
        None => None,
    };
    Ok(Report { metrics, weighted_ranks })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("analytics: {e}");
            return ExitCode::FAILURE;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = std::fs::write(&cli.out, json + "\n") {
        eprintln!("analytics: cannot write {}: {e}", cli.out.display());
        return ExitCode::FAILURE;
    }
    println!(
        "{} sessions, {} unique commands -> {}",
        report.metrics.overall.session_count,
        report.metrics.overall.unique_commands_total,
        cli.out.display()
    );
    ExitCode::SUCCESS
}
