//! Scenario runner and report comparator.
//!
//! `rescuemesh <scenario.toml>` executes one run and writes `events.jsonl`
//! (one record per line) and `metrics.json` (the summary document) into
//! `--out-dir`. `rescuemesh compare a.json b.json` prints a leaf-by-leaf diff
//! of two metrics reports.
//!
//! Exit codes: 0 success, 1 usage, 2 scenario/report schema errors, 3 run
//! (kernel) errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use rescuemesh_core::report::{compare_runs, MetricsReport};
use rescuemesh_core::scenario::RoutingPolicy;
use rescuemesh_core::units::{self, Micros};
use rescuemesh_core::{load_scenario, log, run_scenario, RunOutput, RunOverrides};

const EXIT_USAGE: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_KERNEL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "rescuemesh",
    version,
    about = "Run a disaster-mesh scenario and write its event log and metrics report",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario description (TOML).
    #[arg(required = true, value_name = "SCENARIO")]
    scenario: Option<PathBuf>,

    /// Override the seed in the scenario's experiment block.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Override the horizon; takes a duration with units, e.g. "120 s".
    #[arg(long, value_name = "DURATION", value_parser = parse_duration)]
    horizon: Option<Micros>,

    /// Directory the event log and metrics report are written into.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Skip the event log; write only the metrics report.
    #[arg(long)]
    metrics_only: bool,

    /// Override the routing policy.
    #[arg(long, value_name = "POLICY", value_parser = parse_policy)]
    routing_policy: Option<RoutingPolicy>,

    /// Record every node's coverage state every N seconds in the event log.
    #[arg(
        long,
        value_name = "N",
        value_parser = clap::value_parser!(u64).range(1..),
        conflicts_with = "metrics_only"
    )]
    emit_coverage_samples: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare two metrics reports leaf by leaf.
    Compare {
        /// Baseline metrics report (JSON).
        a: PathBuf,
        /// Candidate metrics report (JSON).
        b: PathBuf,
    },
}

fn parse_duration(text: &str) -> Result<Micros, String> {
    units::micros(text).map(Micros).map_err(|e| e.to_string())
}

fn parse_policy(text: &str) -> Result<RoutingPolicy, String> {
    match text {
        "full" => Ok(RoutingPolicy::Full),
        "adhoc-only" => Ok(RoutingPolicy::AdhocOnly),
        "static" => Ok(RoutingPolicy::Static),
        "flood" => Ok(RoutingPolicy::Flood),
        other => Err(format!(
            "unknown policy {other:?} (expected full, adhoc-only, static or flood)"
        )),
    }
}

fn policy_name(p: RoutingPolicy) -> &'static str {
    match p {
        RoutingPolicy::Full => "full",
        RoutingPolicy::AdhocOnly => "adhoc-only",
        RoutingPolicy::Static => "static",
        RoutingPolicy::Flood => "flood",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as "errors" but are not.
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                EXIT_USAGE
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Some(Command::Compare { a, b }) => compare(&a, &b),
        None => run(&cli.run),
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let path = args
        .scenario
        .as_deref()
        .expect("clap enforces the scenario argument");
    let sc = match load_scenario(path) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let overrides = RunOverrides {
        seed: args.seed,
        horizon: args.horizon,
        routing_policy: args.routing_policy,
        coverage_samples: args.emit_coverage_samples,
    };
    let out = match run_scenario(&sc, &overrides) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_KERNEL);
        }
    };
    if let Err(e) = write_outputs(args, &out) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_KERNEL);
    }
    print_summary(args, &out);
    ExitCode::SUCCESS
}

fn write_outputs(args: &RunArgs, out: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(&args.out_dir)?;
    if !args.metrics_only {
        std::fs::write(args.out_dir.join("events.jsonl"), log::to_jsonl(&out.log))?;
    }
    let mut json = out.metrics.to_json_pretty();
    json.push('\n');
    std::fs::write(args.out_dir.join("metrics.json"), json)
}

fn print_summary(args: &RunArgs, out: &RunOutput) {
    let m = &out.metrics;
    println!(
        "{}: seed {}, horizon {}, routing {}",
        m.scenario,
        m.seed,
        units::fmt_micros(m.horizon_us),
        policy_name(m.routing_policy)
    );
    if !args.metrics_only {
        println!(
            "  events  {} ({} records)",
            args.out_dir.join("events.jsonl").display(),
            out.log.len()
        );
    }
    println!("  metrics {}", args.out_dir.join("metrics.json").display());
    if !m.messages.is_empty() {
        let delivered = m.messages.iter().filter(|x| x.delivered).count();
        let ratio = match m.delivery_ratio {
            Some(r) => format!(" (ratio {r:.3})"),
            None => String::new(),
        };
        println!("  messages {delivered}/{} delivered{ratio}", m.messages.len());
    }
    if let Some(rescue) = &m.rescue {
        for g in &rescue.groups {
            let mut line = format!(
                "  group of {}: {}/{} positioned",
                g.members.len(),
                g.positioning.positions.len(),
                g.members.len()
            );
            if let Some(w) = &g.wakeups_per_hyperperiod {
                line.push_str(&format!(
                    ", wake-ups {} vs mis {} vs always {} ({:.1}% saved)",
                    w.clique,
                    w.mis_rotation,
                    w.always_awake,
                    100.0 * w.savings_vs_always
                ));
            }
            println!("{line}");
        }
    }
    if let Some(r) = m.energy_vs_always_ratio {
        println!("  energy vs always-awake {r:.3}");
    }
}

fn compare(a_path: &Path, b_path: &Path) -> ExitCode {
    let (a, b) = match (read_report(a_path), read_report(b_path)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let diffs = compare_runs(&a, &b);
    if diffs.is_empty() {
        println!("identical: 0 differing metrics");
        return ExitCode::SUCCESS;
    }
    if diffs.iter().any(|d| d.contains("(absent)")) {
        println!("note: the reports expose different metric sets");
    }
    for d in &diffs {
        println!("{d}");
    }
    println!("{} differing metrics", diffs.len());
    ExitCode::SUCCESS
}

fn read_report(path: &Path) -> Result<MetricsReport, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("failed to read {}: {e}", path.display()))?;
    MetricsReport::from_json(&text)
        .map_err(|e| format!("{} does not parse as a metrics report: {e}", path.display()))
}
