use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tob_core::experiment::{format_table, run_batch, sweep, table, Axis};
use tob_core::sim::timing::ga_kind;
use tob_core::verify::{check_async, check_ga, check_sleepy, metrics, verify_trace, Schedule, SleepyParams, TailMode};
use tob_core::{Eta, ProtocolKind, Scenario, Trace};

/// Exit statuses beyond success.
const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_NONCOMPLIANT: u8 = 4;

#[derive(Parser)]
#[command(name = "tobsim", version, about = "Simulate and check Graded Agreement and Total-Order Broadcast runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario once per seed and write one JSON-lines trace per run.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// A seed, a range `a..b` / `a..=b`, or a comma list. Defaults to the scenario's seed.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, env = "TOBSIM_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Check a trace for property violations and model compliance.
    Verify {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Latency and throughput of a trace.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Averaged metrics table over every trace in a directory.
    Table {
        #[arg(long, env = "TOBSIM_OUT", default_value = "out")]
        dir: PathBuf,
    },
    /// Vary one parameter of a scenario and report compliance and violations as CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Evaluate a scenario's schedule against its protocol's participation assumption.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait OrCode<T> {
    fn or_code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrCode<T> for Result<T, E> {
    fn or_code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<(), Failure> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e).or_code(EXIT_FAILURE),
        _ => Ok(()),
    }
}

fn json_out(value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).or_code(EXIT_FAILURE)?;
    text.push('\n');
    emit(&text)
}

fn parse_seeds(spec: &str) -> anyhow::Result<Vec<u64>> {
    let num = |s: &str| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}"));
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        spec.split(',').map(num).collect::<anyhow::Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("seed set {spec:?} is empty");
    }
    Ok(seeds)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).or_code(EXIT_CONFIG)?;
    let s = Scenario::parse_any(&text).with_context(|| format!("parsing {}", path.display())).or_code(EXIT_CONFIG)?;
    s.validate().with_context(|| format!("validating {}", path.display())).or_code(EXIT_CONFIG)?;
    Ok(s)
}

fn load_trace(path: &Path) -> Result<Trace, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).or_code(EXIT_CONFIG)?;
    Trace::from_jsonl(&text).with_context(|| format!("parsing {}", path.display())).or_code(EXIT_CONFIG)
}

fn seeds_or_default(seeds: Option<&str>, s: &Scenario) -> Result<Vec<u64>, Failure> {
    match seeds {
        Some(spec) => parse_seeds(spec).or_code(EXIT_CONFIG),
        None => Ok(vec![s.seed]),
    }
}

fn stem(s: &Scenario, path: &Path) -> String {
    if s.name.is_empty() {
        path.file_stem().map_or_else(|| "run".into(), |x| x.to_string_lossy().into_owned())
    } else {
        s.name.clone()
    }
}

fn cmd_run(scenario: &Path, seeds: Option<&str>, out: &Path) -> Result<u8, Failure> {
    let s = load_scenario(scenario)?;
    let seeds = seeds_or_default(seeds, &s)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).or_code(EXIT_FAILURE)?;
    let name = stem(&s, scenario);
    for (seed, trace) in run_batch(&s, seeds).or_code(EXIT_CONFIG)? {
        let path = out.join(format!("{name}-seed{seed}.jsonl"));
        fs::write(&path, trace.to_jsonl()).with_context(|| format!("writing {}", path.display())).or_code(EXIT_FAILURE)?;
        emit(&format!("{}\n", path.display()))?;
    }
    Ok(0)
}

fn cmd_verify(trace: &Path) -> Result<u8, Failure> {
    let t = load_trace(trace)?;
    let report = verify_trace(&t).or_code(EXIT_CONFIG)?;
    json_out(&report)?;
    Ok(if !report.compliant {
        EXIT_NONCOMPLIANT
    } else if !report.violations.is_empty() {
        EXIT_VIOLATION
    } else {
        0
    })
}

const METRICS_HEADER: [&str; 7] = ["protocol", "seed", "best", "avg", "block_time", "votes", "good_leader_rate"];

fn cmd_metrics(trace: &Path, format: Format) -> Result<u8, Failure> {
    let t = load_trace(trace)?;
    let info = t.header().or_code(EXIT_CONFIG)?.clone();
    let m = metrics(&t).or_code(EXIT_FAILURE)?;
    let (best, avg, block) = (m.in_deltas(m.best_case_latency), m.in_deltas(m.avg_case_latency), m.in_deltas(m.block_time));
    match format {
        Format::Json => {
            let row = json!({
                "protocol": info.protocol,
                "seed": info.seed,
                "best": best,
                "avg": avg,
                "block_time": block,
                "votes": m.votes_per_decision,
                "good_leader_rate": m.good_leader_rate,
            });
            json_out(&row)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(METRICS_HEADER).or_code(EXIT_FAILURE)?;
            w.write_record([
                info.protocol.name().to_string(),
                info.seed.to_string(),
                best.to_string(),
                format!("{avg:.4}"),
                format!("{block:.4}"),
                m.votes_per_decision.to_string(),
                format!("{:.4}", m.good_leader_rate),
            ])
            .or_code(EXIT_FAILURE)?;
            emit(&String::from_utf8_lossy(&w.into_inner().or_code(EXIT_FAILURE)?))?;
        }
    }
    Ok(0)
}

fn cmd_table(dir: &Path) -> Result<u8, Failure> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .or_code(EXIT_CONFIG)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for p in &paths {
        let t = load_trace(p)?;
        if t.header().is_ok_and(|h| matches!(h.protocol, ProtocolKind::Tob1 | ProtocolKind::Tob2)) {
            traces.push(t);
        }
    }
    let rows = table(&traces).or_code(EXIT_FAILURE)?;
    emit(&format_table(&rows))?;
    Ok(0)
}

fn cmd_sweep(scenario: &Path, axis: Axis, values: &[String], seeds: Option<&str>) -> Result<u8, Failure> {
    let s = load_scenario(scenario)?;
    let seeds = seeds_or_default(seeds, &s)?;
    let cells = sweep(&s, axis, values, &seeds);
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &cells {
        w.serialize(c).or_code(EXIT_FAILURE)?;
    }
    emit(&String::from_utf8_lossy(&w.into_inner().or_code(EXIT_FAILURE)?))?;
    Ok(0)
}

fn cmd_check(scenario: &Path) -> Result<u8, Failure> {
    let s = load_scenario(scenario)?;
    let schedule = Schedule::from_scenario(&s);
    let (compliant, detail) = match s.protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => {
            let r = check_ga(&schedule, ga_kind(s.protocol), TailMode::Unevaluated);
            (r.compliant, json!({ "records": r.records }))
        }
        ProtocolKind::Tob1 | ProtocolKind::Tob2 => {
            let params =
                SleepyParams::for_protocol(s.protocol, s.delta).ok_or_else(|| anyhow!("no model")).or_code(EXIT_FAILURE)?;
            let r = check_sleepy(&schedule, &params, TailMode::Unevaluated);
            (r.compliant, json!({ "first_failure": r.first_failure() }))
        }
        ProtocolKind::Tob1Lmd => {
            let r = check_async(&schedule, s.eta.unwrap_or(Eta::Finite(0)), s.asynchrony, TailMode::Unevaluated)
                .or_code(EXIT_CONFIG)?;
            let sync_failure = r.eq_sync.first_failure();
            (
                r.compliant,
                json!({
                    "first_sync_failure": sync_failure,
                    "first_async_failure": r.first_async_failure(),
                    "asleep_at_cutoff": r.asleep_at_cutoff,
                }),
            )
        }
    };
    let out = json!({ "protocol": s.protocol, "compliant": compliant, "detail": detail });
    json_out(&out)?;
    Ok(if compliant { 0 } else { EXIT_NONCOMPLIANT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, seeds, out } => cmd_run(scenario, seeds.as_deref(), out),
        Command::Verify { trace } => cmd_verify(trace),
        Command::Metrics { trace, format } => cmd_metrics(trace, *format),
        Command::Table { dir } => cmd_table(dir),
        Command::Sweep { scenario, axis, values, seeds } => cmd_sweep(scenario, *axis, values, seeds.as_deref()),
        Command::Check { scenario } => cmd_check(scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_seeds("4,1").unwrap(), vec![4, 1]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
