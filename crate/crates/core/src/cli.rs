//! `crsim` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result, ValidationErrors};
use crate::learning::KnowledgeBase;
use crate::qos;
use crate::sim::{self, RunOptions, Scenario};
use crate::tdma::{self, Topology};

pub const TOOL: &str = "crsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = TOOL, version = VERSION, about = "Cognitive-radio spectrum sharing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and print its metrics as JSON.
    Simulate(SimulateArgs),
    /// Print stationary laws, blocking and non-completion figures as JSON.
    Analyze(ScenarioArgs),
    /// Simulate and set the results beside the analytic figures.
    Compare(CompareArgs),
    /// Run the TDMA channel discovery over a topology file.
    Tdma(TdmaArgs),
    /// Traffic sensitivity table.
    Qos {
        #[command(subcommand)]
        command: QosCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum QosCommand {
    /// Print the table as CSV.
    List,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Scenario JSON file.
    #[arg(long, group = "source")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario (`canonical`).
    #[arg(long, group = "source")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub source: Source,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the per-step time series as CSV instead of the metrics JSON.
    #[arg(long)]
    pub timeseries: bool,
    /// Write the event trace as newline-delimited JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Independent runs with seeds seed, seed+1, ...; reports mean and stddev.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub replications: u64,
    /// Start from this knowledge-base snapshot.
    #[arg(long)]
    pub kb_in: Option<PathBuf>,
    /// Save the final knowledge base here.
    #[arg(long)]
    pub kb_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON instead of a text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TdmaArgs {
    /// Topology JSON: channels, nodes with channel sets, edges.
    #[arg(long)]
    pub topology: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command. Returns the process exit status:
/// 0 on success, 1 on input or validation errors, 2 on usage errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    let mut errs = ValidationErrors::default();
    errs.push(path.display().to_string(), e.to_string());
    Error::Validation(errs)
}

fn load_scenario(source: &Source) -> Result<Scenario> {
    match (&source.scenario, &source.preset) {
        (Some(path), _) => Scenario::from_path(path),
        (None, Some(name)) => Scenario::preset(name).ok_or_else(|| {
            let mut errs = ValidationErrors::default();
            errs.push("--preset", format!("unknown preset `{name}` (available: canonical)"));
            Error::Validation(errs)
        }),
        (None, None) => unreachable!("clap requires one source"),
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

fn provenance(scenario_hash: &str, seed: u64, overridden: bool) -> serde_json::Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "scenario_hash": scenario_hash,
        "seed": seed,
        "seed_overridden": overridden,
    })
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args, stdout),
        Command::Analyze(args) => {
            let scenario = load_scenario(&args.source)?;
            let analysis = sim::analyze(&scenario)?;
            let value = json!({
                "provenance": provenance(&scenario.hash(), scenario.seed, false),
                "analysis": analysis,
            });
            emit(args.out.as_deref(), stdout, &pretty(&value))
        }
        Command::Compare(args) => {
            let mut scenario = load_scenario(&args.source)?;
            let hash = scenario.hash();
            if let Some(seed) = args.seed {
                scenario.seed = seed;
            }
            let report = sim::compare(&scenario)?;
            let text = if args.json {
                pretty(&json!({
                    "provenance": provenance(&hash, scenario.seed, args.seed.is_some()),
                    "comparison": report,
                }))
            } else {
                format!("# {TOOL} {VERSION} scenario {hash} seed {}\n{}", scenario.seed, report.to_table())
            };
            emit(args.out.as_deref(), stdout, &text)
        }
        Command::Tdma(args) => {
            let text = std::fs::read_to_string(&args.topology).map_err(|e| io_error(&args.topology, e))?;
            let topology: Topology = serde_json::from_str(&text).map_err(|e| {
                let mut errs = ValidationErrors::default();
                errs.push(args.topology.display().to_string(), e.to_string());
                Error::Validation(errs)
            })?;
            let result = tdma::discover(&topology)?;
            emit(args.out.as_deref(), stdout, &pretty(&serde_json::to_value(&result).expect("serializes")))
        }
        Command::Qos {
            command: QosCommand::List,
        } => emit(None, stdout, &qos::table_csv()),
    }
}

fn simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut scenario = load_scenario(&args.source)?;
    let hash = scenario.hash();
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let knowledge = match &args.kb_in {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let kb: KnowledgeBase = serde_json::from_str(&text).map_err(|e| {
                let mut errs = ValidationErrors::default();
                errs.push(path.display().to_string(), e.to_string());
                Error::Validation(errs)
            })?;
            kb.validate()?;
            Some(kb)
        }
        None => None,
    };
    let options = RunOptions {
        record_trace: args.trace.is_some(),
        timeseries: args.timeseries,
        knowledge,
    };

    if args.replications > 1 {
        if args.timeseries || args.trace.is_some() || args.kb_out.is_some() {
            let mut errs = ValidationErrors::default();
            errs.push("--replications", "cannot be combined with --timeseries, --trace or --kb-out");
            return Err(Error::Validation(errs));
        }
        let seeds: Vec<u64> = (0..args.replications).map(|i| scenario.seed.wrapping_add(i)).collect();
        let outputs = sim::run_replications(&scenario, &seeds, &options)?;
        let metrics: Vec<_> = outputs.iter().map(|o| o.metrics.clone()).collect();
        let summary = sim::summarize(&metrics);
        let runs: Vec<_> = seeds
            .iter()
            .zip(&outputs)
            .map(|(seed, o)| json!({ "seed": seed, "trace_hash": o.trace.hash }))
            .collect();
        let value = json!({
            "provenance": provenance(&hash, scenario.seed, args.seed.is_some()),
            "replications": args.replications,
            "runs": runs,
            "mean": summary.mean,
            "stddev": summary.stddev,
        });
        return emit(args.out.as_deref(), stdout, &pretty(&value));
    }

    let output = sim::run_with(&scenario, options)?;
    if let Some(path) = &args.trace {
        std::fs::write(path, output.trace.to_ndjson()).map_err(|e| io_error(path, e))?;
    }
    if let Some(path) = &args.kb_out {
        let text = serde_json::to_string_pretty(&output.knowledge).expect("kb serializes");
        std::fs::write(path, text).map_err(|e| io_error(path, e))?;
    }
    if let Some(ts) = &output.timeseries {
        return emit(args.out.as_deref(), stdout, &ts.to_csv());
    }
    let value = json!({
        "provenance": provenance(&hash, scenario.seed, args.seed.is_some()),
        "metrics": output.metrics,
        "trace": { "events": output.trace.len, "hash": output.trace.hash },
    });
    emit(args.out.as_deref(), stdout, &pretty(&value))
}
