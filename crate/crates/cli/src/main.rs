//! `moments`: run, check and explore history-chain scenarios.
//!
//! Exit codes: 0 ok, 1 parse or usage error, 2 conditioning impossible,
//! 3 dimension cap exceeded.

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value as Json};

use moments_core::protocol::{
    product_state_baseline, protocol_statistics, single_spin_oracle, MeasurementPlan, ProtocolInstance,
};
use moments_core::qcore::DEFAULT_MAX_DIMENSION;
use moments_core::random::derive_seed;
use moments_core::scenario::{
    builtin, double_life_scenario, epr_scenario, parse_observable_spec, parse_scenario, parse_state_spec, report,
    run_scenario_capped, to_json, Format, Party, Scenario,
};
use moments_core::{Error, Mode, OutcomeStats};

/// Equivalence threshold reported by `protocol`.
const EQUIVALENCE_TV: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "moments", version, about = "Quantum histories as chains of time moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files (or `builtin:<name>`); several files run in parallel.
    Run {
        #[arg(required = true)]
        files: Vec<String>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
        /// Largest total Hilbert-space dimension.
        #[arg(long, default_value_t = DEFAULT_MAX_DIMENSION)]
        max_dim: usize,
    },
    /// Two-time sigma_z difference on one particle of an EPR pair.
    Epr {
        #[arg(long, value_parser = ["alice", "bob"])]
        who: String,
        /// Alice's sigma_x result at the middle moment.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_outcome)]
        outcome: i32,
        #[arg(long, default_value_t = 1)]
        t1: usize,
        #[arg(long, default_value_t = 2)]
        t_mid: usize,
        #[arg(long, default_value_t = 3)]
        t2: usize,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// One particle whose even and odd moments form two independent chains.
    DoubleLife {
        /// Pre-selected state of the even moments, e.g. "up z".
        #[arg(long)]
        psi1: String,
        /// Pre-selected state of the odd moments.
        #[arg(long)]
        psi2: String,
        #[arg(long)]
        moments: usize,
        #[arg(long, default_value = "pauli z")]
        observable: String,
        #[arg(long, default_value_t = 0)]
        first: usize,
        #[arg(long, default_value_t = 1)]
        second: usize,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Compare N Bell-chained spins with one spin at N moments.
    Protocol {
        #[arg(long)]
        n: usize,
        /// State of the first spin, e.g. "spin pi/3 0".
        #[arg(long, default_value = "up z")]
        psi: String,
        /// Single-time measurement `k:<observable>`, e.g. "1:pauli x".
        #[arg(long = "single")]
        singles: Vec<String>,
        /// Difference `k:l:<observable>` read as A(l) - A(k).
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
    /// Parse and validate scenario files without running them.
    Check {
        #[arg(required = true)]
        files: Vec<String>,
    },
}

#[derive(Args)]
struct Sampling {
    /// Accepted Monte Carlo samples (exact evaluation when absent).
    #[arg(long, requires = "seed")]
    samples: Option<usize>,
    #[arg(long, requires = "samples")]
    seed: Option<u64>,
}

impl Sampling {
    fn mode(&self, job: Option<u64>) -> Mode {
        match (self.samples, self.seed) {
            (Some(samples), Some(seed)) => {
                Mode::Sampled { samples, seed: job.map_or(seed, |i| derive_seed(seed, i)) }
            }
            _ => Mode::Exact,
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
}

impl Output {
    fn format(&self) -> Format {
        self.format.parse().expect("validated by clap")
    }
}

fn parse_outcome(s: &str) -> Result<i32, String> {
    match s {
        "+1" | "1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(format!("expected +1 or -1, got `{s}`")),
    }
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ConditioningImpossible => 2,
            Error::DimensionCap { .. } => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure { code: 1, message }
    }
}

fn load(file: &str) -> Result<Scenario, Failure> {
    if let Some(name) = file.strip_prefix("builtin:") {
        return builtin(name).ok_or_else(|| format!("no built-in scenario `{name}`").into());
    }
    let text = fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))?;
    parse_scenario(&text).map_err(|e| format!("{file}:{e}").into())
}

fn run_file(file: &str, mode: &Mode, max_dim: usize) -> Result<OutcomeStats, Failure> {
    let scenario = load(file)?;
    run_scenario_capped(&scenario, mode, max_dim).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{file}: {}", f.message) }
    })
}

fn emit(stats: &OutcomeStats, format: Format) -> Result<String, Failure> {
    Ok(report(stats, format)?)
}

fn cmd_run(files: &[String], sampling: &Sampling, format: Format, max_dim: usize) -> (String, Option<Failure>) {
    if files.len() == 1 {
        return match run_file(&files[0], &sampling.mode(None), max_dim).and_then(|s| emit(&s, format)) {
            Ok(out) => (out, None),
            Err(f) => (String::new(), Some(f)),
        };
    }
    let results: Vec<Result<OutcomeStats, Failure>> = thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .enumerate()
            .map(|(i, file)| {
                let mode = sampling.mode(Some(i as u64));
                scope.spawn(move || run_file(file, &mode, max_dim))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut first_failure = None;
    let mut out = String::new();
    let mut entries = Vec::new();
    for (file, result) in files.iter().zip(results) {
        match result {
            Ok(stats) => match format {
                Format::Json => entries.push(json!({ "file": file, "report": to_json(&stats) })),
                Format::Csv => match emit(&stats, format) {
                    Ok(csv) => out.push_str(&format!("# {file}\n{csv}\n")),
                    Err(f) => {
                        first_failure.get_or_insert(f);
                    }
                },
            },
            Err(f) => {
                if format == Format::Json {
                    entries.push(json!({ "file": file, "error": f.message }));
                }
                first_failure.get_or_insert(f);
            }
        }
    }
    if format == Format::Json {
        out = serde_json::to_string_pretty(&Json::Array(entries)).expect("serializable") + "\n";
    }
    (out, first_failure)
}

fn cmd_check(files: &[String]) -> (String, Option<Failure>) {
    let mut out = String::new();
    let mut failed = 0;
    for file in files {
        match load(file) {
            Ok(s) => {
                let labels = s.labels();
                out.push_str(&format!("{file}: ok ({} directives; outcomes: {})\n", s.directives().len(), labels.join(", ")));
            }
            Err(f) => {
                failed += 1;
                eprintln!("{}", f.message);
            }
        }
    }
    let failure = (failed > 0).then(|| Failure { code: 1, message: format!("{failed} of {} files failed", files.len()) });
    (out, failure)
}

fn parse_plan_entry(entry: &str, indices: usize) -> Result<(Vec<usize>, moments_core::qcore::Operator), Failure> {
    let parts: Vec<&str> = entry.splitn(indices + 1, ':').collect();
    if parts.len() != indices + 1 {
        return Err(format!("malformed plan entry `{entry}`").into());
    }
    let ks = parts[..indices]
        .iter()
        .map(|k| k.trim().parse::<usize>().map_err(|_| format!("bad spin index `{k}` in `{entry}`")))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = parse_observable_spec(parts[indices]).map_err(|e| format!("`{entry}`: {e}"))?;
    Ok((ks, spec.to_operator(2)?))
}

fn cmd_protocol(n: usize, psi: &str, singles: &[String], pairs: &[String]) -> Result<String, Failure> {
    let psi = parse_state_spec(psi).map_err(|e| format!("--psi: {e}"))?.to_state("s", 2)?;
    let mut plan = MeasurementPlan::default();
    for s in singles {
        let (ks, op) = parse_plan_entry(s, 1)?;
        plan.single_time.push((ks[0], op));
    }
    for p in pairs {
        let (ks, op) = parse_plan_entry(p, 2)?;
        plan.difference_pairs.push((ks[0], ks[1], op));
    }
    let inst = ProtocolInstance::new(n, psi.clone())?;
    let protocol = protocol_statistics(&inst, &plan)?;
    let oracle = single_spin_oracle(&psi, n, &plan)?;
    let baseline = product_state_baseline(&inst, &plan)?;
    let tv = protocol.total_variation(&oracle)?;
    let mut root = Map::new();
    root.insert("n".into(), json!(n));
    root.insert("equivalent".into(), json!(tv <= EQUIVALENCE_TV));
    root.insert("total_variation".into(), json!(tv));
    root.insert("baseline_total_variation".into(), json!(protocol.total_variation(&baseline)?));
    root.insert("protocol".into(), to_json(&protocol));
    root.insert("single_spin".into(), to_json(&oracle));
    root.insert("product_baseline".into(), to_json(&baseline));
    Ok(serde_json::to_string_pretty(&Json::Object(root)).expect("serializable") + "\n")
}

fn execute(command: Command) -> (String, Option<Failure>) {
    let single = |r: Result<String, Failure>| match r {
        Ok(out) => (out, None),
        Err(f) => (String::new(), Some(f)),
    };
    match command {
        Command::Run { files, sampling, output, max_dim } => cmd_run(&files, &sampling, output.format(), max_dim),
        Command::Epr { who, outcome, t1, t_mid, t2, sampling, output } => single((|| {
            let party = if who == "alice" { Party::Alice } else { Party::Bob };
            let s = epr_scenario(party, t1, t_mid, t2, outcome)?;
            emit(&run_scenario_capped(&s, &sampling.mode(None), DEFAULT_MAX_DIMENSION)?, output.format())
        })()),
        Command::DoubleLife { psi1, psi2, moments, observable, first, second, sampling, output } => single((|| {
            let p1 = parse_state_spec(&psi1).map_err(|e| format!("--psi1: {e}"))?;
            let p2 = parse_state_spec(&psi2).map_err(|e| format!("--psi2: {e}"))?;
            let obs = parse_observable_spec(&observable).map_err(|e| format!("--observable: {e}"))?;
            let s = double_life_scenario(&p1, &p2, moments, &obs, first, second)?;
            emit(&run_scenario_capped(&s, &sampling.mode(None), DEFAULT_MAX_DIMENSION)?, output.format())
        })()),
        Command::Protocol { n, psi, singles, pairs } => single(cmd_protocol(n, &psi, &singles, &pairs)),
        Command::Check { files } => cmd_check(&files),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (out, failure) = execute(cli.command);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            eprintln!("moments: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
