//! `rtm`: runs self-healing scenarios against the simulated web shop and
//! inspects its models.
//!
//! Exit codes: 0 on success, 1 when an assertion or check fails, 2 on usage
//! errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rtm_core::adaptation::AdaptationSession;
use rtm_core::dsl::parse_rules;
use rtm_core::kernel::Value;
use rtm_core::manager::fixture::webshop_container;
use rtm_core::manager::scenario::parse_script;
use rtm_core::manager::{run_self_healing, HealingPolicy};
use rtm_core::metamodels::{build_source_metamodel, build_target_metamodel};
use rtm_core::platform::CallOutcome;
use rtm_core::tgg::Direction;

#[derive(Debug, Parser)]
#[command(name = "rtm", version, about = "Runtime-model self-healing driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs a scenario script against a fresh web shop and prints the step log.
    RunScenario {
        script: PathBuf,
        /// Failures on one provided interface that trigger a replacement.
        #[arg(long, default_value_t = 3)]
        threshold: u64,
        /// Writes the full trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Seed for random call stimuli.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prints one model of the web shop, optionally after running a script.
    Dump {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Script to run before dumping.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
    },
    /// Injects failing calls through a provided interface of the web shop and
    /// prints the resulting failures.
    InjectFailure {
        /// Interface name, such as IWarehousing.
        interface: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "LookupFailure")]
        exception: String,
    },
    /// Writes attributes on the origin side of the synchronized web shop and
    /// propagates them in one synchronization. Prints the report.
    Sync {
        #[arg(long, value_enum)]
        direction: Dir,
        /// `UID[@ATTR]=VALUE` written to the source (fwd) or target (bwd) model. ATTR defaults to `value`.
        #[arg(long = "set", value_parser = parse_assignment)]
        sets: Vec<(String, String)>,
    },
    /// Checks a rule file against the built-in metamodels.
    Validate { rules: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Source,
    Target,
    Corr,
    Container,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dir {
    Fwd,
    Bwd,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected UID=VALUE, got {s}"))
}

/// Writes one line to stdout. A closed pipe ends output silently.
fn emit(line: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

/// A failed run: exit code and message.
struct Failure(u8, String);

fn usage(e: impl ToString) -> Failure {
    Failure(2, e.to_string())
}

fn failed(e: impl ToString) -> Failure {
    Failure(1, e.to_string())
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn policy(threshold: u64) -> Result<HealingPolicy, Failure> {
    HealingPolicy::new(threshold).map_err(usage)
}

fn run_scenario(
    script: &PathBuf,
    threshold: u64,
    trace: Option<&PathBuf>,
    seed: u64,
) -> Result<(), Failure> {
    let script = parse_script(&read(script)?).map_err(usage)?;
    let result = run_self_healing(policy(threshold)?, &script, seed).map_err(failed)?;
    for s in &result.steps {
        let commands: Vec<&str> = s
            .batch
            .iter()
            .flat_map(|b| b.commands.iter().map(|c| c.name()))
            .collect();
        emit(format_args!(
            "step {:>2} {} {} [{}]",
            s.step,
            s.operator,
            s.args.join(" "),
            commands.join(", ")
        ));
    }
    for a in result.assertions.iter().filter(|a| !a.passed) {
        emit(format_args!("FAILED {}: {}", a.name, a.detail));
    }
    let passed = result.assertions.iter().filter(|a| a.passed).count();
    emit(format_args!(
        "{passed} of {} assertions passed",
        result.assertions.len()
    ));
    if let Some(path) = trace {
        fs::write(path, result.trace_json())
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    if result.passed {
        Ok(())
    } else {
        Err(Failure(1, "scenario failed".into()))
    }
}

fn dump(which: Which, script: Option<&PathBuf>, threshold: u64) -> Result<(), Failure> {
    let [target, source, corr, container] = match script {
        Some(path) => {
            let script = parse_script(&read(path)?).map_err(usage)?;
            let r = run_self_healing(policy(threshold)?, &script, 0).map_err(failed)?;
            [
                r.final_target,
                r.final_source,
                r.final_corr,
                r.final_container,
            ]
        }
        None => AdaptationSession::attach(webshop_container())
            .map_err(failed)?
            .dumps(),
    };
    let doc = match which {
        Which::Source => source,
        Which::Target => target,
        Which::Corr => corr,
        Which::Container => container,
    };
    emit(serde_json::to_string_pretty(&doc).expect("dump serializes"));
    Ok(())
}

fn inject_failure(interface: &str, count: usize, exception: &str) -> Result<(), Failure> {
    let mut session = AdaptationSession::attach(webshop_container()).map_err(failed)?;
    let module = session
        .target()
        .elements_of_type("Component")
        .find(|c| {
            c.slot("provided")
                .iter()
                .any(|i| session.target().text(i, "name") == Some(interface))
        })
        .and_then(|c| c.text("name"))
        .map(str::to_string)
        .ok_or_else(|| usage(format!("no component provides {interface}")))?;
    for _ in 0..count {
        session
            .container_mut()
            .inject_call(
                &module,
                interface,
                CallOutcome::Exception(exception.to_string()),
            )
            .map_err(failed)?;
    }
    session.monitor().map_err(failed)?;
    let t = session.target();
    let failures: Vec<serde_json::Value> = t
        .elements_of_type("Failure")
        .map(|f| {
            serde_json::json!({
                "failure": f.uid,
                "interface": t.parent(&f.uid).map(|(i, _)| i),
                "exception_type": f.text("exception_type"),
                "count": f.attr("count").and_then(Value::as_int),
            })
        })
        .collect();
    emit(serde_json::to_string_pretty(&failures).expect("failures serialize"));
    Ok(())
}

fn sync(direction: Dir, sets: &[(String, String)]) -> Result<(), Failure> {
    let session = AdaptationSession::attach(webshop_container()).map_err(failed)?;
    let mut engine = session.engine().clone();
    let direction = match direction {
        Dir::Fwd => Direction::Forward,
        Dir::Bwd => Direction::Backward,
    };
    for (uid, value) in sets {
        let (model_uid, attr) = match uid.rsplit_once('@') {
            Some((u, a)) => (u, a),
            None => (uid.as_str(), "value"),
        };
        let model = match direction {
            Direction::Forward => engine.source_mut(),
            Direction::Backward => engine.target_mut(),
        };
        model
            .set_attribute(model_uid, attr, Value::text(value))
            .map_err(|e| usage(format!("{uid}: {e}")))?;
    }
    let report = engine.synchronize(direction).map_err(failed)?;
    emit(serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn validate(path: &PathBuf) -> Result<(), Failure> {
    let text = read(path)?;
    match parse_rules(&text, &build_source_metamodel(), &build_target_metamodel()) {
        Ok(doc) => {
            emit(format_args!("{} rules OK", doc.rules.len()));
            Ok(())
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{}:{d}", path.display());
            }
            Err(failed(format!("{} diagnostics", diags.len())))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunScenario {
            script,
            threshold,
            trace,
            seed,
        } => run_scenario(script, *threshold, trace.as_ref(), *seed),
        Command::Dump {
            which,
            format: Format::Json,
            script,
            threshold,
        } => dump(*which, script.as_ref(), *threshold),
        Command::InjectFailure {
            interface,
            count,
            exception,
        } => inject_failure(interface, *count, exception),
        Command::Sync { direction, sets } => sync(*direction, sets),
        Command::Validate { rules } => validate(rules),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("rtm: {message}");
            ExitCode::from(code)
        }
    }
}
