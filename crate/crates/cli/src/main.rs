mod args;
mod report;

use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use weaktrace::evolution::Scenario;
use weaktrace::exec::Execution;
use weaktrace::scendsl::{builtin_scenario, parse_scenario, serialize, validate, FIG1_SOURCE, FIG2_SOURCE};
use weaktrace::trace::trace_scenario;
use weaktrace::weakmeas::{slot_weak_values, weak_limit_sweep_with, PointerSpec};
use weaktrace::Error;

use args::{Cli, Command, Format};
use report::{scenario_hash, RunReport};

enum Failure {
    /// Bad flags or flag values.
    Usage(String),
    /// Unreadable, unparsable or invalid scenario.
    Scenario(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Scenario(_) => 2,
        }
    }
}

fn scenario_error(origin: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::InvalidSweep(_) | Error::InvalidThreshold(_) | Error::InvalidPointer { .. } => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Scenario(format!("{origin}: {e}")),
    }
}

/// Resolves a scenario argument: `-` reads stdin, an existing path is read
/// as a file, otherwise a built-in name is tried.
fn load(arg: &str) -> Result<Scenario, Failure> {
    let (origin, text) = if arg == "-" {
        let mut buf = String::new();
        io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::Scenario(format!("<stdin>: {e}")))?;
        ("<stdin>".to_string(), buf)
    } else if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).map_err(|e| Failure::Scenario(format!("{arg}: {e}")))?;
        (arg.to_string(), text)
    } else if let Ok(s) = builtin_scenario(arg) {
        return Ok(s);
    } else {
        return Err(Failure::Scenario(format!("{arg}: no such file or built-in scenario")));
    };
    parse_scenario(&text).map_err(|e| Failure::Scenario(format!("{origin}:{e}")))
}

fn canonical(s: &Scenario) -> Result<String, Failure> {
    serialize(s).map_err(|e| Failure::Scenario(e.to_string()))
}

fn base_report(s: &Scenario) -> Result<RunReport, Failure> {
    let err = scenario_error(s.name());
    let values = slot_weak_values(s, Execution::default()).map_err(&err)?;
    RunReport::new(s, &canonical(s)?, values).map_err(&err)
}

fn run(cli: Cli) -> Result<String, Failure> {
    let format = cli.format;
    match cli.command {
        Command::Weakvalues { scenario } => {
            let s = load(&scenario)?;
            let r = base_report(&s)?;
            Ok(match format {
                Format::Table => r.weak_value_table(),
                Format::Json => r.to_json(),
            })
        }
        Command::Trace { scenario, threshold } => {
            let s = load(&scenario)?;
            let mut r = base_report(&s)?;
            r.trace = Some(trace_scenario(&s, threshold).map_err(scenario_error(s.name()))?);
            Ok(match format {
                Format::Table => r.trace_table(),
                Format::Json => r.to_json(),
            })
        }
        Command::Sweep {
            scenario,
            arm,
            g,
            width,
        } => {
            let s = load(&scenario)?;
            let mut r = base_report(&s)?;
            for a in &arm {
                if !s.basis().contains(a) {
                    return Err(Failure::Usage(format!("--arm {a}: not a mode of {}", s.name())));
                }
                let pointer = PointerSpec::at_slot(&s, a, 0.0)
                    .map_err(scenario_error(s.name()))?
                    .with_width(width);
                let sweep =
                    weak_limit_sweep_with(&s, &pointer, &g, Execution::default()).map_err(scenario_error(s.name()))?;
                r.sweeps.push(sweep);
            }
            Ok(match format {
                Format::Table => r.sweep_table(),
                Format::Json => r.to_json(),
            })
        }
        Command::Builtin { name } => {
            let text = if name == "fig1" { FIG1_SOURCE } else { FIG2_SOURCE };
            Ok(match format {
                Format::Table => text.to_string(),
                Format::Json => {
                    let s = builtin_scenario(&name).map_err(scenario_error(&name))?;
                    let doc = serde_json::json!({
                        "scenario": name,
                        "scenario_hash": scenario_hash(&canonical(&s)?),
                        "source": text,
                    });
                    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
                }
            })
        }
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| Failure::Scenario(format!("{file}: {e}")))?;
            let s = parse_scenario(&text).map_err(|e| Failure::Scenario(format!("{file}:{e}")))?;
            let diags = validate(&s);
            if !diags.is_empty() {
                let all: Vec<String> = diags.iter().map(|d| format!("{file}: {}", d.message)).collect();
                return Err(Failure::Scenario(all.join("\n")));
            }
            let hash = scenario_hash(&canonical(&s)?);
            Ok(match format {
                Format::Table => format!(
                    "ok: {} ({} modes, {} stages, {} slots)\n",
                    s.name(),
                    s.basis().modes().len(),
                    s.stages().len(),
                    s.slots().len()
                ),
                Format::Json => {
                    let doc = serde_json::json!({
                        "scenario": s.name(),
                        "scenario_hash": hash,
                        "valid": true,
                        "modes": s.basis().modes(),
                        "stages": s.stages().len(),
                        "slots": s.slots().len(),
                    });
                    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Scenario(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
