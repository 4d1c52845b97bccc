//! Command-line frontend: parse constraint scripts, bit-blast, solve, run
//! differential sweeps, print the feature matrix, and reproduce the
//! 0.1 + 0.2 demonstration.
//!
//! Exit codes follow the SAT-solver convention: 10 sat, 20 unsat,
//! 0 unknown/success, 1 error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use fpblast::backend::{emit_dimacs, emit_smtlib, solve, Engine, Query};
use fpblast::bitvec::{BvValue, SatStatus};
use fpblast::difftest::{run_sweep, SweepOp, SweepOptions};
use fpblast::fpformat::{FpFormat, RoundingMode};
use fpblast::oracle;
use fpblast::script::{elaborate, parse_script, Elaboration};

#[derive(Parser)]
#[command(
    name = "fpblast",
    about = "Bit-blast IEEE-754 floating-point constraints to bit-vector circuits and solve them",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a script, blast its assertions, and check satisfiability.
    Check {
        /// Script file (s-expression constraint language).
        file: PathBuf,
        /// Engine: `brute`, `smt:<path>`, or `sat:<path>`. Defaults to the
        /// FPBLAST_SOLVER environment variable (as smt:<path>) or `brute`.
        #[arg(long)]
        engine: Option<String>,
        /// Solver timeout in milliseconds.
        #[arg(long, default_value_t = 60_000)]
        timeout: u64,
    },
    /// Blast a script and write the result to a file.
    Blast {
        file: PathBuf,
        /// Output format.
        #[arg(long, value_enum)]
        to: BlastTarget,
        /// Output path.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Differentially test the circuits against the exact oracle.
    Difftest {
        /// Format as `eb,sb` (for example `4,3` or `5,10`).
        #[arg(long)]
        format: String,
        /// Comma-separated operator list (default: all).
        #[arg(long)]
        ops: Option<String>,
        /// Comma-separated rounding modes (default: all five).
        #[arg(long)]
        modes: Option<String>,
        /// Samples per operator and mode (default: exhaustive for 8-bit
        /// formats; required for larger binary sweeps).
        #[arg(long)]
        samples: Option<u64>,
        /// Seed for sampled sweeps.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the 0.1 + 0.2 demonstration with exact decimal expansions.
    DemoFig1,
    /// Print the supported-feature matrix.
    Features {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BlastTarget {
    Smtlib,
    Dimacs,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Check {
            file,
            engine,
            timeout,
        } => cmd_check(&file, engine.as_deref(), timeout),
        Cmd::Blast { file, to, out } => cmd_blast(&file, to, &out),
        Cmd::Difftest {
            format,
            ops,
            modes,
            samples,
            seed,
        } => cmd_difftest(&format, ops.as_deref(), modes.as_deref(), samples, seed),
        Cmd::DemoFig1 => {
            print!("{}", fpblast::demo::fig1_report());
            Ok(ExitCode::from(0))
        }
        Cmd::Features { json } => {
            if json {
                print!("{}", fpblast::features::render_json());
            } else {
                print!("{}", fpblast::features::render_text());
            }
            Ok(ExitCode::from(0))
        }
    }
}

fn load_script(file: &PathBuf) -> Result<Elaboration, String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {}", file.display(), e))?;
    let script = parse_script(&text).map_err(|e| format!("{}: {}", file.display(), e))?;
    let el = elaborate(&script).map_err(|e| format!("{}: {}", file.display(), e))?;
    for warning in &el.warnings {
        eprintln!("warning: {}", warning);
    }
    Ok(el)
}

fn parse_engine(engine: Option<&str>) -> Result<Engine, String> {
    let from_env;
    let spec = match engine {
        Some(s) => s,
        None => match std::env::var("FPBLAST_SOLVER") {
            Ok(path) if !path.is_empty() => {
                from_env = format!("smt:{}", path);
                &from_env
            }
            _ => "brute",
        },
    };
    if spec == "brute" {
        return Ok(Engine::default());
    }
    if let Some(path) = spec.strip_prefix("smt:") {
        return Ok(Engine::ExternalSmt {
            path: path.to_string(),
        });
    }
    if let Some(path) = spec.strip_prefix("sat:") {
        return Ok(Engine::ExternalSat {
            path: path.to_string(),
        });
    }
    Err(format!(
        "unknown engine `{}` (expected brute, smt:<path>, or sat:<path>)",
        spec
    ))
}

fn print_model_value(name: &str, value: &BvValue, format: Option<FpFormat>) {
    let bits = format!("#b{}", value.to_bin_string());
    let hex = format!("#x{}", value.to_hex_string());
    match format {
        Some(f) => {
            let decoded = oracle::decode(&value.value, f);
            let shown = match &decoded {
                oracle::OracleValue::PosInf => "+inf".to_string(),
                oracle::OracleValue::NegInf => "-inf".to_string(),
                oracle::OracleValue::Nan => "NaN".to_string(),
                oracle::OracleValue::Finite { .. } => {
                    oracle::exact_decimal(&value.value, f).expect("finite value")
                }
            };
            println!("  {} = {} {} {}", name, bits, hex, shown);
        }
        None => println!("  {} = {} {}", name, bits, hex),
    }
}

fn cmd_check(file: &PathBuf, engine: Option<&str>, timeout_ms: u64) -> Result<ExitCode, String> {
    let el = load_script(file)?;
    for (source, _value, result) in &el.evals {
        println!("eval {} = #b{}", source, result.to_bin_string());
    }
    if !el.has_check {
        return Err("script has no (check) command".to_string());
    }
    let engine = parse_engine(engine)?;
    let result =
        solve(&el.query, &engine, Duration::from_millis(timeout_ms)).map_err(|e| e.to_string())?;
    println!("{}", result.status);
    match result.status {
        SatStatus::Sat => {
            let model = result.model.expect("sat implies model");
            for (name, format) in &el.fp_vars {
                if let Some(v) = model.get(name) {
                    print_model_value(name, v, Some(*format));
                }
            }
            for (name, _) in &el.bv_vars {
                if let Some(v) = model.get(name) {
                    print_model_value(name, v, None);
                }
            }
            Ok(ExitCode::from(10))
        }
        SatStatus::Unsat => Ok(ExitCode::from(20)),
        SatStatus::Unknown => {
            if let Some(note) = result.note {
                eprintln!("note: {}", note);
            }
            Ok(ExitCode::from(0))
        }
    }
}

fn query_stats(q: &Query) -> String {
    format!(
        "nodes: {}, free bits: {}, assertions: {}",
        q.node_count(),
        q.free_bits(),
        q.assertions().len()
    )
}

fn cmd_blast(file: &PathBuf, to: BlastTarget, out: &PathBuf) -> Result<ExitCode, String> {
    let el = load_script(file)?;
    let text = match to {
        BlastTarget::Smtlib => emit_smtlib(&el.query),
        BlastTarget::Dimacs => emit_dimacs(&el.query).map_err(|e| e.to_string())?,
    };
    std::fs::write(out, text).map_err(|e| format!("cannot write {}: {}", out.display(), e))?;
    println!("wrote {} ({})", out.display(), query_stats(&el.query));
    Ok(ExitCode::from(0))
}

fn cmd_difftest(
    format: &str,
    ops: Option<&str>,
    modes: Option<&str>,
    samples: Option<u64>,
    seed: u64,
) -> Result<ExitCode, String> {
    let (eb, sb) = format
        .split_once(',')
        .ok_or_else(|| format!("--format expects `eb,sb`, got `{}`", format))?;
    let eb: u32 = eb.trim().parse().map_err(|_| "bad exponent bit count")?;
    let sb: u32 = sb.trim().parse().map_err(|_| "bad significand bit count")?;
    let fp_format = FpFormat::new(eb, sb).map_err(|e| e.to_string())?;

    let mut opts = SweepOptions::new(fp_format);
    opts.samples = samples;
    opts.seed = seed;
    if let Some(list) = ops {
        opts.ops = list
            .split(',')
            .map(|name| SweepOp::from_name(name.trim()).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(list) = modes {
        opts.modes = list
            .split(',')
            .map(|name| {
                RoundingMode::from_name(name.trim())
                    .ok_or_else(|| format!("unknown rounding mode `{}`", name))
            })
            .collect::<Result<Vec<_>, _>>()?;
    }

    let report = run_sweep(&opts).map_err(|e| e.to_string())?;
    print!("{}", report.render());
    if report.total_mismatches() > 0 {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::from(0))
    }
}
