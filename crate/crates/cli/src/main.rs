//! Command-line front end: validate paths, trace eigenvalue braids, check
//! whole-interval continuation, and certify approximate unitary equivalence.
//!
//! Exit codes: 0 success, 1 internal/other failure, 2 input parse error,
//! 3 non-normal sample, 4 grid too coarse, 5 spectra mismatch,
//! 6 no feasible truncation rank, 7 certified bound violated.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectralloop::braid::{check_condition1, monodromy, trace_braid};
use spectralloop::equivalence::{certify_equivalence, strong_lift_path};
use spectralloop::generator::{descending_cascade_path, window_shift_loop_spec};
use spectralloop::io::{
    braid_to_csv, condition1_json, monodromy_report, path_to_file, residuals_to_csv, PathFile,
};
use spectralloop::sampling::{conjugate_path, random_unitary, rng_from_seed};
use spectralloop::{Error, OperatorPath, Tolerances};

#[derive(Parser)]
#[command(
    name = "spectralloop",
    about = "Spectral analysis of discretized normal operator paths and loops",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Path or generator file (JSON). Mutually exclusive with --example.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in example: "3.10" (window loop) or "3.11" (descending cascade).
    #[arg(long)]
    example: Option<String>,
    /// Half-width of the built-in window loop (example 3.10).
    #[arg(long, default_value_t = 4)]
    window: usize,
    /// Cascade depth (example 3.11).
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Use the repaired continuous hand-off segments (example 3.11).
    #[arg(long, default_value_t = false)]
    repair: bool,
    /// Grid size G (samples at g/G for g = 0..=G).
    #[arg(long, default_value_t = 256)]
    grid: usize,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Frame threshold: eigenvalues of modulus at or below it belong to the tail.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Output directory for report.json / braid.csv / residuals.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every sample: normality residuals, loop closure, tail bound.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trace the eigenvalue braid; emit tracks as CSV and the monodromy.
    Braid {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check whether every eigenvalue track covers the whole interval.
    CheckCond1 {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Certify approximate unitary equivalence of two loops.
    Equivalence {
        #[command(flatten)]
        input: InputArgs,
        /// Second loop; omit with --conjugate to compare against a seeded
        /// unitary conjugate of the first.
        #[arg(long)]
        input_b: Option<PathBuf>,
        /// Derive the second loop by conjugating the first with a seeded
        /// random unitary.
        #[arg(long, default_value_t = false)]
        conjugate: bool,
        /// Seed for the conjugating unitary.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Approximation index n: the certificate bound is 37/n.
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pointwise unitary lift of two spectra-matched paths over [0,1].
    Strong {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        input_b: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        conjugate: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print a built-in example as a path or generator file.
    DumpExample {
        #[command(flatten)]
        input: InputArgs,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Format(_) | Error::Expression(_) | Error::DiscontinuousSegment { .. } => 2,
        Error::NotNormal { .. } | Error::NonFinite | Error::NotSquare { .. } => 3,
        Error::RefineGrid { .. }
        | Error::ChartTooCoarse { .. }
        | Error::TransportBreakdown { .. } => 4,
        Error::SpectraMismatch { .. } | Error::MultiplicityViolation { .. } => 5,
        Error::NoFeasibleM(_) => 6,
        Error::BoundViolated { .. } => 7,
        _ => 1,
    }
}

fn load_path(input: &InputArgs, tol: &Tolerances) -> Result<OperatorPath, Error> {
    match (&input.input, &input.example) {
        (Some(file), None) => {
            let text = fs::read_to_string(file)
                .map_err(|e| Error::Format(format!("{}: {e}", file.display())))?;
            PathFile::from_json(&text)?.realize(input.grid, tol)
        }
        (None, Some(name)) => match name.as_str() {
            "3.10" | "window" => {
                let spec = window_shift_loop_spec(input.window);
                spectralloop::generator::evaluate_generator(&spec, input.grid, tol)
            }
            "3.11" | "cascade" => {
                descending_cascade_path(input.depth, input.grid, input.repair, tol)
            }
            other => Err(Error::Format(format!(
                "unknown example '{other}'; use 3.10 or 3.11"
            ))),
        },
        (Some(_), Some(_)) => Err(Error::Format(
            "--input and --example are mutually exclusive".to_string(),
        )),
        (None, None) => Err(Error::Format(
            "one of --input or --example is required".to_string(),
        )),
    }
}

fn load_pair(
    input: &InputArgs,
    input_b: &Option<PathBuf>,
    conjugate: bool,
    seed: u64,
    tol: &Tolerances,
) -> Result<(OperatorPath, OperatorPath), Error> {
    let a = load_path(input, tol)?;
    let b = match (input_b, conjugate) {
        (Some(file), false) => {
            let text = fs::read_to_string(file)
                .map_err(|e| Error::Format(format!("{}: {e}", file.display())))?;
            PathFile::from_json(&text)?.realize(input.grid, tol)?
        }
        (None, true) => {
            let mut rng = rng_from_seed(seed);
            let v = random_unitary(&mut rng, a.dim());
            conjugate_path(&a, &v, tol)?
        }
        (Some(_), true) => {
            return Err(Error::Format(
                "--input-b and --conjugate are mutually exclusive".to_string(),
            ))
        }
        (None, false) => {
            return Err(Error::Format(
                "provide --input-b or --conjugate".to_string(),
            ))
        }
    };
    Ok((a, b))
}

/// Print without panicking when the pipe closes early (e.g. under `head`).
fn print_stdout(contents: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{contents}");
}

fn write_or_print(out: &Option<PathBuf>, name: &str, contents: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::Format(e.to_string()))?;
            let p = dir.join(name);
            fs::write(&p, contents).map_err(|e| Error::Format(e.to_string()))?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            print_stdout(contents);
            Ok(())
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    let tol = Tolerances::default();
    match cli.command {
        Command::Validate { input, common } => {
            let path = load_path(&input, &tol)?;
            let report = serde_json::json!({
                "dim": path.dim(),
                "grid": path.grid,
                "loop": path.is_loop,
                "tail_bound": path.tail_bound,
                "max_normality_residual": path.samples.iter()
                    .map(|s| s.normality_residual).fold(0.0_f64, f64::max),
                "closure_gap": path.closure_gap(),
                "max_step_gap": path.max_step_gap(),
                "max_norm": path.max_norm(),
            });
            write_or_print(
                &common.out,
                "report.json",
                &serde_json::to_string_pretty(&report).unwrap(),
            )
        }
        Command::Braid { input, common } => {
            let path = load_path(&input, &tol)?;
            let braid = trace_braid(&path, common.threshold, &tol)?;
            let csv = braid_to_csv(&braid);
            let mono = monodromy(&braid)
                .map(|p| serde_json::to_value(monodromy_report(&p)).unwrap())
                .unwrap_or(serde_json::Value::Null);
            let report = serde_json::json!({
                "tracks": braid.tracks.len(),
                "full_tracks": braid.full_tracks(),
                "loop": braid.is_loop,
                "threshold": braid.threshold,
                "monodromy": mono,
            });
            match &common.out {
                Some(_) => {
                    write_or_print(&common.out, "braid.csv", &csv)?;
                    write_or_print(
                        &common.out,
                        "report.json",
                        &serde_json::to_string_pretty(&report).unwrap(),
                    )
                }
                None => {
                    print_stdout(&serde_json::to_string_pretty(&report).unwrap());
                    Ok(())
                }
            }
        }
        Command::CheckCond1 { input, common } => {
            let path = load_path(&input, &tol)?;
            let braid = trace_braid(&path, common.threshold, &tol)?;
            let report = condition1_json(&check_condition1(&braid));
            write_or_print(
                &common.out,
                "report.json",
                &serde_json::to_string_pretty(&report).unwrap(),
            )
        }
        Command::Equivalence {
            input,
            input_b,
            conjugate,
            seed,
            n,
            common,
        } => {
            let (a, b) = load_pair(&input, &input_b, conjugate, seed, &tol)?;
            let run = certify_equivalence(&a, &b, n, common.threshold, &tol)?;
            let report = serde_json::to_string_pretty(&run.report).unwrap();
            if common.out.is_some() {
                write_or_print(
                    &common.out,
                    "residuals.csv",
                    &residuals_to_csv(run.report.grid, &run.report.residuals),
                )?;
            }
            write_or_print(&common.out, "report.json", &report)?;
            if run.report.success {
                Ok(())
            } else {
                Err(Error::BoundViolated {
                    measured: run.report.max_residual,
                    target: run.report.target,
                })
            }
        }
        Command::Strong {
            input,
            input_b,
            conjugate,
            seed,
            common,
        } => {
            let (a, b) = load_pair(&input, &input_b, conjugate, seed, &tol)?;
            let lift = strong_lift_path(&a, &b, common.threshold, &tol)?;
            let report = serde_json::json!({
                "grid": a.grid,
                "max_residual": lift.max_residual,
                "tail_allowance": 2.0 * (a.tail_bound + b.tail_bound),
            });
            if common.out.is_some() {
                write_or_print(
                    &common.out,
                    "residuals.csv",
                    &residuals_to_csv(a.grid, &lift.residuals),
                )?;
            }
            write_or_print(
                &common.out,
                "report.json",
                &serde_json::to_string_pretty(&report).unwrap(),
            )
        }
        Command::DumpExample { input } => match input.example.as_deref() {
            Some("3.10") | Some("window") => {
                let spec = window_shift_loop_spec(input.window);
                print_stdout(&(PathFile::Generator { generator: spec }).to_json());
                Ok(())
            }
            Some("3.11") | Some("cascade") => {
                let tol = Tolerances::default();
                let path = descending_cascade_path(input.depth, input.grid, input.repair, &tol)?;
                print_stdout(&(PathFile::Samples(path_to_file(&path))).to_json());
                Ok(())
            }
            _ => Err(Error::Format(
                "dump-example needs --example 3.10 or 3.11".to_string(),
            )),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
