use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use petz_core::dqc::plan_dqc;
use petz_core::harness::{self, Backend, SweepConfig, VerifyOptions};
use petz_core::nmr::{self, SpinSystem};
use petz_core::petz::ChannelFamily;
use petz_core::{Error, KrausChannel};

#[derive(Parser)]
#[command(name = "petz", version, about = "Petz recovery of damped qubits: sweeps, circuit compilation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Ad,
    Pd,
}

impl From<ChannelArg> for ChannelFamily {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Ad => ChannelFamily::Ad,
            ChannelArg::Pd => ChannelFamily::Pd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Kraus,
    Dqc,
    Pulses,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Kraus => Backend::Kraus,
            BackendArg::Dqc => Backend::Dqc,
            BackendArg::Pulses => Backend::Pulses,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Pulses,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity sweep over channel strength; writes CSV and SVG into --out.
    Sweep {
        #[arg(long, value_enum)]
        channel: ChannelArg,
        /// key = value file overriding the default grid and states.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile the damping and recovery maps to DQC programs or pulses.
    Compile {
        #[arg(long, value_enum, required_unless_present = "kraus")]
        channel: Option<ChannelArg>,
        #[arg(long, required_unless_present = "kraus")]
        p: Option<f64>,
        #[arg(long, required_unless_present = "kraus")]
        eps: Option<f64>,
        /// Compile a channel stored as JSON instead of a built-in pair.
        #[arg(long, conflicts_with_all = ["channel", "p", "eps", "emit"])]
        kraus: Option<PathBuf>,
        /// Print the V, W, U and Ũ matrices.
        #[arg(long, conflicts_with = "emit")]
        dump: bool,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
    },
    /// Run every invariant check; exits 1 on any failure.
    Verify {
        /// Replace every check's tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print a damping channel or its recovery map as JSON.
    Export {
        #[arg(long, value_enum)]
        channel: ChannelArg,
        #[arg(long)]
        p: f64,
        /// Export the closed-form recovery map for this ε.
        #[arg(long)]
        eps: Option<f64>,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn write_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Failure classes mapped to exit codes.
enum Failure {
    Verification,
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::OutOfRange { .. } | Error::Parse(_) | Error::Json(_) => Failure::Config(e),
            Error::Io { .. } => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn sweep(channel: ChannelFamily, config: Option<PathBuf>, backend: Option<Backend>, out: PathBuf) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(path) => SweepConfig::from_file(&path, Some(channel))?,
        None => SweepConfig::default_for(channel),
    };
    if let Some(b) = backend {
        cfg.backend = b;
    }
    let cfg = cfg.validate()?;
    let records = harness::run_sweep(&cfg)?;
    std::fs::create_dir_all(&out).map_err(|e| Failure::Config(Error::Config(format!("{}: {e}", out.display()))))?;
    let stem = format!("sweep_{}_{}", cfg.channel, cfg.backend);
    let csv = out.join(format!("{stem}.csv"));
    let svg = out.join(format!("{stem}.svg"));
    harness::emit_csv(&records, &csv).map_err(Failure::Runtime)?;
    harness::emit_plot(&records, &svg).map_err(Failure::Runtime)?;
    write_stdout(&format!("{} records -> {}\nplot -> {}\n", records.len(), csv.display(), svg.display()));
    Ok(())
}

fn compile_builtin(family: ChannelFamily, p: f64, eps: f64, dump: bool, emit: Option<Emit>) -> Result<(), Failure> {
    if emit.is_some() {
        let seq = nmr::compile_experiment(family, &SpinSystem::default(), p, eps)?;
        write_stdout(&seq.export());
        return Ok(());
    }
    let (damping, recovery) = nmr::experiment_programs(family, p, eps)?;
    for prog in [&damping, &recovery] {
        if dump {
            write_stdout(&prog.dump());
        } else {
            write_stdout(&format!(
                "{}: U = ({}, {}), Ut = ({}, {})\n",
                prog.label, prog.u[0], prog.u[1], prog.u_tilde[0], prog.u_tilde[1]
            ));
        }
    }
    Ok(())
}

fn compile_file(path: &PathBuf) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(Error::Config(format!("{}: {e}", path.display()))))?;
    let channel: KrausChannel = harness::channel_from_json(&text)?;
    let prog = plan_dqc(&channel)?;
    write_stdout(&prog.dump());
    write_stdout(&format!("# choi distance {:.3e}\n", petz_core::dqc::verify(&prog, &channel)?));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            channel,
            config,
            backend,
            out,
        } => sweep(channel.into(), config, backend.map(Into::into), out),
        Command::Compile {
            channel,
            p,
            eps,
            kraus,
            dump,
            emit,
        } => match (kraus, channel, p, eps) {
            (Some(path), ..) => compile_file(&path),
            (None, Some(c), Some(p), Some(eps)) => compile_builtin(c.into(), p, eps, dump, emit),
            _ => Err(Failure::Config(Error::Config("--channel, --p and --eps are required".into()))),
        },
        Command::Verify { tol } => {
            if let Some(t) = tol {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Failure::Config(Error::Config(format!("tolerance {t} must be positive"))));
                }
            }
            let report = harness::verify_all(&VerifyOptions {
                tolerance_override: tol,
                ..VerifyOptions::default()
            });
            write_stdout(&format!("{report}\n"));
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Export { channel, p, eps } => {
            let family: ChannelFamily = channel.into();
            let ch = match eps {
                Some(e) => family.recovery(p, e)?,
                None => family.damping(p)?,
            };
            write_stdout(&format!("{}\n", harness::channel_to_json(&ch)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
