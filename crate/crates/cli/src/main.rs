use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flrw_dirac::blowup::BlowupCase;
use flrw_dirac_cli::commands::{self, KernelKind, KernelTableArgs};
use flrw_dirac_cli::{init_threads, CliError, CliResult};
use num_complex::Complex64;

/// Dirac fields on power-law FLRW backgrounds.
#[derive(Parser)]
#[command(name = "flrw-dirac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML config and write `record.json`.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides `outputs.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite of diagnostics checks against a run record.
    Verify {
        record: PathBuf,
        suite: PathBuf,
        /// Where to write the JSON report (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tabulate kernels or reconstruct a free solution.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Classify and bound lifespans over a parameter grid; writes CSV.
    Sweep {
        config: PathBuf,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lifespan bound for one case, as JSON.
    Lifespan {
        #[arg(long)]
        ell: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        im_m: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        /// Initial support radius.
        #[arg(long)]
        r: f64,
        /// Initial energy.
        #[arg(long)]
        e1: f64,
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
    },
    /// Blow-up regime of `(ell, alpha, |Im m|)`, as JSON.
    Classify {
        #[arg(long)]
        ell: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        im_m: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    K1,
    E,
}

#[derive(Subcommand)]
enum KernelAction {
    /// CSV with columns r,t,t0_or_eps,re,im.
    Table {
        #[arg(long)]
        ell: f64,
        #[arg(long, default_value_t = 0.0)]
        m_re: f64,
        #[arg(long, default_value_t = 0.0)]
        m_im: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "k1")]
        kernel: KernelArg,
        /// Evaluation times (repeatable).
        #[arg(long = "t", required = true)]
        times: Vec<f64>,
        /// Base time of the E kernel.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 21)]
        r_points: usize,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free solution at `t` from a snapshot taken at `ε`.
    Reconstruct {
        #[arg(long)]
        ell: f64,
        #[arg(long, default_value_t = 0.0)]
        m_re: f64,
        #[arg(long, default_value_t = 0.0)]
        m_im: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::runtime(e).context(format!("writing {}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate { config, out } => {
            let s = commands::simulate(&config, out.as_deref())?;
            match s.blowup {
                Some(b) => println!(
                    "blow-up detected at t = {} ({:?}); {} records written to {}",
                    b.t_blowup,
                    b.reason,
                    s.records,
                    s.record_path.display()
                ),
                None => println!(
                    "{} steps, {} records written to {}",
                    s.steps,
                    s.records,
                    s.record_path.display()
                ),
            }
        }
        Command::Verify {
            record,
            suite,
            report,
        } => {
            let r = commands::verify(&record, &suite)?;
            emit(&json(&r)?, report.as_ref())?;
            if !r.passed {
                return Err(CliError::verification(format!(
                    "failed checks: {}",
                    r.failed_checks().join(", ")
                )));
            }
        }
        Command::Kernel { action } => match action {
            KernelAction::Table {
                ell,
                m_re,
                m_im,
                epsilon,
                kernel,
                times,
                t0,
                r_points,
                out,
            } => {
                let args = KernelTableArgs {
                    ell,
                    mass: Complex64::new(m_re, m_im),
                    epsilon,
                    kind: match kernel {
                        KernelArg::K1 => KernelKind::K1,
                        KernelArg::E => KernelKind::E,
                    },
                    times,
                    t0,
                    r_points,
                };
                emit(&commands::kernel_table(&args)?, out.as_ref())?;
            }
            KernelAction::Reconstruct {
                ell,
                m_re,
                m_im,
                t,
                input,
                output,
            } => {
                let audit = commands::kernel_reconstruct(
                    ell,
                    Complex64::new(m_re, m_im),
                    t,
                    &input,
                    &output,
                )?;
                println!(
                    "wrote {} (derivative audit mismatch {audit:.3e})",
                    output.display()
                );
            }
        },
        Command::Sweep { config, out } => {
            let cfg = flrw_dirac_cli::config::SweepConfig::load(&config)?;
            let rows = commands::sweep(&cfg)?;
            emit(&commands::sweep_csv(&rows), out.as_ref())?;
        }
        Command::Lifespan {
            ell,
            alpha,
            im_m,
            c0,
            r,
            e1,
            a0,
        } => {
            let mut case = BlowupCase::new(ell, alpha, im_m.abs(), c0, r, e1);
            case.a0 = a0;
            emit(&json(&commands::lifespan(&case)?)?, None)?;
        }
        Command::Classify { ell, alpha, im_m } => {
            emit(&json(&commands::classify(ell, alpha, im_m)?)?, None)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
