use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fpmr_cli::commands::{cmd_reference, cmd_report, cmd_study, RunSettings};
use fpmr_cli::config::{parse_exponents, Config};
use fpmr_core::greedy::StudyMethod;
use fpmr_core::{Error, Result};

/// Model reduction toolkit for 1D kinetic transport: full-model reference
/// runs, reduced moment models with Legendre or greedily adapted velocity
/// bases, and error reports across mesh widths.
#[derive(Parser)]
#[command(name = "fpmr", version)]
struct Cli {
    /// TOML config file; command line flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Problem to solve: "sourcebeam" (built in) or "custom" (from config)
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Output directory for all artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// CFL number in (0, 1]
    #[arg(long, global = true)]
    cfl: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the full kinetic model at the reference and study meshes and
    /// record the discretization errors of the coarse solves
    Reference {
        /// Mesh exponents, e.g. "3,4,5" or "3..7"
        #[arg(long)]
        h_exponents: Option<String>,
        /// Exponent of the fine mesh the errors are measured against
        #[arg(long)]
        ref_exponent: Option<u32>,
    },
    /// Error study for Legendre moment models of order 1..=m_max
    Legendre {
        /// Mesh exponents, e.g. "3,4,5" or "3..7"
        #[arg(long)]
        h_exponents: Option<String>,
        /// Exponent of the reference mesh the errors are measured against
        #[arg(long)]
        ref_exponent: Option<u32>,
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Error study for greedily built reduced bases
    Greedy {
        /// Mesh exponents, e.g. "3,4,5" or "3..7"
        #[arg(long)]
        h_exponents: Option<String>,
        /// Exponent of the reference mesh the errors are measured against
        #[arg(long)]
        ref_exponent: Option<u32>,
        #[arg(long)]
        m_max: Option<usize>,
        /// Snapshot source: "truth" (full-model slices) or "pde" (sampled
        /// snapshot equation)
        #[arg(long)]
        source: Option<String>,
        /// Number of parameter samples for --source pde
        #[arg(long)]
        n_sample: Option<usize>,
        /// Sampling seed for --source pde
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge stored error tables into a summary and per-mesh plot files
    Report,
}

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(path) => Config::load(path),
        None => {
            let default = PathBuf::from("fpmr.toml");
            if default.exists() {
                Config::load(&default)
            } else {
                Ok(Config::default())
            }
        }
    }
}

fn settings(cli: &Cli, cfg: &Config) -> Result<RunSettings> {
    let problem = cfg.build_problem(cli.scenario.as_deref())?;
    let study = &cfg.study;
    Ok(RunSettings {
        param_box: cfg.build_parameter_box(),
        h_exponents: parse_exponents(&study.h_exponents)?,
        ref_exponent: study.ref_exponent,
        m_max: study.m_max,
        n_sample: study.n_sample,
        seed: study.seed,
        cfl: cli.cfl.unwrap_or(study.cfl),
        gs_tol: study.gs_tol,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from(&study.out)),
        problem,
    })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let mut s = settings(&cli, &cfg)?;
    match &cli.command {
        Command::Reference {
            h_exponents,
            ref_exponent,
        } => {
            if let Some(text) = h_exponents {
                s.h_exponents = parse_exponents(text)?;
            }
            s.ref_exponent = ref_exponent.unwrap_or(s.ref_exponent);
            cmd_reference(&s)
        }
        Command::Legendre {
            h_exponents,
            ref_exponent,
            m_max,
        } => {
            if let Some(text) = h_exponents {
                s.h_exponents = parse_exponents(text)?;
            }
            s.ref_exponent = ref_exponent.unwrap_or(s.ref_exponent);
            s.m_max = m_max.unwrap_or(s.m_max);
            cmd_study(&s, StudyMethod::Legendre)
        }
        Command::Greedy {
            h_exponents,
            ref_exponent,
            m_max,
            source,
            n_sample,
            seed,
        } => {
            if let Some(text) = h_exponents {
                s.h_exponents = parse_exponents(text)?;
            }
            s.ref_exponent = ref_exponent.unwrap_or(s.ref_exponent);
            s.m_max = m_max.unwrap_or(s.m_max);
            s.n_sample = n_sample.unwrap_or(s.n_sample);
            s.seed = seed.unwrap_or(s.seed);
            let source = source.as_deref().unwrap_or(&cfg.study.source);
            let method = match source {
                "truth" => StudyMethod::GreedyTruth,
                "pde" => StudyMethod::GreedyPde,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "snapshot source {other:?}; expected \"truth\" or \"pde\""
                    )))
                }
            };
            cmd_study(&s, method)
        }
        Command::Report => cmd_report(&s.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
