//! `cee`: command-line driver for integrated-information analysis, TPM
//! algebra, grain search and lattice trajectory simulation.

mod commands;
mod report;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use cee_core::grain::GrainBudget;
use cee_core::metric::Metric;
use cee_core::system::{PhiConfig, PhiMode};

use commands::{read_input, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] cee_core::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Core(_) => 2,
            CliError::Output { .. } => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "cee", version, about = "Integrated information, TPM factorization, grain search and Euclidean trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PhiFlags {
    /// Repertoire distance.
    #[arg(long, default_value = "emd")]
    metric: Metric,
    /// How big phi is computed.
    #[arg(long = "phi-mode", default_value = "mip")]
    phi_mode: PhiMode,
    /// Largest relation order (2 or 3).
    #[arg(long = "relations-order", default_value_t = 2)]
    relations_order: usize,
}

impl PhiFlags {
    fn config(&self) -> PhiConfig {
        PhiConfig { metric: self.metric, mode: self.phi_mode, relations_order: self.relations_order }
    }
}

#[derive(Args, Clone)]
struct Output {
    /// Write here (atomically) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Complexes and cause-effect structures of a TPM in a state.
    Analyze {
        tpm: PathBuf,
        /// Bit string, element 0 first.
        #[arg(long)]
        state: String,
        #[command(flatten)]
        phi: PhiFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Complexes only.
    Complexes {
        tpm: PathBuf,
        #[arg(long)]
        state: String,
        #[command(flatten)]
        phi: PhiFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Cause-effect structure of one subset (default: all elements).
    Ces {
        tpm: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
        #[command(flatten)]
        phi: PhiFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Tensor product of two TPM files (first file in the low bits).
    Compose {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Finest grouping into independent factors.
    Factorize {
        tpm: PathBuf,
        #[arg(long, default_value_t = cee_core::algebra::DEFAULT_EPSILON)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Exhaustive search for grains with maximal big phi.
    Grain {
        tpm: PathBuf,
        #[arg(long)]
        state: String,
        /// Temporal strides tried for every spatial grain.
        #[arg(long = "stride-set", value_delimiter = ',', default_value = "1,2,4")]
        stride_set: Vec<usize>,
        /// Maximum number of grains evaluated; exit code 3 when hit.
        #[arg(long)]
        budget: Option<usize>,
        /// Also write big phi per grain as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        phi: PhiFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Run the lattice simulator and write a trajectory file.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate, estimate the empirical TPM, find complexes and factorize.
    Pipeline {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        coupling: Option<f64>,
        /// Factorization tolerance (default 0.05 for sampled TPMs).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Laplace smoothing per transition cell.
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
        #[command(flatten)]
        phi: PhiFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Particle factorization residual against coupling, over several seeds.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
        couplings: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CEE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("CEE_THREADS must be a positive integer, got {v:?}")))?;
        // ignore failure if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => report::write_atomic(p, text.as_bytes())
            .map_err(|source| CliError::Output { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>, Option<PathBuf>), CliError> {
    configure_threads()?;
    Ok(match cli.command {
        Command::Analyze { tpm, state, phi, output } => {
            (commands::analyze(&read_input(&tpm)?, &state, &phi.config(), true)?, output.out, None)
        }
        Command::Complexes { tpm, state, phi, output } => {
            (commands::analyze(&read_input(&tpm)?, &state, &phi.config(), false)?, output.out, None)
        }
        Command::Ces { tpm, state, subset, phi, output } => {
            (commands::ces(&read_input(&tpm)?, &state, &subset, &phi.config())?, output.out, None)
        }
        Command::Compose { a, b, output } => (commands::compose(&read_input(&a)?, &read_input(&b)?)?, output.out, None),
        Command::Factorize { tpm, epsilon, output } => {
            (commands::factorize_cmd(&read_input(&tpm)?, epsilon)?, output.out, None)
        }
        Command::Grain { tpm, state, stride_set, budget, csv, phi, output } => {
            let mut b = GrainBudget { strides: stride_set, ..GrainBudget::default() };
            if let Some(max) = budget {
                b.max_grains = max;
            }
            let want = csv.is_some();
            (commands::grain(&read_input(&tpm)?, &state, &b, &phi.config(), want)?, output.out, csv)
        }
        Command::Simulate { config, seed, output } => {
            let input = read_input(&config)?;
            let mut c = commands::load_sim_config(&input)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            (commands::simulate_cmd(c)?, output.out, None)
        }
        Command::Pipeline { config, seed, coupling, epsilon, smoothing, phi, output } => {
            let input = read_input(&config)?;
            let mut c = commands::load_sim_config(&input)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(g) = coupling {
                c.coupling = g;
                c.validate()?;
            }
            (commands::pipeline(&input, c, epsilon, smoothing, &phi.config())?, output.out, None)
        }
        Command::Sweep { config, couplings, seeds, seed, csv, output } => {
            let input = read_input(&config)?;
            let mut c = commands::load_sim_config(&input)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            (commands::sweep(&input, c, &couplings, seeds)?, output.out, csv)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|(outcome, out, csv)| {
        write(&out, &report::render(outcome.body))?;
        if let (Some(path), Some(text)) = (csv, outcome.csv) {
            write(&Some(path), &text)?;
        }
        Ok(outcome.partial)
    }) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("budget exceeded: partial report written");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
