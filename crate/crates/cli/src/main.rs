//! `jcc-sched`: data generation, set learning, scheduling and evaluation
//! driven by one JSON run config.

mod commands;
mod log;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jcc_sched::{Error, ErrorClass};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "jcc-sched", version, about = "Chance-constrained HVAC/renewable scheduling on radial feeders")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Run-config JSON; the bundled config is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for samples, sets, solutions, reports and logs.
    #[arg(long, global = true, default_value = "jcc-out")]
    pub out: PathBuf,
    /// Network case: bundled name (`ieee13`) or path to a case JSON file.
    #[arg(long, global = true)]
    pub case: Option<String>,
    /// Overrides every sampler seed and the scenario-selection seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training samples per timestep.
    #[arg(long, global = true)]
    pub n_train: Option<usize>,
    /// Held-out samples per timestep.
    #[arg(long, global = true)]
    pub n_heldout: Option<usize>,
    /// Suppress log lines on stderr (they still go to `<out>/log.jsonl`).
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw training and held-out samples for one or all distributions.
    GenSamples {
        /// Distribution name from the run config (default: all).
        #[arg(long)]
        dist: Option<String>,
    },
    /// Learn SVC sets, fit box/hull sets or estimate Bonferroni moments.
    TrainSets {
        /// Risk level; default: the config's ε grid.
        #[arg(long)]
        epsilon: Option<f64>,
        /// svc, box, hull or bonferroni; default: the config's methods.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        dist: Option<String>,
    },
    /// Solve the day-ahead schedule for one method and risk level.
    Solve {
        #[arg(long)]
        method: String,
        #[arg(long)]
        epsilon: f64,
        /// Distribution name; default: the first in the config.
        #[arg(long)]
        dist: Option<String>,
        /// Uncertainty file from `train-sets`; default: the one under `--out` if present.
        #[arg(long)]
        sets: Option<PathBuf>,
        /// Also write the conic program in LP-like text form.
        #[arg(long)]
        dump_program: bool,
    },
    /// Monte-Carlo violation rates and utilization of a solved schedule.
    Evaluate {
        #[arg(long)]
        method: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        dist: Option<String>,
        /// Solution file; default: the one written by `solve` under `--out`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run the configured grid and write report tables.
    Report {
        /// Comma-separated risk levels overriding the config.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Comma-separated methods overriding the config.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Comma-separated distribution names overriding the config.
        #[arg(long, value_delimiter = ',')]
        dists: Option<Vec<String>>,
    },
    /// Samples plus the full report grid from a single seed.
    Reproduce,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Solver => 4,
        ErrorClass::Validation => 5,
    }
}

fn fail(class: ErrorClass, message: String) -> ExitCode {
    let code = exit_code(class);
    eprintln!("{}", json!({ "error": { "class": class, "exit_code": code, "message": message } }));
    ExitCode::from(code)
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("JCC_SCHED_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("JCC_SCHED_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(ErrorClass::Config, e.to_string().trim().to_string()),
    };
    match init_threads().and_then(|_| commands::run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.class(), e.to_string()),
    }
}
