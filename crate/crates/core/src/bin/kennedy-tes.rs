//! Command-line front end: reference bounds, displacement and intensity
//! sweeps, and file-driven experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kennedy_tes::experiment::{
    emit_bounds, emit_results, run_config_file, sweep_alpha, sweep_beta, BetaChoice, DetectorMode,
    ExperimentConfig, OutputFormat, SimulateFile, TraceSettings, DEFAULT_TRIALS,
};
use kennedy_tes::photon_statistics::{
    ReceiverParams, DEFAULT_DARK_HIGH_THRESHOLD, DEFAULT_EFFICIENCY, DEFAULT_TRANSMISSIVITY, DEFAULT_VISIBILITY,
};
use kennedy_tes::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "kennedy-tes", version, about = "Kennedy receiver with a photon-number-resolving TES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SQL and Helstrom error over a grid of intensities.
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        alpha_sq_grid: Vec<f64>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Error versus displacement, as multiples of the optimal displacement.
    SweepBeta {
        #[arg(long)]
        alpha_sq: f64,
        /// Multipliers of the optimal displacement.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Error versus signal intensity.
    SweepAlpha {
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Optimize the displacement at every point; otherwise null the −α branch.
        #[arg(long)]
        optimize: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run an experiment described by a flat key-value (TOML) file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "ideal")]
    mode: DetectorMode,
    /// Evaluation trials per point.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    /// Training trials per point (trace mode); defaults to --trials.
    #[arg(long)]
    training_trials: Option<u64>,
    #[arg(long)]
    seed: u64,
    /// Worker threads; the output does not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// csv or json; inferred from the --out extension when omitted.
    #[arg(long)]
    format: Option<OutputFormat>,

    #[arg(long, default_value_t = DEFAULT_TRANSMISSIVITY)]
    transmissivity: f64,
    #[arg(long, default_value_t = DEFAULT_VISIBILITY)]
    visibility: f64,
    #[arg(long, default_value_t = DEFAULT_EFFICIENCY)]
    efficiency: f64,
    #[arg(long, default_value_t = 0.0)]
    dark_low: f64,
    #[arg(long, default_value_t = 0.0)]
    dark_high: f64,
    #[arg(long, default_value_t = DEFAULT_DARK_HIGH_THRESHOLD)]
    dark_threshold: usize,

    /// Per-sample detector noise RMS (trace mode).
    #[arg(long)]
    noise_rms: Option<f64>,
    /// Linear detector response (trace mode).
    #[arg(long)]
    no_saturation: bool,
}

impl RunArgs {
    fn config(&self, beta: BetaChoice) -> Result<ExperimentConfig, Error> {
        let receiver = ReceiverParams::new(self.transmissivity, self.visibility, self.efficiency)?
            .with_dark_counts(self.dark_low, self.dark_high, self.dark_threshold)?;
        let trace = match self.mode {
            DetectorMode::IdealCounter => {
                if self.noise_rms.is_some() || self.no_saturation || self.training_trials.is_some() {
                    return Err(Error::Config(
                        "--noise-rms, --no-saturation and --training-trials need --mode trace".into(),
                    ));
                }
                None
            }
            DetectorMode::TraceModel => {
                let mut t = TraceSettings::default();
                t.detector.noise_rms = self.noise_rms;
                if self.no_saturation {
                    t.detector.compression = 1.0;
                }
                Some(t)
            }
        };
        let config = ExperimentConfig {
            beta,
            mode: self.mode,
            trace,
            training_trials: self.training_trials.unwrap_or(self.trials),
            evaluation_trials: self.trials,
            workers: self.workers,
            ..ExperimentConfig::ideal(0.0, receiver, self.seed)
        };
        config.validate()?;
        Ok(config)
    }

    fn format(&self) -> OutputFormat {
        self.format.unwrap_or_else(|| OutputFormat::from_path(&self.out))
    }
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

fn run(command: Command) -> Result<(), Failure> {
    use Failure::{Runtime, Usage};
    match command {
        Command::Bounds { alpha_sq_grid, out } => {
            if let Some(x) = alpha_sq_grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Usage(Error::Config(format!("alpha_sq must be finite and >= 0, got {x}"))));
            }
            emit_bounds(&alpha_sq_grid, &out).map_err(Runtime)
        }
        Command::SweepBeta { alpha_sq, grid, run } => {
            let config = run.config(BetaChoice::Optimize).map_err(Usage)?;
            let results = sweep_beta(alpha_sq, &grid, &config).map_err(|e| match e {
                Error::Config(_) | Error::InvalidParameter { .. } => Usage(e),
                e => Runtime(e),
            })?;
            emit_results(&results, run.format(), &run.out).map_err(Runtime)
        }
        Command::SweepAlpha { grid, optimize, run } => {
            let beta = if optimize { BetaChoice::Optimize } else { BetaChoice::Nulling };
            let config = run.config(beta).map_err(Usage)?;
            for &alpha_sq in &grid {
                ExperimentConfig { alpha_sq, ..config.clone() }.validate().map_err(Usage)?;
            }
            let results = sweep_alpha(&grid, &config).map_err(Runtime)?;
            emit_results(&results, run.format(), &run.out).map_err(Runtime)
        }
        Command::Simulate { config } => {
            let file = SimulateFile::load(&config).map_err(|e| match e {
                Error::Io { .. } => Runtime(e),
                e => Usage(e),
            })?;
            file.plan().map_err(Usage)?;
            file.output_format().map_err(Usage)?;
            run_config_file(&config).map(|_| ()).map_err(Runtime)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
