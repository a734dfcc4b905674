//! Monte Carlo discrimination experiments and parameter sweeps.
//!
//! Each operating point is simulated trial by trial: a branch is drawn with
//! probability ½, the detected photon number is drawn from the displaced
//! Poisson statistics (mixed with dark events), and the receiver decides by
//! MAP. In ideal-counter mode the decision uses the analytic photon-number
//! conditionals; in trace mode every trial becomes a synthetic detector trace
//! whose matched-filter score is classified against histograms estimated on
//! an independent training run.
//!
//! Trials are cut into fixed-size chunks, each with its own ChaCha stream
//! derived from the point seed, so results do not depend on the number of
//! worker threads.

mod config_file;
mod engine;
mod output;

pub use config_file::{run_config_file, SimulateFile};
pub use engine::{clopper_pearson_upper, sample_photon_number, CHUNK_TRIALS};
pub use output::{emit_bounds, emit_results, format_number, OutputFormat};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{helstrom_error, improvement_db, sql_error, SignalIntensity};
use crate::error::{Error, Result};
use crate::optimizer::{optimal_displacement, DEFAULT_TOLERANCE};
use crate::photon_statistics::ReceiverParams;
use crate::trace_model::{BinningConfig, TesResponseModel, TesResponseSettings};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_FILTER_MEAN_PHOTONS: f64 = 3.0;
pub const DEFAULT_FILTER_TRACES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorMode {
    /// Photon numbers are observed directly.
    #[serde(alias = "ideal")]
    IdealCounter,
    /// Photon numbers are observed through synthetic TES traces.
    #[serde(alias = "trace")]
    TraceModel,
}

impl std::str::FromStr for DetectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" | "ideal-counter" => Ok(Self::IdealCounter),
            "trace" | "trace-model" => Ok(Self::TraceModel),
            other => Err(Error::Config(format!("unknown detector mode `{other}`"))),
        }
    }
}

/// How the displacement is chosen at each operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    /// Minimize the ideal-counter error.
    Optimize,
    /// `β = √T·α`, which nulls the `−α` branch for perfect mode overlap.
    Nulling,
    /// Fixed displacement intensity |β|².
    Fixed { beta_sq: f64 },
}

/// Trace-mode detector and matched-filter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSettings {
    pub detector: TesResponseSettings,
    pub binning: BinningConfig,
    /// Mean photon number of the calibration signal averaged into the filter.
    pub filter_mean_photons: f64,
    pub filter_traces: usize,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            detector: TesResponseSettings::default(),
            binning: BinningConfig::default(),
            filter_mean_photons: DEFAULT_FILTER_MEAN_PHOTONS,
            filter_traces: DEFAULT_FILTER_TRACES,
        }
    }
}

/// Everything needed to run one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha_sq: f64,
    pub beta: BetaChoice,
    pub receiver: ReceiverParams,
    pub mode: DetectorMode,
    /// Required in trace mode, rejected in ideal-counter mode.
    pub trace: Option<TraceSettings>,
    pub training_trials: u64,
    pub evaluation_trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Optional CSV dump of the trained score histogram (trace mode).
    pub histogram_out: Option<PathBuf>,
    /// Optional binary dump of example traces (trace mode).
    pub trace_dump_out: Option<PathBuf>,
    pub trace_dump_count: usize,
}

impl ExperimentConfig {
    /// Ideal-counter experiment with default trial counts.
    pub fn ideal(alpha_sq: f64, receiver: ReceiverParams, seed: u64) -> Self {
        Self {
            alpha_sq,
            beta: BetaChoice::Optimize,
            receiver,
            mode: DetectorMode::IdealCounter,
            trace: None,
            training_trials: DEFAULT_TRIALS,
            evaluation_trials: DEFAULT_TRIALS,
            seed,
            workers: None,
            histogram_out: None,
            trace_dump_out: None,
            trace_dump_count: 1000,
        }
    }

    /// Trace-model experiment with default detector settings.
    pub fn trace(alpha_sq: f64, receiver: ReceiverParams, seed: u64) -> Self {
        Self {
            mode: DetectorMode::TraceModel,
            trace: Some(TraceSettings::default()),
            ..Self::ideal(alpha_sq, receiver, seed)
        }
    }

    pub fn with_trials(mut self, training: u64, evaluation: u64) -> Self {
        self.training_trials = training;
        self.evaluation_trials = evaluation;
        self
    }

    pub fn with_beta(mut self, beta: BetaChoice) -> Self {
        self.beta = beta;
        self
    }

    /// Rejects inconsistent settings before any simulation work.
    pub fn validate(&self) -> Result<()> {
        SignalIntensity::new(self.alpha_sq)?;
        if let BetaChoice::Fixed { beta_sq } = self.beta {
            if !beta_sq.is_finite() || beta_sq < 0.0 {
                return Err(Error::Config(format!("beta_sq must be finite and >= 0, got {beta_sq}")));
            }
        }
        if self.evaluation_trials == 0 {
            return Err(Error::Config("evaluation trials must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be >= 1".into()));
        }
        match (self.mode, &self.trace) {
            (DetectorMode::IdealCounter, Some(_)) => {
                return Err(Error::Config("trace-model settings given in ideal-counter mode".into()))
            }
            (DetectorMode::IdealCounter, None) => {
                if self.histogram_out.is_some() || self.trace_dump_out.is_some() {
                    return Err(Error::Config(
                        "histogram and trace dumps are only available in trace-model mode".into(),
                    ));
                }
            }
            (DetectorMode::TraceModel, None) => {
                return Err(Error::Config("trace-model mode needs detector settings".into()))
            }
            (DetectorMode::TraceModel, Some(t)) => {
                if self.training_trials == 0 {
                    return Err(Error::Config("training trials must be >= 1".into()));
                }
                TesResponseModel::try_from(t.detector)?;
                if !(t.filter_mean_photons > 0.0) || !t.filter_mean_photons.is_finite() {
                    return Err(Error::Config("filter mean photon number must be > 0".into()));
                }
                if t.filter_traces == 0 {
                    return Err(Error::Config("matched filter needs at least one trace".into()));
                }
            }
        }
        Ok(())
    }
}

/// Estimated error at one operating point, with reference limits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub alpha_sq: f64,
    /// `alpha_sq / η`, the intensity at which the references are evaluated.
    pub alpha_sq_rescaled: f64,
    pub beta_sq: f64,
    pub p_err: f64,
    /// Normal-approximation standard error, or the one-sided 95%
    /// Clopper–Pearson upper bound when no error was observed.
    pub p_err_stderr: f64,
    pub p_sql: f64,
    pub p_helstrom: f64,
    /// `10·log10(p_sql / p_err)`; with zero observed errors the upper bound
    /// stands in for `p_err`, making this a lower bound.
    pub improvement_db: Option<f64>,
    pub trials: u64,
    pub errors: u64,
    pub seed: u64,
}

impl ExperimentResult {
    pub(crate) fn from_counts(
        alpha_sq: f64,
        beta_sq: f64,
        receiver: &ReceiverParams,
        errors: u64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let p_err = errors as f64 / trials as f64;
        let p_err_stderr = if errors == 0 {
            clopper_pearson_upper(trials)
        } else {
            (p_err * (1.0 - p_err) / trials as f64).sqrt()
        };
        let alpha_sq_rescaled = alpha_sq / receiver.efficiency();
        let reference = SignalIntensity::new(alpha_sq_rescaled)?;
        let p_sql = sql_error(reference);
        let p_helstrom = helstrom_error(reference);
        let effective = if errors == 0 { p_err_stderr } else { p_err };
        let improvement_db = improvement_db(effective, p_sql).ok();
        Ok(Self {
            alpha_sq,
            alpha_sq_rescaled,
            beta_sq,
            p_err,
            p_err_stderr,
            p_sql,
            p_helstrom,
            improvement_db,
            trials,
            errors,
            seed,
        })
    }
}

/// Displacement amplitude for `alpha_sq` under `choice`.
pub fn resolve_beta(alpha_sq: f64, choice: BetaChoice, receiver: &ReceiverParams) -> Result<f64> {
    let alpha = SignalIntensity::new(alpha_sq)?.amplitude();
    Ok(match choice {
        BetaChoice::Optimize => optimal_displacement(alpha, receiver, DEFAULT_TOLERANCE)?.beta_opt,
        BetaChoice::Nulling => receiver.transmissivity().sqrt() * alpha,
        BetaChoice::Fixed { beta_sq } => beta_sq.sqrt(),
    })
}

/// Runs one operating point.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let beta = resolve_beta(config.alpha_sq, config.beta, &config.receiver)?;
    engine::run_point(config, beta)
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(job),
    }
}

/// Sweeps the displacement around its optimum: `β = m·β_opt` for each
/// multiplier `m`. Row `k` uses seed `config.seed + k`.
pub fn sweep_beta(alpha_sq: f64, relative_grid: &[f64], config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    if relative_grid.is_empty() {
        return Err(Error::Config("relative beta grid is empty".into()));
    }
    if let Some(m) = relative_grid.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(Error::Config(format!("relative beta multipliers must be > 0, got {m}")));
    }
    let base = ExperimentConfig {
        alpha_sq,
        beta: BetaChoice::Optimize,
        ..config.clone()
    };
    base.validate()?;
    let beta_opt = resolve_beta(alpha_sq, BetaChoice::Optimize, &base.receiver)?;
    relative_grid
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let point = ExperimentConfig {
                seed: base.seed.wrapping_add(k as u64),
                ..base.clone()
            };
            engine::run_point(&point, m * beta_opt)
        })
        .collect()
}

/// Sweeps the signal intensity; the displacement follows `config.beta`.
/// Row `k` uses seed `config.seed + k`.
pub fn sweep_alpha(grid: &[f64], config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    if grid.is_empty() {
        return Err(Error::Config("alpha_sq grid is empty".into()));
    }
    let points: Vec<ExperimentConfig> = grid
        .iter()
        .enumerate()
        .map(|(k, &alpha_sq)| ExperimentConfig {
            alpha_sq,
            seed: config.seed.wrapping_add(k as u64),
            ..config.clone()
        })
        .collect();
    for p in &points {
        p.validate()?;
    }
    points.iter().map(run_experiment).collect()
}
