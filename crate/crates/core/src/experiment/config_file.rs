//! Flat key-value experiment files for `simulate --config`.
//!
//! ```toml
//! mode = "trace"
//! alpha_sq = 1.5
//! beta = "optimize"          # or "nulling", or use beta_sq / beta_grid
//! visibility = 0.998
//! trials = 1000000
//! seed = 7
//! out = "point.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{
    emit_results, run_experiment, sweep_alpha, sweep_beta, BetaChoice, DetectorMode, ExperimentConfig,
    ExperimentResult, OutputFormat, TraceSettings, DEFAULT_FILTER_MEAN_PHOTONS, DEFAULT_FILTER_TRACES,
    DEFAULT_TRIALS,
};
use crate::error::{Error, Result};
use crate::photon_statistics::{
    ReceiverParams, DEFAULT_DARK_HIGH_THRESHOLD, DEFAULT_EFFICIENCY, DEFAULT_TRANSMISSIVITY, DEFAULT_VISIBILITY,
};
use crate::trace_model::{BinningConfig, TesResponseSettings};

/// Contents of an experiment file. Every field mirrors an
/// [`ExperimentConfig`] knob; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub mode: Option<String>,
    pub alpha_sq: Option<f64>,
    pub alpha_sq_grid: Option<Vec<f64>>,
    /// `"optimize"` or `"nulling"`.
    pub beta: Option<String>,
    pub beta_sq: Option<f64>,
    /// Multipliers of the optimal displacement.
    pub beta_grid: Option<Vec<f64>>,

    pub transmissivity: Option<f64>,
    pub visibility: Option<f64>,
    pub efficiency: Option<f64>,
    pub dark_low_rate: Option<f64>,
    pub dark_high_rate: Option<f64>,
    pub dark_high_threshold: Option<usize>,

    pub trials: Option<u64>,
    pub training_trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,

    pub trace_len: Option<usize>,
    pub rise: Option<f64>,
    pub fall: Option<f64>,
    pub gain: Option<f64>,
    pub noise_rms: Option<f64>,
    pub saturation: Option<bool>,
    pub saturation_knee: Option<f64>,
    pub compression: Option<f64>,
    pub filter_mean_photons: Option<f64>,
    pub filter_traces: Option<usize>,
    pub min_bins: Option<usize>,
    pub max_bins: Option<usize>,
    pub smoothing: Option<f64>,

    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub histogram_out: Option<PathBuf>,
    pub trace_dump_out: Option<PathBuf>,
    pub trace_dump_count: Option<usize>,
}

/// What a validated experiment file asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Point(ExperimentConfig),
    BetaSweep { alpha_sq: f64, grid: Vec<f64>, config: ExperimentConfig },
    AlphaSweep { grid: Vec<f64>, config: ExperimentConfig },
}

impl SimulateFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn has_trace_keys(&self) -> bool {
        self.trace_len.is_some()
            || self.rise.is_some()
            || self.fall.is_some()
            || self.gain.is_some()
            || self.noise_rms.is_some()
            || self.saturation.is_some()
            || self.saturation_knee.is_some()
            || self.compression.is_some()
            || self.filter_mean_photons.is_some()
            || self.filter_traces.is_some()
            || self.min_bins.is_some()
            || self.max_bins.is_some()
            || self.smoothing.is_some()
            || self.histogram_out.is_some()
            || self.trace_dump_out.is_some()
            || self.trace_dump_count.is_some()
    }

    pub fn output_format(&self) -> Result<OutputFormat> {
        match (&self.format, &self.out) {
            (Some(f), _) => f.parse(),
            (None, Some(path)) => Ok(OutputFormat::from_path(path)),
            (None, None) => Ok(OutputFormat::Csv),
        }
    }

    /// Validates the file and turns it into a run plan.
    pub fn plan(&self) -> Result<Plan> {
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("`seed` is required; runs never draw implicit entropy".into()))?;
        let mode: DetectorMode = self.mode.as_deref().unwrap_or("ideal").parse()?;
        if mode == DetectorMode::IdealCounter && self.has_trace_keys() {
            return Err(Error::Config("trace-model keys given in ideal-counter mode".into()));
        }

        let receiver = ReceiverParams::new(
            self.transmissivity.unwrap_or(DEFAULT_TRANSMISSIVITY),
            self.visibility.unwrap_or(DEFAULT_VISIBILITY),
            self.efficiency.unwrap_or(DEFAULT_EFFICIENCY),
        )?
        .with_dark_counts(
            self.dark_low_rate.unwrap_or(0.0),
            self.dark_high_rate.unwrap_or(0.0),
            self.dark_high_threshold.unwrap_or(DEFAULT_DARK_HIGH_THRESHOLD),
        )?;

        let beta_keys = [self.beta.is_some(), self.beta_sq.is_some(), self.beta_grid.is_some()];
        if beta_keys.iter().filter(|b| **b).count() > 1 {
            return Err(Error::Config("give at most one of `beta`, `beta_sq`, `beta_grid`".into()));
        }
        let beta = match (&self.beta, self.beta_sq) {
            (Some(b), _) if b == "optimize" => BetaChoice::Optimize,
            (Some(b), _) if b == "nulling" => BetaChoice::Nulling,
            (Some(b), _) => return Err(Error::Config(format!("unknown beta choice `{b}`"))),
            (None, Some(beta_sq)) => BetaChoice::Fixed { beta_sq },
            (None, None) => BetaChoice::Optimize,
        };

        let trace = (mode == DetectorMode::TraceModel).then(|| {
            let defaults = TesResponseSettings::default();
            let binning = BinningConfig::default();
            TraceSettings {
                detector: TesResponseSettings {
                    trace_len: self.trace_len.unwrap_or(defaults.trace_len),
                    rise: self.rise.unwrap_or(defaults.rise),
                    fall: self.fall.unwrap_or(defaults.fall),
                    gain: self.gain.unwrap_or(defaults.gain),
                    noise_rms: self.noise_rms,
                    saturation_knee: self.saturation_knee.unwrap_or(defaults.saturation_knee),
                    compression: if self.saturation == Some(false) {
                        1.0
                    } else {
                        self.compression.unwrap_or(defaults.compression)
                    },
                },
                binning: BinningConfig {
                    min_bins: self.min_bins.unwrap_or(binning.min_bins),
                    max_bins: self.max_bins.unwrap_or(binning.max_bins),
                    smoothing: self.smoothing.unwrap_or(binning.smoothing),
                },
                filter_mean_photons: self.filter_mean_photons.unwrap_or(DEFAULT_FILTER_MEAN_PHOTONS),
                filter_traces: self.filter_traces.unwrap_or(DEFAULT_FILTER_TRACES),
            }
        });

        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        let config = ExperimentConfig {
            alpha_sq: self.alpha_sq.unwrap_or(0.0),
            beta,
            receiver,
            mode,
            trace,
            training_trials: self.training_trials.unwrap_or(trials),
            evaluation_trials: trials,
            seed,
            workers: self.workers,
            histogram_out: self.histogram_out.clone(),
            trace_dump_out: self.trace_dump_out.clone(),
            trace_dump_count: self.trace_dump_count.unwrap_or(1000),
        };

        let plan = match (self.alpha_sq, &self.alpha_sq_grid, &self.beta_grid) {
            (Some(_), Some(_), _) => {
                return Err(Error::Config("give either `alpha_sq` or `alpha_sq_grid`, not both".into()))
            }
            (None, None, _) => return Err(Error::Config("`alpha_sq` or `alpha_sq_grid` is required".into())),
            (_, Some(_), Some(_)) => {
                return Err(Error::Config("`beta_grid` sweeps need a single `alpha_sq`".into()))
            }
            (Some(alpha_sq), None, Some(grid)) => Plan::BetaSweep {
                alpha_sq,
                grid: grid.clone(),
                config,
            },
            (Some(_), None, None) => Plan::Point(config),
            (None, Some(grid), None) => Plan::AlphaSweep {
                grid: grid.clone(),
                config,
            },
        };
        match &plan {
            Plan::Point(c) | Plan::BetaSweep { config: c, .. } => c.validate()?,
            Plan::AlphaSweep { grid, config } => {
                if grid.is_empty() {
                    return Err(Error::Config("alpha_sq_grid is empty".into()));
                }
                for &alpha_sq in grid {
                    ExperimentConfig {
                        alpha_sq,
                        ..config.clone()
                    }
                    .validate()?;
                }
            }
        }
        Ok(plan)
    }
}

impl Plan {
    pub fn run(&self) -> Result<Vec<ExperimentResult>> {
        match self {
            Plan::Point(config) => Ok(vec![run_experiment(config)?]),
            Plan::BetaSweep { alpha_sq, grid, config } => sweep_beta(*alpha_sq, grid, config),
            Plan::AlphaSweep { grid, config } => sweep_alpha(grid, config),
        }
    }
}

/// Loads, validates, runs and writes an experiment file. Output goes to the
/// file's `out` key, or stdout when absent.
pub fn run_config_file(path: &Path) -> Result<Vec<ExperimentResult>> {
    let file = SimulateFile::load(path)?;
    let format = file.output_format()?;
    let results = file.plan()?.run()?;
    let out = file.out.clone().unwrap_or_else(|| PathBuf::from("-"));
    emit_results(&results, format, &out)?;
    Ok(results)
}
