use std::fs::File;
use std::io::BufWriter;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{with_workers, DetectorMode, ExperimentConfig, ExperimentResult, TraceSettings};
use crate::discriminator::{ideal_counter_distribution, Decision};
use crate::error::{invalid, Error, Result};
use crate::photon_statistics::{displaced_means, low_dark_profile, DisplacedMeans, ReceiverParams};
use crate::trace_model::{
    build_matched_filter, estimate_conditional, simulate_trace, write_trace_dump, MatchedFilter, TesResponseModel,
};

/// Trials per random stream. Fixed so that results are independent of the
/// number of workers.
pub const CHUNK_TRIALS: u64 = 1 << 16;

const PHASE_FILTER: u64 = 0;
const PHASE_TRAINING: u64 = 1;
const PHASE_EVALUATION: u64 = 2;
const PHASE_DUMP: u64 = 3;

fn stream(seed: u64, phase: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((phase << 48) | chunk);
    rng
}

fn chunk_sizes(total: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let chunks = total.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(move |c| (c, CHUNK_TRIALS.min(total - c * CHUNK_TRIALS)))
}

/// One-sided 95% Clopper–Pearson upper bound on a rate with zero successes
/// in `trials` trials: `1 − 0.05^(1/trials)`.
pub fn clopper_pearson_upper(trials: u64) -> f64 {
    -(0.05f64.ln() / trials as f64).exp_m1()
}

/// Draws the detected photon number of either branch, including dark events.
///
/// Dark events replace the signal outcome with probability `d/(1 + d)`,
/// `d` being the total dark rate, which reproduces the renormalized
/// augmentation of the analytic distributions.
#[derive(Debug, Clone)]
pub struct PhotonSampler {
    plus: Option<Poisson<f64>>,
    minus: Option<Poisson<f64>>,
    dark_probability: f64,
    low_share: f64,
    threshold: u64,
    n_max: u64,
}

impl PhotonSampler {
    pub fn new(means: DisplacedMeans, params: &ReceiverParams, with_dark: bool, n_max: usize) -> Result<Self> {
        let poisson = |mean: f64| -> Result<Option<Poisson<f64>>> {
            if mean == 0.0 {
                return Ok(None);
            }
            Poisson::new(mean)
                .map(Some)
                .map_err(|e| invalid("mean", format!("cannot sample Poisson({mean}): {e}")))
        };
        let (low, high) = if with_dark {
            (params.dark_low_rate(), params.dark_high_rate())
        } else {
            (0.0, 0.0)
        };
        let total = low + high;
        let threshold = params.dark_high_threshold() as u64;
        if high > 0.0 && n_max as u64 <= threshold {
            return Err(invalid("n_max", "support does not extend above the dark threshold"));
        }
        Ok(Self {
            plus: poisson(means.n_plus)?,
            minus: poisson(means.n_minus)?,
            dark_probability: total / (1.0 + total),
            low_share: if total > 0.0 { low / total } else { 0.0 },
            threshold,
            n_max: n_max as u64,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, branch: Decision, rng: &mut R) -> u64 {
        if self.dark_probability > 0.0 && rng.random::<f64>() < self.dark_probability {
            return self.sample_dark(rng);
        }
        let source = match branch {
            Decision::Plus => &self.plus,
            Decision::Minus => &self.minus,
        };
        source.as_ref().map_or(0, |p| p.sample(rng) as u64)
    }

    fn sample_dark<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if rng.random::<f64>() < self.low_share {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, w) in low_dark_profile().iter().enumerate() {
                acc += w;
                if u < acc {
                    return i as u64 + 1;
                }
            }
            low_dark_profile().len() as u64
        } else {
            rng.random_range(self.threshold + 1..=self.n_max)
        }
    }
}

/// Convenience wrapper drawing a single photon number for `branch`.
pub fn sample_photon_number<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    params: &ReceiverParams,
    branch: Decision,
    rng: &mut R,
) -> Result<u64> {
    let dist = ideal_counter_distribution(alpha, beta, params, params.has_dark_counts())?;
    let means = displaced_means(alpha, beta, params)?;
    let sampler = PhotonSampler::new(means, params, params.has_dark_counts(), dist.len() - 1)?;
    Ok(sampler.sample(branch, rng))
}

fn draw_branch<R: Rng + ?Sized>(rng: &mut R) -> Decision {
    if rng.random::<bool>() {
        Decision::Plus
    } else {
        Decision::Minus
    }
}

pub(super) fn run_point(config: &ExperimentConfig, beta: f64) -> Result<ExperimentResult> {
    let alpha = config.alpha_sq.sqrt();
    let errors = with_workers(config.workers, || match config.mode {
        DetectorMode::IdealCounter => ideal_errors(config, alpha, beta),
        DetectorMode::TraceModel => {
            let settings = config
                .trace
                .as_ref()
                .ok_or_else(|| Error::Config("trace-model mode needs detector settings".into()))?;
            trace_errors(config, settings, alpha, beta)
        }
    })?;
    ExperimentResult::from_counts(
        config.alpha_sq,
        beta * beta,
        &config.receiver,
        errors,
        config.evaluation_trials,
        config.seed,
    )
}

fn sampler_for(config: &ExperimentConfig, alpha: f64, beta: f64) -> Result<(PhotonSampler, Vec<Decision>)> {
    let params = &config.receiver;
    let with_dark = params.has_dark_counts();
    let table = ideal_counter_distribution(alpha, beta, params, with_dark)?.decision_table();
    let means = displaced_means(alpha, beta, params)?;
    let sampler = PhotonSampler::new(means, params, with_dark, table.len() - 1)?;
    Ok((sampler, table))
}

fn ideal_errors(config: &ExperimentConfig, alpha: f64, beta: f64) -> Result<u64> {
    let (sampler, table) = sampler_for(config, alpha, beta)?;
    let last = table.len() - 1;
    let errors = chunk_sizes(config.evaluation_trials)
        .map(|(chunk, trials)| {
            let mut rng = stream(config.seed, PHASE_EVALUATION, chunk);
            let mut errors = 0u64;
            for _ in 0..trials {
                let branch = draw_branch(&mut rng);
                let n = sampler.sample(branch, &mut rng) as usize;
                // photon numbers past the table fall back to its last entry
                if table[n.min(last)] != branch {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    Ok(errors)
}

fn matched_filter(config: &ExperimentConfig, settings: &TraceSettings, model: &TesResponseModel) -> Result<MatchedFilter> {
    let mut rng = stream(config.seed, PHASE_FILTER, 0);
    let poisson = Poisson::new(settings.filter_mean_photons)
        .map_err(|e| Error::Config(format!("filter mean photon number: {e}")))?;
    let traces: Vec<_> = (0..settings.filter_traces)
        .map(|_| {
            let n = poisson.sample(&mut rng) as u64;
            simulate_trace(n, model, &mut rng)
        })
        .collect();
    build_matched_filter(&traces)
}

/// Trace-mode trial generator: branch, photon number, trace, score.
struct ScoredTrials<'a> {
    seed: u64,
    sampler: &'a PhotonSampler,
    model: &'a TesResponseModel,
    filter: &'a MatchedFilter,
}

impl ScoredTrials<'_> {
    fn for_each(&self, phase: u64, chunk: u64, trials: u64, mut visit: impl FnMut(Decision, f64)) {
        let mut rng = stream(self.seed, phase, chunk);
        let mut samples = Vec::with_capacity(self.model.trace_len());
        for _ in 0..trials {
            let branch = draw_branch(&mut rng);
            let n = self.sampler.sample(branch, &mut rng);
            self.model.simulate_into(n, &mut rng, &mut samples);
            visit(branch, self.filter.score_samples(&samples));
        }
    }
}

fn trace_errors(config: &ExperimentConfig, settings: &TraceSettings, alpha: f64, beta: f64) -> Result<u64> {
    let model = TesResponseModel::try_from(settings.detector)?;
    let filter = matched_filter(config, settings, &model)?;
    let (sampler, _) = sampler_for(config, alpha, beta)?;

    let run = ScoredTrials {
        seed: config.seed,
        sampler: &sampler,
        model: &model,
        filter: &filter,
    };

    let training: Vec<(Vec<f64>, Vec<f64>)> = chunk_sizes(config.training_trials)
        .map(|(chunk, trials)| {
            let (mut plus, mut minus) = (Vec::new(), Vec::new());
            run.for_each(PHASE_TRAINING, chunk, trials, |branch, s| match branch {
                Decision::Plus => plus.push(s),
                Decision::Minus => minus.push(s),
            });
            (plus, minus)
        })
        .collect();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (p, m) in training {
        plus.extend(p);
        minus.extend(m);
    }
    let classifier = estimate_conditional(&plus, &minus, &settings.binning)?;
    drop((plus, minus));

    if let Some(path) = &config.histogram_out {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        classifier
            .histogram()
            .write_csv(BufWriter::new(file))
            .map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
    }
    if let Some(path) = &config.trace_dump_out {
        let mut rng = stream(config.seed, PHASE_DUMP, 0);
        let traces: Vec<_> = (0..config.trace_dump_count.max(1))
            .map(|_| {
                let branch = draw_branch(&mut rng);
                let n = sampler.sample(branch, &mut rng);
                simulate_trace(n, &model, &mut rng)
            })
            .collect();
        write_trace_dump(path, &traces)?;
    }

    let errors = chunk_sizes(config.evaluation_trials)
        .map(|(chunk, trials)| {
            let mut errors = 0u64;
            run.for_each(PHASE_EVALUATION, chunk, trials, |branch, s| {
                if classifier.decide(s) != branch {
                    errors += 1;
                }
            });
            errors
        })
        .sum();
    Ok(errors)
}
