//! Synthetic transition-edge sensor: voltage traces, matched filtering and
//! empirical score distributions.
//!
//! Every trace is the same pulse shape scaled by the absorbed energy plus
//! white Gaussian noise. Scores are the discrete inner product
//! `s = Σᵢ V(tᵢ)·V₀(tᵢ)·dt` with a template `V₀` averaged from calibration
//! traces, and the MAP rule runs directly on histograms of `s`.

mod dump;
mod histogram;

pub use dump::{read_trace_dump, write_trace_dump, TRACE_DUMP_MAGIC};
pub use histogram::{estimate_conditional, BinningConfig, ScoreClassifier, ScoreHistogram};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_TRACE_LEN: usize = 256;
/// Rise and fall constants of the pulse, in units of the trace length.
pub const DEFAULT_RISE: f64 = 0.1;
pub const DEFAULT_FALL: f64 = 0.3;
pub const DEFAULT_SATURATION_KNEE: f64 = 15.0;
pub const DEFAULT_COMPRESSION: f64 = 0.5;
/// Separation of adjacent photon-number score peaks, in noise standard deviations.
pub const DEFAULT_PEAK_SEPARATION: f64 = 6.0;

/// A sampled detector voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<f64>,
    dt: f64,
}

impl Trace {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("trace samples"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("sample period must be finite and > 0, got {dt}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("samples", "trace contains non-finite samples"));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Averaged template used to score traces.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilter {
    template: Vec<f64>,
    dt: f64,
}

impl MatchedFilter {
    pub fn new(template: Vec<f64>, dt: f64) -> Result<Self> {
        let trace = Trace::new(template, dt)?;
        if trace.samples.iter().all(|&v| v == 0.0) {
            return Err(invalid("template", "matched filter template is identically zero"));
        }
        Ok(Self {
            template: trace.samples,
            dt,
        })
    }

    pub fn template(&self) -> &[f64] {
        &self.template
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.template.len()
    }

    pub fn is_empty(&self) -> bool {
        self.template.is_empty()
    }

    /// Score of raw samples already known to match the filter's length and period.
    pub(crate) fn score_samples(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.template).map(|(v, w)| v * w).sum::<f64>() * self.dt
    }
}

/// Response of the synthetic detector to `n` absorbed photons.
#[derive(Debug, Clone, PartialEq)]
pub struct TesResponseModel {
    pulse: Vec<f64>,
    dt: f64,
    gain: f64,
    noise_rms: f64,
    saturation_knee: f64,
    compression: f64,
}

/// Flat, serializable description of a [`TesResponseModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TesResponseSettings {
    pub trace_len: usize,
    pub rise: f64,
    pub fall: f64,
    pub gain: f64,
    /// Per-sample noise RMS; `None` picks the default peak separation.
    pub noise_rms: Option<f64>,
    pub saturation_knee: f64,
    pub compression: f64,
}

impl Default for TesResponseSettings {
    fn default() -> Self {
        Self {
            trace_len: DEFAULT_TRACE_LEN,
            rise: DEFAULT_RISE,
            fall: DEFAULT_FALL,
            gain: 1.0,
            noise_rms: None,
            saturation_knee: DEFAULT_SATURATION_KNEE,
            compression: DEFAULT_COMPRESSION,
        }
    }
}

impl TryFrom<TesResponseSettings> for TesResponseModel {
    type Error = Error;

    fn try_from(s: TesResponseSettings) -> Result<Self> {
        if s.trace_len < 2 {
            return Err(invalid("trace_len", "traces need at least 2 samples"));
        }
        let dt = 1.0 / s.trace_len as f64;
        let pulse = difference_of_exponentials(s.trace_len, s.rise, s.fall)?;
        let noise_rms = match s.noise_rms {
            Some(rms) => rms,
            None => noise_for_separation(s.gain, dt, DEFAULT_PEAK_SEPARATION),
        };
        TesResponseModel::new(pulse, dt, s.gain, noise_rms, s.saturation_knee, s.compression)
    }
}

impl Default for TesResponseModel {
    fn default() -> Self {
        TesResponseSettings::default()
            .try_into()
            .expect("default detector settings are valid")
    }
}

/// Per-sample noise RMS giving adjacent score peaks `separation` noise
/// standard deviations apart, for a unit-energy pulse scored by its own shape.
pub fn noise_for_separation(gain: f64, dt: f64, separation: f64) -> f64 {
    gain / (separation * dt.sqrt())
}

/// Unit-energy pulse `e^(−t/fall) − e^(−t/rise)` sampled at `t = i/len`.
pub fn difference_of_exponentials(len: usize, rise: f64, fall: f64) -> Result<Vec<f64>> {
    if !(rise > 0.0 && fall > rise) || !fall.is_finite() {
        return Err(invalid("rise/fall", format!("need 0 < rise < fall, got {rise}, {fall}")));
    }
    let dt = 1.0 / len as f64;
    let mut pulse: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 * dt;
            (-t / fall).exp() - (-t / rise).exp()
        })
        .collect();
    let energy: f64 = pulse.iter().map(|v| v * v).sum::<f64>() * dt;
    let norm = energy.sqrt();
    pulse.iter_mut().for_each(|v| *v /= norm);
    Ok(pulse)
}

impl TesResponseModel {
    pub fn new(
        pulse: Vec<f64>,
        dt: f64,
        gain: f64,
        noise_rms: f64,
        saturation_knee: f64,
        compression: f64,
    ) -> Result<Self> {
        let pulse = Trace::new(pulse, dt)?.samples;
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(invalid("gain", format!("must be finite and > 0, got {gain}")));
        }
        if !(noise_rms >= 0.0) || !noise_rms.is_finite() {
            return Err(invalid("noise_rms", format!("must be finite and >= 0, got {noise_rms}")));
        }
        if !(saturation_knee >= 1.0) || !saturation_knee.is_finite() {
            return Err(invalid("saturation_knee", format!("must be >= 1, got {saturation_knee}")));
        }
        if !(compression > 0.0 && compression <= 1.0) {
            return Err(invalid("compression", format!("must lie in (0, 1], got {compression}")));
        }
        Ok(Self {
            pulse,
            dt,
            gain,
            noise_rms,
            saturation_knee,
            compression,
        })
    }

    /// Same detector with a perfectly linear response.
    pub fn without_saturation(mut self) -> Self {
        self.compression = 1.0;
        self
    }

    pub fn with_noise_rms(mut self, noise_rms: f64) -> Result<Self> {
        if !(noise_rms >= 0.0) || !noise_rms.is_finite() {
            return Err(invalid("noise_rms", format!("must be finite and >= 0, got {noise_rms}")));
        }
        self.noise_rms = noise_rms;
        Ok(self)
    }

    pub fn pulse(&self) -> &[f64] {
        &self.pulse
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn trace_len(&self) -> usize {
        self.pulse.len()
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn noise_rms(&self) -> f64 {
        self.noise_rms
    }

    pub fn saturation_knee(&self) -> f64 {
        self.saturation_knee
    }

    pub fn compression(&self) -> f64 {
        self.compression
    }

    /// Pulse amplitude for `n` absorbed photons; compressed above the knee.
    pub fn effective_amplitude(&self, n: u64) -> f64 {
        let n = n as f64;
        if n <= self.saturation_knee {
            self.gain * n
        } else {
            self.gain * (self.saturation_knee + (n - self.saturation_knee) * self.compression)
        }
    }

    /// Fills `out` with a trace for `n` photons, reusing its allocation.
    pub fn simulate_into<R: Rng + ?Sized>(&self, n: u64, rng: &mut R, out: &mut Vec<f64>) {
        let amplitude = self.effective_amplitude(n);
        out.clear();
        if self.noise_rms == 0.0 {
            out.extend(self.pulse.iter().map(|p| amplitude * p));
        } else {
            out.extend(self.pulse.iter().map(|p| {
                let z: f64 = rng.sample(StandardNormal);
                amplitude * p + self.noise_rms * z
            }));
        }
    }
}

pub fn simulate_trace<R: Rng + ?Sized>(n_photons: u64, model: &TesResponseModel, rng: &mut R) -> Trace {
    let mut samples = Vec::with_capacity(model.trace_len());
    model.simulate_into(n_photons, rng, &mut samples);
    Trace {
        samples,
        dt: model.dt,
    }
}

/// Pointwise mean of equally sampled traces.
pub fn build_matched_filter(traces: &[Trace]) -> Result<MatchedFilter> {
    let first = traces.first().ok_or(Error::EmptyInput("matched filter traces"))?;
    let mut sum = vec![0.0; first.len()];
    for trace in traces {
        if trace.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                found: trace.len(),
            });
        }
        if trace.dt != first.dt {
            return Err(Error::PeriodMismatch {
                expected: first.dt,
                found: trace.dt,
            });
        }
        sum.iter_mut().zip(&trace.samples).for_each(|(s, v)| *s += v);
    }
    let count = traces.len() as f64;
    sum.iter_mut().for_each(|s| *s /= count);
    MatchedFilter::new(sum, first.dt)
}

/// Discrete matched-filter score `Σᵢ V(tᵢ)·V₀(tᵢ)·dt`.
pub fn filter_score(trace: &Trace, filter: &MatchedFilter) -> Result<f64> {
    if trace.len() != filter.len() {
        return Err(Error::LengthMismatch {
            expected: filter.len(),
            found: trace.len(),
        });
    }
    if trace.dt != filter.dt {
        return Err(Error::PeriodMismatch {
            expected: filter.dt,
            found: trace.dt,
        });
    }
    Ok(filter.score_samples(&trace.samples))
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(invalid("spacing", format!("must be finite and > 0, got {spacing}")));
    }
    Ok(())
}

/// Photon number nearest to `score / spacing`; negative scores map to 0.
pub fn photon_number_for_score(score: f64, spacing: f64) -> Result<u64> {
    check_spacing(spacing)?;
    Ok((score / spacing).round().max(0.0) as u64)
}

/// Photon-number histogram of scores: entry `n` counts scores rounding to `n`.
///
/// Only for calibration; discrimination works on the raw scores.
pub fn bin_scores_to_photon_numbers(scores: &[f64], spacing: f64) -> Result<Vec<u64>> {
    check_spacing(spacing)?;
    let mut counts: Vec<u64> = Vec::new();
    for &s in scores {
        let n = photon_number_for_score(s, spacing)? as usize;
        if n >= counts.len() {
            counts.resize(n + 1, 0);
        }
        counts[n] += 1;
    }
    Ok(counts)
}
