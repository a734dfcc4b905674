//! Photon-number statistics of the displaced signal.
//!
//! The displaced branches `|±α + β⟩` reach the detector through a beam
//! splitter of transmissivity `T` with imperfect mode overlap `ξ`, giving
//! Poissonian photon counts with means
//! `N± = T·α² + β² ± 2ξ·√T·α·β`.
//! Detector efficiency is deliberately not folded into these means; it only
//! rescales the intensity axis when comparing against the SQL.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Result};

/// Default transmissivity of the displacement beam splitter.
pub const DEFAULT_TRANSMISSIVITY: f64 = 0.982;
/// Visibility used for the ideal-counting reference curve.
pub const DEFAULT_VISIBILITY: f64 = 0.9985;
/// Measured interference visibility of the bench setup.
pub const MEASURED_VISIBILITY: f64 = 0.998;
pub const DEFAULT_EFFICIENCY: f64 = 0.98;
/// Per-pulse probability of a high-energy (cosmic-ray like) dark event.
pub const DEFAULT_DARK_HIGH_RATE: f64 = 3e-8;
/// Per-pulse probability of a low-energy dark event.
pub const DEFAULT_DARK_LOW_RATE: f64 = 1e-3;
pub const DEFAULT_DARK_HIGH_THRESHOLD: usize = 15;

/// Largest photon number receiving low-energy dark mass; weights ∝ 2^(−n).
const LOW_DARK_MAX_N: usize = 3;

/// Imperfections of the displacement receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReceiverParams", into = "RawReceiverParams")]
pub struct ReceiverParams {
    transmissivity: f64,
    visibility: f64,
    efficiency: f64,
    dark_low_rate: f64,
    dark_high_rate: f64,
    dark_high_threshold: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReceiverParams {
    transmissivity: f64,
    visibility: f64,
    efficiency: f64,
    #[serde(default)]
    dark_low_rate: f64,
    #[serde(default)]
    dark_high_rate: f64,
    #[serde(default = "default_threshold")]
    dark_high_threshold: usize,
}

fn default_threshold() -> usize {
    DEFAULT_DARK_HIGH_THRESHOLD
}

impl TryFrom<RawReceiverParams> for ReceiverParams {
    type Error = crate::Error;

    fn try_from(raw: RawReceiverParams) -> Result<Self> {
        ReceiverParams::new(raw.transmissivity, raw.visibility, raw.efficiency)?.with_dark_counts(
            raw.dark_low_rate,
            raw.dark_high_rate,
            raw.dark_high_threshold,
        )
    }
}

impl From<ReceiverParams> for RawReceiverParams {
    fn from(p: ReceiverParams) -> Self {
        RawReceiverParams {
            transmissivity: p.transmissivity,
            visibility: p.visibility,
            efficiency: p.efficiency,
            dark_low_rate: p.dark_low_rate,
            dark_high_rate: p.dark_high_rate,
            dark_high_threshold: p.dark_high_threshold,
        }
    }
}

impl Default for ReceiverParams {
    fn default() -> Self {
        Self {
            transmissivity: DEFAULT_TRANSMISSIVITY,
            visibility: DEFAULT_VISIBILITY,
            efficiency: DEFAULT_EFFICIENCY,
            dark_low_rate: 0.0,
            dark_high_rate: 0.0,
            dark_high_threshold: DEFAULT_DARK_HIGH_THRESHOLD,
        }
    }
}

impl ReceiverParams {
    /// Receiver without dark counts.
    pub fn new(transmissivity: f64, visibility: f64, efficiency: f64) -> Result<Self> {
        check_range("transmissivity", transmissivity, 0.0, 1.0)?;
        if transmissivity == 0.0 {
            return Err(invalid("transmissivity", "must be > 0"));
        }
        check_range("visibility", visibility, 0.0, 1.0)?;
        check_range("efficiency", efficiency, 0.0, 1.0)?;
        if efficiency == 0.0 {
            return Err(invalid("efficiency", "must be > 0"));
        }
        Ok(Self {
            transmissivity,
            visibility,
            efficiency,
            ..Self::default()
        })
    }

    /// Perfect beam splitter, mode overlap and efficiency.
    pub fn ideal() -> Self {
        Self::new(1.0, 1.0, 1.0).expect("ideal parameters are valid")
    }

    pub fn with_dark_counts(mut self, low_rate: f64, high_rate: f64, threshold: usize) -> Result<Self> {
        check_range("dark_low_rate", low_rate, 0.0, 1.0)?;
        check_range("dark_high_rate", high_rate, 0.0, 1.0)?;
        if low_rate + high_rate >= 1.0 {
            return Err(invalid(
                "dark_low_rate + dark_high_rate",
                format!("must be < 1, got {}", low_rate + high_rate),
            ));
        }
        if threshold < 1 {
            return Err(invalid("dark_high_threshold", "must be >= 1"));
        }
        self.dark_low_rate = low_rate;
        self.dark_high_rate = high_rate;
        self.dark_high_threshold = threshold;
        Ok(self)
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_low_rate(&self) -> f64 {
        self.dark_low_rate
    }

    pub fn dark_high_rate(&self) -> f64 {
        self.dark_high_rate
    }

    pub fn dark_high_threshold(&self) -> usize {
        self.dark_high_threshold
    }

    pub fn has_dark_counts(&self) -> bool {
        self.dark_low_rate > 0.0 || self.dark_high_rate > 0.0
    }

    /// Same receiver with a different visibility.
    pub fn with_visibility(mut self, visibility: f64) -> Result<Self> {
        self.visibility = check_range("visibility", visibility, 0.0, 1.0)?;
        Ok(self)
    }
}

/// Mean photon numbers of the two displaced branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacedMeans {
    pub n_plus: f64,
    pub n_minus: f64,
}

impl DisplacedMeans {
    pub fn max(&self) -> f64 {
        self.n_plus.max(self.n_minus)
    }
}

pub fn displaced_means(alpha: f64, beta: f64, params: &ReceiverParams) -> Result<DisplacedMeans> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(name, format!("amplitude must be finite and >= 0, got {v}")));
        }
    }
    let signal = params.transmissivity.sqrt() * alpha;
    let cross = 2.0 * signal * beta;
    let n_plus = signal * signal + beta * beta + params.visibility * cross;
    // (√T·α − β)² + 2(1 − ξ)√T·α·β: non-negative term by term, and exactly
    // zero at perfect nulling.
    let diff = signal - beta;
    let n_minus = diff * diff + (1.0 - params.visibility) * cross;
    Ok(DisplacedMeans { n_plus, n_minus })
}

/// A normalized photon-number distribution over `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn from_probabilities(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("probabilities", "distribution needs at least one entry"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(invalid("probabilities", format!("entry {p} is negative or non-finite")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("probabilities", format!("sum is {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probabilities(self) -> Vec<f64> {
        self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Truncation bound keeping the Poisson tail mass below 1e-12.
pub fn truncation_for(mean: f64) -> usize {
    let mean = mean.max(0.0);
    30usize.max((mean + 12.0 * mean.sqrt()).ceil() as usize)
}

/// Poisson probabilities `meanⁿ·e^(−mean)/n!` for `n = 0..=n_max`,
/// evaluated in log space and renormalized over the truncated support.
pub fn poisson_distribution(mean: f64, n_max: usize) -> Result<PhotonDistribution> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(invalid("mean", format!("must be finite and >= 0, got {mean}")));
    }
    let mut probs = vec![0.0; n_max + 1];
    if mean == 0.0 {
        probs[0] = 1.0;
        return Ok(PhotonDistribution { probs });
    }
    let ln_mean = mean.ln();
    let mut ln_factorial = 0.0;
    for (n, p) in probs.iter_mut().enumerate() {
        if n > 1 {
            ln_factorial += (n as f64).ln();
        }
        *p = (n as f64 * ln_mean - mean - ln_factorial).exp();
    }
    normalize(&mut probs);
    Ok(PhotonDistribution { probs })
}

fn normalize(probs: &mut [f64]) {
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
}

/// Weights of a unit low-energy dark event over photon numbers 1..=3.
pub fn low_dark_profile() -> [f64; LOW_DARK_MAX_N] {
    let raw = [0.5, 0.25, 0.125];
    let total: f64 = raw.iter().sum();
    raw.map(|w| w / total)
}

/// Adds dark-count mass to a photon-number distribution and renormalizes.
///
/// Low-energy events put `dark_low_rate` on n ∈ {1, 2, 3} (weights ∝ 2^(−n));
/// high-energy events spread `dark_high_rate` uniformly over
/// `threshold < n ≤ n_max`. The support must extend past the threshold
/// whenever high-energy events are enabled.
pub fn augment_dark_counts(dist: &PhotonDistribution, params: &ReceiverParams) -> Result<PhotonDistribution> {
    let mut probs = dist.probs.clone();
    if !params.has_dark_counts() {
        return Ok(PhotonDistribution { probs });
    }
    let n_max = dist.n_max();
    if params.dark_low_rate > 0.0 {
        if n_max < LOW_DARK_MAX_N {
            return Err(invalid(
                "n_max",
                format!("support 0..={n_max} cannot hold low-energy dark events"),
            ));
        }
        for (w, p) in low_dark_profile().iter().zip(&mut probs[1..=LOW_DARK_MAX_N]) {
            *p += params.dark_low_rate * w;
        }
    }
    if params.dark_high_rate > 0.0 {
        let threshold = params.dark_high_threshold;
        if n_max <= threshold {
            return Err(invalid(
                "n_max",
                format!("support 0..={n_max} does not extend above the dark threshold {threshold}"),
            ));
        }
        let per_bin = params.dark_high_rate / (n_max - threshold) as f64;
        probs[threshold + 1..].iter_mut().for_each(|p| *p += per_bin);
    }
    normalize(&mut probs);
    Ok(PhotonDistribution { probs })
}
