use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discriminator::{ConditionalDistribution, Decision};
use crate::error::{invalid, Error, Result};

/// Binning and smoothing policy for empirical score distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningConfig {
    pub min_bins: usize,
    pub max_bins: usize,
    /// Pseudo-count added to every bin of both branches.
    pub smoothing: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            min_bins: 200,
            max_bins: 100_000,
            smoothing: 0.5,
        }
    }
}

impl BinningConfig {
    fn validate(&self) -> Result<()> {
        if self.min_bins < 1 || self.max_bins < self.min_bins {
            return Err(invalid(
                "bins",
                format!("need 1 <= min_bins <= max_bins, got {} and {}", self.min_bins, self.max_bins),
            ));
        }
        if !(self.smoothing > 0.0) || !self.smoothing.is_finite() {
            return Err(invalid("smoothing", format!("must be finite and > 0, got {}", self.smoothing)));
        }
        Ok(())
    }
}

/// Per-branch score counts on shared, uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    edges: Vec<f64>,
    counts_plus: Vec<u64>,
    counts_minus: Vec<u64>,
}

impl ScoreHistogram {
    /// Empty histogram on uniform bins spanning `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("bins", format!("cannot lay {bins} bins over [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        edges[bins] = hi;
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("bins", "bin edges are not strictly increasing"));
        }
        Ok(Self {
            edges,
            counts_plus: vec![0; bins],
            counts_minus: vec![0; bins],
        })
    }

    /// Bins chosen by the Freedman–Diaconis rule on the pooled scores.
    pub fn fit(scores_plus: &[f64], scores_minus: &[f64], config: &BinningConfig) -> Result<Self> {
        if scores_plus.is_empty() || scores_minus.is_empty() {
            return Err(Error::EmptyInput("branch scores"));
        }
        config.validate()?;
        let mut pooled: Vec<f64> = scores_plus.iter().chain(scores_minus).copied().collect();
        if pooled.iter().any(|s| !s.is_finite()) {
            return Err(invalid("scores", "non-finite score"));
        }
        pooled.sort_unstable_by(f64::total_cmp);
        let (mut lo, mut hi) = (pooled[0], pooled[pooled.len() - 1]);
        if hi == lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let quantile = |q: f64| pooled[((pooled.len() - 1) as f64 * q).round() as usize];
        let iqr = quantile(0.75) - quantile(0.25);
        let width = 2.0 * iqr / (pooled.len() as f64).cbrt();
        let bins = if width > 0.0 {
            ((hi - lo) / width).ceil() as usize
        } else {
            config.min_bins
        };
        let mut hist = Self::uniform(lo, hi, bins.clamp(config.min_bins, config.max_bins))?;
        hist.add(scores_plus, Decision::Plus);
        hist.add(scores_minus, Decision::Minus);
        Ok(hist)
    }

    /// Index of the bin holding `score`; the last bin is closed on the right.
    pub fn bin_of(&self, score: f64) -> Option<usize> {
        let bins = self.bins();
        let (lo, hi) = (self.edges[0], self.edges[bins]);
        if !(score >= lo && score <= hi) {
            return None;
        }
        let width = (hi - lo) / bins as f64;
        let mut i = (((score - lo) / width) as usize).min(bins - 1);
        // uniform-width guess can land one bin off through rounding
        while i > 0 && score < self.edges[i] {
            i -= 1;
        }
        while i + 1 < bins && score >= self.edges[i + 1] {
            i += 1;
        }
        Some(i)
    }

    fn add(&mut self, scores: &[f64], branch: Decision) {
        for &s in scores {
            if let Some(i) = self.bin_of(s) {
                match branch {
                    Decision::Plus => self.counts_plus[i] += 1,
                    Decision::Minus => self.counts_minus[i] += 1,
                }
            }
        }
    }

    pub fn bins(&self) -> usize {
        self.counts_plus.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts_plus(&self) -> &[u64] {
        &self.counts_plus
    }

    pub fn counts_minus(&self) -> &[u64] {
        &self.counts_minus
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Adds counts of another histogram on identical bins.
    pub fn merge(&mut self, other: &ScoreHistogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(invalid("edges", "histograms use different bins"));
        }
        self.counts_plus.iter_mut().zip(&other.counts_plus).for_each(|(a, b)| *a += b);
        self.counts_minus.iter_mut().zip(&other.counts_minus).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Smoothed, normalized conditionals over the bins.
    pub fn to_conditional(&self, smoothing: f64) -> Result<ConditionalDistribution> {
        let norm = |counts: &[u64]| {
            let total = counts.iter().sum::<u64>() as f64 + smoothing * counts.len() as f64;
            counts.iter().map(|&c| (c as f64 + smoothing) / total).collect::<Vec<_>>()
        };
        ConditionalDistribution::new(norm(&self.counts_plus), norm(&self.counts_minus))
    }

    /// CSV with columns `bin_center,count_plus,count_minus`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_center,count_plus,count_minus")?;
        for ((c, p), m) in self.bin_centers().iter().zip(&self.counts_plus).zip(&self.counts_minus) {
            writeln!(out, "{c:.11e},{p},{m}")?;
        }
        Ok(())
    }
}

/// Frozen MAP classifier over score bins.
///
/// Scores landing outside the trained bins, or in bins that saw no training
/// data, are decided by the nearest populated bin (lower bin on ties).
#[derive(Debug, Clone)]
pub struct ScoreClassifier {
    histogram: ScoreHistogram,
    distribution: ConditionalDistribution,
    decisions: Vec<Decision>,
    nearest_populated: Vec<usize>,
}

impl ScoreClassifier {
    pub fn new(histogram: ScoreHistogram, smoothing: f64) -> Result<Self> {
        let distribution = histogram.to_conditional(smoothing)?;
        let decisions = distribution.decision_table();
        let populated: Vec<bool> = histogram
            .counts_plus
            .iter()
            .zip(&histogram.counts_minus)
            .map(|(p, m)| p + m > 0)
            .collect();
        let nearest_populated = nearest_indices(&populated).ok_or(Error::EmptyInput("training scores"))?;
        Ok(Self {
            histogram,
            distribution,
            decisions,
            nearest_populated,
        })
    }

    pub fn histogram(&self) -> &ScoreHistogram {
        &self.histogram
    }

    pub fn distribution(&self) -> &ConditionalDistribution {
        &self.distribution
    }

    /// Bin whose decision applies to `score`.
    pub fn effective_bin(&self, score: f64) -> usize {
        let raw = match self.histogram.bin_of(score) {
            Some(i) => i,
            None if score < self.histogram.edges[0] => 0,
            None => self.histogram.bins() - 1,
        };
        self.nearest_populated[raw]
    }

    pub fn decide(&self, score: f64) -> Decision {
        self.decisions[self.effective_bin(score)]
    }
}

/// For each index, the nearest index flagged `true` (ties to the lower one).
fn nearest_indices(flags: &[bool]) -> Option<Vec<usize>> {
    let n = flags.len();
    let mut left = vec![None; n];
    let mut last = None;
    for i in 0..n {
        if flags[i] {
            last = Some(i);
        }
        left[i] = last;
    }
    let mut out = vec![0; n];
    let mut next = None;
    for i in (0..n).rev() {
        if flags[i] {
            next = Some(i);
        }
        out[i] = match (left[i], next) {
            (Some(l), Some(r)) => {
                if i - l <= r - i {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => return None,
        };
    }
    Some(out)
}

/// Histograms both branches on common bins and returns the smoothed
/// conditional distributions as a frozen classifier.
pub fn estimate_conditional(
    scores_plus: &[f64],
    scores_minus: &[f64],
    config: &BinningConfig,
) -> Result<ScoreClassifier> {
    let histogram = ScoreHistogram::fit(scores_plus, scores_minus, config)?;
    ScoreClassifier::new(histogram, config.smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminator::error_probability;

    fn spread(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identical_branches_are_indistinguishable() {
        let s = spread(5000, -1.0, 4.0);
        let c = estimate_conditional(&s, &s, &BinningConfig::default()).unwrap();
        assert!((error_probability(c.distribution()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separated_branches_error_sits_at_smoothing_floor() {
        let plus = spread(10_000, 5.0, 6.0);
        let minus = spread(10_000, 0.0, 1.0);
        let config = BinningConfig::default();
        let c = estimate_conditional(&plus, &minus, &config).unwrap();
        let bins = c.histogram().bins() as f64;
        let floor = 0.5 * bins * config.smoothing / (10_000.0 + config.smoothing * bins);
        assert!(error_probability(c.distribution()) <= floor * (1.0 + 1e-12));
        assert_eq!(c.decide(5.5), Decision::Plus);
        assert_eq!(c.decide(0.5), Decision::Minus);
    }

    #[test]
    fn fallback_uses_nearest_populated_bin() {
        let plus = spread(100, 9.0, 10.0);
        let minus = spread(100, 0.0, 1.0);
        let c = estimate_conditional(&plus, &minus, &BinningConfig::default()).unwrap();
        assert_eq!(c.decide(-50.0), Decision::Minus);
        assert_eq!(c.decide(50.0), Decision::Plus);
        assert_eq!(c.decide(3.0), Decision::Minus);
        assert_eq!(c.decide(7.0), Decision::Plus);
    }

    #[test]
    fn nearest_index_ties_go_low() {
        let flags = [false, true, false, false, true, false];
        assert_eq!(nearest_indices(&flags).unwrap(), vec![1, 1, 1, 4, 4, 4]);
        let flags = [false, true, false, true];
        assert_eq!(nearest_indices(&flags).unwrap()[2], 1);
        assert!(nearest_indices(&[false, false]).is_none());
    }

    #[test]
    fn bins_and_edges() {
        let h = ScoreHistogram::fit(&[0.0, 1.0, 2.0], &[3.0], &BinningConfig::default()).unwrap();
        assert_eq!(h.bins(), 200);
        assert!(h.edges().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(h.bin_of(3.0), Some(199));
        assert_eq!(h.bin_of(0.0), Some(0));
        assert_eq!(h.bin_of(-0.1), None);
        assert_eq!(h.counts_plus().iter().sum::<u64>(), 3);

        let degenerate = ScoreHistogram::fit(&[2.0], &[2.0], &BinningConfig::default()).unwrap();
        assert_eq!(degenerate.counts_plus().iter().sum::<u64>(), 1);

        assert!(ScoreHistogram::fit(&[], &[1.0], &BinningConfig::default()).is_err());
        let bad = BinningConfig { smoothing: 0.0, ..BinningConfig::default() };
        assert!(ScoreHistogram::fit(&[1.0], &[1.0], &bad).is_err());
    }

    #[test]
    fn every_edge_maps_into_its_own_bin() {
        let h = ScoreHistogram::uniform(-0.3, 7.1, 333).unwrap();
        for (i, &e) in h.edges()[..333].iter().enumerate() {
            assert_eq!(h.bin_of(e), Some(i));
        }
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = ScoreHistogram::uniform(0.0, 1.0, 4).unwrap();
        a.add(&[0.1, 0.9], Decision::Plus);
        let mut b = ScoreHistogram::uniform(0.0, 1.0, 4).unwrap();
        b.add(&[0.1], Decision::Minus);
        b.add(&[0.6], Decision::Plus);
        a.merge(&b).unwrap();
        assert_eq!(a.counts_plus(), &[1, 0, 1, 1]);
        assert_eq!(a.counts_minus(), &[1, 0, 0, 0]);
        let other = ScoreHistogram::uniform(0.0, 2.0, 4).unwrap();
        assert!(a.merge(&other).is_err());
    }

    #[test]
    fn csv_export() {
        let mut h = ScoreHistogram::uniform(0.0, 2.0, 2).unwrap();
        h.add(&[0.5], Decision::Plus);
        h.add(&[1.5, 1.6], Decision::Minus);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_center,count_plus,count_minus");
        assert_eq!(lines[1], "5.00000000000e-1,1,0");
        assert_eq!(lines[2], "1.50000000000e0,0,2");
    }
}
