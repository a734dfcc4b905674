//! Maximum a posteriori decisions between the `+α` and `−α` branches.
//!
//! Priors are fixed at ½, so the MAP rule compares the two conditional
//! likelihoods of the observed outcome directly. The error of that rule is
//! `1 − ½·Σ max±`, which we evaluate as the equivalent `½·Σ min±`: the two
//! agree for normalized inputs, but the second keeps its relative precision
//! when the error is far below machine epsilon.

use crate::error::{invalid, Error, Result};
use crate::photon_statistics::{
    augment_dark_counts, displaced_means, poisson_distribution, truncation_for, ReceiverParams,
};

/// Which branch the receiver assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Plus,
    Minus,
}

impl Decision {
    pub fn flipped(self) -> Self {
        match self {
            Decision::Plus => Decision::Minus,
            Decision::Minus => Decision::Plus,
        }
    }
}

/// Pair of outcome distributions conditioned on the sent branch, over a
/// shared support indexed `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    p_plus: Vec<f64>,
    p_minus: Vec<f64>,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl ConditionalDistribution {
    pub fn new(p_plus: Vec<f64>, p_minus: Vec<f64>) -> Result<Self> {
        if p_plus.is_empty() {
            return Err(Error::EmptyInput("conditional distribution"));
        }
        if p_plus.len() != p_minus.len() {
            return Err(Error::LengthMismatch {
                expected: p_plus.len(),
                found: p_minus.len(),
            });
        }
        for (name, probs) in [("p_plus", &p_plus), ("p_minus", &p_minus)] {
            if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(invalid(name, format!("entry {p} is negative or non-finite")));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(invalid(name, format!("sums to {total}, expected 1")));
            }
        }
        Ok(Self { p_plus, p_minus })
    }

    pub fn len(&self) -> usize {
        self.p_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_plus.is_empty()
    }

    pub fn p_plus(&self) -> &[f64] {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &[f64] {
        &self.p_minus
    }

    /// Same distribution with the branch labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p_plus: self.p_minus.clone(),
            p_minus: self.p_plus.clone(),
        }
    }

    /// MAP decision for every outcome in the support.
    pub fn decision_table(&self) -> Vec<Decision> {
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .map(|(&p, &m)| decide(p, m))
            .collect()
    }
}

fn decide(p_plus: f64, p_minus: f64) -> Decision {
    // ties go to plus
    if p_plus >= p_minus {
        Decision::Plus
    } else {
        Decision::Minus
    }
}

pub fn map_decide(outcome: usize, dist: &ConditionalDistribution) -> Result<Decision> {
    if outcome >= dist.len() {
        return Err(Error::UnknownOutcome(outcome));
    }
    Ok(decide(dist.p_plus[outcome], dist.p_minus[outcome]))
}

/// Error probability of the MAP rule with equal priors.
///
/// For normalized inputs `½·Σ min± = ½·(1 − TV)` with `TV = ½·Σ |p₊ − p₋|`.
/// The overlap form is used for small errors, the total-variation form near
/// ½ so that identical branches give exactly ½.
pub fn error_probability(dist: &ConditionalDistribution) -> f64 {
    let (overlap, variation) = dist
        .p_plus
        .iter()
        .zip(&dist.p_minus)
        .fold((0.0, 0.0), |(o, v), (&p, &m)| (o + p.min(m), v + 0.5 * (p - m).abs()));
    let p_err = if overlap <= variation {
        0.5 * overlap
    } else {
        0.5 * (1.0 - variation)
    };
    p_err.clamp(0.0, 0.5)
}

/// Photon-number conditionals of an ideal counter behind the displacement.
///
/// Both branches share the support `0..=n_max`, with `n_max` taken from the
/// brighter branch and extended past the dark-count threshold when needed.
pub fn ideal_counter_distribution(
    alpha: f64,
    beta: f64,
    params: &ReceiverParams,
    with_dark: bool,
) -> Result<ConditionalDistribution> {
    let means = displaced_means(alpha, beta, params)?;
    let mut n_max = truncation_for(means.max());
    if with_dark && params.dark_high_rate() > 0.0 {
        n_max = n_max.max(params.dark_high_threshold() + 1);
    }
    let mut plus = poisson_distribution(means.n_plus, n_max)?;
    let mut minus = poisson_distribution(means.n_minus, n_max)?;
    if with_dark {
        plus = augment_dark_counts(&plus, params)?;
        minus = augment_dark_counts(&minus, params)?;
    }
    ConditionalDistribution::new(plus.into_probabilities(), minus.into_probabilities())
}

/// Expected error of a Kennedy receiver with an ideal photon counter.
pub fn expected_error_ideal_counter(
    alpha: f64,
    beta: f64,
    params: &ReceiverParams,
    with_dark: bool,
) -> Result<f64> {
    Ok(error_probability(&ideal_counter_distribution(
        alpha, beta, params, with_dark,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{helstrom_error, SignalIntensity};
    use proptest::prelude::*;

    fn cd(p: &[f64], m: &[f64]) -> ConditionalDistribution {
        ConditionalDistribution::new(p.to_vec(), m.to_vec()).unwrap()
    }

    #[test]
    fn decisions() {
        let d = cd(&[0.9, 0.1], &[0.1, 0.9]);
        assert_eq!(map_decide(0, &d).unwrap(), Decision::Plus);
        assert_eq!(map_decide(1, &d).unwrap(), Decision::Minus);
        let tie = cd(&[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(map_decide(0, &tie).unwrap(), Decision::Plus);
        assert!(matches!(map_decide(2, &d), Err(Error::UnknownOutcome(2))));
    }

    #[test]
    fn vacuum_outcome_means_minus_at_operating_point() {
        let params = ReceiverParams::new(0.982, 0.998, 1.0).unwrap();
        let d = ideal_counter_distribution(1.5f64.sqrt(), 1.51f64.sqrt(), &params, false).unwrap();
        assert!(d.p_minus()[0] > d.p_plus()[0]);
        assert_eq!(map_decide(0, &d).unwrap(), Decision::Minus);
        assert_eq!(map_decide(3, &d).unwrap(), Decision::Plus);
    }

    #[test]
    fn error_extremes_and_two_outcome_case() {
        assert_eq!(error_probability(&cd(&[0.3, 0.7], &[0.3, 0.7])), 0.5);
        assert_eq!(error_probability(&cd(&[1.0, 0.0], &[0.0, 1.0])), 0.0);
        let d = cd(&[0.8, 0.2], &[0.3, 0.7]);
        // decision rules: (+,+) 0.5, (+,−) 0.25, (−,+) 0.75, (−,−) 0.5
        assert!((error_probability(&d) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ConditionalDistribution::new(vec![], vec![]).is_err());
        assert!(ConditionalDistribution::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(ConditionalDistribution::new(vec![0.5, 0.4], vec![0.5, 0.5]).is_err());
        assert!(ConditionalDistribution::new(vec![1.1, -0.1], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_signal_is_a_coin_flip() {
        let params = ReceiverParams::default();
        for beta in [0.0, 0.3, 1.0, 2.5] {
            assert_eq!(expected_error_ideal_counter(0.0, beta, &params, false).unwrap(), 0.5);
        }
    }

    #[test]
    fn literal_and_overlap_forms_agree() {
        let params = ReceiverParams::new(0.982, 0.998, 1.0).unwrap();
        let d = ideal_counter_distribution(1.5f64.sqrt(), 1.2, &params, false).unwrap();
        let literal = 1.0
            - 0.5 * d.p_plus().iter().zip(d.p_minus()).map(|(p, m)| p.max(*m)).sum::<f64>();
        assert!((literal - error_probability(&d)).abs() < 1e-14);
    }

    #[test]
    fn bright_signal_plateau_from_dark_counts() {
        let params = ReceiverParams::new(0.982, 0.9985, 0.98)
            .unwrap()
            .with_dark_counts(0.0, 3e-8, 15)
            .unwrap();
        let alpha = 10f64.sqrt();
        let beta = alpha * 0.982f64.sqrt();
        let p = expected_error_ideal_counter(alpha, beta, &params, true).unwrap();
        assert!(p > 1.5e-8 / 3.0 && p < 1.5e-8 * 3.0, "{p}");
    }

    #[test]
    fn helstrom_is_a_lower_bound_for_ideal_counting() {
        let params = ReceiverParams::ideal();
        for i in 1..=40 {
            let alpha_sq = 0.1 * i as f64;
            let alpha = alpha_sq.sqrt();
            let hel = helstrom_error(SignalIntensity::new(alpha_sq).unwrap());
            for j in 0..=60 {
                let beta = 0.05 * j as f64;
                let p = expected_error_ideal_counter(alpha, beta, &params, false).unwrap();
                assert!(p >= hel, "alpha_sq {alpha_sq} beta {beta}: {p} < {hel}");
            }
        }
    }

    fn distribution_strategy() -> impl Strategy<Value = ConditionalDistribution> {
        (1usize..=12).prop_flat_map(|k| {
            (
                prop::collection::vec(0.0f64..1.0, k),
                prop::collection::vec(0.0f64..1.0, k),
            )
                .prop_filter("non-degenerate", |(a, b)| {
                    a.iter().sum::<f64>() > 1e-6 && b.iter().sum::<f64>() > 1e-6
                })
                .prop_map(|(a, b)| {
                    let norm = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum();
                        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
                    };
                    ConditionalDistribution::new(norm(a), norm(b)).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn error_is_bounded_and_label_symmetric(d in distribution_strategy()) {
            let p = error_probability(&d);
            prop_assert!((0.0..=0.5).contains(&p));
            prop_assert_eq!(p, error_probability(&d.swapped()));
        }

        #[test]
        fn error_is_permutation_invariant(d in distribution_strategy(), seed in any::<u64>()) {
            let k = d.len();
            let mut order: Vec<usize> = (0..k).collect();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..k).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let perm = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let shuffled = ConditionalDistribution::new(perm(d.p_plus()), perm(d.p_minus())).unwrap();
            prop_assert!((error_probability(&d) - error_probability(&shuffled)).abs() < 1e-15);
        }

        #[test]
        fn decisions_survive_common_rescaling(d in distribution_strategy(), scale in 0.01f64..100.0) {
            for o in 0..d.len() {
                let expected = map_decide(o, &d).unwrap();
                let (p, m) = (d.p_plus()[o] * scale, d.p_minus()[o] * scale);
                prop_assert_eq!(decide(p, m), expected);
            }
        }
    }
}
