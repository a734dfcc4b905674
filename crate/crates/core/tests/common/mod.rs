//! Reference implementations shared by the integration tests. None of these
//! call into the library's numerical paths.
#![allow(dead_code)]

use std::f64::consts::PI;

/// erfc by the positive-term series `erf(x) = 2/√π·e^(−x²)·Σ 2ⁿx^(2n+1)/(2n+1)!!`
/// below 1.5 and a backward-evaluated continued fraction above.
pub fn erfc_oracle(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x < 1.5 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > 1e-18 * sum {
            n += 1.0;
            term *= 2.0 * x * x / (2.0 * n + 1.0);
            sum += term;
        }
        1.0 - 2.0 / PI.sqrt() * (-x * x).exp() * sum
    } else {
        // erfc(x) = e^(−x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
        let mut tail = x;
        for k in (1..=4000).rev() {
            tail = x + (k as f64 / 2.0) / tail;
        }
        (-x * x).exp() / PI.sqrt() / tail
    }
}

pub fn sql_oracle(alpha_sq: f64) -> f64 {
    0.5 * erfc_oracle((2.0 * alpha_sq).sqrt())
}

/// `(1 − √(1 − ε))/2`, via its binomial series when ε is small.
pub fn helstrom_oracle(alpha_sq: f64) -> f64 {
    let eps = (-4.0 * alpha_sq).exp();
    if eps > 0.5 {
        return (1.0 - (1.0 - eps).sqrt()) / 2.0;
    }
    let mut coef = 0.5;
    let mut power = eps;
    let mut sum = 0.0;
    for k in 1..2000 {
        sum += coef * power;
        if coef * power < 1e-20 * sum {
            break;
        }
        coef *= (2.0 * k as f64 - 1.0) / (2.0 * k as f64 + 2.0);
        power *= eps;
    }
    sum / 2.0
}

/// Poisson pmf: factorial form for n ≤ 20, lgamma above.
pub fn poisson_pmf_oracle(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n <= 20 {
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        mean.powi(n as i32) * (-mean).exp() / factorial
    } else {
        (n as f64 * mean.ln() - mean - libm::lgamma(n as f64 + 1.0)).exp()
    }
}

/// Direct summation of the ideal-counter MAP error, ½·Σₙ min±, with no
/// truncation renormalization.
pub fn ideal_counter_error_oracle(alpha_sq: f64, beta: f64, t: f64, xi: f64) -> f64 {
    let alpha = alpha_sq.sqrt();
    let base = t * alpha_sq + beta * beta;
    let cross = 2.0 * xi * t.sqrt() * alpha * beta;
    let n_plus = base + cross;
    let n_minus = (base - cross).max(0.0);
    let n_max = (n_plus + 40.0 * n_plus.sqrt() + 60.0) as usize;
    let overlap: f64 = (0..=n_max)
        .map(|n| poisson_pmf_oracle(n_plus, n).min(poisson_pmf_oracle(n_minus, n)))
        .sum();
    0.5 * overlap
}

/// Minimum error over all 2^k deterministic decision rules.
pub fn exhaustive_map_error(p_plus: &[f64], p_minus: &[f64]) -> f64 {
    let k = p_plus.len();
    assert!(k <= 16);
    (0u32..(1 << k))
        .map(|rule| {
            let mut err = 0.0;
            for o in 0..k {
                // bit set: decide plus
                if rule & (1 << o) != 0 {
                    err += p_minus[o];
                } else {
                    err += p_plus[o];
                }
            }
            0.5 * err
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimizer of `f` on a uniform grid of `points` over `[lo, hi]`.
pub fn dense_grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::INFINITY), |best, (x, v)| if v < best.1 { (x, v) } else { best })
}

/// Mean photon-number mass function of the dark-augmented model, built
/// directly from the pmf oracle (n_max fixed by the caller).
pub fn augmented_error_oracle(alpha_sq: f64, beta: f64, t: f64, xi: f64, dark_high: f64, threshold: usize, n_max: usize) -> f64 {
    let alpha = alpha_sq.sqrt();
    let base = t * alpha_sq + beta * beta;
    let cross = 2.0 * xi * t.sqrt() * alpha * beta;
    let means = [base + cross, (base - cross).max(0.0)];
    let dists: Vec<Vec<f64>> = means
        .iter()
        .map(|&m| {
            let mut p: Vec<f64> = (0..=n_max).map(|n| poisson_pmf_oracle(m, n)).collect();
            let s: f64 = p.iter().sum();
            let per_bin = dark_high / (n_max - threshold) as f64;
            for (n, v) in p.iter_mut().enumerate() {
                *v /= s;
                if n > threshold {
                    *v += per_bin;
                }
            }
            let s: f64 = p.iter().sum();
            p.into_iter().map(|v| v / s).collect()
        })
        .collect();
    0.5 * dists[0].iter().zip(&dists[1]).map(|(a, b)| a.min(*b)).sum::<f64>()
}
