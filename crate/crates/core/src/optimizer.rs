//! Search for the displacement that minimizes the ideal-counter error.
//!
//! The objective is piecewise smooth with kinks wherever the MAP boundary
//! moves from one photon number to the next, and it can have several
//! near-degenerate basins. The search therefore scans a uniform grid over
//! `[0, 2α + 3]`, refines every strict local minimum of the grid with
//! golden-section search and keeps the best point found. Ties resolve to the
//! smallest β so that flat objectives (α = 0) return β = 0.

use rayon::prelude::*;

use crate::discriminator::expected_error_ideal_counter;
use crate::error::{invalid, Error, Result};
use crate::photon_statistics::ReceiverParams;

pub const GRID_POINTS: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Minimizing displacement and the error it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub beta_opt: f64,
    pub p_err_min: f64,
    pub evaluations: usize,
}

/// Upper end of the displacement search interval for amplitude `alpha`.
pub fn beta_search_max(alpha: f64) -> f64 {
    2.0 * alpha + 3.0
}

/// Displacement minimizing the expected ideal-counter error for `alpha`.
///
/// Dark counts enter the objective whenever `params` enables them.
pub fn optimal_displacement(alpha: f64, params: &ReceiverParams, tol: f64) -> Result<Optimum> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    let with_dark = params.has_dark_counts();
    let objective = |beta: f64| expected_error_ideal_counter(alpha, beta, params, with_dark);
    let (beta_opt, p_err_min, evaluations) =
        grid_golden_minimize(objective, 0.0, beta_search_max(alpha), GRID_POINTS, tol)?;
    Ok(Optimum {
        beta_opt,
        p_err_min,
        evaluations,
    })
}

/// Grid scan plus golden-section refinement of each grid basin.
///
/// Returns `(x_min, f_min, evaluations)`.
pub fn grid_golden_minimize<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(invalid("tol", format!("must be finite and > 0, got {tol}")));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("interval", format!("[{lo}, {hi}] is empty or non-finite")));
    }
    if points < 3 {
        return Err(invalid("points", "grid needs at least 3 points"));
    }
    let checked = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { beta: x, value: v });
        }
        Ok(v)
    };

    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let values = grid.par_iter().map(|&x| checked(x)).collect::<Result<Vec<f64>>>()?;
    let mut evaluations = points;

    let mut best = (grid[0], values[0]);
    for (&x, &v) in grid.iter().zip(&values) {
        if v < best.1 {
            best = (x, v);
        }
    }

    for i in 0..points {
        let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < points { values[i + 1] } else { f64::INFINITY };
        let v = values[i];
        let is_basin = v <= left && v <= right;
        let strictly_below_neighbour = (i > 0 && v < left) || (i + 1 < points && v < right);
        if !is_basin || !strictly_below_neighbour {
            continue;
        }
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(points - 1)];
        let (x, fx, n) = golden_section(&checked, a, b, tol)?;
        evaluations += n;
        if fx < best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    Ok((best.0, best.1, evaluations))
}

/// Golden-section search on `[a, b]` until the bracket is narrower than `tol`.
fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok((x, fx, evaluations))
}
