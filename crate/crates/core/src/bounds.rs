//! Closed-form reference limits for binary phase-shift keyed coherent states.
//!
//! All three functions take the signal intensity |α|² (mean photon number).
//! The dB improvement of a receiver over a reference is
//! `10·log10(p_ref / p_err)`, so a receiver whose error is ten times smaller
//! than the standard quantum limit is reported as a 10 dB improvement.

use crate::error::{invalid, Result};

/// Mean photon number |α|² of a coherent signal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SignalIntensity(f64);

impl SignalIntensity {
    pub fn new(alpha_sq: f64) -> Result<Self> {
        if !alpha_sq.is_finite() {
            return Err(invalid("alpha_sq", format!("must be finite, got {alpha_sq}")));
        }
        if alpha_sq < 0.0 {
            return Err(invalid("alpha_sq", format!("must be >= 0, got {alpha_sq}")));
        }
        Ok(Self(alpha_sq))
    }

    /// Intensity of the amplitude `alpha` (must be finite and ≥ 0).
    pub fn from_amplitude(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        Self::new(alpha * alpha)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// The real, non-negative amplitude |α|.
    pub fn amplitude(self) -> f64 {
        self.0.sqrt()
    }
}

impl TryFrom<f64> for SignalIntensity {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SignalIntensity> for f64 {
    fn from(value: SignalIntensity) -> f64 {
        value.0
    }
}

/// Error of an ideal homodyne receiver, `(1 − erf(√2·|α|)) / 2`.
///
/// Evaluated through `erfc` so the result keeps full relative precision deep
/// into the tail.
pub fn sql_error(alpha_sq: SignalIntensity) -> f64 {
    0.5 * libm::erfc((2.0 * alpha_sq.get()).sqrt())
}

/// The Helstrom bound, `(1 − √(1 − e^{−4|α|²})) / 2`.
pub fn helstrom_error(alpha_sq: SignalIntensity) -> f64 {
    let x = alpha_sq.get();
    let overlap = (-4.0 * x).exp();
    // 1 − √(1 − ε) = ε / (1 + √(1 − ε)); 1 − ε via expm1 near x = 0.
    let root = (-(-4.0 * x).exp_m1()).sqrt();
    overlap / (2.0 * (1.0 + root))
}

/// Improvement of `p_err` over the reference error `p_ref`, in dB.
pub fn improvement_db(p_err: f64, p_ref: f64) -> Result<f64> {
    for (name, p) in [("p_err", p_err), ("p_ref", p_ref)] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(name, format!("must lie in (0, 1], got {p}")));
        }
    }
    Ok(10.0 * (p_ref / p_err).log10())
}
