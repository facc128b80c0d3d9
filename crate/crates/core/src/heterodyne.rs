//! Closed-form balanced heterodyne detection, the comparison baseline.
//!
//! Only the analytic mean current, current variance and time-averaged S/N are
//! modeled; the balanced detector is not simulated sample by sample.

use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneParams {
    /// Signal mean photon number.
    pub n_s: f64,
    /// Local-oscillator mean photon number.
    pub n_l: f64,
    pub k: f64,
    /// `arg(alpha_s alpha_L^*)`.
    pub beat_phase: f64,
}

impl HeterodyneParams {
    pub fn new(n_s: f64, n_l: f64, k: f64, beat_phase: f64) -> Result<Self> {
        if !(n_s >= 0.0 && n_s.is_finite()) {
            return Err(KkError::InvalidArgument(format!(
                "n_s must be >= 0, got {n_s}"
            )));
        }
        if !(n_l > 0.0) {
            return Err(KkError::InvalidArgument(format!(
                "n_L must be > 0, got {n_l}"
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(KkError::InvalidArgument(format!("k must be > 0, got {k}")));
        }
        Ok(Self {
            n_s,
            n_l,
            k,
            beat_phase,
        })
    }
}

/// `2k sqrt(n_s n_L) sin(t_phase - beat_phase)`.
pub fn balanced_mean_current(p: &HeterodyneParams, t_phase: f64) -> f64 {
    2.0 * p.k * (p.n_s * p.n_l).sqrt() * (t_phase - p.beat_phase).sin()
}

/// `k^2 (3 n_s + 2 n_L)`.
pub fn balanced_current_variance(p: &HeterodyneParams) -> f64 {
    p.k * p.k * (3.0 * p.n_s + 2.0 * p.n_l)
}

/// `2 n_s n_L / (2 n_L + 3 n_s)`; tends to `n_s` for a strong LO.
pub fn balanced_snr(p: &HeterodyneParams) -> Result<f64> {
    if !(p.n_l > 0.0) {
        return Err(KkError::InvalidArgument(
            "balanced S/N needs n_L > 0".into(),
        ));
    }
    Ok(p.n_s / (1.0 + 1.5 * p.n_s / p.n_l))
}

/// Shot-noise limit of the KK receiver, `1.5 n_s`, for side-by-side reports.
pub fn kk_snr_limit(n_s: f64) -> f64 {
    1.5 * n_s
}
