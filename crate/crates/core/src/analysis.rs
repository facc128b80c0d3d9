//! Constellation statistics and the analytic noise predictions they are
//! compared against.
//!
//! Per-cluster statistics are grouped by the transmitted symbol label, so a
//! point that lands in the wrong quadrant still counts toward its own cluster.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};
use crate::kk_receiver::RetrievedSymbol;
use crate::signal_model::{wrap_angle, ModulationSymbol};

/// Quadrature variance of a coherent state, `<(da_1)^2> = <(da_2)^2>`.
pub const COHERENT_QUADRATURE_VARIANCE: f64 = 0.25;
/// Total variance of a coherent state.
pub const COHERENT_TOTAL_VARIANCE: f64 = 0.5;
/// Radial (amplitude) variance of the KK-retrieved field.
pub const RADIAL_VARIANCE: f64 = 0.5;
/// Tangential variance of the KK-retrieved field.
pub const TANGENTIAL_VARIANCE: f64 = 1.0 / 6.0;
/// Total KK noise `N = 1/2 + 1/6`.
pub const TOTAL_VARIANCE: f64 = 2.0 / 3.0;
/// Predicted major/minor variance ratio of the noise ellipse.
pub const ELLIPSE_RATIO: f64 = RADIAL_VARIANCE / TANGENTIAL_VARIANCE;

/// Clusters smaller than this are rejected by the estimators.
pub const MIN_CLUSTER_POINTS: usize = 100;

/// All retrieved points of one run, labeled by transmitted symbol.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstellationCloud {
    pub points: Vec<(ModulationSymbol, RetrievedSymbol)>,
    pub decision_phase: f64,
}

impl ConstellationCloud {
    pub fn cluster(&self, symbol: ModulationSymbol) -> Vec<Complex64> {
        self.points
            .iter()
            .filter(|(s, _)| *s == symbol)
            .map(|(_, r)| r.alpha_prime)
            .collect()
    }

    pub fn clamp_count(&self) -> usize {
        self.points.iter().map(|(_, r)| r.clamp_count).sum()
    }
}

/// Symmetric 2x2 covariance of `(Re, Im)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariance2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Covariance2 {
    pub fn diag(xx: f64, yy: f64) -> Self {
        Self { xx, xy: 0.0, yy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Variance of the projection onto the unit vector at `theta`.
    pub fn project(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * c * self.xx + 2.0 * s * c * self.xy + s * s * self.yy
    }

    /// `R C R^T` for a rotation by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            xx: c * c * self.xx - 2.0 * s * c * self.xy + s * s * self.yy,
            xy: s * c * (self.xx - self.yy) + (c * c - s * s) * self.xy,
            yy: s * s * self.xx + 2.0 * s * c * self.xy + c * c * self.yy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub symbol: ModulationSymbol,
    pub count: usize,
    pub mean: Complex64,
    /// Unbiased sample covariance.
    pub covariance: Covariance2,
}

impl ClusterStats {
    pub fn from_points(symbol: ModulationSymbol, points: &[Complex64]) -> Result<Self> {
        let count = points.len();
        if count < MIN_CLUSTER_POINTS {
            return Err(KkError::InsufficientData {
                symbol: symbol.index(),
                count,
                required: MIN_CLUSTER_POINTS,
            });
        }
        let n = count as f64;
        let mean = points.iter().sum::<Complex64>() / n;
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for p in points {
            let d = p - mean;
            xx += d.re * d.re;
            xy += d.re * d.im;
            yy += d.im * d.im;
        }
        let dof = n - 1.0;
        Ok(Self {
            symbol,
            count,
            mean,
            covariance: Covariance2 {
                xx: xx / dof,
                xy: xy / dof,
                yy: yy / dof,
            },
        })
    }

    /// `|mean|^2 / trace(cov)`.
    pub fn snr(&self) -> Result<f64> {
        let total = self.covariance.trace();
        if !(total > 0.0) {
            return Err(KkError::InfiniteSnr);
        }
        Ok(self.mean.norm_sqr() / total)
    }
}

/// Mean and covariance for each of the four transmitted symbols.
pub fn estimate_cluster_stats(cloud: &ConstellationCloud) -> Result<Vec<ClusterStats>> {
    ModulationSymbol::ALL
        .iter()
        .map(|&s| ClusterStats::from_points(s, &cloud.cluster(s)))
        .collect()
}

/// Cluster SNR `|mean|^2 / trace(cov)` averaged over clusters.
pub fn estimate_snr(clusters: &[ClusterStats]) -> Result<f64> {
    if clusters.is_empty() {
        return Err(KkError::InvalidArgument("no clusters".into()));
    }
    let mut total = 0.0;
    for c in clusters {
        total += c.snr()?;
    }
    Ok(total / clusters.len() as f64)
}

/// Principal axes of a cluster covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEllipse {
    pub center: Complex64,
    pub lambda_major: f64,
    pub lambda_minor: f64,
    /// Major-axis direction in `[0, pi)`.
    pub orientation: f64,
    /// `lambda_major / lambda_minor`, the squared axis-length ratio.
    pub rho: f64,
    /// Set when the eigenvalues coincide and the orientation is meaningless
    /// (reported as 0).
    pub degenerate: bool,
}

/// Closed-form eigendecomposition of a 2x2 symmetric positive-definite covariance.
pub fn pca_ellipse(covariance: &Covariance2, center: Complex64) -> Result<NoiseEllipse> {
    let Covariance2 { xx, xy, yy } = *covariance;
    if ![xx, xy, yy].iter().all(|v| v.is_finite()) {
        return Err(KkError::DegenerateEllipse);
    }
    let half_trace = 0.5 * (xx + yy);
    let radius = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    let lambda_major = half_trace + radius;
    // det / lambda_major avoids cancellation when the ellipse is very thin
    let det = xx * yy - xy * xy;
    if !(lambda_major > 0.0) || !(det > 0.0) {
        return Err(KkError::DegenerateEllipse);
    }
    let lambda_minor = det / lambda_major;
    let degenerate = radius <= 1e-12 * half_trace;
    let orientation = if degenerate {
        0.0
    } else {
        wrap_angle(0.5 * (2.0 * xy).atan2(xx - yy), PI)
    };
    Ok(NoiseEllipse {
        center,
        lambda_major,
        lambda_minor,
        orientation,
        rho: lambda_major / lambda_minor,
        degenerate,
    })
}

/// Variances along `theta` and `theta + pi/2`.
pub fn directional_variances(covariance: &Covariance2, theta: f64) -> (f64, f64) {
    (
        covariance.project(theta),
        covariance.project(theta + 0.5 * PI),
    )
}

/// Analytic KK noise figures for a given signal photon number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedVariances {
    pub radial: f64,
    pub tangential: f64,
    pub total: f64,
    pub snr: f64,
}

impl PredictedVariances {
    pub fn for_signal(n_s: f64) -> Self {
        Self {
            radial: RADIAL_VARIANCE,
            tangential: TANGENTIAL_VARIANCE,
            total: TOTAL_VARIANCE,
            snr: n_s / TOTAL_VARIANCE,
        }
    }

    /// In-phase and quadrature variances at rotation `theta`.
    pub fn iq(&self, theta: f64) -> (f64, f64) {
        let c2 = theta.cos().powi(2);
        let s2 = theta.sin().powi(2);
        (
            c2 * self.radial + s2 * self.tangential,
            s2 * self.radial + c2 * self.tangential,
        )
    }
}

/// I/Q variances of the down-converted field for `theta = omega_IF t + phi(t)`.
pub fn predict_iq_variances(theta: f64) -> (f64, f64) {
    PredictedVariances::for_signal(1.0).iq(theta)
}

/// Phase variance `k / (6 I)` at the decision sample.
pub fn predict_phase_variance(current: f64, k: f64) -> Result<f64> {
    if !(current > 0.0) {
        return Err(KkError::InvalidArgument(format!(
            "current must be positive, got {current}"
        )));
    }
    Ok(k / (6.0 * current))
}

/// Partial sum `sum_{m=1..M} 1/m^2`, accumulated smallest terms first.
pub fn basel_sum_check(terms: u64) -> Result<f64> {
    if terms < 1 {
        return Err(KkError::InvalidArgument("need at least one term".into()));
    }
    Ok((1..=terms).rev().map(|m| 1.0 / (m as f64 * m as f64)).sum())
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_phase(angle: f64) -> f64 {
    wrap_angle(angle, TAU)
}
