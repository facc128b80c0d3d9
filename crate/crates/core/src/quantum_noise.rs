//! Photocurrent expectation and shot-noise injection.
//!
//! The detected current of a field made of modes with strengths `lambda_u`
//! has variance `r * k * <I>` with `r = sum lambda_u^2`. For the KK mode set
//! with all power in the signal port `r = 2`. Noise is drawn as independent
//! zero-mean Gaussians per sample with that variance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};
use crate::signal_model::EnvelopeFrame;

/// Floor applied to non-positive noisy samples, relative to the frame-mean current.
pub const CLAMP_FRACTION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Expected,
    Noisy,
}

/// Per-sample photocurrent in units of `k` times photons per detection window.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotocurrentTrace {
    pub values: Vec<f64>,
    pub k: f64,
    pub kind: TraceKind,
}

impl PhotocurrentTrace {
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Variance-to-mean law `Var(I) = r * k * <I>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLaw {
    pub r: f64,
    pub k: f64,
}

impl NoiseLaw {
    pub fn new(r: f64, k: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(KkError::InvalidArgument(format!("r must be >= 0, got {r}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(KkError::InvalidArgument(format!("k must be > 0, got {k}")));
        }
        Ok(Self { r, k })
    }

    /// The KK receiver law, `r = 2`.
    pub fn kk(k: f64) -> Result<Self> {
        Self::new(2.0, k)
    }

    /// No noise at all; used for round-trip checks.
    pub fn noiseless(k: f64) -> Result<Self> {
        Self::new(0.0, k)
    }
}

/// Identifies an independent random stream: one master seed, one stream per symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStream {
    pub seed: u64,
    pub stream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `I[m] = k |h[m]|^2`.
pub fn expected_current(frame: &EnvelopeFrame, k: f64) -> PhotocurrentTrace {
    PhotocurrentTrace {
        values: frame.samples.iter().map(|h| k * h.norm_sqr()).collect(),
        k,
        kind: TraceKind::Expected,
    }
}

/// Per-sample variance `r * k * I[m]`.
pub fn variance_law(trace: &PhotocurrentTrace, law: &NoiseLaw) -> Result<Vec<f64>> {
    if trace.kind != TraceKind::Expected {
        return Err(KkError::InvalidArgument(
            "variance law applies to expected traces only".into(),
        ));
    }
    trace
        .values
        .iter()
        .enumerate()
        .map(|(m, &i)| {
            if i < 0.0 {
                Err(KkError::InvariantViolation(format!(
                    "expected current is negative ({i}) at sample {m}"
                )))
            } else {
                Ok(law.r * law.k * i)
            }
        })
        .collect()
}

/// `r = sum lambda_u^2`, the commutator of the summed mode operator.
pub fn commutator_strength(mode_strengths: &[f64]) -> Result<f64> {
    if mode_strengths.is_empty() {
        return Err(KkError::InvalidArgument("no modes given".into()));
    }
    Ok(mode_strengths.iter().map(|l| l * l).sum())
}

/// Draws `noisy[m] = I[m] + sqrt(r k I[m]) z_m`, `z_m ~ N(0, 1)` i.i.d.
pub fn sample_noisy_current(
    trace: &PhotocurrentTrace,
    law: &NoiseLaw,
    stream: NoiseStream,
) -> Result<PhotocurrentTrace> {
    let mut out = trace.clone();
    add_noise_in_place(&mut out, law, stream)?;
    Ok(out)
}

/// In-place variant of [`sample_noisy_current`]; avoids a second buffer in the
/// per-symbol hot loop.
pub fn add_noise_in_place(
    trace: &mut PhotocurrentTrace,
    law: &NoiseLaw,
    stream: NoiseStream,
) -> Result<()> {
    if trace.kind != TraceKind::Expected {
        return Err(KkError::InvalidArgument(
            "noise is injected into expected traces only".into(),
        ));
    }
    if let Some((m, i)) = trace.values.iter().enumerate().find(|(_, i)| **i < 0.0) {
        return Err(KkError::InvariantViolation(format!(
            "expected current is negative ({i}) at sample {m}"
        )));
    }
    trace.kind = TraceKind::Noisy;
    if law.r == 0.0 {
        return Ok(());
    }
    let scale = law.r * law.k;
    let mut rng = stream.rng();
    for value in trace.values.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *value += (scale * *value).sqrt() * z;
    }
    Ok(())
}

/// Lower bound used by [`clamp_nonpositive`] for a frame with the given mean current.
pub fn clamp_floor(mean_expected: f64) -> f64 {
    CLAMP_FRACTION * mean_expected
}

/// Replaces samples `<= 0` with `floor`; returns how many were replaced.
pub fn clamp_nonpositive(trace: &mut PhotocurrentTrace, floor: f64) -> usize {
    let mut count = 0;
    for value in trace.values.iter_mut() {
        if *value <= 0.0 {
            *value = floor;
            count += 1;
        }
    }
    count
}
