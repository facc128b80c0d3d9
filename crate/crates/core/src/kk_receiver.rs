//! Field reconstruction from a single intensity trace.
//!
//! The phase of the minimum-phase envelope at the decision sample `l` is the
//! principal-value Hilbert sum of the log-current,
//!
//! ```text
//! phi = 1/(2 pi) * sum_{n=1..w} [ln I[l+n] - ln I[l-n]] / n
//! ```
//!
//! taken over the symmetric window `w = min(l, N-1-l)` with the singular
//! sample skipped. No FFT is involved: only the decision sample is needed, so
//! the cost is one pass over the frame. With the envelope convention
//! `h = A_c + alpha e^{-j m dphi}` this sum equals `arg h[l]`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};
use crate::quantum_noise::{
    add_noise_in_place, clamp_floor, clamp_nonpositive, expected_current, NoiseLaw, NoiseStream,
    PhotocurrentTrace,
};
use crate::signal_model::{
    check_minimum_phase, synthesize_mp_envelope, ModulationSymbol, SamplingGrid, SignalParams,
};

/// Retrieved phase of `h` at the decision sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEstimate {
    pub phi: f64,
    pub decision_index: usize,
}

/// Reconstructed, down-converted field of one symbol frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievedSymbol {
    pub alpha_prime: Complex64,
    /// `(decision_index * phase_step) mod 2 pi`.
    pub decision_phase: f64,
    /// Non-positive current samples clamped in this frame.
    pub clamp_count: usize,
}

/// Discrete principal-value sum over log-values, `1/(2 pi) sum ln I[m] / (m - l)`
/// on the symmetric window around `l`.
pub fn principal_value_sum(log_values: &[f64], decision_index: usize) -> Result<f64> {
    let l = decision_index;
    if l == 0 || l + 1 >= log_values.len() {
        return Err(KkError::InvalidArgument(format!(
            "decision index {l} must satisfy 0 < l < {} - 1",
            log_values.len()
        )));
    }
    let half_width = l.min(log_values.len() - 1 - l);
    let sum: f64 = (1..=half_width)
        .map(|n| (log_values[l + n] - log_values[l - n]) / n as f64)
        .sum();
    Ok(sum / TAU)
}

/// Phase of `h` at `decision_index` from the current trace.
pub fn hilbert_phase(trace: &PhotocurrentTrace, decision_index: usize) -> Result<PhaseEstimate> {
    let n = trace.values.len();
    if decision_index == 0 || decision_index + 1 >= n {
        return Err(KkError::InvalidArgument(format!(
            "decision index {decision_index} out of range for a trace of {n} samples"
        )));
    }
    let half_width = decision_index.min(n - 1 - decision_index);
    let window = &trace.values[decision_index - half_width..=decision_index + half_width];
    if let Some(bad) = window.iter().find(|v| !(**v > 0.0)) {
        return Err(KkError::InvariantViolation(format!(
            "current sample {bad} is not strictly positive; clamp before phase retrieval"
        )));
    }
    let logs: Vec<f64> = window.iter().map(|v| v.ln()).collect();
    let phi = principal_value_sum(&logs, half_width)?;
    Ok(PhaseEstimate {
        phi,
        decision_index,
    })
}

/// `alpha' = [sqrt(I[l]/k) e^{j phi} - A_c] e^{j l phase_step}`.
pub fn retrieve_field(
    trace: &PhotocurrentTrace,
    phase: &PhaseEstimate,
    params: &SignalParams,
    grid: &SamplingGrid,
) -> Result<RetrievedSymbol> {
    let l = phase.decision_index;
    let current = *trace
        .values
        .get(l)
        .ok_or_else(|| KkError::InvalidArgument(format!("decision index {l} beyond trace end")))?;
    if !(current > 0.0) {
        return Err(KkError::InvariantViolation(format!(
            "current at the decision sample is not positive ({current})"
        )));
    }
    let decision_phase = grid.if_phase(l);
    let magnitude = (current / trace.k).sqrt();
    let envelope = Complex64::from_polar(magnitude, phase.phi);
    let alpha_prime =
        (envelope - params.carrier_amplitude) * Complex64::from_polar(1.0, decision_phase);
    Ok(RetrievedSymbol {
        alpha_prime,
        decision_phase,
        clamp_count: 0,
    })
}

/// Noiseless expected trace of one symbol, prepared once and reused for every
/// noisy draw of that symbol.
#[derive(Clone, Debug)]
pub struct PreparedSymbol {
    params: SignalParams,
    grid: SamplingGrid,
    law: NoiseLaw,
    symbol: ModulationSymbol,
    expected: PhotocurrentTrace,
    floor: f64,
}

impl PreparedSymbol {
    /// Synthesizes and checks the frame. Fails with
    /// [`KkError::NotMinimumPhase`] when the frame would encircle the origin.
    pub fn new(
        params: &SignalParams,
        grid: &SamplingGrid,
        symbol: ModulationSymbol,
        law: &NoiseLaw,
    ) -> Result<Self> {
        let frame = synthesize_mp_envelope(params, grid, symbol);
        let report = check_minimum_phase(&frame);
        if !report.is_minimum_phase {
            return Err(KkError::NotMinimumPhase {
                min_abs: report.min_abs,
                winding: report.winding,
            });
        }
        let expected = expected_current(&frame, law.k);
        let floor = clamp_floor(expected.mean());
        Ok(Self {
            params: params.for_symbol(symbol),
            grid: *grid,
            law: *law,
            symbol,
            expected,
            floor,
        })
    }

    pub fn symbol(&self) -> ModulationSymbol {
        self.symbol
    }

    pub fn expected(&self) -> &PhotocurrentTrace {
        &self.expected
    }

    /// One noisy realization through clamping, phase and field retrieval.
    pub fn draw(&self, stream: NoiseStream) -> Result<RetrievedSymbol> {
        let mut trace = self.expected.clone();
        add_noise_in_place(&mut trace, &self.law, stream)?;
        let clamp_count = clamp_nonpositive(&mut trace, self.floor);
        let phase = hilbert_phase(&trace, self.grid.decision_index)?;
        let mut retrieved = retrieve_field(&trace, &phase, &self.params, &self.grid)?;
        retrieved.clamp_count = clamp_count;
        Ok(retrieved)
    }
}

/// Full per-symbol pipeline: synthesize, expected current, noise, clamp,
/// phase retrieval, field retrieval.
pub fn simulate_symbol(
    params: &SignalParams,
    grid: &SamplingGrid,
    symbol: ModulationSymbol,
    law: &NoiseLaw,
    stream: NoiseStream,
) -> Result<RetrievedSymbol> {
    PreparedSymbol::new(params, grid, symbol, law)?.draw(stream)
}

/// Closed-form `arg h[l]` of the noiseless envelope at the decision sample.
pub fn envelope_phase_at_decision(
    params: &SignalParams,
    grid: &SamplingGrid,
    symbol: ModulationSymbol,
) -> f64 {
    let h = params.carrier_amplitude
        + Complex64::from_polar(
            params.signal_amplitude(),
            symbol.phase() - grid.decision_phase(),
        );
    h.arg()
}
