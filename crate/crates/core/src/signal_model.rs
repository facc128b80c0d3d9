//! Minimum-phase single-sideband symbol frames.
//!
//! A frame is the complex envelope `h[m] = A_c + sqrt(n_s) e^{j theta} e^{-j m dphi}`
//! on a per-symbol sample grid: a real constant carrier plus one QPSK symbol
//! rotating at the intermediate frequency. The optical carrier factor is not
//! represented since it drops out of `|h|^2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KkError, Result};

/// Converts a power ratio in dB to a linear factor.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Photon numbers and carrier level of one experiment point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Mean signal photon number per symbol.
    pub n_s: f64,
    /// Carrier-to-signal power ratio in dB.
    pub cspr_db: f64,
    /// Real carrier amplitude, `sqrt(cspr_linear * n_s)`.
    pub carrier_amplitude: f64,
    /// Argument of the signal amplitude in radians.
    pub signal_phase: f64,
}

impl SignalParams {
    pub fn new(n_s: f64, cspr_db: f64) -> Result<Self> {
        if !(n_s > 0.0 && n_s.is_finite()) {
            return Err(KkError::InvalidArgument(format!(
                "n_s must be positive and finite, got {n_s}"
            )));
        }
        if !(cspr_db > 0.0 && cspr_db.is_finite()) {
            return Err(KkError::InvalidArgument(format!(
                "cspr_db must be positive and finite, got {cspr_db}"
            )));
        }
        Ok(Self {
            n_s,
            cspr_db,
            carrier_amplitude: (db_to_linear(cspr_db) * n_s).sqrt(),
            signal_phase: 0.0,
        })
    }

    /// Builds parameters directly from amplitudes.
    ///
    /// This admits the limits excluded by [`SignalParams::new`]: a vanishing
    /// signal (`n_s = 0`, CSPR reported as `+inf`) and a carrier weaker than
    /// the signal (negative CSPR), which yields frames that are not minimum
    /// phase.
    pub fn from_amplitudes(carrier_amplitude: f64, n_s: f64) -> Result<Self> {
        if !(carrier_amplitude > 0.0 && carrier_amplitude.is_finite()) {
            return Err(KkError::InvalidArgument(format!(
                "carrier amplitude must be positive and finite, got {carrier_amplitude}"
            )));
        }
        if !(n_s >= 0.0 && n_s.is_finite()) {
            return Err(KkError::InvalidArgument(format!(
                "n_s must be non-negative and finite, got {n_s}"
            )));
        }
        let cspr_db = if n_s == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (carrier_amplitude * carrier_amplitude / n_s).log10()
        };
        Ok(Self {
            n_s,
            cspr_db,
            carrier_amplitude,
            signal_phase: 0.0,
        })
    }

    /// Same parameters with the signal phase taken from `symbol`.
    pub fn for_symbol(mut self, symbol: ModulationSymbol) -> Self {
        self.signal_phase = symbol.phase();
        self
    }

    pub fn signal_amplitude(&self) -> f64 {
        self.n_s.sqrt()
    }

    /// Complex signal amplitude `alpha_s`.
    pub fn alpha_s(&self) -> Complex64 {
        Complex64::from_polar(self.signal_amplitude(), self.signal_phase)
    }

    pub fn cspr_linear(&self) -> f64 {
        self.carrier_amplitude * self.carrier_amplitude / self.n_s
    }
}

/// Per-symbol time discretization.
///
/// Time is measured in samples, so the intermediate frequency is carried as a
/// phase advance per sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub samples_per_if_period: usize,
    pub if_periods_per_symbol: usize,
    /// Sample index `l` of the decision time.
    pub decision_index: usize,
    /// Always `2 * decision_index`.
    pub total_samples: usize,
}

impl SamplingGrid {
    /// Grid with the decision time at the center of `samples_per_if_period *
    /// if_periods_per_symbol` samples.
    pub fn new(samples_per_if_period: usize, if_periods_per_symbol: usize) -> Result<Self> {
        let nominal = Self::nominal_samples(samples_per_if_period, if_periods_per_symbol)?;
        if nominal % 2 != 0 {
            return Err(KkError::InvalidArgument(format!(
                "symbol length {nominal} has no centered decision sample (must be even)"
            )));
        }
        Self::with_decision_index(samples_per_if_period, if_periods_per_symbol, nominal / 2)
    }

    /// Grid with an explicit decision index; the frame length follows as
    /// `2 * decision_index`, so the principal-value window stays centered.
    pub fn with_decision_index(
        samples_per_if_period: usize,
        if_periods_per_symbol: usize,
        decision_index: usize,
    ) -> Result<Self> {
        let nominal = Self::nominal_samples(samples_per_if_period, if_periods_per_symbol)?;
        if decision_index < 1 || decision_index >= nominal {
            return Err(KkError::InvalidArgument(format!(
                "decision index {decision_index} must lie in [1, {nominal})"
            )));
        }
        Ok(Self {
            samples_per_if_period,
            if_periods_per_symbol,
            decision_index,
            total_samples: 2 * decision_index,
        })
    }

    /// 2000 samples per IF period, 100 IF periods, decision at sample 10^5.
    pub fn paper() -> Self {
        Self::new(2000, 100).expect("paper grid is valid")
    }

    /// Accuracy-degraded test grid: 200 samples per IF period, 20 IF periods.
    pub fn reduced() -> Self {
        Self::new(200, 20).expect("reduced grid is valid")
    }

    fn nominal_samples(
        samples_per_if_period: usize,
        if_periods_per_symbol: usize,
    ) -> Result<usize> {
        if samples_per_if_period < 2 || if_periods_per_symbol < 1 {
            return Err(KkError::InvalidArgument(format!(
                "grid needs samples_per_if_period >= 2 and if_periods_per_symbol >= 1, \
                 got {samples_per_if_period} and {if_periods_per_symbol}"
            )));
        }
        samples_per_if_period
            .checked_mul(if_periods_per_symbol)
            .ok_or_else(|| KkError::InvalidArgument("grid size overflows".into()))
    }

    /// IF phase advance per sample, `2 pi / samples_per_if_period`.
    pub fn phase_step(&self) -> f64 {
        TAU / self.samples_per_if_period as f64
    }

    /// IF phase `m * phase_step` reduced to `[0, 2 pi)`.
    ///
    /// The reduction is done on the integer index so frames are bitwise periodic.
    pub fn if_phase(&self, m: usize) -> f64 {
        (m % self.samples_per_if_period) as f64 * self.phase_step()
    }

    /// `(decision_index * phase_step) mod 2 pi`.
    pub fn decision_phase(&self) -> f64 {
        self.if_phase(self.decision_index)
    }
}

/// A QPSK symbol; `phase = pi/4 + index * pi/2`, one per quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModulationSymbol(u8);

impl ModulationSymbol {
    pub const ALL: [ModulationSymbol; 4] = [
        ModulationSymbol(0),
        ModulationSymbol(1),
        ModulationSymbol(2),
        ModulationSymbol(3),
    ];

    pub fn qpsk(index: u8) -> Result<Self> {
        if index > 3 {
            return Err(KkError::InvalidArgument(format!(
                "QPSK symbol index must be in 0..=3, got {index}"
            )));
        }
        Ok(Self(index))
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    pub fn phase(&self) -> f64 {
        FRAC_PI_4 + f64::from(self.0) * FRAC_PI_2
    }
}

/// Maps a QPSK index to `sqrt(n_s) e^{j(pi/4 + index pi/2)}`.
pub fn map_qpsk(index: u8, n_s: f64) -> Result<Complex64> {
    let symbol = ModulationSymbol::qpsk(index)?;
    if !(n_s > 0.0 && n_s.is_finite()) {
        return Err(KkError::InvalidArgument(format!(
            "n_s must be positive and finite, got {n_s}"
        )));
    }
    Ok(Complex64::from_polar(n_s.sqrt(), symbol.phase()))
}

/// Complex envelope samples of one symbol frame.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFrame {
    pub samples: Vec<Complex64>,
    pub grid: SamplingGrid,
}

/// Synthesizes `h[m] = A_c + sqrt(n_s) e^{j symbol.phase} e^{-j m phase_step}`.
pub fn synthesize_mp_envelope(
    params: &SignalParams,
    grid: &SamplingGrid,
    symbol: ModulationSymbol,
) -> EnvelopeFrame {
    let alpha = Complex64::from_polar(params.signal_amplitude(), symbol.phase());
    let carrier = Complex64::new(params.carrier_amplitude, 0.0);
    let samples = (0..grid.total_samples)
        .map(|m| carrier + alpha * Complex64::from_polar(1.0, -grid.if_phase(m)))
        .collect();
    EnvelopeFrame {
        samples,
        grid: *grid,
    }
}

/// Result of [`check_minimum_phase`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimumPhaseReport {
    pub is_minimum_phase: bool,
    pub min_abs: f64,
    /// Signed number of turns of the closed trajectory around the origin.
    pub winding: i64,
}

/// Checks that the trajectory stays off the origin and does not encircle it.
pub fn check_minimum_phase(frame: &EnvelopeFrame) -> MinimumPhaseReport {
    let samples = &frame.samples;
    let min_abs = samples
        .iter()
        .map(|h| h.norm())
        .fold(f64::INFINITY, f64::min);
    if samples.is_empty() || min_abs <= 0.0 {
        return MinimumPhaseReport {
            is_minimum_phase: false,
            min_abs: if samples.is_empty() { 0.0 } else { min_abs },
            winding: 0,
        };
    }

    // closed loop: include the segment from the last sample back to the first
    let mut total = 0.0;
    for (i, h) in samples.iter().enumerate() {
        let next = samples[(i + 1) % samples.len()];
        total += (next / h).arg();
    }
    let winding = (total / TAU).round() as i64;
    MinimumPhaseReport {
        is_minimum_phase: winding == 0,
        min_abs,
        winding,
    }
}

/// Wraps an angle into `[0, modulus)`.
pub(crate) fn wrap_angle(angle: f64, modulus: f64) -> f64 {
    let wrapped = angle.rem_euclid(modulus);
    if wrapped >= modulus {
        0.0
    } else {
        wrapped
    }
}

/// Signed angular distance between two axis directions (mod pi), in `(-pi/2, pi/2]`.
pub(crate) fn axis_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b, PI);
    if d > FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn qpsk_mapping_examples() {
        let s0 = map_qpsk(0, 100.0).unwrap();
        assert_relative_eq!(s0.re, 7.0710678118654755, epsilon = 1e-12);
        assert_relative_eq!(s0.im, 7.0710678118654755, epsilon = 1e-12);

        let s2 = map_qpsk(2, 100.0).unwrap();
        assert_relative_eq!(s2.re, -7.0710678118654755, epsilon = 1e-12);
        assert_relative_eq!(s2.im, -7.0710678118654755, epsilon = 1e-12);

        let s1 = map_qpsk(1, 60.0).unwrap();
        assert_relative_eq!(s1.re, -5.477225575051661, epsilon = 1e-12);
        assert_relative_eq!(s1.im, 5.477225575051661, epsilon = 1e-12);
        assert_relative_eq!(s1.norm_sqr(), 60.0, max_relative = 1e-12);

        assert!(matches!(
            map_qpsk(4, 100.0),
            Err(KkError::InvalidArgument(_))
        ));
    }

    #[test]
    fn qpsk_phases_one_per_quadrant() {
        let quadrants: Vec<(bool, bool)> = ModulationSymbol::ALL
            .iter()
            .map(|s| {
                let z = Complex64::from_polar(1.0, s.phase());
                (z.re > 0.0, z.im > 0.0)
            })
            .collect();
        assert_eq!(
            quadrants,
            vec![(true, true), (false, true), (false, false), (true, false)]
        );
    }

    #[test]
    fn carrier_amplitude_from_cspr() {
        let p = SignalParams::new(100.0, 10.0).unwrap();
        assert_relative_eq!(p.carrier_amplitude, 1000f64.sqrt(), max_relative = 1e-12);
        assert!(SignalParams::new(0.0, 10.0).is_err());
        assert!(SignalParams::new(100.0, 0.0).is_err());
        assert!(SignalParams::new(100.0, -3.0).is_err());
    }

    #[test]
    fn grid_profiles() {
        let paper = SamplingGrid::paper();
        assert_eq!(paper.decision_index, 100_000);
        assert_eq!(paper.total_samples, 200_000);
        let reduced = SamplingGrid::reduced();
        assert_eq!(reduced.total_samples, 4000);
        assert_relative_eq!(
            reduced.phase_step() * reduced.samples_per_if_period as f64,
            TAU,
            max_relative = 1e-15
        );
        let shifted = SamplingGrid::with_decision_index(2000, 100, 99_750).unwrap();
        assert_eq!(shifted.total_samples, 199_500);
        assert_relative_eq!(shifted.decision_phase(), 7.0 * FRAC_PI_4, epsilon = 1e-12);
        assert!(SamplingGrid::with_decision_index(200, 20, 0).is_err());
        assert!(SamplingGrid::with_decision_index(200, 20, 4000).is_err());
        assert!(SamplingGrid::new(3, 1).is_err());
    }

    #[test]
    fn zero_signal_frame_is_constant() {
        let params = SignalParams::from_amplitudes(31.0, 0.0).unwrap();
        let frame =
            synthesize_mp_envelope(&params, &SamplingGrid::reduced(), ModulationSymbol::ALL[2]);
        assert!(frame
            .samples
            .iter()
            .all(|h| *h == Complex64::new(31.0, 0.0)));
        let report = check_minimum_phase(&frame);
        assert!(report.is_minimum_phase);
        assert_eq!(report.winding, 0);
    }

    #[test]
    fn envelope_magnitude_range_at_10db() {
        let params = SignalParams::new(100.0, 10.0).unwrap();
        let frame =
            synthesize_mp_envelope(&params, &SamplingGrid::reduced(), ModulationSymbol::ALL[0]);
        let (lo, hi) = frame
            .samples
            .iter()
            .map(|h| h.norm())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), a| {
                (lo.min(a), hi.max(a))
            });
        let a_c = 1000f64.sqrt();
        assert_relative_eq!(hi, a_c + 10.0, max_relative = 1e-9);
        assert_relative_eq!(lo, a_c - 10.0, max_relative = 1e-9);
    }

    #[test]
    fn aligned_sample_has_peak_magnitude() {
        // m * phase_step = pi/4 at m = spp / 8
        let params = SignalParams::new(100.0, 30.0).unwrap();
        let grid = SamplingGrid::reduced();
        let frame = synthesize_mp_envelope(&params, &grid, ModulationSymbol::ALL[0]);
        let m = grid.samples_per_if_period / 8;
        assert_relative_eq!(
            frame.samples[m].norm(),
            params.carrier_amplitude + 10.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn weak_carrier_winds_once_per_if_period() {
        let params = SignalParams::from_amplitudes(5.0, 100.0).unwrap();
        let grid = SamplingGrid::paper();
        let frame = synthesize_mp_envelope(&params, &grid, ModulationSymbol::ALL[0]);
        let report = check_minimum_phase(&frame);
        assert!(!report.is_minimum_phase);
        assert_eq!(report.winding.abs(), 100);
    }

    #[test]
    fn table_operating_point_is_minimum_phase() {
        let params = SignalParams::new(100.0, 10.0).unwrap();
        for symbol in ModulationSymbol::ALL {
            let frame = synthesize_mp_envelope(&params, &SamplingGrid::paper(), symbol);
            assert!(check_minimum_phase(&frame).is_minimum_phase);
        }
    }

    #[test]
    fn all_zero_frame_is_degenerate() {
        let frame = EnvelopeFrame {
            samples: vec![Complex64::new(0.0, 0.0); 8],
            grid: SamplingGrid::new(4, 2).unwrap(),
        };
        let report = check_minimum_phase(&frame);
        assert!(!report.is_minimum_phase);
        assert_eq!(report.min_abs, 0.0);
    }

    #[test]
    fn axis_difference_wraps() {
        assert_relative_eq!(axis_difference(0.1, PI - 0.1), 0.2, epsilon = 1e-12);
        assert_relative_eq!(axis_difference(PI - 0.1, 0.1), -0.2, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn cspr_carrier_invariant(n_s in 1.0f64..500.0, cspr_db in 0.1f64..40.0) {
            let p = SignalParams::new(n_s, cspr_db).unwrap();
            let ratio = p.carrier_amplitude.powi(2) / n_s;
            prop_assert!((ratio / db_to_linear(cspr_db) - 1.0).abs() < 1e-12);
            prop_assert!(p.carrier_amplitude > n_s.sqrt());
        }

        #[test]
        fn envelope_beat_structure(
            n_s in 1.0f64..300.0,
            cspr_db in 0.5f64..35.0,
            index in 0u8..4,
        ) {
            let params = SignalParams::new(n_s, cspr_db).unwrap();
            let grid = SamplingGrid::new(50, 4).unwrap();
            let symbol = ModulationSymbol::qpsk(index).unwrap();
            let frame = synthesize_mp_envelope(&params, &grid, symbol);
            let a_c = params.carrier_amplitude;
            for (m, h) in frame.samples.iter().enumerate() {
                let beat = h.norm_sqr() - (a_c * a_c + n_s);
                let expected = 2.0 * a_c * n_s.sqrt() * (grid.if_phase(m) - symbol.phase()).cos();
                prop_assert!((beat - expected).abs() <= 1e-10 * (a_c * a_c + n_s));
            }
            for m in grid.samples_per_if_period..grid.total_samples {
                prop_assert_eq!(frame.samples[m], frame.samples[m - grid.samples_per_if_period]);
            }
            prop_assert!(check_minimum_phase(&frame).is_minimum_phase);
        }
    }
}
