//! One-sided Fourier transforms `V(i omega) = int_0^inf V(t) exp(-i omega t) dt`
//! of closed-form and sampled signals.
//!
//! A signal settling at a nonzero constant `c` has no ordinary transform;
//! both routes give it the Abel limit `c / (i omega)`, so the identity
//! `V_out = H V_in` holds for every stage including the integrating ones.

use num_complex::Complex64;

use crate::blocks::{dc_output, transfer_at, BlockCascade, Stage, StabilizerParams};
use crate::error::{Error, Result};
use crate::exp_sum::ExponentialSum;
use crate::linear::CascadeCoefficients;
use crate::trace::SignalTrace;

/// A sampled trace whose tail still varies more than this fraction of its
/// peak is flagged as truncated.
pub const DECAY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub omega: f64,
    pub value: Complex64,
}

/// Anything that can report a stage signal as an exponential sum.
pub trait ClosedForm {
    fn stage_sum(&self, stage: Stage) -> Result<ExponentialSum>;
}

impl ClosedForm for CascadeCoefficients {
    fn stage_sum(&self, stage: Stage) -> Result<ExponentialSum> {
        Ok(CascadeCoefficients::stage_sum(self, stage))
    }
}

fn check_grid(omega_grid: &[f64]) -> Result<()> {
    if omega_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(w) = omega_grid.iter().find(|w| !w.is_finite()) {
        return Err(Error::invalid("omega", format!("must be finite, got {w}")));
    }
    Ok(())
}

/// Exact transform of an exponential sum on `s = i omega`.
pub fn spectrum_of_sum(sum: &ExponentialSum, omega_grid: &[f64]) -> Result<Vec<SpectrumSample>> {
    check_grid(omega_grid)?;
    omega_grid
        .iter()
        .map(|&omega| {
            Ok(SpectrumSample {
                omega,
                value: sum.laplace(Complex64::new(0.0, omega))?,
            })
        })
        .collect()
}

/// Exact transform of the closed-form signal of `stage`.
pub fn spectrum_closed_form(
    coeffs: &impl ClosedForm,
    stage: Stage,
    omega_grid: &[f64],
) -> Result<Vec<SpectrumSample>> {
    spectrum_of_sum(&coeffs.stage_sum(stage)?, omega_grid)
}

/// Trapezoidal transform of a sampled signal, with time measured from the
/// first sample.
///
/// The last sample is taken as the level the signal holds from then on and
/// contributes `y_last exp(-i omega T) / (i omega)`.
pub fn spectrum_numeric(trace: &SignalTrace, omega_grid: &[f64]) -> Result<Vec<SpectrumSample>> {
    check_grid(omega_grid)?;
    let y = trace.samples();
    let h = trace.dt();
    let last = trace.last();
    let span = (y.len() - 1) as f64 * h;
    omega_grid
        .iter()
        .map(|&omega| {
            if omega == 0.0 && last != 0.0 {
                return Err(Error::Pole("signal settles at a nonzero level".into()));
            }
            let step = Complex64::from_polar(1.0, -omega * h);
            let mut phasor = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            let n = y.len();
            for (k, &v) in y.iter().enumerate() {
                let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
                acc += phasor * (w * v);
                // re-anchor periodically so the recurrence does not drift
                phasor = if k % 1024 == 1023 {
                    Complex64::from_polar(1.0, -omega * h * (k + 1) as f64)
                } else {
                    phasor * step
                };
            }
            let mut value = acc * h;
            if last != 0.0 {
                value += last * Complex64::from_polar(1.0, -omega * span) / Complex64::new(0.0, omega);
            }
            Ok(SpectrumSample { omega, value })
        })
        .collect()
}

/// Largest deviation from the final value over the last 1% of the trace,
/// relative to the trace's peak deviation from that value.
pub fn tail_residual(trace: &SignalTrace) -> f64 {
    let y = trace.samples();
    let last = trace.last();
    let peak = y.iter().fold(0.0_f64, |m, v| m.max((v - last).abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let start = y.len() - (y.len() / 100).max(1);
    y[start..].iter().fold(0.0_f64, |m, v| m.max((v - last).abs())) / peak
}

/// Spectrum of `stage` predicted from the input spectrum: the cascade rests at
/// `initial_level` for `t < 0`, so only the departure from that level is
/// filtered, and the resting output level is carried through unchanged.
pub fn predicted_stage_spectrum(
    pss: &StabilizerParams,
    stage: Stage,
    input: &[SpectrumSample],
    initial_level: f64,
) -> Result<Vec<SpectrumSample>> {
    let cascade = BlockCascade::full(pss)?.prefix(stage)?;
    let rest = dc_output(&cascade, initial_level)?;
    input
        .iter()
        .map(|s| {
            let iw = Complex64::new(0.0, s.omega);
            let h = transfer_at(&cascade, iw)?;
            let mut value = h * s.value;
            if initial_level != 0.0 || rest != 0.0 {
                if s.omega == 0.0 {
                    return Err(Error::Pole("resting level at omega = 0".into()));
                }
                value += (rest - h * initial_level) / iw;
            }
            Ok(SpectrumSample {
                omega: s.omega,
                value,
            })
        })
        .collect()
}

/// Largest `|a - b|` over the grid relative to the largest `|b|`.
pub fn relative_spectrum_error(a: &[SpectrumSample], b: &[SpectrumSample]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("spectrum", "grids differ in length"));
    }
    let scale = b.iter().fold(0.0_f64, |m, s| m.max(s.value.norm()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x.value - y.value).norm()));
    Ok(if scale == 0.0 { diff } else { diff / scale })
}
