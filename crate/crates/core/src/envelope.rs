//! Oscillation packet `A sin(omega_e t) sin(omega0 t)` on `[0, pi/omega_e]`,
//! a stand-in for the rise and fall of a ROCOF event.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::blocks::{simulate_cascade, BlockCascade, CascadeResponse, Stage, StabilizerParams};
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::spectrum::{predicted_stage_spectrum, spectrum_numeric, SpectrumSample};
use crate::trace::SignalTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeInput {
    pub amplitude: f64,
    pub omega_e: f64,
    pub omega0: f64,
}

impl EnvelopeInput {
    pub fn new(amplitude: f64, omega_e: f64, omega0: f64) -> Result<Self> {
        let e = Self {
            amplitude,
            omega_e,
            omega0,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        ensure_positive("omega_e", self.omega_e)?;
        ensure_positive("omega0", self.omega0)?;
        if self.omega_e >= self.omega0 {
            return Err(Error::invalid(
                "omega_e",
                format!("must be below omega0 = {}", self.omega0),
            ));
        }
        Ok(())
    }

    /// End of the support, `pi / omega_e`.
    pub fn duration(&self) -> f64 {
        PI / self.omega_e
    }
}

pub fn envelope_value(input: &EnvelopeInput, t: f64) -> f64 {
    if !(0.0..=input.duration()).contains(&t) {
        return 0.0;
    }
    input.amplitude * (input.omega_e * t).sin() * (input.omega0 * t).sin()
}

/// Laplace transform of the packet.
///
/// With `E = exp(-s pi/omega_e)` it is
/// `A [2 s we w0 (1 + cos(pi w0/we) E) + we (s^2 + we^2 - w0^2) sin(pi w0/we) E]
///  / ((s^2 + (w0 - we)^2)(s^2 + (w0 + we)^2))`.
/// The transform is entire, but this form is 0/0 at the four roots of the
/// denominator, which are reported as poles.
pub fn envelope_laplace(input: &EnvelopeInput, s: Complex64) -> Result<Complex64> {
    let (a, we, w0) = (input.amplitude, input.omega_e, input.omega0);
    let s2 = s * s;
    let den = (s2 + (w0 - we).powi(2)) * (s2 + (w0 + we).powi(2));
    let scale = (s.norm() + w0 + we).powi(4);
    if den.norm() <= 1e-14 * scale {
        return Err(Error::Pole(format!(
            "s = {s} is a root of the envelope denominator"
        )));
    }
    let e = (-s * input.duration()).exp();
    let phase = PI * w0 / we;
    let num = 2.0 * s * we * w0 * (1.0 + phase.cos() * e)
        + we * (s2 + we * we - w0 * w0) * phase.sin() * e;
    Ok(a * num / den)
}

/// `(1 - exp(-z T)) / z`, continued to `T` at `z = 0`.
fn finite_exp_integral(z: Complex64, t: f64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 1e-3 {
        // 1 - zT/2 + (zT)^2/6 - (zT)^3/24 + (zT)^4/120
        let series = Complex64::new(1.0, 0.0)
            - zt / 2.0
            + zt * zt / 6.0
            - zt * zt * zt / 24.0
            + zt * zt * zt * zt / 120.0;
        return t * series;
    }
    (1.0 - (-zt).exp()) / z
}

/// Laplace transform of the packet evaluated without the removable
/// singularities of the closed form.
///
/// The packet is `A/2 [cos((w0 - we) t) - cos((w0 + we) t)]` on `[0, T]`, so
/// the transform is a sum of four integrals of single exponentials over the
/// support, each finite for every `s`.
pub fn envelope_transform(input: &EnvelopeInput, s: Complex64) -> Complex64 {
    let (a, we, w0) = (input.amplitude, input.omega_e, input.omega0);
    let t = input.duration();
    let i = Complex64::new(0.0, 1.0);
    let cos_part = |w: f64| {
        0.5 * (finite_exp_integral(s - i * w, t) + finite_exp_integral(s + i * w, t))
    };
    0.5 * a * (cos_part(w0 - we) - cos_part(w0 + we))
}

pub fn envelope_trace(input: &EnvelopeInput, horizon: f64, dt: f64) -> Result<SignalTrace> {
    ensure_positive("horizon", horizon)?;
    ensure_positive("dt", dt)?;
    let n = (horizon / dt).round() as usize + 1;
    SignalTrace::from_fn(0.0, dt, n, |t| envelope_value(input, t))
}

/// Stage traces and spectra of the packet through stabilizer and regulator.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResponse {
    pub traces: CascadeResponse,
    /// Transforms of the sampled traces.
    pub spectra: BTreeMap<Stage, Vec<SpectrumSample>>,
    /// `H(i omega)` times the exact input transform from
    /// [`envelope_transform`].
    pub predicted: BTreeMap<Stage, Vec<SpectrumSample>>,
}

pub fn envelope_response(
    input: &EnvelopeInput,
    pss: &StabilizerParams,
    horizon: f64,
    dt: f64,
    omega_grid: &[f64],
) -> Result<EnvelopeResponse> {
    input.validate()?;
    let trace = envelope_trace(input, horizon, dt)?;
    let traces = simulate_cascade(&BlockCascade::full(pss)?, &trace, 0.0)?;
    let vin = omega_grid
        .iter()
        .map(|&omega| {
            Ok(SpectrumSample {
                omega,
                value: envelope_transform(input, Complex64::new(0.0, omega)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spectra = BTreeMap::new();
    let mut predicted = BTreeMap::new();
    for (&stage, tr) in &traces.traces {
        spectra.insert(stage, spectrum_numeric(tr, omega_grid)?);
        predicted.insert(stage, predicted_stage_spectrum(pss, stage, &vin, 0.0)?);
    }
    Ok(EnvelopeResponse {
        traces,
        spectra,
        predicted,
    })
}
