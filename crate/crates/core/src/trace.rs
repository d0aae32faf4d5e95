//! Uniformly sampled real signals.

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// A real signal sampled on the grid `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    t0: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl SignalTrace {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        ensure_finite("t0", t0)?;
        ensure_positive("dt", dt)?;
        if samples.is_empty() {
            return Err(Error::invalid("samples", "trace must not be empty"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: t0 + i as f64 * dt,
            });
        }
        Ok(Self { t0, dt, samples })
    }

    /// Samples `f` on `n` points starting at `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n).map(|k| f(t0 + k as f64 * dt)).collect();
        Self::new(t0, dt, samples)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| self.time(k))
    }

    /// `(t, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.time(k), v))
    }

    pub fn last(&self) -> f64 {
        *self.samples.last().expect("non-empty by construction")
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map keeping the time grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.t0, self.dt, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Linear interpolation; clamps outside the sampled span.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.samples[0];
        }
        let k = x.floor() as usize;
        if k + 1 >= self.samples.len() {
            return self.last();
        }
        let frac = x - k as f64;
        self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            t0: self.t0,
            dt: self.dt * stride as f64,
            samples: self.samples.iter().step_by(stride).copied().collect(),
        }
    }

    /// Largest pointwise deviation from `other`, divided by the peak of `self`.
    ///
    /// Both traces must share a grid.
    pub fn relative_linf_error(&self, other: &SignalTrace) -> Result<f64> {
        self.check_same_grid(other)?;
        let peak = self.peak_abs();
        let worst = self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(if peak > 0.0 { worst / peak } else { worst })
    }

    pub(crate) fn check_same_grid(&self, other: &SignalTrace) -> Result<()> {
        let same = self.samples.len() == other.samples.len()
            && (self.t0 - other.t0).abs() <= 1e-12 * self.dt
            && ((self.dt - other.dt) / self.dt).abs() <= 1e-12;
        if same {
            Ok(())
        } else {
            Err(Error::invalid("trace", "traces are sampled on different grids"))
        }
    }
}

/// Relative L-infinity distance between a trace and a function of time.
pub fn relative_linf_error_fn(trace: &SignalTrace, f: impl Fn(f64) -> f64) -> f64 {
    let peak = trace.peak_abs();
    let worst = trace
        .iter()
        .fold(0.0_f64, |m, (t, v)| m.max((v - f(t)).abs()));
    if peak > 0.0 {
        worst / peak
    } else {
        worst
    }
}
