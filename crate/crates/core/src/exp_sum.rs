//! Finite sums of complex exponentials, the common shape of every closed-form
//! stage signal.

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::trace::SignalTrace;

/// `amplitude * exp(rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub amplitude: Complex64,
    pub rate: Complex64,
}

impl ExpTerm {
    pub fn new(amplitude: Complex64, rate: Complex64) -> Self {
        Self { amplitude, rate }
    }

    /// `c exp(-t / T)`.
    pub fn decay(c: f64, time_constant: f64) -> Self {
        Self::new(Complex64::new(c, 0.0), Complex64::new(-1.0 / time_constant, 0.0))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.amplitude * (self.rate * t).exp()
    }
}

/// `constant + sum_k a_k exp(lambda_k t)` for `t >= 0`.
///
/// Real signals carry their oscillatory terms in conjugate pairs, so the
/// imaginary part of the sum only holds rounding residue.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExponentialSum {
    pub terms: Vec<ExpTerm>,
    pub constant: f64,
}

impl ExponentialSum {
    /// Adds `(a sin(w t) + b cos(w t)) exp(-lambda t)` as a conjugate pair.
    pub fn push_damped_oscillation(&mut self, a: f64, b: f64, lambda: f64, omega: f64) {
        let amp = Complex64::new(0.5 * b, -0.5 * a);
        let rate = Complex64::new(-lambda, omega);
        self.terms.push(ExpTerm::new(amp, rate));
        self.terms.push(ExpTerm::new(amp.conj(), rate.conj()));
    }

    pub fn push_decay(&mut self, c: f64, time_constant: f64) {
        self.terms.push(ExpTerm::decay(c, time_constant));
    }

    pub fn eval_complex(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .fold(Complex64::new(self.constant, 0.0), |acc, term| acc + term.eval(t))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_complex(t).re
    }

    /// Samples the real part on the grid `k dt`, `k = 0..n`.
    pub fn sample(&self, dt: f64, n: usize) -> Result<SignalTrace> {
        self.sample_from(0.0, dt, n)
    }

    /// Like [`sample`](Self::sample), but the trace is labelled as starting at
    /// `t0` while the sum is still evaluated from its own `t = 0`.
    pub fn sample_from(&self, t0: f64, dt: f64, n: usize) -> Result<SignalTrace> {
        SignalTrace::new(t0, dt, self.sample_complex(dt, n)?.iter().map(|v| v.re).collect())
    }

    /// Complex values on the grid `k dt`, advanced by the per-step factor
    /// `exp(lambda dt)` and re-anchored every 256 steps.
    pub fn sample_complex(&self, dt: f64, n: usize) -> Result<Vec<Complex64>> {
        ensure_positive("dt", dt)?;
        let mut out = vec![Complex64::new(self.constant, 0.0); n];
        for term in &self.terms {
            let step = (term.rate * dt).exp();
            let mut v = term.amplitude;
            for (k, slot) in out.iter_mut().enumerate() {
                if k % 256 == 0 {
                    v = term.eval(k as f64 * dt);
                }
                *slot += v;
                v *= step;
            }
        }
        Ok(out)
    }

    /// Largest imaginary residue relative to the largest real value over the
    /// grid `k dt`, `k = 0..n`.
    pub fn imaginary_residue(&self, dt: f64, n: usize) -> Result<f64> {
        let (mut re, mut im) = (0.0_f64, 0.0_f64);
        for v in self.sample_complex(dt, n)? {
            re = re.max(v.re.abs());
            im = im.max(v.im.abs());
        }
        Ok(if re == 0.0 { im } else { im / re })
    }

    /// Laplace transform `sum_k a_k / (s - lambda_k) + constant / s`.
    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let d = s - term.rate;
            if d.norm() == 0.0 {
                return Err(Error::Pole(format!("s = {s} meets the mode {}", term.rate)));
            }
            acc += term.amplitude / d;
        }
        if self.constant != 0.0 {
            if s.norm() == 0.0 {
                return Err(Error::Pole("constant term at s = 0".into()));
            }
            acc += self.constant / s;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_oscillation_pair_is_real() {
        let mut s = ExponentialSum::default();
        s.push_damped_oscillation(0.7, -0.2, 0.15, 0.8);
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let v = s.eval_complex(t);
            let expected = (-0.15 * t).exp() * (0.7 * (0.8 * t).sin() - 0.2 * (0.8 * t).cos());
            assert!((v.re - expected).abs() < 1e-15);
            assert!(v.im.abs() < 1e-16);
        }
    }

    #[test]
    fn recurrence_sampling_matches_direct_evaluation() {
        let mut s = ExponentialSum {
            terms: vec![],
            constant: 0.3,
        };
        s.push_damped_oscillation(1.0, 0.5, 0.15, 2.2);
        s.push_decay(-0.4, 0.028);
        let tr = s.sample(1e-3, 20_000).unwrap();
        for (t, v) in tr.iter() {
            assert!((v - s.eval(t)).abs() < 1e-13, "t={t}");
        }
        assert!(s.imaginary_residue(1e-3, 20_000).unwrap() < 1e-15);
    }

    #[test]
    fn decay_transform() {
        let mut s = ExponentialSum::default();
        s.push_decay(1.0, 1.0);
        let v = s.laplace(Complex64::new(0.0, 1.0)).unwrap();
        assert!((v - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn constant_at_origin_is_a_pole() {
        let s = ExponentialSum {
            terms: vec![],
            constant: 2.0,
        };
        assert!(matches!(s.laplace(Complex64::new(0.0, 0.0)), Err(Error::Pole(_))));
        let v = s.laplace(Complex64::new(0.0, 2.0)).unwrap();
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
