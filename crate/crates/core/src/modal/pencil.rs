//! Matrix-pencil decomposition of a sampled transient into damped complex
//! exponentials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::exp_sum::{ExpTerm, ExponentialSum};
use crate::trace::SignalTrace;

/// One term `amplitude * exp(eigenvalue * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub amplitude: Complex64,
    pub eigenvalue: Complex64,
}

/// `dc_offset + sum_j a_j exp(lambda_j t)`, with `t` measured from the start
/// of the decomposed trace.
///
/// Oscillatory modes are stored in conjugate pairs, the member with positive
/// imaginary part first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalSum {
    pub modes: Vec<Mode>,
    pub dc_offset: f64,
}

impl ModalSum {
    pub fn to_exp_sum(&self) -> ExponentialSum {
        ExponentialSum {
            terms: self
                .modes
                .iter()
                .map(|m| ExpTerm::new(m.amplitude, m.eigenvalue))
                .collect(),
            constant: self.dc_offset,
        }
    }

    pub fn eval_complex(&self, t: f64) -> Complex64 {
        self.to_exp_sum().eval_complex(t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_complex(t).re
    }

    /// Whether every non-real mode has its exact conjugate partner and every
    /// real mode has a real amplitude.
    pub fn is_conjugate_paired(&self) -> bool {
        let mut used = vec![false; self.modes.len()];
        for (i, m) in self.modes.iter().enumerate() {
            if used[i] {
                continue;
            }
            if m.eigenvalue.im == 0.0 {
                if m.amplitude.im != 0.0 {
                    return false;
                }
                used[i] = true;
                continue;
            }
            let partner = self.modes.iter().enumerate().position(|(j, n)| {
                !used[j]
                    && j != i
                    && n.eigenvalue == m.eigenvalue.conj()
                    && n.amplitude == m.amplitude.conj()
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }

    /// Oscillatory mode with the largest amplitude (positive-frequency member).
    pub fn dominant_oscillation(&self) -> Option<Mode> {
        self.modes
            .iter()
            .filter(|m| m.eigenvalue.im > 0.0)
            .max_by(|a, b| a.amplitude.norm().total_cmp(&b.amplitude.norm()))
            .copied()
    }
}

/// Tuning of [`extract_modes_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilOptions {
    /// Largest number of exponentials (counting both members of a pair).
    pub max_order: usize,
    /// Singular values below this fraction of the largest are noise.
    pub sv_threshold: f64,
    /// Relative L2 fit error at which order selection stops.
    pub fit_target: f64,
    /// Samples kept after decimation.
    pub target_samples: usize,
    /// The fit window ends where the trace's distance from its final value
    /// last exceeds this fraction of its peak distance.
    pub window_floor: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        Self {
            max_order: 120,
            sv_threshold: 1e-8,
            fit_target: 1e-4,
            target_samples: 1500,
            window_floor: 1e-7,
        }
    }
}

impl PencilOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 {
            return Err(Error::invalid("max_order", "must be at least 1"));
        }
        ensure_positive("sv_threshold", self.sv_threshold)?;
        ensure_positive("fit_target", self.fit_target)?;
        ensure_positive("window_floor", self.window_floor)?;
        if self.target_samples < 16 {
            return Err(Error::invalid("target_samples", "must be at least 16"));
        }
        Ok(())
    }
}

/// Result of a decomposition together with its quality.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalFit {
    pub modes: ModalSum,
    /// Relative L2 error of the reconstruction over the whole trace.
    pub fit_error: f64,
    /// Pencil order that produced the modes.
    pub order: usize,
}

/// Modes with the default window and decimation settings.
pub fn extract_modes(trace: &SignalTrace, max_order: usize, sv_threshold: f64) -> Result<ModalSum> {
    let opts = PencilOptions {
        max_order,
        sv_threshold,
        ..PencilOptions::default()
    };
    Ok(extract_modes_with(trace, &opts)?.modes)
}

/// A real root whose exponential drifts less than this over the fit window is
/// the constant level.
const DC_CHANGE: f64 = 1e-6;

/// Real basis for one candidate set of eigenvalues.
enum Basis {
    Real(f64),
    Pair(Complex64),
}

/// Splits pencil roots into real and conjugate-pair bases. Real roots whose
/// exponential changes by less than `dc_change` over `span` are merged into
/// the constant; growing and sign-alternating roots are discarded.
fn classify(z: &[Complex64], dt: f64, span: f64, dc_change: f64) -> (Vec<Basis>, bool) {
    let mut out = Vec::new();
    let mut dc = false;
    for &zi in z {
        if zi.norm() == 0.0 || !zi.is_finite() {
            continue;
        }
        let lambda = zi.ln() / dt;
        if zi.im == 0.0 {
            if zi.re < 0.0 {
                continue;
            }
            if lambda.re.abs() * span < dc_change {
                dc = true;
            } else if lambda.re < 0.0 {
                out.push(Basis::Real(lambda.re));
            }
        } else if zi.im > 0.0 && lambda.re < 0.0 {
            out.push(Basis::Pair(lambda));
        }
    }
    (out, dc)
}

/// Least-squares amplitudes for `basis` (plus an optional constant) on the
/// samples `y` at spacing `dt`. Returns the modal sum and the residual norm.
fn fit_amplitudes(basis: &[Basis], with_dc: bool, y: &[f64], dt: f64) -> Result<(ModalSum, f64)> {
    let cols: usize =
        basis.iter().map(|b| if matches!(b, Basis::Real(_)) { 1 } else { 2 }).sum::<usize>()
            + usize::from(with_dc);
    if cols == 0 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok((ModalSum::default(), r));
    }
    let n = y.len();
    let mut a = DMatrix::<f64>::zeros(n, cols);
    let mut c = 0;
    for b in basis {
        match *b {
            Basis::Real(l) => {
                for k in 0..n {
                    a[(k, c)] = (l * k as f64 * dt).exp();
                }
                c += 1;
            }
            Basis::Pair(l) => {
                for k in 0..n {
                    let t = k as f64 * dt;
                    let v = (l * t).exp();
                    a[(k, c)] = v.re;
                    a[(k, c + 1)] = v.im;
                }
                c += 2;
            }
        }
    }
    if with_dc {
        for k in 0..n {
            a[(k, c)] = 1.0;
        }
    }
    // scale columns to unit norm so the rank cut-off is relative
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, nrm) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nrm);
    }
    let rhs = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(&rhs, 1e-13 * smax)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let resid = (&a * &x - &rhs).norm();

    let mut modes = Vec::new();
    let mut c = 0;
    for b in basis {
        match *b {
            Basis::Real(l) => {
                modes.push(Mode {
                    amplitude: Complex64::new(x[c] / norms[c], 0.0),
                    eigenvalue: Complex64::new(l, 0.0),
                });
                c += 1;
            }
            Basis::Pair(l) => {
                // re * cos + im * sin terms: p Re(e) + q Im(e) = Re((p - i q) e)
                let (p, q) = (x[c] / norms[c], x[c + 1] / norms[c + 1]);
                let amp = Complex64::new(0.5 * p, -0.5 * q);
                modes.push(Mode {
                    amplitude: amp,
                    eigenvalue: l,
                });
                modes.push(Mode {
                    amplitude: amp.conj(),
                    eigenvalue: l.conj(),
                });
                c += 2;
            }
        }
    }
    let dc_offset = if with_dc { x[c] / norms[c] } else { 0.0 };
    Ok((ModalSum { modes, dc_offset }, resid))
}

/// Decomposes `trace` into decaying exponentials by the matrix-pencil method.
///
/// The trace is cut where it has settled, decimated to about
/// `target_samples` samples, and arranged in a Hankel matrix with pencil
/// parameter one third of the sample count. Its right singular vectors above
/// `sv_threshold` span the signal subspace; the eigenvalues of the shifted
/// pencil at increasing order give candidate modes, whose amplitudes are
/// refitted in a real basis so that conjugate pairs are exact. The smallest
/// order whose fit reaches `fit_target` wins.
pub fn extract_modes_with(trace: &SignalTrace, opts: &PencilOptions) -> Result<ModalFit> {
    opts.validate()?;
    let y = trace.samples();
    let last = trace.last();
    let peak_dev = y.iter().fold(0.0_f64, |m, v| m.max((v - last).abs()));
    let peak = trace.peak_abs();
    if peak_dev <= 1e-14 * peak.max(f64::MIN_POSITIVE) || peak == 0.0 {
        return Ok(ModalFit {
            modes: ModalSum {
                modes: Vec::new(),
                dc_offset: last,
            },
            fit_error: 0.0,
            order: 0,
        });
    }
    let end = y
        .iter()
        .rposition(|v| (v - last).abs() > opts.window_floor * peak_dev)
        .unwrap_or(0)
        + 1;
    let stride = end.div_ceil(opts.target_samples).max(1);
    let dec: Vec<f64> = y[..end].iter().step_by(stride).copied().collect();
    let n = dec.len();
    let dt = trace.dt() * stride as f64;
    if n < 16 {
        return Err(Error::invalid("trace", format!("only {n} samples in the fit window")));
    }
    let l = n / 3;
    let rows = n - l;
    let hankel = DMatrix::from_fn(rows, l + 1, |i, j| dec[i + j]);
    let svd = hankel.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::IllConditioned("no singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s0 = svd.singular_values[order[0]];
    let rank = order
        .iter()
        .take_while(|&&i| svd.singular_values[i] > opts.sv_threshold * s0)
        .count();
    let max_m = rank.min(opts.max_order).min(l);
    if max_m == 0 {
        return Err(Error::IllConditioned("no singular value above the threshold".into()));
    }

    let norm_y = dec.iter().map(|v| v * v).sum::<f64>().sqrt();
    let span = (n - 1) as f64 * dt;
    let mut best: Option<(f64, usize, ModalSum)> = None;
    for m in 1..=max_m {
        // signal-subspace basis: leading m right singular vectors as columns
        let v = DMatrix::from_fn(l + 1, m, |i, j| v_t[(order[j], i)]);
        let v1 = v.rows(0, l).into_owned();
        let v2 = v.rows(1, l).into_owned();
        let pencil = match v1.svd(true, true).solve(&v2, 1e-14) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let z: Vec<Complex64> = pencil.complex_eigenvalues().iter().copied().collect();
        let (basis, with_dc) = classify(&z, dt, span, DC_CHANGE);
        let (modal, resid) = fit_amplitudes(&basis, with_dc, &dec, dt)?;
        let err = resid / norm_y;
        if best.as_ref().is_none_or(|b| err < b.0) {
            best = Some((err, m, modal));
        }
        if err <= opts.fit_target {
            break;
        }
    }
    let (err, m, modal) = best.ok_or_else(|| Error::IllConditioned("no pencil order solved".into()))?;
    if err > opts.fit_target {
        return Err(Error::OrderExhausted {
            max_order: max_m,
            target: opts.fit_target,
            best: err,
        });
    }
    let fit_error = reconstruction_error(trace, &modal)?;
    Ok(ModalFit {
        modes: modal,
        fit_error,
        order: m,
    })
}

/// Relative L2 distance between `trace` and the modal reconstruction.
pub fn reconstruction_error(trace: &SignalTrace, modes: &ModalSum) -> Result<f64> {
    let rec = modes.to_exp_sum().sample(trace.dt(), trace.len())?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in trace.samples().iter().zip(rec.samples()) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}
