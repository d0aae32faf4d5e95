//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! Steps are chosen by the embedded error estimate; the solution is
//! reported on a uniform output grid through the fourth-order continuous
//! extension, so output spacing and step size are independent.

use crate::error::{ensure_positive, Error, Result};

/// Absolute and relative local error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-9,
            relative: 1e-9,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` and returns `n_out` states at
/// `t0 + k * dt_out`, `k = 0..n_out`.
pub fn integrate_uniform<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    t0: f64,
    dt_out: f64,
    n_out: usize,
    tol: Tolerance,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    ensure_positive("dt", dt_out)?;
    ensure_positive("tolerance.absolute", tol.absolute)?;
    ensure_positive("tolerance.relative", tol.relative)?;
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial state", "must be finite"));
    }
    let mut out = Vec::with_capacity(n_out);
    if n_out == 0 {
        return Ok(out);
    }
    out.push(y0);
    let t_end = t0 + (n_out - 1) as f64 * dt_out;

    let scaled_norm = |e: &[f64; N], a: &[f64; N], b: &[f64; N]| -> f64 {
        let s: f64 = (0..N)
            .map(|i| {
                let sc = tol.absolute + tol.relative * a[i].abs().max(b[i].abs());
                (e[i] / sc).powi(2)
            })
            .sum();
        (s / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let zeros = [0.0; N];
    let mut h = {
        let d0 = scaled_norm(&y, &zeros, &zeros);
        let d1 = scaled_norm(&k1, &zeros, &zeros);
        let guess = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        guess.min(dt_out).min(t_end - t0).max(1e-12)
    };
    let h_min = 1e-14 * (t_end - t0).abs().max(1.0);
    let mut next_out = 1usize;

    while next_out < n_out {
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = rhs(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err_norm = scaled_norm(&err, &y, &y_new);
        if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h <= h_min {
                return Err(Error::Divergence { t });
            }
            h *= 0.25;
            continue;
        }

        if err_norm <= 1.0 {
            let t_new = t + h;
            // continuous extension coefficients
            let mut r2 = [0.0; N];
            let mut r3 = [0.0; N];
            let mut r4 = [0.0; N];
            let mut r5 = [0.0; N];
            for i in 0..N {
                r2[i] = y_new[i] - y[i];
                r3[i] = h * k1[i] - r2[i];
                r4[i] = r2[i] - h * k7[i] - r3[i];
                r5[i] = h
                    * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]);
            }
            while next_out < n_out {
                let t_out = t0 + next_out as f64 * dt_out;
                if t_out > t_new + 1e-9 * h {
                    break;
                }
                let theta = ((t_out - t) / h).clamp(0.0, 1.0);
                let one_m = 1.0 - theta;
                let mut yo = [0.0; N];
                for i in 0..N {
                    yo[i] = y[i]
                        + theta * (r2[i] + one_m * (r3[i] + theta * (r4[i] + one_m * r5[i])));
                }
                out.push(yo);
                next_out += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            let fac = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
            if h < h_min {
                return Err(Error::StepUnderflow { t });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let ys = integrate_uniform(
            |_, y: &[f64; 1]| [-y[0]],
            [1.0],
            0.0,
            0.1,
            101,
            Tolerance::default(),
        )
        .unwrap();
        assert_eq!(ys.len(), 101);
        for (k, y) in ys.iter().enumerate() {
            let t = k as f64 * 0.1;
            assert!((y[0] - (-t).exp()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        // output spacing far below the natural step
        let ys = integrate_uniform(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            [0.0, 1.0],
            0.0,
            1e-3,
            20_001,
            Tolerance::default(),
        )
        .unwrap();
        let worst = ys
            .iter()
            .enumerate()
            .map(|(k, y)| (y[0] - (k as f64 * 1e-3).sin()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst {worst}");
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate_uniform(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            [1.0],
            0.0,
            0.1,
            20,
            Tolerance::default(),
        );
        assert!(r.is_err());
    }
}
