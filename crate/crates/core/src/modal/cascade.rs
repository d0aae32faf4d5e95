//! Stage-by-stage propagation of a modal sum through stabilizer and
//! regulator.
//!
//! Each block maps a mode `a e^{lambda t}` to `H(lambda) a e^{lambda t}` and
//! adds one exponential at its own pole; the pole's coefficient is fixed by
//! the stage's value at `t = 0`. A constant input level passes the low-pass
//! stage unchanged and is removed by the washout, so it never reaches the
//! integrating regulator.

use num_complex::Complex64;

use super::pencil::ModalSum;
use crate::blocks::{Stage, StabilizerParams};
use crate::error::{ensure_non_negative, Error, Result};
use crate::exp_sum::{ExpTerm, ExponentialSum};
use crate::linear::DECAY_POLE_COLLISION;
use crate::spectrum::ClosedForm;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalCascadeCoefficients {
    pub input: ModalSum,
    pub params: StabilizerParams,
    pub a1: Vec<Complex64>,
    pub c1: f64,
    pub a2: Vec<Complex64>,
    pub c2: f64,
    pub d2: f64,
    pub a3: Vec<Complex64>,
    pub c3: f64,
    pub d3: f64,
    pub e3: f64,
    pub a4: Vec<Complex64>,
    pub c4: f64,
    pub d4: f64,
    pub e4: f64,
    pub f4: f64,
    pub a_r: Vec<Complex64>,
    pub c_r: f64,
    pub d_r: f64,
    pub e_r: f64,
    pub f_r: f64,
    pub s_r: f64,
    pub a_out: Vec<Complex64>,
    pub c_out: f64,
    pub d_out: f64,
    pub e_out: f64,
    pub f_out: f64,
    pub g_out: f64,
}

fn check_mode_collisions(modes: &ModalSum, pss: &StabilizerParams) -> Result<()> {
    for (j, m) in modes.modes.iter().enumerate() {
        if m.eigenvalue.norm() == 0.0 {
            return Err(Error::PoleCollision(format!(
                "mode {j} has eigenvalue 0; carry constants in dc_offset"
            )));
        }
        for (name, t) in pss.decay_constants() {
            if (1.0 + m.eigenvalue * t).norm() < DECAY_POLE_COLLISION {
                return Err(Error::PoleCollision(format!(
                    "mode {j} with eigenvalue {} sits on the pole -1/{name} = {}",
                    m.eigenvalue,
                    -1.0 / t
                )));
            }
        }
    }
    Ok(())
}

fn sum_re(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.re).sum()
}

/// Coefficients of every stage for the modal input `modes`, with the cascade
/// at rest at the input's initial value before `t = 0`.
pub fn cascade_modal(modes: &ModalSum, pss: &StabilizerParams) -> Result<ModalCascadeCoefficients> {
    pss.check_distinct_poles()?;
    check_mode_collisions(modes, pss)?;
    let StabilizerParams {
        t1,
        t2,
        t3,
        t4,
        t5,
        t6,
        k_s,
        t_n,
        t_s,
        k_pr,
        k_ps,
    } = *pss;
    let one = Complex64::new(1.0, 0.0);
    let map = |prev: &[Complex64], f: &dyn Fn(Complex64) -> Complex64| -> Vec<Complex64> {
        modes
            .modes
            .iter()
            .zip(prev)
            .map(|(m, a)| f(m.eigenvalue) * a)
            .collect()
    };
    let a0: Vec<Complex64> = modes.modes.iter().map(|m| m.amplitude).collect();

    let a1 = map(&a0, &|l| one / (1.0 + l * t6));
    let c1 = sum_re(&a0) - sum_re(&a1);

    let a2 = map(&a1, &|l| k_s * l * t5 / (1.0 + l * t5));
    let c2 = -k_s * t5 / (t6 - t5) * c1;
    let d2 = -sum_re(&a2) - c2;

    let a3 = map(&a2, &|l| (1.0 + l * t1) / (1.0 + l * t2));
    let c3 = (t6 - t1) / (t6 - t2) * c2;
    let d3 = (t5 - t1) / (t5 - t2) * d2;
    let e3 = -sum_re(&a3) - c3 - d3;

    let a4 = map(&a3, &|l| (1.0 + l * t3) / (1.0 + l * t4));
    let c4 = (t6 - t3) / (t6 - t4) * c3;
    let d4 = (t5 - t3) / (t5 - t4) * d3;
    let e4 = (t2 - t3) / (t2 - t4) * e3;
    let f4 = -sum_re(&a4) - c4 - d4 - e4;

    let a_r = map(&a4, &|l| k_pr * (1.0 + l * t_n) / (l * t_n));
    let c_r = k_pr * (t_n - t6) / t_n * c4;
    let d_r = k_pr * (t_n - t5) / t_n * d4;
    let e_r = k_pr * (t_n - t2) / t_n * e4;
    let f_r = k_pr * (t_n - t4) / t_n * f4;
    let s_r = -sum_re(&a_r) - c_r - d_r - e_r - f_r;

    let a_out = map(&a_r, &|l| k_ps / (1.0 + l * t_s));
    let c_out = k_ps * t6 * c_r / (t6 - t_s);
    let d_out = k_ps * t5 * d_r / (t5 - t_s);
    let e_out = k_ps * t2 * e_r / (t2 - t_s);
    let f_out = k_ps * t4 * f_r / (t4 - t_s);
    let g_out = -sum_re(&a_out) - c_out - d_out - e_out - f_out - k_ps * s_r;

    Ok(ModalCascadeCoefficients {
        input: modes.clone(),
        params: *pss,
        a1,
        c1,
        a2,
        c2,
        d2,
        a3,
        c3,
        d3,
        e3,
        a4,
        c4,
        d4,
        e4,
        f4,
        a_r,
        c_r,
        d_r,
        e_r,
        f_r,
        s_r,
        a_out,
        c_out,
        d_out,
        e_out,
        f_out,
        g_out,
    })
}

impl ModalCascadeCoefficients {
    fn modal_terms(&self, amps: &[Complex64]) -> Vec<ExpTerm> {
        self.input
            .modes
            .iter()
            .zip(amps)
            .map(|(m, a)| ExpTerm::new(*a, m.eigenvalue))
            .collect()
    }

    /// Signal of `stage` as an exponential sum in `t >= 0`.
    pub fn exp_sum(&self, stage: Stage) -> ExponentialSum {
        let p = &self.params;
        let (terms, decays, constant): (Vec<ExpTerm>, Vec<(f64, f64)>, f64) = match stage {
            Stage::Input => return self.input.to_exp_sum(),
            Stage::V1 => (self.modal_terms(&self.a1), vec![(self.c1, p.t6)], self.input.dc_offset),
            Stage::V2 => (
                self.modal_terms(&self.a2),
                vec![(self.c2, p.t6), (self.d2, p.t5)],
                0.0,
            ),
            Stage::V3 => (
                self.modal_terms(&self.a3),
                vec![(self.c3, p.t6), (self.d3, p.t5), (self.e3, p.t2)],
                0.0,
            ),
            Stage::Pss => (
                self.modal_terms(&self.a4),
                vec![(self.c4, p.t6), (self.d4, p.t5), (self.e4, p.t2), (self.f4, p.t4)],
                0.0,
            ),
            Stage::Regulator => (
                self.modal_terms(&self.a_r),
                vec![(self.c_r, p.t6), (self.d_r, p.t5), (self.e_r, p.t2), (self.f_r, p.t4)],
                self.s_r,
            ),
            Stage::Out => (
                self.modal_terms(&self.a_out),
                vec![
                    (self.c_out, p.t6),
                    (self.d_out, p.t5),
                    (self.e_out, p.t2),
                    (self.f_out, p.t4),
                    (self.g_out, p.t_s),
                ],
                p.k_ps * self.s_r,
            ),
        };
        let mut s = ExponentialSum { terms, constant };
        for (c, t) in decays {
            s.push_decay(c, t);
        }
        s
    }

    /// Residuals of the identities closing each stage, relative to the
    /// largest magnitude involved.
    pub fn closure_residuals(&self) -> [(&'static str, f64); 6] {
        fn rel(modal: &[Complex64], rest: &[f64]) -> f64 {
            let scale = modal
                .iter()
                .map(|a| a.norm())
                .chain(rest.iter().map(|v| v.abs()))
                .fold(0.0_f64, f64::max);
            let sum: Complex64 =
                modal.iter().sum::<Complex64>() + Complex64::new(rest.iter().sum::<f64>(), 0.0);
            if scale == 0.0 {
                0.0
            } else {
                sum.norm() / scale
            }
        }
        let a0: Vec<Complex64> = self.input.modes.iter().map(|m| m.amplitude).collect();
        let neg_a1: Vec<Complex64> = self.a1.iter().map(|a| -a).collect();
        let mut c1_terms = a0;
        c1_terms.extend(neg_a1);
        [
            ("c1", rel(&c1_terms, &[-self.c1])),
            ("d2", rel(&self.a2, &[self.c2, self.d2])),
            ("e3", rel(&self.a3, &[self.c3, self.d3, self.e3])),
            ("f4", rel(&self.a4, &[self.c4, self.d4, self.e4, self.f4])),
            ("s_r", rel(&self.a_r, &[self.c_r, self.d_r, self.e_r, self.f_r, self.s_r])),
            (
                "g_out",
                rel(
                    &self.a_out,
                    &[
                        self.c_out,
                        self.d_out,
                        self.e_out,
                        self.f_out,
                        self.g_out,
                        self.params.k_ps * self.s_r,
                    ],
                ),
            ),
        ]
    }
}

impl ClosedForm for ModalCascadeCoefficients {
    fn stage_sum(&self, stage: Stage) -> Result<ExponentialSum> {
        Ok(self.exp_sum(stage))
    }
}

/// Closed-form value of `stage` at `t >= 0` (real part of the modal sum).
pub fn eval_modal(coeffs: &ModalCascadeCoefficients, stage: Stage, t: f64) -> Result<f64> {
    ensure_non_negative("t", t)?;
    Ok(coeffs.exp_sum(stage).eval(t))
}

/// Like [`eval_modal`] but keeps the imaginary rounding residue.
pub fn eval_modal_complex(
    coeffs: &ModalCascadeCoefficients,
    stage: Stage,
    t: f64,
) -> Result<Complex64> {
    ensure_non_negative("t", t)?;
    Ok(coeffs.exp_sum(stage).eval_complex(t))
}
