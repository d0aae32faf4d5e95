//! Closed-form response of the stabilizer and regulator to a single damped
//! oscillation.
//!
//! Every stage signal is a finite sum of the input oscillation and the
//! exponentials `exp(-t/T)` contributed by the block poles. The coefficients
//! follow stage by stage; each constant closing a stage is fixed by the
//! stage's value at `t = 0`.

use crate::blocks::{Stage, StabilizerParams};
use crate::dynamics::{MachineParams, ReducedParams};
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::exp_sum::ExponentialSum;
use crate::trace::SignalTrace;

/// `|lambda T - 1|` below this is treated as a collision between the input
/// decay and a block pole.
pub const DECAY_POLE_COLLISION: f64 = 1e-9;

/// `V(t) = exp(-lambda t) (a0 sin(omega0 t) + b0 cos(omega0 t)) + v_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillation {
    pub a0: f64,
    pub b0: f64,
    pub v_inf: f64,
    pub lambda: f64,
    pub omega0: f64,
}

impl DampedOscillation {
    pub fn new(a0: f64, b0: f64, v_inf: f64, lambda: f64, omega0: f64) -> Result<Self> {
        let d = Self {
            a0,
            b0,
            v_inf,
            lambda,
            omega0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("a0", self.a0)?;
        ensure_finite("b0", self.b0)?;
        ensure_finite("v_inf", self.v_inf)?;
        ensure_non_negative("lambda", self.lambda)?;
        ensure_positive("omega0", self.omega0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (s, c) = (self.omega0 * t).sin_cos();
        (-self.lambda * t).exp() * (self.a0 * s + self.b0 * c) + self.v_inf
    }

    /// `V(0) = b0 + v_inf`, the level the cascade rests at before `t = 0`.
    pub fn initial_value(&self) -> f64 {
        self.b0 + self.v_inf
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a0: k * self.a0,
            b0: k * self.b0,
            v_inf: k * self.v_inf,
            ..*self
        }
    }

    pub fn to_exp_sum(&self) -> ExponentialSum {
        let mut s = ExponentialSum {
            terms: Vec::new(),
            constant: self.v_inf,
        };
        s.push_damped_oscillation(self.a0, self.b0, self.lambda, self.omega0);
        s
    }

    pub fn sample(&self, dt: f64, n: usize) -> Result<SignalTrace> {
        SignalTrace::from_fn(0.0, dt, n, |t| self.value(t))
    }
}

/// Which generator signal feeds the stabilizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputKind {
    /// Generator speed deviation `-x/(x+1) delta'`.
    Speed,
    /// Bus frequency deviation `-(p/2) x/(x+1) delta'`.
    Frequency { poles: u32 },
    /// Electrical power `P_max sin(delta)`.
    Power { p_max: f64 },
}

impl InputKind {
    pub fn name(&self) -> &'static str {
        match self {
            InputKind::Speed => "speed",
            InputKind::Frequency { .. } => "frequency",
            InputKind::Power { .. } => "power",
        }
    }

    /// The kind named `name` with pole count and power rating from `machine`.
    pub fn from_name(name: &str, machine: &MachineParams) -> Result<Self> {
        match name {
            "speed" => Ok(InputKind::Speed),
            "frequency" => Ok(InputKind::Frequency {
                poles: machine.poles,
            }),
            "power" => Ok(InputKind::Power {
                p_max: machine.p_max,
            }),
            other => Err(Error::invalid(
                "input_kind",
                format!("expected speed, frequency or power, got `{other}`"),
            )),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            InputKind::Speed => Ok(()),
            InputKind::Frequency { poles } if poles >= 2 && poles % 2 == 0 => Ok(()),
            InputKind::Frequency { .. } => Err(Error::invalid("poles", "must be even and at least 2")),
            InputKind::Power { p_max } => ensure_positive("p_max", p_max),
        }
    }
}

/// Decay rate `beta/2` and frequency `sqrt(xi cos(delta_final) - beta^2/4)`
/// of small oscillations about `delta_final`.
pub fn linear_mode(reduced: &ReducedParams, delta_final: f64) -> Result<(f64, f64)> {
    ensure_finite("delta_final", delta_final)?;
    let stiffness = reduced.xi * delta_final.cos();
    let damping = 0.25 * reduced.beta * reduced.beta;
    if stiffness <= damping {
        return Err(Error::NotUnderdamped { stiffness, damping });
    }
    Ok((0.5 * reduced.beta, (stiffness - damping).sqrt()))
}

/// Generator speed deviation after a small angle step from `delta_initial`
/// to the new equilibrium `delta_final`.
///
/// Against a finite grid the generator carries the share `x/(x+1)` of the
/// relative speed; for an infinite grid this is exactly `-delta'`.
pub fn input_rotor_speed_deviation(
    reduced: &ReducedParams,
    delta_initial: f64,
    delta_final: f64,
) -> Result<DampedOscillation> {
    ensure_finite("delta_initial", delta_initial)?;
    let (lambda, omega0) = linear_mode(reduced, delta_final)?;
    let a0 = reduced.x.generator_share() * reduced.xi * (delta_initial - delta_final)
        * delta_final.cos()
        / omega0;
    DampedOscillation::new(a0, 0.0, 0.0, lambda, omega0)
}

/// Bus frequency deviation: the speed deviation scaled by `p/2`.
pub fn input_frequency_deviation(
    machine: &MachineParams,
    reduced: &ReducedParams,
    delta_initial: f64,
    delta_final: f64,
) -> Result<DampedOscillation> {
    let kind = InputKind::Frequency {
        poles: machine.poles,
    };
    kind.validate()?;
    let speed = input_rotor_speed_deviation(reduced, delta_initial, delta_final)?;
    Ok(speed.scaled(0.5 * f64::from(machine.poles)))
}

/// Electrical power `P_max sin(delta)` linearised about `delta_final`.
pub fn input_electrical_power(
    machine: &MachineParams,
    reduced: &ReducedParams,
    delta_initial: f64,
    delta_final: f64,
) -> Result<DampedOscillation> {
    ensure_positive("p_max", machine.p_max)?;
    ensure_finite("delta_initial", delta_initial)?;
    let (lambda, omega0) = linear_mode(reduced, delta_final)?;
    let b0 = machine.p_max * (delta_initial - delta_final) * delta_final.cos();
    DampedOscillation::new(
        b0 * reduced.beta / (2.0 * omega0),
        b0,
        machine.p_max * delta_final.sin(),
        lambda,
        omega0,
    )
}

/// Linear input template of `kind`.
pub fn linear_input(
    kind: InputKind,
    reduced: &ReducedParams,
    delta_initial: f64,
    delta_final: f64,
) -> Result<DampedOscillation> {
    kind.validate()?;
    match kind {
        InputKind::Speed => input_rotor_speed_deviation(reduced, delta_initial, delta_final),
        InputKind::Frequency { poles } => {
            let speed = input_rotor_speed_deviation(reduced, delta_initial, delta_final)?;
            Ok(speed.scaled(0.5 * f64::from(poles)))
        }
        InputKind::Power { p_max } => {
            let machine = MachineParams {
                p_max,
                ..MachineParams::default()
            };
            input_electrical_power(&machine, reduced, delta_initial, delta_final)
        }
    }
}

/// `V1 = (a1 sin + b1 cos) e^{-lambda t} + c1 e^{-t/T6} + V_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassTerms {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
}

/// `V2 = (a2 sin + b2 cos) e^{-lambda t} + c2 e^{-t/T6} + d2 e^{-t/T5}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WashoutTerms {
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub d2: f64,
}

/// `V3`: adds `e3 e^{-t/T2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadLagTerms {
    pub a3: f64,
    pub b3: f64,
    pub c3: f64,
    pub d3: f64,
    pub e3: f64,
}

/// `V_PSS`: adds `f4 e^{-t/T4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizerTerms {
    pub a4: f64,
    pub b4: f64,
    pub c4: f64,
    pub d4: f64,
    pub e4: f64,
    pub f4: f64,
}

/// `V_R`: the PI stage keeps every pole and adds the constant `s_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorTerms {
    pub a_r: f64,
    pub b_r: f64,
    pub c_r: f64,
    pub d_r: f64,
    pub e_r: f64,
    pub f_r: f64,
    pub s_r: f64,
}

/// `V_out`: adds `g_out e^{-t/T_S}` and settles at `K_PS s_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputTerms {
    pub a_out: f64,
    pub b_out: f64,
    pub c_out: f64,
    pub d_out: f64,
    pub e_out: f64,
    pub f_out: f64,
    pub g_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeCoefficients {
    pub input: DampedOscillation,
    pub params: StabilizerParams,
    pub v1: LowPassTerms,
    pub v2: WashoutTerms,
    pub v3: LeadLagTerms,
    pub pss: StabilizerTerms,
    pub regulator: RegulatorTerms,
    pub out: OutputTerms,
}

/// Treats `(a, b)` as `b - i a`, so that `(a sin + b cos) e^{-lambda t}` is
/// the real part of that amplitude times `exp(s0 t)`, `s0 = -lambda + i omega0`.
/// Returns the `(a, b)` pair at the output of `(n0 + n1 s) / (d0 + d1 s)`.
fn through_block(
    a: f64,
    b: f64,
    lambda: f64,
    omega0: f64,
    num: [f64; 2],
    den: [f64; 2],
) -> (f64, f64) {
    // numerator (p + i q), denominator (u + i v) at s0
    let (p, q) = (num[0] - lambda * num[1], omega0 * num[1]);
    let (u, v) = (den[0] - lambda * den[1], omega0 * den[1]);
    let norm = u * u + v * v;
    let (hr, hi) = ((p * u + q * v) / norm, (q * u - p * v) / norm);
    // (b - i a)(hr + i hi) = (b hr + a hi) - i (a hr - b hi)
    (a * hr - b * hi, b * hr + a * hi)
}

fn check_decay_collisions(lambda: f64, pss: &StabilizerParams) -> Result<()> {
    for (name, t) in pss.decay_constants() {
        if (lambda * t - 1.0).abs() < DECAY_POLE_COLLISION {
            return Err(Error::PoleCollision(format!(
                "input decay rate {lambda} equals 1/{name} = {}",
                1.0 / t
            )));
        }
    }
    Ok(())
}

/// Coefficients of every stage for the damped-oscillation `input`.
///
/// The cascade is taken to rest at the input's initial value before `t = 0`,
/// so the low-pass output starts at `V(0)` and every later stage starts at 0.
pub fn cascade_linear(
    input: &DampedOscillation,
    pss: &StabilizerParams,
) -> Result<CascadeCoefficients> {
    input.validate()?;
    pss.check_distinct_poles()?;
    let (lambda, w) = (input.lambda, input.omega0);
    check_decay_collisions(lambda, pss)?;
    let (a0, b0) = (input.a0, input.b0);
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

    let den = |t: f64| (1.0 - lambda * t).powi(2) + (w * t).powi(2);

    let d6 = den(t6);
    let a1 = ((1.0 - lambda * t6) * a0 + w * t6 * b0) / d6;
    let b1 = (-w * t6 * a0 + (1.0 - lambda * t6) * b0) / d6;
    let v1 = LowPassTerms {
        a1,
        b1,
        c1: b0 - b1,
    };

    let d5 = den(t5);
    let g5 = w * w * t5 - lambda * (1.0 - lambda * t5);
    let a2 = k_s * t5 * (g5 * a1 - w * b1) / d5;
    let b2 = k_s * t5 * (w * a1 + g5 * b1) / d5;
    let c2 = v1.c1 * k_s * t5 / (t5 - t6);
    let v2 = WashoutTerms {
        a2,
        b2,
        c2,
        d2: -b2 - c2,
    };

    let lead_lag = |a: f64, b: f64, lead: f64, lag: f64| {
        let g = (1.0 - lambda * lag) * (1.0 - lambda * lead) + w * w * lag * lead;
        let d = den(lag);
        (
            (g * a + w * (lag - lead) * b) / d,
            (w * (lead - lag) * a + g * b) / d,
        )
    };

    let (a3, b3) = lead_lag(a2, b2, t1, t2);
    let c3 = v2.c2 * (t1 - t6) / (t2 - t6);
    let d3 = v2.d2 * (t1 - t5) / (t2 - t5);
    let v3 = LeadLagTerms {
        a3,
        b3,
        c3,
        d3,
        e3: -b3 - c3 - d3,
    };

    let (a4, b4) = lead_lag(a3, b3, t3, t4);
    let c4 = v3.c3 * (t3 - t6) / (t4 - t6);
    let d4 = v3.d3 * (t3 - t5) / (t4 - t5);
    let e4 = v3.e3 * (t3 - t2) / (t4 - t2);
    let stab = StabilizerTerms {
        a4,
        b4,
        c4,
        d4,
        e4,
        f4: -b4 - c4 - d4 - e4,
    };

    let gn = w * w * t_n - lambda * (1.0 - lambda * t_n);
    let dn = t_n * (lambda * lambda + w * w);
    let a_r = k_pr * (gn * a4 + w * b4) / dn;
    let b_r = k_pr * (-w * a4 + gn * b4) / dn;
    let c_r = k_pr * (1.0 - t6 / t_n) * c4;
    let d_r = k_pr * (1.0 - t5 / t_n) * d4;
    let e_r = k_pr * (1.0 - t2 / t_n) * e4;
    let f_r = k_pr * (1.0 - t4 / t_n) * stab.f4;
    let regulator = RegulatorTerms {
        a_r,
        b_r,
        c_r,
        d_r,
        e_r,
        f_r,
        s_r: -b_r - c_r - d_r - e_r - f_r,
    };

    let ds = den(t_s);
    let a_out = k_ps * ((1.0 - lambda * t_s) * a_r + w * t_s * b_r) / ds;
    let b_out = k_ps * ((1.0 - lambda * t_s) * b_r - w * t_s * a_r) / ds;
    let c_out = k_ps * c_r * t6 / (t6 - t_s);
    let d_out = k_ps * d_r * t5 / (t5 - t_s);
    let e_out = k_ps * e_r * t2 / (t2 - t_s);
    let f_out = k_ps * f_r * t4 / (t4 - t_s);
    let out = OutputTerms {
        a_out,
        b_out,
        c_out,
        d_out,
        e_out,
        f_out,
        g_out: -b_out - c_out - d_out - e_out - f_out - k_ps * regulator.s_r,
    };

    Ok(CascadeCoefficients {
        input: *input,
        params: *pss,
        v1,
        v2,
        v3,
        pss: stab,
        regulator,
        out,
    })
}

impl CascadeCoefficients {
    /// Signal of `stage` as an exponential sum in `t >= 0`.
    pub fn stage_sum(&self, stage: Stage) -> ExponentialSum {
        let p = &self.params;
        let (lambda, w) = (self.input.lambda, self.input.omega0);
        let mut s = ExponentialSum::default();
        let osc = |s: &mut ExponentialSum, a: f64, b: f64| {
            s.push_damped_oscillation(a, b, lambda, w)
        };
        match stage {
            Stage::Input => return self.input.to_exp_sum(),
            Stage::V1 => {
                let c = &self.v1;
                osc(&mut s, c.a1, c.b1);
                s.push_decay(c.c1, p.t6);
                s.constant = self.input.v_inf;
            }
            Stage::V2 => {
                let c = &self.v2;
                osc(&mut s, c.a2, c.b2);
                s.push_decay(c.c2, p.t6);
                s.push_decay(c.d2, p.t5);
            }
            Stage::V3 => {
                let c = &self.v3;
                osc(&mut s, c.a3, c.b3);
                s.push_decay(c.c3, p.t6);
                s.push_decay(c.d3, p.t5);
                s.push_decay(c.e3, p.t2);
            }
            Stage::Pss => {
                let c = &self.pss;
                osc(&mut s, c.a4, c.b4);
                s.push_decay(c.c4, p.t6);
                s.push_decay(c.d4, p.t5);
                s.push_decay(c.e4, p.t2);
                s.push_decay(c.f4, p.t4);
            }
            Stage::Regulator => {
                let c = &self.regulator;
                osc(&mut s, c.a_r, c.b_r);
                s.push_decay(c.c_r, p.t6);
                s.push_decay(c.d_r, p.t5);
                s.push_decay(c.e_r, p.t2);
                s.push_decay(c.f_r, p.t4);
                s.constant = c.s_r;
            }
            Stage::Out => {
                let c = &self.out;
                osc(&mut s, c.a_out, c.b_out);
                s.push_decay(c.c_out, p.t6);
                s.push_decay(c.d_out, p.t5);
                s.push_decay(c.e_out, p.t2);
                s.push_decay(c.f_out, p.t4);
                s.push_decay(c.g_out, p.t_s);
                s.constant = p.k_ps * self.regulator.s_r;
            }
        }
        s
    }

    /// Residuals of the identities that fix each stage's closing constant,
    /// each relative to the largest coefficient involved.
    pub fn closure_residuals(&self) -> [(&'static str, f64); 6] {
        let rel = |terms: &[f64]| {
            let scale = terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let sum: f64 = terms.iter().sum();
            if scale == 0.0 {
                0.0
            } else {
                sum.abs() / scale
            }
        };
        let (v1, v2, v3, v4, r, o) = (
            &self.v1,
            &self.v2,
            &self.v3,
            &self.pss,
            &self.regulator,
            &self.out,
        );
        [
            ("c1", rel(&[v1.c1, v1.b1, -self.input.b0])),
            ("d2", rel(&[v2.d2, v2.b2, v2.c2])),
            ("e3", rel(&[v3.e3, v3.b3, v3.c3, v3.d3])),
            ("f4", rel(&[v4.f4, v4.b4, v4.c4, v4.d4, v4.e4])),
            ("s_r", rel(&[r.s_r, r.b_r, r.c_r, r.d_r, r.e_r, r.f_r])),
            (
                "g_out",
                rel(&[
                    o.g_out,
                    o.b_out,
                    o.c_out,
                    o.d_out,
                    o.e_out,
                    o.f_out,
                    self.params.k_ps * r.s_r,
                ]),
            ),
        ]
    }

    /// The oscillatory `(a, b)` pair of `stage` computed directly from the
    /// block transfer functions, independent of the closed-form formulas.
    pub fn oscillation_via_transfer(&self, stage: Stage) -> Result<(f64, f64)> {
        let cascade = crate::blocks::BlockCascade::full(&self.params)?.prefix(stage)?;
        let (mut a, mut b) = (self.input.a0, self.input.b0);
        for blk in &cascade.blocks {
            (a, b) = through_block(a, b, self.input.lambda, self.input.omega0, blk.num, blk.den);
        }
        Ok((a, b))
    }
}

/// Closed-form value of `stage` at `t >= 0`.
pub fn eval_linear(coeffs: &CascadeCoefficients, stage: Stage, t: f64) -> Result<f64> {
    ensure_non_negative("t", t)?;
    Ok(coeffs.stage_sum(stage).eval(t))
}
