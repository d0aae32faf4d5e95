//! PSS1A and AVR as a cascade of first-order blocks.
//!
//! Each block is a proper rational function `(n0 + n1 s) / (d0 + d1 s)`.
//! The cascade is evaluated in the Laplace domain for Bode data and realised
//! in state space for time-domain simulation, which serves as the reference
//! for every closed-form response in this crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::trace::SignalTrace;

/// Time constants closer than this are treated as one repeated pole.
pub const TIME_CONSTANT_COLLISION: f64 = 1e-9;

/// Named signals along the PSS1A + AVR path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Input,
    /// Low-pass output.
    V1,
    /// Washout output.
    V2,
    /// First lead-lag output.
    V3,
    /// Stabilizer output.
    Pss,
    /// Regulator (PI) output.
    Regulator,
    /// Bridge output.
    Out,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Input,
        Stage::V1,
        Stage::V2,
        Stage::V3,
        Stage::Pss,
        Stage::Regulator,
        Stage::Out,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Input => "v_in",
            Stage::V1 => "v1",
            Stage::V2 => "v2",
            Stage::V3 => "v3",
            Stage::Pss => "v_pss",
            Stage::Regulator => "v_r",
            Stage::Out => "v_out",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStage(s.to_string()))
    }
}

/// PSS1A time constants and gains together with the AVR constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizerParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub k_s: f64,
    /// Regulator integration time.
    pub t_n: f64,
    /// Bridge time constant.
    pub t_s: f64,
    pub k_pr: f64,
    pub k_ps: f64,
}

impl Default for StabilizerParams {
    fn default() -> Self {
        Self {
            t1: 0.4,
            t2: 1.0,
            t3: 0.1,
            t4: 0.05,
            t5: 2.0,
            t6: 0.028,
            k_s: 0.8,
            t_n: 2.0,
            t_s: 1.8e-3,
            k_pr: 1.0,
            k_ps: 1.0,
        }
    }
}

impl StabilizerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t1", self.t1),
            ("t2", self.t2),
            ("t3", self.t3),
            ("t4", self.t4),
            ("t5", self.t5),
            ("t6", self.t6),
            ("t_n", self.t_n),
            ("t_s", self.t_s),
            ("k_s", self.k_s),
            ("k_pr", self.k_pr),
            ("k_ps", self.k_ps),
        ] {
            ensure_positive(name, v)?;
        }
        Ok(())
    }

    /// The decay time constants shared by the closed forms, in the order
    /// `T6, T5, T2, T4, T_S`.
    pub fn decay_constants(&self) -> [(&'static str, f64); 5] {
        [
            ("t6", self.t6),
            ("t5", self.t5),
            ("t2", self.t2),
            ("t4", self.t4),
            ("t_s", self.t_s),
        ]
    }

    /// Rejects parameter sets whose closed forms would divide by
    /// `T_i - T_j ~ 0`.
    pub fn check_distinct_poles(&self) -> Result<()> {
        self.validate()?;
        let mut list: Vec<(&str, f64)> = self.decay_constants().to_vec();
        list.push(("t_n", self.t_n));
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                // T_N only enters through 1 - T_i/T_N, which is harmless
                if list[j].0 == "t_n" {
                    continue;
                }
                if (list[i].1 - list[j].1).abs() < TIME_CONSTANT_COLLISION {
                    return Err(Error::PoleCollision(format!(
                        "{} = {} and {} = {} coincide; use the time-domain simulation",
                        list[i].0, list[i].1, list[j].0, list[j].1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// First-order rational block `(n0 + n1 s) / (d0 + d1 s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub output: Stage,
    pub num: [f64; 2],
    pub den: [f64; 2],
}

impl Block {
    /// `1 / (1 + s T)`.
    pub fn low_pass(output: Stage, t: f64) -> Self {
        Self::lag(output, 1.0, t)
    }

    /// `K / (1 + s T)`.
    pub fn lag(output: Stage, gain: f64, t: f64) -> Self {
        Self {
            output,
            num: [gain, 0.0],
            den: [1.0, t],
        }
    }

    /// `K s T / (1 + s T)`.
    pub fn washout(output: Stage, gain: f64, t: f64) -> Self {
        Self {
            output,
            num: [0.0, gain * t],
            den: [1.0, t],
        }
    }

    /// `(1 + s T_lead) / (1 + s T_lag)`.
    pub fn lead_lag(output: Stage, lead: f64, lag: f64) -> Self {
        Self {
            output,
            num: [1.0, lead],
            den: [1.0, lag],
        }
    }

    /// `K (1 + s T) / (s T)`.
    pub fn proportional_integral(output: Stage, gain: f64, t: f64) -> Self {
        Self {
            output,
            num: [gain, gain * t],
            den: [0.0, t],
        }
    }

    pub fn pole(&self) -> f64 {
        -self.den[0] / self.den[1]
    }

    pub fn transfer(&self, s: Complex64) -> Result<Complex64> {
        let den = self.den[0] + self.den[1] * s;
        if den.norm() == 0.0 {
            return Err(Error::Pole(format!(
                "{} block has a pole at s = {}",
                self.output,
                self.pole()
            )));
        }
        Ok((self.num[0] + self.num[1] * s) / den)
    }

    /// Phase of the block on `s = i omega`, continuous in `omega > 0`.
    fn phase(&self, omega: f64) -> f64 {
        let n = Complex64::new(self.num[0], self.num[1] * omega);
        let d = Complex64::new(self.den[0], self.den[1] * omega);
        n.arg() - d.arg()
    }
}

/// Ordered series connection of first-order blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCascade {
    pub blocks: Vec<Block>,
}

impl BlockCascade {
    /// Low-pass, washout and the two lead-lag compensators.
    pub fn pss1a(p: &StabilizerParams) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            blocks: vec![
                Block::low_pass(Stage::V1, p.t6),
                Block::washout(Stage::V2, p.k_s, p.t5),
                Block::lead_lag(Stage::V3, p.t1, p.t2),
                Block::lead_lag(Stage::Pss, p.t3, p.t4),
            ],
        })
    }

    /// Regulator PI stage and bridge lag.
    pub fn avr(p: &StabilizerParams) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            blocks: vec![
                Block::proportional_integral(Stage::Regulator, p.k_pr, p.t_n),
                Block::lag(Stage::Out, p.k_ps, p.t_s),
            ],
        })
    }

    /// Stabilizer followed by the regulator.
    pub fn full(p: &StabilizerParams) -> Result<Self> {
        let mut c = Self::pss1a(p)?;
        c.blocks.extend(Self::avr(p)?.blocks);
        Ok(c)
    }

    pub fn low_pass_only(t6: f64) -> Result<Self> {
        ensure_positive("t6", t6)?;
        Ok(Self {
            blocks: vec![Block::low_pass(Stage::V1, t6)],
        })
    }

    /// Blocks up to and including the one producing `stage`.
    pub fn prefix(&self, stage: Stage) -> Result<Self> {
        if stage == Stage::Input {
            return Ok(Self { blocks: Vec::new() });
        }
        let end = self
            .blocks
            .iter()
            .position(|b| b.output == stage)
            .ok_or_else(|| Error::UnknownStage(stage.name().to_string()))?;
        Ok(Self {
            blocks: self.blocks[..=end].to_vec(),
        })
    }

    pub fn stages(&self) -> impl Iterator<Item = Stage> + '_ {
        self.blocks.iter().map(|b| b.output)
    }
}

/// Product of block gains at `s`.
pub fn transfer_at(cascade: &BlockCascade, s: Complex64) -> Result<Complex64> {
    cascade
        .blocks
        .iter()
        .try_fold(Complex64::new(1.0, 0.0), |acc, b| Ok(acc * b.transfer(s)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeSample {
    pub omega: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

/// Magnitude and unwrapped phase of the cascade on `s = i omega`.
pub fn bode(cascade: &BlockCascade, omega_grid: &[f64]) -> Result<Vec<BodeSample>> {
    if omega_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut out = Vec::with_capacity(omega_grid.len());
    let mut prev: Option<f64> = None;
    for &omega in omega_grid {
        ensure_positive("omega", omega)?;
        let h = transfer_at(cascade, Complex64::new(0.0, omega))?;
        // per-block phases sum to a phase that is continuous in omega
        let mut phase: f64 = cascade.blocks.iter().map(|b| b.phase(omega)).sum();
        if let Some(p) = prev {
            let turns = ((p - phase) / (2.0 * std::f64::consts::PI)).round();
            phase += turns * 2.0 * std::f64::consts::PI;
        }
        prev = Some(phase);
        out.push(BodeSample {
            omega,
            magnitude_db: 20.0 * h.norm().log10(),
            phase_deg: phase.to_degrees(),
        });
    }
    Ok(out)
}

/// `n` logarithmically spaced frequencies over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    ensure_positive("omega_min", lo)?;
    ensure_positive("omega_max", hi)?;
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect())
}

/// Time-domain stage signals of one cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResponse {
    pub traces: BTreeMap<Stage, SignalTrace>,
}

impl CascadeResponse {
    pub fn get(&self, stage: Stage) -> Result<&SignalTrace> {
        self.traces
            .get(&stage)
            .ok_or_else(|| Error::UnknownStage(stage.name().to_string()))
    }
}

/// State-space realisation of the series connection.
struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    // one output row per block: y_k = c_k x + d_k u
    c: Vec<DVector<f64>>,
    d: Vec<f64>,
}

fn realise(cascade: &BlockCascade) -> StateSpace {
    let n = cascade.blocks.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    // block input as (row over states, feedthrough from the cascade input)
    let mut in_c = DVector::<f64>::zeros(n);
    let mut in_d = 1.0;
    for (k, blk) in cascade.blocks.iter().enumerate() {
        // H = D + (n0 - D d0) / (d0 + d1 s), state x' = (u - d0 x) / d1
        let feed = blk.num[1] / blk.den[1];
        let resid = blk.num[0] - feed * blk.den[0];
        for j in 0..n {
            a[(k, j)] += in_c[j] / blk.den[1];
        }
        a[(k, k)] -= blk.den[0] / blk.den[1];
        b[k] = in_d / blk.den[1];
        let mut out_c = in_c.clone() * feed;
        out_c[k] += resid;
        let out_d = in_d * feed;
        c.push(out_c.clone());
        d.push(out_d);
        in_c = out_c;
        in_d = out_d;
    }
    StateSpace { a, b, c, d }
}

/// Steady state for a constant input held since `t = -inf`.
fn steady_state(cascade: &BlockCascade, level: f64) -> Result<DVector<f64>> {
    let mut x = DVector::zeros(cascade.blocks.len());
    let mut u = level;
    for (k, blk) in cascade.blocks.iter().enumerate() {
        if blk.den[0] == 0.0 {
            // an integrator is only at rest with zero input
            if u != 0.0 {
                return Err(Error::invalid(
                    "initial_output_level",
                    format!("{} integrates a nonzero constant input", blk.output),
                ));
            }
        } else {
            x[k] = u / blk.den[0];
            u *= blk.num[0] / blk.den[0];
        }
    }
    Ok(x)
}

/// Output of the last block for a constant input held since `t = -inf`.
pub fn dc_output(cascade: &BlockCascade, level: f64) -> Result<f64> {
    let mut u = level;
    for blk in &cascade.blocks {
        if blk.den[0] == 0.0 {
            if u != 0.0 {
                return Err(Error::Pole(format!(
                    "{} integrates a nonzero constant input",
                    blk.output
                )));
            }
        } else {
            u *= blk.num[0] / blk.den[0];
        }
    }
    Ok(u)
}

/// Simulates the cascade driven by `input`.
///
/// Before the first sample the input is taken to have been constant at
/// `initial_output_level` for all time, so every block starts at its steady
/// state for that level. Between samples the input is linear, and each step
/// uses the exact discretisation of the state equations for such an input,
/// so step size only affects how well the samples describe the input.
pub fn simulate_cascade(
    cascade: &BlockCascade,
    input: &SignalTrace,
    initial_output_level: f64,
) -> Result<CascadeResponse> {
    let n = cascade.blocks.len();
    let ss = realise(cascade);
    let h = input.dt();

    // exp([[A h, B h, 0], [0, 0, 1], [0, 0, 0]]) gives the first-order-hold
    // transition, zero-order input gain and ramp gain
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * h));
    m.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * h));
    m[(n, n + 1)] = 1.0;
    let e = m.exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let gamma0: DVector<f64> = e.view((0, n), (n, 1)).column(0).into_owned();
    let gamma1: DVector<f64> = e.view((0, n + 1), (n, 1)).column(0).into_owned();

    let u = input.samples();
    let mut x = steady_state(cascade, initial_output_level)?;
    let mut outs: Vec<Vec<f64>> = vec![Vec::with_capacity(u.len()); n];
    for k in 0..u.len() {
        for (j, out) in outs.iter_mut().enumerate() {
            out.push(ss.c[j].dot(&x) + ss.d[j] * u[k]);
        }
        if k + 1 < u.len() {
            x = &phi * &x + &gamma0 * u[k] + &gamma1 * (u[k + 1] - u[k]);
        }
    }
    let mut traces = BTreeMap::new();
    traces.insert(Stage::Input, input.clone());
    for (blk, samples) in cascade.blocks.iter().zip(outs) {
        traces.insert(blk.output, SignalTrace::new(input.t0(), h, samples)?);
    }
    Ok(CascadeResponse { traces })
}
