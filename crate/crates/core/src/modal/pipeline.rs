//! From a coupling step to closed-form stabilizer and regulator signals.

use super::cascade::{cascade_modal, ModalCascadeCoefficients};
use super::pencil::{extract_modes_with, ModalFit, PencilOptions};
use crate::blocks::{simulate_cascade, BlockCascade, CascadeResponse, Stage, StabilizerParams};
use crate::dynamics::{
    bus_frequency_deviation, event_trajectory, InertiaRatio, ReducedParams, RotorTrajectory,
    TransientEvent,
};
use crate::error::{ensure_positive, Result};
use crate::linear::InputKind;
use crate::trace::SignalTrace;
use std::collections::BTreeMap;

/// Horizon long enough for a transient decaying at `beta/2` to vanish.
pub fn default_horizon(beta: f64) -> Result<f64> {
    ensure_positive("beta", beta)?;
    Ok(40.0 / beta)
}

pub const DEFAULT_DT: f64 = 1e-3;

/// Stabilizer input of `kind` along `trajectory`.
pub fn input_trace(trajectory: &RotorTrajectory, kind: InputKind, x: InertiaRatio) -> Result<SignalTrace> {
    kind.validate()?;
    match kind {
        InputKind::Speed => {
            let share = x.generator_share();
            trajectory.delta_dot.map(|v| -share * v)
        }
        InputKind::Frequency { poles } => bus_frequency_deviation(&trajectory.delta_dot, poles, x),
        InputKind::Power { p_max } => trajectory.delta.map(|d| p_max * d.sin()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearResponse {
    pub trajectory: RotorTrajectory,
    pub input: SignalTrace,
    pub fit: ModalFit,
    pub coefficients: ModalCascadeCoefficients,
    /// Closed-form stage signals sampled on the input grid.
    pub closed_form: CascadeResponse,
    /// Time-domain simulation driven by the integrated input.
    pub oracle: CascadeResponse,
    /// Time-domain simulation driven by the modal reconstruction of the input.
    pub oracle_reconstructed: CascadeResponse,
}

impl NonlinearResponse {
    /// Largest relative L-infinity distance between the closed form and
    /// `oracle` over `stages`.
    pub fn oracle_error(&self, oracle: &CascadeResponse, stages: &[Stage]) -> Result<f64> {
        stages.iter().try_fold(0.0_f64, |m, &s| {
            Ok(m.max(oracle.get(s)?.relative_linf_error(self.closed_form.get(s)?)?))
        })
    }
}

pub fn nonlinear_response(
    event: &TransientEvent,
    reduced: &ReducedParams,
    kind: InputKind,
    pss: &StabilizerParams,
    horizon: f64,
    dt: f64,
) -> Result<NonlinearResponse> {
    nonlinear_response_with(event, reduced, kind, pss, horizon, dt, &PencilOptions::default())
}

/// Integrates the event, decomposes the chosen input into modes, propagates
/// them in closed form and runs both time-domain references.
pub fn nonlinear_response_with(
    event: &TransientEvent,
    reduced: &ReducedParams,
    kind: InputKind,
    pss: &StabilizerParams,
    horizon: f64,
    dt: f64,
    opts: &PencilOptions,
) -> Result<NonlinearResponse> {
    pss.validate()?;
    let trajectory = event_trajectory(event, reduced, horizon, dt)?;
    let input = input_trace(&trajectory, kind, reduced.x)?;
    let fit = extract_modes_with(&input, opts)?;
    let coefficients = cascade_modal(&fit.modes, pss)?;

    let n = input.len();
    let mut traces = BTreeMap::new();
    for stage in Stage::ALL {
        let s = coefficients.exp_sum(stage);
        traces.insert(stage, s.sample_from(input.t0(), dt, n)?);
    }
    let closed_form = CascadeResponse { traces };

    let cascade = BlockCascade::full(pss)?;
    let oracle = simulate_cascade(&cascade, &input, input.samples()[0])?;
    let rec = closed_form.get(Stage::Input)?;
    let oracle_reconstructed = simulate_cascade(&cascade, rec, rec.samples()[0])?;
    Ok(NonlinearResponse {
        trajectory,
        input,
        fit,
        coefficients,
        closed_form,
        oracle,
        oracle_reconstructed,
    })
}
