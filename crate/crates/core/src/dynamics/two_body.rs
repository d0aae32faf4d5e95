//! Generator and grid as two coupled rotating bodies.

use super::integrator::{integrate_uniform, Tolerance};
use super::params::{
    CouplingModel, GridInertia, InertiaRatio, MachineParams, ReducedParams, TransientEvent,
};
use super::rotor::{integrate_rotor, sample_count, RotorTrajectory};
use crate::error::{Error, Result};
use crate::trace::SignalTrace;

pub const DEFAULT_OMEGA_BASE: f64 = 2.0 * std::f64::consts::PI * 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyState {
    pub theta_gen: f64,
    pub theta_grid: f64,
    pub theta_gen_dot: f64,
    pub theta_grid_dot: f64,
    pub t: f64,
}

impl TwoBodyState {
    /// Both bodies turning at `omega` with relative angle `delta`.
    pub fn synchronous(delta: f64, omega: f64) -> Self {
        Self {
            theta_gen: 0.0,
            theta_grid: delta,
            theta_gen_dot: omega,
            theta_grid_dot: omega,
            t: 0.0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.theta_grid - self.theta_gen
    }

    pub fn delta_dot(&self) -> f64 {
        self.theta_grid_dot - self.theta_gen_dot
    }

    fn is_finite(&self) -> bool {
        [
            self.theta_gen,
            self.theta_grid,
            self.theta_gen_dot,
            self.theta_grid_dot,
            self.t,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Total angular momentum `J_grid theta_grid' + J_gen theta_gen'`; only
/// defined for a finite grid.
pub fn angular_momentum(machine: &MachineParams, state: &TwoBodyState) -> Option<f64> {
    match machine.j_grid {
        GridInertia::Finite(j) => Some(j * state.theta_grid_dot + machine.j_gen * state.theta_gen_dot),
        GridInertia::Infinite => None,
    }
}

/// Integrates the two-body equations of `model`.
///
/// Internally the angles are measured in the frame turning at
/// `machine.omega_base`, which keeps the relative angle accurate over long
/// horizons; the returned states are in the fixed frame.
pub fn integrate_two_body(
    machine: &MachineParams,
    model: CouplingModel,
    initial: &TwoBodyState,
    horizon: f64,
    dt: f64,
) -> Result<Vec<TwoBodyState>> {
    machine.validate()?;
    if !initial.is_finite() {
        return Err(Error::invalid("initial", "state must be finite"));
    }
    let n = sample_count(horizon, dt)?;
    let omega = machine.omega_base;
    let (k_gen, k_grid) = match model {
        CouplingModel::Cage => {
            let k = machine
                .k_d
                .ok_or_else(|| Error::invalid("k_d", "required by the cage model"))?;
            (k, k)
        }
        CouplingModel::Kuramoto => (
            machine.k_gen_kuramoto.ok_or_else(|| {
                Error::invalid("k_gen_kuramoto", "required by the Kuramoto-like model")
            })?,
            machine.k_grid_kuramoto.ok_or_else(|| {
                Error::invalid("k_grid_kuramoto", "required by the Kuramoto-like model")
            })?,
        ),
    };
    let j_gen = machine.j_gen;
    let j_grid = match machine.j_grid {
        GridInertia::Finite(j) => Some(j),
        GridInertia::Infinite => None,
    };
    let tau_max = machine.tau_elmax;

    // y = [phi_gen, phi_grid, phi_gen', phi_grid'] with phi = theta - omega t
    let rhs = |_: f64, y: &[f64; 4]| {
        let (phi_gen, phi_grid, w_gen, w_grid) = (y[0], y[1], y[2], y[3]);
        let coupling = tau_max * (phi_grid - phi_gen).sin();
        let (damp_gen, damp_grid) = match model {
            CouplingModel::Cage => (k_gen * (w_gen - w_grid), k_grid * (w_grid - w_gen)),
            CouplingModel::Kuramoto => (k_gen * w_gen, k_grid * w_grid),
        };
        let acc_gen = (machine.tau_gen - damp_gen + coupling) / j_gen;
        let acc_grid = match j_grid {
            Some(j) => (machine.tau_grid - damp_grid - coupling) / j,
            None => 0.0,
        };
        [w_gen, w_grid, acc_gen, acc_grid]
    };
    let t0 = initial.t;
    let y0 = [
        initial.theta_gen - omega * t0,
        initial.theta_grid - omega * t0,
        initial.theta_gen_dot - omega,
        initial.theta_grid_dot - omega,
    ];
    let ys = integrate_uniform(rhs, y0, t0, dt, n, Tolerance::default())?;
    Ok(ys
        .iter()
        .enumerate()
        .map(|(k, y)| {
            let t = t0 + k as f64 * dt;
            TwoBodyState {
                theta_gen: y[0] + omega * t,
                theta_grid: y[1] + omega * t,
                theta_gen_dot: y[2] + omega,
                theta_grid_dot: y[3] + omega,
                t,
            }
        })
        .collect())
}

/// Relative angle `theta_grid - theta_gen` and its rate.
pub fn relative_motion(states: &[TwoBodyState]) -> Result<RotorTrajectory> {
    if states.len() < 2 {
        return Err(Error::invalid("states", "need at least two samples"));
    }
    let t0 = states[0].t;
    let dt = states[1].t - t0;
    Ok(RotorTrajectory {
        delta: SignalTrace::new(t0, dt, states.iter().map(TwoBodyState::delta).collect())?,
        delta_dot: SignalTrace::new(t0, dt, states.iter().map(TwoBodyState::delta_dot).collect())?,
    })
}

/// Two-body machine (normalised to `J_gen = 1`) whose reduced coefficients
/// are `reduced` with coupling `xi`, and whose applied torques hold the
/// relative angle `delta_initial` at rest under coupling `xi_initial`.
pub fn event_machine(
    event: &TransientEvent,
    reduced: &ReducedParams,
    xi: f64,
) -> Result<MachineParams> {
    let share = 1.0 / reduced.x.coupling_factor();
    let j_grid = match reduced.x {
        InertiaRatio::Finite(x) => GridInertia::Finite(x),
        InertiaRatio::Infinite => GridInertia::Infinite,
    };
    let x = reduced.x.value();
    let k_grid = if x.is_finite() { reduced.beta_grid * x } else { 0.0 };
    let torque = event.xi_initial * share * event.delta_initial.sin();
    let machine = MachineParams {
        j_gen: 1.0,
        j_grid,
        k_d: Some(reduced.beta / reduced.x.coupling_factor()),
        k_gen_kuramoto: Some(reduced.beta_gen),
        k_grid_kuramoto: Some(k_grid),
        tau_elmax: xi * share,
        tau_gen: -torque,
        tau_grid: if x.is_finite() { torque } else { 0.0 },
        omega_base: DEFAULT_OMEGA_BASE,
        ..MachineParams::default()
    };
    machine.validate()?;
    Ok(machine)
}

/// Relative motion after `event` under the dynamics selected by
/// `reduced.model`.
///
/// The cage model (and any model against an infinite grid) reduces exactly to
/// the pendulum equation. The Kuramoto-like model with a finite grid does not,
/// so it is integrated as two bodies.
pub fn event_trajectory(
    event: &TransientEvent,
    reduced: &ReducedParams,
    horizon: f64,
    dt: f64,
) -> Result<RotorTrajectory> {
    match (reduced.model, reduced.x) {
        (CouplingModel::Kuramoto, InertiaRatio::Finite(_)) => {
            event.validate()?;
            let machine = event_machine(event, reduced, event.xi_final)?;
            let initial = TwoBodyState {
                t: event.event_time,
                theta_gen: machine.omega_base * event.event_time,
                theta_grid: machine.omega_base * event.event_time + event.delta_initial,
                theta_gen_dot: machine.omega_base,
                theta_grid_dot: machine.omega_base,
            };
            let states =
                integrate_two_body(&machine, CouplingModel::Kuramoto, &initial, horizon, dt)?;
            relative_motion(&states)
        }
        _ => integrate_rotor(event, reduced, horizon, dt),
    }
}
