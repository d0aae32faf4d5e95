//! The reduced rotor-angle equation and signals derived from it.

use super::integrator::{integrate_uniform, Tolerance};
use super::params::{InertiaRatio, ReducedParams, TransientEvent};
use crate::error::{ensure_positive, Error, Result};
use crate::trace::SignalTrace;

/// Stable equilibrium of `xi sin(delta) = tau_r` (principal branch).
pub fn equilibrium_angle(reduced: &ReducedParams) -> Result<f64> {
    if reduced.tau_r.abs() >= reduced.xi {
        return Err(Error::LossOfSynchronism {
            tau_r: reduced.tau_r,
            xi: reduced.xi,
        });
    }
    Ok((reduced.tau_r / reduced.xi).asin())
}

/// Angular acceleration `tau_r - beta delta' - xi sin(delta)`.
pub fn rotor_angle_rhs(delta: f64, delta_dot: f64, reduced: &ReducedParams) -> f64 {
    reduced.tau_r - reduced.beta * delta_dot - reduced.xi * delta.sin()
}

/// Pendulum energy `delta'^2 / 2 + xi (1 - cos delta)`.
pub fn pendulum_energy(delta: f64, delta_dot: f64, xi: f64) -> f64 {
    0.5 * delta_dot * delta_dot + xi * (1.0 - delta.cos())
}

/// Rotor angle and its rate on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorTrajectory {
    pub delta: SignalTrace,
    pub delta_dot: SignalTrace,
}

pub(crate) fn sample_count(horizon: f64, dt: f64) -> Result<usize> {
    ensure_positive("horizon", horizon)?;
    ensure_positive("dt", dt)?;
    Ok((horizon / dt).round() as usize + 1)
}

/// Integrates `delta'' + beta delta' + xi sin(delta) = tau_r` from an
/// arbitrary initial state.
pub fn integrate_pendulum(
    reduced: &ReducedParams,
    delta0: f64,
    delta_dot0: f64,
    t0: f64,
    horizon: f64,
    dt: f64,
) -> Result<RotorTrajectory> {
    let n = sample_count(horizon, dt)?;
    let states = integrate_uniform(
        |_, y: &[f64; 2]| [y[1], rotor_angle_rhs(y[0], y[1], reduced)],
        [delta0, delta_dot0],
        t0,
        dt,
        n,
        Tolerance::default(),
    )?;
    let (delta, delta_dot) = states.into_iter().map(|s| (s[0], s[1])).unzip();
    Ok(RotorTrajectory {
        delta: SignalTrace::new(t0, dt, delta)?,
        delta_dot: SignalTrace::new(t0, dt, delta_dot)?,
    })
}

/// Integrates the reduced equation after the coupling step of `event`.
///
/// The initial state is the pre-event equilibrium at rest. Damping comes from
/// `reduced`; the torque is the one implied by the pre-event equilibrium and
/// the coupling is `event.xi_final`.
pub fn integrate_rotor(
    event: &TransientEvent,
    reduced: &ReducedParams,
    horizon: f64,
    dt: f64,
) -> Result<RotorTrajectory> {
    event.validate()?;
    let post = ReducedParams {
        tau_r: event.tau_r(),
        ..reduced.with_coupling(event.xi_final)?
    };
    integrate_pendulum(&post, event.delta_initial, 0.0, event.event_time, horizon, dt)
}

/// Generator speed `Omega - x/(x+1) delta'`.
pub fn rotor_velocity(
    delta_dot: &SignalTrace,
    x: InertiaRatio,
    omega_base: f64,
) -> Result<SignalTrace> {
    let share = x.generator_share();
    delta_dot.map(|v| omega_base - share * v)
}

/// Bus frequency deviation `-(p/2) x/(x+1) delta'`.
pub fn bus_frequency_deviation(
    delta_dot: &SignalTrace,
    poles: u32,
    x: InertiaRatio,
) -> Result<SignalTrace> {
    if poles < 2 {
        return Err(Error::invalid("poles", "must be at least 2"));
    }
    let gain = 0.5 * f64::from(poles) * x.generator_share();
    delta_dot.map(|v| -gain * v)
}
