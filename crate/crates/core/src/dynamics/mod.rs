//! Generator–grid dynamics: two-body models, the reduced rotor-angle
//! pendulum and the trajectory integrator.

pub mod integrator;
pub mod params;
pub mod rotor;
pub mod two_body;

pub use integrator::Tolerance;
pub use params::{
    reduce_params, CouplingModel, GridInertia, InertiaRatio, MachineParams, ReducedParams,
    TransientEvent,
};
pub use rotor::{
    bus_frequency_deviation, equilibrium_angle, integrate_pendulum, integrate_rotor,
    pendulum_energy, rotor_angle_rhs, rotor_velocity, RotorTrajectory,
};
pub use two_body::{
    angular_momentum, event_machine, event_trajectory, integrate_two_body, relative_motion,
    TwoBodyState, DEFAULT_OMEGA_BASE,
};
