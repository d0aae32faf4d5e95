use std::f64::consts::PI;
use std::fmt;

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Moment of inertia of the grid body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridInertia {
    Finite(f64),
    Infinite,
}

/// Grid-to-generator inertia ratio `x = J_grid / J_gen`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InertiaRatio {
    Finite(f64),
    Infinite,
}

impl InertiaRatio {
    pub fn new(x: f64) -> Result<Self> {
        ensure_positive("x", x)?;
        Ok(InertiaRatio::Finite(x))
    }

    /// `(x + 1) / x`, the factor scaling generator-side coefficients to the
    /// relative-angle equation. Exactly 1 for an infinite grid.
    pub fn coupling_factor(self) -> f64 {
        match self {
            InertiaRatio::Finite(x) => (x + 1.0) / x,
            InertiaRatio::Infinite => 1.0,
        }
    }

    /// `x / (x + 1)`, the share of the relative speed carried by the generator.
    pub fn generator_share(self) -> f64 {
        match self {
            InertiaRatio::Finite(x) => x / (x + 1.0),
            InertiaRatio::Infinite => 1.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            InertiaRatio::Finite(x) => x,
            InertiaRatio::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for InertiaRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InertiaRatio::Finite(x) => write!(f, "{x}"),
            InertiaRatio::Infinite => f.write_str("inf"),
        }
    }
}

/// How damping torques enter the two-body equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingModel {
    /// Damping on the relative angular velocity of the two bodies.
    Cage,
    /// Damping on each body's deviation from the base speed.
    Kuramoto,
}

impl CouplingModel {
    pub fn name(self) -> &'static str {
        match self {
            CouplingModel::Cage => "cage",
            CouplingModel::Kuramoto => "kuramoto",
        }
    }
}

impl std::str::FromStr for CouplingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cage" => Ok(CouplingModel::Cage),
            "kuramoto" => Ok(CouplingModel::Kuramoto),
            other => Err(Error::invalid(
                "model",
                format!("expected `cage` or `kuramoto`, got `{other}`"),
            )),
        }
    }
}

/// Physical constants of a generator coupled to a grid body.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineParams {
    /// Generator inertia (kg m^2).
    pub j_gen: f64,
    pub j_grid: GridInertia,
    /// Cage damping coefficient (N m s).
    pub k_d: Option<f64>,
    pub k_gen_kuramoto: Option<f64>,
    pub k_grid_kuramoto: Option<f64>,
    /// Peak electromagnetic air-gap torque (N m).
    pub tau_elmax: f64,
    pub tau_gen: f64,
    pub tau_grid: f64,
    /// Unperturbed angular speed (rad/s).
    pub omega_base: f64,
    pub poles: u32,
    /// Peak electrical output power (W).
    pub p_max: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        Self {
            j_gen: 1.0,
            j_grid: GridInertia::Infinite,
            k_d: Some(0.3),
            k_gen_kuramoto: None,
            k_grid_kuramoto: None,
            tau_elmax: 1.0,
            tau_gen: 0.0,
            tau_grid: 0.0,
            omega_base: 2.0 * PI * 50.0,
            poles: 2,
            p_max: 1.0,
        }
    }
}

impl MachineParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("j_gen", self.j_gen)?;
        if let GridInertia::Finite(j) = self.j_grid {
            ensure_positive("j_grid", j)?;
        }
        ensure_positive("tau_elmax", self.tau_elmax)?;
        ensure_finite("tau_gen", self.tau_gen)?;
        ensure_finite("tau_grid", self.tau_grid)?;
        ensure_finite("omega_base", self.omega_base)?;
        ensure_finite("p_max", self.p_max)?;
        if self.poles < 2 || !self.poles.is_multiple_of(2) {
            return Err(Error::invalid(
                "poles",
                format!("must be even and at least 2, got {}", self.poles),
            ));
        }
        for (name, k) in [
            ("k_d", self.k_d),
            ("k_gen_kuramoto", self.k_gen_kuramoto),
            ("k_grid_kuramoto", self.k_grid_kuramoto),
        ] {
            if let Some(k) = k {
                ensure_non_negative(name, k)?;
            }
        }
        Ok(())
    }

    pub fn inertia_ratio(&self) -> InertiaRatio {
        match self.j_grid {
            GridInertia::Finite(j) => InertiaRatio::Finite(j / self.j_gen),
            GridInertia::Infinite => InertiaRatio::Infinite,
        }
    }

    /// Same machine with `J_grid = x * J_gen`.
    pub fn with_inertia_ratio(&self, x: InertiaRatio) -> Self {
        let j_grid = match x {
            InertiaRatio::Finite(x) => GridInertia::Finite(x * self.j_gen),
            InertiaRatio::Infinite => GridInertia::Infinite,
        };
        Self {
            j_grid,
            ..self.clone()
        }
    }

    /// `value / J_grid`, zero for an infinite grid.
    fn per_grid_inertia(&self, value: f64) -> f64 {
        match self.j_grid {
            GridInertia::Finite(j) => value / j,
            GridInertia::Infinite => 0.0,
        }
    }
}

/// Coefficients of the reduced rotor-angle pendulum
/// `delta'' + beta delta' + xi sin(delta) = tau_r` with their per-body parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedParams {
    pub model: CouplingModel,
    /// Damping (1/s).
    pub beta: f64,
    /// Coupling (1/s^2).
    pub xi: f64,
    /// Reduced torque (1/s^2).
    pub tau_r: f64,
    pub x: InertiaRatio,
    pub beta_gen: f64,
    pub beta_grid: f64,
    pub xi_gen: f64,
    pub xi_grid: f64,
    pub tau_bar_gen: f64,
    pub tau_bar_grid: f64,
}

impl ReducedParams {
    /// A single-body pendulum against an infinite grid.
    pub fn pendulum(beta: f64, xi: f64, tau_r: f64) -> Result<Self> {
        ensure_non_negative("beta", beta)?;
        ensure_positive("xi", xi)?;
        ensure_finite("tau_r", tau_r)?;
        Ok(Self {
            model: CouplingModel::Cage,
            beta,
            xi,
            tau_r,
            x: InertiaRatio::Infinite,
            beta_gen: beta,
            beta_grid: 0.0,
            xi_gen: xi,
            xi_grid: 0.0,
            tau_bar_gen: -tau_r,
            tau_bar_grid: 0.0,
        })
    }

    /// Per-body generator damping `beta_gen` held fixed while the grid share
    /// follows the inertia ratio: `beta = beta_gen (x + 1) / x`.
    pub fn with_generator_damping(
        model: CouplingModel,
        beta_gen: f64,
        xi: f64,
        tau_r: f64,
        x: InertiaRatio,
    ) -> Result<Self> {
        ensure_non_negative("beta_gen", beta_gen)?;
        ensure_positive("xi", xi)?;
        ensure_finite("tau_r", tau_r)?;
        let share = 1.0 / x.coupling_factor();
        let beta_grid = match x {
            InertiaRatio::Finite(x) => beta_gen / x,
            InertiaRatio::Infinite => 0.0,
        };
        Ok(Self {
            model,
            beta: beta_gen + beta_grid,
            xi,
            tau_r,
            x,
            beta_gen,
            beta_grid,
            xi_gen: xi * share,
            xi_grid: xi - xi * share,
            tau_bar_gen: -tau_r * share,
            tau_bar_grid: tau_r - tau_r * share,
        })
    }

    /// Same parameters with a different coupling `xi`, split between the
    /// bodies in the original proportion.
    pub fn with_coupling(&self, xi: f64) -> Result<Self> {
        ensure_positive("xi", xi)?;
        let scale = xi / self.xi;
        Ok(Self {
            xi,
            xi_gen: self.xi_gen * scale,
            xi_grid: self.xi_grid * scale,
            ..self.clone()
        })
    }
}

/// Reduces the two-body constants to pendulum coefficients.
pub fn reduce_params(machine: &MachineParams, model: CouplingModel) -> Result<ReducedParams> {
    machine.validate()?;
    let (k_gen, k_grid) = match model {
        CouplingModel::Cage => {
            let k = machine
                .k_d
                .ok_or_else(|| Error::invalid("k_d", "required by the cage model"))?;
            (k, k)
        }
        CouplingModel::Kuramoto => {
            let kg = machine.k_gen_kuramoto.ok_or_else(|| {
                Error::invalid("k_gen_kuramoto", "required by the Kuramoto-like model")
            })?;
            let kr = machine.k_grid_kuramoto.ok_or_else(|| {
                Error::invalid("k_grid_kuramoto", "required by the Kuramoto-like model")
            })?;
            (kg, kr)
        }
    };
    let x = machine.inertia_ratio();
    let beta_gen = k_gen / machine.j_gen;
    let beta_grid = machine.per_grid_inertia(k_grid);
    let xi_gen = machine.tau_elmax / machine.j_gen;
    let xi_grid = machine.per_grid_inertia(machine.tau_elmax);
    let tau_bar_gen = machine.tau_gen / machine.j_gen;
    let tau_bar_grid = machine.per_grid_inertia(machine.tau_grid);
    // xi_gen + xi_grid == (tau_elmax / j_gen) (x + 1) / x; the product form
    // is used so the identity holds bit-for-bit.
    let xi = xi_gen * x.coupling_factor();
    let beta = match model {
        CouplingModel::Cage => beta_gen * x.coupling_factor(),
        CouplingModel::Kuramoto => beta_gen + beta_grid,
    };
    Ok(ReducedParams {
        model,
        beta,
        xi,
        tau_r: tau_bar_grid - tau_bar_gen,
        x,
        beta_gen,
        beta_grid,
        xi_gen,
        xi_grid,
        tau_bar_gen,
        tau_bar_grid,
    })
}

/// Coupling step at `event_time`: the system sits at the equilibrium
/// `delta_initial` of coupling `xi_initial` and then evolves under `xi_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientEvent {
    pub xi_initial: f64,
    pub xi_final: f64,
    pub delta_initial: f64,
    pub event_time: f64,
}

impl TransientEvent {
    pub fn new(xi_initial: f64, xi_final: f64, delta_initial: f64) -> Result<Self> {
        let ev = Self {
            xi_initial,
            xi_final,
            delta_initial,
            event_time: 0.0,
        };
        ev.validate()?;
        Ok(ev)
    }

    /// Event defined by its start and end angles; the torque is fixed by the
    /// final equilibrium and the initial coupling follows from it.
    pub fn from_angles(xi_final: f64, delta_initial: f64, delta_final: f64) -> Result<Self> {
        ensure_positive("xi_final", xi_final)?;
        ensure_finite("delta_initial", delta_initial)?;
        ensure_finite("delta_final", delta_final)?;
        let tau_r = xi_final * delta_final.sin();
        let xi_initial = if tau_r == 0.0 && delta_initial.sin() == 0.0 {
            xi_final
        } else {
            tau_r / delta_initial.sin()
        };
        if !(xi_initial.is_finite() && xi_initial > 0.0) {
            return Err(Error::invalid(
                "delta_initial",
                format!(
                    "no positive coupling has equilibrium {delta_initial} for torque {tau_r}"
                ),
            ));
        }
        Self::new(xi_initial, xi_final, delta_initial)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("xi_initial", self.xi_initial)?;
        ensure_positive("xi_final", self.xi_final)?;
        ensure_finite("delta_initial", self.delta_initial)?;
        ensure_finite("event_time", self.event_time)?;
        if self.delta_initial.abs() >= PI / 2.0 {
            return Err(Error::invalid(
                "delta_initial",
                "pre-event angle must lie on the stable branch (|delta| < pi/2)",
            ));
        }
        let tau_r = self.tau_r();
        if tau_r.abs() >= self.xi_final {
            return Err(Error::LossOfSynchronism {
                tau_r,
                xi: self.xi_final,
            });
        }
        Ok(())
    }

    /// Reduced torque implied by the pre-event equilibrium.
    pub fn tau_r(&self) -> f64 {
        self.xi_initial * self.delta_initial.sin()
    }

    /// Post-event operating angle.
    pub fn delta_final(&self) -> f64 {
        (self.tau_r() / self.xi_final).asin()
    }
}
