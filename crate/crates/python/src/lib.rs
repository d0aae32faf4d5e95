//! Python bindings: rotor trajectories, linear and modal stage responses,
//! the envelope transform and Bode data.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pss_core::blocks::{bode as core_bode, BlockCascade, Stage, StabilizerParams};
use pss_core::dynamics::{event_trajectory, CouplingModel, InertiaRatio, ReducedParams, TransientEvent};
use pss_core::envelope::{envelope_laplace as core_envelope_laplace, envelope_transform as core_envelope_transform, EnvelopeInput};
use pss_core::linear::{cascade_linear, eval_linear, linear_input, InputKind};
use pss_core::modal::nonlinear_response as core_nonlinear;
use pss_core::modal::pipeline::default_horizon;
use pss_core::SignalTrace;

fn py_err(e: pss_core::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for pss_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// PSS1A and AVR constants. Keyword arguments override the defaults.
#[pyclass(name = "Stabilizer", from_py_object)]
#[derive(Clone)]
struct PyStabilizer {
    #[pyo3(get, set)]
    t1: f64,
    #[pyo3(get, set)]
    t2: f64,
    #[pyo3(get, set)]
    t3: f64,
    #[pyo3(get, set)]
    t4: f64,
    #[pyo3(get, set)]
    t5: f64,
    #[pyo3(get, set)]
    t6: f64,
    #[pyo3(get, set)]
    k_s: f64,
    #[pyo3(get, set)]
    t_n: f64,
    #[pyo3(get, set)]
    t_s: f64,
    #[pyo3(get, set)]
    k_pr: f64,
    #[pyo3(get, set)]
    k_ps: f64,
}

impl From<StabilizerParams> for PyStabilizer {
    fn from(p: StabilizerParams) -> Self {
        Self {
            t1: p.t1,
            t2: p.t2,
            t3: p.t3,
            t4: p.t4,
            t5: p.t5,
            t6: p.t6,
            k_s: p.k_s,
            t_n: p.t_n,
            t_s: p.t_s,
            k_pr: p.k_pr,
            k_ps: p.k_ps,
        }
    }
}

impl PyStabilizer {
    fn params(&self) -> PyResult<StabilizerParams> {
        let p = StabilizerParams {
            t1: self.t1,
            t2: self.t2,
            t3: self.t3,
            t4: self.t4,
            t5: self.t5,
            t6: self.t6,
            k_s: self.k_s,
            t_n: self.t_n,
            t_s: self.t_s,
            k_pr: self.k_pr,
            k_ps: self.k_ps,
        };
        p.validate().py()?;
        Ok(p)
    }
}

#[pymethods]
impl PyStabilizer {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut s = PyStabilizer::from(StabilizerParams::default());
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let name: String = k.extract()?;
                let v: f64 = v.extract()?;
                let slot = match name.as_str() {
                    "t1" => &mut s.t1,
                    "t2" => &mut s.t2,
                    "t3" => &mut s.t3,
                    "t4" => &mut s.t4,
                    "t5" => &mut s.t5,
                    "t6" => &mut s.t6,
                    "k_s" => &mut s.k_s,
                    "t_n" => &mut s.t_n,
                    "t_s" => &mut s.t_s,
                    "k_pr" => &mut s.k_pr,
                    "k_ps" => &mut s.k_ps,
                    other => return Err(PyValueError::new_err(format!("unknown stabilizer constant `{other}`"))),
                };
                *slot = v;
            }
        }
        s.params()?;
        Ok(s)
    }

    fn __repr__(&self) -> String {
        format!(
            "Stabilizer(t1={}, t2={}, t3={}, t4={}, t5={}, t6={}, k_s={}, t_n={}, t_s={}, k_pr={}, k_ps={})",
            self.t1, self.t2, self.t3, self.t4, self.t5, self.t6, self.k_s, self.t_n, self.t_s, self.k_pr, self.k_ps
        )
    }
}

fn stabilizer(s: Option<PyStabilizer>) -> PyResult<StabilizerParams> {
    s.map_or(Ok(StabilizerParams::default()), |s| s.params())
}

fn input_kind(name: &str) -> PyResult<InputKind> {
    match name {
        "speed" => Ok(InputKind::Speed),
        "frequency" => Ok(InputKind::Frequency { poles: 2 }),
        "power" => Ok(InputKind::Power { p_max: 1.0 }),
        other => Err(PyValueError::new_err(format!(
            "input_kind must be speed, frequency or power, got `{other}`"
        ))),
    }
}

fn model(name: &str) -> PyResult<CouplingModel> {
    match name {
        "cage" => Ok(CouplingModel::Cage),
        "kuramoto" => Ok(CouplingModel::Kuramoto),
        other => Err(PyValueError::new_err(format!("model must be cage or kuramoto, got `{other}`"))),
    }
}

fn inertia(x: f64) -> PyResult<InertiaRatio> {
    if x == f64::INFINITY {
        Ok(InertiaRatio::Infinite)
    } else {
        InertiaRatio::new(x).py()
    }
}

fn times(tr: &SignalTrace) -> Vec<f64> {
    tr.times().collect()
}

/// Rotor angle and rate after the coupling step `xi_initial -> xi_final`,
/// starting at rest at `delta_initial`.
#[pyfunction]
#[pyo3(signature = (xi_initial, xi_final, delta_initial, beta, horizon, dt=1e-3, model_name="cage", x=f64::INFINITY))]
#[allow(clippy::too_many_arguments)]
fn rotor_trajectory<'py>(
    py: Python<'py>,
    xi_initial: f64,
    xi_final: f64,
    delta_initial: f64,
    beta: f64,
    horizon: f64,
    dt: f64,
    model_name: &str,
    x: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ev = TransientEvent::new(xi_initial, xi_final, delta_initial).py()?;
    let r = ReducedParams::with_generator_damping(model(model_name)?, beta, xi_final, ev.tau_r(), inertia(x)?).py()?;
    let tr = event_trajectory(&ev, &r, horizon, dt).py()?;
    let d = PyDict::new(py);
    d.set_item("t", times(&tr.delta))?;
    d.set_item("delta", tr.delta.samples())?;
    d.set_item("delta_dot", tr.delta_dot.samples())?;
    Ok(d)
}

/// Closed-form stage signals for a small step from `delta_initial` to
/// `delta_final` at coupling `xi_final` against an infinite grid.
#[pyfunction]
#[pyo3(signature = (xi_final, delta_initial, delta_final, beta, input_kind_name="speed", stabilizer_params=None, horizon=30.0, dt=1e-3))]
#[allow(clippy::too_many_arguments)]
fn linear_response<'py>(
    py: Python<'py>,
    xi_final: f64,
    delta_initial: f64,
    delta_final: f64,
    beta: f64,
    input_kind_name: &str,
    stabilizer_params: Option<PyStabilizer>,
    horizon: f64,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pss = stabilizer(stabilizer_params)?;
    let ev = TransientEvent::from_angles(xi_final, delta_initial, delta_final).py()?;
    let r = ReducedParams::pendulum(beta, xi_final, ev.tau_r()).py()?;
    let input = linear_input(input_kind(input_kind_name)?, &r, delta_initial, delta_final).py()?;
    let coeffs = cascade_linear(&input, &pss).py()?;
    let n = (horizon / dt).round() as usize + 1;
    let grid = SignalTrace::from_fn(0.0, dt, n, |t| t).py()?;
    let d = PyDict::new(py);
    d.set_item("t", grid.samples())?;
    for stage in Stage::ALL {
        let v: pss_core::Result<Vec<f64>> = grid.samples().iter().map(|&t| eval_linear(&coeffs, stage, t)).collect();
        d.set_item(stage.name(), v.py()?)?;
    }
    d.set_item("decay_rate", input.lambda)?;
    d.set_item("frequency", input.omega0)?;
    Ok(d)
}

/// Integrates the event, decomposes the input into modes and returns the
/// closed-form stage signals with the fit and its oracle agreement.
#[pyfunction]
#[pyo3(signature = (xi_initial, xi_final, delta_initial, beta, input_kind_name="speed", stabilizer_params=None, horizon=None, dt=1e-3))]
#[allow(clippy::too_many_arguments)]
fn nonlinear_response<'py>(
    py: Python<'py>,
    xi_initial: f64,
    xi_final: f64,
    delta_initial: f64,
    beta: f64,
    input_kind_name: &str,
    stabilizer_params: Option<PyStabilizer>,
    horizon: Option<f64>,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pss = stabilizer(stabilizer_params)?;
    let ev = TransientEvent::new(xi_initial, xi_final, delta_initial).py()?;
    let r = ReducedParams::pendulum(beta, xi_final, ev.tau_r()).py()?;
    let horizon = match horizon {
        Some(h) => h,
        None => default_horizon(beta).py()?,
    };
    let resp = core_nonlinear(&ev, &r, input_kind(input_kind_name)?, &pss, horizon, dt).py()?;
    let d = PyDict::new(py);
    d.set_item("t", times(&resp.input))?;
    d.set_item("measured_input", resp.input.samples())?;
    for (&stage, tr) in &resp.closed_form.traces {
        d.set_item(stage.name(), tr.samples())?;
    }
    let modes: Vec<(Complex64, Complex64)> = resp.fit.modes.modes.iter().map(|m| (m.amplitude, m.eigenvalue)).collect();
    d.set_item("modes", modes)?;
    d.set_item("dc_offset", resp.fit.modes.dc_offset)?;
    d.set_item("fit_error", resp.fit.fit_error)?;
    d.set_item("order", resp.fit.order)?;
    let stages = [Stage::Pss, Stage::Out];
    d.set_item("oracle_error", resp.oracle_error(&resp.oracle, &stages).py()?)?;
    d.set_item("oracle_error_reconstructed", resp.oracle_error(&resp.oracle_reconstructed, &stages).py()?)?;
    Ok(d)
}

/// Closed-form Laplace transform of the envelope packet; raises at its
/// removable singularities.
#[pyfunction]
fn envelope_laplace(amplitude: f64, omega_e: f64, omega0: f64, s: Complex64) -> PyResult<Complex64> {
    let e = EnvelopeInput::new(amplitude, omega_e, omega0).py()?;
    core_envelope_laplace(&e, s).py()
}

/// Laplace transform of the envelope packet, finite everywhere.
#[pyfunction]
fn envelope_transform(amplitude: f64, omega_e: f64, omega0: f64, s: Complex64) -> PyResult<Complex64> {
    let e = EnvelopeInput::new(amplitude, omega_e, omega0).py()?;
    Ok(core_envelope_transform(&e, s))
}

/// `(omega, magnitude_db, phase_deg)` rows for `cascade` in {pss, avr, full}.
#[pyfunction]
#[pyo3(signature = (omegas, cascade="full", stabilizer_params=None))]
fn bode(omegas: Vec<f64>, cascade: &str, stabilizer_params: Option<PyStabilizer>) -> PyResult<Vec<(f64, f64, f64)>> {
    let p = stabilizer(stabilizer_params)?;
    let c = match cascade {
        "pss" => BlockCascade::pss1a(&p),
        "avr" => BlockCascade::avr(&p),
        "full" => BlockCascade::full(&p),
        other => return Err(PyValueError::new_err(format!("cascade must be pss, avr or full, got `{other}`"))),
    }
    .py()?;
    Ok(core_bode(&c, &omegas)
        .py()?
        .into_iter()
        .map(|b| (b.omega, b.magnitude_db, b.phase_deg))
        .collect())
}

#[pymodule]
pub fn pss_response(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStabilizer>()?;
    m.add_function(wrap_pyfunction!(rotor_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(linear_response, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinear_response, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_laplace, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_transform, m)?)?;
    m.add_function(wrap_pyfunction!(bode, m)?)?;
    Ok(())
}
