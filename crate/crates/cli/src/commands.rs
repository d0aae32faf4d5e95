//! The subcommands. Each reads a scenario, computes, and writes CSV files
//! into the output directory.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pss_core::blocks::{bode, simulate_cascade, BlockCascade, BodeSample, Stage};
use pss_core::dynamics::{bus_frequency_deviation, event_trajectory, rotor_velocity, ReducedParams};
use pss_core::envelope::envelope_response;
use pss_core::linear::{cascade_linear, linear_input, CascadeCoefficients, InputKind};
use pss_core::modal::pipeline::default_horizon;
use pss_core::modal::{nonlinear_response, NonlinearResponse, PencilOptions};
use pss_core::spectrum::{relative_spectrum_error, spectrum_closed_form, SpectrumSample};

use crate::error::CliError;
use crate::output::{format_float, write_records, write_table, Table};
use crate::scenario::{InputKindName, ModelName, ResponseKind, Scenario, SpectrumPart, XValue};

/// The linear templates are only trusted for small angle steps.
pub const LINEAR_DEVIATION_LIMIT: f64 = PI / 20.0;

pub const LINEAR_TOLERANCE: f64 = 1e-5;
pub const NONLINEAR_TOLERANCE_FLOOR: f64 = 1e-4;
pub const ENVELOPE_TOLERANCE: f64 = 1e-3;

/// Command-line overrides shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub stages: Option<Vec<String>>,
    pub models: Option<Vec<ModelName>>,
    pub x_values: Option<Vec<XValue>>,
    pub tolerance: Option<f64>,
}

impl Overrides {
    fn stages(&self, s: &Scenario) -> Result<Vec<Stage>, CliError> {
        match &self.stages {
            Some(names) => crate::scenario::parse_stages(names),
            None => s.stages(),
        }
    }

    fn combinations(&self, s: &Scenario) -> Vec<(ModelName, XValue)> {
        s.combinations(self.models.as_deref(), self.x_values.as_deref())
    }
}

fn model_name(m: ModelName) -> &'static str {
    pss_core::dynamics::CouplingModel::from(m).name()
}

/// File-name tag of one model and inertia ratio.
pub fn case_tag(model: ModelName, x: XValue) -> String {
    format!("{}_x{}", model_name(model), x)
}

fn horizon(s: &Scenario, r: &ReducedParams) -> Result<f64, CliError> {
    match s.run.horizon {
        Some(h) => Ok(h),
        None if r.beta > 0.0 => Ok(default_horizon(r.beta)?),
        None => Err(CliError::config("run.horizon: required when the damping is zero")),
    }
}

fn sample_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt).round() as usize + 1
}

fn spectrum_table(
    part: SpectrumPart,
    grid: &[f64],
    spectra: &[(Stage, Vec<SpectrumSample>)],
) -> Table {
    let mut t = Table::default();
    t.push("omega", grid.to_vec());
    for (stage, samples) in spectra {
        let col = samples
            .iter()
            .map(|s| match part {
                SpectrumPart::Im => s.value.im,
                SpectrumPart::Re => s.value.re,
                SpectrumPart::Abs => s.value.norm(),
            })
            .collect();
        t.push(format!("{}_{}", part.prefix(), stage.name()), col);
    }
    t
}

/// Rotor angle, its rate, generator speed and bus frequency deviation.
pub fn simulate(s: &Scenario, o: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ev = s.event()?;
    let mut files = Vec::new();
    for (model, x) in o.combinations(s) {
        let r = s.machine.reduced(model.into(), x.0, &ev)?;
        let traj = event_trajectory(&ev, &r, horizon(s, &r)?, s.run.dt)?;
        let omega = rotor_velocity(&traj.delta_dot, x.0, s.machine.omega_base)?;
        let df = bus_frequency_deviation(&traj.delta_dot, s.machine.poles, x.0)?;
        let table = Table::from_traces(
            &[
                ("delta", &traj.delta),
                ("delta_dot", &traj.delta_dot),
                ("omega_gen", &omega),
                ("delta_f", &df),
            ],
            s.output.stride,
        );
        files.push(write_table(&out.join(format!("simulate_{}.csv", case_tag(model, x))), &table)?);
    }
    Ok(files)
}

/// Named closed-form coefficients of the linear response.
pub fn linear_coefficient_rows(c: &CascadeCoefficients) -> Vec<(&'static str, f64)> {
    let (i, v1, v2, v3, v4, r, out) = (c.input, c.v1, c.v2, c.v3, c.pss, c.regulator, c.out);
    vec![
        ("a0", i.a0),
        ("b0", i.b0),
        ("v_inf", i.v_inf),
        ("lambda", i.lambda),
        ("omega0", i.omega0),
        ("a1", v1.a1),
        ("b1", v1.b1),
        ("c1", v1.c1),
        ("a2", v2.a2),
        ("b2", v2.b2),
        ("c2", v2.c2),
        ("d2", v2.d2),
        ("a3", v3.a3),
        ("b3", v3.b3),
        ("c3", v3.c3),
        ("d3", v3.d3),
        ("e3", v3.e3),
        ("a4", v4.a4),
        ("b4", v4.b4),
        ("c4", v4.c4),
        ("d4", v4.d4),
        ("e4", v4.e4),
        ("f4", v4.f4),
        ("a_r", r.a_r),
        ("b_r", r.b_r),
        ("c_r", r.c_r),
        ("d_r", r.d_r),
        ("e_r", r.e_r),
        ("f_r", r.f_r),
        ("s_r", r.s_r),
        ("a_out", out.a_out),
        ("b_out", out.b_out),
        ("c_out", out.c_out),
        ("d_out", out.d_out),
        ("e_out", out.e_out),
        ("f_out", out.f_out),
        ("g_out", out.g_out),
    ]
}

/// One linear case: template input, its coefficients and the sample count.
pub struct LinearCase {
    pub tag: String,
    pub coefficients: CascadeCoefficients,
    pub samples: usize,
}

pub fn linear_cases(s: &Scenario, o: &Overrides) -> Result<Vec<LinearCase>, CliError> {
    let ev = s.event()?;
    let kind: InputKind = s.rotor_input()?;
    let pss = s.stabilizer()?;
    let (d_i, d_ii) = (ev.delta_initial, ev.delta_final());
    if (d_i - d_ii).abs() > LINEAR_DEVIATION_LIMIT {
        eprintln!(
            "warning: angle step {} exceeds pi/20; the linear template may be inaccurate",
            (d_i - d_ii).abs()
        );
    }
    o.combinations(s)
        .into_iter()
        .map(|(model, x)| {
            let r = s.machine.reduced(model.into(), x.0, &ev)?;
            let input = linear_input(kind, &r, d_i, d_ii)?;
            Ok(LinearCase {
                tag: case_tag(model, x),
                coefficients: cascade_linear(&input, &pss)?,
                samples: sample_count(horizon(s, &r)?, s.run.dt),
            })
        })
        .collect()
}

/// Closed-form coefficients, stage traces and spectra of the small-step
/// response.
pub fn linear(s: &Scenario, o: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let stages = o.stages(s)?;
    let grid = s.run.omega_grid.values("run.omega_grid")?;
    let mut files = Vec::new();
    for case in linear_cases(s, o)? {
        let c = &case.coefficients;
        let rows: Vec<Vec<String>> = linear_coefficient_rows(c)
            .into_iter()
            .map(|(n, v)| vec![n.to_string(), format_float(v)])
            .collect();
        files.push(write_records(
            &out.join(format!("linear_{}_coefficients.csv", case.tag)),
            &["name", "value"],
            &rows,
        )?);
        let traces = stages
            .iter()
            .map(|&st| c.stage_sum(st).sample(s.run.dt, case.samples))
            .collect::<pss_core::Result<Vec<_>>>()?;
        let named: Vec<(&str, &_)> = stages.iter().map(|s| s.name()).zip(&traces).collect();
        files.push(write_table(
            &out.join(format!("linear_{}_traces.csv", case.tag)),
            &Table::from_traces(&named, s.output.stride),
        )?);
        let spectra = stages
            .iter()
            .map(|&st| Ok((st, spectrum_closed_form(c, st, &grid)?)))
            .collect::<pss_core::Result<Vec<_>>>()?;
        files.push(write_table(
            &out.join(format!("linear_{}_spectrum.csv", case.tag)),
            &spectrum_table(s.output.spectrum, &grid, &spectra),
        )?);
    }
    Ok(files)
}

pub fn nonlinear_cases(
    s: &Scenario,
    o: &Overrides,
) -> Result<Vec<(String, NonlinearResponse)>, CliError> {
    let ev = s.event()?;
    let kind = s.rotor_input()?;
    let pss = s.stabilizer()?;
    o.combinations(s)
        .into_iter()
        .map(|(model, x)| {
            let r = s.machine.reduced(model.into(), x.0, &ev)?;
            let resp = nonlinear_response(&ev, &r, kind, &pss, horizon(s, &r)?, s.run.dt)?;
            Ok((case_tag(model, x), resp))
        })
        .collect()
}

/// Modal decomposition of the integrated input and the closed-form stage
/// signals built from it.
pub fn nonlinear(s: &Scenario, o: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let stages = o.stages(s)?;
    let grid = s.run.omega_grid.values("run.omega_grid")?;
    let mut files = Vec::new();
    for (tag, resp) in nonlinear_cases(s, o)? {
        // the input column is the integrated signal; the rest are closed forms
        let traces = stages
            .iter()
            .map(|&st| match st {
                Stage::Input => Ok(&resp.input),
                _ => resp.closed_form.get(st),
            })
            .collect::<pss_core::Result<Vec<_>>>()?;
        let named: Vec<(&str, &_)> = stages.iter().map(|s| s.name()).zip(traces).collect();
        files.push(write_table(
            &out.join(format!("nonlinear_{tag}_traces.csv")),
            &Table::from_traces(&named, s.output.stride),
        )?);

        let spectra = stages
            .iter()
            .map(|&st| Ok((st, spectrum_closed_form(&resp.coefficients, st, &grid)?)))
            .collect::<pss_core::Result<Vec<_>>>()?;
        files.push(write_table(
            &out.join(format!("nonlinear_{tag}_spectrum.csv")),
            &spectrum_table(s.output.spectrum, &grid, &spectra),
        )?);

        let modes = &resp.fit.modes.modes;
        let mut t = Table::default();
        t.push("amplitude_re", modes.iter().map(|m| m.amplitude.re).collect());
        t.push("amplitude_im", modes.iter().map(|m| m.amplitude.im).collect());
        t.push("eigenvalue_re", modes.iter().map(|m| m.eigenvalue.re).collect());
        t.push("eigenvalue_im", modes.iter().map(|m| m.eigenvalue.im).collect());
        files.push(write_table(&out.join(format!("nonlinear_{tag}_modes.csv")), &t)?);

        let rows = vec![
            vec!["order".to_string(), resp.fit.order.to_string()],
            vec!["fit_error".to_string(), format_float(resp.fit.fit_error)],
            vec!["dc_offset".to_string(), format_float(resp.fit.modes.dc_offset)],
        ];
        files.push(write_records(
            &out.join(format!("nonlinear_{tag}_summary.csv")),
            &["name", "value"],
            &rows,
        )?);
    }
    Ok(files)
}

fn envelope_horizon(s: &Scenario, duration: f64) -> f64 {
    // long enough for the slowest stabilizer pole to settle after the pulse
    s.run.horizon.unwrap_or(duration + 60.0)
}

/// Response to the pulse-shaped input: simulated stage traces and the
/// closed-form spectra `H(i omega) V_in(i omega)`.
pub fn envelope(s: &Scenario, o: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let input = s.envelope_input()?;
    let pss = s.stabilizer()?;
    let stages = o.stages(s)?;
    let grid = s.run.omega_grid.values("run.omega_grid")?;
    let resp = envelope_response(
        &input,
        &pss,
        envelope_horizon(s, input.duration()),
        s.run.dt,
        &grid,
    )?;
    let traces = stages
        .iter()
        .map(|&st| resp.traces.get(st))
        .collect::<pss_core::Result<Vec<_>>>()?;
    let named: Vec<(&str, &_)> = stages.iter().map(|s| s.name()).zip(traces).collect();
    let spectra: Vec<(Stage, Vec<SpectrumSample>)> = stages
        .iter()
        .map(|st| (*st, resp.predicted[st].clone()))
        .collect();
    Ok(vec![
        write_table(
            &out.join("envelope_traces.csv"),
            &Table::from_traces(&named, s.output.stride),
        )?,
        write_table(
            &out.join("envelope_spectrum.csv"),
            &spectrum_table(s.output.spectrum, &grid, &spectra),
        )?,
    ])
}

fn bode_table(samples: &[BodeSample]) -> Table {
    let mut t = Table::default();
    t.push("omega", samples.iter().map(|b| b.omega).collect());
    t.push("mag_db", samples.iter().map(|b| b.magnitude_db).collect());
    t.push("phase_deg", samples.iter().map(|b| b.phase_deg).collect());
    t
}

/// Frequency responses of the stabilizer, the regulator and both in series.
pub fn bode_files(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let pss = s.stabilizer()?;
    let grid = s.run.bode_grid.values("run.bode_grid")?;
    [
        ("bode_pss.csv", BlockCascade::pss1a(&pss)?),
        ("bode_avr.csv", BlockCascade::avr(&pss)?),
        ("bode_cascade.csv", BlockCascade::full(&pss)?),
    ]
    .into_iter()
    .map(|(name, c)| write_table(&out.join(name), &bode_table(&bode(&c, &grid)?)))
    .collect()
}

/// One line of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub case: String,
    pub check: String,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

fn without_input(stages: Vec<Stage>) -> Vec<Stage> {
    stages.into_iter().filter(|&s| s != Stage::Input).collect()
}

/// Closed form against the time-domain oracle for every case of `s`.
pub fn validation_checks(s: &Scenario, o: &Overrides) -> Result<Vec<Check>, CliError> {
    let stages = without_input(o.stages(s)?);
    if stages.is_empty() {
        return Err(CliError::config("output.stages: nothing to validate besides v_in"));
    }
    let mut checks = Vec::new();
    if s.input_kind == InputKindName::Envelope {
        let input = s.envelope_input()?;
        let grid = s.run.omega_grid.values("run.omega_grid")?;
        let resp = envelope_response(
            &input,
            &s.stabilizer()?,
            envelope_horizon(s, input.duration()),
            s.run.dt,
            &grid,
        )?;
        for st in stages {
            checks.push(Check {
                case: "envelope".into(),
                check: format!("spectrum_{}", st.name()),
                error: relative_spectrum_error(&resp.spectra[&st], &resp.predicted[&st])?,
                tolerance: o.tolerance.unwrap_or(ENVELOPE_TOLERANCE),
            });
        }
        return Ok(checks);
    }
    match s.response {
        ResponseKind::Linear => {
            let cascade = BlockCascade::full(&s.stabilizer()?)?;
            for case in linear_cases(s, o)? {
                let c = &case.coefficients;
                let input = c.input.sample(s.run.dt, case.samples)?;
                let oracle = simulate_cascade(&cascade, &input, c.input.initial_value())?;
                for &st in &stages {
                    let closed = c.stage_sum(st).sample(s.run.dt, case.samples)?;
                    checks.push(Check {
                        case: case.tag.clone(),
                        check: format!("oracle_{}", st.name()),
                        error: oracle.get(st)?.relative_linf_error(&closed)?,
                        tolerance: o.tolerance.unwrap_or(LINEAR_TOLERANCE),
                    });
                }
            }
        }
        ResponseKind::Nonlinear => {
            for (tag, resp) in nonlinear_cases(s, o)? {
                let tol = o
                    .tolerance
                    .unwrap_or(NONLINEAR_TOLERANCE_FLOOR.max(3.0 * resp.fit.fit_error));
                checks.push(Check {
                    case: tag.clone(),
                    check: "fit_error".into(),
                    error: resp.fit.fit_error,
                    tolerance: PencilOptions::default().fit_target,
                });
                checks.push(Check {
                    case: tag.clone(),
                    check: "oracle_measured_input".into(),
                    error: resp.oracle_error(&resp.oracle, &stages)?,
                    tolerance: tol,
                });
                checks.push(Check {
                    case: tag,
                    check: "oracle_reconstructed_input".into(),
                    error: resp.oracle_error(&resp.oracle_reconstructed, &stages)?,
                    tolerance: tol,
                });
            }
        }
    }
    Ok(checks)
}

/// Writes the validation report and prints it; fails when any check fails.
pub fn validate(s: &Scenario, o: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if let Some(t) = o.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::config(format!("--tolerance: must be positive, got {t}")));
        }
    }
    let checks = validation_checks(s, o)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.case.clone(),
                c.check.clone(),
                format_float(c.error),
                format_float(c.tolerance),
                if c.passed() { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    for c in &checks {
        println!(
            "{:<7} {} {}: error {:.3e}, tolerance {:.3e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.case,
            c.check,
            c.error,
            c.tolerance
        );
    }
    let file = write_records(
        &out.join("validate_report.csv"),
        &["case", "check", "error", "tolerance", "result"],
        &rows,
    )?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::numerical(format!(
            "{failed} of {} checks exceed their tolerance (report in {})",
            checks.len(),
            file.display()
        )));
    }
    Ok(vec![file])
}
