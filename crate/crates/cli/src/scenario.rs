//! Scenario documents: one JSON file per figure or experiment.

use std::fmt;
use std::path::Path;

use pss_core::blocks::{log_grid, Stage, StabilizerParams};
use pss_core::dynamics::{
    reduce_params, CouplingModel, GridInertia, InertiaRatio, MachineParams, ReducedParams,
    TransientEvent, DEFAULT_OMEGA_BASE,
};
use pss_core::envelope::EnvelopeInput;
use pss_core::linear::InputKind;
use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub machine: MachineSpec,
    #[serde(default = "default_model")]
    pub model: ModelName,
    #[serde(default)]
    pub event: Option<EventSpec>,
    #[serde(default)]
    pub stabilizer: StabilizerSpec,
    #[serde(default = "default_input_kind")]
    pub input_kind: InputKindName,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpec>,
    /// Which closed form `validate` checks.
    #[serde(default)]
    pub response: ResponseKind,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_model() -> ModelName {
    ModelName::Cage
}

fn default_input_kind() -> InputKindName {
    InputKindName::Speed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Cage,
    Kuramoto,
}

impl From<ModelName> for CouplingModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Cage => CouplingModel::Cage,
            ModelName::Kuramoto => CouplingModel::Kuramoto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKindName {
    Speed,
    Frequency,
    Power,
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    Linear,
    #[default]
    Nonlinear,
}

/// Grid inertia ratio written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XValue(pub InertiaRatio);

impl XValue {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(XValue(InertiaRatio::Infinite));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| CliError::config(format!("x: expected a number or `inf`, got `{s}`")))?;
        Ok(XValue(InertiaRatio::new(v)?))
    }
}

impl fmt::Display for XValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for XValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => InertiaRatio::new(v).map(XValue).map_err(de::Error::custom),
            Raw::Text(s) => XValue::parse(&s).map_err(de::Error::custom),
        }
    }
}

/// Two-body constants. Torques and the air-gap coupling are not listed: they
/// follow from the event.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    #[serde(default = "one")]
    pub j_gen: f64,
    /// Grid-to-generator inertia ratio; `J_grid = x J_gen`.
    #[serde(default = "infinite")]
    pub x: XValue,
    #[serde(default)]
    pub k_d: Option<f64>,
    #[serde(default)]
    pub k_gen_kuramoto: Option<f64>,
    #[serde(default)]
    pub k_grid_kuramoto: Option<f64>,
    /// Combined damping of the relative-angle equation, held fixed for every
    /// inertia ratio. Excludes the per-body coefficients.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_omega_base")]
    pub omega_base: f64,
    #[serde(default = "default_poles")]
    pub poles: u32,
    #[serde(default = "one")]
    pub p_max: f64,
}

fn one() -> f64 {
    1.0
}

fn infinite() -> XValue {
    XValue(InertiaRatio::Infinite)
}

fn default_omega_base() -> f64 {
    DEFAULT_OMEGA_BASE
}

fn default_poles() -> u32 {
    2
}

impl Default for MachineSpec {
    fn default() -> Self {
        Self {
            j_gen: 1.0,
            x: infinite(),
            k_d: None,
            k_gen_kuramoto: None,
            k_grid_kuramoto: None,
            beta: None,
            omega_base: DEFAULT_OMEGA_BASE,
            poles: 2,
            p_max: 1.0,
        }
    }
}

impl MachineSpec {
    fn has_per_body_damping(&self) -> bool {
        self.k_d.is_some() || self.k_gen_kuramoto.is_some() || self.k_grid_kuramoto.is_some()
    }

    /// Machine with inertia ratio `x` whose air-gap torque gives the reduced
    /// coupling `xi`.
    pub fn machine(&self, x: InertiaRatio, xi: f64) -> MachineParams {
        let j_grid = match x {
            InertiaRatio::Finite(x) => GridInertia::Finite(x * self.j_gen),
            InertiaRatio::Infinite => GridInertia::Infinite,
        };
        MachineParams {
            j_gen: self.j_gen,
            j_grid,
            k_d: self.k_d,
            k_gen_kuramoto: self.k_gen_kuramoto,
            k_grid_kuramoto: self.k_grid_kuramoto,
            tau_elmax: xi * self.j_gen / x.coupling_factor(),
            tau_gen: 0.0,
            tau_grid: 0.0,
            omega_base: self.omega_base,
            poles: self.poles,
            p_max: self.p_max,
        }
    }

    /// Reduced coefficients after `event` for `model` at inertia ratio `x`.
    pub fn reduced(
        &self,
        model: CouplingModel,
        x: InertiaRatio,
        event: &TransientEvent,
    ) -> Result<ReducedParams, CliError> {
        let tau_r = event.tau_r();
        match self.beta {
            Some(_) if self.has_per_body_damping() => Err(CliError::config(
                "machine.beta: combined damping excludes k_d, k_gen_kuramoto and k_grid_kuramoto",
            )),
            Some(beta) => Ok(ReducedParams::with_generator_damping(
                model,
                beta / x.coupling_factor(),
                event.xi_final,
                tau_r,
                x,
            )?),
            None => {
                let r = reduce_params(&self.machine(x, event.xi_final), model)?;
                Ok(ReducedParams { tau_r, ..r })
            }
        }
    }
}

/// Coupling step. Either `xi_initial` or `delta_deviation` fixes the
/// pre-event state; with `delta_deviation` the post-event angle is
/// `delta_initial - delta_deviation`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub xi_final: f64,
    pub delta_initial: f64,
    #[serde(default)]
    pub xi_initial: Option<f64>,
    #[serde(default)]
    pub delta_deviation: Option<f64>,
}

impl EventSpec {
    pub fn event(&self) -> Result<TransientEvent, CliError> {
        match (self.xi_initial, self.delta_deviation) {
            (Some(xi_i), None) => Ok(TransientEvent::new(xi_i, self.xi_final, self.delta_initial)?),
            (None, Some(dd)) => Ok(TransientEvent::from_angles(
                self.xi_final,
                self.delta_initial,
                self.delta_initial - dd,
            )?),
            _ => Err(CliError::config(
                "event: give exactly one of `xi_initial` and `delta_deviation`",
            )),
        }
    }
}

/// PSS1A and AVR constants; omitted fields keep their table values.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizerSpec {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub t4: Option<f64>,
    pub t5: Option<f64>,
    pub t6: Option<f64>,
    pub k_s: Option<f64>,
    pub t_n: Option<f64>,
    pub t_s: Option<f64>,
    pub k_pr: Option<f64>,
    pub k_ps: Option<f64>,
}

impl StabilizerSpec {
    pub fn params(&self) -> Result<StabilizerParams, CliError> {
        let d = StabilizerParams::default();
        let p = StabilizerParams {
            t1: self.t1.unwrap_or(d.t1),
            t2: self.t2.unwrap_or(d.t2),
            t3: self.t3.unwrap_or(d.t3),
            t4: self.t4.unwrap_or(d.t4),
            t5: self.t5.unwrap_or(d.t5),
            t6: self.t6.unwrap_or(d.t6),
            k_s: self.k_s.unwrap_or(d.k_s),
            t_n: self.t_n.unwrap_or(d.t_n),
            t_s: self.t_s.unwrap_or(d.t_s),
            k_pr: self.k_pr.unwrap_or(d.k_pr),
            k_ps: self.k_ps.unwrap_or(d.k_ps),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub amplitude: f64,
    pub omega_e: f64,
    pub omega0: f64,
}

impl EnvelopeSpec {
    pub fn input(&self) -> Result<EnvelopeInput, CliError> {
        Ok(EnvelopeInput::new(self.amplitude, self.omega_e, self.omega0)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub models: Option<Vec<ModelName>>,
    #[serde(default)]
    pub x_values: Option<Vec<XValue>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.n < 2 {
            return Err(CliError::config(format!(
                "{field}: need finite lo < hi and n >= 2"
            )));
        }
        match self.spacing {
            Spacing::Log => Ok(log_grid(self.lo, self.hi, self.n)?),
            Spacing::Linear => {
                let step = (self.hi - self.lo) / (self.n - 1) as f64;
                Ok((0..self.n).map(|k| self.lo + step * k as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Seconds; defaults depend on the command.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_spectrum_grid")]
    pub omega_grid: GridSpec,
    #[serde(default = "default_bode_grid")]
    pub bode_grid: GridSpec,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_spectrum_grid() -> GridSpec {
    GridSpec {
        lo: 0.01,
        hi: 10.0,
        n: 1000,
        spacing: Spacing::Linear,
    }
}

fn default_bode_grid() -> GridSpec {
    GridSpec {
        lo: 1e-3,
        hi: 1e3,
        n: 400,
        spacing: Spacing::Log,
    }
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            horizon: None,
            dt: default_dt(),
            omega_grid: default_spectrum_grid(),
            bode_grid: default_bode_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumPart {
    Im,
    Re,
    Abs,
}

impl SpectrumPart {
    pub fn prefix(self) -> &'static str {
        match self {
            SpectrumPart::Im => "im",
            SpectrumPart::Re => "re",
            SpectrumPart::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_stages")]
    pub stages: Vec<String>,
    #[serde(default = "default_part")]
    pub spectrum: SpectrumPart,
    /// Write every `stride`-th time sample.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stages() -> Vec<String> {
    vec!["v_in".into(), "v_pss".into(), "v_out".into()]
}

fn default_part() -> SpectrumPart {
    SpectrumPart::Im
}

fn default_stride() -> usize {
    1
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            stages: default_stages(),
            spectrum: default_part(),
            stride: 1,
        }
    }
}

pub fn parse_stages(names: &[String]) -> Result<Vec<Stage>, CliError> {
    if names.is_empty() {
        return Err(CliError::config("output.stages: list is empty"));
    }
    names
        .iter()
        .map(|n| {
            n.trim()
                .parse::<Stage>()
                .map_err(|_| CliError::config(format!("output.stages: unknown stage `{n}`")))
        })
        .collect()
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        match (self.input_kind, self.envelope.is_some()) {
            (InputKindName::Envelope, false) => {
                return Err(CliError::config("envelope: required when input_kind is `envelope`"))
            }
            (k, true) if k != InputKindName::Envelope => {
                return Err(CliError::config(
                    "envelope: only allowed when input_kind is `envelope`",
                ))
            }
            _ => {}
        }
        if self.output.stride == 0 {
            return Err(CliError::config("output.stride: must be at least 1"));
        }
        if !(self.run.dt.is_finite() && self.run.dt > 0.0) {
            return Err(CliError::config("run.dt: must be positive"));
        }
        if let Some(h) = self.run.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(CliError::config("run.horizon: must be positive"));
            }
        }
        parse_stages(&self.output.stages)?;
        Ok(())
    }

    pub fn event(&self) -> Result<TransientEvent, CliError> {
        self.event
            .as_ref()
            .ok_or_else(|| CliError::config("event: required by this command"))?
            .event()
    }

    pub fn stabilizer(&self) -> Result<StabilizerParams, CliError> {
        self.stabilizer.params()
    }

    /// The rotor input kind, or an error for envelope scenarios.
    pub fn rotor_input(&self) -> Result<InputKind, CliError> {
        let machine = self.machine.machine(InertiaRatio::Infinite, 1.0);
        let name = match self.input_kind {
            InputKindName::Speed => "speed",
            InputKindName::Frequency => "frequency",
            InputKindName::Power => "power",
            InputKindName::Envelope => {
                return Err(CliError::config(
                    "input_kind: `envelope` has no rotor dynamics; use the envelope command",
                ))
            }
        };
        Ok(InputKind::from_name(name, &machine)?)
    }

    pub fn envelope_input(&self) -> Result<EnvelopeInput, CliError> {
        self.envelope
            .as_ref()
            .ok_or_else(|| CliError::config("envelope: required by this command"))?
            .input()
    }

    pub fn stages(&self) -> Result<Vec<Stage>, CliError> {
        parse_stages(&self.output.stages)
    }

    /// Model and inertia-ratio combinations, in sweep order.
    pub fn combinations(
        &self,
        models: Option<&[ModelName]>,
        x_values: Option<&[XValue]>,
    ) -> Vec<(ModelName, XValue)> {
        let sweep = self.sweep.as_ref();
        let models: Vec<ModelName> = models
            .map(<[_]>::to_vec)
            .or_else(|| sweep.and_then(|s| s.models.clone()))
            .unwrap_or_else(|| vec![self.model]);
        let xs: Vec<XValue> = x_values
            .map(<[_]>::to_vec)
            .or_else(|| sweep.and_then(|s| s.x_values.clone()))
            .unwrap_or_else(|| vec![self.machine.x]);
        models
            .iter()
            .flat_map(|&m| xs.iter().map(move |&x| (m, x)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::from_json(r#"{"event": {"xi_final": 1, "delta_initial": 0.5, "xi_initial": 1}, "bogus": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = Scenario::from_json(r#"{"machine": {"J_gen": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("J_gen"), "{err}");
    }

    #[test]
    fn envelope_presence_follows_input_kind() {
        assert!(Scenario::from_json(r#"{"input_kind": "envelope"}"#).is_err());
        assert!(Scenario::from_json(
            r#"{"input_kind": "speed", "envelope": {"amplitude": 1, "omega_e": 0.3, "omega0": 5.2}}"#
        )
        .is_err());
        let s = Scenario::from_json(
            r#"{"input_kind": "envelope", "envelope": {"amplitude": 1, "omega_e": 0.3, "omega0": 5.2}}"#,
        )
        .unwrap();
        assert_eq!(s.envelope_input().unwrap().omega_e, 0.3);
    }

    #[test]
    fn event_needs_exactly_one_pre_event_field() {
        let e = EventSpec {
            xi_final: 1.0,
            delta_initial: 0.5,
            xi_initial: Some(1.0),
            delta_deviation: Some(0.1),
        };
        assert!(e.event().is_err());
        let e = EventSpec {
            xi_initial: None,
            ..e
        };
        let ev = e.event().unwrap();
        assert!((ev.delta_final() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn combined_damping_is_kept_for_every_ratio() {
        let spec = MachineSpec {
            beta: Some(0.3),
            ..MachineSpec::default()
        };
        let ev = TransientEvent::new(1.0, 5.0, 1.0).unwrap();
        for x in [0.5, 1.0, 5.0] {
            let r = spec
                .reduced(CouplingModel::Cage, InertiaRatio::Finite(x), &ev)
                .unwrap();
            assert!((r.beta - 0.3).abs() < 1e-15);
            assert!((r.xi - 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn per_body_damping_scales_with_ratio() {
        let spec = MachineSpec {
            k_d: Some(0.3),
            ..MachineSpec::default()
        };
        let ev = TransientEvent::new(1.0, 5.0, 1.0).unwrap();
        let r = spec
            .reduced(CouplingModel::Cage, InertiaRatio::Finite(1.0), &ev)
            .unwrap();
        assert!((r.beta - 0.6).abs() < 1e-15);
        assert!((r.xi - 5.0).abs() < 1e-14);
        assert_eq!(r.tau_r, ev.tau_r());
        let mixed = MachineSpec {
            beta: Some(0.3),
            ..spec
        };
        assert!(mixed
            .reduced(CouplingModel::Cage, InertiaRatio::Infinite, &ev)
            .is_err());
    }

    #[test]
    fn x_values_parse() {
        assert_eq!(XValue::parse("inf").unwrap().0, InertiaRatio::Infinite);
        assert_eq!(XValue::parse(" 5 ").unwrap().0, InertiaRatio::Finite(5.0));
        assert!(XValue::parse("-1").is_err());
        assert!(XValue::parse("many").is_err());
    }
}
