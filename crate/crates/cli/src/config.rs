//! Experiment configuration: one TOML file with a section per concern. Every
//! section is optional; omitted keys take the defaults documented on each field.

use serde::Deserialize;

use piezoleg_core::dynamics::SimConfig;
use piezoleg_core::gait::{validate_gait, GaitName, GaitProgram, LegPhases};
use piezoleg_core::scaling::{AllometricTransform, StiffnessComposition};
use piezoleg_core::{presets, RobotSpec};

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub robot: RobotSection,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub gait: GaitSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub payload: PayloadSection,
    #[serde(default)]
    pub sense: SenseSection,
    #[serde(default)]
    pub characterize: CharacterizeSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either a named preset or a full inline robot description (`[robot.spec]`).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub preset: Option<String>,
    pub spec: Option<RobotSpec<f64>>,
    pub friction_coefficient: Option<f64>,
    pub payload_g: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    #[serde(default = "half")]
    pub s_length: f64,
    #[serde(default = "half")]
    pub s_width: f64,
    #[serde(default = "one")]
    pub s_thickness: f64,
    #[serde(default)]
    pub scale_flexure_length: bool,
    #[serde(default)]
    pub stiffness_composition: StiffnessComposition,
}

impl Default for TransformSection {
    fn default() -> Self {
        Self { s_length: 0.5, s_width: 0.5, s_thickness: 1.0, scale_flexure_length: false, stiffness_composition: StiffnessComposition::default() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSection {
    #[serde(default = "trot")]
    pub gait: GaitName,
    #[serde(default = "f160")]
    pub frequency_hz: f64,
    #[serde(default = "rated")]
    pub voltage_v: f64,
    #[serde(default = "quarter")]
    pub lift_swing_phase_lead: f64,
    /// Required for `gait = "custom"`, overrides the table otherwise.
    pub phases: Option<LegPhases<f64>>,
}

impl Default for GaitSection {
    fn default() -> Self {
        Self { gait: GaitName::Trot, frequency_hz: 160.0, voltage_v: 200.0, lift_swing_phase_lead: 0.25, phases: None }
    }
}

/// Overrides on the standard protocol (0.25 s settle, 20 cycles, at most 3 s).
/// Setting `duration_s` without `measure_cycles` switches to a fixed duration.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub timestep_s: Option<f64>,
    pub duration_s: Option<f64>,
    pub gravity_m_s2: Option<f64>,
    pub initial_height_mm: Option<f64>,
    pub settle_s: Option<f64>,
    pub measure_cycles: Option<u32>,
    pub measure_max_s: Option<f64>,
    pub record_every: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "sweep_gaits")]
    pub gaits: Vec<GaitName>,
    #[serde(default = "sweep_frequencies")]
    pub frequencies_hz: Vec<f64>,
    #[serde(default = "five")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "jitter")]
    pub height_jitter_mm: f64,
    /// Defaults to `[gait] voltage_v`.
    pub voltage_v: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gaits: sweep_gaits(),
            frequencies_hz: sweep_frequencies(),
            repetitions: 5,
            seed: 0,
            height_jitter_mm: jitter(),
            voltage_v: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadSection {
    #[serde(default = "trot")]
    pub gait: GaitName,
    #[serde(default = "f10")]
    pub frequency_hz: f64,
    /// Absolute payloads; when absent, `body_mass_multiples` of the body mass.
    pub payloads_g: Option<Vec<f64>>,
    #[serde(default = "multiples")]
    pub body_mass_multiples: Vec<f64>,
}

impl Default for PayloadSection {
    fn default() -> Self {
        Self { gait: GaitName::Trot, frequency_hz: 10.0, payloads_g: None, body_mass_multiples: multiples() }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseSection {
    /// Leaky-integrator corner; defaults to a sixteenth of the drive frequency.
    pub corner_hz: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterizeSection {
    #[serde(default = "f1")]
    pub f_lo_hz: f64,
    #[serde(default = "f500")]
    pub f_hi_hz: f64,
    #[serde(default = "n500")]
    pub points: usize,
    #[serde(default = "v40")]
    pub drive_voltage_v: f64,
    #[serde(default = "n51")]
    pub stiffness_samples: usize,
}

impl Default for CharacterizeSection {
    fn default() -> Self {
        Self { f_lo_hz: 1.0, f_hi_hz: 500.0, points: 500, drive_voltage_v: 40.0, stiffness_samples: 51 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "out_dir")]
    pub dir: String,
    #[serde(default)]
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: out_dir(), plots: false }
    }
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn quarter() -> f64 {
    0.25
}
fn trot() -> GaitName {
    GaitName::Trot
}
fn f1() -> f64 {
    1.0
}
fn f10() -> f64 {
    10.0
}
fn f160() -> f64 {
    160.0
}
fn f500() -> f64 {
    500.0
}
fn v40() -> f64 {
    40.0
}
fn rated() -> f64 {
    presets::RATED_VOLTAGE_V
}
fn five() -> usize {
    5
}
fn n51() -> usize {
    51
}
fn n500() -> usize {
    500
}
fn jitter() -> f64 {
    0.05
}
fn sweep_gaits() -> Vec<GaitName> {
    vec![GaitName::Trot, GaitName::Pronk]
}
fn sweep_frequencies() -> Vec<f64> {
    presets::SWEEP_FREQUENCIES_HZ.to_vec()
}
fn multiples() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0, 4.0]
}
fn out_dir() -> String {
    "out".into()
}

/// Name of the `[section]` whose body contains byte `offset`.
fn section_at(text: &str, offset: usize) -> Option<String> {
    let head = &text[..offset.min(text.len())];
    head.lines().rev().find_map(|l| {
        let t = l.trim();
        (t.starts_with('[') && t.ends_with(']')).then(|| t.trim_matches(|c| c == '[' || c == ']').trim().to_string())
    })
}

fn section_error(section: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("[{section}] {e}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let section = e.span().and_then(|s| section_at(text, s.start)).unwrap_or_else(|| "top level".into());
            CliError::Config(format!("{origin}: in section [{section}]: {e}"))
        })
    }

    /// The configured robot; `fallback` names the preset used when neither the
    /// command line nor the `[robot]` section picks one.
    pub fn robot(&self, preset_override: Option<&str>, fallback: &str) -> Result<RobotSpec<f64>, CliError> {
        let r = &self.robot;
        let named = |name: &str| presets::preset(name).map_err(|e| section_error("robot", format!("preset: {e}")));
        let mut robot = match (preset_override, &r.preset, &r.spec) {
            (Some(name), _, _) => named(name)?,
            (None, Some(_), Some(_)) => return Err(section_error("robot", "set either `preset` or `spec`, not both")),
            (None, Some(name), None) => named(name)?,
            (None, None, Some(spec)) => spec.clone(),
            (None, None, None) => named(fallback)?,
        };
        if let Some(mu) = r.friction_coefficient {
            robot.friction_coefficient = mu;
        }
        if let Some(p) = r.payload_g {
            robot.payload_g = p;
        }
        robot.validate().map_err(|e| section_error("robot", e))?;
        Ok(robot)
    }

    pub fn transform(&self) -> Result<AllometricTransform<f64>, CliError> {
        let t = &self.transform;
        AllometricTransform::new(t.s_length, t.s_width, t.s_thickness)
            .map(|x| x.with_flexure_length_scaling(t.scale_flexure_length))
            .map_err(|e| section_error("transform", e))
    }

    pub fn program_for(&self, gait: GaitName, frequency_hz: f64, voltage_v: f64, rated_v: f64) -> Result<GaitProgram<f64>, CliError> {
        let g = &self.gait;
        let mut p = match (gait, g.phases) {
            (GaitName::Custom, Some(ph)) => GaitProgram::custom(ph, frequency_hz, voltage_v),
            (GaitName::Custom, None) => return Err(section_error("gait", "phases: required for gait = \"custom\"")),
            (name, phases) => {
                let mut p = GaitProgram::new(name, frequency_hz, voltage_v).map_err(|e| section_error("gait", e))?;
                if let Some(ph) = phases {
                    p.phases = ph;
                }
                p
            }
        };
        p.lift_swing_phase_lead = g.lift_swing_phase_lead;
        if let Err(v) = validate_gait(&p, rated_v) {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            return Err(section_error("gait", msgs.join("; ")));
        }
        Ok(p)
    }

    pub fn program(&self, rated_v: f64) -> Result<GaitProgram<f64>, CliError> {
        self.program_for(self.gait.gait, self.gait.frequency_hz, self.gait.voltage_v, rated_v)
    }

    pub fn sim(&self) -> Result<SimConfig<f64>, CliError> {
        let s = &self.sim;
        let mut cfg = presets::experiment_config::<f64>();
        if let Some(d) = s.duration_s {
            cfg.duration_s = d;
            cfg.measure_cycles = None;
            cfg.measure_max_s = None;
        }
        if let Some(n) = s.measure_cycles {
            cfg.measure_cycles = Some(n);
        }
        if s.measure_max_s.is_some() {
            cfg.measure_max_s = s.measure_max_s;
        }
        cfg.timestep_s = s.timestep_s;
        cfg.record_every = s.record_every;
        cfg.initial_height_mm = s.initial_height_mm;
        if let Some(g) = s.gravity_m_s2 {
            cfg.gravity_m_s2 = g;
        }
        if let Some(t) = s.settle_s {
            cfg.settle_s = t;
        }
        cfg.validate().map_err(|e| section_error("sim", e))?;
        Ok(cfg)
    }

    pub fn check_sweep(&self) -> Result<(), CliError> {
        let s = &self.sweep;
        if s.gaits.is_empty() {
            return Err(section_error("sweep", "gaits: must not be empty"));
        }
        if s.frequencies_hz.is_empty() {
            return Err(section_error("sweep", "frequencies_hz: must not be empty"));
        }
        if let Some(f) = s.frequencies_hz.iter().find(|f| !(**f > 0.0)) {
            return Err(section_error("sweep", format!("frequencies_hz: must be positive, got {f}")));
        }
        if s.repetitions == 0 {
            return Err(section_error("sweep", "repetitions: must be at least 1"));
        }
        if !(s.height_jitter_mm >= 0.0) {
            return Err(section_error("sweep", "height_jitter_mm: must be non-negative"));
        }
        Ok(())
    }

    pub fn payloads_g(&self, robot: &RobotSpec<f64>) -> Result<Vec<f64>, CliError> {
        let p = &self.payload;
        let list = match &p.payloads_g {
            Some(v) => v.clone(),
            None => p.body_mass_multiples.iter().map(|m| m * robot.body.body_mass_g).collect(),
        };
        if list.is_empty() {
            return Err(section_error("payload", "payloads_g: must not be empty"));
        }
        if let Some(x) = list.iter().find(|x| !(**x >= 0.0)) {
            return Err(section_error("payload", format!("payloads_g: must be non-negative, got {x}")));
        }
        Ok(list)
    }
}

/// A robot as a `[robot.spec]` config fragment.
pub fn robot_fragment(spec: &RobotSpec<f64>) -> Result<String, CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    let mut robot = toml::Table::new();
    robot.insert("spec".into(), toml::Value::try_from(spec).map_err(|e| err(&e))?);
    let mut root = toml::Table::new();
    root.insert("robot".into(), toml::Value::Table(robot));
    toml::to_string(&root).map_err(|e| err(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::parse("", "test").unwrap();
        assert_eq!(c.robot(None, "hamr-jr").unwrap().name, "hamr-jr");
        assert_eq!(c.sweep.frequencies_hz.len(), 11);
        assert_eq!(c.transform().unwrap().s_length, 0.5);
        assert_eq!(c.sim().unwrap().measure_cycles, Some(20));
    }

    #[test]
    fn unknown_key_names_section_and_key() {
        let err = ExperimentConfig::parse("[gait]\nfrequency_hz = 10\n\n[sim]\ntimestep = 1e-6\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[sim]"), "{msg}");
        assert!(msg.contains("timestep"), "{msg}");
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn validation_errors_name_the_section() {
        let c = ExperimentConfig::parse("[robot]\npreset = \"hamr-xl\"\n", "t").unwrap();
        assert!(c.robot(None, "hamr-jr").unwrap_err().to_string().contains("[robot] preset"));
        let c = ExperimentConfig::parse("[sim]\nsettle_s = -1.0\n", "t").unwrap();
        assert!(c.sim().unwrap_err().to_string().contains("[sim]"));
        let c = ExperimentConfig::parse("[gait]\ngait = \"custom\"\n", "t").unwrap();
        assert!(c.program(200.0).unwrap_err().to_string().contains("phases"));
    }

    #[test]
    fn preset_dump_parses_back_as_inline_spec() {
        let text = robot_fragment(&presets::hamr_vi()).unwrap();
        let c = ExperimentConfig::parse(&text, "t").unwrap();
        assert_eq!(c.robot(None, "hamr-jr").unwrap(), presets::hamr_vi::<f64>());
    }
}
