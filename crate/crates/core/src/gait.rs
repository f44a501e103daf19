//! Gait phase tables and the eight-channel unipolar drive.
//!
//! Each channel is `V/2 (1 + sin(2π (f t + φ_leg) + δ_dof))` with `δ_swing = 0` and
//! `δ_lift = 2π · lift_swing_phase_lead`. With the default quarter-cycle lead the
//! leg is fully extended while the swing actuator sweeps through mid-stroke, so
//! stance coincides with the power stroke.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::num::Scalar;
use crate::transmission::DofKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leg {
    FrontLeft,
    FrontRight,
    RearLeft,
    RearRight,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FrontLeft, Leg::FrontRight, Leg::RearLeft, Leg::RearRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::FrontLeft => "fl",
            Leg::FrontRight => "fr",
            Leg::RearLeft => "rl",
            Leg::RearRight => "rr",
        }
    }
}

/// Number of independently driven actuators.
pub const CHANNELS: usize = 8;

/// Channel index in the order FL-lift, FL-swing, FR-lift, FR-swing, RL-lift, ...
pub fn channel_index(leg: Leg, dof: DofKind) -> usize {
    2 * leg.index()
        + match dof {
            DofKind::Lift => 0,
            DofKind::Swing => 1,
        }
}

pub fn channel_label(channel: usize) -> String {
    let leg = Leg::ALL[channel / 2];
    let dof = if channel.is_multiple_of(2) { DofKind::Lift } else { DofKind::Swing };
    format!("{}_{}", leg.label(), dof.name())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitName {
    Trot,
    Pronk,
    Bound,
    Custom,
}

impl GaitName {
    pub fn as_str(self) -> &'static str {
        match self {
            GaitName::Trot => "trot",
            GaitName::Pronk => "pronk",
            GaitName::Bound => "bound",
            GaitName::Custom => "custom",
        }
    }
}

impl fmt::Display for GaitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GaitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "trot" => Ok(GaitName::Trot),
            "pronk" => Ok(GaitName::Pronk),
            "bound" => Ok(GaitName::Bound),
            "custom" => Ok(GaitName::Custom),
            _ => Err(Error::UnsupportedGait(s.to_string())),
        }
    }
}

/// Phase of each leg as a fraction of the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegPhases<T> {
    pub fl: T,
    pub fr: T,
    pub rl: T,
    pub rr: T,
}

impl<T: Copy> LegPhases<T> {
    pub fn get(&self, leg: Leg) -> T {
        match leg {
            Leg::FrontLeft => self.fl,
            Leg::FrontRight => self.fr,
            Leg::RearLeft => self.rl,
            Leg::RearRight => self.rr,
        }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.fl, self.fr, self.rl, self.rr]
    }
}

/// Footfall phase table of a named gait. `custom` has no table; `jump` is not supported.
pub fn gait_phase_table<T: Scalar>(gait: GaitName) -> Result<LegPhases<T>, Error> {
    let (z, h) = (T::zero(), T::lit(0.5));
    match gait {
        GaitName::Trot => Ok(LegPhases { fl: z, fr: h, rl: h, rr: z }),
        GaitName::Pronk => Ok(LegPhases { fl: z, fr: z, rl: z, rr: z }),
        GaitName::Bound => Ok(LegPhases { fl: z, fr: z, rl: h, rr: h }),
        GaitName::Custom => Err(Error::UnsupportedGait("custom (requires an explicit phase table)".into())),
    }
}

/// Parses a gait name and returns its table.
pub fn phase_table_by_name<T: Scalar>(name: &str) -> Result<LegPhases<T>, Error> {
    gait_phase_table(name.parse()?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    #[default]
    Sinusoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitProgram<T> {
    pub gait: GaitName,
    pub phases: LegPhases<T>,
    pub lift_swing_phase_lead: T,
    pub frequency_hz: T,
    pub voltage_v: T,
    pub waveform: Waveform,
}

impl<T: Scalar> GaitProgram<T> {
    pub fn new(gait: GaitName, frequency_hz: T, voltage_v: T) -> Result<Self, Error> {
        Ok(Self {
            gait,
            phases: gait_phase_table(gait)?,
            lift_swing_phase_lead: T::lit(0.25),
            frequency_hz,
            voltage_v,
            waveform: Waveform::Sinusoid,
        })
    }

    pub fn custom(phases: LegPhases<T>, frequency_hz: T, voltage_v: T) -> Self {
        Self {
            gait: GaitName::Custom,
            phases,
            lift_swing_phase_lead: T::lit(0.25),
            frequency_hz,
            voltage_v,
            waveform: Waveform::Sinusoid,
        }
    }

    pub fn period_s(&self) -> T {
        T::one() / self.frequency_hz
    }

    /// Same program with every leg phase shifted by `delta` (wrapped into [0, 1)).
    pub fn shifted(&self, delta: T) -> Self {
        let wrap = |p: T| {
            let x = (p + delta).fract();
            if x < T::zero() {
                x + T::one()
            } else {
                x
            }
        };
        let mut out = *self;
        out.phases = LegPhases { fl: wrap(self.phases.fl), fr: wrap(self.phases.fr), rl: wrap(self.phases.rl), rr: wrap(self.phases.rr) };
        out
    }

    /// Voltage on one channel at time `t_s`.
    pub fn channel_voltage(&self, leg: Leg, dof: DofKind, t_s: T) -> T {
        let offset = match dof {
            DofKind::Lift => self.lift_swing_phase_lead,
            DofKind::Swing => T::zero(),
        };
        let cycle = (self.frequency_hz * t_s).fract() + self.phases.get(leg) + offset;
        let half = self.voltage_v * T::lit(0.5);
        let v = half * (T::one() + (T::tau() * cycle.fract()).sin());
        v.max(T::zero()).min(self.voltage_v)
    }
}

/// All eight channel voltages at `t_s`, in [`channel_index`] order.
pub fn synthesize_drive<T: Scalar>(program: &GaitProgram<T>, t_s: T) -> [T; CHANNELS] {
    let mut out = [T::zero(); CHANNELS];
    for leg in Leg::ALL {
        for dof in [DofKind::Lift, DofKind::Swing] {
            out[channel_index(leg, dof)] = program.channel_voltage(leg, dof, t_s);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum GaitViolation {
    PhaseOutOfRange { leg: Leg, phase: f64 },
    LeadOutOfRange(f64),
    NonPositiveFrequency(f64),
    VoltageOutOfRange { voltage: f64, rated: f64 },
}

impl fmt::Display for GaitViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaitViolation::PhaseOutOfRange { leg, phase } => write!(f, "phase of {} = {phase} outside [0, 1)", leg.label()),
            GaitViolation::LeadOutOfRange(p) => write!(f, "lift_swing_phase_lead = {p} outside [0, 1)"),
            GaitViolation::NonPositiveFrequency(v) => write!(f, "frequency {v} Hz must be positive"),
            GaitViolation::VoltageOutOfRange { voltage, rated } => write!(f, "voltage {voltage} V outside [0, {rated}] V"),
        }
    }
}

/// Collects every violation instead of stopping at the first.
pub fn validate_gait<T: Scalar>(program: &GaitProgram<T>, rated_voltage: T) -> Result<(), Vec<GaitViolation>> {
    let mut v = Vec::new();
    let in_unit = |p: T| p >= T::zero() && p < T::one();
    for leg in Leg::ALL {
        let p = program.phases.get(leg);
        if !in_unit(p) {
            v.push(GaitViolation::PhaseOutOfRange { leg, phase: p.to_f64_lossy() });
        }
    }
    if !in_unit(program.lift_swing_phase_lead) {
        v.push(GaitViolation::LeadOutOfRange(program.lift_swing_phase_lead.to_f64_lossy()));
    }
    if !(program.frequency_hz > T::zero()) || !program.frequency_hz.is_finite() {
        v.push(GaitViolation::NonPositiveFrequency(program.frequency_hz.to_f64_lossy()));
    }
    if !(program.voltage_v >= T::zero() && program.voltage_v <= rated_voltage) {
        v.push(GaitViolation::VoltageOutOfRange { voltage: program.voltage_v.to_f64_lossy(), rated: rated_voltage.to_f64_lossy() });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phase_tables() {
        let p: LegPhases<f64> = gait_phase_table(GaitName::Pronk).unwrap();
        assert_eq!(p.as_array(), [0.0; 4]);
        let t: LegPhases<f64> = gait_phase_table(GaitName::Trot).unwrap();
        assert_eq!(t.fl, t.rr);
        assert_eq!(t.fr, t.rl);
        assert_eq!((t.fr - t.fl).abs(), 0.5);
        let b: LegPhases<f64> = gait_phase_table(GaitName::Bound).unwrap();
        assert_eq!(b.fl, b.fr);
        assert_eq!(b.rl, b.rr);
        assert_eq!((b.rl - b.fl).abs(), 0.5);
    }

    #[test]
    fn jump_and_unknown_rejected() {
        assert!(matches!(phase_table_by_name::<f64>("jump"), Err(Error::UnsupportedGait(_))));
        assert!(matches!(phase_table_by_name::<f64>("gallop"), Err(Error::UnsupportedGait(_))));
        assert!(phase_table_by_name::<f64>("Trot").is_ok());
    }

    #[test]
    fn waveform_bounds() {
        let mut p = GaitProgram::<f64>::new(GaitName::Pronk, 1.0, 200.0).unwrap();
        p.lift_swing_phase_lead = 0.0;
        // sin = 1 at a quarter period, -1 at three quarters
        assert!((p.channel_voltage(Leg::FrontLeft, DofKind::Swing, 0.25) - 200.0).abs() < 1e-9);
        assert!(p.channel_voltage(Leg::FrontLeft, DofKind::Swing, 0.75).abs() < 1e-9);
    }

    #[test]
    fn pronk_swing_channels_identical() {
        let p = GaitProgram::<f64>::new(GaitName::Pronk, 37.0, 200.0).unwrap();
        for i in 0..500 {
            let v = synthesize_drive(&p, i as f64 * 1.3e-4);
            assert_eq!(v[1], v[3]);
            assert_eq!(v[1], v[5]);
            assert_eq!(v[1], v[7]);
        }
    }

    #[test]
    fn trot_half_period_shift() {
        let p = GaitProgram::<f64>::new(GaitName::Trot, 10.0, 200.0).unwrap();
        for i in 0..200 {
            let t = i as f64 * 7.7e-4;
            let fl = p.channel_voltage(Leg::FrontLeft, DofKind::Swing, t);
            let fr = p.channel_voltage(Leg::FrontRight, DofKind::Swing, t + 0.05);
            assert!((fl - fr).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn channel_order() {
        assert_eq!(channel_index(Leg::FrontLeft, DofKind::Lift), 0);
        assert_eq!(channel_index(Leg::FrontRight, DofKind::Swing), 3);
        assert_eq!(channel_index(Leg::RearRight, DofKind::Swing), 7);
        assert_eq!(channel_label(4), "rl_lift");
    }

    #[test]
    fn validation() {
        let ok = GaitProgram::<f64>::new(GaitName::Trot, 160.0, 200.0).unwrap();
        assert!(validate_gait(&ok, 200.0).is_ok());

        let mut bad = ok;
        bad.phases.fl = 1.2;
        let errs = validate_gait(&bad, 200.0).unwrap_err();
        assert!(matches!(errs[0], GaitViolation::PhaseOutOfRange { leg: Leg::FrontLeft, .. }));

        let mut zero = ok;
        zero.frequency_hz = 0.0;
        zero.voltage_v = 250.0;
        assert_eq!(validate_gait(&zero, 200.0).unwrap_err().len(), 2);
    }

    proptest! {
        #[test]
        fn channels_bounded_and_periodic(
            f in 0.5f64..400.0,
            v in 0.0f64..200.0,
            phase in 0.0f64..1.0,
            lead in 0.0f64..1.0,
            t in 0.0f64..2.0,
        ) {
            let mut p = GaitProgram::custom(LegPhases { fl: phase, fr: 0.1, rl: 0.7, rr: 0.0 }, f, v);
            p.lift_swing_phase_lead = lead;
            let a = synthesize_drive(&p, t);
            let b = synthesize_drive(&p, t + 1.0 / f);
            for c in 0..CHANNELS {
                prop_assert!(a[c] >= 0.0 && a[c] <= v);
                prop_assert!((a[c] - b[c]).abs() <= 1e-9 * v.max(1.0));
            }
        }

        #[test]
        fn shifting_phases_shifts_time(delta in 0.0f64..1.0, t in 0.0f64..1.0) {
            let p = GaitProgram::<f64>::new(GaitName::Bound, 20.0, 200.0).unwrap();
            let s = p.shifted(delta);
            let a = synthesize_drive(&s, t);
            let b = synthesize_drive(&p, t + delta / 20.0);
            for c in 0..CHANNELS {
                prop_assert!((a[c] - b[c]).abs() < 1e-8);
            }
        }
    }
}
