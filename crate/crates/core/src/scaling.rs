//! Allometric scaling of chassis, actuators and flexures, and the predicted
//! scaling factors for stiffness, resonance and running speed.
//!
//! Length, width and thickness scale independently. With `s = (0.5, 0.5, 1)`:
//!
//! | quantity            | law              | factor |
//! |---------------------|------------------|--------|
//! | body length         | `l`              | 0.5    |
//! | body mass           | `l w t`          | 0.25   |
//! | actuator deflection | `l²`             | 0.25   |
//! | blocked force       | `w / l`          | 1      |
//! | actuator stiffness  | `w / l³`         | 4      |
//! | capacitance         | `l w`            | 0.25   |
//! | resistance          | `1 / (l w)`      | 4      |
//! | flexure stiffness   | `w t³` (l fixed) | 0.5    |
//!
//! Scale operations only need field arithmetic, so they accept exact rationals
//! (see [`crate::Rational`]) as well as floats.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::num::{Field, Scalar};
use crate::robot::RobotSpec;
use crate::transmission;

/// Small integer in any field, by binary expansion.
fn int<T: Field>(n: u64) -> T {
    let (mut acc, mut pow, mut n) = (T::zero(), T::one(), n);
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + pow;
        }
        pow = pow + pow;
        n >>= 1;
    }
    acc
}

fn abs_diff<T: Field>(a: T, b: T) -> T {
    if a > b {
        a - b
    } else {
        b - a
    }
}

fn require_positive<T: Field>(what: &str, v: T) -> Result<(), Error> {
    if v > T::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be strictly positive, got {v:?}")))
    }
}

/// Chassis dimensions and mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyPlan<T> {
    pub body_length_mm: T,
    pub body_width_mm: T,
    pub body_mass_g: T,
    pub chassis_thickness_um: T,
}

impl<T: Field> BodyPlan<T> {
    pub fn validate(&self) -> Result<(), Error> {
        require_positive("body_length_mm", self.body_length_mm)?;
        require_positive("body_width_mm", self.body_width_mm)?;
        require_positive("body_mass_g", self.body_mass_g)?;
        require_positive("chassis_thickness_um", self.chassis_thickness_um)
    }
}

/// Lumped linear piezoelectric bending actuator, characterised at its rated voltage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorSpec<T> {
    pub length_mm: T,
    pub width_mm: T,
    pub free_deflection_um: T,
    pub blocked_force_mn: T,
    pub stiffness_n_m: T,
    pub capacitance_nf: T,
    pub resistance_mohm: T,
    pub rated_voltage_v: T,
}

impl<T: Field> ActuatorSpec<T> {
    /// Builds a consistent actuator: stiffness is derived from force and deflection.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        length_mm: T,
        width_mm: T,
        free_deflection_um: T,
        blocked_force_mn: T,
        capacitance_nf: T,
        resistance_mohm: T,
        rated_voltage_v: T,
    ) -> Result<Self, Error> {
        require_positive("free_deflection_um", free_deflection_um)?;
        let a = Self {
            length_mm,
            width_mm,
            free_deflection_um,
            blocked_force_mn,
            // mN / µm = 1000 N/m
            stiffness_n_m: int::<T>(1000) * blocked_force_mn / free_deflection_um,
            capacitance_nf,
            resistance_mohm,
            rated_voltage_v,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), Error> {
        require_positive("length_mm", self.length_mm)?;
        require_positive("width_mm", self.width_mm)?;
        require_positive("free_deflection_um", self.free_deflection_um)?;
        require_positive("blocked_force_mn", self.blocked_force_mn)?;
        require_positive("stiffness_n_m", self.stiffness_n_m)?;
        require_positive("capacitance_nf", self.capacitance_nf)?;
        require_positive("resistance_mohm", self.resistance_mohm)?;
        require_positive("rated_voltage_v", self.rated_voltage_v)?;
        let expected = int::<T>(1000) * self.blocked_force_mn / self.free_deflection_um;
        let tol = expected / int::<T>(1_000_000_000);
        if abs_diff(self.stiffness_n_m, expected) > tol {
            return Err(Error::domain(format!(
                "actuator stiffness {:?} N/m inconsistent with blocked_force/free_deflection = {:?} N/m",
                self.stiffness_n_m, expected
            )));
        }
        Ok(())
    }

    /// Blocked force per volt, N/V.
    pub fn force_per_volt(&self) -> T {
        self.blocked_force_mn / (int::<T>(1000) * self.rated_voltage_v)
    }
}

/// Flexure joint; stiffness is rotational.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexureSpec<T> {
    pub length_um: T,
    pub width_um: T,
    pub thickness_um: T,
    pub max_angle_rad: T,
    pub stiffness_nmm_rad: T,
}

impl<T: Field> FlexureSpec<T> {
    pub fn validate(&self) -> Result<(), Error> {
        require_positive("length_um", self.length_um)?;
        require_positive("width_um", self.width_um)?;
        require_positive("thickness_um", self.thickness_um)?;
        require_positive("max_angle_rad", self.max_angle_rad)?;
        require_positive("stiffness_nmm_rad", self.stiffness_nmm_rad)
    }
}

/// Independent scale factors for length, width and thickness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllometricTransform<T> {
    pub s_length: T,
    pub s_width: T,
    pub s_thickness: T,
    /// Flexure length is held fixed unless this is set.
    #[serde(default)]
    pub scale_flexure_length: bool,
}

impl<T: Field> AllometricTransform<T> {
    pub fn new(s_length: T, s_width: T, s_thickness: T) -> Result<Self, Error> {
        let t = Self { s_length, s_width, s_thickness, scale_flexure_length: false };
        t.validate()?;
        Ok(t)
    }

    pub fn identity() -> Self {
        Self { s_length: T::one(), s_width: T::one(), s_thickness: T::one(), scale_flexure_length: false }
    }

    /// Half length and width, thickness kept.
    pub fn half() -> Self {
        let half = T::one() / int::<T>(2);
        Self { s_length: half, s_width: half, s_thickness: T::one(), scale_flexure_length: false }
    }

    pub fn with_flexure_length_scaling(mut self, on: bool) -> Self {
        self.scale_flexure_length = on;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        require_positive("s_length", self.s_length)?;
        require_positive("s_width", self.s_width)?;
        require_positive("s_thickness", self.s_thickness)
    }

    /// Applying `self` then `next` is equivalent to applying the returned transform.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            s_length: self.s_length * next.s_length,
            s_width: self.s_width * next.s_width,
            s_thickness: self.s_thickness * next.s_thickness,
            scale_flexure_length: self.scale_flexure_length,
        }
    }

    pub fn mass_factor(&self) -> T {
        self.s_length * self.s_width * self.s_thickness
    }

    pub fn deflection_factor(&self) -> T {
        self.s_length * self.s_length
    }

    pub fn force_factor(&self) -> T {
        self.s_width / self.s_length
    }

    pub fn actuator_stiffness_factor(&self) -> T {
        self.s_width / (self.s_length * self.s_length * self.s_length)
    }

    pub fn capacitance_factor(&self) -> T {
        self.s_length * self.s_width
    }

    pub fn resistance_factor(&self) -> T {
        T::one() / (self.s_length * self.s_width)
    }

    /// Beam bending law `w t³ / l`; `l` only enters when flexure length scaling is on.
    pub fn flexure_stiffness_factor(&self) -> T {
        let wt3 = self.s_width * self.s_thickness * self.s_thickness * self.s_thickness;
        if self.scale_flexure_length {
            wt3 / self.s_length
        } else {
            wt3
        }
    }

    /// Angular range is proportional to flexure length.
    pub fn flexure_angle_factor(&self) -> T {
        if self.scale_flexure_length {
            self.s_length
        } else {
            T::one()
        }
    }
}

pub fn scale_chassis<T: Field>(plan: &BodyPlan<T>, t: &AllometricTransform<T>) -> Result<BodyPlan<T>, Error> {
    plan.validate()?;
    t.validate()?;
    Ok(BodyPlan {
        body_length_mm: t.s_length * plan.body_length_mm,
        body_width_mm: t.s_width * plan.body_width_mm,
        body_mass_g: t.mass_factor() * plan.body_mass_g,
        chassis_thickness_um: t.s_thickness * plan.chassis_thickness_um,
    })
}

/// Rated voltage is left unchanged.
pub fn scale_actuator<T: Field>(a: &ActuatorSpec<T>, t: &AllometricTransform<T>) -> Result<ActuatorSpec<T>, Error> {
    a.validate()?;
    t.validate()?;
    Ok(ActuatorSpec {
        length_mm: t.s_length * a.length_mm,
        width_mm: t.s_width * a.width_mm,
        free_deflection_um: t.deflection_factor() * a.free_deflection_um,
        blocked_force_mn: t.force_factor() * a.blocked_force_mn,
        stiffness_n_m: t.actuator_stiffness_factor() * a.stiffness_n_m,
        capacitance_nf: t.capacitance_factor() * a.capacitance_nf,
        resistance_mohm: t.resistance_factor() * a.resistance_mohm,
        rated_voltage_v: a.rated_voltage_v,
    })
}

pub fn scale_flexure<T: Field>(f: &FlexureSpec<T>, t: &AllometricTransform<T>) -> Result<FlexureSpec<T>, Error> {
    f.validate()?;
    t.validate()?;
    let length_um = if t.scale_flexure_length { t.s_length * f.length_um } else { f.length_um };
    Ok(FlexureSpec {
        length_um,
        width_um: t.s_width * f.width_um,
        thickness_um: t.s_thickness * f.thickness_um,
        max_angle_rad: t.flexure_angle_factor() * f.max_angle_rad,
        stiffness_nmm_rad: t.flexure_stiffness_factor() * f.stiffness_nmm_rad,
    })
}

/// How the transmission stiffness factor is composed from its parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StiffnessComposition {
    /// Sum of the actuator and flexure *factors* (4 + 1/2 = 9/2 for the half transform).
    #[default]
    FactorSum,
    /// Ratio of the scaled parallel-spring sum `k_act' + k_flex'` to the unscaled one.
    ComponentSum,
}

/// Sum of the actuator-stiffness and flexure-stiffness factors.
///
/// Note that this is not the ratio of summed stiffnesses for general `k_act`, `k_flex`;
/// it gives 2 for the identity transform. Use [`component_total_stiffness`] for the
/// parallel-spring value.
pub fn factor_sum_stiffness_factor<T: Field>(t: &AllometricTransform<T>) -> T {
    t.actuator_stiffness_factor() + t.flexure_stiffness_factor()
}

/// Scaled parallel-spring stiffness `k_act·f_act + k_flex·f_flex`.
pub fn component_total_stiffness<T: Field>(k_act: T, k_flex: T, t: &AllometricTransform<T>) -> T {
    t.actuator_stiffness_factor() * k_act + t.flexure_stiffness_factor() * k_flex
}

pub fn total_stiffness_factor<T: Field>(
    t: &AllometricTransform<T>,
    mode: StiffnessComposition,
    k_act: T,
    k_flex: T,
) -> T {
    match mode {
        StiffnessComposition::FactorSum => factor_sum_stiffness_factor(t),
        StiffnessComposition::ComponentSum => component_total_stiffness(k_act, k_flex, t) / (k_act + k_flex),
    }
}

/// `sqrt(stiffness_factor / mass_factor)`.
pub fn resonance_factor<T: Scalar>(stiffness_factor: T, mass_factor: T) -> Result<T, Error> {
    require_positive("stiffness_factor", stiffness_factor)?;
    require_positive("mass_factor", mass_factor)?;
    Ok((stiffness_factor / mass_factor).sqrt())
}

/// Running speed scales as deflection times cycling frequency.
pub fn speed_factor<T: Scalar>(deflection_factor: T, resonance_factor: T) -> Result<T, Error> {
    require_positive("deflection_factor", deflection_factor)?;
    require_positive("resonance_factor", resonance_factor)?;
    Ok(deflection_factor * resonance_factor)
}

/// Speed factor in body lengths per second.
pub fn speed_bl_factor<T: Scalar>(deflection_factor: T, resonance_factor: T, s_length: T) -> Result<T, Error> {
    require_positive("s_length", s_length)?;
    Ok(speed_factor(deflection_factor, resonance_factor)? / s_length)
}

/// Quantities tracked by a [`ScalingRow`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    BodyLength,
    BodyWidth,
    BodyMass,
    ChassisThickness,
    ActuatorDeflection,
    BlockedForce,
    ActuatorStiffness,
    Capacitance,
    Resistance,
    FlexureStiffness,
    FlexureMaxAngle,
    TotalStiffness,
    VerticalStiffness,
    LiftResonance,
    SwingResonance,
    StrideFrequency,
    QuasiStaticStride,
    StrideLength,
    Speed,
    SpeedBl,
}

impl Quantity {
    pub const ALL: [Quantity; 20] = [
        Quantity::BodyLength,
        Quantity::BodyWidth,
        Quantity::BodyMass,
        Quantity::ChassisThickness,
        Quantity::ActuatorDeflection,
        Quantity::BlockedForce,
        Quantity::ActuatorStiffness,
        Quantity::Capacitance,
        Quantity::Resistance,
        Quantity::FlexureStiffness,
        Quantity::FlexureMaxAngle,
        Quantity::TotalStiffness,
        Quantity::VerticalStiffness,
        Quantity::LiftResonance,
        Quantity::SwingResonance,
        Quantity::StrideFrequency,
        Quantity::QuasiStaticStride,
        Quantity::StrideLength,
        Quantity::Speed,
        Quantity::SpeedBl,
    ];

    /// Column label, unit suffixed.
    pub fn label(self) -> &'static str {
        match self {
            Quantity::BodyLength => "body_length_mm",
            Quantity::BodyWidth => "body_width_mm",
            Quantity::BodyMass => "body_mass_g",
            Quantity::ChassisThickness => "chassis_thickness_um",
            Quantity::ActuatorDeflection => "actuator_free_deflection_um",
            Quantity::BlockedForce => "actuator_blocked_force_mn",
            Quantity::ActuatorStiffness => "actuator_stiffness_n_m",
            Quantity::Capacitance => "actuator_capacitance_nf",
            Quantity::Resistance => "actuator_resistance_mohm",
            Quantity::FlexureStiffness => "flexure_stiffness_nmm_rad",
            Quantity::FlexureMaxAngle => "flexure_max_angle_rad",
            Quantity::TotalStiffness => "transmission_stiffness_n_m",
            Quantity::VerticalStiffness => "vertical_stiffness_n_m",
            Quantity::LiftResonance => "lift_resonance_hz",
            Quantity::SwingResonance => "swing_resonance_hz",
            Quantity::StrideFrequency => "stride_frequency_hz",
            Quantity::QuasiStaticStride => "stride_length_quasi_static_mm",
            Quantity::StrideLength => "stride_length_mm",
            Quantity::Speed => "speed_mm_s",
            Quantity::SpeedBl => "speed_bl_s",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Measured value of one quantity on both robots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPair<T> {
    pub scaled: T,
    pub base: T,
}

/// Measured values keyed by quantity; missing quantities simply get no experimental factor.
pub type MeasuredSet<T> = BTreeMap<Quantity, MeasuredPair<T>>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow<T> {
    pub quantity: Quantity,
    pub base: Option<T>,
    pub scaled: Option<T>,
    pub factor_theoretical: T,
    pub factor_experimental: Option<T>,
}

/// Predicted factors for every quantity under `t`.
pub fn theoretical_factors<T: Scalar>(
    base: &RobotSpec<T>,
    t: &AllometricTransform<T>,
    mode: StiffnessComposition,
) -> Result<BTreeMap<Quantity, T>, Error> {
    t.validate()?;
    let k_act = base.actuator.stiffness_n_m;
    let k_flex = base.reflected_flexure_stiffness()?;
    let k_factor = total_stiffness_factor(t, mode, k_act, k_flex);
    let res = resonance_factor(k_factor, t.mass_factor())?;
    let speed = speed_factor(t.deflection_factor(), res)?;
    let speed_bl = speed_bl_factor(t.deflection_factor(), res, t.s_length)?;

    use Quantity::*;
    Ok(BTreeMap::from([
        (BodyLength, t.s_length),
        (BodyWidth, t.s_width),
        (BodyMass, t.mass_factor()),
        (ChassisThickness, t.s_thickness),
        (ActuatorDeflection, t.deflection_factor()),
        (BlockedForce, t.force_factor()),
        (ActuatorStiffness, t.actuator_stiffness_factor()),
        (Capacitance, t.capacitance_factor()),
        (Resistance, t.resistance_factor()),
        (FlexureStiffness, t.flexure_stiffness_factor()),
        (FlexureMaxAngle, t.flexure_angle_factor()),
        (TotalStiffness, k_factor),
        (VerticalStiffness, k_factor),
        (LiftResonance, res),
        (SwingResonance, res),
        (StrideFrequency, res),
        (QuasiStaticStride, t.deflection_factor()),
        (StrideLength, t.deflection_factor()),
        (Speed, speed),
        (SpeedBl, speed_bl),
    ]))
}

fn base_value<T: Scalar>(robot: &RobotSpec<T>, q: Quantity) -> Result<Option<T>, Error> {
    use Quantity::*;
    let leg = &robot.legs[0];
    let rated = robot.actuator.rated_voltage_v;
    let flex = robot.flexures.first();
    Ok(match q {
        BodyLength => Some(robot.body.body_length_mm),
        BodyWidth => Some(robot.body.body_width_mm),
        BodyMass => Some(robot.body.body_mass_g),
        ChassisThickness => Some(robot.body.chassis_thickness_um),
        ActuatorDeflection => Some(robot.actuator.free_deflection_um),
        BlockedForce => Some(robot.actuator.blocked_force_mn),
        ActuatorStiffness => Some(robot.actuator.stiffness_n_m),
        Capacitance => Some(robot.actuator.capacitance_nf),
        Resistance => Some(robot.actuator.resistance_mohm),
        FlexureStiffness => flex.map(|f| f.stiffness_nmm_rad),
        FlexureMaxAngle => flex.map(|f| f.max_angle_rad),
        TotalStiffness => Some(leg.lift.k_total_n_m),
        VerticalStiffness => Some(robot.reference.vertical_stiffness_n_m),
        LiftResonance => Some(transmission::natural_frequency(&leg.lift)),
        SwingResonance => Some(transmission::natural_frequency(&leg.swing)),
        StrideFrequency => robot.reference.stride_frequency_hz,
        // trot: two power strokes per cycle
        QuasiStaticStride => Some(T::lit(2.0) * transmission::quasi_static_leg_displacement(&leg.swing, rated, rated)?),
        StrideLength => robot.reference.stride_length_mm,
        Speed => robot.reference.speed_mm_s,
        SpeedBl => robot.reference.speed_mm_s.map(|v| v / robot.body.body_length_mm),
    })
}

/// One row per tracked quantity: base value (when the robot defines it), predicted
/// scaled value and factor, and the measured ratio when both measurements are supplied.
pub fn scaling_report<T: Scalar>(
    base: &RobotSpec<T>,
    t: &AllometricTransform<T>,
    measured: Option<&MeasuredSet<T>>,
    mode: StiffnessComposition,
) -> Result<Vec<ScalingRow<T>>, Error> {
    base.validate()?;
    let factors = theoretical_factors(base, t, mode)?;
    Quantity::ALL
        .iter()
        .map(|&q| {
            let factor = factors[&q];
            let b = base_value(base, q)?;
            let experimental = measured
                .and_then(|m| m.get(&q))
                .filter(|p| p.base != T::zero())
                .map(|p| p.scaled / p.base);
            Ok(ScalingRow {
                quantity: q,
                base: b,
                scaled: b.map(|v| v * factor),
                factor_theoretical: factor,
                factor_experimental: experimental,
            })
        })
        .collect()
}
