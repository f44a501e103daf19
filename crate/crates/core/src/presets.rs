//! Reference robot configurations and their calibration constants.
//!
//! Measured values (body length and mass, vertical stiffness, resonances, quality
//! factors, stride references) are taken as reported. Quantities that were never
//! reported — actuator blocked force, flexure geometry, hip layout, electrical
//! parameters, friction and contact constants — are calibration constants chosen
//! so that the lumped models reproduce the measured behaviour; they are named
//! below and should not be read as measurements.

use crate::dynamics::SimConfig;
use crate::error::Error;
use crate::num::Scalar;
use crate::robot::{ContactParams, LegSpec, ReferenceData, RobotSpec};
use crate::scaling::{ActuatorSpec, BodyPlan, FlexureSpec, MeasuredPair, MeasuredSet, Quantity};
use crate::sensing::ElectricalModel;
use crate::transmission::{DofKind, TransmissionGeometry, TransmissionModel, VerticalStiffnessCurve};

pub const PRESET_NAMES: [&str; 2] = ["hamr-jr", "hamr-vi"];

/// Leg displacement per actuator tip displacement (both robots, both DOFs).
pub const TRANSMISSION_RATIO: f64 = 8.0;
pub const RATED_VOLTAGE_V: f64 = 200.0;

pub const JR_LIFT_RESONANCE_HZ: f64 = 237.3;
pub const JR_LIFT_Q: f64 = 6.3;
pub const JR_SWING_RESONANCE_HZ: f64 = 279.1;
pub const JR_SWING_Q: f64 = 9.6;
pub const VI_LIFT_RESONANCE_HZ: f64 = 81.3;
pub const VI_SWING_RESONANCE_HZ: f64 = 102.3;

/// Height dependent vertical stiffness endpoints of the small robot, N/m.
pub const JR_K_LOWEST_N_M: f64 = 72.11;
pub const JR_K_HIGHEST_N_M: f64 = 34.52;

/// Leg lengths recovered by inverting the reported relative leg stiffness (≈63 and
/// ≈11) with the single-value vertical stiffness. Not measured.
pub const JR_LEG_LENGTH_MM: f64 = 6.1;
pub const VI_LEG_LENGTH_MM: f64 = 16.5;

/// Quasi-static leg stroke at rated voltage, mm: half the trot quasi-static stride.
pub const JR_STROKE_MM: f64 = 1.04;
pub const VI_STROKE_MM: f64 = 4.2;

/// Fraction of the energy-consistent motional coupling `Γ = α` that reaches the
/// drive current (calibration constant).
pub const COUPLING_FACTOR: f64 = 0.5;

/// Ground friction coefficient of the test surface. Unreported; chosen so the
/// simulated speed-frequency curves peak at a few hundred mm/s.
pub const CALIBRATED_FRICTION: f64 = 0.13;
/// Friction used for quasi-static (no-slip) experiments.
pub const HIGH_FRICTION: f64 = 5.0;

/// Eleven sweep frequencies spanning 1–280 Hz, Hz.
pub const SWEEP_FREQUENCIES_HZ: [f64; 11] = [1.0, 10.0, 20.0, 40.0, 60.0, 80.0, 120.0, 160.0, 200.0, 240.0, 280.0];

/// Run protocol used for the characterisation experiments: 0.25 s to settle, then
/// 20 drive cycles, at most 3 s.
pub fn experiment_config<T: Scalar>() -> SimConfig<T> {
    SimConfig {
        settle_s: lit(0.25),
        measure_cycles: Some(20),
        measure_max_s: Some(lit(3.0)),
        ..SimConfig::default()
    }
}

fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

struct Params {
    name: &'static str,
    body: [f64; 4],
    leg_k_n_m: f64,
    stroke_mm: f64,
    flexure: FlexureSpec<f64>,
    moment_arm_mm: f64,
    actuator_size_mm: [f64; 2],
    capacitance_nf: f64,
    resistance_mohm: f64,
    lift: [f64; 2],
    swing: [f64; 2],
    curve: [f64; 2],
    hip: [f64; 3],
    leg_length_mm: f64,
    contact: ContactParams<f64>,
    reference: ReferenceData<f64>,
}

fn build<T: Scalar>(p: &Params) -> Result<RobotSpec<T>, Error> {
    let r = TRANSMISSION_RATIO;
    let flexures: Vec<FlexureSpec<T>> = vec![conv_flexure(&p.flexure); 2];
    let geometry = TransmissionGeometry { moment_arms_mm: vec![lit(p.moment_arm_mm); 2] };
    let k_flex = crate::transmission::reflected_flexure_stiffness(&flexures, &geometry)?.to_f64_lossy();
    // actuator-side stiffness needed for the measured leg stiffness
    let k_total = p.leg_k_n_m * r * r;
    let k_act = k_total - k_flex;
    // blocked force that gives the required stroke through the loaded transmission
    let blocked_mn = k_total * p.stroke_mm / r; // N/m · mm = mN
    let free_um = 1000.0 * blocked_mn / k_act;
    let actuator = ActuatorSpec::new(
        lit(p.actuator_size_mm[0]),
        lit(p.actuator_size_mm[1]),
        lit(free_um),
        lit(blocked_mn),
        lit(p.capacitance_nf),
        lit(p.resistance_mohm),
        lit(RATED_VOLTAGE_V),
    )?;
    let lift = TransmissionModel::from_components(DofKind::Lift, &actuator, &flexures, &geometry, lit(p.lift[0]), lit(p.lift[1]), lit(r))?;
    let swing = TransmissionModel::from_components(DofKind::Swing, &actuator, &flexures, &geometry, lit(p.swing[0]), lit(p.swing[1]), lit(r))?;
    let curve = VerticalStiffnessCurve {
        leg_height_min_mm: T::zero(),
        leg_height_max_mm: lit(p.stroke_mm),
        k_at_lowest_n_m: lit(p.curve[0]),
        k_at_highest_n_m: lit(p.curve[1]),
        shape_exponent: T::one(),
    };
    let [hx, hy, hz] = p.hip;
    let leg = |x: f64, y: f64| LegSpec { lift, swing, vertical_stiffness: curve, hip_x_mm: lit(x), hip_y_mm: lit(y), hip_z_mm: lit(hz) };
    let electrical = ElectricalModel {
        capacitance_nf: lit(p.capacitance_nf),
        resistance_mohm: lit(p.resistance_mohm),
        coupling_ua_per_mm_s: ElectricalModel::coupling_from_force_per_volt(lift.drive_force_per_volt(), lit(COUPLING_FACTOR)),
    };
    let c = &p.contact;
    let robot = RobotSpec {
        name: p.name.to_string(),
        body: BodyPlan {
            body_length_mm: lit(p.body[0]),
            body_width_mm: lit(p.body[1]),
            body_mass_g: lit(p.body[2]),
            chassis_thickness_um: lit(p.body[3]),
        },
        actuator,
        flexures,
        geometry,
        legs: [leg(hx, hy), leg(hx, -hy), leg(-hx, hy), leg(-hx, -hy)],
        electrical,
        leg_rest_length_mm: lit(p.leg_length_mm),
        friction_coefficient: lit(CALIBRATED_FRICTION),
        payload_g: T::zero(),
        contact: ContactParams {
            foot_damping_ratio: lit(c.foot_damping_ratio),
            tangential_stiffness_ratio: lit(c.tangential_stiffness_ratio),
            chassis_stiffness_n_m: lit(c.chassis_stiffness_n_m),
            chassis_damping_ratio: lit(c.chassis_damping_ratio),
            serial_compliance: lit(c.serial_compliance),
        },
        reference: ReferenceData {
            vertical_stiffness_n_m: lit(p.reference.vertical_stiffness_n_m),
            stride_frequency_hz: p.reference.stride_frequency_hz.map(lit),
            stride_length_mm: p.reference.stride_length_mm.map(lit),
            speed_mm_s: p.reference.speed_mm_s.map(lit),
            min_cot: p.reference.min_cot.map(lit),
        },
    };
    robot.validate()?;
    Ok(robot)
}

fn conv_flexure<T: Scalar>(f: &FlexureSpec<f64>) -> FlexureSpec<T> {
    FlexureSpec {
        length_um: lit(f.length_um),
        width_um: lit(f.width_um),
        thickness_um: lit(f.thickness_um),
        max_angle_rad: lit(f.max_angle_rad),
        stiffness_nmm_rad: lit(f.stiffness_nmm_rad),
    }
}

fn jr_contact() -> ContactParams<f64> {
    ContactParams {
        foot_damping_ratio: 0.2,
        tangential_stiffness_ratio: 1.0,
        chassis_stiffness_n_m: 500.0,
        chassis_damping_ratio: 0.5,
        serial_compliance: 0.3,
    }
}

/// The 22.5 mm, 0.32 g robot.
pub fn hamr_jr<T: Scalar>() -> RobotSpec<T> {
    build(&Params {
        name: "hamr-jr",
        body: [22.5, 10.0, 0.32, 800.0],
        leg_k_n_m: 32.42,
        stroke_mm: JR_STROKE_MM,
        // 30 N/m reflected in total from two flexures on 0.5 mm arms
        flexure: FlexureSpec { length_um: 100.0, width_um: 500.0, thickness_um: 7.5, max_angle_rad: 0.6, stiffness_nmm_rad: 0.00375 },
        moment_arm_mm: 0.5,
        actuator_size_mm: [4.5, 1.75],
        capacitance_nf: 0.5,
        resistance_mohm: 8.0,
        lift: [JR_LIFT_RESONANCE_HZ, JR_LIFT_Q],
        swing: [JR_SWING_RESONANCE_HZ, JR_SWING_Q],
        curve: [JR_K_LOWEST_N_M, JR_K_HIGHEST_N_M],
        hip: [7.0, 5.0, JR_LEG_LENGTH_MM],
        leg_length_mm: JR_LEG_LENGTH_MM,
        contact: jr_contact(),
        reference: ReferenceData {
            vertical_stiffness_n_m: 32.42,
            stride_frequency_hz: Some(200.0),
            stride_length_mm: Some(1.77),
            speed_mm_s: Some(313.0),
            min_cot: Some(33.8),
        },
    })
    .expect("hamr-jr preset is valid")
}

/// The 45.1 mm, 1.41 g robot. Quality factors are not reported and are assumed
/// equal to the small robot's.
pub fn hamr_vi<T: Scalar>() -> RobotSpec<T> {
    let mut contact = jr_contact();
    contact.chassis_stiffness_n_m = 250.0;
    build(&Params {
        name: "hamr-vi",
        body: [45.1, 20.0, 1.41, 800.0],
        leg_k_n_m: 9.21,
        stroke_mm: VI_STROKE_MM,
        flexure: FlexureSpec { length_um: 100.0, width_um: 1000.0, thickness_um: 7.5, max_angle_rad: 0.6, stiffness_nmm_rad: 0.0075 },
        moment_arm_mm: 1.0,
        actuator_size_mm: [9.0, 3.5],
        capacitance_nf: 2.0,
        resistance_mohm: 2.0,
        lift: [VI_LIFT_RESONANCE_HZ, JR_LIFT_Q],
        swing: [VI_SWING_RESONANCE_HZ, JR_SWING_Q],
        curve: [JR_K_LOWEST_N_M / 4.0, JR_K_HIGHEST_N_M / 4.0],
        hip: [14.0, 10.0, VI_LEG_LENGTH_MM],
        leg_length_mm: VI_LEG_LENGTH_MM,
        contact,
        reference: ReferenceData {
            vertical_stiffness_n_m: 9.21,
            stride_frequency_hz: Some(65.0),
            stride_length_mm: Some(10.87),
            speed_mm_s: Some(478.0),
            min_cot: Some(7.4),
        },
    })
    .expect("hamr-vi preset is valid")
}

pub fn preset<T: Scalar>(name: &str) -> Result<RobotSpec<T>, Error> {
    match name {
        "hamr-jr" => Ok(hamr_jr()),
        "hamr-vi" => Ok(hamr_vi()),
        _ => Err(Error::domain(format!("unknown preset `{name}` (available: {})", PRESET_NAMES.join(", ")))),
    }
}

/// Measured values of both robots; `scaled` is the small robot.
pub fn table_measured<T: Scalar>() -> MeasuredSet<T> {
    use Quantity::*;
    let pair = |scaled: f64, base: f64| MeasuredPair { scaled: lit(scaled), base: lit(base) };
    MeasuredSet::from([
        (BodyLength, pair(22.5, 45.1)),
        (BodyMass, pair(0.32, 1.41)),
        (VerticalStiffness, pair(32.42, 9.21)),
        (LiftResonance, pair(237.3, 81.3)),
        (SwingResonance, pair(279.1, 102.3)),
        (StrideFrequency, pair(200.0, 65.0)),
        (QuasiStaticStride, pair(1.9, 8.4)),
        (StrideLength, pair(1.77, 10.87)),
        (Speed, pair(313.0, 478.0)),
        (SpeedBl, pair(13.9, 10.6)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transmission;

    #[test]
    fn jr_matches_measured_transmission() {
        let r = hamr_jr::<f64>();
        let leg = &r.legs[0];
        assert!((transmission::natural_frequency(&leg.lift) - 237.3).abs() < 1e-9);
        assert!((transmission::natural_frequency(&leg.swing) - 279.1).abs() < 1e-9);
        assert!((leg.lift.leg_stiffness_n_m() - 32.42).abs() < 1e-9);
        let stroke = transmission::quasi_static_leg_displacement(&leg.swing, 200.0, 200.0).unwrap();
        assert!((stroke - 1.04).abs() < 1e-9);
        assert!((r.reflected_flexure_stiffness().unwrap() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn vi_quasi_static_stride() {
        let r = hamr_vi::<f64>();
        let stroke = transmission::quasi_static_leg_displacement(&r.legs[0].swing, 200.0, 200.0).unwrap();
        assert!((2.0 * stroke - 8.4).abs() < 1e-9);
    }

    #[test]
    fn presets_are_generic() {
        let a = hamr_jr::<f32>();
        a.validate().unwrap();
        assert!(preset::<f64>("hamr-xl").is_err());
    }
}
