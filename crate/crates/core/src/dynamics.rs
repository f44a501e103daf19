//! Fixed-step planar (sagittal) locomotion simulation.
//!
//! State: body `x, z, pitch` plus the eight actuator DOFs. All four legs are
//! projected into the sagittal plane at their hip `x` (roll is not modelled), so
//! diagonal pairs in a trot load the front and rear of the body together.
//!
//! Each leg's nominal foot point follows the actuators kinematically:
//!
//! ```text
//! foot_body = (hip_x − r_swing (q_swing − q_mid), hip_z − rest_length − r_lift (q_lift − q_mid))
//! ```
//!
//! where `q_mid` is the static actuator displacement at half the rated voltage.
//! Ground contact is a compliant spring with the height-dependent vertical leg
//! stiffness; tangential forces come from an anchored stick spring clamped to the
//! friction cone. Contact forces are mapped back onto the actuators by virtual
//! work. Two chassis points (nose and tail of the underside) also contact the
//! ground. Integration is semi-implicit Euler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gait::{self, GaitName, GaitProgram, Leg, CHANNELS};
use crate::metrics::{self, RunSummary};
use crate::num::Scalar;
use crate::robot::RobotSpec;
use crate::sensing;
use crate::transmission::{self, DofKind, TransmissionModel};

pub use crate::robot::{ContactParams, LegSpec, ReferenceData};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: crate::num::Scalar + Deserialize<'de>"))]
pub struct SimConfig<T> {
    /// Integrator step; `None` uses `min(10 µs, 1 / (200 f_drive))`.
    #[serde(default)]
    pub timestep_s: Option<T>,
    pub duration_s: T,
    #[serde(default = "default_gravity")]
    pub gravity_m_s2: T,
    /// Start height of the chassis underside; `None` starts with the lowest point on the ground.
    #[serde(default)]
    pub initial_height_mm: Option<T>,
    pub settle_s: T,
    /// When set, the duration becomes `settle_s + measure_cycles / f_drive`.
    #[serde(default)]
    pub measure_cycles: Option<u32>,
    /// Caps the measured window set by `measure_cycles`, s.
    #[serde(default)]
    pub measure_max_s: Option<T>,
    /// Record every n-th step; `None` records at most every 100 µs and at least 100 samples per cycle.
    #[serde(default)]
    pub record_every: Option<usize>,
}

fn default_gravity<T: Scalar>() -> T {
    T::lit(9.81)
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            timestep_s: None,
            duration_s: T::lit(1.0),
            gravity_m_s2: default_gravity(),
            initial_height_mm: None,
            settle_s: T::lit(0.25),
            measure_cycles: None,
            measure_max_s: None,
            record_every: None,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if let Some(dt) = self.timestep_s {
            if !(dt > T::zero()) {
                return Err(Error::domain("timestep must be positive"));
            }
        }
        if !(self.settle_s >= T::zero()) {
            return Err(Error::domain("settle time must be non-negative"));
        }
        if self.measure_cycles.is_none() && !(self.duration_s > self.settle_s) {
            return Err(Error::domain("duration must exceed settle time"));
        }
        if let Some(m) = self.measure_max_s {
            if !(m > T::zero()) {
                return Err(Error::domain("measure_max_s must be positive"));
            }
        }
        if self.measure_cycles == Some(0) {
            return Err(Error::domain("measure_cycles must be positive"));
        }
        if !(self.gravity_m_s2 > T::zero()) {
            return Err(Error::domain("gravity must be positive"));
        }
        if self.record_every == Some(0) {
            return Err(Error::domain("record_every must be positive"));
        }
        Ok(())
    }

    pub fn timestep_for(&self, frequency_hz: T) -> T {
        self.timestep_s.unwrap_or_else(|| T::lit(1e-5).min(T::one() / (T::lit(200.0) * frequency_hz)))
    }

    pub fn duration_for(&self, frequency_hz: T) -> T {
        match self.measure_cycles {
            Some(n) => {
                let window = T::lit(n as f64) / frequency_hz;
                self.settle_s + self.measure_max_s.map_or(window, |m| window.min(m))
            }
            None => self.duration_s,
        }
    }

    fn record_every_for(&self, dt: T, frequency_hz: T) -> usize {
        self.record_every.unwrap_or_else(|| {
            let target = T::lit(1e-4).min(T::one() / (T::lit(100.0) * frequency_hz));
            (target / dt).floor().to_usize().unwrap_or(1).max(1)
        })
    }
}

/// Body pose and velocity. Positions in mm (chassis underside centre), pitch in rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyState<T> {
    pub x_mm: T,
    pub z_mm: T,
    pub pitch_rad: T,
    pub vx_mm_s: T,
    pub vz_mm_s: T,
    pub pitch_rate_rad_s: T,
}

impl<T: Scalar> BodyState<T> {
    pub fn is_finite(&self) -> bool {
        [self.x_mm, self.z_mm, self.pitch_rad, self.vx_mm_s, self.vz_mm_s, self.pitch_rate_rad_s]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FootSample<T> {
    pub x_mm: T,
    pub z_mm: T,
    pub contact: bool,
    pub slip: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorSample<T> {
    /// Tip displacement, mm.
    pub displacement_mm: T,
    pub velocity_mm_s: T,
    pub voltage_v: T,
    pub current_a: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t_s: T,
    pub body: BodyState<T>,
    pub feet: [FootSample<T>; 4],
    pub chassis_contact: bool,
    pub actuators: [ActuatorSample<T>; CHANNELS],
}

impl<T> Sample<T> {
    /// No foot and no chassis point touches the ground.
    pub fn airborne(&self) -> bool {
        !self.chassis_contact && self.feet.iter().all(|f| !f.contact)
    }
}

/// Uniformly sampled record of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub gait: GaitName,
    pub frequency_hz: T,
    pub voltage_v: T,
    pub body_length_mm: T,
    pub total_mass_g: T,
    pub gravity_m_s2: T,
    pub settle_s: T,
    pub timestep_s: T,
    pub record_every: usize,
    /// Foot displacement per actuator displacement, per channel.
    pub transmission_ratios: [T; CHANNELS],
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn sample_period_s(&self) -> T {
        self.timestep_s * T::from_usize_lossy(self.record_every)
    }

    pub fn duration_s(&self) -> T {
        self.samples.last().map(|s| s.t_s).unwrap_or_else(T::zero)
    }

    /// Index of the first sample at or after `t_s`.
    pub fn index_at(&self, t_s: T) -> usize {
        self.samples.partition_point(|s| s.t_s < t_s)
    }

    pub fn channel<F: Fn(&ActuatorSample<T>) -> T>(&self, channel: usize, f: F) -> Vec<T> {
        self.samples.iter().map(|s| f(&s.actuators[channel])).collect()
    }

    pub fn sense_record(&self, channel: usize) -> sensing::SenseRecord<T> {
        sensing::SenseRecord {
            t0_s: self.samples.first().map(|s| s.t_s).unwrap_or_else(T::zero),
            dt_s: self.sample_period_s(),
            voltage_v: self.channel(channel, |a| a.voltage_v),
            current_a: self.channel(channel, |a| a.current_a),
        }
    }

    /// Foot displacement relative to the hip along the channel's DOF, mm.
    pub fn foot_offset(&self, channel: usize) -> Vec<T> {
        let r = self.transmission_ratios[channel];
        self.channel(channel, |a| a.displacement_mm * r)
    }
}

/// One semi-implicit Euler step of `m q̈ + b q̇ + k q = α V + F_ext` in SI units.
pub fn actuator_step<T: Scalar>(
    m: &TransmissionModel<T>,
    q_m: T,
    qd_m_s: T,
    voltage_v: T,
    external_force_n: T,
    dt_s: T,
) -> Result<(T, T), Error> {
    if !(dt_s > T::zero()) {
        return Err(Error::domain("timestep must be positive"));
    }
    let force = m.drive_force_per_volt() * voltage_v + external_force_n - m.damping_n_s_m() * qd_m_s - m.k_total_n_m * q_m;
    let qd = qd_m_s + force / m.effective_mass_kg() * dt_s;
    let q = q_m + qd * dt_s;
    if !(q.is_finite() && qd.is_finite()) {
        return Err(Error::Divergence { step: 0, time_s: 0.0, what: format!("{} actuator state", m.dof.name()) });
    }
    Ok((q, qd))
}

/// Compliant contact point with an anchored Coulomb stick spring. SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactInput<T> {
    /// Depth below the ground (positive when penetrating), m.
    pub penetration_m: T,
    pub penetration_rate_m_s: T,
    pub normal_stiffness_n_m: T,
    pub normal_damping_n_s_m: T,
    pub tangential_stiffness_n_m: T,
    pub tangential_damping_n_s_m: T,
    /// Horizontal contact-point position and velocity, m and m/s.
    pub x_m: T,
    pub vx_m_s: T,
    pub mu: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactForce<T> {
    pub normal_n: T,
    pub tangential_n: T,
    pub slipping: bool,
    /// Stick anchor after this evaluation; `None` when airborne.
    pub anchor_m: Option<T>,
}

/// Normal force `max(0, k δ + c δ̇)` and a tangential force from the stick spring,
/// clamped to `µ N` (the anchor then slides so the spring sits on the cone).
pub fn foot_contact_force<T: Scalar>(c: &ContactInput<T>, anchor_m: Option<T>) -> ContactForce<T> {
    if !(c.penetration_m > T::zero()) {
        return ContactForce { normal_n: T::zero(), tangential_n: T::zero(), slipping: false, anchor_m: None };
    }
    let normal = (c.normal_stiffness_n_m * c.penetration_m + c.normal_damping_n_s_m * c.penetration_rate_m_s).max(T::zero());
    let anchor = anchor_m.unwrap_or(c.x_m);
    let stretch = c.x_m - anchor;
    let required = -c.tangential_stiffness_n_m * stretch - c.tangential_damping_n_s_m * c.vx_m_s;
    let limit = c.mu * normal;
    if required.abs() <= limit {
        ContactForce { normal_n: normal, tangential_n: required, slipping: false, anchor_m: Some(anchor) }
    } else {
        let f = limit * required.signum();
        // keep the spring on the cone boundary
        let anchor = c.x_m + f / c.tangential_stiffness_n_m;
        ContactForce { normal_n: normal, tangential_n: f, slipping: true, anchor_m: Some(anchor) }
    }
}

#[derive(Clone, Copy, Debug)]
struct DofParams<T> {
    k: T,
    mass: T,
    damping: T,
    force_per_volt: T,
    ratio: T,
    q_mid: T,
}

impl<T: Scalar> DofParams<T> {
    fn new(m: &TransmissionModel<T>, rated_v: T) -> Self {
        let fpv = m.drive_force_per_volt();
        let q_max = fpv * rated_v / m.k_total_n_m;
        Self {
            k: m.k_total_n_m,
            mass: m.effective_mass_kg(),
            damping: m.damping_n_s_m(),
            force_per_volt: fpv,
            ratio: m.transmission_ratio,
            q_mid: q_max * T::lit(0.5),
        }
    }
}

/// Mutable simulation state, stepped explicitly. [`simulate`] drives it.
#[derive(Clone, Debug)]
pub struct Simulator<T> {
    robot: RobotSpec<T>,
    program: GaitProgram<T>,
    dofs: [DofParams<T>; CHANNELS],
    mass_kg: T,
    inertia: T,
    gravity: T,
    dt: T,
    step: usize,
    // SI state
    x: T,
    z: T,
    pitch: T,
    vx: T,
    vz: T,
    omega: T,
    q: [T; CHANNELS],
    qd: [T; CHANNELS],
    foot_anchor: [Option<T>; 4],
    chassis_anchor: [Option<T>; 2],
    last: StepForces<T>,
}

#[derive(Clone, Copy, Debug, Default)]
struct StepForces<T> {
    feet: [FootSample<T>; 4],
    contact: ContactSnapshot<T>,
    chassis_contact: bool,
}

/// Per-foot contact state of the most recent step, SI units.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactSnapshot<T> {
    pub penetration_m: [T; 4],
    pub normal_n: [T; 4],
    pub stiffness_n_m: [T; 4],
}

impl<T: Scalar> Simulator<T> {
    pub fn new(robot: &RobotSpec<T>, program: &GaitProgram<T>, cfg: &SimConfig<T>) -> Result<Self, Error> {
        robot.validate()?;
        cfg.validate()?;
        let rated = robot.actuator.rated_voltage_v;
        gait::validate_gait(program, rated).map_err(|v| {
            Error::domain(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
        })?;
        let dt = cfg.timestep_for(program.frequency_hz);
        let f_max = program.frequency_hz.max(robot.max_natural_frequency());
        let dt_max = T::one() / (T::lit(50.0) * f_max);
        if dt > dt_max * (T::one() + T::lit(1e-9)) {
            return Err(Error::domain(format!("timestep {dt} s exceeds 1/(50 f_max) = {dt_max} s")));
        }

        let mut dofs = [DofParams::new(&robot.legs[0].lift, rated); CHANNELS];
        for leg in Leg::ALL {
            let spec = robot.leg(leg);
            dofs[gait::channel_index(leg, DofKind::Lift)] = DofParams::new(&spec.lift, rated);
            dofs[gait::channel_index(leg, DofKind::Swing)] = DofParams::new(&spec.swing, rated);
        }

        let mm = T::lit(1e-3);
        let body_mass = robot.body.body_mass_g * mm;
        let length = robot.body.body_length_mm * mm;
        let height = robot.leg_rest_length_mm * mm;
        let inertia = body_mass * (length * length + height * height) / T::lit(12.0);

        // actuators start at their static position for the initial drive
        let v0 = gait::synthesize_drive(program, T::zero());
        let mut q = [T::zero(); CHANNELS];
        for c in 0..CHANNELS {
            q[c] = dofs[c].force_per_volt * v0[c] / dofs[c].k;
        }

        let mut sim = Self {
            robot: robot.clone(),
            program: *program,
            dofs,
            mass_kg: robot.total_mass_g() * mm,
            inertia,
            gravity: cfg.gravity_m_s2,
            dt,
            step: 0,
            x: T::zero(),
            z: T::zero(),
            pitch: T::zero(),
            vx: T::zero(),
            vz: T::zero(),
            omega: T::zero(),
            q,
            qd: [T::zero(); CHANNELS],
            foot_anchor: [None; 4],
            chassis_anchor: [None; 2],
            last: StepForces::default(),
        };
        sim.z = match cfg.initial_height_mm {
            Some(h) => h * mm,
            None => sim.resting_clearance(),
        };
        Ok(sim)
    }

    /// Height at which the lowest foot or chassis point just touches the ground.
    fn resting_clearance(&self) -> T {
        let mut lowest = T::zero();
        for leg in Leg::ALL {
            let (_, pz) = self.foot_body(leg);
            lowest = lowest.min(pz);
        }
        -lowest
    }

    pub fn timestep_s(&self) -> T {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time_s(&self) -> T {
        self.dt * T::from_usize_lossy(self.step)
    }

    pub fn body(&self) -> BodyState<T> {
        let k = T::lit(1e3);
        BodyState {
            x_mm: self.x * k,
            z_mm: self.z * k,
            pitch_rad: self.pitch,
            vx_mm_s: self.vx * k,
            vz_mm_s: self.vz * k,
            pitch_rate_rad_s: self.omega,
        }
    }

    /// Foot position in the body frame, m.
    fn foot_body(&self, leg: Leg) -> (T, T) {
        let mm = T::lit(1e-3);
        let spec = self.robot.leg(leg);
        let l = gait::channel_index(leg, DofKind::Lift);
        let s = gait::channel_index(leg, DofKind::Swing);
        let (dl, ds) = (&self.dofs[l], &self.dofs[s]);
        let px = spec.hip_x_mm * mm - ds.ratio * (self.q[s] - ds.q_mid);
        let pz = spec.hip_z_mm * mm - self.robot.leg_rest_length_mm * mm - dl.ratio * (self.q[l] - dl.q_mid);
        (px, pz)
    }

    fn to_world(&self, px: T, pz: T) -> (T, T) {
        let (s, c) = self.pitch.sin_cos();
        (self.x + c * px - s * pz, self.z + s * px + c * pz)
    }

    /// World velocity of a body-frame point moving at `(vpx, vpz)` in the body frame.
    fn world_velocity(&self, px: T, pz: T, vpx: T, vpz: T) -> (T, T) {
        let (s, c) = self.pitch.sin_cos();
        let (rx, rz) = (c * px - s * pz, s * px + c * pz);
        (self.vx - self.omega * rz + c * vpx - s * vpz, self.vz + self.omega * rx + s * vpx + c * vpz)
    }

    /// Leg extension above the fully retracted position, mm.
    fn leg_height_mm(&self, leg: Leg) -> T {
        let l = gait::channel_index(leg, DofKind::Lift);
        self.dofs[l].ratio * self.q[l] * T::lit(1e3)
    }

    fn foot_normal_damping(&self, k: T, ratio: T) -> T {
        T::lit(2.0) * ratio * (k * self.mass_kg / T::lit(4.0)).sqrt()
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), Error> {
        let t = self.time_s();
        let voltages = gait::synthesize_drive(&self.program, t);
        let contact = self.robot.contact;
        let mu = self.robot.friction_coefficient;
        let (sin_p, cos_p) = self.pitch.sin_cos();

        let mut fx = T::zero();
        let mut fz = -self.mass_kg * self.gravity;
        let mut torque = T::zero();
        let mut gen = [T::zero(); CHANNELS];
        let mut rec = StepForces::default();

        for leg in Leg::ALL {
            let i = leg.index();
            let l = gait::channel_index(leg, DofKind::Lift);
            let s = gait::channel_index(leg, DofKind::Swing);
            let (px, pz) = self.foot_body(leg);
            let (wx, wz) = self.to_world(px, pz);
            let vpx = -self.dofs[s].ratio * self.qd[s];
            let vpz = -self.dofs[l].ratio * self.qd[l];
            let (vx, vz) = self.world_velocity(px, pz, vpx, vpz);

            let k_v = self.robot.leg(leg).vertical_stiffness.at_clamped(self.leg_height_mm(leg)) * contact.serial_compliance;
            let k_t = k_v * contact.tangential_stiffness_ratio;
            let input = ContactInput {
                penetration_m: -wz,
                penetration_rate_m_s: -vz,
                normal_stiffness_n_m: k_v,
                normal_damping_n_s_m: self.foot_normal_damping(k_v, contact.foot_damping_ratio),
                tangential_stiffness_n_m: k_t,
                tangential_damping_n_s_m: self.foot_normal_damping(k_t, contact.foot_damping_ratio),
                x_m: wx,
                vx_m_s: vx,
                mu,
            };
            let cf = foot_contact_force(&input, self.foot_anchor[i]);
            self.foot_anchor[i] = cf.anchor_m;

            let in_contact = cf.anchor_m.is_some();
            if in_contact {
                let (n, ft) = (cf.normal_n, cf.tangential_n);
                fx = fx + ft;
                fz = fz + n;
                // force applied at the ground point under the foot
                let (rx, rz) = (wx - self.x, -self.z);
                torque = torque + rx * n - rz * ft;
                // virtual work onto the actuators: ∂p/∂q_lift = R(0, -r), ∂p/∂q_swing = R(-r, 0)
                let (rl, rs) = (self.dofs[l].ratio, self.dofs[s].ratio);
                gen[l] = gen[l] + rl * (sin_p * ft - cos_p * n);
                gen[s] = gen[s] - rs * (cos_p * ft + sin_p * n);
            }
            rec.feet[i] = FootSample { x_mm: wx * T::lit(1e3), z_mm: wz * T::lit(1e3), contact: in_contact, slip: cf.slipping };
            rec.contact.penetration_m[i] = (-wz).max(T::zero());
            rec.contact.normal_n[i] = cf.normal_n;
            rec.contact.stiffness_n_m[i] = k_v;
        }

        let half_len = self.robot.body.body_length_mm * T::lit(0.5e-3);
        let kb = contact.chassis_stiffness_n_m;
        let kbt = kb * contact.tangential_stiffness_ratio;
        let cb = T::lit(2.0) * contact.chassis_damping_ratio * (kb * self.mass_kg / T::lit(2.0)).sqrt();
        let cbt = T::lit(2.0) * contact.chassis_damping_ratio * (kbt * self.mass_kg / T::lit(2.0)).sqrt();
        for (j, px) in [half_len, -half_len].into_iter().enumerate() {
            let (wx, wz) = self.to_world(px, T::zero());
            let (vx, vz) = self.world_velocity(px, T::zero(), T::zero(), T::zero());
            let input = ContactInput {
                penetration_m: -wz,
                penetration_rate_m_s: -vz,
                normal_stiffness_n_m: kb,
                normal_damping_n_s_m: cb,
                tangential_stiffness_n_m: kbt,
                tangential_damping_n_s_m: cbt,
                x_m: wx,
                vx_m_s: vx,
                mu,
            };
            let cf = foot_contact_force(&input, self.chassis_anchor[j]);
            self.chassis_anchor[j] = cf.anchor_m;
            if cf.anchor_m.is_some() {
                rec.chassis_contact = true;
                fx = fx + cf.tangential_n;
                fz = fz + cf.normal_n;
                let (rx, rz) = (wx - self.x, -self.z);
                torque = torque + rx * cf.normal_n - rz * cf.tangential_n;
            }
        }

        for c in 0..CHANNELS {
            let d = &self.dofs[c];
            let f = d.force_per_volt * voltages[c] + gen[c] - d.damping * self.qd[c] - d.k * self.q[c];
            self.qd[c] = self.qd[c] + f / d.mass * self.dt;
            self.q[c] = self.q[c] + self.qd[c] * self.dt;
        }
        self.vx = self.vx + fx / self.mass_kg * self.dt;
        self.vz = self.vz + fz / self.mass_kg * self.dt;
        self.omega = self.omega + torque / self.inertia * self.dt;
        self.x = self.x + self.vx * self.dt;
        self.z = self.z + self.vz * self.dt;
        self.pitch = self.pitch + self.omega * self.dt;

        self.last = rec;
        self.step += 1;

        let finite = self.body().is_finite() && self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence { step: self.step, time_s: self.time_s().to_f64_lossy(), what: "non-finite state".into() });
        }
        Ok(())
    }

    /// Total mechanical energy: kinetic, gravitational, actuator springs against the
    /// current drive, and the stored energy of every contact spring, J.
    pub fn energy(&self) -> T {
        let half = T::lit(0.5);
        let mut e = half * self.mass_kg * (self.vx * self.vx + self.vz * self.vz)
            + half * self.inertia * self.omega * self.omega
            + self.mass_kg * self.gravity * self.z;
        let v = gait::synthesize_drive(&self.program, self.time_s());
        for c in 0..CHANNELS {
            let d = &self.dofs[c];
            e = e + half * d.mass * self.qd[c] * self.qd[c] + half * d.k * self.q[c] * self.q[c] - d.force_per_volt * v[c] * self.q[c];
        }
        let contact = self.robot.contact;
        let mm = T::lit(1e-3);
        for leg in Leg::ALL {
            let i = leg.index();
            let (px, pz) = self.foot_body(leg);
            let (wx, wz) = self.to_world(px, pz);
            if let Some(a) = self.foot_anchor[i] {
                if wz < T::zero() {
                    let k = self.robot.leg(leg).vertical_stiffness.at_clamped(self.leg_height_mm(leg)) * contact.serial_compliance;
                    let kt = k * contact.tangential_stiffness_ratio;
                    let s = wx - a;
                    e = e + half * k * wz * wz + half * kt * s * s;
                }
            }
        }
        let half_len = self.robot.body.body_length_mm * half * mm;
        let kb = contact.chassis_stiffness_n_m;
        for (j, px) in [half_len, -half_len].into_iter().enumerate() {
            let (wx, wz) = self.to_world(px, T::zero());
            if let Some(a) = self.chassis_anchor[j] {
                if wz < T::zero() {
                    let s = wx - a;
                    e = e + half * kb * wz * wz + half * kb * contact.tangential_stiffness_ratio * s * s;
                }
            }
        }
        e
    }

    pub fn last_contact(&self) -> ContactSnapshot<T> {
        self.last.contact
    }

    fn sample(&self) -> Sample<T> {
        let k = T::lit(1e3);
        let t = self.time_s();
        // forces of the last step describe the state before it; contact flags are
        // re-derived from the current geometry so the record is self-consistent
        let mut feet = self.last.feet;
        for leg in Leg::ALL {
            let (px, pz) = self.foot_body(leg);
            let (wx, wz) = self.to_world(px, pz);
            let f = &mut feet[leg.index()];
            f.x_mm = wx * k;
            f.z_mm = wz * k;
            f.contact = self.foot_anchor[leg.index()].is_some();
        }
        let voltages = gait::synthesize_drive(&self.program, t);
        let mut actuators = [ActuatorSample::default(); CHANNELS];
        for c in 0..CHANNELS {
            actuators[c] = ActuatorSample {
                displacement_mm: self.q[c] * k,
                velocity_mm_s: self.qd[c] * k,
                voltage_v: voltages[c],
                current_a: T::zero(),
            };
        }
        Sample {
            t_s: t,
            body: self.body(),
            feet,
            chassis_contact: self.chassis_anchor.iter().any(Option::is_some),
            actuators,
        }
    }
}

/// Runs one simulation and records a trajectory with drive currents from the
/// electrical forward model.
pub fn simulate<T: Scalar>(robot: &RobotSpec<T>, program: &GaitProgram<T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>, Error> {
    let mut sim = Simulator::new(robot, program, cfg)?;
    let dt = sim.timestep_s();
    let duration = cfg.duration_for(program.frequency_hz);
    let steps = (duration / dt).round().to_usize().ok_or_else(|| Error::domain("invalid duration"))?;
    let every = cfg.record_every_for(dt, program.frequency_hz);
    let mut samples = Vec::with_capacity(steps / every + 2);
    samples.push(sim.sample());
    for n in 1..=steps {
        sim.step()?;
        if n % every == 0 {
            samples.push(sim.sample());
        }
    }

    let mut ratios = [T::one(); CHANNELS];
    for leg in Leg::ALL {
        let spec = robot.leg(leg);
        ratios[gait::channel_index(leg, DofKind::Lift)] = spec.lift.transmission_ratio;
        ratios[gait::channel_index(leg, DofKind::Swing)] = spec.swing.transmission_ratio;
    }
    let mut traj = Trajectory {
        gait: program.gait,
        frequency_hz: program.frequency_hz,
        voltage_v: program.voltage_v,
        body_length_mm: robot.body.body_length_mm,
        total_mass_g: robot.total_mass_g(),
        gravity_m_s2: cfg.gravity_m_s2,
        settle_s: cfg.settle_s,
        timestep_s: dt,
        record_every: every,
        transmission_ratios: ratios,
        samples,
    };
    let period = traj.sample_period_s();
    for c in 0..CHANNELS {
        let v = traj.channel(c, |a| a.voltage_v);
        let qd = traj.channel(c, |a| a.velocity_mm_s);
        let i = sensing::piezo_current(&robot.electrical, &v, &qd, period)?;
        for (s, cur) in traj.samples.iter_mut().zip(i) {
            s.actuators[c].current_a = cur;
        }
    }
    Ok(traj)
}

/// One run of a sweep. Failed runs keep their error instead of aborting the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRun<T> {
    pub run_id: usize,
    pub gait: GaitName,
    pub frequency_hz: T,
    pub repetition: usize,
    pub outcome: Result<RunSummary<T>, Error>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan<T> {
    pub gaits: Vec<GaitName>,
    pub frequencies_hz: Vec<T>,
    pub voltage_v: T,
    pub repetitions: usize,
    pub seed: u64,
    /// Upper bound on the start-height perturbation between repetitions, mm.
    pub height_jitter_mm: T,
}

impl<T: Scalar> SweepPlan<T> {
    pub fn new(gaits: Vec<GaitName>, frequencies_hz: Vec<T>, voltage_v: T, repetitions: usize) -> Self {
        Self { gaits, frequencies_hz, voltage_v, repetitions, seed: 0, height_jitter_mm: T::lit(0.05) }
    }

    pub fn runs(&self) -> usize {
        self.gaits.len() * self.frequencies_hz.len() * self.repetitions
    }
}

/// Start-height perturbation of one run; repetition 0 is unperturbed.
fn jitter<T: Scalar>(seed: u64, run_id: usize, repetition: usize, max_mm: T) -> T {
    if repetition == 0 {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (run_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    max_mm * T::lit(rng.gen::<f64>())
}

/// Runs every (gait, frequency, repetition) combination. Results are ordered by
/// run id regardless of execution order; `parallel` is the worker count (0 = all cores).
pub fn sweep<T: Scalar>(
    robot: &RobotSpec<T>,
    lift_swing_phase_lead: T,
    plan: &SweepPlan<T>,
    cfg: &SimConfig<T>,
    parallel: usize,
) -> Result<Vec<SweepRun<T>>, Error> {
    if plan.gaits.is_empty() {
        return Err(Error::Empty("gait list".into()));
    }
    if plan.frequencies_hz.is_empty() {
        return Err(Error::Empty("frequency list".into()));
    }
    if plan.repetitions == 0 {
        return Err(Error::Empty("repetitions".into()));
    }
    let mut jobs = Vec::with_capacity(plan.runs());
    for &g in &plan.gaits {
        for &f in &plan.frequencies_hz {
            for rep in 0..plan.repetitions {
                jobs.push((jobs.len(), g, f, rep));
            }
        }
    }
    let run = |&(id, g, f, rep): &(usize, GaitName, T, usize)| {
        let outcome = GaitProgram::new(g, f, plan.voltage_v).and_then(|mut p| {
            p.lift_swing_phase_lead = lift_swing_phase_lead;
            let mut c = *cfg;
            let base = match cfg.initial_height_mm {
                Some(h) => h,
                None => Simulator::new(robot, &p, cfg)?.body().z_mm,
            };
            c.initial_height_mm = Some(base + jitter(plan.seed, id, rep, plan.height_jitter_mm));
            let traj = simulate(robot, &p, &c)?;
            metrics::summarize(&traj)
        });
        SweepRun { run_id: id, gait: g, frequency_hz: f, repetition: rep, outcome }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut out: Vec<SweepRun<T>> = pool.install(|| jobs.par_iter().map(run).collect());
    out.sort_by_key(|r| r.run_id);
    Ok(out)
}

/// Quasi-static advance per drive cycle for a gait: one swing stroke per stance
/// phase, and trot, bound and custom gaits have two stance phases per cycle.
pub fn quasi_static_stride_mm<T: Scalar>(robot: &RobotSpec<T>, gait: GaitName, voltage_v: T) -> Result<T, Error> {
    let stroke = transmission::quasi_static_leg_displacement(&robot.legs[0].swing, voltage_v, robot.actuator.rated_voltage_v)?;
    Ok(match gait {
        GaitName::Pronk => stroke,
        _ => stroke * T::lit(2.0),
    })
}

/// Lowest natural frequency that shapes a gait: the slowest actuator DOF, or the
/// body bouncing on its stance legs at their softest, whichever is lower. Below a
/// quarter of it the body follows the legs quasi-statically.
pub fn lowest_natural_frequency_hz<T: Scalar>(robot: &RobotSpec<T>, gait: GaitName) -> T {
    let actuator = robot
        .legs
        .iter()
        .flat_map(|l| [transmission::natural_frequency(&l.lift), transmission::natural_frequency(&l.swing)])
        .fold(T::infinity(), T::min);
    let stance = match gait {
        GaitName::Pronk => 4.0,
        _ => 2.0,
    };
    let k_leg = robot
        .legs
        .iter()
        .map(|l| l.vertical_stiffness.k_at_lowest_n_m.min(l.vertical_stiffness.k_at_highest_n_m))
        .fold(T::infinity(), T::min);
    let k = T::lit(stance) * k_leg * robot.contact.serial_compliance;
    let bounce = (k / (robot.total_mass_g() * T::lit(1e-3))).sqrt() / T::tau();
    actuator.min(bounce)
}
