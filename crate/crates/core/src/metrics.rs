//! Locomotion performance figures computed from trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, SimConfig, Trajectory};
use crate::error::Error;
use crate::gait::{GaitName, GaitProgram, CHANNELS};
use crate::num::Scalar;
use crate::robot::RobotSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary<T> {
    pub gait: GaitName,
    pub frequency_hz: T,
    pub voltage_v: T,
    pub mean_speed_mm_s: T,
    pub speed_bl_s: T,
    pub stride_length_mm: T,
    /// `None` when the mean speed is not positive.
    pub cot: Option<T>,
    pub aerial_fraction: T,
    pub slip_fraction: T,
}

/// How instantaneous electrical power enters the cost-of-transport average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerConvention {
    /// Negative power is discarded per channel: the drive cannot recover charge.
    #[default]
    Clamped,
    Signed,
}

fn window<T: Scalar>(traj: &Trajectory<T>, settle_s: T) -> Result<usize, Error> {
    let start = traj.index_at(settle_s);
    if traj.samples.len() < start + 2 {
        return Err(Error::Empty(format!("no samples after settle time {settle_s} s")));
    }
    Ok(start)
}

/// Net forward displacement after `settle_s` divided by the window length, mm/s.
pub fn mean_speed<T: Scalar>(traj: &Trajectory<T>, settle_s: T) -> Result<T, Error> {
    let start = window(traj, settle_s)?;
    let (a, b) = (&traj.samples[start], &traj.samples[traj.samples.len() - 1]);
    Ok((b.body.x_mm - a.body.x_mm) / (b.t_s - a.t_s))
}

pub fn effective_stride_length<T: Scalar>(mean_speed_mm_s: T, frequency_hz: T) -> Result<T, Error> {
    if !(frequency_hz > T::zero()) {
        return Err(Error::domain(format!("stride frequency must be positive, got {frequency_hz}")));
    }
    Ok(mean_speed_mm_s / frequency_hz)
}

/// Mean input power per channel over the post-settle window, W.
pub fn channel_power<T: Scalar>(traj: &Trajectory<T>, settle_s: T, convention: PowerConvention) -> Result<[T; CHANNELS], Error> {
    let start = window(traj, settle_s)?;
    let tail = &traj.samples[start..];
    let n = T::from_usize_lossy(tail.len());
    let mut out = [T::zero(); CHANNELS];
    for (c, p) in out.iter_mut().enumerate() {
        let sum: T = tail
            .iter()
            .map(|s| {
                let w = s.actuators[c].current_a * s.actuators[c].voltage_v;
                match convention {
                    PowerConvention::Clamped => w.max(T::zero()),
                    PowerConvention::Signed => w,
                }
            })
            .sum();
        *p = sum / n;
    }
    Ok(out)
}

/// Total mean electrical power over the load `m g v`.
pub fn cost_of_transport_from_power<T: Scalar>(power_w: T, mass_g: T, gravity_m_s2: T, mean_speed_mm_s: T) -> Result<T, Error> {
    if !(mean_speed_mm_s > T::zero()) {
        return Err(Error::UndefinedCot(mean_speed_mm_s.to_f64_lossy()));
    }
    if !(mass_g > T::zero() && gravity_m_s2 > T::zero()) {
        return Err(Error::domain("mass and gravity must be positive"));
    }
    Ok(power_w / (mass_g * T::lit(1e-3) * gravity_m_s2 * mean_speed_mm_s * T::lit(1e-3)))
}

pub fn cost_of_transport<T: Scalar>(
    traj: &Trajectory<T>,
    body_mass_total_g: T,
    gravity_m_s2: T,
    mean_speed_mm_s: T,
    convention: PowerConvention,
) -> Result<T, Error> {
    if !(mean_speed_mm_s > T::zero()) {
        return Err(Error::UndefinedCot(mean_speed_mm_s.to_f64_lossy()));
    }
    let power: T = channel_power(traj, traj.settle_s, convention)?.iter().copied().sum();
    cost_of_transport_from_power(power, body_mass_total_g, gravity_m_s2, mean_speed_mm_s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegStiffnessReport<T> {
    pub vertical_stiffness_n_m: T,
    pub leg_length_mm: T,
    pub mass_g: T,
    pub gravity_m_s2: T,
    pub k_rel: T,
}

/// Dimensionless leg stiffness `k l / (m g)`.
pub fn relative_leg_stiffness<T: Scalar>(k_n_m: T, leg_length_mm: T, mass_g: T, gravity_m_s2: T) -> T {
    k_n_m * leg_length_mm / (mass_g * gravity_m_s2)
}

/// Relative leg stiffness of a robot from its single-value reference stiffness.
pub fn leg_stiffness_report<T: Scalar>(robot: &RobotSpec<T>, gravity_m_s2: T) -> LegStiffnessReport<T> {
    let k = robot.reference.vertical_stiffness_n_m;
    let l = robot.leg_rest_length_mm;
    let m = robot.body.body_mass_g;
    LegStiffnessReport {
        vertical_stiffness_n_m: k,
        leg_length_mm: l,
        mass_g: m,
        gravity_m_s2,
        k_rel: relative_leg_stiffness(k, l, m, gravity_m_s2),
    }
}

/// Fraction of post-settle samples with neither feet nor chassis on the ground.
pub fn aerial_fraction<T: Scalar>(traj: &Trajectory<T>, settle_s: T) -> Result<T, Error> {
    let start = window(traj, settle_s)?;
    let tail = &traj.samples[start..];
    let n = tail.iter().filter(|s| s.airborne()).count();
    Ok(T::from_usize_lossy(n) / T::from_usize_lossy(tail.len()))
}

/// Fraction of post-settle foot contacts that are sliding.
pub fn slip_fraction<T: Scalar>(traj: &Trajectory<T>, settle_s: T) -> Result<T, Error> {
    let start = window(traj, settle_s)?;
    let (mut contacts, mut slips) = (0usize, 0usize);
    for s in &traj.samples[start..] {
        for f in &s.feet {
            if f.contact {
                contacts += 1;
                slips += usize::from(f.slip);
            }
        }
    }
    if contacts == 0 {
        return Ok(T::zero());
    }
    Ok(T::from_usize_lossy(slips) / T::from_usize_lossy(contacts))
}

pub fn summarize_with<T: Scalar>(traj: &Trajectory<T>, convention: PowerConvention) -> Result<RunSummary<T>, Error> {
    let v = mean_speed(traj, traj.settle_s)?;
    let cot = if v > T::zero() {
        Some(cost_of_transport(traj, traj.total_mass_g, traj.gravity_m_s2, v, convention)?)
    } else {
        None
    };
    Ok(RunSummary {
        gait: traj.gait,
        frequency_hz: traj.frequency_hz,
        voltage_v: traj.voltage_v,
        mean_speed_mm_s: v,
        speed_bl_s: v / traj.body_length_mm,
        stride_length_mm: effective_stride_length(v, traj.frequency_hz)?,
        cot,
        aerial_fraction: aerial_fraction(traj, traj.settle_s)?,
        slip_fraction: slip_fraction(traj, traj.settle_s)?,
    })
}

pub fn summarize<T: Scalar>(traj: &Trajectory<T>) -> Result<RunSummary<T>, Error> {
    summarize_with(traj, PowerConvention::Clamped)
}

/// Repetitions of one (gait, frequency) condition, averaged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub gait: GaitName,
    pub frequency_hz: T,
    pub runs: usize,
    pub failed: usize,
    pub mean_speed_mm_s: T,
    pub speed_std_mm_s: T,
    pub stride_length_mm: T,
    /// Mean over runs with a defined cost of transport.
    pub cot: Option<T>,
}

/// Groups sweep runs by (gait, frequency) in first-seen order and averages the
/// successful repetitions. Conditions where every run failed are omitted.
pub fn aggregate_sweep<T: Scalar>(runs: &[dynamics::SweepRun<T>]) -> Vec<SweepPoint<T>> {
    let mut keys: Vec<(GaitName, T)> = Vec::new();
    for r in runs {
        if !keys.iter().any(|&(g, f)| g == r.gait && f == r.frequency_hz) {
            keys.push((r.gait, r.frequency_hz));
        }
    }
    keys.into_iter()
        .filter_map(|(g, f)| {
            let group: Vec<_> = runs.iter().filter(|r| r.gait == g && r.frequency_hz == f).collect();
            let ok: Vec<&RunSummary<T>> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            if ok.is_empty() {
                return None;
            }
            let n = T::from_usize_lossy(ok.len());
            let mean = ok.iter().map(|s| s.mean_speed_mm_s).sum::<T>() / n;
            let var = ok.iter().map(|s| (s.mean_speed_mm_s - mean).powi(2)).sum::<T>() / n;
            let cots: Vec<T> = ok.iter().filter_map(|s| s.cot).collect();
            let cot = (!cots.is_empty()).then(|| cots.iter().copied().sum::<T>() / T::from_usize_lossy(cots.len()));
            Some(SweepPoint {
                gait: g,
                frequency_hz: f,
                runs: group.len(),
                failed: group.len() - ok.len(),
                mean_speed_mm_s: mean,
                speed_std_mm_s: var.sqrt(),
                stride_length_mm: mean / f,
                cot,
            })
        })
        .collect()
}

/// One run with added mass; divergence is kept per payload.
#[derive(Clone, Debug, PartialEq)]
pub struct PayloadRun<T> {
    pub payload_g: T,
    pub outcome: Result<RunSummary<T>, Error>,
}

pub fn payload_sweep<T: Scalar>(
    robot: &RobotSpec<T>,
    program: &GaitProgram<T>,
    cfg: &SimConfig<T>,
    payloads_g: &[T],
) -> Result<Vec<PayloadRun<T>>, Error> {
    if payloads_g.is_empty() {
        return Err(Error::Empty("payload list".into()));
    }
    if let Some(p) = payloads_g.iter().find(|p| !(**p >= T::zero())) {
        return Err(Error::domain(format!("payload must be non-negative, got {p}")));
    }
    Ok(payloads_g
        .iter()
        .map(|&p| PayloadRun {
            payload_g: p,
            outcome: dynamics::simulate(&robot.with_payload(p), program, cfg).and_then(|t| summarize(&t)),
        })
        .collect())
}
