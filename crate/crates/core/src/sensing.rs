//! Self-sensing: actuator drive current from motion, and the inverse estimators.
//!
//! The drive current is the sum of a capacitive, a leakage and a motional term:
//! `i = C dV/dt + V/R + Γ q̇`. Velocities are actuator-tip velocities in mm/s and
//! currents are in amperes.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::Error;
use crate::gait::CHANNELS;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricalModel<T> {
    pub capacitance_nf: T,
    pub resistance_mohm: T,
    /// Motional current per unit actuator velocity, µA per mm/s.
    pub coupling_ua_per_mm_s: T,
}

impl<T: Scalar> ElectricalModel<T> {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("capacitance_nf", self.capacitance_nf),
            ("resistance_mohm", self.resistance_mohm),
            ("coupling_ua_per_mm_s", self.coupling_ua_per_mm_s),
        ] {
            if !(v > T::zero()) {
                return Err(Error::domain(format!("electrical model: {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn capacitance_f(&self) -> T {
        self.capacitance_nf * T::lit(1e-9)
    }

    fn conductance_s(&self) -> T {
        T::one() / (self.resistance_mohm * T::lit(1e6))
    }

    /// A per (mm/s)
    fn coupling_a(&self) -> T {
        self.coupling_ua_per_mm_s * T::lit(1e-6)
    }

    /// Coupling implied by a force-per-volt coefficient, scaled by `factor`.
    /// An actuator with `F = α V` has motional current `α q̇`.
    pub fn coupling_from_force_per_volt(force_per_volt_n_v: T, factor: T) -> T {
        // A·s/m -> µA per mm/s
        force_per_volt_n_v * factor * T::lit(1e3)
    }
}

/// Uniformly sampled voltage and current of one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseRecord<T> {
    pub t0_s: T,
    pub dt_s: T,
    pub voltage_v: Vec<T>,
    pub current_a: Vec<T>,
}

impl<T: Scalar> SenseRecord<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.dt_s > T::zero()) {
            return Err(Error::domain("sample step must be positive"));
        }
        if self.voltage_v.len() != self.current_a.len() {
            return Err(Error::Mismatch(format!(
                "{} voltage samples vs {} current samples",
                self.voltage_v.len(),
                self.current_a.len()
            )));
        }
        Ok(())
    }

    pub fn time(&self, i: usize) -> T {
        self.t0_s + self.dt_s * T::from_usize_lossy(i)
    }
}

/// Central differences in the interior, one-sided at the ends.
pub fn derivative<T: Scalar>(x: &[T], dt: T) -> Vec<T> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (x[1] - x[0]) / dt
                } else if i == n - 1 {
                    (x[n - 1] - x[n - 2]) / dt
                } else {
                    (x[i + 1] - x[i - 1]) / (T::lit(2.0) * dt)
                }
            })
            .collect(),
    }
}

pub fn piezo_current<T: Scalar>(e: &ElectricalModel<T>, voltage_v: &[T], velocity_mm_s: &[T], dt_s: T) -> Result<Vec<T>, Error> {
    if voltage_v.len() != velocity_mm_s.len() {
        return Err(Error::Mismatch(format!("{} voltage samples vs {} velocity samples", voltage_v.len(), velocity_mm_s.len())));
    }
    if !(dt_s > T::zero()) {
        return Err(Error::domain("sample step must be positive"));
    }
    let dv = derivative(voltage_v, dt_s);
    let (c, g, gamma) = (e.capacitance_f(), e.conductance_s(), e.coupling_a());
    Ok(voltage_v
        .iter()
        .zip(&dv)
        .zip(velocity_mm_s)
        .map(|((&v, &dvdt), &qd)| c * dvdt + g * v + gamma * qd)
        .collect())
}

/// Inverts [`piezo_current`]: `q̇ = (i - C dV/dt - V/R) / Γ`, in mm/s.
pub fn estimate_velocity<T: Scalar>(e: &ElectricalModel<T>, rec: &SenseRecord<T>) -> Result<Vec<T>, Error> {
    rec.validate()?;
    if !(e.coupling_ua_per_mm_s.abs() > T::zero()) {
        return Err(Error::domain("motional coupling is zero; velocity is unobservable"));
    }
    let dv = derivative(&rec.voltage_v, rec.dt_s);
    let (c, g, gamma) = (e.capacitance_f(), e.conductance_s(), e.coupling_a());
    Ok(rec
        .voltage_v
        .iter()
        .zip(&dv)
        .zip(&rec.current_a)
        .map(|((&v, &dvdt), &i)| (i - c * dvdt - g * v) / gamma)
        .collect())
}

/// Default high-pass corner for a given drive frequency.
pub fn default_corner_hz<T: Scalar>(drive_frequency_hz: T) -> T {
    drive_frequency_hz / T::lit(16.0)
}

/// Leaky trapezoidal integration of actuator velocity, scaled to the foot.
///
/// Discretises `1 / (s + ω_c)` with the bilinear transform, so a zero corner is
/// plain trapezoidal integration. Output is in mm at the foot when the velocity
/// is in mm/s at the actuator tip.
pub fn estimate_position<T: Scalar>(velocity_mm_s: &[T], dt_s: T, corner_hz: T, transmission_ratio: T) -> Vec<T> {
    let wc = T::tau() * corner_hz.max(T::zero());
    let half = dt_s * T::lit(0.5);
    let a = (T::one() - wc * half) / (T::one() + wc * half);
    let b = half / (T::one() + wc * half);
    let mut y = T::zero();
    let mut out = Vec::with_capacity(velocity_mm_s.len());
    let mut prev = velocity_mm_s.first().copied().unwrap_or_else(T::zero);
    for (i, &v) in velocity_mm_s.iter().enumerate() {
        if i > 0 {
            y = a * y + b * (v + prev);
        }
        prev = v;
        out.push(y * transmission_ratio);
    }
    out
}

/// Root-mean-square error normalised by the range of `truth`, after removing the
/// mean of each trace (position estimates carry no absolute offset).
pub fn nrmse<T: Scalar>(estimate: &[T], truth: &[T]) -> Result<T, Error> {
    if estimate.len() != truth.len() {
        return Err(Error::Mismatch(format!("{} estimates vs {} truth samples", estimate.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::Empty("nrmse input".into()));
    }
    let n = T::from_usize_lossy(truth.len());
    let me = estimate.iter().copied().sum::<T>() / n;
    let mt = truth.iter().copied().sum::<T>() / n;
    let (lo, hi) = truth.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if !(range > T::zero()) {
        return Err(Error::domain("truth trace has zero range"));
    }
    let mse = estimate
        .iter()
        .zip(truth)
        .map(|(&e, &t)| {
            let d = (e - me) - (t - mt);
            d * d
        })
        .sum::<T>()
        / n;
    Ok(mse.sqrt() / range)
}

/// Root-mean-square of a series.
pub fn rms<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    (x.iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(x.len())).sqrt()
}

/// Foot offsets recovered from a run's current records, next to the simulated truth.
#[derive(Clone, Debug, PartialEq)]
pub struct FootReconstruction<T> {
    /// Index of the first sample scored.
    pub first_sample: usize,
    pub truth_mm: Vec<Vec<T>>,
    pub estimate_mm: Vec<Vec<T>>,
    pub nrmse: Vec<T>,
}

impl<T: Scalar> FootReconstruction<T> {
    pub fn worst_nrmse(&self) -> T {
        self.nrmse.iter().copied().fold(T::zero(), T::max)
    }
}

/// Reconstructs every channel's foot offset from its voltage and current record
/// and scores it against the trajectory after `settle_s`.
pub fn reconstruct_feet<T: Scalar>(
    traj: &Trajectory<T>,
    e: &ElectricalModel<T>,
    corner_hz: T,
    settle_s: T,
) -> Result<FootReconstruction<T>, Error> {
    let first = traj.index_at(settle_s);
    if first + 2 > traj.samples.len() {
        return Err(Error::domain("no samples after the settle time"));
    }
    let mut out = FootReconstruction { first_sample: first, truth_mm: vec![], estimate_mm: vec![], nrmse: vec![] };
    for c in 0..CHANNELS {
        let rec = traj.sense_record(c);
        let qd = estimate_velocity(e, &rec)?;
        let est = estimate_position(&qd, rec.dt_s, corner_hz, traj.transmission_ratios[c]);
        let truth = traj.foot_offset(c);
        out.nrmse.push(nrmse(&est[first..], &truth[first..])?);
        out.truth_mm.push(truth[first..].to_vec());
        out.estimate_mm.push(est[first..].to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn model() -> ElectricalModel<f64> {
        ElectricalModel { capacitance_nf: 0.5, resistance_mohm: 100.0, coupling_ua_per_mm_s: 1.2 }
    }

    #[test]
    fn constant_voltage_is_pure_leakage() {
        let i = piezo_current(&model(), &[150.0; 10], &[0.0; 10], 1e-4).unwrap();
        for x in i {
            assert!((x - 150.0 / 100e6).abs() < 1e-18);
        }
    }

    #[test]
    fn capacitive_amplitude() {
        let (f, amp, dt) = (160.0, 100.0, 1e-6);
        let n = (2.0 / f / dt) as usize;
        let v: Vec<f64> = (0..n).map(|k| amp * (TAU * f * k as f64 * dt).sin()).collect();
        let e = ElectricalModel { resistance_mohm: 1e30, ..model() };
        let i = piezo_current(&e, &v, &vec![0.0; n], dt).unwrap();
        let peak = i[1..n - 1].iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        // analytic derivative oracle
        let expected = TAU * f * 0.5e-9 * amp;
        assert!((peak / expected - 1.0).abs() < 1e-4, "{peak} vs {expected}");
    }

    #[test]
    fn pure_motional_current() {
        let i = piezo_current(&model(), &[0.0; 3], &[1.0; 3], 1e-4).unwrap();
        assert!((i[1] - 1.2e-6).abs() < 1e-18);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(matches!(piezo_current(&model(), &[0.0; 3], &[1.0; 4], 1e-4), Err(Error::Mismatch(_))));
        let rec = SenseRecord { t0_s: 0.0, dt_s: 1e-4, voltage_v: vec![0.0; 3], current_a: vec![0.0; 2] };
        assert!(estimate_velocity(&model(), &rec).is_err());
    }

    #[test]
    fn zero_record_zero_velocity() {
        let rec = SenseRecord { t0_s: 0.0, dt_s: 1e-4, voltage_v: vec![0.0; 5], current_a: vec![0.0; 5] };
        assert!(estimate_velocity(&model(), &rec).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_coupling_errors() {
        let e = ElectricalModel { coupling_ua_per_mm_s: 0.0, ..model() };
        let rec = SenseRecord { t0_s: 0.0, dt_s: 1e-4, voltage_v: vec![1.0; 5], current_a: vec![0.0; 5] };
        assert!(matches!(estimate_velocity(&e, &rec), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_velocity_integrates_to_ramp() {
        let dt = 1e-4;
        let x = estimate_position(&[3.0f64; 1001], dt, 0.0, 1.0);
        assert!((x[1000] - 3.0 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_amplitude_with_corner() {
        let (f, vamp, dt) = (160.0, 50.0, 1e-5);
        let n = (0.5 / dt) as usize;
        let v: Vec<f64> = (0..n).map(|k| vamp * (TAU * f * k as f64 * dt).cos()).collect();
        let x = estimate_position(&v, dt, 10.0, 1.0);
        let tail = &x[n / 2..];
        let amp = tail.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
        let expected = vamp / (TAU * f);
        assert!((amp / expected - 1.0).abs() < 0.01, "{amp} vs {expected}");
    }

    #[test]
    fn periodic_velocity_does_not_drift() {
        let (f, dt) = (100.0, 5e-4);
        let cycles = 10_000;
        let n = (cycles as f64 / f / dt) as usize;
        let v: Vec<f64> = (0..n).map(|k| (TAU * f * k as f64 * dt).sin() + 0.3 * (2.0 * TAU * f * k as f64 * dt).cos()).collect();
        let x = estimate_position(&v, dt, f / 16.0, 1.0);
        let bound = 2.0 / (TAU * f);
        assert!(x.iter().all(|p| p.abs() < bound));
    }

    proptest! {
        #[test]
        fn forward_inverse_identity(
            seed in proptest::collection::vec(-1.0f64..1.0, 16),
            c in 0.05f64..5.0,
            gamma in 0.1f64..5.0,
        ) {
            let e = ElectricalModel { capacitance_nf: c, resistance_mohm: 80.0, coupling_ua_per_mm_s: gamma };
            let dt = 2e-5;
            let n = 400;
            let v: Vec<f64> = (0..n).map(|k| 100.0 * (1.0 + (seed[k % 16] * 0.3 + k as f64 * 0.05).sin())).collect();
            let qd: Vec<f64> = (0..n).map(|k| 40.0 * (seed[(k + 3) % 16] + (k as f64 * 0.07).cos())).collect();
            let i = piezo_current(&e, &v, &qd, dt).unwrap();
            let rec = SenseRecord { t0_s: 0.0, dt_s: dt, voltage_v: v.clone(), current_a: i.clone() };
            let est = estimate_velocity(&e, &rec).unwrap();
            for k in 1..n - 1 {
                prop_assert!((est[k] - qd[k]).abs() <= 1e-9 * qd[k].abs().max(1.0));
            }
            let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
            let q2: Vec<f64> = qd.iter().map(|x| 2.0 * x).collect();
            let i2 = piezo_current(&e, &v2, &q2, dt).unwrap();
            for k in 0..n {
                prop_assert!((i2[k] - 2.0 * i[k]).abs() <= 1e-12 * i[k].abs().max(1e-9));
            }
        }
    }
}
