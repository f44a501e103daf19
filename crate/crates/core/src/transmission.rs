//! Lumped second-order models of the lift and swing transmissions.
//!
//! Each DOF is a mass-spring-damper seen from the actuator tip:
//! `m_eff q̈ + b q̇ + k_total q = F`, with `b = sqrt(k_total m_eff) / Q`. The leg
//! moves `transmission_ratio` times the actuator tip. Amplitudes are peak-to-peak.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::num::Scalar;
use crate::scaling::{ActuatorSpec, FlexureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofKind {
    Lift,
    Swing,
}

impl DofKind {
    pub fn name(self) -> &'static str {
        match self {
            DofKind::Lift => "lift",
            DofKind::Swing => "swing",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionModel<T> {
    pub dof: DofKind,
    /// Actuator-side stiffness, N/m.
    pub k_total_n_m: T,
    /// Actuator-side effective mass, mg.
    pub effective_mass_mg: T,
    pub quality_factor: T,
    /// Leg displacement per actuator tip displacement.
    pub transmission_ratio: T,
    /// Quasi-static leg displacement per volt, µm/V.
    pub quasi_static_gain_um_v: T,
}

impl<T: Scalar> TransmissionModel<T> {
    /// Builds a model from components. The effective mass is back-solved from the
    /// measured resonance, `m_eff = k_total / (2π f_n)²`.
    pub fn from_components(
        dof: DofKind,
        actuator: &ActuatorSpec<T>,
        flexures: &[FlexureSpec<T>],
        geometry: &TransmissionGeometry<T>,
        resonance_hz: T,
        quality_factor: T,
        transmission_ratio: T,
    ) -> Result<Self, Error> {
        let k_total = total_stiffness(actuator, flexures, geometry)?;
        let omega = T::tau() * resonance_hz;
        let m_eff_kg = k_total / (omega * omega);
        let force_n = actuator.blocked_force_mn * T::lit(1e-3);
        let gain_m_v = transmission_ratio * force_n / (k_total * actuator.rated_voltage_v);
        let m = Self {
            dof,
            k_total_n_m: k_total,
            effective_mass_mg: m_eff_kg * T::lit(1e6),
            quality_factor,
            transmission_ratio,
            quasi_static_gain_um_v: gain_m_v * T::lit(1e6),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let checks = [
            ("k_total_n_m", self.k_total_n_m),
            ("effective_mass_mg", self.effective_mass_mg),
            ("quality_factor", self.quality_factor),
            ("transmission_ratio", self.transmission_ratio),
            ("quasi_static_gain_um_v", self.quasi_static_gain_um_v),
        ];
        for (name, v) in checks {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::domain(format!("{} transmission: {name} must be positive, got {v}", self.dof.name())));
            }
        }
        Ok(())
    }

    pub fn effective_mass_kg(&self) -> T {
        self.effective_mass_mg * T::lit(1e-6)
    }

    /// Viscous coefficient `sqrt(k m_eff) / Q`, N·s/m.
    pub fn damping_n_s_m(&self) -> T {
        (self.k_total_n_m * self.effective_mass_kg()).sqrt() / self.quality_factor
    }

    /// Actuator-side drive force per volt, N/V, consistent with the quasi-static gain.
    pub fn drive_force_per_volt(&self) -> T {
        self.k_total_n_m * self.quasi_static_gain_um_v * T::lit(1e-6) / self.transmission_ratio
    }

    /// Leg-side stiffness `k_total / ratio²`, N/m.
    pub fn leg_stiffness_n_m(&self) -> T {
        self.k_total_n_m / (self.transmission_ratio * self.transmission_ratio)
    }
}

/// Moment arm of each flexure about the actuator tip, mm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionGeometry<T> {
    pub moment_arms_mm: Vec<T>,
}

/// Parallel sum of actuator stiffness and reflected flexure stiffnesses, N/m.
pub fn total_stiffness<T: Scalar>(
    actuator: &ActuatorSpec<T>,
    flexures: &[FlexureSpec<T>],
    geometry: &TransmissionGeometry<T>,
) -> Result<T, Error> {
    if flexures.is_empty() {
        return Err(Error::Empty("flexure list".into()));
    }
    if flexures.len() != geometry.moment_arms_mm.len() {
        return Err(Error::Mismatch(format!(
            "{} flexures but {} moment arms",
            flexures.len(),
            geometry.moment_arms_mm.len()
        )));
    }
    Ok(actuator.stiffness_n_m + reflected_flexure_stiffness(flexures, geometry)?)
}

/// `Σ k_rot / a²` converted to N/m.
pub fn reflected_flexure_stiffness<T: Scalar>(
    flexures: &[FlexureSpec<T>],
    geometry: &TransmissionGeometry<T>,
) -> Result<T, Error> {
    let mut sum = T::zero();
    for (f, &arm) in flexures.iter().zip(&geometry.moment_arms_mm) {
        if !(arm.abs() > T::zero()) {
            return Err(Error::domain("flexure moment arm must be non-zero"));
        }
        // N·mm/rad over mm² gives N/mm
        sum = sum + f.stiffness_nmm_rad / (arm * arm) * T::lit(1000.0);
    }
    Ok(sum)
}

/// `(1/2π) sqrt(k_total / m_eff)`.
pub fn natural_frequency<T: Scalar>(m: &TransmissionModel<T>) -> T {
    (m.k_total_n_m / m.effective_mass_kg()).sqrt() / T::tau()
}

/// Leg-height dependent vertical stiffness. Height is measured upward; the leg is
/// stiffest at `leg_height_min_mm` and softest at `leg_height_max_mm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: crate::num::Scalar + Deserialize<'de>"))]
pub struct VerticalStiffnessCurve<T> {
    pub leg_height_min_mm: T,
    pub leg_height_max_mm: T,
    pub k_at_lowest_n_m: T,
    pub k_at_highest_n_m: T,
    #[serde(default = "one")]
    pub shape_exponent: T,
}

fn one<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> VerticalStiffnessCurve<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.leg_height_max_mm > self.leg_height_min_mm) {
            return Err(Error::domain("leg heights must satisfy min < max"));
        }
        if !(self.k_at_lowest_n_m > self.k_at_highest_n_m && self.k_at_highest_n_m > T::zero()) {
            return Err(Error::domain("vertical stiffness must satisfy k_at_lowest > k_at_highest > 0"));
        }
        if !(self.shape_exponent > T::zero()) {
            return Err(Error::domain("shape_exponent must be positive"));
        }
        Ok(())
    }

    /// Stiffness with the height clamped into the characterised range.
    pub fn at_clamped(&self, leg_height_mm: T) -> T {
        let z = leg_height_mm.max(self.leg_height_min_mm).min(self.leg_height_max_mm);
        self.eval(z)
    }

    fn eval(&self, z: T) -> T {
        let u = (z - self.leg_height_min_mm) / (self.leg_height_max_mm - self.leg_height_min_mm);
        self.k_at_lowest_n_m + (self.k_at_highest_n_m - self.k_at_lowest_n_m) * u.powf(self.shape_exponent)
    }
}

pub fn vertical_leg_stiffness<T: Scalar>(curve: &VerticalStiffnessCurve<T>, leg_height_mm: T) -> Result<T, Error> {
    curve.validate()?;
    if !(leg_height_mm >= curve.leg_height_min_mm && leg_height_mm <= curve.leg_height_max_mm) {
        return Err(Error::domain(format!(
            "leg height {leg_height_mm} mm outside [{}, {}]",
            curve.leg_height_min_mm, curve.leg_height_max_mm
        )));
    }
    Ok(curve.eval(leg_height_mm))
}

/// Sampled frequency response, peak-to-peak amplitude in mm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse<T> {
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> FrequencyResponse<T> {
    pub fn validate(&self) -> Result<(), Error> {
        for w in self.points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain("frequencies must be strictly increasing"));
            }
        }
        if self.points.iter().any(|&(_, a)| !(a > T::zero())) {
            return Err(Error::domain("amplitudes must be positive"));
        }
        Ok(())
    }

    pub fn peak(&self) -> Option<(T, T)> {
        self.points.iter().copied().fold(None, |best, p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
    }
}

/// Normalised second-order amplitude `1 / sqrt((1 - r²)² + (r/Q)²)`.
pub fn amplification<T: Scalar>(ratio: T, q: T) -> T {
    let r2 = ratio * ratio;
    let a = T::one() - r2;
    T::one() / (a * a + r2 / (q * q)).sqrt()
}

/// Peak-to-peak leg amplitude on a linear frequency grid for a `0..drive_voltage` drive.
pub fn frequency_response<T: Scalar>(
    m: &TransmissionModel<T>,
    f_lo: T,
    f_hi: T,
    n_points: usize,
    drive_voltage: T,
) -> Result<FrequencyResponse<T>, Error> {
    m.validate()?;
    if !(f_lo > T::zero() && f_hi > f_lo) {
        return Err(Error::domain("frequency range must satisfy 0 < f_lo < f_hi"));
    }
    if n_points < 2 {
        return Err(Error::domain("n_points must be at least 2"));
    }
    let fn_hz = natural_frequency(m);
    let a_qs = m.quasi_static_gain_um_v * drive_voltage * T::lit(1e-3);
    let step = (f_hi - f_lo) / T::from_usize_lossy(n_points - 1);
    let points = (0..n_points)
        .map(|i| {
            let f = if i + 1 == n_points { f_hi } else { f_lo + step * T::from_usize_lossy(i) };
            (f, a_qs * amplification(f / fn_hz, m.quality_factor))
        })
        .collect();
    Ok(FrequencyResponse { points })
}

/// Frequency of the amplitude maximum, `f_n sqrt(1 - 1/(2Q²))`, when it exists.
pub fn peak_frequency<T: Scalar>(fn_hz: T, q: T) -> Option<T> {
    let s = T::one() - T::one() / (T::lit(2.0) * q * q);
    (s > T::zero()).then(|| fn_hz * s.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrderFit<T> {
    pub natural_frequency_hz: T,
    pub quality_factor: T,
    /// Quasi-static (DC) amplitude, same units as the samples.
    pub static_amplitude: T,
}

/// Fits `A(f) = A0 / sqrt((1 - r²)² + (r/Q)²)` to sampled amplitudes.
///
/// `1/A²` is a quadratic in `f²`; the quadratic is solved by weighted linear least
/// squares (relative weighting) and mapped back to `(A0, f_n, Q)`.
pub fn fit_second_order<T: Scalar>(samples: &FrequencyResponse<T>) -> Result<SecondOrderFit<T>, Error> {
    samples.validate().map_err(|e| Error::Fit(e.to_string()))?;
    let pts = &samples.points;
    if pts.len() < 3 {
        return Err(Error::Fit("need at least three samples".into()));
    }
    let (imax, _) = pts
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, ba), (i, &(_, a))| if a > ba { (i, a) } else { (bi, ba) });
    if imax == 0 || imax == pts.len() - 1 {
        return Err(Error::Fit("no interior amplitude peak".into()));
    }
    let (_, a_max) = pts[imax];
    let (_, a_min) = pts.iter().copied().fold((T::zero(), T::infinity()), |m, p| if p.1 < m.1 { p } else { m });
    if a_max <= a_min * (T::one() + T::lit(1e-9)) {
        return Err(Error::Fit("flat response".into()));
    }

    // Scale frequencies to keep the normal equations well conditioned.
    let f_scale = pts[imax].0;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(f, a) in pts {
        let x = (f / f_scale).to_f64_lossy().powi(2);
        let y = 1.0 / a.to_f64_lossy().powi(2);
        let w = 1.0 / (y * y);
        let row = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += w * row[i] * row[j];
            }
            atb[i] += w * row[i] * y;
        }
    }
    let [a0, b, c] = solve3(ata, atb).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    if !(a0 > 0.0 && c > 0.0) {
        return Err(Error::Fit("fitted quadratic is not a resonance".into()));
    }
    let fn2 = (a0 / c).sqrt();
    let inv_q2 = 2.0 + b * fn2 / a0;
    if !(inv_q2 > 0.0) {
        return Err(Error::Fit("fitted damping is not physical".into()));
    }
    Ok(SecondOrderFit {
        natural_frequency_hz: T::lit(fn2.sqrt()) * f_scale,
        quality_factor: T::lit(1.0 / inv_q2.sqrt()),
        static_amplitude: T::lit(1.0 / a0.sqrt()),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Peak-to-peak leg displacement in mm for a `0..voltage` quasi-static drive.
pub fn quasi_static_leg_displacement<T: Scalar>(m: &TransmissionModel<T>, voltage: T, rated_voltage: T) -> Result<T, Error> {
    if !(voltage >= T::zero() && voltage <= rated_voltage) {
        return Err(Error::domain(format!("voltage {voltage} V outside [0, {rated_voltage}] V")));
    }
    Ok(m.quasi_static_gain_um_v * voltage * T::lit(1e-3))
}
