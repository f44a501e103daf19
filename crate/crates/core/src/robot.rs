//! Parametric robot description shared by the scaling report and the simulator.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gait::Leg;
use crate::num::Scalar;
use crate::scaling::{ActuatorSpec, BodyPlan, FlexureSpec};
use crate::sensing::ElectricalModel;
use crate::transmission::{self, TransmissionGeometry, TransmissionModel, VerticalStiffnessCurve};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: crate::num::Scalar + Deserialize<'de>"))]
pub struct LegSpec<T> {
    pub lift: TransmissionModel<T>,
    pub swing: TransmissionModel<T>,
    pub vertical_stiffness: VerticalStiffnessCurve<T>,
    /// Hip position in the body frame: forward, lateral, and height above the chassis underside.
    pub hip_x_mm: T,
    pub hip_y_mm: T,
    pub hip_z_mm: T,
}

/// Ground contact parameters other than the friction coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams<T> {
    /// Normal damping of each foot as a fraction of critical (against a quarter of the body mass).
    pub foot_damping_ratio: T,
    /// Tangential foot stiffness relative to the vertical leg stiffness.
    pub tangential_stiffness_ratio: T,
    /// Normal stiffness of each of the two chassis contact points, N/m.
    pub chassis_stiffness_n_m: T,
    pub chassis_damping_ratio: T,
    /// Serial compliance in the lift path; 1 is rigid, smaller values soften the loaded leg.
    pub serial_compliance: T,
}

impl<T: Scalar> Default for ContactParams<T> {
    fn default() -> Self {
        Self {
            foot_damping_ratio: T::lit(0.2),
            tangential_stiffness_ratio: T::one(),
            chassis_stiffness_n_m: T::lit(500.0),
            chassis_damping_ratio: T::lit(0.5),
            serial_compliance: T::one(),
        }
    }
}

/// Measured reference values carried along for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceData<T> {
    /// Single-value vertical stiffness used for relative leg stiffness, N/m.
    pub vertical_stiffness_n_m: T,
    #[serde(default)]
    pub stride_frequency_hz: Option<T>,
    #[serde(default)]
    pub stride_length_mm: Option<T>,
    #[serde(default)]
    pub speed_mm_s: Option<T>,
    #[serde(default)]
    pub min_cot: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: crate::num::Scalar + Deserialize<'de>"))]
pub struct RobotSpec<T> {
    pub name: String,
    pub body: BodyPlan<T>,
    pub actuator: ActuatorSpec<T>,
    pub flexures: Vec<FlexureSpec<T>>,
    pub geometry: TransmissionGeometry<T>,
    /// FL, FR, RL, RR.
    pub legs: [LegSpec<T>; 4],
    pub electrical: ElectricalModel<T>,
    pub leg_rest_length_mm: T,
    pub friction_coefficient: T,
    #[serde(default)]
    pub payload_g: T,
    pub contact: ContactParams<T>,
    pub reference: ReferenceData<T>,
}

impl<T: Scalar> RobotSpec<T> {
    pub fn validate(&self) -> Result<(), Error> {
        self.body.validate()?;
        self.actuator.validate()?;
        for f in &self.flexures {
            f.validate()?;
        }
        self.electrical.validate()?;
        if !(self.friction_coefficient > T::zero()) {
            return Err(Error::domain("friction_coefficient must be positive"));
        }
        if !(self.leg_rest_length_mm > T::zero()) {
            return Err(Error::domain("leg_rest_length_mm must be positive"));
        }
        if !(self.payload_g >= T::zero()) {
            return Err(Error::domain("payload_g must be non-negative"));
        }
        let c = &self.contact;
        for (name, v) in [
            ("tangential_stiffness_ratio", c.tangential_stiffness_ratio),
            ("chassis_stiffness_n_m", c.chassis_stiffness_n_m),
            ("serial_compliance", c.serial_compliance),
        ] {
            if !(v > T::zero()) {
                return Err(Error::domain(format!("contact.{name} must be positive")));
            }
        }
        if !(c.foot_damping_ratio >= T::zero() && c.chassis_damping_ratio >= T::zero()) {
            return Err(Error::domain("contact damping ratios must be non-negative"));
        }
        if c.serial_compliance > T::one() {
            return Err(Error::domain("contact.serial_compliance must not exceed 1"));
        }
        for leg in &self.legs {
            leg.lift.validate()?;
            leg.swing.validate()?;
            leg.vertical_stiffness.validate()?;
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (&self.legs[i], &self.legs[j]);
                if a.hip_x_mm == b.hip_x_mm && a.hip_y_mm == b.hip_y_mm && a.hip_z_mm == b.hip_z_mm {
                    return Err(Error::domain(format!(
                        "legs {} and {} share a hip position",
                        Leg::ALL[i].label(),
                        Leg::ALL[j].label()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn leg(&self, leg: Leg) -> &LegSpec<T> {
        &self.legs[leg.index()]
    }

    /// Body plus payload, g.
    pub fn total_mass_g(&self) -> T {
        self.body.body_mass_g + self.payload_g
    }

    pub fn with_payload(&self, payload_g: T) -> Self {
        let mut r = self.clone();
        r.payload_g = payload_g;
        r
    }

    pub fn with_friction(&self, mu: T) -> Self {
        let mut r = self.clone();
        r.friction_coefficient = mu;
        r
    }

    /// Reflected flexure stiffness at the actuator tip, N/m.
    pub fn reflected_flexure_stiffness(&self) -> Result<T, Error> {
        if self.flexures.is_empty() {
            return Ok(T::zero());
        }
        transmission::reflected_flexure_stiffness(&self.flexures, &self.geometry)
    }

    /// Highest transmission resonance over all legs, Hz.
    pub fn max_natural_frequency(&self) -> T {
        self.legs
            .iter()
            .flat_map(|l| [transmission::natural_frequency(&l.lift), transmission::natural_frequency(&l.swing)])
            .fold(T::zero(), T::max)
    }
}
