//! Gravitational joint-torque models used to label calibration trials.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::scalar::Scalar;

/// Segment masses and their moment arms about the chosen pivot.
///
/// Arms are measured from whichever pivot the torque model uses, so a
/// wrist-pivot and an elbow-pivot evaluation take different parameter sets.
/// Upper-arm mass and arm are carried for protocol files but do not enter the
/// wrist or elbow models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiomechParams<T> {
    pub load_kg: T,
    pub l_load_m: T,
    pub forearm_kg: T,
    pub l_forearm_m: T,
    pub hand_kg: T,
    pub l_hand_m: T,
    pub upperarm_kg: T,
    pub l_upperarm_m: T,
    pub g: T,
}

impl<T: Scalar> Default for BiomechParams<T> {
    fn default() -> Self {
        Self {
            load_kg: T::zero(),
            l_load_m: T::lit(0.30),
            forearm_kg: T::lit(1.2),
            l_forearm_m: T::lit(0.15),
            hand_kg: T::lit(0.5),
            l_hand_m: T::lit(0.05),
            upperarm_kg: T::lit(2.0),
            l_upperarm_m: T::lit(0.15),
            g: T::lit(9.81),
        }
    }
}

impl<T: Scalar> BiomechParams<T> {
    pub fn validate(&self) -> Result<()> {
        let masses = [self.load_kg, self.forearm_kg, self.hand_kg, self.upperarm_kg];
        if masses.iter().any(|m| !(*m >= T::zero())) {
            return config_err("segment masses must be non-negative");
        }
        let arms = [self.l_load_m, self.l_forearm_m, self.l_hand_m, self.l_upperarm_m];
        if arms.iter().any(|l| !(*l > T::zero())) {
            return config_err("moment arms must be positive");
        }
        if !(self.g > T::zero()) {
            return config_err("gravity must be positive");
        }
        Ok(())
    }

    pub fn with_load(mut self, load_kg: T) -> Self {
        self.load_kg = load_kg;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pivot {
    Wrist,
    Elbow,
}

/// Elbow flexed at 90 degrees, forearm horizontal: load plus forearm weight.
pub fn estimate_torque_elbow90<T: Scalar>(p: &BiomechParams<T>) -> T {
    p.g * (p.load_kg * p.l_load_m + p.forearm_kg * p.l_forearm_m)
}

/// Arm held straight and forward. About the wrist only the load and hand
/// contribute; about the elbow the forearm is added.
pub fn estimate_torque_straight_arm<T: Scalar>(p: &BiomechParams<T>, pivot: Pivot) -> T {
    let distal = p.load_kg * p.l_load_m + p.hand_kg * p.l_hand_m;
    match pivot {
        Pivot::Wrist => p.g * distal,
        Pivot::Elbow => p.g * (distal + p.forearm_kg * p.l_forearm_m),
    }
}
