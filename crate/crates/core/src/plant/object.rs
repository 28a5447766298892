use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Sponge,
    #[serde(rename = "egg")]
    RawEgg,
    RigidBlock,
    Free,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [
        ObjectKind::Sponge,
        ObjectKind::RawEgg,
        ObjectKind::RigidBlock,
        ObjectKind::Free,
    ];

    /// Scenario name on the wire and the command line.
    pub const fn name(self) -> &'static str {
        match self {
            ObjectKind::Sponge => "sponge",
            ObjectKind::RawEgg => "egg",
            ObjectKind::RigidBlock => "rigid_block",
            ObjectKind::Free => "free",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown scenario '{s}' (expected sponge, egg, rigid_block or free)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspStatus {
    #[default]
    None,
    Holding,
    Crushed,
    Slipped,
}

impl GraspStatus {
    pub const fn name(self) -> &'static str {
        match self {
            GraspStatus::None => "none",
            GraspStatus::Holding => "holding",
            GraspStatus::Crushed => "crushed",
            GraspStatus::Slipped => "slipped",
        }
    }
}

impl fmt::Display for GraspStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A virtual object meeting the finger at `contact_angle_rad`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectModel<T> {
    pub kind: ObjectKind,
    /// N/mm.
    pub surface_stiffness: T,
    /// Fingertip force that breaks the object, N. `None` never breaks.
    pub break_force: Option<T>,
    /// Minimum grip force that keeps a lifted object in hand, N.
    pub slip_force: T,
    pub contact_angle_rad: T,
}

impl<T: Scalar> ObjectModel<T> {
    pub fn sponge() -> Self {
        Self {
            kind: ObjectKind::Sponge,
            surface_stiffness: T::lit(0.05),
            break_force: None,
            slip_force: T::lit(0.3),
            contact_angle_rad: T::lit(0.5),
        }
    }

    pub fn egg() -> Self {
        Self {
            kind: ObjectKind::RawEgg,
            surface_stiffness: T::lit(5.0),
            break_force: Some(T::lit(5.0)),
            slip_force: T::lit(1.0),
            contact_angle_rad: T::lit(1.1),
        }
    }

    pub fn rigid_block() -> Self {
        Self {
            kind: ObjectKind::RigidBlock,
            surface_stiffness: T::lit(100.0),
            break_force: None,
            slip_force: T::lit(2.0),
            contact_angle_rad: T::lit(0.6),
        }
    }

    pub fn free() -> Self {
        Self {
            kind: ObjectKind::Free,
            surface_stiffness: T::zero(),
            break_force: None,
            slip_force: T::zero(),
            contact_angle_rad: T::zero(),
        }
    }

    pub fn preset(kind: ObjectKind) -> Self {
        match kind {
            ObjectKind::Sponge => Self::sponge(),
            ObjectKind::RawEgg => Self::egg(),
            ObjectKind::RigidBlock => Self::rigid_block(),
            ObjectKind::Free => Self::free(),
        }
    }

    pub fn is_free(&self) -> bool {
        self.kind == ObjectKind::Free
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_free() {
            return Ok(());
        }
        if !(self.surface_stiffness > T::zero()) {
            return config_err("surface_stiffness must be positive");
        }
        if self.break_force.is_some_and(|b| !(b > T::zero())) {
            return config_err("break_force must be positive");
        }
        if !(self.slip_force >= T::zero()) {
            return config_err("slip_force must be non-negative");
        }
        if !self.contact_angle_rad.is_finite() {
            return config_err("contact_angle_rad must be finite");
        }
        Ok(())
    }

    /// Surface stiffness seen at the joint, N·m/rad.
    pub fn joint_contact_stiffness(&self, tip_radius_m: T) -> T {
        self.surface_stiffness * T::lit(1e3) * tip_radius_m * tip_radius_m
    }
}
