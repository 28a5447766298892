//! Simulation core for an sEMG-driven tele-impedance prosthetic hand.
//!
//! Raw four-channel sEMG is conditioned into normalized envelopes, turned
//! into stiffness and position references, compensated for fatigue, mapped
//! through an antagonistic variable-stiffness actuator and applied to a
//! quasi-static finger that grasps virtual objects.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// NaN-rejecting range checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod channel;
pub mod conditioning;
pub mod error;
pub mod estimation;
pub mod fatigue;
pub mod plant;
pub mod regression;
pub mod scalar;
pub mod session;
pub mod synth;
pub mod vsa;

pub use channel::{ChannelId, ChannelMap};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SemgFrame = conditioning::SemgFrame<f64>;
pub type ConditionedSample = conditioning::ConditionedSample<f64>;
pub type Conditioner = conditioning::Conditioner<f64>;
pub type BandpassFilter = conditioning::BandpassFilter<f64>;
pub type TorqueSample = estimation::TorqueSample<f64>;
pub type ImcjFit = estimation::ImcjFit<f64>;
pub type CalibrationProfile = estimation::CalibrationProfile<f64>;
pub type BiomechParams = estimation::BiomechParams<f64>;
pub type ReferencePair = estimation::ReferencePair<f64>;
pub type FatigueModel = fatigue::FatigueModel<f64>;
pub type FatigueState = fatigue::FatigueState<f64>;
pub type VsaParams = vsa::VsaParams<f64>;
pub type MotorCommand = vsa::MotorCommand<f64>;
pub type PdGains = vsa::PdGains<f64>;
pub type MotorModel = vsa::MotorModel<f64>;
pub type FingerModel = plant::FingerModel<f64>;
pub type ObjectModel = plant::ObjectModel<f64>;
pub type PlantConfig = plant::PlantConfig<f64>;
pub type PlantState = plant::PlantState<f64>;
pub type CharacterizationResult = plant::CharacterizationResult<f64>;
pub type SessionConfig = session::SessionConfig<f64>;
pub type Session = session::Session<f64>;
pub type Telemetry = session::Telemetry<f64>;
pub type GraspTrial = session::GraspTrial<f64>;
