//! Stiffness and position reference estimation from conditioned envelopes.

pub mod biomech;
pub mod correlation;
pub mod imcj;
pub mod position;

pub use biomech::{estimate_torque_elbow90, estimate_torque_straight_arm, BiomechParams, Pivot};
pub use correlation::pearson_correlation;
pub use imcj::{
    estimate_stiffness, estimate_stiffness_multi, fit_imcj, fit_imcj_multi, fit_imcj_pinned_lambda,
    map_stiffness_to_device, CalibrationProfile, ImcjFit, MultiPairSample, TorqueSample,
};
pub use position::{estimate_ecg_bias, estimate_position};

use serde::{Deserialize, Serialize};

use crate::conditioning::ConditionedSample;
use crate::scalar::Scalar;

/// Stiffness and position references for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePair<T> {
    pub t_ms: f64,
    /// Device joint stiffness, N·m/rad.
    pub s_ref: T,
    /// Device joint angle, rad.
    pub theta_ref: T,
    /// IMCJ value after fatigue compensation.
    pub s_imcj: T,
}

/// Builds references from one conditioned sample. `c_fi` multiplies the IMCJ
/// value ahead of the device map; the position path is never compensated.
pub fn reference_pair<T: Scalar>(
    sample: &ConditionedSample<T>,
    profile: &CalibrationProfile<T>,
    c_fi: T,
) -> ReferencePair<T> {
    let e = &sample.envelope;
    let s_imcj = estimate_stiffness(e.biceps, e.triceps, profile) * c_fi;
    ReferencePair {
        t_ms: sample.t_ms,
        s_ref: map_stiffness_to_device(s_imcj, profile),
        theta_ref: estimate_position(e.trapezius, e.pectoralis, profile.theta_range_rad),
        s_imcj,
    }
}
