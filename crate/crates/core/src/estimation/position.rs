use crate::channel::ChannelId;
use crate::conditioning::ConditionedSample;
use crate::error::{Error, Result};
use crate::scalar::{clamp_unit, Scalar};

/// Proportional position reference from the differential of the closing
/// (trapezius) and opening (pectoralis) envelopes.
///
/// Inputs are expected already normalized against the fractional MVC used for
/// position channels.
pub fn estimate_position<T: Scalar>(u_trap: T, u_pect: T, theta_range: [T; 2]) -> T {
    let drive = clamp_unit(clamp_unit(u_trap) - clamp_unit(u_pect));
    theta_range[0] + (theta_range[1] - theta_range[0]) * drive
}

/// Largest envelope seen on `channel` during a rest recording. Subtracting it
/// as a bias suppresses ECG cross-talk at rest.
pub fn estimate_ecg_bias<T: Scalar>(rest: &[ConditionedSample<T>], channel: ChannelId) -> Result<T> {
    rest.iter()
        .map(|s| s.envelope[channel])
        .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or_else(|| Error::InsufficientData("rest recording is empty".into()))
}
