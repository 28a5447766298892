//! Co-contraction stiffness index: torque-model regression and the
//! stiffness / device-stiffness maps built from it.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelMap;
use crate::error::{config_err, Error, Result};
use crate::fatigue::FatigueModel;
use crate::regression::{fit_quality, least_squares};
use crate::scalar::{clamp_unit, Scalar};

/// One calibration observation for a single agonist/antagonist pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueSample<T> {
    pub tau: T,
    pub agon: T,
    pub anta: T,
}

/// Observation with `k` muscle pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPairSample<T> {
    pub tau: T,
    pub agon: Vec<T>,
    pub anta: Vec<T>,
}

/// Fitted torque model `tau = sum(kappa_i * agon_i - lambda_i * anta_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImcjFit<T> {
    pub kappa: Vec<T>,
    pub lambda: Vec<T>,
    pub r_squared: T,
    pub rmse: T,
    pub n: usize,
}

pub fn fit_imcj<T: Scalar>(dataset: &[TorqueSample<T>]) -> Result<ImcjFit<T>> {
    let multi: Vec<_> = dataset
        .iter()
        .map(|s| MultiPairSample {
            tau: s.tau,
            agon: vec![s.agon],
            anta: vec![s.anta],
        })
        .collect();
    fit_imcj_multi(&multi)
}

pub fn fit_imcj_multi<T: Scalar>(dataset: &[MultiPairSample<T>]) -> Result<ImcjFit<T>> {
    let k = dataset.first().map_or(0, |s| s.agon.len());
    if k == 0 || dataset.iter().any(|s| s.agon.len() != k || s.anta.len() != k) {
        return Err(Error::InvalidInput(
            "every sample needs the same non-zero number of muscle pairs".into(),
        ));
    }
    if dataset.len() < 2 * k {
        return Err(Error::SingularFit(format!(
            "{} samples cannot determine {} coefficients",
            dataset.len(),
            2 * k
        )));
    }
    let rows: Vec<Vec<T>> = dataset
        .iter()
        .map(|s| s.agon.iter().zip(&s.anta).flat_map(|(&g, &a)| [g, -a]).collect())
        .collect();
    let y: Vec<T> = dataset.iter().map(|s| s.tau).collect();
    let fit = least_squares(&rows, &y)?;
    Ok(ImcjFit {
        kappa: fit.coefficients.iter().step_by(2).copied().collect(),
        lambda: fit.coefficients.iter().skip(1).step_by(2).copied().collect(),
        r_squared: fit.r_squared,
        rmse: fit.rmse,
        n: fit.n,
    })
}

/// Fits `kappa` with `lambda` held at a fixed value, the convention used when
/// reporting coefficients relative to the antagonist.
pub fn fit_imcj_pinned_lambda<T: Scalar>(dataset: &[TorqueSample<T>], lambda: T) -> Result<ImcjFit<T>> {
    if dataset.is_empty() {
        return Err(Error::SingularFit("no samples".into()));
    }
    let rows: Vec<Vec<T>> = dataset.iter().map(|s| vec![s.agon]).collect();
    let shifted: Vec<T> = dataset.iter().map(|s| s.tau + lambda * s.anta).collect();
    let fit = least_squares(&rows, &shifted)?;
    let kappa = fit.coefficients[0];

    // Quality is reported against the raw torque, not the shifted response.
    let full_rows: Vec<Vec<T>> = dataset.iter().map(|s| vec![s.agon, -s.anta]).collect();
    let y: Vec<T> = dataset.iter().map(|s| s.tau).collect();
    let (r_squared, rmse) = fit_quality(&full_rows, &y, &[kappa, lambda]);
    Ok(ImcjFit {
        kappa: vec![kappa],
        lambda: vec![lambda],
        r_squared,
        rmse,
        n: dataset.len(),
    })
}

/// Everything the estimator needs at run time. Persisted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProfile<T> {
    pub kappa: Vec<T>,
    pub lambda: Vec<T>,
    pub r_squared: T,
    pub rmse: T,
    pub mvc: ChannelMap<T>,
    pub bias: ChannelMap<T>,
    /// Width of the device stiffness range, N·m/rad.
    pub stiffness_scale: T,
    /// Device stiffness commanded at zero co-contraction, N·m/rad.
    pub stiffness_floor: T,
    pub theta_range_rad: [T; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue: Option<FatigueModel<T>>,
}

impl<T: Scalar> CalibrationProfile<T> {
    /// Builds a profile from a fit, storing coefficient magnitudes.
    pub fn from_fit(
        fit: &ImcjFit<T>,
        mvc: ChannelMap<T>,
        bias: ChannelMap<T>,
        stiffness_floor: T,
        stiffness_scale: T,
        theta_range_rad: [T; 2],
    ) -> Result<Self> {
        let p = Self {
            kappa: fit.kappa.iter().map(|k| k.abs()).collect(),
            lambda: fit.lambda.iter().map(|l| l.abs()).collect(),
            r_squared: fit.r_squared,
            rmse: fit.rmse,
            mvc,
            bias,
            stiffness_scale,
            stiffness_floor,
            theta_range_rad,
            fatigue: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa.is_empty() || self.kappa.len() != self.lambda.len() {
            return config_err("kappa and lambda must be non-empty and equally long");
        }
        if self.kappa.iter().chain(&self.lambda).any(|c| !(*c > T::zero())) {
            return config_err("kappa and lambda must be strictly positive");
        }
        if !(self.r_squared >= T::zero() && self.r_squared <= T::one()) {
            return config_err("r_squared must lie in [0, 1]");
        }
        if !(self.stiffness_scale > T::zero()) {
            return config_err("stiffness_scale must be positive");
        }
        if !(self.stiffness_floor >= T::zero()) {
            return config_err("stiffness_floor must be non-negative");
        }
        if !(self.theta_range_rad[0] < self.theta_range_rad[1]) {
            return config_err("theta_range_rad must be increasing");
        }
        if self.mvc.iter().any(|(_, v)| !(v > T::zero())) {
            return config_err("MVC values must be positive");
        }
        if let Some(f) = &self.fatigue {
            f.validate()?;
        }
        Ok(())
    }

    /// IMCJ value with every pair at full activation.
    pub fn s_imcj_max(&self) -> T {
        self.kappa
            .iter()
            .zip(&self.lambda)
            .fold(T::zero(), |s, (k, l)| s + k.abs() + l.abs())
    }
}

/// `|kappa| * agon + |lambda| * anta` for the first muscle pair, inputs clamped to `[0, 1]`.
pub fn estimate_stiffness<T: Scalar>(agon: T, anta: T, profile: &CalibrationProfile<T>) -> T {
    profile.kappa[0].abs() * clamp_unit(agon) + profile.lambda[0].abs() * clamp_unit(anta)
}

pub fn estimate_stiffness_multi<T: Scalar>(agon: &[T], anta: &[T], profile: &CalibrationProfile<T>) -> Result<T> {
    let k = profile.kappa.len();
    if agon.len() != k || anta.len() != k {
        return Err(Error::InvalidInput(format!(
            "profile has {k} muscle pairs, got {} agonist and {} antagonist channels",
            agon.len(),
            anta.len()
        )));
    }
    Ok((0..k).fold(T::zero(), |s, i| {
        s + profile.kappa[i].abs() * clamp_unit(agon[i]) + profile.lambda[i].abs() * clamp_unit(anta[i])
    }))
}

/// Affine map onto the device range, saturating at full co-contraction.
pub fn map_stiffness_to_device<T: Scalar>(s_imcj: T, profile: &CalibrationProfile<T>) -> T {
    let frac = (s_imcj.max(T::zero()) / profile.s_imcj_max()).min(T::one());
    profile.stiffness_floor + profile.stiffness_scale * frac
}
