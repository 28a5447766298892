//! Loaded-trial calibration: per-trial mean envelopes labelled with the
//! gravitational elbow torque, fitted to the IMCJ model.

use serde::{Deserialize, Serialize};

use prosim_core::conditioning::{condition, PipelineConfig};
use prosim_core::estimation::{estimate_ecg_bias, estimate_torque_elbow90, fit_imcj};
use prosim_core::plant::FingerModel;
use prosim_core::{
    BiomechParams, CalibrationProfile, ChannelId, ChannelMap, ConditionedSample, Error, SemgFrame, TorqueSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub t0_ms: f64,
    pub t1_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trial {
    pub t0_ms: f64,
    pub t1_ms: f64,
    pub load_kg: f64,
}

/// Calibration protocol file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueProtocol {
    /// Segment parameters; `load_kg` is taken from each trial.
    #[serde(default)]
    pub biomech: BiomechParams,
    /// Torque that maps to 1.0; defaults to the largest trial torque.
    #[serde(default)]
    pub torque_scale_nm: Option<f64>,
    /// Relaxed segment used to estimate per-channel bias.
    #[serde(default)]
    pub rest: Option<Window>,
    /// Time skipped at the start of each trial while the envelope settles.
    #[serde(default = "default_settle_ms")]
    pub settle_ms: f64,
    pub trials: Vec<Trial>,
}

fn default_settle_ms() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub load_kg: f64,
    pub torque_nm: f64,
    pub tau: f64,
    pub agon: f64,
    pub anta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub kappa: f64,
    pub lambda: f64,
    pub r_squared: f64,
    pub rmse: f64,
    pub n: usize,
    pub torque_scale_nm: f64,
    pub trials: Vec<TrialSummary>,
}

fn window_mean(samples: &[ConditionedSample], t0: f64, t1: f64) -> Option<(ChannelMap<f64>, usize)> {
    let inside: Vec<_> = samples.iter().filter(|s| s.t_ms >= t0 && s.t_ms < t1).collect();
    if inside.is_empty() {
        return None;
    }
    let n = inside.len() as f64;
    let sum = inside
        .iter()
        .fold(ChannelMap::splat(0.0), |acc, s| acc.map(|ch, v| v + s.envelope[ch]));
    Some((sum.map(|_, v| v / n), inside.len()))
}

impl TorqueProtocol {
    pub fn validate(&self) -> prosim_core::Result<()> {
        self.biomech.validate()?;
        if self.trials.is_empty() {
            return Err(Error::InvalidInput("protocol lists no trials".into()));
        }
        for t in &self.trials {
            if !(t.t0_ms < t.t1_ms && t.load_kg >= 0.0) {
                return Err(Error::InvalidInput(format!("bad trial window or load: {t:?}")));
            }
        }
        if self.torque_scale_nm.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::InvalidInput("torque_scale_nm must be positive".into()));
        }
        if !(self.settle_ms >= 0.0) {
            return Err(Error::InvalidInput("settle_ms must be non-negative".into()));
        }
        Ok(())
    }
}

/// Conditions `frames`, builds one torque sample per trial and fits the
/// stiffness model. Fewer than two distinct loads cannot separate the two
/// coefficients and is reported as a singular fit.
pub fn calibrate(
    frames: &[SemgFrame],
    protocol: &TorqueProtocol,
    pipeline: &PipelineConfig,
    finger: &FingerModel<f64>,
) -> prosim_core::Result<(CalibrationProfile, CalibrationReport)> {
    protocol.validate()?;
    let mut loads: Vec<f64> = protocol.trials.iter().map(|t| t.load_kg).collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup();
    if loads.len() < 2 {
        return Err(Error::SingularFit(format!(
            "protocol has {} distinct load level(s); at least two are needed to separate kappa and lambda",
            loads.len()
        )));
    }

    let samples = condition(
        frames,
        &PipelineConfig {
            bias: ChannelMap::splat(0.0),
            ..pipeline.clone()
        },
    )?;
    let bias = match protocol.rest {
        Some(w) => {
            let rest: Vec<ConditionedSample> = samples
                .iter()
                .copied()
                .filter(|s| s.t_ms >= w.t0_ms && s.t_ms < w.t1_ms)
                .collect();
            let mut b = ChannelMap::splat(0.0);
            for ch in ChannelId::ALL {
                b[ch] = estimate_ecg_bias(&rest, ch)?;
            }
            b
        }
        None => pipeline.bias,
    };

    let torques: Vec<f64> = protocol
        .trials
        .iter()
        .map(|t| estimate_torque_elbow90(&protocol.biomech.with_load(t.load_kg)))
        .collect();
    let scale = protocol
        .torque_scale_nm
        .unwrap_or_else(|| torques.iter().copied().fold(0.0, f64::max));
    if !(scale > 0.0) {
        return Err(Error::InvalidInput("torque scale must be positive".into()));
    }

    let mut dataset = Vec::with_capacity(protocol.trials.len());
    let mut summaries = Vec::with_capacity(protocol.trials.len());
    for (t, &torque) in protocol.trials.iter().zip(&torques) {
        let (mean, n) = window_mean(&samples, t.t0_ms + protocol.settle_ms, t.t1_ms).ok_or_else(|| {
            Error::InsufficientData(format!(
                "no conditioned samples in trial [{} ms, {} ms) after settling",
                t.t0_ms, t.t1_ms
            ))
        })?;
        let agon = (mean.biceps - bias.biceps).max(0.0);
        let anta = (mean.triceps - bias.triceps).max(0.0);
        let tau = torque / scale;
        dataset.push(TorqueSample { tau, agon, anta });
        summaries.push(TrialSummary {
            load_kg: t.load_kg,
            torque_nm: torque,
            tau,
            agon,
            anta,
            samples: n,
        });
    }

    let fit = fit_imcj(&dataset)?;
    let [lo, hi] = finger.device_stiffness_range();
    let profile = CalibrationProfile::from_fit(&fit, pipeline.mvc, bias, lo, hi - lo, finger.theta_range_rad)?;
    let report = CalibrationReport {
        kappa: fit.kappa[0],
        lambda: fit.lambda[0],
        r_squared: fit.r_squared,
        rmse: fit.rmse,
        n: fit.n,
        torque_scale_nm: scale,
        trials: summaries,
    };
    Ok((profile, report))
}
