//! Fatigue model from a recording: sustained-contraction segments, binned
//! RMS of the normalized band-passed signal, and a line through the bins.

use serde::{Deserialize, Serialize};

use prosim_core::conditioning::{Conditioner, PipelineConfig};
use prosim_core::fatigue::{binned_rms, detect_sustained, fit_fatigue, FatigueConfig};
use prosim_core::{ChannelId, Error, FatigueModel, SemgFrame};

pub const DEFAULT_BIN_S: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFatigue {
    pub channel: ChannelId,
    /// Relative to the channel's fitted initial amplitude.
    pub model: FatigueModel,
    pub bins: usize,
    pub active_samples: usize,
    /// `(contraction time s, RMS)` per bin.
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatigueReport {
    /// Fit over the pooled relative series of every channel that had one.
    pub model: FatigueModel,
    pub n: usize,
    pub bin_s: f64,
    pub channels: Vec<ChannelFatigue>,
}

/// Fits biceps and triceps separately, then pools them. Channels without two
/// complete bins of sustained contraction are skipped; if none remain the
/// recording has insufficient signal.
pub fn fit_recording(
    frames: &[SemgFrame],
    pipeline: &PipelineConfig,
    fatigue: &FatigueConfig,
    bin_s: f64,
) -> prosim_core::Result<FatigueReport> {
    let mut cond = Conditioner::new(pipeline.clone())?;
    let norm = pipeline.normalization_mvc();
    let pair = [ChannelId::Biceps, ChannelId::Triceps];
    let mut signal: [Vec<f64>; 2] = Default::default();
    let mut envelope: [Vec<f64>; 2] = Default::default();
    for f in frames {
        if let Some(s) = cond.push_stages(f)? {
            for (i, ch) in pair.into_iter().enumerate() {
                signal[i].push(s.filtered[ch] / norm[ch]);
                envelope[i].push(s.envelope[ch]);
            }
        }
    }

    let mut channels = Vec::new();
    let mut pooled = Vec::new();
    for (i, ch) in pair.into_iter().enumerate() {
        let active = detect_sustained(&envelope[i], fatigue)?;
        let active_samples = active.iter().filter(|&&a| a).count();
        let series = binned_rms(&signal[i], &active, pipeline.fs_hz, bin_s)?;
        if series.len() < 2 {
            continue;
        }
        let model = fit_fatigue(&series)?;
        pooled.extend(series.iter().map(|&(t, y)| (t, y / model.intercept)));
        channels.push(ChannelFatigue {
            channel: ch,
            model: model.relative(),
            bins: series.len(),
            active_samples,
            series,
        });
    }
    if channels.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no channel has two {bin_s} s bins of sustained contraction above {}",
            fatigue.activation_threshold
        )));
    }
    let model = fit_fatigue(&pooled)?;
    Ok(FatigueReport {
        model,
        n: pooled.len(),
        bin_s,
        channels,
    })
}
