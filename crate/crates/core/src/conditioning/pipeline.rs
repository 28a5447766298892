//! Streaming per-channel conditioning chain.
//!
//! Order: startup discard, band-pass, rectification, moving average,
//! envelope detection, MVC normalization.

use serde::{Deserialize, Serialize};

use super::butterworth::{BandpassFilter, FilterSpec};
use super::envelope::{normalize_mvc, rectify, EnvelopeDetector, DEFAULT_ENVELOPE_TAU_S};
use super::moving_average::{window_len, MovingAverage};
use crate::channel::{ChannelId, ChannelMap};
use crate::error::{config_err, Error, Result};
use crate::scalar::Scalar;

/// One multi-channel raw sample. `t_ms` is time since session start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemgFrame<T> {
    pub t_ms: f64,
    pub samples: ChannelMap<T>,
}

/// Normalized activity per channel. Values may exceed 1 before the
/// estimators clamp them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedSample<T> {
    pub t_ms: f64,
    pub envelope: ChannelMap<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fs_hz: f64,
    pub filter: FilterSpec,
    pub window_s: f64,
    pub startup_discard: usize,
    pub envelope_tau_s: f64,
    /// Position channels are normalized by this fraction of their MVC.
    pub position_mvc_fraction: f64,
    /// Maximum voluntary contraction amplitude per channel, mV.
    pub mvc: ChannelMap<f64>,
    /// Normalized offset subtracted after MVC scaling.
    pub bias: ChannelMap<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fs_hz: 1000.0,
            filter: FilterSpec::default(),
            window_s: 0.5,
            startup_discard: 500,
            envelope_tau_s: DEFAULT_ENVELOPE_TAU_S,
            position_mvc_fraction: 0.7,
            mvc: ChannelMap::splat(1.0),
            bias: ChannelMap::splat(0.0),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate(self.fs_hz)?;
        window_len(self.window_s, self.fs_hz)?;
        if !(self.envelope_tau_s > 0.0) {
            return config_err("envelope_tau_s must be positive");
        }
        if !(self.position_mvc_fraction > 0.0 && self.position_mvc_fraction <= 1.0) {
            return config_err("position_mvc_fraction must lie in (0, 1]");
        }
        for (ch, v) in self.mvc.iter() {
            if !(v > 0.0 && v.is_finite()) {
                return config_err(format!("MVC for {ch} must be positive, got {v}"));
            }
        }
        for (ch, v) in self.bias.iter() {
            if !v.is_finite() {
                return config_err(format!("bias for {ch} must be finite"));
            }
        }
        Ok(())
    }

    /// Amplitude that maps to a normalized activity of 1.0 on each channel.
    pub fn normalization_mvc(&self) -> ChannelMap<f64> {
        self.mvc.map(|ch, v| {
            if ch.is_position_channel() {
                v * self.position_mvc_fraction
            } else {
                v
            }
        })
    }
}

/// Intermediate values for one conditioned frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageOutput<T> {
    pub t_ms: f64,
    /// Band-passed signal, mV.
    pub filtered: ChannelMap<T>,
    /// Envelope before normalization, mV.
    pub envelope_mv: ChannelMap<T>,
    /// Normalized envelope.
    pub envelope: ChannelMap<T>,
}

impl<T: Copy> StageOutput<T> {
    pub fn sample(&self) -> ConditionedSample<T> {
        ConditionedSample {
            t_ms: self.t_ms,
            envelope: self.envelope,
        }
    }
}

#[derive(Debug, Clone)]
struct ChannelChain<T> {
    bandpass: BandpassFilter<T>,
    average: MovingAverage<T>,
    detector: EnvelopeDetector<T>,
}

/// Stateful conditioner; one instance per session, single writer.
#[derive(Debug, Clone)]
pub struct Conditioner<T> {
    config: PipelineConfig,
    norm_mvc: ChannelMap<T>,
    bias: ChannelMap<T>,
    chains: Vec<ChannelChain<T>>,
    discarded: usize,
    last_t_ms: Option<f64>,
}

impl<T: Scalar> Conditioner<T> {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let n = window_len(config.window_s, config.fs_hz)?;
        let chain = ChannelChain {
            bandpass: BandpassFilter::design(&config.filter, config.fs_hz)?,
            average: MovingAverage::new(n)?,
            detector: EnvelopeDetector::new(config.envelope_tau_s, config.fs_hz)?,
        };
        Ok(Self {
            norm_mvc: config.normalization_mvc().map(|_, v| T::lit(v)),
            bias: config.bias.map(|_, v| T::lit(v)),
            chains: vec![chain; ChannelId::ALL.len()],
            discarded: 0,
            last_t_ms: None,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Replaces the normalization bias without touching filter state.
    pub fn set_bias(&mut self, bias: ChannelMap<f64>) {
        self.config.bias = bias;
        self.bias = bias.map(|_, v| T::lit(v));
    }

    pub fn reset(&mut self) {
        for c in &mut self.chains {
            c.bandpass.reset();
            c.average.reset();
            c.detector.reset();
        }
        self.discarded = 0;
        self.last_t_ms = None;
    }

    /// Feeds one frame; returns `None` while the startup discard is active.
    pub fn push_stages(&mut self, frame: &SemgFrame<T>) -> Result<Option<StageOutput<T>>> {
        if let Some(prev) = self.last_t_ms {
            if !(frame.t_ms > prev) {
                return Err(Error::InvalidInput(format!(
                    "frame times must be strictly increasing ({} after {prev})",
                    frame.t_ms
                )));
            }
        }
        self.last_t_ms = Some(frame.t_ms);
        if self.discarded < self.config.startup_discard {
            self.discarded += 1;
            return Ok(None);
        }

        let mut filtered = ChannelMap::splat(T::zero());
        let mut envelope_mv = ChannelMap::splat(T::zero());
        let mut envelope = ChannelMap::splat(T::zero());
        for ch in ChannelId::ALL {
            let chain = &mut self.chains[ch.index()];
            let y = chain.bandpass.process(frame.samples[ch]);
            let avg = chain.average.push(rectify(y));
            let env = chain.detector.push(avg);
            filtered[ch] = y;
            envelope_mv[ch] = env;
            envelope[ch] = normalize_mvc(env, self.norm_mvc[ch], self.bias[ch])?;
        }
        Ok(Some(StageOutput {
            t_ms: frame.t_ms,
            filtered,
            envelope_mv,
            envelope,
        }))
    }

    pub fn push(&mut self, frame: &SemgFrame<T>) -> Result<Option<ConditionedSample<T>>> {
        Ok(self.push_stages(frame)?.map(|s| s.sample()))
    }
}

/// Conditions a whole recording. Empty input yields empty output.
pub fn condition<T: Scalar>(raw: &[SemgFrame<T>], config: &PipelineConfig) -> Result<Vec<ConditionedSample<T>>> {
    let mut c = Conditioner::new(config.clone())?;
    let mut out = Vec::with_capacity(raw.len().saturating_sub(config.startup_discard));
    for f in raw {
        if let Some(s) = c.push(f)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// Zero-state band-pass of every channel; output length equals input length.
pub fn bandpass_filter<T: Scalar>(stream: &[SemgFrame<T>], spec: &FilterSpec, fs_hz: f64) -> Result<Vec<SemgFrame<T>>> {
    let proto = BandpassFilter::<T>::design(spec, fs_hz)?;
    let mut filters = vec![proto; ChannelId::ALL.len()];
    Ok(stream
        .iter()
        .map(|f| SemgFrame {
            t_ms: f.t_ms,
            samples: f.samples.map(|ch, x| filters[ch.index()].process(x)),
        })
        .collect())
}
