//! Seeded synthetic sEMG: amplitude-modulated band-limited Gaussian noise
//! plus ECG, powerline and baseline artifacts.
//!
//! The carrier gain is chosen so that the conditioning chain's normalized
//! envelope has expectation `u(t) (1 + fatigue_slope t_active)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelId, ChannelMap};
use crate::conditioning::{BandpassFilter, PipelineConfig, SemgFrame};
use crate::error::{config_err, Error, Result};
use crate::scalar::Scalar;

const IMPULSE_LEN: usize = 16384;
const ECG_SPIKE_WIDTH_S: f64 = 0.004;
const ECG_SPIKE_OFFSET_S: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelScript {
    pub channel: ChannelId,
    pub segments: Vec<Segment>,
}

/// Piecewise-constant activation per channel. Zero outside every segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivationProfile {
    pub scripts: Vec<ChannelScript>,
    pub duration_s: f64,
}

impl ActivationProfile {
    /// Duration defaults to the end of the last segment.
    pub fn new(scripts: Vec<ChannelScript>) -> Result<Self> {
        let duration_s = scripts
            .iter()
            .flat_map(|s| s.segments.iter().map(|g| g.t1))
            .fold(0.0, f64::max);
        let p = Self { scripts, duration_s };
        p.validate()?;
        Ok(p)
    }

    pub fn with_duration(mut self, duration_s: f64) -> Result<Self> {
        self.duration_s = duration_s;
        self.validate()?;
        Ok(self)
    }

    pub fn constant(u: ChannelMap<f64>, duration_s: f64) -> Result<Self> {
        let scripts = ChannelId::ALL
            .iter()
            .map(|&channel| ChannelScript {
                channel,
                segments: vec![Segment {
                    t0: 0.0,
                    t1: duration_s,
                    u: u[channel],
                }],
            })
            .collect();
        Self::new(scripts)?.with_duration(duration_s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scripts: Vec<ChannelScript> =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("activation profile: {e}")))?;
        Self::new(scripts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(Error::InvalidInput(
                "profile duration must be finite and non-negative".into(),
            ));
        }
        for s in &self.scripts {
            for g in &s.segments {
                if !(g.t0.is_finite() && g.t1.is_finite() && g.t0 >= 0.0 && g.t0 < g.t1) {
                    return Err(Error::InvalidInput(format!(
                        "{}: segment needs 0 <= t0 < t1, got [{}, {}]",
                        s.channel, g.t0, g.t1
                    )));
                }
                if !(0.0..=1.0).contains(&g.u) {
                    return Err(Error::InvalidInput(format!(
                        "{}: activation {} outside [0, 1]",
                        s.channel, g.u
                    )));
                }
            }
        }
        Ok(())
    }

    /// Activation at `t_s`; the last matching segment wins on overlap.
    pub fn at(&self, t_s: f64) -> ChannelMap<f64> {
        let mut u = ChannelMap::splat(0.0);
        for s in &self.scripts {
            for g in &s.segments {
                if t_s >= g.t0 && t_s < g.t1 {
                    u[s.channel] = g.u;
                }
            }
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactSpec {
    /// Peak amplitude of the biphasic ECG spike on the pectoralis channel, mV.
    pub ecg_amplitude_mv: f64,
    pub ecg_rate_hz: f64,
    pub powerline_hz: f64,
    pub powerline_amplitude_mv: f64,
    pub fatigue_slope_per_s: ChannelMap<f64>,
    /// Standard deviation of white measurement noise, mV.
    pub baseline_noise_mv: f64,
    pub seed: u64,
}

impl Default for ArtifactSpec {
    fn default() -> Self {
        Self {
            ecg_amplitude_mv: 0.0,
            ecg_rate_hz: 1.2,
            powerline_hz: 50.0,
            powerline_amplitude_mv: 0.0,
            fatigue_slope_per_s: ChannelMap::splat(0.0),
            baseline_noise_mv: 0.005,
            seed: 0,
        }
    }
}

impl ArtifactSpec {
    pub fn clean(seed: u64) -> Self {
        Self {
            baseline_noise_mv: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [
            self.ecg_amplitude_mv,
            self.powerline_amplitude_mv,
            self.baseline_noise_mv,
        ];
        if amps.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return config_err("artifact amplitudes must be finite and >= 0");
        }
        if !(self.ecg_rate_hz > 0.0 && self.powerline_hz > 0.0) {
            return config_err("ECG rate and powerline frequency must be positive");
        }
        if self.fatigue_slope_per_s.iter().any(|(_, s)| !s.is_finite()) {
            return config_err("fatigue slopes must be finite");
        }
        Ok(())
    }
}

/// Biphasic spike: derivative-of-Gaussian scaled to unit peak, repeated at
/// `rate_hz`.
pub fn ecg_template(t_s: f64, rate_hz: f64) -> f64 {
    let phase = t_s.rem_euclid(1.0 / rate_hz) - ECG_SPIKE_OFFSET_S;
    let z = phase / ECG_SPIKE_WIDTH_S;
    z * (0.5 - 0.5 * z * z).exp()
}

/// Streaming generator; one carrier filter per channel.
#[derive(Debug, Clone)]
pub struct SemgSynth<T> {
    spec: ArtifactSpec,
    fs_hz: f64,
    amplitude_mv: ChannelMap<f64>,
    carrier_gain: f64,
    noise_gain: f64,
    shapers: Vec<BandpassFilter<f64>>,
    active_s: ChannelMap<f64>,
    rng: ChaCha8Rng,
    index: u64,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> SemgSynth<T> {
    /// `pipeline` supplies the sampling rate, band and the MVC amplitudes
    /// that map to a normalized activity of 1.
    pub fn new(spec: ArtifactSpec, pipeline: &PipelineConfig) -> Result<Self> {
        spec.validate()?;
        pipeline.validate()?;
        if pipeline.fs_hz < 2.0 * pipeline.filter.high_cut_hz {
            return config_err("sampling rate must be at least twice the upper band edge");
        }
        let shaper = BandpassFilter::<f64>::design(&pipeline.filter, pipeline.fs_hz)?;
        let h_cond = shaper.impulse_response(IMPULSE_LEN);
        let mut cascade = shaper.clone();
        let energy_total: f64 = h_cond.iter().map(|&h| cascade.process(h).powi(2)).sum();
        let energy_cond: f64 = h_cond.iter().map(|h| h * h).sum();
        let rect = (2.0 / std::f64::consts::PI).sqrt();
        Ok(Self {
            fs_hz: pipeline.fs_hz,
            amplitude_mv: pipeline.normalization_mvc(),
            carrier_gain: 1.0 / (rect * energy_total.sqrt()),
            noise_gain: rect * energy_cond.sqrt(),
            shapers: vec![shaper; ChannelId::ALL.len()],
            active_s: ChannelMap::splat(0.0),
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            index: 0,
            spec,
            _marker: std::marker::PhantomData,
        })
    }

    pub fn spec(&self) -> &ArtifactSpec {
        &self.spec
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    /// Expected normalized envelope contributed by baseline noise alone.
    pub fn noise_floor(&self, ch: ChannelId) -> f64 {
        self.spec.baseline_noise_mv * self.noise_gain / self.amplitude_mv[ch]
    }

    /// Next frame for activations `u`, clamped to [0, 1].
    pub fn next_frame(&mut self, u: &ChannelMap<f64>) -> SemgFrame<T> {
        let t_s = self.index as f64 / self.fs_hz;
        let dt = 1.0 / self.fs_hz;
        let mut samples = ChannelMap::splat(T::zero());
        let line = self.spec.powerline_amplitude_mv * (2.0 * std::f64::consts::PI * self.spec.powerline_hz * t_s).sin();
        for ch in ChannelId::ALL {
            let ui = u[ch].clamp(0.0, 1.0);
            let level = ui * (1.0 + self.spec.fatigue_slope_per_s[ch] * self.active_s[ch]).max(0.0);
            if ui > 0.0 {
                self.active_s[ch] += dt;
            }
            let white: f64 = StandardNormal.sample(&mut self.rng);
            let noise: f64 = StandardNormal.sample(&mut self.rng);
            let carrier = self.shapers[ch.index()].process(white);
            let mut x = self.amplitude_mv[ch] * level * self.carrier_gain * carrier
                + self.spec.baseline_noise_mv * noise
                + line;
            if ch == ChannelId::PectoralisMajor {
                x += self.spec.ecg_amplitude_mv * ecg_template(t_s, self.spec.ecg_rate_hz);
            }
            samples[ch] = T::lit(x);
        }
        self.index += 1;
        SemgFrame {
            t_ms: t_s * 1000.0,
            samples,
        }
    }

    pub fn reset(&mut self) {
        for s in &mut self.shapers {
            s.reset();
        }
        self.active_s = ChannelMap::splat(0.0);
        self.rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        self.index = 0;
    }
}

/// `round(duration_s * fs_hz)` frames for `profile`.
pub fn generate<T: Scalar>(
    profile: &ActivationProfile,
    spec: &ArtifactSpec,
    pipeline: &PipelineConfig,
) -> Result<Vec<SemgFrame<T>>> {
    profile.validate()?;
    let mut synth = SemgSynth::<T>::new(spec.clone(), pipeline)?;
    let n = (profile.duration_s * pipeline.fs_hz).round() as usize;
    Ok((0..n)
        .map(|i| synth.next_frame(&profile.at(i as f64 / pipeline.fs_hz)))
        .collect())
}
