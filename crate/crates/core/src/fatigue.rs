//! Sustained-contraction detection, linear fatigue model and the
//! feed-forward stiffness compensation factor.

use serde::{Deserialize, Serialize};

use crate::conditioning::MovingAverage;
use crate::error::{config_err, Error, Result};
use crate::regression::fit_line;
use crate::scalar::Scalar;

/// Lowest relative amplitude the compensation will invert (caps the boost at 4x).
pub const COMPENSATION_FLOOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FatigueConfig {
    pub window_samples: usize,
    /// Mean normalized envelope that counts as a sustained contraction.
    pub activation_threshold: f64,
}

impl Default for FatigueConfig {
    fn default() -> Self {
        Self {
            window_samples: 2000,
            activation_threshold: 0.20,
        }
    }
}

impl FatigueConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_samples == 0 {
            return config_err("fatigue window must hold at least one sample");
        }
        if !(self.activation_threshold > 0.0 && self.activation_threshold < 1.0) {
            return config_err("activation threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Relative sEMG amplitude as a linear function of contraction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FatigueModel<T> {
    /// Amplitude change per second of contraction (negative under fatigue).
    #[serde(rename = "slope_per_s")]
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

impl<T: Scalar> Default for FatigueModel<T> {
    fn default() -> Self {
        Self {
            slope: T::zero(),
            intercept: T::one(),
            r_squared: T::one(),
        }
    }
}

impl<T: Scalar> FatigueModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.intercept > T::zero()) {
            return config_err("fatigue intercept must be positive");
        }
        if !(self.r_squared >= T::zero() && self.r_squared <= T::one()) {
            return config_err("fatigue r_squared must lie in [0, 1]");
        }
        if !self.slope.is_finite() {
            return config_err("fatigue slope must be finite");
        }
        Ok(())
    }

    /// Same decline expressed relative to the initial amplitude.
    pub fn relative(&self) -> Self {
        Self {
            slope: self.slope / self.intercept,
            intercept: T::one(),
            r_squared: self.r_squared,
        }
    }

    /// Compensation factor after `elapsed_s` of contraction.
    pub fn factor(&self, elapsed_s: T) -> T {
        let rel = T::one() + self.slope / self.intercept * elapsed_s;
        T::one() / rel.max(T::lit(COMPENSATION_FLOOR))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueState<T> {
    pub active: bool,
    pub contraction_elapsed_s: T,
    pub c_fi: T,
    /// Position compensation; always zero.
    pub c_fp: T,
}

impl<T: Scalar> Default for FatigueState<T> {
    fn default() -> Self {
        Self {
            active: false,
            contraction_elapsed_s: T::zero(),
            c_fi: T::one(),
            c_fp: T::zero(),
        }
    }
}

pub fn rms<T: Scalar>(window: &[T]) -> Result<T> {
    if window.is_empty() {
        return Err(Error::InsufficientData("RMS of an empty window".into()));
    }
    let ss = window.iter().fold(T::zero(), |s, &v| s + v * v);
    Ok((ss / T::from_usize_lossy(window.len())).sqrt())
}

/// Streaming form of [`detect_sustained`].
#[derive(Debug, Clone)]
pub struct SustainedDetector<T> {
    average: MovingAverage<T>,
    threshold: T,
}

impl<T: Scalar> SustainedDetector<T> {
    pub fn new(cfg: &FatigueConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            average: MovingAverage::new(cfg.window_samples)?,
            threshold: T::lit(cfg.activation_threshold),
        })
    }

    /// False until the window has filled.
    pub fn push(&mut self, envelope: T) -> bool {
        let mean = self.average.push(envelope);
        self.average.is_full() && mean >= self.threshold
    }

    pub fn reset(&mut self) {
        self.average.reset();
    }
}

/// Per-sample flag: mean of the last `window_samples` envelope values is at
/// or above the activation threshold.
pub fn detect_sustained<T: Scalar>(envelope: &[T], cfg: &FatigueConfig) -> Result<Vec<bool>> {
    let mut det = SustainedDetector::new(cfg)?;
    Ok(envelope.iter().map(|&e| det.push(e)).collect())
}

/// Least-squares line through `(contraction time s, relative amplitude)`.
///
/// A constant series reports zero slope with `r_squared = 1`.
pub fn fit_fatigue<T: Scalar>(series: &[(T, T)]) -> Result<FatigueModel<T>> {
    let (t, y): (Vec<T>, Vec<T>) = series.iter().copied().unzip();
    let line = fit_line(&t, &y)?;
    let model = FatigueModel {
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
    };
    if !(model.intercept > T::zero()) {
        return Err(Error::SingularFit(format!(
            "fatigue fit has non-positive intercept {}",
            model.intercept
        )));
    }
    Ok(model)
}

/// Advances the contraction clock and scales the raw IMCJ value.
///
/// Active contraction time accumulates while `detected`; otherwise it decays
/// back toward zero at the same rate. The factor is the inverse of the
/// modeled relative amplitude, floored at [`COMPENSATION_FLOOR`].
pub fn update_and_compensate<T: Scalar>(
    state: FatigueState<T>,
    detected: bool,
    dt_s: T,
    model: &FatigueModel<T>,
    s_imcj_raw: T,
) -> (FatigueState<T>, T) {
    let elapsed = if detected {
        state.contraction_elapsed_s + dt_s
    } else {
        (state.contraction_elapsed_s - dt_s).max(T::zero())
    };
    let c_fi = model.factor(elapsed);
    (
        FatigueState {
            active: detected,
            contraction_elapsed_s: elapsed,
            c_fi,
            c_fp: T::zero(),
        },
        c_fi * s_imcj_raw,
    )
}

/// Tracks biceps and triceps separately and applies their mean factor.
#[derive(Debug, Clone)]
pub struct PairCompensator<T> {
    detectors: [SustainedDetector<T>; 2],
    states: [FatigueState<T>; 2],
    models: [FatigueModel<T>; 2],
}

impl<T: Scalar> PairCompensator<T> {
    pub fn new(cfg: &FatigueConfig, agon_model: FatigueModel<T>, anta_model: FatigueModel<T>) -> Result<Self> {
        agon_model.validate()?;
        anta_model.validate()?;
        let det = SustainedDetector::new(cfg)?;
        Ok(Self {
            detectors: [det.clone(), det],
            states: [FatigueState::default(); 2],
            models: [agon_model, anta_model],
        })
    }

    /// Feeds one envelope sample per muscle and returns the combined factor.
    pub fn push(&mut self, agon_env: T, anta_env: T, dt_s: T) -> T {
        for (i, env) in [agon_env, anta_env].into_iter().enumerate() {
            let detected = self.detectors[i].push(env);
            let (next, _) = update_and_compensate(self.states[i], detected, dt_s, &self.models[i], T::one());
            self.states[i] = next;
        }
        self.factor()
    }

    pub fn factor(&self) -> T {
        (self.states[0].c_fi + self.states[1].c_fi) / T::lit(2.0)
    }

    pub fn states(&self) -> &[FatigueState<T>; 2] {
        &self.states
    }

    pub fn reset(&mut self) {
        self.detectors.iter_mut().for_each(SustainedDetector::reset);
        self.states = [FatigueState::default(); 2];
    }
}

/// RMS of the active samples of a (filtered, MVC-normalized) signal, binned
/// by accumulated contraction time. Returns `(bin-center contraction time s,
/// RMS)` for every complete bin.
pub fn binned_rms<T: Scalar>(signal: &[T], active: &[bool], fs_hz: f64, bin_s: f64) -> Result<Vec<(T, T)>> {
    if signal.len() != active.len() {
        return Err(Error::InvalidInput("signal and activity flags differ in length".into()));
    }
    let bin_len = (bin_s * fs_hz).round();
    if !(bin_len >= 1.0) {
        return config_err("RMS bin must span at least one sample");
    }
    let bin_len = bin_len as usize;
    let active_samples: Vec<T> = signal.iter().zip(active).filter(|(_, &a)| a).map(|(&x, _)| x).collect();
    active_samples
        .chunks_exact(bin_len)
        .enumerate()
        .map(|(i, chunk)| {
            let center = (i as f64 + 0.5) * bin_s;
            Ok((T::lit(center), rms(chunk)?))
        })
        .collect()
}
