//! Force–deflection characterization of the finger: a probe pushes the
//! fingertip while the references are held, and the resulting pairs are
//! fitted with a line.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{step_plant, ObjectModel, PlantConfig, PlantState};
use crate::error::{config_err, Error, Result};
use crate::regression::fit_line;
use crate::scalar::Scalar;
use crate::vsa::inverse_vsa;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeProfile<T> {
    /// Linear rise from 0 to `peak_n` over `duration_s`.
    Ramp { peak_n: T, duration_s: T },
    /// Rise to `force_n` over `ramp_s`, then hold for `hold_s`.
    Constant { force_n: T, ramp_s: T, hold_s: T },
}

impl<T: Scalar> ProbeProfile<T> {
    pub fn stiffness_default() -> Self {
        ProbeProfile::Ramp {
            peak_n: T::lit(3.0),
            duration_s: T::lit(5.0),
        }
    }

    pub fn position_default() -> Self {
        ProbeProfile::Constant {
            force_n: T::one(),
            ramp_s: T::one(),
            hold_s: T::one(),
        }
    }

    pub fn duration_s(&self) -> T {
        match *self {
            ProbeProfile::Ramp { duration_s, .. } => duration_s,
            ProbeProfile::Constant { ramp_s, hold_s, .. } => ramp_s + hold_s,
        }
    }

    pub fn peak_n(&self) -> T {
        match *self {
            ProbeProfile::Ramp { peak_n, .. } => peak_n,
            ProbeProfile::Constant { force_n, .. } => force_n,
        }
    }

    pub fn force_at(&self, t_s: T) -> T {
        let (peak, rise) = match *self {
            ProbeProfile::Ramp { peak_n, duration_s } => (peak_n, duration_s),
            ProbeProfile::Constant { force_n, ramp_s, .. } => (force_n, ramp_s),
        };
        if t_s >= rise {
            peak
        } else {
            peak * t_s.max(T::zero()) / rise
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProbeProfile::Ramp { duration_s, .. } => duration_s > T::zero(),
            ProbeProfile::Constant { ramp_s, hold_s, .. } => ramp_s > T::zero() && hold_s >= T::zero(),
        };
        if !ok || !(self.peak_n() >= T::zero()) {
            return config_err("probe needs a positive duration and a non-negative force");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationConfig<T> {
    pub trials: usize,
    /// Gaussian sensor noise on deflection and force, as a fraction of each
    /// trial's peak value.
    pub noise_fraction: T,
    pub seed: u64,
    /// Keep one pair every this many control ticks.
    pub record_every: usize,
}

impl<T: Scalar> Default for CharacterizationConfig<T> {
    fn default() -> Self {
        Self {
            trials: 10,
            noise_fraction: T::lit(0.02),
            seed: 0,
            record_every: 5,
        }
    }
}

/// Clean probe run: `(deflection mm, force N)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord<T> {
    pub pairs: Vec<(T, T)>,
    /// The sweep stopped early on a slack tendon or a range stop.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationResult<T> {
    /// Commanded joint stiffness (stiffness sweep) or position (position sweep).
    pub level: T,
    pub trial: usize,
    /// N/mm.
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub n: usize,
    pub truncated: bool,
    pub pairs: Vec<(T, T)>,
}

/// Probes the finger held at `(s_ref, theta_ref)` with no object.
pub fn run_probe<T: Scalar>(
    cfg: &PlantConfig<T>,
    s_ref: T,
    theta_ref: T,
    probe: &ProbeProfile<T>,
    record_every: usize,
) -> Result<ProbeRecord<T>> {
    cfg.validate()?;
    probe.validate()?;
    let cmd = inverse_vsa(s_ref, theta_ref, T::zero(), &cfg.vsa)?;
    let free = ObjectModel::free();
    let mut state = PlantState::settled(&cmd, T::zero(), cfg, &free);
    let theta0 = state.theta;
    let dt = cfg.dt_s();
    let steps = (probe.duration_s() / dt).round().to_usize().unwrap_or(0);
    let every = record_every.max(1);
    let mut pairs = Vec::with_capacity(steps / every + 1);
    let mut truncated = false;
    for i in 1..=steps {
        let f = probe.force_at(T::from_usize_lossy(i) * dt);
        state = step_plant(&state, &cmd, f, dt, cfg, &free);
        if !state.taut || state.at_stop {
            truncated = true;
            break;
        }
        if i % every == 0 {
            pairs.push((cfg.finger.deflection_mm(state.theta - theta0), f));
        }
    }
    Ok(ProbeRecord { pairs, truncated })
}

fn noisy<T: Scalar>(pairs: &[(T, T)], fraction: T, rng: &mut ChaCha8Rng) -> Vec<(T, T)> {
    if !(fraction > T::zero()) {
        return pairs.to_vec();
    }
    let peak = |f: fn(&(T, T)) -> T| pairs.iter().map(f).fold(T::zero(), |m, v| m.max(v.abs()));
    let sx = (fraction * peak(|p| p.0)).as_f64();
    let sy = (fraction * peak(|p| p.1)).as_f64();
    let nx = Normal::new(0.0, sx).expect("finite sigma");
    let ny = Normal::new(0.0, sy).expect("finite sigma");
    pairs
        .iter()
        .map(|&(x, y)| (x + T::lit(nx.sample(rng)), y + T::lit(ny.sample(rng))))
        .collect()
}

fn sweep<T: Scalar>(
    cfg: &PlantConfig<T>,
    refs: &[(T, T, T)],
    probe: &ProbeProfile<T>,
    ccfg: &CharacterizationConfig<T>,
) -> Result<Vec<CharacterizationResult<T>>> {
    probe.validate()?;
    if !(probe.peak_n() > T::zero()) {
        return Err(Error::EmptySweep);
    }
    if ccfg.trials == 0 {
        return config_err("at least one trial per level is required");
    }
    let mut out = Vec::with_capacity(refs.len() * ccfg.trials);
    for (li, &(level, s_ref, theta_ref)) in refs.iter().enumerate() {
        let clean = run_probe(cfg, s_ref, theta_ref, probe, ccfg.record_every)?;
        for trial in 0..ccfg.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(ccfg.seed ^ (((li as u64) << 32) | trial as u64));
            let pairs = noisy(&clean.pairs, ccfg.noise_fraction, &mut rng);
            if pairs.len() < 2 {
                return Err(Error::EmptySweep);
            }
            let (x, y): (Vec<T>, Vec<T>) = pairs.iter().copied().unzip();
            let fit = fit_line(&x, &y)?;
            out.push(CharacterizationResult {
                level,
                trial,
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                n: fit.n,
                truncated: clean.truncated,
                pairs,
            });
        }
    }
    Ok(out)
}

/// Probes the finger at each commanded joint stiffness with the position
/// reference at the open end of its range.
pub fn characterize_stiffness<T: Scalar>(
    cfg: &PlantConfig<T>,
    levels: &[T],
    probe: &ProbeProfile<T>,
    ccfg: &CharacterizationConfig<T>,
) -> Result<Vec<CharacterizationResult<T>>> {
    let theta0 = cfg.finger.theta_range_rad[0];
    let refs: Vec<_> = levels.iter().map(|&s| (s, s, theta0)).collect();
    sweep(cfg, &refs, probe, ccfg)
}

/// Probes the finger at each position reference with a fixed joint stiffness.
pub fn characterize_position<T: Scalar>(
    cfg: &PlantConfig<T>,
    positions: &[T],
    hold_stiffness: T,
    probe: &ProbeProfile<T>,
    ccfg: &CharacterizationConfig<T>,
) -> Result<Vec<CharacterizationResult<T>>> {
    let refs: Vec<_> = positions.iter().map(|&th| (th, hold_stiffness, th)).collect();
    sweep(cfg, &refs, probe, ccfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary<T> {
    pub level: T,
    pub trials: usize,
    pub mean_slope: T,
    pub min_slope: T,
    pub max_slope: T,
    pub mean_r_squared: T,
    pub min_r_squared: T,
    pub truncated: bool,
}

/// Groups per-trial results by level, in first-seen order.
pub fn summarize<T: Scalar>(results: &[CharacterizationResult<T>]) -> Vec<LevelSummary<T>> {
    let mut levels: Vec<T> = Vec::new();
    for r in results {
        if !levels.contains(&r.level) {
            levels.push(r.level);
        }
    }
    levels
        .into_iter()
        .map(|level| {
            let group: Vec<_> = results.iter().filter(|r| r.level == level).collect();
            let n = T::from_usize_lossy(group.len());
            let sum = |f: fn(&CharacterizationResult<T>) -> T| group.iter().fold(T::zero(), |s, r| s + f(r));
            LevelSummary {
                level,
                trials: group.len(),
                mean_slope: sum(|r| r.slope) / n,
                min_slope: group.iter().map(|r| r.slope).fold(T::infinity(), T::min),
                max_slope: group.iter().map(|r| r.slope).fold(T::neg_infinity(), T::max),
                mean_r_squared: sum(|r| r.r_squared) / n,
                min_r_squared: group.iter().map(|r| r.r_squared).fold(T::infinity(), T::min),
                truncated: group.iter().any(|r| r.truncated),
            }
        })
        .collect()
}
