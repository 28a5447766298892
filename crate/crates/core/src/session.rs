//! Full control chain on a fixed step: synthetic sEMG and conditioning at the
//! signal rate, estimation, fatigue compensation, inverse VSA and the plant
//! at the control rate.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelId, ChannelMap};
use crate::conditioning::{ConditionedSample, Conditioner, PipelineConfig};
use crate::error::{config_err, Error, Result};
use crate::estimation::{reference_pair, CalibrationProfile, ReferencePair};
use crate::fatigue::{FatigueConfig, PairCompensator};
use crate::plant::{GraspStatus, ObjectKind, ObjectModel, Plant, PlantConfig};
use crate::scalar::Scalar;
use crate::synth::{ActivationProfile, ArtifactSpec, ChannelScript, Segment, SemgSynth};
use crate::vsa::{clamp_references, inverse_vsa, ReferenceLimits};

/// IMCJ coefficients used when no calibration is supplied.
pub const NOMINAL_KAPPA: f64 = 1.8612;
pub const NOMINAL_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SessionConfig<T> {
    pub pipeline: PipelineConfig,
    pub fatigue: FatigueConfig,
    pub plant: PlantConfig<T>,
    pub artifacts: ArtifactSpec,
    /// Activations are held this long without a fresh command, s.
    pub command_hold_s: f64,
    /// Time constant of the decay to rest after the hold expires, s.
    pub decay_tau_s: f64,
}

impl<T: Scalar> Default for SessionConfig<T> {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            fatigue: FatigueConfig::default(),
            plant: PlantConfig::default(),
            artifacts: ArtifactSpec::default(),
            command_hold_s: 1.0,
            decay_tau_s: 0.3,
        }
    }
}

impl<T: Scalar> SessionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.fatigue.validate()?;
        self.plant.validate()?;
        self.artifacts.validate()?;
        if !(self.command_hold_s >= 0.0 && self.decay_tau_s > 0.0) {
            return config_err("command_hold_s must be >= 0 and decay_tau_s > 0");
        }
        self.samples_per_tick().map(|_| ())
    }

    /// Signal samples per control tick; the rates must divide evenly.
    pub fn samples_per_tick(&self) -> Result<usize> {
        let ratio = self.pipeline.fs_hz / self.plant.pd.rate_hz.as_f64();
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 {
            return config_err(format!(
                "signal rate {} Hz must be a whole multiple of the control rate {} Hz",
                self.pipeline.fs_hz, self.plant.pd.rate_hz
            ));
        }
        Ok(n as usize)
    }

    /// Profile with the nominal IMCJ coefficients, the pipeline's MVC, a
    /// bias three times the synthetic noise floor and the finger's device
    /// range.
    pub fn nominal_profile(&self) -> Result<CalibrationProfile<T>> {
        let synth = SemgSynth::<T>::new(self.artifacts.clone(), &self.pipeline)?;
        let [lo, hi] = self.plant.finger.device_stiffness_range();
        Ok(CalibrationProfile {
            kappa: vec![T::lit(NOMINAL_KAPPA)],
            lambda: vec![T::lit(NOMINAL_LAMBDA)],
            r_squared: T::one(),
            rmse: T::zero(),
            mvc: self.pipeline.mvc.map(|_, v| T::lit(v)),
            bias: ChannelMap::from_fn(|ch| T::lit(3.0 * synth.noise_floor(ch))),
            stiffness_scale: hi - lo,
            stiffness_floor: lo,
            theta_range_rad: self.plant.finger.theta_range_rad,
            fatigue: None,
        })
    }
}

/// One activation update from a client. `t` is client time, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationCommand {
    pub t: f64,
    pub biceps: f64,
    pub triceps: f64,
    pub trapezius: f64,
    pub pectoralis: f64,
}

impl ActivationCommand {
    /// Values clamped to `[0, 1]`; NaN becomes 0.
    pub fn activations(&self) -> ChannelMap<f64> {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        ChannelMap {
            biceps: c(self.biceps),
            triceps: c(self.triceps),
            trapezius: c(self.trapezius),
            pectoralis: c(self.pectoralis),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Telemetry<T> {
    /// Simulation time, s.
    pub t: T,
    pub theta: T,
    pub theta_ref: T,
    pub s: T,
    pub s_ref: T,
    pub alpha: T,
    pub beta: T,
    pub fingertip_force: T,
    pub grasp: GraspStatus,
    pub c_fi: T,
}

/// Owns every piece of mutable state for one simulated user.
#[derive(Debug, Clone)]
pub struct Session<T> {
    cfg: SessionConfig<T>,
    profile: CalibrationProfile<T>,
    synth: SemgSynth<T>,
    conditioner: Conditioner<T>,
    compensator: PairCompensator<T>,
    plant: Plant<T>,
    limits: ReferenceLimits<T>,
    samples_per_tick: usize,
    u: ChannelMap<f64>,
    newest_client_t: Option<f64>,
    last_command_s: f64,
    latest: Option<ConditionedSample<T>>,
    c_fi: T,
}

impl<T: Scalar> Session<T> {
    /// The profile's MVC and bias replace the pipeline's.
    pub fn new(cfg: SessionConfig<T>, profile: CalibrationProfile<T>, object: ObjectModel<T>) -> Result<Self> {
        cfg.validate()?;
        profile.validate()?;
        let pipeline = PipelineConfig {
            mvc: profile.mvc.map(|_, v| v.as_f64()),
            bias: profile.bias.map(|_, v| v.as_f64()),
            ..cfg.pipeline.clone()
        };
        let synth = SemgSynth::new(cfg.artifacts.clone(), &pipeline)?;
        let conditioner = Conditioner::new(pipeline)?;
        let model = profile.fatigue.unwrap_or_default();
        let compensator = PairCompensator::new(&cfg.fatigue, model, model)?;
        let plant = Plant::new(cfg.plant, object)?;
        let limits = ReferenceLimits {
            s_max: profile.stiffness_floor + profile.stiffness_scale,
            theta_min: profile.theta_range_rad[0],
            theta_max: profile.theta_range_rad[1],
        };
        Ok(Self {
            samples_per_tick: cfg.samples_per_tick()?,
            cfg,
            profile,
            synth,
            conditioner,
            compensator,
            plant,
            limits,
            u: ChannelMap::splat(0.0),
            newest_client_t: None,
            last_command_s: 0.0,
            latest: None,
            c_fi: T::one(),
        })
    }

    pub fn config(&self) -> &SessionConfig<T> {
        &self.cfg
    }

    pub fn profile(&self) -> &CalibrationProfile<T> {
        &self.profile
    }

    pub fn plant(&self) -> &Plant<T> {
        &self.plant
    }

    pub fn time_s(&self) -> f64 {
        self.plant.state().t_s.as_f64()
    }

    pub fn tick_s(&self) -> f64 {
        self.cfg.plant.dt_s().as_f64()
    }

    pub fn activations(&self) -> ChannelMap<f64> {
        self.u
    }

    /// Applies a client command unless it is older than the newest one
    /// applied. Returns whether it was applied.
    pub fn apply_command(&mut self, cmd: &ActivationCommand) -> bool {
        if self.newest_client_t.is_some_and(|t| cmd.t < t) || cmd.t.is_nan() {
            return false;
        }
        self.newest_client_t = Some(cmd.t);
        self.set_activation(cmd.activations());
        true
    }

    pub fn set_activation(&mut self, u: ChannelMap<f64>) {
        self.u = u.map(|_, v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
        self.last_command_s = self.time_s();
    }

    pub fn select_object(&mut self, object: ObjectModel<T>) -> Result<()> {
        self.plant.set_object(object)
    }

    /// Plant to rest, activations to zero, fatigue and filters cleared.
    pub fn reset(&mut self) {
        self.plant.reset();
        self.compensator.reset();
        self.conditioner.reset();
        self.u = ChannelMap::splat(0.0);
        self.newest_client_t = None;
        self.last_command_s = self.time_s();
        self.latest = None;
        self.c_fi = T::one();
    }

    fn rest_references(&self) -> ReferencePair<T> {
        ReferencePair {
            t_ms: self.time_s() * 1e3,
            s_ref: self.profile.stiffness_floor,
            theta_ref: self.profile.theta_range_rad[0],
            s_imcj: T::zero(),
        }
    }

    /// Advances one control period.
    pub fn tick(&mut self) -> Result<Telemetry<T>> {
        let dt_tick = self.tick_s();
        if self.time_s() - self.last_command_s > self.cfg.command_hold_s {
            let k = (-dt_tick / self.cfg.decay_tau_s).exp();
            self.u = self.u.map(|_, v| v * k);
        }
        let dt_signal = T::lit(1.0 / self.cfg.pipeline.fs_hz);
        for _ in 0..self.samples_per_tick {
            let frame = self.synth.next_frame(&self.u);
            if let Some(s) = self.conditioner.push(&frame)? {
                self.c_fi = self.compensator.push(s.envelope.biceps, s.envelope.triceps, dt_signal);
                self.latest = Some(s);
            }
        }
        let refs = match &self.latest {
            Some(s) => reference_pair(s, &self.profile, self.c_fi),
            None => self.rest_references(),
        };
        let (s_ref, theta_ref) = clamp_references(refs.s_ref, refs.theta_ref, &self.cfg.plant.vsa, &self.limits);
        let cmd = inverse_vsa(s_ref, theta_ref, T::zero(), &self.cfg.plant.vsa)?;
        let st = self.plant.step(&cmd, T::zero());
        Ok(Telemetry {
            t: st.t_s,
            theta: st.theta,
            theta_ref,
            s: st.stiffness,
            s_ref,
            alpha: st.alpha.angle,
            beta: st.beta.angle,
            fingertip_force: st.fingertip_force,
            grasp: st.grasp,
            c_fi: self.c_fi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspTrial<T> {
    pub scenario: ObjectKind,
    pub outcome: GraspStatus,
    pub peak_force: T,
    pub duration_s: f64,
    pub telemetry: Vec<Telemetry<T>>,
}

/// Runs `script` against `object` for its full duration; one telemetry
/// record per control tick.
pub fn simulate_grasp<T: Scalar>(
    cfg: &SessionConfig<T>,
    profile: &CalibrationProfile<T>,
    object: ObjectModel<T>,
    script: &ActivationProfile,
) -> Result<GraspTrial<T>> {
    script.validate()?;
    let mut session = Session::new(cfg.clone(), profile.clone(), object)?;
    let ticks = (script.duration_s / session.tick_s()).round() as usize;
    let mut telemetry = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        session.set_activation(script.at(session.time_s()));
        telemetry.push(session.tick()?);
    }
    let st = session.plant().state();
    Ok(GraspTrial {
        scenario: object.kind,
        outcome: st.grasp,
        peak_force: st.peak_force,
        duration_s: script.duration_s,
        telemetry,
    })
}

/// Replays timestamped client commands, each applied at the first tick whose
/// start time is at or after its simulation time `at_s`.
pub fn replay_commands<T: Scalar>(
    cfg: &SessionConfig<T>,
    profile: &CalibrationProfile<T>,
    object: ObjectModel<T>,
    log: &[(f64, ActivationCommand)],
    duration_s: f64,
) -> Result<Vec<Telemetry<T>>> {
    let mut session = Session::new(cfg.clone(), profile.clone(), object)?;
    let ticks = (duration_s / session.tick_s()).round() as usize;
    let mut next = 0;
    let mut out = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        while next < log.len() && log[next].0 <= session.time_s() + 1e-12 {
            session.apply_command(&log[next].1);
            next += 1;
        }
        out.push(session.tick()?);
    }
    Ok(out)
}

/// Names accepted by [`builtin_script`].
pub const BUILTIN_SCRIPTS: [&str; 4] = ["gentle", "crush", "shallow-soft", "close"];

/// Scripted demonstrations, each 6 s long. Closure starts at 0.5 s.
///
/// - `gentle`: full closure, 2% co-contraction.
/// - `crush`: full closure, full co-contraction.
/// - `shallow-soft`: 45% closure, no co-contraction.
/// - `close`: full closure, no co-contraction.
pub fn builtin_script(name: &str) -> Result<ActivationProfile> {
    let (co, close) = match name {
        "gentle" => (0.02, 1.0),
        "crush" => (1.0, 1.0),
        "shallow-soft" => (0.0, 0.45),
        "close" => (0.0, 1.0),
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown script '{name}' (expected one of {})",
                BUILTIN_SCRIPTS.join(", ")
            )))
        }
    };
    let duration = 6.0;
    let seg = |t0: f64, u: f64| vec![Segment { t0, t1: duration, u }];
    let mut scripts = vec![ChannelScript {
        channel: ChannelId::Trapezius,
        segments: seg(0.5, close),
    }];
    if co > 0.0 {
        for channel in [ChannelId::Biceps, ChannelId::Triceps] {
            scripts.push(ChannelScript {
                channel,
                segments: seg(0.0, co),
            });
        }
    }
    ActivationProfile::new(scripts)?.with_duration(duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SessionConfig<f64>, CalibrationProfile<f64>) {
        let cfg = SessionConfig::default();
        let profile = cfg.nominal_profile().unwrap();
        (cfg, profile)
    }

    #[test]
    fn idle_session_rests_at_floor() {
        let (cfg, profile) = setup();
        let mut s = Session::new(cfg, profile.clone(), ObjectModel::free()).unwrap();
        for _ in 0..1000 {
            let t = s.tick().unwrap();
            assert_eq!(t.s_ref, profile.stiffness_floor);
            assert_eq!(t.theta_ref, 0.0);
            assert_eq!(t.grasp, GraspStatus::None);
        }
    }

    #[test]
    fn stale_and_out_of_range_commands() {
        let (cfg, profile) = setup();
        let mut s = Session::new(cfg, profile, ObjectModel::free()).unwrap();
        let cmd = |t, v| ActivationCommand {
            t,
            biceps: v,
            triceps: v,
            trapezius: v,
            pectoralis: -v,
        };
        assert!(s.apply_command(&cmd(10.0, 1.7)));
        assert_eq!(s.activations().biceps, 1.0);
        assert_eq!(s.activations().pectoralis, 0.0);
        assert!(!s.apply_command(&cmd(9.0, 0.2)));
        assert_eq!(s.activations().biceps, 1.0);
        assert!(s.apply_command(&cmd(10.0, 0.2)));
        assert_eq!(s.activations().biceps, 0.2);
    }

    #[test]
    fn held_command_decays_after_hold() {
        let (cfg, profile) = setup();
        let mut s = Session::new(cfg, profile, ObjectModel::free()).unwrap();
        s.set_activation(ChannelMap::splat(0.8));
        for _ in 0..500 {
            s.tick().unwrap();
        }
        assert_eq!(s.activations().biceps, 0.8);
        for _ in 0..1000 {
            s.tick().unwrap();
        }
        assert!(s.activations().biceps < 0.01);
    }

    #[test]
    fn reset_returns_to_rest() {
        let (cfg, profile) = setup();
        let mut s = Session::new(cfg, profile, ObjectModel::egg()).unwrap();
        let mut last = None;
        for _ in 0..1500 {
            s.set_activation(ChannelMap {
                trapezius: 1.0,
                ..ChannelMap::splat(0.0)
            });
            last = Some(s.tick().unwrap());
        }
        assert!(last.unwrap().theta > 0.5);
        s.reset();
        let t = s.tick().unwrap();
        assert!(t.theta.abs() < 1e-3);
        assert_eq!(t.grasp, GraspStatus::None);
        assert!(t.t > last.unwrap().t);
    }

    #[test]
    fn scripted_outcomes() {
        let (cfg, profile) = setup();
        let run = |obj: ObjectModel<f64>, name: &str| {
            simulate_grasp(&cfg, &profile, obj, &builtin_script(name).unwrap()).unwrap()
        };
        let gentle = run(ObjectModel::egg(), "gentle");
        assert_eq!(gentle.outcome, GraspStatus::Holding);
        assert!(
            gentle.peak_force < 5.0 && gentle.peak_force > 1.0,
            "{}",
            gentle.peak_force
        );
        assert_eq!(run(ObjectModel::egg(), "crush").outcome, GraspStatus::Crushed);
        assert_eq!(
            run(ObjectModel::rigid_block(), "shallow-soft").outcome,
            GraspStatus::Slipped
        );
        assert_eq!(run(ObjectModel::sponge(), "gentle").outcome, GraspStatus::Holding);
        let free = run(ObjectModel::free(), "close");
        assert_eq!(free.outcome, GraspStatus::None);
        assert_eq!(free.telemetry.len(), 3000);
    }

    #[test]
    fn rates_must_divide() {
        let mut cfg = SessionConfig::<f64>::default();
        cfg.plant.pd.rate_hz = 300.0;
        assert!(cfg.validate().is_err());
        assert!(builtin_script("wave").is_err());
    }
}
