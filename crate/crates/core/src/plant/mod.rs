//! Quasi-static finger driven by the VSA, with unilateral contact against a
//! virtual object and grasp-outcome bookkeeping.
//!
//! The finger is a single lumped flexion coordinate. A force `F` at the
//! fingertip produces a joint torque `F * tip_radius_m`; a deflection of
//! `d theta` moves the fingertip `d theta * tip_radius_m * 1e3` mm.

mod characterize;
mod object;

pub use characterize::{
    characterize_position, characterize_stiffness, run_probe, summarize, CharacterizationConfig,
    CharacterizationResult, LevelSummary, ProbeProfile, ProbeRecord,
};
pub use object::{GraspStatus, ObjectKind, ObjectModel};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::scalar::{clamp, Scalar};
use crate::vsa::{forward_vsa, pd_step, MotorCommand, MotorMeasurement, MotorModel, PdGains, VsaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FingerModel<T> {
    /// Effective lever from the joint to the fingertip, m.
    pub tip_radius_m: T,
    pub theta_range_rad: [T; 2],
    /// Fingertip stiffness at the device's minimum and maximum joint
    /// stiffness, N/mm.
    pub tip_stiffness_range: [T; 2],
}

impl<T: Scalar> Default for FingerModel<T> {
    fn default() -> Self {
        Self {
            tip_radius_m: T::lit(0.06),
            theta_range_rad: [T::zero(), T::FRAC_PI_2()],
            tip_stiffness_range: [T::lit(0.091), T::lit(1.7)],
        }
    }
}

impl<T: Scalar> FingerModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tip_radius_m > T::zero()) {
            return config_err("tip_radius_m must be positive");
        }
        if !(self.theta_range_rad[0] < self.theta_range_rad[1]) {
            return config_err("theta_range_rad must be increasing");
        }
        if !(self.tip_stiffness_range[0] > T::zero() && self.tip_stiffness_range[0] < self.tip_stiffness_range[1]) {
            return config_err("tip_stiffness_range must be positive and increasing");
        }
        Ok(())
    }

    /// Fingertip stiffness per joint stiffness, (N/mm)/(N·m/rad).
    pub fn tip_gain(&self) -> T {
        T::one() / (T::lit(1e3) * self.tip_radius_m * self.tip_radius_m)
    }

    pub fn tip_stiffness(&self, joint_stiffness: T) -> T {
        joint_stiffness * self.tip_gain()
    }

    pub fn joint_stiffness(&self, tip_stiffness: T) -> T {
        tip_stiffness / self.tip_gain()
    }

    /// Joint stiffness range that realizes `tip_stiffness_range`, N·m/rad.
    pub fn device_stiffness_range(&self) -> [T; 2] {
        self.tip_stiffness_range.map(|k| self.joint_stiffness(k))
    }

    pub fn deflection_mm(&self, d_theta: T) -> T {
        d_theta * self.tip_radius_m * T::lit(1e3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PlantConfig<T> {
    pub vsa: VsaParams<T>,
    pub pd: PdGains<T>,
    pub motor: MotorModel<T>,
    pub finger: FingerModel<T>,
    /// Contact time after which the object counts as lifted, s.
    pub lift_delay_s: T,
}

impl<T: Scalar> Default for PlantConfig<T> {
    fn default() -> Self {
        Self {
            vsa: VsaParams::default(),
            pd: PdGains::default(),
            motor: MotorModel::default(),
            finger: FingerModel::default(),
            lift_delay_s: T::one(),
        }
    }
}

impl<T: Scalar> PlantConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.vsa.validate()?;
        self.pd.validate()?;
        self.motor.validate()?;
        self.finger.validate()?;
        if !(self.lift_delay_s >= T::zero()) {
            return config_err("lift_delay_s must be non-negative");
        }
        let [s_lo, _] = self.finger.device_stiffness_range();
        if !(s_lo > self.vsa.min_stiffness()) {
            return config_err(format!(
                "finger needs joint stiffness {s_lo} at its softest, below the VSA minimum {}",
                self.vsa.min_stiffness()
            ));
        }
        Ok(())
    }

    pub fn dt_s(&self) -> T {
        T::one() / self.pd.rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState<T> {
    pub t_s: T,
    pub alpha: MotorMeasurement<T>,
    pub beta: MotorMeasurement<T>,
    pub theta: T,
    /// Joint stiffness of the tendons at `theta`, N·m/rad.
    pub stiffness: T,
    pub fingertip_force: T,
    pub grasp: GraspStatus,
    pub contact_s: T,
    pub peak_force: T,
    /// Both tendons under tension.
    pub taut: bool,
    /// The joint is resting on a range stop.
    pub at_stop: bool,
}

impl<T: Scalar> PlantState<T> {
    /// Motors at rest at zero angle, finger open.
    pub fn rest(cfg: &PlantConfig<T>, object: &ObjectModel<T>) -> Self {
        Self::settled(&MotorCommand::default(), T::zero(), cfg, object)
    }

    /// Motors parked at `cmd` with the finger in equilibrium under
    /// `external_tip_force`.
    pub fn settled(
        cmd: &MotorCommand<T>,
        external_tip_force: T,
        cfg: &PlantConfig<T>,
        object: &ObjectModel<T>,
    ) -> Self {
        let mut s = Self {
            t_s: T::zero(),
            alpha: MotorMeasurement {
                angle: cmd.alpha,
                velocity: T::zero(),
            },
            beta: MotorMeasurement {
                angle: cmd.beta,
                velocity: T::zero(),
            },
            theta: T::zero(),
            stiffness: T::zero(),
            fingertip_force: T::zero(),
            grasp: GraspStatus::None,
            contact_s: T::zero(),
            peak_force: T::zero(),
            taut: true,
            at_stop: false,
        };
        s.solve_joint(external_tip_force, cfg, object);
        s
    }

    pub fn motor_angles(&self) -> MotorCommand<T> {
        MotorCommand {
            alpha: self.alpha.angle,
            beta: self.beta.angle,
        }
    }

    fn object_engaged(&self, object: &ObjectModel<T>) -> bool {
        !object.is_free() && matches!(self.grasp, GraspStatus::None | GraspStatus::Holding)
    }

    fn solve_joint(&mut self, external_tip_force: T, cfg: &PlantConfig<T>, object: &ObjectModel<T>) {
        let motors = self.motor_angles();
        let r = cfg.finger.tip_radius_m;
        let engaged = self.object_engaged(object);
        let k_contact = if engaged {
            object.joint_contact_stiffness(r)
        } else {
            T::zero()
        };
        let theta_c = object.contact_angle_rad;
        let contact = |theta: T| -> (T, T) {
            if engaged && theta > theta_c {
                (k_contact * (theta - theta_c), k_contact)
            } else {
                (T::zero(), T::zero())
            }
        };
        let load = external_tip_force * r;
        let residual = |theta: T| -> (T, T) {
            let f = forward_vsa(&motors, theta, &cfg.vsa);
            let (tc, kc) = contact(theta);
            (f.tau + tc - load, f.stiffness + kc)
        };
        let [lo, hi] = cfg.finger.theta_range_rad;
        let (theta, at_stop) = solve_increasing(residual, lo, hi, clamp(self.theta, lo, hi));
        let fwd = forward_vsa(&motors, theta, &cfg.vsa);
        self.theta = theta;
        self.at_stop = at_stop;
        self.stiffness = fwd.stiffness;
        self.taut = fwd.taut;
        self.fingertip_force = contact(theta).0 / r;
    }
}

/// Root of a non-decreasing `g` on `[lo, hi]`; returns the nearer end and
/// `true` when the root lies outside. Newton steps, bisection fallback.
fn solve_increasing<T: Scalar>(g: impl Fn(T) -> (T, T), lo: T, hi: T, guess: T) -> (T, bool) {
    let (g_lo, _) = g(lo);
    if g_lo >= T::zero() {
        return (lo, g_lo > T::zero());
    }
    let (g_hi, _) = g(hi);
    if g_hi <= T::zero() {
        return (hi, g_hi < T::zero());
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = guess;
    let tol = T::epsilon() * T::lit(16.0) * (T::one() + hi.abs().max(lo.abs()));
    for _ in 0..200 {
        let (gx, dg) = g(x);
        if gx == T::zero() {
            return (x, false);
        }
        if gx < T::zero() {
            a = x;
        } else {
            b = x;
        }
        if b - a <= tol {
            break;
        }
        let newton = x - gx / dg;
        x = if dg > T::zero() && newton > a && newton < b {
            newton
        } else {
            (a + b) / T::lit(2.0)
        };
    }
    (x, false)
}

/// Advances the plant by `dt_s` (expected in `(0, 0.01]`): PD-driven motors
/// toward `cmd`, then the finger's quasi-static equilibrium under the
/// tendon torque, `external_tip_force` (N, flexing positive) and object
/// contact, then the grasp status.
pub fn step_plant<T: Scalar>(
    state: &PlantState<T>,
    cmd: &MotorCommand<T>,
    external_tip_force: T,
    dt_s: T,
    cfg: &PlantConfig<T>,
    object: &ObjectModel<T>,
) -> PlantState<T> {
    debug_assert!(dt_s > T::zero() && dt_s <= T::lit(0.01));
    let mut next = *state;
    next.t_s = state.t_s + dt_s;
    next.alpha = cfg
        .motor
        .step(state.alpha, pd_step(cmd.alpha, &state.alpha, &cfg.pd), dt_s);
    next.beta = cfg
        .motor
        .step(state.beta, pd_step(cmd.beta, &state.beta, &cfg.pd), dt_s);
    next.solve_joint(external_tip_force, cfg, object);
    next.update_grasp(dt_s, cfg, object);
    next
}

impl<T: Scalar> PlantState<T> {
    fn update_grasp(&mut self, dt_s: T, cfg: &PlantConfig<T>, object: &ObjectModel<T>) {
        let f = self.fingertip_force;
        self.peak_force = self.peak_force.max(f);
        match self.grasp {
            GraspStatus::None if f > T::zero() => {
                self.grasp = GraspStatus::Holding;
            }
            GraspStatus::Holding => {
                self.contact_s += dt_s;
                if object.break_force.is_some_and(|b| f > b) {
                    self.grasp = GraspStatus::Crushed;
                } else if self.contact_s >= cfg.lift_delay_s && f < object.slip_force {
                    self.grasp = GraspStatus::Slipped;
                }
            }
            _ => {}
        }
        if matches!(self.grasp, GraspStatus::Crushed | GraspStatus::Slipped) {
            self.fingertip_force = T::zero();
        }
    }
}

/// A plant bound to its configuration and object, stepped at the PD rate.
#[derive(Debug, Clone)]
pub struct Plant<T> {
    cfg: PlantConfig<T>,
    object: ObjectModel<T>,
    state: PlantState<T>,
}

impl<T: Scalar> Plant<T> {
    pub fn new(cfg: PlantConfig<T>, object: ObjectModel<T>) -> Result<Self> {
        cfg.validate()?;
        object.validate()?;
        if !(cfg.dt_s() <= T::lit(0.01)) {
            return config_err("control rate must be at least 100 Hz");
        }
        let state = PlantState::rest(&cfg, &object);
        Ok(Self { cfg, object, state })
    }

    pub fn config(&self) -> &PlantConfig<T> {
        &self.cfg
    }

    pub fn object(&self) -> &ObjectModel<T> {
        &self.object
    }

    pub fn state(&self) -> &PlantState<T> {
        &self.state
    }

    /// Swaps the object and clears the grasp bookkeeping; the finger stays put.
    pub fn set_object(&mut self, object: ObjectModel<T>) -> Result<()> {
        object.validate()?;
        self.object = object;
        self.state.grasp = GraspStatus::None;
        self.state.contact_s = T::zero();
        self.state.peak_force = T::zero();
        Ok(())
    }

    /// Back to rest; the clock keeps running.
    pub fn reset(&mut self) {
        let t = self.state.t_s;
        self.state = PlantState::rest(&self.cfg, &self.object);
        self.state.t_s = t;
    }

    pub fn step(&mut self, cmd: &MotorCommand<T>, external_tip_force: T) -> &PlantState<T> {
        self.state = step_plant(
            &self.state,
            cmd,
            external_tip_force,
            self.cfg.dt_s(),
            &self.cfg,
            &self.object,
        );
        &self.state
    }
}
