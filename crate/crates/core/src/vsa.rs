//! Antagonistic variable-stiffness actuator: quasi-static inverse map from
//! (stiffness, position) references to motor angles, and the matching
//! forward tendon model.
//!
//! Each tendon runs from a motor pulley (radius `r_m`) around the joint
//! pulley (radius `r_j`) through a nonlinear spring whose tension is
//! `F(x) = a x^2 + b x` for extension `x >= 0` and zero when slack. With
//! extensions `x1 = r_m alpha + r_j theta` and `x2 = r_m beta - r_j theta`,
//! the torque an external load must supply to hold the joint at `theta` is
//! `r_j (F(x1) - F(x2))`, and while both tendons are taut
//!
//! ```text
//! S     = 2 r_j^2 (a r_m (alpha + beta) + b)
//! theta = tau / S - (r_m / 2 r_j) (alpha - beta)
//! ```
//!
//! which is exactly what [`inverse_vsa`] inverts.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::scalar::{clamp, Scalar};

/// Margin kept above the model's minimum stiffness by [`clamp_references`].
pub const STIFFNESS_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VsaParams<T> {
    /// Quadratic spring coefficient, N/m^2.
    pub a: T,
    /// Linear spring coefficient, N/m.
    pub b: T,
    /// Motor pulley radius, m.
    pub r_m: T,
    /// Joint pulley radius, m.
    pub r_j: T,
}

impl<T: Scalar> Default for VsaParams<T> {
    fn default() -> Self {
        Self {
            a: T::lit(1e4),
            b: T::lit(100.0),
            r_m: T::lit(0.01),
            r_j: T::lit(0.02),
        }
    }
}

impl<T: Scalar> VsaParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > T::zero() && self.b >= T::zero() && self.r_m > T::zero() && self.r_j > T::zero()) {
            return config_err("VSA parameters need a > 0, b >= 0, r_m > 0, r_j > 0");
        }
        Ok(())
    }

    /// Stiffness with zero pretension, `2 b r_j^2`.
    pub fn min_stiffness(&self) -> T {
        T::lit(2.0) * self.b * self.r_j * self.r_j
    }

    /// d S / d(alpha + beta) in the taut regime.
    pub fn stiffness_slope(&self) -> T {
        T::lit(2.0) * self.a * self.r_m * self.r_j * self.r_j
    }

    /// Taut-regime stiffness for a motor command.
    pub fn taut_stiffness(&self, cmd: &MotorCommand<T>) -> T {
        self.min_stiffness() + self.stiffness_slope() * (cmd.alpha + cmd.beta)
    }

    fn tension(&self, x: T) -> T {
        if x < T::zero() {
            T::zero()
        } else {
            self.a * x * x + self.b * x
        }
    }

    fn tension_slope(&self, x: T) -> T {
        if x < T::zero() {
            T::zero()
        } else {
            T::lit(2.0) * self.a * x + self.b
        }
    }

    /// Tendon extensions at joint angle `theta`.
    pub fn extensions(&self, cmd: &MotorCommand<T>, theta: T) -> (T, T) {
        (
            self.r_m * cmd.alpha + self.r_j * theta,
            self.r_m * cmd.beta - self.r_j * theta,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorCommand<T> {
    pub alpha: T,
    pub beta: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState<T> {
    pub theta: T,
    pub stiffness: T,
    pub tau_load: T,
}

/// Holding torque and stiffness at a joint angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardState<T> {
    /// Torque an external load must supply to hold the joint still, N·m.
    pub tau: T,
    /// `d tau / d theta`, N·m/rad.
    pub stiffness: T,
    /// Both tendons under tension (extension >= 0).
    pub taut: bool,
}

/// Motor angles realizing stiffness `s_r` and equilibrium `theta_r` under
/// `tau_load`.
pub fn inverse_vsa<T: Scalar>(s_r: T, theta_r: T, tau_load: T, p: &VsaParams<T>) -> Result<MotorCommand<T>> {
    let s_min = p.min_stiffness();
    if !(s_r > s_min) {
        return Err(Error::StiffnessInfeasible {
            s_ref: s_r.as_f64(),
            minimum: s_min.as_f64(),
        });
    }
    let common = (s_r - s_min) / (T::lit(4.0) * p.a * p.r_m * p.r_j * p.r_j);
    let load_term = if tau_load == T::zero() {
        T::zero()
    } else {
        tau_load / s_r
    };
    let diff = p.r_j / p.r_m * (load_term - theta_r);
    Ok(MotorCommand {
        alpha: common + diff,
        beta: common - diff,
    })
}

/// Tendon model evaluated at `theta`. Slack tendons contribute neither
/// tension nor stiffness.
pub fn forward_vsa<T: Scalar>(cmd: &MotorCommand<T>, theta: T, p: &VsaParams<T>) -> ForwardState<T> {
    let (x1, x2) = p.extensions(cmd, theta);
    ForwardState {
        tau: p.r_j * (p.tension(x1) - p.tension(x2)),
        stiffness: p.r_j * p.r_j * (p.tension_slope(x1) + p.tension_slope(x2)),
        taut: x1 >= T::zero() && x2 >= T::zero(),
    }
}

/// Closed-form joint angle where the holding torque equals `tau_load`.
pub fn equilibrium<T: Scalar>(cmd: &MotorCommand<T>, tau_load: T, p: &VsaParams<T>) -> Result<T> {
    let s = p.taut_stiffness(cmd);
    if !(s > T::zero()) {
        return Err(Error::InfeasibleEquilibrium("no tendon stiffness".into()));
    }
    let theta = tau_load / s - p.r_m / (T::lit(2.0) * p.r_j) * (cmd.alpha - cmd.beta);
    let (x1, x2) = p.extensions(cmd, theta);
    if x1 < T::zero() || x2 < T::zero() {
        return Err(Error::InfeasibleEquilibrium(format!(
            "a tendon is slack at theta = {theta} (extensions {x1}, {x2})"
        )));
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdGains<T> {
    pub kp: T,
    pub kd: T,
    pub rate_hz: T,
}

impl<T: Scalar> Default for PdGains<T> {
    fn default() -> Self {
        Self {
            kp: T::lit(80.0),
            kd: T::lit(1.0),
            rate_hz: T::lit(500.0),
        }
    }
}

impl<T: Scalar> PdGains<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp > T::zero() && self.kd >= T::zero() && self.rate_hz > T::zero()) {
            return config_err("PD gains need kp > 0, kd >= 0, rate_hz > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorMeasurement<T> {
    pub angle: T,
    pub velocity: T,
}

pub fn pd_step<T: Scalar>(setpoint: T, measured: &MotorMeasurement<T>, gains: &PdGains<T>) -> T {
    gains.kp * (setpoint - measured.angle) - gains.kd * measured.velocity
}

/// Admissible reference ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLimits<T> {
    pub s_max: T,
    pub theta_min: T,
    pub theta_max: T,
}

/// Clamps references into the feasible region of [`inverse_vsa`]. Idempotent.
pub fn clamp_references<T: Scalar>(s_ref: T, theta_ref: T, p: &VsaParams<T>, limits: &ReferenceLimits<T>) -> (T, T) {
    let s_lo = p.min_stiffness() + T::lit(STIFFNESS_EPSILON);
    let s_hi = limits.s_max.max(s_lo);
    (
        clamp(s_ref, s_lo, s_hi),
        clamp(theta_ref, limits.theta_min, limits.theta_max),
    )
}

/// First-order, velocity-limited motor driven by the PD output interpreted
/// as a velocity demand (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorModel<T> {
    pub time_constant_s: T,
    pub velocity_limit: T,
}

impl<T: Scalar> Default for MotorModel<T> {
    fn default() -> Self {
        Self {
            time_constant_s: T::lit(0.02),
            velocity_limit: T::lit(10.0),
        }
    }
}

impl<T: Scalar> MotorModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_constant_s > T::zero() && self.velocity_limit > T::zero()) {
            return config_err("motor time constant and velocity limit must be positive");
        }
        Ok(())
    }

    pub fn step(&self, state: MotorMeasurement<T>, demand: T, dt_s: T) -> MotorMeasurement<T> {
        let decay = (-dt_s / self.time_constant_s).exp();
        let v = demand + (state.velocity - demand) * decay;
        let v = clamp(v, -self.velocity_limit, self.velocity_limit);
        MotorMeasurement {
            angle: state.angle + v * dt_s,
            velocity: v,
        }
    }
}
