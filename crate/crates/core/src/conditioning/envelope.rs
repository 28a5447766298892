use crate::error::{config_err, Result};
use crate::scalar::Scalar;

/// Full-wave rectification.
#[inline]
pub fn rectify<T: Scalar>(x: T) -> T {
    x.abs()
}

/// Single-pole low-pass envelope follower.
///
/// Exact discretization of `tau * y' = x - y`, so a step reaches
/// `1 - exp(-t / tau)` of its final value at time `t`.
#[derive(Debug, Clone)]
pub struct EnvelopeDetector<T> {
    coeff: T,
    y: T,
}

impl<T: Scalar> EnvelopeDetector<T> {
    pub fn new(tau_s: f64, fs_hz: f64) -> Result<Self> {
        if !(tau_s > 0.0 && fs_hz > 0.0) {
            return config_err(format!("envelope time constant {tau_s} s must be positive"));
        }
        Ok(Self {
            coeff: T::lit(1.0 - (-1.0 / (tau_s * fs_hz)).exp()),
            y: T::zero(),
        })
    }

    #[inline]
    pub fn push(&mut self, x: T) -> T {
        self.y += self.coeff * (x - self.y);
        self.y
    }

    pub fn value(&self) -> T {
        self.y
    }

    pub fn reset(&mut self) {
        self.y = T::zero();
    }
}

/// Default detector time constant.
pub const DEFAULT_ENVELOPE_TAU_S: f64 = 0.1;

/// Batch envelope of a non-negative stream with the default time constant.
pub fn envelope_detect<T: Scalar>(xs: &[T], fs_hz: f64) -> Result<Vec<T>> {
    let mut det = EnvelopeDetector::new(DEFAULT_ENVELOPE_TAU_S, fs_hz)?;
    Ok(xs.iter().map(|&x| det.push(x)).collect())
}

/// `max(x / mvc - bias, 0)`.
pub fn normalize_mvc<T: Scalar>(x: T, mvc: T, bias: T) -> Result<T> {
    if !(mvc > T::zero()) {
        return config_err(format!("MVC must be positive, got {mvc}"));
    }
    Ok((x / mvc - bias).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::conditioning::moving_average::moving_average;

    #[test]
    fn rectify_examples() {
        assert_eq!(rectify(0.0f64), 0.0);
        assert_eq!(rectify(-3.2f64), 3.2);
        assert_eq!(rectify(3.2f64), 3.2);
    }

    #[test]
    fn zero_in_zero_out() {
        assert!(envelope_detect(&[0.0f64; 1000], 1000.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn step_settles_within_three_time_constants() {
        let c = 0.8;
        let out = envelope_detect(&vec![c; 1000], 1000.0).unwrap();
        // Oracle: y[n] = c (1 - exp(-n dt / tau)); n = 300 -> 1 - e^-3.
        let three_tau = out[299];
        assert!((three_tau - c * (1.0 - (-3.0f64).exp())).abs() < 1e-12);
        assert!((c - three_tau) / c < 0.05);
    }

    #[test]
    fn scaling_is_exact() {
        let xs: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.1).sin().abs()).collect();
        let a = envelope_detect(&xs, 1000.0).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * 4.0).collect();
        let b = envelope_detect(&scaled, 1000.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x * 4.0 - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rectified_sine_reaches_mean_of_abs_sine() {
        let fs = 1000.0;
        let amp = 2.5;
        let rect: Vec<f64> = (0..3000)
            .map(|i| rectify(amp * (2.0 * PI * 100.0 * i as f64 / fs).sin()))
            .collect();
        let avg = moving_average(&rect, 0.5, fs).unwrap();
        let env = envelope_detect(&avg, fs).unwrap();
        let truth = amp * 2.0 / PI;
        for &v in &env[2000..] {
            assert!((v - truth).abs() / truth < 0.10, "{v} vs {truth}");
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_mvc(2.0f64, 2.0, 0.0).unwrap(), 1.0);
        assert_eq!(normalize_mvc(0.0f64, 2.0, 0.0).unwrap(), 0.0);
        assert!((normalize_mvc(1.2f64, 2.0, 0.1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(normalize_mvc(0.1f64, 2.0, 0.5).unwrap(), 0.0);
        assert!(normalize_mvc(1.0f64, 0.0, 0.0).is_err());
        assert!(normalize_mvc(1.0f64, -1.0, 0.0).is_err());
    }
}
