//! Butterworth band-pass design (bilinear transform with pre-warping) and a
//! streaming second-order-section realization.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::scalar::Scalar;

/// Band edges (the -3 dB points) and prototype order of a band-pass filter.
///
/// `order` is the order of the low-pass prototype; the band-pass transfer
/// function has `2 * order` poles realized as `order` biquads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            low_cut_hz: 20.0,
            high_cut_hz: 450.0,
            order: 4,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, fs_hz: f64) -> Result<()> {
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return config_err(format!("sample rate must be positive, got {fs_hz}"));
        }
        if self.order == 0 {
            return config_err("filter order must be at least 1");
        }
        let nyquist = fs_hz / 2.0;
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz && self.high_cut_hz < nyquist) {
            return config_err(format!(
                "band edges must satisfy 0 < {} < {} < {nyquist} (fs/2)",
                self.low_cut_hz, self.high_cut_hz
            ));
        }
        Ok(())
    }

    /// Analog (pre-warped) band edges in rad/s for sample rate `fs_hz`.
    pub fn warped_edges(&self, fs_hz: f64) -> (f64, f64) {
        let warp = |f: f64| 2.0 * fs_hz * (PI * f / fs_hz).tan();
        (warp(self.low_cut_hz), warp(self.high_cut_hz))
    }
}

/// Normalized biquad coefficients: `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 2],
}

impl<T: Scalar> Biquad<T> {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let b = self.b.map(Scalar::as_f64);
        let a = self.a.map(Scalar::as_f64);
        let z2 = z_inv * z_inv;
        (b[0] + z_inv * b[1] + z2 * b[2]) / (1.0 + z_inv * a[0] + z2 * a[1])
    }
}

/// Band-pass filter as a cascade of biquads, each with independent
/// transposed direct-form II state.
#[derive(Debug, Clone)]
pub struct BandpassFilter<T> {
    sections: Vec<Biquad<T>>,
    state: Vec<[T; 2]>,
    fs_hz: f64,
}

impl<T: Scalar> BandpassFilter<T> {
    pub fn design(spec: &FilterSpec, fs_hz: f64) -> Result<Self> {
        spec.validate(fs_hz)?;
        let n = spec.order;
        let (wl, wh) = spec.warped_edges(fs_hz);
        let bw = wh - wl;
        let w0 = (wl * wh).sqrt();
        let fs2 = 2.0 * fs_hz;

        // Low-pass prototype poles on the left unit semicircle, mapped through
        // s -> (s^2 + w0^2) / (s * bw), then bilinear.
        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let half = p * (bw / 2.0);
            let disc = (half * half - w0 * w0).sqrt();
            for s in [half + disc, half - disc] {
                poles.push((fs2 + s) / (fs2 - s));
            }
        }

        let pairs = pair_conjugates(poles);
        let center = 2.0 * (w0 / fs2).atan();
        let z_inv_center = Complex64::from_polar(1.0, -center);

        let sections = pairs
            .into_iter()
            .map(|(p1, p2)| {
                let sum = p1 + p2;
                let prod = p1 * p2;
                let proto = Biquad::<f64> {
                    b: [1.0, 0.0, -1.0],
                    a: [-sum.re, prod.re],
                };
                let g = 1.0 / proto.response(z_inv_center).norm();
                Biquad {
                    b: [T::lit(g), T::zero(), T::lit(-g)],
                    a: [T::lit(-sum.re), T::lit(prod.re)],
                }
            })
            .collect::<Vec<_>>();

        Ok(Self {
            state: vec![[T::zero(); 2]; sections.len()],
            sections,
            fs_hz,
        })
    }

    pub fn sections(&self) -> &[Biquad<T>] {
        &self.sections
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    #[inline]
    pub fn process(&mut self, x: T) -> T {
        let mut v = x;
        for (sec, z) in self.sections.iter().zip(self.state.iter_mut()) {
            let y = sec.b[0] * v + z[0];
            z[0] = sec.b[1] * v - sec.a[0] * y + z[1];
            z[1] = sec.b[2] * v - sec.a[1] * y;
            v = y;
        }
        v
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|z| *z = [T::zero(); 2]);
    }

    /// Complex response of the realized coefficients at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / self.fs_hz);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.response(f_hz).norm().log10()
    }

    /// Impulse response truncated to `len` samples (fresh state).
    pub fn impulse_response(&self, len: usize) -> Vec<T> {
        let mut f = self.clone();
        f.reset();
        (0..len)
            .map(|i| f.process(if i == 0 { T::one() } else { T::zero() }))
            .collect()
    }
}

fn pair_conjugates(poles: Vec<Complex64>) -> Vec<(Complex64, Complex64)> {
    const IM_EPS: f64 = 1e-12;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IM_EPS).collect();
    let mut real: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| p.im.abs() <= IM_EPS)
        .map(|p| Complex64::new(p.re, 0.0))
        .collect();
    complex.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    real.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut out: Vec<_> = complex.into_iter().map(|p| (p, p.conj())).collect();
    out.extend(real.chunks(2).map(|c| (c[0], c[1])));
    out
}
