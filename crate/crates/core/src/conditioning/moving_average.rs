use std::collections::VecDeque;

use crate::error::{config_err, Result};
use crate::scalar::Scalar;

/// Window length in samples for a span of `window_s` seconds.
pub fn window_len(window_s: f64, fs_hz: f64) -> Result<usize> {
    let n = (window_s * fs_hz).round();
    if !(n.is_finite() && n >= 1.0) {
        return config_err(format!(
            "moving-average window {window_s} s at {fs_hz} Hz is shorter than one sample"
        ));
    }
    Ok(n as usize)
}

/// Causal running mean over the most recent `min(len, seen)` samples.
#[derive(Debug, Clone)]
pub struct MovingAverage<T> {
    len: usize,
    buf: VecDeque<T>,
    sum: T,
    since_resync: usize,
}

impl<T: Scalar> MovingAverage<T> {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return config_err("moving-average window must hold at least one sample");
        }
        Ok(Self {
            len,
            buf: VecDeque::with_capacity(len),
            sum: T::zero(),
            since_resync: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.len
    }

    #[inline]
    pub fn push(&mut self, x: T) -> T {
        if self.buf.len() == self.len {
            let old = self.buf.pop_front().unwrap_or_else(T::zero);
            self.sum -= old;
        }
        self.buf.push_back(x);
        self.sum += x;
        self.since_resync += 1;
        // Re-sum once per window so rounding in the running sum cannot drift.
        if self.since_resync >= self.len {
            self.sum = self.buf.iter().fold(T::zero(), |a, &v| a + v);
            self.since_resync = 0;
        }
        self.sum / T::from_usize_lossy(self.buf.len())
    }

    pub fn reset(&mut self) {
        self.buf.clear();
        self.sum = T::zero();
        self.since_resync = 0;
    }
}

/// Batch form of [`MovingAverage`].
pub fn moving_average<T: Scalar>(xs: &[T], window_s: f64, fs_hz: f64) -> Result<Vec<T>> {
    let mut ma = MovingAverage::new(window_len(window_s, fs_hz)?)?;
    Ok(xs.iter().map(|&x| ma.push(x)).collect())
}
