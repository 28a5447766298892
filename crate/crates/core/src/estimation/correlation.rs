use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least two points".into()));
    }
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().fold(T::zero(), |s, &v| s + v) / n;
    let mb = b.iter().fold(T::zero(), |s, &v| s + v) / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::UndefinedCorrelation("a series has zero variance".into()));
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}
