use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Sum of squared differences between a source and its reconstruction.
/// Batching averages this per-image value.
pub fn loss_reconstruction<T: Real>(s: &[T], s_hat: &[T]) -> Result<T> {
    if s.len() != s_hat.len() {
        return Err(Error::Shape {
            op: "loss_reconstruction",
            details: format!("{} vs {} values", s.len(), s_hat.len()),
        });
    }
    Ok(s.iter().zip(s_hat).map(|(&a, &b)| (a - b) * (a - b)).sum())
}

/// Peak-to-average power ratio of a time-domain signal.
pub fn papr<T: Real>(signal: &[Complex<T>]) -> Result<T> {
    assert!(!signal.is_empty(), "papr of empty signal");
    let mut peak = T::zero();
    let mut total = T::zero();
    for c in signal {
        let p = c.norm_sqr();
        if p > peak {
            peak = p;
        }
        total += p;
    }
    if total <= T::of(1e-300) {
        return Err(Error::ZeroInput("papr"));
    }
    Ok(peak / (total / T::usize(signal.len())))
}

/// Training objective: reconstruction error plus `lambda` times the mean
/// PAPR over the batch of transmit signals.
pub fn loss_total<T: Real>(loss_rec: T, paprs: &[T], lambda: T) -> T {
    if paprs.is_empty() || lambda == T::zero() {
        return loss_rec;
    }
    let mean_rho = paprs.iter().copied().sum::<T>() / T::usize(paprs.len());
    loss_rec + lambda * mean_rho
}
