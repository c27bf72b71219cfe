use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Timing and frequency estimates produced by the synchronization stages.
#[derive(Debug, Clone)]
pub struct SyncResult<T> {
    /// Estimated packet start from STS detection.
    pub packet_start: usize,
    /// Start of the first LTS symbol from fine timing.
    pub fine_timing_index: usize,
    /// Coarse CFO estimate, rad/sample.
    pub coarse_cfo: T,
    /// Fine (residual) CFO estimate, rad/sample.
    pub fine_cfo: T,
    /// |C[i]| over the fine-timing search window.
    pub correlation: Vec<T>,
}

/// Sliding window length for the STS autocorrelation metric.
const DETECT_WINDOW: usize = 48;
/// Normalized-correlation threshold for declaring a packet.
const DETECT_THRESHOLD: f64 = 0.8;
/// Samples the metric must stay above threshold.
const DETECT_SUSTAIN: usize = 32;
/// The metric crosses the threshold while the window still straddles the
/// packet edge, (1 - threshold) * window samples before the true start.
const DETECT_EDGE_OFFSET: usize = 9;

/// Locate the packet start by the delay-16 autocorrelation plateau of the
/// STS. Returns the index of the first STS sample.
pub fn detect_packet<T: Real>(rx: &[Complex<T>]) -> Result<usize> {
    let delay = 16usize;
    if rx.len() < DETECT_WINDOW + delay + DETECT_SUSTAIN {
        return Err(Error::NoPacket);
    }
    let limit = rx.len() - DETECT_WINDOW - delay;
    let mut run = 0usize;
    for i in 0..limit {
        let mut corr = Complex::new(T::zero(), T::zero());
        let mut power = T::zero();
        for m in 0..DETECT_WINDOW {
            corr += rx[i + m].conj() * rx[i + m + delay];
            power += rx[i + m + delay].norm_sqr();
        }
        let metric = if power > T::of(1e-30) { corr.norm() / power } else { T::zero() };
        if metric >= T::of(DETECT_THRESHOLD) {
            run += 1;
            if run == DETECT_SUSTAIN {
                let first = i + 1 - DETECT_SUSTAIN;
                return Ok(first + DETECT_EDGE_OFFSET);
            }
        } else {
            run = 0;
        }
    }
    Err(Error::NoPacket)
}

/// Coarse CFO from the 16-sample periodicity of the STS:
/// (1/16) * angle(sum conj(x[m]) x[m+16]) over a margin inside the
/// detected STS. Estimable range is |cfo| < pi/16.
pub fn coarse_cfo<T: Real>(rx: &[Complex<T>], start: usize) -> T {
    let delay = 16usize;
    let mut acc = Complex::new(T::zero(), T::zero());
    for m in start + 16..start + 128 {
        if m + delay >= rx.len() {
            break;
        }
        acc += rx[m].conj() * rx[m + delay];
    }
    acc.arg() / T::usize(delay)
}

/// Cross-correlate against the known time-domain LTS over
/// `[from, to)`: C[i] = sum_j rx[i+j] conj(ref[j]). Returns the index of
/// the peak magnitude (ties broken toward the smallest index) and the
/// magnitude trace.
pub fn fine_timing_sync<T: Real>(
    rx: &[Complex<T>],
    reference: &[Complex<T>],
    from: usize,
    to: usize,
) -> (usize, Vec<T>) {
    let n = reference.len();
    let to = to.min(rx.len().saturating_sub(n));
    assert!(from < to, "fine_timing_sync: empty search window [{from}, {to})");
    let mut best = from;
    let mut best_mag = T::neg_infinity();
    let mut trace = Vec::with_capacity(to - from);
    for i in from..to {
        let mut c = Complex::new(T::zero(), T::zero());
        for (j, r) in reference.iter().enumerate() {
            c += rx[i + j] * r.conj();
        }
        let mag = c.norm();
        trace.push(mag);
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    (best, trace)
}

/// Fine CFO from the phase drift between the two identical LTS symbols:
/// eps = (1/K) * angle(sum conj(lts1[i]) lts2[i]).
pub fn fine_cfo<T: Real>(lts1: &[Complex<T>], lts2: &[Complex<T>]) -> Result<T> {
    assert_eq!(lts1.len(), lts2.len(), "fine_cfo: length mismatch");
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut energy = T::zero();
    for (a, b) in lts1.iter().zip(lts2) {
        acc += a.conj() * b;
        energy += a.norm_sqr() + b.norm_sqr();
    }
    if energy <= T::of(1e-30) {
        return Err(Error::ZeroInput("fine_cfo"));
    }
    Ok(acc.arg() / T::usize(lts1.len()))
}

/// Rotate out a frequency offset: rx'[m] = rx[m] e^{-j (m - origin) eps}.
pub fn correct_cfo<T: Real>(rx: &[Complex<T>], eps: T, origin: usize) -> Vec<Complex<T>> {
    rx.iter()
        .enumerate()
        .map(|(m, &x)| {
            let phase = -eps * T::of(m as f64 - origin as f64);
            x * Complex::new(phase.cos(), phase.sin())
        })
        .collect()
}
