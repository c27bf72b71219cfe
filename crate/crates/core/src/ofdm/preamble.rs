use num_complex::Complex;

use super::config::OfdmConfig;
use super::fourier::idft;
use crate::error::{Error, Result};
use crate::real::Real;

/// Packet preamble: an STS of 10 repeated 16-sample blocks for detection
/// and coarse sync, followed by a guarded pair of identical LTS symbols for
/// fine sync, CFO and channel estimation.
#[derive(Debug, Clone)]
pub struct Preamble<T> {
    /// 10 repetitions of the 16-sample base block (K=64: 160 samples).
    pub sts: Vec<Complex<T>>,
    /// Frequency-domain LTS actually transmitted (perturbed when a
    /// perturbation is applied), length K in DFT-bin order.
    pub lts_freq: Vec<Complex<T>>,
    /// One time-domain LTS symbol, K samples.
    pub lts_time: Vec<Complex<T>>,
    /// Full preamble: STS, LTS guard (tail of the symbol), then the two
    /// identical LTS symbols.
    pub samples: Vec<Complex<T>>,
}

impl<T: Real> Preamble<T> {
    /// Offset of the first LTS symbol within `samples`.
    pub fn lts1_offset(cfg: &OfdmConfig<T>) -> usize {
        Self::sts_len(cfg) + cfg.k / 2
    }

    pub fn sts_len(cfg: &OfdmConfig<T>) -> usize {
        10 * (cfg.k / 4)
    }

    pub fn len(cfg: &OfdmConfig<T>) -> usize {
        Self::sts_len(cfg) + cfg.k / 2 + 2 * cfg.k
    }
}

/// Assemble the preamble; `perturbation`, when given, multiplies the LTS
/// frequency values pointwise on the active subcarriers while the STS is
/// left untouched. A perturbation entry on a null subcarrier must be the
/// identity.
pub fn build_preamble<T: Real>(
    cfg: &OfdmConfig<T>,
    perturbation: Option<&[Complex<T>]>,
) -> Result<Preamble<T>> {
    let mut lts_freq = cfg.lts_freq.clone();
    if let Some(v) = perturbation {
        if v.len() != cfg.k {
            return Err(Error::Shape {
                op: "build_preamble",
                details: format!("perturbation length {} != K {}", v.len(), cfg.k),
            });
        }
        for bin in 0..cfg.k {
            if cfg.is_null_bin(bin) {
                let ident = (v[bin].re - T::one()).abs() <= T::of(1e-12)
                    && v[bin].im.abs() <= T::of(1e-12);
                if !ident {
                    return Err(Error::PerturbationBounds {
                        bin,
                        what: format!("non-identity value {} on a null subcarrier", v[bin]),
                    });
                }
            } else {
                lts_freq[bin] *= v[bin];
            }
        }
    }

    let sts_base = idft(&cfg.sts_freq);
    let block = cfg.k / 4;
    let mut sts = Vec::with_capacity(10 * block);
    for rep in 0..10 {
        let _ = rep;
        sts.extend_from_slice(&sts_base[..block]);
    }

    let lts_time = idft(&lts_freq);
    let guard = &lts_time[cfg.k - cfg.k / 2..];

    let mut samples = Vec::with_capacity(Preamble::len(cfg));
    samples.extend_from_slice(&sts);
    samples.extend_from_slice(guard);
    samples.extend_from_slice(&lts_time);
    samples.extend_from_slice(&lts_time);

    Ok(Preamble { sts, lts_freq, lts_time, samples })
}
