use num_complex::Complex;

use super::config::OfdmConfig;
use crate::error::{Error, Result};
use crate::real::Real;

/// Frequency-domain OFDM payload: `n_symbols` rows of K bins with the
/// data/pilot/null partition applied.
#[derive(Debug, Clone)]
pub struct FrameGrid<T> {
    pub k: usize,
    pub n_symbols: usize,
    /// Number of feature symbols carried (pad positions excluded).
    pub payload_len: usize,
    /// Zero-padded data slots in the last symbol.
    pub pad: usize,
    /// Row-major [symbol][bin].
    pub bins: Vec<Complex<T>>,
}

impl<T: Real> FrameGrid<T> {
    pub fn at(&self, symbol: usize, bin: usize) -> Complex<T> {
        self.bins[symbol * self.k + bin]
    }
}

/// Fill features onto the data subcarriers in ascending logical order
/// within each symbol, symbol by symbol; insert pilots, zero the nulls and
/// pad the tail of the last symbol.
pub fn map_to_grid<T: Real>(features: &[Complex<T>], cfg: &OfdmConfig<T>) -> FrameGrid<T> {
    assert!(!features.is_empty(), "map_to_grid: empty payload");
    let n_symbols = cfg.symbols_for(features.len());
    let data_bins = cfg.data_bins();
    let pad = n_symbols * data_bins.len() - features.len();
    let mut bins = vec![Complex::new(T::zero(), T::zero()); n_symbols * cfg.k];
    let mut it = features.iter();
    for s in 0..n_symbols {
        for &b in &data_bins {
            if let Some(&f) = it.next() {
                bins[s * cfg.k + b] = f;
            }
        }
        for (l, &pv) in cfg.pilot_logical.iter().zip(&cfg.pilot_values) {
            bins[s * cfg.k + cfg.bin(*l)] = pv;
        }
    }
    FrameGrid { k: cfg.k, n_symbols, payload_len: features.len(), pad, bins }
}

/// Exact inverse of [`map_to_grid`]: read the data subcarriers back in fill
/// order, dropping pads, pilots and nulls.
pub fn extract_features<T: Real>(
    grid: &FrameGrid<T>,
    cfg: &OfdmConfig<T>,
    payload_len: usize,
) -> Result<Vec<Complex<T>>> {
    let capacity = grid.n_symbols * cfg.n_data();
    if payload_len > capacity {
        return Err(Error::Shape {
            op: "extract_features",
            details: format!("payload {payload_len} exceeds grid capacity {capacity}"),
        });
    }
    let data_bins = cfg.data_bins();
    let mut out = Vec::with_capacity(payload_len);
    'outer: for s in 0..grid.n_symbols {
        for &b in &data_bins {
            if out.len() == payload_len {
                break 'outer;
            }
            out.push(grid.at(s, b));
        }
    }
    Ok(out)
}
