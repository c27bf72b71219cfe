use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use super::config::OfdmConfig;
use super::fourier::{dft, idft};
use super::grid::FrameGrid;
use super::preamble::Preamble;
use crate::error::{Error, Result};
use crate::real::Real;

/// Synthesis IDFT per symbol followed by cyclic-prefix insertion (the last
/// `cp_len` samples prepended). Output length is `n_symbols * (K + cp_len)`.
pub fn modulate<T: Real>(grid: &FrameGrid<T>, cfg: &OfdmConfig<T>) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(grid.n_symbols * cfg.symbol_len());
    for s in 0..grid.n_symbols {
        let time = idft(&grid.bins[s * cfg.k..(s + 1) * cfg.k]);
        out.extend_from_slice(&time[cfg.k - cfg.cp_len..]);
        out.extend_from_slice(&time);
    }
    out
}

/// Strip cyclic prefixes and apply the analysis DFT per symbol.
pub fn demodulate<T: Real>(
    samples: &[Complex<T>],
    cfg: &OfdmConfig<T>,
    n_symbols: usize,
) -> FrameGrid<T> {
    assert!(
        samples.len() >= n_symbols * cfg.symbol_len(),
        "demodulate: {} samples for {} symbols",
        samples.len(),
        n_symbols
    );
    let mut bins = Vec::with_capacity(n_symbols * cfg.k);
    for s in 0..n_symbols {
        let start = s * cfg.symbol_len() + cfg.cp_len;
        bins.extend(dft(&samples[start..start + cfg.k]));
    }
    FrameGrid { k: cfg.k, n_symbols, payload_len: 0, pad: 0, bins }
}

/// Full transmit packet: preamble then modulated payload.
pub fn build_packet<T: Real>(
    grid: &FrameGrid<T>,
    cfg: &OfdmConfig<T>,
    preamble: &Preamble<T>,
) -> Vec<Complex<T>> {
    let mut out = preamble.samples.clone();
    out.extend(modulate(grid, cfg));
    out
}

/// Raw I/Q dump: interleaved little-endian f32 (re, im) pairs.
pub fn dump_iq<T: Real>(path: &Path, samples: &[Complex<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in samples {
        w.write_all(&(s.re.to_f32().unwrap_or(f32::NAN)).to_le_bytes())?;
        w.write_all(&(s.im.to_f32().unwrap_or(f32::NAN)).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_iq<T: Real>(path: &Path) -> Result<Vec<Complex<T>>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("iq file has {} bytes, not a multiple of 8", bytes.len())));
    }
    let mut out = Vec::with_capacity(bytes.len() / 8);
    for chunk in bytes.chunks_exact(8) {
        let re = f32::from_le_bytes(chunk[0..4].try_into().expect("4 bytes"));
        let im = f32::from_le_bytes(chunk[4..8].try_into().expect("4 bytes"));
        out.push(Complex::new(T::of(re as f64), T::of(im as f64)));
    }
    Ok(out)
}
