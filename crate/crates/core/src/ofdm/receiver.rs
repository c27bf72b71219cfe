use num_complex::Complex;

use super::chanest::{equalize, estimate_channel};
use super::config::OfdmConfig;
use super::fourier::dft;
use super::grid::{extract_features, FrameGrid};
use super::preamble::Preamble;
use super::sync::{
    coarse_cfo, correct_cfo, detect_packet, fine_cfo, fine_timing_sync, SyncResult,
};
use crate::error::{Error, Result};
use crate::real::Real;

/// Receiver-side knowledge: the timing reference is always the standard
/// time-domain LTS, while the channel-estimation reference is the standard
/// LTS for an eavesdropper and the perturbed one for a legitimate receiver
/// under defense.
pub struct RxConfig<'a, T> {
    pub cfg: &'a OfdmConfig<T>,
    /// Time-domain LTS used for fine timing (one K-sample symbol).
    pub timing_ref: &'a [Complex<T>],
    /// Frequency-domain LTS used in the channel-estimation denominator.
    pub chanest_ref: &'a [Complex<T>],
    /// Expected payload length M.
    pub payload_len: usize,
    /// Equalizer magnitude floor.
    pub eq_floor: T,
}

#[derive(Debug, Clone)]
pub struct RxResult<T> {
    pub features: Vec<Complex<T>>,
    /// Equalized payload grid.
    pub grid: FrameGrid<T>,
    /// Demodulated grid before equalization.
    pub grid_raw: FrameGrid<T>,
    pub h_est: Vec<Complex<T>>,
    pub sync: SyncResult<T>,
    pub erasures: Vec<usize>,
}

/// Full receive chain: detect, coarse CFO, fine timing, fine CFO, channel
/// estimation, equalization, feature extraction.
pub fn receive<T: Real>(rx: &[Complex<T>], rxc: &RxConfig<'_, T>) -> Result<RxResult<T>> {
    let cfg = rxc.cfg;
    let start = detect_packet(rx)?;
    let coarse = coarse_cfo(rx, start);
    let rx1 = correct_cfo(rx, coarse, start);

    let lts_nominal = start + Preamble::lts1_offset(cfg);
    let margin = 16usize;
    let from = lts_nominal.saturating_sub(margin);
    let to = lts_nominal + margin + 1;
    if to + cfg.k > rx1.len() {
        return Err(Error::NoPacket);
    }
    let (lts1_idx, correlation) = fine_timing_sync(&rx1, rxc.timing_ref, from, to);

    let l1t = &rx1[lts1_idx..lts1_idx + cfg.k];
    let l2t = &rx1[lts1_idx + cfg.k..lts1_idx + 2 * cfg.k];
    let fine = fine_cfo(l1t, l2t)?;
    let rx2 = correct_cfo(&rx1, fine, lts1_idx);

    finish_reception(
        &rx2,
        lts1_idx,
        rxc,
        SyncResult { packet_start: start, fine_timing_index: lts1_idx, coarse_cfo: coarse, fine_cfo: fine, correlation },
    )
}

/// Receive with ideal synchronization: the caller supplies the exact first
/// LTS sample index and no CFO correction is applied.
pub fn receive_ideal<T: Real>(
    rx: &[Complex<T>],
    lts1_idx: usize,
    rxc: &RxConfig<'_, T>,
) -> Result<RxResult<T>> {
    finish_reception(
        rx,
        lts1_idx,
        rxc,
        SyncResult {
            packet_start: lts1_idx.saturating_sub(Preamble::lts1_offset(rxc.cfg)),
            fine_timing_index: lts1_idx,
            coarse_cfo: T::zero(),
            fine_cfo: T::zero(),
            correlation: Vec::new(),
        },
    )
}

fn finish_reception<T: Real>(
    rx: &[Complex<T>],
    lts1_idx: usize,
    rxc: &RxConfig<'_, T>,
    sync: SyncResult<T>,
) -> Result<RxResult<T>> {
    let cfg = rxc.cfg;
    let n_sym = cfg.symbols_for(rxc.payload_len);
    // Back the DFT windows off into the cyclic prefix. A peak sitting a
    // couple of samples late under multipath would otherwise leak the next
    // symbol into every window; the advance is absorbed by the channel
    // estimate as a linear phase.
    let advance = (cfg.cp_len / 4).min(lts1_idx);
    let base = lts1_idx - advance;
    let payload_start = base + 2 * cfg.k;
    let need = payload_start + n_sym * cfg.symbol_len();
    if need > rx.len() {
        return Err(Error::Format(format!(
            "receive buffer too short: need {need} samples, have {}",
            rx.len()
        )));
    }

    let l1 = dft(&rx[base..base + cfg.k]);
    let l2 = dft(&rx[base + cfg.k..base + 2 * cfg.k]);
    let h_est = estimate_channel(&l1, &l2, rxc.chanest_ref, cfg)?;

    let mut bins = Vec::with_capacity(n_sym * cfg.k);
    for s in 0..n_sym {
        let sym_start = payload_start + s * cfg.symbol_len() + cfg.cp_len;
        bins.extend(dft(&rx[sym_start..sym_start + cfg.k]));
    }
    let grid_raw = FrameGrid { k: cfg.k, n_symbols: n_sym, payload_len: rxc.payload_len, pad: 0, bins };
    let (grid, erasures) = equalize(&grid_raw, &h_est, cfg, rxc.eq_floor);
    let features = extract_features(&grid, cfg, rxc.payload_len)?;
    Ok(RxResult { features, grid, grid_raw, h_est, sync, erasures })
}

#[cfg(test)]
mod tests {
    use super::super::grid::map_to_grid;
    use super::super::modem::build_packet;
    use super::super::preamble::build_preamble;
    use super::*;

    fn ramp(n: usize) -> Vec<Complex<f64>> {
        (0..n)
            .map(|i| Complex::from_polar(1.0, 0.1 * i as f64) * (0.5 + (i % 7) as f64 * 0.2))
            .collect()
    }

    #[test]
    fn loopback_through_identity_channel() {
        let cfg = OfdmConfig::<f64>::standard64();
        let p = build_preamble(&cfg, None).unwrap();
        let feats = ramp(392);
        let grid = map_to_grid(&feats, &cfg);
        let tx = build_packet(&grid, &cfg, &p);
        let rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &p.lts_time,
            chanest_ref: &cfg.lts_freq,
            payload_len: 392,
            eq_floor: 1e-6,
        };
        let out = receive_ideal(&tx, 192, &rxc).unwrap();
        for (a, b) in out.features.iter().zip(&feats) {
            assert!((a - b).norm() < 1e-9 * b.norm().max(1.0));
        }
    }

    #[test]
    fn full_sync_loopback_with_offset_and_cfo() {
        let cfg = OfdmConfig::<f64>::standard64();
        let p = build_preamble(&cfg, None).unwrap();
        let feats = ramp(96);
        let grid = map_to_grid(&feats, &cfg);
        let mut tx = vec![Complex::new(0.0, 0.0); 77];
        tx.extend(build_packet(&grid, &cfg, &p));
        tx.extend(vec![Complex::new(0.0, 0.0); 40]);
        let eps = 0.012;
        let tx: Vec<Complex<f64>> = tx
            .iter()
            .enumerate()
            .map(|(m, &x)| x * Complex::from_polar(1.0, eps * m as f64))
            .collect();
        let rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &p.lts_time,
            chanest_ref: &cfg.lts_freq,
            payload_len: 96,
            eq_floor: 1e-6,
        };
        let out = receive(&tx, &rxc).unwrap();
        assert_eq!(out.sync.fine_timing_index, 77 + 192);
        for (a, b) in out.features.iter().zip(&feats) {
            assert!((a - b).norm() < 1e-6 * b.norm().max(1.0), "{a} vs {b}");
        }
    }
}
