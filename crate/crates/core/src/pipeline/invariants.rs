use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{propagate, sample_channel, ChannelModel};
use crate::guard::{random_perturbation, GuardConfig};
use crate::ofdm::{
    build_packet, build_preamble, detect_packet, fine_cfo, fine_timing_sync, map_to_grid,
    receive_ideal, OfdmConfig, Preamble, RxConfig,
};
use crate::real::Real;

fn random_features<T: Real>(m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex<T>> {
    (0..m)
        .map(|_| {
            Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0)))
        })
        .collect()
}

/// Feature round-trip error through modulate -> identity channel ->
/// ideal-sync receive with the matched reference.
pub fn loopback_error<T: Real>(m: usize, seed: u64) -> T {
    let cfg = OfdmConfig::<T>::standard64();
    let p = build_preamble(&cfg, None).expect("standard preamble");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats = random_features::<T>(m, &mut rng);
    let grid = map_to_grid(&feats, &cfg);
    let tx = build_packet(&grid, &cfg, &p);
    let rxc = RxConfig {
        cfg: &cfg,
        timing_ref: &p.lts_time,
        chanest_ref: &cfg.lts_freq,
        payload_len: m,
        eq_floor: T::of(1e-6),
    };
    let out = receive_ideal(&tx, Preamble::lts1_offset(&cfg), &rxc).expect("loopback receive");
    let mut worst = T::zero();
    for (a, b) in out.features.iter().zip(&feats) {
        let err = (a - b).norm() / b.norm().max(T::one());
        if err > worst {
            worst = err;
        }
    }
    worst
}

/// Worst-case relative deviation of the eavesdropper's channel estimate
/// from H_bob * V, and of the equalized symbols from X / V, over random
/// in-bounds perturbations on a noiseless multipath channel. Timing is
/// ideal: the property under test is the estimation/equalization algebra,
/// which presumes consistently placed DFT windows (sync behavior under
/// perturbations is its own invariant).
pub fn multiplicative_csi_error<T: Real>(trials: usize, seed: u64) -> (T, T) {
    let cfg = OfdmConfig::<T>::standard64();
    let gc = GuardConfig::<T>::default();
    let std_p = build_preamble(&cfg, None).expect("standard preamble");
    let offset = 50usize;
    let model = ChannelModel::multipath4().with_timing_offset(offset);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 96;
    let (mut worst_h, mut worst_x) = (T::zero(), T::zero());

    for _ in 0..trials {
        let pert = random_perturbation(&cfg, &gc, &mut rng);
        let v = pert.values();
        let tx_p = build_preamble(&cfg, Some(&v)).expect("perturbed preamble");
        let feats = random_features::<T>(m, &mut rng);
        let grid = map_to_grid(&feats, &cfg);
        let tx = build_packet(&grid, &cfg, &tx_p);
        let real = sample_channel(&model, &mut rng);
        let mut rx = propagate(&real, &tx);
        rx.extend(vec![Complex::new(T::zero(), T::zero()); 48]);

        let bob_rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &std_p.lts_time,
            chanest_ref: &tx_p.lts_freq,
            payload_len: m,
            eq_floor: T::of(1e-6),
        };
        let eve_rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &std_p.lts_time,
            chanest_ref: &cfg.lts_freq,
            payload_len: m,
            eq_floor: T::of(1e-6),
        };
        let lts1 = offset + Preamble::lts1_offset(&cfg);
        let bob = receive_ideal(&rx, lts1, &bob_rxc).expect("bob receive");
        let eve = receive_ideal(&rx, lts1, &eve_rxc).expect("eve receive");

        for bin in cfg.active_bins() {
            let want = bob.h_est[bin] * v[bin];
            let err = (eve.h_est[bin] - want).norm() / bob.h_est[bin].norm();
            if err > worst_h {
                worst_h = err;
            }
        }
        let data_bins = cfg.data_bins();
        for (j, (got, x)) in eve.features.iter().zip(&feats).enumerate() {
            let bin = data_bins[j % data_bins.len()];
            let want = x / v[bin];
            let err = (got - want).norm() / want.norm().max(T::of(1e-6));
            if err > worst_x {
                worst_x = err;
            }
        }
    }
    (worst_h, worst_x)
}

/// Over random in-bounds perturbations on a clean single-tap channel:
/// whether the fine-timing argmax ever moves, and the worst fine-CFO
/// deviation, both relative to the unperturbed packet.
pub fn sync_invariance<T: Real>(trials: usize, seed: u64) -> (usize, T) {
    let cfg = OfdmConfig::<T>::standard64();
    let gc = GuardConfig::<T>::default();
    let std_p = build_preamble(&cfg, None).expect("standard preamble");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 96;
    let mut timing_moves = 0usize;
    let mut worst_cfo = T::zero();

    for _ in 0..trials {
        let pert = random_perturbation(&cfg, &gc, &mut rng);
        let v = pert.values();
        let tx_p = build_preamble(&cfg, Some(&v)).expect("perturbed preamble");
        let feats = random_features::<T>(m, &mut rng);
        let grid = map_to_grid(&feats, &cfg);
        let offset = 40usize;
        let mut buf_p = vec![Complex::new(T::zero(), T::zero()); offset];
        buf_p.extend(build_packet(&grid, &cfg, &tx_p));
        let mut buf_s = vec![Complex::new(T::zero(), T::zero()); offset];
        buf_s.extend(build_packet(&grid, &cfg, &std_p));

        let nominal = offset + Preamble::lts1_offset(&cfg);
        let (ip, _) = fine_timing_sync(&buf_p, &std_p.lts_time, nominal - 16, nominal + 17);
        let (is, _) = fine_timing_sync(&buf_s, &std_p.lts_time, nominal - 16, nominal + 17);
        if ip != is {
            timing_moves += 1;
        }
        let ep = fine_cfo(&buf_p[ip..ip + 64], &buf_p[ip + 64..ip + 128]).expect("cfo");
        let es = fine_cfo(&buf_s[is..is + 64], &buf_s[is + 64..is + 128]).expect("cfo");
        let d = (ep - es).abs();
        if d > worst_cfo {
            worst_cfo = d;
        }
    }
    (timing_moves, worst_cfo)
}

/// Fast numerical checks used by the `loopback` command: round-trip
/// identity, transform identity, CP structure, the multiplicative-CSI
/// property, sync invariance, and packet detection.
pub fn invariant_suite(seed: u64) -> Vec<(String, bool)> {
    let mut out = Vec::new();

    let e32 = loopback_error::<f32>(392, seed);
    out.push((format!("loopback identity 32-bit: max rel err {e32:.2e} <= 1e-6"), e32 <= 1e-6));
    let e64 = loopback_error::<f64>(392, seed);
    out.push((format!("loopback identity 64-bit: max rel err {e64:.2e} <= 1e-9"), e64 <= 1e-9));

    let dft_err = {
        let x: Vec<Complex<f64>> = (0..64)
            .map(|i| Complex::from_polar(1.0, 0.41 * i as f64))
            .collect();
        let y = crate::ofdm::idft(&crate::ofdm::dft(&x));
        x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    };
    out.push((format!("dft/idft identity: max err {dft_err:.2e} <= 1e-9"), dft_err <= 1e-9));

    let cp_ok = {
        let cfg = OfdmConfig::<f64>::standard64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let feats = random_features::<f64>(48, &mut rng);
        let grid = map_to_grid(&feats, &cfg);
        let tx = crate::ofdm::modulate(&grid, &cfg);
        (0..cfg.cp_len).all(|i| tx[i] == tx[cfg.k + i])
    };
    out.push(("cyclic prefix is a copy of the symbol tail".to_string(), cp_ok));

    let (h_err, x_err) = multiplicative_csi_error::<f64>(20, seed ^ 2);
    out.push((
        format!("multiplicative CSI (20 perturbations): max rel err {h_err:.2e} <= 1e-9"),
        h_err <= 1e-9,
    ));
    out.push((
        format!("eavesdropper equalization X/V: max rel err {x_err:.2e} <= 1e-9"),
        x_err <= 1e-9,
    ));

    let (moves, cfo_dev) = sync_invariance::<f64>(20, seed ^ 3);
    out.push((format!("fine-timing invariance: {moves} of 20 argmax moves"), moves == 0));
    out.push((
        format!("fine-CFO invariance: max deviation {cfo_dev:.2e} <= 1e-9"),
        cfo_dev <= 1e-9,
    ));

    let detect_ok = {
        let cfg = OfdmConfig::<f64>::standard64();
        let p = build_preamble(&cfg, None).expect("standard preamble");
        let mut buf = vec![Complex::new(0.0, 0.0); 100];
        buf.extend_from_slice(&p.samples);
        buf.extend(vec![Complex::new(0.0, 0.0); 100]);
        matches!(detect_packet(&buf), Ok(s) if (s as i64 - 100).abs() <= 2)
    };
    out.push(("packet detection within 2 samples on a clean buffer".to_string(), detect_ok));

    out
}
