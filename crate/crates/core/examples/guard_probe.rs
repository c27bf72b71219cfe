// defense feasibility probe: optimize one perturbation, then compare the
// legitimate receiver against a white-box eavesdropper
use jsccguard::attacks::attack_whitebox;
use jsccguard::channel::{add_noise, noise_power_for, propagate, sample_channel, ChannelModel};
use jsccguard::guard::{optimize_single, GuardConfig};
use jsccguard::harness::{psnr, synthesize, SyntheticFamily};
use jsccguard::jscc::{decode, encode, mnist_decoder, mnist_encoder, train_end_to_end, TrainConfig};
use jsccguard::ofdm::{build_packet, build_preamble, map_to_grid, receive, OfdmConfig, RxConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n_train: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let epochs: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let snr_lo: f32 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let snr_hi: f32 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let ds = synthesize::<f32>(SyntheticFamily::Shapes, n_train, 1);
    let test = synthesize::<f32>(SyntheticFamily::Shapes, 100, 2);
    let cfg = OfdmConfig::<f32>::standard64();
    let model = if std::env::args().nth(7).as_deref() == Some("awgn") {
        ChannelModel::awgn()
    } else {
        ChannelModel::multipath4()
    };
    let n_taps = if std::env::args().nth(7).as_deref() == Some("awgn") { 1 } else { 4 };
    let mut tc = TrainConfig::new(epochs, 16, 42);
    tc.snr_db_min = snr_lo;
    tc.snr_db_max = snr_hi;

    let (enc, dec, _) =
        train_end_to_end(&ds.images, mnist_encoder(16), mnist_decoder(16), &cfg, &model, n_taps, &tc)
            .unwrap();
    println!("training done");

    let mut gc = GuardConfig::<f32>::default();
    if let Some(lo) = std::env::args().nth(5).and_then(|s| s.parse().ok()) {
        gc.alpha_lower = lo;
    }
    if let Some(hi) = std::env::args().nth(6).and_then(|s| s.parse().ok()) {
        gc.alpha_upper = hi;
    }
    let t0 = std::time::Instant::now();
    let (pert, rep) =
        optimize_single(&enc, &dec, &ds.images, &cfg, &model, n_taps, &gc, 20.0, 16).unwrap();
    println!(
        "guard optimized in {:?}; first loss {:.3}, last loss {:.3}, trailing change {:.4}",
        t0.elapsed(),
        rep.step_losses.first().unwrap(),
        rep.step_losses.last().unwrap(),
        rep.trailing_relative_change()
    );

    // evaluate Bob (perturbed reference) and white-box Eve (standard)
    let std_p = build_preamble(&cfg, None).unwrap();
    let vals = pert.values();
    let tx_p = build_preamble(&cfg, Some(&vals)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut bob_sum, mut eve_sum, mut base_sum) = (0.0f32, 0.0f32, 0.0f32);
    let (mut timing_def, mut timing_und) = (Vec::new(), Vec::new());
    for img in &test.images {
        let feats = encode(img, &enc).unwrap();
        let grid = map_to_grid(&feats, &cfg);

        // defended packet; noise floor anchored to the standard packet
        let tx = build_packet(&grid, &cfg, &tx_p);
        let tx0 = build_packet(&grid, &cfg, &std_p);
        let real = sample_channel(&model, &mut rng);
        let clean = propagate(&real, &tx);
        let clean0 = propagate(&real, &tx0);
        let nv = noise_power_for(&clean0, 20.0);
        let noise_rng = rng.clone();
        let rx = add_noise(clean, nv, &mut rng);
        let bob_rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &std_p.lts_time,
            chanest_ref: &tx_p.lts_freq,
            payload_len: feats.len(),
            eq_floor: 1e-6,
        };
        let bob = receive(&rx, &bob_rxc).unwrap();
        bob_sum += psnr(img, &decode(&bob.features, &dec).unwrap());
        timing_def.push(bob.sync.fine_timing_index);
        eve_sum += psnr(img, &attack_whitebox(&rx, &dec, &cfg).unwrap());

        // undefended baseline, identical channel and noise realization
        let mut nrng = noise_rng;
        let rx0 = add_noise(clean0, nv, &mut nrng);
        let bob0_rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &std_p.lts_time,
            chanest_ref: &cfg.lts_freq,
            payload_len: feats.len(),
            eq_floor: 1e-6,
        };
        let bob0 = receive(&rx0, &bob0_rxc).unwrap();
        timing_und.push(bob0.sync.fine_timing_index);
        base_sum += psnr(img, &decode(&bob0.features, &dec).unwrap());
    }
    let n = test.len() as f32;
    println!(
        "undefended {:.2} dB | defended Bob {:.2} dB | defended whitebox-Eve {:.2} dB",
        base_sum / n,
        bob_sum / n,
        eve_sum / n
    );
    let diffs: Vec<i64> = timing_def
        .iter()
        .zip(&timing_und)
        .map(|(&a, &b)| a as i64 - b as i64)
        .collect();
    let late = diffs.iter().filter(|&&d| d > 0).count();
    println!("timing diff defended-undefended: late {} of {}, histogram {:?}", late, diffs.len(), {
        let mut h = std::collections::BTreeMap::new();
        for d in &diffs { *h.entry(*d).or_insert(0) += 1; }
        h
    });
}
