// attack feasibility probe: semi-white-box and black-box surrogate quality
// on the target distribution, with and without the codebook defense
use jsccguard::attacks::{
    collect_blackbox_pairs, train_surrogate_blackbox, train_surrogate_semi_whitebox,
};
use jsccguard::channel::{add_noise, noise_power_for, propagate, sample_channel, ChannelModel};
use jsccguard::guard::{optimize_codebook, select_perturbation, Codebook, GuardConfig};
use jsccguard::harness::{psnr, synthesize, SyntheticFamily};
use jsccguard::jscc::{
    blackbox_decoder, decode, encode, mnist_decoder, mnist_encoder, train_end_to_end, JsccModel,
    TrainConfig,
};
use jsccguard::ofdm::{build_packet, build_preamble, map_to_grid, receive, OfdmConfig, RxConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let ds = synthesize::<f32>(SyntheticFamily::Shapes, 2000, 1);
    let aux = synthesize::<f32>(SyntheticFamily::Marks, 2000, 3);
    let test = synthesize::<f32>(SyntheticFamily::Shapes, 100, 2);
    let cfg = OfdmConfig::<f32>::standard64();
    let model = ChannelModel::multipath4();
    let mut tc = TrainConfig::new(10, 16, 42);
    tc.snr_db_min = 5.0;
    tc.snr_db_max = 15.0;

    let (enc, dec, _) =
        train_end_to_end(&ds.images, mnist_encoder(16), mnist_decoder(16), &cfg, &model, 4, &tc)
            .unwrap();
    println!("main training done");

    // semi-white-box surrogate on the auxiliary family
    let t0 = std::time::Instant::now();
    let (semi, _) =
        train_surrogate_semi_whitebox(&enc, &aux.images, &cfg, &model, 4, &tc).unwrap();
    println!("semi surrogate trained in {:?}", t0.elapsed());

    // black-box captures (no defense) and surrogate
    let std_p = build_preamble(&cfg, None).unwrap();
    let device_plain = |img: &[f32], _round: u64| {
        let feats = encode(img, &enc).unwrap();
        build_packet(&map_to_grid(&feats, &cfg), &cfg, &std_p)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = collect_blackbox_pairs(
        device_plain, &aux.images, [1, 28, 28], enc.arch.feature_dim, &cfg, &model, 20.0, &mut rng,
    )
    .unwrap();
    let t0 = std::time::Instant::now();
    let (bb, _) = train_surrogate_blackbox(&pairs, blackbox_decoder(16), &tc).unwrap();
    println!("blackbox surrogate trained in {:?}", t0.elapsed());

    // codebook defense
    let gc = GuardConfig::<f32>::default();
    let t0 = std::time::Instant::now();
    let (entries, _) =
        optimize_codebook(&enc, &dec, &ds.images, &cfg, &model, 4, &gc, 20.0, 16).unwrap();
    let cb = Codebook::new(64, entries, &gc);
    println!("codebook of {} generated in {:?}", cb.len(), t0.elapsed());

    // black-box captures under the defense, surrogate retrained
    let device_def = |img: &[f32], round: u64| {
        let feats = encode(img, &enc).unwrap();
        let p = select_perturbation(&cb, 99, round).unwrap();
        let tx_p = build_preamble(&cfg, Some(&p.values())).unwrap();
        build_packet(&map_to_grid(&feats, &cfg), &cfg, &tx_p)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs_def = collect_blackbox_pairs(
        device_def, &aux.images, [1, 28, 28], enc.arch.feature_dim, &cfg, &model, 20.0, &mut rng,
    )
    .unwrap();
    let (bb_def, _) = train_surrogate_blackbox(&pairs_def, blackbox_decoder(16), &tc).unwrap();
    println!("defended blackbox surrogate trained");

    let eval = |head: &JsccModel<f32>, defended: bool, seed: u64| -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut bob_s, mut eve_s) = (0.0, 0.0);
        for (round, img) in test.images.iter().enumerate() {
            let feats = encode(img, &enc).unwrap();
            let grid = map_to_grid(&feats, &cfg);
            let tx_p = if defended {
                let p = select_perturbation(&cb, 7, round as u64).unwrap();
                build_preamble(&cfg, Some(&p.values())).unwrap()
            } else {
                std_p.clone()
            };
            let tx = build_packet(&grid, &cfg, &tx_p);
            let tx0 = build_packet(&grid, &cfg, &std_p);
            let real = sample_channel(&model, &mut rng);
            let nv = noise_power_for(&propagate(&real, &tx0), 20.0);
            let rx = add_noise(propagate(&real, &tx), nv, &mut rng);
            let bob_rxc = RxConfig {
                cfg: &cfg,
                timing_ref: &std_p.lts_time,
                chanest_ref: &tx_p.lts_freq,
                payload_len: feats.len(),
                eq_floor: 1e-6,
            };
            let eve_rxc = RxConfig {
                cfg: &cfg,
                timing_ref: &std_p.lts_time,
                chanest_ref: &cfg.lts_freq,
                payload_len: feats.len(),
                eq_floor: 1e-6,
            };
            let bob = receive(&rx, &bob_rxc).unwrap();
            let eve = receive(&rx, &eve_rxc).unwrap();
            bob_s += psnr(img, &decode(&bob.features, &dec).unwrap()) as f64;
            eve_s += psnr(img, &decode(&eve.features, head).unwrap()) as f64;
        }
        (bob_s / test.len() as f64, eve_s / test.len() as f64)
    };

    let (bob, wb) = eval(&dec, false, 11);
    println!("undefended: bob {:.2} | whitebox-eve {:.2}", bob, wb);
    let (_, semi_p) = eval(&semi, false, 11);
    println!("undefended semi-whitebox eve: {:.2}", semi_p);
    let (_, bb_p) = eval(&bb, false, 11);
    println!("undefended blackbox eve: {:.2}", bb_p);

    let (bob_d, wb_d) = eval(&dec, true, 13);
    println!("defended: bob {:.2} | whitebox-eve {:.2}", bob_d, wb_d);
    let (_, semi_d) = eval(&semi, true, 13);
    println!("defended semi-whitebox eve: {:.2}", semi_d);
    let (_, bb_d) = eval(&bb_def, true, 13);
    println!("defended blackbox eve (surrogate trained on defended captures): {:.2}", bb_d);
    let (_, bb_own) = eval(&bb, true, 13);
    println!("defended blackbox eve (surrogate from Eve's own undefended device): {:.2}", bb_own);
}
