// training feasibility probe: PSNR of the legitimate link after a short run
use jsccguard::channel::{apply, sample_channel, ChannelModel};
use jsccguard::harness::{psnr, synthesize, SyntheticFamily};
use jsccguard::jscc::{decode, encode, mnist_decoder, mnist_encoder, train_end_to_end, TrainConfig};
use jsccguard::ofdm::{build_packet, build_preamble, map_to_grid, receive, OfdmConfig, RxConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n_train: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let epochs: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let ds = synthesize::<f32>(SyntheticFamily::Shapes, n_train, 1);
    let test = synthesize::<f32>(SyntheticFamily::Shapes, 64, 2);
    let cfg = OfdmConfig::<f32>::standard64();
    let model = ChannelModel::multipath4();
    let tc = TrainConfig::new(epochs, 16, 42);

    let t0 = std::time::Instant::now();
    let (enc, dec, rep) =
        train_end_to_end(&ds.images, mnist_encoder(16), mnist_decoder(16), &cfg, &model, 4, &tc)
            .unwrap();
    println!(
        "trained {} steps in {:?}; epoch means: {:?}",
        rep.step_losses.len(),
        t0.elapsed(),
        rep.epoch_means
    );

    // evaluate through the full synchronizing chain at 20 dB
    let p = build_preamble(&cfg, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut psnr_sum = 0.0f32;
    for img in &test.images {
        let feats = encode(img, &enc).unwrap();
        let grid = map_to_grid(&feats, &cfg);
        let tx = build_packet(&grid, &cfg, &p);
        let real = sample_channel(&model, &mut rng);
        let rx = apply(&real, &tx, 20.0, &mut rng);
        let rxc = RxConfig {
            cfg: &cfg,
            timing_ref: &p.lts_time,
            chanest_ref: &cfg.lts_freq,
            payload_len: feats.len(),
            eq_floor: 1e-6,
        };
        let out = receive(&rx, &rxc).unwrap();
        let rec = decode(&out.features, &dec).unwrap();
        psnr_sum += psnr(img, &rec);
    }
    println!("Bob PSNR at 20 dB over {} packets: {:.2} dB", test.len(), psnr_sum / test.len() as f32);
}
