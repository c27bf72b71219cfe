// classification-defense probe: classifier accuracy for Bob and a
// white-box Eve under untargeted and targeted perturbations
use jsccguard::channel::{add_noise, noise_power_for, propagate, sample_channel, ChannelModel};
use jsccguard::guard::{optimize_classification_guard, GuardConfig, GuardMode};
use jsccguard::harness::{accuracy, argmax, synthesize, SyntheticFamily};
use jsccguard::jscc::{
    classify, encode, mnist_classifier, mnist_decoder, mnist_encoder, train_classifier,
    train_end_to_end, TrainConfig,
};
use jsccguard::ofdm::{build_packet, build_preamble, map_to_grid, receive, OfdmConfig, RxConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let ds = synthesize::<f32>(SyntheticFamily::Shapes, 2000, 1);
    let test = synthesize::<f32>(SyntheticFamily::Shapes, 200, 2);
    let cfg = OfdmConfig::<f32>::standard64();
    let model = ChannelModel::multipath4();
    let mut tc = TrainConfig::new(10, 16, 42);
    tc.snr_db_min = 5.0;
    tc.snr_db_max = 15.0;

    let (enc, _dec, _) =
        train_end_to_end(&ds.images, mnist_encoder(16), mnist_decoder(16), &cfg, &model, 4, &tc)
            .unwrap();
    let labels = ds.labels.clone().unwrap();
    let t0 = std::time::Instant::now();
    let (cls, rep) = train_classifier(
        &ds.images,
        &labels,
        &enc,
        mnist_classifier(16, 10),
        &cfg,
        &model,
        4,
        &tc,
    )
    .unwrap();
    println!("classifier trained in {:?}; last epoch loss {:.4}", t0.elapsed(), rep.epoch_means.last().unwrap());

    let gc = GuardConfig::<f32>::default();
    let (p_un, _) = optimize_classification_guard(
        &enc, &cls, &ds.images, &labels, &cfg, &model, 4, &gc, 20.0, 16, GuardMode::Untargeted,
    )
    .unwrap();
    let (p_tg, _) = optimize_classification_guard(
        &enc, &cls, &ds.images, &labels, &cfg, &model, 4, &gc, 20.0, 16, GuardMode::Targeted(3),
    )
    .unwrap();
    println!("guards optimized");

    let std_p = build_preamble(&cfg, None).unwrap();
    let eval = |pert: Option<&jsccguard::Perturbation32>| {
        let tx_p = match pert {
            None => std_p.clone(),
            Some(p) => build_preamble(&cfg, Some(&p.values())).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut bob_preds, mut eve_preds, mut labs) = (Vec::new(), Vec::new(), Vec::new());
        for (img, &lab) in test.images.iter().zip(test.labels.as_ref().unwrap()) {
            let feats = encode(img, &enc).unwrap();
            let grid = map_to_grid(&feats, &cfg);
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
            bob_preds.push(argmax(&classify(&bob.features, &cls).unwrap()));
            eve_preds.push(argmax(&classify(&eve.features, &cls).unwrap()));
            labs.push(lab);
        }
        (accuracy(&bob_preds, &labs), accuracy(&eve_preds, &labs), eve_preds)
    };

    let (bob0, eve0, _) = eval(None);
    println!("baseline: bob {:.3} eve {:.3}", bob0, eve0);
    let (bob_u, eve_u, _) = eval(Some(&p_un));
    println!("untargeted: bob {:.3} eve {:.3}", bob_u, eve_u);
    let (bob_t, eve_t, preds_t) = eval(Some(&p_tg));
    let target_rate = preds_t.iter().filter(|&&p| p == 3).count() as f64 / preds_t.len() as f64;
    println!("targeted(3): bob {:.3} eve {:.3} target-rate {:.3}", bob_t, eve_t, target_rate);
}
