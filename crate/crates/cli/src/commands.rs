use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jsccguard::attacks::{
    collect_blackbox_pairs, save_pairs, train_surrogate_blackbox, train_surrogate_semi_whitebox,
    AttackKind,
};
use jsccguard::channel::{ChannelKind, ChannelModel};
use jsccguard::guard::{
    load_codebook, optimize_classification_guard, optimize_codebook, save_codebook, Codebook,
    GuardConfig, GuardMode, Perturbation,
};
use jsccguard::harness::{
    emit_report, load_dataset, run_experiment, save_dataset, synthesize, Dataset, Defense,
    ExperimentSpec, FileConfig, SyntheticFamily, Task,
};
use jsccguard::jscc::{
    blackbox_decoder, cifar_decoder, cifar_encoder, load_model, mnist_classifier, mnist_decoder,
    mnist_encoder, save_model, train_classifier, train_end_to_end, JsccModel, TrainConfig,
};
use jsccguard::ofdm::OfdmConfig;
use jsccguard::{Error, Result};

use crate::Common;

fn load_config(common: &Common) -> Result<FileConfig> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn ofdm_config(cfg: &FileConfig) -> Result<OfdmConfig<f32>> {
    let has_custom = cfg.get("ofdm.k").is_some()
        || cfg.get("ofdm.cp_len").is_some()
        || cfg.get("ofdm.pilot_indices").is_some()
        || cfg.get("ofdm.null_indices").is_some();
    if !has_custom {
        return Ok(OfdmConfig::standard64());
    }
    let k = cfg.get_usize("ofdm.k", 64)?;
    let cp = cfg.get_usize("ofdm.cp_len", 16)?;
    let pilots = cfg.get_i32_list("ofdm.pilot_indices", &[-21, -7, 7, 21])?;
    let pilot_vals = cfg.get_f64_list("ofdm.pilot_values", &[1.0, 1.0, 1.0, -1.0])?;
    let defaults: Vec<i32> =
        std::iter::once(0).chain(27..=31).chain(-32..=-27).collect();
    let nulls = cfg.get_i32_list("ofdm.null_indices", &defaults)?;
    if pilot_vals.len() != pilots.len() {
        return Err(Error::Config("pilot value count must match pilot indices".into()));
    }
    let pv: Vec<Complex<f32>> =
        pilot_vals.iter().map(|&v| Complex::new(v as f32, 0.0)).collect();
    Ok(OfdmConfig::with_partition(k, cp, pilots, pv, nulls))
}

fn train_config(cfg: &FileConfig, common: &Common) -> Result<TrainConfig<f32>> {
    let mut tc = TrainConfig::new(
        cfg.get_usize("train.epochs", 10)?,
        cfg.get_usize("train.batch_size", 16)?,
        cfg.get_u64("train.seed", 42)?,
    );
    tc.learning_rate = cfg.get_f64("train.learning_rate", 1e-3)? as f32;
    tc.papr_weight = cfg.get_f64("train.papr_weight", 1e-4)? as f32;
    tc.snr_db_min = cfg.get_f64("train.snr_db_min", 5.0)? as f32;
    tc.snr_db_max = cfg.get_f64("train.snr_db_max", 15.0)? as f32;
    if let Some(seed) = common.seed {
        tc.seed = seed;
    }
    Ok(tc)
}

fn guard_config(cfg: &FileConfig, common: &Common) -> Result<GuardConfig<f32>> {
    let mut gc = GuardConfig::default();
    gc.alpha_lower = cfg.get_f64("guard.alpha_lower", 0.5)? as f32;
    gc.alpha_upper = cfg.get_f64("guard.alpha_upper", 2.0)? as f32;
    gc.phi_lower = cfg.get_f64("guard.phi_lower", 0.0)? as f32;
    gc.phi_upper = cfg.get_f64("guard.phi_upper", 3.14)? as f32;
    gc.step_size = cfg.get_f64("guard.step_size", 0.1)? as f32;
    gc.delta = cfg.get_f64("guard.delta", 1e-8)? as f32;
    gc.lambda_div = cfg.get_f64("guard.lambda_div", 0.1)? as f32;
    gc.codebook_size = cfg.get_usize("guard.codebook_size", 8)?;
    gc.kappa = cfg.get_f64("guard.kappa", 0.0)? as f32;
    gc.epochs = cfg.get_usize("guard.epochs", 1)?;
    gc.seed = cfg.get_u64("guard.seed", 42)?;
    if let Some(seed) = common.seed {
        gc.seed = seed;
    }
    Ok(gc)
}

fn channel_model(cfg: &FileConfig) -> Result<(ChannelModel<f32>, usize)> {
    let kind = cfg.get_str("exp.channel", "multipath");
    let taps = cfg.get_usize("exp.taps", 4)?;
    let mut model = match kind.as_str() {
        "awgn" => ChannelModel::awgn(),
        "multipath" => ChannelModel {
            kind: ChannelKind::Multipath { taps, decay: 0.5 },
            cfo: None,
            timing_offset: 0,
        },
        other => return Err(Error::Config(format!("unknown channel kind '{other}'"))),
    };
    let cfo = cfg.get_f64("exp.cfo", 0.0)?;
    if cfo != 0.0 {
        model = model.with_cfo(cfo as f32);
    }
    let off = cfg.get_usize("exp.timing_offset", 64)?;
    model = model.with_timing_offset(off);
    let n_taps = match model.kind {
        ChannelKind::Awgn => 1,
        ChannelKind::Multipath { taps, .. } => taps,
    };
    Ok((model, n_taps))
}

fn load_images(cfg: &FileConfig, key: &'static str, labels_key: &'static str) -> Result<Dataset<f32>> {
    let images = cfg.require_str(key)?;
    let labels = cfg.get(labels_key).map(PathBuf::from);
    load_dataset(Path::new(&images), labels.as_deref())
}

pub fn dataset(common: &Common, train_count: usize, test_count: usize) -> Result<()> {
    fs::create_dir_all(&common.out)?;
    let seed = common.seed.unwrap_or(1);
    let sets = [
        ("shapes-train", SyntheticFamily::Shapes, train_count, seed),
        ("shapes-test", SyntheticFamily::Shapes, test_count, seed ^ 0xA5A5),
        ("marks-aux", SyntheticFamily::Marks, train_count, seed ^ 0x5A5A),
    ];
    for (name, family, count, s) in sets {
        let ds = synthesize::<f32>(family, count, s);
        let imgs = common.out.join(format!("{name}.idx"));
        let labels = common.out.join(format!("{name}-labels.idx"));
        save_dataset(&imgs, Some(&labels), &ds)?;
        println!("wrote {} images to {}", count, imgs.display());
    }
    Ok(())
}

pub fn train(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out)?;
    let ofdm = ofdm_config(&cfg)?;
    let tc = train_config(&cfg, common)?;
    let (channel, n_taps) = channel_model(&cfg)?;
    let ds = load_images(&cfg, "exp.dataset", "exp.dataset_labels")?;
    let task = cfg.get_str("exp.task", "reconstruction");
    let width = cfg.get_usize("train.channel_width", 16)?;

    match task.as_str() {
        "reconstruction" => {
            let (enc_arch, dec_arch) = match ds.dims {
                [1, 28, 28] => (mnist_encoder(width), mnist_decoder(width)),
                [3, 32, 32] => (cifar_encoder(width), cifar_decoder(width)),
                d => return Err(Error::Config(format!("no reference architecture for {d:?} images"))),
            };
            let (enc, dec, report) =
                train_end_to_end(&ds.images, enc_arch, dec_arch, &ofdm, &channel, n_taps, &tc)?;
            save_model(&common.out.join("encoder.jscm"), &enc)?;
            save_model(&common.out.join("decoder.jscm"), &dec)?;
            write_losses(&common.out.join("train_losses.csv"), &report.step_losses)?;
            println!(
                "trained {} steps; final epoch mean loss {:.4}",
                report.step_losses.len(),
                report.epoch_means.last().copied().unwrap_or(f32::NAN)
            );
        }
        "classification" => {
            let enc: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.encoder")?))?;
            let classes = cfg.get_usize("exp.classes", 10)?;
            let labels = ds
                .labels
                .as_ref()
                .ok_or_else(|| Error::Config("classification training needs labels".into()))?;
            let (cls, report) = train_classifier(
                &ds.images,
                labels,
                &enc,
                mnist_classifier(width, classes),
                &ofdm,
                &channel,
                n_taps,
                &tc,
            )?;
            save_model(&common.out.join("classifier.jscm"), &cls)?;
            write_losses(&common.out.join("train_losses.csv"), &report.step_losses)?;
            println!("trained classifier; final epoch mean loss {:.4}",
                report.epoch_means.last().copied().unwrap_or(f32::NAN));
        }
        other => return Err(Error::Config(format!("unknown task '{other}'"))),
    }
    Ok(())
}

pub fn guard_gen(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out)?;
    let ofdm = ofdm_config(&cfg)?;
    let gc = guard_config(&cfg, common)?;
    let (channel, n_taps) = channel_model(&cfg)?;
    let ds = load_images(&cfg, "exp.dataset", "exp.dataset_labels")?;
    let enc: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.encoder")?))?;
    let snr = cfg.get_f64("guard.snr_db", 20.0)? as f32;
    let batch = cfg.get_usize("train.batch_size", 16)?;
    let task = cfg.get_str("exp.task", "reconstruction");

    let entries: Vec<Perturbation<f32>> = match task.as_str() {
        "reconstruction" => {
            let dec: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.decoder")?))?;
            let (entries, reports) =
                optimize_codebook(&enc, &dec, &ds.images, &ofdm, &channel, n_taps, &gc, snr, batch)?;
            for (j, r) in reports.iter().enumerate() {
                println!(
                    "entry {}: {} steps, final loss {:.3}, trailing change {:.4}",
                    j,
                    r.step_losses.len(),
                    r.step_losses.last().copied().unwrap_or(f32::NAN),
                    r.trailing_relative_change()
                );
            }
            entries
        }
        "classification" => {
            let cls: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.classifier")?))?;
            let labels = ds
                .labels
                .as_ref()
                .ok_or_else(|| Error::Config("classification guard needs labels".into()))?;
            let mode = match cfg.get("exp.target_class") {
                None => GuardMode::Untargeted,
                Some(t) => GuardMode::Targeted(
                    t.parse().map_err(|_| Error::Config(format!("bad target class '{t}'")))?,
                ),
            };
            let (p, r) = optimize_classification_guard(
                &enc, &cls, &ds.images, labels, &ofdm, &channel, n_taps, &gc, snr, batch, mode,
            )?;
            println!(
                "classification guard: {} steps, final loss {:.4}",
                r.step_losses.len(),
                r.step_losses.last().copied().unwrap_or(f32::NAN)
            );
            vec![p]
        }
        other => return Err(Error::Config(format!("unknown task '{other}'"))),
    };

    let cb = Codebook::new(ofdm.k, entries, &gc);
    let path = common.out.join("codebook.txt");
    save_codebook(&path, &cb)?;
    println!("wrote {} perturbations to {}", cb.len(), path.display());
    Ok(())
}

pub fn attack_train(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out)?;
    let ofdm = ofdm_config(&cfg)?;
    let tc = train_config(&cfg, common)?;
    let (channel, n_taps) = channel_model(&cfg)?;
    let aux = load_images(&cfg, "exp.aux_dataset", "exp.dataset_labels")?;
    let enc: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.encoder")?))?;
    let kinds = cfg.get_str_list("exp.attacks", &["semi_whitebox"]);
    let width = cfg.get_usize("train.channel_width", 16)?;

    for kind in kinds {
        match kind.as_str() {
            "semi_whitebox" => {
                let (surrogate, report) =
                    train_surrogate_semi_whitebox(&enc, &aux.images, &ofdm, &channel, n_taps, &tc)?;
                save_model(&common.out.join("surrogate_semi.jscm"), &surrogate)?;
                println!(
                    "semi-white-box surrogate: final epoch mean loss {:.4}",
                    report.epoch_means.last().copied().unwrap_or(f32::NAN)
                );
            }
            "blackbox" => {
                // Eve's own device carries the encoder but not the
                // legitimate users' codebook: captures use the standard
                // preamble.
                let std_p = jsccguard::ofdm::build_preamble(&ofdm, None)?;
                let device = |img: &[f32], _round: u64| {
                    let feats = jsccguard::jscc::encode(img, &enc).expect("device encode");
                    let grid = jsccguard::ofdm::map_to_grid(&feats, &ofdm);
                    jsccguard::ofdm::build_packet(&grid, &ofdm, &std_p)
                };
                let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0xCAB);
                let snr = cfg.get_f64("guard.snr_db", 20.0)? as f32;
                let pairs = collect_blackbox_pairs(
                    device,
                    &aux.images,
                    aux.dims,
                    enc.arch.feature_dim,
                    &ofdm,
                    &channel,
                    snr,
                    &mut rng,
                )?;
                save_pairs(&common.out.join("pairs.bin"), &pairs)?;
                let (surrogate, report) =
                    train_surrogate_blackbox(&pairs, blackbox_decoder(width), &tc)?;
                save_model(&common.out.join("surrogate_blackbox.jscm"), &surrogate)?;
                println!(
                    "black-box surrogate from {} pairs: final epoch mean loss {:.4}",
                    pairs.len(),
                    report.epoch_means.last().copied().unwrap_or(f32::NAN)
                );
            }
            other => return Err(Error::Config(format!("unknown attack kind '{other}'"))),
        }
    }
    Ok(())
}

pub fn eval(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out)?;
    let ofdm = ofdm_config(&cfg)?;
    let (channel, _) = channel_model(&cfg)?;
    let test = load_images(&cfg, "exp.test_dataset", "exp.test_labels")?;
    let enc: JsccModel<f32> = load_model(Path::new(&cfg.require_str("exp.encoder")?))?;
    let task = match cfg.get_str("exp.task", "reconstruction").as_str() {
        "reconstruction" => Task::Reconstruction,
        "classification" => Task::Classification,
        other => return Err(Error::Config(format!("unknown task '{other}'"))),
    };
    let bob_head: JsccModel<f32> = match task {
        Task::Reconstruction => load_model(Path::new(&cfg.require_str("exp.decoder")?))?,
        Task::Classification => load_model(Path::new(&cfg.require_str("exp.classifier")?))?,
    };

    let mut surrogate_semi: Option<JsccModel<f32>> = None;
    let mut surrogate_blackbox: Option<JsccModel<f32>> = None;
    let mut attacks: Vec<(AttackKind, &JsccModel<f32>)> = Vec::new();
    let kinds = cfg.get_str_list("exp.attacks", &["whitebox"]);
    // resolve every checkpoint before any simulation starts
    for kind in &kinds {
        match kind.as_str() {
            "whitebox" | "decoder_only" => {}
            "semi_whitebox" => {
                surrogate_semi =
                    Some(load_model(Path::new(&cfg.require_str("exp.surrogate_semi")?))?);
            }
            "blackbox" => {
                surrogate_blackbox =
                    Some(load_model(Path::new(&cfg.require_str("exp.surrogate_blackbox")?))?);
            }
            other => return Err(Error::Config(format!("unknown attack kind '{other}'"))),
        }
    }
    for kind in &kinds {
        match kind.as_str() {
            "whitebox" => attacks.push((AttackKind::Whitebox, &bob_head)),
            "decoder_only" => attacks.push((AttackKind::DecoderOnly, &bob_head)),
            "semi_whitebox" => {
                attacks.push((AttackKind::SemiWhitebox, surrogate_semi.as_ref().expect("resolved")))
            }
            "blackbox" => {
                attacks.push((AttackKind::Blackbox, surrogate_blackbox.as_ref().expect("resolved")))
            }
            _ => unreachable!(),
        }
    }

    let defense = match cfg.get_str("exp.defense", "none") {
        s if s == "none" => Defense::None,
        s if s.starts_with("single:") => {
            let cb = load_codebook::<f32>(Path::new(&s["single:".len()..]), &ofdm)?;
            Defense::Single(
                cb.entries.first().cloned().ok_or(Error::EmptyCodebook)?,
            )
        }
        s if s.starts_with("codebook:") => {
            Defense::Codebook(load_codebook(Path::new(&s["codebook:".len()..]), &ofdm)?)
        }
        s => return Err(Error::Config(format!("unknown defense '{s}'"))),
    };

    let snr_db = match &common.snr_db {
        Some(list) => list.clone(),
        None => cfg.get_f64_list("exp.snr_db", &[20.0])?,
    };
    let seed = common.seed.unwrap_or(cfg.get_u64("exp.seed", 7)?);

    let spec = ExperimentSpec {
        run_id: format!("eval-{seed}"),
        images: &test.images,
        labels: test.labels.as_deref(),
        encoder: &enc,
        bob_head: &bob_head,
        attacks,
        cfg: &ofdm,
        channel: &channel,
        snr_db,
        defense,
        task,
        packets: cfg.get_usize("exp.packets", 100)?,
        seed,
    };
    let records = run_experiment(&spec)?;
    let path = common.out.join("report.csv");
    emit_report(&records, &path)?;
    for r in &records {
        println!(
            "{} snr {:>5.1} dB: bob {:.2} dB / eve {:.2} dB{}",
            r.attack,
            r.snr_db,
            r.psnr_bob,
            r.psnr_eve,
            match (r.acc_bob, r.acc_eve) {
                (Some(b), Some(e)) => format!(" | acc bob {b:.3} eve {e:.3}"),
                _ => String::new(),
            }
        );
    }
    println!("report written to {}", path.display());
    Ok(())
}

pub fn loopback(common: &Common) -> Result<()> {
    let seed = common.seed.unwrap_or(7);
    let mut failures = 0;
    for (name, pass) in jsccguard::pipeline::invariant_suite(seed) {
        println!("[{}] {}", if pass { "PASS" } else { "FAIL" }, name);
        if !pass {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::Format(format!("{failures} invariant checks failed")));
    }
    Ok(())
}

fn write_losses(path: &Path, losses: &[f32]) -> Result<()> {
    let mut text = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        text.push_str(&format!("{i},{l}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}
