use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{accuracy, argmax, per_subcarrier_mse, psnr, MetricsRecord};
use crate::attacks::AttackKind;
use crate::channel::{add_noise, noise_power_for, propagate, sample_channel, ChannelModel};
use crate::error::{Error, Result};
use crate::guard::{select_perturbation, Codebook, Perturbation};
use crate::jscc::{classify, decode, encode, JsccModel};
use crate::ofdm::{
    build_packet, build_preamble, map_to_grid, receive, OfdmConfig, RxConfig,
};
use crate::real::Real;

#[derive(Debug, Clone)]
pub enum Defense<T> {
    None,
    Single(Perturbation<T>),
    Codebook(Codebook<T>),
}

impl<T> Defense<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Defense::None => "none",
            Defense::Single(_) => "single",
            Defense::Codebook(_) => "codebook",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Reconstruction,
    Classification,
}

/// Everything one evaluation needs, with models already resolved.
pub struct ExperimentSpec<'a, T> {
    pub run_id: String,
    pub images: &'a [Vec<T>],
    pub labels: Option<&'a [u8]>,
    pub encoder: &'a JsccModel<T>,
    /// Bob's decoder or classifier, per task.
    pub bob_head: &'a JsccModel<T>,
    /// Eve's head per attack kind (the true decoder for white-box and
    /// decoder-only, surrogates otherwise).
    pub attacks: Vec<(AttackKind, &'a JsccModel<T>)>,
    pub cfg: &'a OfdmConfig<T>,
    pub channel: &'a ChannelModel<T>,
    pub snr_db: Vec<f64>,
    pub defense: Defense<T>,
    pub task: Task,
    pub packets: usize,
    pub seed: u64,
}

/// Simulate `packets` packets per (SNR, attack) cell; Bob receives with
/// the perturbed reference when a defense is active, Eve always with the
/// standard one. Fully deterministic in the seed.
pub fn run_experiment<T: Real>(spec: &ExperimentSpec<'_, T>) -> Result<Vec<MetricsRecord>> {
    assert!(!spec.snr_db.is_empty(), "empty SNR list");
    assert!(spec.packets >= 1);
    assert!(!spec.images.is_empty(), "empty evaluation set");
    if spec.task == Task::Classification {
        assert!(spec.labels.is_some(), "classification needs labels");
    }
    let std_preamble = build_preamble(spec.cfg, None)?;
    let mut records = Vec::new();

    for (snr_i, &snr) in spec.snr_db.iter().enumerate() {
        for (atk_i, &(kind, eve_head)) in spec.attacks.iter().enumerate() {
            let started = Instant::now();
            let cell_seed = spec
                .seed
                .wrapping_add(0x9E37_79B9 * (snr_i as u64 + 1))
                .wrapping_add(0x85EB_CA6B * (atk_i as u64 + 1));
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);

            let mut psnr_bob_sum = 0.0f64;
            let mut psnr_eve_sum = 0.0f64;
            let mut bob_preds = Vec::new();
            let mut eve_preds = Vec::new();
            let mut used_labels = Vec::new();
            let mut mse_acc = vec![0.0f64; spec.cfg.n_data()];
            let mut completed = 0usize;

            for round in 0..spec.packets {
                let img_i = round % spec.images.len();
                let image = &spec.images[img_i];

                let perturbation: Option<&Perturbation<T>> = match &spec.defense {
                    Defense::None => None,
                    Defense::Single(p) => Some(p),
                    Defense::Codebook(cb) => Some(select_perturbation(cb, spec.seed, round as u64)?),
                };
                let pvals = perturbation.map(|p| p.values());
                let tx_preamble = build_preamble(spec.cfg, pvals.as_deref())?;

                let feats = encode(image, spec.encoder)?;
                let grid_tx = map_to_grid(&feats, spec.cfg);
                let tx = build_packet(&grid_tx, spec.cfg, &tx_preamble);

                // the noise floor is anchored to the standard-preamble
                // packet, so defended and undefended runs with the same
                // seed see identical channels and noise
                let real = sample_channel(spec.channel, &mut rng);
                let clean = propagate(&real, &tx);
                let noise_var = if perturbation.is_some() {
                    let tx_std = build_packet(&grid_tx, spec.cfg, &std_preamble);
                    noise_power_for(&propagate(&real, &tx_std), T::of(snr))
                } else {
                    noise_power_for(&clean, T::of(snr))
                };
                let rx = add_noise(clean, noise_var, &mut rng);

                // Bob: standard timing reference, perturbed channel-estimation
                // reference when defended
                let bob_rxc = RxConfig {
                    cfg: spec.cfg,
                    timing_ref: &std_preamble.lts_time,
                    chanest_ref: &tx_preamble.lts_freq,
                    payload_len: feats.len(),
                    eq_floor: T::of(1e-6),
                };
                // Eve: standard references throughout
                let eve_rxc = RxConfig {
                    cfg: spec.cfg,
                    timing_ref: &std_preamble.lts_time,
                    chanest_ref: &spec.cfg.lts_freq,
                    payload_len: feats.len(),
                    eq_floor: T::of(1e-6),
                };
                let (bob, eve) = match (receive(&rx, &bob_rxc), receive(&rx, &eve_rxc)) {
                    (Ok(b), Ok(e)) => (b, e),
                    // dropped packet at low SNR: skip the round
                    (Err(Error::NoPacket), _) | (_, Err(Error::NoPacket)) => continue,
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                };

                for (m, &v) in mse_acc
                    .iter_mut()
                    .zip(per_subcarrier_mse(&eve.grid, &grid_tx, spec.cfg).iter())
                {
                    *m += v.to_f64().unwrap();
                }

                match spec.task {
                    Task::Reconstruction => {
                        let bob_img = decode(&bob.features, spec.bob_head)?;
                        let eve_img = decode(&eve.features, eve_head)?;
                        psnr_bob_sum += psnr(image, &bob_img).to_f64().unwrap();
                        psnr_eve_sum += psnr(image, &eve_img).to_f64().unwrap();
                    }
                    Task::Classification => {
                        let bob_logits = classify(&bob.features, spec.bob_head)?;
                        let eve_logits = classify(&eve.features, eve_head)?;
                        bob_preds.push(argmax(&bob_logits));
                        eve_preds.push(argmax(&eve_logits));
                        used_labels.push(spec.labels.unwrap()[img_i]);
                    }
                }
                completed += 1;
            }

            let denom = completed.max(1) as f64;
            let (acc_bob, acc_eve) = match spec.task {
                Task::Reconstruction => (None, None),
                Task::Classification => (
                    Some(accuracy(&bob_preds, &used_labels)),
                    Some(accuracy(&eve_preds, &used_labels)),
                ),
            };
            records.push(MetricsRecord {
                run_id: spec.run_id.clone(),
                attack: kind.as_str().to_string(),
                defense: spec.defense.label().to_string(),
                snr_db: snr,
                psnr_bob: psnr_bob_sum / denom,
                psnr_eve: psnr_eve_sum / denom,
                acc_bob,
                acc_eve,
                subcarrier_mse: mse_acc.iter().map(|v| v / denom).collect(),
                seed: spec.seed,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
    }
    Ok(records)
}

pub const REPORT_HEADER: &str =
    "run_id,attack,defense,snr_db,psnr_bob,psnr_eve,acc_bob,acc_eve,seed,wall_ms";

/// CSV report with a fixed header; the per-subcarrier MSE vectors go to a
/// sibling `<path>.mse.csv` in long format.
pub fn emit_report(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{REPORT_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.attack,
            r.defense,
            fmt_f64(r.snr_db),
            fmt_f64(r.psnr_bob),
            fmt_f64(r.psnr_eve),
            r.acc_bob.map(fmt_f64).unwrap_or_default(),
            r.acc_eve.map(fmt_f64).unwrap_or_default(),
            r.seed,
            r.wall_ms
        )?;
    }
    w.flush()?;

    let mse_path = sibling_mse_path(path);
    let mut w = BufWriter::new(File::create(mse_path)?);
    writeln!(w, "run_id,attack,defense,snr_db,data_subcarrier,mse")?;
    for r in records {
        for (i, &v) in r.subcarrier_mse.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.run_id,
                r.attack,
                r.defense,
                fmt_f64(r.snr_db),
                i,
                fmt_f64(v)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn sibling_mse_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".mse.csv");
    std::path::PathBuf::from(os)
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Parse a report back (used by tests and downstream tooling).
pub fn parse_report(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| Error::Format("empty report".into()))?;
    if head != REPORT_HEADER {
        return Err(Error::Format(format!("bad report header '{head}'")));
    }
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Format(format!("bad report row '{line}'")));
        }
        let g = |s: &str| -> Result<f64> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => s.parse().map_err(|_| Error::Format(format!("bad float '{s}'"))),
            }
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { g(s).map(Some) }
        };
        out.push(MetricsRecord {
            run_id: f[0].to_string(),
            attack: f[1].to_string(),
            defense: f[2].to_string(),
            snr_db: g(f[3])?,
            psnr_bob: g(f[4])?,
            psnr_eve: g(f[5])?,
            acc_bob: opt(f[6])?,
            acc_eve: opt(f[7])?,
            subcarrier_mse: Vec::new(),
            seed: f[8].parse().map_err(|_| Error::Format("bad seed".into()))?,
            wall_ms: f[9].parse().map_err(|_| Error::Format("bad wall_ms".into()))?,
        });
    }
    Ok(out)
}
