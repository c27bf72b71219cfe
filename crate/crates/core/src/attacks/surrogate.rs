use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pairs::SurrogatePairSet;
use crate::channel::{apply, sample_channel, ChannelModel};
use crate::diff::Graph;
use crate::error::{Error, Result};
use crate::jscc::{
    build_forward, features_to_input, Act, Adam, ArchKind, JsccModel, LayerSpec, ModelArch,
    TrainConfig, TrainReport,
};
use crate::ofdm::OfdmConfig;
use crate::pipeline::{build_chain, ChainSpec, PerturbMode};
use crate::real::Real;

/// Decoder architecture symmetric to a convolutional encoder: the layer
/// stack reversed with transposed convolutions and a final sigmoid.
pub fn mirror_decoder(encoder: &ModelArch) -> ModelArch {
    assert_eq!(encoder.kind, ArchKind::Encoder);
    let out = encoder.output_shape();
    let mut layers = Vec::with_capacity(encoder.layers.len());
    for (pos, layer) in encoder.layers.iter().rev().enumerate() {
        let last = pos == encoder.layers.len() - 1;
        match *layer {
            LayerSpec::Conv { i, o, k, s, p, .. } => layers.push(LayerSpec::ConvT {
                i: o,
                o: i,
                k,
                s,
                p,
                op: s - 1,
                act: if last { Act::Sigmoid } else { Act::Leaky(0.2) },
            }),
            _ => panic!("mirror_decoder expects a convolutional encoder"),
        }
    }
    ModelArch {
        kind: ArchKind::Decoder,
        input_shape: [out[0], out[1], out[2]],
        layers,
        feature_dim: encoder.feature_dim,
    }
}

/// Encoder-only white-box attack: train a surrogate decoder end to end
/// through the chain on an auxiliary dataset while the true encoder stays
/// frozen (gradients flow through it, its parameters never move).
pub fn train_surrogate_semi_whitebox<T: Real>(
    encoder: &JsccModel<T>,
    aux_images: &[Vec<T>],
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    tc: &TrainConfig<T>,
) -> Result<(JsccModel<T>, TrainReport<T>)> {
    assert!(!aux_images.is_empty(), "empty auxiliary dataset");
    tc.validate();
    let mut surrogate = JsccModel::init(mirror_decoder(&encoder.arch), tc.seed ^ 0x5E3D);

    let spec = ChainSpec {
        encoder,
        head: &surrogate,
        cfg,
        batch: tc.batch_size,
        n_taps,
        train_encoder: false,
        train_head: true,
        perturb: PerturbMode::None,
    };
    let mut chain = build_chain(&spec);
    let rec = chain.recon_loss_node();
    let loss = if tc.papr_weight > T::zero() {
        chain.with_papr_penalty(rec, tc.papr_weight)
    } else {
        rec
    };

    let mut opt = Adam::for_params(tc.learning_rate, &surrogate.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x0BDE);
    let mut chan_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0xC4A);
    let mut report = TrainReport { step_losses: Vec::new(), epoch_means: Vec::new() };

    for epoch in 0..tc.epochs {
        let mut idx: Vec<usize> = (0..aux_images.len()).collect();
        idx.shuffle(&mut order_rng);
        let mut epoch_sum = T::zero();
        let mut steps = 0usize;
        for batch in idx.chunks_exact(tc.batch_size) {
            let mut flat = Vec::with_capacity(tc.batch_size * aux_images[0].len());
            for &i in batch {
                flat.extend_from_slice(&aux_images[i]);
            }
            chain.bind_images(&flat);
            chain.bind_head(&surrogate);
            let snr = T::of(
                chan_rng
                    .gen_range(tc.snr_db_min.to_f64().unwrap()..=tc.snr_db_max.to_f64().unwrap()),
            );
            chain.bind_channel(channel, snr, &mut chan_rng);
            chain.g.forward();
            let l = chain.g.value(loss)[0];
            if !l.is_finite() {
                return Err(Error::Diverged { epoch, step: steps });
            }
            chain.g.backward(loss)?;
            let gh: Vec<Vec<T>> = chain.head_params.iter().map(|&id| chain.g.grad(id)).collect();
            opt.step(&mut surrogate.params, &gh);
            report.step_losses.push(l);
            epoch_sum += l;
            steps += 1;
        }
        report.epoch_means.push(epoch_sum / T::usize(steps.max(1)));
    }
    Ok((surrogate, report))
}

/// Build the black-box surrogate dataset: feed auxiliary images to an
/// opaque encode-and-transmit device, capture over the simulated channel,
/// and recover features with the standard-reference receive chain.
pub fn collect_blackbox_pairs<T, F>(
    device: F,
    aux_images: &[Vec<T>],
    image_dims: [usize; 3],
    feature_dim: usize,
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    snr_db: T,
    rng: &mut ChaCha8Rng,
) -> Result<SurrogatePairSet<T>>
where
    T: Real,
    F: Fn(&[T], u64) -> Vec<Complex<T>>,
{
    let mut set = SurrogatePairSet::new(image_dims, feature_dim);
    for (round, image) in aux_images.iter().enumerate() {
        let tx = device(image, round as u64);
        let real = sample_channel(channel, rng);
        let rx = apply(&real, &tx, snr_db, rng);
        let out = super::eve_receive(&rx, cfg, feature_dim)?;
        set.push(image.clone(), out.features);
    }
    Ok(set)
}

/// Train a surrogate decoder directly on captured (features -> image)
/// pairs; the encoder is never accessed.
pub fn train_surrogate_blackbox<T: Real>(
    pairs: &SurrogatePairSet<T>,
    arch: ModelArch,
    tc: &TrainConfig<T>,
) -> Result<(JsccModel<T>, TrainReport<T>)> {
    assert!(!pairs.is_empty(), "empty pair set");
    tc.validate();
    let mut surrogate = JsccModel::init(arch, tc.seed ^ 0xB1AC);
    let hs = surrogate.arch.input_shape;
    let n_img: usize = pairs.image_dims.iter().product();

    let mut g = Graph::<T>::new();
    let b = tc.batch_size;
    let input = g.leaf_from(&vec![T::zero(); b * 2 * pairs.feature_dim], &[b, hs[0], hs[1], hs[2]], false);
    let target = g.leaf_from(&vec![T::zero(); b * n_img], &[b * n_img], false);
    let leaves = surrogate.params_as_leaves(&mut g, true);
    let out = build_forward(&mut g, &surrogate.arch, &leaves, input);
    let out_flat = g.reshape(out, &[b * n_img]);
    let d = g.sub(out_flat, target);
    let sq = g.mul(d, d);
    let s = g.sum(sq);
    let loss = g.scale(s, T::one() / T::usize(b));

    let mut opt = Adam::for_params(tc.learning_rate, &surrogate.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x0BDE);
    let mut report = TrainReport { step_losses: Vec::new(), epoch_means: Vec::new() };

    for epoch in 0..tc.epochs {
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        idx.shuffle(&mut order_rng);
        let mut epoch_sum = T::zero();
        let mut steps = 0usize;
        for batch in idx.chunks_exact(b) {
            let mut in_flat = Vec::with_capacity(b * 2 * pairs.feature_dim);
            let mut tg_flat = Vec::with_capacity(b * n_img);
            for &i in batch {
                let (img, feats) = &pairs.pairs[i];
                in_flat.extend(features_to_input(feats));
                tg_flat.extend_from_slice(img);
            }
            g.set_leaf(input, &in_flat);
            g.set_leaf(target, &tg_flat);
            for (t, &id) in surrogate.params.iter().zip(&leaves) {
                g.set_leaf(id, &t.values);
            }
            g.forward();
            let l = g.value(loss)[0];
            if !l.is_finite() {
                return Err(Error::Diverged { epoch, step: steps });
            }
            g.backward(loss)?;
            let gh: Vec<Vec<T>> = leaves.iter().map(|&id| g.grad(id)).collect();
            opt.step(&mut surrogate.params, &gh);
            report.step_losses.push(l);
            epoch_sum += l;
            steps += 1;
        }
        report.epoch_means.push(epoch_sum / T::usize(steps.max(1)));
    }
    Ok((surrogate, report))
}
