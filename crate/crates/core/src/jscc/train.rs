use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::ModelArch;
use super::model::JsccModel;
use crate::channel::ChannelModel;
use crate::diff::Tensor;
use crate::error::{Error, Result};
use crate::pipeline::{build_chain, ChainGraph, ChainSpec, PerturbMode};
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    /// PAPR weight lambda in the training objective.
    pub papr_weight: T,
    /// Per-batch SNR drawn uniformly from [snr_db_min, snr_db_max].
    pub snr_db_min: T,
    pub snr_db_max: T,
    pub seed: u64,
}

impl<T: Real> TrainConfig<T> {
    pub fn new(epochs: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            learning_rate: T::of(1e-3),
            papr_weight: T::of(1e-4),
            snr_db_min: T::of(10.0),
            snr_db_max: T::of(20.0),
            seed,
        }
    }

    pub fn validate(&self) {
        assert!(self.epochs >= 1, "epochs must be >= 1");
        assert!(self.papr_weight >= T::zero(), "lambda must be >= 0");
        assert!(self.batch_size >= 1);
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub step_losses: Vec<T>,
    pub epoch_means: Vec<T>,
}

/// Adam with fixed hyperparameters; fully deterministic given the gradient
/// stream.
pub struct Adam<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    t: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(lr: T, sizes: &[usize]) -> Self {
        Adam {
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            t: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn for_params(lr: T, params: &[Tensor<T>]) -> Self {
        let sizes: Vec<usize> = params.iter().map(|t| t.numel()).collect();
        Self::new(lr, &sizes)
    }

    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Vec<T>]) {
        assert_eq!(params.len(), grads.len());
        self.t += 1;
        let b1c = T::one() - self.beta1.powi(self.t);
        let b2c = T::one() - self.beta2.powi(self.t);
        for (pi, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[pi], &mut self.v[pi]);
            for i in 0..p.values.len() {
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g[i] * g[i];
                let mhat = m[i] / b1c;
                let vhat = v[i] / b2c;
                p.values[i] = p.values[i] - self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

fn shuffled_batches(
    n: usize,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks_exact(batch).map(|c| c.to_vec()).collect()
}

fn gather_batch<T: Real>(images: &[Vec<T>], idx: &[usize]) -> Vec<T> {
    let mut out = Vec::with_capacity(idx.len() * images[0].len());
    for &i in idx {
        out.extend_from_slice(&images[i]);
    }
    out
}

/// Train encoder and decoder end to end through the OFDM chain and the
/// simulated channel, minimizing reconstruction error plus the weighted
/// PAPR term. Deterministic given the config seed.
pub fn train_end_to_end<T: Real>(
    images: &[Vec<T>],
    enc_arch: ModelArch,
    dec_arch: ModelArch,
    cfg: &crate::ofdm::OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    tc: &TrainConfig<T>,
) -> Result<(JsccModel<T>, JsccModel<T>, TrainReport<T>)> {
    assert!(!images.is_empty(), "empty training set");
    tc.validate();
    let mut encoder = JsccModel::init(enc_arch, tc.seed ^ 0xE0C0DE);
    let mut decoder = JsccModel::init(dec_arch, tc.seed ^ 0xDEC0DE);

    let spec = ChainSpec {
        encoder: &encoder,
        head: &decoder,
        cfg,
        batch: tc.batch_size,
        n_taps,
        train_encoder: true,
        train_head: true,
        perturb: PerturbMode::None,
    };
    let mut chain = build_chain(&spec);
    let loss_rec = chain.recon_loss_node();
    let loss = if tc.papr_weight > T::zero() {
        chain.with_papr_penalty(loss_rec, tc.papr_weight)
    } else {
        loss_rec
    };

    let mut opt_enc = Adam::for_params(tc.learning_rate, &encoder.params);
    let mut opt_dec = Adam::for_params(tc.learning_rate, &decoder.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x0BDE);
    let mut chan_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0xC4A);

    let mut report = TrainReport { step_losses: Vec::new(), epoch_means: Vec::new() };
    for epoch in 0..tc.epochs {
        let mut epoch_sum = T::zero();
        let mut steps = 0usize;
        for batch in shuffled_batches(images.len(), tc.batch_size, &mut order_rng) {
            chain.bind_images(&gather_batch(images, &batch));
            chain.bind_encoder(&encoder);
            chain.bind_head(&decoder);
            let snr = T::of(
                chan_rng.gen_range(tc.snr_db_min.to_f64().unwrap()..=tc.snr_db_max.to_f64().unwrap()),
            );
            chain.bind_channel(channel, snr, &mut chan_rng);
            chain.g.forward();
            let l = chain.g.value(loss)[0];
            if !l.is_finite() {
                return Err(Error::Diverged { epoch, step: steps });
            }
            chain.g.backward(loss)?;
            apply_step(&mut chain, &mut encoder, &mut decoder, &mut opt_enc, &mut opt_dec);
            report.step_losses.push(l);
            epoch_sum += l;
            steps += 1;
        }
        report.epoch_means.push(epoch_sum / T::usize(steps.max(1)));
    }
    Ok((encoder, decoder, report))
}

fn apply_step<T: Real>(
    chain: &mut ChainGraph<T>,
    encoder: &mut JsccModel<T>,
    decoder: &mut JsccModel<T>,
    opt_enc: &mut Adam<T>,
    opt_dec: &mut Adam<T>,
) {
    let ge: Vec<Vec<T>> = chain.enc_params.iter().map(|&id| chain.g.grad(id)).collect();
    let gd: Vec<Vec<T>> = chain.head_params.iter().map(|&id| chain.g.grad(id)).collect();
    opt_enc.step(&mut encoder.params, &ge);
    opt_dec.step(&mut decoder.params, &gd);
}

/// Train a classifier head on top of a frozen encoder, through the chain,
/// with a margin (hinge) objective on the logits.
pub fn train_classifier<T: Real>(
    images: &[Vec<T>],
    labels: &[u8],
    encoder: &JsccModel<T>,
    cls_arch: ModelArch,
    cfg: &crate::ofdm::OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    tc: &TrainConfig<T>,
) -> Result<(JsccModel<T>, TrainReport<T>)> {
    assert_eq!(images.len(), labels.len());
    tc.validate();
    let classes = cls_arch.output_shape()[0];
    let mut head = JsccModel::init(cls_arch, tc.seed ^ 0xC1A55);

    let spec = ChainSpec {
        encoder,
        head: &head,
        cfg,
        batch: tc.batch_size,
        n_taps,
        train_encoder: false,
        train_head: true,
        perturb: PerturbMode::None,
    };
    let mut chain = build_chain(&spec);
    let (loss, selector) = crate::pipeline::hinge_loss_selected(
        &mut chain.g,
        chain.output,
        chain.batch,
        classes,
        T::one(),
        true,
    );

    let mut opt = Adam::for_params(tc.learning_rate, &head.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x0BDE);
    let mut chan_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0xC4A);

    let mut report = TrainReport { step_losses: Vec::new(), epoch_means: Vec::new() };
    for epoch in 0..tc.epochs {
        let mut epoch_sum = T::zero();
        let mut steps = 0usize;
        for batch in shuffled_batches(images.len(), tc.batch_size, &mut order_rng) {
            chain.bind_images(&gather_batch(images, &batch));
            chain.bind_head(&head);
            let mut sel = vec![T::zero(); tc.batch_size * classes];
            for (row, &i) in batch.iter().enumerate() {
                sel[row * classes + labels[i] as usize] = T::one();
            }
            chain.g.set_leaf(selector, &sel);
            let snr = T::of(
                chan_rng.gen_range(tc.snr_db_min.to_f64().unwrap()..=tc.snr_db_max.to_f64().unwrap()),
            );
            chain.bind_channel(channel, snr, &mut chan_rng);
            chain.g.forward();
            let l = chain.g.value(loss)[0];
            if !l.is_finite() {
                return Err(Error::Diverged { epoch, step: steps });
            }
            chain.g.backward(loss)?;
            let gh: Vec<Vec<T>> = chain.head_params.iter().map(|&id| chain.g.grad(id)).collect();
            opt.step(&mut head.params, &gh);
            report.step_losses.push(l);
            epoch_sum += l;
            steps += 1;
        }
        report.epoch_means.push(epoch_sum / T::usize(steps.max(1)));
    }
    Ok((head, report))
}
