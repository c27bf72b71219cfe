use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::perturbation::{apply_update, random_perturbation, GuardConfig, Perturbation};
use crate::channel::ChannelModel;
use crate::diff::{Graph, VarId};
use crate::error::{Error, Result};
use crate::jscc::JsccModel;
use crate::ofdm::OfdmConfig;
use crate::pipeline::{build_chain, hinge_loss_selected, ChainGraph, ChainSpec, PerturbMode};
use crate::real::Real;

/// Per-step loss trajectory of one perturbation optimization run.
#[derive(Debug, Clone)]
pub struct OptReport<T> {
    pub step_losses: Vec<T>,
}

impl<T: Real> OptReport<T> {
    /// Relative change between the means of the last two 10%-of-run
    /// windows; small values indicate a plateau.
    pub fn trailing_relative_change(&self) -> T {
        let n = self.step_losses.len();
        let w = (n / 10).max(1);
        if n < 2 * w {
            return T::infinity();
        }
        let mean = |s: &[T]| s.iter().copied().sum::<T>() / T::usize(s.len());
        let last = mean(&self.step_losses[n - w..]);
        let prev = mean(&self.step_losses[n - 2 * w..n - w]);
        ((last - prev) / prev).abs()
    }
}

/// What the classification defense drives the eavesdropper toward.
#[derive(Debug, Clone, Copy)]
pub enum GuardMode {
    /// Any class other than the true label.
    Untargeted,
    /// A fixed target class.
    Targeted(usize),
}

/// Cosine-similarity diversity penalty between a candidate and previously
/// generated perturbations, computed on unit-normalized [Re(V); Im(V)]
/// stackings: mean over priors of the squared dot product.
pub fn diversity_loss<T: Real>(
    candidate: &Perturbation<T>,
    prior: &[Perturbation<T>],
) -> Result<T> {
    assert!(!prior.is_empty(), "diversity loss needs at least one prior");
    let c = normalized_stacking(candidate)?;
    let mut acc = T::zero();
    for p in prior {
        let pv = normalized_stacking(p)?;
        let dot: T = c.iter().zip(&pv).map(|(&a, &b)| a * b).sum();
        acc += dot * dot;
    }
    Ok(acc / T::usize(prior.len()))
}

fn normalized_stacking<T: Real>(p: &Perturbation<T>) -> Result<Vec<T>> {
    let s = p.stacked();
    let norm = s.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm <= T::of(1e-30) {
        return Err(Error::ZeroInput("diversity_loss"));
    }
    Ok(s.iter().map(|&v| v / norm).collect())
}

/// Mean pairwise squared cosine similarity across a set of perturbations.
pub fn mean_pairwise_similarity<T: Real>(entries: &[Perturbation<T>]) -> T {
    let mut acc = T::zero();
    let mut count = 0usize;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            acc += diversity_loss(&entries[i], &entries[j..=j]).expect("nonzero entries");
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        acc / T::usize(count)
    }
}

/// Hinge loss of Eq.-style untargeted classification defense:
/// max(0, Z[y] - max_{y' != y} Z[y'] + kappa).
pub fn loss_untargeted<T: Real>(logits: &[T], label: usize, kappa: T) -> T {
    assert!(label < logits.len());
    let best_other = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label)
        .map(|(_, &v)| v)
        .fold(T::neg_infinity(), T::max);
    (logits[label] - best_other + kappa).max(T::zero())
}

/// Targeted counterpart: max(0, max_{y' != t} Z[y'] - Z[t] + kappa).
pub fn loss_targeted<T: Real>(logits: &[T], target: usize, kappa: T) -> T {
    assert!(target < logits.len());
    let best_other = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target)
        .map(|(_, &v)| v)
        .fold(T::neg_infinity(), T::max);
    (best_other - logits[target] + kappa).max(T::zero())
}

struct OptLoop<'a, T> {
    chain: ChainGraph<T>,
    loss: VarId,
    gc: &'a GuardConfig<T>,
    cfg: &'a OfdmConfig<T>,
}

impl<T: Real> OptLoop<'_, T> {
    /// Run the projected-gradient loop over the dataset; model parameters
    /// are never touched, only the perturbation leaves move.
    fn run(
        &mut self,
        images: &[Vec<T>],
        selector_labels: Option<(&[u8], VarId, usize, Option<usize>)>,
        channel: &ChannelModel<T>,
        snr_db: T,
        init: Perturbation<T>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Perturbation<T>, OptReport<T>)> {
        let gc = self.gc;
        let null_bins = self.cfg.null_bins();
        let mut amp = init.amp;
        let mut phase = init.phase;
        let batch = self.chain.batch;
        let mut report = OptReport { step_losses: Vec::new() };

        for _epoch in 0..gc.epochs {
            let n_batches = images.len() / batch;
            for bi in 0..n_batches {
                let idx: Vec<usize> = (bi * batch..(bi + 1) * batch).collect();
                let mut flat = Vec::with_capacity(batch * images[0].len());
                for &i in &idx {
                    flat.extend_from_slice(&images[i]);
                }
                self.chain.bind_images(&flat);
                self.chain.bind_perturbation(&amp, &phase);
                if let Some((labels, selector, classes, target)) = selector_labels {
                    let mut sel = vec![T::zero(); batch * classes];
                    for (row, &i) in idx.iter().enumerate() {
                        let cls = target.unwrap_or(labels[i] as usize);
                        sel[row * classes + cls] = T::one();
                    }
                    self.chain.g.set_leaf(selector, &sel);
                }
                self.chain.bind_channel(channel, snr_db, rng);
                self.chain.g.forward();
                let l = self.chain.g.value(self.loss)[0];
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch: _epoch, step: bi });
                }
                self.chain.g.backward(self.loss)?;
                let p = self.chain.perturb.as_ref().expect("perturbation leaves");
                let (ga, gp) = (self.chain.g.grad(p.amp), self.chain.g.grad(p.phase));
                apply_update(
                    &mut amp, &ga, gc.step_size, gc.delta, gc.alpha_lower, gc.alpha_upper,
                    &null_bins, T::one(),
                );
                apply_update(
                    &mut phase, &gp, gc.step_size, gc.delta, gc.phi_lower, gc.phi_upper,
                    &null_bins, T::zero(),
                );
                report.step_losses.push(l);
            }
        }
        Ok((Perturbation { amp, phase }, report))
    }
}

/// Optimize a single perturbation to maximize the eavesdropper's
/// reconstruction error (the perturbed LTS transmits, the standard LTS is
/// the receiver's reference). Deterministic given the config seed.
#[allow(clippy::too_many_arguments)]
pub fn optimize_single<T: Real>(
    encoder: &JsccModel<T>,
    decoder: &JsccModel<T>,
    images: &[Vec<T>],
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    gc: &GuardConfig<T>,
    snr_db: T,
    batch: usize,
) -> Result<(Perturbation<T>, OptReport<T>)> {
    optimize_entry(encoder, decoder, images, cfg, channel, n_taps, gc, snr_db, batch, &[], gc.seed)
}

#[allow(clippy::too_many_arguments)]
fn optimize_entry<T: Real>(
    encoder: &JsccModel<T>,
    decoder: &JsccModel<T>,
    images: &[Vec<T>],
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    gc: &GuardConfig<T>,
    snr_db: T,
    batch: usize,
    prior: &[Perturbation<T>],
    seed: u64,
) -> Result<(Perturbation<T>, OptReport<T>)> {
    assert!(!images.is_empty(), "empty dataset");
    gc.validate();
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1517);
    let init = random_perturbation(cfg, gc, &mut init_rng);

    let spec = ChainSpec {
        encoder,
        head: decoder,
        cfg,
        batch,
        n_taps,
        train_encoder: false,
        train_head: false,
        perturb: PerturbMode::Leaves {
            init_amp: init.amp.clone(),
            init_phase: init.phase.clone(),
        },
    };
    let mut chain = build_chain(&spec);
    let rec = chain.recon_loss_node();
    let mut loss = chain.g.neg(rec);
    if !prior.is_empty() {
        let div = diversity_node(&mut chain, prior);
        let weighted = chain.g.scale(div, gc.lambda_div);
        loss = chain.g.add(loss, weighted);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC4A2);
    let mut lp = OptLoop { chain, loss, gc, cfg };
    lp.run(images, None, channel, snr_db, init, &mut rng)
}

/// Squared-cosine similarity of the in-graph V against fixed prior
/// entries, averaged.
fn diversity_node<T: Real>(chain: &mut ChainGraph<T>, prior: &[Perturbation<T>]) -> VarId {
    let g: &mut Graph<T> = &mut chain.g;
    let v = chain.perturb.as_ref().expect("perturbation leaves").v;
    let stacked = g.concat(v.re, v.im);
    let sq = g.mul(stacked, stacked);
    let sumsq = g.sum(sq);
    let inv_norm = g.pow_const(sumsq, -T::of(0.5));
    let unit = g.mul_scalar(stacked, inv_norm);
    let mut acc: Option<VarId> = None;
    for p in prior {
        let pv = normalized_stacking(p).expect("prior entries are nonzero");
        let pc = g.constant(&pv, &[pv.len()]);
        let prod = g.mul(unit, pc);
        let dot = g.sum(prod);
        let d2 = g.mul(dot, dot);
        acc = Some(match acc {
            None => d2,
            Some(a) => g.add(a, d2),
        });
    }
    let total = acc.expect("at least one prior");
    g.scale(total, T::one() / T::usize(prior.len()))
}

/// Generate a codebook: the first entry via the single-perturbation loop,
/// later entries with the diversity penalty against all earlier (frozen)
/// entries.
#[allow(clippy::too_many_arguments)]
pub fn optimize_codebook<T: Real>(
    encoder: &JsccModel<T>,
    decoder: &JsccModel<T>,
    images: &[Vec<T>],
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    gc: &GuardConfig<T>,
    snr_db: T,
    batch: usize,
) -> Result<(Vec<Perturbation<T>>, Vec<OptReport<T>>)> {
    gc.validate();
    let mut entries = Vec::with_capacity(gc.codebook_size);
    let mut reports = Vec::with_capacity(gc.codebook_size);
    for j in 0..gc.codebook_size {
        let seed = gc.seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(j as u64));
        let (p, r) = optimize_entry(
            encoder, decoder, images, cfg, channel, n_taps, gc, snr_db, batch, &entries, seed,
        )?;
        entries.push(p);
        reports.push(r);
    }
    Ok((entries, reports))
}

/// Classification defense: the same projected-gradient loop with the
/// hinge objective on the eavesdropper's logits.
#[allow(clippy::too_many_arguments)]
pub fn optimize_classification_guard<T: Real>(
    encoder: &JsccModel<T>,
    classifier: &JsccModel<T>,
    images: &[Vec<T>],
    labels: &[u8],
    cfg: &OfdmConfig<T>,
    channel: &ChannelModel<T>,
    n_taps: usize,
    gc: &GuardConfig<T>,
    snr_db: T,
    batch: usize,
    mode: GuardMode,
) -> Result<(Perturbation<T>, OptReport<T>)> {
    assert_eq!(images.len(), labels.len());
    gc.validate();
    let classes = classifier.arch.output_shape()[0];
    let mut init_rng = ChaCha8Rng::seed_from_u64(gc.seed ^ 0x1517);
    let init = random_perturbation(cfg, gc, &mut init_rng);

    let spec = ChainSpec {
        encoder,
        head: classifier,
        cfg,
        batch,
        n_taps,
        train_encoder: false,
        train_head: false,
        perturb: PerturbMode::Leaves {
            init_amp: init.amp.clone(),
            init_phase: init.phase.clone(),
        },
    };
    let mut chain = build_chain(&spec);
    let targeted = matches!(mode, GuardMode::Targeted(_));
    let (loss, selector) =
        hinge_loss_selected(&mut chain.g, chain.output, batch, classes, gc.kappa, targeted);

    let target = match mode {
        GuardMode::Untargeted => None,
        GuardMode::Targeted(t) => {
            assert!(t < classes, "target class out of range");
            Some(t)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(gc.seed ^ 0xC4A2);
    let mut lp = OptLoop { chain, loss, gc, cfg };
    lp.run(images, Some((labels, selector, classes, target)), channel, snr_db, init, &mut rng)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;

    use super::*;

    fn unit(k: usize, f: impl Fn(usize) -> Complex<f64>) -> Perturbation<f64> {
        let vals: Vec<Complex<f64>> = (0..k).map(f).collect();
        Perturbation {
            amp: vals.iter().map(|c| c.norm()).collect(),
            phase: vals.iter().map(|c| c.arg()).collect(),
        }
    }

    #[test]
    fn diversity_identical_is_one_orthogonal_is_zero() {
        let a = unit(4, |i| if i == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) });
        assert!((diversity_loss(&a, &[a.clone()]).unwrap() - 1.0).abs() < 1e-12);

        // orthogonal in the 2K-real embedding
        let b = unit(4, |i| if i == 1 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) });
        assert!(diversity_loss(&a, &[b]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn diversity_matches_direct_dot_product() {
        let a = unit(8, |i| Complex::from_polar(1.0 + 0.1 * i as f64, 0.3 * i as f64));
        let b = unit(8, |i| Complex::from_polar(0.7 + 0.05 * i as f64, -0.2 * i as f64));
        let got = diversity_loss(&a, &[b.clone()]).unwrap();
        let (sa, sb) = (a.stacked(), b.stacked());
        let na = sa.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = sb.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
        assert!((got - dot * dot).abs() < 1e-12);
    }

    #[test]
    fn diversity_scale_invariant_in_candidate() {
        let a = unit(8, |i| Complex::from_polar(1.0, 0.4 * i as f64));
        let b = unit(8, |i| Complex::from_polar(0.9, 0.1 * i as f64));
        let l1 = diversity_loss(&a, &[b.clone()]).unwrap();
        let scaled = Perturbation { amp: a.amp.iter().map(|v| v * 3.0).collect(), phase: a.phase };
        let l2 = diversity_loss(&scaled, &[b]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn hinge_losses_match_worked_examples() {
        assert_eq!(loss_untargeted(&[5.0, 2.0], 0, 0.0), 3.0);
        assert_eq!(loss_untargeted(&[2.0, 5.0], 0, 0.0), 0.0);
        assert_eq!(loss_untargeted(&[2.0, 5.0], 0, 4.0), 1.0);
        assert_eq!(loss_targeted(&[2.0, 5.0], 0, 0.0), 3.0);
        assert_eq!(loss_targeted(&[5.0, 2.0], 0, 0.0), 0.0);
        assert_eq!(loss_targeted(&[5.0, 5.0], 0, 1.0), 1.0);
    }
}
