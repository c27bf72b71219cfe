//! Differentiable mirror of the transmit -> channel -> receive chain.
//!
//! One [`ChainGraph`] is built per batch structure and reused across
//! training steps by rebinding its leaves (images, model parameters, taps,
//! noise, perturbation) and re-running `forward`. Synchronization inside
//! the graph is ideal: packet positions are known and no CFO is injected,
//! per the training-time assumptions; the full synchronizing receiver lives
//! in [`crate::ofdm`] and is used for evaluation.

mod invariants;

pub use invariants::{invariant_suite, loopback_error, multiplicative_csi_error, sync_invariance};

use num_complex::Complex;
use rand_chacha::ChaCha8Rng;

use crate::channel::{gauss_pair, sample_channel, ChannelModel};
use crate::diff::{CVar, Graph, VarId};
use crate::jscc::{build_forward, ArchKind, JsccModel};
use crate::ofdm::{build_preamble, OfdmConfig, Preamble};
use crate::real::Real;

/// Magnitude-squared floor for in-graph equalization, |H|^2 clamped below.
const EQ_FLOOR2: f64 = 1e-12;

/// How the transmitted LTS is produced.
pub enum PerturbMode<T> {
    /// Standard preamble on both sides.
    None,
    /// LTS multiplied by V[k] = A[k] e^{j phi[k]} from two requires-grad
    /// leaves; the receiver keeps the standard reference.
    Leaves { init_amp: Vec<T>, init_phase: Vec<T> },
}

pub struct ChainSpec<'a, T> {
    pub encoder: &'a JsccModel<T>,
    pub head: &'a JsccModel<T>,
    pub cfg: &'a OfdmConfig<T>,
    pub batch: usize,
    pub n_taps: usize,
    pub train_encoder: bool,
    pub train_head: bool,
    pub perturb: PerturbMode<T>,
}

pub struct PerturbLeaves {
    pub amp: VarId,
    pub phase: VarId,
    /// V in the frequency domain, derived from the leaves.
    pub v: CVar,
}

pub struct ChainGraph<T> {
    pub g: Graph<T>,
    pub batch: usize,
    pub feature_dim: usize,
    pub images: VarId,
    pub enc_params: Vec<VarId>,
    pub head_params: Vec<VarId>,
    /// Per-packet tap leaves, laid out [re(0..l) | im(0..l)].
    pub taps: Vec<VarId>,
    /// Per-packet receiver-noise leaves.
    pub noise: Vec<CVar>,
    pub perturb: Option<PerturbLeaves>,
    /// Head output: [B, C, H, W] images or [B, classes] logits.
    pub output: VarId,
    /// Per-packet transmit-time signals (preamble plus payload).
    pub tx_time: Vec<CVar>,
    /// Per-packet PAPR nodes.
    pub paprs: Vec<VarId>,
    /// Per-packet equalized feature vectors.
    pub features_hat: Vec<CVar>,
    pub n_taps: usize,
    pub packet_len: usize,
    pub n_symbols: usize,
    preamble_std_energy: f64,
    payload_nominal_energy: f64,
}

pub fn build_chain<T: Real>(spec: &ChainSpec<'_, T>) -> ChainGraph<T> {
    let cfg = spec.cfg;
    let k = cfg.k;
    let b = spec.batch;
    let m = spec.encoder.arch.feature_dim;
    assert_eq!(spec.head.arch.feature_dim, m, "encoder and head disagree on M");
    let n_sym = cfg.symbols_for(m);
    let preamble_len = Preamble::len(cfg);
    let payload_len_t = n_sym * cfg.symbol_len();
    let packet_len = preamble_len + payload_len_t;
    let rx_len = packet_len + spec.n_taps - 1;

    let mut g = Graph::<T>::new();

    let in_shape = spec.encoder.arch.input_shape;
    let images = g.leaf_from(
        &vec![T::of(0.5); b * in_shape.iter().product::<usize>()],
        &[b, in_shape[0], in_shape[1], in_shape[2]],
        false,
    );
    let enc_params = spec.encoder.params_as_leaves(&mut g, spec.train_encoder);
    let enc_out = build_forward(&mut g, &spec.encoder.arch, &enc_params, images);
    let enc_flat_len: usize = g.numel(enc_out) / b;
    assert_eq!(enc_flat_len, 2 * m);
    let enc_flat = g.reshape(enc_out, &[b, 2 * m]);

    // perturbation leaves and the transmitted preamble
    let std_preamble = build_preamble(cfg, None).expect("standard preamble");
    let (perturb, preamble_cv) = match &spec.perturb {
        PerturbMode::None => {
            let cv = g.c_constant(&std_preamble.samples);
            (None, cv)
        }
        PerturbMode::Leaves { init_amp, init_phase } => {
            assert_eq!(init_amp.len(), k);
            assert_eq!(init_phase.len(), k);
            let amp = g.leaf_from(init_amp, &[k], true);
            let phase = g.leaf_from(init_phase, &[k], true);
            let cosp = g.cos(phase);
            let sinp = g.sin(phase);
            let v = CVar { re: g.mul(amp, cosp), im: g.mul(amp, sinp) };
            let l_const = g.c_constant(&cfg.lts_freq);
            let lts_freq = g.c_mul(l_const, v);
            let lts_time = g.c_idft(lts_freq, k);
            let guard = g.c_gather(lts_time, &(k - k / 2..k).collect::<Vec<_>>());
            let sts = g.c_constant(&std_preamble.sts);
            let a = g.c_concat(sts, guard);
            let bpart = g.c_concat(lts_time, lts_time);
            let cv = g.c_concat(a, bpart);
            (Some(PerturbLeaves { amp, phase, v }), cv)
        }
    };

    // pilot template and index maps shared by every packet
    let data_bins = cfg.data_bins();
    let mut pilot_grid = vec![Complex::new(T::zero(), T::zero()); n_sym * k];
    for s in 0..n_sym {
        for (l, &pv) in cfg.pilot_logical.iter().zip(&cfg.pilot_values) {
            pilot_grid[s * k + cfg.bin(*l)] = pv;
        }
    }
    let mut fill_idx = Vec::with_capacity(m);
    'fill: for s in 0..n_sym {
        for &bin in &data_bins {
            if fill_idx.len() == m {
                break 'fill;
            }
            fill_idx.push(s * k + bin);
        }
    }
    let mut cp_idx = Vec::with_capacity(payload_len_t);
    for s in 0..n_sym {
        for i in 0..cfg.cp_len {
            cp_idx.push(s * k + (k - cfg.cp_len) + i);
        }
        cp_idx.extend(s * k..(s + 1) * k);
    }
    let lts_region: Vec<usize> =
        (Preamble::lts1_offset(cfg)..Preamble::lts1_offset(cfg) + 2 * k).collect();
    let payload_start = preamble_len;
    let mut payload_sample_idx = Vec::with_capacity(n_sym * k);
    for s in 0..n_sym {
        let base = payload_start + s * cfg.symbol_len() + cfg.cp_len;
        payload_sample_idx.extend(base..base + k);
    }
    let tile_idx: Vec<usize> = (0..n_sym * k).map(|i| i % k).collect();

    let l_ref = g.c_constant(&cfg.lts_freq);
    let floor2 = T::of(EQ_FLOOR2);

    let mut taps_leaves = Vec::with_capacity(b);
    let mut noise_leaves = Vec::with_capacity(b);
    let mut tx_time = Vec::with_capacity(b);
    let mut paprs = Vec::with_capacity(b);
    let mut features_hat: Vec<CVar> = Vec::with_capacity(b);

    for pkt in 0..b {
        // per-packet features, power-normalized
        let re = g.gather(enc_flat, (pkt * 2 * m..pkt * 2 * m + m).collect());
        let im = g.gather(enc_flat, (pkt * 2 * m + m..(pkt + 1) * 2 * m).collect());
        let feats = g.c_power_normalize(CVar { re, im });

        // grid, modulation, CP
        let scattered = g.c_scatter(feats, &fill_idx, n_sym * k);
        let pilots = g.c_constant(&pilot_grid);
        let grid = g.c_add(scattered, pilots);
        let time = g.c_idft(grid, k);
        let payload = g.c_gather(time, &cp_idx);
        let packet = g.c_concat(preamble_cv, payload);

        // PAPR of the transmit signal
        let p2 = g.c_abs2(packet);
        let peak = g.max(p2);
        let avg = g.mean(p2);
        let rho = g.div(peak, avg);
        paprs.push(rho);

        // channel: complex FIR plus bound noise
        let mut init_taps = vec![T::zero(); 2 * spec.n_taps];
        init_taps[0] = T::one();
        let taps = g.leaf_from(&init_taps, &[2 * spec.n_taps], false);
        let faded = g.c_fir(packet, taps, spec.n_taps);
        let noise =
            g.c_leaf(&vec![Complex::new(T::zero(), T::zero()); rx_len], false);
        let rx = g.c_add(faded, noise);

        // ideal-sync receiver with the standard reference
        let lts_pair = g.c_gather(rx, &lts_region);
        let lhat = g.c_dft(lts_pair, k);
        let l1 = g.c_gather(lhat, &(0..k).collect::<Vec<_>>());
        let l2 = g.c_gather(lhat, &(k..2 * k).collect::<Vec<_>>());
        let lsum = g.c_add(l1, l2);
        let lavg = g.c_scale(lsum, T::of(0.5));
        let h_est = g.c_div(lavg, l_ref, floor2);

        let payload_samples = g.c_gather(rx, &payload_sample_idx);
        let y = g.c_dft(payload_samples, k);
        let h_tiled = g.c_gather(h_est, &tile_idx);
        let x_eq = g.c_div(y, h_tiled, floor2);
        let feats_hat = g.c_gather(x_eq, &fill_idx);

        taps_leaves.push(taps);
        noise_leaves.push(noise);
        tx_time.push(packet);
        features_hat.push(feats_hat);
    }

    // head input: per sample re-channels then im-channels
    let mut flat: Option<VarId> = None;
    for f in &features_hat {
        let pair = g.concat(f.re, f.im);
        flat = Some(match flat {
            None => pair,
            Some(acc) => g.concat(acc, pair),
        });
    }
    let hs = spec.head.arch.input_shape;
    let head_in = g.reshape(flat.expect("batch >= 1"), &[b, hs[0], hs[1], hs[2]]);
    let head_params = spec.head.params_as_leaves(&mut g, spec.train_head);
    let output = build_forward(&mut g, &spec.head.arch, &head_params, head_in);
    if spec.head.arch.kind == ArchKind::Decoder {
        let os = spec.head.arch.output_shape();
        assert_eq!(os.iter().product::<usize>(), in_shape.iter().product::<usize>());
    }

    // nominal energies for noise calibration; the noise floor is anchored
    // to the standard-preamble packet so a perturbed LTS does not move it
    let preamble_std_energy: f64 =
        std_preamble.samples.iter().map(|c| c.norm_sqr().to_f64().unwrap()).sum();
    let pilots_energy: f64 =
        cfg.pilot_values.iter().map(|c| c.norm_sqr().to_f64().unwrap()).sum::<f64>() * n_sym as f64;
    let payload_grid_energy = m as f64 + pilots_energy;
    let payload_nominal_energy =
        payload_grid_energy / k as f64 * (1.0 + cfg.cp_len as f64 / k as f64);

    ChainGraph {
        g,
        batch: b,
        feature_dim: m,
        images,
        enc_params,
        head_params,
        taps: taps_leaves,
        noise: noise_leaves,
        perturb,
        output,
        tx_time,
        paprs,
        features_hat,
        n_taps: spec.n_taps,
        packet_len,
        n_symbols: n_sym,
        preamble_std_energy,
        payload_nominal_energy,
    }
}

impl<T: Real> ChainGraph<T> {
    pub fn bind_images(&mut self, images: &[T]) {
        self.g.set_leaf(self.images, images);
    }

    pub fn bind_encoder(&mut self, model: &JsccModel<T>) {
        for (t, &id) in model.params.iter().zip(&self.enc_params) {
            self.g.set_leaf(id, &t.values);
        }
    }

    pub fn bind_head(&mut self, model: &JsccModel<T>) {
        for (t, &id) in model.params.iter().zip(&self.head_params) {
            self.g.set_leaf(id, &t.values);
        }
    }

    pub fn bind_perturbation(&mut self, amp: &[T], phase: &[T]) {
        let p = self.perturb.as_ref().expect("chain built without perturbation leaves");
        let (a, ph) = (p.amp, p.phase);
        self.g.set_leaf(a, amp);
        self.g.set_leaf(ph, phase);
    }

    /// Draw a channel realization and noise per packet at the given SNR.
    /// Noise power is calibrated against the nominal standard-preamble
    /// transmit power, so a perturbation never moves the noise floor.
    pub fn bind_channel(&mut self, model: &ChannelModel<T>, snr_db: T, rng: &mut ChaCha8Rng) {
        let rx_len = self.packet_len + self.n_taps - 1;
        let nominal = self.nominal_packet_energy() / self.packet_len as f64;
        for pkt in 0..self.batch {
            let real = sample_channel(model, rng);
            assert_eq!(real.taps.len(), self.n_taps, "chain built for {} taps", self.n_taps);
            let mut tv = vec![T::zero(); 2 * self.n_taps];
            for (l, c) in real.taps.iter().enumerate() {
                tv[l] = c.re;
                tv[self.n_taps + l] = c.im;
            }
            self.g.set_leaf(self.taps[pkt], &tv);

            let mut nv = vec![T::zero(); 2 * rx_len];
            if snr_db.is_finite() {
                let snr_lin = 10.0f64.powf(snr_db.to_f64().unwrap() / 10.0);
                let sigma = (nominal / snr_lin / 2.0).sqrt();
                for i in 0..rx_len {
                    let (a, b) = gauss_pair::<T>(rng);
                    nv[2 * i] = a * T::of(sigma);
                    nv[2 * i + 1] = b * T::of(sigma);
                }
            }
            let re: Vec<T> = (0..rx_len).map(|i| nv[2 * i]).collect();
            let im: Vec<T> = (0..rx_len).map(|i| nv[2 * i + 1]).collect();
            let n = self.noise[pkt];
            self.g.set_leaf(n.re, &re);
            self.g.set_leaf(n.im, &im);
        }
    }

    fn nominal_packet_energy(&self) -> f64 {
        self.preamble_std_energy + self.payload_nominal_energy
    }

    /// Batch-mean of the per-image sum of squared errors between the head
    /// output and the bound source images.
    pub fn recon_loss_node(&mut self) -> VarId {
        let d = self.g.sub(self.output, self.images);
        let sq = self.g.mul(d, d);
        let s = self.g.sum(sq);
        self.g.scale(s, T::one() / T::usize(self.batch))
    }

    /// `lambda` times the batch-mean PAPR, added to a base loss.
    pub fn with_papr_penalty(&mut self, base: VarId, lambda: T) -> VarId {
        let mut acc = self.paprs[0];
        for &r in &self.paprs[1..] {
            acc = self.g.add(acc, r);
        }
        let mean = self.g.scale(acc, T::one() / T::usize(self.paprs.len()));
        let pen = self.g.scale(mean, lambda);
        self.g.add(base, pen)
    }
}

/// Batch-mean hinge loss with the per-sample class chosen by a bound
/// one-hot selector leaf, so labels can change without rebuilding the
/// graph. Returns the loss node and the selector leaf ([batch * classes]).
pub fn hinge_loss_selected<T: Real>(
    g: &mut Graph<T>,
    logits: VarId,
    batch: usize,
    classes: usize,
    kappa: T,
    targeted: bool,
) -> (VarId, VarId) {
    let mut stack: Option<VarId> = None;
    for b in 0..batch {
        for y in 0..classes {
            let h = hinge_loss_node(g, logits, b, classes, y, kappa, targeted);
            stack = Some(match stack {
                None => h,
                Some(acc) => g.concat(acc, h),
            });
        }
    }
    let selector = g.leaf_from(&vec![T::zero(); batch * classes], &[batch * classes], false);
    let picked = g.mul(stack.expect("batch >= 1"), selector);
    let s = g.sum(picked);
    let loss = g.scale(s, T::one() / T::usize(batch));
    (loss, selector)
}

/// Per-sample hinge on logits. With `targeted = false` and `label = y` this
/// is max(0, Z[y] - max_{y' != y} Z[y'] + kappa); with `targeted = true`
/// and `label = t` it is max(0, max_{y' != t} Z[y'] - Z[t] + kappa).
pub fn hinge_loss_node<T: Real>(
    g: &mut Graph<T>,
    logits: VarId,
    sample: usize,
    classes: usize,
    label: usize,
    kappa: T,
    targeted: bool,
) -> VarId {
    assert!(label < classes, "label {label} out of range");
    let z_l = g.gather(logits, vec![sample * classes + label]);
    let others: Vec<usize> =
        (0..classes).filter(|&c| c != label).map(|c| sample * classes + c).collect();
    let z_o = g.gather(logits, others);
    let m = g.max(z_o);
    let diff = if targeted { g.sub(m, z_l) } else { g.sub(z_l, m) };
    let marg = g.offset(diff, kappa);
    g.relu(marg)
}
