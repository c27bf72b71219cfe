use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::arch::{Act, ArchKind, LayerSpec, ModelArch};
use crate::channel::gauss_pair;
use crate::diff::{Graph, Tensor, VarId};
use crate::error::{Error, Result};
use crate::real::Real;

/// Architecture plus its parameter tensors (weights and biases per layer,
/// in declaration order).
#[derive(Debug, Clone)]
pub struct JsccModel<T> {
    pub arch: ModelArch,
    pub params: Vec<Tensor<T>>,
}

impl<T: Real> JsccModel<T> {
    /// He-style initialization, deterministic in the seed.
    pub fn init(arch: ModelArch, seed: u64) -> Self {
        arch.validate();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for layer in &arch.layers {
            let (w_shape, fan_in, b_len) = match *layer {
                LayerSpec::Conv { i, o, k, .. } => (vec![o, i, k, k], i * k * k, o),
                LayerSpec::ConvT { i, o, k, .. } => (vec![i, o, k, k], i * k * k, o),
                LayerSpec::Dense { i, o, .. } => (vec![o, i], i, o),
            };
            let std = T::of((2.0 / fan_in as f64).sqrt());
            let n: usize = w_shape.iter().product();
            let mut w = Vec::with_capacity(n);
            while w.len() < n {
                let (a, b) = gauss_pair::<T>(&mut rng);
                w.push(a * std);
                if w.len() < n {
                    w.push(b * std);
                }
            }
            params.push(Tensor::new(w_shape, w));
            params.push(Tensor::zeros(vec![b_len]));
        }
        JsccModel { arch, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|t| t.numel()).sum()
    }

    /// Insert every parameter tensor as a graph leaf.
    pub fn params_as_leaves(&self, g: &mut Graph<T>, requires_grad: bool) -> Vec<VarId> {
        self.params.iter().map(|t| g.leaf(t.clone(), requires_grad)).collect()
    }

    /// Copy updated values back from graph leaves.
    pub fn read_back(&mut self, g: &Graph<T>, leaves: &[VarId]) {
        for (t, &id) in self.params.iter_mut().zip(leaves) {
            t.values.copy_from_slice(g.value(id));
        }
    }
}

/// Build the forward pass of a model inside a graph. `input` is a 4-d
/// [B, C, H, W] node; returns the output node ([B, C', H', W'] or [B, O]).
pub fn build_forward<T: Real>(
    g: &mut Graph<T>,
    arch: &ModelArch,
    params: &[VarId],
    input: VarId,
) -> VarId {
    assert_eq!(params.len(), 2 * arch.layers.len(), "one (w, b) pair per layer");
    let mut x = input;
    for (li, layer) in arch.layers.iter().enumerate() {
        let (w, b) = (params[2 * li], params[2 * li + 1]);
        let act = match *layer {
            LayerSpec::Conv { s, p, act, .. } => {
                x = g.conv2d(x, w, b, s, p);
                act
            }
            LayerSpec::ConvT { s, p, op, act, .. } => {
                x = g.conv2d_transpose(x, w, b, s, p, op);
                act
            }
            LayerSpec::Dense { i, act, .. } => {
                if g.shape(x).len() != 2 {
                    let bsz = g.shape(x)[0];
                    x = g.reshape(x, &[bsz, i]);
                }
                x = g.affine(x, w, b);
                act
            }
        };
        x = match act {
            Act::None => x,
            Act::Leaky(slope) => g.leaky_relu(x, T::of(slope)),
            Act::Sigmoid => g.sigmoid(x),
        };
    }
    x
}

/// Index maps between a [B, C, H, W] output tensor and per-sample complex
/// features: channels [0, C/2) are the real parts, [C/2, C) the imaginary
/// parts, each flattened row-major.
pub fn feature_split_indices(c: usize, h: usize, w: usize) -> (Vec<usize>, Vec<usize>) {
    let half = c / 2 * h * w;
    ((0..half).collect(), (half..2 * half).collect())
}

/// Scale complex features to unit mean power. Fails on an all-zero input.
pub fn power_normalize<T: Real>(features: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let mp: T = features.iter().map(|c| c.norm_sqr()).sum::<T>() / T::usize(features.len());
    if mp <= T::of(1e-30) {
        return Err(Error::ZeroInput("power_normalize"));
    }
    let scale = T::one() / mp.sqrt();
    Ok(features.iter().map(|c| c * scale).collect())
}

/// Run the encoder on one image and return M power-normalized complex
/// symbols.
pub fn encode<T: Real>(image: &[T], model: &JsccModel<T>) -> Result<Vec<Complex<T>>> {
    let arch = &model.arch;
    assert_eq!(arch.kind, ArchKind::Encoder, "encode needs an encoder");
    let n: usize = arch.input_shape.iter().product();
    if image.len() != n {
        return Err(Error::Shape {
            op: "encode",
            details: format!("image has {} values, arch wants {}", image.len(), n),
        });
    }
    let mut g = Graph::new();
    let shape = [1, arch.input_shape[0], arch.input_shape[1], arch.input_shape[2]];
    let x = g.leaf_from(image, &shape, false);
    let leaves = model.params_as_leaves(&mut g, false);
    let out = build_forward(&mut g, arch, &leaves, x);
    let os = arch.output_shape();
    let v = g.value(out);
    let half = os.iter().product::<usize>() / 2;
    let feats: Vec<Complex<T>> =
        (0..half).map(|i| Complex::new(v[i], v[half + i])).collect();
    power_normalize(&feats)
}

/// Turn M complex features back into the decoder's input values
/// (real-part channels then imaginary-part channels).
pub fn features_to_input<T: Real>(features: &[Complex<T>]) -> Vec<T> {
    let mut v = Vec::with_capacity(2 * features.len());
    v.extend(features.iter().map(|c| c.re));
    v.extend(features.iter().map(|c| c.im));
    v
}

/// Run the decoder on M complex features; output is in [0, 1] via the
/// final sigmoid.
pub fn decode<T: Real>(features: &[Complex<T>], model: &JsccModel<T>) -> Result<Vec<T>> {
    forward_features(features, model, ArchKind::Decoder, "decode")
}

/// Run the classifier head on M complex features; output is raw logits.
pub fn classify<T: Real>(features: &[Complex<T>], model: &JsccModel<T>) -> Result<Vec<T>> {
    forward_features(features, model, ArchKind::Classifier, "classify")
}

fn forward_features<T: Real>(
    features: &[Complex<T>],
    model: &JsccModel<T>,
    kind: ArchKind,
    op: &'static str,
) -> Result<Vec<T>> {
    let arch = &model.arch;
    assert_eq!(arch.kind, kind, "{op} got a {:?} model", arch.kind);
    if features.len() != arch.feature_dim {
        return Err(Error::Shape {
            op: "feature input",
            details: format!("{} features, arch wants {}", features.len(), arch.feature_dim),
        });
    }
    let mut g = Graph::new();
    let vals = features_to_input(features);
    let shape = [1, arch.input_shape[0], arch.input_shape[1], arch.input_shape[2]];
    let x = g.leaf_from(&vals, &shape, false);
    let leaves = model.params_as_leaves(&mut g, false);
    let out = build_forward(&mut g, arch, &leaves, x);
    Ok(g.value(out).to_vec())
}

#[cfg(test)]
mod tests {
    use super::super::arch::{mnist_classifier, mnist_decoder, mnist_encoder};
    use super::*;

    #[test]
    fn encode_shape_and_unit_power() {
        let model = JsccModel::<f32>::init(mnist_encoder(16), 1);
        let image = vec![0.5f32; 784];
        let feats = encode(&image, &model).unwrap();
        assert_eq!(feats.len(), 392);
        let mp: f32 = feats.iter().map(|c| c.norm_sqr()).sum::<f32>() / 392.0;
        assert!((mp - 1.0).abs() < 1e-5, "mean power {mp}");
    }

    #[test]
    fn encode_rejects_wrong_shape() {
        let model = JsccModel::<f32>::init(mnist_encoder(16), 1);
        assert!(encode(&vec![0.0f32; 100], &model).is_err());
    }

    #[test]
    fn power_normalize_cases() {
        // [2, 2j] has mean power 4 -> scale 1/2
        let f = vec![Complex::new(2.0f64, 0.0), Complex::new(0.0, 2.0)];
        let n = power_normalize(&f).unwrap();
        assert!((n[0].re - 1.0).abs() < 1e-12 && (n[1].im - 1.0).abs() < 1e-12);

        // already unit power: unchanged
        let n2 = power_normalize(&n).unwrap();
        for (a, b) in n.iter().zip(&n2) {
            assert!((a - b).norm() < 1e-9);
        }

        // single symbol 3+4j -> (3+4j)/5
        let s = power_normalize(&[Complex::new(3.0f64, 4.0)]).unwrap();
        assert!((s[0] - Complex::new(0.6, 0.8)).norm() < 1e-12);

        assert!(matches!(
            power_normalize(&[Complex::new(0.0f64, 0.0)]),
            Err(Error::ZeroInput(_))
        ));
    }

    #[test]
    fn decode_untrained_is_finite_in_unit_interval_and_deterministic() {
        let model = JsccModel::<f32>::init(mnist_decoder(16), 2);
        let feats: Vec<Complex<f32>> =
            (0..392).map(|i| Complex::new((i as f32 * 0.1).sin(), (i as f32 * 0.2).cos())).collect();
        let out = decode(&feats, &model).unwrap();
        assert_eq!(out.len(), 784);
        assert!(out.iter().all(|&v| v.is_finite() && (0.0..=1.0).contains(&v)));

        // zero features give the deterministic bias response
        let zeros = vec![Complex::new(0.0f32, 0.0); 392];
        let a = decode(&zeros, &model).unwrap();
        let b = decode(&zeros, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classify_logits_shape_and_determinism() {
        let model = JsccModel::<f32>::init(mnist_classifier(16, 10), 3);
        let feats: Vec<Complex<f32>> =
            (0..392).map(|i| Complex::new((i as f32 * 0.05).cos(), 0.1)).collect();
        let a = classify(&feats, &model).unwrap();
        let b = classify(&feats, &model).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = JsccModel::<f32>::init(mnist_encoder(16), 9);
        let b = JsccModel::<f32>::init(mnist_encoder(16), 9);
        assert_eq!(a.params, b.params);
    }
}
