/// Activation applied after a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Act {
    None,
    Leaky(f64),
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// (I, O, S, P) convolution with a k x k kernel.
    Conv { i: usize, o: usize, k: usize, s: usize, p: usize, act: Act },
    /// Transposed convolution; `op` is the output padding.
    ConvT { i: usize, o: usize, k: usize, s: usize, p: usize, op: usize, act: Act },
    Dense { i: usize, o: usize, act: Act },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Encoder,
    Decoder,
    Classifier,
}

/// Network shape description. The channel interface always carries
/// `feature_dim` complex symbols; an encoder's output tensor flattens to
/// twice that many real values (first half of the channels is the real
/// part, second half the imaginary part), and a decoder or classifier
/// consumes the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArch {
    pub kind: ArchKind,
    /// [C, H, W] consumed by the first layer.
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    /// M, complex symbols on the channel.
    pub feature_dim: usize,
}

impl ModelArch {
    /// Propagate [C, H, W] through the layers; panics on inconsistent specs.
    pub fn output_shape(&self) -> Vec<usize> {
        let mut shape: Vec<usize> = self.input_shape.to_vec();
        for layer in &self.layers {
            match *layer {
                LayerSpec::Conv { i, o, k, s, p, .. } => {
                    assert_eq!(shape.len(), 3, "conv after dense in {:?}", self.kind);
                    assert_eq!(shape[0], i, "conv input channels");
                    shape = vec![o, (shape[1] + 2 * p - k) / s + 1, (shape[2] + 2 * p - k) / s + 1];
                }
                LayerSpec::ConvT { i, o, k, s, p, op, .. } => {
                    assert_eq!(shape.len(), 3, "conv-t after dense in {:?}", self.kind);
                    assert_eq!(shape[0], i, "conv-t input channels");
                    shape = vec![
                        o,
                        (shape[1] - 1) * s + k + op - 2 * p,
                        (shape[2] - 1) * s + k + op - 2 * p,
                    ];
                }
                LayerSpec::Dense { i, o, .. } => {
                    let flat: usize = shape.iter().product();
                    assert_eq!(flat, i, "dense input size");
                    shape = vec![o];
                }
            }
        }
        shape
    }

    /// Real values entering the encoder / leaving the decoder.
    pub fn source_dim(&self) -> usize {
        match self.kind {
            ArchKind::Encoder => self.input_shape.iter().product(),
            ArchKind::Decoder => self.output_shape().iter().product(),
            ArchKind::Classifier => panic!("classifier has no source dimension"),
        }
    }

    /// Bandwidth ratio M/N.
    pub fn bandwidth_ratio(&self) -> f64 {
        self.feature_dim as f64 / self.source_dim() as f64
    }

    pub fn validate(&self) {
        let out: usize = self.output_shape().iter().product();
        match self.kind {
            ArchKind::Encoder => {
                assert_eq!(out, 2 * self.feature_dim, "encoder output must be 2M real values");
                let ratio = self.bandwidth_ratio();
                assert!(ratio > 0.0 && ratio <= 1.0, "bandwidth ratio {ratio} outside (0, 1]");
            }
            ArchKind::Decoder | ArchKind::Classifier => {
                let flat: usize = self.input_shape.iter().product();
                assert_eq!(flat, 2 * self.feature_dim, "input must be 2M real values");
            }
        }
    }
}

const LEAKY_SLOPE: f64 = 0.2;

/// 28x28 grayscale encoder; `c = 16` gives M = 392 (ratio 1/2).
pub fn mnist_encoder(c: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Encoder,
        input_shape: [1, 28, 28],
        layers: vec![
            LayerSpec::Conv { i: 1, o: c, k: 3, s: 2, p: 1, act: a },
            LayerSpec::Conv { i: c, o: c, k: 3, s: 2, p: 1, act: a },
            LayerSpec::Conv { i: c, o: c, k: 3, s: 1, p: 1, act: Act::None },
        ],
        feature_dim: c * 7 * 7 / 2,
    }
}

/// Mirror of [`mnist_encoder`] with transposed convolutions and a final
/// sigmoid.
pub fn mnist_decoder(c: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Decoder,
        input_shape: [c, 7, 7],
        layers: vec![
            LayerSpec::ConvT { i: c, o: c, k: 3, s: 1, p: 1, op: 0, act: a },
            LayerSpec::ConvT { i: c, o: c, k: 3, s: 2, p: 1, op: 1, act: a },
            LayerSpec::ConvT { i: c, o: 1, k: 3, s: 2, p: 1, op: 1, act: Act::Sigmoid },
        ],
        feature_dim: c * 7 * 7 / 2,
    }
}

/// 32x32 RGB encoder; `c = 16` gives M = 512 (ratio 1/6).
pub fn cifar_encoder(c: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Encoder,
        input_shape: [3, 32, 32],
        layers: vec![
            LayerSpec::Conv { i: 3, o: c, k: 3, s: 2, p: 1, act: a },
            LayerSpec::Conv { i: c, o: c, k: 3, s: 2, p: 1, act: a },
            LayerSpec::Conv { i: c, o: c, k: 3, s: 1, p: 1, act: Act::None },
        ],
        feature_dim: c * 8 * 8 / 2,
    }
}

pub fn cifar_decoder(c: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Decoder,
        input_shape: [c, 8, 8],
        layers: vec![
            LayerSpec::ConvT { i: c, o: c, k: 3, s: 1, p: 1, op: 0, act: a },
            LayerSpec::ConvT { i: c, o: c, k: 3, s: 2, p: 1, op: 1, act: a },
            LayerSpec::ConvT { i: c, o: 3, k: 3, s: 2, p: 1, op: 1, act: Act::Sigmoid },
        ],
        feature_dim: c * 8 * 8 / 2,
    }
}

/// Classifier head on the 28x28 feature layout: one convolution and two
/// dense layers ending in raw logits.
pub fn mnist_classifier(c: usize, classes: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Classifier,
        input_shape: [c, 7, 7],
        layers: vec![
            LayerSpec::Conv { i: c, o: c, k: 3, s: 2, p: 1, act: a },
            LayerSpec::Dense { i: c * 4 * 4, o: 64, act: a },
            LayerSpec::Dense { i: 64, o: classes, act: Act::None },
        ],
        feature_dim: c * 7 * 7 / 2,
    }
}

/// Generic surrogate decoder for a black-box attacker: same input layout
/// as the reference decoder but doubled channel width.
pub fn blackbox_decoder(c: usize) -> ModelArch {
    let a = Act::Leaky(LEAKY_SLOPE);
    ModelArch {
        kind: ArchKind::Decoder,
        input_shape: [c, 7, 7],
        layers: vec![
            LayerSpec::ConvT { i: c, o: 2 * c, k: 3, s: 1, p: 1, op: 0, act: a },
            LayerSpec::ConvT { i: 2 * c, o: 2 * c, k: 3, s: 2, p: 1, op: 1, act: a },
            LayerSpec::ConvT { i: 2 * c, o: 1, k: 3, s: 2, p: 1, op: 1, act: Act::Sigmoid },
        ],
        feature_dim: c * 7 * 7 / 2,
    }
}
