use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::Real;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

/// Plain host-side tensor: flat row-major values plus a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor value count {} does not match shape {:?}",
            values.len(),
            shape
        );
        Tensor { shape, values }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, values: vec![T::zero(); n] }
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Add(VarId, VarId),
    Sub(VarId, VarId),
    Mul(VarId, VarId),
    Div(VarId, VarId),
    Neg(VarId),
    /// x * c elementwise, constant c.
    Scale(VarId, T),
    /// x + c elementwise, constant c.
    Offset(VarId, T),
    /// Broadcast multiply by a single-element node.
    MulScalar(VarId, VarId),
    /// x.powf(e) elementwise; callers keep x in the exponent's domain.
    PowConst(VarId, T),
    Sin(VarId),
    Cos(VarId),
    LeakyRelu(VarId, T),
    Sigmoid(VarId),
    Clamp(VarId, T, T),
    /// Dense map: x [B,I] * w [O,I]^T + b [O] -> [B,O].
    Affine { x: VarId, w: VarId, b: VarId },
    Conv2d { x: VarId, w: VarId, b: VarId, stride: usize, pad: usize },
    ConvT2d { x: VarId, w: VarId, b: VarId, stride: usize, pad: usize, #[allow(dead_code)] out_pad: usize },
    /// Same data, new shape.
    Reshape(VarId),
    /// out[i] = x[idx[i]]; indices may repeat.
    Gather(VarId, Arc<Vec<usize>>),
    /// out[idx[i]] = x[i] into a zero buffer; indices must be unique.
    Scatter(VarId, Arc<Vec<usize>>, usize),
    Concat(VarId, VarId),
    Sum(VarId),
    Mean(VarId),
    /// Maximum entry; gradient flows to the first maximum only.
    Max(VarId),
    /// Length-n DFT (or scaled IDFT) along rows of an (re, im) pair.
    /// Output rows are [re(0..n) | im(0..n)], i.e. shape [rows, 2n].
    Fourier { re: VarId, im: VarId, inverse: bool, n: usize },
}

#[derive(Debug, Clone)]
struct Node<T> {
    op: Op<T>,
    shape: Vec<usize>,
    /// True if this node is a requires-grad leaf or depends on one.
    track: bool,
}

struct Twiddles<T> {
    n: usize,
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> Twiddles<T> {
    fn new(n: usize) -> Self {
        let mut cos = vec![T::zero(); n * n];
        let mut sin = vec![T::zero(); n * n];
        for k in 0..n {
            for m in 0..n {
                let theta = 2.0 * std::f64::consts::PI * ((k * m) % n) as f64 / n as f64;
                cos[k * n + m] = T::of(theta.cos());
                sin[k * n + m] = T::of(theta.sin());
            }
        }
        Twiddles { n, cos, sin }
    }
}

/// Expression graph over flat real tensors.
///
/// Construction is eager: every builder computes its forward value
/// immediately. Leaves can be rebound with [`Graph::set_leaf`] followed by
/// [`Graph::forward`] to re-evaluate the whole graph, which is what training
/// loops and finite-difference checks rely on. Topology is fixed once built.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    vals: Vec<Vec<T>>,
    grads: Vec<Option<Vec<T>>>,
    twiddles: HashMap<usize, Arc<Twiddles<T>>>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new(), vals: Vec::new(), grads: Vec::new(), twiddles: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: VarId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn numel(&self, id: VarId) -> usize {
        self.vals[id.0].len()
    }

    /// Current forward value of a node.
    pub fn value(&self, id: VarId) -> &[T] {
        &self.vals[id.0]
    }

    /// Gradient of the last `backward` target with respect to `id`.
    /// Zero for nodes the loss does not depend on.
    pub fn grad(&self, id: VarId) -> Vec<T> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => vec![T::zero(); self.vals[id.0].len()],
        }
    }

    fn push(&mut self, op: Op<T>, shape: Vec<usize>, track: bool) -> VarId {
        let id = VarId(self.nodes.len());
        self.nodes.push(Node { op, shape, track });
        let v = self.compute(id.0);
        self.vals.push(v);
        self.grads.push(None);
        id
    }

    fn track_of(&self, ids: &[VarId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].track)
    }

    fn assert_same_shape(&self, op: &'static str, a: VarId, b: VarId) {
        assert_eq!(
            self.nodes[a.0].shape, self.nodes[b.0].shape,
            "shape mismatch in {}: {:?} vs {:?}",
            op, self.nodes[a.0].shape, self.nodes[b.0].shape
        );
    }

    // ---- builders ------------------------------------------------------

    pub fn leaf(&mut self, t: Tensor<T>, requires_grad: bool) -> VarId {
        let id = VarId(self.nodes.len());
        self.nodes.push(Node { op: Op::Leaf, shape: t.shape, track: requires_grad });
        self.vals.push(t.values);
        self.grads.push(None);
        id
    }

    pub fn leaf_from(&mut self, values: &[T], shape: &[usize], requires_grad: bool) -> VarId {
        self.leaf(Tensor::new(shape.to_vec(), values.to_vec()), requires_grad)
    }

    pub fn constant(&mut self, values: &[T], shape: &[usize]) -> VarId {
        self.leaf_from(values, shape, false)
    }

    pub fn scalar(&mut self, v: T) -> VarId {
        self.leaf_from(&[v], &[1], false)
    }

    /// Rebind a leaf's values. Length must match.
    pub fn set_leaf(&mut self, id: VarId, values: &[T]) {
        assert!(matches!(self.nodes[id.0].op, Op::Leaf), "set_leaf on non-leaf node");
        assert_eq!(
            values.len(),
            self.vals[id.0].len(),
            "set_leaf length {} does not match node size {}",
            values.len(),
            self.vals[id.0].len()
        );
        self.vals[id.0].copy_from_slice(values);
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> VarId {
        self.assert_same_shape("add", a, b);
        let (s, t) = (self.nodes[a.0].shape.clone(), self.track_of(&[a, b]));
        self.push(Op::Add(a, b), s, t)
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> VarId {
        self.assert_same_shape("sub", a, b);
        let (s, t) = (self.nodes[a.0].shape.clone(), self.track_of(&[a, b]));
        self.push(Op::Sub(a, b), s, t)
    }

    pub fn mul(&mut self, a: VarId, b: VarId) -> VarId {
        self.assert_same_shape("mul", a, b);
        let (s, t) = (self.nodes[a.0].shape.clone(), self.track_of(&[a, b]));
        self.push(Op::Mul(a, b), s, t)
    }

    pub fn div(&mut self, a: VarId, b: VarId) -> VarId {
        self.assert_same_shape("div", a, b);
        let (s, t) = (self.nodes[a.0].shape.clone(), self.track_of(&[a, b]));
        self.push(Op::Div(a, b), s, t)
    }

    pub fn neg(&mut self, a: VarId) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Neg(a), s, t)
    }

    pub fn scale(&mut self, a: VarId, c: T) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Scale(a, c), s, t)
    }

    pub fn offset(&mut self, a: VarId, c: T) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Offset(a, c), s, t)
    }

    pub fn mul_scalar(&mut self, a: VarId, s: VarId) -> VarId {
        assert_eq!(self.vals[s.0].len(), 1, "mul_scalar: scalar operand has {} values", self.vals[s.0].len());
        let (sh, t) = (self.nodes[a.0].shape.clone(), self.track_of(&[a, s]));
        self.push(Op::MulScalar(a, s), sh, t)
    }

    pub fn pow_const(&mut self, a: VarId, e: T) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::PowConst(a, e), s, t)
    }

    pub fn sin(&mut self, a: VarId) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Sin(a), s, t)
    }

    pub fn cos(&mut self, a: VarId) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Cos(a), s, t)
    }

    pub fn leaky_relu(&mut self, a: VarId, slope: T) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::LeakyRelu(a, slope), s, t)
    }

    /// max(x, 0), the hinge building block.
    pub fn relu(&mut self, a: VarId) -> VarId {
        self.leaky_relu(a, T::zero())
    }

    pub fn sigmoid(&mut self, a: VarId) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Sigmoid(a), s, t)
    }

    /// Clamp to [lo, hi]; gradient is zero where a bound is active.
    pub fn clamp(&mut self, a: VarId, lo: T, hi: T) -> VarId {
        let (s, t) = (self.nodes[a.0].shape.clone(), self.nodes[a.0].track);
        self.push(Op::Clamp(a, lo, hi), s, t)
    }

    pub fn affine(&mut self, x: VarId, w: VarId, b: VarId) -> VarId {
        let (xs, ws, bs) =
            (self.nodes[x.0].shape.clone(), self.nodes[w.0].shape.clone(), self.nodes[b.0].shape.clone());
        assert!(
            xs.len() == 2 && ws.len() == 2 && bs.len() == 1 && xs[1] == ws[1] && ws[0] == bs[0],
            "shape mismatch in affine: x {:?}, w {:?}, b {:?}",
            xs, ws, bs
        );
        let t = self.track_of(&[x, w, b]);
        self.push(Op::Affine { x, w, b }, vec![xs[0], ws[0]], t)
    }

    pub fn conv2d(&mut self, x: VarId, w: VarId, b: VarId, stride: usize, pad: usize) -> VarId {
        let (xs, ws, bs) =
            (self.nodes[x.0].shape.clone(), self.nodes[w.0].shape.clone(), self.nodes[b.0].shape.clone());
        assert!(
            xs.len() == 4 && ws.len() == 4 && bs.len() == 1 && xs[1] == ws[1] && ws[0] == bs[0],
            "shape mismatch in conv2d: x {:?}, w {:?}, b {:?}",
            xs, ws, bs
        );
        let ho = (xs[2] + 2 * pad - ws[2]) / stride + 1;
        let wo = (xs[3] + 2 * pad - ws[3]) / stride + 1;
        let t = self.track_of(&[x, w, b]);
        self.push(Op::Conv2d { x, w, b, stride, pad }, vec![xs[0], ws[0], ho, wo], t)
    }

    pub fn conv2d_transpose(
        &mut self,
        x: VarId,
        w: VarId,
        b: VarId,
        stride: usize,
        pad: usize,
        out_pad: usize,
    ) -> VarId {
        let (xs, ws, bs) =
            (self.nodes[x.0].shape.clone(), self.nodes[w.0].shape.clone(), self.nodes[b.0].shape.clone());
        assert!(
            xs.len() == 4 && ws.len() == 4 && bs.len() == 1 && xs[1] == ws[0] && ws[1] == bs[0],
            "shape mismatch in conv2d_transpose: x {:?}, w {:?} (Cin,Cout,kh,kw), b {:?}",
            xs, ws, bs
        );
        let ho = (xs[2] - 1) * stride + ws[2] + out_pad - 2 * pad;
        let wo = (xs[3] - 1) * stride + ws[3] + out_pad - 2 * pad;
        let t = self.track_of(&[x, w, b]);
        self.push(Op::ConvT2d { x, w, b, stride, pad, out_pad }, vec![xs[0], ws[1], ho, wo], t)
    }

    pub fn reshape(&mut self, a: VarId, shape: &[usize]) -> VarId {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.vals[a.0].len(),
            "reshape of {} values to {:?}",
            self.vals[a.0].len(),
            shape
        );
        let t = self.nodes[a.0].track;
        self.push(Op::Reshape(a), shape.to_vec(), t)
    }

    pub fn gather(&mut self, a: VarId, indices: Vec<usize>) -> VarId {
        let n = self.vals[a.0].len();
        assert!(indices.iter().all(|&i| i < n), "gather index out of range (len {})", n);
        let t = self.nodes[a.0].track;
        let shape = vec![indices.len()];
        self.push(Op::Gather(a, Arc::new(indices)), shape, t)
    }

    /// Scatter into a zeroed buffer of `out_len`; `indices` must be unique.
    pub fn scatter(&mut self, a: VarId, indices: Vec<usize>, out_len: usize) -> VarId {
        assert_eq!(indices.len(), self.vals[a.0].len(), "scatter index count mismatch");
        assert!(indices.iter().all(|&i| i < out_len), "scatter index out of range");
        debug_assert!(
            {
                let mut seen = vec![false; out_len];
                indices.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
            },
            "scatter indices must be unique"
        );
        let t = self.nodes[a.0].track;
        self.push(Op::Scatter(a, Arc::new(indices), out_len), vec![out_len], t)
    }

    pub fn concat(&mut self, a: VarId, b: VarId) -> VarId {
        let n = self.vals[a.0].len() + self.vals[b.0].len();
        let t = self.track_of(&[a, b]);
        self.push(Op::Concat(a, b), vec![n], t)
    }

    pub fn sum(&mut self, a: VarId) -> VarId {
        let t = self.nodes[a.0].track;
        self.push(Op::Sum(a), vec![1], t)
    }

    pub fn mean(&mut self, a: VarId) -> VarId {
        assert!(!self.vals[a.0].is_empty(), "mean of empty tensor");
        let t = self.nodes[a.0].track;
        self.push(Op::Mean(a), vec![1], t)
    }

    pub fn max(&mut self, a: VarId) -> VarId {
        assert!(!self.vals[a.0].is_empty(), "max of empty tensor");
        let t = self.nodes[a.0].track;
        self.push(Op::Max(a), vec![1], t)
    }

    /// DFT/IDFT over the last axis of an (re, im) pair shaped [rows, n].
    /// Returns a node shaped [rows, 2n]: per row, re output then im output.
    /// Analysis DFT is unnormalized; synthesis IDFT carries the 1/n factor.
    pub fn fourier(&mut self, re: VarId, im: VarId, n: usize, inverse: bool) -> VarId {
        self.assert_same_shape("fourier", re, im);
        let numel = self.vals[re.0].len();
        assert!(n > 0 && numel % n == 0, "fourier: {} values not divisible by n={}", numel, n);
        self.twiddles.entry(n).or_insert_with(|| Arc::new(Twiddles::new(n)));
        let rows = numel / n;
        let t = self.track_of(&[re, im]);
        self.push(Op::Fourier { re, im, inverse, n }, vec![rows, 2 * n], t)
    }

    // ---- evaluation ----------------------------------------------------

    /// Recompute every non-leaf value in construction order.
    pub fn forward(&mut self) {
        for i in 0..self.nodes.len() {
            if !matches!(self.nodes[i].op, Op::Leaf) {
                self.vals[i] = self.compute(i);
            }
        }
    }

    fn compute(&self, i: usize) -> Vec<T> {
        let v = |id: VarId| &self.vals[id.0];
        match &self.nodes[i].op {
            Op::Leaf => self.vals[i].clone(),
            Op::Add(a, b) => v(*a).iter().zip(v(*b)).map(|(&x, &y)| x + y).collect(),
            Op::Sub(a, b) => v(*a).iter().zip(v(*b)).map(|(&x, &y)| x - y).collect(),
            Op::Mul(a, b) => v(*a).iter().zip(v(*b)).map(|(&x, &y)| x * y).collect(),
            Op::Div(a, b) => v(*a).iter().zip(v(*b)).map(|(&x, &y)| x / y).collect(),
            Op::Neg(a) => v(*a).iter().map(|&x| -x).collect(),
            Op::Scale(a, c) => v(*a).iter().map(|&x| x * *c).collect(),
            Op::Offset(a, c) => v(*a).iter().map(|&x| x + *c).collect(),
            Op::MulScalar(a, s) => {
                let sv = v(*s)[0];
                v(*a).iter().map(|&x| x * sv).collect()
            }
            Op::PowConst(a, e) => v(*a).iter().map(|&x| x.powf(*e)).collect(),
            Op::Sin(a) => v(*a).iter().map(|&x| x.sin()).collect(),
            Op::Cos(a) => v(*a).iter().map(|&x| x.cos()).collect(),
            Op::LeakyRelu(a, s) => {
                v(*a).iter().map(|&x| if x > T::zero() { x } else { x * *s }).collect()
            }
            Op::Sigmoid(a) => v(*a).iter().map(|&x| sigmoid(x)).collect(),
            Op::Clamp(a, lo, hi) => {
                v(*a).iter().map(|&x| if x < *lo { *lo } else if x > *hi { *hi } else { x }).collect()
            }
            Op::Affine { x, w, b } => {
                let (xs, ws) = (&self.nodes[x.0].shape, &self.nodes[w.0].shape);
                let (bsz, i_dim, o_dim) = (xs[0], xs[1], ws[0]);
                let (xv, wv, bv) = (v(*x), v(*w), v(*b));
                let mut out = vec![T::zero(); bsz * o_dim];
                for n in 0..bsz {
                    for o in 0..o_dim {
                        let mut acc = bv[o];
                        let (xr, wr) = (&xv[n * i_dim..(n + 1) * i_dim], &wv[o * i_dim..(o + 1) * i_dim]);
                        for (xi, wi) in xr.iter().zip(wr) {
                            acc = acc + *xi * *wi;
                        }
                        out[n * o_dim + o] = acc;
                    }
                }
                out
            }
            Op::Conv2d { x, w, b, stride, pad } => {
                self.conv2d_forward(*x, *w, *b, *stride, *pad, &self.nodes[i].shape)
            }
            Op::ConvT2d { x, w, b, stride, pad, .. } => {
                self.convt2d_forward(*x, *w, *b, *stride, *pad, &self.nodes[i].shape)
            }
            Op::Reshape(a) => v(*a).clone(),
            Op::Gather(a, idx) => {
                let av = v(*a);
                idx.iter().map(|&j| av[j]).collect()
            }
            Op::Scatter(a, idx, out_len) => {
                let av = v(*a);
                let mut out = vec![T::zero(); *out_len];
                for (i, &j) in idx.iter().enumerate() {
                    out[j] = av[i];
                }
                out
            }
            Op::Concat(a, b) => {
                let mut out = v(*a).clone();
                out.extend_from_slice(v(*b));
                out
            }
            Op::Sum(a) => vec![v(*a).iter().copied().fold(T::zero(), |acc, x| acc + x)],
            Op::Mean(a) => {
                let av = v(*a);
                let s = av.iter().copied().fold(T::zero(), |acc, x| acc + x);
                vec![s / T::usize(av.len())]
            }
            Op::Max(a) => {
                let av = v(*a);
                let mut m = av[0];
                for &x in &av[1..] {
                    if x > m {
                        m = x;
                    }
                }
                vec![m]
            }
            Op::Fourier { re, im, inverse, n } => {
                self.fourier_forward(v(*re), v(*im), *n, *inverse)
            }
        }
    }

    fn conv2d_forward(
        &self,
        x: VarId,
        w: VarId,
        b: VarId,
        stride: usize,
        pad: usize,
        out_shape: &[usize],
    ) -> Vec<T> {
        let xs = &self.nodes[x.0].shape;
        let ws = &self.nodes[w.0].shape;
        let (bsz, ci, h, wi) = (xs[0], xs[1], xs[2], xs[3]);
        let (co, kh, kw) = (ws[0], ws[2], ws[3]);
        let (ho, wo) = (out_shape[2], out_shape[3]);
        let (xv, wv, bv) = (&self.vals[x.0], &self.vals[w.0], &self.vals[b.0]);
        let mut out = vec![T::zero(); bsz * co * ho * wo];
        for n in 0..bsz {
            for c_out in 0..co {
                for oh in 0..ho {
                    for ow in 0..wo {
                        let mut acc = bv[c_out];
                        for c_in in 0..ci {
                            for ki in 0..kh {
                                let ih = oh * stride + ki;
                                if ih < pad || ih - pad >= h {
                                    continue;
                                }
                                let ih = ih - pad;
                                for kj in 0..kw {
                                    let iw = ow * stride + kj;
                                    if iw < pad || iw - pad >= wi {
                                        continue;
                                    }
                                    let iw = iw - pad;
                                    acc = acc
                                        + xv[((n * ci + c_in) * h + ih) * wi + iw]
                                            * wv[((c_out * ci + c_in) * kh + ki) * kw + kj];
                                }
                            }
                        }
                        out[((n * co + c_out) * ho + oh) * wo + ow] = acc;
                    }
                }
            }
        }
        out
    }

    fn convt2d_forward(
        &self,
        x: VarId,
        w: VarId,
        b: VarId,
        stride: usize,
        pad: usize,
        out_shape: &[usize],
    ) -> Vec<T> {
        let xs = &self.nodes[x.0].shape;
        let ws = &self.nodes[w.0].shape;
        let (bsz, ci, h, wi) = (xs[0], xs[1], xs[2], xs[3]);
        let (co, kh, kw) = (ws[1], ws[2], ws[3]);
        let (ho, wo) = (out_shape[2], out_shape[3]);
        let (xv, wv, bv) = (&self.vals[x.0], &self.vals[w.0], &self.vals[b.0]);
        let mut out = vec![T::zero(); bsz * co * ho * wo];
        for n in 0..bsz {
            for c_out in 0..co {
                for oh in 0..ho {
                    for ow in 0..wo {
                        out[((n * co + c_out) * ho + oh) * wo + ow] = bv[c_out];
                    }
                }
            }
        }
        for n in 0..bsz {
            for c_in in 0..ci {
                for ih in 0..h {
                    for iw in 0..wi {
                        let xval = xv[((n * ci + c_in) * h + ih) * wi + iw];
                        for c_out in 0..co {
                            for ki in 0..kh {
                                let oh = ih * stride + ki;
                                if oh < pad || oh - pad >= ho {
                                    continue;
                                }
                                let oh = oh - pad;
                                for kj in 0..kw {
                                    let ow = iw * stride + kj;
                                    if ow < pad || ow - pad >= wo {
                                        continue;
                                    }
                                    let ow = ow - pad;
                                    out[((n * co + c_out) * ho + oh) * wo + ow] = out
                                        [((n * co + c_out) * ho + oh) * wo + ow]
                                        + xval * wv[((c_in * co + c_out) * kh + ki) * kw + kj];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn fourier_forward(&self, re: &[T], im: &[T], n: usize, inverse: bool) -> Vec<T> {
        let tw = &self.twiddles[&n];
        let rows = re.len() / n;
        let mut out = vec![T::zero(); rows * 2 * n];
        let inv_n = T::one() / T::usize(n);
        for r in 0..rows {
            let (xr, xi) = (&re[r * n..(r + 1) * n], &im[r * n..(r + 1) * n]);
            let o = &mut out[r * 2 * n..(r + 1) * 2 * n];
            for k in 0..n {
                let mut acc_re = T::zero();
                let mut acc_im = T::zero();
                let (cs, sn) = (&tw.cos[k * n..(k + 1) * n], &tw.sin[k * n..(k + 1) * n]);
                if inverse {
                    // e^{+j theta} synthesis with 1/n
                    for m in 0..n {
                        acc_re = acc_re + cs[m] * xr[m] - sn[m] * xi[m];
                        acc_im = acc_im + cs[m] * xi[m] + sn[m] * xr[m];
                    }
                    o[k] = acc_re * inv_n;
                    o[n + k] = acc_im * inv_n;
                } else {
                    // e^{-j theta} analysis, unnormalized
                    for m in 0..n {
                        acc_re = acc_re + cs[m] * xr[m] + sn[m] * xi[m];
                        acc_im = acc_im + cs[m] * xi[m] - sn[m] * xr[m];
                    }
                    o[k] = acc_re;
                    o[n + k] = acc_im;
                }
            }
        }
        out
    }

    // ---- gradients -----------------------------------------------------

    /// Reverse-mode pass from a scalar loss. Populates gradients for every
    /// tracked node reachable from `loss`; read them with [`Graph::grad`].
    pub fn backward(&mut self, loss: VarId) -> Result<()> {
        if self.vals[loss.0].len() != 1 {
            return Err(Error::NonScalarLoss { numel: self.vals[loss.0].len() });
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if self.grads[i].is_none() || !self.nodes[i].track {
                continue;
            }
            let g = self.grads[i].clone().expect("gradient present");
            self.backprop(i, &g);
        }
        Ok(())
    }

    fn acc(&mut self, id: VarId, f: impl FnOnce(&mut [T])) {
        if !self.nodes[id.0].track {
            return;
        }
        let slot = &mut self.grads[id.0];
        if slot.is_none() {
            *slot = Some(vec![T::zero(); self.vals[id.0].len()]);
        }
        f(slot.as_mut().expect("just initialized"));
    }

    fn backprop(&mut self, i: usize, g: &[T]) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.acc(a, |ga| add_assign(ga, g));
                self.acc(b, |gb| add_assign(gb, g));
            }
            Op::Sub(a, b) => {
                self.acc(a, |ga| add_assign(ga, g));
                self.acc(b, |gb| sub_assign(gb, g));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.vals[a.0].clone(), self.vals[b.0].clone());
                self.acc(a, |ga| mul_add_assign(ga, g, &bv));
                self.acc(b, |gb| mul_add_assign(gb, g, &av));
            }
            Op::Div(a, b) => {
                let (av, bv) = (self.vals[a.0].clone(), self.vals[b.0].clone());
                self.acc(a, |ga| {
                    for ((ga, &gi), &b) in ga.iter_mut().zip(g).zip(&bv) {
                        *ga += gi / b;
                    }
                });
                self.acc(b, |gb| {
                    for (((gb, &gi), &a), &b) in gb.iter_mut().zip(g).zip(&av).zip(&bv) {
                        *gb -= gi * a / (b * b);
                    }
                });
            }
            Op::Neg(a) => self.acc(a, |ga| sub_assign(ga, g)),
            Op::Scale(a, c) => self.acc(a, |ga| {
                for (ga, &gi) in ga.iter_mut().zip(g) {
                    *ga += gi * c;
                }
            }),
            Op::Offset(a, _) => self.acc(a, |ga| add_assign(ga, g)),
            Op::MulScalar(a, s) => {
                let sv = self.vals[s.0][0];
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for (ga, &gi) in ga.iter_mut().zip(g) {
                        *ga += gi * sv;
                    }
                });
                self.acc(s, |gs| {
                    let mut acc = T::zero();
                    for (&gi, &a) in g.iter().zip(&av) {
                        acc = acc + gi * a;
                    }
                    gs[0] += acc;
                });
            }
            Op::PowConst(a, e) => {
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &x) in ga.iter_mut().zip(g).zip(&av) {
                        *ga += gi * e * x.powf(e - T::one());
                    }
                });
            }
            Op::Sin(a) => {
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &x) in ga.iter_mut().zip(g).zip(&av) {
                        *ga += gi * x.cos();
                    }
                });
            }
            Op::Cos(a) => {
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &x) in ga.iter_mut().zip(g).zip(&av) {
                        *ga -= gi * x.sin();
                    }
                });
            }
            Op::LeakyRelu(a, s) => {
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &x) in ga.iter_mut().zip(g).zip(&av) {
                        *ga += if x > T::zero() { gi } else { gi * s };
                    }
                });
            }
            Op::Sigmoid(a) => {
                let yv = self.vals[i].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &y) in ga.iter_mut().zip(g).zip(&yv) {
                        *ga += gi * y * (T::one() - y);
                    }
                });
            }
            Op::Clamp(a, lo, hi) => {
                let av = self.vals[a.0].clone();
                self.acc(a, |ga| {
                    for ((ga, &gi), &x) in ga.iter_mut().zip(g).zip(&av) {
                        if x > lo && x < hi {
                            *ga += gi;
                        }
                    }
                });
            }
            Op::Affine { x, w, b } => self.affine_backward(x, w, b, g),
            Op::Conv2d { x, w, b, stride, pad } => self.conv2d_backward(i, x, w, b, stride, pad, g),
            Op::ConvT2d { x, w, b, stride, pad, .. } => {
                self.convt2d_backward(i, x, w, b, stride, pad, g)
            }
            Op::Reshape(a) => self.acc(a, |ga| add_assign(ga, g)),
            Op::Gather(a, idx) => self.acc(a, |ga| {
                for (i, &j) in idx.iter().enumerate() {
                    ga[j] += g[i];
                }
            }),
            Op::Scatter(a, idx, _) => self.acc(a, |ga| {
                for (i, &j) in idx.iter().enumerate() {
                    ga[i] += g[j];
                }
            }),
            Op::Concat(a, b) => {
                let na = self.vals[a.0].len();
                self.acc(a, |ga| add_assign(ga, &g[..na]));
                self.acc(b, |gb| add_assign(gb, &g[na..]));
            }
            Op::Sum(a) => self.acc(a, |ga| {
                for ga in ga.iter_mut() {
                    *ga += g[0];
                }
            }),
            Op::Mean(a) => {
                let n = T::usize(self.vals[a.0].len());
                self.acc(a, |ga| {
                    for ga in ga.iter_mut() {
                        *ga += g[0] / n;
                    }
                });
            }
            Op::Max(a) => {
                let av = &self.vals[a.0];
                let mut arg = 0;
                let mut m = av[0];
                for (j, &x) in av.iter().enumerate().skip(1) {
                    if x > m {
                        m = x;
                        arg = j;
                    }
                }
                self.acc(a, |ga| ga[arg] += g[0]);
            }
            Op::Fourier { re, im, inverse, n } => self.fourier_backward(re, im, inverse, n, g),
        }
    }

    fn affine_backward(&mut self, x: VarId, w: VarId, b: VarId, g: &[T]) {
        let xs = self.nodes[x.0].shape.clone();
        let ws = self.nodes[w.0].shape.clone();
        let (bsz, i_dim, o_dim) = (xs[0], xs[1], ws[0]);
        let xv = self.vals[x.0].clone();
        let wv = self.vals[w.0].clone();
        self.acc(x, |gx| {
            for n in 0..bsz {
                for o in 0..o_dim {
                    let gi = g[n * o_dim + o];
                    for ii in 0..i_dim {
                        gx[n * i_dim + ii] += gi * wv[o * i_dim + ii];
                    }
                }
            }
        });
        self.acc(w, |gw| {
            for n in 0..bsz {
                for o in 0..o_dim {
                    let gi = g[n * o_dim + o];
                    for ii in 0..i_dim {
                        gw[o * i_dim + ii] += gi * xv[n * i_dim + ii];
                    }
                }
            }
        });
        self.acc(b, |gb| {
            for n in 0..bsz {
                for o in 0..o_dim {
                    gb[o] += g[n * o_dim + o];
                }
            }
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn conv2d_backward(
        &mut self,
        out: usize,
        x: VarId,
        w: VarId,
        b: VarId,
        stride: usize,
        pad: usize,
        g: &[T],
    ) {
        let xs = self.nodes[x.0].shape.clone();
        let ws = self.nodes[w.0].shape.clone();
        let os = self.nodes[out].shape.clone();
        let (bsz, ci, h, wi) = (xs[0], xs[1], xs[2], xs[3]);
        let (co, kh, kw) = (ws[0], ws[2], ws[3]);
        let (ho, wo) = (os[2], os[3]);
        let xv = self.vals[x.0].clone();
        let wv = self.vals[w.0].clone();
        let track_x = self.nodes[x.0].track;
        let track_w = self.nodes[w.0].track;

        let mut gx = vec![T::zero(); xv.len()];
        let mut gw = vec![T::zero(); wv.len()];
        for n in 0..bsz {
            for c_out in 0..co {
                for oh in 0..ho {
                    for ow in 0..wo {
                        let gi = g[((n * co + c_out) * ho + oh) * wo + ow];
                        for c_in in 0..ci {
                            for ki in 0..kh {
                                let ih = oh * stride + ki;
                                if ih < pad || ih - pad >= h {
                                    continue;
                                }
                                let ih = ih - pad;
                                for kj in 0..kw {
                                    let iw = ow * stride + kj;
                                    if iw < pad || iw - pad >= wi {
                                        continue;
                                    }
                                    let iw = iw - pad;
                                    let xi = ((n * ci + c_in) * h + ih) * wi + iw;
                                    let wk = ((c_out * ci + c_in) * kh + ki) * kw + kj;
                                    if track_x {
                                        gx[xi] += gi * wv[wk];
                                    }
                                    if track_w {
                                        gw[wk] += gi * xv[xi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.acc(x, |ga| add_assign(ga, &gx));
        self.acc(w, |ga| add_assign(ga, &gw));
        self.acc(b, |gb| {
            for n in 0..bsz {
                for c_out in 0..co {
                    for oh in 0..ho {
                        for ow in 0..wo {
                            gb[c_out] += g[((n * co + c_out) * ho + oh) * wo + ow];
                        }
                    }
                }
            }
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn convt2d_backward(
        &mut self,
        out: usize,
        x: VarId,
        w: VarId,
        b: VarId,
        stride: usize,
        pad: usize,
        g: &[T],
    ) {
        let xs = self.nodes[x.0].shape.clone();
        let ws = self.nodes[w.0].shape.clone();
        let os = self.nodes[out].shape.clone();
        let (bsz, ci, h, wi) = (xs[0], xs[1], xs[2], xs[3]);
        let (co, kh, kw) = (ws[1], ws[2], ws[3]);
        let (ho, wo) = (os[2], os[3]);
        let xv = self.vals[x.0].clone();
        let wv = self.vals[w.0].clone();
        let track_x = self.nodes[x.0].track;
        let track_w = self.nodes[w.0].track;

        let mut gx = vec![T::zero(); xv.len()];
        let mut gw = vec![T::zero(); wv.len()];
        for n in 0..bsz {
            for c_in in 0..ci {
                for ih in 0..h {
                    for iw in 0..wi {
                        let xi = ((n * ci + c_in) * h + ih) * wi + iw;
                        for c_out in 0..co {
                            for ki in 0..kh {
                                let oh = ih * stride + ki;
                                if oh < pad || oh - pad >= ho {
                                    continue;
                                }
                                let oh = oh - pad;
                                for kj in 0..kw {
                                    let ow = iw * stride + kj;
                                    if ow < pad || ow - pad >= wo {
                                        continue;
                                    }
                                    let ow = ow - pad;
                                    let gi = g[((n * co + c_out) * ho + oh) * wo + ow];
                                    let wk = ((c_in * co + c_out) * kh + ki) * kw + kj;
                                    if track_x {
                                        gx[xi] += gi * wv[wk];
                                    }
                                    if track_w {
                                        gw[wk] += gi * xv[xi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.acc(x, |ga| add_assign(ga, &gx));
        self.acc(w, |ga| add_assign(ga, &gw));
        self.acc(b, |gb| {
            for n in 0..bsz {
                for c_out in 0..co {
                    for oh in 0..ho {
                        for ow in 0..wo {
                            gb[c_out] += g[((n * co + c_out) * ho + oh) * wo + ow];
                        }
                    }
                }
            }
        });
    }

    fn fourier_backward(&mut self, re: VarId, im: VarId, inverse: bool, n: usize, g: &[T]) {
        // Adjoint of the complex-linear map: DFT (matrix F) gets conj(F),
        // IDFT (F^H / n) gets F / n, applied to the upstream (re, im) pair.
        let tw = self.twiddles[&n].clone();
        debug_assert_eq!(tw.n, n);
        let rows = self.vals[re.0].len() / n;
        let mut gr_in = vec![T::zero(); rows * n];
        let mut gi_in = vec![T::zero(); rows * n];
        let inv_n = T::one() / T::usize(n);
        for r in 0..rows {
            let gr = &g[r * 2 * n..r * 2 * n + n];
            let gi = &g[r * 2 * n + n..(r + 1) * 2 * n];
            for m in 0..n {
                let mut acc_re = T::zero();
                let mut acc_im = T::zero();
                let (cs, sn) = (&tw.cos[m * n..(m + 1) * n], &tw.sin[m * n..(m + 1) * n]);
                if inverse {
                    // (F/n) g: e^{-j theta} scaled by 1/n
                    for k in 0..n {
                        acc_re = acc_re + cs[k] * gr[k] + sn[k] * gi[k];
                        acc_im = acc_im + cs[k] * gi[k] - sn[k] * gr[k];
                    }
                    gr_in[r * n + m] = acc_re * inv_n;
                    gi_in[r * n + m] = acc_im * inv_n;
                } else {
                    // conj(F) g: e^{+j theta}
                    for k in 0..n {
                        acc_re = acc_re + cs[k] * gr[k] - sn[k] * gi[k];
                        acc_im = acc_im + cs[k] * gi[k] + sn[k] * gr[k];
                    }
                    gr_in[r * n + m] = acc_re;
                    gi_in[r * n + m] = acc_im;
                }
            }
        }
        self.acc(re, |ga| add_assign(ga, &gr_in));
        self.acc(im, |ga| add_assign(ga, &gi_in));
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn add_assign<T: Real>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn sub_assign<T: Real>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d -= s;
    }
}

fn mul_add_assign<T: Real>(dst: &mut [T], g: &[T], other: &[T]) {
    for ((d, &gi), &o) in dst.iter_mut().zip(g).zip(other) {
        *d += gi * o;
    }
}
