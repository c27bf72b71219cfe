use num_complex::Complex;

use super::graph::{Graph, VarId};
use crate::real::Real;

/// A complex-valued graph quantity carried as an (re, im) pair of
/// equally-shaped real nodes.
#[derive(Debug, Clone, Copy)]
pub struct CVar {
    pub re: VarId,
    pub im: VarId,
}

impl<T: Real> Graph<T> {
    pub fn c_leaf(&mut self, values: &[Complex<T>], requires_grad: bool) -> CVar {
        let re: Vec<T> = values.iter().map(|c| c.re).collect();
        let im: Vec<T> = values.iter().map(|c| c.im).collect();
        let shape = [values.len()];
        CVar {
            re: self.leaf_from(&re, &shape, requires_grad),
            im: self.leaf_from(&im, &shape, requires_grad),
        }
    }

    pub fn c_constant(&mut self, values: &[Complex<T>]) -> CVar {
        self.c_leaf(values, false)
    }

    /// Read a complex node back as values.
    pub fn c_value(&self, v: CVar) -> Vec<Complex<T>> {
        self.value(v.re).iter().zip(self.value(v.im)).map(|(&r, &i)| Complex::new(r, i)).collect()
    }

    pub fn c_numel(&self, v: CVar) -> usize {
        self.numel(v.re)
    }

    pub fn c_add(&mut self, a: CVar, b: CVar) -> CVar {
        CVar { re: self.add(a.re, b.re), im: self.add(a.im, b.im) }
    }

    pub fn c_sub(&mut self, a: CVar, b: CVar) -> CVar {
        CVar { re: self.sub(a.re, b.re), im: self.sub(a.im, b.im) }
    }

    pub fn c_scale(&mut self, a: CVar, c: T) -> CVar {
        CVar { re: self.scale(a.re, c), im: self.scale(a.im, c) }
    }

    /// Elementwise complex multiply.
    pub fn c_mul(&mut self, a: CVar, b: CVar) -> CVar {
        let rr = self.mul(a.re, b.re);
        let ii = self.mul(a.im, b.im);
        let ri = self.mul(a.re, b.im);
        let ir = self.mul(a.im, b.re);
        CVar { re: self.sub(rr, ii), im: self.add(ri, ir) }
    }

    /// Elementwise complex divide a / b with the squared magnitude of the
    /// denominator clamped below at `floor2` to keep deep fades finite.
    pub fn c_div(&mut self, a: CVar, b: CVar, floor2: T) -> CVar {
        let d = self.c_abs2(b);
        let d = self.clamp(d, floor2, T::infinity());
        let inv = self.pow_const(d, -T::one());
        // a * conj(b) * inv
        let rr = self.mul(a.re, b.re);
        let ii = self.mul(a.im, b.im);
        let ri = self.mul(a.im, b.re);
        let ir = self.mul(a.re, b.im);
        let num_re = self.add(rr, ii);
        let num_im = self.sub(ri, ir);
        CVar { re: self.mul(num_re, inv), im: self.mul(num_im, inv) }
    }

    /// |x|^2 elementwise, a real node.
    pub fn c_abs2(&mut self, a: CVar) -> VarId {
        let rr = self.mul(a.re, a.re);
        let ii = self.mul(a.im, a.im);
        self.add(rr, ii)
    }

    /// |x| elementwise, a real node.
    pub fn c_abs(&mut self, a: CVar) -> VarId {
        let m2 = self.c_abs2(a);
        self.pow_const(m2, T::of(0.5))
    }

    /// Multiply every entry by a single complex scalar built from two
    /// 1-element nodes.
    pub fn c_mul_scalar(&mut self, a: CVar, s_re: VarId, s_im: VarId) -> CVar {
        let rr = self.mul_scalar(a.re, s_re);
        let ii = self.mul_scalar(a.im, s_im);
        let ri = self.mul_scalar(a.re, s_im);
        let ir = self.mul_scalar(a.im, s_re);
        CVar { re: self.sub(rr, ii), im: self.add(ri, ir) }
    }

    /// Broadcast-multiply every entry by one real scalar node.
    pub fn c_mul_real_scalar(&mut self, a: CVar, s: VarId) -> CVar {
        CVar { re: self.mul_scalar(a.re, s), im: self.mul_scalar(a.im, s) }
    }

    pub fn c_gather(&mut self, a: CVar, indices: &[usize]) -> CVar {
        CVar { re: self.gather(a.re, indices.to_vec()), im: self.gather(a.im, indices.to_vec()) }
    }

    pub fn c_scatter(&mut self, a: CVar, indices: &[usize], out_len: usize) -> CVar {
        CVar {
            re: self.scatter(a.re, indices.to_vec(), out_len),
            im: self.scatter(a.im, indices.to_vec(), out_len),
        }
    }

    pub fn c_concat(&mut self, a: CVar, b: CVar) -> CVar {
        CVar { re: self.concat(a.re, b.re), im: self.concat(a.im, b.im) }
    }

    /// Unnormalized analysis DFT over rows of length `n`.
    pub fn c_dft(&mut self, a: CVar, n: usize) -> CVar {
        self.c_fourier(a, n, false)
    }

    /// Synthesis IDFT (scaled by 1/n) over rows of length `n`.
    pub fn c_idft(&mut self, a: CVar, n: usize) -> CVar {
        self.c_fourier(a, n, true)
    }

    fn c_fourier(&mut self, a: CVar, n: usize, inverse: bool) -> CVar {
        let rows = self.numel(a.re) / n;
        let stacked = self.fourier(a.re, a.im, n, inverse);
        let mut re_idx = Vec::with_capacity(rows * n);
        let mut im_idx = Vec::with_capacity(rows * n);
        for r in 0..rows {
            re_idx.extend(r * 2 * n..r * 2 * n + n);
            im_idx.extend(r * 2 * n + n..(r + 1) * 2 * n);
        }
        CVar { re: self.gather(stacked, re_idx), im: self.gather(stacked, im_idx) }
    }

    /// Scale so the mean squared magnitude is 1. The mean power is clamped
    /// away from zero only to keep the graph finite; all-zero inputs are a
    /// caller error checked at the library surface.
    pub fn c_power_normalize(&mut self, a: CVar) -> CVar {
        let p = self.c_abs2(a);
        let mp = self.mean(p);
        let mp = self.clamp(mp, T::of(1e-30), T::infinity());
        let inv_rms = self.pow_const(mp, T::of(-0.5));
        CVar { re: self.mul_scalar(a.re, inv_rms), im: self.mul_scalar(a.im, inv_rms) }
    }

    /// Linear convolution with a complex FIR whose taps live in a leaf laid
    /// out as [re(0..l) | im(0..l)]. Output length is n + l - 1.
    pub fn c_fir(&mut self, x: CVar, taps: VarId, n_taps: usize) -> CVar {
        let n = self.numel(x.re);
        let out_len = n + n_taps - 1;
        let mut acc: Option<CVar> = None;
        for l in 0..n_taps {
            let h_re = self.gather(taps, vec![l]);
            let h_im = self.gather(taps, vec![n_taps + l]);
            let idx: Vec<usize> = (0..n).map(|i| i + l).collect();
            let shifted = CVar {
                re: self.scatter(x.re, idx.clone(), out_len),
                im: self.scatter(x.im, idx, out_len),
            };
            let term = self.c_mul_scalar(shifted, h_re, h_im);
            acc = Some(match acc {
                None => term,
                Some(a) => self.c_add(a, term),
            });
        }
        acc.expect("at least one tap")
    }
}
