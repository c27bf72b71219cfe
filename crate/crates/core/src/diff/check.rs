use super::graph::{Graph, VarId};
use crate::error::Result;
use crate::real::Real;

/// Compare the reverse-mode gradient of `loss` with respect to `leaf`
/// against central finite differences.
///
/// Returns the maximum over leaf entries of
/// `|analytic - central| / (|analytic| + eps)`. The finite-difference side
/// only re-runs the forward pass, so it is independent of every gradient
/// rule it checks.
pub fn finite_difference_check<T: Real>(
    g: &mut Graph<T>,
    loss: VarId,
    leaf: VarId,
    eps: T,
) -> Result<T> {
    g.forward();
    g.backward(loss)?;
    let analytic = g.grad(leaf);
    let base = g.value(leaf).to_vec();

    let mut worst = T::zero();
    for i in 0..base.len() {
        let mut probe = base.clone();
        probe[i] = base[i] + eps;
        g.set_leaf(leaf, &probe);
        g.forward();
        let up = g.value(loss)[0];

        probe[i] = base[i] - eps;
        g.set_leaf(leaf, &probe);
        g.forward();
        let down = g.value(loss)[0];

        let central = (up - down) / (T::of(2.0) * eps);
        let err = (analytic[i] - central).abs() / (analytic[i].abs() + eps);
        if err > worst {
            worst = err;
        }
    }
    g.set_leaf(leaf, &base);
    g.forward();
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn vecs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
    }

    #[test]
    fn sigmoid_chain_within_1e6() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf_from(&[0.3, -1.2, 2.0, 0.01], &[4], true);
        let s = g.sigmoid(x);
        let s2 = g.sigmoid(s);
        let loss = g.sum(s2);
        let err = finite_difference_check(&mut g, loss, x, 1e-5).unwrap();
        assert!(err <= 1e-6, "sigmoid chain fd error {err}");
    }

    #[test]
    fn linear_map_near_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = Graph::<f64>::new();
        let xv = vecs(&mut rng, 6);
        let wv = vecs(&mut rng, 12);
        let x = g.leaf_from(&xv, &[2, 3], true);
        let w = g.leaf_from(&wv, &[4, 3], false);
        let b = g.leaf_from(&[0.1, -0.2, 0.3, 0.0], &[4], false);
        let y = g.affine(x, w, b);
        let loss = g.sum(y);
        let err = finite_difference_check(&mut g, loss, x, 1e-5).unwrap();
        assert!(err <= 1e-9, "linear fd error {err}");
    }

    #[test]
    fn divide_gradient_wrt_denominator() {
        // loss through X / V at X = 2, V = 1, checked against central differences
        let mut g = Graph::<f64>::new();
        let x = g.c_leaf(&[Complex::new(2.0, 0.0)], false);
        let v = g.c_leaf(&[Complex::new(1.0, 0.0)], true);
        let q = g.c_div(x, v, 1e-12);
        let m2 = g.c_abs2(q);
        let loss = g.sum(m2);
        let err_re = finite_difference_check(&mut g, loss, v.re, 1e-6).unwrap();
        let err_im = finite_difference_check(&mut g, loss, v.im, 1e-6).unwrap();
        assert!(err_re <= 1e-6 && err_im <= 1e-6, "cdiv fd errors {err_re}, {err_im}");
    }

    /// Every catalog op with a gradient rule, 100 random instances each,
    /// checked in 64-bit at 1e-6.
    #[test]
    fn catalog_ops_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        for trial in 0..100 {
            let n = rng.gen_range(2..8usize);
            let build: Vec<Box<dyn Fn(&mut Graph<f64>, VarId) -> VarId>> = vec![
                Box::new(|g, x| {
                    let c = g.constant(&vec![0.7; g.numel(x)], &[g.numel(x)]);
                    g.add(x, c)
                }),
                Box::new(|g, x| {
                    let c = g.constant(&vec![0.4; g.numel(x)], &[g.numel(x)]);
                    g.sub(c, x)
                }),
                Box::new(|g, x| g.mul(x, x)),
                Box::new(|g, x| {
                    let c = g.constant(&vec![1.3; g.numel(x)], &[g.numel(x)]);
                    g.div(c, x)
                }),
                Box::new(|g, x| g.neg(x)),
                Box::new(|g, x| g.scale(x, -2.5)),
                Box::new(|g, x| g.offset(x, 0.9)),
                Box::new(|g, x| g.sin(x)),
                Box::new(|g, x| g.cos(x)),
                Box::new(|g, x| g.leaky_relu(x, 0.2)),
                Box::new(|g, x| g.sigmoid(x)),
                Box::new(|g, x| {
                    let idx: Vec<usize> = (0..g.numel(x)).rev().collect();
                    g.gather(x, idx)
                }),
                Box::new(|g, x| {
                    let n = g.numel(x);
                    let idx: Vec<usize> = (0..n).map(|i| 2 * i).collect();
                    g.scatter(x, idx, 2 * n)
                }),
                Box::new(|g, x| {
                    let c = g.constant(&[0.3, -0.8], &[2]);
                    g.concat(x, c)
                }),
                Box::new(|g, x| {
                    let s = g.mean(x);
                    g.mul_scalar(x, s)
                }),
            ];
            let f = &build[trial % build.len()];
            let xv = vecs(&mut rng, n);
            // keep away from 0 so div and leaky boundaries stay smooth
            let xv: Vec<f64> = xv.iter().map(|v| v + 2.0 * v.signum().max(0.0) + 2.0).collect();
            let mut g = Graph::<f64>::new();
            let x = g.leaf_from(&xv, &[n], true);
            let y = f(&mut g, x);
            let sq = g.mul(y, y);
            let loss = g.sum(sq);
            let err = finite_difference_check(&mut g, loss, x, 1e-6).unwrap();
            assert!(err <= 1e-6, "op #{} fd error {err}", trial % build.len());
        }
    }

    #[test]
    fn reductions_and_pow() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..9usize);
            let xv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let mut g = Graph::<f64>::new();
            let x = g.leaf_from(&xv, &[n], true);
            let p = g.pow_const(x, -0.5);
            let m = g.mean(p);
            let mx = g.max(x);
            let s = g.sum(p);
            let a = g.mul(m, mx);
            let loss = g.add(a, s);
            let err = finite_difference_check(&mut g, loss, x, 1e-6).unwrap();
            assert!(err <= 1e-6, "reduction fd error {err}");
        }
    }

    #[test]
    fn conv_layers_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..6 {
            let mut g = Graph::<f64>::new();
            let xv = vecs(&mut rng, 2 * 2 * 5 * 5);
            let wv = vecs(&mut rng, 3 * 2 * 3 * 3);
            let bv = vecs(&mut rng, 3);
            let x = g.leaf_from(&xv, &[2, 2, 5, 5], true);
            let w = g.leaf_from(&wv, &[3, 2, 3, 3], true);
            let b = g.leaf_from(&bv, &[3], true);
            let y = g.conv2d(x, w, b, 2, 1);
            let act = g.leaky_relu(y, 0.2);
            let sq = g.mul(act, act);
            let loss = g.sum(sq);
            for leaf in [x, w, b] {
                let err = finite_difference_check(&mut g, loss, leaf, 1e-4).unwrap();
                assert!(err <= 1e-6, "conv2d fd error {err}");
            }
        }
    }

    #[test]
    fn conv_transpose_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..6 {
            let mut g = Graph::<f64>::new();
            let xv = vecs(&mut rng, 2 * 3 * 3 * 3);
            let wv = vecs(&mut rng, 3 * 2 * 3 * 3);
            let bv = vecs(&mut rng, 2);
            let x = g.leaf_from(&xv, &[2, 3, 3, 3], true);
            let w = g.leaf_from(&wv, &[3, 2, 3, 3], true);
            let b = g.leaf_from(&bv, &[2], true);
            let y = g.conv2d_transpose(x, w, b, 2, 1, 1);
            assert_eq!(g.shape(y), &[2, 2, 6, 6]);
            let act = g.leaky_relu(y, 0.2);
            let sq = g.mul(act, act);
            let loss = g.sum(sq);
            for leaf in [x, w, b] {
                let err = finite_difference_check(&mut g, loss, leaf, 1e-4).unwrap();
                assert!(err <= 1e-6, "conv2d_transpose fd error {err}");
            }
        }
    }

    #[test]
    fn fourier_fd_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for inverse in [false, true] {
            for _ in 0..50 {
                let n = 8;
                let mut g = Graph::<f64>::new();
                let re = g.leaf_from(&vecs(&mut rng, n), &[1, n], true);
                let im = g.leaf_from(&vecs(&mut rng, n), &[1, n], true);
                let f = g.fourier(re, im, n, inverse);
                let sq = g.mul(f, f);
                let loss = g.sum(sq);
                for leaf in [re, im] {
                    let err = finite_difference_check(&mut g, loss, leaf, 1e-6).unwrap();
                    assert!(err <= 1e-6, "fourier(inv={inverse}) fd error {err}");
                }
            }
        }
    }

    #[test]
    fn affine_all_leaves_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let mut g = Graph::<f64>::new();
            let x = g.leaf_from(&vecs(&mut rng, 6), &[2, 3], true);
            let w = g.leaf_from(&vecs(&mut rng, 12), &[4, 3], true);
            let b = g.leaf_from(&vecs(&mut rng, 4), &[4], true);
            let y = g.affine(x, w, b);
            let s = g.sigmoid(y);
            let loss = g.sum(s);
            for leaf in [x, w, b] {
                let err = finite_difference_check(&mut g, loss, leaf, 1e-5).unwrap();
                assert!(err <= 1e-6, "affine fd error {err}");
            }
        }
    }

    #[test]
    fn clamp_interior_fd() {
        // interior region only; the active-bound gradient is pinned to zero by design
        let mut g = Graph::<f64>::new();
        let x = g.leaf_from(&[0.2, 0.5, 0.8], &[3], true);
        let c = g.clamp(x, 0.0, 1.0);
        let sq = g.mul(c, c);
        let loss = g.sum(sq);
        let err = finite_difference_check(&mut g, loss, x, 1e-6).unwrap();
        assert!(err <= 1e-9, "clamp interior fd error {err}");
    }
}
