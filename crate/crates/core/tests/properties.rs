//! Property tests for the structural invariants.

use num_complex::Complex;
use proptest::prelude::*;

use jsccguard::diff::Graph;
use jsccguard::guard::select_index;
use jsccguard::jscc::power_normalize;
use jsccguard::ofdm::{extract_features, map_to_grid, OfdmConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// extract(map(x)) == x for any payload length.
    #[test]
    fn grid_round_trip(m in 1usize..400, seed in any::<u64>()) {
        let cfg = OfdmConfig::<f64>::standard64();
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let feats: Vec<Complex<f64>> = (0..m).map(|_| Complex::new(next(), next())).collect();
        let grid = map_to_grid(&feats, &cfg);
        prop_assert_eq!(grid.n_symbols, m.div_ceil(48));
        prop_assert_eq!(grid.pad, grid.n_symbols * 48 - m);
        let back = extract_features(&grid, &cfg, m).unwrap();
        prop_assert_eq!(feats, back);
    }

    /// Power normalization always lands on unit mean power and is
    /// idempotent.
    #[test]
    fn power_normalize_unit_and_idempotent(values in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..200)) {
        let feats: Vec<Complex<f64>> = values.iter().map(|&(r, i)| Complex::new(r, i)).collect();
        prop_assume!(feats.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-12);
        let n = power_normalize(&feats).unwrap();
        let mp = n.iter().map(|c| c.norm_sqr()).sum::<f64>() / n.len() as f64;
        prop_assert!((mp - 1.0).abs() < 1e-9);
        let n2 = power_normalize(&n).unwrap();
        for (a, b) in n.iter().zip(&n2) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    /// Gather followed by the matching scatter restores the vector, and
    /// their gradients are adjoint (the round trip is the identity in both
    /// directions of the graph).
    #[test]
    fn gather_scatter_round_trip(n in 2usize..40, seed in any::<u64>()) {
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let vals: Vec<f64> = (0..n).map(|_| next()).collect();
        // a deterministic permutation
        let mut idx: Vec<usize> = (0..n).collect();
        idx.rotate_left(n / 3);

        let mut g = Graph::<f64>::new();
        let x = g.leaf_from(&vals, &[n], true);
        let picked = g.gather(x, idx.clone());
        let back_idx = idx.clone();
        let restored = g.scatter(picked, back_idx, n);
        let v = g.value(restored).to_vec();
        for (i, &j) in idx.iter().enumerate() {
            prop_assert_eq!(v[j], vals[idx[i]]);
        }

        // gradient of sum(restored) with respect to x is all ones
        let loss = g.sum(restored);
        g.backward(loss).unwrap();
        prop_assert!(g.grad(x).iter().all(|&gv| gv == 1.0));
    }

    /// Codebook selection is deterministic and in range for any seed,
    /// round and size.
    #[test]
    fn selection_in_range_and_stable(seed in any::<u64>(), round in any::<u64>(), len in 1usize..64) {
        let a = select_index(seed, round, len);
        let b = select_index(seed, round, len);
        prop_assert_eq!(a, b);
        prop_assert!(a < len);
    }

    /// The cyclic prefix of every modulated symbol is a copy of the
    /// symbol's tail.
    #[test]
    fn cp_is_always_a_copy(m in 1usize..200, seed in any::<u64>()) {
        let cfg = OfdmConfig::<f64>::standard64();
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let feats: Vec<Complex<f64>> = (0..m).map(|_| Complex::new(next(), next())).collect();
        let grid = map_to_grid(&feats, &cfg);
        let tx = jsccguard::ofdm::modulate(&grid, &cfg);
        for s in 0..grid.n_symbols {
            let base = s * 80;
            for i in 0..16 {
                prop_assert_eq!(tx[base + i], tx[base + 16 + 48 + i]);
            }
        }
    }
}
