use num_complex::Complex;

use super::config::OfdmConfig;
use super::grid::FrameGrid;
use crate::error::{Error, Result};
use crate::real::Real;

/// Least-squares channel estimate from the two received LTS symbols:
/// H[k] = (L1[k] + L2[k]) / (2 ref[k]) on the active subcarriers, zero on
/// nulls (undefined there).
pub fn estimate_channel<T: Real>(
    lts1_freq: &[Complex<T>],
    lts2_freq: &[Complex<T>],
    reference: &[Complex<T>],
    cfg: &OfdmConfig<T>,
) -> Result<Vec<Complex<T>>> {
    assert_eq!(lts1_freq.len(), cfg.k);
    assert_eq!(lts2_freq.len(), cfg.k);
    assert_eq!(reference.len(), cfg.k);
    let mut h = vec![Complex::new(T::zero(), T::zero()); cfg.k];
    let two = T::of(2.0);
    for bin in cfg.active_bins() {
        if reference[bin].norm_sqr() <= T::of(1e-30) {
            return Err(Error::ZeroReference { bin });
        }
        h[bin] = (lts1_freq[bin] + lts2_freq[bin]) / (reference[bin] * two);
    }
    Ok(h)
}

/// Zero-forcing equalizer: X[i,k] = Y[i,k] / H[k] on data and pilot bins.
/// Bins with |H| below `floor` are erased (zeroed) and reported.
pub fn equalize<T: Real>(
    grid_rx: &FrameGrid<T>,
    h_est: &[Complex<T>],
    cfg: &OfdmConfig<T>,
    floor: T,
) -> (FrameGrid<T>, Vec<usize>) {
    assert_eq!(h_est.len(), cfg.k);
    let mut out = grid_rx.clone();
    let mut erased = Vec::new();
    for bin in cfg.active_bins() {
        if h_est[bin].norm() < floor {
            erased.push(bin);
            for s in 0..out.n_symbols {
                out.bins[s * cfg.k + bin] = Complex::new(T::zero(), T::zero());
            }
        } else {
            for s in 0..out.n_symbols {
                out.bins[s * cfg.k + bin] = grid_rx.at(s, bin) / h_est[bin];
            }
        }
    }
    (out, erased)
}

#[cfg(test)]
mod tests {
    use super::super::grid::map_to_grid;
    use super::*;

    fn cfg() -> OfdmConfig<f64> {
        OfdmConfig::standard64()
    }

    #[test]
    fn flat_channel_estimated_exactly() {
        let c = cfg();
        let h = Complex::from_polar(0.8, std::f64::consts::PI / 4.0);
        let l1: Vec<Complex<f64>> = c.lts_freq.iter().map(|&x| x * h).collect();
        let est = estimate_channel(&l1, &l1, &c.lts_freq, &c).unwrap();
        for bin in c.active_bins() {
            assert!((est[bin] - h).norm() < 1e-12);
        }
        for bin in c.null_bins() {
            assert_eq!(est[bin].norm_sqr(), 0.0);
        }
    }

    #[test]
    fn zero_reference_bin_fails() {
        let c = cfg();
        let mut bad_ref = c.lts_freq.clone();
        let b = c.bin(10);
        bad_ref[b] = Complex::new(0.0, 0.0);
        let err = estimate_channel(&c.lts_freq, &c.lts_freq, &bad_ref, &c);
        assert!(matches!(err, Err(Error::ZeroReference { bin }) if bin == b));
    }

    #[test]
    fn perturbed_reference_cancels_for_legitimate_user() {
        // perturbed LTS on air, perturbed reference in the denominator:
        // the estimate matches the unperturbed system exactly
        let c = cfg();
        let h = Complex::from_polar(1.3, -0.7);
        let mut v = vec![Complex::new(1.0, 0.0); 64];
        for bin in c.active_bins() {
            v[bin] = Complex::from_polar(0.5 + 0.02 * bin as f64 % 1.5, 0.03 * bin as f64);
        }
        let perturbed: Vec<Complex<f64>> =
            c.lts_freq.iter().zip(&v).map(|(&l, &vk)| l * vk).collect();
        let rx: Vec<Complex<f64>> = perturbed.iter().map(|&x| x * h).collect();
        let est = estimate_channel(&rx, &rx, &perturbed, &c).unwrap();

        let rx_std: Vec<Complex<f64>> = c.lts_freq.iter().map(|&x| x * h).collect();
        let est_std = estimate_channel(&rx_std, &rx_std, &c.lts_freq, &c).unwrap();
        for bin in c.active_bins() {
            assert!((est[bin] - est_std[bin]).norm() < 1e-9);
        }
    }

    #[test]
    fn equalize_inverts_known_channel() {
        let c = cfg();
        let feats: Vec<Complex<f64>> =
            (0..96).map(|i| Complex::new((i as f64).sin(), (i as f64).cos())).collect();
        let tx = map_to_grid(&feats, &c);
        let h: Vec<Complex<f64>> = (0..64)
            .map(|k| Complex::from_polar(1.0 + 0.1 * (k as f64 * 0.2).sin(), 0.3 * (k as f64 * 0.11).cos()))
            .collect();
        let mut rx = tx.clone();
        for s in 0..rx.n_symbols {
            for k in 0..64 {
                rx.bins[s * 64 + k] = tx.at(s, k) * h[k];
            }
        }
        let (eq, erased) = equalize(&rx, &h, &c, 1e-6);
        assert!(erased.is_empty());
        for s in 0..eq.n_symbols {
            for k in c.active_bins() {
                assert!((eq.at(s, k) - tx.at(s, k)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn equalize_divides_by_half_amplitude_perturbation() {
        let c = cfg();
        let feats: Vec<Complex<f64>> = (0..48).map(|i| Complex::new(1.0 + i as f64, 0.5)).collect();
        let tx = map_to_grid(&feats, &c);
        let k0 = c.bin(7); // pilot bin is active too; use a data bin instead
        let k0 = if c.data_bins().contains(&k0) { k0 } else { c.data_bins()[0] };
        let mut h_eve = vec![Complex::new(1.0, 0.0); 64];
        h_eve[k0] = Complex::new(0.5, 0.0);
        let (eq, _) = equalize(&tx, &h_eve, &c, 1e-6);
        for s in 0..eq.n_symbols {
            assert!((eq.at(s, k0).norm() - 2.0 * tx.at(s, k0).norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn deep_fade_marked_as_erasure() {
        let c = cfg();
        let feats: Vec<Complex<f64>> = (0..48).map(|_| Complex::new(1.0, 0.0)).collect();
        let tx = map_to_grid(&feats, &c);
        let mut h = vec![Complex::new(1.0, 0.0); 64];
        let dead = c.data_bins()[5];
        h[dead] = Complex::new(1e-9, 0.0);
        let (eq, erased) = equalize(&tx, &h, &c, 1e-6);
        assert_eq!(erased, vec![dead]);
        assert_eq!(eq.at(0, dead).norm_sqr(), 0.0);
    }
}
