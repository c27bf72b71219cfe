use crate::ofdm::{FrameGrid, OfdmConfig};
use crate::real::Real;

/// Peak signal-to-noise ratio with MAX = 1 (images live in [0, 1]):
/// 10 log10(1 / MSE). Identical inputs return the infinity sentinel.
pub fn psnr<T: Real>(s: &[T], s_hat: &[T]) -> T {
    assert_eq!(s.len(), s_hat.len(), "psnr: length mismatch");
    let mse: T =
        s.iter().zip(s_hat).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / T::usize(s.len());
    if mse <= T::zero() {
        return T::infinity();
    }
    T::of(10.0) * (T::one() / mse).log10()
}

/// Fraction of predictions that match the labels.
pub fn accuracy(predictions: &[usize], labels: &[u8]) -> f64 {
    assert_eq!(predictions.len(), labels.len());
    if predictions.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(labels).filter(|&(&p, &l)| p == l as usize).count();
    hits as f64 / predictions.len() as f64
}

pub fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean squared error per data subcarrier (fill order, ascending logical
/// index) between a recovered grid and the reference grid.
pub fn per_subcarrier_mse<T: Real>(
    recovered: &FrameGrid<T>,
    reference: &FrameGrid<T>,
    cfg: &OfdmConfig<T>,
) -> Vec<T> {
    assert_eq!(recovered.n_symbols, reference.n_symbols, "grid sizes differ");
    let data_bins = cfg.data_bins();
    let mut out = Vec::with_capacity(data_bins.len());
    for &bin in &data_bins {
        let mut acc = T::zero();
        for s in 0..recovered.n_symbols {
            acc += (recovered.at(s, bin) - reference.at(s, bin)).norm_sqr();
        }
        out.push(acc / T::usize(recovered.n_symbols));
    }
    out
}

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub attack: String,
    pub defense: String,
    pub snr_db: f64,
    pub psnr_bob: f64,
    pub psnr_eve: f64,
    pub acc_bob: Option<f64>,
    pub acc_eve: Option<f64>,
    /// Mean per-data-subcarrier MSE of Eve's equalized grid.
    pub subcarrier_mse: Vec<f64>,
    pub seed: u64,
    pub wall_ms: u64,
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn psnr_closed_forms() {
        // MSE 0.01 -> 20 dB
        let s = vec![0.0f64; 100];
        let s_hat = vec![0.1f64; 100];
        assert!((psnr(&s, &s_hat) - 20.0).abs() < 1e-9);
        // MSE 1 -> 0 dB
        let s_hat = vec![1.0f64; 100];
        assert!(psnr(&s, &s_hat).abs() < 1e-9);
        // identical -> infinite sentinel
        assert!(psnr(&s, &s).is_infinite());
    }

    #[test]
    fn psnr_matches_direct_formula_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mse = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 64.0;
        let want = 10.0 * (1.0 / mse).log10();
        assert!((psnr(&a, &b) - want).abs() < 1e-9);
        assert!((psnr(&a, &b) - psnr(&b, &a)).abs() < 1e-12);

        // invariant under a simultaneous permutation of both inputs
        let mut ap = a.clone();
        let mut bp = b.clone();
        ap.reverse();
        bp.reverse();
        assert!((psnr(&ap, &bp) - psnr(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn accuracy_fractions() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(accuracy(&[0, 0, 0], &[1, 2, 3]), 0.0);
        let preds = [1usize, 2, 3, 4, 5, 6, 7, 0, 0, 0];
        let labels = [1u8, 2, 3, 4, 5, 6, 7, 8, 9, 1];
        assert!((accuracy(&preds, &labels) - 0.7).abs() < 1e-12);
    }
}
