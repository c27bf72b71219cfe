use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;
use crate::real::Real;

/// Per-subcarrier LTS perturbation V[k] = A[k] e^{j phi[k]}. Null
/// subcarriers always carry the identity (1, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation<T> {
    pub amp: Vec<T>,
    pub phase: Vec<T>,
}

impl<T: Real> Perturbation<T> {
    pub fn identity(k: usize) -> Self {
        Perturbation { amp: vec![T::one(); k], phase: vec![T::zero(); k] }
    }

    /// V[k] pointwise.
    pub fn values(&self) -> Vec<Complex<T>> {
        self.amp
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex::from_polar(a, p))
            .collect()
    }

    /// [Re(V); Im(V)] of length 2K.
    pub fn stacked(&self) -> Vec<T> {
        let v = self.values();
        let mut out = Vec::with_capacity(2 * v.len());
        out.extend(v.iter().map(|c| c.re));
        out.extend(v.iter().map(|c| c.im));
        out
    }
}

/// Bounds and hyperparameters for perturbation optimization.
#[derive(Debug, Clone)]
pub struct GuardConfig<T> {
    pub alpha_lower: T,
    pub alpha_upper: T,
    pub phi_lower: T,
    pub phi_upper: T,
    /// Normalized-gradient step size eta.
    pub step_size: T,
    /// Numerical-stability constant added to the gradient norm.
    pub delta: T,
    pub lambda_div: T,
    pub codebook_size: usize,
    /// Confidence margin for the classification losses.
    pub kappa: T,
    /// Epochs per perturbation.
    pub epochs: usize,
    pub seed: u64,
}

impl<T: Real> Default for GuardConfig<T> {
    fn default() -> Self {
        GuardConfig {
            alpha_lower: T::of(0.5),
            alpha_upper: T::of(2.0),
            phi_lower: T::zero(),
            phi_upper: T::of(3.14),
            step_size: T::of(0.1),
            delta: T::of(1e-8),
            lambda_div: T::of(0.1),
            codebook_size: 8,
            kappa: T::zero(),
            epochs: 1,
            seed: 0,
        }
    }
}

impl<T: Real> GuardConfig<T> {
    pub fn validate(&self) {
        assert!(self.alpha_lower > T::zero(), "alpha lower bound must be positive");
        assert!(self.alpha_lower <= self.alpha_upper);
        assert!(self.phi_lower <= self.phi_upper);
        assert!(self.codebook_size >= 1, "codebook size must be >= 1");
    }
}

/// Validate amplitudes and phases against the bounds and return the
/// perturbation. Null subcarriers must carry the identity.
pub fn make_perturbation<T: Real>(
    amp: Vec<T>,
    phase: Vec<T>,
    cfg: &OfdmConfig<T>,
    gc: &GuardConfig<T>,
) -> Result<Perturbation<T>> {
    if amp.len() != cfg.k || phase.len() != cfg.k {
        return Err(Error::Shape {
            op: "make_perturbation",
            details: format!("lengths {}, {} for K = {}", amp.len(), phase.len(), cfg.k),
        });
    }
    for bin in 0..cfg.k {
        if cfg.is_null_bin(bin) {
            if amp[bin] != T::one() || phase[bin] != T::zero() {
                return Err(Error::PerturbationBounds {
                    bin,
                    what: "null subcarrier must carry the identity".into(),
                });
            }
        } else {
            if amp[bin] < gc.alpha_lower || amp[bin] > gc.alpha_upper {
                return Err(Error::PerturbationBounds {
                    bin,
                    what: format!("amplitude {} outside bounds", amp[bin]),
                });
            }
            if phase[bin] < gc.phi_lower || phase[bin] > gc.phi_upper {
                return Err(Error::PerturbationBounds {
                    bin,
                    what: format!("phase {} outside bounds", phase[bin]),
                });
            }
        }
    }
    Ok(Perturbation { amp, phase })
}

/// Random in-bounds initialization; identity on nulls.
pub fn random_perturbation<T: Real>(
    cfg: &OfdmConfig<T>,
    gc: &GuardConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Perturbation<T> {
    let mut p = Perturbation::identity(cfg.k);
    for bin in cfg.active_bins() {
        p.amp[bin] = T::of(
            rng.gen_range(gc.alpha_lower.to_f64().unwrap()..=gc.alpha_upper.to_f64().unwrap()),
        );
        p.phase[bin] =
            T::of(rng.gen_range(gc.phi_lower.to_f64().unwrap()..=gc.phi_upper.to_f64().unwrap()));
    }
    p
}

/// One projected update step: x <- clip(x - eta * g / (||g||_2 + delta)).
/// Null subcarriers are pinned back to `pin` afterwards.
pub fn apply_update<T: Real>(
    x: &mut [T],
    grad: &[T],
    eta: T,
    delta: T,
    lo: T,
    hi: T,
    null_bins: &[usize],
    pin: T,
) {
    let norm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
    let denom = norm + delta;
    for (xi, &gi) in x.iter_mut().zip(grad) {
        let next = *xi - eta * gi / denom;
        *xi = if next < lo {
            lo
        } else if next > hi {
            hi
        } else {
            next
        };
    }
    for &b in null_bins {
        x[b] = pin;
    }
}
