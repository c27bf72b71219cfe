use num_complex::Complex;

use crate::real::Real;

/// Unnormalized analysis DFT, direct form.
pub fn dft<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    transform(x, false)
}

/// Synthesis IDFT scaled by 1/N, so `idft(dft(x)) == x`.
pub fn idft<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    transform(x, true)
}

fn transform<T: Real>(x: &[Complex<T>], inverse: bool) -> Vec<Complex<T>> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let inv_n = T::one() / T::usize(n);
    for k in 0..n {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, &v) in x.iter().enumerate() {
            let theta = T::of(2.0 * std::f64::consts::PI * ((k * m) % n) as f64 / n as f64);
            let w = if inverse {
                Complex::new(theta.cos(), theta.sin())
            } else {
                Complex::new(theta.cos(), -theta.sin())
            };
            acc += v * w;
        }
        out.push(if inverse { acc * inv_n } else { acc });
    }
    out
}
