use num_complex::Complex;

use crate::real::Real;

/// OFDM numerology: subcarrier partition, cyclic prefix, and the preamble
/// sequences in the frequency domain.
///
/// Logical subcarrier indices run -K/2 .. K/2-1 with DC at 0 and map to DFT
/// bins as `(k + K) mod K`. Data subcarriers fill in ascending logical
/// order.
#[derive(Debug, Clone)]
pub struct OfdmConfig<T> {
    pub k: usize,
    pub cp_len: usize,
    pub pilot_logical: Vec<i32>,
    pub pilot_values: Vec<Complex<T>>,
    pub null_logical: Vec<i32>,
    /// Derived: data subcarriers in ascending logical order.
    pub data_logical: Vec<i32>,
    /// Frequency-domain short training sequence, length K (DFT-bin order).
    pub sts_freq: Vec<Complex<T>>,
    /// Frequency-domain long training sequence, length K (DFT-bin order).
    pub lts_freq: Vec<Complex<T>>,
}

impl<T: Real> OfdmConfig<T> {
    /// The 64-subcarrier WLAN-style layout: 48 data, pilots at
    /// {-21,-7,7,21} with values {1,1,1,-1}, nulls at DC and the band
    /// edges, CP of 16.
    pub fn standard64() -> Self {
        let k = 64usize;
        let pilot_logical = vec![-21, -7, 7, 21];
        let pilot_values = vec![
            Complex::new(T::one(), T::zero()),
            Complex::new(T::one(), T::zero()),
            Complex::new(T::one(), T::zero()),
            Complex::new(-T::one(), T::zero()),
        ];
        let mut null_logical = vec![0];
        null_logical.extend(27..=31);
        null_logical.extend(-32..=-27);
        let cfg = Self::with_partition(k, 16, pilot_logical, pilot_values, null_logical);

        let mut cfg = cfg;
        cfg.sts_freq = standard_sts_freq(k);
        cfg.lts_freq = standard_lts_freq(k);
        cfg
    }

    /// Build a custom partition; preamble sequences are filled with a
    /// deterministic BPSK pattern on the active subcarriers (useful for toy
    /// configurations in tests).
    pub fn with_partition(
        k: usize,
        cp_len: usize,
        pilot_logical: Vec<i32>,
        pilot_values: Vec<Complex<T>>,
        null_logical: Vec<i32>,
    ) -> Self {
        assert_eq!(pilot_logical.len(), pilot_values.len());
        let half = k as i32 / 2;
        let mut data_logical = Vec::new();
        for l in -half..half {
            if !pilot_logical.contains(&l) && !null_logical.contains(&l) {
                data_logical.push(l);
            }
        }
        assert_eq!(
            data_logical.len() + pilot_logical.len() + null_logical.len(),
            k,
            "subcarrier partition must cover all {k} bins"
        );
        let mut cfg = OfdmConfig {
            k,
            cp_len,
            pilot_logical,
            pilot_values,
            null_logical,
            data_logical,
            sts_freq: Vec::new(),
            lts_freq: Vec::new(),
        };
        cfg.sts_freq = bpsk_pattern(&cfg, 0x5711);
        cfg.lts_freq = bpsk_pattern(&cfg, 0x17A3);
        cfg
    }

    pub fn n_data(&self) -> usize {
        self.data_logical.len()
    }

    /// DFT bin for a logical subcarrier index.
    pub fn bin(&self, logical: i32) -> usize {
        ((logical + self.k as i32) % self.k as i32) as usize
    }

    /// Data-subcarrier bins in fill order (ascending logical index).
    pub fn data_bins(&self) -> Vec<usize> {
        self.data_logical.iter().map(|&l| self.bin(l)).collect()
    }

    /// Bins carrying pilots or data (the set the channel is estimated on).
    pub fn active_bins(&self) -> Vec<usize> {
        let mut bins: Vec<usize> = self
            .data_logical
            .iter()
            .chain(self.pilot_logical.iter())
            .map(|&l| self.bin(l))
            .collect();
        bins.sort_unstable();
        bins
    }

    pub fn null_bins(&self) -> Vec<usize> {
        self.null_logical.iter().map(|&l| self.bin(l)).collect()
    }

    pub fn is_null_bin(&self, bin: usize) -> bool {
        self.null_logical.iter().any(|&l| self.bin(l) == bin)
    }

    /// Symbols needed for a payload of `m` complex features.
    pub fn symbols_for(&self, m: usize) -> usize {
        m.div_ceil(self.n_data())
    }

    pub fn symbol_len(&self) -> usize {
        self.k + self.cp_len
    }
}

/// Frequency-domain STS for the 64-subcarrier layout: nonzero on every
/// fourth subcarrier so the time sequence is 16-periodic, scaled so its
/// total energy matches the LTS.
fn standard_sts_freq<T: Real>(k: usize) -> Vec<Complex<T>> {
    let mut s = vec![Complex::new(T::zero(), T::zero()); k];
    let a = T::of((13.0f64 / 6.0).sqrt());
    let plus = Complex::new(a, a);
    let minus = Complex::new(-a, -a);
    let entries: [(i32, bool); 12] = [
        (-24, true),
        (-20, false),
        (-16, true),
        (-12, false),
        (-8, false),
        (-4, true),
        (4, false),
        (8, false),
        (12, true),
        (16, true),
        (20, true),
        (24, true),
    ];
    for (l, pos) in entries {
        let bin = ((l + k as i32) % k as i32) as usize;
        s[bin] = if pos { plus } else { minus };
    }
    s
}

/// Frequency-domain LTS for the 64-subcarrier layout (BPSK on the 52
/// active subcarriers).
fn standard_lts_freq<T: Real>(k: usize) -> Vec<Complex<T>> {
    // logical -26..-1 then +1..+26
    const NEG: [i8; 26] = [
        1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
    ];
    const POS: [i8; 26] = [
        1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
    ];
    let mut l = vec![Complex::new(T::zero(), T::zero()); k];
    for (i, &v) in NEG.iter().enumerate() {
        l[bin_of(-26 + i as i32, k)] = Complex::new(T::of(v as f64), T::zero());
    }
    for (i, &v) in POS.iter().enumerate() {
        l[bin_of(1 + i as i32, k)] = Complex::new(T::of(v as f64), T::zero());
    }
    l
}

fn bin_of(logical: i32, k: usize) -> usize {
    ((logical + k as i32) % k as i32) as usize
}

/// Deterministic +/-1 pattern on the active subcarriers, for toy configs.
fn bpsk_pattern<T: Real>(cfg: &OfdmConfig<T>, seed: u64) -> Vec<Complex<T>> {
    let mut state = seed | 1;
    let mut out = vec![Complex::new(T::zero(), T::zero()); cfg.k];
    let mut actives: Vec<i32> =
        cfg.data_logical.iter().chain(cfg.pilot_logical.iter()).copied().collect();
    actives.sort_unstable();
    for l in actives {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let v = if (state >> 62) & 1 == 0 { T::one() } else { -T::one() };
        out[cfg.bin(l)] = Complex::new(v, T::zero());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_partition_counts() {
        let cfg = OfdmConfig::<f64>::standard64();
        assert_eq!(cfg.k, 64);
        assert_eq!(cfg.n_data(), 48);
        assert_eq!(cfg.pilot_logical.len(), 4);
        assert_eq!(cfg.null_logical.len(), 12);
        assert_eq!(cfg.cp_len, 16);
    }

    #[test]
    fn bin_mapping_wraps_negative_indices() {
        let cfg = OfdmConfig::<f64>::standard64();
        assert_eq!(cfg.bin(0), 0);
        assert_eq!(cfg.bin(26), 26);
        assert_eq!(cfg.bin(-1), 63);
        assert_eq!(cfg.bin(-32), 32);
    }

    #[test]
    fn preamble_sequences_have_matched_energy() {
        let cfg = OfdmConfig::<f64>::standard64();
        let es: f64 = cfg.sts_freq.iter().map(|c| c.norm_sqr()).sum();
        let el: f64 = cfg.lts_freq.iter().map(|c| c.norm_sqr()).sum();
        assert!((es - 52.0).abs() < 1e-9, "sts energy {es}");
        assert!((el - 52.0).abs() < 1e-9, "lts energy {el}");
    }

    #[test]
    fn lts_zero_on_null_bins() {
        let cfg = OfdmConfig::<f64>::standard64();
        for b in cfg.null_bins() {
            assert_eq!(cfg.lts_freq[b].norm_sqr(), 0.0);
        }
    }
}
