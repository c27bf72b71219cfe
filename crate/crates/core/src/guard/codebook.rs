use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::perturbation::{GuardConfig, Perturbation};
use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;
use crate::real::Real;

/// Ordered set of perturbations pre-shared between legitimate users, with
/// the bounds and seed they were generated under.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    pub k: usize,
    pub entries: Vec<Perturbation<T>>,
    pub alpha_lower: T,
    pub alpha_upper: T,
    pub phi_lower: T,
    pub phi_upper: T,
    pub seed: u64,
}

impl<T: Real> Codebook<T> {
    pub fn new(k: usize, entries: Vec<Perturbation<T>>, gc: &GuardConfig<T>) -> Self {
        Codebook {
            k,
            entries,
            alpha_lower: gc.alpha_lower,
            alpha_upper: gc.alpha_upper,
            phi_lower: gc.phi_lower,
            phi_upper: gc.phi_upper,
            seed: gc.seed,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Deterministic pseudo-random selection shared between transmitter and
/// receiver: both sides agree given the same seed and round index.
pub fn select_perturbation<T: Real>(
    codebook: &Codebook<T>,
    shared_seed: u64,
    round: u64,
) -> Result<&Perturbation<T>> {
    if codebook.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    let idx = select_index(shared_seed, round, codebook.len());
    Ok(&codebook.entries[idx])
}

pub fn select_index(shared_seed: u64, round: u64, len: usize) -> usize {
    let mut z = shared_seed ^ (round.wrapping_add(1)).wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    (z % len as u64) as usize
}

/// Textual line-oriented codebook container:
/// header `jsccguard-codebook v1`, `K=..`, `size=..`, four bound lines,
/// then per entry K lines `k A[k] phi[k]` in DFT-bin order, 9 significant
/// digits.
pub fn save_codebook<T: Real>(path: &Path, cb: &Codebook<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "jsccguard-codebook v1")?;
    writeln!(w, "K={}", cb.k)?;
    writeln!(w, "size={}", cb.len())?;
    writeln!(w, "alpha_lower={:.8e}", cb.alpha_lower)?;
    writeln!(w, "alpha_upper={:.8e}", cb.alpha_upper)?;
    writeln!(w, "phi_lower={:.8e}", cb.phi_lower)?;
    writeln!(w, "phi_upper={:.8e}", cb.phi_upper)?;
    writeln!(w, "seed={}", cb.seed)?;
    for entry in &cb.entries {
        for k in 0..cb.k {
            writeln!(w, "{} {:.8e} {:.8e}", k, entry.amp[k], entry.phase[k])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_codebook<T: Real>(path: &Path, cfg: &OfdmConfig<T>) -> Result<Codebook<T>> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("codebook file truncated".into()))?
            .map_err(Error::from)
    };

    let head = next()?;
    if head.trim() != "jsccguard-codebook v1" {
        return Err(Error::Format(format!("bad codebook header '{head}'")));
    }
    let k: usize = parse_kv(&next()?, "K")?;
    let size: usize = parse_kv(&next()?, "size")?;
    let alpha_lower: f64 = parse_kv(&next()?, "alpha_lower")?;
    let alpha_upper: f64 = parse_kv(&next()?, "alpha_upper")?;
    let phi_lower: f64 = parse_kv(&next()?, "phi_lower")?;
    let phi_upper: f64 = parse_kv(&next()?, "phi_upper")?;
    let seed: u64 = parse_kv(&next()?, "seed")?;
    if k != cfg.k {
        return Err(Error::Format(format!("codebook K={k} does not match config K={}", cfg.k)));
    }

    let mut entries = Vec::with_capacity(size);
    for e in 0..size {
        let mut amp = vec![T::zero(); k];
        let mut phase = vec![T::zero(); k];
        for bin in 0..k {
            let line = next()?;
            let mut parts = line.split_whitespace();
            let kk: usize = parts
                .next()
                .ok_or_else(|| Error::Format("missing bin index".into()))?
                .parse()
                .map_err(|_| Error::Format(format!("bad bin index in '{line}'")))?;
            if kk != bin {
                return Err(Error::Format(format!(
                    "entry {e}: expected bin {bin}, found {kk}"
                )));
            }
            let a: f64 = parse_float(parts.next(), &line)?;
            let p: f64 = parse_float(parts.next(), &line)?;
            amp[bin] = T::of(a);
            phase[bin] = T::of(p);
        }
        for bin in 0..k {
            if cfg.is_null_bin(bin) {
                if amp[bin].to_f64() != Some(1.0) || phase[bin] != T::zero() {
                    return Err(Error::PerturbationBounds {
                        bin,
                        what: "null subcarrier must carry the identity".into(),
                    });
                }
            } else if amp[bin].to_f64().unwrap() < alpha_lower
                || amp[bin].to_f64().unwrap() > alpha_upper
                || phase[bin].to_f64().unwrap() < phi_lower
                || phase[bin].to_f64().unwrap() > phi_upper
            {
                return Err(Error::PerturbationBounds {
                    bin,
                    what: format!("entry {e} outside stored bounds"),
                });
            }
        }
        entries.push(Perturbation { amp, phase });
    }

    Ok(Codebook {
        k,
        entries,
        alpha_lower: T::of(alpha_lower),
        alpha_upper: T::of(alpha_upper),
        phi_lower: T::of(phi_lower),
        phi_upper: T::of(phi_upper),
        seed,
    })
}

fn parse_kv<V: std::str::FromStr>(line: &str, key: &str) -> Result<V> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Format(format!("expected '{key}=..', found '{line}'")))?;
    if k.trim() != key {
        return Err(Error::Format(format!("expected key '{key}', found '{k}'")));
    }
    v.trim().parse().map_err(|_| Error::Format(format!("bad value for '{key}': '{v}'")))
}

fn parse_float(tok: Option<&str>, line: &str) -> Result<f64> {
    tok.ok_or_else(|| Error::Format(format!("short codebook line '{line}'")))?
        .parse()
        .map_err(|_| Error::Format(format!("bad float in '{line}'")))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::perturbation::random_perturbation;
    use super::*;

    fn sample_codebook() -> (Codebook<f32>, OfdmConfig<f32>) {
        let cfg = OfdmConfig::<f32>::standard64();
        let gc = GuardConfig::<f32>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let entries: Vec<_> = (0..3).map(|_| random_perturbation(&cfg, &gc, &mut rng)).collect();
        (Codebook::new(64, entries, &gc), cfg)
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let (cb, cfg) = sample_codebook();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        save_codebook(&path, &cb).unwrap();
        let back = load_codebook::<f32>(&path, &cfg).unwrap();
        assert_eq!(cb, back);
        // bit-exact through the 9-significant-digit text format
        for (a, b) in cb.entries.iter().zip(&back.entries) {
            for (x, y) in a.amp.iter().zip(&b.amp) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn corrupt_header_rejected() {
        let (cb, cfg) = sample_codebook();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        save_codebook(&path, &cb).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("v1", "v9")).unwrap();
        assert!(matches!(load_codebook::<f32>(&path, &cfg), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_bounds_entry_rejected() {
        let (cb, cfg) = sample_codebook();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        save_codebook(&path, &cb).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // amplitude 9.0 on the first active line (bin 1)
        let hacked: Vec<String> = text
            .lines()
            .map(|l| {
                if l.starts_with("1 ") {
                    "1 9.00000000e0 0.00000000e0".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect();
        std::fs::write(&path, hacked.join("\n") + "\n").unwrap();
        assert!(matches!(
            load_codebook::<f32>(&path, &cfg),
            Err(Error::PerturbationBounds { .. })
        ));
    }

    #[test]
    fn selection_agrees_and_is_roughly_uniform() {
        let (cb, _) = sample_codebook();
        for round in 0..50 {
            let a = select_perturbation(&cb, 123, round).unwrap();
            let b = select_perturbation(&cb, 123, round).unwrap();
            assert_eq!(a, b);
        }
        // size-1 codebook always picks index 0
        for round in 0..20 {
            assert_eq!(select_index(9, round, 1), 0);
        }
        // frequencies over 1e4 rounds within 2 percentage points of 1/8
        let mut counts = [0usize; 8];
        for round in 0..10_000u64 {
            counts[select_index(2024, round, 8)] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.125).abs() <= 0.02, "index frequency {f}");
        }
    }

    #[test]
    fn empty_codebook_selection_fails() {
        let gc = GuardConfig::<f32>::default();
        let cb = Codebook::<f32>::new(64, vec![], &gc);
        assert!(matches!(select_perturbation(&cb, 1, 1), Err(Error::EmptyCodebook)));
    }
}
