use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

const MAGIC: &[u8; 4] = b"JSCP";
const VERSION: u16 = 1;

/// Captured (source image, recovered features) pairs for black-box
/// surrogate training.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogatePairSet<T> {
    pub image_dims: [usize; 3],
    pub feature_dim: usize,
    pub pairs: Vec<(Vec<T>, Vec<Complex<T>>)>,
}

impl<T: Real> SurrogatePairSet<T> {
    pub fn new(image_dims: [usize; 3], feature_dim: usize) -> Self {
        SurrogatePairSet { image_dims, feature_dim, pairs: Vec::new() }
    }

    pub fn push(&mut self, image: Vec<T>, features: Vec<Complex<T>>) {
        assert_eq!(image.len(), self.image_dims.iter().product::<usize>());
        assert_eq!(features.len(), self.feature_dim);
        self.pairs.push((image, features));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Binary container: magic, version, count, image dims, M, then per pair
/// the raw image values and the feature (re..., im...) arrays as
/// little-endian f32.
pub fn save_pairs<T: Real>(path: &Path, set: &SurrogatePairSet<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(set.pairs.len() as u64).to_le_bytes())?;
    for d in set.image_dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(set.feature_dim as u32).to_le_bytes())?;
    for (img, feats) in &set.pairs {
        for &v in img {
            w.write_all(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes())?;
        }
        for f in feats {
            w.write_all(&f.re.to_f32().unwrap_or(f32::NAN).to_le_bytes())?;
        }
        for f in feats {
            w.write_all(&f.im.to_f32().unwrap_or(f32::NAN).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_pairs<T: Real>(path: &Path) -> Result<SurrogatePairSet<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad pair-set magic {magic:?}")));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    if u16::from_le_bytes(b2) != VERSION {
        return Err(Error::Format("unsupported pair-set version".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        *d = u32::from_le_bytes(b4) as usize;
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4) as usize;

    let n: usize = dims.iter().product();
    let mut set = SurrogatePairSet::new(dims, m);
    let mut buf = vec![0u8; (n + 2 * m) * 4];
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|_| {
            Error::Format(format!("pair-set truncated at pair {i} of {count}"))
        })?;
        let vals: Vec<T> = buf
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
            .collect();
        let image = vals[..n].to_vec();
        let feats: Vec<Complex<T>> =
            (0..m).map(|j| Complex::new(vals[n + j], vals[n + m + j])).collect();
        set.pairs.push((image, feats));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_round_trip() {
        let mut set = SurrogatePairSet::<f32>::new([1, 4, 4], 3);
        for i in 0..5 {
            let img: Vec<f32> = (0..16).map(|j| (i * 16 + j) as f32 / 100.0).collect();
            let feats: Vec<Complex<f32>> =
                (0..3).map(|j| Complex::new(j as f32, -(i as f32))).collect();
            set.push(img, feats);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.bin");
        save_pairs(&path, &set).unwrap();
        let back = load_pairs::<f32>(&path).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn truncated_pairs_rejected() {
        let mut set = SurrogatePairSet::<f32>::new([1, 2, 2], 2);
        set.push(vec![0.1, 0.2, 0.3, 0.4], vec![Complex::new(1.0, 2.0), Complex::new(3.0, 4.0)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.bin");
        save_pairs(&path, &set).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_pairs::<f32>(&path), Err(Error::Format(_))));
    }
}
