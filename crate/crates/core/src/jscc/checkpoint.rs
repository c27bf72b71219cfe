use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::arch::{Act, ArchKind, LayerSpec, ModelArch};
use super::model::JsccModel;
use crate::diff::Tensor;
use crate::error::{Error, Result};
use crate::real::Real;

const MAGIC: &[u8; 4] = b"JSCM";
const VERSION: u16 = 1;

/// Binary model container: magic, version, arch descriptor, then the flat
/// parameter arrays in declaration order as little-endian f32.
pub fn save_model<T: Real>(path: &Path, model: &JsccModel<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind_tag(model.arch.kind)])?;
    for d in model.arch.input_shape {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(model.arch.feature_dim as u32).to_le_bytes())?;
    w.write_all(&(model.arch.layers.len() as u32).to_le_bytes())?;
    for layer in &model.arch.layers {
        let (tag, i, o, k, s, p, op, act) = match *layer {
            LayerSpec::Conv { i, o, k, s, p, act } => (0u8, i, o, k, s, p, 0, act),
            LayerSpec::ConvT { i, o, k, s, p, op, act } => (1, i, o, k, s, p, op, act),
            LayerSpec::Dense { i, o, act } => (2, i, o, 0, 0, 0, 0, act),
        };
        w.write_all(&[tag])?;
        for v in [i, o, k, s, p, op] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        let (atag, slope) = match act {
            Act::None => (0u8, 0.0f64),
            Act::Leaky(s) => (1, s),
            Act::Sigmoid => (2, 0.0),
        };
        w.write_all(&[atag])?;
        w.write_all(&slope.to_le_bytes())?;
    }
    let count: usize = model.params.iter().map(|t| t.numel()).sum();
    w.write_all(&(count as u64).to_le_bytes())?;
    for t in &model.params {
        for &v in &t.values {
            w.write_all(&(v.to_f32().unwrap_or(f32::NAN)).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<JsccModel<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad model magic {magic:?}")));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let kind = match read_u8(&mut r)? {
        0 => ArchKind::Encoder,
        1 => ArchKind::Decoder,
        2 => ArchKind::Classifier,
        t => return Err(Error::Format(format!("unknown model kind tag {t}"))),
    };
    let input_shape = [read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, read_u32(&mut r)? as usize];
    let feature_dim = read_u32(&mut r)? as usize;
    let n_layers = read_u32(&mut r)? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let tag = read_u8(&mut r)?;
        let mut f = [0usize; 6];
        for v in f.iter_mut() {
            *v = read_u32(&mut r)? as usize;
        }
        let atag = read_u8(&mut r)?;
        let slope = {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            f64::from_le_bytes(b)
        };
        let act = match atag {
            0 => Act::None,
            1 => Act::Leaky(slope),
            2 => Act::Sigmoid,
            t => return Err(Error::Format(format!("unknown activation tag {t}"))),
        };
        layers.push(match tag {
            0 => LayerSpec::Conv { i: f[0], o: f[1], k: f[2], s: f[3], p: f[4], act },
            1 => LayerSpec::ConvT { i: f[0], o: f[1], k: f[2], s: f[3], p: f[4], op: f[5], act },
            2 => LayerSpec::Dense { i: f[0], o: f[1], act },
            t => return Err(Error::Format(format!("unknown layer tag {t}"))),
        });
    }
    let arch = ModelArch { kind, input_shape, layers, feature_dim };
    arch.validate();

    let count = read_u64(&mut r)? as usize;
    let mut raw = vec![0u8; count * 4];
    r.read_exact(&mut raw).map_err(|_| {
        Error::Format(format!("model file truncated: expected {} parameter bytes", count * 4))
    })?;
    let mut values = Vec::with_capacity(count);
    for chunk in raw.chunks_exact(4) {
        values.push(T::of(f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64));
    }

    let mut params = Vec::new();
    let mut off = 0usize;
    for layer in &arch.layers {
        let (w_shape, b_len) = match *layer {
            LayerSpec::Conv { i, o, k, .. } => (vec![o, i, k, k], o),
            LayerSpec::ConvT { i, o, k, .. } => (vec![i, o, k, k], o),
            LayerSpec::Dense { i, o, .. } => (vec![o, i], o),
        };
        let wn: usize = w_shape.iter().product();
        if off + wn + b_len > values.len() {
            return Err(Error::Format("model file has too few parameters".into()));
        }
        params.push(Tensor::new(w_shape, values[off..off + wn].to_vec()));
        off += wn;
        params.push(Tensor::new(vec![b_len], values[off..off + b_len].to_vec()));
        off += b_len;
    }
    if off != values.len() {
        return Err(Error::Format(format!(
            "model file has {} extra parameter values",
            values.len() - off
        )));
    }
    Ok(JsccModel { arch, params })
}

fn kind_tag(kind: ArchKind) -> u8 {
    match kind {
        ArchKind::Encoder => 0,
        ArchKind::Decoder => 1,
        ArchKind::Classifier => 2,
    }
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::super::arch::mnist_encoder;
    use super::*;

    #[test]
    fn round_trip_preserves_model() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.jscm");
        let model = JsccModel::<f32>::init(mnist_encoder(8), 17);
        save_model(&path, &model).unwrap();
        let back: JsccModel<f32> = load_model(&path).unwrap();
        assert_eq!(model.arch, back.arch);
        assert_eq!(model.params, back.params);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.jscm");
        std::fs::write(&path, b"NOPEnope").unwrap();
        assert!(matches!(load_model::<f32>(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.jscm");
        let model = JsccModel::<f32>::init(mnist_encoder(8), 17);
        save_model(&path, &model).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(load_model::<f32>(&path), Err(Error::Format(_))));
    }
}
