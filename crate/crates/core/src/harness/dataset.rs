use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Images scaled to [0, 1] with optional labels.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub dims: [usize; 3],
    pub images: Vec<Vec<T>>,
    pub labels: Option<Vec<u8>>,
}

impl<T: Real> Dataset<T> {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

// ---- IDX container ------------------------------------------------------

const IDX_IMAGES_3D: u32 = 0x0000_0803;
const IDX_IMAGES_4D: u32 = 0x0000_0804;
const IDX_LABELS: u32 = 0x0000_0801;

/// Read an IDX image file (3-d grayscale [N,H,W] or the 4-d [N,C,H,W]
/// extension for multichannel data), plus an optional label file. Pixels
/// are scaled by 1/255, so 255 maps to exactly 1.0.
pub fn load_dataset<T: Real>(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset<T>> {
    let mut r = BufReader::new(File::open(images_path)?);
    let magic = read_u32_be(&mut r)?;
    let dims = match magic {
        IDX_IMAGES_3D => {
            let n = read_u32_be(&mut r)? as usize;
            let h = read_u32_be(&mut r)? as usize;
            let w = read_u32_be(&mut r)? as usize;
            (n, [1, h, w])
        }
        IDX_IMAGES_4D => {
            let n = read_u32_be(&mut r)? as usize;
            let c = read_u32_be(&mut r)? as usize;
            let h = read_u32_be(&mut r)? as usize;
            let w = read_u32_be(&mut r)? as usize;
            (n, [c, h, w])
        }
        m => return Err(Error::Format(format!("bad IDX image magic 0x{m:08x}"))),
    };
    let (n, shape) = dims;
    let per = shape.iter().product::<usize>();
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != n * per {
        return Err(Error::Format(format!(
            "IDX image payload: expected {} bytes, found {}",
            n * per,
            raw.len()
        )));
    }
    let scale = T::one() / T::of(255.0);
    let images: Vec<Vec<T>> = raw
        .chunks_exact(per)
        .map(|c| c.iter().map(|&b| T::of(b as f64) * scale).collect())
        .collect();

    let labels = match labels_path {
        None => None,
        Some(p) => {
            let mut r = BufReader::new(File::open(p)?);
            let magic = read_u32_be(&mut r)?;
            if magic != IDX_LABELS {
                return Err(Error::Format(format!("bad IDX label magic 0x{magic:08x}")));
            }
            let ln = read_u32_be(&mut r)? as usize;
            if ln != n {
                return Err(Error::Format(format!("{ln} labels for {n} images")));
            }
            let mut lv = Vec::new();
            r.read_to_end(&mut lv)?;
            if lv.len() != ln {
                return Err(Error::Format(format!(
                    "IDX label payload: expected {ln} bytes, found {}",
                    lv.len()
                )));
            }
            Some(lv)
        }
    };
    Ok(Dataset { dims: shape, images, labels })
}

/// Write images as IDX (3-d when single-channel, 4-d otherwise),
/// quantizing to u8.
pub fn save_dataset<T: Real>(images_path: &Path, labels_path: Option<&Path>, ds: &Dataset<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(images_path)?);
    let [c, h, wd] = ds.dims;
    if c == 1 {
        w.write_all(&IDX_IMAGES_3D.to_be_bytes())?;
        for v in [ds.len(), h, wd] {
            w.write_all(&(v as u32).to_be_bytes())?;
        }
    } else {
        w.write_all(&IDX_IMAGES_4D.to_be_bytes())?;
        for v in [ds.len(), c, h, wd] {
            w.write_all(&(v as u32).to_be_bytes())?;
        }
    }
    for img in &ds.images {
        for &v in img {
            let q = (v.to_f64().unwrap().clamp(0.0, 1.0) * 255.0).round() as u8;
            w.write_all(&[q])?;
        }
    }
    w.flush()?;

    if let (Some(path), Some(labels)) = (labels_path, &ds.labels) {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&IDX_LABELS.to_be_bytes())?;
        w.write_all(&(labels.len() as u32).to_be_bytes())?;
        w.write_all(labels)?;
        w.flush()?;
    }
    Ok(())
}

fn read_u32_be(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("IDX header truncated".into()))?;
    Ok(u32::from_be_bytes(b))
}

// ---- synthetic desk-scale data ------------------------------------------

/// Which glyph family to draw from. `Shapes` is the training/evaluation
/// distribution (10 labeled classes); `Marks` is a disjoint family used as
/// the attacker's auxiliary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticFamily {
    Shapes,
    Marks,
}

/// Render `n` 28x28 grayscale glyphs with jittered geometry, brightness
/// and pixel noise. Deterministic in the seed.
pub fn synthesize<T: Real>(family: SyntheticFamily, n: usize, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.gen_range(0..10u8);
        let img = render_glyph(family, class, &mut rng);
        images.push(img.into_iter().map(T::of).collect());
        labels.push(class);
    }
    Dataset { dims: [1, 28, 28], images, labels: Some(labels) }
}

fn render_glyph(family: SyntheticFamily, class: u8, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let cx = 13.5 + rng.gen_range(-2.5..2.5);
    let cy = 13.5 + rng.gen_range(-2.5..2.5);
    let size = rng.gen_range(0.8..1.2);
    let bright = rng.gen_range(0.75..1.0);
    let stroke = rng.gen_range(1.6..2.4);

    let mut img = vec![0.0f64; 28 * 28];
    for y in 0..28 {
        for x in 0..28 {
            let (px, py) = (x as f64, y as f64);
            let d = match family {
                SyntheticFamily::Shapes => shape_distance(class, px, py, cx, cy, size),
                SyntheticFamily::Marks => mark_distance(class, px, py, cx, cy, size),
            };
            let v = (1.0 - (d / stroke)).clamp(0.0, 1.0) * bright;
            let noise = rng.gen_range(-0.02..0.02);
            img[y * 28 + x] = (v + noise).clamp(0.0, 1.0);
        }
    }
    img
}

/// Distance from (px, py) to the class glyph outline (0 on the glyph).
fn shape_distance(class: u8, px: f64, py: f64, cx: f64, cy: f64, s: f64) -> f64 {
    let r = 7.0 * s;
    match class {
        // filled disc
        0 => (dist(px, py, cx, cy) - r * 0.8).max(0.0),
        // vertical bar
        1 => seg(px, py, cx, cy - r, cx, cy + r),
        // horizontal bar
        2 => seg(px, py, cx - r, cy, cx + r, cy),
        // rising diagonal
        3 => seg(px, py, cx - r, cy + r, cx + r, cy - r),
        // falling diagonal
        4 => seg(px, py, cx - r, cy - r, cx + r, cy + r),
        // ring
        5 => (dist(px, py, cx, cy) - r * 0.8).abs(),
        // square outline
        6 => {
            let dx = (px - cx).abs() - r * 0.75;
            let dy = (py - cy).abs() - r * 0.75;
            let outside = (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt();
            let inside = dx.max(dy).min(0.0);
            (outside + inside).abs()
        }
        // plus
        7 => seg(px, py, cx - r, cy, cx + r, cy).min(seg(px, py, cx, cy - r, cx, cy + r)),
        // two discs on a diagonal
        8 => {
            let a = (dist(px, py, cx - r * 0.55, cy - r * 0.55) - r * 0.38).max(0.0);
            let b = (dist(px, py, cx + r * 0.55, cy + r * 0.55) - r * 0.38).max(0.0);
            a.min(b)
        }
        // X cross
        _ => seg(px, py, cx - r, cy - r, cx + r, cy + r)
            .min(seg(px, py, cx - r, cy + r, cx + r, cy - r)),
    }
}

/// A second, disjoint glyph family with similar stroke statistics.
fn mark_distance(class: u8, px: f64, py: f64, cx: f64, cy: f64, s: f64) -> f64 {
    let r = 7.0 * s;
    match class {
        // triangle outline
        0 => seg(px, py, cx, cy - r, cx - r, cy + r)
            .min(seg(px, py, cx, cy - r, cx + r, cy + r))
            .min(seg(px, py, cx - r, cy + r, cx + r, cy + r)),
        // upper arc
        1 => {
            let d = (dist(px, py, cx, cy) - r * 0.8).abs();
            if py > cy {
                d + (py - cy) * 0.8
            } else {
                d
            }
        }
        // L corner
        2 => seg(px, py, cx - r * 0.7, cy - r, cx - r * 0.7, cy + r)
            .min(seg(px, py, cx - r * 0.7, cy + r, cx + r, cy + r)),
        // T shape
        3 => seg(px, py, cx - r, cy - r * 0.7, cx + r, cy - r * 0.7)
            .min(seg(px, py, cx, cy - r * 0.7, cx, cy + r)),
        // small centered square, filled
        4 => {
            let dx = (px - cx).abs() - r * 0.45;
            let dy = (py - cy).abs() - r * 0.45;
            (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt()
        }
        // V shape
        5 => seg(px, py, cx - r, cy - r, cx, cy + r).min(seg(px, py, cx + r, cy - r, cx, cy + r)),
        // short double bars
        6 => seg(px, py, cx - r, cy - r * 0.5, cx + r, cy - r * 0.5)
            .min(seg(px, py, cx - r, cy + r * 0.5, cx + r, cy + r * 0.5)),
        // dot
        7 => (dist(px, py, cx, cy) - r * 0.35).max(0.0),
        // Z shape
        8 => seg(px, py, cx - r, cy - r, cx + r, cy - r)
            .min(seg(px, py, cx + r, cy - r, cx - r, cy + r))
            .min(seg(px, py, cx - r, cy + r, cx + r, cy + r)),
        // diamond outline
        _ => {
            let d = (px - cx).abs() + (py - cy).abs() - r * 0.9;
            d.abs() * 0.7
        }
    }
}

fn dist(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

/// Distance from a point to a segment.
fn seg(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { ((px - ax) * dx + (py - ay) * dy) / len2 } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    dist(px, py, ax + t * dx, ay + t * dy)
}
