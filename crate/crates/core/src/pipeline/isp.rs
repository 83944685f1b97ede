//! Camera-side processing after demosaicing: denoise and JPEG compression.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::reflect_index;
use crate::image::Image;
use crate::io::{decode_jpeg, encode_jpeg};
use crate::scalar::Real;

/// Spatial sigma of the bilateral denoiser, in pixels.
pub const DENOISE_SPATIAL_SIGMA: f64 = 3.0;
/// Range sigma per unit of denoise strength.
pub const DENOISE_RANGE_PER_STRENGTH: f64 = 0.1;
const DENOISE_RADIUS: isize = 6;

/// Edge-preserving bilateral filter. Range distance is the Euclidean color
/// difference across all channels; `strength == 0` is the identity.
pub fn denoise<T: Real>(img: &Image<T>, strength: f64) -> Result<Image<T>> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "denoise strength must be >= 0, got {strength}"
        )));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let range_sigma = DENOISE_RANGE_PER_STRENGTH * strength;
    let range = RangeTable::new(range_sigma);
    let r = DENOISE_RADIUS as usize;
    let side = 2 * r + 1;
    let spatial: Vec<T> = (0..side * side)
        .map(|i| {
            let dx = (i % side) as f64 - r as f64;
            let dy = (i / side) as f64 - r as f64;
            T::of((-(dx * dx + dy * dy) / (2.0 * DENOISE_SPATIAL_SIGMA.powi(2))).exp())
        })
        .collect();

    let (w, h, ch) = (img.width(), img.height(), img.channels());
    // reflect-padded, interleaved copy so the inner loop is branch-free
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut padded = vec![T::zero(); pw * ph * ch];
    for py in 0..ph {
        let sy = reflect_index(py as isize - r as isize, h);
        for px in 0..pw {
            let sx = reflect_index(px as isize - r as isize, w);
            for c in 0..ch {
                padded[(py * pw + px) * ch + c] = img.get(c, sx, sy);
            }
        }
    }

    let n = img.plane_len();
    let mut interleaved = vec![T::zero(); w * h * ch];
    interleaved.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        let mut acc = vec![T::zero(); ch];
        for x in 0..w {
            let center = &padded[((y + r) * pw + x + r) * ch..][..ch];
            acc.iter_mut().for_each(|a| *a = T::zero());
            let mut wsum = T::zero();
            for ky in 0..side {
                let line = &padded[((y + ky) * pw + x) * ch..][..side * ch];
                for (kx, px) in line.chunks_exact(ch).enumerate() {
                    let mut d2 = T::zero();
                    for c in 0..ch {
                        let d = px[c] - center[c];
                        d2 = d2 + d * d;
                    }
                    let Some(rw) = range.weight(d2) else { continue };
                    let wt = spatial[ky * side + kx] * rw;
                    wsum = wsum + wt;
                    for c in 0..ch {
                        acc[c] = acc[c] + wt * px[c];
                    }
                }
            }
            for c in 0..ch {
                row[x * ch + c] = acc[c] / wsum;
            }
        }
    });
    let mut planar = vec![T::zero(); n * ch];
    for (i, px) in interleaved.chunks_exact(ch).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            planar[c * n + i] = v;
        }
    }
    Ok(Image::from_clamped(w, h, ch, planar))
}

/// `exp(-d² / 2σ²)` tabulated over squared color distance, linearly
/// interpolated, and cut to zero once it falls below 1e-12.
struct RangeTable<T> {
    inv_step: f64,
    values: Vec<T>,
}

const RANGE_TABLE_SIZE: usize = 16384;

impl<T: Real> RangeTable<T> {
    fn new(sigma: f64) -> Self {
        let d2_max = 2.0 * sigma * sigma * 1e12f64.ln();
        let step = d2_max / (RANGE_TABLE_SIZE - 1) as f64;
        let values = (0..RANGE_TABLE_SIZE + 1)
            .map(|i| T::of((-(i as f64 * step) / (2.0 * sigma * sigma)).exp()))
            .collect();
        Self {
            inv_step: 1.0 / step,
            values,
        }
    }

    #[inline]
    fn weight(&self, d2: T) -> Option<T> {
        let pos = d2.to_f64_lossy() * self.inv_step;
        if pos.is_nan() || pos >= (RANGE_TABLE_SIZE - 1) as f64 {
            return None;
        }
        let i = pos as usize;
        let frac = T::of(pos - i as f64);
        let (a, b) = (self.values[i], self.values[i + 1]);
        Some(a + (b - a) * frac)
    }
}

/// Quantize to 8 bits, encode as baseline JPEG at `quality`, decode back.
pub fn jpeg_roundtrip<T: Real>(img: &Image<T>, quality: u8) -> Result<Image<T>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!(
            "jpeg quality must be in 1..=100, got {quality}"
        )));
    }
    let bytes = encode_jpeg(&img.to_u8(), quality)?;
    Ok(decode_jpeg(&bytes)?.to_float())
}
