//! Procedural stand-ins for rasterized document pages, one generator per
//! content class. Used for desk-scale builds, demos and tests.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::write_png;
use crate::pipeline::PortableRng;

/// Black glyph-like strokes on pure white. Every sample is exactly 0 or 1.
pub fn text_page(width: usize, height: usize, seed: u64) -> Image<f64> {
    let mut rng = PortableRng::seed_from_u64(seed);
    let mut ink = vec![false; width * height];
    let line_h = rng.random_range(9..14usize);
    let glyph_w = line_h * 2 / 3;
    let margin = 3;
    let mut y = margin;
    while y + line_h + margin <= height {
        let mut x = margin;
        while x + glyph_w + margin <= width {
            if rng.random_bool(0.15) {
                x += glyph_w; // word gap
                continue;
            }
            // a glyph is a couple of horizontal/vertical strokes
            for _ in 0..rng.random_range(2..4) {
                let vertical = rng.random_bool(0.5);
                let (sx, sy) = (rng.random_range(0..glyph_w - 1), rng.random_range(0..line_h - 2));
                let len = if vertical { line_h - 2 - sy } else { glyph_w - 1 - sx };
                // strokes are two pixels thick
                for k in 0..len.max(1) {
                    let (gx, gy) = if vertical { (sx, sy + k) } else { (sx + k, sy) };
                    for (dx, dy) in [(0, 0), (usize::from(vertical), usize::from(!vertical))] {
                        ink[(y + gy + dy) * width + x + gx + dx] = true;
                    }
                }
            }
            x += glyph_w + 1;
        }
        y += line_h + rng.random_range(2..5usize);
    }
    Image::from_fn(width, height, 3, |_, x, y| if ink[y * width + x] { 0.0 } else { 1.0 })
}

/// Smooth colored field with a few soft-edged blobs; values kept inside
/// `[0.08, 0.92]`, so nothing counts as a pure pixel.
pub fn figure(width: usize, height: usize, seed: u64) -> Image<f64> {
    let mut rng = PortableRng::seed_from_u64(seed);
    let waves: Vec<[f64; 5]> = (0..6)
        .map(|_| {
            [
                rng.random_range(-0.15..0.15),
                rng.random_range(-0.15..0.15),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.05..0.2),
                rng.random_range(0.0..3.0),
            ]
        })
        .collect();
    let blobs: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.08..0.25) * width.min(height) as f64,
                rng.random_range(-0.3..0.3),
            ]
        })
        .collect();
    let base: [f64; 3] = [rng.random_range(0.3..0.7), rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)];
    Image::from_fn(width, height, 3, |c, x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = base[c];
        for w in &waves {
            let phase = w[2] + w[4] * c as f64;
            v += w[3] * (w[0] * xf + w[1] * yf + phase).sin();
        }
        for b in &blobs {
            let d = ((xf - b[0]).powi(2) + (yf - b[1]).powi(2)).sqrt();
            let edge = 1.0 / (1.0 + ((d - b[2]) / 1.5).exp());
            v += b[3] * edge * if c == 1 { 0.5 } else { 1.0 };
        }
        v.clamp(0.08, 0.92)
    })
}

/// Text on the top half, figure on the bottom half.
pub fn mixed(width: usize, height: usize, seed: u64) -> Image<f64> {
    let text = text_page(width, height, seed);
    let fig = figure(width, height, seed ^ 0x9e37_79b9_7f4a_7c15);
    let split = height / 2;
    Image::from_fn(width, height, 3, |c, x, y| {
        if y < split {
            text.get(c, x, y)
        } else {
            fig.get(c, x, y)
        }
    })
}

/// Write `per_class` PNGs of each kind (`text_NNN.png`, `figure_NNN.png`,
/// `mixed_NNN.png`) into `dir`.
pub fn write_sample_sources(dir: &Path, per_class: usize, size: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if size < 16 {
        return Err(Error::InvalidParameter(format!("sample size {size} too small")));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for i in 0..per_class {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        for (name, img) in [
            ("text", text_page(size, size, s)),
            ("figure", figure(size, size, s)),
            ("mixed", mixed(size, size, s)),
        ] {
            let path = dir.join(format!("{name}_{i:03}.png"));
            write_png(&path, &img.to_u8())?;
            written.push(path);
        }
    }
    Ok(written)
}
