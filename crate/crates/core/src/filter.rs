//! Linear filtering and additive noise.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Mirror an out-of-range index back into `0..n` without repeating the edge
/// sample (`-1 -> 1`, `n -> n - 2`). Preserves index parity, which keeps
/// Bayer sites aligned across the border.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Normalized 1D Gaussian taps of odd length `size`.
pub fn gaussian_kernel_1d<T: Real>(size: usize, sigma: f64) -> Result<Vec<T>> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "kernel size must be odd and >= 1, got {size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let r = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|v| T::of(v / sum)).collect())
}

/// Full `size x size` kernel, row-major; the outer product of the 1D taps.
pub fn gaussian_kernel_2d<T: Real>(size: usize, sigma: f64) -> Result<Vec<T>> {
    let k = gaussian_kernel_1d::<T>(size, sigma)?;
    Ok(k.iter()
        .flat_map(|&a| k.iter().map(move |&b| a * b))
        .collect())
}

/// Per-channel Gaussian blur with reflect borders. The kernel is separable,
/// so this runs as a horizontal pass followed by a vertical pass.
pub fn gaussian_filter<T: Real>(img: &Image<T>, kernel_size: usize, sigma: f64) -> Result<Image<T>> {
    let taps = gaussian_kernel_1d::<T>(kernel_size, sigma)?;
    let r = (kernel_size / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let n = img.plane_len();
    let mut tmp = vec![T::zero(); n * img.channels()];
    tmp.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        let (c, y) = (row / h, row % h);
        let src = &img.plane(c)[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc = acc + t * src[reflect_index(x as isize + k as isize - r, w)];
            }
            *o = acc;
        }
    });
    let mut out = vec![T::zero(); n * img.channels()];
    out.par_chunks_mut(w).enumerate().for_each(|(row, dst)| {
        let (c, y) = (row / h, row % h);
        let plane = &tmp[c * n..(c + 1) * n];
        for (x, o) in dst.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - r, h);
                acc = acc + t * plane[sy * w + x];
            }
            *o = acc;
        }
    });
    Ok(Image::from_clamped(w, h, img.channels(), out))
}

/// Add i.i.d. `N(0, sigma²)` to every sample (planar raster order), then clamp.
/// `sigma == 0` returns the input untouched and draws nothing from `rng`.
pub fn add_gaussian_noise<T: Real, R: Rng + ?Sized>(
    img: &Image<T>,
    sigma: f64,
    rng: &mut R,
) -> Result<Image<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + T::of(sigma * z)
        })
        .collect();
    Ok(Image::from_clamped(img.width(), img.height(), img.channels(), data))
}
