//! 2D power spectral density.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Centered power spectrum. Bin `(i, j)` holds the power at horizontal
/// frequency `i - dc.0` and vertical frequency `j - dc.1` (cycles per image
/// width/height). The transform is orthonormal, so the total power equals the
/// sum of squared deviations from the mean (`N × variance`).
#[derive(Clone, Debug, PartialEq)]
pub struct PsdMap<T> {
    width: usize,
    height: usize,
    power: Vec<T>,
    dc: (usize, usize),
}

impl<T: Real> PsdMap<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn power(&self) -> &[T] {
        &self.power
    }

    pub fn dc_index(&self) -> (usize, usize) {
        self.dc
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.power[j * self.width + i]
    }

    pub fn total(&self) -> f64 {
        self.power.iter().map(|v| v.to_f64_lossy()).sum()
    }

    /// Signed integer frequency of bin `(i, j)`.
    #[inline]
    pub fn frequency(&self, i: usize, j: usize) -> (i64, i64) {
        (i as i64 - self.dc.0 as i64, j as i64 - self.dc.1 as i64)
    }

    /// Radial frequency of bin `(i, j)` as a fraction of the Nyquist radius
    /// (0.5 cycles/pixel). Exceeds 1 toward the spectrum corners.
    pub fn radial_fraction(&self, i: usize, j: usize) -> f64 {
        let (kx, ky) = self.frequency(i, j);
        let fx = kx as f64 / self.width as f64;
        let fy = ky as f64 / self.height as f64;
        fx.hypot(fy) / 0.5
    }
}

/// `|centered DFT|²` of the mean-subtracted single-channel image.
pub fn psd_2d<T: Real>(img: &Image<T>) -> Result<PsdMap<T>> {
    if img.channels() != 1 {
        return Err(Error::InvalidParameter(format!(
            "psd needs a single-channel image, got {} channels",
            img.channels()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let dc = (w / 2, h / 2);
    let data = img.data();
    if data.iter().all(|&v| v == data[0]) {
        return Ok(PsdMap {
            width: w,
            height: h,
            power: vec![T::zero(); w * h],
            dc,
        });
    }

    let mean = T::of(img.mean());
    let mut buf: Vec<Complex<T>> = data.iter().map(|&v| Complex::new(v - mean, T::zero())).collect();

    let mut planner = FftPlanner::<T>::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(T::zero(), T::zero()); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }

    let norm = T::one() / T::of((w * h) as f64);
    let mut power = vec![T::zero(); w * h];
    for y in 0..h {
        let sy = (y + dc.1) % h;
        for x in 0..w {
            let sx = (x + dc.0) % w;
            power[sy * w + sx] = buf[y * w + x].norm_sqr() * norm;
        }
    }
    power[dc.1 * w + dc.0] = T::zero();
    Ok(PsdMap {
        width: w,
        height: h,
        power,
        dc,
    })
}
