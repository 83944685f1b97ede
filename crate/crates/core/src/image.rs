//! Planar rasters.
//!
//! [`Image`] is the floating-point working representation: `channels` planes
//! of `width * height` samples each, row-major, every sample in `[0, 1]`.
//! [`ImageU8`] is the 8-bit storage/interchange form, interleaved the way PNG
//! and JPEG codecs expect it.

use crate::error::{Error, Result};
use crate::scalar::{unit_clamp, Real};

/// Rec. 601 luma weights.
pub const LUMA_601: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    /// Build from planar data, rejecting anything that violates the raster
    /// invariants (length, channel count, finiteness, range).
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        if let Some(bad) = data
            .iter()
            .find(|v| !v.is_finite() || **v < T::zero() || **v > T::one())
        {
            return Err(Error::InvalidImage(format!("sample {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Build from arithmetic results, clamping every sample into `[0, 1]`.
    pub fn from_clamped(width: usize, height: usize, channels: usize, mut data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height * channels, "planar length");
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        for v in &mut data {
            *v = unit_clamp(*v);
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self::from_clamped(width, height, channels, vec![value; width * height * channels])
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, T::zero())
    }

    /// Evaluate `f(channel, x, y)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self::from_clamped(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> T {
        self.data[c * self.plane_len() + y * self.width + x]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Apply `f` to every sample, clamping the result.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_clamped(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn channel_means(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|c| {
                let sum: f64 = self.plane(c).iter().map(|v| v.to_f64_lossy()).sum();
                sum / self.plane_len() as f64
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|v| v.to_f64_lossy()).sum();
        sum / self.data.len() as f64
    }

    /// Single-channel Rec. 601 luminance; a 1-channel image is returned as is.
    pub fn luminance(&self) -> Self {
        if self.channels == 1 {
            return self.clone();
        }
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let w = LUMA_601.map(T::of);
        let data = (0..self.plane_len())
            .map(|i| w[0] * r[i] + w[1] * g[i] + w[2] * b[i])
            .collect();
        Self::from_clamped(self.width, self.height, 1, data)
    }

    /// Exact copy of the `width x height` rectangle whose top-left is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        let fits = x.checked_add(width).is_some_and(|r| r <= self.width)
            && y.checked_add(height).is_some_and(|b| b <= self.height);
        if !fits || width == 0 || height == 0 {
            return Err(Error::CropOutOfBounds {
                x,
                y,
                width,
                height,
                img_width: self.width,
                img_height: self.height,
            });
        }
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            let plane = self.plane(c);
            for row in y..y + height {
                let start = row * self.width + x;
                data.extend_from_slice(&plane[start..start + width]);
            }
        }
        Ok(Self {
            width,
            height,
            channels: self.channels,
            data,
        })
    }

    /// Crop `size x size` from the center (origin rounded toward top-left).
    pub fn center_crop(&self, size: usize) -> Result<Self> {
        let x = self.width.saturating_sub(size) / 2;
        let y = self.height.saturating_sub(size) / 2;
        self.crop(x, y, size, size)
    }

    /// Quantize to 8 bits with `round(v * 255)`.
    pub fn to_u8(&self) -> ImageU8 {
        let n = self.plane_len();
        let mut data = vec![0u8; n * self.channels];
        for c in 0..self.channels {
            for (i, v) in self.plane(c).iter().enumerate() {
                let q = (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0);
                data[i * self.channels + c] = q as u8;
            }
        }
        ImageU8 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image::from_clamped(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        )
    }

    pub(crate) fn assert_unit_range(&self, stage: &str) {
        debug_assert!(
            self.data
                .iter()
                .all(|v| v.is_finite() && *v >= T::zero() && *v <= T::one()),
            "{stage}: sample outside [0, 1]"
        );
    }
}

fn check_shape(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidImage(format!(
            "channels must be 1 or 3, got {channels}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage("zero-sized raster".into()));
    }
    if len != width * height * channels {
        return Err(Error::InvalidImage(format!(
            "data length {len} != {width}x{height}x{channels}"
        )));
    }
    Ok(())
}

/// 8-bit raster, interleaved (`RGBRGB...` or `LLL...`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageU8 {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageU8 {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn to_float<T: Real>(&self) -> Image<T> {
        let n = self.width * self.height;
        let scale = T::of(255.0);
        let mut data = vec![T::zero(); n * self.channels];
        for (i, px) in self.data.chunks_exact(self.channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * n + i] = T::of(v as f64) / scale;
            }
        }
        Image::from_clamped(self.width, self.height, self.channels, data)
    }
}
