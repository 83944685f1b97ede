//! LCD subpixel rendering.
//!
//! Each source pixel becomes a 3x3 cell of display subpixels:
//!
//! ```text
//!   K K K
//!   R G B
//!   R G B
//! ```
//!
//! where `K` is black and `R`/`G`/`B` light only their own channel with the
//! pixel's value for that channel. Two of nine subpixels carry each channel,
//! so every channel mean drops to exactly 2/9 of the source mean.

use crate::error::{Error, Result};
use crate::geometry::{Homography, PixelSource};
use crate::image::Image;
use crate::scalar::Real;

pub const CELL: usize = 3;

/// Virtual 3x-resolution subpixel mosaic over a borrowed RGB image. Reads are
/// computed on the fly; [`SubpixelMosaic::materialize`] yields the same
/// samples as [`lcd_subpixel_mosaic`].
#[derive(Clone, Copy, Debug)]
pub struct SubpixelMosaic<'a, T> {
    src: &'a Image<T>,
}

impl<'a, T: Real> SubpixelMosaic<'a, T> {
    pub fn new(src: &'a Image<T>) -> Result<Self> {
        if src.channels() != 3 {
            return Err(Error::InvalidParameter(format!(
                "subpixel mosaic needs RGB input, got {} channels",
                src.channels()
            )));
        }
        Ok(Self { src })
    }

    pub fn materialize(&self) -> Image<T> {
        Image::from_fn(
            self.src.width() * CELL,
            self.src.height() * CELL,
            3,
            |c, x, y| self.sample(c, x, y),
        )
    }
}

impl<T: Real> PixelSource<T> for SubpixelMosaic<'_, T> {
    fn width(&self) -> usize {
        self.src.width() * CELL
    }

    fn height(&self) -> usize {
        self.src.height() * CELL
    }

    fn channels(&self) -> usize {
        3
    }

    #[inline]
    fn sample(&self, c: usize, x: usize, y: usize) -> T {
        if y.is_multiple_of(CELL) || x % CELL != c {
            T::zero()
        } else {
            self.src.get(c, x / CELL, y / CELL)
        }
    }
}

pub fn lcd_subpixel_mosaic<T: Real>(img: &Image<T>) -> Result<Image<T>> {
    Ok(SubpixelMosaic::new(img)?.materialize())
}

/// Source pixel `p` maps to mosaic coordinate `(3x + 1, 3y + 1.5)`: the
/// centroid of the lit rows of its cell, half a subpixel below the cell
/// center.
pub fn source_to_mosaic<T: Real>() -> Homography<T> {
    let three = T::of(CELL as f64);
    Homography::scale_translate(three, three, T::one(), T::of(1.5))
}
