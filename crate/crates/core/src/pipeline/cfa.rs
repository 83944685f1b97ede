//! Bayer color filter array sampling and bilinear demosaicing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::reflect_index;
use crate::image::Image;
use crate::scalar::Real;

const R: usize = 0;
const G: usize = 1;
const B: usize = 2;

/// Channel layout of the top-left 2x2 quad, read row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaPhase {
    #[default]
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl CfaPhase {
    fn quad(self) -> [usize; 4] {
        match self {
            CfaPhase::Rggb => [R, G, G, B],
            CfaPhase::Bggr => [B, G, G, R],
            CfaPhase::Grbg => [G, R, B, G],
            CfaPhase::Gbrg => [G, B, R, G],
        }
    }

    /// Color channel sensed at `(x, y)`; valid for negative coordinates too.
    #[inline]
    pub fn channel_at(self, x: isize, y: isize) -> usize {
        self.quad()[(y.rem_euclid(2) * 2 + x.rem_euclid(2)) as usize]
    }
}

impl fmt::Display for CfaPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CfaPhase::Rggb => "RGGB",
            CfaPhase::Bggr => "BGGR",
            CfaPhase::Grbg => "GRBG",
            CfaPhase::Gbrg => "GBRG",
        })
    }
}

impl FromStr for CfaPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RGGB" => Ok(CfaPhase::Rggb),
            "BGGR" => Ok(CfaPhase::Bggr),
            "GRBG" => Ok(CfaPhase::Grbg),
            "GBRG" => Ok(CfaPhase::Gbrg),
            _ => Err(Error::InvalidParameter(format!("unknown CFA phase {s:?}"))),
        }
    }
}

/// Single-channel sensor readout with its CFA layout.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImage<T> {
    data: Image<T>,
    phase: CfaPhase,
}

impl<T: Real> RawImage<T> {
    pub fn new(data: Image<T>, phase: CfaPhase) -> Result<Self> {
        if data.channels() != 1 {
            return Err(Error::InvalidParameter("raw data must be single-channel".into()));
        }
        if !data.width().is_multiple_of(2) || !data.height().is_multiple_of(2) {
            return Err(Error::OddDimensions(data.width(), data.height()));
        }
        Ok(Self { data, phase })
    }

    pub fn width(&self) -> usize {
        self.data.width()
    }

    pub fn height(&self) -> usize {
        self.data.height()
    }

    pub fn phase(&self) -> CfaPhase {
        self.phase
    }

    pub fn image(&self) -> &Image<T> {
        &self.data
    }

    /// Replace the samples (e.g. after adding sensor noise), keeping the layout.
    pub fn with_image(&self, data: Image<T>) -> Result<Self> {
        Self::new(data, self.phase)
    }
}

pub fn bayer_mosaic<T: Real>(img: &Image<T>, phase: CfaPhase) -> Result<RawImage<T>> {
    if img.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "Bayer sampling needs RGB input, got {} channels",
            img.channels()
        )));
    }
    if !img.width().is_multiple_of(2) || !img.height().is_multiple_of(2) {
        return Err(Error::OddDimensions(img.width(), img.height()));
    }
    let raw = Image::from_fn(img.width(), img.height(), 1, |_, x, y| {
        img.get(phase.channel_at(x as isize, y as isize), x, y)
    });
    RawImage::new(raw, phase)
}

/// Bilinear demosaic: missing channels are the mean of the nearest 2 or 4
/// same-color sites. Borders mirror without repeating the edge, which keeps
/// the Bayer phase intact.
pub fn demosaic_bilinear<T: Real>(raw: &RawImage<T>) -> Image<T> {
    let (w, h) = (raw.width(), raw.height());
    let phase = raw.phase;
    let at = |x: isize, y: isize| {
        raw.data
            .get(0, reflect_index(x, w), reflect_index(y, h))
    };
    let half = T::of(0.5);
    let quarter = T::of(0.25);
    Image::from_fn(w, h, 3, |c, x, y| {
        let (x, y) = (x as isize, y as isize);
        let site = phase.channel_at(x, y);
        if site == c {
            at(x, y)
        } else if site == G {
            if phase.channel_at(x + 1, y) == c {
                (at(x - 1, y) + at(x + 1, y)) * half
            } else {
                (at(x, y - 1) + at(x, y + 1)) * half
            }
        } else if c == G {
            ((at(x - 1, y) + at(x + 1, y)) + (at(x, y - 1) + at(x, y + 1))) * quarter
        } else {
            ((at(x - 1, y - 1) + at(x + 1, y - 1)) + (at(x - 1, y + 1) + at(x + 1, y + 1))) * quarter
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PHASES: [CfaPhase; 4] = [CfaPhase::Rggb, CfaPhase::Bggr, CfaPhase::Grbg, CfaPhase::Gbrg];

    #[test]
    fn constant_gray_gives_constant_raw() {
        let raw = bayer_mosaic(&Image::<f64>::filled(6, 4, 3, 0.4), CfaPhase::Rggb).unwrap();
        assert!(raw.image().data().iter().all(|&v| v == 0.4));
    }

    #[test]
    fn pure_red_lights_only_red_sites() {
        let img = Image::<f64>::from_fn(4, 4, 3, |c, _, _| if c == 0 { 1.0 } else { 0.0 });
        let raw = bayer_mosaic(&img, CfaPhase::Rggb).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if x % 2 == 0 && y % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(raw.image().get(0, x, y), expect);
            }
        }
    }

    #[test]
    fn random_image_matches_site_table() {
        // explicit per-phase lookup written out by hand
        let table = |phase: CfaPhase, x: usize, y: usize| -> usize {
            let s = match phase {
                CfaPhase::Rggb => ["RG", "GB"],
                CfaPhase::Bggr => ["BG", "GR"],
                CfaPhase::Grbg => ["GR", "BG"],
                CfaPhase::Gbrg => ["GB", "RG"],
            };
            match s[y % 2].as_bytes()[x % 2] {
                b'R' => 0,
                b'G' => 1,
                _ => 2,
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = Image::<f64>::from_fn(4, 4, 3, |_, _, _| rng.random());
        for phase in PHASES {
            let raw = bayer_mosaic(&img, phase).unwrap();
            for y in 0..4 {
                for x in 0..4 {
                    assert_eq!(raw.image().get(0, x, y), img.get(table(phase, x, y), x, y));
                }
            }
        }
    }

    #[test]
    fn odd_dimensions_are_rejected() {
        assert!(matches!(
            bayer_mosaic(&Image::<f64>::zeros(5, 4, 3), CfaPhase::Rggb),
            Err(Error::OddDimensions(5, 4))
        ));
        assert!(RawImage::new(Image::<f64>::zeros(4, 3, 1), CfaPhase::Rggb).is_err());
    }

    #[test]
    fn demosaic_is_exact_on_constant_colors() {
        for phase in PHASES {
            for color in [[0.5, 0.5, 0.5], [0.9, 0.1, 0.3], [0.0, 1.0, 0.7]] {
                let img = Image::<f64>::from_fn(8, 6, 3, |c, _, _| color[c]);
                let out = demosaic_bilinear(&bayer_mosaic(&img, phase).unwrap());
                assert_eq!(out, img);
            }
        }
    }

    #[test]
    fn demosaic_reconstructs_ramp_in_interior() {
        let (w, h) = (32, 16);
        let img = Image::<f64>::from_fn(w, h, 3, |c, x, _| {
            (0.1 + 0.8 * x as f64 / (w - 1) as f64) * [1.0, 0.8, 0.6][c]
        });
        for phase in PHASES {
            let out = demosaic_bilinear(&bayer_mosaic(&img, phase).unwrap());
            for c in 0..3 {
                for y in 1..h - 1 {
                    for x in 1..w - 1 {
                        assert!((out.get(c, x, y) - img.get(c, x, y)).abs() < 1.0 / 255.0);
                    }
                }
            }
        }
    }

    #[test]
    fn phase_parses_and_prints() {
        for p in PHASES {
            assert_eq!(p.to_string().parse::<CfaPhase>().unwrap(), p);
        }
        assert!("RGBG".parse::<CfaPhase>().is_err());
    }
}
