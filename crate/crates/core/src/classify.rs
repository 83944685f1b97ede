//! Dataset balancing classifiers: page content from pure-sample counts, and
//! moire frequency group from the pattern-only power spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;
use crate::spectrum::psd_2d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContentClass {
    TextOnly,
    FigureOnly,
    Mixed,
}

impl ContentClass {
    pub const ALL: [ContentClass; 3] = [ContentClass::TextOnly, ContentClass::FigureOnly, ContentClass::Mixed];

    /// One-letter tag used in report columns (T / F / M).
    pub fn short(self) -> &'static str {
        match self {
            ContentClass::TextOnly => "T",
            ContentClass::FigureOnly => "F",
            ContentClass::Mixed => "M",
        }
    }
}

impl fmt::Display for ContentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContentClass::TextOnly => "TextOnly",
            ContentClass::FigureOnly => "FigureOnly",
            ContentClass::Mixed => "Mixed",
        })
    }
}

impl FromStr for ContentClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TextOnly" | "T" => Ok(ContentClass::TextOnly),
            "FigureOnly" | "F" => Ok(ContentClass::FigureOnly),
            "Mixed" | "M" => Ok(ContentClass::Mixed),
            _ => Err(Error::InvalidParameter(format!("unknown content class {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrequencyGroup {
    Low,
    Mid,
    High,
}

impl FrequencyGroup {
    pub const ALL: [FrequencyGroup; 3] = [FrequencyGroup::Low, FrequencyGroup::Mid, FrequencyGroup::High];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FrequencyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentThresholds {
    /// Pure-sample fraction at or above which a page is text only.
    pub upper_ratio: f64,
    /// Pure-sample fraction at or below which a page is figures only.
    pub lower_ratio: f64,
    /// A sample within this distance of 0 or 1 counts as pure.
    pub purity_epsilon: f64,
}

impl Default for ContentThresholds {
    fn default() -> Self {
        Self {
            upper_ratio: 0.75,
            lower_ratio: 0.25,
            purity_epsilon: 1.0 / 255.0,
        }
    }
}

impl ContentThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.lower_ratio && self.lower_ratio < self.upper_ratio && self.upper_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < lower_ratio < upper_ratio < 1, got {} / {}",
                self.lower_ratio, self.upper_ratio
            )));
        }
        if !(self.purity_epsilon >= 0.0 && self.purity_epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "purity_epsilon must be in [0, 0.5), got {}",
                self.purity_epsilon
            )));
        }
        Ok(())
    }

    /// Number of per-channel samples in an RGB raster.
    pub fn total_subpixels(width: usize, height: usize) -> u64 {
        3 * width as u64 * height as u64
    }
}

/// Samples (counted per channel) within `purity_epsilon` of pure black or
/// pure white.
pub fn count_pure_samples<T: Real>(img: &Image<T>, purity_epsilon: f64) -> u64 {
    // 8-bit inputs land on k/255 only up to rounding
    let eps = purity_epsilon + 1e-9;
    img.data()
        .iter()
        .filter(|v| {
            let v = v.to_f64_lossy();
            v <= eps || v >= 1.0 - eps
        })
        .count() as u64
}

pub fn classify_content<T: Real>(img: &Image<T>, th: &ContentThresholds) -> Result<ContentClass> {
    Ok(content_with_count(img, th)?.0)
}

/// Class plus the pure-sample count it was decided from.
pub fn content_with_count<T: Real>(img: &Image<T>, th: &ContentThresholds) -> Result<(ContentClass, u64)> {
    th.validate()?;
    if img.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "content classification needs RGB, got {} channels",
            img.channels()
        )));
    }
    let count = count_pure_samples(img, th.purity_epsilon);
    let total = ContentThresholds::total_subpixels(img.width(), img.height()) as f64;
    let c = count as f64;
    let class = if c >= th.upper_ratio * total {
        ContentClass::TextOnly
    } else if c <= th.lower_ratio * total {
        ContentClass::FigureOnly
    } else {
        ContentClass::Mixed
    };
    Ok((class, count))
}

/// Radial band edges as fractions of the Nyquist radius:
/// Low `[0, low_mid)`, Mid `[low_mid, mid_high)`, High `[mid_high, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyBands {
    pub low_mid: f64,
    pub mid_high: f64,
}

impl Default for FrequencyBands {
    fn default() -> Self {
        Self {
            low_mid: 1.0 / 3.0,
            mid_high: 2.0 / 3.0,
        }
    }
}

impl FrequencyBands {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.low_mid && self.low_mid < self.mid_high) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < low_mid < mid_high, got {} / {}",
                self.low_mid, self.mid_high
            )));
        }
        Ok(())
    }

    pub fn group_of(&self, radial_fraction: f64) -> FrequencyGroup {
        if radial_fraction < self.low_mid {
            FrequencyGroup::Low
        } else if radial_fraction < self.mid_high {
            FrequencyGroup::Mid
        } else {
            FrequencyGroup::High
        }
    }
}

/// Total PSD power per band (DC excluded), indexed Low/Mid/High.
pub fn band_powers<T: Real>(pattern: &Image<T>, bands: &FrequencyBands) -> Result<[f64; 3]> {
    bands.validate()?;
    if pattern.channels() != 1 {
        return Err(Error::InvalidParameter(format!(
            "frequency classification needs a single-channel pattern, got {} channels",
            pattern.channels()
        )));
    }
    let psd = psd_2d(pattern)?;
    let mut power = [0.0; 3];
    for j in 0..psd.height() {
        for i in 0..psd.width() {
            if (i, j) == psd.dc_index() {
                continue;
            }
            power[bands.group_of(psd.radial_fraction(i, j)).index()] += psd.at(i, j).to_f64_lossy();
        }
    }
    Ok(power)
}

/// The band holding the most power; ties go to the lower band.
pub fn classify_frequency<T: Real>(pattern: &Image<T>, bands: &FrequencyBands) -> Result<FrequencyGroup> {
    let power = band_powers(pattern, bands)?;
    if power.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateInput(
            "pattern has no non-DC power (constant image)".into(),
        ));
    }
    Ok(dominant_band(power))
}

/// Argmax over band powers, lowest band on ties.
pub fn dominant_band(power: [f64; 3]) -> FrequencyGroup {
    let mut best = 0;
    for k in 1..3 {
        if power[k] > power[best] {
            best = k;
        }
    }
    FrequencyGroup::ALL[best]
}
