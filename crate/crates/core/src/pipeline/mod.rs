//! Moire pair synthesis: photograph a clean image off a simulated LCD.
//!
//! Stages, in order:
//!
//! 1. render the source as LCD subpixels (3x3 cell per pixel);
//! 2. project the screen into the camera with a random homography and blur
//!    with a 3x3 Gaussian; the camera raster samples the screen at
//!    `camera_scale` pixels per source pixel;
//! 3. sample through a Bayer CFA and add Gaussian sensor noise;
//! 4. bilinear demosaic and denoise;
//! 5. JPEG round-trip, integrate back onto the source grid and center-crop.
//!
//! A pure white frame pushed through the identical capture (same homography,
//! same noise stream) yields the pattern-only image.
//!
//! # Random draw order
//!
//! [`generate_pair`] seeds a [`PortableRng`] from the entry seed and draws:
//! the corner jitter (see [`sample_projective_transform`]), then one `u64`
//! that seeds a second [`PortableRng`] for the sensor noise. Noise samples are
//! drawn in planar raster order of the raw frame.

mod align;
mod cfa;
mod isp;
mod mosaic;
mod transform;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use align::align_and_crop;
pub use cfa::{bayer_mosaic, demosaic_bilinear, CfaPhase, RawImage};
pub use isp::{denoise, jpeg_roundtrip, DENOISE_RANGE_PER_STRENGTH, DENOISE_SPATIAL_SIGMA};
pub use mosaic::{lcd_subpixel_mosaic, source_to_mosaic, SubpixelMosaic};
pub use transform::{canvas_corners, sample_projective_transform, MAX_SAMPLING_ATTEMPTS};

use crate::error::{Error, Result};
use crate::filter::{add_gaussian_noise, gaussian_filter};
use crate::geometry::{warp_projective, warp_source, Homography, Interpolation, Point};
use crate::image::Image;
use crate::scalar::Real;

/// The toolkit's portable, seedable generator.
pub type PortableRng = rand_chacha::ChaCha8Rng;

/// Side of the camera-stage Gaussian blur kernel.
pub const BLUR_KERNEL: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Corner jitter radius as a fraction of the image size.
    pub corner_radius_ratio: f64,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub jpeg_quality: u8,
    pub denoise_strength: f64,
    /// Camera pixels per source pixel along each axis before perspective.
    /// Together with the homography this sets how the Bayer grid beats
    /// against the subpixel grid, and so the moire frequency.
    pub camera_scale: f64,
    pub output_size: usize,
    pub seed: u64,
    pub cfa_phase: CfaPhase,
    /// Blur the subpixel mosaic before projecting it instead of blurring the
    /// camera frame afterwards.
    pub blur_before_warp: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corner_radius_ratio: 0.2,
            blur_sigma: 0.8,
            noise_sigma: 0.01,
            jpeg_quality: 85,
            denoise_strength: 0.5,
            camera_scale: 2.5,
            output_size: 1024,
            seed: 0,
            cfa_phase: CfaPhase::Rggb,
            blur_before_warp: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.corner_radius_ratio > 0.0 && self.corner_radius_ratio < 0.5) {
            return bad(format!(
                "corner_radius_ratio must be in (0, 0.5), got {}",
                self.corner_radius_ratio
            ));
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return bad(format!("jpeg_quality must be in 1..=100, got {}", self.jpeg_quality));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return bad(format!("blur_sigma must be > 0, got {}", self.blur_sigma));
        }
        if !(self.denoise_strength >= 0.0 && self.denoise_strength.is_finite()) {
            return bad(format!("denoise_strength must be >= 0, got {}", self.denoise_strength));
        }
        if !(self.camera_scale >= 0.5 && self.camera_scale <= 8.0) {
            return bad(format!("camera_scale must be in [0.5, 8], got {}", self.camera_scale));
        }
        if self.output_size < 64 {
            return bad(format!("output_size must be >= 64, got {}", self.output_size));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every generation knob except
    /// `seed` (per-entry seeds are recorded separately).
    pub fn config_hash(&self) -> String {
        let canonical = Self { seed: 0, ..self.clone() };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Reads per axis when integrating a camera pixel block back onto one
    /// source pixel.
    pub fn footprint_samples(&self) -> usize {
        self.camera_scale.ceil().max(1.0) as usize
    }
}

/// Where the camera sat for one capture, plus its noise stream.
#[derive(Clone, Debug, PartialEq)]
pub struct CaptureGeometry<T> {
    /// Maps clean-image pixels into the camera raster.
    pub source_to_camera: Homography<T>,
    pub camera_width: usize,
    pub camera_height: usize,
    pub noise_seed: u64,
}

/// Draw a capture for a `width x height` source. The homography is jittered
/// in source coordinates, then scaled by `camera_scale`; the camera raster is
/// the bounding box of the projected source footprint (even-sized), so the
/// whole source is in frame.
pub fn plan_capture<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    cfg: &PipelineConfig,
) -> Result<CaptureGeometry<T>> {
    let h: Homography<T> = sample_projective_transform(rng, width, height, cfg.corner_radius_ratio)?;
    let noise_seed = rng.next_u64();

    let k = T::of(cfg.camera_scale);
    let h = Homography::scale_translate(k, k, T::zero(), T::zero()).compose(&h)?;
    let half = T::of(0.5);
    let projected = canvas_corners::<T>(width + 1, height + 1).map(|c| h.apply(Point::new(c.x - half, c.y - half)));
    let xs = projected.map(|p| p.x.to_f64_lossy());
    let ys = projected.map(|p| p.y.to_f64_lossy());
    let (min_x, max_x) = min_max(&xs);
    let (min_y, max_y) = min_max(&ys);
    let (left, top) = (min_x.floor(), min_y.floor());
    let even = |n: usize| n + n % 2;
    let camera_width = even((max_x.ceil() - left) as usize + 1);
    let camera_height = even((max_y.ceil() - top) as usize + 1);
    let source_to_camera = Homography::translation(T::of(-left), T::of(-top)).compose(&h)?;
    Ok(CaptureGeometry {
        source_to_camera,
        camera_width,
        camera_height,
        noise_seed,
    })
}

fn min_max(v: &[f64; 4]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Run stages 1-5 for one source under a fixed capture and return the
/// aligned `(clean, moire)` crops.
pub fn render_capture<T: Real>(
    src: &Image<T>,
    geom: &CaptureGeometry<T>,
    cfg: &PipelineConfig,
) -> Result<(Image<T>, Image<T>)> {
    let mosaic = SubpixelMosaic::new(src)?;
    // mosaic coordinates -> camera
    let mosaic_to_camera = geom.source_to_camera.compose(&source_to_mosaic::<T>().inverse()?)?;
    let (cw, ch) = (geom.camera_width, geom.camera_height);

    let camera = if cfg.blur_before_warp {
        let blurred = gaussian_filter(&mosaic.materialize(), BLUR_KERNEL, cfg.blur_sigma)?;
        warp_projective(&blurred, &mosaic_to_camera, cw, ch, Interpolation::Bilinear)?
    } else {
        let projected = warp_source(&mosaic, &mosaic_to_camera, cw, ch, Interpolation::Bilinear)?;
        gaussian_filter(&projected, BLUR_KERNEL, cfg.blur_sigma)?
    };
    camera.assert_unit_range("projection");

    let raw = bayer_mosaic(&camera, cfg.cfa_phase)?;
    let mut noise_rng = PortableRng::seed_from_u64(geom.noise_seed);
    let raw = raw.with_image(add_gaussian_noise(raw.image(), cfg.noise_sigma, &mut noise_rng)?)?;
    raw.image().assert_unit_range("sensor");

    let rgb = demosaic_bilinear(&raw);
    let rgb = denoise(&rgb, cfg.denoise_strength)?;
    rgb.assert_unit_range("isp");

    let compressed = jpeg_roundtrip(&rgb, cfg.jpeg_quality)?;
    let (clean, moire) = align_and_crop(
        src,
        &compressed,
        &geom.source_to_camera,
        cfg.output_size,
        cfg.footprint_samples(),
    )?;
    moire.assert_unit_range("alignment");
    Ok((clean, moire))
}

/// Pattern-only image for a capture: a white frame through the same stages,
/// reduced to luminance.
pub fn render_pattern<T: Real>(
    width: usize,
    height: usize,
    geom: &CaptureGeometry<T>,
    cfg: &PipelineConfig,
) -> Result<Image<T>> {
    let white = Image::filled(width, height, 3, T::one());
    Ok(render_capture(&white, geom, cfg)?.1.luminance())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub seed: u64,
    pub config_hash: String,
    /// Row-major clean-to-camera homography.
    pub homography: [f64; 9],
    pub camera_width: usize,
    pub camera_height: usize,
    pub noise_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoirePair<T> {
    pub clean: Image<T>,
    pub moire: Image<T>,
    /// Single-channel luminance.
    pub pattern_only: Image<T>,
    pub meta: PairMeta,
}

/// Synthesize one aligned `(clean, moire, pattern)` triple. Pure in
/// `(src, cfg, seed)`; `cfg.seed` is not consulted.
pub fn generate_pair<T: Real>(src: &Image<T>, cfg: &PipelineConfig, seed: u64) -> Result<MoirePair<T>> {
    let mut rng = PortableRng::seed_from_u64(seed);
    generate_pair_with_rng(src, cfg, &mut rng, seed)
}

/// [`generate_pair`] with a caller-owned generator; `seed` is only recorded.
pub fn generate_pair_with_rng<T: Real, R: Rng + ?Sized>(
    src: &Image<T>,
    cfg: &PipelineConfig,
    rng: &mut R,
    seed: u64,
) -> Result<MoirePair<T>> {
    cfg.validate()?;
    check_source(src, cfg)?;
    let geom = plan_capture::<T, _>(rng, src.width(), src.height(), cfg)?;
    let (clean, moire) = render_capture(src, &geom, cfg)?;
    let pattern_only = render_pattern(src.width(), src.height(), &geom, cfg)?;
    Ok(MoirePair {
        clean,
        moire,
        pattern_only,
        meta: PairMeta {
            seed,
            config_hash: cfg.config_hash(),
            homography: geom.source_to_camera.coefficients(),
            camera_width: geom.camera_width,
            camera_height: geom.camera_height,
            noise_seed: geom.noise_seed,
        },
    })
}

/// Just the pattern-only image [`generate_pair`] would produce for a
/// `width x height` source under `seed`.
pub fn pattern_for_seed<T: Real>(width: usize, height: usize, cfg: &PipelineConfig, seed: u64) -> Result<Image<T>> {
    cfg.validate()?;
    let mut rng = PortableRng::seed_from_u64(seed);
    let geom = plan_capture::<T, _>(&mut rng, width, height, cfg)?;
    render_pattern(width, height, &geom, cfg)
}

pub fn check_source<T: Real>(src: &Image<T>, cfg: &PipelineConfig) -> Result<()> {
    if src.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "source must be RGB, got {} channels",
            src.channels()
        )));
    }
    if src.width() < cfg.output_size || src.height() < cfg.output_size {
        return Err(Error::TooSmall(format!(
            "source {}x{} is smaller than output size {}",
            src.width(),
            src.height(),
            cfg.output_size
        )));
    }
    Ok(())
}

/// Alignment score of a pair: zero-mean normalized cross-correlation between
/// the clean luminance and the moire luminance divided by the pattern-only
/// image. The division undoes the capture's brightness modulation (mosaic
/// darkening and moire banding), leaving geometric misregistration and
/// resampling loss.
pub fn alignment_ncc<T: Real>(pair: &MoirePair<T>) -> Result<f64> {
    let (clean, moire) = (pair.clean.luminance(), pair.moire.luminance());
    if !moire.same_shape(&pair.pattern_only) || !clean.same_shape(&moire) {
        return Err(Error::DimensionMismatch("pair images differ in size".into()));
    }
    let floor = 1e-6;
    let flat: Vec<f64> = moire
        .data()
        .iter()
        .zip(pair.pattern_only.data())
        .map(|(m, w)| m.to_f64_lossy() / w.to_f64_lossy().max(floor))
        .collect();
    let clean: Vec<f64> = clean.data().iter().map(|v| v.to_f64_lossy()).collect();
    ncc(&clean, &flat)
}

/// Zero-mean, unit-variance cross-correlation of the luminance of two
/// equally sized images.
pub fn normalized_cross_correlation<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    let (la, lb) = (a.luminance(), b.luminance());
    if !la.same_shape(&lb) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            la.width(),
            la.height(),
            lb.width(),
            lb.height()
        )));
    }
    let f = |img: &Image<T>| img.data().iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>();
    ncc(&f(&la), &f(&lb))
}

fn ncc(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateInput("constant image has no correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
