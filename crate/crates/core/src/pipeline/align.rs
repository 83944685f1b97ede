use crate::error::{Error, Result};
use crate::geometry::{resample_projective_area, Homography, Point};
use crate::image::Image;
use crate::scalar::Real;

/// Bring `degraded` (camera frame) back onto `clean`'s pixel grid and cut the
/// same centered `out_size` square from both.
///
/// `source_to_camera` maps a clean-image pixel to where it landed on the
/// camera raster, so the aligned sample at `p` is read at
/// `source_to_camera(p)`. Each aligned pixel averages
/// `footprint_samples²` camera reads spread over the clean pixel's footprint,
/// so a camera that oversamples the screen is integrated rather than
/// point-sampled; `1` reads the footprint center only.
pub fn align_and_crop<T: Real>(
    clean: &Image<T>,
    degraded: &Image<T>,
    source_to_camera: &Homography<T>,
    out_size: usize,
    footprint_samples: usize,
) -> Result<(Image<T>, Image<T>)> {
    let clean_crop = clean.center_crop(out_size)?;
    let x0 = (clean.width() - out_size) / 2;
    let y0 = (clean.height() - out_size) / 2;

    let (cw, ch) = (degraded.width() as f64, degraded.height() as f64);
    let tol = 1e-6;
    let n = footprint_samples.max(1) as f64;
    // outermost footprint reads
    let reach = 0.5 - 0.5 / n;
    let (l, t) = (x0 as f64 - reach, y0 as f64 - reach);
    let (r, b) = (x0 as f64 + out_size as f64 - 1.0 + reach, y0 as f64 + out_size as f64 - 1.0 + reach);
    for (x, y) in [(l, t), (r, t), (r, b), (l, b)] {
        let (x, y) = (T::of(x), T::of(y));
        if source_to_camera.weight(x, y) <= T::zero() {
            return Err(Error::CropExceedsValidRegion(out_size));
        }
        let p = source_to_camera.apply(Point::new(x, y));
        let (px, py) = (p.x.to_f64_lossy(), p.y.to_f64_lossy());
        if px < -tol || py < -tol || px > cw - 1.0 + tol || py > ch - 1.0 + tol {
            return Err(Error::CropExceedsValidRegion(out_size));
        }
    }

    // output (u, v) of the crop is clean pixel (u + x0, v + y0)
    let crop_to_source = Homography::translation(T::of(x0 as f64), T::of(y0 as f64));
    let sampling = source_to_camera.compose(&crop_to_source)?;
    let aligned = resample_projective_area(degraded, &sampling, out_size, out_size, footprint_samples);
    Ok((clean_crop, aligned))
}
