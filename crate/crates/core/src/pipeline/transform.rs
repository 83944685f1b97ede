//! Random screen/camera pose.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{homography_from_corners, Homography, Point};
use crate::scalar::Real;

pub const MAX_SAMPLING_ATTEMPTS: usize = 16;

/// Corners of a `width x height` canvas as pixel centers, clockwise from the
/// top-left: TL, TR, BR, BL.
pub fn canvas_corners<T: Real>(width: usize, height: usize) -> [Point<T>; 4] {
    let (r, b) = (T::of(width as f64 - 1.0), T::of(height as f64 - 1.0));
    let z = T::zero();
    [Point::new(z, z), Point::new(r, z), Point::new(r, b), Point::new(z, b)]
}

/// Jitter each canvas corner by an independent offset drawn uniformly from a
/// disc of radius `radius_ratio × min(width, height)`, and return the
/// homography taking the canvas corners to the jittered ones.
///
/// Draw order per attempt, corners TL, TR, BR, BL: angle `u ∈ [0, 1)` then
/// radius `v ∈ [0, 1)`; offset = `R·√v·(cos 2πu, sin 2πu)`. A non-convex or
/// degenerate quad is discarded and redrawn, up to
/// [`MAX_SAMPLING_ATTEMPTS`] times.
pub fn sample_projective_transform<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    radius_ratio: f64,
) -> Result<Homography<T>> {
    if !(radius_ratio > 0.0 && radius_ratio < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "corner radius ratio must be in (0, 0.5), got {radius_ratio}"
        )));
    }
    if width < 2 || height < 2 {
        return Err(Error::InvalidParameter("canvas must be at least 2x2".into()));
    }
    let radius = radius_ratio * width.min(height) as f64;
    let src = canvas_corners::<f64>(width, height);
    let mut last_err = None;
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let dst = src.map(|p| {
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            let r = radius * rng.random::<f64>().sqrt();
            Point::new(p.x + r * angle.cos(), p.y + r * angle.sin())
        });
        if !is_strictly_convex(&dst) {
            last_err = Some(Error::DegenerateCorners("jittered quad is not convex".into()));
            continue;
        }
        let to_t = |p: Point<f64>| Point::new(T::of(p.x), T::of(p.y));
        match homography_from_corners(&src.map(to_t), &dst.map(to_t)) {
            Ok(h) => return Ok(h),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::DegenerateCorners("no attempts".into())))
}

fn is_strictly_convex(q: &[Point<f64>; 4]) -> bool {
    let cross = |i: usize| {
        let (a, b, c) = (q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
        (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
    };
    let signs: Vec<f64> = (0..4).map(cross).collect();
    signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tiny_radius_gives_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h: Homography<f64> = sample_projective_transform(&mut rng, 1024, 1024, 1e-9).unwrap();
        let id = Homography::<f64>::identity();
        for (a, b) in h.matrix().iter().flatten().zip(id.matrix().iter().flatten()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn offsets_stay_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let corners = canvas_corners::<f64>(1024, 1024);
        for _ in 0..1000 {
            let h: Homography<f64> = sample_projective_transform(&mut rng, 1024, 1024, 0.2).unwrap();
            for c in corners {
                let p = h.apply(c);
                assert!((p.x - c.x).hypot(p.y - c.y) <= 204.8 + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a: Homography<f64> =
            sample_projective_transform(&mut ChaCha8Rng::seed_from_u64(5), 640, 480, 0.2).unwrap();
        let b: Homography<f64> =
            sample_projective_transform(&mut ChaCha8Rng::seed_from_u64(5), 640, 480, 0.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ratio_out_of_range_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(sample_projective_transform::<f64, _>(&mut rng, 64, 64, 0.0).is_err());
        assert!(sample_projective_transform::<f64, _>(&mut rng, 64, 64, 0.5).is_err());
    }

    #[test]
    fn convexity_check() {
        let sq = canvas_corners::<f64>(10, 10);
        assert!(is_strictly_convex(&sq));
        let mut bow = sq;
        bow.swap(2, 3);
        assert!(!is_strictly_convex(&bow));
    }
}
