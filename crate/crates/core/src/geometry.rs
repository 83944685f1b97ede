//! Planar projective geometry: homographies and projective warping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T> Point<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// 3x3 projective transform, normalized so that `m[2][2] == 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

const MIN_DET: f64 = 1e-12;

impl<T: Real> Homography<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn translation(dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, dx], [z, o, dy], [z, z, o]],
        }
    }

    /// `(x, y) -> (sx * x + dx, sy * y + dy)`.
    pub fn scale_translate(sx: T, sy: T, dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[sx, z, dx], [z, sy, dy], [z, z, o]],
        }
    }

    /// Normalize and validate an arbitrary 3x3 matrix.
    pub fn from_matrix(m: [[T; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite homography".into()));
        }
        let s = m[2][2];
        if s.abs() < T::of(MIN_DET) {
            return Err(Error::InvalidParameter(
                "homography has m[2][2] == 0 and cannot be normalized".into(),
            ));
        }
        let m = m.map(|row| row.map(|v| v / s));
        let h = Self { m };
        if h.det().abs() <= T::of(MIN_DET) {
            return Err(Error::InvalidParameter("singular homography".into()));
        }
        Ok(h)
    }

    #[inline]
    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    /// Row-major coefficients as `f64`, for recording in metadata.
    pub fn coefficients(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, v) in self.m.iter().flatten().enumerate() {
            out[i] = v.to_f64_lossy();
        }
        out
    }

    pub fn from_coefficients(c: [f64; 9]) -> Result<Self> {
        Self::from_matrix([
            [T::of(c[0]), T::of(c[1]), T::of(c[2])],
            [T::of(c[3]), T::of(c[4]), T::of(c[5])],
            [T::of(c[6]), T::of(c[7]), T::of(c[8])],
        ])
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let det = self.det();
        if det.abs() <= T::of(MIN_DET) {
            return Err(Error::InvalidParameter("singular homography".into()));
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Self::from_matrix(adj.map(|row| row.map(|v| v / det)))
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let (a, b) = (&self.m, &other.m);
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Self::from_matrix(out)
    }

    /// Homogeneous weight `w` of `m · (x, y, 1)`.
    #[inline]
    pub fn weight(&self, x: T, y: T) -> T {
        self.m[2][0] * x + self.m[2][1] * y + self.m[2][2]
    }

    #[inline]
    pub fn apply(&self, p: Point<T>) -> Point<T> {
        let m = &self.m;
        let w = self.weight(p.x, p.y);
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }
}

/// Solve the homography mapping `src[i] -> dst[i]` exactly for four
/// correspondences (8 unknowns, `m[2][2] = 1`), by Gaussian elimination with
/// partial pivoting.
pub fn homography_from_corners<T: Real>(src: &[Point<T>; 4], dst: &[Point<T>; 4]) -> Result<Homography<T>> {
    for (name, pts) in [("source", src), ("destination", dst)] {
        if let Some(idx) = collinear_triple(pts) {
            return Err(Error::DegenerateCorners(format!(
                "{name} points {idx:?} are collinear"
            )));
        }
    }

    let mut a = [[T::zero(); 9]; 8];
    for i in 0..4 {
        let (x, y) = (src[i].x, src[i].y);
        let (u, v) = (dst[i].x, dst[i].y);
        let (o, z) = (T::one(), T::zero());
        a[2 * i] = [x, y, o, z, z, z, -x * u, -y * u, u];
        a[2 * i + 1] = [z, z, z, x, y, o, -x * v, -y * v, v];
    }
    let h = solve_8x8(a)
        .ok_or_else(|| Error::DegenerateCorners("singular 8x8 correspondence system".into()))?;
    Homography::from_matrix([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]])
        .map_err(|e| Error::DegenerateCorners(e.to_string()))
}

fn collinear_triple<T: Real>(pts: &[Point<T>; 4]) -> Option<[usize; 3]> {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let scale = pts
        .iter()
        .flat_map(|p| [p.x.abs(), p.y.abs()])
        .fold(T::one(), T::max);
    let tol = T::epsilon() * T::of(64.0) * scale * scale;
    TRIPLES.into_iter().find(|&[i, j, k]| {
        let (a, b, c) = (pts[i], pts[j], pts[k]);
        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        cross.abs() <= tol
    })
}

/// Augmented 8x9 system `[A | b]`.
fn solve_8x8<T: Real>(mut a: [[T; 9]; 8]) -> Option<[T; 8]> {
    let scale = a
        .iter()
        .flat_map(|r| r[..8].iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let tol = scale * T::epsilon() * T::of(16.0);
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..9 {
                let d = f * a[col][k];
                a[row][k] = a[row][k] - d;
            }
        }
    }
    let mut x = [T::zero(); 8];
    for row in (0..8).rev() {
        let mut s = a[row][8];
        for k in row + 1..8 {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

/// Anything that can be sampled at integer pixel positions. Lets the warp read
/// from virtual rasters (e.g. the subpixel mosaic) without materializing them.
pub trait PixelSource<T>: Sync {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    /// In-bounds sample.
    fn sample(&self, c: usize, x: usize, y: usize) -> T;
}

impl<T: Real> PixelSource<T> for Image<T> {
    fn width(&self) -> usize {
        Image::width(self)
    }
    fn height(&self) -> usize {
        Image::height(self)
    }
    fn channels(&self) -> usize {
        Image::channels(self)
    }
    #[inline]
    fn sample(&self, c: usize, x: usize, y: usize) -> T {
        self.get(c, x, y)
    }
}

/// Warp `img` by `h`: output pixel `(x, y)` is read from `img` at `h⁻¹ · (x, y)`.
/// Pixel centers sit on integer coordinates; anything outside the source is 0.
pub fn warp_projective<T: Real>(
    img: &Image<T>,
    h: &Homography<T>,
    out_width: usize,
    out_height: usize,
    interp: Interpolation,
) -> Result<Image<T>> {
    warp_source(img, h, out_width, out_height, interp)
}

pub fn warp_source<T: Real, S: PixelSource<T>>(
    src: &S,
    h: &Homography<T>,
    out_width: usize,
    out_height: usize,
    interp: Interpolation,
) -> Result<Image<T>> {
    Ok(resample_projective(src, &h.inverse()?, out_width, out_height, interp))
}

/// Like [`warp_source`], but `sampling` maps output coordinates straight to
/// source coordinates (no inversion).
pub fn resample_projective<T: Real, S: PixelSource<T>>(
    src: &S,
    sampling: &Homography<T>,
    out_width: usize,
    out_height: usize,
    interp: Interpolation,
) -> Image<T> {
    let inv = sampling;
    let channels = src.channels();
    let plane = out_width * out_height;
    let mut data = vec![T::zero(); plane * channels];
    data.par_chunks_mut(out_width)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let c = row_idx / out_height;
            let y = row_idx % out_height;
            let yf = T::of(y as f64);
            for (x, out) in row.iter_mut().enumerate() {
                let p = inv.apply(Point::new(T::of(x as f64), yf));
                *out = match interp {
                    Interpolation::Nearest => nearest(src, c, p),
                    Interpolation::Bilinear => bilinear(src, c, p),
                };
            }
        });
    Image::from_clamped(out_width, out_height, channels, data)
}

/// Box-integrate each output pixel: average `per_axis x per_axis` bilinear
/// samples spread evenly over the pixel's unit footprint, read through
/// `sampling` (output -> source). With `per_axis == 1` this is exactly
/// [`resample_projective`] with bilinear interpolation.
pub fn resample_projective_area<T: Real, S: PixelSource<T>>(
    src: &S,
    sampling: &Homography<T>,
    out_width: usize,
    out_height: usize,
    per_axis: usize,
) -> Image<T> {
    let n = per_axis.max(1);
    let offsets: Vec<T> = (0..n).map(|i| T::of((i as f64 + 0.5) / n as f64 - 0.5)).collect();
    let norm = T::of((n * n) as f64);
    let channels = src.channels();
    let mut data = vec![T::zero(); out_width * out_height * channels];
    data.par_chunks_mut(out_width)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let c = row_idx / out_height;
            let y = T::of((row_idx % out_height) as f64);
            for (x, out) in row.iter_mut().enumerate() {
                let x = T::of(x as f64);
                let mut acc = T::zero();
                for &dy in &offsets {
                    for &dx in &offsets {
                        acc = acc + bilinear(src, c, sampling.apply(Point::new(x + dx, y + dy)));
                    }
                }
                *out = acc / norm;
            }
        });
    Image::from_clamped(out_width, out_height, channels, data)
}

#[inline]
fn fetch<T: Real, S: PixelSource<T>>(src: &S, c: usize, x: i64, y: i64) -> T {
    if x < 0 || y < 0 || x >= src.width() as i64 || y >= src.height() as i64 {
        T::zero()
    } else {
        src.sample(c, x as usize, y as usize)
    }
}

#[inline]
fn nearest<T: Real, S: PixelSource<T>>(src: &S, c: usize, p: Point<T>) -> T {
    if !p.x.is_finite() || !p.y.is_finite() {
        return T::zero();
    }
    let half = T::of(0.5);
    let (x, y) = ((p.x + half).floor(), (p.y + half).floor());
    match (x.to_i64(), y.to_i64()) {
        (Some(x), Some(y)) => fetch(src, c, x, y),
        _ => T::zero(),
    }
}

#[inline]
fn bilinear<T: Real, S: PixelSource<T>>(src: &S, c: usize, p: Point<T>) -> T {
    let (w, h) = (T::of(src.width() as f64), T::of(src.height() as f64));
    let one = T::one();
    if !(p.x > -one && p.y > -one && p.x < w && p.y < h) {
        return T::zero();
    }
    let (x0, y0) = (p.x.floor(), p.y.floor());
    let (fx, fy) = (p.x - x0, p.y - y0);
    let (xi, yi) = (x0.to_i64().unwrap_or(-1), y0.to_i64().unwrap_or(-1));
    let top = (one - fx) * fetch(src, c, xi, yi) + fx * fetch(src, c, xi + 1, yi);
    if fy == T::zero() {
        return top;
    }
    let bottom = (one - fx) * fetch(src, c, xi, yi + 1) + fx * fetch(src, c, xi + 1, yi + 1);
    (one - fy) * top + fy * bottom
}
