//! Fidelity metrics (PSNR, SSIM), per-class evaluation of a submission, and
//! leaderboard ranking.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::ContentClass;
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::image::ImageU8;
use crate::io::read_image;

/// PSNR reported for identical images, and the ceiling for all others.
pub const PSNR_CAP: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

fn check_dims(a: &ImageU8, b: &ImageU8) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &ImageU8, b: &ImageU8) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.data().len() as f64)
}

/// `10·log10(255² / MSE)` over every sample, capped at [`PSNR_CAP`].
pub fn psnr(a: &ImageU8, b: &ImageU8) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (PEAK * PEAK / m).log10()).min(PSNR_CAP))
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / s).collect()
}

/// Separable 'valid' filtering: output is `(w - k + 1) x (h - k + 1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, t) in taps.iter().enumerate() {
                acc += t * tmp[(y + j) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize, taps: &[f64]) -> f64 {
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, taps);
    let mu_b = filter_valid(b, w, h, taps);
    let e_aa = filter_valid(&aa, w, h, taps);
    let e_bb = filter_valid(&bb, w, h, taps);
    let e_ab = filter_valid(&ab, w, h, taps);
    let n = mu_a.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let mab = ma * mb;
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - mab;
        let num = (2.0 * mab + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        sum += num / den;
    }
    sum / n as f64
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, averaged over the valid window positions of each
/// channel and then across channels.
pub fn ssim(a: &ImageU8, b: &ImageU8) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let taps = ssim_window();
    let plane = |img: &ImageU8, c: usize| -> Vec<f64> {
        img.data().iter().skip(c).step_by(ch).map(|&v| v as f64).collect()
    };
    let total: f64 = (0..ch)
        .map(|c| ssim_plane(&plane(a, c), &plane(b, c), w, h, &taps))
        .sum();
    Ok(total / ch as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub psnr: f64,
    pub ssim: f64,
}

impl ScorePair {
    pub fn compute(result: &ImageU8, truth: &ImageU8) -> Result<Self> {
        Ok(Self {
            psnr: psnr(result, truth)?,
            ssim: ssim(result, truth)?,
        })
    }

    /// Arithmetic mean of each metric.
    pub fn mean<'a>(scores: impl IntoIterator<Item = &'a ScorePair>) -> Option<Self> {
        let (mut p, mut s, mut n) = (0.0, 0.0, 0usize);
        for sc in scores {
            p += sc.psnr;
            s += sc.ssim;
            n += 1;
        }
        (n > 0).then(|| Self {
            psnr: p / n as f64,
            ssim: s / n as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub id: String,
    pub content_class: ContentClass,
    #[serde(flatten)]
    pub score: ScorePair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: String,
    pub overall: ScorePair,
    pub per_class: BTreeMap<ContentClass, ScorePair>,
    pub counts: BTreeMap<ContentClass, usize>,
    pub per_image: Vec<ImageScore>,
}

impl EvaluationReport {
    pub fn from_scores(per_image: Vec<ImageScore>) -> Result<Self> {
        let overall = ScorePair::mean(per_image.iter().map(|s| &s.score))
            .ok_or_else(|| Error::DegenerateInput("no images to evaluate".into()))?;
        let mut per_class = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for class in ContentClass::ALL {
            let scores: Vec<&ScorePair> = per_image
                .iter()
                .filter(|s| s.content_class == class)
                .map(|s| &s.score)
                .collect();
            counts.insert(class, scores.len());
            if let Some(mean) = ScorePair::mean(scores) {
                per_class.insert(class, mean);
            }
        }
        Ok(Self {
            version: crate::FORMAT_VERSION.to_string(),
            overall,
            per_class,
            counts,
            per_image,
        })
    }

    /// Recompute every aggregate from `per_image` and compare.
    pub fn check_consistency(&self) -> Result<()> {
        let fresh = Self::from_scores(self.per_image.clone())?;
        let close = |a: &ScorePair, b: &ScorePair| {
            (a.psnr - b.psnr).abs() <= 1e-9 * a.psnr.abs().max(1.0)
                && (a.ssim - b.ssim).abs() <= 1e-12
        };
        let classes_ok = fresh.per_class.len() == self.per_class.len()
            && fresh
                .per_class
                .iter()
                .all(|(k, v)| self.per_class.get(k).is_some_and(|s| close(s, v)));
        if !close(&fresh.overall, &self.overall) || !classes_ok || fresh.counts != self.counts {
            return Err(Error::DegenerateInput(
                "report aggregates disagree with per-image scores".into(),
            ));
        }
        Ok(())
    }

    /// Overall and per-class rows, aligned.
    pub fn to_table(&self) -> Result<String> {
        self.check_consistency()?;
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>5} {:>8} {:>7}", "Class", "N", "PSNR", "SSIM");
        for class in ContentClass::ALL {
            let n = self.counts.get(&class).copied().unwrap_or(0);
            match self.per_class.get(&class) {
                Some(s) => {
                    let _ = writeln!(out, "{:<8} {:>5} {:>8.2} {:>7.4}", class.short(), n, s.psnr, s.ssim);
                }
                None => {
                    let _ = writeln!(out, "{:<8} {:>5} {:>8} {:>7}", class.short(), n, "-", "-");
                }
            }
        }
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>8.2} {:>7.4}",
            "All",
            self.per_image.len(),
            self.overall.psnr,
            self.overall.ssim
        );
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        self.check_consistency()?;
        Ok(serde_json::to_string_pretty(self).expect("report serializes"))
    }
}

/// Score `results_dir/<id>.png` against `gt_dir/<id>.png` for every test
/// entry in the manifest.
pub fn evaluate_submission(results_dir: &Path, gt_dir: &Path, manifest: &DatasetManifest) -> Result<EvaluationReport> {
    let entries: Vec<_> = manifest.entries.iter().filter(|e| e.split == Split::Test).collect();
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| !results_dir.join(format!("{}.png", e.id)).is_file())
        .map(|e| e.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingResults(missing));
    }
    let per_image = entries
        .par_iter()
        .map(|e| {
            let result = read_image(results_dir.join(format!("{}.png", e.id)))?;
            let truth = read_image(gt_dir.join(format!("{}.png", e.id)))?;
            let score = ScorePair::compute(&result, &truth).map_err(|err| match err {
                Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{}: {m}", e.id)),
                other => other,
            })?;
            Ok(ImageScore {
                id: e.id.clone(),
                content_class: e.content_class,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvaluationReport::from_scores(per_image)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKey {
    Psnr,
    Mos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
    pub mos: Option<f64>,
}

impl LeaderboardEntry {
    pub fn from_report(name: impl Into<String>, report: &EvaluationReport) -> Self {
        Self {
            name: name.into(),
            psnr: report.overall.psnr,
            ssim: report.overall.ssim,
            mos: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub rank: usize,
    #[serde(flatten)]
    pub entry: LeaderboardEntry,
}

/// Sort descending by `key`, then SSIM, then name ascending.
pub fn leaderboard(entries: Vec<LeaderboardEntry>, key: RankKey) -> Vec<RankedRow> {
    let mut entries = entries;
    let primary = |e: &LeaderboardEntry| match key {
        RankKey::Psnr => e.psnr,
        RankKey::Mos => e.mos.unwrap_or(f64::NEG_INFINITY),
    };
    entries.sort_by(|a, b| {
        primary(b)
            .total_cmp(&primary(a))
            .then(b.ssim.total_cmp(&a.ssim))
            .then_with(|| a.name.cmp(&b.name))
    });
    entries
        .into_iter()
        .enumerate()
        .map(|(i, entry)| RankedRow { rank: i + 1, entry })
        .collect()
}

/// Team / PSNR / SSIM columns, plus MOS when any row has one.
pub fn format_leaderboard(rows: &[RankedRow]) -> String {
    let with_mos = rows.iter().any(|r| r.entry.mos.is_some());
    let name_w = rows.iter().map(|r| r.entry.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = write!(out, "{:>4}  {:<name_w$}  {:>7}  {:>6}", "Rank", "Team", "PSNR", "SSIM");
    if with_mos {
        let _ = write!(out, "  {:>6}", "MOS");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{:>4}  {:<name_w$}  {:>7.2}  {:>6.2}",
            r.rank, r.entry.name, r.entry.psnr, r.entry.ssim
        );
        if with_mos {
            match r.entry.mos {
                Some(m) => {
                    let _ = write!(out, "  {m:>6.0}");
                }
                None => {
                    let _ = write!(out, "  {:>6}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
