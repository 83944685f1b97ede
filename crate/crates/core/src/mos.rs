//! Perceptual study engine: blinded side-by-side queries, 1-5 ratings and
//! accumulated mean-opinion scores.
//!
//! Every query shows the ground truth and one method's output for the same
//! image. Judges always answer "right image compared to left image"; with
//! `flipped == false` the ground truth is on the left, with `flipped == true`
//! it is on the right and the answer is mirrored (`6 - raw`) so that stored
//! scores always mean "method output relative to ground truth".

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::ContentClass;
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::pipeline::PortableRng;

pub const MIN_SCORE: i64 = 1;
pub const MAX_SCORE: i64 = 5;
pub const DEFAULT_IMAGES: usize = 10;
pub const DEFAULT_JUDGES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub name: String,
    /// Directory holding `<image id>.png` for every study image.
    pub dir: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// Index into [`MosStudy::methods`].
    pub method: usize,
    pub image_id: String,
    /// Ground truth shown on the right instead of the left.
    pub flipped: bool,
}

/// Which pane of a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosStudy {
    pub version: String,
    pub seed: u64,
    pub methods: Vec<Submission>,
    pub gt_dir: String,
    pub image_ids: Vec<String>,
    pub judges: Vec<String>,
    /// Per judge, in presentation order.
    pub queries: BTreeMap<String, Vec<Query>>,
}

fn derived_seed(tag: &str, seed: u64, extra: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(extra.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// One judge's queries: every (method, image) pair once, each with its own
/// fair coin for the flip (drawn in method-major order), then shuffled.
pub fn judge_queries(methods: usize, image_ids: &[String], seed: u64, judge: &str) -> Vec<Query> {
    let mut rng = PortableRng::seed_from_u64(derived_seed("moirebench/judge", seed, judge));
    let mut qs = Vec::with_capacity(methods * image_ids.len());
    for method in 0..methods {
        for id in image_ids {
            qs.push(Query {
                method,
                image_id: id.clone(),
                flipped: rng.random_bool(0.5),
            });
        }
    }
    qs.shuffle(&mut rng);
    qs
}

/// Set up a study over `image_ids` (test ids of `manifest`). Every
/// submission, and the ground truth, must hold each image.
pub fn create_study(
    manifest: &DatasetManifest,
    gt_dir: &Path,
    submissions: &[Submission],
    image_ids: &[String],
    judges: &[String],
    seed: u64,
) -> Result<MosStudy> {
    if submissions.is_empty() || image_ids.is_empty() || judges.is_empty() {
        return Err(Error::InvalidParameter(
            "a study needs at least one method, image and judge".into(),
        ));
    }
    let unique = |v: Vec<&str>, what: &str| -> Result<()> {
        let n = v.len();
        if v.into_iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::InvalidParameter(format!("duplicate {what}")));
        }
        Ok(())
    };
    unique(submissions.iter().map(|s| s.name.as_str()).collect(), "method name")?;
    unique(image_ids.iter().map(String::as_str).collect(), "image id")?;
    unique(judges.iter().map(String::as_str).collect(), "judge id")?;

    let test_ids: BTreeSet<&str> = manifest.split_entries(Split::Test).map(|e| e.id.as_str()).collect();
    for id in image_ids {
        if !test_ids.contains(id.as_str()) {
            return Err(Error::UnknownImageId(id.clone()));
        }
    }
    let queries = judges
        .iter()
        .map(|j| (j.clone(), judge_queries(submissions.len(), image_ids, seed, j)))
        .collect();
    let study = MosStudy {
        version: crate::FORMAT_VERSION.to_string(),
        seed,
        methods: submissions.to_vec(),
        gt_dir: gt_dir.display().to_string(),
        image_ids: image_ids.to_vec(),
        judges: judges.to_vec(),
        queries,
    };
    study.check_images()?;
    Ok(study)
}

/// Pick `count` test images, giving FigureOnly `figure_share` of the slots
/// and splitting the rest between Mixed and TextOnly (Mixed first). Classes
/// that run short are topped up from the others. Seeded and sorted by id.
pub fn select_image_ids(manifest: &DatasetManifest, count: usize, figure_share: f64, seed: u64) -> Result<Vec<String>> {
    let mut pools: BTreeMap<ContentClass, Vec<String>> = BTreeMap::new();
    for e in manifest.split_entries(Split::Test) {
        pools.entry(e.content_class).or_default().push(e.id.clone());
    }
    let available: usize = pools.values().map(Vec::len).sum();
    if available < count {
        return Err(Error::InvalidParameter(format!(
            "need {count} test images, manifest has {available}"
        )));
    }
    for (class, pool) in pools.iter_mut() {
        pool.sort();
        pool.shuffle(&mut PortableRng::seed_from_u64(derived_seed("moirebench/select", seed, &class.to_string())));
    }
    let figures = ((count as f64 * figure_share.clamp(0.0, 1.0)).ceil() as usize).min(count);
    let rest = count - figures;
    let mut want = BTreeMap::from([
        (ContentClass::FigureOnly, figures),
        (ContentClass::Mixed, rest - rest / 2),
        (ContentClass::TextOnly, rest / 2),
    ]);
    let mut picked = Vec::new();
    for class in [ContentClass::FigureOnly, ContentClass::Mixed, ContentClass::TextOnly] {
        let pool = pools.entry(class).or_default();
        let take = want[&class].min(pool.len());
        picked.extend(pool.drain(..take));
        *want.get_mut(&class).unwrap() -= take;
    }
    let mut short: usize = want.values().sum();
    for class in [ContentClass::FigureOnly, ContentClass::Mixed, ContentClass::TextOnly] {
        let pool = pools.entry(class).or_default();
        let take = short.min(pool.len());
        picked.extend(pool.drain(..take));
        short -= take;
    }
    picked.sort();
    Ok(picked)
}

impl MosStudy {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("study serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Every method, and the ground truth, must hold `<id>.png` for every
    /// study image.
    pub fn check_images(&self) -> Result<()> {
        let gt = Submission {
            name: "ground truth".into(),
            dir: self.gt_dir.clone(),
        };
        for sub in std::iter::once(&gt).chain(&self.methods) {
            for id in &self.image_ids {
                let path = Path::new(&sub.dir).join(format!("{id}.png"));
                if !path.is_file() {
                    return Err(Error::MissingImage {
                        method: sub.name.clone(),
                        id: id.clone(),
                        path,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn total_queries(&self) -> usize {
        self.queries.values().map(Vec::len).sum()
    }

    pub fn query(&self, judge: &str, index: usize) -> Result<&Query> {
        let qs = self.queries.get(judge).ok_or_else(|| Error::UnknownJudge(judge.to_string()))?;
        qs.get(index).ok_or_else(|| Error::UnknownQuery {
            judge: judge.to_string(),
            query_index: index,
        })
    }

    /// File shown on `side` of a query.
    pub fn image_path(&self, query: &Query, side: Side) -> PathBuf {
        let gt_side = if query.flipped { Side::Right } else { Side::Left };
        let dir = if side == gt_side {
            &self.gt_dir
        } else {
            &self.methods[query.method].dir
        };
        Path::new(dir).join(format!("{}.png", query.image_id))
    }

    /// Opaque, unguessable name for one pane of one query.
    pub fn image_token(&self, judge: &str, index: usize, side: Side) -> String {
        let mut h = Sha256::new();
        h.update(b"moirebench/token");
        h.update(self.seed.to_le_bytes());
        for m in &self.methods {
            h.update(m.dir.as_bytes());
            h.update([0]);
        }
        h.update(judge.as_bytes());
        h.update([0]);
        h.update((index as u64).to_le_bytes());
        h.update([side as u8]);
        hex::encode(&h.finalize()[..16])
    }

    /// Default ratings log next to the study file.
    pub fn log_path(study_path: &Path) -> PathBuf {
        let mut name = study_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".ratings.jsonl");
        study_path.with_file_name(name)
    }
}

/// One answer as the judge gave it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub judge: String,
    pub query_index: usize,
    /// "Right image compared to left image", 1-5.
    pub score: i64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Map a right-vs-left answer to method-vs-ground-truth.
pub fn normalized_score(query: &Query, raw: i64) -> i64 {
    if query.flipped {
        MIN_SCORE + MAX_SCORE - raw
    } else {
        raw
    }
}

/// A study plus its ratings, optionally persisted to an append-only log.
#[derive(Debug)]
pub struct MosSession {
    pub study: MosStudy,
    ratings: BTreeMap<(String, usize), Rating>,
    log: Option<PathBuf>,
}

impl MosSession {
    pub fn in_memory(study: MosStudy) -> Self {
        Self {
            study,
            ratings: BTreeMap::new(),
            log: None,
        }
    }

    /// Open with a ratings log, replaying whatever it already holds. A torn
    /// final line (crash mid-write) is ignored; later duplicates of an
    /// already-rated query are ignored.
    pub fn with_log(study: MosStudy, log: PathBuf) -> Result<Self> {
        let mut session = Self {
            study,
            ratings: BTreeMap::new(),
            log: None,
        };
        if log.exists() {
            let f = File::open(&log).map_err(|e| Error::io(&log, e))?;
            for line in BufReader::new(f).lines() {
                let line = line.map_err(|e| Error::io(&log, e))?;
                let Ok(r) = serde_json::from_str::<Rating>(&line) else {
                    continue;
                };
                if session.validate(&r.judge, r.query_index, r.score).is_ok() {
                    session.ratings.insert((r.judge.clone(), r.query_index), r);
                }
            }
        }
        session.log = Some(log);
        Ok(session)
    }

    pub fn open(study_path: &Path) -> Result<Self> {
        Self::with_log(MosStudy::load(study_path)?, MosStudy::log_path(study_path))
    }

    fn validate(&self, judge: &str, index: usize, score: i64) -> Result<()> {
        self.study.query(judge, index)?;
        if !(MIN_SCORE..=MAX_SCORE).contains(&score) {
            return Err(Error::ScoreOutOfRange(score));
        }
        if self.ratings.contains_key(&(judge.to_string(), index)) {
            return Err(Error::AlreadyRated {
                judge: judge.to_string(),
                query_index: index,
            });
        }
        Ok(())
    }

    /// Validate, append to the log (flushed to disk), then apply.
    pub fn record_rating(&mut self, judge: &str, index: usize, score: i64) -> Result<Rating> {
        self.validate(judge, index, score)?;
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let rating = Rating {
            judge: judge.to_string(),
            query_index: index,
            score,
            timestamp,
        };
        if let Some(log) = &self.log {
            let mut line = serde_json::to_string(&rating).expect("rating serializes");
            line.push('\n');
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(log)
                .map_err(|e| Error::io(log, e))?;
            f.write_all(line.as_bytes()).map_err(|e| Error::io(log, e))?;
            f.sync_data().map_err(|e| Error::io(log, e))?;
        }
        self.ratings.insert((judge.to_string(), index), rating.clone());
        Ok(rating)
    }

    pub fn ratings(&self) -> impl Iterator<Item = &Rating> {
        self.ratings.values()
    }

    pub fn is_rated(&self, judge: &str, index: usize) -> bool {
        self.ratings.contains_key(&(judge.to_string(), index))
    }

    /// First unrated query index for `judge`, in presentation order.
    pub fn next_query(&self, judge: &str) -> Result<Option<usize>> {
        let qs = self
            .study
            .queries
            .get(judge)
            .ok_or_else(|| Error::UnknownJudge(judge.to_string()))?;
        Ok((0..qs.len()).find(|&i| !self.is_rated(judge, i)))
    }

    pub fn judge_progress(&self, judge: &str) -> Result<(usize, usize)> {
        let total = self
            .study
            .queries
            .get(judge)
            .ok_or_else(|| Error::UnknownJudge(judge.to_string()))?
            .len();
        let rated = self.ratings.keys().filter(|(j, _)| j == judge).count();
        Ok((rated, total))
    }

    pub fn compute_mos(&self) -> MosResult {
        compute_mos(&self.study, self.ratings.values())
    }

    pub fn export(&self) -> MosExport {
        export_results(&self.study, self.ratings.values())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    /// Sum of normalized scores.
    pub mos: i64,
    pub rated: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosResult {
    pub per_method: BTreeMap<String, MethodScore>,
    pub rated: usize,
    pub total: usize,
    pub completeness: f64,
}

/// Accumulate normalized scores per method. Ratings for unknown queries are
/// skipped.
pub fn compute_mos<'a>(study: &MosStudy, ratings: impl IntoIterator<Item = &'a Rating>) -> MosResult {
    let mut per_method: BTreeMap<String, MethodScore> = study
        .methods
        .iter()
        .map(|m| (m.name.clone(), MethodScore { mos: 0, rated: 0, total: 0 }))
        .collect();
    for qs in study.queries.values() {
        for q in qs {
            per_method.get_mut(&study.methods[q.method].name).unwrap().total += 1;
        }
    }
    let mut rated = 0;
    for r in ratings {
        let Ok(q) = study.query(&r.judge, r.query_index) else {
            continue;
        };
        let entry = per_method.get_mut(&study.methods[q.method].name).unwrap();
        entry.mos += normalized_score(q, r.score);
        entry.rated += 1;
        rated += 1;
    }
    let total = study.total_queries();
    MosResult {
        per_method,
        rated,
        total,
        completeness: if total == 0 { 0.0 } else { rated as f64 / total as f64 },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosRow {
    pub rank: usize,
    pub method: String,
    pub mos: i64,
    pub rated: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedRating {
    pub judge: String,
    pub query_index: usize,
    pub method: String,
    pub image_id: String,
    pub flipped: bool,
    pub raw_score: i64,
    pub score: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosExport {
    pub version: String,
    pub completeness: f64,
    /// Methods with at least one rating, by MOS descending then name.
    pub ranking: Vec<MosRow>,
    /// Unblinded log ordered by judge, then query index.
    pub ratings: Vec<LoggedRating>,
}

impl MosExport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("export serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let w = self.ranking.iter().map(|r| r.method.len()).max().unwrap_or(4).max(4);
        let mut out = format!("{:>4}  {:<w$}  {:>5}  {:>9}\n", "Rank", "Team", "MOS", "Rated");
        for r in &self.ranking {
            out.push_str(&format!(
                "{:>4}  {:<w$}  {:>5}  {:>9}\n",
                r.rank,
                r.method,
                r.mos,
                format!("{}/{}", r.rated, r.total)
            ));
        }
        out.push_str(&format!("completeness {:.1}%\n", self.completeness * 100.0));
        out
    }
}

pub fn export_results<'a>(study: &MosStudy, ratings: impl IntoIterator<Item = &'a Rating>) -> MosExport {
    let mut ratings: Vec<&Rating> = ratings.into_iter().collect();
    ratings.sort_by(|a, b| (&a.judge, a.query_index).cmp(&(&b.judge, b.query_index)));
    let result = compute_mos(study, ratings.iter().copied());
    let mut rows: Vec<MosRow> = result
        .per_method
        .iter()
        .filter(|(_, s)| s.rated > 0)
        .map(|(name, s)| MosRow {
            rank: 0,
            method: name.clone(),
            mos: s.mos,
            rated: s.rated,
            total: s.total,
        })
        .collect();
    rows.sort_by(|a, b| b.mos.cmp(&a.mos).then_with(|| a.method.cmp(&b.method)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    let log = ratings
        .into_iter()
        .filter_map(|r| {
            let q = study.query(&r.judge, r.query_index).ok()?;
            Some(LoggedRating {
                judge: r.judge.clone(),
                query_index: r.query_index,
                method: study.methods[q.method].name.clone(),
                image_id: q.image_id.clone(),
                flipped: q.flipped,
                raw_score: r.score,
                score: normalized_score(q, r.score),
            })
        })
        .collect();
    MosExport {
        version: crate::FORMAT_VERSION.to_string(),
        completeness: result.completeness,
        ranking: rows,
        ratings: log,
    }
}
