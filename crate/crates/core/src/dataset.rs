//! Balanced dataset construction, manifests and verification.
//!
//! Sources are classified by content and dealt into splits in equal thirds.
//! Each entry gets a seed derived from `(master_seed, split, index, attempt)`.
//! The pattern-only image is rendered first and classified by frequency; while
//! a split's frequency groups are further apart than the imbalance bound,
//! entries from the largest group are re-drawn with the next attempt number.
//! Full pairs are then generated in parallel and written as
//! `out/{train,val,test}/{clean,moire,pattern}/<id>.png` next to
//! `out/manifest.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{classify_frequency, content_with_count, ContentClass, ContentThresholds, FrequencyBands, FrequencyGroup};
use crate::error::{Error, Result};
use crate::image::{Image, ImageU8};
use crate::io::{read_image, write_png};
use crate::pipeline::{check_source, generate_pair, pattern_for_seed, PipelineConfig, PortableRng};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Re-draws allowed per entry while rebalancing frequency groups.
pub const MAX_REBALANCE_ATTEMPTS: u32 = 64;

/// Attempts evaluated together when re-drawing one entry. Fixed so the
/// outcome does not depend on the thread count.
const ATTEMPT_BATCH: u32 = 8;

const SOURCE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown split {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 10_000,
            val: 100,
            test: 100,
        }
    }
}

impl SplitSpec {
    pub fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Per-class quota for a split of `n`: equal thirds, the remainder going to
/// Mixed first and then TextOnly.
pub fn class_quotas(n: usize) -> BTreeMap<ContentClass, usize> {
    let base = n / 3;
    let rem = n % 3;
    BTreeMap::from([
        (ContentClass::TextOnly, base + usize::from(rem >= 2)),
        (ContentClass::FigureOnly, base),
        (ContentClass::Mixed, base + usize::from(rem >= 1)),
    ])
}

/// Allowed `max - min` spread of frequency-group counts in a split of `n`:
/// `floor(fraction * n)`, but never below what an `n` not divisible by three
/// forces.
pub fn imbalance_bound(n: usize, fraction: f64) -> usize {
    let floor = (fraction * n as f64).floor() as usize;
    floor.max(usize::from(!n.is_multiple_of(3)))
}

/// Everything that shapes a build besides the paths and the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub split: SplitSpec,
    pub pipeline: PipelineConfig,
    pub content_thresholds: ContentThresholds,
    pub frequency_bands: FrequencyBands,
    /// Frequency-group spread allowed per split, as a fraction of its size.
    pub imbalance_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            pipeline: PipelineConfig::default(),
            content_thresholds: ContentThresholds::default(),
            frequency_bands: FrequencyBands::default(),
            imbalance_fraction: 0.1,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.content_thresholds.validate()?;
        self.frequency_bands.validate()?;
        if !(0.0..=1.0).contains(&self.imbalance_fraction) {
            return Err(Error::InvalidParameter(format!(
                "imbalance_fraction must be in [0, 1], got {}",
                self.imbalance_fraction
            )));
        }
        if self.split.total() < 3 {
            return Err(Error::InvalidParameter(format!(
                "content balancing needs at least 3 entries, got {}",
                self.split.total()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFiles {
    pub clean: String,
    pub moire: String,
    pub pattern: String,
}

impl EntryFiles {
    fn for_entry(split: Split, id: &str) -> Self {
        let f = |kind: &str| format!("{}/{kind}/{id}.png", split.name());
        Self {
            clean: f("clean"),
            moire: f("moire"),
            pattern: f("pattern"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &str)> {
        [("clean", self.clean.as_str()), ("moire", self.moire.as_str()), ("pattern", self.pattern.as_str())].into_iter()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    /// File name inside the manifest's `source_dir`.
    pub source: String,
    pub content_class: ContentClass,
    pub frequency_group: FrequencyGroup,
    pub seed: u64,
    /// Rebalancing attempt that produced `seed` (0 = first draw).
    pub attempt: u32,
    pub config_hash: String,
    pub files: EntryFiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub master_seed: u64,
    pub source_dir: String,
    pub split: SplitSpec,
    pub pipeline_config: PipelineConfig,
    pub content_thresholds: ContentThresholds,
    pub frequency_bands: FrequencyBands,
    pub imbalance_fraction: f64,
    /// Splits whose frequency groups could not be brought within bound.
    pub unbalanced_splits: Vec<Split>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
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
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn is_balanced(&self) -> bool {
        self.unbalanced_splits.is_empty()
    }
}

/// Deterministic per-entry seed.
pub fn entry_seed(master_seed: u64, split: Split, index: usize, attempt: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"moirebench/entry");
    h.update(master_seed.to_le_bytes());
    h.update(split.name().as_bytes());
    h.update((index as u64).to_le_bytes());
    h.update(attempt.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn class_shuffle_seed(master_seed: u64, class: ContentClass) -> u64 {
    let mut h = Sha256::new();
    h.update(b"moirebench/sources");
    h.update(master_seed.to_le_bytes());
    h.update(class.to_string().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Debug)]
pub struct ClassifiedSource {
    pub name: String,
    pub class: ContentClass,
    pub pure_samples: u64,
}

/// Image files directly inside `dir`, sorted by file name.
pub fn list_sources(dir: &Path) -> Result<Vec<String>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

fn load_source(dir: &Path, name: &str) -> Result<Image<f64>> {
    let img = read_image(dir.join(name))?;
    if img.channels() != 3 {
        let rgb: Vec<u8> = img.data().iter().flat_map(|&v| [v, v, v]).collect();
        return Ok(ImageU8::new(img.width(), img.height(), 3, rgb)?.to_float());
    }
    Ok(img.to_float())
}

/// Classify every source in `dir` (in parallel, results in name order).
pub fn classify_sources(dir: &Path, th: &ContentThresholds, pipeline: &PipelineConfig) -> Result<Vec<ClassifiedSource>> {
    let names = list_sources(dir)?;
    names
        .par_iter()
        .map(|name| {
            let img = load_source(dir, name)?;
            check_source(&img, pipeline).map_err(|e| match e {
                Error::TooSmall(m) => Error::TooSmall(format!("{}: {m}", dir.join(name).display())),
                other => other,
            })?;
            let (class, pure_samples) = content_with_count(&img, th)?;
            Ok(ClassifiedSource {
                name: name.clone(),
                class,
                pure_samples,
            })
        })
        .collect()
}

/// Deal sources to splits: per class, shuffle (seeded) and take test, then
/// val, then train quotas. Returns `(split, source name, class)` in entry
/// order; within a split entries run TextOnly, FigureOnly, Mixed.
pub fn assign_sources(
    sources: &[ClassifiedSource],
    split: &SplitSpec,
    master_seed: u64,
) -> Result<Vec<(Split, String, ContentClass)>> {
    let mut pools: BTreeMap<ContentClass, Vec<&str>> = BTreeMap::new();
    for s in sources {
        pools.entry(s.class).or_default().push(&s.name);
    }
    for class in ContentClass::ALL {
        let needed: usize = Split::ALL.iter().map(|&sp| class_quotas(split.count(sp))[&class]).sum();
        let pool = pools.entry(class).or_default();
        if pool.len() < needed {
            return Err(Error::InsufficientSources {
                class: class.to_string(),
                needed,
                available: pool.len(),
            });
        }
        pool.sort_unstable();
        pool.shuffle(&mut PortableRng::seed_from_u64(class_shuffle_seed(master_seed, class)));
    }

    let mut taken: BTreeMap<ContentClass, usize> = BTreeMap::new();
    let mut by_split: BTreeMap<Split, Vec<(Split, String, ContentClass)>> = BTreeMap::new();
    for sp in [Split::Test, Split::Val, Split::Train] {
        let quotas = class_quotas(split.count(sp));
        let mut rows = Vec::new();
        for class in ContentClass::ALL {
            let start = taken.entry(class).or_default();
            for name in &pools[&class][*start..*start + quotas[&class]] {
                rows.push((sp, name.to_string(), class));
            }
            *start += quotas[&class];
        }
        by_split.insert(sp, rows);
    }
    Ok(Split::ALL.iter().flat_map(|sp| by_split.remove(sp).unwrap_or_default()).collect())
}

#[derive(Clone, Debug)]
struct Plan {
    split: Split,
    index: usize,
    source: String,
    class: ContentClass,
    attempt: u32,
    seed: u64,
    group: FrequencyGroup,
    size: (usize, usize),
}

fn group_counts<'a>(plans: impl Iterator<Item = &'a Plan>) -> [usize; 3] {
    let mut c = [0; 3];
    for p in plans {
        c[p.group.index()] += 1;
    }
    c
}

fn spread(c: &[usize; 3]) -> usize {
    c.iter().max().unwrap() - c.iter().min().unwrap()
}

fn classify_attempt(plan: &Plan, cfg: &DatasetConfig, master_seed: u64, attempt: u32) -> Result<(u64, FrequencyGroup)> {
    let seed = entry_seed(master_seed, plan.split, plan.index, attempt);
    let pattern = pattern_for_seed::<f64>(plan.size.0, plan.size.1, &cfg.pipeline, seed)?;
    Ok((seed, classify_frequency(&pattern, &cfg.frequency_bands)?))
}

/// Re-draw entries of the largest group until the split is within bound.
/// Returns false when every candidate ran out of attempts.
fn rebalance_split(plans: &mut [Plan], cfg: &DatasetConfig, master_seed: u64, log: &dyn Fn(String)) -> Result<bool> {
    let n = plans.len();
    let bound = imbalance_bound(n, cfg.imbalance_fraction);
    let mut exhausted: BTreeSet<usize> = BTreeSet::new();
    loop {
        let counts = group_counts(plans.iter());
        if spread(&counts) <= bound {
            return Ok(true);
        }
        let max = *counts.iter().max().unwrap();
        let big = FrequencyGroup::ALL.into_iter().find(|g| counts[g.index()] == max).unwrap();
        // latest entry of the largest group that can still be re-drawn
        let Some(k) = (0..n).rev().find(|&k| plans[k].group == big && !exhausted.contains(&k)) else {
            return Ok(false);
        };
        let accept = |g: FrequencyGroup| counts[g.index()] + 2 <= max;
        let mut moved = false;
        while !moved && plans[k].attempt < MAX_REBALANCE_ATTEMPTS {
            let first = plans[k].attempt + 1;
            let last = (first + ATTEMPT_BATCH - 1).min(MAX_REBALANCE_ATTEMPTS);
            let tried = (first..=last)
                .into_par_iter()
                .map(|a| classify_attempt(&plans[k], cfg, master_seed, a).map(|r| (a, r)))
                .collect::<Result<Vec<_>>>()?;
            match tried.into_iter().find(|(_, (_, g))| accept(*g)) {
                Some((a, (seed, g))) => {
                    let p = &mut plans[k];
                    log(format!("{} {:05}: {} -> {} (attempt {a})", p.split, p.index, p.group, g));
                    p.attempt = a;
                    p.seed = seed;
                    p.group = g;
                    moved = true;
                }
                None => plans[k].attempt = last,
            }
        }
        if !moved {
            exhausted.insert(k);
        }
    }
}

pub fn entry_id(split: Split, index: usize) -> String {
    format!("{}_{index:05}", split.name())
}

/// Build options that do not affect the output.
#[derive(Default)]
pub struct BuildOptions<'a> {
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    pub progress: Option<&'a (dyn Fn(String) + Sync)>,
}

/// Build a balanced dataset from the images in `source_dir` into `out_dir`
/// (which must be empty or absent). Writes the manifest even when
/// rebalancing gives up, then reports [`Error::RebalanceExhausted`].
pub fn build_dataset(
    source_dir: &Path,
    out_dir: &Path,
    cfg: &DatasetConfig,
    master_seed: u64,
    opts: &BuildOptions<'_>,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    if !source_dir.is_dir() {
        return Err(Error::io(
            source_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "source directory not found"),
        ));
    }
    if out_dir.exists() {
        let mut rd = std::fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if rd.next().is_some() {
            return Err(Error::InvalidParameter(format!(
                "output directory {} is not empty",
                out_dir.display()
            )));
        }
    }
    match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| build_inner(source_dir, out_dir, cfg, master_seed, opts)),
        None => build_inner(source_dir, out_dir, cfg, master_seed, opts),
    }
}

fn build_inner(
    source_dir: &Path,
    out_dir: &Path,
    cfg: &DatasetConfig,
    master_seed: u64,
    opts: &BuildOptions<'_>,
) -> Result<DatasetManifest> {
    let log = |m: String| {
        if let Some(p) = opts.progress {
            p(m)
        }
    };
    let sources = classify_sources(source_dir, &cfg.content_thresholds, &cfg.pipeline)?;
    log(format!("classified {} sources", sources.len()));
    let assigned = assign_sources(&sources, &cfg.split, master_seed)?;

    let sizes: BTreeMap<String, (usize, usize)> = assigned
        .par_iter()
        .map(|(_, name, _)| {
            let img = read_image(source_dir.join(name))?;
            Ok((name.clone(), (img.width(), img.height())))
        })
        .collect::<Result<_>>()?;

    let mut index_in_split: BTreeMap<Split, usize> = BTreeMap::new();
    let mut plans: Vec<Plan> = assigned
        .into_iter()
        .map(|(split, source, class)| {
            let idx = index_in_split.entry(split).or_default();
            let index = *idx;
            *idx += 1;
            Plan {
                split,
                index,
                size: sizes[&source],
                source,
                class,
                attempt: 0,
                seed: 0,
                group: FrequencyGroup::Low,
            }
        })
        .collect();

    let first = plans
        .par_iter()
        .map(|p| classify_attempt(p, cfg, master_seed, 0))
        .collect::<Result<Vec<_>>>()?;
    for (p, (seed, g)) in plans.iter_mut().zip(first) {
        p.seed = seed;
        p.group = g;
    }
    log(format!("classified {} patterns", plans.len()));

    let mut unbalanced = Vec::new();
    for split in Split::ALL {
        let lo = plans.iter().position(|p| p.split == split);
        let Some(lo) = lo else { continue };
        let hi = lo + cfg.split.count(split);
        if !rebalance_split(&mut plans[lo..hi], cfg, master_seed, &log)? {
            log(format!("{split}: frequency groups still unbalanced"));
            unbalanced.push(split);
        }
    }

    for split in Split::ALL {
        for kind in ["clean", "moire", "pattern"] {
            let d = out_dir.join(split.name()).join(kind);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
    }

    let config_hash = cfg.pipeline.config_hash();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let total = plans.len();
    let entries = plans
        .par_iter()
        .map(|p| {
            let id = entry_id(p.split, p.index);
            let files = EntryFiles::for_entry(p.split, &id);
            let src = load_source(source_dir, &p.source)?;
            let pair = generate_pair(&src, &cfg.pipeline, p.seed)?;
            write_png(out_dir.join(&files.clean), &pair.clean.to_u8())?;
            write_png(out_dir.join(&files.moire), &pair.moire.to_u8())?;
            write_png(out_dir.join(&files.pattern), &pair.pattern_only.to_u8())?;
            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            if n.is_multiple_of(10) || n == total {
                log(format!("generated {n}/{total}"));
            }
            Ok(ManifestEntry {
                id,
                split: p.split,
                source: p.source.clone(),
                content_class: p.class,
                frequency_group: p.group,
                seed: p.seed,
                attempt: p.attempt,
                config_hash: config_hash.clone(),
                files,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        version: crate::FORMAT_VERSION.to_string(),
        master_seed,
        source_dir: source_dir.display().to_string(),
        split: cfg.split,
        pipeline_config: PipelineConfig {
            seed: master_seed,
            ..cfg.pipeline.clone()
        },
        content_thresholds: cfg.content_thresholds,
        frequency_bands: cfg.frequency_bands,
        imbalance_fraction: cfg.imbalance_fraction,
        unbalanced_splits: unbalanced.clone(),
        entries,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    if !unbalanced.is_empty() {
        return Err(Error::RebalanceExhausted(unbalanced.iter().map(|s| s.to_string()).collect()));
    }
    Ok(manifest)
}

/// Which entries to regenerate during verification.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Regenerate {
    #[default]
    None,
    All,
    /// Every `n`-th entry in manifest order, starting with the first.
    Every(usize),
    Ids(BTreeSet<String>),
}

impl Regenerate {
    fn wants(&self, pos: usize, id: &str) -> bool {
        match self {
            Regenerate::None => false,
            Regenerate::All => true,
            Regenerate::Every(n) => pos.is_multiple_of((*n).max(1)),
            Regenerate::Ids(ids) => ids.contains(id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { id: String },
    SourceInSeveralSplits { source: String, splits: Vec<Split> },
    MissingFile { id: String, path: String },
    UnreadableFile { id: String, path: String, message: String },
    Dimension { id: String, path: String, expected: [usize; 3], found: [usize; 3] },
    ConfigHash { id: String, expected: String, found: String },
    ClassImbalance { split: Split, counts: [usize; 3] },
    FrequencyImbalance { split: Split, counts: [usize; 3], bound: usize },
    RegenerationMismatch { id: String, file: String },
    RegenerationFailed { id: String, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries_checked: usize,
    pub regenerated: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub struct VerifyOptions {
    pub regenerate: Regenerate,
    /// Overrides the manifest's `source_dir` when regenerating.
    pub source_dir: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            regenerate: Regenerate::None,
            source_dir: None,
        }
    }
}

/// Check a built dataset against its manifest. Problems are collected into
/// the report, never returned as errors.
pub fn verify_dataset(dir: &Path, manifest: &DatasetManifest, opts: &VerifyOptions) -> VerificationReport {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    let mut source_splits: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
    for e in &manifest.entries {
        if !seen.insert(e.id.as_str()) {
            violations.push(Violation::DuplicateId { id: e.id.clone() });
        }
        source_splits.entry(&e.source).or_default().insert(e.split);
    }
    for (source, splits) in source_splits {
        if splits.len() > 1 {
            violations.push(Violation::SourceInSeveralSplits {
                source: source.to_string(),
                splits: splits.into_iter().collect(),
            });
        }
    }

    for split in Split::ALL {
        let entries: Vec<_> = manifest.split_entries(split).collect();
        if entries.is_empty() {
            continue;
        }
        let mut classes = [0; 3];
        let mut groups = [0; 3];
        for e in &entries {
            classes[ContentClass::ALL.iter().position(|&c| c == e.content_class).unwrap()] += 1;
            groups[e.frequency_group.index()] += 1;
        }
        if spread(&classes) > 1 {
            violations.push(Violation::ClassImbalance { split, counts: classes });
        }
        let bound = imbalance_bound(entries.len(), manifest.imbalance_fraction);
        if spread(&groups) > bound {
            violations.push(Violation::FrequencyImbalance {
                split,
                counts: groups,
                bound,
            });
        }
    }

    let expected_hash = manifest.pipeline_config.config_hash();
    let size = manifest.pipeline_config.output_size;
    let source_dir = opts
        .source_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&manifest.source_dir));

    let per_entry: Vec<(Vec<Violation>, bool)> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(pos, e)| {
            let mut v = Vec::new();
            if e.config_hash != expected_hash {
                v.push(Violation::ConfigHash {
                    id: e.id.clone(),
                    expected: expected_hash.clone(),
                    found: e.config_hash.clone(),
                });
            }
            let mut loaded: BTreeMap<&str, ImageU8> = BTreeMap::new();
            for (kind, rel) in e.files.iter() {
                let path = dir.join(rel);
                if !path.is_file() {
                    v.push(Violation::MissingFile {
                        id: e.id.clone(),
                        path: rel.to_string(),
                    });
                    continue;
                }
                match read_image(&path) {
                    Ok(img) => {
                        let expected = [size, size, if kind == "pattern" { 1 } else { 3 }];
                        let found = [img.width(), img.height(), img.channels()];
                        if found != expected {
                            v.push(Violation::Dimension {
                                id: e.id.clone(),
                                path: rel.to_string(),
                                expected,
                                found,
                            });
                        }
                        loaded.insert(kind, img);
                    }
                    Err(err) => v.push(Violation::UnreadableFile {
                        id: e.id.clone(),
                        path: rel.to_string(),
                        message: err.to_string(),
                    }),
                }
            }
            let regen = opts.regenerate.wants(pos, &e.id);
            if regen {
                match load_source(&source_dir, &e.source)
                    .and_then(|src| generate_pair(&src, &manifest.pipeline_config, e.seed))
                {
                    Ok(pair) => {
                        for (kind, fresh) in [
                            ("clean", pair.clean.to_u8()),
                            ("moire", pair.moire.to_u8()),
                            ("pattern", pair.pattern_only.to_u8()),
                        ] {
                            if loaded.get(kind).is_some_and(|disk| *disk != fresh) {
                                v.push(Violation::RegenerationMismatch {
                                    id: e.id.clone(),
                                    file: kind.to_string(),
                                });
                            }
                        }
                    }
                    Err(err) => v.push(Violation::RegenerationFailed {
                        id: e.id.clone(),
                        message: err.to_string(),
                    }),
                }
            }
            (v, regen)
        })
        .collect();

    let mut regenerated = 0;
    for (v, regen) in per_entry {
        violations.extend(v);
        regenerated += usize::from(regen);
    }
    VerificationReport {
        entries_checked: manifest.entries.len(),
        regenerated,
        violations,
    }
}
