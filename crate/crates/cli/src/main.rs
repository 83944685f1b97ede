use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use moirebench_core::classify::{classify_frequency, content_with_count, ContentThresholds, FrequencyBands};
use moirebench_core::dataset::{
    build_dataset, verify_dataset, BuildOptions, DatasetConfig, DatasetManifest, Regenerate, SplitSpec,
    VerificationReport, VerifyOptions, MANIFEST_FILE,
};
use moirebench_core::io::read_image;
use moirebench_core::iqa::{evaluate_submission, format_leaderboard, leaderboard, EvaluationReport, LeaderboardEntry, RankKey};
use moirebench_core::mos::{create_study, select_image_ids, MosSession, Submission, DEFAULT_IMAGES, DEFAULT_JUDGES};
use moirebench_core::samples::write_sample_sources;
use moirebench_core::ImageF;
use moirebench_server::ServerOptions;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "moirebench", version, about = "Synthetic LCD-moire dataset builder and demoireing benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a balanced moire/clean dataset from a directory of source images
    Generate(GenerateArgs),
    /// Score a results directory against ground truth
    Evaluate(EvaluateArgs),
    /// Rank several evaluation reports
    Leaderboard(LeaderboardArgs),
    /// Print the content class of an image or the frequency group of a pattern
    Classify(ClassifyArgs),
    /// Check a built dataset against its manifest
    Verify(VerifyArgs),
    /// Write synthetic text, figure and mixed source pages
    Samples(SamplesArgs),
    /// Perceptual study: create, serve and export
    #[command(subcommand)]
    Mos(MosCommand),
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML dataset config; omitted fields take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of source PNG/JPEG images
    #[arg(long)]
    source: PathBuf,
    /// Output directory (must be empty or absent)
    #[arg(long)]
    out: PathBuf,
    /// Master seed
    #[arg(long)]
    seed: u64,
    /// Split sizes as TRAIN/VAL/TEST, overriding the config
    #[arg(long)]
    split: Option<SplitArg>,
    /// Worker threads
    #[arg(long, env = "MOIREBENCH_JOBS")]
    jobs: Option<usize>,
    /// Regenerate every n-th entry while verifying the result (0 = none)
    #[arg(long, default_value_t = 10)]
    verify_every: usize,
    /// Suppress progress output
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone)]
struct SplitArg(SplitSpec);

impl FromStr for SplitArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split('/')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [train, val, test] => Ok(SplitArg(SplitSpec::new(train, val, test))),
            _ => Err(format!("expected TRAIN/VAL/TEST, got {s:?}")),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Machine,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory holding <id>.png for every test entry
    #[arg(long)]
    results: PathBuf,
    /// Ground-truth directory, usually <dataset>/test/clean
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct LeaderboardArgs {
    /// NAME=REPORT.json from `evaluate --format machine`
    #[arg(long = "report", required = true)]
    reports: Vec<String>,
    /// NAME=SCORE accumulated MOS for a team
    #[arg(long = "mos")]
    mos: Vec<String>,
    #[arg(long, value_enum, default_value = "psnr")]
    by: RankBy,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum RankBy {
    Psnr,
    Mos,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ClassifyTarget {
    /// Clean page: TextOnly / FigureOnly / Mixed
    #[arg(long)]
    image: Option<PathBuf>,
    /// Pattern-only image: Low / Mid / High
    #[arg(long)]
    pattern: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    target: ClassifyTarget,
    /// TOML dataset config supplying thresholds and band edges
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also print the pure-sample count or band powers
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dataset directory holding manifest.json
    #[arg(long)]
    dataset: PathBuf,
    /// none, all, or every:N
    #[arg(long, default_value = "none")]
    regenerate: RegenerateArg,
    /// Source directory when it moved since the build
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Clone)]
struct RegenerateArg(Regenerate);

impl FromStr for RegenerateArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(RegenerateArg(match s {
            "none" => Regenerate::None,
            "all" => Regenerate::All,
            _ => match s.strip_prefix("every:").map(str::parse::<usize>) {
                Some(Ok(n)) if n > 0 => Regenerate::Every(n),
                _ => return Err(format!("expected none, all or every:N, got {s:?}")),
            },
        }))
    }
}

#[derive(Args)]
struct SamplesArgs {
    #[arg(long)]
    out: PathBuf,
    /// Pages of each kind
    #[arg(long, default_value_t = 10)]
    per_class: usize,
    /// Page edge in pixels
    #[arg(long, default_value_t = 96)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum MosCommand {
    /// Write a study file with blinded, shuffled queries for every judge
    Create(MosCreateArgs),
    /// Serve the judging API for a study
    Serve(MosServeArgs),
    /// Unblinded per-method MOS and rating log
    Export(MosExportArgs),
}

#[derive(Args)]
struct MosCreateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Ground-truth directory, usually <dataset>/test/clean
    #[arg(long)]
    gt: PathBuf,
    /// NAME=DIR for each submission
    #[arg(long = "method", required = true)]
    methods: Vec<String>,
    /// Comma-separated test ids; picked automatically when omitted
    #[arg(long, value_delimiter = ',')]
    images: Vec<String>,
    /// Number of images to pick when --images is omitted
    #[arg(long, default_value_t = DEFAULT_IMAGES)]
    count: usize,
    /// Share of picked images taken from FigureOnly
    #[arg(long, default_value_t = 0.4)]
    figure_share: f64,
    /// Comma-separated judge ids; judge01.. when omitted
    #[arg(long, value_delimiter = ',')]
    judges: Vec<String>,
    /// Number of generated judge ids when --judges is omitted
    #[arg(long, default_value_t = DEFAULT_JUDGES)]
    judge_count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MosServeArgs {
    #[arg(long)]
    study: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Key required in the x-operator-key header for /api/export
    #[arg(long, env = "MOIREBENCH_OPERATOR_KEY", hide_env_values = true)]
    operator_key: Option<String>,
    /// Judging UI assets served at /
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MosExportArgs {
    #[arg(long)]
    study: PathBuf,
    /// Write the machine-readable export here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<moirebench_core::Error> for Failure {
    fn from(e: moirebench_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Ok(Err(Failure::Data(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DATA)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("internal error: {m}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Leaderboard(a) => rank(a),
        Command::Classify(a) => classify(a),
        Command::Verify(a) => verify(a),
        Command::Samples(a) => samples(a),
        Command::Mos(MosCommand::Create(a)) => mos_create(a),
        Command::Mos(MosCommand::Serve(a)) => mos_serve(a),
        Command::Mos(MosCommand::Export(a)) => mos_export(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<DatasetConfig, Failure> {
    let Some(path) = path else {
        return Ok(DatasetConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let cfg: DatasetConfig = toml::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn print_violations(report: &VerificationReport) {
    for v in &report.violations {
        eprintln!("  {}", serde_json::to_string(v).expect("violation serializes"));
    }
}

fn generate(a: GenerateArgs) -> CmdResult {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(SplitArg(split)) = a.split {
        cfg.split = split;
    }
    if a.jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let quiet = a.quiet;
    let progress = move |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let opts = BuildOptions {
        jobs: a.jobs,
        progress: Some(&progress),
    };
    let manifest = build_dataset(&a.source, &a.out, &cfg, a.seed, &opts)?;
    progress(format!("verifying {} entries", manifest.entries.len()));
    let regenerate = match a.verify_every {
        0 => Regenerate::None,
        n => Regenerate::Every(n),
    };
    let report = verify_dataset(
        &a.out,
        &manifest,
        &VerifyOptions {
            regenerate,
            source_dir: None,
        },
    );
    if !report.is_clean() {
        print_violations(&report);
        return Err(Failure::Data(format!(
            "built dataset failed verification with {} violation(s)",
            report.violations.len()
        )));
    }
    progress(format!(
        "wrote {} pairs to {} ({} regenerated and matched)",
        manifest.entries.len(),
        a.out.display(),
        report.regenerated
    ));
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let report = evaluate_submission(&a.results, &a.gt, &manifest)?;
    match a.format {
        Format::Table => print!("{}", report.to_table()?),
        Format::Machine => println!("{}", report.to_json()?),
    }
    Ok(())
}

fn name_value(arg: &str, flag: &str) -> Result<(String, String), Failure> {
    match arg.split_once('=') {
        Some((n, v)) if !n.is_empty() && !v.is_empty() => Ok((n.to_string(), v.to_string())),
        _ => Err(Failure::Usage(format!("{flag} expects NAME=VALUE, got {arg:?}"))),
    }
}

fn rank(a: LeaderboardArgs) -> CmdResult {
    let mut mos = std::collections::BTreeMap::new();
    for m in &a.mos {
        let (name, v) = name_value(m, "--mos")?;
        let v: f64 = v.parse().map_err(|_| Failure::Usage(format!("--mos {m:?}: not a number")))?;
        mos.insert(name, v);
    }
    let mut entries = Vec::new();
    for r in &a.reports {
        let (name, path) = name_value(r, "--report")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Failure::Data(format!("{path}: {e}")))?;
        let report: EvaluationReport =
            serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{path}: {e}")))?;
        let mut entry = LeaderboardEntry::from_report(&name, &report);
        entry.mos = mos.remove(&name);
        entries.push(entry);
    }
    if let Some(name) = mos.keys().next() {
        return Err(Failure::Usage(format!("--mos for {name:?} has no matching --report")));
    }
    let key = match a.by {
        RankBy::Psnr => RankKey::Psnr,
        RankBy::Mos => RankKey::Mos,
    };
    if key == RankKey::Mos && entries.iter().any(|e| e.mos.is_none()) {
        return Err(Failure::Usage("ranking by MOS needs --mos for every report".into()));
    }
    let rows = leaderboard(entries, key);
    match a.format {
        Format::Table => print!("{}", format_leaderboard(&rows)),
        Format::Machine => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
    }
    Ok(())
}

fn classify(a: ClassifyArgs) -> CmdResult {
    let cfg = load_config(a.config.as_deref())?;
    let th: ContentThresholds = cfg.content_thresholds;
    let bands: FrequencyBands = cfg.frequency_bands;
    if let Some(path) = &a.target.image {
        let img: ImageF = read_image(path)?.to_float();
        let img = if img.channels() == 1 {
            ImageF::from_fn(img.width(), img.height(), 3, |_, x, y| img.get(0, x, y))
        } else {
            img
        };
        let (class, count) = content_with_count(&img, &th)?;
        println!("{class}");
        if a.verbose {
            let total = ContentThresholds::total_subpixels(img.width(), img.height());
            eprintln!("pure samples: {count} of {total}");
        }
    } else if let Some(path) = &a.target.pattern {
        let img: ImageF = read_image(path)?.to_float();
        let img = if img.channels() == 1 { img } else { img.luminance() };
        let group = classify_frequency(&img, &bands)?;
        println!("{group}");
        if a.verbose {
            let p = moirebench_core::classify::band_powers(&img, &bands)?;
            eprintln!("band power low/mid/high: {:.6e} {:.6e} {:.6e}", p[0], p[1], p[2]);
        }
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> CmdResult {
    let manifest = DatasetManifest::load(a.dataset.join(MANIFEST_FILE))?;
    let report = verify_dataset(
        &a.dataset,
        &manifest,
        &VerifyOptions {
            regenerate: a.regenerate.0,
            source_dir: a.source,
        },
    );
    match a.format {
        Format::Table => {
            println!(
                "checked {} entries, regenerated {}, {} violation(s)",
                report.entries_checked,
                report.regenerated,
                report.violations.len()
            );
            for v in &report.violations {
                println!("  {}", serde_json::to_string(v).expect("violation serializes"));
            }
        }
        Format::Machine => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Data("dataset failed verification".into()))
    }
}

fn samples(a: SamplesArgs) -> CmdResult {
    let written = write_sample_sources(&a.out, a.per_class, a.size, a.seed)?;
    eprintln!("wrote {} pages to {}", written.len(), a.out.display());
    Ok(())
}

fn mos_create(a: MosCreateArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let mut submissions = Vec::new();
    for m in &a.methods {
        let (name, dir) = name_value(m, "--method")?;
        submissions.push(Submission { name, dir });
    }
    let images = if a.images.is_empty() {
        select_image_ids(&manifest, a.count, a.figure_share, a.seed)?
    } else {
        a.images
    };
    let judges = if a.judges.is_empty() {
        (1..=a.judge_count).map(|i| format!("judge{i:02}")).collect()
    } else {
        a.judges
    };
    let study = create_study(&manifest, &a.gt, &submissions, &images, &judges, a.seed)?;
    study.save(&a.out)?;
    eprintln!(
        "study with {} methods x {} images x {} judges = {} queries written to {}",
        study.methods.len(),
        study.image_ids.len(),
        study.judges.len(),
        study.total_queries(),
        a.out.display()
    );
    Ok(())
}

fn mos_serve(a: MosServeArgs) -> CmdResult {
    let session = MosSession::open(&a.study)?;
    let opts = ServerOptions {
        operator_key: a.operator_key,
        static_dir: a.static_dir,
    };
    let app = moirebench_server::router(session, &opts)?;
    let addr = SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Data(format!("cannot bind {addr}: {e}")))?;
        eprintln!("serving study {} on http://{addr}", a.study.display());
        moirebench_server::serve_on(listener, app)
            .await
            .map_err(|e| Failure::Internal(e.to_string()))
    })
}

fn mos_export(a: MosExportArgs) -> CmdResult {
    let session = MosSession::open(&a.study)?;
    let export = session.export();
    if let Some(out) = &a.out {
        std::fs::write(out, export.to_json()).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    }
    match (a.format, &a.out) {
        (Format::Machine, None) => print!("{}", export.to_json()),
        (Format::Table, _) => print!("{}", export.to_table()),
        (Format::Machine, Some(_)) => {}
    }
    Ok(())
}
