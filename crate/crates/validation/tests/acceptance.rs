//! Headline properties of the toolkit, each checked at its stated tolerance.
//! Runs without the libtest harness so every line is printed, pass or fail.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use moirebench_core::classify::{
    band_powers, classify_frequency, content_with_count, ContentClass, ContentThresholds, FrequencyBands,
    FrequencyGroup,
};
use moirebench_core::dataset::{build_dataset, BuildOptions, DatasetConfig, Split, SplitSpec};
use moirebench_core::geometry::Point;
use moirebench_core::io::read_image;
use moirebench_core::iqa::{leaderboard, psnr, ssim, LeaderboardEntry, RankKey, SSIM_K1};
use moirebench_core::mos::{
    compute_mos, export_results, judge_queries, MosSession, MosStudy, Query, Rating, Submission,
};
use moirebench_core::pipeline::{
    alignment_ncc, canvas_corners, generate_pair, lcd_subpixel_mosaic, sample_projective_transform, PipelineConfig,
    PortableRng,
};
use moirebench_core::samples::{figure, mixed, text_page, write_sample_sources};
use moirebench_core::{HomographyF, ImageF, ImageU8};
use rand::{Rng, SeedableRng};
use serde_json::Value;
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn mosaic_mean_law() -> Outcome {
    let start = Instant::now();
    let mut rng = PortableRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let img = ImageF::from_fn(32, 32, 3, |_, _, _| rng.random::<f64>());
        let mosaic = lcd_subpixel_mosaic(&img).map_err(err)?;
        for (m, i) in mosaic.channel_means().iter().zip(img.channel_means()) {
            worst = worst.max((m - 2.0 / 9.0 * i).abs());
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    ensure(worst <= 1e-12, || format!("max deviation {worst:.3e}"))?;
    Ok(format!("100 images, max |mean - 2/9 mean| = {worst:.2e}, {:.2?}", start.elapsed()))
}

fn desk_config(train: usize, val: usize, test: usize) -> DatasetConfig {
    let mut cfg = DatasetConfig {
        split: SplitSpec::new(train, val, test),
        ..DatasetConfig::default()
    };
    cfg.pipeline.output_size = 64;
    cfg
}

fn darkening() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(err)?;
    let src = tmp.path().join("src");
    write_sample_sources(&src, 10, 96, 4).map_err(err)?;
    let out = tmp.path().join("ds");
    let manifest = build_dataset(&src, &out, &desk_config(24, 3, 3), 30, &BuildOptions::default()).map_err(err)?;
    ensure(manifest.entries.len() == 30, || format!("{} pairs", manifest.entries.len()))?;
    let mut worst_ratio = 0.0f64;
    for e in &manifest.entries {
        let clean = read_image(out.join(&e.files.clean)).map_err(err)?.to_float::<f64>().mean();
        let moire = read_image(out.join(&e.files.moire)).map_err(err)?.to_float::<f64>().mean();
        ensure(moire < clean, || format!("{}: moire mean {moire:.4} >= clean mean {clean:.4}", e.id))?;
        worst_ratio = worst_ratio.max(moire / clean);
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "30 pairs, max mean(moire)/mean(clean) = {worst_ratio:.3}, {:.2?}",
        start.elapsed()
    ))
}

fn corner_jitter() -> Outcome {
    let start = Instant::now();
    let mut rng = PortableRng::seed_from_u64(2);
    let corners = canvas_corners::<f64>(1024, 1024);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let h: HomographyF = sample_projective_transform(&mut rng, 1024, 1024, 0.2).map_err(err)?;
        for c in corners {
            let p: Point<f64> = h.apply(c);
            worst = worst.max((p.x - c.x).hypot(p.y - c.y));
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    // homography round-off on a 1024 px canvas
    ensure(worst <= 204.8 + 1e-9, || format!("max corner offset {worst}"))?;
    Ok(format!("10000 transforms, max corner offset {worst:.3} px, {:.2?}", start.elapsed()))
}

fn alignment() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig {
        noise_sigma: 0.0,
        jpeg_quality: 100,
        output_size: 64,
        ..PipelineConfig::default()
    };
    let mut worst = (f64::INFINITY, 0);
    for seed in 0..20u64 {
        let src = match seed % 3 {
            0 => text_page(96, 96, seed),
            1 => figure(96, 96, seed),
            _ => mixed(96, 96, seed),
        };
        let pair = generate_pair(&src, &cfg, seed).map_err(err)?;
        let ncc = alignment_ncc(&pair).map_err(err)?;
        if ncc < worst.0 {
            worst = (ncc, seed);
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    ensure(worst.0 > 0.95, || format!("seed {} NCC {:.4}", worst.1, worst.0))?;
    Ok(format!("20 seeds, min NCC {:.4} (seed {}), {:.2?}", worst.0, worst.1, start.elapsed()))
}

fn tree(root: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir)? {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").display().to_string();
                out.push((rel, std::fs::read(&path)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let src = tmp.path().join("src");
    write_sample_sources(&src, 7, 96, 5).map_err(err)?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = desk_config(12, 3, 3);
    build_dataset(&src, &a, &cfg, 77, &BuildOptions::default()).map_err(err)?;
    let two_jobs = BuildOptions {
        jobs: Some(2),
        progress: None,
    };
    build_dataset(&src, &b, &cfg, 77, &two_jobs).map_err(err)?;
    let (ta, tb) = (tree(&a).map_err(err)?, tree(&b).map_err(err)?);
    ensure(ta.len() == 55, || format!("{} files, expected 54 images + manifest", ta.len()))?;
    ensure(ta.iter().map(|f| &f.0).eq(tb.iter().map(|f| &f.0)), || "file lists differ".into())?;
    for ((name, x), (_, y)) in ta.iter().zip(&tb) {
        ensure(x == y, || format!("{name} differs"))?;
    }
    let bytes: usize = ta.iter().map(|f| f.1.len()).sum();
    Ok(format!("two 12/3/3 builds, {} files / {bytes} bytes identical", ta.len()))
}

fn content_anchors() -> Outcome {
    let th = ContentThresholds::default();
    let white = ImageF::filled(1024, 1024, 3, 1.0);
    let (class, count) = content_with_count(&white, &th).map_err(err)?;
    ensure((class, count) == (ContentClass::TextOnly, 3_145_728), || format!("white: {class} {count}"))?;
    let gray = ImageF::filled(1024, 1024, 3, 0.5);
    let (class, count) = content_with_count(&gray, &th).map_err(err)?;
    ensure((class, count) == (ContentClass::FigureOnly, 0), || format!("gray: {class} {count}"))?;
    // 400 pixels = 1200 samples: 900 is exactly 75 %, 300 exactly 25 %
    let with_pure = |pure: usize| ImageF::from_fn(400, 1, 3, |c, x, _| if x * 3 + c < pure { 1.0 } else { 0.5 });
    for (pure, want) in [
        (900, ContentClass::TextOnly),
        (899, ContentClass::Mixed),
        (301, ContentClass::Mixed),
        (300, ContentClass::FigureOnly),
    ] {
        let got = content_with_count(&with_pure(pure), &th).map_err(err)?.0;
        ensure(got == want, || format!("{pure}/1200 pure -> {got}, expected {want}"))?;
    }
    Ok("white 3145728 -> TextOnly, gray 0 -> FigureOnly, 900/899/301/300 of 1200 at the 75%/25% edges".into())
}

fn balance() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(err)?;
    let src = tmp.path().join("src");
    write_sample_sources(&src, 34, 96, 6).map_err(err)?;
    let manifest = build_dataset(&src, &tmp.path().join("ds"), &desk_config(0, 0, 100), 100, &BuildOptions::default())
        .map_err(err)?;
    let mut counts: BTreeMap<ContentClass, usize> = BTreeMap::new();
    for e in manifest.split_entries(Split::Test) {
        *counts.entry(e.content_class).or_default() += 1;
    }
    let mut sorted: Vec<usize> = counts.values().copied().collect();
    sorted.sort();
    ensure(sorted == [33, 33, 34], || format!("counts {counts:?}"))?;
    let freq = |g: FrequencyGroup| manifest.split_entries(Split::Test).filter(|e| e.frequency_group == g).count();
    Ok(format!(
        "test split T/F/M = {}/{}/{}, frequency L/M/H = {}/{}/{}, {:.2?}",
        counts[&ContentClass::TextOnly],
        counts[&ContentClass::FigureOnly],
        counts[&ContentClass::Mixed],
        freq(FrequencyGroup::Low),
        freq(FrequencyGroup::Mid),
        freq(FrequencyGroup::High),
        start.elapsed()
    ))
}

fn grating(size: usize, k: usize) -> ImageF {
    ImageF::from_fn(size, size, 1, |_, x, _| 0.5 + 0.3 * (2.0 * PI * (k * x) as f64 / size as f64).cos())
}

/// Band powers from a separable direct DFT, binned by radial frequency.
fn dft_band_powers(img: &ImageF, bands: &FrequencyBands) -> [f64; 3] {
    let (w, h) = (img.width(), img.height());
    let mean = img.mean();
    let twiddle = |n: usize| -> Vec<(f64, f64)> {
        (0..n).map(|t| {
            let a = -2.0 * PI * t as f64 / n as f64;
            (a.cos(), a.sin())
        }).collect()
    };
    let (tw, th) = (twiddle(w), twiddle(h));
    let mut rows = vec![(0.0, 0.0); w * h];
    for y in 0..h {
        for u in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for x in 0..w {
                let (c, s) = tw[(u * x) % w];
                let v = img.get(0, x, y) - mean;
                re += v * c;
                im += v * s;
            }
            rows[y * w + u] = (re, im);
        }
    }
    let mut power = [0.0; 3];
    for u in 0..w {
        for v in 0..h {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                let (c, s) = th[(v * y) % h];
                let (r, i) = rows[y * w + u];
                re += r * c - i * s;
                im += r * s + i * c;
            }
            if u == 0 && v == 0 {
                continue;
            }
            let signed = |k: usize, n: usize| if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
            let fx = signed(u, w) / w as f64;
            let fy = signed(v, h) / h as f64;
            let radial = fx.hypot(fy) / 0.5;
            let band = if radial < bands.low_mid {
                0
            } else if radial < bands.mid_high {
                1
            } else {
                2
            };
            power[band] += (re * re + im * im) / (w * h) as f64;
        }
    }
    power
}

fn frequency_classifier() -> Outcome {
    let bands = FrequencyBands::default();
    let n = 120;
    for (fraction, want) in [(0.1, FrequencyGroup::Low), (0.5, FrequencyGroup::Mid), (0.85, FrequencyGroup::High)] {
        let k = (fraction * n as f64 / 2.0).round() as usize;
        let img = grating(n, k);
        let got = classify_frequency(&img, &bands).map_err(err)?;
        ensure(got == want, || format!("{fraction} x Nyquist -> {got}, expected {want}"))?;
        let ours = band_powers(&img, &bands).map_err(err)?;
        let oracle = dft_band_powers(&img, &bands);
        for b in 0..3 {
            let scale = oracle.iter().sum::<f64>();
            ensure((ours[b] - oracle[b]).abs() <= 1e-9 * scale, || {
                format!("band {b} power {} vs oracle {}", ours[b], oracle[b])
            })?;
        }
    }
    let mut groups = Vec::new();
    for k in 1..n / 2 {
        let img = grating(n, k);
        let got = classify_frequency(&img, &bands).map_err(err)?;
        let oracle = dft_band_powers(&img, &bands);
        let oracle_group = moirebench_core::classify::dominant_band(oracle);
        ensure(got == oracle_group, || format!("k={k}: {got} vs oracle {oracle_group}"))?;
        groups.push(got);
    }
    let transitions = groups.windows(2).filter(|w| w[0] != w[1]).count();
    ensure(transitions == 2, || format!("{transitions} transitions in {groups:?}"))?;
    ensure(groups.first() == Some(&FrequencyGroup::Low) && groups.last() == Some(&FrequencyGroup::High), || {
        "sweep does not run Low -> High".into()
    })?;
    Ok(format!("0.1/0.5/0.85 -> Low/Mid/High, DFT oracle agrees, {transitions} transitions over 59 gratings"))
}

fn uniform(v: u8) -> ImageU8 {
    ImageU8::new(64, 64, 3, vec![v; 64 * 64 * 3]).expect("valid image")
}

fn iqa_closed_forms() -> Outcome {
    let base = uniform(100);
    let offset = uniform(116);
    let half = ImageU8::new(64, 64, 3, (0..64 * 64 * 3).map(|i| if i % 2 == 0 { 116 } else { 100 }).collect())
        .map_err(err)?;
    let full = psnr(&base, &offset).map_err(err)?;
    let halved = psnr(&base, &half).map_err(err)?;
    let same = psnr(&base, &base).map_err(err)?;

    let exact_full = 20.0 * (255.0f64 / 16.0).log10();
    let exact_half = 10.0 * (255.0f64 * 255.0 / 128.0).log10();
    ensure((full - exact_full).abs() <= 1e-6, || format!("offset PSNR {full} vs 20 log10(255/16)"))?;
    ensure((halved - exact_half).abs() <= 1e-6, || format!("half-offset PSNR {halved} vs 10 log10(255^2/128)"))?;
    ensure(same == 100.0, || format!("identical PSNR {same}"))?;

    let mut rng = PortableRng::seed_from_u64(3);
    let random = |rng: &mut PortableRng| {
        ImageU8::new(24, 24, 3, (0..24 * 24 * 3).map(|_| rng.random()).collect()).expect("valid image")
    };
    let a = random(&mut rng);
    ensure(ssim(&a, &a).map_err(err)? == 1.0, || "SSIM(x, x) != 1".into())?;
    for _ in 0..100 {
        let (a, b) = (random(&mut rng), random(&mut rng));
        let (ab, ba) = (ssim(&a, &b).map_err(err)?, ssim(&b, &a).map_err(err)?);
        ensure(ab == ba, || format!("SSIM asymmetric: {ab} vs {ba}"))?;
    }
    let c1 = (SSIM_K1 * 255.0).powi(2);
    let closed = (2.0 * 100.0 * 116.0 + c1) / (100.0f64.powi(2) + 116.0f64.powi(2) + c1);
    let got = ssim(&base, &offset).map_err(err)?;
    ensure((got - closed).abs() <= 1e-9, || format!("constant-offset SSIM {got} vs {closed}"))?;

    // the listed targets, checked literally
    let gaps: Vec<String> = [(full, 24.0475), (halved, 27.0578)]
        .iter()
        .filter(|(value, target)| (value - target).abs() > 1e-6)
        .map(|(value, target)| format!("{target} dB listed, exact formula gives {value:.6} dB"))
        .collect();
    ensure(gaps.is_empty(), || {
        format!(
            "{} (listed targets unreachable at 1e-6; closed forms, identical -> 100 dB and all SSIM checks pass)",
            gaps.join("; ")
        )
    })?;
    Ok(format!("PSNR {full:.6} / {halved:.6} / {same}, SSIM identity, symmetry x100, offset {got:.12}"))
}

fn leaderboard_order() -> Outcome {
    let entry = |name: &str, psnr: f64| LeaderboardEntry {
        name: name.into(),
        psnr,
        ssim: 0.9,
        mos: None,
    };
    let rows = leaderboard(vec![entry("c", 39.54), entry("a", 44.07), entry("b", 41.84)], RankKey::Psnr);
    let got: Vec<(usize, f64)> = rows.iter().map(|r| (r.rank, r.entry.psnr)).collect();
    ensure(got == [(1, 44.07), (2, 41.84), (3, 39.54)], || format!("{got:?}"))?;
    Ok("44.07 > 41.84 > 39.54".into())
}

fn study(methods: usize, images: usize, judges: usize, seed: u64) -> MosStudy {
    let ids: Vec<String> = (0..images).map(|i| format!("test_{i:05}")).collect();
    let judges: Vec<String> = (0..judges).map(|j| format!("judge{j:02}")).collect();
    MosStudy {
        version: moirebench_core::FORMAT_VERSION.into(),
        seed,
        methods: (0..methods)
            .map(|m| Submission {
                name: format!("team{m}"),
                dir: format!("/submissions/team{m}"),
            })
            .collect(),
        gt_dir: "/gt".into(),
        image_ids: ids.clone(),
        judges: judges.clone(),
        queries: judges.iter().map(|j| (j.clone(), judge_queries(methods, &ids, seed, j))).collect(),
    }
}

fn rate_all(s: &MosStudy, mut score: impl FnMut(&Query) -> i64) -> Vec<Rating> {
    let mut out = Vec::new();
    for (judge, qs) in &s.queries {
        for (i, q) in qs.iter().enumerate() {
            out.push(Rating {
                judge: judge.clone(),
                query_index: i,
                score: score(q),
                timestamp: 0,
            });
        }
    }
    out
}

fn mos_constants() -> Outcome {
    let s = study(7, 10, 10, 4);
    ensure(s.total_queries() == 700, || format!("{} queries", s.total_queries()))?;
    for (raw, want) in [(1, 100), (5, 500)] {
        // a judge who always means `raw` answers 6 - raw when the truth is on the right
        let ratings = rate_all(&s, |q| if q.flipped { 6 - raw } else { raw });
        let result = compute_mos(&s, &ratings);
        for (m, score) in &result.per_method {
            ensure(score.mos == want, || format!("all-{raw}: {m} scored {}", score.mos))?;
        }
    }
    let mut rng = PortableRng::seed_from_u64(5);
    let ratings = rate_all(&s, |_| rng.random_range(1..=5));
    let result = compute_mos(&s, &ratings);
    for (m, score) in &result.per_method {
        ensure((100..=500).contains(&score.mos), || format!("{m} scored {}", score.mos))?;
    }
    ensure(result.completeness == 1.0, || "random study incomplete".into())?;

    let mut hand = study(1, 2, 2, 0);
    for qs in hand.queries.values_mut() {
        qs.iter_mut().for_each(|q| q.flipped = false);
    }
    let scores = [3, 4, 1, 2];
    let mut it = scores.iter();
    let ratings = rate_all(&hand, |_| *it.next().expect("four queries"));
    let export = export_results(&hand, &ratings);
    ensure(export.ranking.len() == 1 && export.ranking[0].mos == 10, || format!("{:?}", export.ranking))?;
    Ok("700 queries, all-1 -> 100, all-5 -> 500, random within [100, 500], 2x2x1 {3,4,1,2} -> 10".into())
}

const FORBIDDEN_KEY_PARTS: [&str; 5] = ["flip", "method", "gt", "truth", "dir"];

fn scan(v: &Value, secrets: &[String], path: &str, found: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if FORBIDDEN_KEY_PARTS.iter().any(|p| k.contains(p)) {
                    found.push(format!("{path}: key {k}"));
                }
                scan(child, secrets, path, found);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| scan(c, secrets, path, found)),
        Value::String(s) => {
            if let Some(secret) = secrets.iter().find(|x| s.contains(x.as_str())) {
                found.push(format!("{path}: value mentions {secret:?}"));
            }
        }
        _ => {}
    }
}

async fn blinding_async() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut s = study(3, 2, 2, 8);
    s.gt_dir = tmp.path().join("gt").display().to_string();
    for m in &mut s.methods {
        m.dir = tmp.path().join(&m.name).display().to_string();
    }
    let img = ImageU8::new(4, 4, 3, vec![7; 48]).map_err(err)?;
    for dir in std::iter::once(&s.gt_dir).chain(s.methods.iter().map(|m| &m.dir)) {
        std::fs::create_dir_all(dir).map_err(err)?;
        for id in &s.image_ids {
            moirebench_core::io::write_png(Path::new(dir).join(format!("{id}.png")), &img).map_err(err)?;
        }
    }
    let mut secrets: Vec<String> = s.methods.iter().flat_map(|m| [m.name.clone(), m.dir.clone()]).collect();
    secrets.push(s.gt_dir.clone());
    secrets.extend(s.image_ids.iter().cloned());

    let opts = moirebench_server::ServerOptions {
        operator_key: Some("operator".into()),
        static_dir: None,
    };
    let app = moirebench_server::router(MosSession::in_memory(s.clone()), &opts).map_err(err)?;
    let call = |method: &'static str, uri: String, body: Option<String>| {
        let app = app.clone();
        async move {
            let mut req = Request::builder().method(method).uri(uri);
            if body.is_some() {
                req = req.header("content-type", "application/json");
            }
            let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).expect("request");
            let resp = app.oneshot(req).await.expect("infallible");
            let bytes = resp.into_body().collect().await.expect("body").to_bytes();
            serde_json::from_slice::<Value>(&bytes).unwrap_or(Value::Null)
        }
    };

    let mut responses = vec![
        ("study".to_string(), call("GET", "/api/study".into(), None).await),
        ("progress".to_string(), call("GET", "/api/progress".into(), None).await),
        ("export without key".to_string(), call("GET", "/api/export".into(), None).await),
    ];
    for judge in &s.judges {
        loop {
            let next = call("GET", format!("/api/judge/{judge}/next"), None).await;
            responses.push((format!("{judge} next"), next.clone()));
            if next["done"] == true {
                break;
            }
            let i = next["query_index"].as_u64().ok_or("next without query_index")?;
            let body = format!(r#"{{"query_index": {i}, "score": 2}}"#);
            let uri = format!("/api/judge/{judge}/rating");
            responses.push((format!("{judge} rate"), call("POST", uri.clone(), Some(body.clone())).await));
            responses.push((format!("{judge} re-rate"), call("POST", uri, Some(body)).await));
        }
    }
    responses.push(("progress after".into(), call("GET", "/api/progress".into(), None).await));

    let mut found = Vec::new();
    for (label, v) in &responses {
        scan(v, &secrets, label, &mut found);
    }
    ensure(found.is_empty(), || found.join("; "))?;
    Ok(format!("{} pre-export responses, no flip or method identity", responses.len()))
}

fn blinding() -> Outcome {
    tokio::runtime::Builder::new_current_thread()
        .build()
        .map_err(err)?
        .block_on(blinding_async())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("subpixel mosaic mean law", mosaic_mean_law),
        ("darkening over a 30-pair build", darkening),
        ("corner jitter bound", corner_jitter),
        ("alignment NCC", alignment),
        ("build determinism", determinism),
        ("content classifier anchors", content_anchors),
        ("100-entry content balance", balance),
        ("frequency classifier", frequency_classifier),
        ("PSNR/SSIM closed forms", iqa_closed_forms),
        ("leaderboard ordering", leaderboard_order),
        ("MOS protocol constants", mos_constants),
        ("API blinding", blinding),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
