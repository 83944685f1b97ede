use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use moirebench_core::classify::ContentClass;
use moirebench_core::dataset::{
    build_dataset, verify_dataset, BuildOptions, DatasetConfig, DatasetManifest, Regenerate, Split, SplitSpec,
    Violation, VerifyOptions, MANIFEST_FILE,
};
use moirebench_core::io::{read_image, write_png};
use moirebench_core::iqa::evaluate_submission;
use moirebench_core::pipeline::PortableRng;
use moirebench_core::samples::write_sample_sources;
use moirebench_core::{Error, ImageU8};
use rand::{Rng, SeedableRng};

fn desk_config() -> DatasetConfig {
    let mut cfg = DatasetConfig {
        split: SplitSpec::new(12, 3, 3),
        ..DatasetConfig::default()
    };
    cfg.pipeline.output_size = 64;
    cfg
}

struct Built {
    _tmp: tempfile::TempDir,
    src: PathBuf,
    out: PathBuf,
    manifest: DatasetManifest,
}

fn built() -> &'static Built {
    static BUILT: OnceLock<Built> = OnceLock::new();
    BUILT.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_sample_sources(&src, 7, 96, 3).unwrap();
        let out = tmp.path().join("ds");
        let manifest = build_dataset(&src, &out, &desk_config(), 21, &BuildOptions::default()).unwrap();
        Built {
            _tmp: tmp,
            src,
            out,
            manifest,
        }
    })
}

fn copy_tree(from: &Path, to: &Path) {
    for e in std::fs::read_dir(from).unwrap() {
        let path = e.unwrap().path();
        let dst = to.join(path.file_name().unwrap());
        if path.is_dir() {
            std::fs::create_dir_all(&dst).unwrap();
            copy_tree(&path, &dst);
        } else {
            std::fs::create_dir_all(to).unwrap();
            std::fs::copy(&path, &dst).unwrap();
        }
    }
}

#[test]
fn desk_build_is_balanced_and_clean() {
    let b = built();
    assert_eq!(b.manifest.entries.len(), 18);
    assert!(b.manifest.is_balanced());
    for split in [Split::Train, Split::Val, Split::Test] {
        let classes: Vec<ContentClass> = b.manifest.split_entries(split).map(|e| e.content_class).collect();
        let n = classes.len();
        for class in ContentClass::ALL {
            assert_eq!(classes.iter().filter(|&&c| c == class).count(), n / 3, "{split} {class}");
        }
    }
    let sources: BTreeSet<&str> = b.manifest.entries.iter().map(|e| e.source.as_str()).collect();
    assert_eq!(sources.len(), 18);

    let on_disk = DatasetManifest::load(b.out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(on_disk, b.manifest);
    let report = verify_dataset(
        &b.out,
        &b.manifest,
        &VerifyOptions {
            regenerate: Regenerate::All,
            source_dir: None,
        },
    );
    assert!(report.is_clean(), "{:?}", report.violations);
    assert_eq!(report.regenerated, 18);
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let b = built();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let opts = BuildOptions {
        jobs: Some(3),
        progress: None,
    };
    let m = build_dataset(&b.src, &out, &desk_config(), 21, &opts).unwrap();
    assert_eq!(m, b.manifest);
    for e in &m.entries {
        for (_, rel) in e.files.iter() {
            assert_eq!(std::fs::read(out.join(rel)).unwrap(), std::fs::read(b.out.join(rel)).unwrap(), "{rel}");
        }
    }
}

#[test]
fn deleted_file_is_one_violation() {
    let b = built();
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&b.out, tmp.path());
    let victim = &b.manifest.entries[4];
    std::fs::remove_file(tmp.path().join(&victim.files.pattern)).unwrap();
    let report = verify_dataset(tmp.path(), &b.manifest, &VerifyOptions::default());
    assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
    assert!(matches!(&report.violations[0], Violation::MissingFile { id, .. } if *id == victim.id));
}

#[test]
fn replaced_moire_fails_regeneration() {
    let b = built();
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&b.out, tmp.path());
    let victim = b.manifest.split_entries(Split::Val).next().unwrap();
    let path = tmp.path().join(&victim.files.moire);
    let orig = read_image(&path).unwrap();
    let mut rng = PortableRng::seed_from_u64(9);
    let noise: Vec<u8> = (0..orig.data().len()).map(|_| rng.random()).collect();
    write_png(&path, &ImageU8::new(orig.width(), orig.height(), orig.channels(), noise).unwrap()).unwrap();

    let structural = verify_dataset(tmp.path(), &b.manifest, &VerifyOptions::default());
    assert!(structural.is_clean());
    let opts = VerifyOptions {
        regenerate: Regenerate::Ids([victim.id.clone()].into()),
        source_dir: Some(b.src.clone()),
    };
    let report = verify_dataset(tmp.path(), &b.manifest, &opts);
    assert_eq!(report.regenerated, 1);
    assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
    assert!(matches!(&report.violations[0], Violation::RegenerationMismatch { id, file } if *id == victim.id && file == "moire"));
}

#[test]
fn evaluates_moire_inputs_per_class() {
    let b = built();
    let report = evaluate_submission(&b.out.join("test/moire"), &b.out.join("test/clean"), &b.manifest).unwrap();
    assert_eq!(report.per_image.len(), 3);
    assert_eq!(report.counts.values().sum::<usize>(), 3);
    assert!(report.counts.values().all(|&n| n == 1));
    assert!(report.overall.psnr < 40.0 && report.overall.psnr > 0.0);
    report.check_consistency().unwrap();

    let perfect = evaluate_submission(&b.out.join("test/clean"), &b.out.join("test/clean"), &b.manifest).unwrap();
    assert_eq!(perfect.overall.psnr, 100.0);
    assert_eq!(perfect.overall.ssim, 1.0);
}

#[test]
fn refuses_non_empty_output() {
    let b = built();
    let err = build_dataset(&b.src, &b.out, &desk_config(), 21, &BuildOptions::default());
    assert!(err.is_err());
}

#[test]
fn too_few_sources_per_class() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    write_sample_sources(&src, 2, 96, 0).unwrap();
    let err = build_dataset(&src, &tmp.path().join("o"), &desk_config(), 1, &BuildOptions::default());
    assert!(matches!(err, Err(Error::InsufficientSources { .. })), "{err:?}");
}
