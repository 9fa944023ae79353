//! Subcommand behavior through the shipped binary: compose, align,
//! blend, report, exit codes, and the convention-inversion flags.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use amodepth_core::io::{read_depth, write_depth, write_mask};
use amodepth_core::manifest::Manifest;
use amodepth_core::raster::{DepthMap, Mask};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amodepth"))
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// 12x12 ramp scene with a centered square object and a small occluder.
fn write_scene(dir: &Path) -> (DepthMap, Mask, DepthMap, Mask) {
    let bg_depth = DepthMap::from_fn(12, 12, |u, v| 2.0 + 0.05 * (u + 12 * v) as f64).unwrap();
    let object = Mask::from_fn(12, 12, |u, v| (3..9).contains(&u) && (3..9).contains(&v));
    let fg_depth = DepthMap::constant(12, 12, 0.5).unwrap();
    let occluder = Mask::from_fn(12, 12, |u, v| (3..6).contains(&u) && (3..9).contains(&v));
    write_depth(&bg_depth, dir.join("bg.pfm")).unwrap();
    write_mask(&object, dir.join("object.pgm")).unwrap();
    write_depth(&fg_depth, dir.join("fg.pfm")).unwrap();
    write_mask(&occluder, dir.join("occluder.pgm")).unwrap();
    (bg_depth, object, fg_depth, occluder)
}

#[test]
fn compose_builds_sample_and_appends_to_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path());
    let compose = |id: &str| -> Output {
        bin()
            .arg("compose")
            .arg("--background")
            .arg(dir.path().join("bg.pfm"))
            .arg("--object-mask")
            .arg(dir.path().join("object.pgm"))
            .arg("--foreground")
            .arg(dir.path().join("fg.pfm"))
            .arg("--foreground-mask")
            .arg(dir.path().join("occluder.pgm"))
            .arg("--sample-id")
            .arg(id)
            .arg("--out")
            .arg(dir.path().join("data"))
            .output()
            .unwrap()
    };

    let first = compose("a0");
    assert_eq!(first.status.code(), Some(0), "{first:?}");
    // 18 of 36 object pixels covered → ratio 0.5 → Hard
    assert!(stdout_of(&first).contains("visible_ratio=0.500000"));
    assert!(stdout_of(&first).contains("bucket=Hard"));

    let second = compose("a1");
    assert_eq!(second.status.code(), Some(0));
    let manifest = Manifest::load(dir.path().join("data/manifest.jsonl")).unwrap();
    assert_eq!(manifest.records().len(), 2);
    let sample = manifest.load_sample(&manifest.records()[0]).unwrap();
    assert_eq!(sample.visible_ratio, 0.5);
    // gt aligned from the background itself (identity fit): the occluded
    // pixel (4, 4) carries the background ramp value, at file precision
    let want = 2.0 + 0.05 * (4 + 12 * 4) as f64;
    assert!((sample.gt_amodal_depth.get(4, 4) - want).abs() < 1e-6);
    assert!(sample.occluded_mask.get(4, 4));
    assert_eq!(sample.observation_depth.get(4, 4), 0.5);

    // duplicate id is fatal
    let dup = compose("a0");
    assert_eq!(dup.status.code(), Some(3));
}

#[test]
fn compose_depth_order_strict_vs_permissive() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path());
    // occluder behind the scene
    let behind = DepthMap::constant(12, 12, 9.0).unwrap();
    write_depth(&behind, dir.path().join("behind.pfm")).unwrap();

    let mut base = bin();
    base.arg("compose")
        .arg("--background")
        .arg(dir.path().join("bg.pfm"))
        .arg("--object-mask")
        .arg(dir.path().join("object.pgm"))
        .arg("--foreground")
        .arg(dir.path().join("behind.pfm"))
        .arg("--foreground-mask")
        .arg(dir.path().join("occluder.pgm"))
        .arg("--out")
        .arg(dir.path().join("strict"));
    let strict = base.output().unwrap();
    assert_eq!(strict.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("depth order"));

    let permissive = bin()
        .arg("compose")
        .arg("--background")
        .arg(dir.path().join("bg.pfm"))
        .arg("--object-mask")
        .arg(dir.path().join("object.pgm"))
        .arg("--foreground")
        .arg(dir.path().join("behind.pfm"))
        .arg("--foreground-mask")
        .arg(dir.path().join("occluder.pgm"))
        .arg("--permissive")
        .arg("--out")
        .arg(dir.path().join("loose"))
        .output()
        .unwrap();
    assert_eq!(permissive.status.code(), Some(0));
}

#[test]
fn align_applies_fit_and_survives_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let source = DepthMap::from_fn(6, 4, |u, v| 0.2 + 0.1 * (u + v) as f64).unwrap();
    let target = DepthMap::new(
        6,
        4,
        source.values().iter().map(|v| 2.0 * v + 0.1).collect(),
    )
    .unwrap();
    write_depth(&source, dir.path().join("src.pfm")).unwrap();
    write_depth(&target, dir.path().join("dst.pfm")).unwrap();
    write_mask(&Mask::full(6, 4), dir.path().join("m.pgm")).unwrap();

    let out = bin()
        .arg("align")
        .arg(dir.path().join("src.pfm"))
        .arg(dir.path().join("dst.pfm"))
        .arg("--support")
        .arg(dir.path().join("m.pgm"))
        .arg("--apply")
        .arg(dir.path().join("aligned.pfm"))
        .arg("--out")
        .arg(dir.path().join("fit.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let aligned = read_depth(dir.path().join("aligned.pfm")).unwrap();
    let target_file = read_depth(dir.path().join("dst.pfm")).unwrap();
    for (a, b) in aligned.values().iter().zip(target_file.values()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!((fit["s"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(fit["n_pixels"].as_u64().unwrap(), 24);

    // flipping both maps to the other convention preserves the scale
    let inv = bin()
        .arg("align")
        .arg(dir.path().join("src.pfm"))
        .arg(dir.path().join("dst.pfm"))
        .arg("--support")
        .arg(dir.path().join("m.pgm"))
        .arg("--invert-depth")
        .output()
        .unwrap();
    assert_eq!(inv.status.code(), Some(0));
    let line = stdout_of(&inv);
    let s: f64 = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("s="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((s - 2.0).abs() < 1e-6, "inverted fit scale {s}");
}

#[test]
fn align_degenerate_support_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let constant = DepthMap::constant(4, 4, 0.7).unwrap();
    write_depth(&constant, dir.path().join("c.pfm")).unwrap();
    write_depth(&constant, dir.path().join("d.pfm")).unwrap();
    write_mask(&Mask::full(4, 4), dir.path().join("m.pgm")).unwrap();
    let out = bin()
        .arg("align")
        .arg(dir.path().join("c.pfm"))
        .arg(dir.path().join("d.pfm"))
        .arg("--support")
        .arg(dir.path().join("m.pgm"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate support"));
}

#[test]
fn blend_identity_prediction_writes_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let observed = DepthMap::from_fn(8, 8, |u, v| 0.1 + 0.02 * (u * 3 + v) as f64).unwrap();
    write_depth(&observed, dir.path().join("obs.pfm")).unwrap();
    write_mask(
        &Mask::from_fn(8, 8, |u, v| u >= 2 && v >= 2),
        dir.path().join("amodal.pgm"),
    )
    .unwrap();
    write_mask(
        &Mask::from_fn(8, 8, |u, v| u >= 2 && v >= 5),
        dir.path().join("visible.pgm"),
    )
    .unwrap();
    let out = bin()
        .arg("blend")
        .arg("--observed")
        .arg(dir.path().join("obs.pfm"))
        .arg("--predicted")
        .arg(dir.path().join("obs.pfm"))
        .arg("--amodal")
        .arg(dir.path().join("amodal.pgm"))
        .arg("--visible")
        .arg(dir.path().join("visible.pgm"))
        .arg("--out")
        .arg(dir.path().join("blend.pfm"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert_eq!(
        fs::read(dir.path().join("blend.pfm")).unwrap(),
        fs::read(dir.path().join("obs.pfm")).unwrap()
    );
}

#[test]
fn report_rerenders_eval_json() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let status = bin()
        .arg("synth")
        .args(["--n", "6", "--seed", "3"])
        .arg("--out")
        .arg(&suite)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = Manifest::load(suite.join("manifest.jsonl")).unwrap();
    let pred_dir = suite.join("pred");
    fs::create_dir_all(&pred_dir).unwrap();
    for record in manifest.records() {
        fs::copy(
            manifest.resolve(&record.depth_gt),
            pred_dir.join(format!("{}.pfm", record.sample_id)),
        )
        .unwrap();
    }
    let eval = bin()
        .arg("eval")
        .arg("--manifest")
        .arg(suite.join("manifest.jsonl"))
        .arg("--pred-dir")
        .arg(&pred_dir)
        .arg("--out")
        .arg(suite.join("eval"))
        .output()
        .unwrap();
    assert_eq!(eval.status.code(), Some(0));

    let rerender = bin()
        .arg("report")
        .arg("--input")
        .arg(suite.join("eval/report.json"))
        .output()
        .unwrap();
    assert_eq!(rerender.status.code(), Some(0));
    assert_eq!(stdout_of(&rerender), stdout_of(&eval));
    assert_eq!(
        stdout_of(&rerender),
        fs::read_to_string(suite.join("eval/report.txt")).unwrap()
    );
}

#[test]
fn usage_errors_exit_1() {
    let unknown = bin().arg("--no-such-flag").output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));

    let missing = bin().arg("eval").output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn eval_rejects_bad_threshold() {
    let out = bin()
        .arg("eval")
        .args(["--manifest", "nope.jsonl", "--pred-dir", "nope"])
        .args(["--delta-threshold", "0.9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("must be > 1"));
}
