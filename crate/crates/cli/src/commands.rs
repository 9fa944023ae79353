//! Subcommand implementations. Each returns the process exit code on the
//! happy path; fatal errors bubble up and map to exit code 3.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use amodepth_core::align::{apply_affine, blend_prediction, fit_scale_shift};
use amodepth_core::compose::{build_sample, DepthOrderPolicy, LayerRole, SceneLayer};
use amodepth_core::error::{Error, Result};
use amodepth_core::io::{read_depth, read_mask, write_depth};
use amodepth_core::manifest::Manifest;
use amodepth_core::metrics::{evaluate_set, EvalOptions, EvalRegion, MetricsReport};
use amodepth_core::objectives::SilogConfig;
use amodepth_core::raster::DepthMap;
use amodepth_core::sample::Bucket;
use amodepth_core::selfcheck::run_battery;
use amodepth_core::synth::{generate_sample, write_generated, write_sample, SuiteConfig};

use crate::{Cli, Command, EvalRegionArg};

pub fn run(cli: Cli) -> Result<u8> {
    let out = cli.out.clone();
    match cli.command {
        Command::Synth { n, width, height } => {
            cmd_synth(n, width, height, cli.seed, cli.workers, out_dir(&out))
        }
        Command::Compose {
            background,
            object_mask,
            foreground,
            foreground_mask,
            gt,
            sample_id,
            permissive,
            invert_depth,
        } => cmd_compose(
            &background,
            &object_mask,
            &foreground,
            &foreground_mask,
            gt.as_deref(),
            &sample_id,
            permissive,
            invert_depth,
            out_dir(&out),
        ),
        Command::Align {
            source,
            target,
            support,
            apply,
            invert_depth,
        } => cmd_align(
            &source,
            &target,
            &support,
            apply.as_deref(),
            invert_depth,
            out,
        ),
        Command::Blend {
            observed,
            predicted,
            amodal,
            visible,
            invert_depth,
        } => cmd_blend(&observed, &predicted, &amodal, &visible, invert_depth, out),
        Command::Eval {
            manifest,
            pred_dir,
            delta_threshold,
            eval_region,
            invert_pred,
        } => cmd_eval(
            &manifest,
            &pred_dir,
            delta_threshold,
            eval_region,
            invert_pred,
            out_dir(&out),
        ),
        Command::Report { input } => cmd_report(&input, out),
        Command::Selfcheck {
            lambda,
            alpha,
            sigma_min,
        } => cmd_selfcheck(cli.seed, lambda, alpha, sigma_min),
    }
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn maybe_invert(d: DepthMap, invert: bool) -> DepthMap {
    if invert {
        d.invert_convention()
    } else {
        d
    }
}

fn cmd_synth(
    n: u64,
    width: u32,
    height: u32,
    seed: u64,
    workers: usize,
    out: PathBuf,
) -> Result<u8> {
    let cfg = SuiteConfig {
        width,
        height,
        seed,
        ..SuiteConfig::default()
    };
    fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
    // samples are independent and written to distinct files; collect()
    // preserves index order, so the manifest is order-stable
    let records = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|index| {
                let generated = generate_sample(&cfg, index)?;
                write_generated(&generated, &out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = Manifest::new(records, &out)?;
    manifest.write(out.join("manifest.jsonl"))?;

    let count_of = |b: Bucket| manifest.records().iter().filter(|r| r.bucket == b).count();
    println!(
        "wrote {} samples to {} (easy {}, medium {}, hard {})",
        n,
        out.display(),
        count_of(Bucket::Easy),
        count_of(Bucket::Medium),
        count_of(Bucket::Hard),
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compose(
    background: &Path,
    object_mask: &Path,
    foreground: &Path,
    foreground_mask: &Path,
    gt: Option<&Path>,
    sample_id: &str,
    permissive: bool,
    invert_depth: bool,
    out: PathBuf,
) -> Result<u8> {
    let bg_depth = maybe_invert(read_depth(background)?, invert_depth);
    let fg_depth = maybe_invert(read_depth(foreground)?, invert_depth);
    let gt_depth = match gt {
        Some(path) => maybe_invert(read_depth(path)?, invert_depth),
        None => bg_depth.clone(),
    };
    let bg = SceneLayer::new(bg_depth, read_mask(object_mask)?, LayerRole::Background)?;
    let fg = SceneLayer::new(fg_depth, read_mask(foreground_mask)?, LayerRole::Foreground)?;
    let policy = if permissive {
        DepthOrderPolicy::Permissive
    } else {
        DepthOrderPolicy::Strict
    };
    let sample = build_sample(sample_id, &bg, &fg, &gt_depth, policy)?;

    fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let provenance = format!(
        "compose background={} foreground={}",
        background.display(),
        foreground.display()
    );
    let record = write_sample(&sample, &provenance, &out)?;

    // append to an existing manifest so a directory can accumulate samples
    let manifest_path = out.join("manifest.jsonl");
    let mut records = if manifest_path.exists() {
        Manifest::load(&manifest_path)?.records().to_vec()
    } else {
        Vec::new()
    };
    records.push(record);
    Manifest::new(records, &out)?.write(&manifest_path)?;

    println!(
        "sample {}: visible_ratio={:.6} bucket={}",
        sample.sample_id, sample.visible_ratio, sample.bucket
    );
    Ok(0)
}

fn cmd_align(
    source: &Path,
    target: &Path,
    support: &Path,
    apply: Option<&Path>,
    invert_depth: bool,
    out: Option<PathBuf>,
) -> Result<u8> {
    let source_map = maybe_invert(read_depth(source)?, invert_depth);
    let target_map = maybe_invert(read_depth(target)?, invert_depth);
    let support_mask = read_mask(support)?;
    let fit = fit_scale_shift(&source_map, &target_map, &support_mask)?;
    println!(
        "s={:.12} t={:.12} rmse={:.12} n={}",
        fit.s, fit.t, fit.rmse_residual, fit.n_pixels
    );
    if let Some(out) = out {
        let json = serde_json::to_vec_pretty(&fit)?;
        fs::write(&out, json).map_err(|e| Error::Io {
            path: out.display().to_string(),
            source: e,
        })?;
    }
    if let Some(apply_path) = apply {
        let mapped = apply_affine(&source_map, &fit)?;
        write_depth(&mapped.depth, apply_path)?;
        if mapped.clamped > 0 {
            eprintln!("warning: {} pixel(s) clamped to 0", mapped.clamped);
        }
    }
    Ok(0)
}

fn cmd_blend(
    observed: &Path,
    predicted: &Path,
    amodal: &Path,
    visible: &Path,
    invert_depth: bool,
    out: Option<PathBuf>,
) -> Result<u8> {
    let out = out.ok_or_else(|| Error::InvalidInput("blend requires --out <file.pfm>".into()))?;
    let observed_map = read_depth(observed)?;
    let predicted_map = maybe_invert(read_depth(predicted)?, invert_depth);
    let blended = blend_prediction(
        &observed_map,
        &predicted_map,
        &read_mask(amodal)?,
        &read_mask(visible)?,
    )?;
    write_depth(&blended.depth, &out)?;
    println!(
        "s={:.12} t={:.12} rmse={:.12} n={} clamped={}",
        blended.fit.s,
        blended.fit.t,
        blended.fit.rmse_residual,
        blended.fit.n_pixels,
        blended.clamped
    );
    Ok(0)
}

fn cmd_eval(
    manifest_path: &Path,
    pred_dir: &Path,
    delta_threshold: f64,
    eval_region: EvalRegionArg,
    invert_pred: bool,
    out: PathBuf,
) -> Result<u8> {
    if !(delta_threshold > 1.0 && delta_threshold.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta threshold {delta_threshold} must be > 1"
        )));
    }
    let manifest = Manifest::load(manifest_path)?;
    let opts = EvalOptions {
        delta_threshold,
        eval_region: match eval_region {
            EvalRegionArg::Occluded => EvalRegion::OccludedOnly,
            EvalRegionArg::Amodal => EvalRegion::FullAmodal,
        },
        invert_predictions: invert_pred,
        ..EvalOptions::default()
    };
    let report = evaluate_set(&manifest, pred_dir, &opts)?;

    fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let json_path = out.join("report.json");
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    fs::write(&json_path, json).map_err(|e| Error::Io {
        path: json_path.display().to_string(),
        source: e,
    })?;
    let text = report.render_text();
    let text_path = out.join("report.txt");
    fs::write(&text_path, &text).map_err(|e| Error::Io {
        path: text_path.display().to_string(),
        source: e,
    })?;
    print!("{text}");

    Ok(if report.errors.is_empty() { 0 } else { 2 })
}

fn cmd_report(input: &Path, out: Option<PathBuf>) -> Result<u8> {
    let json = fs::read_to_string(input).map_err(|e| Error::Io {
        path: input.display().to_string(),
        source: e,
    })?;
    let report: MetricsReport = serde_json::from_str(&json)?;
    let text = report.render_text();
    print!("{text}");
    if let Some(out) = out {
        fs::write(&out, &text).map_err(|e| Error::Io {
            path: out.display().to_string(),
            source: e,
        })?;
    }
    Ok(0)
}

fn cmd_selfcheck(seed: u64, lambda: f64, alpha: f64, sigma_min: f64) -> Result<u8> {
    if !(sigma_min >= 0.0 && sigma_min.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma_min {sigma_min} must be finite and >= 0"
        )));
    }
    let silog = SilogConfig::new(lambda, alpha)?;
    let results = run_battery(seed, &silog, sigma_min);
    let mut failed = 0usize;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {:<55} {}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} checks, {} failed", results.len(), failed);
    Ok(if failed == 0 { 0 } else { 2 })
}
