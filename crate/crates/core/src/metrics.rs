//! Evaluation protocol: RMSE (×100), log10 error and δ-accuracy over the
//! occluded region, aggregated per difficulty bucket and overall.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_depth;
use crate::manifest::Manifest;
use crate::raster::{DepthMap, Mask};
use crate::sample::Bucket;

/// Values are floored here before logarithms and ratios; normalized maps
/// legitimately contain zeros.
pub const LOG_FLOOR: f64 = 1e-6;

/// Which pixels a sample is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRegion {
    /// The invisible object region (`amodal AND NOT visible`). Default.
    OccludedOnly,
    /// The whole object.
    FullAmodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub delta_threshold: f64,
    pub eval_region: EvalRegion,
    /// Floor applied to both maps before logarithms and ratios.
    pub log_floor: f64,
    /// Flip prediction rasters from larger-is-nearer to the toolkit's
    /// smaller-is-nearer convention at ingestion.
    pub invert_predictions: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            delta_threshold: 1.25,
            eval_region: EvalRegion::OccludedOnly,
            log_floor: LOG_FLOOR,
            invert_predictions: false,
        }
    }
}

/// Per-sample scores over the evaluation pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMetrics {
    /// `100 · sqrt(mean((pred - gt)²))`, raw values.
    pub rmse_x100: f64,
    /// `mean(|log10 pred - log10 gt|)` after flooring.
    pub log10_err: f64,
    /// Fraction of pixels with `max(pred/gt, gt/pred) < threshold`, in [0, 1].
    pub delta_acc: f64,
    pub n_eval_pixels: usize,
    /// Pixels whose pred or gt hit the log floor.
    pub floored_pixels: usize,
    pub bucket: Bucket,
}

/// Scores one prediction against ground truth on `eval_mask`.
///
/// RMSE uses raw values; the log10 error and δ ratio use floored values so
/// zeros in normalized maps stay finite.
pub fn evaluate_sample(
    pred: &DepthMap,
    gt: &DepthMap,
    eval_mask: &Mask,
    bucket: Bucket,
    opts: &EvalOptions,
) -> Result<SampleMetrics> {
    if !pred.same_dims(gt) {
        return Err(Error::dims(
            "evaluate pred",
            (gt.width(), gt.height()),
            (pred.width(), pred.height()),
        ));
    }
    if eval_mask.width() != gt.width() || eval_mask.height() != gt.height() {
        return Err(Error::dims(
            "evaluate mask",
            (gt.width(), gt.height()),
            (eval_mask.width(), eval_mask.height()),
        ));
    }
    let n = eval_mask.popcount();
    if n == 0 {
        return Err(Error::EmptyMask("evaluation mask"));
    }

    let pv = pred.values();
    let gv = gt.values();
    let mut sq_sum = 0.0f64;
    let mut log_sum = 0.0f64;
    let mut accurate = 0usize;
    let mut floored = 0usize;
    for i in eval_mask.inside_indices() {
        let p = pv[i];
        let g = gv[i];
        let diff = p - g;
        sq_sum += diff * diff;

        let pf = p.max(opts.log_floor);
        let gf = g.max(opts.log_floor);
        if pf != p || gf != g {
            floored += 1;
        }
        if pf <= 0.0 || gf <= 0.0 {
            return Err(Error::InvalidDepth(format!(
                "non-positive value after flooring at pixel {i}: pred {pf}, gt {gf}"
            )));
        }
        log_sum += (pf.log10() - gf.log10()).abs();
        let ratio = (pf / gf).max(gf / pf);
        if ratio < opts.delta_threshold {
            accurate += 1;
        }
    }
    let nf = n as f64;
    Ok(SampleMetrics {
        rmse_x100: 100.0 * (sq_sum / nf).sqrt(),
        log10_err: log_sum / nf,
        delta_acc: accurate as f64 / nf,
        n_eval_pixels: n,
        floored_pixels: floored,
        bucket,
    })
}

/// Unweighted means of per-sample metrics within one bucket (or overall).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub count: usize,
    pub rmse_x100: Option<f64>,
    pub log10_err: Option<f64>,
    pub delta_acc: Option<f64>,
}

impl BucketStats {
    fn from_samples<'a>(samples: impl Iterator<Item = &'a SampleMetrics>) -> Self {
        let mut count = 0usize;
        let (mut rmse, mut log10, mut delta) = (0.0f64, 0.0f64, 0.0f64);
        for m in samples {
            count += 1;
            rmse += m.rmse_x100;
            log10 += m.log10_err;
            delta += m.delta_acc;
        }
        if count == 0 {
            Self {
                count,
                rmse_x100: None,
                log10_err: None,
                delta_acc: None,
            }
        } else {
            let n = count as f64;
            Self {
                count,
                rmse_x100: Some(rmse / n),
                log10_err: Some(log10 / n),
                delta_acc: Some(delta / n),
            }
        }
    }
}

/// A per-sample failure recorded during [`evaluate_set`] (runs are not
/// fail-fast).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub message: String,
}

/// Aggregated evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub easy: BucketStats,
    pub medium: BucketStats,
    pub hard: BucketStats,
    pub overall: BucketStats,
    pub delta_threshold: f64,
    pub eval_region: EvalRegion,
    pub log_floor: f64,
    pub invert_predictions: bool,
    pub errors: Vec<SampleFailure>,
}

impl MetricsReport {
    pub fn stats_for(&self, bucket: Bucket) -> &BucketStats {
        match bucket {
            Bucket::Easy => &self.easy,
            Bucket::Medium => &self.medium,
            Bucket::Hard => &self.hard,
        }
    }

    /// Human-readable aligned-column rendering.
    pub fn render_text(&self) -> String {
        fn cell(v: Option<f64>, scale: f64, precision: usize) -> String {
            match v {
                Some(v) => format!("{:.*}", precision, v * scale),
                None => "-".into(),
            }
        }
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>7} {:>12} {:>12} {:>10}\n",
            "bucket", "count", "rmse_x100", "log10", "delta(%)"
        ));
        let rows = [
            ("Easy", &self.easy),
            ("Medium", &self.medium),
            ("Hard", &self.hard),
            ("Overall", &self.overall),
        ];
        for (name, stats) in rows {
            out.push_str(&format!(
                "{:<8} {:>7} {:>12} {:>12} {:>10}\n",
                name,
                stats.count,
                cell(stats.rmse_x100, 1.0, 6),
                cell(stats.log10_err, 1.0, 6),
                cell(stats.delta_acc, 100.0, 3),
            ));
        }
        out.push_str(&format!(
            "delta threshold: {}  eval region: {}  log floor: {}  invert predictions: {}\n",
            self.delta_threshold,
            match self.eval_region {
                EvalRegion::OccludedOnly => "occluded",
                EvalRegion::FullAmodal => "amodal",
            },
            self.log_floor,
            self.invert_predictions,
        ));
        if !self.errors.is_empty() {
            out.push_str(&format!("failed samples: {}\n", self.errors.len()));
            for e in &self.errors {
                out.push_str(&format!("  {}: {}\n", e.sample_id, e.message));
            }
        }
        out
    }
}

/// Evaluates every manifest sample against `pred_dir/<sample_id>.pfm`.
///
/// Buckets are re-derived from the stored visible ratio. Per-sample
/// failures (missing prediction, dimension mismatch, bad rasters) are
/// collected into the report instead of aborting the run.
pub fn evaluate_set(
    manifest: &Manifest,
    pred_dir: impl AsRef<Path>,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let pred_dir = pred_dir.as_ref();
    let mut per_sample = Vec::new();
    let mut errors = Vec::new();

    for record in manifest.records() {
        let result = (|| -> Result<SampleMetrics> {
            let bucket = Bucket::from_visible_ratio(record.visible_ratio)?;
            let gt = manifest.load_depth(&record.depth_gt)?;
            let amodal = manifest.load_mask(&record.mask_amodal)?;
            let visible = manifest.load_mask(&record.mask_visible)?;

            let pred_path = pred_dir.join(format!("{}.pfm", record.sample_id));
            if !pred_path.exists() {
                return Err(Error::MissingPrediction {
                    sample_id: record.sample_id.clone(),
                    path: pred_path.display().to_string(),
                });
            }
            let mut pred = read_depth(&pred_path)?;
            if opts.invert_predictions {
                pred = pred.invert_convention();
            }
            let eval_mask = match opts.eval_region {
                EvalRegion::OccludedOnly => amodal.and_not(&visible)?,
                EvalRegion::FullAmodal => amodal,
            };
            evaluate_sample(&pred, &gt, &eval_mask, bucket, opts)
        })();
        match result {
            Ok(m) => per_sample.push(m),
            Err(e) => errors.push(SampleFailure {
                sample_id: record.sample_id.clone(),
                message: e.to_string(),
            }),
        }
    }

    Ok(report_from_samples(&per_sample, errors, opts))
}

/// Aggregates already-computed per-sample metrics into a report.
pub fn report_from_samples(
    per_sample: &[SampleMetrics],
    errors: Vec<SampleFailure>,
    opts: &EvalOptions,
) -> MetricsReport {
    let by_bucket = |bucket: Bucket| {
        BucketStats::from_samples(per_sample.iter().filter(move |m| m.bucket == bucket))
    };
    MetricsReport {
        easy: by_bucket(Bucket::Easy),
        medium: by_bucket(Bucket::Medium),
        hard: by_bucket(Bucket::Hard),
        overall: BucketStats::from_samples(per_sample.iter()),
        delta_threshold: opts.delta_threshold,
        eval_region: opts.eval_region,
        log_floor: opts.log_floor,
        invert_predictions: opts.invert_predictions,
        errors,
    }
}
