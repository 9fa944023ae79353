//! Analytic synthetic scenes with exactly known amodal depth.
//!
//! A scene is three placed primitives — background, target object,
//! occluder — rendered with true depth (smaller = nearer). Because the
//! object's depth is analytic over its whole mask, the occluded ground
//! truth is exact, which is what makes desk-scale verification of the
//! compositing/alignment/evaluation pipeline possible.
//!
//! [`SuiteConfig`] drives the batch generator: per-sample RNG streams are
//! seeded with `seed XOR index`, so samples are independent and the output
//! is byte-identical for any worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{apply_affine, fit_scale_shift};
use crate::compose::{composite, DepthOrderPolicy, LayerRole, SceneLayer};
use crate::error::{Error, Result};
use crate::raster::{normalize_unit, DepthMap, Mask};
use crate::sample::{AmodalSample, Bucket};

/// Axis a ramp varies along: `u` = columns, `v` = rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    U,
    V,
}

/// Footprint of a flat primitive in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Rect {
        cx: f64,
        cy: f64,
        half_width: f64,
        half_height: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        radius: f64,
    },
}

impl Region {
    fn contains(&self, u: f64, v: f64) -> bool {
        match *self {
            Region::Rect {
                cx,
                cy,
                half_width,
                half_height,
            } => (u - cx).abs() <= half_width && (v - cy).abs() <= half_height,
            Region::Disk { cx, cy, radius } => {
                (u - cx) * (u - cx) + (v - cy) * (v - cy) <= radius * radius
            }
        }
    }

    /// Extent along one axis, used to parameterize ramps.
    fn span(&self, axis: Axis) -> (f64, f64) {
        match *self {
            Region::Rect {
                cx,
                cy,
                half_width,
                half_height,
            } => match axis {
                Axis::U => (cx - half_width, cx + half_width),
                Axis::V => (cy - half_height, cy + half_height),
            },
            Region::Disk { cx, cy, radius } => match axis {
                Axis::U => (cx - radius, cx + radius),
                Axis::V => (cy - radius, cy + radius),
            },
        }
    }

    fn extents_positive(&self) -> bool {
        match *self {
            Region::Rect {
                half_width,
                half_height,
                ..
            } => half_width > 0.0 && half_height > 0.0,
            Region::Disk { radius, .. } => radius > 0.0,
        }
    }

    fn finite(&self) -> bool {
        match *self {
            Region::Rect {
                cx,
                cy,
                half_width,
                half_height,
            } => [cx, cy, half_width, half_height]
                .iter()
                .all(|x| x.is_finite()),
            Region::Disk { cx, cy, radius } => [cx, cy, radius].iter().all(|x| x.is_finite()),
        }
    }
}

/// Analytic depth primitive. Each primitive has a total depth function
/// over the raster and a footprint mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Constant depth over its region.
    Plane { depth: f64, region: Region },
    /// Linear gradient from `near` to `far` across its region.
    Ramp {
        near: f64,
        far: f64,
        axis: Axis,
        region: Region,
    },
    /// Front hemisphere: `z = z0 - sqrt(max(0, r² - (u-u0)² - (v-v0)²))`,
    /// flat at `z0` outside the disk.
    Sphere {
        center_u: f64,
        center_v: f64,
        radius: f64,
        center_depth: f64,
    },
}

impl Primitive {
    /// Depth at pixel center `(u, v)`. Total over the raster.
    pub fn depth_at(&self, u: f64, v: f64) -> f64 {
        match *self {
            Primitive::Plane { depth, .. } => depth,
            Primitive::Ramp {
                near,
                far,
                axis,
                region,
            } => {
                let (lo, hi) = region.span(axis);
                let x = match axis {
                    Axis::U => u,
                    Axis::V => v,
                };
                let frac = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                near + (far - near) * frac
            }
            Primitive::Sphere {
                center_u,
                center_v,
                radius,
                center_depth,
            } => {
                let d2 = (u - center_u) * (u - center_u) + (v - center_v) * (v - center_v);
                center_depth - (radius * radius - d2).max(0.0).sqrt()
            }
        }
    }

    /// Footprint rendered on a `width` × `height` raster.
    pub fn footprint(&self, width: u32, height: u32) -> Mask {
        match *self {
            Primitive::Plane { region, .. } | Primitive::Ramp { region, .. } => {
                Mask::from_fn(width, height, |u, v| region.contains(u as f64, v as f64))
            }
            Primitive::Sphere {
                center_u,
                center_v,
                radius,
                ..
            } => Mask::from_fn(width, height, |u, v| {
                Region::Disk {
                    cx: center_u,
                    cy: center_v,
                    radius,
                }
                .contains(u as f64, v as f64)
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            Primitive::Plane { depth, region } => {
                if !depth.is_finite() || depth < 0.0 {
                    return bad(format!("plane depth {depth} must be finite and >= 0"));
                }
                if !region.finite() || !region.extents_positive() {
                    return bad("plane region must be finite with positive extents".into());
                }
            }
            Primitive::Ramp {
                near, far, region, ..
            } => {
                if !near.is_finite() || !far.is_finite() || near < 0.0 || far < 0.0 {
                    return bad(format!(
                        "ramp depths ({near}, {far}) must be finite and >= 0"
                    ));
                }
                if !region.finite() || !region.extents_positive() {
                    return bad("ramp region must be finite with positive extents".into());
                }
            }
            Primitive::Sphere {
                center_u,
                center_v,
                radius,
                center_depth,
            } => {
                if ![center_u, center_v, radius, center_depth]
                    .iter()
                    .all(|x| x.is_finite())
                {
                    return bad("sphere parameters must be finite".into());
                }
                if radius <= 0.0 {
                    return bad(format!("sphere radius {radius} must be positive"));
                }
                if center_depth - radius < 0.0 {
                    return bad(format!(
                        "sphere reaches negative depth: center_depth {center_depth} < radius {radius}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A complete synthetic scene description. Deterministic: the fields,
/// including `seed`, fully determine the rendered output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub background: Primitive,
    pub object: Primitive,
    pub occluder: Primitive,
    /// RNG stream this spec was drawn from (provenance; rendering itself
    /// consumes no randomness).
    pub seed: u64,
}

/// Rendered scene: background layer (scene + whole object), foreground
/// layer (occluder), and the exact occluder-free depth raster.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub background: SceneLayer,
    pub foreground: SceneLayer,
    /// Analytic depth of the occluder-free scene; on the amodal mask this
    /// is the object's true depth, including pixels later occluded.
    pub true_amodal_depth: DepthMap,
}

/// Renders a spec. Deterministic; `InvalidSpec` for out-of-bounds or
/// depth-invalid placements.
pub fn synth_scene(spec: &SynthSpec) -> Result<SynthScene> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::InvalidSpec(format!(
            "raster {}x{} is empty",
            spec.width, spec.height
        )));
    }
    spec.background.validate()?;
    spec.object.validate()?;
    spec.occluder.validate()?;

    let object_mask = spec.object.footprint(spec.width, spec.height);
    if object_mask.popcount() == 0 {
        return Err(Error::InvalidSpec(
            "object placement is outside the raster".into(),
        ));
    }
    let occluder_mask = spec.occluder.footprint(spec.width, spec.height);
    if occluder_mask.popcount() == 0 {
        return Err(Error::InvalidSpec(
            "occluder placement is outside the raster".into(),
        ));
    }

    let true_amodal_depth = DepthMap::from_fn(spec.width, spec.height, |u, v| {
        if object_mask.get(u, v) {
            spec.object.depth_at(u as f64, v as f64)
        } else {
            spec.background.depth_at(u as f64, v as f64)
        }
    })?;
    let foreground_depth = DepthMap::from_fn(spec.width, spec.height, |u, v| {
        spec.occluder.depth_at(u as f64, v as f64)
    })?;

    Ok(SynthScene {
        background: SceneLayer::new(
            true_amodal_depth.clone(),
            object_mask,
            LayerRole::Background,
        )?,
        foreground: SceneLayer::new(foreground_depth, occluder_mask, LayerRole::Foreground)?,
        true_amodal_depth,
    })
}

/// Batch-generator configuration. Depth bands keep the strict ordering
/// occluder < object < background for every drawn placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    /// Object sphere radius range, pixels.
    pub object_radius: (f64, f64),
    /// Object sphere center depth range.
    pub object_center_depth: (f64, f64),
    /// Occluder depth band (flat primitives only).
    pub occluder_depth: (f64, f64),
    /// Background depth band.
    pub background_depth: (f64, f64),
    /// Draw attempts per sample before giving up.
    pub max_attempts: u32,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            seed: 42,
            object_radius: (8.0, 14.0),
            object_center_depth: (55.0, 65.0),
            occluder_depth: (18.0, 22.0),
            background_depth: (100.0, 140.0),
            max_attempts: 64,
        }
    }
}

/// One generated suite entry: the spec that produced it and the finished
/// sample (observation normalized to [0, 1], ground truth aligned into
/// the observation's frame).
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub spec: SynthSpec,
    pub sample: AmodalSample,
    pub provenance: String,
}

/// Canonical id for sample `index` of a suite.
pub fn sample_id(index: u64) -> String {
    format!("s{index:06}")
}

/// Generates suite sample `index` deterministically.
///
/// The sample index is stratified over the three difficulty buckets
/// (`index % 3`), and the occluder is sized by bisection until the visible
/// ratio lands in the target bucket, so any run of at least three valid
/// samples populates every bucket. Rejected draws (fully occluded scenes,
/// degenerate fits) retry from the same per-sample stream, which keeps the
/// output independent of worker scheduling.
pub fn generate_sample(cfg: &SuiteConfig, index: u64) -> Result<GeneratedSample> {
    let sample_seed = cfg.seed ^ index;
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let target = match index % 3 {
        0 => Bucket::Easy,
        1 => Bucket::Medium,
        _ => Bucket::Hard,
    };

    let mut last_err = None;
    for _ in 0..cfg.max_attempts.max(1) {
        let spec = match draw_spec(cfg, &mut rng, target, sample_seed) {
            Ok(spec) => spec,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        match realize(&spec, index, target) {
            Ok(mut generated) => {
                generated.provenance = format!(
                    "synth suite_seed={} index={} sample_seed={}",
                    cfg.seed, index, sample_seed
                );
                return Ok(generated);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::InvalidSpec(format!(
        "sample {index}: no valid draw in {} attempts (last: {})",
        cfg.max_attempts.max(1),
        last_err
            .map(|e| e.to_string())
            .unwrap_or_else(|| "none".into())
    )))
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

fn draw_spec(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    target: Bucket,
    sample_seed: u64,
) -> Result<SynthSpec> {
    let w = cfg.width as f64;
    let h = cfg.height as f64;

    // Object: always a sphere (a constant-depth object would make the
    // alignment fit singular on its visible support).
    let radius = uniform(rng, cfg.object_radius);
    let margin = radius + 2.0;
    if w - 1.0 - margin <= margin || h - 1.0 - margin <= margin {
        return Err(Error::InvalidSpec(format!(
            "raster {}x{} too small for object radius {radius}",
            cfg.width, cfg.height
        )));
    }
    let center_u = rng.gen_range(margin..w - 1.0 - margin);
    let center_v = rng.gen_range(margin..h - 1.0 - margin);
    let center_depth = uniform(rng, cfg.object_center_depth);
    let object = Primitive::Sphere {
        center_u,
        center_v,
        radius,
        center_depth,
    };

    let background = draw_background(cfg, rng, w, h);

    let object_mask = object.footprint(cfg.width, cfg.height);
    let occluder = draw_occluder(cfg, rng, target, &object_mask, center_u, center_v, radius)?;

    Ok(SynthSpec {
        width: cfg.width,
        height: cfg.height,
        background,
        object,
        occluder,
        seed: sample_seed,
    })
}

fn draw_background(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, w: f64, h: f64) -> Primitive {
    let full = Region::Rect {
        cx: (w - 1.0) / 2.0,
        cy: (h - 1.0) / 2.0,
        half_width: w / 2.0,
        half_height: h / 2.0,
    };
    match rng.gen_range(0..3u32) {
        0 => Primitive::Plane {
            depth: uniform(rng, cfg.background_depth),
            region: full,
        },
        1 => {
            let a = uniform(rng, cfg.background_depth);
            let b = uniform(rng, cfg.background_depth);
            Primitive::Ramp {
                near: a,
                far: b,
                axis: if rng.gen_bool(0.5) { Axis::U } else { Axis::V },
                region: full,
            }
        }
        _ => {
            let radius = rng.gen_range(w * 0.75..w * 1.5);
            Primitive::Sphere {
                center_u: rng.gen_range(0.0..w),
                center_v: rng.gen_range(0.0..h),
                radius,
                center_depth: cfg.background_depth.0 + radius,
            }
        }
    }
}

/// Sizes an occluder by bisection so the visible ratio lands inside the
/// target bucket. The occluder is centered near the object's center: for
/// sphere objects that makes the copy-observed baseline error grow with
/// occlusion (the sphere is nearest at its center), so harder buckets are
/// genuinely harder for the baseline.
fn draw_occluder(
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    target: Bucket,
    object_mask: &Mask,
    object_cu: f64,
    object_cv: f64,
    object_radius: f64,
) -> Result<Primitive> {
    let target_ratio = match target {
        Bucket::Easy => rng.gen_range(0.78..0.97),
        Bucket::Medium => rng.gen_range(0.53..0.73),
        Bucket::Hard => rng.gen_range(0.08..0.47),
    };
    let jitter = object_radius / 3.0;
    let cx = object_cu + rng.gen_range(-jitter..jitter);
    let cy = object_cv + rng.gen_range(-jitter..jitter);
    let kind = rng.gen_range(0..3u32);
    let aspect_u = rng.gen_range(0.7..1.4);
    let aspect_v = rng.gen_range(0.7..1.4);
    let depth_a = uniform(rng, cfg.occluder_depth);
    let depth_b = uniform(rng, cfg.occluder_depth);
    let ramp_axis = if rng.gen_bool(0.5) { Axis::U } else { Axis::V };

    let build = |scale: f64| -> Primitive {
        let region = if kind == 1 {
            Region::Disk {
                cx,
                cy,
                radius: scale * object_radius,
            }
        } else {
            Region::Rect {
                cx,
                cy,
                half_width: scale * object_radius * aspect_u,
                half_height: scale * object_radius * aspect_v,
            }
        };
        match kind {
            2 => Primitive::Ramp {
                near: depth_a,
                far: depth_b,
                axis: ramp_axis,
                region,
            },
            _ => Primitive::Plane {
                depth: depth_a,
                region,
            },
        }
    };

    let amodal = object_mask.popcount() as f64;
    let ratio_for = |scale: f64| -> f64 {
        let occ = build(scale).footprint(cfg.width, cfg.height);
        let covered = object_mask.and(&occ).map(|m| m.popcount()).unwrap_or(0);
        1.0 - covered as f64 / amodal
    };

    // ratio is non-increasing in scale: bisect for the target
    let (mut lo, mut hi) = (0.02f64, 4.0f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ratio_for(mid) > target_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    let achieved = ratio_for(scale);
    if achieved <= 0.0 || achieved >= 1.0 {
        return Err(Error::InvalidSpec(format!(
            "occluder sizing reached ratio {achieved}"
        )));
    }
    if Bucket::from_visible_ratio(achieved)? != target {
        return Err(Error::InvalidSpec(format!(
            "occluder sizing missed bucket {target}: ratio {achieved}"
        )));
    }
    Ok(build(scale))
}

/// Renders a spec and assembles the stored sample: composite, normalize
/// the observation and the occluder-free truth to [0, 1] independently,
/// then align the normalized truth into the observation's frame over the
/// visible object region.
fn realize(spec: &SynthSpec, index: u64, target: Bucket) -> Result<GeneratedSample> {
    let scene = synth_scene(spec)?;
    let comp = composite(
        &scene.background,
        &scene.foreground,
        DepthOrderPolicy::Strict,
    )?;

    let observed = normalize_unit(&comp.observed_depth)?;
    let truth = normalize_unit(&scene.true_amodal_depth)?;
    if observed.constant_input || truth.constant_input {
        return Err(Error::InvalidSpec("degenerate constant scene".into()));
    }

    let fit = fit_scale_shift(&truth.depth, &observed.depth, &comp.visible_mask)?;
    let aligned = apply_affine(&truth.depth, &fit)?;
    let sample = AmodalSample::new(
        sample_id(index),
        observed.depth,
        aligned.depth,
        comp.amodal_mask,
        comp.visible_mask,
    )?;
    if sample.bucket != target {
        return Err(Error::InvalidSpec(format!(
            "sample landed in {} instead of {}",
            sample.bucket, target
        )));
    }
    Ok(GeneratedSample {
        spec: spec.clone(),
        sample,
        provenance: String::new(),
    })
}

/// Relative paths (against the suite root) for one sample's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePaths {
    pub depth_obs: String,
    pub depth_gt: String,
    pub mask_amodal: String,
    pub mask_visible: String,
    pub spec: String,
}

impl SamplePaths {
    pub fn for_id(id: &str) -> Self {
        Self {
            depth_obs: format!("rasters/{id}_obs.pfm"),
            depth_gt: format!("rasters/{id}_gt.pfm"),
            mask_amodal: format!("rasters/{id}_amodal.pgm"),
            mask_visible: format!("rasters/{id}_visible.pgm"),
            spec: format!("specs/{id}.json"),
        }
    }
}

/// Writes one sample's four rasters under `out_dir/rasters/` and returns
/// its manifest record. The manifest itself is written separately, last.
pub fn write_sample(
    sample: &AmodalSample,
    provenance: &str,
    out_dir: &std::path::Path,
) -> Result<crate::manifest::ManifestRecord> {
    use crate::io::{write_depth, write_mask};

    let paths = SamplePaths::for_id(&sample.sample_id);
    let rasters = out_dir.join("rasters");
    std::fs::create_dir_all(&rasters).map_err(|e| Error::io(rasters.display().to_string(), e))?;
    write_depth(&sample.observation_depth, out_dir.join(&paths.depth_obs))?;
    write_depth(&sample.gt_amodal_depth, out_dir.join(&paths.depth_gt))?;
    write_mask(&sample.amodal_mask, out_dir.join(&paths.mask_amodal))?;
    write_mask(&sample.visible_mask, out_dir.join(&paths.mask_visible))?;

    Ok(crate::manifest::ManifestRecord {
        sample_id: sample.sample_id.clone(),
        depth_obs: paths.depth_obs,
        depth_gt: paths.depth_gt,
        mask_amodal: paths.mask_amodal,
        mask_visible: paths.mask_visible,
        visible_ratio: sample.visible_ratio,
        bucket: sample.bucket,
        provenance: provenance.to_owned(),
    })
}

/// [`write_sample`] plus the generating spec under `out_dir/specs/`.
pub fn write_generated(
    generated: &GeneratedSample,
    out_dir: &std::path::Path,
) -> Result<crate::manifest::ManifestRecord> {
    let record = write_sample(&generated.sample, &generated.provenance, out_dir)?;

    let specs = out_dir.join("specs");
    std::fs::create_dir_all(&specs).map_err(|e| Error::io(specs.display().to_string(), e))?;
    let spec_path = out_dir.join(&SamplePaths::for_id(&generated.sample.sample_id).spec);
    let mut spec_json = serde_json::to_vec_pretty(&generated.spec)?;
    spec_json.push(b'\n');
    std::fs::write(&spec_path, spec_json)
        .map_err(|e| Error::io(spec_path.display().to_string(), e))?;

    Ok(record)
}
