//! Batch toolkit for amodal depth training data and evaluation.
//!
//! The pipeline: composite an occluder over a scene containing a whole
//! target object, align relative depth maps with a closed-form
//! scale-and-shift least squares fit, and score amodal depth predictions
//! over the occluded region per difficulty bucket. An analytic synthetic
//! scene generator provides exactly known occluded depth, so the whole
//! pipeline is verifiable end to end without any learned model.
//!
//! Modules:
//! - [`raster`] — depth/mask rasters, normalization, mask algebra
//! - [`io`] — PFM depth, PGM masks, ASCII PLY point clouds
//! - [`manifest`] — JSON Lines sample manifests
//! - [`camera`] — pinhole unprojection
//! - [`align`] — scale-and-shift fit, affine application, blending
//! - [`compose`] — occlusion compositing and sample construction
//! - [`synth`] — analytic synthetic scenes and the batch generator
//! - [`metrics`] — RMSE×100 / log10 / δ evaluation protocol
//! - [`objectives`] — scale-invariant log loss and its gradient
//! - [`flow`] — conditional flow-matching path, target, Euler sampler
//! - [`selfcheck`] — runtime invariant battery
//!
//! Everything is an immutable value and every operation a pure function;
//! callers may fan out across workers freely.

pub mod align;
pub mod camera;
pub mod compose;
pub mod error;
pub mod flow;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod objectives;
pub mod raster;
pub mod sample;
pub mod selfcheck;
pub mod synth;

pub use align::{apply_affine, blend_prediction, fit_scale_shift, AffineFit};
pub use camera::{project, unproject, CameraIntrinsics, Point3};
pub use compose::{build_sample, composite, DepthOrderPolicy, LayerRole, SceneLayer};
pub use error::{Error, Result};
pub use flow::{euler_sample, flow_path, flow_target, FlowState, GuidancePack};
pub use manifest::{Manifest, ManifestRecord};
pub use metrics::{
    evaluate_sample, evaluate_set, EvalOptions, EvalRegion, MetricsReport, SampleMetrics,
};
pub use objectives::{silog_grad, silog_loss, SilogConfig};
pub use raster::{normalize_unit, visible_ratio, DepthMap, Mask};
pub use sample::{copy_observed_baseline, AmodalSample, Bucket};
pub use synth::{generate_sample, synth_scene, SuiteConfig, SynthSpec};
