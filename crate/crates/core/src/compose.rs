//! Occlusion compositing: superimposing a foreground occluder over a
//! scene that contains a whole target object.

use crate::align::{apply_affine, fit_scale_shift};
use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};
use crate::sample::AmodalSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerRole {
    Background,
    Foreground,
}

/// One layer of a scene: its depth raster and the mask of the object the
/// layer contributes (target object for the background, occluder for the
/// foreground).
#[derive(Debug, Clone)]
pub struct SceneLayer {
    pub depth: DepthMap,
    pub object_mask: Mask,
    pub role: LayerRole,
}

impl SceneLayer {
    pub fn new(depth: DepthMap, object_mask: Mask, role: LayerRole) -> Result<Self> {
        if object_mask.width() != depth.width() || object_mask.height() != depth.height() {
            return Err(Error::dims(
                "scene layer mask",
                (depth.width(), depth.height()),
                (object_mask.width(), object_mask.height()),
            ));
        }
        Ok(Self {
            depth,
            object_mask,
            role,
        })
    }
}

/// Whether [`composite`] verifies that the occluder is strictly in front
/// of the scene it covers (true depth, smaller = nearer). Synthetic data
/// uses `Strict`; externally estimated layers may use `Permissive`, where
/// only the mask relation matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthOrderPolicy {
    #[default]
    Strict,
    Permissive,
}

/// [`composite`] output: the assembled observation and the target
/// object's masks.
#[derive(Debug, Clone)]
pub struct Composite {
    pub observed_depth: DepthMap,
    pub amodal_mask: Mask,
    pub visible_mask: Mask,
}

/// Superimposes the foreground layer onto the background scene.
///
/// The observation takes the foreground depth where the foreground mask is
/// set and the background depth elsewhere. The amodal mask is the
/// background object's mask, unchanged by occlusion; the visible mask is
/// `amodal AND NOT foreground`. A fully occluded object is rejected.
pub fn composite(
    background: &SceneLayer,
    foreground: &SceneLayer,
    policy: DepthOrderPolicy,
) -> Result<Composite> {
    let (w, h) = (background.depth.width(), background.depth.height());
    if !background.depth.same_dims(&foreground.depth) {
        return Err(Error::dims(
            "composite foreground",
            (w, h),
            (foreground.depth.width(), foreground.depth.height()),
        ));
    }

    if policy == DepthOrderPolicy::Strict {
        for i in foreground.object_mask.inside_indices() {
            let fg = foreground.depth.values()[i];
            let bg = background.depth.values()[i];
            if fg >= bg {
                let u = (i % w as usize) as u32;
                let v = (i / w as usize) as u32;
                return Err(Error::DepthOrderViolation {
                    u,
                    v,
                    foreground: fg,
                    background: bg,
                });
            }
        }
    }

    let mut values = background.depth.values().to_vec();
    for i in foreground.object_mask.inside_indices() {
        values[i] = foreground.depth.values()[i];
    }
    let observed_depth = DepthMap::new(w, h, values)?;

    let amodal_mask = background.object_mask.clone();
    let visible_mask = amodal_mask.and_not(&foreground.object_mask)?;
    if visible_mask.popcount() == 0 {
        return Err(Error::FullyOccluded);
    }
    Ok(Composite {
        observed_depth,
        amodal_mask,
        visible_mask,
    })
}

/// Composites the two layers and builds the full training sample.
///
/// `gt_background_depth` is the occluder-free depth of the scene: exact in
/// synthetic mode, an external estimate in pseudo-label mode. It is
/// aligned into the observation's frame by a scale-and-shift fit over the
/// visible object region before being stored as the ground-truth amodal
/// depth.
pub fn build_sample(
    sample_id: impl Into<String>,
    background: &SceneLayer,
    foreground: &SceneLayer,
    gt_background_depth: &DepthMap,
    policy: DepthOrderPolicy,
) -> Result<AmodalSample> {
    let comp = composite(background, foreground, policy)?;
    let fit = fit_scale_shift(
        gt_background_depth,
        &comp.observed_depth,
        &comp.visible_mask,
    )?;
    let aligned = apply_affine(gt_background_depth, &fit)?;
    AmodalSample::new(
        sample_id,
        comp.observed_depth,
        aligned.depth,
        comp.amodal_mask,
        comp.visible_mask,
    )
}
