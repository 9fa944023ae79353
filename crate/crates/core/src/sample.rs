//! Task instances: one target object with its masks, observation depth,
//! and aligned ground-truth amodal depth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{visible_ratio, DepthMap, Mask};

/// Difficulty bucket derived from the visible ratio:
/// Easy `(0.75, 1]`, Medium `(0.5, 0.75]`, Hard `(0, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Easy,
    Medium,
    Hard,
}

impl Bucket {
    /// Classifies a visible ratio. Half-open boundaries: 0.75 is Medium,
    /// 0.5 is Hard; a ratio of 0 (fully occluded) is outside every bucket.
    pub fn from_visible_ratio(ratio: f64) -> Result<Bucket> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "visible ratio {} outside (0, 1]",
                ratio
            )));
        }
        Ok(if ratio > 0.75 {
            Bucket::Easy
        } else if ratio > 0.5 {
            Bucket::Medium
        } else {
            Bucket::Hard
        })
    }

    pub fn all() -> [Bucket; 3] {
        [Bucket::Easy, Bucket::Medium, Bucket::Hard]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Bucket::Easy => "Easy",
            Bucket::Medium => "Medium",
            Bucket::Hard => "Hard",
        }
    }
}

impl std::fmt::Display for Bucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One amodal-depth task instance.
///
/// The observation depth stores the full composited raster, occluder depth
/// included; masking is left to consumers. The ground-truth amodal depth is
/// the aligned background depth over the whole raster (its meaning is
/// restricted to the amodal mask).
#[derive(Debug, Clone)]
pub struct AmodalSample {
    pub sample_id: String,
    pub observation_depth: DepthMap,
    pub gt_amodal_depth: DepthMap,
    pub amodal_mask: Mask,
    pub visible_mask: Mask,
    pub occluded_mask: Mask,
    pub visible_ratio: f64,
    pub bucket: Bucket,
}

impl AmodalSample {
    /// Assembles a sample and enforces every cross-field invariant:
    /// equal dimensions, `visible ⊆ amodal`, occluded = amodal AND NOT
    /// visible, ratio consistent with popcounts, bucket consistent with
    /// ratio.
    pub fn new(
        sample_id: impl Into<String>,
        observation_depth: DepthMap,
        gt_amodal_depth: DepthMap,
        amodal_mask: Mask,
        visible_mask: Mask,
    ) -> Result<Self> {
        let (w, h) = (observation_depth.width(), observation_depth.height());
        if !observation_depth.same_dims(&gt_amodal_depth) {
            return Err(Error::dims(
                "sample gt depth",
                (w, h),
                (gt_amodal_depth.width(), gt_amodal_depth.height()),
            ));
        }
        if amodal_mask.width() != w || amodal_mask.height() != h {
            return Err(Error::dims(
                "sample amodal mask",
                (w, h),
                (amodal_mask.width(), amodal_mask.height()),
            ));
        }
        if !visible_mask.same_dims(&amodal_mask) {
            return Err(Error::dims(
                "sample visible mask",
                (w, h),
                (visible_mask.width(), visible_mask.height()),
            ));
        }
        let ratio = visible_ratio(&amodal_mask, &visible_mask)?;
        let bucket = Bucket::from_visible_ratio(ratio)?;
        let occluded_mask = amodal_mask.and_not(&visible_mask)?;
        Ok(Self {
            sample_id: sample_id.into(),
            observation_depth,
            gt_amodal_depth,
            amodal_mask,
            visible_mask,
            occluded_mask,
            visible_ratio: ratio,
            bucket,
        })
    }

    pub fn width(&self) -> u32 {
        self.observation_depth.width()
    }

    pub fn height(&self) -> u32 {
        self.observation_depth.height()
    }
}

/// Reference predictor: returns the observation depth unchanged (the
/// "do nothing about occlusion" baseline).
pub fn copy_observed_baseline(sample: &AmodalSample) -> DepthMap {
    sample.observation_depth.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_boundaries_half_open() {
        assert_eq!(Bucket::from_visible_ratio(0.75).unwrap(), Bucket::Medium);
        assert_eq!(Bucket::from_visible_ratio(0.750001).unwrap(), Bucket::Easy);
        assert_eq!(Bucket::from_visible_ratio(0.5).unwrap(), Bucket::Hard);
        assert_eq!(
            Bucket::from_visible_ratio(0.500001).unwrap(),
            Bucket::Medium
        );
        assert_eq!(Bucket::from_visible_ratio(1.0).unwrap(), Bucket::Easy);
        assert_eq!(Bucket::from_visible_ratio(1e-9).unwrap(), Bucket::Hard);
        assert!(Bucket::from_visible_ratio(0.0).is_err());
        assert!(Bucket::from_visible_ratio(1.0001).is_err());
    }

    #[test]
    fn sample_invariants_enforced() {
        let d = DepthMap::constant(4, 4, 1.0).unwrap();
        let amodal = Mask::from_fn(4, 4, |u, _| u < 3);
        let visible = Mask::from_fn(4, 4, |u, v| u < 3 && v < 2);
        let s =
            AmodalSample::new("s0", d.clone(), d.clone(), amodal.clone(), visible.clone()).unwrap();
        assert_eq!(s.visible_ratio, 0.5);
        assert_eq!(s.bucket, Bucket::Hard);
        assert_eq!(s.occluded_mask, amodal.and_not(&visible).unwrap());
        assert_eq!(
            s.occluded_mask.popcount() + s.visible_mask.popcount(),
            s.amodal_mask.popcount()
        );

        // visible ⊄ amodal is rejected
        let stray = Mask::from_fn(4, 4, |u, _| u == 3);
        assert!(AmodalSample::new("s1", d.clone(), d, amodal, stray).is_err());
    }

    #[test]
    fn baseline_is_observation() {
        let d = DepthMap::from_fn(3, 3, |u, v| (u + v) as f64).unwrap();
        let amodal = Mask::from_fn(3, 3, |u, v| u < 2 && v < 2);
        let visible = Mask::from_fn(3, 3, |u, v| u < 2 && v < 1);
        let s = AmodalSample::new("s", d.clone(), d.clone(), amodal, visible).unwrap();
        assert_eq!(copy_observed_baseline(&s), d);
    }
}
