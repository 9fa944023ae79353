//! Depth and mask rasters plus the boolean algebra on masks.
//!
//! Both types are immutable values after construction: every operation
//! returns a fresh raster, so they are safe to share across workers.

use crate::error::{Error, Result};

/// H×W raster of non-negative, finite relative depth values, row-major.
///
/// Values are dimensionless relative depth with the convention
/// smaller = nearer the camera. Maps produced by disparity-style
/// estimators (larger = nearer) can be converted with
/// [`DepthMap::invert_convention`].
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    /// Builds a depth map, enforcing `values.len() == width * height` and
    /// that every value is finite and non-negative.
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "depth raster {}x{} needs {} values, got {}",
                width,
                height,
                expected,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "depth value at index {} is {} (must be finite and >= 0)",
                i, values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Constant-valued map.
    pub fn constant(width: u32, height: u32, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Evaluates `f(u, v)` at every pixel, row-major.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for v in 0..height {
            for u in 0..width {
                values.push(f(u, v));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at column `u`, row `v`. Panics out of bounds like slice indexing.
    pub fn get(&self, u: u32, v: u32) -> f64 {
        debug_assert!(u < self.width && v < self.height);
        self.values[v as usize * self.width as usize + u as usize]
    }

    pub fn same_dims(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Min and max over all pixels. `None` for an empty raster.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter();
        let first = *it.next()?;
        let mut lo = first;
        let mut hi = first;
        for &v in it {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        Some((lo, hi))
    }

    /// Flips the value convention (`larger = nearer` → `smaller = nearer`)
    /// by mapping every value to `max - value`. Identity on an empty raster.
    pub fn invert_convention(&self) -> DepthMap {
        let hi = self.min_max().map(|(_, hi)| hi).unwrap_or(0.0);
        DepthMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| hi - v).collect(),
        }
    }
}

/// [`normalize_unit`] output: the rescaled map plus a flag marking
/// degenerate constant inputs (which normalize to all zeros).
#[derive(Debug, Clone)]
pub struct Normalized {
    pub depth: DepthMap,
    pub constant_input: bool,
}

/// Rescales a depth map to `[0, 1]` via `(d - min) / (max - min)`.
///
/// A constant map yields all zeros with `constant_input = true` so batch
/// pipelines can skip the sample instead of aborting.
pub fn normalize_unit(d: &DepthMap) -> Result<Normalized> {
    let (lo, hi) = d
        .min_max()
        .ok_or_else(|| Error::InvalidInput("cannot normalize an empty raster".into()))?;
    if lo == hi {
        return Ok(Normalized {
            depth: DepthMap::constant(d.width, d.height, 0.0)?,
            constant_input: true,
        });
    }
    let span = hi - lo;
    let values = d.values.iter().map(|v| (v - lo) / span).collect();
    Ok(Normalized {
        depth: DepthMap {
            width: d.width,
            height: d.height,
            values,
        },
        constant_input: false,
    })
}

/// H×W binary raster, row-major. `true` = inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::InvalidInput(format!(
                "mask {}x{} needs {} bits, got {}",
                width,
                height,
                expected,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for v in 0..height {
            for u in 0..width {
                bits.push(f(u, v));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: u32, v: u32) -> bool {
        debug_assert!(u < self.width && v < self.height);
        self.bits[v as usize * self.width as usize + u as usize]
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Number of inside pixels. Exact.
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    fn check_dims(&self, other: &Mask, context: &'static str) -> Result<()> {
        if !self.same_dims(other) {
            return Err(Error::dims(
                context,
                (self.width, self.height),
                (other.width, other.height),
            ));
        }
        Ok(())
    }

    /// Pixelwise `self AND other`.
    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.check_dims(other, "mask and")?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && *b)
                .collect(),
        })
    }

    /// Pixelwise `self AND NOT other`.
    pub fn and_not(&self, other: &Mask) -> Result<Mask> {
        self.check_dims(other, "mask and_not")?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && !*b)
                .collect(),
        })
    }

    /// Pixelwise `self OR other`.
    pub fn or(&self, other: &Mask) -> Result<Mask> {
        self.check_dims(other, "mask or")?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a || *b)
                .collect(),
        })
    }

    /// Pixelwise complement.
    pub fn not(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !*b).collect(),
        }
    }

    /// `true` iff every inside pixel of `self` is inside `other`.
    pub fn is_subset_of(&self, other: &Mask) -> Result<bool> {
        self.check_dims(other, "mask subset")?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b))
    }

    /// Row-major indices of inside pixels.
    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i)
    }
}

/// `|visible ∩ amodal| / |amodal|`, in `(0, 1]`.
///
/// Errors on an empty amodal mask and on `visible ⊄ amodal`.
pub fn visible_ratio(amodal: &Mask, visible: &Mask) -> Result<f64> {
    if !visible.is_subset_of(amodal)? {
        return Err(Error::InvariantViolation(
            "visible mask is not a subset of the amodal mask".into(),
        ));
    }
    let denom = amodal.popcount();
    if denom == 0 {
        return Err(Error::EmptyMask("amodal mask"));
    }
    let num = visible.and(amodal)?.popcount();
    Ok(num as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_affine() {
        let d = DepthMap::new(3, 1, vec![2.0, 4.0, 6.0]).unwrap();
        let n = normalize_unit(&d).unwrap();
        assert!(!n.constant_input);
        assert_eq!(n.depth.values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_flags() {
        let d = DepthMap::new(2, 1, vec![0.3, 0.3]).unwrap();
        let n = normalize_unit(&d).unwrap();
        assert!(n.constant_input);
        assert_eq!(n.depth.values(), &[0.0, 0.0]);
    }

    #[test]
    fn normalize_identity_on_unit_range() {
        let d = DepthMap::new(3, 1, vec![0.0, 0.25, 1.0]).unwrap();
        let n = normalize_unit(&d).unwrap();
        assert_eq!(n.depth.values(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn normalize_empty_rejected() {
        let d = DepthMap::new(0, 0, vec![]).unwrap();
        assert!(matches!(normalize_unit(&d), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn normalize_idempotent_bitwise() {
        let d = DepthMap::new(5, 1, vec![0.7, 1.9, 0.2, 3.4, 2.2]).unwrap();
        let once = normalize_unit(&d).unwrap().depth;
        let twice = normalize_unit(&once).unwrap().depth;
        assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn depth_map_rejects_bad_values() {
        assert!(DepthMap::new(2, 1, vec![1.0]).is_err());
        assert!(DepthMap::new(2, 1, vec![1.0, -0.1]).is_err());
        assert!(DepthMap::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(DepthMap::new(2, 1, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn invert_convention_flips_order() {
        let d = DepthMap::new(3, 1, vec![0.0, 1.0, 4.0]).unwrap();
        let inv = d.invert_convention();
        assert_eq!(inv.values(), &[4.0, 3.0, 0.0]);
    }

    #[test]
    fn mask_and_annihilator() {
        let full = Mask::full(4, 4);
        let empty = Mask::empty(4, 4);
        assert_eq!(full.and(&empty).unwrap(), empty);
        assert_eq!(full.and_not(&empty).unwrap(), full);
    }

    #[test]
    fn mask_dimension_mismatch() {
        let a = Mask::full(4, 4);
        let b = Mask::full(3, 4);
        assert!(matches!(a.and(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn popcount_of_intersection() {
        // 10x10 square mask `a`, `b` covering 30 of its pixels.
        let a = Mask::full(10, 10);
        let b = Mask::from_fn(10, 10, |u, v| v < 3 && u < 10);
        assert_eq!(a.and(&b).unwrap().popcount(), 30);
    }

    #[test]
    fn visible_ratio_arithmetic() {
        let amodal = Mask::from_fn(10, 10, |_, _| true);
        let visible = Mask::from_fn(10, 10, |u, v| v * 10 + u < 70);
        assert_eq!(visible_ratio(&amodal, &visible).unwrap(), 0.7);
        assert_eq!(visible_ratio(&amodal, &amodal).unwrap(), 1.0);
    }

    #[test]
    fn visible_ratio_errors() {
        let amodal = Mask::empty(4, 4);
        let visible = Mask::empty(4, 4);
        assert!(matches!(
            visible_ratio(&amodal, &visible),
            Err(Error::EmptyMask(_))
        ));

        let amodal = Mask::from_fn(4, 4, |u, _| u < 2);
        let visible = Mask::from_fn(4, 4, |u, _| u >= 2);
        assert!(matches!(
            visible_ratio(&amodal, &visible),
            Err(Error::InvariantViolation(_))
        ));
    }
}
