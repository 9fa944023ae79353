//! Closed-form scale-and-shift least squares between relative depth maps,
//! and blending of a predicted amodal depth into an observed map.
//!
//! The fit minimizes `Σ (s·b_i + t - o_i)²` over the support pixels and is
//! solved exactly from the 2×2 normal equations. All accumulation is in
//! f64; no robust reweighting is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};

/// Relative variance below which the normal system counts as singular,
/// scaled by the mean squared source value so the test is scale-free.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Exact minimizer of `Σ (s·source + t - target)²` over a support mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    /// Scale factor (dimensionless).
    pub s: f64,
    /// Shift, in relative-depth units.
    pub t: f64,
    /// Root mean square of `s·source + t - target` over the support.
    pub rmse_residual: f64,
    /// Number of support pixels used.
    pub n_pixels: usize,
}

/// Solves the scale-and-shift normal equations over `support`.
///
/// With `A = Σb²`, `B = Σb`, `C = Σb·o`, `D = Σo` over the support:
/// `s = (N·C - B·D) / (N·A - B²)`, `t = (D - s·B) / N`.
///
/// Errors with `InsufficientSupport` for fewer than two pixels and
/// `DegenerateSupport` when the source is (numerically) constant on the
/// support.
pub fn fit_scale_shift(source: &DepthMap, target: &DepthMap, support: &Mask) -> Result<AffineFit> {
    if !source.same_dims(target) {
        return Err(Error::dims(
            "fit target",
            (source.width(), source.height()),
            (target.width(), target.height()),
        ));
    }
    if support.width() != source.width() || support.height() != source.height() {
        return Err(Error::dims(
            "fit support",
            (source.width(), source.height()),
            (support.width(), support.height()),
        ));
    }

    let sv = source.values();
    let tv = target.values();
    let mut n = 0usize;
    let (mut sum_bb, mut sum_b, mut sum_bo, mut sum_o) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in support.inside_indices() {
        let b = sv[i];
        let o = tv[i];
        sum_bb += b * b;
        sum_b += b;
        sum_bo += b * o;
        sum_o += o;
        n += 1;
    }
    if n < 2 {
        return Err(Error::InsufficientSupport { pixels: n });
    }
    let nf = n as f64;
    let det = nf * sum_bb - sum_b * sum_b;
    let mean_sq = sum_bb / nf;
    if det / (nf * nf) <= SINGULARITY_TOL * mean_sq {
        return Err(Error::DegenerateSupport);
    }
    let s = (nf * sum_bo - sum_b * sum_o) / det;
    let t = (sum_o - s * sum_b) / nf;

    let mut sq = 0.0f64;
    for i in support.inside_indices() {
        let r = s * sv[i] + t - tv[i];
        sq += r * r;
    }
    Ok(AffineFit {
        s,
        t,
        rmse_residual: (sq / nf).sqrt(),
        n_pixels: n,
    })
}

/// [`apply_affine`] output: the mapped raster and how many pixels were
/// clamped up to zero.
#[derive(Debug, Clone)]
pub struct AffineApplied {
    pub depth: DepthMap,
    pub clamped: usize,
}

/// Maps every pixel to `s·value + t`. Negative results are clamped to 0
/// and counted (downstream metrics take logarithms).
pub fn apply_affine(d: &DepthMap, fit: &AffineFit) -> Result<AffineApplied> {
    if !(fit.s.is_finite() && fit.t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite fit: s={} t={}",
            fit.s, fit.t
        )));
    }
    let mut clamped = 0usize;
    let values = d
        .values()
        .iter()
        .map(|v| {
            let mapped = fit.s * v + fit.t;
            if mapped < 0.0 {
                clamped += 1;
                0.0
            } else {
                mapped
            }
        })
        .collect();
    Ok(AffineApplied {
        depth: DepthMap::new(d.width(), d.height(), values)?,
        clamped,
    })
}

/// [`blend_prediction`] output.
#[derive(Debug, Clone)]
pub struct Blended {
    pub depth: DepthMap,
    /// Fit mapping the prediction into the observed frame.
    pub fit: AffineFit,
    /// Occluded pixels clamped up to zero after the affine map.
    pub clamped: usize,
}

/// Blends a predicted amodal depth into the observed map: fits
/// prediction→observed over the visible support, then replaces only the
/// occluded region (`amodal AND NOT visible`) with `s·predicted + t`.
/// Every pixel outside the occluded region is copied from `observed`
/// bit-exactly.
pub fn blend_prediction(
    observed: &DepthMap,
    predicted: &DepthMap,
    amodal: &Mask,
    visible: &Mask,
) -> Result<Blended> {
    if !observed.same_dims(predicted) {
        return Err(Error::dims(
            "blend predicted",
            (observed.width(), observed.height()),
            (predicted.width(), predicted.height()),
        ));
    }
    if !visible.is_subset_of(amodal)? {
        return Err(Error::InvariantViolation(
            "visible mask is not a subset of the amodal mask".into(),
        ));
    }
    let fit = fit_scale_shift(predicted, observed, visible)?;
    let occluded = amodal.and_not(visible)?;

    let mut clamped = 0usize;
    let mut values = observed.values().to_vec();
    let pv = predicted.values();
    for i in occluded.inside_indices() {
        let mapped = fit.s * pv[i] + fit.t;
        values[i] = if mapped < 0.0 {
            clamped += 1;
            0.0
        } else {
            mapped
        };
    }
    Ok(Blended {
        depth: DepthMap::new(observed.width(), observed.height(), values)?,
        fit,
        clamped,
    })
}
