//! Scale-invariant logarithmic loss with analytic gradients.
//!
//! `L = α·sqrt(mean(g²) - λ·(mean g)²)` with `g_i = ln(pred_i) - ln(gt_i)`
//! over the valid pixels. λ interpolates between plain log-RMSE (λ=0) and
//! a fully scale-invariant error (λ=1).

use crate::error::{Error, Result};
use crate::metrics::LOG_FLOOR;
use crate::raster::{DepthMap, Mask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilogConfig {
    /// Scale-invariance weight, in [0, 1].
    pub lambda: f64,
    /// Output scaling, positive.
    pub alpha: f64,
}

impl SilogConfig {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "silog lambda {lambda} outside [0, 1]"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "silog alpha {alpha} must be positive"
            )));
        }
        Ok(Self { lambda, alpha })
    }
}

impl Default for SilogConfig {
    fn default() -> Self {
        Self {
            lambda: 0.85,
            alpha: 10.0,
        }
    }
}

struct LogDiffs {
    sum_g: f64,
    n: f64,
    /// Variance of g, two-pass (mean of squared deviations).
    variance: f64,
}

impl LogDiffs {
    /// `mean(g²) - λ·(mean g)²`, evaluated as `(1-λ)·mean² + var` so the
    /// λ=1 case does not cancel catastrophically.
    fn radicand(&self, lambda: f64) -> f64 {
        let mean = self.sum_g / self.n;
        (1.0 - lambda) * mean * mean + self.variance
    }
}

fn log_diffs(pred: &DepthMap, gt: &DepthMap, valid: &Mask) -> Result<LogDiffs> {
    if !pred.same_dims(gt) {
        return Err(Error::dims(
            "silog gt",
            (pred.width(), pred.height()),
            (gt.width(), gt.height()),
        ));
    }
    if valid.width() != pred.width() || valid.height() != pred.height() {
        return Err(Error::dims(
            "silog mask",
            (pred.width(), pred.height()),
            (valid.width(), valid.height()),
        ));
    }
    let n = valid.popcount();
    if n == 0 {
        return Err(Error::EmptyMask("silog valid mask"));
    }
    let pv = pred.values();
    let gv = gt.values();
    let g_at = |i: usize| pv[i].max(LOG_FLOOR).ln() - gv[i].max(LOG_FLOOR).ln();
    let mut sum_g = 0.0f64;
    for i in valid.inside_indices() {
        sum_g += g_at(i);
    }
    let nf = n as f64;
    let mean = sum_g / nf;
    let mut sq_dev = 0.0f64;
    for i in valid.inside_indices() {
        let d = g_at(i) - mean;
        sq_dev += d * d;
    }
    Ok(LogDiffs {
        sum_g,
        n: nf,
        variance: sq_dev / nf,
    })
}

/// Scale-invariant log loss over the valid pixels. The radicand is clamped
/// at zero to absorb negative-by-rounding values.
pub fn silog_loss(pred: &DepthMap, gt: &DepthMap, valid: &Mask, cfg: &SilogConfig) -> Result<f64> {
    let d = log_diffs(pred, gt, valid)?;
    Ok(cfg.alpha * d.radicand(cfg.lambda).max(0.0).sqrt())
}

/// [`silog_grad`] output: a full-raster gradient (zeros outside the valid
/// mask) plus a flag for the stationary point, where the square root's
/// derivative is undefined and zeros are returned.
#[derive(Debug, Clone)]
pub struct SilogGradient {
    pub values: Vec<f64>,
    pub at_minimum: bool,
}

/// Analytic gradient of [`silog_loss`] with respect to each predicted
/// pixel: `(α²/L)·(g_i/N - λ·Σg/N²)/pred_i` on valid pixels.
pub fn silog_grad(
    pred: &DepthMap,
    gt: &DepthMap,
    valid: &Mask,
    cfg: &SilogConfig,
) -> Result<SilogGradient> {
    let d = log_diffs(pred, gt, valid)?;
    let loss = cfg.alpha * d.radicand(cfg.lambda).max(0.0).sqrt();
    let mut values = vec![0.0f64; pred.len()];
    if loss == 0.0 {
        return Ok(SilogGradient {
            values,
            at_minimum: true,
        });
    }
    let pv = pred.values();
    let gv = gt.values();
    let coeff = cfg.alpha * cfg.alpha / loss;
    let mean_term = cfg.lambda * d.sum_g / (d.n * d.n);
    for i in valid.inside_indices() {
        let p = pv[i];
        if p < LOG_FLOOR {
            // flooring makes the loss locally constant in this pixel
            continue;
        }
        let g = p.max(LOG_FLOOR).ln() - gv[i].max(LOG_FLOOR).ln();
        values[i] = coeff * (g / d.n - mean_term) / p;
    }
    Ok(SilogGradient {
        values,
        at_minimum: false,
    })
}
