//! Conditional flow-matching math on plain vectors: the noise-augmented
//! linear probability path, its constant regression target, and a generic
//! Euler integrator for a caller-supplied velocity field.
//!
//! Vectors here are arbitrary-dimensional `f64` slices; encoding in and
//! out of any latent space is the caller's business.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};

/// A point on the path from `x0` (source representation) to `x1` (target
/// representation) at time `t`, with noise level `sigma_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub t: f64,
    pub sigma_min: f64,
}

impl FlowState {
    pub fn new(x0: Vec<f64>, x1: Vec<f64>, t: f64, sigma_min: f64) -> Result<Self> {
        if x0.len() != x1.len() {
            return Err(Error::InvalidInput(format!(
                "flow endpoints have different dimensions: {} vs {}",
                x0.len(),
                x1.len()
            )));
        }
        if !(0.0..=1.0).contains(&t) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("flow time {t} outside [0, 1]")));
        }
        if !(sigma_min >= 0.0 && sigma_min.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sigma_min {sigma_min} must be finite and >= 0"
            )));
        }
        Ok(Self {
            x0,
            x1,
            t,
            sigma_min,
        })
    }
}

/// Default noise-augmentation level.
pub const DEFAULT_SIGMA_MIN: f64 = 1e-4;

/// Samples the probability path `N(t·x1 + (1-t)·x0, sigma_min²·I)`.
///
/// With `sigma_min = 0` this is the deterministic interpolant and the RNG
/// is not consumed, so the endpoints are exact at `t ∈ {0, 1}`.
pub fn flow_path<R: Rng + ?Sized>(state: &FlowState, rng: &mut R) -> Vec<f64> {
    state
        .x0
        .iter()
        .zip(&state.x1)
        .map(|(&a, &b)| {
            let mean = state.t * b + (1.0 - state.t) * a;
            if state.sigma_min > 0.0 {
                let eps: f64 = rng.sample(StandardNormal);
                mean + state.sigma_min * eps
            } else {
                mean
            }
        })
        .collect()
}

/// Regression target of the flow objective: the constant displacement
/// `x1 - x0`.
pub fn flow_target(x0: &[f64], x1: &[f64]) -> Result<Vec<f64>> {
    if x0.len() != x1.len() {
        return Err(Error::InvalidInput(format!(
            "flow endpoints have different dimensions: {} vs {}",
            x0.len(),
            x1.len()
        )));
    }
    Ok(x0.iter().zip(x1).map(|(a, b)| b - a).collect())
}

/// Integrates `dx/dt = field(t, x)` from `t = 0` to `t = 1` with forward
/// Euler: `x ← x + (1/n)·field(k/n, x)` for `k = 0..n`.
pub fn euler_sample(
    field: impl Fn(f64, &[f64]) -> Vec<f64>,
    x0: &[f64],
    n_steps: usize,
) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(Error::InvalidInput(
            "euler_sample needs n_steps >= 1".into(),
        ));
    }
    let dt = 1.0 / n_steps as f64;
    let mut x = x0.to_vec();
    for k in 0..n_steps {
        let t = k as f64 / n_steps as f64;
        let v = field(t, &x);
        if v.len() != x.len() {
            return Err(Error::InvalidInput(format!(
                "velocity field returned dimension {} at step {k}, expected {}",
                v.len(),
                x.len()
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericalError { step: k });
        }
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += dt * vi;
        }
    }
    Ok(x)
}

/// The concrete guidance channels conditioning an amodal depth model: the
/// observation depth map and the amodal mask, dimension-checked together.
#[derive(Debug, Clone)]
pub struct GuidancePack {
    pub observation_depth: DepthMap,
    pub amodal_mask: Mask,
}

impl GuidancePack {
    pub fn new(observation_depth: DepthMap, amodal_mask: Mask) -> Result<Self> {
        if amodal_mask.width() != observation_depth.width()
            || amodal_mask.height() != observation_depth.height()
        {
            return Err(Error::dims(
                "guidance mask",
                (observation_depth.width(), observation_depth.height()),
                (amodal_mask.width(), amodal_mask.height()),
            ));
        }
        Ok(Self {
            observation_depth,
            amodal_mask,
        })
    }
}
