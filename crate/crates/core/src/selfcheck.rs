//! Runtime invariant battery behind the `selfcheck` CLI subcommand.
//!
//! Each check re-verifies one documented property on fresh random
//! instances drawn from the given seed, independently of the unit tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::align::{blend_prediction, fit_scale_shift};
use crate::camera::{project, unproject, CameraIntrinsics};
use crate::compose::{build_sample, composite, DepthOrderPolicy, LayerRole, SceneLayer};
use crate::flow::{euler_sample, flow_path, flow_target, FlowState};
use crate::io::{encode_pfm, parse_pfm};
use crate::metrics::{evaluate_sample, EvalOptions};
use crate::objectives::{silog_grad, silog_loss, SilogConfig};
use crate::raster::{normalize_unit, visible_ratio, DepthMap, Mask};
use crate::sample::Bucket;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

fn random_depth(rng: &mut ChaCha8Rng, w: u32, h: u32) -> DepthMap {
    DepthMap::from_fn(w, h, |_, _| rng.gen_range(0.05..2.0)).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> Mask {
    Mask::from_fn(w, h, |_, _| rng.gen_bool(density))
}

/// Runs the full battery. Deterministic for a given seed; the silog
/// configuration and noise-augmentation level are caller-overridable.
pub fn run_battery(seed: u64, silog: &SilogConfig, sigma_min: f64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_mask_algebra(),
        check_normalize_idempotent(&mut rng),
        check_pfm_roundtrip(&mut rng),
        check_unproject_roundtrip(&mut rng),
        check_affine_recovery(&mut rng),
        check_fit_minimizer(&mut rng),
        check_blend_preserves_visible(&mut rng),
        check_gt_construction(&mut rng),
        check_occlusion_monotonicity(),
        check_silog_scale_behavior(&mut rng, silog),
        check_silog_gradient(&mut rng, silog),
        check_flow_endpoints(&mut rng, sigma_min),
        check_euler_consistency(),
        check_metric_properties(&mut rng),
        check_bucket_partition(&mut rng),
    ]
}

fn check_mask_algebra() -> CheckResult {
    const NAME: &str = "mask boolean algebra (exhaustive 2x2)";
    let n = 4u32;
    let masks: Vec<Mask> = (0..1u32 << n)
        .map(|bits| Mask::new(2, 2, (0..n).map(|i| bits >> i & 1 == 1).collect()).unwrap())
        .collect();
    for a in &masks {
        if a.and(a).unwrap() != *a {
            return CheckResult::fail(NAME, "idempotence failed");
        }
        for b in &masks {
            let de_morgan = a.and(b).unwrap().not() != a.not().or(&b.not()).unwrap();
            let de_morgan2 = a.or(b).unwrap().not() != a.not().and(&b.not()).unwrap();
            if de_morgan || de_morgan2 {
                return CheckResult::fail(NAME, "De Morgan failed");
            }
            if a.and_not(b).unwrap() != a.and(&b.not()).unwrap() {
                return CheckResult::fail(NAME, "and_not mismatch");
            }
            if a.and(b).unwrap().popcount() + a.and_not(b).unwrap().popcount() != a.popcount() {
                return CheckResult::fail(NAME, "popcount partition failed");
            }
        }
    }
    CheckResult::pass(NAME, format!("{} mask pairs", masks.len() * masks.len()))
}

fn check_normalize_idempotent(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "normalize_unit idempotent and in [0, 1]";
    for _ in 0..50 {
        let d = random_depth(rng, 9, 7);
        let once = match normalize_unit(&d) {
            Ok(n) => n.depth,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        let twice = normalize_unit(&once).unwrap().depth;
        if once != twice {
            return CheckResult::fail(NAME, "normalize(normalize(d)) != normalize(d)");
        }
        let (lo, hi) = once.min_max().unwrap();
        if lo != 0.0 || hi != 1.0 {
            return CheckResult::fail(NAME, format!("range [{lo}, {hi}]"));
        }
    }
    CheckResult::pass(NAME, "50 random maps")
}

fn check_pfm_roundtrip(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "pfm write/read bit-exact";
    for _ in 0..25 {
        // file payloads are f32; draw values on that grid
        let d = DepthMap::from_fn(6, 5, |_, _| rng.gen_range(0.0f32..4.0) as f64).unwrap();
        match parse_pfm(&encode_pfm(&d)) {
            Ok(back) if back == d => {}
            Ok(_) => return CheckResult::fail(NAME, "values changed across roundtrip"),
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        }
    }
    CheckResult::pass(NAME, "25 random rasters")
}

fn check_unproject_roundtrip(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "unproject/project pixel roundtrip < 1e-9";
    let k = CameraIntrinsics::new(72.0, 64.0, 15.5, 11.5).unwrap();
    let d = DepthMap::from_fn(32, 24, |_, _| rng.gen_range(0.5..3.0)).unwrap();
    let cloud = unproject(&d, &k, &Mask::full(32, 24)).unwrap();
    let mut i = 0usize;
    for v in 0..24u32 {
        for u in 0..32u32 {
            let (pu, pv) = project(&cloud[i], &k);
            if (pu - u as f64).abs() > 1e-9 || (pv - v as f64).abs() > 1e-9 {
                return CheckResult::fail(NAME, format!("pixel ({u}, {v}) off"));
            }
            i += 1;
        }
    }
    CheckResult::pass(NAME, "768 pixels")
}

fn check_affine_recovery(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "scale-and-shift recovery within 1e-9";
    for _ in 0..100 {
        let d = random_depth(rng, 8, 6);
        let s = rng.gen_range(0.1..10.0);
        let t = rng.gen_range(0.0..2.0);
        let target = DepthMap::new(8, 6, d.values().iter().map(|v| s * v + t).collect()).unwrap();
        let fit = match fit_scale_shift(&d, &target, &Mask::full(8, 6)) {
            Ok(f) => f,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        if ((fit.s - s) / s).abs() > 1e-9 || (fit.t - t).abs() > 1e-9 * t.max(1.0) {
            return CheckResult::fail(
                NAME,
                format!("wanted ({s}, {t}), got ({}, {})", fit.s, fit.t),
            );
        }
    }
    CheckResult::pass(NAME, "100 random transforms")
}

fn check_fit_minimizer(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "fit is a local minimum of the squared residual";
    for _ in 0..25 {
        let source = random_depth(rng, 7, 5);
        let target = random_depth(rng, 7, 5);
        let support = Mask::full(7, 5);
        let fit = fit_scale_shift(&source, &target, &support).unwrap();
        let sse = |s: f64, t: f64| -> f64 {
            source
                .values()
                .iter()
                .zip(target.values())
                .map(|(b, o)| {
                    let r = s * b + t - o;
                    r * r
                })
                .sum()
        };
        let base = sse(fit.s, fit.t);
        let eps = 1e-4;
        for (ds, dt) in [
            (eps, 0.0),
            (-eps, 0.0),
            (0.0, eps),
            (0.0, -eps),
            (eps, eps),
            (-eps, -eps),
            (eps, -eps),
            (-eps, eps),
        ] {
            if sse(fit.s + ds, fit.t + dt) < base - 1e-12 {
                return CheckResult::fail(NAME, "perturbation decreased the residual");
            }
        }
    }
    CheckResult::pass(NAME, "25 instances x 8 directions")
}

fn check_blend_preserves_visible(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "blend is bit-identical outside the occluded region";
    for _ in 0..25 {
        let observed = random_depth(rng, 10, 8);
        let predicted = random_depth(rng, 10, 8);
        let amodal = random_mask(rng, 10, 8, 0.5);
        let visible = amodal.and(&random_mask(rng, 10, 8, 0.6)).unwrap();
        let blended = match blend_prediction(&observed, &predicted, &amodal, &visible) {
            Ok(b) => b,
            Err(_) => continue, // degenerate draw, not what this check targets
        };
        let occluded = amodal.and_not(&visible).unwrap();
        for (i, (got, want)) in blended
            .depth
            .values()
            .iter()
            .zip(observed.values())
            .enumerate()
        {
            if !occluded.bits()[i] && got.to_bits() != want.to_bits() {
                return CheckResult::fail(NAME, format!("pixel {i} changed"));
            }
        }
    }
    CheckResult::pass(NAME, "25 random instances")
}

fn check_gt_construction(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "aligned gt reproduces the observation on the visible object";
    for _ in 0..20 {
        let depth =
            DepthMap::from_fn(12, 12, |u, v| 2.0 + 0.03 * (u as f64) + 0.02 * (v as f64)).unwrap();
        let object = Mask::from_fn(12, 12, |u, v| (3..9).contains(&u) && (3..9).contains(&v));
        let bg = SceneLayer::new(depth.clone(), object, LayerRole::Background).unwrap();
        let fg = SceneLayer::new(
            DepthMap::constant(12, 12, 0.5).unwrap(),
            Mask::from_fn(12, 12, |u, v| u < 7 && v < 7),
            LayerRole::Foreground,
        )
        .unwrap();
        let s = rng.gen_range(0.2..5.0);
        let t = rng.gen_range(0.0..1.0);
        let warped =
            DepthMap::new(12, 12, depth.values().iter().map(|v| s * v + t).collect()).unwrap();
        let sample = match build_sample("chk", &bg, &fg, &warped, DepthOrderPolicy::Strict) {
            Ok(s) => s,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for i in sample.visible_mask.inside_indices() {
            let got = sample.gt_amodal_depth.values()[i];
            let want = sample.observation_depth.values()[i];
            if (got - want).abs() > 1e-9 {
                return CheckResult::fail(NAME, format!("pixel {i}: {got} vs {want}"));
            }
        }
    }
    CheckResult::pass(NAME, "20 random affine warps")
}

fn check_occlusion_monotonicity() -> CheckResult {
    const NAME: &str = "growing the occluder never raises the visible ratio";
    let amodal = Mask::from_fn(16, 16, |u, v| (4..12).contains(&u) && (4..12).contains(&v));
    let mut prev = 1.0f64;
    for size in 0..14u32 {
        let occluder = Mask::from_fn(16, 16, |u, v| u < size && v < 16);
        let visible = amodal.and_not(&occluder).unwrap();
        if visible.popcount() == 0 {
            break;
        }
        let r = visible_ratio(&amodal, &visible).unwrap();
        if r > prev {
            return CheckResult::fail(NAME, format!("ratio rose to {r} at size {size}"));
        }
        prev = r;
    }
    CheckResult::pass(NAME, "nested occluder sweep")
}

fn check_silog_scale_behavior(rng: &mut ChaCha8Rng, cfg: &SilogConfig) -> CheckResult {
    const NAME: &str = "silog(c*gt, gt) = alpha*|ln c|*sqrt(1-lambda)";
    let gt = random_depth(rng, 6, 6);
    let mask = Mask::full(6, 6);
    for _ in 0..50 {
        let c = rng.gen_range(0.05..20.0);
        let pred = DepthMap::new(6, 6, gt.values().iter().map(|v| c * v).collect()).unwrap();
        let loss = silog_loss(&pred, &gt, &mask, cfg).unwrap();
        let want = cfg.alpha * c.ln().abs() * (1.0 - cfg.lambda).sqrt();
        if (loss - want).abs() > 1e-9 * want.max(1.0) {
            return CheckResult::fail(NAME, format!("c={c}: {loss} vs {want}"));
        }
    }
    CheckResult::pass(NAME, "50 random scales")
}

fn check_silog_gradient(rng: &mut ChaCha8Rng, cfg: &SilogConfig) -> CheckResult {
    const NAME: &str = "silog gradient matches central differences (1e-4)";
    for _ in 0..100 {
        let gt = random_depth(rng, 4, 3);
        let pred = random_depth(rng, 4, 3);
        let mask = Mask::full(4, 3);
        let grad = silog_grad(&pred, &gt, &mask, cfg).unwrap();
        if grad.at_minimum {
            continue;
        }
        let i = rng.gen_range(0..pred.len());
        let h = 1e-5;
        let mut plus = pred.values().to_vec();
        plus[i] += h;
        let mut minus = pred.values().to_vec();
        minus[i] -= h;
        let lp = silog_loss(&DepthMap::new(4, 3, plus).unwrap(), &gt, &mask, cfg).unwrap();
        let lm = silog_loss(&DepthMap::new(4, 3, minus).unwrap(), &gt, &mask, cfg).unwrap();
        let fd = (lp - lm) / (2.0 * h);
        let denom = fd.abs().max(1e-8);
        if ((grad.values[i] - fd) / denom).abs() > 1e-4 {
            return CheckResult::fail(
                NAME,
                format!("pixel {i}: analytic {} vs fd {fd}", grad.values[i]),
            );
        }
    }
    CheckResult::pass(NAME, "100 random instances")
}

fn check_flow_endpoints(rng: &mut ChaCha8Rng, sigma_min: f64) -> CheckResult {
    const NAME: &str = "flow path endpoints exact; noisy mean within 5 sigma";
    let x0: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let x1: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let p0 = flow_path(
        &FlowState::new(x0.clone(), x1.clone(), 0.0, 0.0).unwrap(),
        rng,
    );
    let p1 = flow_path(
        &FlowState::new(x0.clone(), x1.clone(), 1.0, 0.0).unwrap(),
        rng,
    );
    if p0 != x0 || p1 != x1 {
        return CheckResult::fail(NAME, "deterministic endpoints not exact");
    }
    let state = match FlowState::new(x0.clone(), x1.clone(), 0.3, sigma_min) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let draws = 20_000usize;
    let mut mean = 0.0f64;
    for _ in 0..draws {
        mean += flow_path(&state, rng)[0];
    }
    mean /= draws as f64;
    let interpolant = 0.3 * x1[0] + 0.7 * x0[0];
    // accumulation rounding floor covers sigma_min = 0
    let tol = (5.0 * state.sigma_min / (draws as f64).sqrt()).max(1e-9);
    if (mean - interpolant).abs() > tol {
        return CheckResult::fail(NAME, format!("mean {mean} vs {interpolant}"));
    }
    CheckResult::pass(NAME, format!("{draws} draws at sigma_min {sigma_min}"))
}

fn check_euler_consistency() -> CheckResult {
    const NAME: &str = "euler error halves when steps double";
    let exact = std::f64::consts::E;
    let err = |n: usize| (euler_sample(|_, x| x.to_vec(), &[1.0], n).unwrap()[0] - exact).abs();
    for n in [64usize, 128, 256] {
        let ratio = err(n) / err(2 * n);
        if !(1.8..=2.2).contains(&ratio) {
            return CheckResult::fail(NAME, format!("n={n}: ratio {ratio}"));
        }
    }
    let v = flow_target(&[1.0, -1.0], &[2.5, 3.5]).unwrap();
    for n in [1usize, 3, 17] {
        let out = euler_sample(|_, _| v.clone(), &[1.0, -1.0], n).unwrap();
        if (out[0] - 2.5).abs() > 1e-12 || (out[1] - 3.5).abs() > 1e-12 {
            return CheckResult::fail(NAME, "constant field not exact");
        }
    }
    CheckResult::pass(NAME, "doubling sweep + constant field")
}

fn check_metric_properties(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "metric scale sensitivity and delta monotonicity";
    let gt = random_depth(rng, 8, 8);
    let mask = Mask::full(8, 8);
    for alpha in [0.81, 0.9, 1.1, 1.24] {
        let pred = DepthMap::new(8, 8, gt.values().iter().map(|v| alpha * v).collect()).unwrap();
        let m = evaluate_sample(&pred, &gt, &mask, Bucket::Easy, &EvalOptions::default()).unwrap();
        if m.rmse_x100 <= 0.0 {
            return CheckResult::fail(NAME, format!("rmse not positive at alpha {alpha}"));
        }
        if m.delta_acc != 1.0 {
            return CheckResult::fail(NAME, format!("delta not 100% at alpha {alpha}"));
        }
    }
    let pred = random_depth(rng, 8, 8);
    let mut prev = 0.0f64;
    for threshold in [1.05, 1.25, 1.5, 2.0, 4.0] {
        let opts = EvalOptions {
            delta_threshold: threshold,
            ..EvalOptions::default()
        };
        let m = evaluate_sample(&pred, &gt, &mask, Bucket::Easy, &opts).unwrap();
        if m.delta_acc < prev {
            return CheckResult::fail(NAME, "delta decreased as threshold rose");
        }
        prev = m.delta_acc;
    }
    CheckResult::pass(NAME, "scale sweep + threshold sweep")
}

fn check_bucket_partition(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "every visible ratio lands in exactly one bucket";
    for _ in 0..200 {
        let r = rng.gen_range(f64::MIN_POSITIVE..=1.0);
        let bucket = match Bucket::from_visible_ratio(r) {
            Ok(b) => b,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        let memberships = [r > 0.75, r > 0.5 && r <= 0.75, r > 0.0 && r <= 0.5];
        if memberships.iter().filter(|m| **m).count() != 1 {
            return CheckResult::fail(NAME, format!("ratio {r} in multiple intervals"));
        }
        let expected = if memberships[0] {
            Bucket::Easy
        } else if memberships[1] {
            Bucket::Medium
        } else {
            Bucket::Hard
        };
        if bucket != expected {
            return CheckResult::fail(NAME, format!("ratio {r} misbucketed"));
        }
    }
    // also exercise composite's mask partition on a worked scene
    let bg = SceneLayer::new(
        DepthMap::constant(8, 8, 2.0).unwrap(),
        Mask::from_fn(8, 8, |u, v| u >= 2 && v >= 2),
        LayerRole::Background,
    )
    .unwrap();
    let fg = SceneLayer::new(
        DepthMap::constant(8, 8, 0.5).unwrap(),
        Mask::from_fn(8, 8, |u, v| u < 5 && v < 5),
        LayerRole::Foreground,
    )
    .unwrap();
    let c = composite(&bg, &fg, DepthOrderPolicy::Strict).unwrap();
    let occluded = c.amodal_mask.and_not(&c.visible_mask).unwrap();
    if occluded.and(&c.visible_mask).unwrap().popcount() != 0
        || occluded.popcount() + c.visible_mask.popcount() != c.amodal_mask.popcount()
    {
        return CheckResult::fail(NAME, "occluded/visible do not partition amodal");
    }
    CheckResult::pass(NAME, "200 ratios + composite partition")
}
