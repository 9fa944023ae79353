//! Grid-search oracle for the scale-and-shift fit, independent of the
//! normal-equation solver it cross-checks.

/// Exhaustive SSE minimizer over a progressively refined (s, t) grid.
/// The refinement window stays wide (±20 of 61 cells) so the elongated
/// valley of the quadratic cannot escape between passes; the final grid
/// resolution is below 1e-6 on both axes.
pub fn grid_search_fit(
    source: &[f64],
    target: &[f64],
    mut s_range: (f64, f64),
    mut t_range: (f64, f64),
) -> (f64, f64) {
    let sse = |s: f64, t: f64| -> f64 {
        source
            .iter()
            .zip(target)
            .map(|(b, o)| {
                let r = s * b + t - o;
                r * r
            })
            .sum()
    };
    let cells = 60usize;
    let window = 20.0f64;
    let mut best = (s_range.0, t_range.0);
    for _ in 0..60 {
        let s_step = (s_range.1 - s_range.0) / cells as f64;
        let t_step = (t_range.1 - t_range.0) / cells as f64;
        if s_step.max(t_step) < 2e-8 {
            break;
        }
        let mut best_sse = f64::INFINITY;
        for i in 0..=cells {
            let s = s_range.0 + s_step * i as f64;
            for j in 0..=cells {
                let t = t_range.0 + t_step * j as f64;
                let e = sse(s, t);
                if e < best_sse {
                    best_sse = e;
                    best = (s, t);
                }
            }
        }
        s_range = (best.0 - window * s_step, best.0 + window * s_step);
        t_range = (best.1 - window * t_step, best.1 + window * t_step);
    }
    best
}
