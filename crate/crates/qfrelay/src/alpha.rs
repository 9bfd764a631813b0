//! Optimization of the uplink/downlink time split.
//!
//! With a fraction `α` of channel uses spent on the uplink, the relay may
//! spend `(1-α)·C` downlink bits per uplink use, i.e. an effective quantizer
//! budget of `((1-α)/α)·C`, and the end-to-end sum rate is
//! `α · I(((1-α)/α)·C)` with `I` the traced envelope. That map is concave in
//! `α` (perspective of a concave function composed with an affine map), so a
//! golden-section search finds the unique maximizer; a grid guard double
//! checks the result because the piecewise-linear envelope has kinks.

use serde::{Deserialize, Serialize};

use crate::curve::Envelope;
use crate::{Error, Result};

/// Search domain: clipped away from the removable singularity at α = 0.
const ALPHA_MIN: f64 = 1e-4;
const ALPHA_MAX: f64 = 1.0 - 1e-4;
const GUARD_GRID: usize = 1000;

/// Result of the time-split optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha_star: f64,
    /// Sum rate `α*·I(c_effective)` in bits per channel use.
    pub r_sum: f64,
    /// Effective quantizer budget `((1-α*)/α*)·C` in bits.
    pub c_effective: f64,
    pub bracket_width_at_stop: f64,
    /// Set when the envelope is identically zero.
    pub degenerate: bool,
}

/// Sum rate at a fixed time split.
pub fn sum_rate_at_alpha(envelope: &Envelope, alpha: f64, c_downlink: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    alpha * envelope.eval((1.0 - alpha) / alpha * c_downlink)
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
///
/// Returns `(argmax, max, final bracket width)`; the returned point is the
/// best of all evaluated points, not just the final bracket midpoint.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };

    let mut iters = 0;
    while (b - a) > tol && iters < max_iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            if f2 > best_f {
                best_f = f2;
                best_x = x2;
            }
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            if f1 > best_f {
                best_f = f1;
                best_x = x1;
            }
        }
        iters += 1;
    }
    (best_x, best_f, b - a)
}

/// Maximize the sum rate over the time split.
///
/// Golden-section over `[1e-4, 1-1e-4]`, then a 1000-point grid pass whose
/// best bracket is refined again; the returned split dominates every grid
/// evaluation. The all-zero envelope is reported as degenerate rather than
/// an error.
pub fn optimize_alpha(envelope: &Envelope, c_downlink: f64, tol_alpha: f64) -> Result<AlphaResult> {
    if !(tol_alpha > 0.0 && tol_alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tol_alpha must be > 0, got {tol_alpha}"
        )));
    }
    if !(c_downlink >= 0.0 && c_downlink.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "c_downlink must be finite and >= 0, got {c_downlink}"
        )));
    }

    let f = |alpha: f64| sum_rate_at_alpha(envelope, alpha, c_downlink);

    if envelope.right_value() <= 0.0 {
        return Ok(AlphaResult {
            alpha_star: ALPHA_MAX,
            r_sum: 0.0,
            c_effective: (1.0 - ALPHA_MAX) / ALPHA_MAX * c_downlink,
            bracket_width_at_stop: ALPHA_MAX - ALPHA_MIN,
            degenerate: true,
        });
    }

    let (mut best_x, mut best_f, bracket) = golden_max(f, ALPHA_MIN, ALPHA_MAX, tol_alpha, 200);

    // Kink guard: scan a grid, refine around its argmax, keep the winner.
    let mut grid_best = (ALPHA_MIN, f(ALPHA_MIN));
    for k in 0..GUARD_GRID {
        let alpha = ALPHA_MIN + (ALPHA_MAX - ALPHA_MIN) * k as f64 / (GUARD_GRID - 1) as f64;
        let v = f(alpha);
        if v > grid_best.1 {
            grid_best = (alpha, v);
        }
    }
    if grid_best.1 > best_f {
        best_x = grid_best.0;
        best_f = grid_best.1;
    }
    let h = (ALPHA_MAX - ALPHA_MIN) / (GUARD_GRID - 1) as f64;
    let (rx, rf, _) = golden_max(
        f,
        (grid_best.0 - h).max(ALPHA_MIN),
        (grid_best.0 + h).min(ALPHA_MAX),
        tol_alpha,
        200,
    );
    if rf > best_f {
        best_x = rx;
        best_f = rf;
    }

    let c_effective = (1.0 - best_x) / best_x * c_downlink;
    Ok(AlphaResult {
        alpha_star: best_x,
        r_sum: best_f,
        c_effective,
        bracket_width_at_stop: bracket,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_envelope(i0: f64) -> Envelope {
        // Saturates immediately: worth i0 for any positive budget.
        Envelope::upper_concave(&[(0.0, 0.0), (1e-9, i0), (1.0, i0)])
    }

    #[test]
    fn all_uplink_time_starves_the_downlink() {
        let env = Envelope::upper_concave(&[(0.0, 0.0), (1.0, 0.8), (2.0, 1.0)]);
        assert_eq!(sum_rate_at_alpha(&env, 1.0, 1.5), 0.0);
    }

    #[test]
    fn vanishing_uplink_time_kills_the_rate() {
        let env = Envelope::upper_concave(&[(0.0, 0.0), (1.0, 0.8), (2.0, 1.0)]);
        assert!(sum_rate_at_alpha(&env, 1e-6, 1.5) < 1e-5);
    }

    #[test]
    fn fixed_split_arithmetic() {
        let env = Envelope::upper_concave(&[(0.0, 0.0), (1.0, 0.8), (4.0, 1.0)]);
        let v = sum_rate_at_alpha(&env, 1.0 / 3.0, 1.5);
        assert!((v - env.eval(3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn free_downlink_pushes_alpha_to_one() {
        let env = step_envelope(0.75);
        let res = optimize_alpha(&env, 1.5, 1e-6).unwrap();
        assert!(res.alpha_star > 0.999);
        assert!((res.r_sum - 0.75).abs() < 1e-3);
        assert!(!res.degenerate);
    }

    #[test]
    fn degenerate_envelope_is_flagged() {
        let env = Envelope::upper_concave(&[(0.0, 0.0), (1.0, 0.0)]);
        let res = optimize_alpha(&env, 1.5, 1e-6).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.r_sum, 0.0);
    }

    #[test]
    fn result_dominates_a_dense_grid() {
        let env = Envelope::upper_concave(&[
            (0.0, 0.0),
            (0.5, 0.35),
            (1.0, 0.6),
            (2.0, 0.85),
            (3.0, 0.95),
            (5.0, 1.0),
        ]);
        let res = optimize_alpha(&env, 1.2, 1e-6).unwrap();
        for k in 1..1000 {
            let alpha = k as f64 / 1000.0;
            assert!(
                res.r_sum >= sum_rate_at_alpha(&env, alpha, 1.2) - 1e-9,
                "grid point {alpha} beats the optimizer"
            );
        }
        // Reported parts are mutually consistent.
        assert!((res.r_sum - res.alpha_star * env.eval(res.c_effective)).abs() < 1e-12);
    }

    #[test]
    fn split_map_is_concave_on_a_grid() {
        let env =
            Envelope::upper_concave(&[(0.0, 0.0), (0.5, 0.4), (1.5, 0.8), (3.0, 0.97), (5.0, 1.0)]);
        let c = 1.5;
        let g: Vec<f64> = (0..100)
            .map(|k| {
                let alpha = 0.01 + 0.98 * k as f64 / 99.0;
                sum_rate_at_alpha(&env, alpha, c)
            })
            .collect();
        for k in 1..g.len() - 1 {
            let second = g[k + 1] - 2.0 * g[k] + g[k - 1];
            assert!(second <= 1e-9, "second difference {second} at index {k}");
        }
    }
}
