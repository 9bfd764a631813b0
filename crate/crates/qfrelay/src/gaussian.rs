//! Closed-form rate expressions for the symmetric Gaussian case.
//!
//! All three reference schemes quantize the relay observation through the
//! same Gaussian test channel `Ŷ = Y_r + Ẑ`, `Ẑ ~ N(0, N̂)` and differ only
//! in how the downlink budget constrains the quantization-noise variance:
//!
//! - joint decoding (`Nnc`): no index recovery, the destination decodes the
//!   uplink and downlink codes in one stage;
//! - `Cf`: the index is recovered with the destination's own message as
//!   side information, which lowers the downlink rate;
//! - `NoSw`: the index is recovered without side information, so the full
//!   index entropy crosses the downlink.
//!
//! For each scheme the sum rate at time split `α` is
//! `2α·C(P/(N_r + N̂*(α)))` with `C(x) = (1/2)·log2(1+x)` and `N̂*(α)` the
//! smallest feasible quantization noise. Joint decoding and `Cf` share the
//! same `N̂*`, so neither buys sum rate over the other here.

use serde::{Deserialize, Serialize};

use crate::alpha::golden_max;
use crate::channel::ChannelSpec;
use crate::{Error, Result};

/// Gaussian capacity per real dimension, `C(x) = (1/2)·log2(1 + x)`, bits.
pub fn c_awgn(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

const ALPHA_MIN: f64 = 1e-4;
const ALPHA_MAX: f64 = 1.0 - 1e-4;
/// Absolute slack when checking downlink feasibility constraints, so that
/// a constraint binding with equality is not rejected over rounding.
const FEAS_EPS: f64 = 1e-9;

/// Relaying scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Joint decoding / noisy network coding.
    Nnc,
    /// Compress-and-forward with side-information index recovery.
    Cf,
    /// Index recovery without side information.
    NoSw,
}

/// One evaluated closed-form design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDesign {
    pub scheme: Scheme,
    pub alpha: f64,
    /// Optimal quantization-noise variance (linear).
    pub nhat_star: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_sum: f64,
}

fn require_symmetric(spec: &ChannelSpec) -> Result<(f64, f64, f64, f64)> {
    spec.validate()?;
    if !spec.is_symmetric() {
        return Err(Error::AsymmetricSpec);
    }
    Ok((spec.p1, spec.pr, spec.nr, spec.n1))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Smallest quantization-noise variance meeting the downlink budget at time
/// split `alpha`, for a symmetric spec.
///
/// With `x = (1 + pr/n)^((1-α)/α)`:
/// - `NoSw`: `(2p + nr) / (x - 1)` — the full observation entropy crosses
///   the downlink;
/// - `Cf`: `(p + nr) / (x - 1)` — side information removes one signal;
/// - `Nnc`: the sum rate is maximized where its two rate expressions cross,
///   which solves to `(p + nr) / (x - 1)` as well.
pub fn nhat_star(scheme: Scheme, alpha: f64, spec: &ChannelSpec) -> Result<f64> {
    let (p, pr, nr, n) = require_symmetric(spec)?;
    check_alpha(alpha)?;
    let x = (1.0 + pr / n).powf((1.0 - alpha) / alpha);
    let denom = x - 1.0;
    let numerator = match scheme {
        Scheme::NoSw => 2.0 * p + nr,
        Scheme::Cf => p + nr,
        // Crossing point of the joint-decoding rate pair; equals the Cf
        // expression (see the unit test verifying the crossing).
        Scheme::Nnc => p + nr,
    };
    if denom <= 0.0 {
        // Zero downlink budget: infinitely coarse quantization.
        return Ok(f64::INFINITY);
    }
    Ok(numerator / denom)
}

/// Sum rate of a scheme at time split `alpha`, with the optimal `N̂`.
pub fn sum_rate(scheme: Scheme, alpha: f64, spec: &ChannelSpec) -> Result<GaussianDesign> {
    let nhat = nhat_star(scheme, alpha, spec)?;
    let (p, _, nr, _) = require_symmetric(spec)?;
    let r_sum = 2.0 * alpha * c_awgn(p / (nr + nhat));
    Ok(GaussianDesign {
        scheme,
        alpha,
        nhat_star: nhat,
        r1: r_sum / 2.0,
        r2: r_sum / 2.0,
        r_sum,
    })
}

/// Maximize a scheme's sum rate over the time split.
///
/// Golden-section over `(0, 1)` plus a 1000-point grid guard; the returned
/// design dominates every grid point.
pub fn optimize_alpha_gaussian(
    scheme: Scheme,
    spec: &ChannelSpec,
    tol: f64,
) -> Result<(f64, GaussianDesign)> {
    require_symmetric(spec)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!("tol must be > 0, got {tol}")));
    }
    let f = |alpha: f64| {
        sum_rate(scheme, alpha, spec)
            .map(|d| d.r_sum)
            .unwrap_or(0.0)
    };

    let (mut best_x, mut best_f, _) = golden_max(f, ALPHA_MIN, ALPHA_MAX, tol, 200);
    const GRID: usize = 1000;
    let mut grid_best = (ALPHA_MIN, f(ALPHA_MIN));
    for k in 0..GRID {
        let alpha = ALPHA_MIN + (ALPHA_MAX - ALPHA_MIN) * k as f64 / (GRID - 1) as f64;
        let v = f(alpha);
        if v > grid_best.1 {
            grid_best = (alpha, v);
        }
    }
    if grid_best.1 > best_f {
        best_x = grid_best.0;
        best_f = grid_best.1;
    }
    let h = (ALPHA_MAX - ALPHA_MIN) / (GRID - 1) as f64;
    let (rx, rf, _) = golden_max(
        f,
        (grid_best.0 - h).max(ALPHA_MIN),
        (grid_best.0 + h).min(ALPHA_MAX),
        tol,
        200,
    );
    if rf > best_f {
        best_x = rx;
        best_f = rf;
    }
    let _ = best_f;
    let design = sum_rate(scheme, best_x, spec)?;
    Ok((best_x, design))
}

/// One row of the SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub alpha_star_cf: f64,
    pub rsum_cf: f64,
    pub alpha_star_nosw: f64,
    pub rsum_nosw: f64,
    /// `max_α min{2α·C(P/N_r), 2(1-α)·C(P_r/N)}`, the cut-set style cap.
    pub upper_bound: f64,
}

/// Sweep uplink SNR with the relay power held at a fixed dB offset above
/// the terminal power, optimizing the split per scheme at every point.
///
/// `template` supplies the noise levels; `snr := p/nr` fixes the terminal
/// power per grid point and `pr = p·10^(offset/10)`.
pub fn snr_sweep(
    template: &ChannelSpec,
    snr_grid_db: &[f64],
    offset_db: f64,
) -> Result<Vec<SweepRow>> {
    if snr_grid_db.is_empty() {
        return Err(Error::EmptyInput("snr grid"));
    }
    let (_, _, nr, n) = require_symmetric(template)?;
    let offset = 10f64.powf(offset_db / 10.0);

    snr_grid_db
        .iter()
        .map(|&snr_db| {
            let p = nr * 10f64.powf(snr_db / 10.0);
            let mut spec = *template;
            spec.p1 = p;
            spec.p2 = p;
            spec.pr = p * offset;

            let (alpha_cf, cf) = optimize_alpha_gaussian(Scheme::Cf, &spec, 1e-10)?;
            let (alpha_nosw, nosw) = optimize_alpha_gaussian(Scheme::NoSw, &spec, 1e-10)?;

            // The cap's own optimal split sits where its increasing and
            // decreasing members cross.
            let c_up = c_awgn(p / nr);
            let c_down = c_awgn(spec.pr / n);
            let upper_bound = if c_up + c_down > 0.0 {
                2.0 * c_up * c_down / (c_up + c_down)
            } else {
                0.0
            };

            Ok(SweepRow {
                snr_db,
                alpha_star_cf: alpha_cf,
                rsum_cf: cf.r_sum,
                alpha_star_nosw: alpha_nosw,
                rsum_nosw: nosw.r_sum,
                upper_bound,
            })
        })
        .collect()
}

/// Write sweep rows as CSV with the stable header
/// `snr_db,alpha_star_cf,rsum_cf,alpha_star_nosw,rsum_nosw,upper_bound`.
pub fn write_sweep_csv<W: std::io::Write>(
    rows: &[SweepRow],
    mut w: W,
    comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(
        w,
        "snr_db,alpha_star_cf,rsum_cf,alpha_star_nosw,rsum_nosw,upper_bound"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.snr_db, r.alpha_star_cf, r.rsum_cf, r.alpha_star_nosw, r.rsum_nosw, r.upper_bound
        )?;
    }
    Ok(())
}

/// Maximal individual rates of a scheme at a given `(α, N̂)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerRates {
    pub r1: f64,
    pub r2: f64,
    /// `false` when a downlink constraint fails (rates are then zero) or a
    /// joint-decoding expression went negative (that rate is clamped to 0).
    pub feasible: bool,
}

/// Evaluate the per-scheme rate constraints exactly as stated, for general
/// (possibly asymmetric) parameters.
pub fn rate_region_corner(
    scheme: Scheme,
    alpha: f64,
    nhat: f64,
    spec: &ChannelSpec,
) -> Result<CornerRates> {
    spec.validate()?;
    check_alpha(alpha)?;
    if nhat.is_nan() || nhat <= 0.0 {
        return Err(Error::InvalidSpec(format!("nhat must be > 0, got {nhat}")));
    }
    let beta = 1.0 - alpha;
    let cap1 = alpha * c_awgn(spec.p1 / (spec.nr + nhat));
    let cap2 = alpha * c_awgn(spec.p2 / (spec.nr + nhat));

    Ok(match scheme {
        Scheme::Nnc => {
            let e1 = beta * c_awgn(spec.pr / spec.n2) - alpha * c_awgn(spec.nr / nhat);
            let e2 = beta * c_awgn(spec.pr / spec.n1) - alpha * c_awgn(spec.nr / nhat);
            CornerRates {
                r1: cap1.min(e1).max(0.0),
                r2: cap2.min(e2).max(0.0),
                feasible: e1 >= 0.0 && e2 >= 0.0,
            }
        }
        Scheme::Cf => {
            let ok1 = alpha * c_awgn((spec.p1 + spec.nr) / nhat)
                <= beta * c_awgn(spec.pr / spec.n2) + FEAS_EPS;
            let ok2 = alpha * c_awgn((spec.p2 + spec.nr) / nhat)
                <= beta * c_awgn(spec.pr / spec.n1) + FEAS_EPS;
            if ok1 && ok2 {
                CornerRates {
                    r1: cap1,
                    r2: cap2,
                    feasible: true,
                }
            } else {
                CornerRates {
                    r1: 0.0,
                    r2: 0.0,
                    feasible: false,
                }
            }
        }
        Scheme::NoSw => {
            let downlink = c_awgn(spec.pr / spec.n1).min(c_awgn(spec.pr / spec.n2));
            let ok =
                alpha * c_awgn((spec.p1 + spec.p2 + spec.nr) / nhat) <= beta * downlink + FEAS_EPS;
            if ok {
                CornerRates {
                    r1: cap1,
                    r2: cap2,
                    feasible: true,
                }
            } else {
                CornerRates {
                    r1: 0.0,
                    r2: 0.0,
                    feasible: false,
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::db_to_linear;

    fn spec() -> ChannelSpec {
        ChannelSpec::symmetric_db(0.0, 8.5, 0.0, 0.0)
    }

    #[test]
    fn nnc_and_cf_share_the_optimal_noise() {
        let s = spec();
        for k in 1..40 {
            let alpha = k as f64 / 40.0;
            let a = nhat_star(Scheme::Nnc, alpha, &s).unwrap();
            let b = nhat_star(Scheme::Cf, alpha, &s).unwrap();
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn nnc_noise_sits_at_the_rate_crossing() {
        // At N̂*, the two joint-decoding rate expressions agree.
        let s = spec();
        for &alpha in &[0.2, 1.0 / 3.0, 0.5, 0.7] {
            let nhat = nhat_star(Scheme::Nnc, alpha, &s).unwrap();
            let lhs = alpha * c_awgn(s.p1 / (s.nr + nhat));
            let rhs = (1.0 - alpha) * c_awgn(s.pr / s.n2) - alpha * c_awgn(s.nr / nhat);
            assert!((lhs - rhs).abs() < 1e-9, "alpha={alpha}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn half_split_closed_form() {
        let s = spec();
        let expected = (s.p1 + s.nr) * s.n1 / s.pr;
        let got = nhat_star(Scheme::Cf, 0.5, &s).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn cf_needs_less_quantization_noise_than_nosw() {
        let s = spec();
        for k in 1..20 {
            let alpha = k as f64 / 20.0;
            let cf = nhat_star(Scheme::Cf, alpha, &s).unwrap();
            let nosw = nhat_star(Scheme::NoSw, alpha, &s).unwrap();
            assert!(cf < nosw);
        }
    }

    #[test]
    fn alpha_domain_and_symmetry_are_enforced() {
        let s = spec();
        assert!(matches!(
            nhat_star(Scheme::Cf, 0.0, &s),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            nhat_star(Scheme::Cf, 1.0, &s),
            Err(Error::InvalidAlpha(_))
        ));
        let mut asym = s;
        asym.p2 = 2.0;
        assert!(matches!(
            nhat_star(Scheme::Cf, 0.5, &asym),
            Err(Error::AsymmetricSpec)
        ));
    }

    #[test]
    fn sum_rate_ordering_and_limits() {
        let s = spec();
        for k in 1..20 {
            let alpha = k as f64 / 20.0;
            let cf = sum_rate(Scheme::Cf, alpha, &s).unwrap();
            let nnc = sum_rate(Scheme::Nnc, alpha, &s).unwrap();
            let nosw = sum_rate(Scheme::NoSw, alpha, &s).unwrap();
            assert_eq!(cf.r_sum, nnc.r_sum);
            assert!(cf.r_sum >= nosw.r_sum);
            assert!((cf.r1 - cf.r2).abs() < 1e-15);
        }
        // Vanishing uplink time.
        assert!(sum_rate(Scheme::Cf, 1e-6, &s).unwrap().r_sum < 1e-5);
    }

    #[test]
    fn free_downlink_wants_all_uplink_time() {
        // α* creeps toward 1 as the downlink opens up (logarithmically, so
        // the asymptote needs an extreme relay power to show).
        let mut prev = 0.0;
        for pr in [1e2, 1e6, 1e12, 1e300] {
            let mut s = spec();
            s.pr = pr;
            let (alpha, _) = optimize_alpha_gaussian(Scheme::NoSw, &s, 1e-9).unwrap();
            assert!(
                alpha >= prev - 1e-9,
                "alpha* fell from {prev} to {alpha} at pr = {pr}"
            );
            prev = alpha;
        }
        assert!(prev > 0.95, "alpha* = {prev} at pr = 1e300");
    }

    #[test]
    fn dead_downlink_kills_the_rate() {
        let mut s = spec();
        s.pr = 0.0;
        let (_, design) = optimize_alpha_gaussian(Scheme::NoSw, &s, 1e-9).unwrap();
        assert!(design.r_sum < 1e-12);
    }

    #[test]
    fn optimizer_dominates_a_grid() {
        let s = spec();
        for scheme in [Scheme::Cf, Scheme::NoSw] {
            let (_, design) = optimize_alpha_gaussian(scheme, &s, 1e-9).unwrap();
            for k in 1..1000 {
                let alpha = k as f64 / 1000.0;
                let v = sum_rate(scheme, alpha, &s).unwrap().r_sum;
                assert!(design.r_sum >= v - 1e-9);
            }
        }
    }

    #[test]
    fn sweep_orderings_hold_row_by_row() {
        let template = ChannelSpec::symmetric_db(0.0, 8.5, 0.0, 0.0);
        let grid: Vec<f64> = (-5..=20).map(|v| v as f64).collect();
        let rows = snr_sweep(&template, &grid, 8.5).unwrap();
        assert_eq!(rows.len(), 26);
        for r in &rows {
            assert!(r.rsum_nosw <= r.rsum_cf + 1e-12);
            assert!(
                r.rsum_cf <= r.upper_bound + 1e-9,
                "row {}: {} > {}",
                r.snr_db,
                r.rsum_cf,
                r.upper_bound
            );
            assert!(r.rsum_nosw >= 0.0);
        }
    }

    #[test]
    fn sweep_single_point_matches_direct_optimization() {
        let template = ChannelSpec::symmetric_db(0.0, 8.5, 0.0, 0.0);
        let rows = snr_sweep(&template, &[0.0], 8.5).unwrap();
        let mut s = template;
        s.p1 = 1.0;
        s.p2 = 1.0;
        s.pr = db_to_linear(8.5);
        let (alpha, design) = optimize_alpha_gaussian(Scheme::Cf, &s, 1e-10).unwrap();
        assert!((rows[0].alpha_star_cf - alpha).abs() < 1e-9);
        assert!((rows[0].rsum_cf - design.r_sum).abs() < 1e-12);
        assert!(matches!(
            snr_sweep(&template, &[], 8.5),
            Err(Error::EmptyInput(_))
        ));

        // Frozen values for the 0 dB point with the relay 8.5 dB up.
        assert!((rows[0].alpha_star_cf - 0.533_831_604_712).abs() < 1e-9);
        assert!((rows[0].rsum_cf - 0.418_663_821_889).abs() < 1e-9);
        assert!((rows[0].alpha_star_nosw - 0.485_480_451_400).abs() < 1e-9);
        assert!((rows[0].rsum_nosw - 0.384_334_127_539).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_powers_and_noises() {
        let base = spec();
        let mut prev = 0.0;
        for k in 0..8 {
            let mut s = base;
            s.p1 = db_to_linear(k as f64 - 3.0);
            s.p2 = s.p1;
            let (_, d) = optimize_alpha_gaussian(Scheme::NoSw, &s, 1e-9).unwrap();
            assert!(d.r_sum >= prev - 1e-12, "sum rate dropped as power grew");
            prev = d.r_sum;
        }
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let mut s = base;
            s.nr = db_to_linear(k as f64 - 3.0);
            let (_, d) = optimize_alpha_gaussian(Scheme::NoSw, &s, 1e-9).unwrap();
            assert!(
                d.r_sum <= prev + 1e-12,
                "sum rate grew as uplink noise grew"
            );
            prev = d.r_sum;
        }
    }

    #[test]
    fn corner_rates_match_the_schemes() {
        let s = spec();
        let alpha = 0.4;

        // Enormous quantization noise: nothing survives.
        for scheme in [Scheme::Nnc, Scheme::Cf, Scheme::NoSw] {
            let c = rate_region_corner(scheme, alpha, 1e15, &s).unwrap();
            assert!(c.r1 < 1e-12 && c.r2 < 1e-12);
        }

        // Joint decoding with a starved downlink: negative second
        // expression reports zero, not a negative rate.
        let mut starved = s;
        starved.pr = 1e-6;
        let c = rate_region_corner(Scheme::Nnc, alpha, 0.5, &starved).unwrap();
        assert_eq!(c.r1, 0.0);
        assert!(!c.feasible);

        // At the shared optimal noise the joint-decoding corner equals the
        // side-information corner.
        let nhat = nhat_star(Scheme::Cf, alpha, &s).unwrap();
        let nnc = rate_region_corner(Scheme::Nnc, alpha, nhat, &s).unwrap();
        let cf = rate_region_corner(Scheme::Cf, alpha, nhat, &s).unwrap();
        assert!(cf.feasible && nnc.feasible);
        assert!((nnc.r1 - cf.r1).abs() < 1e-9);
        assert!((nnc.r2 - cf.r2).abs() < 1e-9);
    }
}
