//! Fixed-point quantizer optimization and the multiplier sweep.
//!
//! For a multiplier `λ > 0` the stationarity conditions of
//! `J(q) - λ·I(Y_r;Ŷ)` over column-stochastic `q` read
//!
//! ```text
//! q[i][j] ∝ p(ŷ_i) · exp2( (∂J/∂q[i][j]) / (λ·p(y_j)) ),
//! p(ŷ_i)  = Σ_j q[i][j] · p(y_j),
//! ```
//!
//! normalized per column. Iterating this map from several initial points
//! and keeping the best run solves one multiplier; sweeping a descending
//! multiplier schedule traces the whole rate frontier, each solved point
//! sitting where the frontier has slope `λ`.
//!
//! Determinism: every random initialization draws from a stream seeded by
//! `(root seed, multiplier index, restart index)` only, so results do not
//! depend on thread count or execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::DiscreteJointModel;
use crate::curve::{CurvePoint, InfoCurve};
use crate::info::{evaluate, grad_j, uplink_bound, QuantizerPmf};
use crate::{Error, Result};

/// Lagrangian ties below this are broken toward the smaller quantizer rate.
const TIE_EPS: f64 = 1e-12;

/// Consecutive direction reversals of the update before damping drops to
/// 0.5 to break the cycle.
const OSCILLATION_LIMIT: usize = 5;

/// Knobs of one multiplier solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Multiplier `λ > 0`.
    pub lambda: f64,
    /// Independent starts per multiplier (structured plus random).
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the max-abs change of `q` per iteration.
    pub tol: f64,
    /// Blend factor `θ ∈ (0, 1]`: `q <- θ·update + (1-θ)·q`.
    pub damping: f64,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            lambda: 1.0,
            restarts: 8,
            max_iters: 5000,
            tol: 1e-10,
            damping: 1.0,
            seed: 7,
        }
    }
}

impl SolveConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Default multiplier schedule: 40 log-spaced values from 1e2 down to 1e-3.
pub fn default_lambda_schedule() -> Vec<f64> {
    log_schedule(1e-3, 1e2, 40)
}

/// `count` log-spaced multipliers from `max` down to `min`.
pub fn log_schedule(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min && count >= 1);
    if count == 1 {
        return vec![max];
    }
    let (lmin, lmax) = (min.log10(), max.log10());
    (0..count)
        .map(|k| 10f64.powf(lmax - (lmax - lmin) * k as f64 / (count - 1) as f64))
        .collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one (multiplier index, restart index) pair.
fn derived_seed(root: u64, lambda_idx: usize, restart_idx: usize) -> u64 {
    splitmix(root ^ splitmix(1 + lambda_idx as u64) ^ splitmix((2 + restart_idx as u64) << 32))
}

/// One application of the stationarity map, blended with the previous
/// iterate by `damping`.
///
/// Per column the exponents are shifted by their maximum before
/// exponentiation, so arbitrarily small multipliers cannot overflow.
/// Columns with zero observation probability are left unchanged.
pub fn fixed_point_step(
    model: &DiscreteJointModel,
    q: &QuantizerPmf,
    lambda: f64,
    damping: f64,
) -> Result<QuantizerPmf> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let w = model.p_yr();
    let levels = q.levels();
    let bins = q.bins();
    let marginal = q.level_marginal(w);
    let log_marginal: Vec<f64> = marginal.iter().map(|&e| e.log2()).collect();
    let grad = grad_j(model, q)?;

    let mut out = q.clone();
    let mut t = vec![0.0; levels];
    for j in 0..bins {
        if w[j] <= 0.0 {
            continue;
        }
        let scale = 1.0 / (lambda * w[j]);
        let mut t_max = f64::NEG_INFINITY;
        for (i, ti) in t.iter_mut().enumerate() {
            let v = log_marginal[i] + grad[i * bins + j] * scale;
            *ti = v;
            if v > t_max {
                t_max = v;
            }
        }
        let mut sum = 0.0;
        for ti in t.iter_mut() {
            *ti = (*ti - t_max).exp2();
            sum += *ti;
        }
        for (i, &ti) in t.iter().enumerate() {
            let updated = ti / sum;
            out.set(i, j, damping * updated + (1.0 - damping) * q.get(i, j));
        }
    }
    Ok(out)
}

struct RunResult {
    q: QuantizerPmf,
    lagrangian: f64,
    c_value: f64,
    i_value: f64,
    converged: bool,
    iters: usize,
}

/// Iterate the fixed-point map from one initial quantizer.
fn solve_run(model: &DiscreteJointModel, q0: QuantizerPmf, cfg: &SolveConfig) -> Result<RunResult> {
    let mut q = q0;
    let mut damping = cfg.damping;
    let mut prev_update: Option<Vec<f64>> = None;
    let mut reversals = 0usize;
    let mut converged = false;
    let mut iters = 0;

    for it in 1..=cfg.max_iters {
        iters = it;
        let next = fixed_point_step(model, &q, cfg.lambda, damping)?;

        let mut delta_max = 0.0f64;
        let update: Vec<f64> = next
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(n, o)| {
                let d = n - o;
                delta_max = delta_max.max(d.abs());
                d
            })
            .collect();

        // A sign-alternating update direction for several iterations means
        // the undamped map is cycling; fall back to θ = 0.5 once.
        if damping > 0.5 {
            if let Some(prev) = &prev_update {
                let dot: f64 = prev.iter().zip(&update).map(|(a, b)| a * b).sum();
                if dot < 0.0 {
                    reversals += 1;
                    if reversals >= OSCILLATION_LIMIT {
                        damping = 0.5;
                    }
                } else {
                    reversals = 0;
                }
            }
        }
        prev_update = Some(update);
        q = next;

        if delta_max < cfg.tol {
            converged = true;
            break;
        }
    }

    let report = evaluate(model, &q)?;
    Ok(RunResult {
        q,
        lagrangian: report.j_value - cfg.lambda * report.c_value,
        c_value: report.c_value,
        i_value: report.j_value,
        converged,
        iters,
    })
}

/// `true` when `a` should be preferred over `b`: converged runs first, then
/// larger Lagrangian, ties toward the smaller quantizer rate.
fn better_run(a: &RunResult, b: &RunResult) -> bool {
    if a.converged != b.converged {
        return a.converged;
    }
    if a.lagrangian > b.lagrangian + TIE_EPS {
        return true;
    }
    if b.lagrangian > a.lagrangian + TIE_EPS {
        return false;
    }
    a.c_value < b.c_value
}

/// Structured and random initial quantizers for one multiplier.
///
/// The structured starts are a cyclic level assignment, a contiguous
/// staircase and the constant quantizer; the remainder (at least one) are
/// random columns drawn from a flat Dirichlet. Warm starts, when given,
/// are prepended as extra candidates.
fn initial_quantizers(
    levels: usize,
    bins: usize,
    restarts: usize,
    lambda_idx: usize,
    seed: u64,
    warm: &[QuantizerPmf],
) -> Vec<QuantizerPmf> {
    let mut inits: Vec<QuantizerPmf> = warm.to_vec();

    let cyclic: Vec<usize> = (0..bins).map(|j| j % levels).collect();
    inits.push(QuantizerPmf::from_map(levels, &cyclic).expect("valid map"));
    let staircase: Vec<usize> = (0..bins)
        .map(|j| (j * levels / bins).min(levels - 1))
        .collect();
    inits.push(QuantizerPmf::from_map(levels, &staircase).expect("valid map"));
    inits.push(QuantizerPmf::from_map(levels, &vec![0; bins]).expect("valid map"));

    let n_random = restarts.saturating_sub(3).max(1);
    for r in 0..n_random {
        let mut rng = ChaCha12Rng::seed_from_u64(derived_seed(seed, lambda_idx, r));
        let mut q = QuantizerPmf::uniform(levels, bins);
        for j in 0..bins {
            let mut col: Vec<f64> = (0..levels)
                .map(|_| -(rng.random::<f64>().max(f64::MIN_POSITIVE)).ln())
                .collect();
            let sum: f64 = col.iter().sum();
            for v in col.iter_mut() {
                *v /= sum;
            }
            for (i, v) in col.iter().enumerate() {
                q.set(i, j, *v);
            }
        }
        inits.push(q);
    }
    inits
}

/// Solve one multiplier: run every initialization to convergence and keep
/// the best run. If no run converged the best iterate is returned with
/// `converged = false`.
pub fn solve_lambda(
    model: &DiscreteJointModel,
    levels: usize,
    cfg: &SolveConfig,
) -> Result<CurvePoint> {
    solve_lambda_indexed(model, levels, cfg, 0, &[])
}

fn solve_lambda_indexed(
    model: &DiscreteJointModel,
    levels: usize,
    cfg: &SolveConfig,
    lambda_idx: usize,
    warm: &[QuantizerPmf],
) -> Result<CurvePoint> {
    cfg.validate()?;
    if levels == 0 {
        return Err(Error::InvalidConfig("levels must be >= 1".into()));
    }
    let inits = initial_quantizers(
        levels,
        model.bins(),
        cfg.restarts,
        lambda_idx,
        cfg.seed,
        warm,
    );
    let runs: Result<Vec<RunResult>> = inits
        .into_par_iter()
        .map(|q0| solve_run(model, q0, cfg))
        .collect();
    let runs = runs?;

    // Sequential fold in candidate order keeps the pick order-independent.
    let best = runs
        .into_iter()
        .reduce(|best, cand| if better_run(&cand, &best) { cand } else { best })
        .expect("at least one initialization");

    Ok(CurvePoint {
        lambda: cfg.lambda,
        c_value: best.c_value,
        i_value: best.i_value,
        quantizer: best.q,
        converged: best.converged,
        iters_used: best.iters,
    })
}

/// Sweep a multiplier schedule and assemble the rate curve.
///
/// Runs two passes: an embarrassingly parallel solve of every multiplier,
/// then one refinement sweep that re-solves each multiplier warm-started
/// from its schedule neighbors' first-pass solutions and keeps whichever
/// run wins. Both passes derive their seeds from `(cfg.seed, multiplier
/// index)` alone, so the result is identical for any worker count.
pub fn trace_icurve(
    model: &DiscreteJointModel,
    levels: usize,
    schedule: &[f64],
    cfg: &SolveConfig,
) -> Result<InfoCurve> {
    if schedule.is_empty() {
        return Err(Error::EmptyInput("lambda schedule"));
    }
    for &l in schedule {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "schedule multiplier must be > 0, got {l}"
            )));
        }
    }

    let pass1: Result<Vec<CurvePoint>> = schedule
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| solve_lambda_indexed(model, levels, &cfg.with_lambda(lambda), k, &[]))
        .collect();
    let pass1 = pass1?;

    let refined: Result<Vec<CurvePoint>> = schedule
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let mut warm: Vec<QuantizerPmf> = Vec::with_capacity(2);
            if k > 0 {
                warm.push(pass1[k - 1].quantizer.clone());
            }
            if k + 1 < pass1.len() {
                warm.push(pass1[k + 1].quantizer.clone());
            }
            if warm.is_empty() {
                return Ok(pass1[k].clone());
            }
            let run_cfg = cfg.with_lambda(lambda);
            let warm_best = warm
                .into_iter()
                .map(|q0| solve_run(model, q0, &run_cfg))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .reduce(|best, cand| if better_run(&cand, &best) { cand } else { best })
                .expect("warm candidates");

            let p1 = &pass1[k];
            let p1_run = RunResult {
                q: p1.quantizer.clone(),
                lagrangian: p1.i_value - lambda * p1.c_value,
                c_value: p1.c_value,
                i_value: p1.i_value,
                converged: p1.converged,
                iters: p1.iters_used,
            };
            let best = if better_run(&warm_best, &p1_run) {
                warm_best
            } else {
                p1_run
            };
            Ok(CurvePoint {
                lambda,
                c_value: best.c_value,
                i_value: best.i_value,
                quantizer: best.q,
                converged: best.converged,
                iters_used: best.iters,
            })
        })
        .collect();
    let refined = refined?;

    let monotone = refined
        .windows(2)
        .all(|w| w[1].c_value >= w[0].c_value - 1e-9);
    let h_yr = model.h_yr();
    let ub = uplink_bound(model);
    Ok(InfoCurve::build(refined, h_yr, ub, monotone))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{discretize_uplink, ChannelSpec, GridSpec};

    fn toy_model(bins: usize) -> DiscreteJointModel {
        let spec = ChannelSpec::symmetric_db(0.0, 9.3, 0.0, 0.0);
        discretize_uplink(
            &spec,
            &GridSpec {
                num_bins: bins,
                span_sigmas: 3.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn step_preserves_column_stochasticity() {
        let model = toy_model(5);
        let mut q = QuantizerPmf::uniform(3, 5);
        for _ in 0..50 {
            q = fixed_point_step(&model, &q, 0.7, 1.0).unwrap();
            for j in 0..q.bins() {
                let col: f64 = (0..q.levels()).map(|i| q.get(i, j)).sum();
                assert!((col - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_is_identity_at_a_fixed_point() {
        let model = toy_model(5);
        // Converge first, then check the map reproduces its fixed point.
        let point = solve_lambda(&model, 2, &SolveConfig::default().with_lambda(1.0)).unwrap();
        assert!(point.converged);
        let stepped = fixed_point_step(&model, &point.quantizer, 1.0, 1.0).unwrap();
        assert!(stepped.max_abs_diff(&point.quantizer) < 1e-8);
    }

    #[test]
    fn single_level_collapses_to_all_ones() {
        let model = toy_model(5);
        let q = QuantizerPmf::uniform(1, 5);
        let next = fixed_point_step(&model, &q, 3.0, 1.0).unwrap();
        for j in 0..5 {
            assert_eq!(next.get(0, j), 1.0);
        }
    }

    #[test]
    fn huge_multiplier_kills_the_rate() {
        let model = toy_model(9);
        let point = solve_lambda(&model, 3, &SolveConfig::default().with_lambda(1e6)).unwrap();
        assert!(point.c_value < 1e-9, "c = {}", point.c_value);
        assert!(point.i_value < 1e-9, "i = {}", point.i_value);
    }

    #[test]
    fn tiny_multiplier_with_enough_levels_is_lossless() {
        let model = toy_model(7);
        let point = solve_lambda(&model, 7, &SolveConfig::default().with_lambda(1e-5)).unwrap();
        let h = model.h_yr();
        let ub = uplink_bound(&model);
        assert!(
            (point.c_value - h).abs() < 1e-6,
            "c = {} vs H = {}",
            point.c_value,
            h
        );
        assert!(
            (point.i_value - ub).abs() < 1e-6,
            "i = {} vs UB = {}",
            point.i_value,
            ub
        );
    }

    #[test]
    fn lagrangian_is_monotone_under_half_damping() {
        let model = toy_model(5);
        let lambda = 1.0;
        let mut q = QuantizerPmf::uniform(2, 5);
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..300 {
            let r = evaluate(&model, &q).unwrap();
            let lagr = r.j_value - lambda * r.c_value;
            assert!(
                lagr >= prev - 1e-9,
                "Lagrangian decreased: {prev} -> {lagr}"
            );
            prev = lagr;
            q = fixed_point_step(&model, &q, lambda, 0.5).unwrap();
        }
    }

    #[test]
    fn trace_produces_monotone_envelope_with_anchors() {
        let model = toy_model(7);
        let schedule = log_schedule(1e-2, 10.0, 8);
        let curve = trace_icurve(&model, 3, &schedule, &SolveConfig::default()).unwrap();
        assert_eq!(curve.eval_envelope(0.0), 0.0);
        let ub = uplink_bound(&model);
        assert!((curve.eval_envelope(model.h_yr()) - ub).abs() < 1e-12);
        // Envelope values are non-decreasing in c.
        let mut prev = -1.0;
        for k in 0..=50 {
            let c = model.h_yr() * k as f64 / 50.0;
            let v = curve.eval_envelope(c);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn trace_is_deterministic_across_thread_counts() {
        let model = toy_model(6);
        let schedule = log_schedule(0.05, 5.0, 5);
        let cfg = SolveConfig {
            restarts: 5,
            max_iters: 600,
            ..SolveConfig::default()
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| trace_icurve(&model, 2, &schedule, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.points.len(), b.points.len());
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.c_value.to_bits(), pb.c_value.to_bits());
            assert_eq!(pa.i_value.to_bits(), pb.i_value.to_bits());
            assert_eq!(pa.quantizer.as_slice(), pb.quantizer.as_slice());
        }
    }

    #[test]
    fn schedule_validation() {
        let model = toy_model(4);
        assert!(matches!(
            trace_icurve(&model, 2, &[], &SolveConfig::default()),
            Err(Error::EmptyInput(_))
        ));
        assert!(trace_icurve(&model, 2, &[0.0], &SolveConfig::default()).is_err());
        let cfg = SolveConfig {
            damping: 1.5,
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
