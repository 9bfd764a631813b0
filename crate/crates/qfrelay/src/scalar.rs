//! Deterministic (single-letter) quantizers.
//!
//! A soft conditional pmf whose columns all concentrate on one level is a
//! scalar quantizer in disguise: [`extract_scalar`] hardens it into the
//! bin-to-level map and reports the rate cost of doing so.
//! [`brute_force_scalar`] exhaustively searches all deterministic maps on
//! instances small enough to enumerate, serving as the ground-truth oracle
//! for the iterative solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::DiscreteJointModel;
use crate::info::{evaluate, InfoReport, QuantizerPmf};
use crate::{Error, Result};

/// Enumeration guard for the exhaustive search.
const MAX_CANDIDATES: f64 = 1e7;

/// A hardened quantizer with the rate reports before and after hardening.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarQuantizer {
    /// Level index per observation bin.
    pub map: Vec<usize>,
    pub soft_report: InfoReport,
    pub hard_report: InfoReport,
    pub threshold: f64,
}

impl ScalarQuantizer {
    /// Objective lost by hardening the soft pmf to the deterministic map.
    pub fn hardening_loss(&self) -> f64 {
        self.soft_report.j_value - self.hard_report.j_value
    }
}

/// Outcome of a hardening attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ScalarExtraction {
    Scalar(ScalarQuantizer),
    /// Columns whose maximum entry fell below the threshold.
    NotScalar {
        offending_columns: Vec<usize>,
        soft_report: InfoReport,
    },
}

impl ScalarExtraction {
    pub fn is_scalar(&self) -> bool {
        matches!(self, ScalarExtraction::Scalar(_))
    }

    pub fn scalar(&self) -> Option<&ScalarQuantizer> {
        match self {
            ScalarExtraction::Scalar(s) => Some(s),
            ScalarExtraction::NotScalar { .. } => None,
        }
    }
}

/// Try to read a deterministic map off a soft quantizer.
///
/// Succeeds when every column's largest entry reaches `threshold`
/// (argmax ties break toward the lower level index). Bins with zero
/// observation probability cannot affect any rate and are mapped by argmax
/// without the threshold test. On failure the offending columns are
/// reported instead of an error.
pub fn extract_scalar(
    model: &DiscreteJointModel,
    q: &QuantizerPmf,
    threshold: f64,
) -> Result<ScalarExtraction> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must lie in (0.5, 1], got {threshold}"
        )));
    }
    if q.bins() != model.bins() {
        return Err(Error::DimensionMismatch {
            expected: model.bins(),
            got: q.bins(),
        });
    }

    let w = model.p_yr();
    let mut map = Vec::with_capacity(q.bins());
    let mut offending = Vec::new();
    for (j, &wj) in w.iter().enumerate() {
        let mut best_i = 0;
        let mut best_v = q.get(0, j);
        for i in 1..q.levels() {
            let v = q.get(i, j);
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        if best_v < threshold && wj > 0.0 {
            offending.push(j);
        }
        map.push(best_i);
    }

    let soft_report = evaluate(model, q)?;
    if !offending.is_empty() {
        return Ok(ScalarExtraction::NotScalar {
            offending_columns: offending,
            soft_report,
        });
    }
    let hard = QuantizerPmf::from_map(q.levels(), &map)?;
    let hard_report = evaluate(model, &hard)?;
    Ok(ScalarExtraction::Scalar(ScalarQuantizer {
        map,
        soft_report,
        hard_report,
        threshold,
    }))
}

/// Result of the exhaustive deterministic search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub map: Vec<usize>,
    pub report: InfoReport,
    pub maps_searched: u64,
}

/// Exhaustively search deterministic maps for the largest objective subject
/// to a quantizer-rate budget.
///
/// `monotone_only` restricts the search to staircase maps (non-decreasing
/// level along the bin axis), shrinking the candidate count from
/// `levels^bins` to a binomial. Ties break toward the smaller achieved rate
/// and then the lexicographically smaller map, which keeps the parallel
/// reduction deterministic.
pub fn brute_force_scalar(
    model: &DiscreteJointModel,
    levels: usize,
    c_budget: f64,
    monotone_only: bool,
) -> Result<BruteForceResult> {
    if levels == 0 {
        return Err(Error::InvalidConfig("levels must be >= 1".into()));
    }
    if c_budget < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "c_budget must be >= 0, got {c_budget}"
        )));
    }
    let bins = model.bins();

    let maps: Vec<Vec<usize>> = if monotone_only {
        let count = binomial(bins + levels - 1, levels - 1);
        if count > MAX_CANDIDATES {
            return Err(Error::InstanceTooLarge {
                candidates: count,
                limit: MAX_CANDIDATES,
            });
        }
        staircase_maps(bins, levels)
    } else {
        let count = (levels as f64).powi(bins as i32);
        if count > MAX_CANDIDATES {
            return Err(Error::InstanceTooLarge {
                candidates: count,
                limit: MAX_CANDIDATES,
            });
        }
        let n = count as u64;
        (0..n)
            .map(|mut idx| {
                (0..bins)
                    .map(|_| {
                        let d = (idx % levels as u64) as usize;
                        idx /= levels as u64;
                        d
                    })
                    .collect()
            })
            .collect()
    };

    let searched = maps.len() as u64;
    let best = maps
        .into_par_iter()
        .map(|map| {
            let q = QuantizerPmf::from_map(levels, &map).expect("enumerated map is valid");
            let report = evaluate(model, &q).expect("dimensions match");
            (map, report)
        })
        .filter(|(_, r)| r.c_value <= c_budget + 1e-12)
        .reduce_with(|a, b| if better_map(&a, &b) { a } else { b });

    match best {
        // The constant map has zero rate, so some map is always feasible.
        Some((map, report)) => Ok(BruteForceResult {
            map,
            report,
            maps_searched: searched,
        }),
        None => unreachable!("constant map is always feasible"),
    }
}

fn better_map(a: &(Vec<usize>, InfoReport), b: &(Vec<usize>, InfoReport)) -> bool {
    if a.1.j_value != b.1.j_value {
        return a.1.j_value > b.1.j_value;
    }
    if a.1.c_value != b.1.c_value {
        return a.1.c_value < b.1.c_value;
    }
    a.0 < b.0
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// All non-decreasing maps from `bins` ordered bins onto `levels` levels.
fn staircase_maps(bins: usize, levels: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; bins];
    fn rec(
        out: &mut Vec<Vec<usize>>,
        current: &mut Vec<usize>,
        pos: usize,
        min_level: usize,
        levels: usize,
    ) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for lvl in min_level..levels {
            current[pos] = lvl;
            rec(out, current, pos + 1, lvl, levels);
        }
    }
    rec(&mut out, &mut current, 0, 0, levels);
    out
}
