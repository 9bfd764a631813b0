//! End-to-end quantizer design: trace the rate curve, optimize the time
//! split, pick the operating quantizer that fits the resulting budget, and
//! try to harden it into a scalar map.

use serde::{Deserialize, Serialize};

use crate::alpha::{optimize_alpha, AlphaResult};
use crate::channel::DiscreteJointModel;
use crate::curve::InfoCurve;
use crate::scalar::{extract_scalar, ScalarExtraction};
use crate::solver::{trace_icurve, SolveConfig};
use crate::{Error, Result};

/// Knobs of the full design pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignConfig {
    pub levels: usize,
    /// Multiplier schedule, largest first.
    pub schedule: Vec<f64>,
    pub solve: SolveConfig,
    pub alpha_tol: f64,
    pub scalar_threshold: f64,
    /// Evaluate at this fixed time split instead of optimizing it. Useful
    /// to reproduce deployments whose split is dictated by frame lengths
    /// (e.g. raw index bits over a fixed-rate downlink).
    pub fixed_alpha: Option<f64>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            levels: 8,
            schedule: crate::solver::default_lambda_schedule(),
            solve: SolveConfig::default(),
            alpha_tol: 1e-6,
            scalar_threshold: 1.0 - 1e-6,
            fixed_alpha: None,
        }
    }
}

/// A finished design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    pub curve: InfoCurve,
    /// Downlink budget in bits per broadcast channel use.
    pub c_downlink: f64,
    pub alpha: AlphaResult,
    /// Sum rate promised by the envelope, `α*·I(c_effective)`.
    pub r_sum_envelope: f64,
    /// Sum rate realized by the operating quantizer, `α*·J(q_op)`; differs
    /// from the envelope value where the envelope interpolates over gaps
    /// between traced points.
    pub r_sum: f64,
    /// Index of the operating point in `curve.points`.
    pub operating_index: usize,
    pub extraction: ScalarExtraction,
}

/// Run the whole pipeline against a discretized model.
pub fn design(model: &DiscreteJointModel, c_downlink: f64, cfg: &DesignConfig) -> Result<Design> {
    if !(c_downlink >= 0.0 && c_downlink.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "downlink capacity must be finite and >= 0, got {c_downlink}"
        )));
    }
    let curve = trace_icurve(model, cfg.levels, &cfg.schedule, &cfg.solve)?;
    let alpha = match cfg.fixed_alpha {
        None => optimize_alpha(&curve.envelope, c_downlink, cfg.alpha_tol)?,
        Some(a) => {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidAlpha(a));
            }
            let c_effective = (1.0 - a) / a * c_downlink;
            AlphaResult {
                alpha_star: a,
                r_sum: a * curve.eval_envelope(c_effective),
                c_effective,
                bracket_width_at_stop: 0.0,
                degenerate: curve.envelope.right_value() <= 0.0,
            }
        }
    };
    let (operating_index, op) = curve
        .best_point_within(alpha.c_effective)
        .ok_or_else(|| Error::InvalidConfig("traced curve has no feasible point".into()))?;
    let r_sum = alpha.alpha_star * op.i_value;
    let extraction = extract_scalar(model, &op.quantizer, cfg.scalar_threshold)?;
    Ok(Design {
        c_downlink,
        alpha,
        r_sum_envelope: alpha.r_sum,
        r_sum,
        operating_index,
        extraction,
        curve,
    })
}
