//! # qfrelay
//!
//! Quantizer design for a two-way relay link in which the relay digitizes
//! its noisy uplink observation and forwards the index over a rate-limited
//! broadcast downlink.
//!
//! The crate covers the full design loop:
//!
//! - [`channel`] — input constellations, discretization of the relay
//!   observation, the joint pmf `p(x1, x2, y_r)` and the downlink capacity.
//! - [`info`] — exact entropy / mutual-information functionals, the
//!   sum-rate objective `J = I(X1;Ŷ|X2) + I(X2;Ŷ|X1)`, and its analytic
//!   gradient.
//! - [`solver`] — the multiplier-driven fixed-point iteration that
//!   maximizes `J - λ·I(Y_r;Ŷ)`, multi-start solving, and the sweep that
//!   traces the constrained-information curve `I(C)`.
//! - [`curve`] — the traced curve, its upper concave envelope, and
//!   piecewise-linear evaluation.
//! - [`scalar`] — hardening a soft quantizer into a deterministic map and
//!   an exhaustive oracle for small instances.
//! - [`alpha`] — optimization of the uplink/downlink time split.
//! - [`gaussian`] — closed-form rate expressions for the three reference
//!   schemes under a Gaussian test channel, and SNR sweeps.
//! - [`mc`] — Monte Carlo validation of the analytic quantities.
//!
//! All information quantities are in bits (base-2 logarithms). Powers and
//! noise variances are linear; dB helpers are provided at the crate root.

use thiserror::Error;

pub mod alpha;
pub mod channel;
pub mod curve;
pub mod design;
pub mod gaussian;
pub mod info;
pub mod mc;
pub mod scalar;
pub mod solver;

pub use alpha::{optimize_alpha, sum_rate_at_alpha, AlphaResult};
pub use channel::{
    build_constellation, db_to_linear, discretize_uplink, downlink_capacity, linear_to_db,
    ChannelSpec, Constellation, DiscreteJointModel, DownlinkMode, GridSpec, Modulation,
};
pub use curve::{CurvePoint, Envelope, InfoCurve};
pub use design::{design, Design, DesignConfig};
pub use gaussian::{
    c_awgn, nhat_star, optimize_alpha_gaussian, rate_region_corner, snr_sweep, sum_rate,
    CornerRates, GaussianDesign, Scheme, SweepRow,
};
pub use info::{entropy, evaluate, grad_j, uplink_bound, InfoReport, QuantizerPmf};
pub use mc::{estimate_info, simulate_batch, JointCounts, McEstimate, McReport};
pub use scalar::{brute_force_scalar, extract_scalar, BruteForceResult, ScalarExtraction};
pub use solver::{fixed_point_step, solve_lambda, trace_icurve, SolveConfig};

/// Errors produced by model construction, solvers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel or grid parameter: {0}")]
    InvalidSpec(String),

    #[error("zero-power constellation")]
    ZeroPowerConstellation,

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("time split must lie strictly inside (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("closed forms require a symmetric spec (p1 = p2, n1 = n2)")]
    AsymmetricSpec,

    #[error("instance too large: {candidates:.3e} candidate maps exceed the {limit:.1e} guard")]
    InstanceTooLarge { candidates: f64, limit: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
