//! Physical model of the two-phase relay link.
//!
//! Uplink: both terminals transmit simultaneously and the relay observes the
//! superposition in Gaussian noise, `y_r = x1 + x2 + z`, `z ~ N(0, nr)`.
//! [`discretize_uplink`] bins the continuous observation onto a uniform grid
//! and produces the joint pmf `p(x1, x2, y_r)` that every information
//! functional downstream consumes. Downlink: a broadcast link whose capacity
//! is either the Gaussian closed form `min_j (1/2)·log2(1 + pr/nj)` or a
//! fixed bit budget modelling a concrete modulation-and-code pair.
//!
//! Grid tails are folded into the outermost bins, so every conditional row
//! `p(y_r | x1, x2)` sums to one exactly up to rounding.

use serde::{Deserialize, Serialize};

use crate::gaussian::c_awgn;
use crate::{Error, Result};

/// Convert decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert linear scale to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Standard normal CDF.
fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Uplink input modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
}

/// How the downlink capacity constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DownlinkMode {
    /// `min_j (1/2)·log2(1 + pr/nj)` over both destination noises.
    GaussianCapacity,
    /// A fixed budget in bits per downlink channel use, e.g. to model a
    /// specific constellation and code rate.
    FixedCapacity(f64),
}

/// Physical parameters of the link, all in linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Transmit power of terminal 1.
    pub p1: f64,
    /// Transmit power of terminal 2.
    pub p2: f64,
    /// Relay transmit power.
    pub pr: f64,
    /// Uplink noise variance at the relay.
    pub nr: f64,
    /// Downlink noise variance at terminal 1.
    pub n1: f64,
    /// Downlink noise variance at terminal 2.
    pub n2: f64,
    pub uplink_modulation: Modulation,
    pub downlink_mode: DownlinkMode,
}

impl ChannelSpec {
    /// Symmetric spec (`p1 = p2`, `n1 = n2`) from dB quantities with a
    /// Gaussian-capacity downlink.
    pub fn symmetric_db(p_db: f64, pr_db: f64, nr_db: f64, n_db: f64) -> Self {
        ChannelSpec {
            p1: db_to_linear(p_db),
            p2: db_to_linear(p_db),
            pr: db_to_linear(pr_db),
            nr: db_to_linear(nr_db),
            n1: db_to_linear(n_db),
            n2: db_to_linear(n_db),
            uplink_modulation: Modulation::Bpsk,
            downlink_mode: DownlinkMode::GaussianCapacity,
        }
    }

    /// Same spec with a fixed downlink budget in bits per channel use.
    pub fn with_fixed_downlink(mut self, c_bits: f64) -> Self {
        self.downlink_mode = DownlinkMode::FixedCapacity(c_bits);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let powers = [("p1", self.p1), ("p2", self.p2), ("pr", self.pr)];
        for (name, v) in powers {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let noises = [("nr", self.nr), ("n1", self.n1), ("n2", self.n2)];
        for (name, v) in noises {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if let DownlinkMode::FixedCapacity(c) = self.downlink_mode {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "fixed downlink capacity must be finite and >= 0, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Whether the closed-form (symmetric-case) expressions apply.
    pub fn is_symmetric(&self) -> bool {
        self.p1 == self.p2 && self.n1 == self.n2
    }
}

/// Discretization grid for the relay observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of bins, i.e. `|Y_r|` after discretization.
    pub num_bins: usize,
    /// Grid half-width beyond the extreme constellation sum, in units of
    /// the uplink noise standard deviation.
    pub span_sigmas: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            num_bins: 64,
            span_sigmas: 4.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_bins < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least 2 bins, got {}",
                self.num_bins
            )));
        }
        if !self.span_sigmas.is_finite() || self.span_sigmas <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "span_sigmas must be finite and > 0, got {}",
                self.span_sigmas
            )));
        }
        Ok(())
    }
}

/// Concrete bin geometry shared by the analytic model and the sampler.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GridGeometry {
    pub lo: f64,
    pub width: f64,
    pub bins: usize,
}

impl GridGeometry {
    pub(crate) fn from_spec(spec: &ChannelSpec, grid: &GridSpec, s_max: f64) -> Self {
        let half = s_max + grid.span_sigmas * spec.nr.sqrt();
        GridGeometry {
            lo: -half,
            width: 2.0 * half / grid.num_bins as f64,
            bins: grid.num_bins,
        }
    }

    /// Bin index of a sample, with tails folded into the end bins.
    pub(crate) fn bin_of(&self, y: f64) -> usize {
        let idx = ((y - self.lo) / self.width).floor();
        if idx < 0.0 {
            0
        } else if idx >= self.bins as f64 {
            self.bins - 1
        } else {
            idx as usize
        }
    }

    pub(crate) fn center(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.width
    }
}

/// A finite input alphabet with its prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    pub symbols: Vec<f64>,
    pub priors: Vec<f64>,
}

/// Build the input constellation for one terminal.
///
/// BPSK at power `p` is `{-sqrt(p), +sqrt(p)}` with a uniform prior, so the
/// symbol energy equals `p` exactly.
pub fn build_constellation(modulation: Modulation, power: f64) -> Result<Constellation> {
    if !power.is_finite() || power < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "power must be finite and >= 0, got {power}"
        )));
    }
    match modulation {
        Modulation::Bpsk => {
            if power == 0.0 {
                return Err(Error::ZeroPowerConstellation);
            }
            let a = power.sqrt();
            Ok(Constellation {
                symbols: vec![-a, a],
                priors: vec![0.5, 0.5],
            })
        }
    }
}

/// The discretized uplink: finite joint pmf `p(x1, x2, y_r)` plus cached
/// marginals.
///
/// Immutable after construction; shareable read-only across workers.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteJointModel {
    x1_symbols: Vec<f64>,
    x2_symbols: Vec<f64>,
    yr_centers: Vec<f64>,
    /// `p(x1, x2, y_r)`, laid out as `(a * nx2 + b) * bins + j`.
    joint: Vec<f64>,
    p_yr: Vec<f64>,
    /// `p(x1, y_r)`, laid out as `a * bins + j`.
    p_x1_yr: Vec<f64>,
    /// `p(x2, y_r)`, laid out as `b * bins + j`.
    p_x2_yr: Vec<f64>,
    /// `p(x1, x2)`, laid out as `a * nx2 + b`.
    p_x1x2: Vec<f64>,
    p_x1: Vec<f64>,
    p_x2: Vec<f64>,
}

impl DiscreteJointModel {
    pub fn nx1(&self) -> usize {
        self.x1_symbols.len()
    }

    pub fn nx2(&self) -> usize {
        self.x2_symbols.len()
    }

    pub fn bins(&self) -> usize {
        self.yr_centers.len()
    }

    pub fn x1_symbols(&self) -> &[f64] {
        &self.x1_symbols
    }

    pub fn x2_symbols(&self) -> &[f64] {
        &self.x2_symbols
    }

    pub fn yr_centers(&self) -> &[f64] {
        &self.yr_centers
    }

    #[inline]
    pub fn joint(&self, a: usize, b: usize, j: usize) -> f64 {
        self.joint[(a * self.nx2() + b) * self.bins() + j]
    }

    pub fn joint_slice(&self) -> &[f64] {
        &self.joint
    }

    pub fn p_yr(&self) -> &[f64] {
        &self.p_yr
    }

    pub fn p_x1_yr(&self, a: usize, j: usize) -> f64 {
        self.p_x1_yr[a * self.bins() + j]
    }

    pub fn p_x2_yr(&self, b: usize, j: usize) -> f64 {
        self.p_x2_yr[b * self.bins() + j]
    }

    pub fn p_x1x2(&self, a: usize, b: usize) -> f64 {
        self.p_x1x2[a * self.nx2() + b]
    }

    pub fn p_x1(&self) -> &[f64] {
        &self.p_x1
    }

    pub fn p_x2(&self) -> &[f64] {
        &self.p_x2
    }

    /// Entropy of the discretized observation, in bits.
    pub fn h_yr(&self) -> f64 {
        crate::info::entropy_unchecked(&self.p_yr)
    }
}

/// Discretize the uplink onto a uniform grid and assemble the joint pmf.
///
/// For each input pair the conditional bin mass is the Gaussian
/// `N(x1 + x2, nr)` probability between consecutive bin edges, computed as
/// CDF differences with the two tail masses folded into the end bins.
pub fn discretize_uplink(spec: &ChannelSpec, grid: &GridSpec) -> Result<DiscreteJointModel> {
    spec.validate()?;
    grid.validate()?;

    let c1 = build_constellation(spec.uplink_modulation, spec.p1)?;
    let c2 = build_constellation(spec.uplink_modulation, spec.p2)?;
    let nx1 = c1.symbols.len();
    let nx2 = c2.symbols.len();
    let bins = grid.num_bins;

    let s_max = c1
        .symbols
        .iter()
        .flat_map(|&x1| c2.symbols.iter().map(move |&x2| (x1 + x2).abs()))
        .fold(0.0, f64::max);
    let geometry = GridGeometry::from_spec(spec, grid, s_max);
    let sigma = spec.nr.sqrt();

    let yr_centers: Vec<f64> = (0..bins).map(|j| geometry.center(j)).collect();

    let mut joint = vec![0.0; nx1 * nx2 * bins];
    for (a, &x1) in c1.symbols.iter().enumerate() {
        for (b, &x2) in c2.symbols.iter().enumerate() {
            let mean = x1 + x2;
            let prior = c1.priors[a] * c2.priors[b];
            // CDF at the interior edges; ends are the folded tails.
            let cdf: Vec<f64> = (1..bins)
                .map(|k| normal_cdf((geometry.lo + k as f64 * geometry.width - mean) / sigma))
                .collect();
            let row = &mut joint[(a * nx2 + b) * bins..(a * nx2 + b + 1) * bins];
            row[0] = cdf[0];
            for j in 1..bins - 1 {
                row[j] = (cdf[j] - cdf[j - 1]).max(0.0);
            }
            row[bins - 1] = (1.0 - cdf[bins - 2]).max(0.0);
            for v in row.iter_mut() {
                *v *= prior;
            }
        }
    }

    let mut p_yr = vec![0.0; bins];
    let mut p_x1_yr = vec![0.0; nx1 * bins];
    let mut p_x2_yr = vec![0.0; nx2 * bins];
    let mut p_x1x2 = vec![0.0; nx1 * nx2];
    let mut p_x1 = vec![0.0; nx1];
    let mut p_x2 = vec![0.0; nx2];
    for a in 0..nx1 {
        for b in 0..nx2 {
            for j in 0..bins {
                let w = joint[(a * nx2 + b) * bins + j];
                p_yr[j] += w;
                p_x1_yr[a * bins + j] += w;
                p_x2_yr[b * bins + j] += w;
                p_x1x2[a * nx2 + b] += w;
            }
            p_x1[a] += p_x1x2[a * nx2 + b];
            p_x2[b] += p_x1x2[a * nx2 + b];
        }
    }

    Ok(DiscreteJointModel {
        x1_symbols: c1.symbols,
        x2_symbols: c2.symbols,
        yr_centers,
        joint,
        p_yr,
        p_x1_yr,
        p_x2_yr,
        p_x1x2,
        p_x1,
        p_x2,
    })
}

/// Downlink capacity constant in bits per broadcast channel use: the worse
/// of the two destination links, or the configured fixed budget.
pub fn downlink_capacity(spec: &ChannelSpec) -> f64 {
    match spec.downlink_mode {
        DownlinkMode::GaussianCapacity => c_awgn(spec.pr / spec.n1).min(c_awgn(spec.pr / spec.n2)),
        DownlinkMode::FixedCapacity(c) => c,
    }
}
