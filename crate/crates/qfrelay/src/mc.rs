//! Monte Carlo cross-validation of the analytic rate quantities.
//!
//! Draws i.i.d. uplink symbols and noise, bins the relay observation with
//! the same grid geometry the analytic model uses, applies a deterministic
//! quantizer map, and estimates the four rate quantities from the empirical
//! counts. Entropies use plug-in estimates with the first-order
//! small-sample bias correction `(K - 1) / (2·n·ln 2)` (K = occupied
//! cells); standard errors come from 20-way batch means.
//!
//! Sampling a soft quantizer is out of scope: the API only accepts a
//! bin-to-level map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_constellation, ChannelSpec, GridGeometry, GridSpec};
use crate::{Error, Result};

const BATCHES: u64 = 20;

/// One estimated quantity with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point_estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Estimates for the four rate quantities, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    /// `I(X1; Ŷ | X2)`.
    pub i1: McEstimate,
    /// `I(X2; Ŷ | X1)`.
    pub i2: McEstimate,
    /// `I(Y_r; Ŷ)`.
    pub c_value: McEstimate,
    /// `H(Ŷ)`.
    pub h_yhat: McEstimate,
}

/// Empirical joint counts over `(x1, x2, y_bin)`, kept per batch so that
/// batch-means standard errors can be formed. Counts merge by plain
/// integer addition, so parallel accumulation is order-independent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointCounts {
    nx1: usize,
    nx2: usize,
    bins: usize,
    /// Deterministic bin-to-level map used during simulation.
    map: Vec<usize>,
    /// Per-batch counts, laid out as `(a * nx2 + b) * bins + j`.
    batch_counts: Vec<Vec<u64>>,
    seed: u64,
}

impl JointCounts {
    /// Wrap externally produced pooled counts as a single batch (standard
    /// errors are then zero).
    pub fn from_pooled(
        nx1: usize,
        nx2: usize,
        map: Vec<usize>,
        pooled: Vec<u64>,
        seed: u64,
    ) -> Result<Self> {
        let bins = map.len();
        if pooled.len() != nx1 * nx2 * bins {
            return Err(Error::DimensionMismatch {
                expected: nx1 * nx2 * bins,
                got: pooled.len(),
            });
        }
        Ok(JointCounts {
            nx1,
            nx2,
            bins,
            map,
            batch_counts: vec![pooled],
            seed,
        })
    }

    pub fn total(&self) -> u64 {
        self.batch_counts.iter().flat_map(|b| b.iter()).sum()
    }

    pub fn pooled(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.nx1 * self.nx2 * self.bins];
        for batch in &self.batch_counts {
            for (o, c) in out.iter_mut().zip(batch) {
                *o += c;
            }
        }
        out
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulate `n` uplink uses through a deterministic quantizer map.
///
/// Reproducible: batch `b` draws from a stream seeded by `(seed, b)` only,
/// so the counts are identical for any worker count.
pub fn simulate_batch(
    spec: &ChannelSpec,
    map: &[usize],
    grid: &GridSpec,
    n: u64,
    seed: u64,
) -> Result<JointCounts> {
    spec.validate()?;
    grid.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be >= 1".into()));
    }
    if map.len() != grid.num_bins {
        return Err(Error::DimensionMismatch {
            expected: grid.num_bins,
            got: map.len(),
        });
    }

    let c1 = build_constellation(spec.uplink_modulation, spec.p1)?;
    let c2 = build_constellation(spec.uplink_modulation, spec.p2)?;
    let s_max = c1
        .symbols
        .iter()
        .flat_map(|&x1| c2.symbols.iter().map(move |&x2| (x1 + x2).abs()))
        .fold(0.0, f64::max);
    let geometry = GridGeometry::from_spec(spec, grid, s_max);
    let sigma = spec.nr.sqrt();
    let (nx1, nx2, bins) = (c1.symbols.len(), c2.symbols.len(), grid.num_bins);

    let n_batches = BATCHES.min(n);
    let batch_counts: Vec<Vec<u64>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let size = n / n_batches + u64::from(b < n % n_batches);
            let mut rng = ChaCha12Rng::seed_from_u64(splitmix(seed ^ splitmix(b + 1)));
            let mut counts = vec![0u64; nx1 * nx2 * bins];
            for _ in 0..size {
                let a = rng.random_range(0..nx1);
                let bb = rng.random_range(0..nx2);
                // Box-Muller; the cosine partner alone keeps the stream simple.
                let u1: f64 = 1.0 - rng.random::<f64>();
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                let y = c1.symbols[a] + c2.symbols[bb] + sigma * z;
                counts[(a * nx2 + bb) * bins + geometry.bin_of(y)] += 1;
            }
            counts
        })
        .collect();

    Ok(JointCounts {
        nx1,
        nx2,
        bins,
        map: map.to_vec(),
        batch_counts,
        seed,
    })
}

/// Plug-in entropy of a count table, in bits.
fn plugin_entropy(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Plug-in entropy with the first-order bias correction.
fn corrected_entropy(counts: &[u64], total: u64) -> f64 {
    let k = counts.iter().filter(|&&c| c > 0).count();
    plugin_entropy(counts, total)
        + (k.saturating_sub(1)) as f64 / (2.0 * total as f64 * std::f64::consts::LN_2)
}

/// The four quantities from one count table; `corrected` switches the bias
/// correction on (point estimates) or off (per-batch values).
fn quantities(
    counts: &[u64],
    nx1: usize,
    nx2: usize,
    bins: usize,
    map: &[usize],
    corrected: bool,
) -> [f64; 4] {
    let levels = map.iter().copied().max().unwrap_or(0) + 1;
    let total: u64 = counts.iter().sum();

    let mut n_x1x2 = vec![0u64; nx1 * nx2];
    let mut n_x2 = vec![0u64; nx2];
    let mut n_ybin = vec![0u64; bins];
    let mut n_x1x2yhat = vec![0u64; nx1 * nx2 * levels];
    let mut n_x2yhat = vec![0u64; nx2 * levels];
    let mut n_x1yhat = vec![0u64; nx1 * levels];
    let mut n_x1 = vec![0u64; nx1];
    let mut n_yhat = vec![0u64; levels];
    for a in 0..nx1 {
        for b in 0..nx2 {
            for j in 0..bins {
                let c = counts[(a * nx2 + b) * bins + j];
                if c == 0 {
                    continue;
                }
                let i = map[j];
                n_x1x2[a * nx2 + b] += c;
                n_x2[b] += c;
                n_x1[a] += c;
                n_ybin[j] += c;
                n_x1x2yhat[(a * nx2 + b) * levels + i] += c;
                n_x2yhat[b * levels + i] += c;
                n_x1yhat[a * levels + i] += c;
                n_yhat[i] += c;
            }
        }
    }

    let h = |table: &[u64]| {
        if corrected {
            corrected_entropy(table, total)
        } else {
            plugin_entropy(table, total)
        }
    };

    let h_x1x2 = h(&n_x1x2);
    let h_x1 = h(&n_x1);
    let h_x2 = h(&n_x2);
    let h_x1x2yhat = h(&n_x1x2yhat);
    let h_x2yhat = h(&n_x2yhat);
    let h_x1yhat = h(&n_x1yhat);
    let h_yhat = h(&n_yhat);
    let h_ybin = h(&n_ybin);
    // The map is deterministic, so H(Y_r, Ŷ) = H(Y_r) cell for cell.
    let h_ybin_yhat = h_ybin;

    let i1 = h_x1x2 + h_x2yhat - h_x2 - h_x1x2yhat;
    let i2 = h_x1x2 + h_x1yhat - h_x1 - h_x1x2yhat;
    let c_value = h_ybin + h_yhat - h_ybin_yhat;
    [i1, i2, c_value, h_yhat]
}

/// Estimate the four rate quantities from simulated counts.
pub fn estimate_info(counts: &JointCounts) -> Result<McReport> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyInput("counts"));
    }
    let pooled = counts.pooled();
    let point = quantities(
        &pooled,
        counts.nx1,
        counts.nx2,
        counts.bins,
        &counts.map,
        true,
    );

    let n_batches = counts.batch_counts.len();
    let std_err: [f64; 4] = if n_batches < 2 {
        [0.0; 4]
    } else {
        let batch_vals: Vec<[f64; 4]> = counts
            .batch_counts
            .iter()
            .map(|b| quantities(b, counts.nx1, counts.nx2, counts.bins, &counts.map, false))
            .collect();
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let mean = batch_vals.iter().map(|v| v[k]).sum::<f64>() / n_batches as f64;
            let var = batch_vals
                .iter()
                .map(|v| (v[k] - mean).powi(2))
                .sum::<f64>()
                / (n_batches - 1) as f64;
            *o = (var / n_batches as f64).sqrt();
        }
        out
    };

    let mk = |k: usize| McEstimate {
        point_estimate: point[k],
        std_error: std_err[k],
        n_samples: total,
        seed: counts.seed,
    };
    Ok(McReport {
        i1: mk(0),
        i2: mk(1),
        c_value: mk(2),
        h_yhat: mk(3),
    })
}
