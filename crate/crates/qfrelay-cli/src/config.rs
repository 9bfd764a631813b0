//! Configuration: one TOML file shared by every subcommand, with CLI flags
//! overriding file values. Every quantity accepts either a linear value or
//! a `_db` variant (never both). The fully resolved configuration is echoed
//! into the run manifest.
//!
//! All sections and keys are optional; the defaults reproduce the standard
//! operating point (symmetric BPSK at 0 dB, relay at 9.3 dB, unit noise,
//! 64-bin grid, 8 levels).

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qfrelay::{db_to_linear, linear_to_db, ChannelSpec, DownlinkMode, GridSpec, Modulation};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub channel: Option<ChannelSection>,
    pub grid: Option<GridSection>,
    pub solver: Option<SolverSection>,
    pub alpha: Option<AlphaSection>,
    pub mc: Option<McSection>,
    pub sweep: Option<SweepSection>,
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub p1: Option<f64>,
    pub p1_db: Option<f64>,
    pub p2: Option<f64>,
    pub p2_db: Option<f64>,
    pub pr: Option<f64>,
    pub pr_db: Option<f64>,
    pub nr: Option<f64>,
    pub nr_db: Option<f64>,
    pub n1: Option<f64>,
    pub n1_db: Option<f64>,
    pub n2: Option<f64>,
    pub n2_db: Option<f64>,
    /// Currently `"bpsk"`.
    pub modulation: Option<String>,
    /// Fixed downlink budget in bits per channel use; omit for the
    /// Gaussian capacity of the relay link.
    pub downlink_capacity_bits: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub bins: Option<usize>,
    pub span_sigmas: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub levels: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_points: Option<usize>,
    pub restarts: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub damping: Option<f64>,
    pub seed: Option<u64>,
    pub scalar_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSection {
    pub tol: Option<f64>,
    /// Fixed split instead of optimizing (design command).
    pub fixed: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub samples: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub snr_min_db: Option<f64>,
    pub snr_max_db: Option<f64>,
    pub snr_step_db: Option<f64>,
    pub offset_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub levels: Option<usize>,
    /// Quantizer-rate budget in bits; omit for unbounded.
    pub c_budget: Option<f64>,
    pub monotone_only: Option<bool>,
}

/// Flag overrides collected from the command line.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub levels: Option<usize>,
    pub bins: Option<usize>,
    pub alpha: Option<f64>,
    pub samples: Option<u64>,
}

/// The fully resolved configuration, as echoed into manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub channel: ResolvedChannel,
    pub grid: ResolvedGrid,
    pub solver: ResolvedSolver,
    pub alpha: ResolvedAlpha,
    pub mc: ResolvedMc,
    pub sweep: ResolvedSweep,
    pub oracle: ResolvedOracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedChannel {
    pub p1: f64,
    pub p2: f64,
    pub pr: f64,
    pub nr: f64,
    pub n1: f64,
    pub n2: f64,
    pub p1_db: f64,
    pub p2_db: f64,
    pub pr_db: f64,
    pub nr_db: f64,
    pub n1_db: f64,
    pub n2_db: f64,
    pub modulation: String,
    /// `null` means the Gaussian capacity of the relay link.
    pub downlink_capacity_bits: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedGrid {
    pub bins: usize,
    pub span_sigmas: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSolver {
    pub levels: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub damping: f64,
    pub seed: u64,
    pub scalar_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedAlpha {
    pub tol: f64,
    pub fixed: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedMc {
    pub samples: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSweep {
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub snr_step_db: f64,
    pub offset_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedOracle {
    pub levels: usize,
    pub c_budget: Option<f64>,
    pub monotone_only: bool,
}

fn linear_or_db(name: &str, linear: Option<f64>, db: Option<f64>, default: f64) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => bail!("give either `{name}` or `{name}_db`, not both"),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(db_to_linear(v)),
        (None, None) => Ok(default),
    }
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("cannot parse config file {}", path.display()))
}

pub fn resolve(file: FileConfig, over: Overrides) -> Result<Resolved> {
    let ch = file.channel.unwrap_or_default();
    let p1 = linear_or_db("p1", ch.p1, ch.p1_db, 1.0)?;
    let p2 = linear_or_db("p2", ch.p2, ch.p2_db, 1.0)?;
    let pr = linear_or_db("pr", ch.pr, ch.pr_db, db_to_linear(9.3))?;
    let nr = linear_or_db("nr", ch.nr, ch.nr_db, 1.0)?;
    let n1 = linear_or_db("n1", ch.n1, ch.n1_db, 1.0)?;
    let n2 = linear_or_db("n2", ch.n2, ch.n2_db, 1.0)?;
    let modulation = ch.modulation.unwrap_or_else(|| "bpsk".to_string());
    if modulation != "bpsk" {
        bail!("unsupported modulation `{modulation}` (supported: bpsk)");
    }

    let grid = file.grid.unwrap_or_default();
    let solver = file.solver.unwrap_or_default();
    let alpha = file.alpha.unwrap_or_default();
    let mc = file.mc.unwrap_or_default();
    let sweep = file.sweep.unwrap_or_default();
    let oracle = file.oracle.unwrap_or_default();

    let resolved = Resolved {
        channel: ResolvedChannel {
            p1,
            p2,
            pr,
            nr,
            n1,
            n2,
            p1_db: linear_to_db(p1),
            p2_db: linear_to_db(p2),
            pr_db: linear_to_db(pr),
            nr_db: linear_to_db(nr),
            n1_db: linear_to_db(n1),
            n2_db: linear_to_db(n2),
            modulation,
            downlink_capacity_bits: ch.downlink_capacity_bits,
        },
        grid: ResolvedGrid {
            bins: over.bins.or(grid.bins).unwrap_or(64),
            span_sigmas: grid.span_sigmas.unwrap_or(4.0),
        },
        solver: ResolvedSolver {
            levels: over.levels.or(solver.levels).unwrap_or(8),
            lambda_min: solver.lambda_min.unwrap_or(1e-3),
            lambda_max: solver.lambda_max.unwrap_or(1e2),
            lambda_points: solver.lambda_points.unwrap_or(40),
            restarts: solver.restarts.unwrap_or(8),
            max_iters: solver.max_iters.unwrap_or(5000),
            tol: solver.tol.unwrap_or(1e-10),
            damping: solver.damping.unwrap_or(1.0),
            seed: over.seed.or(solver.seed).unwrap_or(7),
            scalar_threshold: solver.scalar_threshold.unwrap_or(1.0 - 1e-6),
        },
        alpha: ResolvedAlpha {
            tol: alpha.tol.unwrap_or(1e-6),
            fixed: over.alpha.or(alpha.fixed),
        },
        mc: ResolvedMc {
            samples: over.samples.or(mc.samples).unwrap_or(1_000_000),
        },
        sweep: ResolvedSweep {
            snr_min_db: sweep.snr_min_db.unwrap_or(-5.0),
            snr_max_db: sweep.snr_max_db.unwrap_or(20.0),
            snr_step_db: sweep.snr_step_db.unwrap_or(1.0),
            offset_db: sweep.offset_db.unwrap_or(8.5),
        },
        oracle: ResolvedOracle {
            levels: oracle.levels.unwrap_or(2),
            c_budget: oracle.c_budget,
            monotone_only: oracle.monotone_only.unwrap_or(false),
        },
    };
    resolved
        .channel_spec()
        .validate()
        .map_err(anyhow::Error::from)?;
    resolved
        .grid_spec()
        .validate()
        .map_err(anyhow::Error::from)?;
    if let Some(a) = resolved.alpha.fixed {
        if !(a > 0.0 && a <= 1.0) {
            bail!("fixed alpha must lie in (0, 1], got {a}");
        }
    }
    if resolved.sweep.snr_step_db <= 0.0 || resolved.sweep.snr_max_db < resolved.sweep.snr_min_db {
        bail!("sweep grid is empty or descending");
    }
    Ok(resolved)
}

impl Resolved {
    pub fn channel_spec(&self) -> ChannelSpec {
        ChannelSpec {
            p1: self.channel.p1,
            p2: self.channel.p2,
            pr: self.channel.pr,
            nr: self.channel.nr,
            n1: self.channel.n1,
            n2: self.channel.n2,
            uplink_modulation: Modulation::Bpsk,
            downlink_mode: match self.channel.downlink_capacity_bits {
                Some(c) => DownlinkMode::FixedCapacity(c),
                None => DownlinkMode::GaussianCapacity,
            },
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            num_bins: self.grid.bins,
            span_sigmas: self.grid.span_sigmas,
        }
    }

    pub fn lambda_schedule(&self) -> Vec<f64> {
        qfrelay::solver::log_schedule(
            self.solver.lambda_min,
            self.solver.lambda_max,
            self.solver.lambda_points,
        )
    }

    pub fn solve_config(&self) -> qfrelay::SolveConfig {
        qfrelay::SolveConfig {
            lambda: 1.0,
            restarts: self.solver.restarts,
            max_iters: self.solver.max_iters,
            tol: self.solver.tol,
            damping: self.solver.damping,
            seed: self.solver.seed,
        }
    }

    pub fn design_config(&self) -> qfrelay::DesignConfig {
        qfrelay::DesignConfig {
            levels: self.solver.levels,
            schedule: self.lambda_schedule(),
            solve: self.solve_config(),
            alpha_tol: self.alpha.tol,
            scalar_threshold: self.solver.scalar_threshold,
            fixed_alpha: self.alpha.fixed,
        }
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut v = self.sweep.snr_min_db;
        while v <= self.sweep.snr_max_db + 1e-9 {
            grid.push(v);
            v += self.sweep.snr_step_db;
        }
        grid
    }
}
