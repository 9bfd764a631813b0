//! Command-line front end: reproducible quantizer-design experiments with
//! plot-ready CSV/JSON output.

mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use qfrelay::{
    design, discretize_uplink, downlink_capacity, estimate_info, simulate_batch, snr_sweep,
    trace_icurve, Design, Error as CoreError, ScalarExtraction,
};

use config::{Overrides, Resolved};
use manifest::{manifest_hash, write_manifest};

#[derive(Parser)]
#[command(
    name = "qfrelay",
    version,
    about = "Relay quantizer design for the two-way relay channel",
    long_about = "Designs relay quantizers by tracing the constrained-information curve, \
                  optimizes the uplink/downlink time split, evaluates the Gaussian \
                  closed-form schemes, and validates designs by Monte Carlo simulation. \
                  All commands are deterministic given the manifest they emit."
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Root PRNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Number of quantizer levels.
    #[arg(long, global = true)]
    levels: Option<usize>,

    /// Number of observation bins.
    #[arg(long, global = true)]
    bins: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the constrained-information curve and its envelope.
    Icurve,
    /// Full design: curve, time split, operating quantizer, scalar map.
    Design {
        /// Fix the time split instead of optimizing it.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Closed-form sum rates of the reference schemes over an SNR sweep.
    GaussianSweep,
    /// Monte Carlo validation of a design's rate quantities.
    Validate {
        /// Load the scalar map from a design.json instead of re-designing.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Sample count override.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Exhaustive deterministic-quantizer search on a small instance.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Marker layered onto errors that stem from user configuration.
#[derive(Debug)]
struct UsageError;

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("configuration error")
    }
}

impl std::error::Error for UsageError {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    e.context(UsageError)
}

/// 2 for configuration problems, 3 for tripped numeric guards, 1 otherwise.
fn classify(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<CoreError>() {
        return match core {
            CoreError::InstanceTooLarge { .. } => 3,
            _ => 2,
        };
    }
    if e.downcast_ref::<UsageError>().is_some()
        || e.downcast_ref::<toml::de::Error>().is_some()
        || e.downcast_ref::<std::io::Error>().is_some()
    {
        return 2;
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configure worker pool")?;
    }

    let file = match &cli.config {
        Some(path) => config::load_file(path).map_err(usage)?,
        None => config::FileConfig::default(),
    };
    let over = Overrides {
        seed: cli.seed,
        levels: cli.levels,
        bins: cli.bins,
        alpha: match &cli.command {
            Command::Design { alpha } => *alpha,
            _ => None,
        },
        samples: match &cli.command {
            Command::Validate { samples, .. } => *samples,
            _ => None,
        },
    };
    let resolved = config::resolve(file, over).map_err(usage)?;

    fs::create_dir_all(&cli.out)
        .with_context(|| format!("create output directory {}", cli.out.display()))?;

    match cli.command {
        Command::Icurve => cmd_icurve(&cli.out, &resolved),
        Command::Design { .. } => cmd_design(&cli.out, &resolved),
        Command::GaussianSweep => cmd_gaussian_sweep(&cli.out, &resolved),
        Command::Validate { design, .. } => cmd_validate(&cli.out, &resolved, design.as_deref()),
        Command::Oracle => cmd_oracle(&cli.out, &resolved),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serialize output")?;
    fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

fn cmd_icurve(out: &Path, cfg: &Resolved) -> Result<()> {
    let model = discretize_uplink(&cfg.channel_spec(), &cfg.grid_spec())?;
    let curve = trace_icurve(
        &model,
        cfg.solver.levels,
        &cfg.lambda_schedule(),
        &cfg.solve_config(),
    )?;
    let hash = manifest_hash("icurve", cfg, cfg.solver.seed);

    let csv_path = out.join("icurve.csv");
    let mut buf = Vec::new();
    curve.write_csv(&mut buf, Some(&format!("manifest {hash}")))?;
    fs::write(&csv_path, buf).with_context(|| format!("write {}", csv_path.display()))?;

    #[derive(Serialize)]
    struct CurveDoc<'a> {
        manifest_hash: &'a str,
        curve: &'a qfrelay::InfoCurve,
    }
    write_json(
        &out.join("icurve.json"),
        &CurveDoc {
            manifest_hash: &hash,
            curve: &curve,
        },
    )?;
    write_manifest(out, "icurve", cfg, &["icurve.csv", "icurve.json"], &hash)?;

    if !curve.schedule_c_monotone {
        eprintln!("warning: achieved rates were not monotone along the multiplier schedule");
    }
    println!(
        "icurve: {} points, H(Y_r) = {:.6}, bound = {:.6} -> {}",
        curve.points.len(),
        curve.h_yr,
        curve.upper_bound,
        csv_path.display()
    );
    Ok(())
}

fn cmd_design(out: &Path, cfg: &Resolved) -> Result<()> {
    let spec = cfg.channel_spec();
    let model = discretize_uplink(&spec, &cfg.grid_spec())?;
    let d = design(&model, downlink_capacity(&spec), &cfg.design_config())?;
    let hash = manifest_hash("design", cfg, cfg.solver.seed);

    #[derive(Serialize)]
    struct DesignDoc<'a> {
        manifest_hash: &'a str,
        design: &'a Design,
    }
    write_json(
        &out.join("design.json"),
        &DesignDoc {
            manifest_hash: &hash,
            design: &d,
        },
    )?;

    // Staircase data: bin centers, the observation pmf and the chosen level.
    let op = &d.curve.points[d.operating_index];
    let argmax_map: Vec<usize> = (0..op.quantizer.bins())
        .map(|j| {
            (0..op.quantizer.levels())
                .max_by(|&a, &b| op.quantizer.get(a, j).total_cmp(&op.quantizer.get(b, j)))
                .unwrap_or(0)
        })
        .collect();
    let map: &[usize] = match &d.extraction {
        ScalarExtraction::Scalar(s) => &s.map,
        ScalarExtraction::NotScalar { .. } => &argmax_map,
    };
    let csv_path = out.join("quantizer.csv");
    let mut text = format!(
        "# manifest {hash}\n# scalar = {}\nbin,yr_center,p_yr,level\n",
        d.extraction.is_scalar()
    );
    for (j, &level) in map.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            j,
            model.yr_centers()[j],
            model.p_yr()[j],
            level
        ));
    }
    fs::write(&csv_path, text).with_context(|| format!("write {}", csv_path.display()))?;
    write_manifest(out, "design", cfg, &["design.json", "quantizer.csv"], &hash)?;

    if d.r_sum < 1e-12 {
        eprintln!("warning: design achieves zero sum rate");
    }
    if !d.extraction.is_scalar() {
        eprintln!(
            "warning: operating quantizer is not scalar at threshold {}; \
             quantizer.csv carries its argmax hardening",
            cfg.solver.scalar_threshold
        );
    }
    println!(
        "design: alpha* = {:.6}, sum rate = {:.6} bits/use (envelope {:.6}), C_dl = {:.6} -> {}",
        d.alpha.alpha_star,
        d.r_sum,
        d.r_sum_envelope,
        d.c_downlink,
        out.join("design.json").display()
    );
    Ok(())
}

fn cmd_gaussian_sweep(out: &Path, cfg: &Resolved) -> Result<()> {
    let rows = snr_sweep(&cfg.channel_spec(), &cfg.snr_grid(), cfg.sweep.offset_db)?;
    let hash = manifest_hash("gaussian-sweep", cfg, cfg.solver.seed);

    let csv_path = out.join("gaussian_sweep.csv");
    let mut buf = Vec::new();
    qfrelay::gaussian::write_sweep_csv(&rows, &mut buf, Some(&format!("manifest {hash}")))?;
    fs::write(&csv_path, buf).with_context(|| format!("write {}", csv_path.display()))?;
    write_manifest(out, "gaussian-sweep", cfg, &["gaussian_sweep.csv"], &hash)?;

    println!(
        "gaussian-sweep: {} rows -> {}",
        rows.len(),
        csv_path.display()
    );
    Ok(())
}

fn cmd_validate(out: &Path, cfg: &Resolved, design_path: Option<&Path>) -> Result<()> {
    let spec = cfg.channel_spec();
    let (map, analytic) = match design_path {
        Some(path) => {
            #[derive(serde::Deserialize)]
            struct DesignDoc {
                design: Design,
            }
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read design file {}", path.display()))?;
            let doc: DesignDoc = serde_json::from_str(&text)
                .with_context(|| format!("cannot parse design file {}", path.display()))?;
            match doc.design.extraction {
                ScalarExtraction::Scalar(s) => (s.map, s.hard_report),
                ScalarExtraction::NotScalar { .. } => {
                    bail!(CoreError::InvalidQuantizer(format!(
                        "design in {} has no scalar quantizer; only deterministic maps \
                         can be simulated",
                        path.display()
                    )))
                }
            }
        }
        None => {
            let model = discretize_uplink(&spec, &cfg.grid_spec())?;
            let d = design(&model, downlink_capacity(&spec), &cfg.design_config())?;
            match d.extraction {
                ScalarExtraction::Scalar(s) => (s.map, s.hard_report),
                ScalarExtraction::NotScalar { .. } => bail!(CoreError::InvalidQuantizer(
                    "the designed quantizer is not scalar; rerun with a fixed split in the \
                     saturation region or pass --design with a scalar design"
                        .into()
                )),
            }
        }
    };

    let counts = simulate_batch(
        &spec,
        &map,
        &cfg.grid_spec(),
        cfg.mc.samples,
        cfg.solver.seed,
    )?;
    let report = estimate_info(&counts)?;
    let hash = manifest_hash("validate", cfg, cfg.solver.seed);

    #[derive(Serialize)]
    struct Entry {
        value: f64,
        stderr: f64,
        analytic: f64,
        sigmas: f64,
    }
    let entry = |est: qfrelay::McEstimate, want: f64| Entry {
        value: est.point_estimate,
        stderr: est.std_error,
        analytic: want,
        sigmas: if est.std_error > 0.0 {
            (est.point_estimate - want).abs() / est.std_error
        } else {
            0.0
        },
    };
    #[derive(Serialize)]
    struct ValidateDoc<'a> {
        manifest_hash: &'a str,
        config: &'a Resolved,
        seed: u64,
        n: u64,
        map: &'a [usize],
        estimates: std::collections::BTreeMap<&'static str, Entry>,
    }
    let doc = ValidateDoc {
        manifest_hash: &hash,
        config: cfg,
        seed: cfg.solver.seed,
        n: cfg.mc.samples,
        map: &map,
        estimates: [
            ("i1", entry(report.i1, analytic.i1)),
            ("i2", entry(report.i2, analytic.i2)),
            ("c_value", entry(report.c_value, analytic.c_value)),
            ("h_yhat", entry(report.h_yhat, analytic.h_yhat)),
        ]
        .into_iter()
        .collect(),
    };
    write_json(&out.join("validate.json"), &doc)?;
    write_manifest(out, "validate", cfg, &["validate.json"], &hash)?;

    println!(
        "validate: n = {}, worst deviation = {:.2} sigma -> {}",
        cfg.mc.samples,
        doc.estimates.values().map(|e| e.sigmas).fold(0.0, f64::max),
        out.join("validate.json").display()
    );
    Ok(())
}

fn cmd_oracle(out: &Path, cfg: &Resolved) -> Result<()> {
    let model = discretize_uplink(&cfg.channel_spec(), &cfg.grid_spec())?;
    let budget = cfg.oracle.c_budget.unwrap_or(f64::INFINITY);
    let result =
        qfrelay::brute_force_scalar(&model, cfg.oracle.levels, budget, cfg.oracle.monotone_only)?;
    let hash = manifest_hash("oracle", cfg, cfg.solver.seed);

    #[derive(Serialize)]
    struct OracleDoc<'a> {
        manifest_hash: &'a str,
        bins: usize,
        levels: usize,
        c_budget: Option<f64>,
        monotone_only: bool,
        result: &'a qfrelay::BruteForceResult,
    }
    write_json(
        &out.join("oracle.json"),
        &OracleDoc {
            manifest_hash: &hash,
            bins: model.bins(),
            levels: cfg.oracle.levels,
            c_budget: cfg.oracle.c_budget,
            monotone_only: cfg.oracle.monotone_only,
            result: &result,
        },
    )?;
    write_manifest(out, "oracle", cfg, &["oracle.json"], &hash)?;

    println!(
        "oracle: searched {} maps, best J = {:.6} at C = {:.6} -> {}",
        result.maps_searched,
        result.report.j_value,
        result.report.c_value,
        out.join("oracle.json").display()
    );
    Ok(())
}
