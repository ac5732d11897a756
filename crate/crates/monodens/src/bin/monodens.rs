//! Command-line interface: posterior fitting, isotonization, monotonicity
//! tests, pointwise credible intervals, simulation-study reproduction, and
//! the limit-process (Z) table simulator.
//!
//! All commands are deterministic given identical flags and seed. The seed
//! defaults to the `MONODENS_SEED` environment variable, then 0.

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::path::PathBuf;

use monodens::credible::{ci_pointwise, ci_pointwise_recalibrated};
use monodens::harness::densities::DensityName;
use monodens::harness::{
    coverage_markdown, global_markdown, read_data_csv, read_theta_csv, run_coverage_table,
    run_global_table, write_coverage_csv, write_global_csv, SimConfig,
};
use monodens::limit_process::{zb_distribution, LimitParams, ZbTable};
use monodens::mono_test::{test_adaptive, test_fixed_j};
use monodens::posterior::{posterior_params, sample_theta, DirichletParams};
use monodens::{
    count_bins, isotonize_l1, isotonize_l2, l1_distance_to_cone, project_and_normalize, GridSpec,
    MapKind, Result, ThetaArray,
};

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "monodens", version, about = "Bayesian inference for multivariate monotone densities on [0,1]^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// RNG seed; defaults to $MONODENS_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            std::env::var("MONODENS_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or(0)
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the posterior to a dataset and summarize it with the immersion map.
    Fit {
        /// Dataset CSV: one point per row, one coordinate per column.
        #[arg(long)]
        input: PathBuf,
        /// Per-axis bin counts, comma-separated; a single value is cubed
        /// across axes. Defaults to ceil(2 n^{1/4}) per axis.
        #[arg(long)]
        j: Option<String>,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Isotonize a supplied step-height array.
    Project {
        /// Flat theta CSV (row-major).
        #[arg(long)]
        input: PathBuf,
        /// Per-axis bin counts, comma-separated.
        #[arg(long)]
        bins: String,
        /// Norm for the projection.
        #[arg(long, default_value = "l1")]
        norm: String,
        /// Renormalize the projection to sum to 1.
        #[arg(long)]
        normalize: bool,
    },
    /// Posterior test of multivariate monotonicity.
    Test {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "fixed")]
        mode: String,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Multiplier on the default threshold constant M_n = sqrt(log n)
        /// (fixed mode) or the constant M_0 itself (adaptive mode).
        #[arg(long, default_value_t = 1.0)]
        mn_const: f64,
        /// Per-axis bin count override (fixed mode).
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Pointwise credible interval for the density at x0.
    Ci {
        #[arg(long)]
        input: PathBuf,
        /// Interior point, comma-separated coordinates.
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value = "average")]
        map: String,
        /// Per-axis bin count override.
        #[arg(long)]
        j: Option<usize>,
        /// Recalibrate quantile levels to the target frequentist coverage.
        #[arg(long)]
        recalibrate: bool,
        /// Z table CSV (from `monodens zb`) for recalibration entries beyond
        /// the built-in ones.
        #[arg(long)]
        zb_table: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Reproduce the global L1 table for a benchmark density.
    SimulateGlobal {
        #[arg(long, default_value = "g1")]
        density: String,
        /// Sample sizes, comma-separated.
        #[arg(long, default_value = "500,1000,2000")]
        ns: String,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Output CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print a markdown rendering.
        #[arg(long)]
        markdown: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Reproduce the pointwise coverage table for a benchmark density.
    SimulateCoverage {
        #[arg(long, default_value = "g4")]
        density: String,
        #[arg(long, default_value = "500,1000,2000,5000")]
        ns: String,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value = "0.5,0.5")]
        x0: String,
        /// Interval levels gamma, comma-separated.
        #[arg(long, default_value = "0.01,0.05,0.10")]
        gammas: String,
        /// Maps to evaluate, comma-separated.
        #[arg(long, default_value = "average")]
        maps: String,
        #[arg(long)]
        recalibrate: bool,
        #[arg(long)]
        zb_table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        markdown: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Simulate the limiting Z distributions and persist the quantile table.
    Zb {
        /// Smoothness orders per axis, comma-separated.
        #[arg(long, default_value = "1,1")]
        eta: String,
        #[arg(long, default_value_t = 2000)]
        outer: usize,
        #[arg(long, default_value_t = 500)]
        inner: usize,
        /// Lattice truncation radius.
        #[arg(long, default_value_t = 4.0)]
        lattice_c: f64,
        /// Lattice points per unit.
        #[arg(long, default_value_t = 16)]
        lattice_res: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| monodens::Error::InvalidArgument(format!("bad {what} entry {p:?}")))
        })
        .collect()
}

fn parse_bins(s: &str, dims: Option<usize>) -> Result<Vec<usize>> {
    let vals: Vec<usize> = parse_list(s, "bin count")?;
    match (vals.len(), dims) {
        (1, Some(d)) => Ok(vec![vals[0]; d]),
        _ => Ok(vals),
    }
}

#[derive(Serialize)]
struct FitSummary {
    schema_version: String,
    n: usize,
    bins: Vec<usize>,
    seed: u64,
    draws: usize,
    posterior_mean_theta: Vec<f64>,
    immersion_mean_theta: Vec<f64>,
    mean_l1_distance_to_cone: f64,
}

fn cmd_fit(input: &PathBuf, j: Option<&str>, draws: usize, seed: u64) -> Result<()> {
    let data = read_data_csv(input)?;
    let d = data[0].len();
    let bins = match j {
        Some(s) => parse_bins(s, Some(d))?,
        None => vec![monodens::harness::default_global_j(data.len()); d],
    };
    let grid = GridSpec::new(&bins)?;
    let counts = count_bins(&data, &grid)?;
    let prior = DirichletParams::flat(grid.clone(), 1.0)?;
    let post = posterior_params(&prior, &counts)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let cells = grid.cells();
    let mut mean = vec![0.0f64; cells];
    let mut star_mean = vec![0.0f64; cells];
    let mut dist_sum = 0.0;
    for _ in 0..draws {
        let theta = sample_theta(&post, &mut rng);
        dist_sum += l1_distance_to_cone(&theta)?;
        let star = project_and_normalize(&theta)?;
        for j in 0..cells {
            mean[j] += theta.theta[j];
            star_mean[j] += star.theta[j];
        }
    }
    let s = draws as f64;
    mean.iter_mut().for_each(|v| *v /= s);
    star_mean.iter_mut().for_each(|v| *v /= s);
    let summary = FitSummary {
        schema_version: SCHEMA_VERSION.into(),
        n: data.len(),
        bins,
        seed,
        draws,
        posterior_mean_theta: mean,
        immersion_mean_theta: star_mean,
        mean_l1_distance_to_cone: dist_sum / s,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_project(input: &PathBuf, bins: &str, norm: &str, normalize: bool) -> Result<()> {
    let theta = read_theta_csv(input)?;
    let grid = GridSpec::new(&parse_bins(bins, None)?)?;
    if grid.cells() != theta.len() {
        return Err(monodens::Error::GridMismatch(format!(
            "{} values for {} cells",
            theta.len(),
            grid.cells()
        )));
    }
    let arr = ThetaArray::new(grid, theta, false);
    let fit = match norm {
        "l1" => {
            if normalize {
                project_and_normalize(&arr)?
            } else {
                isotonize_l1(&arr, None)?
            }
        }
        "l2" => isotonize_l2(&arr, None)?,
        other => {
            return Err(monodens::Error::InvalidArgument(format!(
                "norm must be l1 or l2, got {other}"
            )))
        }
    };
    for v in &fit.theta {
        println!("{v}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            input,
            j,
            draws,
            seed,
        } => cmd_fit(&input, j.as_deref(), draws, seed.resolve()),
        Command::Project {
            input,
            bins,
            norm,
            normalize,
        } => cmd_project(&input, &bins, &norm, normalize),
        Command::Test {
            input,
            mode,
            gamma,
            mn_const,
            j,
            draws,
            seed,
        } => {
            let data = read_data_csv(&input)?;
            let seed = seed.resolve();
            let result = match mode.as_str() {
                "fixed" => {
                    let n = data.len();
                    let mn = mn_const * monodens::mono_test::default_mn(n);
                    test_fixed_j(&data, j, Some(mn), gamma, draws, seed)?
                }
                "adaptive" => test_adaptive(&data, None, mn_const, gamma, draws, seed)?,
                other => {
                    return Err(monodens::Error::InvalidArgument(format!(
                        "mode must be fixed or adaptive, got {other}"
                    )))
                }
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(())
        }
        Command::Ci {
            input,
            x0,
            gamma,
            map,
            j,
            recalibrate,
            zb_table,
            draws,
            seed,
        } => {
            let data = read_data_csv(&input)?;
            let x0: Vec<f64> = parse_list(&x0, "x0 coordinate")?;
            let map: MapKind = map.parse()?;
            let j = j.map(|v| vec![v; x0.len()]);
            let seed = seed.resolve();
            let ci = if recalibrate {
                let table = zb_table.as_deref().map(ZbTable::load_csv).transpose()?;
                let eta = vec![1usize; x0.len()];
                ci_pointwise_recalibrated(
                    &data,
                    &x0,
                    j,
                    gamma,
                    map,
                    &eta,
                    table.as_ref(),
                    draws,
                    seed,
                )?
            } else {
                ci_pointwise(&data, &x0, j, gamma, map, draws, seed)?
            };
            println!("{}", serde_json::to_string_pretty(&ci)?);
            Ok(())
        }
        Command::SimulateGlobal {
            density,
            ns,
            replicates,
            draws,
            out,
            markdown,
            seed,
        } => {
            let config = SimConfig {
                density: density.parse::<DensityName>()?,
                ns: parse_list(&ns, "sample size")?,
                replicates,
                draws,
                seed: seed.resolve(),
                x0: vec![0.5, 0.5],
                gammas: vec![0.05],
                maps: vec![MapKind::Average],
                recalibrate: false,
                j_override: None,
            };
            let rows = run_global_table(&config)?;
            match out {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                    write_global_csv(&rows, &mut f)?;
                }
                None => write_global_csv(&rows, &mut std::io::stdout().lock())?,
            }
            if markdown {
                print!("{}", global_markdown(&rows));
            }
            Ok(())
        }
        Command::SimulateCoverage {
            density,
            ns,
            replicates,
            draws,
            x0,
            gammas,
            maps,
            recalibrate,
            zb_table,
            out,
            markdown,
            seed,
        } => {
            let maps: Vec<MapKind> = maps
                .split(',')
                .map(|m| m.trim().parse())
                .collect::<Result<_>>()?;
            let config = SimConfig {
                density: density.parse::<DensityName>()?,
                ns: parse_list(&ns, "sample size")?,
                replicates,
                draws,
                seed: seed.resolve(),
                x0: parse_list(&x0, "x0 coordinate")?,
                gammas: parse_list(&gammas, "gamma")?,
                maps,
                recalibrate,
                j_override: None,
            };
            let table = zb_table.as_deref().map(ZbTable::load_csv).transpose()?;
            let rows = run_coverage_table(&config, table.as_ref())?;
            match out {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                    write_coverage_csv(&rows, &mut f)?;
                }
                None => write_coverage_csv(&rows, &mut std::io::stdout().lock())?,
            }
            if markdown {
                print!("{}", coverage_markdown(&rows));
            }
            Ok(())
        }
        Command::Zb {
            eta,
            outer,
            inner,
            lattice_c,
            lattice_res,
            out,
            seed,
        } => {
            let eta: Vec<usize> = parse_list(&eta, "eta")?;
            let mut params = LimitParams::standard(&eta)?;
            params.lattice_c = lattice_c;
            params.lattice_res = lattice_res;
            params.outer_draws = outer;
            params.inner_draws = inner;
            let seed = seed.resolve();
            let dist = zb_distribution(&params, seed)?;
            let table = ZbTable::from_distribution(&dist);
            table.save_csv(&out)?;
            eprintln!(
                "wrote {} entries; one-sided 0.95 coverages: {:.4} (minmax), {:.4} (maxmin), {:.4} (average)",
                table.entries.len(),
                dist.one_sided_coverage(1, 0.95),
                dist.one_sided_coverage(2, 0.95),
                dist.one_sided_coverage(3, 0.95),
            );
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
