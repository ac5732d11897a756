//! Reproduction engine for the simulation studies: benchmark densities,
//! the global L1 table pipeline, the pointwise coverage pipeline, and
//! CSV/markdown persistence used by the CLI.

pub mod densities;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

use crate::credible::{default_pointwise_j, immersion_quantile, immersion_samples_at, recalibrate_level};
use crate::error::{Error, Result};
use crate::grid::{count_bins, GridSpec, ThetaArray};
use crate::immersion::{project_and_normalize, MapKind};
use crate::limit_process::ZbTable;
use crate::posterior::{posterior_params, sample_theta, DirichletParams};
use densities::DensityName;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub density: DensityName,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub draws: usize,
    pub seed: u64,
    /// Pointwise runs only.
    pub x0: Vec<f64>,
    pub gammas: Vec<f64>,
    pub maps: Vec<MapKind>,
    pub recalibrate: bool,
    /// Per-axis bin count override; otherwise the per-pipeline rate rule.
    pub j_override: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        if self.replicates == 0 || self.draws == 0 {
            return Err(Error::InvalidArgument(
                "replicates and draws must be positive".into(),
            ));
        }
        if self.gammas.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
            return Err(Error::InvalidArgument("gammas must be in (0,1)".into()));
        }
        Ok(())
    }
}

/// Per-axis bin count for the global pipeline: `J = ceil(2 n^{1/4})`.
pub fn default_global_j(n: usize) -> usize {
    (2.0 * (n as f64).powf(0.25)).ceil() as usize
}

/// Midpoint-quadrature table of a smooth density over a grid: `g0` evaluated
/// at `res^d` nodes per cell (flattened cell-major), plus the node weight.
pub struct QuadTable {
    pub values: Vec<f64>,
    pub nodes_per_cell: usize,
    pub node_weight: f64,
}

pub fn quad_table(g0: fn(&[f64]) -> f64, grid: &GridSpec, res: usize) -> QuadTable {
    let d = grid.dims();
    let nodes_per_cell = res.pow(d as u32);
    let cell_volume: f64 = grid.bins().iter().map(|&j| 1.0 / j as f64).product();
    let node_weight = cell_volume / nodes_per_cell as f64;
    let quad = GridSpec::new(&vec![res; d]).expect("res >= 1");
    let mut values = Vec::with_capacity(grid.cells() * nodes_per_cell);
    let mut x = vec![0.0f64; d];
    grid.for_each(|cell| {
        quad.for_each(|node| {
            for k in 0..d {
                let width = 1.0 / grid.bins()[k] as f64;
                x[k] = cell[k] as f64 * width + (node[k] as f64 + 0.5) / res as f64 * width;
            }
            values.push(g0(&x));
        });
    });
    QuadTable {
        values,
        nodes_per_cell,
        node_weight,
    }
}

/// `||g - g0||_1` between the step density with heights `theta` and the
/// smooth density tabulated in `quad`, by per-cell tensor quadrature.
pub fn l1_to_smooth(theta: &ThetaArray, quad: &QuadTable) -> f64 {
    let scale = theta.grid.scale();
    let mut total = 0.0;
    for (j, &t) in theta.theta.iter().enumerate() {
        let step = scale * t;
        let base = j * quad.nodes_per_cell;
        for i in 0..quad.nodes_per_cell {
            total += (step - quad.values[base + i]).abs();
        }
    }
    total * quad.node_weight
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GlobalRow {
    pub density: String,
    pub n: usize,
    pub j: usize,
    /// Mean over replicates of the per-replicate average posterior L1 error.
    pub l1_mean: f64,
    /// Dispersion (SD) of the replicate averages.
    pub l1_sd: f64,
    pub l1_star_mean: f64,
    pub l1_star_sd: f64,
    pub replicates: usize,
    pub draws: usize,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const QUAD_RES: usize = 8;

/// Table-1 pipeline: posterior and immersion-posterior L1 errors to the true
/// density, per sample size.
pub fn run_global_table(config: &SimConfig) -> Result<Vec<GlobalRow>> {
    config.validate()?;
    let g0 = config.density.density();
    let mut rows = Vec::new();
    for (row_idx, &n) in config.ns.iter().enumerate() {
        let j = config.j_override.unwrap_or_else(|| default_global_j(n));
        let grid = GridSpec::cubic(2, j)?;
        let quad = quad_table(g0, &grid, QUAD_RES);
        let per_rep: Vec<(f64, f64)> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let tag = (row_idx * config.replicates + rep) as u64 * 2;
                let mut data_rng = stream_rng(config.seed, tag);
                let data = densities::sample_density(config.density, n, &mut data_rng)
                    .expect("benchmark density sampler");
                let counts = count_bins(&data, &grid).expect("data in domain");
                let prior = DirichletParams::flat(grid.clone(), 1.0).expect("valid prior");
                let post = posterior_params(&prior, &counts).expect("matching grids");
                let mut draw_rng = stream_rng(config.seed, tag + 1);
                let mut l1_sum = 0.0;
                let mut l1_star_sum = 0.0;
                for _ in 0..config.draws {
                    let theta = sample_theta(&post, &mut draw_rng);
                    l1_sum += l1_to_smooth(&theta, &quad);
                    let star = project_and_normalize(&theta).expect("valid draw");
                    l1_star_sum += l1_to_smooth(&star, &quad);
                }
                let s = config.draws as f64;
                (l1_sum / s, l1_star_sum / s)
            })
            .collect();
        let (l1_mean, l1_sd) = mean_sd(&per_rep.iter().map(|p| p.0).collect::<Vec<_>>());
        let (l1_star_mean, l1_star_sd) =
            mean_sd(&per_rep.iter().map(|p| p.1).collect::<Vec<_>>());
        rows.push(GlobalRow {
            density: config.density.to_string(),
            n,
            j,
            l1_mean,
            l1_sd,
            l1_star_mean,
            l1_star_sd,
            replicates: config.replicates,
            draws: config.draws,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CoverageRow {
    pub density: String,
    pub n: usize,
    pub j: usize,
    pub map: String,
    pub credibility: f64,
    pub adjusted: bool,
    /// Fraction of replicates whose interval contains the true value.
    pub coverage: f64,
    pub mean_length: f64,
    pub length_sd: f64,
    pub replicates: usize,
    pub draws: usize,
}

/// Tables 2-5 pipeline: pointwise coverage and length per (n, map,
/// credibility), raw and (where a quantile pair is available) recalibrated.
///
/// Adjusted rows are emitted only for targets whose recalibration pair
/// resolves (built-in pairs or the supplied Z table); others are skipped.
pub fn run_coverage_table(config: &SimConfig, zb: Option<&ZbTable>) -> Result<Vec<CoverageRow>> {
    config.validate()?;
    if config.x0.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(Error::InvalidArgument("x0 must be interior".into()));
    }
    let g0 = config.density.density();
    let target = g0(&config.x0);
    let eta = [1usize, 1];
    let mut rows = Vec::new();
    for (row_idx, &n) in config.ns.iter().enumerate() {
        let j = config.j_override.unwrap_or_else(|| default_pointwise_j(n));
        let j_vec = vec![j; config.x0.len()];
        // Quantile pairs per (gamma, adjusted?) resolved once up front.
        let mut specs: Vec<(f64, bool, (f64, f64))> = Vec::new();
        for &gamma in &config.gammas {
            specs.push((gamma, false, (1.0 - gamma / 2.0, gamma / 2.0)));
            if config.recalibrate {
                match recalibrate_level(1.0 - gamma, &eta, MapKind::Average, zb) {
                    Ok(pair) => specs.push((gamma, true, pair)),
                    Err(Error::MissingZbEntry { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        for &map in &config.maps {
            // per replicate: interval endpoints for every spec
            let per_rep: Vec<Vec<(f64, f64)>> = (0..config.replicates)
                .into_par_iter()
                .map(|rep| {
                    let tag = (row_idx * config.replicates + rep) as u64 * 2;
                    let mut data_rng = stream_rng(config.seed, tag);
                    let data = densities::sample_density(config.density, n, &mut data_rng)
                        .expect("benchmark density sampler");
                    let draw_seed = stream_rng(config.seed, tag + 1).gen::<u64>();
                    let samples = immersion_samples_at(
                        &data,
                        &config.x0,
                        &j_vec,
                        map,
                        config.draws,
                        draw_seed,
                    )
                    .expect("valid pointwise setup");
                    specs
                        .iter()
                        .map(|&(_, _, (a, b))| {
                            let lower = immersion_quantile(&samples, a).unwrap();
                            let upper = immersion_quantile(&samples, b).unwrap();
                            (lower, upper)
                        })
                        .collect()
                })
                .collect();
            for (s_idx, &(gamma, adjusted, _)) in specs.iter().enumerate() {
                if adjusted && map != MapKind::Average {
                    continue; // recalibration pairs here target the average map
                }
                let mut hits = 0usize;
                let mut lengths = Vec::with_capacity(config.replicates);
                for rep in &per_rep {
                    let (lo, hi) = rep[s_idx];
                    if lo <= target && target <= hi {
                        hits += 1;
                    }
                    lengths.push(hi - lo);
                }
                let (mean_length, length_sd) = mean_sd(&lengths);
                rows.push(CoverageRow {
                    density: config.density.to_string(),
                    n,
                    j,
                    map: map.to_string(),
                    credibility: 1.0 - gamma,
                    adjusted,
                    coverage: hits as f64 / config.replicates as f64,
                    mean_length,
                    length_sd,
                    replicates: config.replicates,
                    draws: config.draws,
                });
            }
        }
    }
    Ok(rows)
}

/// Read a dataset CSV: one point per row, one coordinate per column; a
/// non-numeric first row is treated as a header.
pub fn read_data_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)?;
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => data.push(row),
            Err(_) if i == 0 => {} // header row
            Err(_) => {
                return Err(Error::InvalidArgument(format!(
                    "non-numeric value in data row {i}"
                )))
            }
        }
    }
    if data.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = data[0].len();
    if let Some(i) = data.iter().position(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!(
            "row {i} has {} coordinates, expected {d}",
            data[i].len()
        )));
    }
    Ok(data)
}

/// Read a flat array of step heights (all numeric fields, row-major).
pub fn read_theta_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        for field in rec?.iter() {
            let f = field.trim();
            if f.is_empty() {
                continue;
            }
            out.push(f.parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("non-numeric theta value {f:?}"))
            })?);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}

pub fn write_global_csv(rows: &[GlobalRow], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(
        out,
        "density,n,j,l1_mean,l1_sd,l1_star_mean,l1_star_sd,replicates,draws"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.density, r.n, r.j, r.l1_mean, r.l1_sd, r.l1_star_mean, r.l1_star_sd,
            r.replicates, r.draws
        )?;
    }
    Ok(())
}

pub fn write_coverage_csv(rows: &[CoverageRow], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(
        out,
        "density,n,j,map,credibility,adjusted,coverage,mean_length,length_sd,replicates,draws"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{},{}",
            r.density,
            r.n,
            r.j,
            r.map,
            r.credibility,
            r.adjusted,
            r.coverage,
            r.mean_length,
            r.length_sd,
            r.replicates,
            r.draws
        )?;
    }
    Ok(())
}

/// Markdown rendering of the global table for eyeball comparison.
pub fn global_markdown(rows: &[GlobalRow]) -> String {
    let mut s = String::from("| density | n | J | L1 (SD) | L1* (SD) |\n|---|---|---|---|---|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.3} ({:.3}) | {:.3} ({:.3}) |\n",
            r.density, r.n, r.j, r.l1_mean, r.l1_sd, r.l1_star_mean, r.l1_star_sd
        ));
    }
    s
}

/// Markdown rendering of the coverage table.
pub fn coverage_markdown(rows: &[CoverageRow]) -> String {
    let mut s = String::from(
        "| density | n | map | credibility | adjusted | coverage | length (SD) |\n|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2} | {} | {:.2} | {:.2} ({:.2}) |\n",
            r.density, r.n, r.map, r.credibility, r.adjusted, r.coverage, r.mean_length,
            r.length_sd
        ));
    }
    s
}
