//! Exact isotonic regression of cell-indexed arrays onto the monotone cone
//! `C_J = { c : c_{j1} <= c_{j2} whenever j1 >= j2 }` (coordinate-wise
//! nonincreasing).
//!
//! For d = 1 both the L1 and L2 problems are solved by pool-adjacent-
//! violators (weighted median / weighted mean pooling). For d >= 2 the L1
//! problem is solved exactly by value-range partitioning: split the sorted
//! distinct input values in half, solve the induced binary monotone
//! classification problem as a minimum cut on the grid order graph, and
//! recurse on both sides. The L2 problem for d >= 2 is solved by Dykstra's
//! alternating projections over the adjacency constraints.

mod flow;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ThetaArray};
use flow::Dinic;

/// Slack applied to adjacent comparisons; cut-based solutions are assembled
/// in floating point.
pub const MONO_TOL: f64 = 1e-10;

/// True iff `theta` is nonincreasing along every axis (adjacency suffices by
/// transitivity).
pub fn is_monotone(theta: &ThetaArray) -> bool {
    let grid = &theta.grid;
    let mut ok = true;
    grid.for_each(|idx| {
        let f = grid.flat(idx);
        for k in 0..grid.dims() {
            if idx[k] + 1 < grid.bins()[k] {
                let succ = f + grid.strides()[k];
                if theta.theta[succ] > theta.theta[f] + MONO_TOL {
                    ok = false;
                }
            }
        }
    });
    ok
}

fn validate(theta: &ThetaArray, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if let Some(j) = theta.theta.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    let w = match weights {
        Some(w) => {
            if w.len() != theta.theta.len() {
                return Err(Error::InvalidArgument(
                    "weights length does not match cell count".into(),
                ));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument("weights must be positive".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; theta.theta.len()],
    };
    Ok(w)
}

/// Weighted median of `(value, weight)` pairs with the interval-midpoint
/// tie-break: when the median is an interval, return its midpoint.
fn weighted_median_midpoint(items: &mut Vec<(f64, f64)>) -> f64 {
    items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = items.iter().map(|&(_, w)| w).sum();
    let half = total / 2.0;
    let tol = 1e-12 * total.max(1.0);
    let mut cum = 0.0;
    for (i, &(v, w)) in items.iter().enumerate() {
        cum += w;
        if cum >= half - tol {
            if (cum - half).abs() <= tol && i + 1 < items.len() {
                // Any value in [v, next] is a median; take the midpoint.
                return (v + items[i + 1].0) / 2.0;
            }
            return v;
        }
    }
    items.last().map(|&(v, _)| v).unwrap()
}

/// Pool-adjacent-violators for a nonincreasing fit in one dimension.
/// `pool` computes the block representative from the raw (value, weight)
/// items of a merged block.
fn pava<F: Fn(&mut Vec<(f64, f64)>) -> f64>(values: &[f64], weights: &[f64], pool: F) -> Vec<f64> {
    struct Block {
        start: usize,
        end: usize, // exclusive
        value: f64,
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        blocks.push(Block {
            start: i,
            end: i + 1,
            value: values[i],
        });
        while blocks.len() >= 2 {
            let last = blocks.len() - 1;
            if blocks[last].value <= blocks[last - 1].value {
                break;
            }
            let merged_end = blocks[last].end;
            blocks.pop();
            let b = blocks.last_mut().unwrap();
            b.end = merged_end;
            let mut items: Vec<(f64, f64)> = (b.start..b.end)
                .map(|j| (values[j], weights[j]))
                .collect();
            b.value = pool(&mut items);
        }
    }
    let mut out = vec![0.0; values.len()];
    for b in &blocks {
        for j in b.start..b.end {
            out[j] = b.value;
        }
    }
    out
}

/// Binary monotone classification: among `cells` (flat indices), choose the
/// set taking the high label. The set must be downward closed in the index
/// partial order; costs are per-cell. Returns `true` for cells labeled high.
/// Solved as a minimum cut (maximum-weight closure); the minimal optimal
/// source side is returned, which makes the labeling deterministic.
fn binary_split(
    grid: &GridSpec,
    cells: &[usize],
    cost_low: impl Fn(usize) -> f64,
    cost_high: impl Fn(usize) -> f64,
) -> Vec<bool> {
    let n = cells.len();
    let mut local = std::collections::HashMap::with_capacity(n);
    for (i, &c) in cells.iter().enumerate() {
        local.insert(c, i);
    }
    let s = n;
    let t = n + 1;
    let mut dinic = Dinic::new(n + 2);
    for (i, &c) in cells.iter().enumerate() {
        // Benefit of taking the high label.
        let b = cost_low(c) - cost_high(c);
        if b > 0.0 {
            dinic.add_edge(s, i, b);
        } else if b < 0.0 {
            dinic.add_edge(i, t, -b);
        }
        // Closure: if a cell is high, each immediate predecessor must be too.
        let idx = grid.multi(c);
        for k in 0..grid.dims() {
            if idx[k] > 0 {
                let pred = c - grid.strides()[k];
                if let Some(&pi) = local.get(&pred) {
                    dinic.add_edge(i, pi, Dinic::infinite_cap());
                }
            }
        }
    }
    let side = dinic.min_cut_source_side(s, t);
    (0..n).map(|i| side[i]).collect()
}

fn partition_l1(
    grid: &GridSpec,
    theta: &[f64],
    weights: &[f64],
    out: &mut [f64],
    cells: Vec<usize>,
    values: &[f64],
) {
    if values.len() == 1 {
        for c in cells {
            out[c] = values[0];
        }
        return;
    }
    let mid = values.len() / 2;
    let (v_lo, v_hi) = (values[mid - 1], values[mid]);
    let high = binary_split(
        grid,
        &cells,
        |c| weights[c] * (theta[c] - v_lo).abs(),
        |c| weights[c] * (theta[c] - v_hi).abs(),
    );
    let mut lo_cells = Vec::new();
    let mut hi_cells = Vec::new();
    for (i, c) in cells.into_iter().enumerate() {
        if high[i] {
            hi_cells.push(c);
        } else {
            lo_cells.push(c);
        }
    }
    if !lo_cells.is_empty() {
        partition_l1(grid, theta, weights, out, lo_cells, &values[..mid]);
    }
    if !hi_cells.is_empty() {
        partition_l1(grid, theta, weights, out, hi_cells, &values[mid..]);
    }
}

/// Exact weighted L1 isotonic regression onto the monotone cone.
///
/// d = 1 uses median-pooling PAVA with the interval-midpoint tie-break;
/// d >= 2 uses value-range partitioning with min-cut subproblems, so the
/// output takes values from the input multiset.
pub fn isotonize_l1(theta: &ThetaArray, weights: Option<&[f64]>) -> Result<ThetaArray> {
    let w = validate(theta, weights)?;
    let grid = &theta.grid;
    let out = if grid.dims() == 1 {
        pava(&theta.theta, &w, weighted_median_midpoint)
    } else {
        let mut values = theta.theta.clone();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        let mut out = vec![0.0; grid.cells()];
        let cells: Vec<usize> = (0..grid.cells()).collect();
        partition_l1(grid, &theta.theta, &w, &mut out, cells, &values);
        out
    };
    Ok(ThetaArray::new(grid.clone(), out, false))
}

/// Weighted L2 isotonic regression. d = 1 is classic mean-pooling PAVA;
/// d >= 2 runs Dykstra's alternating projections over the adjacency
/// half-spaces until the sweep-to-sweep change drops below 1e-13.
pub fn isotonize_l2(theta: &ThetaArray, weights: Option<&[f64]>) -> Result<ThetaArray> {
    let w = validate(theta, weights)?;
    let grid = &theta.grid;
    let out = if grid.dims() == 1 {
        pava(&theta.theta, &w, |items| {
            let tw: f64 = items.iter().map(|&(_, wt)| wt).sum();
            items.iter().map(|&(v, wt)| v * wt).sum::<f64>() / tw
        })
    } else {
        dykstra_l2(grid, &theta.theta, &w)
    };
    Ok(ThetaArray::new(grid.clone(), out, false))
}

fn adjacency_edges(grid: &GridSpec) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    grid.for_each(|idx| {
        let f = grid.flat(idx);
        for k in 0..grid.dims() {
            if idx[k] + 1 < grid.bins()[k] {
                edges.push((f, f + grid.strides()[k])); // require c[lo] >= c[hi]
            }
        }
    });
    edges
}

fn dykstra_l2(grid: &GridSpec, theta: &[f64], w: &[f64]) -> Vec<f64> {
    let edges = adjacency_edges(grid);
    let mut c = theta.to_vec();
    // One correction pair per constraint.
    let mut incr = vec![(0.0f64, 0.0f64); edges.len()];
    for _sweep in 0..100_000 {
        let mut max_change = 0.0f64;
        for (e, &(lo, hi)) in edges.iter().enumerate() {
            let (a0, b0) = (c[lo] + incr[e].0, c[hi] + incr[e].1);
            let (a1, b1) = if a0 >= b0 {
                (a0, b0)
            } else {
                let m = (w[lo] * a0 + w[hi] * b0) / (w[lo] + w[hi]);
                (m, m)
            };
            incr[e] = (a0 - a1, b0 - b1);
            max_change = max_change.max((c[lo] - a1).abs()).max((c[hi] - b1).abs());
            c[lo] = a1;
            c[hi] = b1;
        }
        if max_change < 1e-13 {
            break;
        }
    }
    c
}

/// Weighted L_p cost of `fit` against `theta`.
pub fn lp_cost(theta: &[f64], fit: &[f64], weights: Option<&[f64]>, p: u32) -> f64 {
    theta
        .iter()
        .zip(fit)
        .enumerate()
        .map(|(j, (&t, &f))| {
            let w = weights.map_or(1.0, |w| w[j]);
            w * (t - f).abs().powi(p as i32)
        })
        .sum()
}

const BRUTE_FORCE_CELL_LIMIT: usize = 12;

/// Certified-optimal isotonic regression by exhaustive search, for
/// validating the fast paths on small grids.
///
/// p = 1 enumerates monotone assignments with values restricted to the
/// distinct input values (an optimal L1 solution of that form always
/// exists). p = 2 enumerates forced-equality edge subsets; each candidate is
/// the blockwise weighted mean, and the optimum is the cheapest feasible
/// candidate.
pub fn brute_force_isotonic(theta: &ThetaArray, p: u32) -> Result<ThetaArray> {
    if !(p == 1 || p == 2) {
        return Err(Error::InvalidArgument("p must be 1 or 2".into()));
    }
    let grid = &theta.grid;
    if grid.cells() > BRUTE_FORCE_CELL_LIMIT {
        return Err(Error::GridTooLarge {
            cells: grid.cells(),
            limit: BRUTE_FORCE_CELL_LIMIT,
        });
    }
    validate(theta, None)?;
    let out = if p == 1 {
        brute_force_l1(grid, &theta.theta)
    } else {
        brute_force_l2(grid, &theta.theta)
    };
    Ok(ThetaArray::new(grid.clone(), out, false))
}

fn brute_force_l1(grid: &GridSpec, theta: &[f64]) -> Vec<f64> {
    let mut values: Vec<f64> = theta.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let cells = grid.cells();
    // Predecessors of each cell in row-major order come earlier, so a DFS in
    // flat order can bound each assignment by the minimum over assigned
    // predecessors.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); cells];
    grid.for_each(|idx| {
        let f = grid.flat(idx);
        for k in 0..grid.dims() {
            if idx[k] > 0 {
                preds[f].push(f - grid.strides()[k]);
            }
        }
    });
    let mut assign = vec![0.0f64; cells];
    let mut best = vec![0.0f64; cells];
    let mut best_cost = f64::INFINITY;
    fn dfs(
        j: usize,
        cost_so_far: f64,
        values: &[f64],
        theta: &[f64],
        preds: &[Vec<usize>],
        assign: &mut Vec<f64>,
        best: &mut Vec<f64>,
        best_cost: &mut f64,
    ) {
        if cost_so_far >= *best_cost {
            return;
        }
        if j == theta.len() {
            *best_cost = cost_so_far;
            best.copy_from_slice(assign);
            return;
        }
        let bound = preds[j]
            .iter()
            .map(|&p| assign[p])
            .fold(f64::INFINITY, f64::min);
        for &v in values.iter().rev() {
            if v > bound {
                continue;
            }
            assign[j] = v;
            dfs(
                j + 1,
                cost_so_far + (theta[j] - v).abs(),
                values,
                theta,
                preds,
                assign,
                best,
                best_cost,
            );
        }
    }
    dfs(
        0,
        0.0,
        &values,
        theta,
        &preds,
        &mut assign,
        &mut best,
        &mut best_cost,
    );
    best
}

fn brute_force_l2(grid: &GridSpec, theta: &[f64]) -> Vec<f64> {
    let edges = adjacency_edges(grid);
    let cells = grid.cells();
    let mut best = theta.to_vec();
    let mut best_cost = f64::INFINITY;
    let mut comp = vec![0usize; cells];
    // Every candidate below is feasible and blockwise-mean; the optimum is a
    // blockwise mean over its active equality set, so it appears among the
    // candidates and the minimum over them is exact.
    for mask in 0u64..(1u64 << edges.len()) {
        // Union-find over forced-equality edges.
        let mut parent: Vec<usize> = (0..cells).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let mut sums: std::collections::HashMap<usize, (f64, f64)> = Default::default();
        for j in 0..cells {
            comp[j] = find(&mut parent, j);
            let ent = sums.entry(comp[j]).or_insert((0.0, 0.0));
            ent.0 += theta[j];
            ent.1 += 1.0;
        }
        let candidate: Vec<f64> = (0..cells)
            .map(|j| {
                let (s, n) = sums[&comp[j]];
                s / n
            })
            .collect();
        if edges
            .iter()
            .any(|&(lo, hi)| candidate[lo] < candidate[hi] - 1e-12)
        {
            continue;
        }
        let cost = lp_cost(theta, &candidate, None, 2);
        if cost < best_cost {
            best_cost = cost;
            best = candidate;
        }
    }
    best
}

/// `sum_j |theta_j - isotonize_l1(theta)_j|`; zero iff `theta` is monotone.
/// For step densities on a common grid this equals the L1 distance between
/// the density and the monotone function class (the density scale and the
/// cell volume cancel).
pub fn l1_distance_to_cone(theta: &ThetaArray) -> Result<f64> {
    let fit = isotonize_l1(theta, None)?;
    Ok(theta
        .theta
        .iter()
        .zip(&fit.theta)
        .map(|(a, b)| (a - b).abs())
        .sum())
}
