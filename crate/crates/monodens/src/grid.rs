//! Equal-width hyperrectangle partition of `[0,1]^d` and cell-indexed arrays.
//!
//! The domain is split into `J_1 x ... x J_d` cells. Cell `(0,...,0)` is
//! closed at the lower boundary, every other cell is half-open:
//! `I_j = prod ((j_k-1)/J_k, j_k/J_k]` (1-based indexing on paper, 0-based
//! here). A step density with step-height vector `theta` takes the value
//! `(prod J_k) * theta_j` on cell `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    bins: Vec<usize>,
    strides: Vec<usize>,
    cells: usize,
}

impl GridSpec {
    /// Build a grid with the given per-axis bin counts.
    pub fn new(bins: &[usize]) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidArgument("bins must be non-empty".into()));
        }
        if let Some(k) = bins.iter().position(|&b| b == 0) {
            return Err(Error::InvalidArgument(format!(
                "bin count on axis {k} must be positive"
            )));
        }
        // Row-major layout over axes in declared order: the last axis varies
        // fastest. Documented so table outputs stay reproducible.
        let d = bins.len();
        let mut strides = vec![1usize; d];
        for k in (0..d - 1).rev() {
            strides[k] = strides[k + 1] * bins[k + 1];
        }
        let cells = bins.iter().product();
        Ok(GridSpec {
            bins: bins.to_vec(),
            strides,
            cells,
        })
    }

    /// Grid with `j` bins on every one of `d` axes.
    pub fn cubic(d: usize, j: usize) -> Result<Self> {
        Self::new(&vec![j; d])
    }

    pub fn dims(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Product of bin counts; the density scale factor `prod J_k`.
    pub fn scale(&self) -> f64 {
        self.bins.iter().map(|&b| b as f64).product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims());
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dims()];
        for k in 0..self.dims() {
            idx[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
        idx
    }

    /// Cell containing `x`: `j_k = max(1, ceil(x_k * J_k))` (1-based),
    /// returned 0-based. The lower face `x_k = 0` maps to index 0.
    pub fn bin_index(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.bin_index_row(x, 0)
    }

    fn bin_index_row(&self, x: &[f64], row: usize) -> Result<Vec<usize>> {
        if x.len() != self.dims() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, grid has {} axes",
                x.len(),
                self.dims()
            )));
        }
        let mut idx = vec![0usize; self.dims()];
        for (k, (&xk, &jk)) in x.iter().zip(&self.bins).enumerate() {
            if !(0.0..=1.0).contains(&xk) {
                return Err(Error::OutOfDomain {
                    row,
                    axis: k,
                    value: xk,
                });
            }
            let j = (xk * jk as f64).ceil() as usize;
            idx[k] = j.max(1) - 1;
        }
        Ok(idx)
    }

    /// Visit every multi-index in row-major order.
    pub fn for_each<F: FnMut(&[usize])>(&self, mut f: F) {
        let mut idx = vec![0usize; self.dims()];
        loop {
            f(&idx);
            let mut k = self.dims();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.bins[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Visit every multi-index in the inclusive box `[lo, hi]`.
    pub fn for_each_in_box<F: FnMut(&[usize])>(&self, lo: &[usize], hi: &[usize], mut f: F) {
        debug_assert!(lo.iter().zip(hi).all(|(l, h)| l <= h));
        let mut idx = lo.to_vec();
        loop {
            f(&idx);
            let mut k = self.dims();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }

    /// Midpoint of cell `idx` (0-based).
    pub fn cell_center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.bins)
            .map(|(&i, &j)| (i as f64 + 0.5) / j as f64)
            .collect()
    }
}

/// Per-cell counts `N_j` of data points.
#[derive(Debug, Clone)]
pub struct BinnedCounts {
    pub grid: GridSpec,
    pub counts: Vec<u64>,
    pub n: u64,
}

/// Assign each data point to its cell and tally.
pub fn count_bins(data: &[Vec<f64>], grid: &GridSpec) -> Result<BinnedCounts> {
    let mut counts = vec![0u64; grid.cells()];
    for (row, x) in data.iter().enumerate() {
        let idx = grid.bin_index_row(x, row)?;
        counts[grid.flat(&idx)] += 1;
    }
    Ok(BinnedCounts {
        grid: grid.clone(),
        counts,
        n: data.len() as u64,
    })
}

/// Flat array of step-height coefficients, one per cell.
///
/// When `normalized` the entries are nonnegative and sum to one, and the
/// density value at `x` is `grid.scale() * theta[bin_index(x)]`.
#[derive(Debug, Clone)]
pub struct ThetaArray {
    pub grid: GridSpec,
    pub theta: Vec<f64>,
    pub normalized: bool,
}

impl ThetaArray {
    pub fn new(grid: GridSpec, theta: Vec<f64>, normalized: bool) -> Self {
        debug_assert_eq!(grid.cells(), theta.len());
        ThetaArray {
            grid,
            theta,
            normalized,
        }
    }

    /// Density value at `x` under the step representation.
    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        let idx = self.grid.bin_index(x)?;
        Ok(self.grid.scale() * self.theta[self.grid.flat(&idx)])
    }
}

/// Cell averages `b_j = integral of f over I_j` by tensor midpoint
/// quadrature with `resolution` nodes per axis per cell.
///
/// For integrable `f` the output sums to (approximately) `integral f`, and
/// binning a monotone function yields a monotone array.
pub fn bin_average<F: Fn(&[f64]) -> f64>(
    f: F,
    grid: &GridSpec,
    resolution: usize,
) -> Result<ThetaArray> {
    if resolution == 0 {
        return Err(Error::InvalidArgument(
            "quadrature resolution must be at least 1".into(),
        ));
    }
    let d = grid.dims();
    let cell_volume: f64 = grid.bins().iter().map(|&j| 1.0 / j as f64).product();
    let node_weight = cell_volume / (resolution as f64).powi(d as i32);
    let mut theta = vec![0.0f64; grid.cells()];
    let quad = GridSpec::new(&vec![resolution; d]).expect("resolution >= 1");
    let mut x = vec![0.0f64; d];
    grid.for_each(|cell| {
        let mut acc = 0.0;
        quad.for_each(|node| {
            for k in 0..d {
                let width = 1.0 / grid.bins()[k] as f64;
                x[k] = (cell[k] as f64) * width
                    + (node[k] as f64 + 0.5) / resolution as f64 * width;
            }
            acc += f(&x);
        });
        theta[grid.flat(cell)] = acc * node_weight;
    });
    Ok(ThetaArray::new(grid.clone(), theta, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::densities;
    use crate::isotonic::is_monotone;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand::Rng as _;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn make_grid_examples() {
        let g = GridSpec::new(&[2, 3]).unwrap();
        assert_eq!(g.cells(), 6);
        assert_eq!(g.strides(), &[3, 1]);
        let g = GridSpec::new(&[1]).unwrap();
        assert_eq!(g.cells(), 1);
        // §5 choice at n=500: 10 bins per axis.
        let g = GridSpec::new(&[10, 10]).unwrap();
        assert_eq!(g.cells(), 100);
        assert!(GridSpec::new(&[0, 2]).is_err());
        assert!(GridSpec::new(&[]).is_err());
    }

    #[test]
    fn bin_index_examples() {
        let g = GridSpec::new(&[10, 10]).unwrap();
        assert_eq!(g.bin_index(&[0.5, 0.5]).unwrap(), vec![4, 4]); // 1-based (5,5)
        assert_eq!(g.bin_index(&[0.0, 0.0]).unwrap(), vec![0, 0]);
        assert_eq!(g.bin_index(&[0.51, 0.23]).unwrap(), vec![5, 2]); // 1-based (6,3)
        assert!(g.bin_index(&[1.2, 0.5]).is_err());
        assert!(g.bin_index(&[-0.1, 0.5]).is_err());
    }

    #[test]
    fn bin_index_boundary_cases() {
        let g = GridSpec::new(&[4]).unwrap();
        // x = m/J lies in the cell whose upper face it is (half-open cells).
        assert_eq!(g.bin_index(&[0.25]).unwrap(), vec![0]);
        assert_eq!(g.bin_index(&[0.5]).unwrap(), vec![1]);
        assert_eq!(g.bin_index(&[1.0]).unwrap(), vec![3]);
        assert_eq!(g.bin_index(&[0.0]).unwrap(), vec![0]);
    }

    #[test]
    fn flat_multi_bijection() {
        for bins in [vec![2, 3], vec![5], vec![2, 2, 3], vec![4, 1, 2]] {
            let g = GridSpec::new(&bins).unwrap();
            for f in 0..g.cells() {
                assert_eq!(g.flat(&g.multi(f)), f);
            }
        }
    }

    proptest! {
        #[test]
        fn partition_property(seed in 0u64..1000) {
            // bin_index returns a cell whose half-open bounds contain the point.
            let g = GridSpec::new(&[3, 7]).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                let idx = g.bin_index(&x).unwrap();
                for k in 0..2 {
                    let j = idx[k] as f64;
                    let jk = g.bins()[k] as f64;
                    let lo = j / jk;
                    let hi = (j + 1.0) / jk;
                    if idx[k] == 0 {
                        prop_assert!(x[k] >= 0.0 && x[k] <= hi);
                    } else {
                        prop_assert!(x[k] > lo && x[k] <= hi);
                    }
                }
            }
        }
    }

    #[test]
    fn count_bins_examples() {
        let g = GridSpec::new(&[2, 2]).unwrap();
        let data = vec![vec![0.1, 0.1], vec![0.9, 0.9]];
        let c = count_bins(&data, &g).unwrap();
        assert_eq!(c.counts, vec![1, 0, 0, 1]);
        assert_eq!(c.n, 2);

        let empty = count_bins(&[], &g).unwrap();
        assert_eq!(empty.counts, vec![0; 4]);
        assert_eq!(empty.n, 0);

        let bad = count_bins(&[vec![0.5, 0.5], vec![1.5, 0.0]], &g);
        match bad {
            Err(Error::OutOfDomain { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected out-of-domain error, got {other:?}"),
        }
    }

    #[test]
    fn count_bins_uniform_within_binomial_bands() {
        let g = GridSpec::new(&[4, 4]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let data: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let c = count_bins(&data, &g).unwrap();
        assert_eq!(c.counts.iter().sum::<u64>(), 1000);
        // Binomial(1000, 1/16): mean 62.5, sd ~ 7.65.
        let sd = (1000.0f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
        for &nj in &c.counts {
            assert!((nj as f64 - 62.5).abs() < 5.0 * sd, "count {nj} out of band");
        }
    }

    #[test]
    fn bin_average_uniform() {
        let g = GridSpec::new(&[3, 5]).unwrap();
        let b = bin_average(|_| 1.0, &g, 4).unwrap();
        for &v in &b.theta {
            assert!((v - 1.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bin_average_g1_corner_cell() {
        // integral of 9(1-x)^2(1-y)^2 over [0,1/2]^2 = (7/8)^2.
        let g = GridSpec::new(&[2, 2]).unwrap();
        let b = bin_average(densities::g1, &g, 256).unwrap();
        assert!((b.theta[0] - 0.765625).abs() < 1e-5, "got {}", b.theta[0]);
    }

    #[test]
    fn bin_average_of_monotone_densities_is_monotone_and_sums_to_one() {
        let g = GridSpec::new(&[5, 5]).unwrap();
        for f in [
            densities::g1 as fn(&[f64]) -> f64,
            densities::g2,
            densities::g3,
            densities::g4,
        ] {
            let b = bin_average(f, &g, 16).unwrap();
            assert!(is_monotone(&b));
            let s: f64 = b.theta.iter().sum();
            assert!((s - 1.0).abs() < 1e-3, "sum {s}");
        }
    }

    #[test]
    fn lemma_bin_average_contracts_toward_step_functions() {
        // For a step function h on the grid and any integrable s,
        // ||s_J - h||_p <= ||s - h||_p (p = 1, 2), up to quadrature error.
        let g = GridSpec::new(&[3, 3]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..20 {
            let h: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
            let (a, b, c) = (rng.gen::<f64>(), rng.gen::<f64>(), 2.0 * rng.gen::<f64>());
            let s = move |x: &[f64]| a + b * x[0] + c * (3.0 * x[1]).sin();
            let s_j = bin_average(s, &g, 32).unwrap();
            for p in [1.0f64, 2.0] {
                // Norms on the step side: per-cell |value difference|^p * volume;
                // density scale for s_J values is scale * theta.
                let scale = g.scale();
                let vol = 1.0 / scale;
                let lhs: f64 = (0..9)
                    .map(|j| (scale * s_j.theta[j] - h[j]).abs().powf(p) * vol)
                    .sum::<f64>()
                    .powf(1.0 / p);
                // ||s - h||_p by quadrature.
                let mut rhs_acc = 0.0f64;
                let quad = GridSpec::new(&[48, 48]).unwrap();
                quad.for_each(|node| {
                    let x = quad.cell_center(node);
                    let cell = g.bin_index(&x).unwrap();
                    let diff = s(&x) - h[g.flat(&cell)];
                    rhs_acc += diff.abs().powf(p) / (48.0 * 48.0);
                });
                let rhs = rhs_acc.powf(1.0 / p);
                assert!(lhs <= rhs + 1e-3, "p={p}: {lhs} > {rhs}");
            }
        }
    }
}
