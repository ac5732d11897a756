//! Immersion maps carrying unrestricted posterior draws into monotone
//! densities.
//!
//! Two families: (a) L1 projection followed by renormalization, used for
//! global inference; (b) min-max / max-min / average block maps, used for
//! pointwise inference. The block value at cell `j0` optimizes the plain
//! average of `theta` over hyperrectangles `[j1:j2]` with `j1 <= j0 <= j2`;
//! the density-scale value multiplies by `prod J_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ThetaArray};
use crate::isotonic::isotonize_l1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    MinMax,
    MaxMin,
    Average,
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MapKind::MinMax => write!(f, "min-max"),
            MapKind::MaxMin => write!(f, "max-min"),
            MapKind::Average => write!(f, "average"),
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" | "min-max" => Ok(MapKind::MinMax),
            "maxmin" | "max-min" => Ok(MapKind::MaxMin),
            "average" | "ave" => Ok(MapKind::Average),
            other => Err(Error::InvalidArgument(format!("unknown map kind {other}"))),
        }
    }
}

/// Block-map value at a single cell.
#[derive(Debug, Clone)]
pub struct BlockValue {
    pub cell: Vec<usize>,
    pub value_theta: f64,
    pub value_density: f64,
    pub map_kind: MapKind,
}

/// L1-project onto the monotone cone and renormalize:
/// `theta* = theta~ / sum(theta~)`.
///
/// For any monotone step density `g0` on the same grid the output satisfies
/// `||g* - g0||_1 <= 4 ||g - g0||_1`.
pub fn project_and_normalize(theta: &ThetaArray) -> Result<ThetaArray> {
    let fit = isotonize_l1(theta, None)?;
    let total: f64 = fit.theta.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "isotonized array sums to zero; input was not a valid density draw".into(),
        ));
    }
    let theta_star = fit.theta.iter().map(|&v| v / total).collect();
    Ok(ThetaArray::new(theta.grid.clone(), theta_star, true))
}

/// Inclusive-box prefix sums for O(2^d) block averages.
pub struct PrefixSums<'a> {
    grid: &'a GridSpec,
    sums: Vec<f64>,
}

impl<'a> PrefixSums<'a> {
    pub fn new(theta: &'a ThetaArray) -> Self {
        let grid = &theta.grid;
        let mut sums = theta.theta.clone();
        // Running sums along each axis in turn.
        for k in 0..grid.dims() {
            let stride = grid.strides()[k];
            grid.for_each(|idx| {
                if idx[k] > 0 {
                    let f = grid.flat(idx);
                    sums[f] += sums[f - stride];
                }
            });
        }
        PrefixSums { grid, sums }
    }

    /// Sum of `theta` over the inclusive box `[lo, hi]`, by
    /// inclusion-exclusion over the box corners.
    pub fn box_sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let d = self.grid.dims();
        let mut acc = 0.0;
        let mut corner = vec![0usize; d];
        'subset: for mask in 0..(1usize << d) {
            let mut sign = 1.0;
            for k in 0..d {
                if mask >> k & 1 == 1 {
                    if lo[k] == 0 {
                        continue 'subset; // empty lower slab
                    }
                    corner[k] = lo[k] - 1;
                    sign = -sign;
                } else {
                    corner[k] = hi[k];
                }
            }
            acc += sign * self.sums[self.grid.flat(&corner)];
        }
        acc
    }

    fn box_average(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let count: f64 = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| (h - l + 1) as f64)
            .product();
        self.box_sum(lo, hi) / count
    }

    /// `min over j1 <= j0` of `max over j2 >= j0` of the block average.
    pub fn minmax_at(&self, j0: &[usize]) -> f64 {
        let top: Vec<usize> = self.grid.bins().iter().map(|&b| b - 1).collect();
        let zero = vec![0usize; self.grid.dims()];
        let mut outer = f64::INFINITY;
        self.grid.for_each_in_box(&zero, j0, |j1| {
            let mut inner = f64::NEG_INFINITY;
            self.grid.for_each_in_box(j0, &top, |j2| {
                inner = inner.max(self.box_average(j1, j2));
            });
            outer = outer.min(inner);
        });
        outer
    }

    /// `max over j2 >= j0` of `min over j1 <= j0` of the block average.
    pub fn maxmin_at(&self, j0: &[usize]) -> f64 {
        let top: Vec<usize> = self.grid.bins().iter().map(|&b| b - 1).collect();
        let zero = vec![0usize; self.grid.dims()];
        let mut outer = f64::NEG_INFINITY;
        self.grid.for_each_in_box(j0, &top, |j2| {
            let mut inner = f64::INFINITY;
            self.grid.for_each_in_box(&zero, j0, |j1| {
                inner = inner.min(self.box_average(j1, j2));
            });
            outer = outer.max(inner);
        });
        outer
    }

    pub fn value_at(&self, j0: &[usize], kind: MapKind) -> f64 {
        match kind {
            MapKind::MinMax => self.minmax_at(j0),
            MapKind::MaxMin => self.maxmin_at(j0),
            MapKind::Average => 0.5 * (self.minmax_at(j0) + self.maxmin_at(j0)),
        }
    }
}

/// Block-map value of `theta` at cell `j0` (0-based multi-index).
pub fn block_value(theta: &ThetaArray, j0: &[usize], kind: MapKind) -> Result<BlockValue> {
    let grid = &theta.grid;
    if j0.len() != grid.dims() || j0.iter().zip(grid.bins()).any(|(&i, &b)| i >= b) {
        return Err(Error::InvalidArgument(format!(
            "cell index {j0:?} out of range for bins {:?}",
            grid.bins()
        )));
    }
    let prefix = PrefixSums::new(theta);
    let value_theta = prefix.value_at(j0, kind);
    Ok(BlockValue {
        cell: j0.to_vec(),
        value_theta,
        value_density: grid.scale() * value_theta,
        map_kind: kind,
    })
}

/// Apply the block map at every cell; the result lies in the monotone cone.
pub fn block_map_full(theta: &ThetaArray, kind: MapKind) -> ThetaArray {
    let grid = &theta.grid;
    let prefix = PrefixSums::new(theta);
    let mut out = vec![0.0; grid.cells()];
    grid.for_each(|j0| {
        out[grid.flat(j0)] = prefix.value_at(j0, kind);
    });
    ThetaArray::new(grid.clone(), out, false)
}
