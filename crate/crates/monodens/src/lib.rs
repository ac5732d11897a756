//! Bayesian estimation, testing, and pointwise uncertainty quantification
//! for multivariate monotone (coordinate-wise nonincreasing) densities on
//! the unit hypercube.
//!
//! The pipeline: bin data on an equal-width grid, place a Dirichlet prior on
//! the step heights, sample the conjugate posterior, and push the draws
//! through immersion maps (L1 projection + renormalization, or min-max /
//! max-min block averages) into the monotone cone. On top of that sit a
//! posterior monotonicity test, pointwise credible intervals with
//! asymptotic recalibration, a simulator for the limiting Gaussian-process
//! functionals that drive the recalibration, and a reproduction harness for
//! the simulation studies.

pub mod credible;
pub mod error;
pub mod grid;
pub mod harness;
pub mod immersion;
pub mod isotonic;
pub mod limit_process;
pub mod mono_test;
pub mod posterior;

pub use error::{Error, Result};
pub use grid::{bin_average, count_bins, BinnedCounts, GridSpec, ThetaArray};
pub use immersion::{
    block_map_full, block_value, project_and_normalize, BlockValue, MapKind, PrefixSums,
};
pub use isotonic::{
    brute_force_isotonic, is_monotone, isotonize_l1, isotonize_l2, l1_distance_to_cone, lp_cost,
};
pub use posterior::{posterior_params, sample_theta, DirichletParams};
