//! Benchmark densities on [0,1]^2 and exact samplers.
//!
//! g1 and g2 are products of Beta marginals and are sampled by inverse
//! transform; g3 and g4 are products of logistic-decay factors and are
//! sampled by rejection from the uniform with the envelope constant equal to
//! the supremum of the density (4, attained at the origin). The non-monotone
//! alternative `4xy` is used for test power studies.

use rand::Rng;

use crate::error::{Error, Result};

/// `g1(x,y) = 9(1-x)^2(1-y)^2`; each coordinate is Beta(1,3).
pub fn g1(x: &[f64]) -> f64 {
    9.0 * (1.0 - x[0]).powi(2) * (1.0 - x[1]).powi(2)
}

/// `g2(x,y) = 2.25 sqrt((1-x)(1-y))`; each coordinate is Beta(1,3/2).
pub fn g2(x: &[f64]) -> f64 {
    2.25 * ((1.0 - x[0]) * (1.0 - x[1])).sqrt()
}

/// `g3(x,y) = 4 / ((1+e^{12(x-1/2)})(1+e^{12(y-1/2)}))`.
pub fn g3(x: &[f64]) -> f64 {
    logistic_product(x, 12.0)
}

/// `g4(x,y) = 4 / ((1+e^{4(x-1/2)})(1+e^{4(y-1/2)}))`.
pub fn g4(x: &[f64]) -> f64 {
    logistic_product(x, 4.0)
}

fn logistic_product(x: &[f64], slope: f64) -> f64 {
    4.0 / ((1.0 + (slope * (x[0] - 0.5)).exp()) * (1.0 + (slope * (x[1] - 0.5)).exp()))
}

/// Non-monotone density `4xy` (increasing in both coordinates).
pub fn g_4xy(x: &[f64]) -> f64 {
    4.0 * x[0] * x[1]
}

/// One draw from g1: per-axis inverse CDF of Beta(1,3), `x = 1-(1-u)^{1/3}`.
pub fn sample_g1<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..2)
        .map(|_| 1.0 - (1.0 - rng.gen::<f64>()).powf(1.0 / 3.0))
        .collect()
}

/// One draw from g2: per-axis inverse CDF of Beta(1,3/2), `x = 1-(1-u)^{2/3}`.
pub fn sample_g2<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..2)
        .map(|_| 1.0 - (1.0 - rng.gen::<f64>()).powf(2.0 / 3.0))
        .collect()
}

/// One draw from `4xy`: per-axis inverse CDF of density `2x`, `x = sqrt(u)`.
pub fn sample_4xy<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..2).map(|_| rng.gen::<f64>().sqrt()).collect()
}

const REJECTION_ENVELOPE: f64 = 4.0;
const MIN_ACCEPT_RATIO: f64 = 0.01;

fn sample_rejection<R: Rng>(density: fn(&[f64]) -> f64, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while out.len() < n {
        let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
        proposals += 1;
        if rng.gen::<f64>() * REJECTION_ENVELOPE <= density(&x) {
            out.push(x);
        }
        // Acceptance ratio for a normalized density is 1/envelope = 25%;
        // far lower indicates a misconfigured density.
        if proposals >= 1000 && (out.len() as f64) < MIN_ACCEPT_RATIO * proposals as f64 {
            return Err(Error::RejectionTooInefficient(
                out.len() as f64 / proposals as f64,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityName {
    G1,
    G2,
    G3,
    G4,
    FourXy,
}

impl std::str::FromStr for DensityName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g1" => Ok(DensityName::G1),
            "g2" => Ok(DensityName::G2),
            "g3" => Ok(DensityName::G3),
            "g4" => Ok(DensityName::G4),
            "4xy" => Ok(DensityName::FourXy),
            other => Err(Error::InvalidArgument(format!("unknown density {other}"))),
        }
    }
}

impl std::fmt::Display for DensityName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DensityName::G1 => "g1",
            DensityName::G2 => "g2",
            DensityName::G3 => "g3",
            DensityName::G4 => "g4",
            DensityName::FourXy => "4xy",
        };
        write!(f, "{s}")
    }
}

impl DensityName {
    pub fn density(self) -> fn(&[f64]) -> f64 {
        match self {
            DensityName::G1 => g1,
            DensityName::G2 => g2,
            DensityName::G3 => g3,
            DensityName::G4 => g4,
            DensityName::FourXy => g_4xy,
        }
    }

    pub fn is_monotone(self) -> bool {
        !matches!(self, DensityName::FourXy)
    }
}

/// `n` i.i.d. points from the named density.
pub fn sample_density<R: Rng>(name: DensityName, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    match name {
        DensityName::G1 => Ok((0..n).map(|_| sample_g1(rng)).collect()),
        DensityName::G2 => Ok((0..n).map(|_| sample_g2(rng)).collect()),
        DensityName::G3 => sample_rejection(g3, n, rng),
        DensityName::G4 => sample_rejection(g4, n, rng),
        DensityName::FourXy => Ok((0..n).map(|_| sample_4xy(rng)).collect()),
    }
}
