//! Conjugate Dirichlet posterior over step heights.
//!
//! The prior `theta ~ Dir(prod J_k; alpha)` together with cell counts `N`
//! gives the posterior `Dir(prod J_k; alpha + N)`. Sampling uses the Gamma
//! representation `V_j ~ Gamma(alpha_j + N_j, 1)`, `theta_j = V_j / sum V_l`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{BinnedCounts, GridSpec, ThetaArray};

/// Concentration array of an (unrestricted) Dirichlet law over step heights.
#[derive(Debug, Clone)]
pub struct DirichletParams {
    pub grid: GridSpec,
    pub conc: Vec<f64>,
}

impl DirichletParams {
    pub fn new(grid: GridSpec, conc: Vec<f64>) -> Result<Self> {
        if conc.len() != grid.cells() {
            return Err(Error::GridMismatch(
                "concentration length does not match cell count".into(),
            ));
        }
        if conc.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(
                "concentration entries must be positive".into(),
            ));
        }
        Ok(DirichletParams { grid, conc })
    }

    /// The flat prior `alpha_j = a` on every cell.
    pub fn flat(grid: GridSpec, a: f64) -> Result<Self> {
        let cells = grid.cells();
        Self::new(grid, vec![a; cells])
    }
}

/// Conjugate update: `conc_j = alpha_j + N_j`.
pub fn posterior_params(prior: &DirichletParams, counts: &BinnedCounts) -> Result<DirichletParams> {
    if prior.grid != counts.grid {
        return Err(Error::GridMismatch(
            "prior and counts use different grids".into(),
        ));
    }
    let conc = prior
        .conc
        .iter()
        .zip(&counts.counts)
        .map(|(&a, &n)| a + n as f64)
        .collect();
    DirichletParams::new(prior.grid.clone(), conc)
}

/// One draw from `Dir(conc)` via the Gamma representation. The small-shape
/// regime is handled correctly by the underlying Gamma sampler.
pub fn sample_theta<R: Rng>(params: &DirichletParams, rng: &mut R) -> ThetaArray {
    if params.conc.len() == 1 {
        return ThetaArray::new(params.grid.clone(), vec![1.0], true);
    }
    let mut v: Vec<f64> = params
        .conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    ThetaArray::new(params.grid.clone(), v, true)
}

fn ln_multivariate_beta(conc: &[f64]) -> f64 {
    let sum: f64 = conc.iter().sum();
    conc.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(sum)
}

/// Log marginal likelihood of the binned data given the grid:
/// `log m(D|J) = n * sum_k log J_k + log B(alpha + N) - log B(alpha)`.
///
/// The `n * sum log J_k` factor is the density scale of the step
/// representation; the Beta-function ratio is the Dirichlet-multinomial
/// evidence. Computed entirely in log-Gamma to avoid overflow.
pub fn log_marginal_given_j(prior: &DirichletParams, counts: &BinnedCounts) -> Result<f64> {
    if prior.grid != counts.grid {
        return Err(Error::GridMismatch(
            "prior and counts use different grids".into(),
        ));
    }
    let post = posterior_params(prior, counts)?;
    let log_scale: f64 = prior
        .grid
        .bins()
        .iter()
        .map(|&j| (j as f64).ln())
        .sum::<f64>()
        * counts.n as f64;
    Ok(log_scale + ln_multivariate_beta(&post.conc) - ln_multivariate_beta(&prior.conc))
}

/// Posterior distribution over candidate cubic grids `J in j_range`, with
/// prior weights `pi(J)` and a flat per-cell concentration `alpha_rule(J)`.
///
/// Weights are `pi(J) * m(D|J)` normalized by log-sum-exp.
pub fn posterior_over_j(
    data: &[Vec<f64>],
    dims: usize,
    prior_on_j: &dyn Fn(usize) -> f64,
    alpha_rule: &dyn Fn(usize) -> f64,
    j_range: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if j_range.is_empty() {
        return Err(Error::InvalidArgument("J range must be non-empty".into()));
    }
    let mut log_weights = Vec::with_capacity(j_range.len());
    for &j in j_range {
        let w = prior_on_j(j);
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "prior weight for J={j} must be positive and finite"
            )));
        }
        let grid = GridSpec::cubic(dims, j)?;
        let counts = crate::grid::count_bins(data, &grid)?;
        let prior = DirichletParams::flat(grid, alpha_rule(j))?;
        log_weights.push(w.ln() + log_marginal_given_j(&prior, &counts)?);
    }
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::WeightUnderflow);
    }
    let total: f64 = log_weights.iter().map(|&lw| (lw - max).exp()).sum();
    Ok(j_range
        .iter()
        .zip(&log_weights)
        .map(|(&j, &lw)| (j, (lw - max).exp() / total))
        .collect())
}

/// Default prior on J for the adaptive test: `pi(J) proportional to
/// exp(-J^d log J)`.
pub fn default_prior_on_j(dims: usize) -> impl Fn(usize) -> f64 {
    move |j: usize| {
        let jf = j as f64;
        (-jf.powi(dims as i32) * jf.ln()).exp()
    }
}

/// Default truncation for the adaptive test's J range:
/// `J_max = ceil((n / log n)^(1/(d+1))) + 2`.
pub fn default_j_max(n: usize, dims: usize) -> usize {
    let nf = n as f64;
    let base = (nf / nf.ln().max(1.0)).powf(1.0 / (dims as f64 + 1.0));
    base.ceil() as usize + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::count_bins;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn counts_from(grid: &GridSpec, counts: Vec<u64>) -> BinnedCounts {
        let n = counts.iter().sum();
        BinnedCounts {
            grid: grid.clone(),
            counts,
            n,
        }
    }

    #[test]
    fn update_examples() {
        let grid = GridSpec::new(&[4]).unwrap();
        let prior = DirichletParams::flat(grid.clone(), 1.0).unwrap();
        let counts = counts_from(&grid, vec![3, 0, 2, 5]);
        let post = posterior_params(&prior, &counts).unwrap();
        assert_eq!(post.conc, vec![4.0, 1.0, 3.0, 6.0]);

        let empty = counts_from(&grid, vec![0, 0, 0, 0]);
        let post = posterior_params(&prior, &empty).unwrap();
        assert_eq!(post.conc, prior.conc);

        let other = GridSpec::new(&[2, 2]).unwrap();
        let bad = counts_from(&other, vec![1, 0, 0, 0]);
        assert!(posterior_params(&prior, &bad).is_err());
    }

    #[test]
    fn update_sums_to_n_plus_cells() {
        let grid = GridSpec::new(&[10, 10]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let data: Vec<Vec<f64>> = (0..500)
            .map(|_| crate::harness::densities::sample_g1(&mut rng))
            .collect();
        let counts = count_bins(&data, &grid).unwrap();
        let prior = DirichletParams::flat(grid, 1.0).unwrap();
        let post = posterior_params(&prior, &counts).unwrap();
        let total: f64 = post.conc.iter().sum();
        assert!((total - 600.0).abs() < 1e-9);
    }

    #[test]
    fn sample_theta_single_cell() {
        let grid = GridSpec::new(&[1]).unwrap();
        let params = DirichletParams::flat(grid, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(sample_theta(&params, &mut rng).theta, vec![1.0]);
        }
    }

    #[test]
    fn sample_theta_means() {
        let grid = GridSpec::new(&[2]).unwrap();
        let params = DirichletParams::new(grid.clone(), vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut mean = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            mean += sample_theta(&params, &mut rng).theta[0];
        }
        mean /= draws as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");

        let grid = GridSpec::new(&[4]).unwrap();
        let params = DirichletParams::new(grid, vec![4.0, 1.0, 3.0, 6.0]).unwrap();
        let mut means = [0.0f64; 4];
        for _ in 0..draws {
            let t = sample_theta(&params, &mut rng);
            for (m, v) in means.iter_mut().zip(&t.theta) {
                *m += v;
            }
        }
        for (k, m) in means.iter().enumerate() {
            let expect = params.conc[k] / 14.0;
            assert!((m / draws as f64 - expect).abs() < 0.005);
        }
    }

    #[test]
    fn sample_theta_exchangeable_under_relabeling() {
        // Equal concentrations: every cell has matching mean and variance.
        let grid = GridSpec::new(&[5]).unwrap();
        let params = DirichletParams::flat(grid, 2.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let draws = 50_000;
        let mut m = [0.0f64; 5];
        let mut m2 = [0.0f64; 5];
        for _ in 0..draws {
            let t = sample_theta(&params, &mut rng);
            for k in 0..5 {
                m[k] += t.theta[k];
                m2[k] += t.theta[k] * t.theta[k];
            }
        }
        for k in 0..5 {
            let mean = m[k] / draws as f64;
            let var = m2[k] / draws as f64 - mean * mean;
            assert!((mean - 0.2).abs() < 0.005);
            // Dirichlet variance: a(A-a)/(A^2(A+1)) with a=2, A=10.
            let expect = 2.0 * 8.0 / (100.0 * 11.0);
            assert!((var - expect).abs() < 0.002);
        }
    }

    #[test]
    fn log_marginal_examples() {
        let grid = GridSpec::new(&[3]).unwrap();
        let prior = DirichletParams::flat(grid.clone(), 1.0).unwrap();
        let empty = counts_from(&grid, vec![0, 0, 0]);
        assert!(log_marginal_given_j(&prior, &empty).unwrap().abs() < 1e-12);

        // d=1, J=1: density is identically 1, so m = 1 for any data.
        let one = GridSpec::new(&[1]).unwrap();
        let prior1 = DirichletParams::flat(one.clone(), 1.0).unwrap();
        let c = counts_from(&one, vec![17]);
        assert!(log_marginal_given_j(&prior1, &c).unwrap().abs() < 1e-10);

        // d=1, J=2, alpha=(1,1), one point per cell: m = 4 * B(2,2) / B(1,1) = 2/3.
        let two = GridSpec::new(&[2]).unwrap();
        let prior2 = DirichletParams::flat(two.clone(), 1.0).unwrap();
        let c = counts_from(&two, vec![1, 1]);
        let lm = log_marginal_given_j(&prior2, &c).unwrap();
        assert!((lm - (2.0f64 / 3.0).ln()).abs() < 1e-10, "log m = {lm}");
    }

    #[test]
    fn sequential_update_identity() {
        // log m(alpha, N1+N2) - log m(alpha, N1) == log m(alpha+N1, N2).
        let grid = GridSpec::new(&[2, 3]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..20 {
            use rand::Rng;
            let alpha: Vec<f64> = (0..6).map(|_| 0.2 + rng.gen::<f64>() * 3.0).collect();
            let n1: Vec<u64> = (0..6).map(|_| rng.gen_range(0..7)).collect();
            let n2: Vec<u64> = (0..6).map(|_| rng.gen_range(0..7)).collect();
            let prior = DirichletParams::new(grid.clone(), alpha.clone()).unwrap();
            let c1 = counts_from(&grid, n1.clone());
            let c12 = counts_from(
                &grid,
                n1.iter().zip(&n2).map(|(a, b)| a + b).collect::<Vec<_>>(),
            );
            let c2 = counts_from(&grid, n2);
            let mid = posterior_params(&prior, &c1).unwrap();
            let lhs = log_marginal_given_j(&prior, &c12).unwrap()
                - log_marginal_given_j(&prior, &c1).unwrap();
            let rhs = log_marginal_given_j(&mid, &c2).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn posterior_over_j_behaviors() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        use rand::Rng;
        let data: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen::<f64>()]).collect();

        // Single J: point mass.
        let w = posterior_over_j(&data, 1, &|_| 1.0, &|_| 1.0, &[3]).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].1 - 1.0).abs() < 1e-12);

        // Uniform data with the default penalizing prior: mode at small J.
        let range: Vec<usize> = (1..=10).collect();
        let w = posterior_over_j(&data, 1, &default_prior_on_j(1), &|_| 1.0, &range).unwrap();
        let mode = w
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        assert!(mode <= 2, "mode at J={mode}");

        // Equal priors: posterior odds equal the marginal likelihood ratio.
        let w = posterior_over_j(&data, 1, &|_| 1.0, &|_| 1.0, &[2, 5]).unwrap();
        let grid2 = GridSpec::new(&[2]).unwrap();
        let grid5 = GridSpec::new(&[5]).unwrap();
        let lm2 = log_marginal_given_j(
            &DirichletParams::flat(grid2.clone(), 1.0).unwrap(),
            &count_bins(&data, &grid2).unwrap(),
        )
        .unwrap();
        let lm5 = log_marginal_given_j(
            &DirichletParams::flat(grid5.clone(), 1.0).unwrap(),
            &count_bins(&data, &grid5).unwrap(),
        )
        .unwrap();
        let odds = w[0].1 / w[1].1;
        assert!((odds.ln() - (lm2 - lm5)).abs() < 1e-9);
    }

    #[test]
    fn seed_determinism() {
        let grid = GridSpec::new(&[3, 3]).unwrap();
        let params = DirichletParams::flat(grid, 0.5).unwrap();
        let a = sample_theta(&params, &mut ChaCha12Rng::seed_from_u64(77));
        let b = sample_theta(&params, &mut ChaCha12Rng::seed_from_u64(77));
        assert_eq!(a.theta, b.theta);
    }
}
