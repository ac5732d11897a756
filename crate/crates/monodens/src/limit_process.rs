//! Monte Carlo simulator for the limiting Gaussian-process functionals that
//! determine the asymptotic coverage of immersion credible intervals.
//!
//! The limit is driven by two independent centered Gaussian fields H1, H2 on
//! pairs `(u, v)` of nonnegative d-vectors, with covariance
//! `prod_k (u_k /\ u'_k + v_k /\ v'_k)`. Expanding the product over axis
//! subsets shows H is a sum of `2^d` independent d-dimensional Brownian
//! sheets, one per choice of `u`-coordinates; that is the construction used
//! here. The drifted field
//!
//! `U(u,v) = sqrt(g0(x0)) (H1+H2)(u,v) / prod(u_k+v_k)
//!         + sum_{m in M} d^m g0(x0)/prod(m_k+1)!
//!           * prod_k (v_k^{m_k+1} - (-u_k)^{m_k+1}) / (u_k+v_k)`
//!
//! is evaluated on a truncated lattice, and the conditional probabilities
//! `Z^{(1)} = P(inf_u sup_v U <= 0 | H1)` (min-max map),
//! `Z^{(2)} = P(sup_v inf_u U <= 0 | H1)` (max-min map), and
//! `Z^{(3)}` from the half-sum of the two functionals (average map) are
//! estimated by nested Monte Carlo. Their distributions give the one-sided
//! coverages and the recalibration quantile pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::immersion::MapKind;

/// The `(u, v)` optimization lattice uses strictly positive coordinates
/// `{1/res, 2/res, ..., c}` per axis: the denominator `prod (u_k + v_k)`
/// vanishes when an axis has `u_k = v_k = 0`, and restricting to a positive
/// product lattice both avoids those nodes and preserves the exact minimax
/// inequality `sup_v inf_u <= inf_u sup_v` (which fails on a non-product
/// node set). U extends continuously to the zero faces, so the functional
/// values converge to the continuum ones as the resolution grows.
const PAIR_LIMIT: usize = 64_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitParams {
    /// `g0(x0)`, the density value at the target point.
    pub g0_at_x0: f64,
    /// `d^m g0(x0)` for every m in `M = { m : sum m_k/eta_k = 1 }`.
    pub derivs: Vec<(Vec<usize>, f64)>,
    /// Per-axis smoothness orders `eta_k`.
    pub eta: Vec<usize>,
    /// Lattice truncation radius: `u, v` range over `[0, c]^d`.
    pub lattice_c: f64,
    /// Lattice points per unit length.
    pub lattice_res: usize,
    pub outer_draws: usize,
    pub inner_draws: usize,
}

/// Multi-indices `m >= 0` with `sum_k m_k / eta_k = 1` (so `m_k <= eta_k`).
pub fn enumerate_m(eta: &[usize]) -> Vec<Vec<usize>> {
    fn lcm(a: usize, b: usize) -> usize {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        a / gcd(a, b) * b
    }
    let l = eta.iter().fold(1, |acc, &e| lcm(acc, e));
    let mut out = Vec::new();
    let mut m = vec![0usize; eta.len()];
    loop {
        let total: usize = m.iter().zip(eta).map(|(&mk, &ek)| mk * (l / ek)).sum();
        if total == l {
            out.push(m.clone());
        }
        let mut k = eta.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            m[k] += 1;
            if m[k] <= eta[k] {
                break;
            }
            m[k] = 0;
        }
    }
}

impl LimitParams {
    /// The canonical normalization used for quantile tables: `g0(x0) = 1`
    /// and every derivative in `M` equal to -1.
    pub fn standard(eta: &[usize]) -> Result<Self> {
        let derivs = enumerate_m(eta).into_iter().map(|m| (m, -1.0)).collect();
        let p = LimitParams {
            g0_at_x0: 1.0,
            derivs,
            eta: eta.to_vec(),
            lattice_c: 4.0,
            lattice_res: 16,
            outer_draws: 2000,
            inner_draws: 500,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dims(&self) -> usize {
        self.eta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.is_empty() || self.eta.iter().any(|&e| e == 0) {
            return Err(Error::InvalidArgument(
                "eta must be non-empty with positive entries".into(),
            ));
        }
        if !(self.g0_at_x0 > 0.0) {
            return Err(Error::InvalidArgument("g0(x0) must be positive".into()));
        }
        if !(self.lattice_c > 0.0) || self.lattice_res < 4 {
            return Err(Error::InvalidArgument(
                "need lattice_c > 0 and lattice_res >= 4".into(),
            ));
        }
        let mut required = enumerate_m(&self.eta);
        required.sort();
        let mut given: Vec<Vec<usize>> = self.derivs.iter().map(|(m, _)| m.clone()).collect();
        given.sort();
        if required != given {
            return Err(Error::InvalidArgument(format!(
                "derivs must cover exactly M = {required:?}"
            )));
        }
        for (m, val) in &self.derivs {
            // Pure derivatives point downhill for a nonincreasing density.
            if m.iter().filter(|&&mk| mk > 0).count() == 1 && !(*val < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "pure derivative for m = {m:?} must be negative, got {val}"
                )));
            }
        }
        Ok(())
    }

    fn side(&self) -> usize {
        (self.lattice_c * self.lattice_res as f64).round() as usize + 1
    }
}

/// One realization of H, stored as its `2^d` independent Brownian-sheet
/// components; component `a` (a bitmask over axes) is a sheet in the
/// coordinates `(u_k for k in a, v_k for k not in a)`.
pub struct HField {
    pub sheets: Vec<Vec<f64>>,
    pub side: usize,
    pub dims: usize,
}

impl HField {
    /// Field value at lattice indices `(u_idx, v_idx)`.
    pub fn value(&self, u_idx: &[usize], v_idx: &[usize]) -> f64 {
        let d = self.dims;
        let mut total = 0.0;
        for (a, sheet) in self.sheets.iter().enumerate() {
            let mut flat = 0usize;
            for k in 0..d {
                let i = if a >> k & 1 == 1 { u_idx[k] } else { v_idx[k] };
                flat = flat * self.side + i;
            }
            total += sheet[flat];
        }
        total
    }
}

/// One standard Brownian sheet on the lattice `{0, 1/res, ..., c}^d`:
/// i.i.d. N(0, (1/res)^d) cell increments, prefix-summed along every axis.
fn brownian_sheet(side: usize, dims: usize, step: f64, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let cells = side.pow(dims as u32);
    let sd = step.powi(dims as i32).sqrt();
    let mut w = vec![0.0f64; cells];
    // Zero on every lower face; increments elsewhere.
    let mut idx = vec![0usize; dims];
    for flat in 0..cells {
        if idx.iter().all(|&i| i > 0) {
            let z: f64 = StandardNormal.sample(rng);
            w[flat] = sd * z;
        }
        for k in (0..dims).rev() {
            idx[k] += 1;
            if idx[k] < side {
                break;
            }
            idx[k] = 0;
        }
    }
    // Cumulative sums along each axis turn increments into sheet values.
    for k in 0..dims {
        let stride = side.pow((dims - 1 - k) as u32);
        let mut idx = vec![0usize; dims];
        for flat in 0..cells {
            if idx[k] > 0 {
                w[flat] += w[flat - stride];
            }
            for a in (0..dims).rev() {
                idx[a] += 1;
                if idx[a] < side {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
    w
}

/// Draw one H field on the truncated lattice.
pub fn simulate_h(params: &LimitParams, rng: &mut ChaCha12Rng) -> HField {
    let d = params.dims();
    let side = params.side();
    let step = 1.0 / params.lattice_res as f64;
    let sheets = (0..1usize << d)
        .map(|_| brownian_sheet(side, d, step, rng))
        .collect();
    HField {
        sheets,
        side,
        dims: d,
    }
}

/// `(m_k + 1)!`-scaled drift coefficients for the given params.
fn drift_coefs(params: &LimitParams) -> Vec<(Vec<usize>, f64)> {
    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }
    params
        .derivs
        .iter()
        .map(|(m, dv)| {
            let denom: f64 = m.iter().map(|&mk| factorial(mk + 1)).product();
            (m.clone(), dv / denom)
        })
        .collect()
}

/// Closed-form drift of U at arbitrary `(u, v)` with `u_k + v_k > 0`:
/// `sum_{m in M} d^m g0(x0)/prod(m_k+1)!
///  * prod_k (v_k^{m_k+1} - (-u_k)^{m_k+1}) / (u_k + v_k)`.
pub fn drift_closed_form(params: &LimitParams, u: &[f64], v: &[f64]) -> f64 {
    let mut dr = 0.0;
    for (m, c) in drift_coefs(params) {
        let mut prod = c;
        for k in 0..params.dims() {
            let e = (m[k] + 1) as i32;
            prod *= (v[k].powi(e) - (-u[k]).powi(e)) / (u[k] + v[k]);
        }
        dr += prod;
    }
    dr
}

/// Precomputed tables for evaluating U and its lattice functionals:
/// per-sheet partial flat indices, the closed-form drift, and the inverse
/// denominator, over the positive `(u, v)` product lattice.
pub struct UEvaluator {
    nodes: usize,
    /// `pu[a][u_flat]`: contribution of the u-coordinates to sheet `a`'s
    /// flat index (and `pv` likewise for v).
    pu: Vec<Vec<usize>>,
    pv: Vec<Vec<usize>>,
    drift: Vec<f64>,
    invd: Vec<f64>,
    sqrt_g0: f64,
}

impl UEvaluator {
    pub fn new(params: &LimitParams) -> Result<Self> {
        params.validate()?;
        let d = params.dims();
        let side = params.side();
        let pts = side - 1; // positive coordinates 1/res ... c
        let nodes = pts.pow(d as u32);
        if nodes.saturating_mul(nodes) > PAIR_LIMIT {
            return Err(Error::LatticeTooLarge {
                nodes: nodes * nodes,
            });
        }
        let step = 1.0 / params.lattice_res as f64;
        let coord = |i: usize| (i + 1) as f64 * step;

        // digits[flat][k] in 0..pts; sheet index per axis is digits + 1.
        let mut pu = vec![vec![0usize; nodes]; 1 << d];
        let mut pv = vec![vec![0usize; nodes]; 1 << d];
        let mut digits = vec![vec![0usize; d]; nodes];
        {
            let mut idx = vec![0usize; d];
            for flat in 0..nodes {
                digits[flat].copy_from_slice(&idx);
                for k in (0..d).rev() {
                    idx[k] += 1;
                    if idx[k] < pts {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        for a in 0..1usize << d {
            for flat in 0..nodes {
                let (mut fu, mut fv) = (0usize, 0usize);
                for k in 0..d {
                    let stride = side.pow((d - 1 - k) as u32);
                    if a >> k & 1 == 1 {
                        fu += (digits[flat][k] + 1) * stride;
                    } else {
                        fv += (digits[flat][k] + 1) * stride;
                    }
                }
                pu[a][flat] = fu;
                pv[a][flat] = fv;
            }
        }

        let coefs = drift_coefs(params);
        let mut drift = vec![0.0f64; nodes * nodes];
        let mut invd = vec![0.0f64; nodes * nodes];
        for uf in 0..nodes {
            for vf in 0..nodes {
                let p = uf * nodes + vf;
                let mut den = 1.0;
                for k in 0..d {
                    den *= coord(digits[uf][k]) + coord(digits[vf][k]);
                }
                invd[p] = 1.0 / den;
                let mut dr = 0.0;
                for (m, c) in &coefs {
                    let mut prod = *c;
                    for k in 0..d {
                        let (u, v) = (coord(digits[uf][k]), coord(digits[vf][k]));
                        let e = (m[k] + 1) as i32;
                        prod *= (v.powi(e) - (-u).powi(e)) / (u + v);
                    }
                    dr += prod;
                }
                drift[p] = dr;
            }
        }

        Ok(UEvaluator {
            nodes,
            pu,
            pv,
            drift,
            invd,
            sqrt_g0: params.g0_at_x0.sqrt(),
        })
    }

    /// Drift table value at lattice pair `(u_flat, v_flat)`.
    pub fn drift_at(&self, u_flat: usize, v_flat: usize) -> f64 {
        self.drift[u_flat * self.nodes + v_flat]
    }

    /// Number of lattice points per side of the `(u, v)` pair grid.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn combine(&self, h1: &HField, h2: &HField) -> Vec<Vec<f64>> {
        h1.sheets
            .iter()
            .zip(&h2.sheets)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect()
    }

    /// U at a single valid node given the combined (H1+H2) sheets.
    fn u_at(&self, combined: &[Vec<f64>], uf: usize, vf: usize) -> f64 {
        let p = uf * self.nodes + vf;
        let mut h = 0.0;
        for a in 0..combined.len() {
            h += combined[a][self.pu[a][uf] + self.pv[a][vf]];
        }
        self.sqrt_g0 * h * self.invd[p] + self.drift[p]
    }

    /// Full U field over all `(u, v)` lattice pairs; intended for
    /// diagnostics and tests, not the hot path.
    pub fn evaluate_u(&self, h1: &HField, h2: &HField) -> Vec<f64> {
        let combined = self.combine(h1, h2);
        let mut out = vec![0.0; self.nodes * self.nodes];
        for uf in 0..self.nodes {
            for vf in 0..self.nodes {
                out[uf * self.nodes + vf] = self.u_at(&combined, uf, vf);
            }
        }
        out
    }

    /// `(inf_u sup_v U, sup_v inf_u U)` over the lattice, in one pass over
    /// all pairs.
    pub fn functionals(&self, h1: &HField, h2: &HField, drift_offset: f64) -> (f64, f64) {
        let combined = self.combine(h1, h2);
        let n = self.nodes;
        let mut colmin = vec![f64::INFINITY; n];
        let mut infsup = f64::INFINITY;
        let sg = self.sqrt_g0;
        for uf in 0..n {
            // Hoist the u-side sheet offsets out of the inner loop.
            let pu: Vec<usize> = (0..combined.len()).map(|a| self.pu[a][uf]).collect();
            let row = uf * n;
            let mut rowmax = f64::NEG_INFINITY;
            for vf in 0..n {
                let mut h = 0.0;
                for a in 0..combined.len() {
                    h += combined[a][pu[a] + self.pv[a][vf]];
                }
                let u = sg * h * self.invd[row + vf] + self.drift[row + vf] + drift_offset;
                if u > rowmax {
                    rowmax = u;
                }
                if u < colmin[vf] {
                    colmin[vf] = u;
                }
            }
            if rowmax < infsup {
                infsup = rowmax;
            }
        }
        let supinf = colmin.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        (infsup, supinf)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `(Z^{(1)}, Z^{(2)}, Z^{(3)})` for a fixed outer field `h1`: the fractions
/// of `inner_draws` fresh H2 fields for which the inf-sup, sup-inf, and
/// half-sum functionals of U fall at or below zero. `drift_offset` shifts
/// the drift uniformly (diagnostics).
pub fn zb_sample(
    eval: &UEvaluator,
    h1: &HField,
    params: &LimitParams,
    seed: u64,
    inner_stream_base: u64,
    drift_offset: f64,
) -> (f64, f64, f64) {
    let inner = params.inner_draws;
    let (mut c1, mut c2, mut c3) = (0usize, 0usize, 0usize);
    for j in 0..inner {
        let mut rng = stream_rng(seed, inner_stream_base + j as u64);
        let h2 = simulate_h(params, &mut rng);
        let (infsup, supinf) = eval.functionals(h1, &h2, drift_offset);
        c1 += usize::from(infsup <= 0.0);
        c2 += usize::from(supinf <= 0.0);
        c3 += usize::from(0.5 * (infsup + supinf) <= 0.0);
    }
    (
        c1 as f64 / inner as f64,
        c2 as f64 / inner as f64,
        c3 as f64 / inner as f64,
    )
}

/// Sorted samples of `Z^{(l)}`, `l = 1, 2, 3`, over independent outer draws.
#[derive(Debug, Clone)]
pub struct ZbDistribution {
    pub params: LimitParams,
    pub seed: u64,
    /// `samples[l-1]` sorted ascending.
    pub samples: [Vec<f64>; 3],
}

/// Simulate the full nested Monte Carlo. Deterministic given `(params, seed)`;
/// outer draws run in parallel with disjoint generator streams.
pub fn zb_distribution(params: &LimitParams, seed: u64) -> Result<ZbDistribution> {
    let eval = UEvaluator::new(params)?;
    if params.outer_draws == 0 || params.inner_draws == 0 {
        return Err(Error::InvalidArgument(
            "outer and inner draw counts must be positive".into(),
        ));
    }
    let stride = params.inner_draws as u64 + 1;
    let triples: Vec<(f64, f64, f64)> = (0..params.outer_draws)
        .into_par_iter()
        .map(|i| {
            let base = i as u64 * stride;
            let mut rng = stream_rng(seed, base);
            let h1 = simulate_h(params, &mut rng);
            zb_sample(&eval, &h1, params, seed, base + 1, 0.0)
        })
        .collect();
    let mut samples = [Vec::new(), Vec::new(), Vec::new()];
    for (z1, z2, z3) in triples {
        samples[0].push(z1);
        samples[1].push(z2);
        samples[2].push(z3);
    }
    for s in &mut samples {
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    Ok(ZbDistribution {
        params: params.clone(),
        seed,
        samples,
    })
}

impl ZbDistribution {
    /// Empirical CDF of `Z^{(l)}` at `z`.
    pub fn cdf(&self, l: usize, z: f64) -> f64 {
        let s = &self.samples[l - 1];
        let count = s.partition_point(|&x| x <= z);
        count as f64 / s.len() as f64
    }

    /// Empirical `p`-quantile of `Z^{(l)}` (order-statistic definition).
    pub fn quantile(&self, l: usize, p: f64) -> f64 {
        let s = &self.samples[l - 1];
        let rank = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
        s[rank - 1]
    }

    /// Asymptotic coverage of the raw one-sided `level` interval for map `l`:
    /// `P(Z^{(l)} <= level)`.
    pub fn one_sided_coverage(&self, l: usize, level: f64) -> f64 {
        self.cdf(l, level)
    }

    /// Recalibrated quantile pair for a two-sided `target` interval under the
    /// average map, symmetrized about 1/2 (the distribution of `Z^{(3)}` is
    /// symmetric).
    pub fn recalibration_pair(&self, target: f64) -> (f64, f64) {
        let hi = self.quantile(3, (1.0 + target) / 2.0);
        let lo = self.quantile(3, (1.0 - target) / 2.0);
        let s = 0.5 * (hi + 1.0 - lo);
        (s, 1.0 - s)
    }

    pub fn to_table_entry(&self, l: usize) -> ZbTableEntry {
        let map_kind = match l {
            1 => MapKind::MinMax,
            2 => MapKind::MaxMin,
            _ => MapKind::Average,
        };
        let levels: Vec<f64> = (1..=999).map(|i| i as f64 / 1000.0).collect();
        let quantiles = levels.iter().map(|&p| self.quantile(l, p)).collect();
        ZbTableEntry {
            eta: self.params.eta.clone(),
            map_kind,
            levels,
            quantiles,
            outer_draws: self.params.outer_draws,
            inner_draws: self.params.inner_draws,
            lattice_c: self.params.lattice_c,
            lattice_res: self.params.lattice_res,
            seed: self.seed,
        }
    }
}

/// One persisted quantile grid for a `(eta, map_kind)` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZbTableEntry {
    pub eta: Vec<usize>,
    pub map_kind: MapKind,
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub outer_draws: usize,
    pub inner_draws: usize,
    pub lattice_c: f64,
    pub lattice_res: usize,
    pub seed: u64,
}

impl ZbTableEntry {
    /// Quantile at level `p` by step interpolation on the stored grid.
    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.levels.partition_point(|&l| l < p);
        let i = i.min(self.levels.len() - 1);
        self.quantiles[i]
    }

    /// CDF at `z` by inverting the monotone quantile grid.
    pub fn cdf(&self, z: f64) -> f64 {
        let i = self.quantiles.partition_point(|&q| q <= z);
        if i == 0 {
            0.0
        } else {
            self.levels[i - 1]
        }
    }
}

/// Collection of persisted Z distributions, keyed by `(eta, map_kind)`.
#[derive(Debug, Clone, Default)]
pub struct ZbTable {
    pub entries: Vec<ZbTableEntry>,
}

impl ZbTable {
    pub fn from_distribution(dist: &ZbDistribution) -> Self {
        ZbTable {
            entries: (1..=3).map(|l| dist.to_table_entry(l)).collect(),
        }
    }

    pub fn get(&self, eta: &[usize], map_kind: MapKind) -> Option<&ZbTableEntry> {
        self.entries
            .iter()
            .find(|e| e.eta == eta && e.map_kind == map_kind)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "eta,map,level,quantile,outer_draws,inner_draws,lattice_c,lattice_res,seed"
        )?;
        for e in &self.entries {
            let eta = e
                .eta
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("x");
            let map = match e.map_kind {
                MapKind::MinMax => "minmax",
                MapKind::MaxMin => "maxmin",
                MapKind::Average => "average",
            };
            for (lv, q) in e.levels.iter().zip(&e.quantiles) {
                writeln!(
                    f,
                    "{eta},{map},{lv},{q},{},{},{},{},{}",
                    e.outer_draws, e.inner_draws, e.lattice_c, e.lattice_res, e.seed
                )?;
            }
        }
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut table = ZbTable::default();
        for rec in rdr.records() {
            let rec = rec?;
            let parse_err =
                |field: &str| Error::InvalidArgument(format!("bad {field} in zb table row"));
            let eta: Vec<usize> = rec[0]
                .split('x')
                .map(|s| s.parse().map_err(|_| parse_err("eta")))
                .collect::<Result<_>>()?;
            let map_kind: MapKind = rec[1].parse()?;
            let level: f64 = rec[2].parse().map_err(|_| parse_err("level"))?;
            let quantile: f64 = rec[3].parse().map_err(|_| parse_err("quantile"))?;
            let entry = match table
                .entries
                .iter_mut()
                .find(|e| e.eta == eta && e.map_kind == map_kind)
            {
                Some(e) => e,
                None => {
                    table.entries.push(ZbTableEntry {
                        eta,
                        map_kind,
                        levels: Vec::new(),
                        quantiles: Vec::new(),
                        outer_draws: rec[4].parse().map_err(|_| parse_err("outer_draws"))?,
                        inner_draws: rec[5].parse().map_err(|_| parse_err("inner_draws"))?,
                        lattice_c: rec[6].parse().map_err(|_| parse_err("lattice_c"))?,
                        lattice_res: rec[7].parse().map_err(|_| parse_err("lattice_res"))?,
                        seed: rec[8].parse().map_err(|_| parse_err("seed"))?,
                    });
                    table.entries.last_mut().unwrap()
                }
            };
            entry.levels.push(level);
            entry.quantiles.push(quantile);
        }
        Ok(table)
    }
}
