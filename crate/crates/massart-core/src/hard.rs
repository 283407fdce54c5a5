//! Statistical-query-hard instance constructions: one-dimensional Massart
//! noise rates beta(z) whose labels decouple from the first k moments of z,
//! hidden-direction lifts of those rates to d dimensions, and the
//! (d+1)-dimensional slab construction where eta = 1/2 everywhere outside a
//! thin band yet a good halfspace still exists.
//!
//! The moment-matching feasibility problem (box constraints on beta plus k
//! linear equalities against Gaussian-weighted Hermite polynomials) is
//! solved by Dykstra's alternating projections on a trapezoid grid; claimed
//! infeasibility is cross-checked by a dual witness search.

use crate::error::{Error, Result};
use crate::gauss::{hermite_row, norm_cdf, norm_pdf};
use crate::instance::{dot, l2_norm, sign, stream_rng, LabeledDataset};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Discretization and iteration knobs for the moment-matching solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCfg {
    /// Grid size over [-Z, Z].
    pub g: usize,
    pub z: f64,
    pub max_iters: usize,
    /// Tolerance on the max equality residual.
    pub tol: f64,
}

impl Default for MomentCfg {
    fn default() -> Self {
        Self { g: 2000, z: 12.0, max_iters: 100_000, tol: 1e-9 }
    }
}

impl MomentCfg {
    fn validate(&self, k: u32) {
        assert!(self.g >= 400, "grid too coarse");
        assert!(self.z >= 10.0, "grid must span at least [-10, 10]");
        assert!(k >= 1 && k <= 10, "matched degree out of range");
    }

    fn grid(&self) -> Vec<f64> {
        let h = 2.0 * self.z / (self.g - 1) as f64;
        (0..self.g).map(|i| -self.z + i as f64 * h).collect()
    }

    /// Trapezoid weights against the Gaussian density.
    fn weights(&self, grid: &[f64]) -> Vec<f64> {
        let h = 2.0 * self.z / (self.g - 1) as f64;
        grid.iter()
            .enumerate()
            .map(|(i, &z)| {
                let end = i == 0 || i == self.g - 1;
                norm_pdf(z) * h * if end { 0.5 } else { 1.0 }
            })
            .collect()
    }
}

/// A moment-matching noise profile: beta(z_i) = values[i] on the grid, with
/// E[f(z) h_j(z) beta(z)] = 0 for j = 1..k where f(z) = sign(z - t_star).
/// Consumers extend beta to the real line by linear interpolation, 1 outside.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BetaTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub beta_lo: f64,
    pub t_star: f64,
    pub k: u32,
    pub residual: f64,
}

impl BetaTable {
    /// Noise rate at z: linear interpolation inside the grid, 1 outside.
    pub fn beta_at(&self, z: f64) -> f64 {
        let n = self.grid.len();
        if z < self.grid[0] || z > self.grid[n - 1] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g < z);
        if i == 0 {
            return self.values[0];
        }
        let (z0, z1) = (self.grid[i - 1], self.grid[i]);
        let frac = if z1 > z0 { (z - z0) / (z1 - z0) } else { 0.0 };
        self.values[i - 1] * (1.0 - frac) + self.values[i] * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentOutcome {
    Feasible(BetaTable),
    Infeasible { residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolve {
    pub outcome: MomentOutcome,
    pub iters: usize,
    pub residual_trace: Vec<f64>,
}

impl MomentSolve {
    pub fn feasible(&self) -> Option<&BetaTable> {
        match &self.outcome {
            MomentOutcome::Feasible(t) => Some(t),
            MomentOutcome::Infeasible { .. } => None,
        }
    }
}

/// Constraint rows C[j-1][i] = w_i f(z_i) h_j(z_i) for j = 1..k; the solver
/// seeks beta in [beta_lo, 1]^G with C beta = 0.
fn constraint_rows(grid: &[f64], weights: &[f64], t_star: f64, k: u32) -> DMatrix<f64> {
    let g = grid.len();
    let mut c = DMatrix::zeros(k as usize, g);
    for (i, (&z, &w)) in grid.iter().zip(weights).enumerate() {
        let f = f64::from(sign(z - t_star));
        let row = hermite_row(k, z);
        for j in 1..=k as usize {
            c[(j - 1, i)] = w * f * row[j];
        }
    }
    c
}

/// Dykstra's alternating projections between the box [beta_lo, 1]^G and the
/// affine set {C beta = 0}. The affine projection needs no correction term;
/// the box projection carries one. Starts from the box center and stops at
/// the residual tolerance, iteration cap, or a detected fixed point.
pub fn solve_moment_matching(
    t_star: f64,
    k: u32,
    beta_lo: f64,
    cfg: &MomentCfg,
) -> Result<MomentSolve> {
    assert!((0.0..1.0).contains(&beta_lo), "beta_lo must lie in [0,1)");
    cfg.validate(k);
    let grid = cfg.grid();
    let weights = cfg.weights(&grid);
    let c = constraint_rows(&grid, &weights, t_star, k);
    let cct = &c * c.transpose();
    let chol = Cholesky::new(cct).ok_or(Error::Invalid(format!(
        "degenerate constraint system at t_star = {t_star}, k = {k}"
    )))?;

    let g = grid.len();
    let mut x = DVector::from_element(g, (1.0 + beta_lo) / 2.0);
    let mut corr = DVector::zeros(g);
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut iters = 0;
    let mut residual = f64::INFINITY;
    while iters < cfg.max_iters {
        iters += 1;
        // project onto the affine set, then the corrected box clamp
        let r = &c * &x;
        let s = chol.solve(&r);
        let y = &x - c.transpose() * s;
        let shifted = &y + &corr;
        let clamped = shifted.map(|v| v.clamp(beta_lo, 1.0));
        corr = shifted - &clamped;
        x = clamped;
        let prev = residual;
        residual = (&c * &x).amax();
        trace.push(residual);
        if residual <= cfg.tol {
            break;
        }
        if (prev - residual).abs() <= 1e-14 * residual.max(1.0) {
            stall += 1;
            if stall >= 50 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    let outcome = if residual <= cfg.tol {
        MomentOutcome::Feasible(BetaTable {
            grid,
            values: x.as_slice().to_vec(),
            beta_lo,
            t_star,
            k,
            residual,
        })
    } else {
        MomentOutcome::Infeasible { residual }
    };
    Ok(MomentSolve { outcome, iters, residual_trace: trace })
}

/// max over j = 1..k of |E[y z^j] - E[y] E[z^j]| by grid quadrature, where
/// E[y g(z)] = E[f(z) beta(z) g(z)].
pub fn verify_decoupling(table: &BetaTable) -> f64 {
    let cfg = MomentCfg {
        g: table.grid.len(),
        z: table.grid.last().copied().unwrap_or(12.0),
        ..MomentCfg::default()
    };
    let weights = cfg.weights(&table.grid);
    let mut worst: f64 = 0.0;
    let ey: f64 = table
        .grid
        .iter()
        .zip(&weights)
        .zip(&table.values)
        .map(|((&z, &w), &b)| w * f64::from(sign(z - table.t_star)) * b)
        .sum();
    for j in 1..=table.k {
        let (mut eyzj, mut mzj) = (0.0, 0.0);
        for ((&z, &w), &b) in table.grid.iter().zip(&weights).zip(&table.values) {
            let zj = libm::pow(z, f64::from(j));
            mzj += w * zj;
            eyzj += w * f64::from(sign(z - table.t_star)) * b * zj;
        }
        worst = worst.max((eyzj - ey * mzj).abs());
    }
    worst
}

/// Search for a mean-zero polynomial p of degree <= k (Hermite coefficients
/// on the unit sphere, random restarts plus the coordinate axes) with
/// beta_lo E[(fp)+] > E[(fp)-]; such a p certifies infeasibility for every
/// beta in the box. Returns the Hermite coefficients and achieved margin.
pub fn dual_witness(
    t_star: f64,
    k: u32,
    beta_lo: f64,
    cfg: &MomentCfg,
    restarts: usize,
    seed: u64,
) -> Option<(Vec<f64>, f64)> {
    cfg.validate(k);
    let grid = cfg.grid();
    let weights = cfg.weights(&grid);
    // fp_basis[i][j-1] = f(z_i) h_j(z_i), weighted later
    let fp: Vec<Vec<f64>> = grid
        .iter()
        .map(|&z| {
            let f = f64::from(sign(z - t_star));
            hermite_row(k, z)[1..].iter().map(|h| f * h).collect()
        })
        .collect();
    let margin = |coef: &[f64]| -> f64 {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for (row, &w) in fp.iter().zip(&weights) {
            let v = dot(row, coef);
            if v >= 0.0 {
                pos += w * v;
            } else {
                neg -= w * v;
            }
        }
        beta_lo * pos - neg
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let push = |coef: Vec<f64>, m: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if m > best.as_ref().map_or(0.0, |b| b.1) {
            *best = Some((coef, m));
        }
    };
    for j in 0..k as usize {
        for s in [1.0, -1.0] {
            let mut coef = vec![0.0; k as usize];
            coef[j] = s;
            let m = margin(&coef);
            push(coef, m, &mut best);
        }
    }
    let mut rng = stream_rng(seed, 6);
    for _ in 0..restarts {
        let mut coef: Vec<f64> = (0..k as usize)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = l2_norm(&coef);
        if norm < 1e-12 {
            continue;
        }
        coef.iter_mut().for_each(|v| *v /= norm);
        let m = margin(&coef);
        push(coef, m, &mut best);
    }
    best.filter(|(_, m)| *m > 1e-8)
}

/// The fitted constant C solving gamma = 2^{-Ck}(1 - beta_lo) with
/// gamma = Phi(-|t_star|); reported alongside feasibility outcomes to map
/// the feasibility frontier.
pub fn frontier_constant(t_star: f64, k: u32, beta_lo: f64) -> f64 {
    let gamma = norm_cdf(-t_star.abs());
    libm::log2((1.0 - beta_lo) / gamma) / f64::from(k)
}

/// Labels follow sign(v.x - t_star) flipped with probability
/// (1 - beta(v.x))/2; the x-marginal is exactly N(0, I).
pub fn hidden_direction_sampler(
    table: &BetaTable,
    v: &[f64],
    d: usize,
    n: usize,
    seed: u64,
) -> LabeledDataset {
    assert_eq!(v.len(), d);
    assert!((l2_norm(v) - 1.0).abs() <= 1e-9, "direction must be unit");
    let mut rng = stream_rng(seed, 4);
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let start = xs.len();
        for _ in 0..d {
            xs.push(rng.sample::<f64, _>(StandardNormal));
        }
        let z = dot(v, &xs[start..]);
        let mut y = sign(z - table.t_star);
        let eta = (1.0 - table.beta_at(z)) / 2.0;
        if rng.gen::<f64>() < eta {
            y = -y;
        }
        ys.push(y);
    }
    LabeledDataset::new(d, xs, ys).expect("construction is well formed")
}

/// Moment-matching tables for a slab of thresholds [t0, t0 + zeta]: one per
/// sub-cell of width zeta/cells, each solved at t_star = -(cell center)
/// because the lifted labels follow sign(v.x + z).
#[derive(Debug, Clone, PartialEq)]
pub struct TableFamily {
    pub t0: f64,
    pub zeta: f64,
    pub tables: Vec<BetaTable>,
}

pub const FAMILY_CELLS: usize = 20;

pub fn solve_table_family(
    t0: f64,
    zeta: f64,
    k: u32,
    beta_lo: f64,
    cfg: &MomentCfg,
) -> Result<TableFamily> {
    assert!(zeta > 0.0, "slab width must be positive");
    let width = zeta / FAMILY_CELLS as f64;
    let mut tables = Vec::with_capacity(FAMILY_CELLS);
    for cell in 0..FAMILY_CELLS {
        let center = t0 + (cell as f64 + 0.5) * width;
        let solve = solve_moment_matching(-center, k, beta_lo, cfg)?;
        match solve.outcome {
            MomentOutcome::Feasible(t) => tables.push(t),
            MomentOutcome::Infeasible { residual } => {
                return Err(Error::Invalid(format!(
                    "slab cell at threshold {center} is infeasible (residual {residual:e})"
                )))
            }
        }
    }
    Ok(TableFamily { t0, zeta, tables })
}

/// (d+1)-dimensional lift: x ~ N(0, I_d), z ~ N(0,1) as the last coordinate.
/// Inside the slab z in [t0, t0+zeta] labels come from the cell's table at
/// threshold -z; outside they are fair coins, so eta = 1/2 pointwise there
/// while sign(v.x + z) stays optimal overall.
pub fn lift_high_noise(
    family: &TableFamily,
    v: &[f64],
    d: usize,
    n: usize,
    seed: u64,
) -> LabeledDataset {
    assert_eq!(v.len(), d);
    assert!((l2_norm(v) - 1.0).abs() <= 1e-9, "direction must be unit");
    let width = family.zeta / family.tables.len() as f64;
    let mut rng = stream_rng(seed, 5);
    let mut xs = Vec::with_capacity(n * (d + 1));
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let start = xs.len();
        for _ in 0..d {
            xs.push(rng.sample::<f64, _>(StandardNormal));
        }
        let z: f64 = rng.sample(StandardNormal);
        xs.push(z);
        let y = if z >= family.t0 && z <= family.t0 + family.zeta {
            let cell = (((z - family.t0) / width) as usize).min(family.tables.len() - 1);
            let table = &family.tables[cell];
            let u = dot(v, &xs[start..start + d]);
            let mut y = sign(u - table.t_star);
            if rng.gen::<f64>() < (1.0 - table.beta_at(u)) / 2.0 {
                y = -y;
            }
            y
        } else if rng.gen::<f64>() < 0.5 {
            1
        } else {
            -1
        };
        ys.push(y);
    }
    LabeledDataset::new(d + 1, xs, ys).expect("construction is well formed")
}
