//! Certificate oracle: given labeled data and a candidate affine score
//! ell(x) = w.x - t, search for a band [r1, r2] and a squared polynomial q^2
//! such that the empirical mean of ell(x) y 1{band} q^2(x) is significantly
//! negative. Such a T = 1{band} q^2 witnesses that ell is far from the Bayes
//! optimal halfspace and supplies a descent direction to the convex learner.
//!
//! The search reduces to symmetric eigenproblems: over {A >= 0, ||A||_F <= 1}
//! the linear objective tr(A M) is minimized at the outer product of the
//! minimum eigenvector, so no general SDP solver is involved.
//!
//! Also hosts the analytic reference construction: the truncated-exponential
//! polynomial shift whose squared mass ratio across a threshold certifies
//! the same separation phenomenon in closed form.

use crate::error::{Error, Result};
use crate::gauss::{gaussian_expectation_piecewise, taylor_exp};
use crate::instance::{dot, splitmix64, stream_rng, Halfspace, LabeledDataset};
use crate::multi_index::{basis_size, MonomialBasis};
use crate::poly::UniPoly;
use crate::walk::StopFlag;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "std")]
use rayon::prelude::*;

/// Largest moment-vector length C(d+k, k) the oracle will materialize.
pub const MOMENT_DIM_CAP: usize = 3000;
/// Permissive degree guard for the analytic shift construction.
pub const SHIFT_DEGREE_CAP: usize = 8192;

/// Affine score ell(x) = w.x - t. Unlike `Halfspace`, w may be any vector
/// (zero w gives a constant hypothesis).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineFunc {
    pub w: Vec<f64>,
    pub t: f64,
}

impl AffineFunc {
    pub fn new(w: Vec<f64>, t: f64) -> Self {
        Self { w, t }
    }

    /// Constant score ell(x) = value in dimension d.
    pub fn constant(d: usize, value: f64) -> Self {
        Self { w: vec![0.0; d], t: -value }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) - self.t
    }
}

impl From<&Halfspace> for AffineFunc {
    fn from(h: &Halfspace) -> Self {
        Self { w: h.w.clone(), t: h.t }
    }
}

/// Monomial basis for the moment vector m(x), guarded by the size cap.
pub fn moment_basis(d: usize, k: u32) -> Result<MonomialBasis> {
    let size = basis_size(d, k);
    if size > MOMENT_DIM_CAP {
        return Err(Error::SizeLimit {
            what: "moment vector",
            requested: size,
            cap: MOMENT_DIM_CAP,
        });
    }
    Ok(MonomialBasis::new(d, k))
}

/// M = (1/N) sum m(x_i) m(x_i)^T 1{r1 <= ell(x_i) <= r2} y_i ell(x_i).
/// Unbounded band ends are represented by +-infinity.
pub fn build_m(
    data: &LabeledDataset,
    ell: &AffineFunc,
    band: (f64, f64),
    k: u32,
) -> Result<DMatrix<f64>> {
    assert!(!data.is_empty());
    let basis = moment_basis(data.d, k)?;
    let mdim = basis.len();
    let mut m = DMatrix::zeros(mdim, mdim);
    let mut row = vec![0.0; mdim];
    for i in 0..data.len() {
        let x = data.x(i);
        let l = ell.eval(x);
        if l < band.0 || l > band.1 {
            continue;
        }
        basis.eval_into(x, &mut row);
        let wgt = f64::from(data.ys[i]) * l;
        for p in 0..mdim {
            let mp = wgt * row[p];
            for q in p..mdim {
                m[(p, q)] += mp * row[q];
            }
        }
    }
    let n = data.len() as f64;
    for p in 0..mdim {
        for q in p..mdim {
            let v = m[(p, q)] / n;
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
    Ok(m)
}

/// Minimum eigenvalue and a unit eigenvector, the exact optimum of
/// min tr(A M) over {A >= 0, ||A||_F <= 1} when the eigenvalue is negative.
/// The eigenvector sign is fixed so its largest-magnitude entry is positive.
pub fn min_eig_certificate(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut arg = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[arg] {
            arg = i;
        }
    }
    let lambda = eig.eigenvalues[arg];
    let mut a = eig.eigenvectors.column(arg).into_owned();
    a /= a.norm();
    // the QR iteration can leave the eigenvector off by ~1e-2 relative on
    // clustered spectra even though the eigenvalue itself is backward
    // stable; two inverse-iteration steps against a slightly sub-lambda
    // shift pull the vector back into the bottom eigenspace
    let n = m.nrows();
    let shift = lambda - 1e-8 * m.norm().max(1e-300);
    let shifted = m - DMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    for _ in 0..2 {
        if let Some(x) = lu.solve(&a) {
            let norm = x.norm();
            if norm.is_finite() && norm > 0.0 {
                a = x / norm;
            }
        }
    }
    let pivot = a.iter().enumerate().fold(0, |acc, (i, v)| {
        if v.abs() > a[acc].abs() {
            i
        } else {
            acc
        }
    });
    if a[pivot] < 0.0 {
        a.neg_mut();
    }
    // report the Rayleigh quotient of the vector we hand back: downstream
    // checks re-evaluate a^T M a, so value and vector must agree exactly
    let ray = (&a.transpose() * m * &a)[(0, 0)];
    debug_assert!((ray - lambda).abs() <= 1e-6 * m.norm().max(1.0));
    (ray, a)
}

/// A found certificate: T(x) = 1{r1 <= ell(x) <= r2} q(x)^2 with unit
/// coefficient vector. `value` is the holdout estimate of E[ell y T] before
/// L4 normalization (a^T M_holdout a); dividing q_coeffs by
/// `l4_norm_estimate` rescales the certifying polynomial to unit L4 norm.
/// None in r1/r2 encodes an unbounded end.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Certificate {
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub k: u32,
    pub q_coeffs: Vec<f64>,
    pub value: f64,
    pub l4_norm_estimate: f64,
}

impl Certificate {
    pub fn band_contains(&self, l: f64) -> bool {
        self.r1.map_or(true, |r| l >= r) && self.r2.map_or(true, |r| l <= r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Found(Certificate),
    NotFound,
}

impl OracleOutcome {
    pub fn found(&self) -> Option<&Certificate> {
        match self {
            OracleOutcome::Found(c) => Some(c),
            OracleOutcome::NotFound => None,
        }
    }
}

/// Oracle knobs. The band grid has points -grid_extent..grid_extent spaced
/// grid_step; bands are half-open interval unions of grid cells plus the
/// unbounded band. A candidate is accepted only when its holdout mean beats
/// both lambda_thresh and se_mult standard errors, with at least
/// min_band_count holdout points in the band.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateConfig {
    pub grid_step: f64,
    pub grid_extent: f64,
    pub se_mult: f64,
    pub min_band_count: usize,
    pub l4_mc_draws: usize,
    /// Return the first band whose value clears -2 lambda_thresh instead of
    /// scanning all bands (sequential only; off by default because full
    /// holdout-validated selection is markedly more robust).
    pub lazy_short_circuit: bool,
    pub seed: u64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.5,
            grid_extent: 4.0,
            se_mult: 3.0,
            min_band_count: 8,
            l4_mc_draws: 100_000,
            lazy_short_circuit: false,
            seed: 0,
        }
    }
}

struct Candidate {
    band_idx: usize,
    lo_cell: usize,
    hi_cell: usize,
    cap: u32,
    coeffs: Vec<f64>,
    /// Selection key: holdout mean of y ell q^2 divided by the holdout L4
    /// norm of q on the band (scale-free across candidates).
    mean: f64,
    /// Unnormalized holdout mean a^T M_holdout a.
    raw_value: f64,
}

fn triangle_index(p: usize, q: usize, mdim: usize) -> usize {
    p * mdim - p * (p + 1) / 2 + q
}

/// Scan bands and polynomial degrees for the most negative holdout-validated
/// certificate. On success the certificate's q has unit coefficient norm and
/// its L4 norm on the band is estimated by Monte Carlo.
pub fn certificate_oracle(
    data: &LabeledDataset,
    ell: &AffineFunc,
    k: u32,
    lambda_thresh: f64,
    cfg: &CertificateConfig,
    stop: StopFlag,
) -> Result<OracleOutcome> {
    assert!(cfg.grid_step > 0.0 && cfg.grid_extent > 0.0);
    assert!(lambda_thresh >= 0.0);
    let d = data.d;
    let basis = moment_basis(d, k)?;
    let mdim = basis.len();
    let offs = basis.degree_offsets();
    let n = data.len();
    let n_train = n * 2 / 3;
    let n_hold = n - n_train;
    assert!(n_train >= 1 && n_hold >= cfg.min_band_count, "dataset too small");

    let n_pts = libm::round(2.0 * cfg.grid_extent / cfg.grid_step) as usize + 1;
    let grid: Vec<f64> = (0..n_pts)
        .map(|j| -cfg.grid_extent + j as f64 * cfg.grid_step)
        .collect();
    let n_cells = n_pts + 1;
    // cell c holds ell values in (grid[c-1], grid[c]]; c = 0 is the low tail
    let cell_of = |l: f64| grid.partition_point(|&g| g < l);

    // train pass: per-cell upper-triangular accumulators of y ell m m^T,
    // then prefix sums so any cell range is one subtraction
    let tri_len = mdim * (mdim + 1) / 2;
    let mut cells: Vec<Vec<f64>> = vec![vec![0.0; tri_len]; n_cells];
    {
        let mut row = vec![0.0; mdim];
        for i in 0..n_train {
            let x = data.x(i);
            let l = ell.eval(x);
            basis.eval_into(x, &mut row);
            let wgt = f64::from(data.ys[i]) * l;
            let acc = &mut cells[cell_of(l)];
            let mut idx = 0;
            for p in 0..mdim {
                let mp = wgt * row[p];
                for &rq in row.iter().skip(p) {
                    acc[idx] += mp * rq;
                    idx += 1;
                }
            }
        }
    }
    for c in 1..n_cells {
        let (done, rest) = cells.split_at_mut(c);
        let prev = &done[c - 1];
        rest[0].iter_mut().zip(prev).for_each(|(v, p)| *v += p);
    }

    // holdout pass: rows grouped by cell, basis rows stored contiguously
    let hold_cells: Vec<usize> = (n_train..n).map(|i| cell_of(ell.eval(data.x(i)))).collect();
    let mut cell_starts = vec![0usize; n_cells + 1];
    for &c in &hold_cells {
        cell_starts[c + 1] += 1;
    }
    for c in 0..n_cells {
        cell_starts[c + 1] += cell_starts[c];
    }
    let mut fill = cell_starts.clone();
    let mut hold_basis = vec![0.0; n_hold * mdim];
    let mut hold_wl = vec![0.0; n_hold];
    for (j, &c) in hold_cells.iter().enumerate() {
        let i = n_train + j;
        let x = data.x(i);
        let slot = fill[c];
        fill[c] += 1;
        basis.eval_into(x, &mut hold_basis[slot * mdim..(slot + 1) * mdim]);
        hold_wl[slot] = f64::from(data.ys[i]) * ell.eval(x);
    }

    // finite bands (grid[i], grid[j]] in lexicographic order, then the
    // unbounded band covering every cell
    let mut bands: Vec<(usize, usize)> = Vec::new();
    for i in 0..n_pts {
        for j in (i + 1)..n_pts {
            bands.push((i + 1, j));
        }
    }
    bands.push((0, n_cells - 1));

    let evaluate = |band_idx: usize| -> Option<Candidate> {
        let (lo, hi) = bands[band_idx];
        let rows = cell_starts[lo]..cell_starts[hi + 1];
        if rows.len() < cfg.min_band_count {
            return None;
        }
        let base = &cells[hi];
        let sub = (lo > 0).then(|| &cells[lo - 1]);
        let mut best: Option<Candidate> = None;
        for (cap, &mcap) in offs.iter().enumerate() {
            let mat = DMatrix::from_fn(mcap, mcap, |p, q| {
                let (p, q) = (p.min(q), p.max(q));
                let t = triangle_index(p, q, mdim);
                (base[t] - sub.map_or(0.0, |s| s[t])) / n_train as f64
            });
            let (lambda, a) = min_eig_certificate(&mat);
            if lambda >= 0.0 {
                continue;
            }
            let (mut s4, mut sv, mut svv) = (0.0, 0.0, 0.0);
            for r in rows.clone() {
                let q = dot(a.as_slice(), &hold_basis[r * mdim..r * mdim + mcap]);
                let q2 = q * q;
                s4 += q2 * q2;
                let v = hold_wl[r] * q2;
                sv += v;
                svv += v * v;
            }
            let nh = n_hold as f64;
            let l4 = libm::pow(s4 / nh, 0.25);
            if l4 < 1e-12 {
                continue;
            }
            let mean = sv / nh / l4;
            let ex2 = svv / nh / (l4 * l4);
            let se = libm::sqrt((ex2 - mean * mean).max(0.0) / nh);
            if mean > -lambda_thresh.max(cfg.se_mult * se) {
                continue;
            }
            if best.as_ref().map_or(true, |b| mean < b.mean) {
                best = Some(Candidate {
                    band_idx,
                    lo_cell: lo,
                    hi_cell: hi,
                    cap: cap as u32,
                    coeffs: a.as_slice().to_vec(),
                    mean,
                    raw_value: sv / nh,
                });
            }
        }
        best
    };

    let winner: Option<Candidate> = if cfg.lazy_short_circuit {
        let mut best: Option<Candidate> = None;
        for idx in 0..bands.len() {
            if stop() {
                return Err(Error::BudgetExceeded);
            }
            if let Some(c) = evaluate(idx) {
                let short = c.mean < -2.0 * lambda_thresh;
                if best.as_ref().map_or(true, |b| c.mean < b.mean) {
                    best = Some(c);
                }
                if short {
                    break;
                }
            }
        }
        best
    } else {
        if stop() {
            return Err(Error::BudgetExceeded);
        }
        #[cfg(feature = "std")]
        let found: Vec<Option<Candidate>> = (0..bands.len())
            .into_par_iter()
            .map(|idx| if stop() { None } else { evaluate(idx) })
            .collect();
        #[cfg(not(feature = "std"))]
        let found: Vec<Option<Candidate>> = (0..bands.len()).map(evaluate).collect();
        if stop() {
            return Err(Error::BudgetExceeded);
        }
        found.into_iter().flatten().fold(None, |acc, c| match acc {
            Some(b) if b.mean <= c.mean => Some(b),
            _ => Some(c),
        })
    };

    let Some(win) = winner else {
        return Ok(OracleOutcome::NotFound);
    };
    let r1 = (win.lo_cell > 0).then(|| grid[win.lo_cell - 1]);
    let r2 = (win.hi_cell < n_cells - 1).then(|| grid[win.hi_cell]);

    // winner-only Monte Carlo estimate of E[1{band} q^4]^(1/4)
    let mut rng = stream_rng(cfg.seed, splitmix64(win.band_idx as u64 ^ 0xccf0));
    let mcap = offs[win.cap as usize];
    let mut row = vec![0.0; mdim];
    let mut acc = 0.0;
    let mut x = vec![0.0; d];
    for _ in 0..cfg.l4_mc_draws {
        x.iter_mut()
            .for_each(|xi| *xi = rng.sample::<f64, _>(StandardNormal));
        let l = ell.eval(&x);
        if r1.map_or(false, |r| l <= r) || r2.map_or(false, |r| l > r) {
            continue;
        }
        basis.eval_into(&x, &mut row);
        let q = dot(&win.coeffs, &row[..mcap]);
        acc += q * q * q * q;
    }
    let l4_norm_estimate = libm::pow(acc / cfg.l4_mc_draws as f64, 0.25);

    Ok(OracleOutcome::Found(Certificate {
        r1,
        r2,
        k: win.cap,
        q_coeffs: win.coeffs,
        value: win.raw_value,
        l4_norm_estimate,
    }))
}

/// Truncated-exponential shift polynomial: S_k(c z) with c = |t| + sqrt(2) b
/// and k the smallest even integer >= 32 c^2, scaled so E[S_k(cz)^2] = 1
/// under the standard Gaussian. Its square concentrates mass above t:
/// shift_ratio(poly, t) >= e^{b^2}/2.
pub fn polynomial_shift(t: f64, b: f64) -> Result<(f64, UniPoly)> {
    assert!(t.abs() <= 5.0, "threshold out of range");
    assert!((1.0..=5.0).contains(&b), "shift parameter out of range");
    let c = t.abs() + core::f64::consts::SQRT_2 * b;
    let mut k = libm::ceil(32.0 * c * c) as usize;
    if k % 2 == 1 {
        k += 1;
    }
    if k > SHIFT_DEGREE_CAP {
        return Err(Error::DegreeTooLarge { requested: k, cap: SHIFT_DEGREE_CAP });
    }
    let poly = taylor_exp(k, c);
    let second_moment = gaussian_expectation_piecewise(
        &|z| {
            let v = poly.eval(z);
            v * v
        },
        &[0.0],
    );
    Ok((c, poly.scale(1.0 / libm::sqrt(second_moment))))
}

/// E[p^2 1{z >= t}] / E[p^2 1{z <= t}] under the standard Gaussian.
pub fn shift_ratio(poly: &UniPoly, t: f64) -> Result<f64> {
    assert!(poly.degree() <= SHIFT_DEGREE_CAP, "degree out of range");
    let sq = |z: f64| {
        let v = poly.eval(z);
        v * v
    };
    let above = gaussian_expectation_piecewise(&|z| if z >= t { sq(z) } else { 0.0 }, &[t]);
    let below = gaussian_expectation_piecewise(&|z| if z <= t { sq(z) } else { 0.0 }, &[t]);
    if below < 1e-300 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(above / below)
}
