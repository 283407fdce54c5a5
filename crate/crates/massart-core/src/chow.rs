//! Label-moment (Chow) tensors in the Hermite basis, matrix flattening,
//! thresholded SVD subspace extraction, and band-conditioned projection.
//!
//! The pipeline implemented here turns labeled Gaussian samples into a small
//! subspace that provably contains useful directions: condition on a band of
//! the current direction w, project the data onto w-perp, estimate the
//! order-m tensors E[y h_alpha(x)] for m <= k, flatten each tensor to a
//! d x d^{m-1} matrix, and keep left singular vectors above a threshold.
//! Whenever some unit v and degree <= k polynomial p correlate with the
//! labels (E[y p(v.x)] >= tau), the union subspace captures a tau/(4 sqrt(k))
//! fraction of v.

use crate::error::{Error, Result};
use crate::gauss::hermite_row;
use crate::instance::{dot, LabeledDataset};
use crate::multi_index::{enumerate, MultiIndex};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Largest admitted tensor order.
pub const CHOW_ORDER_CAP: u32 = 6;
/// Largest admitted number of distinct tensor entries C(d+m-1, m).
pub const CHOW_ENTRY_CAP: usize = 200_000;
/// Largest admitted flattened column count d^{m-1}.
pub const FLATTEN_COLUMN_CAP: usize = 2_000_000;

/// Order-m label-moment tensor with symmetric storage: one value per
/// multi-index of total degree m, in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChowTensor {
    pub d: usize,
    pub m: u32,
    pub indices: Vec<MultiIndex>,
    pub values: Vec<f64>,
}

fn multiplicity(alpha: &MultiIndex) -> f64 {
    let mut v = libm::lgamma(alpha.degree() as f64 + 1.0);
    for &e in &alpha.0 {
        v -= libm::lgamma(e as f64 + 1.0);
    }
    libm::exp(v)
}

impl ChowTensor {
    /// Frobenius norm of the full symmetric tensor (entries counted with
    /// their permutation multiplicity), matching the flattened matrix norm.
    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for (alpha, v) in self.indices.iter().zip(&self.values) {
            s += multiplicity(alpha) * v * v;
        }
        libm::sqrt(s)
    }

    fn position_map(&self) -> BTreeMap<&[u32], usize> {
        self.indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.0.as_slice(), i))
            .collect()
    }
}

fn entry_count(d: usize, m: u32) -> usize {
    // C(d + m - 1, m)
    let mut n: u128 = 1;
    for i in 1..=m as u128 {
        n = n * (d as u128 - 1 + i) / i;
    }
    n as usize
}

/// Sample-mean estimate of the order-m tensor: T_alpha = mean(y h_alpha(x))
/// with h_alpha a product of orthonormal univariate Hermite values.
pub fn estimate_chow(data: &LabeledDataset, m: u32) -> Result<ChowTensor> {
    if m > CHOW_ORDER_CAP {
        return Err(Error::DegreeTooLarge { requested: m as usize, cap: CHOW_ORDER_CAP as usize });
    }
    let d = data.d;
    let n_entries = entry_count(d, m);
    if n_entries > CHOW_ENTRY_CAP {
        return Err(Error::SizeLimit { what: "chow tensor entries", requested: n_entries, cap: CHOW_ENTRY_CAP });
    }
    let indices: Vec<MultiIndex> = enumerate(d, m).into_iter().filter(|a| a.degree() == m).collect();
    debug_assert_eq!(indices.len(), n_entries);
    // per-entry list of (coordinate, hermite degree) for the nonzero factors
    let factors: Vec<Vec<(usize, usize)>> = indices
        .iter()
        .map(|a| {
            a.0.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (i, e as usize))
                .collect()
        })
        .collect();
    let mut sums = vec![0.0f64; n_entries];
    let mut h = vec![Vec::new(); d];
    for i in 0..data.len() {
        let x = data.x(i);
        for (j, slot) in h.iter_mut().enumerate() {
            *slot = hermite_row(m, x[j]);
        }
        let y = data.ys[i] as f64;
        for (e, fac) in factors.iter().enumerate() {
            let mut prod = y;
            for &(coord, deg) in fac {
                prod *= h[coord][deg];
            }
            sums[e] += prod;
        }
    }
    let n = data.len() as f64;
    for s in sums.iter_mut() {
        *s /= n;
    }
    Ok(ChowTensor { d, m, indices, values: sums })
}

/// Flatten the symmetric order-m tensor to a d x d^{m-1} matrix;
/// M[i][(i2..im)] = T_{e_i + multiset(i2..im)}. Frobenius-preserving.
pub fn flatten(tensor: &ChowTensor) -> Result<DMatrix<f64>> {
    let d = tensor.d;
    let m = tensor.m as usize;
    assert!(m >= 1, "cannot flatten an order-0 tensor");
    let cols = (d as u128).pow(tensor.m - 1);
    if cols > FLATTEN_COLUMN_CAP as u128 {
        return Err(Error::SizeLimit { what: "flattened columns", requested: cols as usize, cap: FLATTEN_COLUMN_CAP });
    }
    let cols = cols as usize;
    let pos = tensor.position_map();
    let mut out = DMatrix::zeros(d, cols);
    let mut alpha = vec![0u32; d];
    for col in 0..cols {
        alpha.iter_mut().for_each(|e| *e = 0);
        let mut rem = col;
        for _ in 0..m - 1 {
            alpha[rem % d] += 1;
            rem /= d;
        }
        for i in 0..d {
            alpha[i] += 1;
            out[(i, col)] = tensor.values[pos[alpha.as_slice()]];
            alpha[i] -= 1;
        }
    }
    Ok(out)
}

/// Orthonormal basis, possibly empty, stored as matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub basis: DMatrix<f64>,
}

impl Subspace {
    pub fn empty(d: usize) -> Self {
        Self { basis: DMatrix::zeros(d, 0) }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Norm of the orthogonal projection of v onto the subspace.
    pub fn projection_norm(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        (self.basis.transpose() * v).norm()
    }

    /// max |(B'B - I)_{ij}|, the orthonormality defect.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Left singular vectors of M with singular value >= sigma.
pub fn top_singular_subspace(m: &DMatrix<f64>, sigma: f64) -> Subspace {
    assert!(sigma > 0.0, "threshold must be positive");
    let d = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= sigma)
        .collect();
    keep.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let mut basis = DMatrix::zeros(d, keep.len());
    for (out_col, &i) in keep.iter().enumerate() {
        basis.set_column(out_col, &u.column(i));
    }
    Subspace { basis }
}

/// Deterministic orthonormal completion of a unit vector w: the d-1 columns
/// of the Householder reflection sending w to -sign(w_1) e_1, skipping the
/// image of e_1 itself.
pub fn householder_complement(w: &[f64]) -> DMatrix<f64> {
    let d = w.len();
    let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u: Vec<f64> = w.to_vec();
    u[0] += s; // u = w + sign(w_1) e_1, never degenerate for unit w
    let uu = dot(&u, &u);
    let mut basis = DMatrix::zeros(d, d - 1);
    for j in 1..d {
        let scale = 2.0 * u[j] / uu;
        for i in 0..d {
            let e = if i == j { 1.0 } else { 0.0 };
            basis[(i, j - 1)] = e - scale * u[i];
        }
    }
    basis
}

/// Restrict to the band t1 <= w.x <= t2 and re-express the surviving points
/// in the Householder basis of w-perp (labels unchanged). Also returns the
/// basis used, as d x (d-1) columns.
pub fn band_project(
    data: &LabeledDataset,
    w: &[f64],
    t1: f64,
    t2: f64,
) -> Result<(LabeledDataset, DMatrix<f64>)> {
    assert!(t1 < t2, "band endpoints must satisfy t1 < t2");
    assert!(data.d >= 2, "band projection needs at least two dimensions");
    let basis = householder_complement(w);
    let d = data.d;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..data.len() {
        let x = data.x(i);
        let z = dot(w, x);
        if z < t1 || z > t2 {
            continue;
        }
        for j in 0..d - 1 {
            let mut c = 0.0;
            for (bi, xi) in basis.column(j).iter().zip(x) {
                c += bi * xi;
            }
            xs.push(c);
        }
        ys.push(data.ys[i]);
    }
    if ys.is_empty() {
        return Err(Error::EmptyBand);
    }
    Ok((LabeledDataset { d: d - 1, xs, ys }, basis))
}

/// Configuration for the band-grid subspace search.
#[derive(Debug, Clone, PartialEq)]
pub struct ChowConfig {
    /// Band width; bands are [i rho, (i+1) rho].
    pub rho: f64,
    /// Largest tensor order.
    pub k: u32,
    /// Singular value threshold; None means max(0.05, eps^3).
    pub sigma: Option<f64>,
    /// Band grid extent multiplier: |i rho| <= c_extent sqrt(log 1/eps).
    pub c_extent: f64,
}

impl Default for ChowConfig {
    fn default() -> Self {
        Self { rho: 0.5, k: 3, sigma: None, c_extent: 4.0 }
    }
}

/// Union of thresholded singular subspaces over the band grid, re-embedded
/// into w-perp inside R^d and re-orthonormalized. Empty bands are skipped.
pub fn candidate_subspace(
    data: &LabeledDataset,
    w: &[f64],
    eps: f64,
    cfg: &ChowConfig,
) -> Result<Subspace> {
    let d = data.d;
    if d < 2 {
        return Ok(Subspace::empty(d));
    }
    let sigma = cfg.sigma.unwrap_or_else(|| (eps * eps * eps).max(0.05));
    let l = libm::ceil(cfg.c_extent * libm::sqrt(libm::log(1.0 / eps)) / cfg.rho) as i64;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    for i in -l..l {
        let (t1, t2) = (i as f64 * cfg.rho, (i + 1) as f64 * cfg.rho);
        let (banded, basis) = match band_project(data, w, t1, t2) {
            Ok(pair) => pair,
            Err(Error::EmptyBand) => continue,
            Err(e) => return Err(e),
        };
        for m in 1..=cfg.k {
            let tensor = estimate_chow(&banded, m)?;
            let flat = flatten(&tensor)?;
            let sub = top_singular_subspace(&flat, sigma);
            for col in sub.basis.column_iter() {
                columns.push(&basis * DVector::from_column_slice(col.as_slice()));
            }
        }
    }
    if columns.is_empty() {
        return Ok(Subspace::empty(d));
    }
    let mut stacked = DMatrix::zeros(d, columns.len());
    for (j, c) in columns.iter().enumerate() {
        stacked.set_column(j, c);
    }
    // orthonormalize the union; rank cutoff well above float noise
    let svd = stacked.svd(true, false);
    let u = svd.u.as_ref().unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-8)
        .collect();
    let mut basis = DMatrix::zeros(d, keep.len());
    for (out_col, &i) in keep.iter().enumerate() {
        basis.set_column(out_col, &u.column(i));
    }
    Ok(Subspace { basis })
}
