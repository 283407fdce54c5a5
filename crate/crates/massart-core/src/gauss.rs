//! Gaussian integration kernels: orthonormal Hermite polynomials, exact
//! monomial moments, Gram matrices, and Gauss quadrature rules.
//!
//! Everything here is an oracle for E_{z ~ N(0,1)}[..] or its d-dimensional
//! product extension. Two independent routes are maintained on purpose:
//! closed-form moments (double factorials, Gram matrices) and numerical
//! quadrature (Gauss-Hermite, piecewise Gauss-Legendre). Higher layers are
//! tested by agreement between the two, so neither side may be expressed in
//! terms of the other.
//!
//! Hermite polynomials are the probabilist family normalized to unit L2 norm
//! under N(0,1): h_n = He_n / sqrt(n!), E[h_m h_n] = 1{m = n}. Factorial-like
//! quantities are carried in log space.

use crate::error::{Error, Result};
use crate::multi_index::{basis_size, MonomialBasis, MultiIndex};
use crate::poly::UniPoly;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Largest admitted Hermite degree for `hermite_value`.
pub const HERMITE_DEGREE_CAP: u32 = 60;
/// Largest admitted Gauss-Hermite node count.
pub const GAUSS_HERMITE_NODE_CAP: usize = 200;
/// Largest admitted Gram matrix side.
pub const GRAM_SIZE_CAP: usize = 5000;

/// Orthonormal Hermite value h_n(z) by the stable three-term recurrence
/// h_{n+1} = (z h_n - sqrt(n) h_{n-1}) / sqrt(n+1).
pub fn hermite_value(n: u32, z: f64) -> Result<f64> {
    if n > HERMITE_DEGREE_CAP {
        return Err(Error::DegreeTooLarge { requested: n as usize, cap: HERMITE_DEGREE_CAP as usize });
    }
    Ok(hermite_row(n, z).pop().unwrap())
}

/// h_0(z)..h_n(z). Internal callers may exceed the public degree cap; the
/// recurrence itself is stable far beyond it.
pub(crate) fn hermite_row(n: u32, z: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(n as usize + 1);
    row.push(1.0);
    if n == 0 {
        return row;
    }
    row.push(z);
    for m in 1..n as usize {
        let next = (z * row[m] - libm::sqrt(m as f64) * row[m - 1]) / libm::sqrt(m as f64 + 1.0);
        row.push(next);
    }
    row
}

/// ln((2m-1)!!), with (2*0-1)!! = 1.
pub fn log_double_factorial(m: u32) -> f64 {
    let m = m as f64;
    libm::lgamma(2.0 * m + 1.0) - m * core::f64::consts::LN_2 - libm::lgamma(m + 1.0)
}

/// E_{x~N(0,I)}[x^alpha]: product of (a_i - 1)!! over even exponents, zero if
/// any exponent is odd.
pub fn gaussian_monomial_moment(alpha: &MultiIndex) -> f64 {
    let mut log_sum = 0.0;
    for &e in &alpha.0 {
        if e % 2 == 1 {
            return 0.0;
        }
        log_sum += log_double_factorial(e / 2);
    }
    libm::exp(log_sum)
}

/// Gram matrix G_{alpha beta} = E[x^{alpha+beta}] over the graded-lex
/// monomial basis of degree <= k, so that ||q||_2^2 = a' G a.
pub fn gram_matrix(d: usize, k: u32) -> Result<DMatrix<f64>> {
    let n = basis_size(d, k);
    if n > GRAM_SIZE_CAP {
        return Err(Error::SizeLimit { what: "gram matrix side", requested: n, cap: GRAM_SIZE_CAP });
    }
    let basis = MonomialBasis::new(d, k);
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let sum = MultiIndex(
                basis.indices[i]
                    .0
                    .iter()
                    .zip(&basis.indices[j].0)
                    .map(|(a, b)| a + b)
                    .collect(),
            );
            let v = gaussian_monomial_moment(&sum);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Nodes and positive weights of a quadrature rule for a fixed measure.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss quadrature from a Jacobi three-term recurrence via the eigenvalues
/// of the symmetric tridiagonal matrix; weights are Christoffel numbers
/// 1 / sum_j p_j(x)^2 with p_j orthonormal under the full measure (so the
/// total mass is carried by p_0).
fn golub_welsch(offdiag: &[f64], orthonormal_row: impl Fn(f64) -> Vec<f64>) -> QuadratureRule {
    let n = offdiag.len() + 1;
    let mut jac = DMatrix::zeros(n, n);
    for (i, &b) in offdiag.iter().enumerate() {
        jac[(i, i + 1)] = b;
        jac[(i + 1, i)] = b;
    }
    let mut nodes: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let weights = nodes
        .iter()
        .map(|&x| {
            let row = orthonormal_row(x);
            1.0 / row.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    QuadratureRule { nodes, weights }
}

/// Probabilists' Gauss-Hermite rule: exact for E_{z~N(0,1)}[p(z)] with
/// deg p <= 2n-1. Panics if n is outside 1..=200.
pub fn gauss_hermite(n: usize) -> QuadratureRule {
    assert!(n >= 1 && n <= GAUSS_HERMITE_NODE_CAP, "gauss_hermite node count {n} outside 1..=200");
    let offdiag: Vec<f64> = (1..n).map(|i| libm::sqrt(i as f64)).collect();
    let mut rule = golub_welsch(&offdiag, |x| hermite_row(n as u32 - 1, x));
    // polish each node as a root of h_n; h_n'(x) = sqrt(n) h_{n-1}(x)
    for x in rule.nodes.iter_mut() {
        for _ in 0..3 {
            let row = hermite_row(n as u32, *x);
            let deriv = libm::sqrt(n as f64) * row[n - 1];
            if deriv != 0.0 {
                *x -= row[n] / deriv;
            }
        }
    }
    // enforce the exact +- symmetry of the true roots so odd moments cancel
    for i in 0..n / 2 {
        let m = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        rule.nodes[i] = -m;
        rule.nodes[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter_mut()) {
        let row = hermite_row(n as u32 - 1, *x);
        *w = 1.0 / row.iter().map(|v| v * v).sum::<f64>();
    }
    rule
}

/// Gauss-Legendre rule on [-1, 1] with total mass 2.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let offdiag: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            i / libm::sqrt(4.0 * i * i - 1.0)
        })
        .collect();
    golub_welsch(&offdiag, |x| {
        // orthonormal Legendre under dz on [-1,1]
        let mut row = Vec::with_capacity(n);
        let mut prev = 0.0;
        let mut cur = 1.0 / libm::sqrt(2.0);
        let mut b_prev = 0.0;
        for m in 0..n {
            row.push(cur);
            let m1 = (m + 1) as f64;
            let b_cur = m1 / libm::sqrt(4.0 * m1 * m1 - 1.0);
            let next = (x * cur - b_prev * prev) / b_cur;
            prev = cur;
            cur = next;
            b_prev = b_cur;
        }
        row
    })
}

/// E_{z~N(0,1)}[p(z)] by Gauss-Hermite with degree + 4 nodes (capped at 200,
/// which still covers the degree exactly whenever deg <= 399).
pub fn gaussian_expectation_poly(p: &UniPoly) -> f64 {
    let deg = p.degree();
    let n = (deg + 4).clamp(1, GAUSS_HERMITE_NODE_CAP);
    gauss_hermite(n).integrate(|z| p.eval(z))
}

/// E_{z~N(0,1)}[f(z)] for f that is smooth between the given breakpoints
/// (indicator thresholds). The real line is truncated 12 units beyond the
/// outermost breakpoint and each smooth piece is integrated by adaptive
/// Gauss-Legendre.
pub fn gaussian_expectation_piecewise(f: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| b.is_finite()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let lo = cuts.first().copied().unwrap_or(0.0) - 12.0;
    let hi = cuts.last().copied().unwrap_or(0.0) + 12.0;
    let mut edges = vec![lo];
    edges.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    edges.push(hi);
    let rule_hi = gauss_legendre(120);
    let rule_lo = gauss_legendre(60);
    let g = |z: f64| f(z) * norm_pdf(z);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += adaptive_piece(&g, pair[0], pair[1], &rule_hi, &rule_lo, 0);
    }
    total
}

fn map_rule(rule: &QuadratureRule, a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * g(mid + half * x))
        .sum::<f64>()
        * half
}

fn adaptive_piece(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rule_hi: &QuadratureRule,
    rule_lo: &QuadratureRule,
    depth: u32,
) -> f64 {
    let coarse = map_rule(rule_lo, a, b, g);
    let fine = map_rule(rule_hi, a, b, g);
    if depth >= 12 || (fine - coarse).abs() <= 1e-12 * (1.0 + fine.abs()) {
        return fine;
    }
    let mid = 0.5 * (a + b);
    adaptive_piece(g, a, mid, rule_hi, rule_lo, depth + 1)
        + adaptive_piece(g, mid, b, rule_hi, rule_lo, depth + 1)
}

/// Degree-k Taylor truncation of the exponential, composed with cz:
/// S_k(cz) = sum_{i<=k} (cz)^i / i! in the monomial basis. Coefficients are
/// formed in log space; terms that underflow f64 are exactly zero, which is
/// harmless since they are below any representable contribution.
pub fn taylor_exp(k: usize, c: f64) -> UniPoly {
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = 1.0;
    if c != 0.0 {
        let log_abs_c = libm::log(c.abs());
        for (i, slot) in coeffs.iter_mut().enumerate().skip(1) {
            let log_mag = i as f64 * log_abs_c - libm::lgamma(i as f64 + 1.0);
            let sign = if c < 0.0 && i % 2 == 1 { -1.0 } else { 1.0 };
            *slot = sign * libm::exp(log_mag);
        }
    }
    UniPoly::new(coeffs)
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// Standard normal CDF via erfc, accurate in both tails.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF by bisection on [-40, 40].
pub fn norm_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1)");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov-Smirnov statistic of a sample against a reference CDF.
/// The sample need not be sorted.
pub fn ks_statistic(sample: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        let lo = (c - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - c).abs();
        worst = worst.max(lo).max(hi);
    }
    worst
}

/// Monomial coefficients (graded-lex over `basis`) of p(w . x) for a
/// univariate p. Exact multinomial expansion.
pub fn expand_in_direction(p: &UniPoly, w: &[f64], basis: &MonomialBasis) -> DVector<f64> {
    assert_eq!(basis.d, w.len());
    assert!(p.degree() as u32 <= basis.k, "basis degree too small for expansion");
    let mut out = DVector::zeros(basis.len());
    for (pos, alpha) in basis.indices.iter().enumerate() {
        let j = alpha.degree() as usize;
        if j > p.degree() || p.coeffs[j] == 0.0 {
            continue;
        }
        // multinomial coefficient j! / prod(alpha_i!)
        let mut log_multi = libm::lgamma(j as f64 + 1.0);
        let mut w_pow = 1.0;
        for (&e, &wi) in alpha.0.iter().zip(w) {
            log_multi -= libm::lgamma(e as f64 + 1.0);
            for _ in 0..e {
                w_pow *= wi;
            }
        }
        out[pos] += p.coeffs[j] * libm::exp(log_multi) * w_pow;
    }
    out
}
