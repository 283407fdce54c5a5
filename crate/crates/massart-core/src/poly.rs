//! Univariate polynomials in the monomial and probabilist Hermite bases.
//!
//! The Hermite polynomials here are the probabilist family He_n, orthogonal
//! under the standard Gaussian with E[He_m He_n] = n! 1{m = n}, generated by
//! He_{n+1}(z) = z He_n(z) - n He_{n-1}(z).

use alloc::vec;
use alloc::vec::Vec;

/// Dense univariate polynomial, coefficients ascending in the monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    pub coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![0.0; degree + 1] }
    }

    /// Largest index with a nonzero coefficient, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: f64) -> f64 {
        let mut v = 0.0;
        for &c in self.coeffs.iter().rev() {
            v = v * z + c;
        }
        v
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Coefficients of this polynomial in the Hermite basis.
    pub fn to_hermite(&self) -> Vec<f64> {
        monomial_to_hermite(&self.coeffs)
    }

    /// Polynomial with the given Hermite coefficients.
    pub fn from_hermite(h: &[f64]) -> Self {
        Self { coeffs: hermite_to_monomial(h) }
    }
}

/// He_0..He_n as monomial coefficient rows (row m has length m + 1).
pub fn hermite_monomial_rows(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    rows.push(vec![1.0]);
    if n == 0 {
        return rows;
    }
    rows.push(vec![0.0, 1.0]);
    for m in 1..n {
        let mut next = vec![0.0; m + 2];
        for (j, &c) in rows[m].iter().enumerate() {
            next[j + 1] += c;
        }
        for (j, &c) in rows[m - 1].iter().enumerate() {
            next[j] -= m as f64 * c;
        }
        rows.push(next);
    }
    rows
}

/// Monomial coefficients of sum_m h[m] He_m.
pub fn hermite_to_monomial(h: &[f64]) -> Vec<f64> {
    if h.is_empty() {
        return vec![0.0];
    }
    let rows = hermite_monomial_rows(h.len() - 1);
    let mut out = vec![0.0; h.len()];
    for (m, &hm) in h.iter().enumerate() {
        for (j, &c) in rows[m].iter().enumerate() {
            out[j] += hm * c;
        }
    }
    out
}

/// Hermite coefficients of a monomial-basis polynomial. The change of basis
/// is triangular with unit diagonal, so this is exact back-substitution.
pub fn monomial_to_hermite(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.is_empty() {
        return vec![0.0];
    }
    let n = coeffs.len() - 1;
    let rows = hermite_monomial_rows(n);
    let mut rem = coeffs.to_vec();
    let mut h = vec![0.0; n + 1];
    for m in (0..=n).rev() {
        let c = rem[m];
        h[m] = c;
        for (j, &r) in rows[m].iter().enumerate() {
            rem[j] -= c * r;
        }
    }
    h
}

/// sum_m h[m] He_m(z) by the forward three-term recurrence.
pub fn eval_hermite_series(h: &[f64], z: f64) -> f64 {
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for (m, &hm) in h.iter().enumerate() {
        acc += hm * cur;
        let next = z * cur - m as f64 * prev;
        prev = cur;
        cur = next;
    }
    acc
}
