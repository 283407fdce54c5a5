//! Zero-mean polynomials that match the sign of a threshold function.
//!
//! For a threshold b, the construction returns a unit-variance polynomial
//! p with E_N[p] = 0 whose sign agrees with sign(z - b) everywhere: p has a
//! single root at b and is increasing beyond |b|. Such a p correlates
//! positively with noisy labels of f(z) = sign(z - b) whenever the label
//! bias beta stays nonnegative outside a thin band above b, which is the
//! engine behind the high-noise learner's progress measure.
//!
//! Shape: p(z) proportional to z^{3k} - c (z^{2k} - (2k-1)!!) with
//! c = b^{3k} / (b^{2k} - (2k-1)!!) and k the smallest odd integer at least
//! max(ceil(4 b^2), 1). All factorial-scale quantities live in log space;
//! only the final unit-variance coefficients are materialized, which keeps
//! every intermediate inside f64 range up to |b| = 6.

use crate::gauss::{gauss_hermite, gaussian_expectation_piecewise, log_double_factorial, GAUSS_HERMITE_NODE_CAP};
use crate::poly::UniPoly;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Largest admitted threshold magnitude.
pub const THRESHOLD_CAP: f64 = 6.0;

fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// ln(1 - e^{-x}) for x > 0.
fn log1mexp(x: f64) -> f64 {
    if x <= core::f64::consts::LN_2 {
        libm::log(-libm::expm1(-x))
    } else {
        libm::log1p(-libm::exp(-x))
    }
}

/// Degree parameter: smallest odd k >= max(ceil(4 b^2), 1).
pub fn degree_parameter(b: f64) -> u32 {
    let base = libm::ceil(4.0 * b * b).max(1.0) as u32;
    if base % 2 == 1 {
        base
    } else {
        base + 1
    }
}

/// Build the sign-matching polynomial for threshold b (|b| <= 6).
pub fn construct_sign_matching(b: f64) -> UniPoly {
    assert!(b.abs() <= THRESHOLD_CAP, "threshold {b} outside [-6, 6]");
    let k = degree_parameter(b);
    let sk = libm::sqrt(k as f64);
    assert!(2.0 * b.abs() <= sk && sk <= 4.0 * b.abs().max(1.0), "degree parameter invariant violated");

    let k3 = 3 * k as usize;
    let k2 = 2 * k as usize;
    let log_d = log_double_factorial(k); // ln((2k-1)!!)

    // c = b^{3k} / (b^{2k} - (2k-1)!!); the denominator is strictly negative
    // in range since (2k-1)!! >= (k/2)^k > (k/4)^k >= b^{2k}
    let (log_c_abs, c_sign) = if b == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        let log_babs = libm::log(b.abs());
        let log_b2k = 2.0 * k as f64 * log_babs;
        debug_assert!(log_b2k < log_d);
        let log_r_abs = log_d + log1mexp(log_d - log_b2k);
        let sign = if b > 0.0 { -1.0 } else { 1.0 }; // sign(b)^{3k} / (-1)
        (3.0 * k as f64 * log_babs - log_r_abs, sign)
    };

    // E[(z^{3k} - c z^{2k} + c D)^2] = (6k-1)!! + c^2 ((4k-1)!! - D^2);
    // odd cross terms vanish because 3k and 5k are odd
    let log_m6 = log_double_factorial(3 * k);
    let log_z = if c_sign == 0.0 {
        0.5 * log_m6
    } else {
        let log_m4 = log_double_factorial(2 * k);
        debug_assert!(2.0 * log_d < log_m4);
        let log_var_r = log_m4 + log1mexp(log_m4 - 2.0 * log_d);
        0.5 * logaddexp(log_m6, 2.0 * log_c_abs + log_var_r)
    };

    let mut coeffs = vec![0.0; k3 + 1];
    coeffs[k3] = libm::exp(-log_z);
    if c_sign != 0.0 {
        coeffs[k2] = -c_sign * libm::exp(log_c_abs - log_z);
        coeffs[0] = c_sign * libm::exp(log_c_abs + log_d - log_z);
    }
    UniPoly::new(coeffs)
}

/// Gauss-Hermite estimates of (E[p], E[p^2]). Exact while 6k + 7 <= 399.
pub fn gaussian_moments(p: &UniPoly) -> (f64, f64) {
    let n = (p.degree() + 4).clamp(1, GAUSS_HERMITE_NODE_CAP);
    let rule = gauss_hermite(n);
    let mean = rule.integrate(|z| p.eval(z));
    let second = rule.integrate(|z| {
        let v = p.eval(z);
        v * v
    });
    (mean, second)
}

/// Grid verdicts for a candidate sign-matching polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMatchReport {
    /// p vanishes at b relative to its term magnitudes.
    pub root_ok: bool,
    /// sign(p(z)) = sign(z - b) on the grid away from the root.
    pub sign_ok: bool,
    /// p is nondecreasing on both grid tails |z| >= |b|.
    pub mono_ok: bool,
    /// p is strictly nonzero just past the root on the f = +1 side.
    pub slope_ok: bool,
}

impl SignMatchReport {
    pub fn all(&self) -> bool {
        self.root_ok && self.sign_ok && self.mono_ok && self.slope_ok
    }
}

/// Sum of absolute term magnitudes at z, the natural cancellation scale.
fn term_scale(p: &UniPoly, z: f64) -> f64 {
    let mut v = 0.0;
    for &c in p.coeffs.iter().rev() {
        v = v * z.abs() + c.abs();
    }
    v
}

/// Check the sign-matching contract on the dense grid [-10, 10], step 1e-3.
pub fn verify_sign_matching(p: &UniPoly, b: f64) -> SignMatchReport {
    let step = 1e-3;
    let n = (20.0 / step) as usize;
    let mut sign_ok = true;
    let mut mono_ok = true;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let z = -10.0 + step * i as f64;
        let v = p.eval(z);
        let near_root = (z - b).abs() < 1e-9 || v.abs() <= 1e-12 * term_scale(p, z);
        if !near_root && (v > 0.0) != (z > b) {
            sign_ok = false;
        }
        if z.abs() >= b.abs() {
            if let Some((pz, pv)) = prev {
                // both endpoints on the same tail
                if pz.abs() >= b.abs() && pz * z >= 0.0 {
                    let slack = 1e-12 * (term_scale(p, pz) + term_scale(p, z));
                    if v < pv - slack {
                        mono_ok = false;
                    }
                }
            }
        }
        prev = Some((z, v));
    }
    let root_ok = p.eval(b).abs() <= 1e-9 * term_scale(p, b).max(1e-300);
    let side = if b >= 0.0 { 1.0 } else { -1.0 };
    let slope_ok = [1e-3, 1e-2, 1e-1].iter().all(|rho| {
        let v = p.eval(b + side * rho);
        v != 0.0 && (v > 0.0) == (side > 0.0)
    });
    SignMatchReport { root_ok, sign_ok, mono_ok, slope_ok }
}

/// Piecewise-constant bias profile beta(z); values[i] applies on
/// (cuts[i-1], cuts[i]] with the outer values extending to the tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProfile {
    pub cuts: Vec<f64>,
    pub values: Vec<f64>,
}

impl BetaProfile {
    pub fn constant(v: f64) -> Self {
        Self { cuts: Vec::new(), values: vec![v] }
    }

    pub fn at(&self, z: f64) -> f64 {
        let idx = self.cuts.partition_point(|&g| g < z);
        self.values[idx]
    }
}

/// E_z[p(z) sign(z - b) beta(z)] for the one-dimensional target
/// f(z) = sign(z - b), by piecewise quadrature split at b and at every
/// profile cut.
pub fn correlation(p: &UniPoly, b: f64, beta: &BetaProfile) -> f64 {
    let mut breaks = vec![b];
    breaks.extend_from_slice(&beta.cuts);
    gaussian_expectation_piecewise(
        &|z| {
            let f = if z >= b { 1.0 } else { -1.0 };
            p.eval(z) * f * beta.at(z)
        },
        &breaks,
    )
}
