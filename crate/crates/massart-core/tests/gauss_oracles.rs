//! Cross-checks between the independent Gaussian-integration oracles:
//! closed-form moments, the Gram matrix, tensor-product quadrature, and the
//! log-space double factorial.

use massart_core::gauss::{
    gauss_hermite, gaussian_expectation_piecewise, gaussian_monomial_moment, gram_matrix,
    log_double_factorial, taylor_exp,
};
use massart_core::instance::stream_rng;
use massart_core::multi_index::{MonomialBasis, MultiIndex};
use nalgebra::DVector;
use rand::Rng;

#[test]
fn moment_oracle_agrees_with_log_double_factorial() {
    for m in 0..=20u32 {
        let moment = gaussian_monomial_moment(&MultiIndex(vec![2 * m]));
        let from_log = libm::exp(log_double_factorial(m));
        assert!(
            (moment - from_log).abs() <= 1e-10 * from_log,
            "m={m}: {moment} vs {from_log}"
        );
    }
}

#[test]
fn double_factorial_stays_inside_power_bounds() {
    for m in 1..=20u32 {
        let v = log_double_factorial(m);
        let lo = m as f64 * libm::log(m as f64 / 2.0);
        let hi = m as f64 * libm::log(2.0 * m as f64);
        assert!(lo <= v + 1e-12 && v <= hi + 1e-12, "m={m}: {lo} <= {v} <= {hi}");
    }
}

/// E[q^2] by tensor-product Gauss-Hermite quadrature, exact for the node
/// counts used here (2n-1 >= 2 deg).
fn quadrature_l2_sq(basis: &MonomialBasis, coeffs: &[f64], k: u32) -> f64 {
    let d = basis.d;
    let rule = gauss_hermite(2 * k as usize + 4);
    let mut scratch = vec![0.0; basis.len()];
    let mut x = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            x[j] = rule.nodes[i];
            w *= rule.weights[i];
        }
        basis.eval_into(&x, &mut scratch);
        let q: f64 = coeffs.iter().zip(&scratch).map(|(c, m)| c * m).sum();
        total += w * q * q;
        // odometer over the d-fold product grid
        let mut j = 0;
        loop {
            if j == d {
                return total;
            }
            idx[j] += 1;
            if idx[j] < rule.nodes.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[test]
fn quadrature_matches_gram_matrix_l2_norms() {
    let mut rng = stream_rng(41, 0);
    let cases: [(usize, u32, usize); 3] = [(1, 20, 80), (2, 8, 80), (3, 5, 40)];
    for (d, k, reps) in cases {
        let basis = MonomialBasis::new(d, k);
        let gram = gram_matrix(d, k).unwrap();
        for _ in 0..reps {
            let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = DVector::from_column_slice(&coeffs);
            let by_gram = (&a.transpose() * &gram * &a)[(0, 0)];
            let by_quad = quadrature_l2_sq(&basis, &coeffs, k);
            assert!(
                (by_gram - by_quad).abs() <= 1e-8 * by_gram.abs().max(1.0),
                "d={d} k={k}: {by_gram} vs {by_quad}"
            );
        }
    }
}

#[test]
fn direction_expansion_respects_coefficient_norm_bound() {
    use massart_core::gauss::expand_in_direction;
    use massart_core::instance::{dot, l2_norm};
    use massart_core::poly::UniPoly;

    let mut rng = stream_rng(42, 0);
    for rep in 0..50 {
        let d = rng.gen_range(2..=6usize);
        let k = rng.gen_range(1..=6u32);
        let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = l2_norm(&w);
        let shrink = rng.gen_range(0.2..1.0) / norm.max(1e-9);
        w.iter_mut().for_each(|c| *c *= shrink);
        let coeffs: Vec<f64> = (0..=k as usize).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = UniPoly::new(coeffs.clone());
        let basis = MonomialBasis::new(d, k);
        let expanded = expand_in_direction(&p, &w, &basis);

        let lhs: f64 = expanded.iter().map(|c| c * c).sum();
        let rhs: f64 = coeffs.iter().map(|c| c * c).sum::<f64>()
            * libm::pow(d as f64, 2.0 * k as f64);
        assert!(lhs <= rhs * (1.0 + 1e-12), "rep {rep}: {lhs} > {rhs}");

        // the expansion must actually be p(w.x)
        let mut scratch = vec![0.0; basis.len()];
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            basis.eval_into(&x, &mut scratch);
            let direct = p.eval(dot(&w, &x));
            let via: f64 = expanded.iter().zip(&scratch).map(|(c, m)| c * m).sum();
            assert!((direct - via).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}

#[test]
fn taylor_remainder_respects_factorial_bound() {
    for &c in &[0.5, 1.0, 2.0] {
        for &k in &[8usize, 16] {
            let s = taylor_exp(k, c);
            let r = 3.0 * c;
            let bound =
                libm::exp(r) * libm::exp((k as f64 + 1.0) * libm::log(r) - libm::lgamma(k as f64 + 2.0));
            let mut z = -3.0;
            while z <= 3.0 {
                let err = (s.eval(z) - libm::exp(c * z)).abs();
                assert!(err <= bound * (1.0 + 1e-9), "c={c} k={k} z={z}: {err} > {bound}");
                z += 0.25;
            }
        }
    }
}

#[test]
fn piecewise_quadrature_recovers_split_closed_forms() {
    // E[z 1{z > a}] = phi(a) on both sides of several split points
    for &a in &[-1.5, 0.0, 0.7, 2.0] {
        let got = gaussian_expectation_piecewise(&|z| if z > a { z } else { 0.0 }, &[a]);
        let expect = massart_core::gauss::norm_pdf(a);
        assert!((got - expect).abs() <= 1e-10 * expect.max(1.0), "a={a}: {got} vs {expect}");
    }
}
