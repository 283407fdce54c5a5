//! Random-walk learner properties: the exact correlation-improvement
//! inequality, argmin threshold selection, and run determinism.

use massart_core::instance::{dot, l2_norm, stream_rng, Halfspace, MassartInstance, NoiseSpec};
use massart_core::walk::{
    learn_high_noise, threshold_grid, update_direction, DataSource, ValScorer, WalkConfig, NO_STOP,
};
use rand::Rng;

fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                u
            })
            .collect();
        let n = l2_norm(&v);
        if n > 1e-3 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

#[test]
fn update_improves_correlation_in_a_thousand_configurations() {
    let mut rng = stream_rng(2024, 0);
    let mut done = 0;
    while done < 1000 {
        let d = rng.gen_range(3..=8usize);
        let w = random_unit(&mut rng, d);
        let target = random_unit(&mut rng, d);
        // v lives in w-perp and makes angle acos(c) with the target
        let mut u: Vec<f64> = target
            .iter()
            .zip(&w)
            .map(|(t, wi)| t - dot(&target, &w) * wi)
            .collect();
        let un = l2_norm(&u);
        if un < 1e-6 {
            continue;
        }
        u.iter_mut().for_each(|c| *c /= un);
        let mut r = random_unit(&mut rng, d);
        // orthogonalize r against both w and u
        let rw = dot(&r, &w);
        let ru = dot(&r, &u);
        for i in 0..d {
            r[i] -= rw * w[i] + ru * u[i];
        }
        let rn = l2_norm(&r);
        if rn < 1e-6 {
            continue;
        }
        r.iter_mut().for_each(|c| *c /= rn);
        let mix: f64 = rng.gen_range(0.05..1.0);
        let v: Vec<f64> = u
            .iter()
            .zip(&r)
            .map(|(a, b)| mix * a + (1.0 - mix * mix).sqrt() * b)
            .collect();
        let c = dot(&v, &target);
        if c <= 1e-6 {
            continue;
        }
        let lambda = c / 2.0;
        let before = dot(&w, &target);
        let after = dot(&update_direction(&w, &v, lambda).unwrap(), &target);
        assert!(
            after >= before + lambda * lambda / 2.0 - 1e-12,
            "before {before} after {after} lambda {lambda}"
        );
        done += 1;
    }
}

#[test]
fn best_threshold_is_the_grid_argmin() {
    let mut rng = stream_rng(99, 0);
    for _ in 0..20 {
        let d = 3;
        let inst = MassartInstance::new(
            Halfspace::new(random_unit(&mut rng, d), rng.gen_range(-1.0..1.0)).unwrap(),
            NoiseSpec::Constant { eta: rng.gen_range(0.0..0.4) },
            d,
        )
        .unwrap();
        let data = massart_core::instance::sample(&inst, 2_000, rng.gen());
        let scorer = ValScorer::new(data);
        let grid = threshold_grid(0.2);
        let w = random_unit(&mut rng, d);
        let (t_best, err_best) = scorer.best_threshold(&w, &grid);
        assert!((scorer.error_at(&w, t_best) - err_best).abs() <= 1e-12);
        for &t in &grid {
            assert!(err_best <= scorer.error_at(&w, t) + 1e-12, "t={t}");
        }
    }
}

#[test]
fn threshold_grid_covers_both_tails_symmetrically() {
    let grid = threshold_grid(0.15);
    assert!(grid.contains(&0.0));
    let extreme = 4.0 * libm::sqrt(libm::log(1.0 / 0.15));
    assert!(grid.iter().any(|&t| (t - extreme).abs() <= 1e-12));
    assert!(grid.iter().any(|&t| (t + extreme).abs() <= 1e-12));
    for &t in &grid {
        assert!(grid.iter().any(|&s| (s + t).abs() <= 1e-12), "missing -{t}");
    }
    // spacing is eps^2 between interior neighbours
    let mut sorted = grid.clone();
    sorted.sort_by(f64::total_cmp);
    for pair in sorted.windows(2).skip(1).take(sorted.len() - 3) {
        assert!((pair[1] - pair[0] - 0.15 * 0.15).abs() <= 1e-12);
    }
}

#[test]
fn walk_is_deterministic_given_seed_and_config() {
    let d = 3;
    let inst = MassartInstance::new(
        Halfspace::new(vec![1.0, 0.0, 0.0], 0.0).unwrap(),
        NoiseSpec::Constant { eta: 0.2 },
        d,
    )
    .unwrap();
    let cfg = WalkConfig {
        n: 20_000,
        n_val: 5_000,
        t_steps: 3,
        restarts: 2,
        seed: 123,
        ..WalkConfig::default()
    };
    let a = learn_high_noise(DataSource::Instance(&inst), 0.2, 0.1, &cfg, NO_STOP).unwrap();
    let b = learn_high_noise(DataSource::Instance(&inst), 0.2, 0.1, &cfg, NO_STOP).unwrap();
    assert_eq!(a.hypothesis, b.hypothesis);
    assert_eq!(a.validation_error, b.validation_error);
}
