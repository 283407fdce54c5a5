//! In-process verification suites behind `verify --suite`, with a
//! JUnit-style XML report for machine consumption.

use std::fmt::Write as _;
use std::time::Instant;

use massart_core::certificate::{
    certificate_oracle, min_eig_certificate, polynomial_shift, shift_ratio, AffineFunc,
    CertificateConfig,
};
use massart_core::chow::{band_project, estimate_chow, flatten, top_singular_subspace};
use massart_core::gauss::{gaussian_expectation_piecewise, ks_statistic, norm_cdf};
use massart_core::hard::{
    dual_witness, hidden_direction_sampler, solve_moment_matching, verify_decoupling, MomentCfg,
};
use massart_core::instance::{
    excess_error, sample, stream_rng, Halfspace, Hypothesis, MassartInstance, NoiseSpec,
};
use massart_core::ogd::{grad_estimate, learn_bounded, project_v, OgdConfig};
use massart_core::poly::UniPoly;
use massart_core::sign_match::{
    construct_sign_matching, correlation, gaussian_moments, verify_sign_matching, BetaProfile,
};
use massart_core::walk::{DataSource, NO_STOP};
use nalgebra::DMatrix;
use rand::Rng;

pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub seconds: f64,
    pub failure: Option<String>,
}

type Check = (&'static str, fn() -> Result<(), String>);

fn run_suite(suite: &str, checks: &[Check]) -> Vec<CheckResult> {
    checks
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let failure = f().err();
            let r = CheckResult {
                suite: suite.to_string(),
                name: (*name).to_string(),
                seconds: start.elapsed().as_secs_f64(),
                failure,
            };
            let status = if r.failure.is_some() { "FAIL" } else { "ok" };
            println!("verify {suite}::{name} ... {status}");
            if let Some(msg) = &r.failure {
                println!("    {msg}");
            }
            r
        })
        .collect()
}

fn ensure(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// signpoly

fn signpoly_fifty_thresholds() -> Result<(), String> {
    for i in 0..50 {
        let b = -4.0 + 8.0 * i as f64 / 49.0;
        let p = construct_sign_matching(b);
        let (mean, var) = gaussian_moments(&p);
        ensure(mean.abs() <= 1e-9, || format!("b = {b}: mean {mean:e}"))?;
        ensure((var - 1.0).abs() <= 1e-9, || format!("b = {b}: variance {var}"))?;
        let rep = verify_sign_matching(&p, b);
        ensure(rep.all(), || format!("b = {b}: grid checks {rep:?}"))?;
    }
    Ok(())
}

fn signpoly_clean_correlation() -> Result<(), String> {
    let p = construct_sign_matching(0.0);
    let c = correlation(&p, 0.0, &BetaProfile::constant(1.0));
    let exact = 2.0 * (2.0 / core::f64::consts::PI).sqrt() / (15.0f64).sqrt();
    ensure((c - exact).abs() <= 1e-9, || format!("correlation {c} vs {exact}"))
}

// chow

fn chow_flatten_preserves_frobenius() -> Result<(), String> {
    let inst = MassartInstance::new(
        Halfspace::new(vec![1.0, 0.0, 0.0, 0.0], 0.3).unwrap(),
        NoiseSpec::Constant { eta: 0.2 },
        4,
    )
    .unwrap();
    let data = sample(&inst, 4000, 7);
    for m in 1..=3u32 {
        let tensor = estimate_chow(&data, m).map_err(|e| e.to_string())?;
        let flat = flatten(&tensor).map_err(|e| e.to_string())?;
        let diff = (tensor.frobenius() - flat.norm()).abs();
        ensure(diff <= 1e-10, || format!("order {m}: norm drift {diff:e}"))?;
    }
    Ok(())
}

fn chow_band_projection_mass() -> Result<(), String> {
    let inst = MassartInstance::new(
        Halfspace::new(vec![0.0, 1.0, 0.0], 0.0).unwrap(),
        NoiseSpec::Constant { eta: 0.1 },
        3,
    )
    .unwrap();
    let n = 50_000;
    let data = sample(&inst, n, 11);
    let w = [0.0, 1.0, 0.0];
    let (band, basis) = band_project(&data, &w, 0.0, 0.2).map_err(|e| e.to_string())?;
    let mass = norm_cdf(0.2) - norm_cdf(0.0);
    let kept = band.len() as f64 / n as f64;
    let tol = 4.0 * (mass * (1.0 - mass) / n as f64).sqrt();
    ensure((kept - mass).abs() <= tol, || format!("kept {kept} vs mass {mass}"))?;
    for j in 0..2 {
        let ortho = dot(basis.column(j).as_slice(), &w).abs();
        ensure(ortho <= 1e-12, || format!("basis column {j} not orthogonal to w"))?;
    }
    Ok(())
}

fn chow_subspace_is_orthonormal() -> Result<(), String> {
    let mut rng = stream_rng(91, 1);
    for rep in 0..20 {
        let m = DMatrix::from_fn(6, 9, |_, _| rng.gen_range(-1.0..1.0));
        let sub = top_singular_subspace(&m, 0.8);
        let defect = sub.orthonormality_defect();
        ensure(defect <= 1e-10, || format!("rep {rep}: defect {defect:e}"))?;
        let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dot(&v, &v).sqrt();
        let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let p = sub.projection_norm(&unit);
        ensure(p <= 1.0 + 1e-12, || format!("rep {rep}: projection norm {p}"))?;
    }
    Ok(())
}

// certificate

fn certificate_closed_form_eigenpairs() -> Result<(), String> {
    let (v, a) = min_eig_certificate(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        vec![1.0, -2.0],
    )));
    ensure((v + 2.0).abs() <= 1e-12 && (a[1].abs() - 1.0).abs() <= 1e-12, || {
        format!("diag case: ({v}, {a:?})")
    })?;
    let (v, a) =
        min_eig_certificate(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    let inv = 1.0 / 2.0f64.sqrt();
    ensure(
        (v + 1.0).abs() <= 1e-12 && ((a[0] - inv).abs() <= 1e-9 && (a[1] + inv).abs() <= 1e-9),
        || format!("exchange case: ({v}, {a:?})"),
    )?;
    let (v, _) = min_eig_certificate(&DMatrix::identity(3, 3));
    ensure((v - 1.0).abs() <= 1e-12, || format!("identity case: {v}"))
}

fn certificate_psd_brute_force() -> Result<(), String> {
    let mut rng = stream_rng(91, 2);
    for rep in 0..30 {
        let n = rng.gen_range(2..=5usize);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let eig = m.clone().symmetric_eigen();
        let opt =
            -eig.eigenvalues.iter().map(|&l: &f64| l.min(0.0) * l.min(0.0)).sum::<f64>().sqrt();
        for _ in 0..200 {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let psd = &b * b.transpose();
            let s = rng.gen_range(0.0..1.0) / psd.norm();
            let contender = psd.component_mul(&m).sum() * s;
            ensure(contender >= opt - 1e-9, || {
                format!("rep {rep}: contender {contender} beats {opt}")
            })?;
        }
    }
    Ok(())
}

fn certificate_shift_ratios() -> Result<(), String> {
    let flat = UniPoly::new(vec![1.0]);
    let r = shift_ratio(&flat, 1.0).map_err(|e| e.to_string())?;
    let exact = norm_cdf(-1.0) / norm_cdf(1.0);
    ensure((r - exact).abs() <= 1e-6 * exact, || format!("constant ratio {r} vs {exact}"))?;
    let reference = gaussian_expectation_piecewise(
        &|z| if z >= 0.0 { (2.0 * z).exp() } else { 0.0 },
        &[0.0],
    ) / gaussian_expectation_piecewise(
        &|z| if z <= 0.0 { (2.0 * z).exp() } else { 0.0 },
        &[0.0],
    );
    let exact = norm_cdf(2.0) / norm_cdf(-2.0);
    ensure((reference - exact).abs() <= 1e-6 * exact, || {
        format!("exponential reference {reference} vs {exact}")
    })?;
    let (_, poly) = polynomial_shift(1.0, 1.5).map_err(|e| e.to_string())?;
    let r = shift_ratio(&poly, 1.0).map_err(|e| e.to_string())?;
    let target = 2.25f64.exp() / 2.0;
    ensure(r >= target, || format!("shifted ratio {r} below {target}"))
}

fn certificate_planted_scenario() -> Result<(), String> {
    let inst = MassartInstance::new(
        Halfspace::new(vec![1.0], 2.0).unwrap(),
        NoiseSpec::Constant { eta: 0.25 },
        1,
    )
    .unwrap();
    let data = sample(&inst, 60_000, 13);
    let cfg = CertificateConfig::default();
    let found = certificate_oracle(&data, &AffineFunc::constant(1, -1.0), 4, 1e-3, &cfg, NO_STOP)
        .map_err(|e| e.to_string())?;
    let cert = found.found().ok_or("no certificate against the constant hypothesis")?;
    ensure(cert.value < 0.0, || format!("certificate value {}", cert.value))?;
    let truth = certificate_oracle(&data, &AffineFunc::new(vec![1.0], 2.0), 4, 1e-3, &cfg, NO_STOP)
        .map_err(|e| e.to_string())?;
    ensure(truth.found().is_none(), || String::from("certified the true halfspace"))
}

// ogd

fn ogd_projection_rules() -> Result<(), String> {
    let (w, t) = project_v(&[0.3, 0.4], 1.0, 0.1);
    ensure(w == vec![0.3, 0.4] && t == 1.0, || String::from("feasible point moved"))?;
    let (w, _) = project_v(&[3.0, 0.0], 0.0, 0.1);
    ensure((w[0] - 1.0).abs() <= 1e-12, || format!("rescale gave {w:?}"))?;
    let (_, t) = project_v(&[0.0, 0.0], 10.0, 0.1);
    let cap = 4.0 * 10.0f64.ln().sqrt();
    ensure((t - cap).abs() <= 1e-12, || format!("threshold clamp {t} vs {cap}"))?;
    let mut rng = stream_rng(91, 3);
    for _ in 0..200 {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let (ta, tb) = (rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
        let pa = project_v(&a, ta, 0.1);
        let pb = project_v(&b, tb, 0.1);
        let pre = dot(
            &a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>(),
            &a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>(),
        ) + (ta - tb) * (ta - tb);
        let post = dot(
            &pa.0.iter().zip(&pb.0).map(|(x, y)| x - y).collect::<Vec<_>>(),
            &pa.0.iter().zip(&pb.0).map(|(x, y)| x - y).collect::<Vec<_>>(),
        ) + (pa.1 - pb.1) * (pa.1 - pb.1);
        ensure(post <= pre * (1.0 + 1e-12), || String::from("projection expanded a pair"))?;
    }
    Ok(())
}

fn ogd_gradient_closed_form() -> Result<(), String> {
    let inst = MassartInstance::new(
        Halfspace::new(vec![1.0, 0.0], 0.0).unwrap(),
        NoiseSpec::Constant { eta: 0.0 },
        2,
    )
    .unwrap();
    let data = sample(&inst, 150_000, 17);
    let g = grad_estimate(&data, |_| 0.0, 1.0);
    let expect = -(2.0 / core::f64::consts::PI).sqrt();
    let se = ((1.0 - 2.0 / core::f64::consts::PI) / 150_000.0).sqrt();
    ensure((g[0] - expect).abs() <= 5.0 * se, || format!("g[0] = {} vs {expect}", g[0]))
}

fn ogd_quick_end_to_end() -> Result<(), String> {
    let inst = MassartInstance::new(
        Halfspace::new(vec![1.0, 0.0], 0.5).unwrap(),
        NoiseSpec::Constant { eta: 0.1 },
        2,
    )
    .unwrap();
    let cfg = OgdConfig { k: 3, t_steps: Some(8), n: 40_000, seed: 19, ..OgdConfig::default() };
    let report =
        learn_bounded(DataSource::Instance(&inst), 0.25, 0.05, &cfg, NO_STOP).map_err(|e| {
            e.to_string()
        })?;
    let h = Hypothesis::Halfspace(report.hypothesis.clone());
    let excess = excess_error(&h, &inst, 100_000, 23);
    ensure(excess.value <= 0.25, || format!("excess {}", excess.value))
}

// hard

fn hard_planted_table() -> Result<(), String> {
    let solve =
        solve_moment_matching(2.0, 2, 0.4, &MomentCfg::default()).map_err(|e| e.to_string())?;
    let table = solve.feasible().ok_or("planted case infeasible")?;
    ensure(table.residual <= 1e-8, || format!("residual {:e}", table.residual))?;
    ensure(
        table.values.iter().all(|v| (0.4..=1.0).contains(v)),
        || String::from("values escape the box"),
    )?;
    let dec = verify_decoupling(table);
    ensure(dec <= 1e-6, || format!("decoupling {dec:e}"))
}

fn hard_origin_witness() -> Result<(), String> {
    let cfg = MomentCfg::default();
    let solve = solve_moment_matching(0.0, 1, 0.5, &cfg).map_err(|e| e.to_string())?;
    ensure(solve.feasible().is_none(), || String::from("origin case should be infeasible"))?;
    let (_, margin) = dual_witness(0.0, 1, 0.5, &cfg, 500, 29).ok_or("no dual witness")?;
    let exact = 0.5 * (2.0 / core::f64::consts::PI).sqrt();
    ensure((margin - exact).abs() <= 5e-3, || format!("margin {margin} vs {exact}"))
}

fn hard_sampler_marginals() -> Result<(), String> {
    let table = solve_moment_matching(2.0, 2, 0.4, &MomentCfg::default())
        .map_err(|e| e.to_string())?
        .feasible()
        .ok_or("planted case infeasible")?
        .clone();
    let n = 30_000;
    let data = hidden_direction_sampler(&table, &[0.6, 0.8], 2, n, 31);
    let critical = 1.628 / (n as f64).sqrt();
    for j in 0..2 {
        let coord: Vec<f64> = (0..n).map(|i| data.x(i)[j]).collect();
        let ks = ks_statistic(&coord, &|z| norm_cdf(z));
        ensure(ks <= critical, || format!("coordinate {j}: KS {ks} above {critical}"))?;
    }
    Ok(())
}

fn suite_checks(suite: &str) -> Vec<Check> {
    match suite {
        "signpoly" => vec![
            ("fifty_thresholds", signpoly_fifty_thresholds),
            ("clean_correlation", signpoly_clean_correlation),
        ],
        "chow" => vec![
            ("flatten_preserves_frobenius", chow_flatten_preserves_frobenius),
            ("band_projection_mass", chow_band_projection_mass),
            ("subspace_is_orthonormal", chow_subspace_is_orthonormal),
        ],
        "certificate" => vec![
            ("closed_form_eigenpairs", certificate_closed_form_eigenpairs),
            ("psd_brute_force", certificate_psd_brute_force),
            ("shift_ratios", certificate_shift_ratios),
            ("planted_scenario", certificate_planted_scenario),
        ],
        "ogd" => vec![
            ("projection_rules", ogd_projection_rules),
            ("gradient_closed_form", ogd_gradient_closed_form),
            ("quick_end_to_end", ogd_quick_end_to_end),
        ],
        "hard" => vec![
            ("planted_table", hard_planted_table),
            ("origin_witness", hard_origin_witness),
            ("sampler_marginals", hard_sampler_marginals),
        ],
        _ => unreachable!("suite names are validated by the caller"),
    }
}

pub const SUITES: [&str; 5] = ["signpoly", "chow", "certificate", "ogd", "hard"];

/// Runs one suite (or all) and returns the per-check results.
pub fn run(suite: &str) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if suite == "all" {
        for s in SUITES {
            out.extend(run_suite(s, &suite_checks(s)));
        }
    } else {
        out.extend(run_suite(suite, &suite_checks(suite)));
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// JUnit-style XML: one testsuite per module suite, one testcase per check.
pub fn junit_xml(results: &[CheckResult]) -> String {
    let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<testsuites>\n");
    for suite in SUITES {
        let rows: Vec<&CheckResult> = results.iter().filter(|r| r.suite == suite).collect();
        if rows.is_empty() {
            continue;
        }
        let failures = rows.iter().filter(|r| r.failure.is_some()).count();
        let _ = writeln!(
            xml,
            "  <testsuite name=\"{suite}\" tests=\"{}\" failures=\"{failures}\">",
            rows.len()
        );
        for r in rows {
            let _ = write!(
                xml,
                "    <testcase name=\"{}\" time=\"{:.3}\"",
                xml_escape(&r.name),
                r.seconds
            );
            match &r.failure {
                None => xml.push_str("/>\n"),
                Some(msg) => {
                    let _ = writeln!(
                        xml,
                        ">\n      <failure message=\"{}\"/>\n    </testcase>",
                        xml_escape(msg)
                    );
                }
            }
        }
        xml.push_str("  </testsuite>\n");
    }
    xml.push_str("</testsuites>\n");
    xml
}
