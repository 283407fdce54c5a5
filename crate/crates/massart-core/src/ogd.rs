//! Projected online gradient descent over (w, t), driven by the certificate
//! oracle. Each step asks the oracle for a witness T that the current score
//! ell(x) = w.x - t is suboptimal; the linearized loss -E[(T + rho) y ell(x)]
//! then yields a descent direction, and a NotFound answer means the iterate
//! already competes with the best halfspace.

use crate::certificate::{
    certificate_oracle, AffineFunc, Certificate, CertificateConfig, OracleOutcome,
};
use crate::error::{Error, Result};
use crate::instance::{dot, l2_norm, sample, splitmix64, Halfspace, LabeledDataset};
use crate::multi_index::MonomialBasis;
use crate::walk::{DataSource, StopFlag, ValScorer};
use alloc::vec;
use alloc::vec::Vec;

/// Euclidean projection onto {||w|| <= 1} x {|t| <= 4 sqrt(log 1/eps)}.
pub fn project_v(w: &[f64], t: f64, eps: f64) -> (Vec<f64>, f64) {
    assert!(eps > 0.0 && eps < 1.0);
    let norm = l2_norm(w);
    let w2 = if norm > 1.0 {
        w.iter().map(|v| v / norm).collect()
    } else {
        w.to_vec()
    };
    let cap = 4.0 * libm::sqrt(libm::log(1.0 / eps));
    (w2, t.clamp(-cap, cap))
}

/// Evaluates a found certificate as the function T(x) = 1{band} q(x)^2
/// divided by the Monte Carlo L4 estimate of q on the band.
pub struct CertFn {
    pub ell: AffineFunc,
    pub cert: Certificate,
    basis: MonomialBasis,
}

impl CertFn {
    pub fn new(ell: AffineFunc, cert: Certificate, d: usize) -> Self {
        let basis = MonomialBasis::new(d, cert.k);
        debug_assert_eq!(basis.len(), cert.q_coeffs.len());
        Self { ell, cert, basis }
    }

    pub fn eval(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        if !self.cert.band_contains(self.ell.eval(x)) {
            return 0.0;
        }
        scratch.resize(self.basis.len(), 0.0);
        self.basis.eval_into(x, scratch);
        let q = dot(&self.cert.q_coeffs, scratch);
        q * q / self.cert.l4_norm_estimate.max(1e-12)
    }
}

/// Sample mean of -(T(x_i) + rho) y_i (x_i, -1), clipped to norm 2 sqrt(d).
/// The last coordinate pairs with the threshold in ell(x) = w.x - t.
pub fn grad_estimate<F: FnMut(&[f64]) -> f64>(
    data: &LabeledDataset,
    mut t_fn: F,
    rho: f64,
) -> Vec<f64> {
    let d = data.d;
    let n = data.len();
    let mut g = vec![0.0; d + 1];
    for i in 0..n {
        let x = data.x(i);
        let scale = (t_fn(x) + rho) * f64::from(data.ys[i]);
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj -= scale * xj;
        }
        g[d] += scale;
    }
    g.iter_mut().for_each(|v| *v /= n as f64);
    let cap = 2.0 * libm::sqrt(d as f64);
    let norm = l2_norm(&g);
    if norm > cap {
        g.iter_mut().for_each(|v| *v *= cap / norm);
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgdConfig {
    pub k: u32,
    /// Oracle threshold and gradient offset; None selects eps^2/64.
    pub rho: Option<f64>,
    /// None selects min(ceil(d log(1/eps) / (rho^2 eps^4)), 2000).
    pub t_steps: Option<usize>,
    /// Sample size when drawing from an instance.
    pub n: usize,
    pub cert: CertificateConfig,
    /// Starting iterate; None selects (e1, 0).
    pub init: Option<(Vec<f64>, f64)>,
    pub seed: u64,
}

impl Default for OgdConfig {
    fn default() -> Self {
        Self {
            k: 5,
            rho: None,
            t_steps: None,
            n: 300_000,
            cert: CertificateConfig::default(),
            init: None,
            seed: 0,
        }
    }
}

/// One row of the per-step trace: the iterate entering the step, the oracle
/// value found on it (None when the iterate was zero or the oracle failed),
/// and its held-out error.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub w: Vec<f64>,
    pub t: f64,
    pub oracle_value: Option<f64>,
    pub validation_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgdReport {
    pub hypothesis: Halfspace,
    pub validation_error: f64,
    pub steps_used: usize,
    /// True when the oracle declared the final iterate certificate-free.
    pub stopped_not_found: bool,
    /// True when the wall-clock budget cut the run short.
    pub partial: bool,
    pub trace: Vec<StepTrace>,
}

fn mix(seed: u64, step: u64) -> u64 {
    splitmix64(seed ^ splitmix64(step ^ 0x06d9_77cc))
}

/// Algorithm: start at (e1, 0), repeatedly certify the current iterate and
/// descend the linearized loss with step 1/(sqrt(i) + rho), projecting back
/// onto the feasible product set. Stops on NotFound; the returned halfspace
/// is the held-out argmin over every iterate visited.
pub fn learn_bounded(
    source: DataSource,
    eps: f64,
    _delta: f64,
    cfg: &OgdConfig,
    stop: StopFlag,
) -> Result<OgdReport> {
    assert!(eps > 0.0 && eps <= 0.5, "eps must lie in (0, 1/2]");
    let data = match source {
        DataSource::Instance(inst) => sample(inst, cfg.n, splitmix64(cfg.seed ^ 0x09d1_b0bd)),
        DataSource::Fixed(d) => d.slice(0, d.len()),
    };
    let d = data.d;
    let n = data.len();
    assert!(n >= 8, "dataset too small to split");
    let oracle_data = data.slice(0, n * 3 / 4);
    let grad_data = data.slice(0, n / 2);
    let scorer = ValScorer::new(data.slice(n * 3 / 4, n));

    let rho = cfg.rho.unwrap_or(eps * eps / 64.0);
    let t_steps = cfg.t_steps.unwrap_or_else(|| {
        let eps4 = eps * eps * eps * eps;
        let theory = d as f64 * libm::log(1.0 / eps) / (rho * rho * eps4);
        (libm::ceil(theory) as usize).min(2000)
    });
    let (mut w, mut t) = cfg.init.clone().unwrap_or_else(|| {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        (e1, 0.0)
    });
    let proj = project_v(&w, t, eps);
    w = proj.0;
    t = proj.1;

    let mut visited: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut trace: Vec<StepTrace> = Vec::new();
    let mut cur_err = scorer.error_at(&w, t);
    visited.push((cur_err, w.clone(), t));

    let mut steps_used = 0;
    let mut stopped_not_found = false;
    let mut partial = false;
    for step in 1..=t_steps {
        if stop() {
            partial = true;
            break;
        }
        let zero_iterate = l2_norm(&w) < 1e-12 && t.abs() < 1e-12;
        let mut oracle_value = None;
        let mut cert_fn: Option<CertFn> = None;
        if !zero_iterate {
            let ell = AffineFunc::new(w.clone(), t);
            let mut cert_cfg = cfg.cert.clone();
            cert_cfg.seed = mix(cfg.seed, step as u64);
            match certificate_oracle(&oracle_data, &ell, cfg.k, rho, &cert_cfg, stop) {
                Ok(OracleOutcome::Found(c)) => {
                    oracle_value = Some(c.value);
                    cert_fn = Some(CertFn::new(ell, c, d));
                }
                Ok(OracleOutcome::NotFound) => {
                    trace.push(StepTrace {
                        step,
                        w: w.clone(),
                        t,
                        oracle_value: None,
                        validation_error: cur_err,
                    });
                    stopped_not_found = true;
                    break;
                }
                Err(Error::BudgetExceeded) => {
                    partial = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        trace.push(StepTrace {
            step,
            w: w.clone(),
            t,
            oracle_value,
            validation_error: cur_err,
        });
        steps_used = step;

        let mut scratch = Vec::new();
        let g = match &cert_fn {
            Some(cf) => grad_estimate(&grad_data, |x| cf.eval(x, &mut scratch), rho),
            None => grad_estimate(&grad_data, |_| 0.0, rho),
        };
        let eta = 1.0 / (libm::sqrt(step as f64) + rho);
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj -= eta * gj;
        }
        t -= eta * g[d];
        let proj = project_v(&w, t, eps);
        w = proj.0;
        t = proj.1;
        cur_err = scorer.error_at(&w, t);
        visited.push((cur_err, w.clone(), t));
    }

    // held-out argmin over visited iterates; ties keep the earliest, and
    // iterates with vanishing w cannot form a halfspace so they are skipped
    let mut order: Vec<usize> = (0..visited.len()).collect();
    order.sort_by(|&a, &b| {
        visited[a]
            .0
            .partial_cmp(&visited[b].0)
            .unwrap()
            .then(a.cmp(&b))
    });
    let best = order
        .into_iter()
        .find(|&i| l2_norm(&visited[i].1) >= 1e-12)
        .expect("initial iterate is nonzero");
    let (err, bw, bt) = visited[best].clone();
    Ok(OgdReport {
        hypothesis: Halfspace::from_direction(bw, bt)?,
        validation_error: err,
        steps_used,
        stopped_not_found,
        partial,
        trace,
    })
}
