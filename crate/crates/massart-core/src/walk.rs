//! Biased random walk learner for halfspaces under extreme Massart noise.
//!
//! The walk maintains a unit direction w. Each iteration extracts a
//! candidate subspace of w-perp from band-conditioned label moments, draws a
//! uniform unit vector in it, and blends that vector into w with a small
//! step. Whenever the drawn vector correlates with the unseen target
//! direction, the blend provably increases the alignment (correlation
//! improvement); random draws make that event frequent enough that restarts
//! plus a final validation argmin over recorded directions and a threshold
//! grid recover a good halfspace, even when eta(x) = 1/2 on a positive-mass
//! region.

use crate::chow::{candidate_subspace, estimate_chow, ChowConfig, Subspace};
use crate::error::{Error, Result};
use crate::instance::{
    dot, excess_error, l2_norm, sample, splitmix64, stream_rng, Halfspace, Hypothesis,
    LabeledDataset, MassartInstance,
};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "std")]
use rayon::prelude::*;

/// Shared cancellation probe for wall-clock budgets; pure learners never
/// construct clocks themselves.
pub type StopFlag<'a> = &'a (dyn Fn() -> bool + Sync);

/// Never-stopping flag for callers without a budget.
pub const NO_STOP: StopFlag<'static> = &|| false;

/// w' = (w + lambda v) / ||w + lambda v|| for v orthogonal to w.
pub fn update_direction(w: &[f64], v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    debug_assert!((l2_norm(w) - 1.0).abs() <= 1e-9, "w must be unit");
    debug_assert!(l2_norm(v) <= 1.0 + 1e-9, "v must have norm at most 1");
    debug_assert!(lambda >= 0.0);
    let inner = dot(w, v);
    if inner.abs() > 1e-6 {
        return Err(Error::NonOrthogonal { dot: inner });
    }
    let mut out: Vec<f64> = w.iter().zip(v).map(|(wi, vi)| wi + lambda * vi).collect();
    let norm = l2_norm(&out);
    out.iter_mut().for_each(|x| *x /= norm);
    Ok(out)
}

/// Uniform unit vector inside the subspace (Gaussian in basis coordinates,
/// normalized, mapped out).
pub fn random_unit_in(space: &Subspace, seed: u64) -> Result<Vec<f64>> {
    let r = space.dim();
    if r == 0 {
        return Err(Error::EmptySubspace);
    }
    let mut rng = stream_rng(seed, 3);
    loop {
        let g: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let gn = l2_norm(&g);
        if gn < 1e-12 {
            continue;
        }
        let d = space.ambient_dim();
        let mut out = vec![0.0; d];
        for (j, gj) in g.iter().enumerate() {
            let scale = gj / gn;
            for (oi, bi) in out.iter_mut().zip(space.basis.column(j).iter()) {
                *oi += scale * bi;
            }
        }
        return Ok(out);
    }
}

/// Threshold grid {0, +-eps^2, +-2 eps^2, ...} up to +-4 sqrt(log 1/eps).
pub fn threshold_grid(eps: f64) -> Vec<f64> {
    let bound = 4.0 * libm::sqrt(libm::log(1.0 / eps));
    let step = eps * eps;
    let mut out = vec![0.0];
    let mut v = step;
    while v < bound {
        out.push(v);
        out.push(-v);
        v += step;
    }
    out.push(bound);
    out.push(-bound);
    out
}

/// Held-out scorer: zero-one error of sign(w.x - t) over a fixed sample,
/// with a fast scan over whole threshold grids via sorted margins.
pub struct ValScorer {
    data: LabeledDataset,
}

impl ValScorer {
    pub fn new(data: LabeledDataset) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn error_at(&self, w: &[f64], t: f64) -> f64 {
        let n = self.data.len();
        let wrong = (0..n)
            .filter(|&i| {
                let z = dot(w, self.data.x(i));
                let pred: i8 = if z - t >= 0.0 { 1 } else { -1 };
                pred != self.data.ys[i]
            })
            .count();
        wrong as f64 / n as f64
    }

    /// Best threshold in the grid for direction w: (t, error). Single sort,
    /// then O(log n) per grid point via prefix counts of positive labels.
    pub fn best_threshold(&self, w: &[f64], grid: &[f64]) -> (f64, f64) {
        let n = self.data.len();
        let mut zs: Vec<(f64, i8)> = (0..n)
            .map(|i| (dot(w, self.data.x(i)), self.data.ys[i]))
            .collect();
        zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut pos_prefix = vec![0usize; n + 1];
        for (i, &(_, y)) in zs.iter().enumerate() {
            pos_prefix[i + 1] = pos_prefix[i] + usize::from(y == 1);
        }
        let total_pos = pos_prefix[n];
        let mut best = (grid[0], f64::INFINITY);
        for &t in grid {
            // points with z < t predict -1; z >= t predict +1
            let c = zs.partition_point(|&(z, _)| z < t);
            let wrong = pos_prefix[c] + (n - c) - (total_pos - pos_prefix[c]);
            let err = wrong as f64 / n as f64;
            if err < best.1 {
                best = (t, err);
            }
        }
        best
    }
}

/// Input data for the learners: a live instance to sample from, or a fixed
/// dataset split 80/20 into train/validation.
pub enum DataSource<'a> {
    Instance(&'a MassartInstance),
    Fixed(&'a LabeledDataset),
}

/// Knobs for the random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Training sample size when drawing from an instance.
    pub n: usize,
    /// Validation sample size when drawing from an instance.
    pub n_val: usize,
    pub t_steps: u32,
    pub restarts: u32,
    /// Fixed step size; None selects max(eps^3, update norm)/2 capped at 1/4.
    pub lambda: Option<f64>,
    pub chow: ChowConfig,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            n: 200_000,
            n_val: 50_000,
            t_steps: 20,
            restarts: 32,
            lambda: None,
            chow: ChowConfig::default(),
            seed: 0,
        }
    }
}

/// Walk outcome: the validation-argmin halfspace over every recorded
/// direction (and its negation) crossed with the threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkReport {
    pub hypothesis: Halfspace,
    pub validation_error: f64,
    pub restarts_used: u32,
    pub steps_used: u32,
    /// True when the wall-clock budget cut the run short.
    pub partial: bool,
}

struct RestartOutcome {
    best: Option<(f64, Vec<f64>, f64)>, // (error, w, t)
    steps: u32,
    stopped: bool,
}

fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(seed ^ splitmix64((a << 32) ^ b ^ 0x5be1_f00d))
}

fn run_restart(
    train: &LabeledDataset,
    scorer: &ValScorer,
    grid: &[f64],
    init_w: &[f64],
    eps: f64,
    early_stop: &dyn Fn(&[f64], f64) -> bool,
    cfg: &WalkConfig,
    restart: u32,
    stop: StopFlag,
) -> Result<RestartOutcome> {
    let mut w = init_w.to_vec();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut steps = 0;
    let mut stopped = false;
    let consider = |w: &[f64], best: &mut Option<(f64, Vec<f64>, f64)>| -> (f64, f64) {
        let (t, err) = scorer.best_threshold(w, grid);
        if best.as_ref().map_or(true, |b| err < b.0) {
            *best = Some((err, w.to_vec(), t));
        }
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        let (tn, errn) = scorer.best_threshold(&neg, grid);
        if best.as_ref().map_or(true, |b| errn < b.0) {
            *best = Some((errn, neg, tn));
        }
        (t, err)
    };
    let (mut cur_t, _) = consider(&w, &mut best);
    for step in 0..cfg.t_steps {
        if stop() {
            stopped = true;
            break;
        }
        if early_stop(&w, cur_t) {
            break;
        }
        let space = candidate_subspace(train, &w, eps, &cfg.chow)?;
        if space.dim() == 0 {
            break;
        }
        let mut v = random_unit_in(&space, mix3(cfg.seed, restart as u64, step as u64))?;
        // re-orthogonalize against w; subspace construction already keeps
        // columns in w-perp, this only strips float residue
        let inner = dot(&v, &w);
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi -= inner * wi);
        let vnorm = l2_norm(&v);
        if vnorm < 1e-9 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        let lambda = cfg
            .lambda
            .unwrap_or_else(|| ((eps * eps * eps).max(vnorm) / 2.0).min(0.25));
        w = update_direction(&w, &v, lambda)?;
        steps += 1;
        let (t, _) = consider(&w, &mut best);
        cur_t = t;
    }
    Ok(RestartOutcome { best, steps, stopped })
}

/// Algorithm: restarts of the biased random walk, validation-argmin
/// selection over all recorded directions and thresholds.
///
/// `delta` is recorded for reporting; the restart budget that realizes the
/// failure probability is configured explicitly (the theoretical count is
/// astronomically conservative).
pub fn learn_high_noise(
    source: DataSource,
    eps: f64,
    _delta: f64,
    cfg: &WalkConfig,
    stop: StopFlag,
) -> Result<WalkReport> {
    assert!(eps > 0.0 && eps <= 0.5, "eps must lie in (0, 1/2]");
    let (train, val, instance) = match source {
        DataSource::Instance(inst) => (
            sample(inst, cfg.n, splitmix64(cfg.seed ^ 0x7261_1097)),
            sample(inst, cfg.n_val, splitmix64(cfg.seed ^ 0x7261_1098)),
            Some(inst),
        ),
        DataSource::Fixed(data) => {
            let cut = data.len() * 4 / 5;
            assert!(cut >= 1 && cut < data.len(), "dataset too small to split");
            (data.slice(0, cut), data.slice(cut, data.len()), None)
        }
    };
    let scorer = ValScorer::new(val);
    let grid = threshold_grid(eps);

    let sigma = cfg.chow.sigma.unwrap_or_else(|| (eps * eps * eps).max(0.05));
    let chow1 = estimate_chow(&train, 1)?;
    let init_w: Vec<f64> = if l2_norm(&chow1.values) > sigma {
        let norm = l2_norm(&chow1.values);
        chow1.values.iter().map(|v| v / norm).collect()
    } else {
        let mut e1 = vec![0.0; train.d];
        e1[0] = 1.0;
        e1
    };

    // early stop once the hypothesis is provably good enough: excess when
    // the instance is available, otherwise raw error with OPT floored at 0
    let seed = cfg.seed;
    let scorer_ref = &scorer;
    let early_stop = move |w: &[f64], t: f64| -> bool {
        let h = Hypothesis::Halfspace(Halfspace::new(w.to_vec(), t).expect("walk keeps w unit"));
        match instance {
            Some(inst) => {
                let est = excess_error(&h, inst, 20_000, splitmix64(seed ^ 0x6573_7470));
                est.value <= eps / 2.0
            }
            None => scorer_ref.error_at(w, t) <= eps / 2.0,
        }
    };

    let run_one = |r: u32| {
        run_restart(&train, &scorer, &grid, &init_w, eps, &early_stop, cfg, r, stop)
    };
    #[cfg(feature = "std")]
    let outcomes: Result<Vec<RestartOutcome>> =
        (0..cfg.restarts).into_par_iter().map(run_one).collect();
    #[cfg(not(feature = "std"))]
    let outcomes: Result<Vec<RestartOutcome>> = (0..cfg.restarts).map(run_one).collect();
    let outcomes = outcomes?;

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut steps_used = 0;
    let mut partial = false;
    let mut restarts_used = 0;
    for o in &outcomes {
        if o.steps > 0 || o.best.is_some() {
            restarts_used += 1;
        }
        steps_used += o.steps;
        partial |= o.stopped;
        if let Some((err, w, t)) = &o.best {
            if best.as_ref().map_or(true, |b| *err < b.0) {
                best = Some((*err, w.clone(), *t));
            }
        }
    }
    match best {
        Some((err, w, t)) => Ok(WalkReport {
            hypothesis: Halfspace::new(w, t)?,
            validation_error: err,
            restarts_used,
            steps_used,
            partial,
        }),
        None => Err(Error::BudgetExceeded),
    }
}
