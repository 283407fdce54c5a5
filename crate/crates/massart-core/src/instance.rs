//! Target halfspaces, Massart noise models, samplers, and error estimators.
//!
//! An instance is a joint distribution on (x, y): x is standard Gaussian in
//! d dimensions, f(x) = sign(w* . x - t*) is the target, and the label is
//! y = f(x) flipped independently with probability eta(x) <= 1/2. Noise
//! profiles depend only on w* . x (plus one hypothesis-dependent variant),
//! so beta(x) = 1 - 2 eta(x) is a one-dimensional profile along the target
//! direction.
//!
//! The best attainable error is OPT = E[eta(x)]; the quantity learners are
//! judged on is the excess E[beta(x) 1{h(x) != f(x)}] = Pr[h != y] - OPT.

use crate::error::{Error, Result};
use crate::gauss::norm_cdf;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// sign with sign(0) = +1, used for both targets and hypotheses.
pub fn sign(u: f64) -> i8 {
    if u >= 0.0 {
        1
    } else {
        -1
    }
}

/// Halfspace x -> sign(w . x - t) with a unit-norm w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub w: Vec<f64>,
    pub t: f64,
}

impl Halfspace {
    /// Requires ||w|| = 1 within 1e-12.
    pub fn new(w: Vec<f64>, t: f64) -> Result<Self> {
        let norm = l2_norm(&w);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("halfspace direction norm {norm} is not 1")));
        }
        Ok(Self { w, t })
    }

    /// Normalizes an arbitrary nonzero direction; the threshold is rescaled
    /// so the classifier is unchanged.
    pub fn from_direction(w: Vec<f64>, t: f64) -> Result<Self> {
        let norm = l2_norm(&w);
        if norm == 0.0 {
            return Err(Error::Invalid(String::from("zero direction has no halfspace form")));
        }
        Ok(Self { w: w.iter().map(|v| v / norm).collect(), t: t / norm })
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) - self.t
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        sign(self.margin(x))
    }

    /// min(Pr[f = +1], Pr[f = -1]) under the standard Gaussian.
    pub fn bias(&self) -> f64 {
        let p_plus = norm_cdf(-self.t);
        p_plus.min(1.0 - p_plus)
    }
}

/// A halfspace or one of the two constant classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Halfspace(Halfspace),
    Constant { sign: i8 },
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> i8 {
        match self {
            Hypothesis::Halfspace(h) => h.predict(x),
            Hypothesis::Constant { sign } => *sign,
        }
    }
}

/// Noise profile: how eta(x) is produced from the target margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// eta(x) = eta everywhere.
    Constant { eta: f64 },
    /// eta_hi on the slab |w*.x - t* - center| <= halfwidth, eta_lo outside.
    BandHigh { eta_lo: f64, eta_hi: f64, center: f64, halfwidth: f64 },
    /// beta(x) = beta where the given hypothesis disagrees with the target,
    /// 1 elsewhere: all the noise budget is spent against one competitor.
    WorstCaseVs { h: Hypothesis, beta: f64 },
    /// beta as a piecewise-constant function of z = w*.x: beta_values[i]
    /// applies on (grid[i-1], grid[i]], the first and last values extend to
    /// the infinite tails, so beta_values has grid length + 1 entries.
    Tabulated { grid: Vec<f64>, beta_values: Vec<f64> },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Constant { eta } => {
                if !(0.0..=0.5).contains(eta) {
                    return Err(Error::Invalid(format!("constant eta {eta} outside [0, 1/2]")));
                }
            }
            NoiseSpec::BandHigh { eta_lo, eta_hi, halfwidth, .. } => {
                for eta in [eta_lo, eta_hi] {
                    if !(0.0..=0.5).contains(eta) {
                        return Err(Error::Invalid(format!("band eta {eta} outside [0, 1/2]")));
                    }
                }
                if *halfwidth < 0.0 {
                    return Err(Error::Invalid(String::from("negative band halfwidth")));
                }
            }
            NoiseSpec::WorstCaseVs { beta, .. } => {
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(Error::Invalid(format!("worst-case beta {beta} outside (0, 1]")));
                }
            }
            NoiseSpec::Tabulated { grid, beta_values } => {
                if beta_values.len() != grid.len() + 1 {
                    return Err(Error::Invalid(String::from(
                        "tabulated profile needs one more value than grid points",
                    )));
                }
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invalid(String::from("tabulated grid not strictly increasing")));
                }
                if beta_values.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    return Err(Error::Invalid(String::from("tabulated beta outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Value of a piecewise-constant table at z; cell i covers (grid[i-1], grid[i]].
pub fn piecewise_value(grid: &[f64], values: &[f64], z: f64) -> f64 {
    let idx = grid.partition_point(|&g| g < z);
    values[idx]
}

/// A joint distribution on (x, y) per Def-style Massart semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassartInstance {
    pub d: usize,
    #[serde(flatten)]
    pub target: Halfspace,
    pub noise: NoiseSpec,
}

impl MassartInstance {
    pub fn new(target: Halfspace, noise: NoiseSpec, d: usize) -> Result<Self> {
        if target.w.len() != d {
            return Err(Error::Invalid(format!(
                "target dimension {} does not match d = {d}",
                target.w.len()
            )));
        }
        noise.validate()?;
        Ok(Self { d, target, noise })
    }

    /// beta(x) = 1 - 2 eta(x).
    pub fn beta_at(&self, x: &[f64]) -> f64 {
        match &self.noise {
            NoiseSpec::Constant { eta } => 1.0 - 2.0 * eta,
            NoiseSpec::BandHigh { eta_lo, eta_hi, center, halfwidth } => {
                let arg = self.target.margin(x) - center;
                let eta = if arg.abs() <= *halfwidth { *eta_hi } else { *eta_lo };
                1.0 - 2.0 * eta
            }
            NoiseSpec::WorstCaseVs { h, beta } => {
                if h.predict(x) != self.target.predict(x) {
                    *beta
                } else {
                    1.0
                }
            }
            NoiseSpec::Tabulated { grid, beta_values } => {
                let z = dot(&self.target.w, x);
                piecewise_value(grid, beta_values, z)
            }
        }
    }

    pub fn eta_at(&self, x: &[f64]) -> f64 {
        0.5 * (1.0 - self.beta_at(x))
    }
}

/// Feature matrix (row-major n x d) plus labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub d: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<i8>) -> Result<Self> {
        if d == 0 || ys.is_empty() || xs.len() != d * ys.len() {
            return Err(Error::Invalid(String::from("dataset shape mismatch")));
        }
        if ys.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::Invalid(String::from("labels must be -1 or +1")));
        }
        Ok(Self { d, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    /// Rows [lo, hi) as an owned dataset.
    pub fn slice(&self, lo: usize, hi: usize) -> LabeledDataset {
        LabeledDataset {
            d: self.d,
            xs: self.xs[lo * self.d..hi * self.d].to_vec(),
            ys: self.ys[lo..hi].to_vec(),
        }
    }

    /// Empirical Pr[h(x) != y].
    pub fn error_of(&self, h: &Hypothesis) -> f64 {
        let wrong = (0..self.len())
            .filter(|&i| h.predict(self.x(i)) != self.ys[i])
            .count();
        wrong as f64 / self.len() as f64
    }
}

/// One splitmix64 step, used to derive independent stream seeds.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for a given seed and task index.
pub fn stream_rng(seed: u64, task: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(task)))
}

/// Draw n labeled samples from the instance. Identical (inst, n, seed)
/// arguments produce identical bytes.
pub fn sample(inst: &MassartInstance, n: usize, seed: u64) -> LabeledDataset {
    assert!(n >= 1, "sample needs n >= 1");
    let mut rng = stream_rng(seed, 0);
    let mut xs = Vec::with_capacity(n * inst.d);
    let mut ys = Vec::with_capacity(n);
    let mut x = alloc::vec![0.0f64; inst.d];
    for _ in 0..n {
        for slot in x.iter_mut() {
            *slot = rng.sample(StandardNormal);
        }
        let clean = inst.target.predict(&x);
        let eta = inst.eta_at(&x);
        let flip = rng.gen::<f64>() < eta;
        xs.extend_from_slice(&x);
        ys.push(if flip { -clean } else { clean });
    }
    LabeledDataset { d: inst.d, xs, ys }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn mc_mean(n: usize, mut f: impl FnMut(usize) -> f64) -> McEstimate {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..n {
        let v = f(i);
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    McEstimate { value: mean, std_error: libm::sqrt(var / n as f64) }
}

/// OPT = E[eta(x)]. Constant and BandHigh profiles short-circuit to closed
/// forms (standard error 0); other variants are Monte-Carlo estimates.
pub fn opt_error(inst: &MassartInstance, n_mc: usize, seed: u64) -> McEstimate {
    match &inst.noise {
        NoiseSpec::Constant { eta } => McEstimate { value: *eta, std_error: 0.0 },
        NoiseSpec::BandHigh { eta_lo, eta_hi, center, halfwidth } => {
            // w*.x - t* - center is N(-t*-center, 1)
            let m = inst.target.t + center;
            let p_band = norm_cdf(m + halfwidth) - norm_cdf(m - halfwidth);
            McEstimate { value: eta_lo + (eta_hi - eta_lo) * p_band, std_error: 0.0 }
        }
        _ => {
            assert!(n_mc >= 1000, "opt_error Monte Carlo needs n_mc >= 1e3");
            let mut rng = stream_rng(seed, 1);
            let mut x = alloc::vec![0.0f64; inst.d];
            mc_mean(n_mc, |_| {
                for slot in x.iter_mut() {
                    *slot = rng.sample(StandardNormal);
                }
                inst.eta_at(&x)
            })
        }
    }
}

/// Excess error E[beta(x) 1{h(x) != f(x)}] = Pr[h != y] - OPT, by Monte Carlo.
pub fn excess_error(h: &Hypothesis, inst: &MassartInstance, n_mc: usize, seed: u64) -> McEstimate {
    assert!(n_mc >= 1000, "excess_error Monte Carlo needs n_mc >= 1e3");
    let mut rng = stream_rng(seed, 2);
    let mut x = alloc::vec![0.0f64; inst.d];
    mc_mean(n_mc, |_| {
        for slot in x.iter_mut() {
            *slot = rng.sample(StandardNormal);
        }
        if h.predict(&x) != inst.target.predict(&x) {
            inst.beta_at(&x)
        } else {
            0.0
        }
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit(d: usize, axis: usize) -> Vec<f64> {
        let mut w = vec![0.0; d];
        w[axis] = 1.0;
        w
    }

    fn inst_const(d: usize, t: f64, eta: f64) -> MassartInstance {
        MassartInstance::new(
            Halfspace::new(unit(d, 0), t).unwrap(),
            NoiseSpec::Constant { eta },
            d,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_labels_match_target() {
        let inst = inst_const(3, 0.4, 0.0);
        let data = sample(&inst, 2000, 7);
        for i in 0..data.len() {
            assert_eq!(data.ys[i], inst.target.predict(data.x(i)));
        }
    }

    #[test]
    fn pure_noise_is_uncorrelated() {
        let inst = inst_const(2, 0.0, 0.5);
        let n = 100_000;
        let data = sample(&inst, n, 11);
        let mut corr = [0.0f64; 2];
        for i in 0..n {
            for j in 0..2 {
                corr[j] += data.ys[i] as f64 * data.x(i)[j];
            }
        }
        for c in corr {
            assert!((c / n as f64).abs() < 4.0 / libm::sqrt(n as f64), "corr {c}");
        }
    }

    #[test]
    fn constant_noise_flip_rate() {
        let inst = inst_const(3, 0.0, 0.3);
        let n = 100_000;
        let data = sample(&inst, n, 3);
        let flips = (0..n)
            .filter(|&i| data.ys[i] != inst.target.predict(data.x(i)))
            .count() as f64
            / n as f64;
        let sigma = libm::sqrt(0.3 * 0.7 / n as f64);
        assert!((flips - 0.3).abs() <= 3.0 * sigma, "flip rate {flips}");
    }

    #[test]
    fn opt_error_closed_forms() {
        let inst = inst_const(2, 1.0, 0.3);
        assert_eq!(opt_error(&inst, 1000, 0).value, 0.3);
        let band = MassartInstance::new(
            Halfspace::new(unit(2, 0), 0.0).unwrap(),
            NoiseSpec::BandHigh { eta_lo: 0.1, eta_hi: 0.5, center: 0.0, halfwidth: 0.25 },
            2,
        )
        .unwrap();
        let opt = opt_error(&band, 1000, 0).value;
        assert!((opt - 0.17896).abs() < 5e-5, "opt {opt}");
        assert_eq!(opt_error(&inst_const(2, 0.0, 0.0), 1000, 0).value, 0.0);
    }

    #[test]
    fn excess_error_basics() {
        let inst = inst_const(3, 0.2, 0.25);
        let same = excess_error(&Hypothesis::Halfspace(inst.target.clone()), &inst, 5000, 1);
        assert_eq!(same.value, 0.0);
        let flipped = Hypothesis::Halfspace(
            Halfspace::new(inst.target.w.iter().map(|v| -v).collect(), -0.2).unwrap(),
        );
        let noiseless = inst_const(3, 0.2, 0.0);
        let opp = excess_error(&flipped, &noiseless, 5000, 1);
        assert_eq!(opp.value, 1.0);
    }

    #[test]
    fn disagreement_angle_over_pi() {
        // homogeneous halfspaces at angle theta disagree w.p. theta/pi
        let theta = 0.6f64;
        let inst = inst_const(2, 0.0, 0.0);
        let h = Hypothesis::Halfspace(
            Halfspace::new(vec![libm::cos(theta), libm::sin(theta)], 0.0).unwrap(),
        );
        let est = excess_error(&h, &inst, 200_000, 5);
        let truth = theta / core::f64::consts::PI;
        assert!((est.value - truth).abs() <= 3.0 * est.std_error.max(1e-4), "{} vs {truth}", est.value);
    }

    #[test]
    fn bias_values() {
        let d = 2;
        assert_eq!(Halfspace::new(unit(d, 0), 0.0).unwrap().bias(), 0.5);
        let b = Halfspace::new(unit(d, 0), 2.0).unwrap().bias();
        assert!((b - 0.022750131948179).abs() < 1e-12);
        let bneg = Halfspace::new(unit(d, 0), -2.0).unwrap().bias();
        assert!((b - bneg).abs() < 1e-15);
    }

    #[test]
    fn seed_determinism() {
        let inst = inst_const(4, 0.5, 0.2);
        let a = sample(&inst, 500, 99);
        let b = sample(&inst, 500, 99);
        assert_eq!(a, b);
        let c = sample(&inst, 500, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn marginals_are_standard() {
        let inst = inst_const(3, 0.0, 0.1);
        let n = 50_000;
        let data = sample(&inst, n, 2);
        for j in 0..3 {
            let mean: f64 = (0..n).map(|i| data.x(i)[j]).sum::<f64>() / n as f64;
            let var: f64 = (0..n).map(|i| (data.x(i)[j] - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 4.0 / libm::sqrt(n as f64), "mean {mean}");
            assert!((var - 1.0).abs() <= 8.0 / libm::sqrt(n as f64), "var {var}");
        }
    }

    #[test]
    fn conditional_mean_matches_f_beta() {
        // bucket by margin sign and band membership; E[y | bucket] = f * beta
        let inst = MassartInstance::new(
            Halfspace::new(unit(2, 0), 0.0).unwrap(),
            NoiseSpec::BandHigh { eta_lo: 0.05, eta_hi: 0.45, center: 0.0, halfwidth: 0.5 },
            2,
        )
        .unwrap();
        let n = 200_000;
        let data = sample(&inst, n, 17);
        let mut sums = [0.0f64; 4];
        let mut counts = [0usize; 4];
        for i in 0..n {
            let x = data.x(i);
            let m = inst.target.margin(x);
            let bucket = (if m >= 0.0 { 0 } else { 2 }) + usize::from(m.abs() <= 0.5);
            sums[bucket] += data.ys[i] as f64;
            counts[bucket] += 1;
        }
        let expect = [0.9, 0.1, -0.9, -0.1];
        for b in 0..4 {
            let mean = sums[b] / counts[b] as f64;
            let se = 1.0 / libm::sqrt(counts[b] as f64);
            assert!((mean - expect[b]).abs() <= 4.0 * se, "bucket {b}: {mean} vs {}", expect[b]);
        }
    }

    #[test]
    fn excess_error_nonnegative_for_random_hypotheses() {
        let inst = MassartInstance::new(
            Halfspace::new(unit(3, 0), 0.3).unwrap(),
            NoiseSpec::BandHigh { eta_lo: 0.2, eta_hi: 0.49, center: 0.1, halfwidth: 0.4 },
            3,
        )
        .unwrap();
        let mut rng = stream_rng(4242, 0);
        for trial in 0..10u64 {
            let w: Vec<f64> = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let t: f64 = rng.sample::<f64, _>(StandardNormal);
            let h = Hypothesis::Halfspace(Halfspace::from_direction(w, t).unwrap());
            let est = excess_error(&h, &inst, 20_000, trial);
            assert!(est.value >= -4.0 * est.std_error, "trial {trial}: {}", est.value);
        }
    }

    #[test]
    fn tabulated_profile_lookup() {
        let noise = NoiseSpec::Tabulated {
            grid: vec![-1.0, 0.0, 1.0],
            beta_values: vec![1.0, 0.5, 0.25, 1.0],
        };
        noise.validate().unwrap();
        let inst = MassartInstance::new(Halfspace::new(unit(2, 0), 0.0).unwrap(), noise, 2).unwrap();
        assert_eq!(inst.beta_at(&[-2.0, 0.0]), 1.0);
        assert_eq!(inst.beta_at(&[-0.5, 3.0]), 0.5);
        assert_eq!(inst.beta_at(&[0.5, 0.0]), 0.25);
        assert_eq!(inst.beta_at(&[2.0, 0.0]), 1.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(NoiseSpec::Constant { eta: 0.6 }.validate().is_err());
        assert!(NoiseSpec::Tabulated { grid: vec![1.0, 1.0], beta_values: vec![1.0, 1.0, 1.0] }
            .validate()
            .is_err());
        assert!(Halfspace::new(vec![0.5, 0.5], 0.0).is_err());
        let h = Halfspace::from_direction(vec![3.0, 4.0], 5.0).unwrap();
        assert!((l2_norm(&h.w) - 1.0).abs() < 1e-15);
        assert!((h.t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = MassartInstance::new(
            Halfspace::new(unit(3, 1), 0.7).unwrap(),
            NoiseSpec::BandHigh { eta_lo: 0.1, eta_hi: 0.5, center: 0.0, halfwidth: 0.3 },
            3,
        )
        .unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        assert!(json.contains("\"variant\""), "{json}");
        let back: MassartInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, back);
    }
}
