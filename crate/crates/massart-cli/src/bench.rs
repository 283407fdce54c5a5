//! Benchmark harness: runs learner scenarios and appends rows to a CSV
//! whose column set never changes, so runs from different days line up.

use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use massart_core::instance::{excess_error, splitmix64, Hypothesis, MassartInstance};
use massart_core::ogd::{learn_bounded, OgdConfig};
use massart_core::walk::{learn_high_noise, DataSource, WalkConfig, NO_STOP};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// "high" for the random-walk learner, "bounded" for the OGD learner.
    pub learner: String,
    pub instance: MassartInstance,
    pub eps: f64,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub k: Option<u32>,
    pub rho: Option<f64>,
    pub restarts: Option<u32>,
    pub t_steps: Option<usize>,
}

pub const COLUMNS: [&str; 6] = ["scenario", "seed", "learner", "n", "excess", "wall_ms"];

pub struct BenchRow {
    pub scenario: String,
    pub seed: u64,
    pub learner: String,
    pub n: usize,
    pub excess: f64,
    pub wall_ms: u64,
}

/// Runs every seed of one scenario. Excess error is measured against the
/// scenario's own instance by Monte Carlo on a fresh stream.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(sc.seeds.len());
    for &seed in &sc.seeds {
        let start = Instant::now();
        let hypothesis = match sc.learner.as_str() {
            "high" => {
                let cfg = WalkConfig {
                    n: sc.n,
                    restarts: sc.restarts.unwrap_or(32),
                    t_steps: sc.t_steps.map_or(20, |t| t as u32),
                    seed,
                    ..WalkConfig::default()
                };
                learn_high_noise(DataSource::Instance(&sc.instance), sc.eps, 0.05, &cfg, NO_STOP)?
                    .hypothesis
            }
            "bounded" => {
                let cfg = OgdConfig {
                    k: sc.k.unwrap_or(5),
                    rho: sc.rho,
                    t_steps: sc.t_steps,
                    n: sc.n,
                    seed,
                    ..OgdConfig::default()
                };
                learn_bounded(DataSource::Instance(&sc.instance), sc.eps, 0.05, &cfg, NO_STOP)?
                    .hypothesis
            }
            other => bail!("unknown learner {other:?}; expected \"high\" or \"bounded\""),
        };
        let wall_ms = start.elapsed().as_millis() as u64;
        let excess = excess_error(
            &Hypothesis::Halfspace(hypothesis),
            &sc.instance,
            200_000,
            splitmix64(seed ^ 0x6bc1_bee2),
        );
        rows.push(BenchRow {
            scenario: sc.name.clone(),
            seed,
            learner: sc.learner.clone(),
            n: sc.n,
            excess: excess.value,
            wall_ms,
        });
    }
    Ok(rows)
}

/// Appends rows to `path`, writing the header only when the file is new or
/// empty. Repeated invocations accumulate rows under a single header.
pub fn append_rows(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let need_header = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("open {}", path.display()))?;
    let mut out = BufWriter::new(file);
    if need_header {
        writeln!(out, "{}", COLUMNS.join(","))?;
    }
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6e},{}",
            r.scenario, r.seed, r.learner, r.n, r.excess, r.wall_ms
        )?;
    }
    out.flush()?;
    Ok(())
}
