//! Command-line front end: instance generation, the two learners,
//! certification, hard-instance construction, verification, benchmarks.
//!
//! Exit codes: 0 success, 1 failed precondition (single-line stderr),
//! 2 wall-clock budget exhausted (best-so-far outputs are still written).

mod bench;
mod budget;
mod io;
mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use massart_core::certificate::certificate_oracle;
use massart_core::hard::{lift_high_noise, solve_moment_matching, solve_table_family, MomentCfg};
use massart_core::instance::{excess_error, opt_error, sample, Hypothesis, MassartInstance};
use massart_core::ogd::{learn_bounded, OgdConfig};
use massart_core::walk::{learn_high_noise, DataSource, WalkConfig};

use budget::Deadline;
use report::{config_hash, git_describe, GenSidecar, LearnReport, Meta};

#[derive(Parser)]
#[command(name = "massart", version, about = "Halfspace learning under Massart noise")]
struct Cli {
    /// Wall-clock budget in seconds; exhausted runs exit 2 with
    /// best-so-far outputs written.
    #[arg(long, global = true, default_value_t = 600.0)]
    budget: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a labeled dataset from an instance config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset CSV path; a sidecar JSON with the instance echo and an
        /// OPT estimate lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the high-noise random-walk learner.
    LearnHigh {
        #[command(flatten)]
        common: LearnCommon,
        #[arg(long)]
        restarts: Option<u32>,
        #[arg(long)]
        t_steps: Option<u32>,
    },
    /// Run the certificate-driven online-gradient-descent learner.
    LearnBounded {
        #[command(flatten)]
        common: LearnCommon,
        #[arg(long, default_value_t = 5)]
        k: u32,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        t_steps: Option<usize>,
    },
    /// Search for a misclassification certificate against a fixed affine
    /// hypothesis.
    Certify {
        #[arg(long)]
        data: PathBuf,
        /// JSON {w, t} for the hypothesis ell(x) = w.x - t.
        #[arg(long)]
        ell: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Certificate JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a moment-matching noise table, or lift a table family to a
    /// high-noise dataset in d+1 dimensions.
    Hardgen(HardgenArgs),
    /// Run a module verification suite and write a JUnit-style XML report.
    Verify {
        #[arg(long, value_parser = ["signpoly", "chow", "certificate", "ogd", "hard", "all"])]
        suite: String,
        #[arg(long, default_value = "verify.xml")]
        out: PathBuf,
    },
    /// Run learner benchmark scenarios and append rows to a stable CSV.
    Bench {
        #[arg(long, num_args = 1.., required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct LearnCommon {
    /// Labeled dataset CSV (mutually exclusive with --config).
    #[arg(long, conflicts_with = "config")]
    data: Option<PathBuf>,
    /// Instance JSON to sample from; enables the excess-error estimate.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct HardgenArgs {
    #[command(subcommand)]
    lift: Option<HardgenSub>,
    /// Threshold of the hidden halfspace sign(z - tstar).
    #[arg(long)]
    tstar: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    betalo: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum HardgenSub {
    /// Lift a table family over thresholds in [t0, t0+zeta] to a labeled
    /// dataset in d+1 dimensions.
    Lift {
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        betalo: f64,
        /// Ambient dimension of the hidden direction; output rows have d+1
        /// feature columns.
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    budget::configure_threads();
    let cli = Cli::parse();
    let deadline = Deadline::new(cli.budget);
    match run(cli.cmd, &deadline) {
        Ok(exhausted) => {
            if exhausted {
                eprintln!("budget: wall-clock limit reached; outputs hold best-so-far results");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Ok(true) means the budget ran out and outputs are partial.
fn run(cmd: Cmd, deadline: &Deadline) -> Result<bool> {
    match cmd {
        Cmd::Gen { config, n, seed, out } => cmd_gen(&config, n, seed, &out, deadline),
        Cmd::LearnHigh { common, restarts, t_steps } => {
            cmd_learn_high(&common, restarts, t_steps, deadline)
        }
        Cmd::LearnBounded { common, k, rho, t_steps } => {
            cmd_learn_bounded(&common, k, rho, t_steps, deadline)
        }
        Cmd::Certify { data, ell, k, lambda, out } => {
            cmd_certify(&data, &ell, k, lambda, out.as_deref(), deadline)
        }
        Cmd::Hardgen(args) => cmd_hardgen(args, deadline),
        Cmd::Verify { suite, out } => cmd_verify(&suite, &out),
        Cmd::Bench { scenario, out } => cmd_bench(&scenario, &out, deadline),
    }
}

fn cmd_gen(config: &Path, n: usize, seed: u64, out: &Path, deadline: &Deadline) -> Result<bool> {
    let inst = io::read_instance(config)?;
    let data = sample(&inst, n, seed);
    io::write_csv(out, &data)?;
    let opt = opt_error(&inst, 200_000, massart_core::instance::splitmix64(seed ^ 0x5851_f42d));
    let sidecar = GenSidecar {
        instance: &inst,
        n,
        opt_estimate: opt.value,
        opt_std_error: opt.std_error,
        meta: Meta {
            seed,
            config_hash: config_hash(&inst),
            git_describe: git_describe(),
            wall_ms: deadline.elapsed_ms(),
        },
    };
    io::write_json(&out.with_extension("json"), &sidecar)?;
    Ok(deadline.expired())
}

/// Loads the training source shared by both learn subcommands. The
/// instance, when present, is kept for excess-error estimation.
fn load_source(common: &LearnCommon) -> Result<(Option<MassartInstance>, Option<massart_core::instance::LabeledDataset>)> {
    match (&common.data, &common.config) {
        (Some(path), None) => Ok((None, Some(io::read_csv(path)?))),
        (None, Some(path)) => Ok((Some(io::read_instance(path)?), None)),
        (None, None) => bail!("one of --data or --config is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn excess_of(
    inst: Option<&MassartInstance>,
    h: &massart_core::instance::Halfspace,
    seed: u64,
) -> (Option<f64>, Option<f64>) {
    match inst {
        Some(inst) => {
            let e = excess_error(
                &Hypothesis::Halfspace(h.clone()),
                inst,
                200_000,
                massart_core::instance::splitmix64(seed ^ 0x1f83_d9ab),
            );
            (Some(e.value), Some(e.std_error))
        }
        None => (None, None),
    }
}

fn cmd_learn_high(
    common: &LearnCommon,
    restarts: Option<u32>,
    t_steps: Option<u32>,
    deadline: &Deadline,
) -> Result<bool> {
    let (inst, fixed) = load_source(common)?;
    let mut cfg = WalkConfig { seed: common.seed, ..WalkConfig::default() };
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(r) = restarts {
        cfg.restarts = r;
    }
    if let Some(t) = t_steps {
        cfg.t_steps = t;
    }
    let source = match &fixed {
        Some(data) => DataSource::Fixed(data),
        None => DataSource::Instance(inst.as_ref().unwrap()),
    };
    let stop = deadline.stop_flag();
    let walk = learn_high_noise(source, common.eps, 0.05, &cfg, &stop)?;
    let (excess_estimate, excess_std_error) = excess_of(inst.as_ref(), &walk.hypothesis, common.seed);
    let report = LearnReport {
        w: walk.hypothesis.w.clone(),
        t: walk.hypothesis.t,
        excess_estimate,
        excess_std_error,
        validation_error: walk.validation_error,
        restarts_used: walk.restarts_used,
        steps_used: walk.steps_used as usize,
        stopped_not_found: None,
        partial: walk.partial,
        trace_path: None,
        meta: Meta {
            seed: common.seed,
            config_hash: config_hash(&serde_json::json!({
                "learner": "high", "eps": common.eps, "n": cfg.n,
                "restarts": cfg.restarts, "t_steps": cfg.t_steps,
            })),
            git_describe: git_describe(),
            wall_ms: deadline.elapsed_ms(),
        },
    };
    io::write_json(&common.out, &report)?;
    Ok(walk.partial)
}

fn cmd_learn_bounded(
    common: &LearnCommon,
    k: u32,
    rho: Option<f64>,
    t_steps: Option<usize>,
    deadline: &Deadline,
) -> Result<bool> {
    let (inst, fixed) = load_source(common)?;
    let mut cfg = OgdConfig { k, rho, t_steps, seed: common.seed, ..OgdConfig::default() };
    if let Some(n) = common.n {
        cfg.n = n;
    }
    let source = match &fixed {
        Some(data) => DataSource::Fixed(data),
        None => DataSource::Instance(inst.as_ref().unwrap()),
    };
    let stop = deadline.stop_flag();
    let ogd = learn_bounded(source, common.eps, 0.05, &cfg, &stop)?;
    let trace_path = common.out.with_extension("trace.json");
    io::write_json(&trace_path, &ogd.trace)?;
    let (excess_estimate, excess_std_error) = excess_of(inst.as_ref(), &ogd.hypothesis, common.seed);
    let report = LearnReport {
        w: ogd.hypothesis.w.clone(),
        t: ogd.hypothesis.t,
        excess_estimate,
        excess_std_error,
        validation_error: ogd.validation_error,
        restarts_used: 1,
        steps_used: ogd.steps_used,
        stopped_not_found: Some(ogd.stopped_not_found),
        partial: ogd.partial,
        trace_path: Some(trace_path.display().to_string()),
        meta: Meta {
            seed: common.seed,
            config_hash: config_hash(&serde_json::json!({
                "learner": "bounded", "eps": common.eps, "n": cfg.n,
                "k": k, "rho": rho, "t_steps": t_steps,
            })),
            git_describe: git_describe(),
            wall_ms: deadline.elapsed_ms(),
        },
    };
    io::write_json(&common.out, &report)?;
    Ok(ogd.partial)
}

fn cmd_certify(
    data: &Path,
    ell: &Path,
    k: u32,
    lambda: f64,
    out: Option<&Path>,
    deadline: &Deadline,
) -> Result<bool> {
    if lambda < 0.0 {
        bail!("--lambda must be nonnegative, got {lambda}");
    }
    let dataset = io::read_csv(data)?;
    let ell = io::read_ell(ell, dataset.d)?;
    let cfg = massart_core::certificate::CertificateConfig::default();
    let stop = deadline.stop_flag();
    let outcome = certificate_oracle(&dataset, &ell, k, lambda, &cfg, &stop)?;
    let value = match outcome.found() {
        Some(cert) => serde_json::to_value(cert)?,
        None => serde_json::json!({ "found": false }),
    };
    match out {
        Some(path) => io::write_json(path, &value)?,
        None => println!("{}", serde_json::to_string_pretty(&value)?),
    }
    Ok(deadline.expired())
}

fn cmd_hardgen(args: HardgenArgs, deadline: &Deadline) -> Result<bool> {
    match args.lift {
        Some(HardgenSub::Lift { t0, zeta, k, betalo, d, n, seed, out }) => {
            let family = solve_table_family(t0, zeta, k, betalo, &MomentCfg::default())?;
            let v = unit_direction(d);
            let data = lift_high_noise(&family, &v, d, n, seed);
            io::write_csv(&out, &data)?;
            let sidecar = serde_json::json!({
                "t0": t0, "zeta": zeta, "k": k, "beta_lo": betalo,
                "d": d, "hidden_direction": v, "n": n, "seed": seed,
                "max_residual": family.tables.iter().map(|t| t.residual).fold(0.0, f64::max),
                "git_describe": git_describe(),
                "wall_ms": deadline.elapsed_ms(),
            });
            io::write_json(&out.with_extension("json"), &sidecar)?;
        }
        None => {
            let (tstar, k, betalo, out) = match (args.tstar, args.k, args.betalo, args.out) {
                (Some(t), Some(k), Some(b), Some(o)) => (t, k, b, o),
                _ => bail!("hardgen requires --tstar, --k, --betalo and --out"),
            };
            let solve = solve_moment_matching(tstar, k, betalo, &MomentCfg::default())?;
            match solve.feasible() {
                Some(table) => io::write_json(&out, table)?,
                None => bail!(
                    "moment system infeasible at tstar {tstar}, k {k}, betalo {betalo}"
                ),
            }
        }
    }
    Ok(deadline.expired())
}

/// Deterministic unit direction with no zero coordinates.
fn unit_direction(d: usize) -> Vec<f64> {
    let v: Vec<f64> = (1..=d).map(|i| 1.0 + 0.1 * i as f64).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn cmd_verify(suite: &str, out: &Path) -> Result<bool> {
    let results = verify::run(suite);
    std::fs::write(out, verify::junit_xml(&results))
        .with_context(|| format!("write {}", out.display()))?;
    let failures = results.iter().filter(|r| r.failure.is_some()).count();
    println!("verify: {} checks, {failures} failures", results.len());
    if failures > 0 {
        bail!("{failures} verification checks failed; see {}", out.display());
    }
    Ok(false)
}

fn cmd_bench(scenarios: &[PathBuf], out: &Path, deadline: &Deadline) -> Result<bool> {
    for path in scenarios {
        if deadline.expired() {
            return Ok(true);
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("read {}", path.display()))?;
        let sc: bench::Scenario = serde_json::from_str(&text)
            .with_context(|| format!("parse scenario {}", path.display()))?;
        let rows = bench::run_scenario(&sc)?;
        bench::append_rows(out, &rows)?;
    }
    Ok(deadline.expired())
}
