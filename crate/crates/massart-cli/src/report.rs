//! Report envelopes: every artifact embeds the seed, a hash of the
//! configuration that produced it, and the source revision.

use serde::Serialize;

/// FNV-1a over the canonical JSON encoding of the configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let text = serde_json::to_string(cfg).expect("serializable config");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

/// `git describe --always --dirty`, or "unknown" outside a checkout.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| String::from("unknown"))
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub seed: u64,
    pub config_hash: String,
    pub git_describe: String,
    pub wall_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct LearnReport {
    pub w: Vec<f64>,
    pub t: f64,
    /// Monte Carlo excess risk against the generating instance; absent when
    /// the run came from a bare dataset with no instance description.
    pub excess_estimate: Option<f64>,
    pub excess_std_error: Option<f64>,
    pub validation_error: f64,
    pub restarts_used: u32,
    pub steps_used: usize,
    /// True when the oracle declared the final iterate certificate-free
    /// (bounded learner only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped_not_found: Option<bool>,
    /// True when the wall-clock budget cut the run short.
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    #[serde(flatten)]
    pub meta: Meta,
}

#[derive(Debug, Serialize)]
pub struct GenSidecar<T: Serialize> {
    pub instance: T,
    pub n: usize,
    pub opt_estimate: f64,
    pub opt_std_error: f64,
    #[serde(flatten)]
    pub meta: Meta,
}
