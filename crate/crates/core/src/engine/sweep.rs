//! Monte Carlo sweeps over scenarios and mobile codebooks.

use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::sim::{run_resolved, EngineError, Outcome, TrialReport};
use crate::codebook::CodebookSpec;
use crate::io::{fixed3, fixed3_opt};
use crate::mobility::Scenario;

/// Caps the worker count of [`run_sweep`].
pub const THREADS_ENV: &str = "SILENT_TRACKER_THREADS";

/// Aggregate over the trials of one `(scenario, codebook)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub scenario: Scenario,
    pub codebook: String,
    pub trials: u64,
    #[serde(serialize_with = "fixed3")]
    pub success_rate: f64,
    #[serde(serialize_with = "fixed3")]
    pub soft_rate: f64,
    #[serde(serialize_with = "fixed3")]
    pub hard_rate: f64,
    #[serde(serialize_with = "fixed3")]
    pub fail_rate: f64,
    pub discovered: u64,
    #[serde(serialize_with = "fixed3_opt")]
    pub mean_latency_s: Option<f64>,
    #[serde(serialize_with = "fixed3_opt")]
    pub p95_latency_s: Option<f64>,
    #[serde(serialize_with = "fixed3_opt")]
    pub mean_alignment: Option<f64>,
    #[serde(serialize_with = "fixed3_opt")]
    pub mean_interruption_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub trials: u64,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, scenario: Scenario, codebook: &str) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.codebook == codebook)
    }
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Aggregates trial reports. The result depends only on the set of trials,
/// not on the order they are given in.
pub fn aggregate(scenario: Scenario, codebook: &str, reports: &[TrialReport]) -> SweepCell {
    let mut sorted: Vec<&TrialReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    let n = sorted.len() as f64;
    let rate = |pred: &dyn Fn(&TrialReport) -> bool| {
        if sorted.is_empty() {
            0.0
        } else {
            sorted.iter().filter(|r| pred(r)).count() as f64 / n
        }
    };
    let mut latencies: Vec<f64> = sorted.iter().filter_map(|r| r.discovery_latency_s).collect();
    let alignment: Vec<f64> = sorted.iter().filter_map(|r| r.alignment_ratio).collect();
    let interruption: Vec<f64> = sorted.iter().filter_map(|r| r.interruption_s).collect();
    let mean_latency_s = mean(&latencies);
    latencies.sort_by(f64::total_cmp);
    SweepCell {
        scenario,
        codebook: codebook.to_string(),
        trials: sorted.len() as u64,
        success_rate: rate(&|r| r.success),
        soft_rate: rate(&|r| r.outcome == Outcome::Soft),
        hard_rate: rate(&|r| r.outcome == Outcome::Hard),
        fail_rate: rate(&|r| r.outcome == Outcome::Fail),
        discovered: latencies.len() as u64,
        mean_latency_s,
        p95_latency_s: percentile(&latencies, 95.0),
        mean_alignment: mean(&alignment),
        mean_interruption_s: mean(&interruption),
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `trials` trials of `config` in parallel, returned in trial order.
/// Traces are dropped to bound memory.
pub fn run_trials(config: &SimConfig, trials: u64) -> Result<Vec<TrialReport>, EngineError> {
    let r = config.resolve()?;
    let run = || {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                run_resolved(&r, i).map(|mut rep| {
                    rep.rss_trace = Vec::new();
                    rep.action_log = Vec::new();
                    rep
                })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    match threads_from_env() {
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().map_or_else(|_| run(), |pool| pool.install(run))
        }
        None => run(),
    }
}

/// Every `(scenario, codebook)` combination of `base`, `trials` trials each.
pub fn run_sweep(
    base: &SimConfig,
    scenarios: &[Scenario],
    codebooks: &[CodebookSpec],
    trials: u64,
) -> Result<SweepReport, SweepError> {
    if scenarios.is_empty() {
        return Err(SweepError::Empty("scenarios"));
    }
    if codebooks.is_empty() {
        return Err(SweepError::Empty("beamwidths"));
    }
    if trials == 0 {
        return Err(SweepError::Empty("trials"));
    }
    let mut cells = Vec::new();
    for &sc in scenarios {
        for cb in codebooks {
            let cfg = base.with_scenario(sc).with_mobile_codebook(*cb);
            let reports = run_trials(&cfg, trials)?;
            cells.push(aggregate(sc, &cb.label(), &reports));
        }
    }
    Ok(SweepReport { seed: base.seed, trials, cells })
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least one entry in {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
