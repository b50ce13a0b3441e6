//! One Monte Carlo trial: the mobile follows its trajectory, the base
//! stations sweep their SSB beams, and the protocol reacts to what the
//! mobile measures in each window.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, Resolved, ResolvedCell, SimConfig};
use crate::channel::{rss, Pose};
use crate::codebook::{ring_distance, BeamId};
use crate::error::DomainError;
use crate::mobility::Scenario;
use crate::protocol::{
    Action, ActionRecord, CellId, Delivered, Driver, MeasurementReport, Phase, Protocol, ProtocolError, ProtocolState,
};

pub const RSS_MIN_DBM: f64 = -150.0;
pub const RSS_MAX_DBM: f64 = 30.0;

/// Rounds to 0.001 dB and clamps to the trace range, so that a sample
/// survives a text round trip unchanged.
pub fn quantize_rss(v: f64) -> f64 {
    ((v * 1000.0).round() / 1000.0).clamp(RSS_MIN_DBM, RSS_MAX_DBM)
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("channel: {0}")]
    Domain(#[from] DomainError),
    #[error("protocol: {0}")]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Soft,
    Hard,
    /// The run ended before any handover was declared.
    Fail,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Soft => "soft",
            Outcome::Hard => "hard",
            Outcome::Fail => "fail",
        }
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial_index: u64,
    pub seed: u64,
    pub scenario: Scenario,
    pub codebook: String,
    pub outcome: Outcome,
    /// Handover declared and the neighbour found while still inside the
    /// two-cell overlap.
    pub success: bool,
    pub search_started_ms: Option<u64>,
    pub discovered_ms: Option<u64>,
    /// Discovery time minus the start of the first search.
    pub discovery_latency_s: Option<f64>,
    pub neighbor_cell: Option<CellId>,
    /// Share of post-discovery windows whose neighbour receive beam is within
    /// one beam of the geometric best.
    pub alignment_ratio: Option<f64>,
    pub aligned_windows: u64,
    pub tracked_windows: u64,
    /// Receive-beam switches per cell (probe-driven moves only).
    pub rx_switches: BTreeMap<CellId, u64>,
    pub tx_switch_requests: u64,
    pub serving_switch_ms: Option<u64>,
    pub handover_ms: Option<u64>,
    /// Serving-switch declaration to random-access success.
    pub interruption_s: Option<f64>,
    pub overlap_exit_ms: Option<u64>,
    /// One past the last simulated slot.
    pub end_ms: u64,
    pub ignored_measurements: u64,
    pub rss_trace: Vec<MeasurementReport>,
    pub action_log: Vec<ActionRecord>,
}

impl TrialReport {
    pub fn discovery_latency_ms(&self) -> Option<u64> {
        Some(self.discovered_ms? - self.search_started_ms?)
    }
}

/// Per-trial generator: one ChaCha stream per trial index under the seed.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Window {
    /// Serving cell on its current transmit beam.
    Serving {
        rx: BeamId,
    },
    /// Strongest SSB of one cell over the window.
    Sweep {
        cell: usize,
        rx: BeamId,
    },
    /// Strongest SSB of every non-serving cell.
    Search {
        rx: BeamId,
    },
    Idle,
}

struct Sim<'a> {
    r: &'a Resolved,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    phases: Vec<u64>,
    /// Current transmit beam of each base station toward the mobile.
    bs_tx: Vec<BeamId>,
    window_count: u64,
}

impl Sim<'_> {
    fn cell_index(&self, id: CellId) -> Option<usize> {
        self.r.cells.iter().position(|c| c.id == id)
    }

    fn pose(&self, t_ms: u64) -> Result<Pose, DomainError> {
        self.r.mobility.pose_at(t_ms as f64 / 1000.0)
    }

    fn sample(&mut self, cell: usize, tx: BeamId, rx: BeamId, t_ms: u64) -> Result<f64, DomainError> {
        let c = &self.r.cells[cell];
        let pose = self.pose(t_ms)?;
        let noise = match self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        };
        let v = rss(&c.pose, &pose, c.codebook.beam(tx)?, self.r.mobile_book.beam(rx)?, &self.r.channel, noise)?;
        Ok(quantize_rss(v))
    }

    /// Strongest SSB of `cell` received on `rx` during the window ending at `end`.
    fn best_ssb(&mut self, cell: usize, rx: BeamId, end: u64) -> Result<MeasurementReport, DomainError> {
        let p = self.r.period_ms;
        let start = end + 1 - p;
        let n_tx = self.r.cells[cell].codebook.len();
        let mut best: Option<(BeamId, f64)> = None;
        for k in 0..n_tx {
            let t = start + (self.phases[cell] + k as u64) % p;
            let v = self.sample(cell, k, rx, t)?;
            if best.is_none_or(|b| v > b.1) {
                best = Some((k, v));
            }
        }
        let (tx, v) = best.expect("codebook is non-empty");
        Ok(MeasurementReport { t_ms: end, cell_id: self.r.cells[cell].id, tx_beam: tx, rx_beam: rx, rss_dbm: v })
    }

    fn plan(&mut self, s: &ProtocolState) -> Window {
        let idx = |id| self.cell_index(id);
        if s.phase.is_terminal() {
            return Window::Idle;
        }
        if s.phase == Phase::Search {
            return s.search.as_ref().map_or(Window::Idle, |c| Window::Search { rx: c.rx_beam });
        }
        if let Some(pr) = &s.probe {
            let rx = s.measurement_beam(pr.cell).unwrap_or(0);
            return match idx(pr.cell) {
                Some(_) if pr.cell == s.serving.cell_id && !s.phase.in_access() => Window::Serving { rx },
                Some(cell) => Window::Sweep { cell, rx },
                None => Window::Idle,
            };
        }
        let neighbor = s.neighbor.as_ref().and_then(|n| Some((idx(n.cell_id)?, n.rx_beam)));
        match (s.phase, neighbor) {
            (Phase::DualTrack, Some((cell, rx))) => {
                let (a, b) = self.r.ratio;
                let slot = self.window_count % u64::from(a + b);
                self.window_count += 1;
                if slot < u64::from(a) {
                    Window::Serving { rx: s.serving.rx_beam }
                } else {
                    Window::Sweep { cell, rx }
                }
            }
            (Phase::RadioLinkFailure | Phase::RandomAccess, Some((cell, rx))) => Window::Sweep { cell, rx },
            _ => Window::Serving { rx: s.serving.rx_beam },
        }
    }

    fn execute(&mut self, w: Window, serving: CellId, end: u64) -> Result<Vec<MeasurementReport>, DomainError> {
        Ok(match w {
            Window::Idle => Vec::new(),
            Window::Serving { rx } => {
                let Some(cell) = self.cell_index(serving) else { return Ok(Vec::new()) };
                let tx = self.bs_tx[cell];
                let v = self.sample(cell, tx, rx, end)?;
                vec![MeasurementReport { t_ms: end, cell_id: serving, tx_beam: tx, rx_beam: rx, rss_dbm: v }]
            }
            Window::Sweep { cell, rx } => vec![self.best_ssb(cell, rx, end)?],
            Window::Search { rx } => {
                let mut rows = Vec::new();
                for cell in 0..self.r.cells.len() {
                    if self.r.cells[cell].id != serving {
                        rows.push(self.best_ssb(cell, rx, end)?);
                    }
                }
                rows
            }
        })
    }
}

fn inside(c: &ResolvedCell, p: &Pose) -> bool {
    c.pose.distance_to(p) <= c.coverage_radius_m
}

/// First window boundary at which the mobile has left the region covered by
/// both the serving cell and some other cell, after having been in it.
fn overlap_exit_ms(r: &Resolved) -> Result<Option<u64>, DomainError> {
    let serving = &r.cells[r.serving];
    let mut entered = false;
    let mut t = 0;
    while t <= r.duration_ms {
        let pose = r.mobility.pose_at(t as f64 / 1000.0)?;
        let both = inside(serving, &pose) && r.cells.iter().any(|c| c.id != serving.id && inside(c, &pose));
        if both {
            entered = true;
        } else if entered {
            return Ok(Some(t));
        }
        t += r.period_ms;
    }
    Ok(if entered { None } else { Some(0) })
}

/// Runs trial `trial_index` of `config`.
pub fn run_trial(config: &SimConfig, trial_index: u64) -> Result<TrialReport, EngineError> {
    let r = config.resolve()?;
    run_resolved(&r, trial_index)
}

pub(crate) fn run_resolved(r: &Resolved, trial_index: u64) -> Result<TrialReport, EngineError> {
    let mut rng = trial_rng(r.seed, trial_index);
    let phases = r.cells.iter().map(|c| c.phase_ms.unwrap_or_else(|| rng.random_range(0..r.period_ms))).collect();
    let noise = (r.channel.shadowing_sigma_db > 0.0)
        .then(|| Normal::new(0.0, r.channel.shadowing_sigma_db).expect("sigma validated"));

    let pose0 = r.mobility.pose_at(0.0)?;
    let serving = &r.cells[r.serving];
    let rx0 = r.mobile_book.best_beam_oracle(pose0.relative_bearing_to(&serving.pose));
    let tx0 = serving.codebook.best_beam_oracle(serving.pose.relative_bearing_to(&pose0));
    let mut bs_tx = vec![0; r.cells.len()];
    bs_tx[r.serving] = tx0;

    let protocol = Protocol::new(r.protocol, r.books.clone());
    let mut driver = Driver::new(&protocol, ProtocolState::connected(serving.id, rx0, tx0));
    let mut sim = Sim { r, rng, noise, phases, bs_tx, window_count: 0 };

    let mut trace = Vec::new();
    let mut window = Window::Idle;
    let mut known_rx: BTreeMap<CellId, BeamId> = BTreeMap::from([(serving.id, rx0)]);
    let mut rx_switches: BTreeMap<CellId, u64> = BTreeMap::new();
    let mut seen = 0;
    let (mut aligned, mut tracked) = (0u64, 0u64);
    let mut end_ms = r.duration_ms;

    for t in 0..r.duration_ms {
        for d in driver.begin_slot(t)? {
            if let Delivered::TxSwitched { cell, beam } = d {
                if let Some(i) = sim.cell_index(cell) {
                    sim.bs_tx[i] = beam;
                }
            }
        }
        if driver.is_terminal() {
            end_ms = t + 1;
            break;
        }
        let offset = t % r.period_ms;
        if offset == 0 {
            window = sim.plan(driver.state());
        }
        if offset == r.period_ms - 1 {
            let serving_id = driver.state().serving.cell_id;
            for row in sim.execute(window, serving_id, t)? {
                trace.push(row);
                driver.measure(row)?;
                if driver.is_terminal() {
                    break;
                }
            }
            window = Window::Idle;
            let s = driver.state();
            if let (Some(n), false) = (&s.neighbor, s.phase.is_terminal()) {
                if let Some(i) = sim.cell_index(n.cell_id) {
                    let pose = sim.pose(t)?;
                    let best = r.mobile_book.best_beam_oracle(pose.relative_bearing_to(&r.cells[i].pose));
                    tracked += 1;
                    if ring_distance(r.mobile_book.len(), n.rx_beam, best) <= 1 {
                        aligned += 1;
                    }
                }
            }
        }
        for rec in &driver.log()[seen..] {
            if let Action::SetRxBeam { cell, beam } = rec.action {
                if let Some(prev) = known_rx.insert(cell, beam) {
                    if ring_distance(r.mobile_book.len(), prev, beam) == 1 {
                        *rx_switches.entry(cell).or_default() += 1;
                    }
                }
            }
        }
        seen = driver.log().len();
        if driver.is_terminal() {
            end_ms = t + 1;
            break;
        }
    }

    let state = driver.state().clone();
    let log = driver.into_log();
    let find = |pred: fn(&Action) -> bool| log.iter().find(|a| pred(&a.action)).map(|a| a.t_ms);
    let serving_switch_ms = find(|a| matches!(a, Action::DeclareServingSwitch { .. }));
    let neighbor_cell = log.iter().find_map(|a| match a.action {
        Action::DeclareServingSwitch { cell } => Some(cell),
        _ => None,
    });
    let (outcome, handover_ms) = match state.phase {
        Phase::HandoverComplete => (Outcome::Soft, find(|a| matches!(a, Action::DeclareSoftHandover))),
        Phase::HardHandover => (Outcome::Hard, find(|a| matches!(a, Action::DeclareHardHandover))),
        _ => (Outcome::Fail, None),
    };
    let interruption_s = match (outcome, serving_switch_ms, handover_ms) {
        (Outcome::Soft, Some(a), Some(b)) => Some((b - a) as f64 / 1000.0),
        _ => None,
    };
    let discovered_ms = state.discovered_ms;
    let neighbor_cell = neighbor_cell.or_else(|| {
        log.iter().find_map(|a| match a.action {
            Action::SetRxBeam { cell, .. } if cell != serving.id => Some(cell),
            _ => None,
        })
    });
    let overlap_exit = overlap_exit_ms(r)?;
    let success = outcome != Outcome::Fail && discovered_ms.is_some_and(|d| overlap_exit.is_none_or(|exit| d < exit));
    let discovery_latency_s = match (state.first_search_ms, discovered_ms) {
        (Some(a), Some(b)) => Some((b - a) as f64 / 1000.0),
        _ => None,
    };

    Ok(TrialReport {
        trial_index,
        seed: r.seed,
        scenario: r.mobility.scenario,
        codebook: r.mobile_label.clone(),
        outcome,
        success,
        search_started_ms: state.first_search_ms,
        discovered_ms,
        discovery_latency_s,
        neighbor_cell,
        alignment_ratio: (tracked > 0).then(|| aligned as f64 / tracked as f64),
        aligned_windows: aligned,
        tracked_windows: tracked,
        rx_switches,
        tx_switch_requests: log.iter().filter(|a| matches!(a.action, Action::RequestTxBeamSwitch { .. })).count()
            as u64,
        serving_switch_ms,
        handover_ms,
        interruption_s,
        overlap_exit_ms: overlap_exit,
        end_ms,
        ignored_measurements: state.diagnostics.ignored_measurements,
        rss_trace: trace,
        action_log: log,
    })
}
