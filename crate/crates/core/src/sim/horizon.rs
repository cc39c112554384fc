//! Multi-slot runs and their summary.

use serde::Serialize;

use crate::coalition::TraceRecord;
use crate::scenario::Scenario;
use crate::sim::requests::RequestModel;
use crate::sim::slot::{run_slot, SlotMetrics, SlotState};
use crate::sim::{Policy, SimError};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotTrace {
    pub slot: u64,
    #[serde(flatten)]
    pub record: TraceRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub scenario_hash: String,
    pub policy: Policy,
    pub seed: u64,
    pub slots: usize,
    pub devices: usize,
    pub servers: usize,
    pub services: usize,
    /// Mean per-device delay over all requests.
    pub mean_md_delay_s: f64,
    /// Mean over slots of the summed device delay.
    pub mean_system_delay_s: f64,
    /// Exposed items as a percentage of all requested items.
    pub privacy_loss_pct: f64,
    /// Time average of `Σ (loss − budget)`.
    pub mean_excess: f64,
    pub total_budget: f64,
    pub final_queue: f64,
    pub mean_objective: f64,
    pub mean_welfare: f64,
    pub mean_game_iterations: f64,
    pub max_game_iterations: usize,
    pub game_cap_hits: usize,
    /// Slots where the drift exceeded `Ξ e + Θ`.
    pub theta_bound_exceedances: usize,
    /// Slots where the drift exceeded `Ξ e + ½ e²`; always zero.
    pub exact_bound_violations: usize,
    pub fallback_requests: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub slots: Vec<SlotMetrics>,
    pub trace: Vec<SlotTrace>,
    pub summary: Summary,
}

impl RunResult {
    /// `<hash>_<policy>_s<seed>`.
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_s{}",
            self.summary.scenario_hash, self.summary.policy, self.summary.seed
        )
    }
}

pub fn run_horizon(scenario: &Scenario, policy: Policy, slots: usize) -> Result<RunResult, SimError> {
    if slots == 0 {
        return Err(SimError::NoSlots);
    }
    let request_model = RequestModel::new(
        &scenario.requests,
        scenario.devices.len(),
        scenario.library.len(),
        scenario.seed,
    );
    let mut state = SlotState::initial(scenario);
    let mut series = Vec::with_capacity(slots);
    let mut trace = Vec::new();
    let mut theta_warned = false;
    for _ in 0..slots {
        let (m, t) = run_slot(scenario, &request_model, policy, &mut state);
        if !m.drift.theta_holds() && !theta_warned {
            log::warn!(
                "slot {}: queue drift {} exceeds the constant-offset bound {}",
                m.slot,
                m.drift.drift,
                m.drift.theta_bound
            );
            theta_warned = true;
        }
        trace.extend(t.into_iter().map(|record| SlotTrace { slot: m.slot, record }));
        series.push(m);
    }
    let summary = summarise(scenario, policy, &series, state.queues.total());
    Ok(RunResult {
        slots: series,
        trace,
        summary,
    })
}

fn summarise(scenario: &Scenario, policy: Policy, series: &[SlotMetrics], final_queue: f64) -> Summary {
    let t = series.len() as f64;
    let requests: usize = series.iter().map(|s| s.records.len()).sum();
    let delay_sum: f64 = series.iter().map(|s| s.total_delay_s).sum();
    let loss_sum: f64 = series.iter().map(|s| s.total_loss).sum();
    let items: u64 = series.iter().map(|s| s.total_items).sum();
    let games: Vec<_> = series.iter().filter_map(|s| s.game).collect();
    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        scenario_hash: scenario.hash.clone(),
        policy,
        seed: scenario.seed,
        slots: series.len(),
        devices: scenario.devices.len(),
        servers: scenario.servers.len(),
        services: scenario.library.len(),
        mean_md_delay_s: delay_sum / requests as f64,
        mean_system_delay_s: delay_sum / t,
        privacy_loss_pct: 100.0 * loss_sum / items as f64,
        mean_excess: series
            .iter()
            .map(|s| s.total_loss - s.total_budget)
            .sum::<f64>()
            / t,
        total_budget: scenario.budgets().iter().sum(),
        final_queue,
        mean_objective: series.iter().map(|s| s.objective).sum::<f64>() / t,
        mean_welfare: series.iter().map(|s| s.welfare).sum::<f64>() / t,
        mean_game_iterations: if games.is_empty() {
            0.0
        } else {
            games.iter().map(|g| g.iterations as f64).sum::<f64>() / games.len() as f64
        },
        max_game_iterations: games.iter().map(|g| g.iterations).max().unwrap_or(0),
        game_cap_hits: games.iter().filter(|g| g.hit_cap).count(),
        theta_bound_exceedances: series.iter().filter(|s| !s.drift.theta_holds()).count(),
        exact_bound_violations: series.iter().filter(|s| !s.drift.exact_holds()).count(),
        fallback_requests: series
            .iter()
            .flat_map(|s| &s.records)
            .filter(|r| r.mode != crate::sim::ServeMode::Split)
            .count() as u64,
    }
}
