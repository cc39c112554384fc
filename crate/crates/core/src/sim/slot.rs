//! One slot: associate, deploy, split, measure, update the queue.

use serde::Serialize;

use crate::coalition::{run_game, CachedEvaluator, PartitionStructure, TraceRecord};
use crate::deploy::DeploymentDecision;
use crate::privacy::{slot_objective_weighted, DriftCheck, QueueBank};
use crate::scenario::Scenario;
use crate::sim::context::{CoalitionPlan, ServeMode, SlotContext};
use crate::sim::requests::RequestModel;
use crate::sim::Policy;

/// State carried from one slot to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub slot: u64,
    pub partition: Option<PartitionStructure>,
    /// `[server][model]`.
    pub deployed: Vec<Vec<bool>>,
    pub queues: QueueBank,
}

impl SlotState {
    pub fn initial(scenario: &Scenario) -> Self {
        SlotState {
            slot: 0,
            partition: None,
            deployed: vec![vec![false; scenario.library.len()]; scenario.servers.len()],
            queues: QueueBank::new(&scenario.budgets(), scenario.per_device_queues),
        }
    }
}

/// One device's row in the per-slot output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdRecord {
    pub slot: u64,
    pub md: usize,
    pub server: usize,
    pub n_associated: usize,
    pub model: u32,
    pub d_items: u32,
    pub mode: ServeMode,
    pub z: usize,
    pub c2e_s: f64,
    pub down_s: f64,
    pub local_s: f64,
    pub up_s: f64,
    pub edge_s: f64,
    pub total_s: f64,
    pub loss: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameStats {
    pub iterations: usize,
    pub accepted: usize,
    pub hit_cap: bool,
    pub initial_welfare: f64,
    /// Coalition evaluations that missed the cache.
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: u64,
    pub records: Vec<MdRecord>,
    pub deployments: Vec<DeploymentDecision>,
    pub total_delay_s: f64,
    pub total_loss: f64,
    pub total_items: u64,
    pub total_budget: f64,
    pub queues_before: Vec<f64>,
    pub queues_after: Vec<f64>,
    pub objective: f64,
    pub welfare: f64,
    pub game: Option<GameStats>,
    pub drift: DriftCheck,
}

/// Devices in decreasing request size (ties by id) each take the server that
/// minimises their own delay given the devices already placed.
pub fn matching_assignment(ctx: &SlotContext<'_>) -> PartitionStructure {
    let n = ctx.scenario.devices.len();
    let m = ctx.scenario.servers.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ctx.requests[b]
            .d_items
            .cmp(&ctx.requests[a].d_items)
            .then(a.cmp(&b))
    });
    let mut load = vec![0usize; m];
    let mut assignment = vec![0usize; n];
    for md in order {
        let mut best = (f64::INFINITY, 0usize);
        for (server, &k) in load.iter().enumerate() {
            let t = ctx.outcome(md, server, k + 1, true).delay.total_s;
            if t < best.0 {
                best = (t, server);
            }
        }
        assignment[md] = best.1;
        load[best.1] += 1;
    }
    PartitionStructure::from_assignment(assignment, m).expect("servers in range")
}

/// Advances `state` by one slot under `policy`. Returns the slot metrics and
/// the game trace (empty for baselines).
pub fn run_slot(
    scenario: &Scenario,
    request_model: &RequestModel,
    policy: Policy,
    state: &mut SlotState,
) -> (SlotMetrics, Vec<TraceRecord>) {
    let slot = state.slot;
    let n = scenario.devices.len();
    let m = scenario.servers.len();
    let requests = request_model.sample(slot);
    let budgets = scenario.budgets();
    let weights = state.queues.weights(n);
    let ctx = SlotContext::new(
        scenario,
        slot,
        &requests,
        request_model,
        &state.deployed,
        &weights,
        state.queues.theta(),
        policy,
    );

    let (partition, game, trace) = match policy {
        Policy::Proposed => {
            let initial = match (&state.partition, scenario.cold_start) {
                (Some(p), false) => p.clone(),
                _ => PartitionStructure::random(n, m, scenario.seed, slot).expect("servers exist"),
            };
            let cached = CachedEvaluator::new(&ctx);
            let out = run_game(initial, scenario.game, slot, &cached);
            let stats = GameStats {
                iterations: out.iterations,
                accepted: out.accepted().count(),
                hit_cap: out.hit_cap,
                initial_welfare: out.initial_welfare,
                evaluations: cached.misses(),
            };
            (out.result.partition, Some(stats), out.trace)
        }
        _ => (matching_assignment(&ctx), None, Vec::new()),
    };

    let plans: Vec<CoalitionPlan> = (0..m).map(|s| ctx.plan(s, partition.members(s))).collect();
    let mut records = Vec::with_capacity(n);
    for plan in &plans {
        for o in &plan.outcomes {
            records.push(MdRecord {
                slot,
                md: o.md,
                server: o.server,
                n_associated: plan.members.len(),
                model: o.model.0,
                d_items: o.d_items,
                mode: o.mode,
                z: o.z,
                c2e_s: o.delay.c2e_s,
                down_s: o.delay.down_s,
                local_s: o.delay.local_s,
                up_s: o.delay.up_s,
                edge_s: o.delay.edge_s,
                total_s: o.delay.total_s,
                loss: o.loss,
                budget: budgets[o.md],
            });
        }
    }
    records.sort_by_key(|r| r.md);

    let losses: Vec<f64> = records.iter().map(|r| r.loss).collect();
    let total_delay_s: f64 = records.iter().map(|r| r.total_s).sum();
    let objective = slot_objective_weighted(
        total_delay_s,
        &losses,
        &budgets,
        &weights,
        scenario.alpha,
        state.queues.theta(),
    )
    .expect("one loss per device");
    let welfare = plans
        .iter()
        .map(|p| p.terms.utility(scenario.welfare, ctx.theta))
        .sum::<f64>()
        + crate::coalition::CoalitionEvaluator::welfare_offset(&ctx);

    let queues_before = state.queues.values().to_vec();
    state.queues.update(&losses, &budgets).expect("one loss per device");
    let queues_after = state.queues.values().to_vec();
    let excess: Vec<f64> = if state.queues.is_per_device() {
        losses.iter().zip(&budgets).map(|(l, b)| l - b).collect()
    } else {
        vec![losses.iter().sum::<f64>() - budgets.iter().sum::<f64>()]
    };
    let drift = DriftCheck::for_queues(&queues_before, &queues_after, &excess, state.queues.theta());

    let mut deployed = vec![vec![false; scenario.library.len()]; m];
    for plan in &plans {
        for id in &plan.deployment.deployed {
            deployed[plan.server][id.0 as usize] = true;
        }
    }
    let metrics = SlotMetrics {
        slot,
        total_loss: losses.iter().sum(),
        total_items: records.iter().map(|r| r.d_items as u64).sum(),
        total_budget: budgets.iter().sum(),
        records,
        deployments: plans.into_iter().map(|p| p.deployment).collect(),
        total_delay_s,
        queues_before,
        queues_after,
        objective,
        welfare,
        game,
        drift,
    };
    state.deployed = deployed;
    state.partition = Some(partition);
    state.slot += 1;
    (metrics, trace)
}
