//! Split-point selection for one device and one deployed model.

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogError, ModelId, ModelProfile};
use crate::delay::{DelayBreakdown, LinkBudget};
use crate::privacy::privacy_loss;

/// Everything a device's split decision depends on besides the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionContext {
    pub link: LinkBudget,
    pub alpha: f64,
    /// Queue backlog weighting this device's privacy slack.
    pub queue_weight: f64,
    pub privacy_budget: f64,
    /// Whether the model was pulled from the cloud in this slot.
    pub fetched_this_slot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionRule {
    Optimal,
    FullLocal,
    FullEdge,
    /// Best objective among splits whose loss stays within the device budget.
    PrivacyCap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionChoice {
    pub md_id: usize,
    pub model_id: ModelId,
    pub z_star: usize,
    pub objective_at_z: f64,
    pub delay: DelayBreakdown,
    pub loss: f64,
    /// Objective evaluations spent on this choice.
    pub evaluations: usize,
}

/// One split point scored: objective, delay and privacy loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitScore {
    pub z: usize,
    pub objective: f64,
    pub delay: DelayBreakdown,
    pub loss: f64,
}

/// `α τ(z) − w (budget − Υ(z))`, the device's share of the slot objective
/// without the constant.
pub fn per_md_objective(
    model: &ModelProfile,
    z: usize,
    d_items: u32,
    ctx: &PartitionContext,
) -> Result<SplitScore, CatalogError> {
    let split = model.split(z)?;
    let delay = ctx
        .link
        .served(&split, model.total_bytes(), d_items, ctx.fetched_this_slot);
    let loss = privacy_loss(d_items, split.exposed, true);
    Ok(SplitScore {
        z,
        objective: ctx.alpha * delay.total_s - ctx.queue_weight * (ctx.privacy_budget - loss),
        delay,
        loss,
    })
}

fn choice(md_id: usize, model: &ModelProfile, s: SplitScore, evaluations: usize) -> PartitionChoice {
    PartitionChoice {
        md_id,
        model_id: model.id(),
        z_star: s.z,
        objective_at_z: s.objective,
        delay: s.delay,
        loss: s.loss,
        evaluations,
    }
}

/// Exact argmin over every split point; ties go to the smaller `z`.
pub fn optimal_partition(
    md_id: usize,
    model: &ModelProfile,
    d_items: u32,
    ctx: &PartitionContext,
) -> Result<PartitionChoice, CatalogError> {
    let mut best = per_md_objective(model, 0, d_items, ctx)?;
    for z in 1..=model.depth() {
        let s = per_md_objective(model, z, d_items, ctx)?;
        if s.objective < best.objective {
            best = s;
        }
    }
    Ok(choice(md_id, model, best, model.depth() + 1))
}

pub fn choose_partition(
    rule: PartitionRule,
    md_id: usize,
    model: &ModelProfile,
    d_items: u32,
    ctx: &PartitionContext,
) -> Result<PartitionChoice, CatalogError> {
    match rule {
        PartitionRule::Optimal => optimal_partition(md_id, model, d_items, ctx),
        PartitionRule::FullLocal => {
            let s = per_md_objective(model, model.depth(), d_items, ctx)?;
            Ok(choice(md_id, model, s, 1))
        }
        PartitionRule::FullEdge => {
            let s = per_md_objective(model, 0, d_items, ctx)?;
            Ok(choice(md_id, model, s, 1))
        }
        PartitionRule::PrivacyCap => {
            let mut best: Option<SplitScore> = None;
            let mut least_exposed: Option<SplitScore> = None;
            for z in 0..=model.depth() {
                let s = per_md_objective(model, z, d_items, ctx)?;
                if s.loss <= ctx.privacy_budget
                    && best.map_or(true, |b| s.objective < b.objective)
                {
                    best = Some(s);
                }
                if least_exposed.map_or(true, |b| {
                    s.loss < b.loss || (s.loss == b.loss && s.objective < b.objective)
                }) {
                    least_exposed = Some(s);
                }
            }
            let s = best.or(least_exposed).expect("at least one split point");
            Ok(choice(md_id, model, s, model.depth() + 1))
        }
    }
}
