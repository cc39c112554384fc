//! Storage-constrained model deployment for one coalition.
//!
//! The ratio rule picks the feasible model maximising `p_j Δf(V, j) / D_j` and
//! stops once no feasible model has a positive marginal gain. Under a knapsack
//! constraint that rule alone has no constant-factor guarantee, so by default it
//! is run from every feasible seed set of up to three models and the best result
//! is kept.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ModelId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeployError {
    #[error("exhaustive deployment over {0} models exceeds the limit of {MAX_BRUTE_FORCE}")]
    LibraryTooLarge(usize),
}

pub const MAX_BRUTE_FORCE: usize = 20;

/// One candidate model: identity, storage footprint and aggregated request
/// probability within the coalition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeployItem {
    pub model_id: ModelId,
    pub bytes: f64,
    pub probability: f64,
}

/// Set function over item indices.
pub trait DeploymentObjective {
    fn value(&self, set: &[usize]) -> f64;

    fn marginal(&self, set: &[usize], j: usize) -> f64 {
        let mut with = set.to_vec();
        with.push(j);
        self.value(&with) - self.value(set)
    }

    /// True when every marginal gain is independent of the current set.
    fn is_modular(&self) -> bool {
        false
    }
}

/// `base + Σ gain_j`: each model's contribution is independent of the others.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableObjective {
    pub base: f64,
    pub gains: Vec<f64>,
}

impl DeploymentObjective for SeparableObjective {
    fn value(&self, set: &[usize]) -> f64 {
        self.base + set.iter().map(|&j| self.gains[j]).sum::<f64>()
    }

    fn marginal(&self, set: &[usize], j: usize) -> f64 {
        if set.contains(&j) {
            0.0
        } else {
            self.gains[j]
        }
    }

    fn is_modular(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioRule {
    /// `p_j Δf / D_j`.
    Weighted,
    /// `Δf / D_j`.
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyConfig {
    /// Largest seed set enumerated before the ratio fill; 0 runs the bare rule.
    pub seed_size: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { seed_size: 3 }
    }
}

/// Chosen item indices (ascending), bytes used and objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub items: Vec<usize>,
    pub used_bytes: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentDecision {
    pub server_id: usize,
    pub deployed: Vec<ModelId>,
    pub used_bytes: f64,
    pub value: f64,
}

impl Selection {
    pub fn into_decision(self, server_id: usize, items: &[DeployItem]) -> DeploymentDecision {
        let mut deployed: Vec<ModelId> = self.items.iter().map(|&i| items[i].model_id).collect();
        deployed.sort();
        DeploymentDecision {
            server_id,
            deployed,
            used_bytes: self.used_bytes,
            value: self.value,
        }
    }
}

fn ratio(rule: RatioRule, item: &DeployItem, gain: f64) -> f64 {
    let num = match rule {
        RatioRule::Weighted => item.probability * gain,
        RatioRule::Density => gain,
    };
    if item.bytes > 0.0 {
        num / item.bytes
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn used(items: &[DeployItem], set: &[usize]) -> f64 {
    set.iter().map(|&i| items[i].bytes).sum()
}

/// Extends `start` with the ratio rule until no feasible item has positive gain.
/// Ties in the ratio go to the lower index.
pub fn ratio_fill<O: DeploymentObjective + ?Sized>(
    obj: &O,
    items: &[DeployItem],
    capacity: f64,
    start: &[usize],
    rule: RatioRule,
) -> Vec<usize> {
    let mut set = start.to_vec();
    let mut in_set = vec![false; items.len()];
    for &i in start {
        in_set[i] = true;
    }
    let mut used_bytes = used(items, &set);
    if obj.is_modular() {
        // static ratios: one ordering, then skip whatever no longer fits
        let mut order: Vec<(usize, f64, f64)> = (0..items.len())
            .filter(|&j| !in_set[j])
            .map(|j| {
                let g = obj.marginal(&set, j);
                (j, g, ratio(rule, &items[j], g))
            })
            .filter(|&(_, g, _)| g > 0.0)
            .collect();
        order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        for (j, _, _) in order {
            if used_bytes + items[j].bytes <= capacity {
                used_bytes += items[j].bytes;
                set.push(j);
            }
        }
        return set;
    }
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..items.len() {
            if in_set[j] || used_bytes + items[j].bytes > capacity {
                continue;
            }
            let g = obj.marginal(&set, j);
            if g <= 0.0 {
                continue;
            }
            let r = ratio(rule, &items[j], g);
            if best.map_or(true, |(_, br)| r > br) {
                best = Some((j, r));
            }
        }
        let Some((j, _)) = best else { break };
        in_set[j] = true;
        used_bytes += items[j].bytes;
        set.push(j);
    }
    set
}

fn finish<O: DeploymentObjective + ?Sized>(obj: &O, items: &[DeployItem], mut set: Vec<usize>) -> Selection {
    set.sort_unstable();
    Selection {
        used_bytes: used(items, &set),
        value: obj.value(&set),
        items: set,
    }
}

// Strictly better value, or equal value with a lexicographically smaller set.
fn better(a: &Selection, b: &Selection) -> bool {
    a.value > b.value || (a.value == b.value && a.items < b.items)
}

/// Enumerates feasible subsets of `allowed` with size `1..=k` in lexicographic order.
fn for_each_seed(
    items: &[DeployItem],
    allowed: &[bool],
    capacity: f64,
    k: usize,
    f: &mut impl FnMut(&[usize]),
) {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        items: &[DeployItem],
        allowed: &[bool],
        capacity: f64,
        k: usize,
        from: usize,
        cur: &mut Vec<usize>,
        bytes: f64,
        f: &mut impl FnMut(&[usize]),
    ) {
        for j in from..items.len() {
            if !allowed[j] {
                continue;
            }
            let b = bytes + items[j].bytes;
            if b > capacity {
                continue;
            }
            cur.push(j);
            f(cur);
            if cur.len() < k {
                rec(items, allowed, capacity, k, j + 1, cur, b, f);
            }
            cur.pop();
        }
    }
    if k > 0 {
        rec(items, allowed, capacity, k, 0, &mut Vec::new(), 0.0, f);
    }
}

pub fn greedy_deploy<O: DeploymentObjective + ?Sized>(
    obj: &O,
    items: &[DeployItem],
    capacity: f64,
    cfg: GreedyConfig,
) -> Selection {
    let mut best = finish(obj, items, ratio_fill(obj, items, capacity, &[], RatioRule::Weighted));
    if cfg.seed_size == 0 {
        return best;
    }
    let consider = |best: &mut Selection, set: Vec<usize>| {
        let s = finish(obj, items, set);
        if better(&s, best) {
            *best = s;
        }
    };
    consider(&mut best, ratio_fill(obj, items, capacity, &[], RatioRule::Density));
    // items worthless on their own stay worthless in any seed
    let allowed: Vec<bool> = (0..items.len()).map(|j| obj.marginal(&[], j) > 0.0).collect();
    if obj.is_modular() {
        // gains do not depend on the set, so one ordering per rule serves every seed
        let orders = [RatioRule::Weighted, RatioRule::Density].map(|rule| static_order(obj, items, rule));
        let mut in_seed = vec![false; items.len()];
        let mut set = Vec::with_capacity(items.len());
        for_each_seed(items, &allowed, capacity, cfg.seed_size, &mut |seed| {
            for &j in seed {
                in_seed[j] = true;
            }
            let seed_bytes = used(items, seed);
            for order in &orders {
                set.clear();
                set.extend_from_slice(seed);
                let mut bytes = seed_bytes;
                for &j in order {
                    if !in_seed[j] && bytes + items[j].bytes <= capacity {
                        bytes += items[j].bytes;
                        set.push(j);
                    }
                }
                set.sort_unstable();
                let value = obj.value(&set);
                if value > best.value || (value == best.value && set < best.items) {
                    best = Selection {
                        items: set.clone(),
                        used_bytes: used(items, &set),
                        value,
                    };
                }
            }
            for &j in seed {
                in_seed[j] = false;
            }
        });
        return best;
    }
    for_each_seed(items, &allowed, capacity, cfg.seed_size, &mut |seed| {
        for rule in [RatioRule::Weighted, RatioRule::Density] {
            consider(&mut best, ratio_fill(obj, items, capacity, seed, rule));
        }
    });
    best
}

fn static_order<O: DeploymentObjective + ?Sized>(obj: &O, items: &[DeployItem], rule: RatioRule) -> Vec<usize> {
    let mut order: Vec<(usize, f64)> = (0..items.len())
        .filter_map(|j| {
            let g = obj.marginal(&[], j);
            (g > 0.0).then(|| (j, ratio(rule, &items[j], g)))
        })
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(j, _)| j).collect()
}

/// Exact maximiser over all feasible subsets; ties go to the lexicographically
/// smallest index set.
pub fn brute_force_deploy<O: DeploymentObjective + ?Sized>(
    obj: &O,
    items: &[DeployItem],
    capacity: f64,
) -> Result<Selection, DeployError> {
    if items.len() > MAX_BRUTE_FORCE {
        return Err(DeployError::LibraryTooLarge(items.len()));
    }
    let mut best = finish(obj, items, Vec::new());
    let mut set = Vec::with_capacity(items.len());
    for mask in 1u32..(1u32 << items.len()) {
        set.clear();
        set.extend((0..items.len()).filter(|j| mask & (1 << j) != 0));
        if used(items, &set) > capacity {
            continue;
        }
        let s = Selection {
            items: set.clone(),
            used_bytes: used(items, &set),
            value: obj.value(&set),
        };
        if better(&s, &best) {
            best = s;
        }
    }
    Ok(best)
}
