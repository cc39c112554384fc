//! Everything fixed within one slot, and the per-coalition plan built from it:
//! deployment, split points, delays and utility.

use serde::{Deserialize, Serialize};

use crate::catalog::{ModelId, ModelProfile};
use crate::coalition::CoalitionEvaluator;
use crate::delay::{DelayBreakdown, LinkBudget};
use crate::deploy::{greedy_deploy, DeployItem, DeploymentDecision, SeparableObjective};
use crate::partition::{choose_partition, PartitionContext, PartitionRule};
use crate::privacy::{privacy_loss, CoalitionTerms, WelfareMode};
use crate::scenario::{Scenario, Valuation};
use crate::sim::requests::{Request, RequestModel};
use crate::sim::Policy;
use crate::topology::LinkGains;

/// How a request was served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServeMode {
    /// Model held by the server, split at `z`.
    Split,
    /// Model absent: fetched through the server and run entirely on the device.
    FallbackLocal,
    /// Model absent: fetched to the server for this request and run there.
    EdgeOnDemand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyRules {
    pub partition: PartitionRule,
    pub deploy: bool,
    pub fallback: ServeMode,
    /// Whether the privacy queue weighs into decisions.
    pub use_queue: bool,
}

impl Policy {
    pub fn rules(self) -> PolicyRules {
        match self {
            Policy::Proposed => PolicyRules {
                partition: PartitionRule::Optimal,
                deploy: true,
                fallback: ServeMode::FallbackLocal,
                use_queue: true,
            },
            Policy::FullLocal => PolicyRules {
                partition: PartitionRule::FullLocal,
                deploy: false,
                fallback: ServeMode::FallbackLocal,
                use_queue: false,
            },
            Policy::FullEdge => PolicyRules {
                partition: PartitionRule::FullEdge,
                deploy: true,
                fallback: ServeMode::EdgeOnDemand,
                use_queue: false,
            },
            Policy::Matching => PolicyRules {
                partition: PartitionRule::PrivacyCap,
                deploy: true,
                fallback: ServeMode::FallbackLocal,
                use_queue: false,
            },
        }
    }
}

/// Result for one device in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdOutcome {
    pub md: usize,
    pub server: usize,
    pub model: ModelId,
    pub d_items: u32,
    pub mode: ServeMode,
    pub z: usize,
    pub delay: DelayBreakdown,
    pub loss: f64,
    /// `α τ − w (budget − loss)`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPlan {
    pub server: usize,
    pub members: Vec<usize>,
    pub deployment: DeploymentDecision,
    pub outcomes: Vec<MdOutcome>,
    pub terms: CoalitionTerms,
}

pub struct SlotContext<'a> {
    pub scenario: &'a Scenario,
    pub requests: &'a [Request],
    pub request_model: &'a RequestModel,
    /// `[server][model]` deployment in the previous slot.
    pub prev_deployed: &'a [Vec<bool>],
    /// Queue weight per device as seen by the policy.
    pub weights: Vec<f64>,
    pub theta: f64,
    pub rules: PolicyRules,
    gains: Vec<Vec<LinkGains>>,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        scenario: &'a Scenario,
        slot: u64,
        requests: &'a [Request],
        request_model: &'a RequestModel,
        prev_deployed: &'a [Vec<bool>],
        queue_weights: &[f64],
        theta: f64,
        policy: Policy,
    ) -> Self {
        let rules = policy.rules();
        let gains = scenario
            .devices
            .iter()
            .map(|md| {
                scenario
                    .servers
                    .iter()
                    .map(|s| scenario.channel.link_gains(md, s, slot))
                    .collect()
            })
            .collect();
        let weights = if rules.use_queue {
            queue_weights.to_vec()
        } else {
            vec![0.0; scenario.devices.len()]
        };
        SlotContext {
            scenario,
            requests,
            request_model,
            prev_deployed,
            weights,
            theta,
            rules,
            gains,
        }
    }

    pub fn gains(&self, md: usize, server: usize) -> LinkGains {
        self.gains[md][server]
    }

    pub fn link(&self, md: usize, server: usize, n_associated: usize) -> LinkBudget {
        LinkBudget::new(
            &self.scenario.devices[md],
            &self.scenario.servers[server],
            n_associated,
            self.gains[md][server],
            self.scenario.channel.noise_psd_dbm_hz,
        )
        .expect("coalition holds at least this device")
    }

    fn objective(&self, md: usize, delay: &DelayBreakdown, loss: f64) -> f64 {
        let budget = self.scenario.devices[md].privacy_budget;
        self.scenario.alpha * delay.total_s - self.weights[md] * (budget - loss)
    }

    fn partition_ctx(&self, md: usize, link: LinkBudget, fetched: bool) -> PartitionContext {
        PartitionContext {
            link,
            alpha: self.scenario.alpha,
            queue_weight: self.weights[md],
            privacy_budget: self.scenario.devices[md].privacy_budget,
            fetched_this_slot: fetched,
        }
    }

    fn unserved(&self, md: usize, server: usize, link: &LinkBudget, model: &ModelProfile, d: u32, mode: ServeMode) -> MdOutcome {
        let (delay, z, loss) = match mode {
            ServeMode::EdgeOnDemand => (link.edge_on_demand(model, d), 0, privacy_loss(d, 1.0, true)),
            _ => (link.local_fallback(model, d), model.depth(), 0.0),
        };
        MdOutcome {
            md,
            server,
            model: model.id(),
            d_items: d,
            mode,
            z,
            delay,
            loss,
            objective: self.objective(md, &delay, loss),
        }
    }

    fn served(&self, md: usize, server: usize, link: LinkBudget, model: &ModelProfile, d: u32) -> MdOutcome {
        let fetched = !self.prev_deployed[server][model.id().0 as usize];
        let ctx = self.partition_ctx(md, link, fetched);
        let c = choose_partition(self.rules.partition, md, model, d, &ctx).expect("split range");
        MdOutcome {
            md,
            server,
            model: model.id(),
            d_items: d,
            mode: ServeMode::Split,
            z: c.z_star,
            delay: c.delay,
            loss: c.loss,
            objective: c.objective_at_z,
        }
    }

    /// Outcome for `md` at `server` with `n_associated` sharing it, assuming
    /// the requested model is deployed there iff `deployed`.
    pub fn outcome(&self, md: usize, server: usize, n_associated: usize, deployed: bool) -> MdOutcome {
        let req = self.requests[md];
        let model = &self.scenario.library[req.model_id.0 as usize];
        let link = self.link(md, server, n_associated);
        if deployed && self.rules.deploy {
            self.served(md, server, link, model, req.d_items)
        } else {
            self.unserved(md, server, &link, model, req.d_items, self.rules.fallback)
        }
    }

    /// Deployment objective of a coalition: expected utility per model, each
    /// model's gain measured against the local fallback.
    pub fn deployment_objective(&self, server: usize, members: &[usize]) -> (Vec<DeployItem>, SeparableObjective) {
        let lib = &self.scenario.library;
        let mut items: Vec<DeployItem> = lib
            .iter()
            .map(|m| DeployItem {
                model_id: m.id(),
                bytes: m.total_bytes(),
                probability: 0.0,
            })
            .collect();
        let mut obj = SeparableObjective {
            base: 0.0,
            gains: vec![0.0; lib.len()],
        };
        for &md in members {
            let link = self.link(md, server, members.len());
            let req = self.requests[md];
            for (l, model) in lib.iter().enumerate() {
                let p = match self.scenario.valuation {
                    Valuation::Prospective => self.request_model.probability(md, l),
                    Valuation::Realized => {
                        if req.model_id.0 as usize == l {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                if p == 0.0 {
                    continue;
                }
                let fallback = self.unserved(md, server, &link, model, req.d_items, ServeMode::FallbackLocal);
                let served = self.served(md, server, link, model, req.d_items);
                items[l].probability += p;
                obj.base -= p * fallback.objective;
                obj.gains[l] += p * (fallback.objective - served.objective);
            }
        }
        (items, obj)
    }

    pub fn plan(&self, server: usize, members: &[usize]) -> CoalitionPlan {
        let storage = self.scenario.servers[server].storage_bytes;
        let deployment = if self.rules.deploy && !members.is_empty() {
            let (items, obj) = self.deployment_objective(server, members);
            greedy_deploy(&obj, &items, storage, self.scenario.greedy).into_decision(server, &items)
        } else {
            DeploymentDecision {
                server_id: server,
                deployed: Vec::new(),
                used_bytes: 0.0,
                value: 0.0,
            }
        };
        let outcomes: Vec<MdOutcome> = members
            .iter()
            .map(|&md| {
                let wanted = self.requests[md].model_id;
                let deployed = deployment.deployed.binary_search(&wanted).is_ok();
                self.outcome(md, server, members.len(), deployed)
            })
            .collect();
        let terms = CoalitionTerms {
            members: members.len(),
            numerator: -outcomes.iter().map(|o| o.objective).sum::<f64>(),
        };
        CoalitionPlan {
            server,
            members: members.to_vec(),
            deployment,
            outcomes,
            terms,
        }
    }
}

impl CoalitionEvaluator for SlotContext<'_> {
    fn utility(&self, server: usize, members: &[usize]) -> f64 {
        self.plan(server, members)
            .terms
            .utility(self.scenario.welfare, self.theta)
    }

    fn welfare_offset(&self) -> f64 {
        match self.scenario.welfare {
            WelfareMode::Total => -self.theta,
            WelfareMode::Average => 0.0,
        }
    }
}
