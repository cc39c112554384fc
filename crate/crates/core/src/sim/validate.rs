//! Independent checks of a finished run.
//!
//! The checks recompute everything from the logged decisions with their own
//! arithmetic (layer sums, Shannon rates, queue recursion) rather than through
//! the code paths that produced the run.

use std::fmt;

use crate::catalog::ModelProfile;
use crate::scenario::Scenario;
use crate::sim::horizon::RunResult;
use crate::sim::slot::MdRecord;
use crate::sim::ServeMode;
use crate::topology::Direction;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub slot: u64,
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slot {}: {}: {}", self.slot, self.check, self.detail)
    }
}

/// Storage limits, unique association, and consistency between deployment and
/// the way each request was served.
pub fn check_constraints(scenario: &Scenario, run: &RunResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = scenario.devices.len();
    let m = scenario.servers.len();
    for s in &run.slots {
        let mut v = |check, detail: String| out.push(Violation { slot: s.slot, check, detail });
        if s.deployments.len() != m {
            v("storage", format!("{} deployment entries for {m} servers", s.deployments.len()));
        }
        for d in &s.deployments {
            let bytes: f64 = d
                .deployed
                .iter()
                .map(|id| scenario.library[id.0 as usize].total_bytes())
                .sum();
            let cap = scenario.servers[d.server_id].storage_bytes;
            if bytes > cap {
                v("storage", format!("server {} holds {bytes} B > {cap} B", d.server_id));
            }
            if !close(d.used_bytes, bytes) {
                v("storage", format!("server {} reports {} B, models sum to {bytes} B", d.server_id, d.used_bytes));
            }
        }
        let mut seen = vec![0usize; n];
        let mut load = vec![0usize; m];
        for r in &s.records {
            if r.md >= n || r.server >= m {
                v("association", format!("record md {} server {} out of range", r.md, r.server));
                continue;
            }
            seen[r.md] += 1;
            load[r.server] += 1;
        }
        for (md, &k) in seen.iter().enumerate() {
            if k != 1 {
                v("association", format!("device {md} associated {k} times"));
            }
        }
        for r in &s.records {
            if r.server >= m || r.md >= n {
                continue;
            }
            if r.n_associated != load[r.server] {
                v("association", format!("device {} sees {} peers, server {} has {}", r.md, r.n_associated, r.server, load[r.server]));
            }
            let model = &scenario.library[r.model as usize];
            if r.z > model.depth() {
                v("split", format!("device {} split {} beyond depth {}", r.md, r.z, model.depth()));
            }
            let held = s
                .deployments
                .iter()
                .find(|d| d.server_id == r.server)
                .is_some_and(|d| d.deployed.iter().any(|id| id.0 == r.model));
            if (r.mode == ServeMode::Split) != held {
                v("service", format!("device {} mode {:?} but model held = {held}", r.md, r.mode));
            }
        }
    }
    out
}

fn watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn shannon(b: f64, p_dbm: f64, h: f64, n0_dbm: f64) -> f64 {
    b * (1.0 + watts(p_dbm) * h / (watts(n0_dbm) * b)).log2()
}

struct Cut {
    w_dev: f64,
    w_edge: f64,
    d_dev: f64,
    feature: f64,
    exposed: f64,
}

fn cut(model: &ModelProfile, z: usize) -> Cut {
    let layers = model.layers();
    let k = layers.len();
    let w_dev: f64 = layers[..z].iter().map(|l| l.flops_per_item).sum();
    let w_edge: f64 = layers[z..].iter().map(|l| l.flops_per_item).sum();
    let d_dev: f64 = layers[..z].iter().map(|l| l.param_bytes).sum();
    let feature = if z == 0 {
        model.raw_input_bytes()
    } else if z == k {
        0.0
    } else {
        layers[z - 1].feature_bytes_per_item
    };
    let exposed = if z == 0 {
        1.0
    } else if z == k {
        0.0
    } else {
        model
            .possibility_at(z, model.default_mode())
            .expect("validated catalog")
    };
    Cut {
        w_dev,
        w_edge,
        d_dev,
        feature,
        exposed,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

/// Expected `(total delay, loss)` for one logged record.
pub fn replay_record(scenario: &Scenario, r: &MdRecord, held_before: bool) -> (f64, f64) {
    let md = &scenario.devices[r.md];
    let sv = &scenario.servers[r.server];
    let model = &scenario.library[r.model as usize];
    let n0 = scenario.channel.noise_psd_dbm_hz;
    let b = sv.bandwidth_hz / r.n_associated as f64;
    let f_edge = sv.compute_flops / r.n_associated as f64;
    let up = shannon(b, md.tx_power_dbm, scenario.channel.gain(md, sv, r.slot, Direction::Up), n0);
    let down = shannon(b, sv.tx_power_dbm, scenario.channel.gain(md, sv, r.slot, Direction::Down), n0);
    let d = r.d_items as f64;
    let total_bytes: f64 = model.layers().iter().map(|l| l.param_bytes).sum();
    let total_flops: f64 = model.layers().iter().map(|l| l.flops_per_item).sum();
    let fetch = 8.0 * total_bytes / sv.backhaul_bps;
    match r.mode {
        ServeMode::Split => {
            let c = cut(model, r.z);
            let c2e = if held_before { 0.0 } else { fetch };
            let local = d * c.w_dev / md.compute_flops;
            let upload = d * c.feature * 8.0 / up;
            let edge = d * c.w_edge / f_edge;
            let total = c2e + 8.0 * c.d_dev / down + local.max(upload.max(edge));
            (total, d * c.exposed)
        }
        ServeMode::FallbackLocal => (fetch + 8.0 * total_bytes / down + d * total_flops / md.compute_flops, 0.0),
        ServeMode::EdgeOnDemand => {
            let upload = d * model.raw_input_bytes() * 8.0 / up;
            (fetch + upload.max(d * total_flops / f_edge), d)
        }
    }
}

/// Recomputes every delay, loss and queue value from the logged decisions.
pub fn replay(scenario: &Scenario, run: &RunResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = scenario.servers.len();
    let mut held = vec![vec![false; scenario.library.len()]; m];
    let per_device = scenario.per_device_queues;
    let mut queues = vec![0.0; if per_device { scenario.devices.len() } else { 1 }];
    for s in &run.slots {
        let mut v = |check, detail: String| out.push(Violation { slot: s.slot, check, detail });
        for r in &s.records {
            let (total, loss) = replay_record(scenario, r, held[r.server][r.model as usize]);
            if !close(total, r.total_s) {
                v("replay", format!("device {} delay {} logged, {total} recomputed", r.md, r.total_s));
            }
            if !close(loss, r.loss) {
                v("replay", format!("device {} loss {} logged, {loss} recomputed", r.md, r.loss));
            }
        }
        if s.queues_before.len() != queues.len()
            || s.queues_before.iter().zip(&queues).any(|(a, b)| !close(*a, *b))
        {
            v("replay", format!("queue before {:?}, expected {queues:?}", s.queues_before));
        }
        if per_device {
            for r in &s.records {
                queues[r.md] = (queues[r.md] + r.loss - r.budget).max(0.0);
            }
        } else {
            let e: f64 = s.records.iter().map(|r| r.loss - r.budget).sum();
            queues[0] = (queues[0] + e).max(0.0);
        }
        if s.queues_after.len() != queues.len()
            || s.queues_after.iter().zip(&queues).any(|(a, b)| !close(*a, *b))
        {
            v("replay", format!("queue after {:?}, expected {queues:?}", s.queues_after));
        }
        // carry the logged value so rounding does not accumulate
        queues.clone_from(&s.queues_after);
        for row in held.iter_mut() {
            row.fill(false);
        }
        for d in &s.deployments {
            for id in &d.deployed {
                held[d.server_id][id.0 as usize] = true;
            }
        }
    }
    out
}
