//! Per-request inference delay with pipelined upload and edge execution.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{CatalogError, ModelProfile, SplitAccounting};
use crate::topology::{
    link_rate, shared_bandwidth, shared_compute, EdgeServer, LinkGains, MobileDevice,
    TopologyError,
};

const BITS_PER_BYTE: f64 = 8.0;

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("model `{0}` is not deployed on the associated server")]
    Unserved(String),
    #[error("no input items in request")]
    EmptyRequest,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Delay components of one request, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DelayBreakdown {
    pub c2e_s: f64,
    pub down_s: f64,
    pub local_s: f64,
    pub up_s: f64,
    pub edge_s: f64,
    pub total_s: f64,
}

impl DelayBreakdown {
    /// Local execution overlaps with the upload/edge pipeline; cloud fetch and
    /// sub-model download precede both.
    pub fn pipelined(c2e_s: f64, down_s: f64, local_s: f64, up_s: f64, edge_s: f64) -> Self {
        DelayBreakdown {
            c2e_s,
            down_s,
            local_s,
            up_s,
            edge_s,
            total_s: c2e_s + down_s + local_s.max(up_s.max(edge_s)),
        }
    }

    pub fn serial_sum(&self) -> f64 {
        self.c2e_s + self.down_s + self.local_s + self.up_s + self.edge_s
    }
}

/// Rates and compute shares seen by one device inside its coalition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub up_bps: f64,
    pub down_bps: f64,
    pub edge_flops: f64,
    pub device_flops: f64,
    pub backhaul_bps: f64,
}

impl LinkBudget {
    pub fn new(
        md: &MobileDevice,
        server: &EdgeServer,
        n_associated: usize,
        gains: LinkGains,
        noise_psd_dbm_hz: f64,
    ) -> Result<Self, TopologyError> {
        let b = shared_bandwidth(server, n_associated)?;
        Ok(LinkBudget {
            up_bps: link_rate(b, md.tx_power_dbm, gains.up, noise_psd_dbm_hz),
            down_bps: link_rate(b, server.tx_power_dbm, gains.down, noise_psd_dbm_hz),
            edge_flops: shared_compute(server, n_associated)?,
            device_flops: md.compute_flops,
            backhaul_bps: server.backhaul_bps,
        })
    }

    pub fn cloud_fetch_s(&self, model_bytes: f64) -> f64 {
        model_bytes * BITS_PER_BYTE / self.backhaul_bps
    }

    /// Request served by a model held on the server, split at `split.z`.
    pub fn served(
        &self,
        split: &SplitAccounting,
        model_bytes: f64,
        d_items: u32,
        fetched_this_slot: bool,
    ) -> DelayBreakdown {
        let d = d_items as f64;
        let c2e = if fetched_this_slot {
            self.cloud_fetch_s(model_bytes)
        } else {
            0.0
        };
        DelayBreakdown::pipelined(
            c2e,
            split.d_dev * BITS_PER_BYTE / self.down_bps,
            d * split.w_dev / self.device_flops,
            d * split.feature_bytes * BITS_PER_BYTE / self.up_bps,
            d * split.w_edge / self.edge_flops,
        )
    }

    /// Model absent from the server: it is pulled from the cloud, relayed to the
    /// device and executed there in full.
    pub fn local_fallback(&self, model: &ModelProfile, d_items: u32) -> DelayBreakdown {
        let d = d_items as f64;
        DelayBreakdown::pipelined(
            self.cloud_fetch_s(model.total_bytes()),
            model.total_bytes() * BITS_PER_BYTE / self.down_bps,
            d * model.total_flops_per_item() / self.device_flops,
            0.0,
            0.0,
        )
    }

    /// Model absent from the server but executed there anyway after a transient
    /// cloud fetch; the raw input is uploaded.
    pub fn edge_on_demand(&self, model: &ModelProfile, d_items: u32) -> DelayBreakdown {
        let d = d_items as f64;
        DelayBreakdown::pipelined(
            self.cloud_fetch_s(model.total_bytes()),
            0.0,
            0.0,
            d * model.raw_input_bytes() * BITS_PER_BYTE / self.up_bps,
            d * model.total_flops_per_item() / self.edge_flops,
        )
    }
}

/// Delay of one request split at `z`. The cloud fetch is charged only when the
/// model is deployed now and was not deployed in the previous slot.
#[allow(clippy::too_many_arguments)]
pub fn delay_components(
    md: &MobileDevice,
    server: &EdgeServer,
    model: &ModelProfile,
    z: usize,
    d_items: u32,
    deployed_now: bool,
    deployed_prev: bool,
    n_associated: usize,
    gains: LinkGains,
    noise_psd_dbm_hz: f64,
) -> Result<DelayBreakdown, DelayError> {
    if d_items == 0 {
        return Err(DelayError::EmptyRequest);
    }
    if !deployed_now {
        return Err(DelayError::Unserved(model.name().to_string()));
    }
    let split = model.split(z)?;
    let budget = LinkBudget::new(md, server, n_associated, gains, noise_psd_dbm_hz)?;
    Ok(budget.served(&split, model.total_bytes(), d_items, !deployed_prev))
}

pub fn system_delay(breakdowns: &[DelayBreakdown]) -> f64 {
    breakdowns.iter().map(|b| b.total_s).sum()
}
