//! Servers, devices and the wireless channel.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Domain};
use crate::units::dbm_to_watts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("resource shared among zero devices")]
    EmptyCoalition,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeServer {
    pub id: usize,
    /// `F_m` in FLOP/s.
    pub compute_flops: f64,
    /// `C_m` in bytes.
    pub storage_bytes: f64,
    /// `B_m` in Hz, shared by uplink and downlink.
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    /// Cloud-to-edge backhaul rate in bit/s.
    pub backhaul_bps: f64,
}

impl EdgeServer {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let checks = [
            ("compute", self.compute_flops, self.compute_flops > 0.0),
            ("storage", self.storage_bytes, self.storage_bytes >= 0.0),
            ("bandwidth", self.bandwidth_hz, self.bandwidth_hz > 0.0),
            ("backhaul", self.backhaul_bps, self.backhaul_bps > 0.0),
            ("tx power", self.tx_power_dbm, self.tx_power_dbm.is_finite()),
        ];
        for (what, v, ok) in checks {
            if !ok || !v.is_finite() {
                return Err(TopologyError::Invalid(format!("server {}: {what} {v} invalid", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileDevice {
    pub id: usize,
    /// `F_n` in FLOP/s.
    pub compute_flops: f64,
    pub tx_power_dbm: f64,
    pub distance_m: f64,
    /// Long-term privacy budget in possibility-weighted items per slot.
    pub privacy_budget: f64,
}

impl MobileDevice {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let checks = [
            ("compute", self.compute_flops, self.compute_flops > 0.0),
            ("distance", self.distance_m, self.distance_m > 0.0),
            ("privacy budget", self.privacy_budget, self.privacy_budget >= 0.0),
            ("tx power", self.tx_power_dbm, self.tx_power_dbm.is_finite()),
        ];
        for (what, v, ok) in checks {
            if !ok || !v.is_finite() {
                return Err(TopologyError::Invalid(format!("device {}: {what} {v} invalid", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub noise_psd_dbm_hz: f64,
    /// Seed of the shadowing streams.
    pub seed: u64,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.path_loss_exponent > 0.0) {
            return Err(TopologyError::Invalid(format!(
                "path loss exponent {} must be positive",
                self.path_loss_exponent
            )));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(TopologyError::Invalid(format!(
                "shadowing deviation {} dB must be non-negative",
                self.shadowing_sigma_db
            )));
        }
        Ok(())
    }

    /// Log-normal shadowing term in dB for one link, slot and direction.
    pub fn shadowing_db(&self, slot: u64, md: usize, server: usize, dir: Direction) -> f64 {
        if self.shadowing_sigma_db == 0.0 {
            return 0.0;
        }
        let dir_key = match dir {
            Direction::Up => 0,
            Direction::Down => 1,
        };
        let mut r = rng::stream(
            self.seed,
            Domain::Shadowing,
            &[slot, md as u64, server as u64, dir_key],
        );
        let x: f64 = r.sample(StandardNormal);
        x * self.shadowing_sigma_db
    }

    pub fn gain(&self, md: &MobileDevice, server: &EdgeServer, slot: u64, dir: Direction) -> f64 {
        path_gain(
            md.distance_m,
            self.path_loss_exponent,
            self.shadowing_db(slot, md.id, server.id, dir),
        )
    }

    pub fn link_gains(&self, md: &MobileDevice, server: &EdgeServer, slot: u64) -> LinkGains {
        LinkGains {
            up: self.gain(md, server, slot, Direction::Up),
            down: self.gain(md, server, slot, Direction::Down),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub up: f64,
    pub down: f64,
}

/// `d^-exponent * 10^(shadow/10)`.
pub fn path_gain(distance_m: f64, exponent: f64, shadow_db: f64) -> f64 {
    distance_m.powf(-exponent) * 10f64.powf(shadow_db / 10.0)
}

pub fn shared_bandwidth(server: &EdgeServer, n_associated: usize) -> Result<f64, TopologyError> {
    if n_associated == 0 {
        return Err(TopologyError::EmptyCoalition);
    }
    Ok(server.bandwidth_hz / n_associated as f64)
}

pub fn shared_compute(server: &EdgeServer, n_associated: usize) -> Result<f64, TopologyError> {
    if n_associated == 0 {
        return Err(TopologyError::EmptyCoalition);
    }
    Ok(server.compute_flops / n_associated as f64)
}

/// Shannon rate in bit/s over `bandwidth_hz` of spectrum.
pub fn link_rate(bandwidth_hz: f64, tx_power_dbm: f64, gain: f64, noise_psd_dbm_hz: f64) -> f64 {
    let signal = dbm_to_watts(tx_power_dbm) * gain;
    let noise = dbm_to_watts(noise_psd_dbm_hz) * bandwidth_hz;
    bandwidth_hz * (signal / noise).ln_1p() / std::f64::consts::LN_2
}
