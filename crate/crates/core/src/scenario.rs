//! Scenario files: network size, parameter ranges, model library and algorithm
//! settings.
//!
//! Every physical quantity carries its unit. A parameter is either one value
//! (`"23 dBm"`) or a `[low, high]` pair drawn uniformly per entity. Entity draws
//! come from streams keyed by entity index, so growing the device count keeps
//! the first devices unchanged.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{load_catalog, write_catalog, Catalog, CatalogError, ModelId, ModelProfile};
use crate::coalition::GameConfig;
use crate::deploy::GreedyConfig;
use crate::privacy::WelfareMode;
use crate::rng::{self, Domain};
use crate::topology::{ChannelModel, EdgeServer, MobileDevice, TopologyError};
use crate::units::{parse_quantity, QuantityKind, UnitError};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Syntax(String),
    #[error("{field}: {source}")]
    Unit {
        field: String,
        #[source]
        source: UnitError,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("unknown sweep axis `{0}` (expected mds, servers, services, storage, privacy-budget or alpha)")]
    UnknownAxis(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// A fixed quantity or a uniform range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Fixed(String),
    Range([String; 2]),
}

impl Param {
    fn bounds(&self, field: &str, kind: QuantityKind) -> Result<(f64, f64), ScenarioError> {
        let parse = |t: &str| {
            parse_quantity(t, kind).map_err(|source| ScenarioError::Unit {
                field: field.to_string(),
                source,
            })
        };
        let (lo, hi) = match self {
            Param::Fixed(t) => {
                let v = parse(t)?;
                (v, v)
            }
            Param::Range([a, b]) => (parse(a)?, parse(b)?),
        };
        if lo > hi {
            return Err(invalid(field, format!("range low {lo} exceeds high {hi}")));
        }
        Ok((lo, hi))
    }
}

/// Dimensionless value or range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Fixed(f64),
    Range([f64; 2]),
}

impl Ratio {
    fn bounds(&self, field: &str) -> Result<(f64, f64), ScenarioError> {
        let (lo, hi) = match *self {
            Ratio::Fixed(v) => (v, v),
            Ratio::Range([a, b]) => (a, b),
        };
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(invalid(field, format!("bad range [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }
}

fn draw(r: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        r.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    /// Catalog files, relative to the scenario file.
    pub files: Vec<String>,
    /// Model names to keep; empty keeps every model.
    #[serde(default)]
    pub models: Vec<String>,
    /// Distinct services derived from each model.
    #[serde(default = "one")]
    pub services_per_model: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerSection {
    pub count: usize,
    pub compute: Param,
    pub storage: Param,
    pub bandwidth: Param,
    pub tx_power: Param,
    pub backhaul: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub count: usize,
    pub compute: Param,
    pub tx_power: Param,
    pub distance: Param,
    /// Privacy budget as a fraction of the mean request size.
    pub budget_fraction: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub path_loss_exponent: f64,
    pub shadowing_sigma: String,
    pub noise_psd: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Popularity {
    Uniform,
    Zipf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestSection {
    pub distribution: Popularity,
    #[serde(default)]
    pub zipf_exponent: f64,
    /// Inclusive range of input items per request.
    pub items: [u32; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Valuation {
    /// Expected utility over each device's request distribution.
    #[default]
    Prospective,
    /// Utility of the requests actually drawn this slot.
    Realized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub alpha: f64,
    #[serde(default = "default_period")]
    pub exchange_period: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub cold_start: bool,
    #[serde(default)]
    pub per_device_queues: bool,
    #[serde(default)]
    pub welfare: WelfareMode,
    #[serde(default = "default_seed_size")]
    pub seed_size: usize,
    #[serde(default)]
    pub valuation: Valuation,
}

fn default_period() -> usize {
    10
}
fn default_max_iterations() -> usize {
    10_000
}
fn default_epsilon() -> f64 {
    1e-9
}
fn default_seed_size() -> usize {
    3
}

/// Explicit server entry; overrides the generated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    pub compute: String,
    pub storage: String,
    pub bandwidth: String,
    pub tx_power: String,
    pub backhaul: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub compute: String,
    pub tx_power: String,
    pub distance: String,
    pub budget_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub slots: usize,
    pub catalog: CatalogSection,
    pub servers: ServerSection,
    pub devices: DeviceSection,
    pub channel: ChannelSection,
    pub requests: RequestSection,
    pub algorithm: AlgorithmSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub server: Vec<ServerEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub device: Vec<DeviceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Mds,
    Servers,
    Services,
    Storage,
    PrivacyBudget,
    Alpha,
}

impl std::str::FromStr for SweepAxis {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "mds" => SweepAxis::Mds,
            "servers" => SweepAxis::Servers,
            "services" => SweepAxis::Services,
            "storage" => SweepAxis::Storage,
            "privacy-budget" => SweepAxis::PrivacyBudget,
            "alpha" => SweepAxis::Alpha,
            other => return Err(ScenarioError::UnknownAxis(other.to_string())),
        })
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Mds => "mds",
            SweepAxis::Servers => "servers",
            SweepAxis::Services => "services",
            SweepAxis::Storage => "storage",
            SweepAxis::PrivacyBudget => "privacy-budget",
            SweepAxis::Alpha => "alpha",
        })
    }
}

/// A parsed scenario file with its catalogs loaded, before entity draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub file: ScenarioFile,
    catalogs: Vec<Catalog>,
}

impl ScenarioTemplate {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Parses scenario text; catalog paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        let catalogs = file
            .catalog
            .files
            .iter()
            .map(|f| load_catalog(resolve(base_dir, f)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(file, catalogs)
    }

    pub fn from_parts(file: ScenarioFile, catalogs: Vec<Catalog>) -> Result<Self, ScenarioError> {
        let t = ScenarioTemplate { file, catalogs };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let f = &self.file;
        if f.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("{} unsupported (expected {SCENARIO_SCHEMA_VERSION})", f.schema_version),
            ));
        }
        if f.slots == 0 {
            return Err(invalid("slots", "must be at least 1"));
        }
        if f.catalog.files.is_empty() {
            return Err(invalid("catalog.files", "no catalog files"));
        }
        if f.catalog.services_per_model == 0 {
            return Err(invalid("catalog.services_per_model", "must be at least 1"));
        }
        for name in &f.catalog.models {
            if !self.catalogs.iter().flat_map(|c| &c.models).any(|m| m.name() == name) {
                return Err(invalid("catalog.models", format!("model `{name}` not found in catalogs")));
            }
        }
        if self.server_count() == 0 {
            return Err(invalid("servers.count", "need at least one server"));
        }
        if self.device_count() == 0 {
            return Err(invalid("devices.count", "need at least one device"));
        }
        let a = &f.algorithm;
        if !(a.alpha > 0.0 && a.alpha.is_finite()) {
            return Err(invalid("algorithm.alpha", format!("{} must be positive", a.alpha)));
        }
        if a.exchange_period == 0 {
            return Err(invalid("algorithm.exchange_period", "must be at least 1"));
        }
        if !(a.epsilon > 0.0) {
            return Err(invalid("algorithm.epsilon", "must be positive"));
        }
        let [lo, hi] = f.requests.items;
        if lo == 0 || lo > hi {
            return Err(invalid("requests.items", format!("bad range [{lo}, {hi}]")));
        }
        if !(f.requests.zipf_exponent >= 0.0) {
            return Err(invalid("requests.zipf_exponent", "must be non-negative"));
        }
        // surface unit errors and bad ranges before any run
        self.draw_servers(0)?;
        self.draw_devices(0)?;
        self.channel(0)?;
        Ok(())
    }

    pub fn server_count(&self) -> usize {
        if self.file.server.is_empty() {
            self.file.servers.count
        } else {
            self.file.server.len()
        }
    }

    pub fn device_count(&self) -> usize {
        if self.file.device.is_empty() {
            self.file.devices.count
        } else {
            self.file.device.len()
        }
    }

    /// Services in id order.
    pub fn library(&self) -> Vec<ModelProfile> {
        let wanted = &self.file.catalog.models;
        let base: Vec<&ModelProfile> = self
            .catalogs
            .iter()
            .flat_map(|c| &c.models)
            .filter(|m| wanted.is_empty() || wanted.iter().any(|w| w == m.name()))
            .collect();
        let k = self.file.catalog.services_per_model;
        let mut out = Vec::with_capacity(base.len() * k);
        for m in base {
            for s in 0..k {
                let name = if k == 1 {
                    m.name().to_string()
                } else {
                    format!("{}#{s}", m.name())
                };
                out.push(m.with_identity(ModelId(out.len() as u32), name));
            }
        }
        out
    }

    fn draw_servers(&self, seed: u64) -> Result<Vec<EdgeServer>, ScenarioError> {
        let mut out = Vec::new();
        if !self.file.server.is_empty() {
            for (id, e) in self.file.server.iter().enumerate() {
                let q = |field: &str, t: &str, kind| {
                    parse_quantity(t, kind).map_err(|source| ScenarioError::Unit {
                        field: format!("server[{id}].{field}"),
                        source,
                    })
                };
                out.push(EdgeServer {
                    id,
                    compute_flops: q("compute", &e.compute, QuantityKind::FlopRate)?,
                    storage_bytes: q("storage", &e.storage, QuantityKind::Bytes)?,
                    bandwidth_hz: q("bandwidth", &e.bandwidth, QuantityKind::Frequency)?,
                    tx_power_dbm: q("tx_power", &e.tx_power, QuantityKind::Power)?,
                    backhaul_bps: q("backhaul", &e.backhaul, QuantityKind::BitRate)?,
                });
            }
        } else {
            let s = &self.file.servers;
            let compute = s.compute.bounds("servers.compute", QuantityKind::FlopRate)?;
            let storage = s.storage.bounds("servers.storage", QuantityKind::Bytes)?;
            let bandwidth = s.bandwidth.bounds("servers.bandwidth", QuantityKind::Frequency)?;
            let power = s.tx_power.bounds("servers.tx_power", QuantityKind::Power)?;
            let backhaul = s.backhaul.bounds("servers.backhaul", QuantityKind::BitRate)?;
            for id in 0..s.count {
                let mut r = rng::stream(seed, Domain::Server, &[id as u64]);
                out.push(EdgeServer {
                    id,
                    compute_flops: draw(&mut r, compute),
                    storage_bytes: draw(&mut r, storage),
                    bandwidth_hz: draw(&mut r, bandwidth),
                    tx_power_dbm: draw(&mut r, power),
                    backhaul_bps: draw(&mut r, backhaul),
                });
            }
        }
        for s in &out {
            s.validate()?;
        }
        Ok(out)
    }

    fn mean_items(&self) -> f64 {
        let [lo, hi] = self.file.requests.items;
        (lo as f64 + hi as f64) / 2.0
    }

    fn draw_devices(&self, seed: u64) -> Result<Vec<MobileDevice>, ScenarioError> {
        let mean = self.mean_items();
        let mut out = Vec::new();
        if !self.file.device.is_empty() {
            for (id, e) in self.file.device.iter().enumerate() {
                let q = |field: &str, t: &str, kind| {
                    parse_quantity(t, kind).map_err(|source| ScenarioError::Unit {
                        field: format!("device[{id}].{field}"),
                        source,
                    })
                };
                out.push(MobileDevice {
                    id,
                    compute_flops: q("compute", &e.compute, QuantityKind::FlopRate)?,
                    tx_power_dbm: q("tx_power", &e.tx_power, QuantityKind::Power)?,
                    distance_m: q("distance", &e.distance, QuantityKind::Distance)?,
                    privacy_budget: e.budget_fraction * mean,
                });
            }
        } else {
            let d = &self.file.devices;
            let compute = d.compute.bounds("devices.compute", QuantityKind::FlopRate)?;
            let power = d.tx_power.bounds("devices.tx_power", QuantityKind::Power)?;
            let distance = d.distance.bounds("devices.distance", QuantityKind::Distance)?;
            let frac = d.budget_fraction.bounds("devices.budget_fraction")?;
            for id in 0..d.count {
                let mut r = rng::stream(seed, Domain::Device, &[id as u64]);
                out.push(MobileDevice {
                    id,
                    compute_flops: draw(&mut r, compute),
                    tx_power_dbm: draw(&mut r, power),
                    distance_m: draw(&mut r, distance),
                    privacy_budget: draw(&mut r, frac) * mean,
                });
            }
        }
        for d in &out {
            d.validate()?;
        }
        Ok(out)
    }

    fn channel(&self, seed: u64) -> Result<ChannelModel, ScenarioError> {
        let c = &self.file.channel;
        let q = |field: &str, t: &str, kind| {
            parse_quantity(t, kind).map_err(|source| ScenarioError::Unit {
                field: format!("channel.{field}"),
                source,
            })
        };
        let ch = ChannelModel {
            path_loss_exponent: c.path_loss_exponent,
            shadowing_sigma_db: q("shadowing_sigma", &c.shadowing_sigma, QuantityKind::Decibel)?,
            noise_psd_dbm_hz: q("noise_psd", &c.noise_psd, QuantityKind::NoiseDensity)?,
            seed,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Draws every entity for one seed.
    pub fn instantiate(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        let a = &self.file.algorithm;
        Ok(Scenario {
            name: self.file.name.clone(),
            hash: self.hash(),
            seed,
            slots: self.file.slots,
            library: self.library(),
            servers: self.draw_servers(seed)?,
            devices: self.draw_devices(seed)?,
            channel: self.channel(seed)?,
            requests: self.file.requests.clone(),
            alpha: a.alpha,
            game: GameConfig {
                exchange_period: a.exchange_period,
                max_iterations: a.max_iterations,
                epsilon: a.epsilon,
                seed,
            },
            greedy: GreedyConfig {
                seed_size: a.seed_size,
            },
            cold_start: a.cold_start,
            per_device_queues: a.per_device_queues,
            welfare: a.welfare,
            valuation: a.valuation,
        })
    }

    /// Short content hash over the scenario settings and catalog contents.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&self.file).expect("scenario serialises"));
        for c in &self.catalogs {
            h.update(write_catalog(c));
        }
        h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// Applies one sweep value. Counts are integers, storage carries a unit,
    /// the privacy budget is a fraction of the mean request size.
    pub fn with_axis(&self, axis: SweepAxis, value: &str) -> Result<Self, ScenarioError> {
        let mut f = self.file.clone();
        let field = axis.to_string();
        let count = |v: &str| -> Result<usize, ScenarioError> {
            v.trim()
                .parse::<usize>()
                .map_err(|_| invalid(&field, format!("`{v}` is not a count")))
        };
        let number = |v: &str| -> Result<f64, ScenarioError> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(&field, format!("`{v}` is not a number")))
        };
        match axis {
            SweepAxis::Mds => {
                if !f.device.is_empty() {
                    return Err(invalid(&field, "scenario lists devices explicitly"));
                }
                f.devices.count = count(value)?;
            }
            SweepAxis::Servers => {
                if !f.server.is_empty() {
                    return Err(invalid(&field, "scenario lists servers explicitly"));
                }
                f.servers.count = count(value)?;
            }
            SweepAxis::Services => f.catalog.services_per_model = count(value)?,
            SweepAxis::Storage => {
                parse_quantity(value, QuantityKind::Bytes).map_err(|source| ScenarioError::Unit {
                    field: field.clone(),
                    source,
                })?;
                let v = value.trim().to_string();
                if f.server.is_empty() {
                    f.servers.storage = Param::Fixed(v);
                } else {
                    for s in &mut f.server {
                        s.storage = v.clone();
                    }
                }
            }
            SweepAxis::PrivacyBudget => {
                let v = number(value)?;
                if f.device.is_empty() {
                    f.devices.budget_fraction = Ratio::Fixed(v);
                } else {
                    for d in &mut f.device {
                        d.budget_fraction = v;
                    }
                }
            }
            SweepAxis::Alpha => f.algorithm.alpha = number(value)?,
        }
        Self::from_parts(f, self.catalogs.clone())
    }

    pub fn catalogs(&self) -> &[Catalog] {
        &self.catalogs
    }
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Fully drawn scenario for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub hash: String,
    pub seed: u64,
    pub slots: usize,
    pub library: Vec<ModelProfile>,
    pub servers: Vec<EdgeServer>,
    pub devices: Vec<MobileDevice>,
    pub channel: ChannelModel,
    pub requests: RequestSection,
    pub alpha: f64,
    pub game: GameConfig,
    pub greedy: GreedyConfig,
    pub cold_start: bool,
    pub per_device_queues: bool,
    pub welfare: WelfareMode,
    pub valuation: Valuation,
}

impl Scenario {
    pub fn budgets(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.privacy_budget).collect()
    }
}

/// Findings of a scenario check that do not stop a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
}

/// Checks a template for conditions that are legal but probably unintended.
pub fn validate_template(t: &ScenarioTemplate) -> Result<ValidationReport, ScenarioError> {
    let mut report = ValidationReport::default();
    let s = t.instantiate(0)?;
    let smallest = s
        .library
        .iter()
        .map(|m| m.total_bytes())
        .fold(f64::INFINITY, f64::min);
    for server in &s.servers {
        if server.storage_bytes == 0.0 && !s.library.is_empty() {
            report.warnings.push(format!(
                "server {}: zero storage, every request will use the fallback path",
                server.id
            ));
        } else if server.storage_bytes < smallest {
            report.warnings.push(format!(
                "server {}: storage {} B holds no model (smallest needs {smallest} B)",
                server.id, server.storage_bytes
            ));
        }
    }
    let largest_storage = s.servers.iter().map(|x| x.storage_bytes).fold(0.0, f64::max);
    for m in &s.library {
        if m.total_bytes() > largest_storage && largest_storage > 0.0 {
            report
                .warnings
                .push(format!("model `{}` fits on no server", m.name()));
        }
    }
    if s.devices.iter().any(|d| d.privacy_budget == 0.0) {
        report
            .warnings
            .push("a device has a zero privacy budget".to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> ScenarioTemplate {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scenarios");
        ScenarioTemplate::load(dir.join("desk.toml")).unwrap()
    }

    #[test]
    fn desk_defaults() {
        let t = desk();
        let s = t.instantiate(1).unwrap();
        assert_eq!(s.devices.len(), 20);
        assert_eq!(s.servers.len(), 4);
        assert_eq!(s.library.len(), 9);
        assert_eq!(s.slots, 100);
        assert_eq!(s.alpha, 1.0);
        for sv in &s.servers {
            assert!((5e11..=2e12).contains(&sv.compute_flops));
            assert!((2e9..=5e9).contains(&sv.storage_bytes));
            assert_eq!(sv.bandwidth_hz, 1e8);
            assert_eq!(sv.tx_power_dbm, 43.0);
        }
        for d in &s.devices {
            assert!((1e10..=1e11).contains(&d.compute_flops));
            assert!((100.0..=200.0).contains(&d.distance_m));
            assert!((8.0..=14.0).contains(&d.privacy_budget));
        }
        assert_eq!(s.channel.noise_psd_dbm_hz, -174.0);
        assert!(validate_template(&t).unwrap().warnings.is_empty());
    }

    #[test]
    fn draws_are_keyed_per_entity() {
        let t = desk();
        let bigger = t.with_axis(SweepAxis::Mds, "30").unwrap();
        let a = t.instantiate(5).unwrap();
        let b = bigger.instantiate(5).unwrap();
        assert_eq!(a.devices[..], b.devices[..20]);
        assert_eq!(a.servers, b.servers);
        assert_ne!(t.hash(), bigger.hash());
        assert_eq!(t.hash(), desk().hash());
    }

    #[test]
    fn services_expand_library() {
        let t = desk().with_axis(SweepAxis::Services, "3").unwrap();
        let lib = t.library();
        assert_eq!(lib.len(), 27);
        assert_eq!(lib[4].name(), "VGG16#1");
        assert!(lib.iter().enumerate().all(|(i, m)| m.id() == ModelId(i as u32)));
    }

    #[test]
    fn axis_values_are_checked() {
        let t = desk();
        assert!(t.with_axis(SweepAxis::Storage, "2").is_err());
        let s = t.with_axis(SweepAxis::Storage, "0.5 GB").unwrap().instantiate(0).unwrap();
        assert!(s.servers.iter().all(|x| x.storage_bytes == 5e8));
        assert!(t.with_axis(SweepAxis::Alpha, "0").is_err());
        assert!(t.with_axis(SweepAxis::Servers, "0").is_err());
        assert!("nodes".parse::<SweepAxis>().is_err());
        let p = t.with_axis(SweepAxis::PrivacyBudget, "0.5").unwrap().instantiate(0).unwrap();
        assert!(p.devices.iter().all(|d| d.privacy_budget == 10.0));
    }

    #[test]
    fn zero_storage_warns() {
        let t = desk().with_axis(SweepAxis::Storage, "0 GB").unwrap();
        let r = validate_template(&t).unwrap();
        assert_eq!(r.warnings.len(), 4);
        assert!(r.warnings[0].contains("fallback"));
    }

    #[test]
    fn missing_unit_is_an_error() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scenarios");
        let text = std::fs::read_to_string(dir.join("desk.toml")).unwrap();
        let broken = text.replacen("\"100 MHz\"", "\"100\"", 1);
        let err = ScenarioTemplate::parse(&broken, &dir).unwrap_err().to_string();
        assert!(err.contains("servers.bandwidth") && err.contains("no unit"), "{err}");
    }
}
