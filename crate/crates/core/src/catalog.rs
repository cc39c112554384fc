//! DNN model profiles and split accounting.
//!
//! A split index `z` counts the layers executed on the device: `z = 0` uploads the
//! raw input and runs everything at the edge, `z = K` runs the whole model locally
//! and uploads nothing.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{format_quantity, parse_quantity, QuantityKind, UnitError};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelId(pub u32);

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("split index {z} out of range 0..={depth} for model `{model}`")]
    SplitOutOfRange { model: String, z: usize, depth: usize },
    #[error("model `{0}` has no sigmoid fit")]
    MissingSigmoid(String),
    #[error("model `{model}` has no measured possibility for layer {layer}")]
    MissingTable { model: String, layer: usize },
    #[error("{location}: {reason}")]
    Invalid { location: String, reason: String },
    #[error("{location}: {source}")]
    Unit {
        location: String,
        #[source]
        source: UnitError,
    },
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed catalog: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub name: String,
    pub param_bytes: f64,
    pub flops_per_item: f64,
    pub feature_bytes_per_item: f64,
    /// Measured reconstruction possibility when the cut is placed after this layer.
    pub possibility: Option<f64>,
}

/// Sigmoid fit of possibility against split depth:
/// `scale / (1 + exp(-slope (z - midpoint))) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub scale: f64,
    pub slope: f64,
    pub midpoint: f64,
    pub offset: f64,
}

impl SigmoidFit {
    pub const LENET: SigmoidFit = SigmoidFit {
        scale: 0.9031,
        slope: -1.6683,
        midpoint: 4.9119,
        offset: 0.0983,
    };
    pub const VGG: SigmoidFit = SigmoidFit {
        scale: 0.6957,
        slope: -0.6047,
        midpoint: 6.7718,
        offset: 0.3371,
    };

    pub fn from_array(w: [f64; 4]) -> Self {
        SigmoidFit {
            scale: w[0],
            slope: w[1],
            midpoint: w[2],
            offset: w[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.scale, self.slope, self.midpoint, self.offset]
    }

    /// Unclamped curve value.
    pub fn eval_raw(&self, z: f64) -> f64 {
        self.scale / (1.0 + (-self.slope * (z - self.midpoint)).exp()) + self.offset
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_raw(z).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PossibilityMode {
    Table,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitAccounting {
    pub z: usize,
    pub w_dev: f64,
    pub w_edge: f64,
    pub d_dev: f64,
    pub d_edge: f64,
    /// Bytes uploaded per input item.
    pub feature_bytes: f64,
    /// Reconstruction possibility of the cut.
    pub possibility: f64,
    /// Possibility actually exposed to the edge: zero when nothing is uploaded.
    pub exposed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    id: ModelId,
    name: String,
    layers: Vec<LayerProfile>,
    raw_input_bytes: f64,
    sigmoid: Option<SigmoidFit>,
    monotone: bool,
    prefix_bytes: Vec<f64>,
    prefix_flops: Vec<f64>,
    table: bool,
}

impl ModelProfile {
    pub fn new(
        id: ModelId,
        name: impl Into<String>,
        layers: Vec<LayerProfile>,
        raw_input_bytes: f64,
        sigmoid: Option<SigmoidFit>,
        monotone: bool,
    ) -> Result<Self, CatalogError> {
        let name = name.into();
        let invalid = |location: String, reason: String| CatalogError::Invalid { location, reason };
        if !(raw_input_bytes >= 0.0 && raw_input_bytes.is_finite()) {
            return Err(invalid(
                format!("model `{name}`"),
                format!("raw input size {raw_input_bytes} must be non-negative"),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            let loc = || format!("model `{name}`, layer {} ({})", i + 1, layer.name);
            for (what, v) in [
                ("parameter size", layer.param_bytes),
                ("computation load", layer.flops_per_item),
                ("feature size", layer.feature_bytes_per_item),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(loc(), format!("{what} {v} must be non-negative")));
                }
            }
            if let Some(p) = layer.possibility {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(loc(), format!("possibility {p} outside [0, 1]")));
                }
            }
        }
        if !layers.is_empty()
            && sigmoid.is_none()
            && layers.iter().any(|l| l.possibility.is_none())
        {
            return Err(invalid(
                format!("model `{name}`"),
                "needs a possibility for every layer or a sigmoid fit".into(),
            ));
        }
        if monotone {
            for (i, pair) in layers.windows(2).enumerate() {
                if let (Some(a), Some(b)) = (pair[0].possibility, pair[1].possibility) {
                    if b > a {
                        return Err(invalid(
                            format!("model `{name}`, layer {} ({})", i + 2, pair[1].name),
                            format!("possibility {b} rises above {a} in a table flagged monotone"),
                        ));
                    }
                }
            }
        }
        let mut prefix_bytes = Vec::with_capacity(layers.len() + 1);
        let mut prefix_flops = Vec::with_capacity(layers.len() + 1);
        prefix_bytes.push(0.0);
        prefix_flops.push(0.0);
        for layer in &layers {
            prefix_bytes.push(prefix_bytes.last().unwrap() + layer.param_bytes);
            prefix_flops.push(prefix_flops.last().unwrap() + layer.flops_per_item);
        }
        let table = !layers.is_empty() && layers.iter().all(|l| l.possibility.is_some());
        Ok(ModelProfile {
            table,
            id,
            name,
            layers,
            raw_input_bytes,
            sigmoid,
            monotone,
            prefix_bytes,
            prefix_flops,
        })
    }

    /// Copy of this profile under another identity, e.g. one service derived from
    /// a base architecture.
    pub fn with_identity(&self, id: ModelId, name: impl Into<String>) -> Self {
        ModelProfile {
            id,
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[LayerProfile] {
        &self.layers
    }

    /// Number of layers `K`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn raw_input_bytes(&self) -> f64 {
        self.raw_input_bytes
    }

    pub fn sigmoid(&self) -> Option<SigmoidFit> {
        self.sigmoid
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// Storage footprint `D` in bytes.
    pub fn total_bytes(&self) -> f64 {
        self.prefix_bytes[self.depth()]
    }

    /// Workload `W` per input item in FLOPs.
    pub fn total_flops_per_item(&self) -> f64 {
        self.prefix_flops[self.depth()]
    }

    pub fn has_table(&self) -> bool {
        self.table
    }

    /// Table mode when every layer carries a measured value, otherwise the fit.
    pub fn default_mode(&self) -> PossibilityMode {
        if self.has_table() || self.sigmoid.is_none() {
            PossibilityMode::Table
        } else {
            PossibilityMode::Sigmoid
        }
    }

    fn check_range(&self, z: usize) -> Result<(), CatalogError> {
        if z > self.depth() {
            return Err(CatalogError::SplitOutOfRange {
                model: self.name.clone(),
                z,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    pub fn possibility_at(&self, z: usize, mode: PossibilityMode) -> Result<f64, CatalogError> {
        self.check_range(z)?;
        match mode {
            PossibilityMode::Table => {
                if z == 0 {
                    return Ok(1.0);
                }
                self.layers[z - 1]
                    .possibility
                    .ok_or_else(|| CatalogError::MissingTable {
                        model: self.name.clone(),
                        layer: z,
                    })
            }
            PossibilityMode::Sigmoid => self
                .sigmoid
                .map(|fit| fit.eval(z as f64))
                .ok_or_else(|| CatalogError::MissingSigmoid(self.name.clone())),
        }
    }

    pub fn split(&self, z: usize) -> Result<SplitAccounting, CatalogError> {
        self.check_range(z)?;
        let k = self.depth();
        let feature_bytes = if z == 0 {
            self.raw_input_bytes
        } else if z == k {
            0.0
        } else {
            self.layers[z - 1].feature_bytes_per_item
        };
        let possibility = if z == 0 {
            1.0
        } else {
            self.possibility_at(z, self.default_mode())?
        };
        let exposed = if z == 0 {
            1.0
        } else if z == k {
            0.0
        } else {
            possibility
        };
        let w_dev = self.prefix_flops[z];
        let d_dev = self.prefix_bytes[z];
        Ok(SplitAccounting {
            z,
            w_dev,
            w_edge: self.total_flops_per_item() - w_dev,
            d_dev,
            d_edge: self.total_bytes() - d_dev,
            feature_bytes,
            possibility,
            exposed,
        })
    }

    /// All split points `0..=K`, in order.
    pub fn splits(&self) -> Result<Vec<SplitAccounting>, CatalogError> {
        (0..=self.depth()).map(|z| self.split(z)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(default)]
    model: Vec<ModelEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    name: String,
    raw_input: String,
    #[serde(default)]
    monotone: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigmoid: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_params: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_flops: Option<String>,
    layers: Vec<LayerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    name: String,
    params: String,
    flops: String,
    feature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    possibility: Option<f64>,
}

/// A parsed catalog file.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub family: Option<String>,
    pub models: Vec<ModelProfile>,
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_catalog(&text)
}

/// Parses catalog text. Model ids are assigned in file order starting at 0.
pub fn parse_catalog(text: &str) -> Result<Catalog, CatalogError> {
    let file: CatalogFile =
        toml::from_str(text).map_err(|e| CatalogError::Syntax(e.to_string()))?;
    if file.schema_version != CATALOG_SCHEMA_VERSION {
        return Err(CatalogError::Invalid {
            location: "catalog".into(),
            reason: format!(
                "schema_version {} unsupported (expected {CATALOG_SCHEMA_VERSION})",
                file.schema_version
            ),
        });
    }
    if file.model.is_empty() {
        return Err(CatalogError::Invalid {
            location: "catalog".into(),
            reason: "no models".into(),
        });
    }
    let mut models = Vec::with_capacity(file.model.len());
    for (idx, entry) in file.model.into_iter().enumerate() {
        models.push(model_from_entry(ModelId(idx as u32), entry)?);
    }
    Ok(Catalog {
        family: file.family,
        models,
    })
}

fn model_from_entry(id: ModelId, entry: ModelEntry) -> Result<ModelProfile, CatalogError> {
    let name = entry.name;
    if entry.layers.is_empty() {
        return Err(CatalogError::Invalid {
            location: format!("model `{name}`"),
            reason: "empty layer list".into(),
        });
    }
    let quantity = |location: String, text: &str, kind| {
        parse_quantity(text, kind).map_err(|source| CatalogError::Unit { location, source })
    };
    let raw = quantity(format!("model `{name}`, raw_input"), &entry.raw_input, QuantityKind::Bytes)?;
    let mut layers = Vec::with_capacity(entry.layers.len());
    for (i, l) in entry.layers.into_iter().enumerate() {
        let loc = format!("model `{name}`, layer {} ({})", i + 1, l.name);
        layers.push(LayerProfile {
            param_bytes: quantity(loc.clone(), &l.params, QuantityKind::Bytes)?,
            flops_per_item: quantity(loc.clone(), &l.flops, QuantityKind::Flops)?,
            feature_bytes_per_item: quantity(loc, &l.feature, QuantityKind::Bytes)?,
            possibility: l.possibility,
            name: l.name,
        });
    }
    let profile = ModelProfile::new(
        id,
        name.clone(),
        layers,
        raw,
        entry.sigmoid.map(SigmoidFit::from_array),
        entry.monotone,
    )?;
    let declared = [
        (entry.total_params, QuantityKind::Bytes, profile.total_bytes(), "total_params"),
        (entry.total_flops, QuantityKind::Flops, profile.total_flops_per_item(), "total_flops"),
    ];
    for (text, kind, computed, field) in declared {
        let Some(text) = text else { continue };
        let loc = format!("model `{name}`, {field}");
        let value = quantity(loc.clone(), &text, kind)?;
        if (value - computed).abs() > 1e-9 * value.abs().max(1.0) {
            return Err(CatalogError::Invalid {
                location: loc,
                reason: format!("declared {value} but layers sum to {computed}"),
            });
        }
    }
    Ok(profile)
}

/// Canonical catalog text in base units; `parse_catalog` reproduces the profiles
/// bit for bit (ids are reassigned in order).
pub fn write_catalog(catalog: &Catalog) -> String {
    let file = CatalogFile {
        schema_version: CATALOG_SCHEMA_VERSION,
        family: catalog.family.clone(),
        model: catalog
            .models
            .iter()
            .map(|m| ModelEntry {
                name: m.name.clone(),
                raw_input: format_quantity(m.raw_input_bytes, "B"),
                monotone: m.monotone,
                sigmoid: m.sigmoid.map(SigmoidFit::to_array),
                total_params: None,
                total_flops: None,
                layers: m
                    .layers
                    .iter()
                    .map(|l| LayerEntry {
                        name: l.name.clone(),
                        params: format_quantity(l.param_bytes, "B"),
                        flops: format_quantity(l.flops_per_item, "FLOPs"),
                        feature: format_quantity(l.feature_bytes_per_item, "B"),
                        possibility: l.possibility,
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("catalog serialises")
}
