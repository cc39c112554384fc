//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use privsplit_core::catalog::ModelId;
use privsplit_core::deploy::{DeployItem, SeparableObjective};
use privsplit_core::scenario::{Scenario, ScenarioTemplate};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn scenario(name: &str, seed: u64) -> Scenario {
    let path = data_dir().join("scenarios").join(format!("{name}.toml"));
    ScenarioTemplate::load(path)
        .and_then(|t| t.instantiate(seed))
        .expect("shipped scenario loads")
}

/// Deterministic separable instance with `n` models; sizes and gains follow
/// fixed low-discrepancy sequences.
pub fn separable_instance(n: usize) -> (Vec<DeployItem>, SeparableObjective, f64) {
    let frac = |i: usize, a: f64| ((i as f64 + 1.0) * a).fract();
    let items: Vec<DeployItem> = (0..n)
        .map(|i| DeployItem {
            model_id: ModelId(i as u32),
            bytes: 1e6 + 5e8 * frac(i, 0.618_033_988_7),
            probability: 0.05 + frac(i, 0.414_213_562_3),
        })
        .collect();
    let gains = (0..n).map(|i| 10.0 * frac(i, 0.732_050_807_5)).collect();
    let capacity = items.iter().map(|i| i.bytes).sum::<f64>() / 3.0;
    (items, SeparableObjective { base: 0.0, gains }, capacity)
}
