//! Parameter sweeps: one axis, several values, policies and seeds.

use std::io;

use serde::Serialize;

use crate::scenario::{ScenarioTemplate, SweepAxis};
use crate::sim::horizon::{run_horizon, Summary};
use crate::sim::{Policy, SimError};

/// One run inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: String,
    pub policy: Policy,
    pub seed: u64,
    pub summary: Summary,
}

/// Mean and sample standard deviation over seeds for one `(value, policy)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub value: String,
    pub policy: Policy,
    pub runs: usize,
    pub mean_md_delay_s: f64,
    pub std_md_delay_s: f64,
    pub privacy_loss_pct: f64,
    pub std_privacy_loss_pct: f64,
}

pub fn run_sweep(
    template: &ScenarioTemplate,
    axis: SweepAxis,
    values: &[String],
    policies: &[Policy],
    seeds: &[u64],
    slots: usize,
) -> Result<Vec<SweepRow>, SimError> {
    let mut rows = Vec::with_capacity(values.len() * policies.len() * seeds.len());
    for value in values {
        let t = template.with_axis(axis, value)?;
        for &seed in seeds {
            let scenario = t.instantiate(seed)?;
            for &policy in policies {
                log::info!("sweep {axis}={value} policy={policy} seed={seed}");
                let run = run_horizon(&scenario, policy, slots)?;
                rows.push(SweepRow {
                    axis,
                    value: value.clone(),
                    policy,
                    seed,
                    summary: run.summary,
                });
            }
        }
    }
    Ok(rows)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by `(value, policy)` in first-seen order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepAggregate> {
    let mut keys: Vec<(String, Policy)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(v, p)| *v == r.value && *p == r.policy) {
            keys.push((r.value.clone(), r.policy));
        }
    }
    keys.into_iter()
        .map(|(value, policy)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.value == value && r.policy == policy)
                .collect();
            let delay: Vec<f64> = group.iter().map(|r| r.summary.mean_md_delay_s).collect();
            let loss: Vec<f64> = group.iter().map(|r| r.summary.privacy_loss_pct).collect();
            let (mean_md_delay_s, std_md_delay_s) = mean_std(&delay);
            let (privacy_loss_pct, std_privacy_loss_pct) = mean_std(&loss);
            SweepAggregate {
                value,
                policy,
                runs: group.len(),
                mean_md_delay_s,
                std_md_delay_s,
                privacy_loss_pct,
                std_privacy_loss_pct,
            }
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "axis", "value", "policy", "seed", "mean_md_delay_s", "privacy_loss_pct", "mean_excess",
        "final_queue", "mean_game_iterations", "fallback_requests",
    ])?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.axis.to_string(),
            r.value.clone(),
            r.policy.to_string(),
            r.seed.to_string(),
            s.mean_md_delay_s.to_string(),
            s.privacy_loss_pct.to_string(),
            s.mean_excess.to_string(),
            s.final_queue.to_string(),
            s.mean_game_iterations.to_string(),
            s.fallback_requests.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn aggregate_csv(aggs: &[SweepAggregate]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "value", "policy", "runs", "mean_md_delay_s", "std_md_delay_s", "privacy_loss_pct",
        "std_privacy_loss_pct",
    ])?;
    for a in aggs {
        w.write_record([
            a.value.clone(),
            a.policy.to_string(),
            a.runs.to_string(),
            a.mean_md_delay_s.to_string(),
            a.std_md_delay_s.to_string(),
            a.privacy_loss_pct.to_string(),
            a.std_privacy_loss_pct.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
