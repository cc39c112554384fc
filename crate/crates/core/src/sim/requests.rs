//! Per-slot inference requests.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::catalog::ModelId;
use crate::rng::{self, Domain};
use crate::scenario::{Popularity, RequestSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Request {
    pub md_id: usize,
    pub model_id: ModelId,
    pub d_items: u32,
}

/// Request probabilities of every device over the service library.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestModel {
    probs: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    items: [u32; 2],
    seed: u64,
}

/// Zipf weights `1 / rank^s` over `n` ranks, normalised.
pub fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    let w: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-s)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

impl RequestModel {
    /// Uniform popularity, or Zipf with a per-device ranking of the services.
    pub fn new(cfg: &RequestSection, devices: usize, services: usize, seed: u64) -> Self {
        let probs: Vec<Vec<f64>> = (0..devices)
            .map(|md| match cfg.distribution {
                Popularity::Uniform => vec![1.0 / services as f64; services],
                Popularity::Zipf => {
                    let w = zipf_weights(services, cfg.zipf_exponent);
                    let mut order: Vec<usize> = (0..services).collect();
                    order.shuffle(&mut rng::stream(seed, Domain::Preference, &[md as u64]));
                    let mut p = vec![0.0; services];
                    for (rank, &l) in order.iter().enumerate() {
                        p[l] = w[rank];
                    }
                    p
                }
            })
            .collect();
        let cumulative = probs
            .iter()
            .map(|p| {
                p.iter()
                    .scan(0.0, |acc, x| {
                        *acc += x;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        RequestModel {
            probs,
            cumulative,
            items: cfg.items,
            seed,
        }
    }

    pub fn probability(&self, md: usize, model: usize) -> f64 {
        self.probs[md][model]
    }

    pub fn row(&self, md: usize) -> &[f64] {
        &self.probs[md]
    }

    /// One request per device; each device draws from its own stream.
    pub fn sample(&self, slot: u64) -> Vec<Request> {
        (0..self.probs.len())
            .map(|md| {
                let mut r = rng::stream(self.seed, Domain::Request, &[slot, md as u64]);
                let u: f64 = r.random();
                let cum = &self.cumulative[md];
                let l = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                Request {
                    md_id: md,
                    model_id: ModelId(l as u32),
                    d_items: r.random_range(self.items[0]..=self.items[1]),
                }
            })
            .collect()
    }
}
