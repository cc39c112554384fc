//! Privacy loss, the virtual privacy queue and the drift-plus-penalty objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), PrivacyError> {
    if expected != got {
        return Err(PrivacyError::LengthMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Possibility-weighted items exposed by one request.
pub fn privacy_loss(d_items: u32, possibility: f64, associated: bool) -> f64 {
    if associated {
        d_items as f64 * possibility
    } else {
        0.0
    }
}

/// `½ Σ budget²`.
pub fn theta(budgets: &[f64]) -> f64 {
    0.5 * budgets.iter().map(|b| b * b).sum::<f64>()
}

/// Aggregate virtual queue over all devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyQueue {
    pub xi: f64,
    pub theta: f64,
}

impl PrivacyQueue {
    pub fn new(budgets: &[f64]) -> Self {
        PrivacyQueue {
            xi: 0.0,
            theta: theta(budgets),
        }
    }
}

pub fn queue_update(
    q: PrivacyQueue,
    losses: &[f64],
    budgets: &[f64],
) -> Result<PrivacyQueue, PrivacyError> {
    check_len("losses", budgets.len(), losses.len())?;
    let excess: f64 = losses.iter().sum::<f64>() - budgets.iter().sum::<f64>();
    Ok(PrivacyQueue {
        xi: (q.xi + excess).max(0.0),
        theta: q.theta,
    })
}

/// Either one aggregate queue or one queue per device. Each device's slack is
/// weighted by the queue it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueBank {
    per_device: bool,
    xi: Vec<f64>,
    theta: f64,
}

impl QueueBank {
    pub fn new(budgets: &[f64], per_device: bool) -> Self {
        QueueBank {
            per_device,
            xi: vec![0.0; if per_device { budgets.len() } else { 1 }],
            theta: theta(budgets),
        }
    }

    pub fn is_per_device(&self) -> bool {
        self.per_device
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Queue weight applied to device `md`'s slack.
    pub fn weight(&self, md: usize) -> f64 {
        if self.per_device {
            self.xi[md]
        } else {
            self.xi[0]
        }
    }

    pub fn weights(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.weight(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    /// Sum of all queue backlogs.
    pub fn total(&self) -> f64 {
        self.xi.iter().sum()
    }

    pub fn update(&mut self, losses: &[f64], budgets: &[f64]) -> Result<(), PrivacyError> {
        check_len("losses", budgets.len(), losses.len())?;
        if self.per_device {
            check_len("queues", self.xi.len(), losses.len())?;
            for ((q, l), b) in self.xi.iter_mut().zip(losses).zip(budgets) {
                *q = (*q + l - b).max(0.0);
            }
        } else {
            let agg = PrivacyQueue {
                xi: self.xi[0],
                theta: self.theta,
            };
            self.xi[0] = queue_update(agg, losses, budgets)?.xi;
        }
        Ok(())
    }
}

/// `α τ − Ξ Σ(budget − loss) + Θ`.
pub fn slot_objective(
    total_delay_s: f64,
    losses: &[f64],
    budgets: &[f64],
    xi: f64,
    alpha: f64,
    theta: f64,
) -> Result<f64, PrivacyError> {
    check_len("losses", budgets.len(), losses.len())?;
    let slack: f64 = budgets.iter().zip(losses).map(|(b, l)| b - l).sum();
    Ok(alpha * total_delay_s - xi * slack + theta)
}

/// Same objective with one queue weight per device.
pub fn slot_objective_weighted(
    total_delay_s: f64,
    losses: &[f64],
    budgets: &[f64],
    weights: &[f64],
    alpha: f64,
    theta: f64,
) -> Result<f64, PrivacyError> {
    check_len("losses", budgets.len(), losses.len())?;
    check_len("weights", budgets.len(), weights.len())?;
    let slack: f64 = budgets
        .iter()
        .zip(losses)
        .zip(weights)
        .map(|((b, l), w)| w * (b - l))
        .sum();
    Ok(alpha * total_delay_s - slack + theta)
}

/// Per-coalition utility: `(−α Σ τ + Ξ Σ(budget − loss) − Θ) / |F|`.
pub fn coalition_utility(
    delays: &[f64],
    losses: &[f64],
    budgets: &[f64],
    xi: f64,
    alpha: f64,
    theta: f64,
) -> Result<f64, PrivacyError> {
    check_len("losses", delays.len(), losses.len())?;
    check_len("budgets", delays.len(), budgets.len())?;
    if delays.is_empty() {
        return Ok(0.0);
    }
    let slack: f64 = budgets.iter().zip(losses).map(|(b, l)| b - l).sum();
    let num = -alpha * delays.iter().sum::<f64>() + xi * slack - theta;
    Ok(num / delays.len() as f64)
}

/// How coalition utilities combine into the welfare the game maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WelfareMode {
    /// Sum of per-coalition numerators minus Θ once; the negated slot objective.
    #[default]
    Total,
    /// Sum of per-coalition averages, each carrying its own Θ.
    Average,
}

/// Unnormalised contribution of one coalition: `−α Σ τ + Σ w (budget − loss)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoalitionTerms {
    pub members: usize,
    pub numerator: f64,
}

impl CoalitionTerms {
    pub fn utility(&self, mode: WelfareMode, theta: f64) -> f64 {
        if self.members == 0 {
            return 0.0;
        }
        match mode {
            WelfareMode::Total => self.numerator,
            WelfareMode::Average => (self.numerator - theta) / self.members as f64,
        }
    }
}

pub fn welfare(terms: &[CoalitionTerms], mode: WelfareMode, theta: f64) -> f64 {
    let sum: f64 = terms.iter().map(|t| t.utility(mode, theta)).sum();
    match mode {
        WelfareMode::Total => sum - theta,
        WelfareMode::Average => sum,
    }
}

/// `½ Ξ²`.
pub fn lyapunov(xi: f64) -> f64 {
    0.5 * xi * xi
}

/// One slot's Lyapunov drift against two upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftCheck {
    pub drift: f64,
    /// `Ξ e + ½ e²` with `e` the slot's aggregate excess; always holds.
    pub exact_bound: f64,
    /// `Ξ e + Θ`; holds only while `½ e² ≤ Θ`.
    pub theta_bound: f64,
}

impl DriftCheck {
    pub fn new(xi_before: f64, xi_after: f64, excess: f64, theta: f64) -> Self {
        DriftCheck {
            drift: lyapunov(xi_after) - lyapunov(xi_before),
            exact_bound: xi_before * excess + 0.5 * excess * excess,
            theta_bound: xi_before * excess + theta,
        }
    }

    /// Drift of `½ Σ Ξ_i²` over several queues, each with its own excess.
    pub fn for_queues(before: &[f64], after: &[f64], excess: &[f64], theta: f64) -> Self {
        let drift = after.iter().map(|x| lyapunov(*x)).sum::<f64>()
            - before.iter().map(|x| lyapunov(*x)).sum::<f64>();
        let linear: f64 = before.iter().zip(excess).map(|(x, e)| x * e).sum();
        let quad: f64 = excess.iter().map(|e| 0.5 * e * e).sum();
        DriftCheck {
            drift,
            exact_bound: linear + quad,
            theta_bound: linear + theta,
        }
    }

    pub fn exact_holds(&self) -> bool {
        self.drift <= self.exact_bound + 1e-9 * self.exact_bound.abs().max(1.0)
    }

    pub fn theta_holds(&self) -> bool {
        self.drift <= self.theta_bound + 1e-9 * self.theta_bound.abs().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loss_is_items_times_possibility() {
        assert_eq!(privacy_loss(20, 0.5, true), 10.0);
        assert_eq!(privacy_loss(20, 1.0, true), 20.0);
        assert_eq!(privacy_loss(17, 0.0, true), 0.0);
        assert_eq!(privacy_loss(20, 0.7, false), 0.0);
    }

    #[test]
    fn queue_projection() {
        let q = PrivacyQueue { xi: 5.0, theta: 0.0 };
        assert_eq!(queue_update(q, &[3.0], &[10.0]).unwrap().xi, 0.0);
        let q = PrivacyQueue { xi: 0.0, theta: 0.0 };
        assert_eq!(queue_update(q, &[5.0, 7.0], &[4.0, 6.0]).unwrap().xi, 2.0);
        assert!(queue_update(q, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_losses_keep_queue_empty() {
        let budgets = [5.0, 8.0, 3.0];
        let mut q = PrivacyQueue::new(&budgets);
        for _ in 0..100 {
            q = queue_update(q, &[0.0; 3], &budgets).unwrap();
            assert_eq!(q.xi, 0.0);
        }
    }

    #[test]
    fn objective_arithmetic() {
        // τ=10, Ξ=2, Σ slack = 4, Θ=3
        let v = slot_objective(10.0, &[1.0, 1.0], &[3.0, 3.0], 2.0, 1.0, 3.0).unwrap();
        assert_eq!(v, 5.0);
        let v = slot_objective(7.0, &[9.0], &[1.0], 0.0, 2.0, 3.0).unwrap();
        assert_eq!(v, 17.0);
    }

    #[test]
    fn utility_arithmetic() {
        let u = coalition_utility(&[2.0], &[0.0], &[1.0], 3.0, 1.0, 0.0).unwrap();
        assert_eq!(u, 1.0);
        let two = coalition_utility(&[2.0, 2.0], &[0.0, 0.0], &[1.0, 1.0], 3.0, 1.0, 0.0).unwrap();
        assert_eq!(two, u);
        assert_eq!(coalition_utility(&[], &[], &[], 3.0, 1.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn welfare_modes() {
        let t = [
            CoalitionTerms { members: 2, numerator: -4.0 },
            CoalitionTerms { members: 0, numerator: 0.0 },
            CoalitionTerms { members: 1, numerator: 1.0 },
        ];
        assert_eq!(welfare(&t, WelfareMode::Total, 2.0), -5.0);
        assert_eq!(welfare(&t, WelfareMode::Average, 2.0), -3.0 + -1.0);
        // average mode agrees with the literal utility
        let lit = coalition_utility(&[4.0, 1.0], &[0.0, 1.0], &[0.5, 1.5], 2.0, 1.0, 2.0).unwrap();
        let terms = CoalitionTerms {
            members: 2,
            numerator: -5.0 + 2.0 * 1.0,
        };
        assert_eq!(terms.utility(WelfareMode::Average, 2.0), lit);
    }

    #[test]
    fn per_device_bank() {
        let budgets = [1.0, 2.0];
        let mut bank = QueueBank::new(&budgets, true);
        bank.update(&[3.0, 0.0], &budgets).unwrap();
        assert_eq!(bank.values(), &[2.0, 0.0]);
        assert_eq!(bank.weight(0), 2.0);
        let mut agg = QueueBank::new(&budgets, false);
        agg.update(&[3.0, 0.0], &budgets).unwrap();
        assert_eq!(agg.values(), &[0.0]);
        assert_eq!(agg.weight(1), 0.0);
        assert_eq!(agg.theta(), 2.5);
    }

    #[test]
    fn theta_bound_can_fail_on_a_path() {
        // one unit budget, loss of 10 in one slot: ½e² = 40.5 exceeds Θ = 0.5
        let d = DriftCheck::new(0.0, 9.0, 9.0, 0.5);
        assert!(d.exact_holds());
        assert!(!d.theta_holds());
    }

    proptest! {
        #[test]
        fn queue_never_negative(xi in 0.0f64..100.0, l in prop::collection::vec(0.0f64..30.0, 1..8)) {
            let budgets = vec![10.0; l.len()];
            let q = queue_update(PrivacyQueue { xi, theta: 0.0 }, &l, &budgets).unwrap();
            prop_assert!(q.xi >= 0.0);
        }

        #[test]
        fn exact_drift_bound_holds(xi in 0.0f64..100.0, l in prop::collection::vec(0.0f64..30.0, 1..8)) {
            let budgets = vec![10.0; l.len()];
            let q = PrivacyQueue { xi, theta: theta(&budgets) };
            let next = queue_update(q, &l, &budgets).unwrap();
            let e = l.iter().sum::<f64>() - budgets.iter().sum::<f64>();
            prop_assert!(DriftCheck::new(xi, next.xi, e, q.theta).exact_holds());
        }

        #[test]
        fn theta_never_moves_argmin(taus in prop::collection::vec(0.0f64..10.0, 2..6), seed in 0u64..1000, th in 0.0f64..100.0) {
            // each candidate strategy is a (delay, loss) pair for a single device
            let losses: Vec<f64> = taus.iter().enumerate().map(|(i, _)| ((seed + i as u64) % 7) as f64).collect();
            let obj = |t: f64| -> Vec<f64> {
                taus.iter().zip(&losses).map(|(tau, l)| slot_objective(*tau, &[*l], &[3.0], 1.5, 1.0, t).unwrap()).collect()
            };
            let argmin = |v: Vec<f64>| v.iter().enumerate().fold(0, |b, (i, x)| if *x < v[b] { i } else { b });
            prop_assert_eq!(argmin(obj(0.0)), argmin(obj(th)));
        }
    }
}
