//! Coalition formation between devices and servers.
//!
//! A partition assigns every device to exactly one server. Moves are single
//! switches and pairwise exchanges; a move is accepted only when it raises the
//! total welfare by more than `epsilon`.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoalitionError {
    #[error("device {md} assigned to server {server}, but only {servers} servers exist")]
    UnknownServer { md: usize, server: usize, servers: usize },
    #[error("partition needs at least one server")]
    NoServers,
    #[error("exhaustive stability check limited to {limit} devices, got {got}")]
    TooLarge { limit: usize, got: usize },
}

pub const MAX_STABILITY_CHECK: usize = 12;

/// Disjoint cover of the devices by one coalition per server.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionStructure {
    assignment: Vec<usize>,
    coalitions: Vec<Vec<usize>>,
}

impl PartitionStructure {
    pub fn from_assignment(assignment: Vec<usize>, servers: usize) -> Result<Self, CoalitionError> {
        if servers == 0 {
            return Err(CoalitionError::NoServers);
        }
        let mut coalitions = vec![Vec::new(); servers];
        for (md, &server) in assignment.iter().enumerate() {
            if server >= servers {
                return Err(CoalitionError::UnknownServer { md, server, servers });
            }
            coalitions[server].push(md);
        }
        Ok(PartitionStructure { assignment, coalitions })
    }

    /// Uniformly random assignment drawn from the keyed stream.
    pub fn random(devices: usize, servers: usize, seed: u64, key: u64) -> Result<Self, CoalitionError> {
        if servers == 0 {
            return Err(CoalitionError::NoServers);
        }
        let mut r = rng::stream(seed, Domain::InitialPartition, &[key]);
        let assignment = (0..devices).map(|_| r.random_range(0..servers)).collect();
        Self::from_assignment(assignment, servers)
    }

    pub fn devices(&self) -> usize {
        self.assignment.len()
    }

    pub fn servers(&self) -> usize {
        self.coalitions.len()
    }

    pub fn server_of(&self, md: usize) -> usize {
        self.assignment[md]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of a server's coalition in ascending order.
    pub fn members(&self, server: usize) -> &[usize] {
        &self.coalitions[server]
    }

    pub fn coalitions(&self) -> &[Vec<usize>] {
        &self.coalitions
    }

    fn remove(&mut self, md: usize) {
        let c = &mut self.coalitions[self.assignment[md]];
        let pos = c.binary_search(&md).expect("member present");
        c.remove(pos);
    }

    fn insert(&mut self, md: usize, server: usize) {
        let c = &mut self.coalitions[server];
        let pos = c.binary_search(&md).unwrap_err();
        c.insert(pos, md);
        self.assignment[md] = server;
    }

    pub fn switched(&self, md: usize, to: usize) -> Self {
        let mut p = self.clone();
        p.remove(md);
        p.insert(md, to);
        p
    }

    pub fn exchanged(&self, a: usize, b: usize) -> Self {
        let (sa, sb) = (self.assignment[a], self.assignment[b]);
        let mut p = self.clone();
        p.remove(a);
        p.remove(b);
        p.insert(a, sb);
        p.insert(b, sa);
        p
    }

    /// Every device in exactly one coalition and coalitions consistent with the
    /// assignment.
    pub fn is_valid(&self) -> bool {
        let mut seen = vec![0u32; self.devices()];
        for (s, c) in self.coalitions.iter().enumerate() {
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &md in c {
                if md >= seen.len() || self.assignment[md] != s {
                    return false;
                }
                seen[md] += 1;
            }
        }
        seen.iter().all(|&k| k == 1)
    }
}

/// Utility of one server's coalition. Empty coalitions are worth zero and are
/// never passed in.
pub trait CoalitionEvaluator {
    fn utility(&self, server: usize, members: &[usize]) -> f64;

    /// Constant added to the sum of coalition utilities.
    fn welfare_offset(&self) -> f64 {
        0.0
    }
}

impl<E: CoalitionEvaluator + ?Sized> CoalitionEvaluator for &E {
    fn utility(&self, server: usize, members: &[usize]) -> f64 {
        (**self).utility(server, members)
    }

    fn welfare_offset(&self) -> f64 {
        (**self).welfare_offset()
    }
}

/// Memoises an evaluator by `(server, members)`.
pub struct CachedEvaluator<E> {
    inner: E,
    cache: RefCell<HashMap<(usize, Vec<usize>), f64>>,
    misses: RefCell<u64>,
}

impl<E: CoalitionEvaluator> CachedEvaluator<E> {
    pub fn new(inner: E) -> Self {
        CachedEvaluator {
            inner,
            cache: RefCell::new(HashMap::new()),
            misses: RefCell::new(0),
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Number of evaluations forwarded to the inner evaluator.
    pub fn misses(&self) -> u64 {
        *self.misses.borrow()
    }
}

impl<E: CoalitionEvaluator> CoalitionEvaluator for CachedEvaluator<E> {
    fn utility(&self, server: usize, members: &[usize]) -> f64 {
        let key = (server, members.to_vec());
        if let Some(&u) = self.cache.borrow().get(&key) {
            return u;
        }
        let u = self.inner.utility(server, members);
        *self.misses.borrow_mut() += 1;
        self.cache.borrow_mut().insert(key, u);
        u
    }

    fn welfare_offset(&self) -> f64 {
        self.inner.welfare_offset()
    }
}

fn coalition_utility<E: CoalitionEvaluator + ?Sized>(eval: &E, p: &PartitionStructure, server: usize) -> f64 {
    let m = p.members(server);
    if m.is_empty() {
        0.0
    } else {
        eval.utility(server, m)
    }
}

/// A partition with its per-coalition utilities and welfare.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPartition {
    pub partition: PartitionStructure,
    pub utilities: Vec<f64>,
    pub welfare: f64,
}

pub fn evaluate_partition<E: CoalitionEvaluator + ?Sized>(
    p: PartitionStructure,
    eval: &E,
) -> EvaluatedPartition {
    let utilities: Vec<f64> = (0..p.servers()).map(|s| coalition_utility(eval, &p, s)).collect();
    let welfare = utilities.iter().sum::<f64>() + eval.welfare_offset();
    EvaluatedPartition {
        partition: p,
        utilities,
        welfare,
    }
}

impl EvaluatedPartition {
    // Re-evaluates servers `a` and `b` of `next`; returns the candidate and its gain.
    fn candidate<E: CoalitionEvaluator + ?Sized>(
        &self,
        next: PartitionStructure,
        a: usize,
        b: usize,
        eval: &E,
    ) -> (EvaluatedPartition, f64) {
        let ua = coalition_utility(eval, &next, a);
        let ub = coalition_utility(eval, &next, b);
        let gain = (ua + ub) - (self.utilities[a] + self.utilities[b]);
        let mut utilities = self.utilities.clone();
        utilities[a] = ua;
        utilities[b] = ub;
        let welfare = utilities.iter().sum::<f64>() + eval.welfare_offset();
        (
            EvaluatedPartition {
                partition: next,
                utilities,
                welfare,
            },
            gain,
        )
    }
}

/// Moves `md` to server `to`; accepted iff welfare rises by more than `epsilon`.
pub fn try_switch<E: CoalitionEvaluator + ?Sized>(
    p: &EvaluatedPartition,
    md: usize,
    to: usize,
    eval: &E,
    epsilon: f64,
) -> Option<EvaluatedPartition> {
    let from = p.partition.server_of(md);
    if from == to {
        return None;
    }
    let (next, gain) = p.candidate(p.partition.switched(md, to), from, to, eval);
    (gain > epsilon).then_some(next)
}

/// Swaps two devices held by different servers; same acceptance rule.
pub fn try_exchange<E: CoalitionEvaluator + ?Sized>(
    p: &EvaluatedPartition,
    a: usize,
    b: usize,
    eval: &E,
    epsilon: f64,
) -> Option<EvaluatedPartition> {
    let (sa, sb) = (p.partition.server_of(a), p.partition.server_of(b));
    if sa == sb {
        return None;
    }
    let (next, gain) = p.candidate(p.partition.exchanged(a, b), sa, sb, eval);
    (gain > epsilon).then_some(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Random switches between exchange proposals (`G`).
    pub exchange_period: usize,
    pub max_iterations: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            exchange_period: 10,
            max_iterations: 10_000,
            epsilon: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Switch,
    Exchange,
}

/// One proposal. For a switch `b` is the target server; for an exchange it is
/// the second device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub kind: MoveKind,
    pub a: usize,
    pub b: usize,
    pub accepted: bool,
    /// Welfare after the proposal.
    pub welfare: f64,
    /// Proposal from the deterministic certification sweep.
    pub sweep: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub initial_welfare: f64,
    pub result: EvaluatedPartition,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    /// Stopped by the iteration cap rather than by a clean sweep.
    pub hit_cap: bool,
}

impl GameOutcome {
    pub fn accepted(&self) -> impl Iterator<Item = &TraceRecord> {
        self.trace.iter().filter(|r| r.accepted)
    }
}

struct Game<'e, E: ?Sized> {
    eval: &'e E,
    cfg: GameConfig,
    state: EvaluatedPartition,
    trace: Vec<TraceRecord>,
    iteration: usize,
}

impl<E: CoalitionEvaluator + ?Sized> Game<'_, E> {
    fn capped(&self) -> bool {
        self.iteration >= self.cfg.max_iterations
    }

    fn propose(&mut self, kind: MoveKind, a: usize, b: usize, sweep: bool) -> bool {
        self.iteration += 1;
        let next = match kind {
            MoveKind::Switch => try_switch(&self.state, a, b, self.eval, self.cfg.epsilon),
            MoveKind::Exchange => try_exchange(&self.state, a, b, self.eval, self.cfg.epsilon),
        };
        let accepted = next.is_some();
        if let Some(n) = next {
            self.state = n;
        }
        self.trace.push(TraceRecord {
            iteration: self.iteration,
            kind,
            a,
            b,
            accepted,
            welfare: self.state.welfare,
            sweep,
        });
        accepted
    }

    // All switches, then all exchanges. Returns whether anything was accepted.
    fn sweep(&mut self) -> bool {
        let (n, m) = (self.state.partition.devices(), self.state.partition.servers());
        let mut any = false;
        for md in 0..n {
            for to in 0..m {
                if self.capped() {
                    return any;
                }
                if to != self.state.partition.server_of(md) {
                    any |= self.propose(MoveKind::Switch, md, to, true);
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.capped() {
                    return any;
                }
                if self.state.partition.server_of(a) != self.state.partition.server_of(b) {
                    any |= self.propose(MoveKind::Exchange, a, b, true);
                }
            }
        }
        any
    }
}

/// Random switches with an exchange after every `G` switches. Once `2 N M`
/// proposals in a row are rejected a full deterministic sweep runs; the game
/// ends when a sweep accepts nothing or the iteration cap is reached.
pub fn run_game<E: CoalitionEvaluator + ?Sized>(
    initial: PartitionStructure,
    cfg: GameConfig,
    stream: u64,
    eval: &E,
) -> GameOutcome {
    let n = initial.devices();
    let m = initial.servers();
    let state = evaluate_partition(initial, eval);
    let initial_welfare = state.welfare;
    let mut game = Game {
        eval,
        cfg,
        state,
        trace: Vec::new(),
        iteration: 0,
    };
    let mut r = rng::stream(cfg.seed, Domain::Game, &[stream]);
    let stall_limit = 2 * n * m;
    let period = cfg.exchange_period.max(1);
    let mut stalled = 0usize;
    let mut switches = 0usize;
    let mut converged = n == 0;
    while !converged && !game.capped() {
        if m < 2 || stalled >= stall_limit {
            stalled = 0;
            converged = !game.sweep();
            continue;
        }
        let md = r.random_range(0..n);
        let cur = game.state.partition.server_of(md);
        let mut to = r.random_range(0..m - 1);
        if to >= cur {
            to += 1;
        }
        let mut accepted = game.propose(MoveKind::Switch, md, to, false);
        switches += 1;
        if switches % period == 0 && !game.capped() {
            let a = r.random_range(0..n);
            let sa = game.state.partition.server_of(a);
            let others: Vec<usize> = (0..n)
                .filter(|&b| game.state.partition.server_of(b) != sa)
                .collect();
            if !others.is_empty() {
                let b = others[r.random_range(0..others.len())];
                accepted |= game.propose(MoveKind::Exchange, a.min(b), a.max(b), false);
            }
        }
        stalled = if accepted { 0 } else { stalled + 1 };
    }
    GameOutcome {
        initial_welfare,
        hit_cap: !converged,
        iterations: game.iteration,
        result: game.state,
        trace: game.trace,
    }
}

/// A deviation that would raise welfare by more than `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub kind: MoveKind,
    pub a: usize,
    pub b: usize,
    pub gain: f64,
}

/// Every improving single switch and pairwise exchange from `p`.
pub fn check_d_stable<E: CoalitionEvaluator + ?Sized>(
    p: &PartitionStructure,
    eval: &E,
    epsilon: f64,
) -> Result<Vec<Deviation>, CoalitionError> {
    let n = p.devices();
    if n > MAX_STABILITY_CHECK {
        return Err(CoalitionError::TooLarge {
            limit: MAX_STABILITY_CHECK,
            got: n,
        });
    }
    let base = evaluate_partition(p.clone(), eval);
    let mut found = Vec::new();
    for md in 0..n {
        let from = p.server_of(md);
        for to in (0..p.servers()).filter(|&s| s != from) {
            let (_, gain) = base.candidate(p.switched(md, to), from, to, eval);
            if gain > epsilon {
                found.push(Deviation { kind: MoveKind::Switch, a: md, b: to, gain });
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let (sa, sb) = (p.server_of(a), p.server_of(b));
            if sa == sb {
                continue;
            }
            let (_, gain) = base.candidate(p.exchanged(a, b), sa, sb, eval);
            if gain > epsilon {
                found.push(Deviation { kind: MoveKind::Exchange, a, b, gain });
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashSet;

    /// Synthetic evaluator: each device has a value per server, and each server
    /// a congestion penalty quadratic in its size plus pairwise affinities.
    struct Synthetic {
        value: Vec<Vec<f64>>,
        congestion: Vec<f64>,
        affinity: Vec<Vec<f64>>,
    }

    impl CoalitionEvaluator for Synthetic {
        fn utility(&self, server: usize, members: &[usize]) -> f64 {
            let k = members.len() as f64;
            let mut u: f64 = members.iter().map(|&i| self.value[i][server]).sum();
            u -= self.congestion[server] * k * k;
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    u += self.affinity[i][j];
                }
            }
            u
        }
    }

    fn synthetic(n: usize, m: usize, seed: u64) -> Synthetic {
        let mut r = rng::stream(seed, Domain::Preference, &[n as u64, m as u64]);
        let value = (0..n).map(|_| (0..m).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        let congestion = (0..m).map(|_| r.random_range(0.0..1.0)).collect();
        let mut affinity = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let a = r.random_range(-2.0..2.0);
                affinity[i][j] = a;
                affinity[j][i] = a;
            }
        }
        Synthetic { value, congestion, affinity }
    }

    struct Counting<'a> {
        inner: &'a Synthetic,
        calls: RefCell<u64>,
    }

    impl CoalitionEvaluator for Counting<'_> {
        fn utility(&self, server: usize, members: &[usize]) -> f64 {
            *self.calls.borrow_mut() += 1;
            self.inner.utility(server, members)
        }
    }

    #[test]
    fn structure_invariants() {
        let p = PartitionStructure::from_assignment(vec![1, 0, 1, 2], 3).unwrap();
        assert!(p.is_valid());
        assert_eq!(p.members(1), &[0, 2]);
        let q = p.switched(1, 2);
        assert!(q.is_valid());
        assert!(q.members(0).is_empty());
        let e = p.exchanged(0, 3);
        assert!(e.is_valid());
        assert_eq!((e.server_of(0), e.server_of(3)), (2, 1));
        assert!(PartitionStructure::from_assignment(vec![3], 3).is_err());
        assert!(PartitionStructure::from_assignment(vec![], 0).is_err());
    }

    #[test]
    fn empty_coalitions_are_worth_zero() {
        let s = synthetic(4, 3, 1);
        let p = PartitionStructure::from_assignment(vec![0; 4], 3).unwrap();
        let e = evaluate_partition(p.clone(), &s);
        assert_eq!(e.utilities[1], 0.0);
        assert_eq!(e.welfare, s.utility(0, p.members(0)));
    }

    #[test]
    fn cached_matches_uncached_and_hits() {
        let s = synthetic(6, 3, 2);
        let cached = CachedEvaluator::new(&s);
        let p = PartitionStructure::random(6, 3, 5, 0).unwrap();
        let a = evaluate_partition(p.clone(), &cached);
        let misses = cached.misses();
        let b = evaluate_partition(p.clone(), &cached);
        assert_eq!(cached.misses(), misses);
        assert_eq!(a, b);
        assert_eq!(a, evaluate_partition(p, &s));
    }

    #[test]
    fn tie_is_rejected() {
        struct Flat;
        impl CoalitionEvaluator for Flat {
            fn utility(&self, _: usize, m: &[usize]) -> f64 {
                m.len() as f64
            }
        }
        let p = evaluate_partition(PartitionStructure::from_assignment(vec![0, 1], 2).unwrap(), &Flat);
        assert!(try_switch(&p, 0, 1, &Flat, 1e-9).is_none());
        assert!(try_exchange(&p, 0, 1, &Flat, 1e-9).is_none());
    }

    #[test]
    fn identical_devices_exchange_is_rejected() {
        let mut s = synthetic(4, 2, 3);
        s.value[1] = s.value[0].clone();
        for row in s.affinity.iter_mut() {
            row[1] = row[0];
        }
        s.affinity[1] = s.affinity[0].clone();
        s.affinity[0][1] = 0.0;
        s.affinity[1][0] = 0.0;
        let p = evaluate_partition(PartitionStructure::from_assignment(vec![0, 1, 0, 1], 2).unwrap(), &s);
        assert!(try_exchange(&p, 0, 1, &s, 1e-9).is_none());
    }

    #[test]
    fn single_device_lands_on_best_server() {
        let s = synthetic(1, 4, 7);
        let out = run_game(PartitionStructure::from_assignment(vec![0], 4).unwrap(), GameConfig::default(), 0, &s);
        let best = (0..4).map(|m| s.utility(m, &[0])).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.result.welfare, best);
        assert!(!out.hit_cap);
    }

    #[test]
    fn switch_only_touches_two_coalitions() {
        let s = synthetic(6, 3, 9);
        let counting = Counting { inner: &s, calls: RefCell::new(0) };
        let p = evaluate_partition(PartitionStructure::from_assignment(vec![0, 1, 2, 0, 1, 2], 3).unwrap(), &s);
        let before = p.utilities.clone();
        for to in [1, 2] {
            *counting.calls.borrow_mut() = 0;
            let next = try_switch(&p, 0, to, &counting, f64::NEG_INFINITY).unwrap();
            assert_eq!(*counting.calls.borrow(), 2);
            let other = 3 - to;
            assert_eq!(next.utilities[other], before[other]);
            assert_eq!(next, evaluate_partition(next.partition.clone(), &s));
        }
    }

    #[test]
    fn exchange_escapes_switch_stable_partition() {
        // exhaustive search over small synthetic instances for a partition where
        // no switch helps but some exchange does
        let mut witness = None;
        'search: for seed in 0..500u64 {
            let s = synthetic(4, 2, seed);
            for code in 0..16usize {
                let assignment: Vec<usize> = (0..4).map(|i| (code >> i) & 1).collect();
                let p = PartitionStructure::from_assignment(assignment, 2).unwrap();
                let devs = check_d_stable(&p, &s, 1e-9).unwrap();
                let switches = devs.iter().filter(|d| d.kind == MoveKind::Switch).count();
                if switches == 0 && devs.iter().any(|d| d.kind == MoveKind::Exchange) {
                    witness = Some((seed, p));
                    break 'search;
                }
            }
        }
        let (seed, p) = witness.expect("no exchange witness in the search range");
        let s = synthetic(4, 2, seed);
        let e = evaluate_partition(p.clone(), &s);
        let mut escaped = false;
        for a in 0..4 {
            for b in a + 1..4 {
                if let Some(next) = try_exchange(&e, a, b, &s, 1e-9) {
                    assert!(next.partition.is_valid());
                    assert!(next.welfare > e.welfare);
                    escaped = true;
                }
            }
        }
        assert!(escaped);
    }

    #[test]
    fn one_server_is_vacuously_stable() {
        let s = synthetic(5, 1, 4);
        let p = PartitionStructure::from_assignment(vec![0; 5], 1).unwrap();
        assert!(check_d_stable(&p, &s, 1e-9).unwrap().is_empty());
        let out = run_game(p, GameConfig::default(), 0, &s);
        assert!(!out.hit_cap);
    }

    #[test]
    fn stability_check_guard() {
        let s = synthetic(13, 2, 4);
        let p = PartitionStructure::from_assignment(vec![0; 13], 2).unwrap();
        assert!(matches!(check_d_stable(&p, &s, 1e-9), Err(CoalitionError::TooLarge { .. })));
    }

    #[test]
    fn perturbed_partition_usually_has_deviation() {
        let mut found = 0;
        for seed in 0..20 {
            let s = synthetic(8, 3, 100 + seed);
            let out = run_game(PartitionStructure::random(8, 3, seed, 0).unwrap(), GameConfig::default(), 0, &s);
            let md = (seed as usize) % 8;
            let to = (out.result.partition.server_of(md) + 1) % 3;
            let perturbed = out.result.partition.switched(md, to);
            if !check_d_stable(&perturbed, &s, 1e-9).unwrap().is_empty() {
                found += 1;
            }
        }
        assert!(found >= 15, "{found}");
    }

    #[test]
    fn cap_is_reported() {
        let s = synthetic(10, 3, 11);
        let cfg = GameConfig { max_iterations: 3, ..GameConfig::default() };
        let out = run_game(PartitionStructure::from_assignment(vec![0; 10], 3).unwrap(), cfg, 0, &s);
        assert!(out.hit_cap);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn same_seed_same_trace() {
        let s = synthetic(9, 3, 12);
        let p = PartitionStructure::random(9, 3, 1, 0).unwrap();
        let cfg = GameConfig { seed: 77, ..GameConfig::default() };
        assert_eq!(run_game(p.clone(), cfg, 4, &s).trace, run_game(p, cfg, 4, &s).trace);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn game_converges_to_stable_partition(n in 1usize..=12, m in 1usize..=3, seed in 0u64..10_000) {
            let s = synthetic(n, m, seed);
            let p = PartitionStructure::random(n, m, seed, 1).unwrap();
            let out = run_game(p.clone(), GameConfig { seed, ..GameConfig::default() }, 0, &s);
            prop_assert!(!out.hit_cap);
            prop_assert!(out.result.partition.is_valid());
            prop_assert!(out.result.welfare >= out.initial_welfare);
            let mut last = out.initial_welfare;
            for r in out.accepted() {
                prop_assert!(r.welfare > last);
                last = r.welfare;
            }
            prop_assert!(check_d_stable(&out.result.partition, &s, 1e-9).unwrap().is_empty());

            // replaying accepted moves never revisits a partition
            let mut seen = HashSet::new();
            let mut cur = p;
            seen.insert(cur.clone());
            for r in out.accepted() {
                cur = match r.kind {
                    MoveKind::Switch => cur.switched(r.a, r.b),
                    MoveKind::Exchange => cur.exchanged(r.a, r.b),
                };
                prop_assert!(seen.insert(cur.clone()));
            }
            prop_assert_eq!(&cur, &out.result.partition);
        }
    }
}
