//! One replication of the event-driven storage simulation.
//!
//! Every server runs an independent FIFO queue of *jobs* (single-copy
//! downloads). A request finishes when its systematic copy completes or when
//! both halves of any of its recovery pairs have completed, whichever comes
//! first; remaining copies are cancelled. Queued copies of finished requests
//! are removed lazily; in-service copies are cancelled by invalidating their
//! completion token, so stale heap events are simply skipped.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::rng::{cold_stream, stream_rng, STREAM_ARRIVAL_HOT, STREAM_DISPATCH, STREAM_SERVER_BASE};
use super::stats::{summarize, RepClass};
use super::{ArrivalModel, SchedulingPolicy, SimConfig};
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};

/// A group whose redundant work was abandoned (fairness-first preemption).
const HALF_DEAD: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CopyRef {
    slot: u32,
    gen: u32,
}

/// One queued or in-service download: a copy of request `of`, either the
/// systematic copy (`group: None`) or one half of recovery pair `group`.
#[derive(Debug, Clone, Copy)]
struct Job {
    of: CopyRef,
    group: Option<u16>,
}

#[derive(Debug)]
struct Request {
    gen: u32,
    seq: u64,
    symbol: usize,
    cold: bool,
    arrival: f64,
    jtype: Option<u16>,
    done: bool,
    /// Completed-half count per recovery group (or `HALF_DEAD`).
    halves: Vec<u8>,
    /// Servers currently serving a copy of this request.
    serving: Vec<usize>,
}

struct Server {
    dist: ServiceDistribution,
    rng: ChaCha12Rng,
    queue: VecDeque<Job>,
    serving: Option<(Job, u64)>,
    token: u64,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Completion { server: usize, token: u64 },
    Arrival { class: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// Completions sort before arrivals at equal times.
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.rank.cmp(&other.rank))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Raw per-replication outputs, summarized before leaving the engine.
#[derive(Debug, Clone)]
pub(crate) struct RepOutcome {
    pub hot: Option<RepClass>,
    pub cold: Option<RepClass>,
    /// Post-warmup service-type counts (fixed-hot replicate-to-all only).
    pub fj_counts: Option<Vec<u64>>,
    /// Post-warmup type-to-type transition counts.
    pub transitions: Option<Vec<Vec<u64>>>,
    /// (systematic wins, decided downloads) among post-warmup completions.
    pub sys_wins: Option<(u64, u64)>,
    pub throughput: f64,
    pub events: u64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    now: f64,
    heap: BinaryHeap<Reverse<Event>>,
    event_seq: u64,
    slab: Vec<Request>,
    free: Vec<u32>,
    servers: Vec<Server>,
    arrival_hot: ChaCha12Rng,
    arrival_cold: Vec<ChaCha12Rng>,
    dispatch: ChaCha12Rng,
    /// Living fixed-hot requests in arrival order (head first).
    hot_ring: VecDeque<CopyRef>,
    track_hot_order: bool,
    hot_arrivals: u64,
    cold_arrivals: u64,
    last_hot_departed: Option<u64>,
    in_system: usize,
    hot_completed: u64,
    events_processed: u64,
    hot_sojourns: Vec<f64>,
    hot_types: Vec<u16>,
    hot_sys_wins: Vec<bool>,
    cold_sojourns: Vec<f64>,
    warmup: usize,
    warmup_end_time: f64,
    last_hot_time: f64,
}

fn exp_sample(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, replication: u32) -> Self {
        let n = cfg.topology.n_servers();
        let mut dists = vec![cfg.service; n];
        for &(server, d) in &cfg.service_overrides {
            dists[server] = d;
        }
        let servers = dists
            .into_iter()
            .enumerate()
            .map(|(i, dist)| Server {
                dist,
                rng: stream_rng(cfg.seed, replication, STREAM_SERVER_BASE + i as u64),
                queue: VecDeque::new(),
                serving: None,
                token: 0,
            })
            .collect();
        let arrival_cold = (0..cfg.topology.symbols())
            .map(|s| stream_rng(cfg.seed, replication, cold_stream(n, s)))
            .collect();
        let warmup = (((cfg.num_requests as f64) * cfg.warmup_fraction) as usize)
            .min(cfg.num_requests as usize - 1);
        Engine {
            cfg,
            now: 0.0,
            heap: BinaryHeap::new(),
            event_seq: 0,
            slab: Vec::new(),
            free: Vec::new(),
            servers,
            arrival_hot: stream_rng(cfg.seed, replication, STREAM_ARRIVAL_HOT),
            arrival_cold,
            dispatch: stream_rng(cfg.seed, replication, STREAM_DISPATCH),
            hot_ring: VecDeque::new(),
            track_hot_order: matches!(cfg.policy, SchedulingPolicy::ReplicateToAll)
                && matches!(cfg.arrivals, ArrivalModel::FixedHot { .. }),
            hot_arrivals: 0,
            cold_arrivals: 0,
            last_hot_departed: None,
            in_system: 0,
            hot_completed: 0,
            events_processed: 0,
            hot_sojourns: Vec::with_capacity(cfg.num_requests as usize),
            hot_types: Vec::new(),
            hot_sys_wins: Vec::new(),
            cold_sojourns: Vec::new(),
            warmup,
            warmup_end_time: 0.0,
            last_hot_time: 0.0,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.event_seq += 1;
        let rank = matches!(kind, EventKind::Arrival { .. }) as u8;
        self.heap.push(Reverse(Event { time, rank, seq: self.event_seq, kind }));
    }

    fn seed_arrivals(&mut self) {
        let hot_rate = self.cfg.hot_rate();
        let t = exp_sample(&mut self.arrival_hot, hot_rate);
        self.schedule(t, EventKind::Arrival { class: 0 });
        if let ArrivalModel::HotCold { cold_rate, .. } = self.cfg.arrivals {
            if cold_rate > 0.0 {
                for sym in 1..self.cfg.topology.symbols() {
                    let t = exp_sample(&mut self.arrival_cold[sym], cold_rate);
                    self.schedule(t, EventKind::Arrival { class: sym });
                }
            }
        }
    }

    fn alive(&self, r: CopyRef) -> bool {
        let req = &self.slab[r.slot as usize];
        req.gen == r.gen && !req.done
    }

    fn alloc(&mut self, symbol: usize, cold: bool, seq: u64) -> u32 {
        let groups = self.cfg.topology.groups(symbol).len();
        if let Some(slot) = self.free.pop() {
            let r = &mut self.slab[slot as usize];
            r.seq = seq;
            r.symbol = symbol;
            r.cold = cold;
            r.arrival = self.now;
            r.jtype = None;
            r.done = false;
            r.halves.clear();
            r.halves.resize(groups, 0);
            r.serving.clear();
            slot
        } else {
            self.slab.push(Request {
                gen: 0,
                seq,
                symbol,
                cold,
                arrival: self.now,
                jtype: None,
                done: false,
                halves: vec![0; groups],
                serving: Vec::new(),
            });
            (self.slab.len() - 1) as u32
        }
    }

    /// Distance of a fixed-hot request behind the current head.
    fn lead_distance(&self, seq: u64) -> u64 {
        match self.hot_ring.front() {
            Some(head) => seq - self.slab[head.slot as usize].seq,
            None => 0,
        }
    }

    fn try_start(&mut self, server: usize) {
        if self.servers[server].serving.is_some() {
            return;
        }
        loop {
            let Some(&job) = self.servers[server].queue.front() else { return };
            if !self.alive(job.of) {
                self.servers[server].queue.pop_front();
                continue;
            }
            if let Some(lead) = self.cfg.truncate_lead {
                let seq = self.slab[job.of.slot as usize].seq;
                if self.lead_distance(seq) > (lead.max(1) - 1) as u64 {
                    return; // blocked until the head advances
                }
            }
            self.servers[server].queue.pop_front();
            let srv = &mut self.servers[server];
            let duration = srv.dist.sample(&mut srv.rng);
            srv.token += 1;
            let token = srv.token;
            srv.serving = Some((job, token));
            self.slab[job.of.slot as usize].serving.push(server);
            self.schedule(self.now + duration, EventKind::Completion { server, token });
            if matches!(self.cfg.policy, SchedulingPolicy::FairnessFirst)
                && job.group.is_none()
                && !self.slab[job.of.slot as usize].cold
            {
                self.spawn_redundant(job.of);
            }
            return;
        }
    }

    /// Fairness-first: when a hot request starts systematic service, launch
    /// redundant pair downloads in every fully idle recovery group.
    fn spawn_redundant(&mut self, of: CopyRef) {
        let symbol = self.slab[of.slot as usize].symbol;
        let groups: Vec<(usize, usize)> = self.cfg.topology.groups(symbol).to_vec();
        for (g, (u, v)) in groups.into_iter().enumerate() {
            if self.servers[u].serving.is_some() || self.servers[v].serving.is_some() {
                continue;
            }
            let job = Job { of, group: Some(g as u16) };
            self.servers[u].queue.push_back(job);
            self.servers[v].queue.push_back(job);
            self.try_start(u);
            self.try_start(v);
        }
    }

    /// Removes the in-service copy at `server` without completing it.
    fn cancel_in_service(&mut self, server: usize) {
        if let Some((job, _)) = self.servers[server].serving.take() {
            let serving = &mut self.slab[job.of.slot as usize].serving;
            if let Some(pos) = serving.iter().position(|&s| s == server) {
                serving.swap_remove(pos);
            }
        }
    }

    fn on_arrival(&mut self, class: usize) -> Result<()> {
        // keep the renewal process going
        let (symbol, cold) = if class == 0 {
            let rate = self.cfg.hot_rate();
            let t = self.now + exp_sample(&mut self.arrival_hot, rate);
            self.schedule(t, EventKind::Arrival { class: 0 });
            let symbol = match self.cfg.arrivals {
                ArrivalModel::MixedUniform { .. } => {
                    let u: f64 = self.dispatch.random();
                    let k = self.cfg.topology.symbols();
                    ((u * k as f64) as usize).min(k - 1)
                }
                _ => 0,
            };
            (symbol, false)
        } else {
            let ArrivalModel::HotCold { cold_rate, .. } = self.cfg.arrivals else {
                unreachable!("cold arrivals only exist under hot/cold traffic")
            };
            let t = self.now + exp_sample(&mut self.arrival_cold[class], cold_rate);
            self.schedule(t, EventKind::Arrival { class });
            (class, true)
        };

        if self.in_system + 1 > self.cfg.max_in_system {
            let throughput =
                if self.now > 0.0 { self.hot_completed as f64 / self.now } else { 0.0 };
            return Err(Error::Instability { throughput, arrival_rate: self.cfg.hot_rate() });
        }
        self.in_system += 1;

        let seq = if cold {
            self.cold_arrivals += 1;
            self.cold_arrivals
        } else {
            self.hot_arrivals += 1;
            self.hot_arrivals
        };
        let slot = self.alloc(symbol, cold, seq);
        let of = CopyRef { slot, gen: self.slab[slot as usize].gen };

        if self.track_hot_order {
            self.hot_ring.push_back(of);
            if self.hot_ring.len() == 1 {
                self.slab[slot as usize].jtype = Some(0);
            }
        }

        match (&self.cfg.policy, cold) {
            (SchedulingPolicy::ReplicateToAll, false) => {
                let systematic = self.cfg.topology.systematic(symbol);
                let groups: Vec<(usize, usize)> = self.cfg.topology.groups(symbol).to_vec();
                self.servers[systematic].queue.push_back(Job { of, group: None });
                self.try_start(systematic);
                for (g, (u, v)) in groups.into_iter().enumerate() {
                    let job = Job { of, group: Some(g as u16) };
                    self.servers[u].queue.push_back(job);
                    self.servers[v].queue.push_back(job);
                    self.try_start(u);
                    self.try_start(v);
                }
            }
            (SchedulingPolicy::SelectOne { weights }, false) => {
                let u: f64 = self.dispatch.random();
                let mut acc = 0.0;
                let mut choice = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        choice = i;
                        break;
                    }
                }
                if choice == 0 {
                    let systematic = self.cfg.topology.systematic(symbol);
                    self.servers[systematic].queue.push_back(Job { of, group: None });
                    self.try_start(systematic);
                } else {
                    let (a, b) = self.cfg.topology.groups(symbol)[choice - 1];
                    let job = Job { of, group: Some((choice - 1) as u16) };
                    self.servers[a].queue.push_back(job);
                    self.servers[b].queue.push_back(job);
                    self.try_start(a);
                    self.try_start(b);
                }
            }
            (SchedulingPolicy::FairnessFirst, false) => {
                // redundant copies are spawned at systematic service start
                let systematic = self.cfg.topology.systematic(symbol);
                self.servers[systematic].queue.push_back(Job { of, group: None });
                self.try_start(systematic);
            }
            (_, true) => {
                let systematic = self.cfg.topology.systematic(symbol);
                if matches!(self.cfg.policy, SchedulingPolicy::FairnessFirst) {
                    self.preempt_redundant(systematic);
                }
                self.servers[systematic].queue.push_back(Job { of, group: None });
                self.try_start(systematic);
            }
        }
        Ok(())
    }

    /// Fairness-first guarantee: a cold arrival evicts a redundant hot copy
    /// from its server immediately; the copy's sibling half is abandoned too
    /// and the group takes no further part in that hot request.
    fn preempt_redundant(&mut self, server: usize) {
        let Some((job, _)) = self.servers[server].serving else { return };
        let Some(group) = job.group else { return };
        if self.slab[job.of.slot as usize].cold {
            return;
        }
        self.cancel_in_service(server);
        let slot = job.of.slot as usize;
        let g = group as usize;
        let sibling = self.slab[slot].serving.iter().copied().find(|&s| {
            matches!(
                self.servers[s].serving,
                Some((other, _)) if other.of == job.of && other.group == Some(group)
            )
        });
        self.slab[slot].halves[g] = HALF_DEAD;
        if let Some(s2) = sibling {
            self.cancel_in_service(s2);
            self.try_start(s2);
        }
    }

    fn on_completion(&mut self, server: usize, token: u64) {
        match self.servers[server].serving {
            Some((_, tok)) if tok == token => {}
            _ => return, // superseded by cancellation or restart
        }
        let (job, _) = self.servers[server].serving.take().expect("checked above");
        let slot = job.of.slot as usize;
        debug_assert!(self.alive(job.of), "in-service copy of a dead request");
        if let Some(pos) = self.slab[slot].serving.iter().position(|&s| s == server) {
            self.slab[slot].serving.swap_remove(pos);
        }
        match job.group {
            None => self.depart(job.of, true),
            Some(g) => {
                let halves = &mut self.slab[slot].halves[g as usize];
                debug_assert!(*halves < 2, "completion in a finished or dead group");
                *halves += 1;
                if *halves == 2 {
                    self.depart(job.of, false);
                }
            }
        }
        self.try_start(server);
    }

    fn depart(&mut self, of: CopyRef, systematic_win: bool) {
        let slot = of.slot as usize;
        let (cold, seq, arrival, jtype) = {
            let req = &mut self.slab[slot];
            req.done = true;
            (req.cold, req.seq, req.arrival, req.jtype)
        };
        let mut to_start: Vec<usize> = Vec::new();
        while let Some(server) = self.slab[slot].serving.pop() {
            self.servers[server].serving = None;
            to_start.push(server);
        }
        self.in_system -= 1;
        self.slab[slot].gen = self.slab[slot].gen.wrapping_add(1);
        self.free.push(of.slot);

        let sojourn = self.now - arrival;
        if cold {
            self.cold_sojourns.push(sojourn);
        } else {
            if self.track_hot_order {
                assert_eq!(
                    seq,
                    self.last_hot_departed.map_or(1, |s| s + 1),
                    "hot departures must stay in arrival order"
                );
                self.last_hot_departed = Some(seq);
                self.hot_types.push(jtype.expect("request classified when it became head"));
            }
            if matches!(self.cfg.policy, SchedulingPolicy::ReplicateToAll) {
                self.hot_sys_wins.push(systematic_win);
            }
            self.hot_sojourns.push(sojourn);
            self.hot_completed += 1;
            self.last_hot_time = self.now;
            if self.hot_completed as usize == self.warmup {
                self.warmup_end_time = self.now;
            }
            if self.track_hot_order {
                let front = self.hot_ring.pop_front().expect("departing head in ring");
                debug_assert_eq!(front, of);
                self.advance_head();
            }
        }
        for server in to_start {
            self.try_start(server);
        }
        if self.cfg.truncate_lead.is_some() {
            // the head moved: previously blocked servers may start now
            for server in 0..self.servers.len() {
                self.try_start(server);
            }
        }
    }

    /// Classifies the new head request and, when configured, restarts its
    /// already-running copies.
    fn advance_head(&mut self) {
        let Some(&head) = self.hot_ring.front() else { return };
        let slot = head.slot as usize;
        if self.slab[slot].jtype.is_none() {
            let leads = self.slab[slot]
                .halves
                .iter()
                .filter(|&&h| {
                    debug_assert!(h <= 1, "group finished before its request became head");
                    h == 1
                })
                .count();
            self.slab[slot].jtype = Some(leads as u16);
            if self.cfg.restart_on_hol {
                let serving = self.slab[slot].serving.clone();
                for server in serving {
                    let srv = &mut self.servers[server];
                    let Some((job, _)) = srv.serving.take() else { continue };
                    let duration = srv.dist.sample(&mut srv.rng);
                    srv.token += 1;
                    let token = srv.token;
                    srv.serving = Some((job, token));
                    self.schedule(self.now + duration, EventKind::Completion { server, token });
                }
            }
        }
    }

    fn finish(self) -> RepOutcome {
        let w = self.warmup;
        let hot = summarize(&self.hot_sojourns[w.min(self.hot_sojourns.len())..]);
        let wc = (self.cold_sojourns.len() as f64 * self.cfg.warmup_fraction) as usize;
        let cold = summarize(&self.cold_sojourns[wc..]);

        let (fj_counts, transitions) = if self.track_hot_order {
            let types = &self.hot_types[w.min(self.hot_types.len())..];
            let t = self.cfg.topology.t();
            let mut counts = vec![0u64; t + 1];
            let mut trans = vec![vec![0u64; t + 1]; t + 1];
            for &j in types {
                counts[j as usize] += 1;
            }
            for pair in types.windows(2) {
                trans[pair[0] as usize][pair[1] as usize] += 1;
            }
            (Some(counts), Some(trans))
        } else {
            (None, None)
        };
        let sys_wins = (!self.hot_sys_wins.is_empty()).then(|| {
            let wins = &self.hot_sys_wins[w.min(self.hot_sys_wins.len())..];
            (wins.iter().filter(|&&x| x).count() as u64, wins.len() as u64)
        });
        let post = self.hot_sojourns.len().saturating_sub(w);
        let span = self.last_hot_time - self.warmup_end_time;
        let throughput = if post > 0 && span > 0.0 { post as f64 / span } else { 0.0 };
        RepOutcome {
            hot,
            cold,
            fj_counts,
            transitions,
            sys_wins,
            throughput,
            events: self.events_processed,
        }
    }
}

pub(crate) fn run_replication(cfg: &SimConfig, replication: u32) -> Result<RepOutcome> {
    let mut e = Engine::new(cfg, replication);
    e.seed_arrivals();
    while e.hot_completed < cfg.num_requests {
        let Reverse(event) = e.heap.pop().expect("arrival chain keeps the heap nonempty");
        e.now = event.time;
        e.events_processed += 1;
        match event.kind {
            EventKind::Arrival { class } => e.on_arrival(class)?,
            EventKind::Completion { server, token } => e.on_completion(server, token),
        }
    }
    Ok(e.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::AccessTopology;

    fn base_config(t: usize, rate: f64) -> SimConfig {
        let mut cfg = SimConfig::new(
            AccessTopology::single_symbol(t).unwrap(),
            SchedulingPolicy::ReplicateToAll,
            ArrivalModel::FixedHot { rate },
            ServiceDistribution::exp(1.0).unwrap(),
        );
        cfg.num_requests = 20_000;
        cfg.replications = 1;
        cfg
    }

    #[test]
    fn single_server_is_mm1() {
        let mut cfg = base_config(0, 0.5);
        cfg.num_requests = 200_000;
        let out = run_replication(&cfg, 0).unwrap();
        let hot = out.hot.unwrap();
        let mean = hot.sum / hot.count as f64;
        assert!((mean - 2.0).abs() < 0.1, "M/M/1 mean {mean}, expected 2.0");
    }

    #[test]
    fn replications_are_reproducible() {
        let cfg = base_config(1, 0.6);
        let a = run_replication(&cfg, 0).unwrap();
        let b = run_replication(&cfg, 0).unwrap();
        assert_eq!(a.hot.as_ref().unwrap().sum, b.hot.as_ref().unwrap().sum);
        let c = run_replication(&cfg, 1).unwrap();
        assert_ne!(a.hot.unwrap().sum, c.hot.unwrap().sum);
    }

    #[test]
    fn types_stay_within_range_and_mostly_zero() {
        let cfg = base_config(3, 0.5);
        let out = run_replication(&cfg, 3).unwrap();
        let counts = out.fj_counts.unwrap();
        assert_eq!(counts.len(), 4);
        let total: u64 = counts.iter().sum();
        assert!(total > 0);
        assert!(counts[0] > total / 2, "type-0 should dominate at rho<1: {counts:?}");
    }

    #[test]
    fn overload_aborts_with_instability() {
        let mut cfg = base_config(1, 4.0);
        cfg.max_in_system = 300;
        cfg.num_requests = 1_000_000;
        match run_replication(&cfg, 0) {
            Err(Error::Instability { throughput, arrival_rate }) => {
                assert!(throughput < arrival_rate);
                assert_eq!(arrival_rate, 4.0);
            }
            other => panic!("expected instability abort, got {other:?}"),
        }
    }

    #[test]
    fn split_merge_truncation_matches_bound_law() {
        // truncate_lead = 0: only the head occupies recovery servers, which
        // is exactly the split-merge system whose M/G/1 bound is exact
        let mut cfg = base_config(1, 0.6);
        cfg.truncate_lead = Some(0);
        cfg.num_requests = 400_000;
        let out = run_replication(&cfg, 0).unwrap();
        let hot = out.hot.unwrap();
        let mean = hot.sum / hot.count as f64;
        let bound = crate::analytic::reptoall_bounds(1, 0.6, &cfg.service).unwrap();
        let expect = bound.upper_sojourn();
        assert!(
            (mean - expect).abs() / expect < 0.03,
            "split-merge sim {mean} vs exact {expect}"
        );
    }
}
