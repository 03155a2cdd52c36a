//! Round-synchronous congested clique simulation.
//!
//! `n` fully connected nodes exchange messages in lockstep rounds. Every
//! ordered pair of nodes may carry at most one message per round, and each
//! message payload is at most `B` machine words; both limits are enforced,
//! not assumed. Besides plain rounds, the simulator offers *charged
//! primitives* (routing, sorting, central hitting sets) that deliver in one
//! call and bill a configurable constant number of rounds, mirroring how the
//! underlying algorithms are used as black boxes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One machine word; payloads and sort keys are small vectors of these.
pub type Word = u64;

/// Nodes are identified with `0..n` and double as matrix row/column indices.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Vec<Word>,
}

impl Message {
    pub fn new(src: NodeId, dst: NodeId, payload: Vec<Word>) -> Self {
        Message { src, dst, payload }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Max payload words per message (B).
    pub bandwidth_words: usize,
    /// Rounds charged per routing invocation.
    pub cost_route: u64,
    /// Rounds charged per global sort invocation.
    pub cost_sort: u64,
    /// Rounds charged per central hitting-set invocation.
    pub cost_hit: u64,
    /// Executed-round cap; `None` means the default `10 * n * n`.
    pub round_cap: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            bandwidth_words: 3,
            cost_route: 2,
            cost_sort: 2,
            cost_hit: 3,
            round_cap: None,
        }
    }
}

/// Per-execution accounting: every executed round, every primitive
/// invocation, and the peak per-pair load ever observed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub rounds: u64,
    pub charged_rounds: u64,
    pub primitives: BTreeMap<String, u64>,
    pub peak_pair_load: u64,
}

impl RoundLedger {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ledger serializes")
    }

    fn record_round(&mut self) {
        self.rounds += 1;
        self.charged_rounds += 1;
    }

    fn record_primitive(&mut self, name: &str, cost: u64) {
        *self.primitives.entry(name.to_string()).or_insert(0) += 1;
        self.charged_rounds += cost;
    }
}

/// The clique itself. Algorithms hold per-node state externally (indexed by
/// `NodeId`) and move data only through the methods here, so the ledger
/// reflects every message.
pub struct Clique {
    n: usize,
    cfg: SimConfig,
    ledger: RoundLedger,
}

impl Clique {
    pub fn new(n: usize, cfg: SimConfig) -> Self {
        assert!(n >= 2, "clique needs at least two nodes");
        Clique {
            n,
            cfg,
            ledger: RoundLedger::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> RoundLedger {
        self.ledger
    }

    fn round_cap(&self) -> u64 {
        self.cfg
            .round_cap
            .unwrap_or(10 * (self.n as u64) * (self.n as u64))
    }

    fn validate(&self, m: &Message) -> Result<()> {
        if m.src >= self.n || m.dst >= self.n {
            return Err(Error::BandwidthViolation(format!(
                "message endpoint out of range: {} -> {}",
                m.src, m.dst
            )));
        }
        if m.payload.len() > self.cfg.bandwidth_words {
            return Err(Error::BandwidthViolation(format!(
                "payload of {} words from node {} exceeds B = {}",
                m.payload.len(),
                m.src,
                self.cfg.bandwidth_words
            )));
        }
        Ok(())
    }

    /// Execute one lockstep round: validate all outboxes (at most one message
    /// per ordered pair, payloads within B), deliver, and return the inboxes
    /// sorted by sender. Self-addressed messages are delivered for free and
    /// do not count against the pair budget.
    pub fn exchange(&mut self, outboxes: Vec<Vec<Message>>) -> Result<Vec<Vec<Message>>> {
        assert_eq!(outboxes.len(), self.n, "one outbox per node");
        if self.ledger.rounds >= self.round_cap() {
            return Err(Error::NonTermination {
                cap: self.round_cap(),
                rounds: self.ledger.rounds,
            });
        }
        let mut seen = vec![false; self.n * self.n];
        let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); self.n];
        let mut any = false;
        for (src, outbox) in outboxes.into_iter().enumerate() {
            for m in outbox {
                self.validate(&m)?;
                if m.src != src {
                    return Err(Error::BandwidthViolation(format!(
                        "node {} tried to send as node {}",
                        src, m.src
                    )));
                }
                if m.src != m.dst {
                    let slot = m.src * self.n + m.dst;
                    if seen[slot] {
                        return Err(Error::BandwidthViolation(format!(
                            "two messages on ordered pair {} -> {} in one round",
                            m.src, m.dst
                        )));
                    }
                    seen[slot] = true;
                    any = true;
                }
                inboxes[m.dst].push(m);
            }
        }
        if any {
            self.ledger.peak_pair_load = self.ledger.peak_pair_load.max(1);
        }
        for inbox in &mut inboxes {
            inbox.sort_by(|a, b| (a.src, &a.payload).cmp(&(b.src, &b.payload)));
        }
        self.ledger.record_round();
        Ok(inboxes)
    }

    /// Routing primitive: each node sends at most `n` messages and receives
    /// at most `n`. Delivered atomically and charged `cost_route` rounds.
    pub fn route_all(&mut self, demands: Vec<Message>) -> Result<Vec<Vec<Message>>> {
        let mut sent = vec![0usize; self.n];
        let mut recv = vec![0usize; self.n];
        for m in &demands {
            self.validate(m)?;
            sent[m.src] += 1;
            recv[m.dst] += 1;
        }
        for v in 0..self.n {
            if sent[v] > self.n {
                return Err(Error::DemandViolation {
                    node: v,
                    dir: "send",
                    count: sent[v],
                    limit: self.n,
                });
            }
            if recv[v] > self.n {
                return Err(Error::DemandViolation {
                    node: v,
                    dir: "receive",
                    count: recv[v],
                    limit: self.n,
                });
            }
        }
        self.ledger.record_primitive("route_all", self.cfg.cost_route);
        Ok(self.deliver(demands))
    }

    /// Bulk transfer: repeated routing for loads above `n` per node. Charges
    /// `ceil(max load / n)` routing invocations and delivers everything.
    pub fn route_bulk(&mut self, demands: Vec<Message>) -> Result<Vec<Vec<Message>>> {
        let mut sent = vec![0usize; self.n];
        let mut recv = vec![0usize; self.n];
        for m in &demands {
            self.validate(m)?;
            sent[m.src] += 1;
            recv[m.dst] += 1;
        }
        let load = sent.iter().chain(recv.iter()).copied().max().unwrap_or(0);
        let waves = load.div_ceil(self.n).max(1);
        for _ in 0..waves {
            self.ledger.record_primitive("route_all", self.cfg.cost_route);
        }
        Ok(self.deliver(demands))
    }

    fn deliver(&self, demands: Vec<Message>) -> Vec<Vec<Message>> {
        let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); self.n];
        for m in demands {
            inboxes[m.dst].push(m);
        }
        for inbox in &mut inboxes {
            inbox.sort_by(|a, b| (a.src, &a.payload).cmp(&(b.src, &b.payload)));
        }
        inboxes
    }

    /// Sorting primitive: every node contributes exactly `n` entries (pad
    /// with a maximal sentinel); node `i` receives the `i`th batch of the
    /// global lexicographic order. Charged `cost_sort` rounds.
    pub fn sort_global(&mut self, per_node: Vec<Vec<Vec<Word>>>) -> Result<Vec<Vec<Vec<Word>>>> {
        assert_eq!(per_node.len(), self.n);
        for (v, entries) in per_node.iter().enumerate() {
            if entries.len() != self.n {
                return Err(Error::ArityViolation {
                    node: v,
                    count: entries.len(),
                    expected: self.n,
                });
            }
            for e in entries {
                if e.len() > self.cfg.bandwidth_words {
                    return Err(Error::BandwidthViolation(format!(
                        "sort entry of {} words at node {} exceeds B = {}",
                        e.len(),
                        v,
                        self.cfg.bandwidth_words
                    )));
                }
            }
        }
        let mut all: Vec<Vec<Word>> = per_node.into_iter().flatten().collect();
        all.sort();
        self.ledger.record_primitive("sort_global", self.cfg.cost_sort);
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            out.push(all[i * self.n..(i + 1) * self.n].to_vec());
        }
        Ok(out)
    }

    /// Charge one central hitting-set computation (see `hopset::hitting_set`).
    pub fn charge_hitting_set(&mut self) {
        self.ledger.record_primitive("hitting_set", self.cfg.cost_hit);
    }

    /// Record a pipeline restart (density-estimate doubling).
    pub fn record_restart(&mut self) {
        self.ledger.record_primitive("mm_restart", 0);
    }

    /// One node sends the same payload to everyone else: one round per
    /// `B`-word chunk of the payload.
    pub fn broadcast_from(&mut self, src: NodeId, words: &[Word]) -> Result<Vec<Vec<Word>>> {
        let b = self.cfg.bandwidth_words;
        let mut received = vec![Vec::new(); self.n];
        received[src] = words.to_vec();
        let chunks: Vec<&[Word]> = if words.is_empty() {
            vec![&[]]
        } else {
            words.chunks(b).collect()
        };
        for chunk in chunks {
            let mut outboxes = vec![Vec::new(); self.n];
            for dst in 0..self.n {
                if dst != src {
                    outboxes[src].push(Message::new(src, dst, chunk.to_vec()));
                }
            }
            let inboxes = self.exchange(outboxes)?;
            for (dst, inbox) in inboxes.into_iter().enumerate() {
                if dst != src {
                    for m in inbox {
                        received[dst].extend(m.payload);
                    }
                }
            }
        }
        Ok(received)
    }

    /// Every node broadcasts its own words to everyone. Returns, per node,
    /// the words of all `n` nodes indexed by sender. All word lists must have
    /// equal length; one round per `B`-word chunk.
    pub fn all_broadcast(&mut self, words: &[Vec<Word>]) -> Result<Vec<Vec<Vec<Word>>>> {
        assert_eq!(words.len(), self.n);
        let len = words[0].len();
        assert!(
            words.iter().all(|w| w.len() == len),
            "all-broadcast payloads must have equal length"
        );
        let b = self.cfg.bandwidth_words;
        let mut received: Vec<Vec<Vec<Word>>> = vec![vec![Vec::new(); self.n]; self.n];
        for v in 0..self.n {
            received[v][v] = words[v].clone();
        }
        let nchunks = if len == 0 { 0 } else { len.div_ceil(b) };
        for chunk in 0..nchunks {
            let lo = chunk * b;
            let hi = (lo + b).min(len);
            let mut outboxes = vec![Vec::new(); self.n];
            for src in 0..self.n {
                for dst in 0..self.n {
                    if dst != src {
                        outboxes[src].push(Message::new(src, dst, words[src][lo..hi].to_vec()));
                    }
                }
            }
            let inboxes = self.exchange(outboxes)?;
            for (dst, inbox) in inboxes.into_iter().enumerate() {
                for m in inbox {
                    received[dst][m.src].extend(m.payload);
                }
            }
        }
        if nchunks == 0 {
            // An empty all-broadcast still synchronizes: charge one round.
            let outboxes = vec![Vec::new(); self.n];
            self.exchange(outboxes)?;
        }
        Ok(received)
    }
}

/// What a node does in one round.
pub enum Step {
    /// Send these messages and keep running.
    Send(Vec<Message>),
    /// Stop participating; inbox is discarded from now on.
    Halt,
}

/// A deterministic per-node state machine: identical state and inbox must
/// produce an identical outbox.
pub trait NodeProgram {
    fn step(&mut self, node: NodeId, round: u64, inbox: &[Message]) -> Step;
}

/// Run `programs` (one per node) in lockstep until all nodes halt. Rounds are
/// counted per delivery: if every node halts before sending anything, the
/// ledger shows zero rounds. Outputs live in the caller's program values.
pub fn run<P: NodeProgram>(programs: &mut [P], cfg: SimConfig) -> Result<RoundLedger> {
    let n = programs.len();
    let mut clique = Clique::new(n, cfg);
    let mut halted = vec![false; n];
    let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); n];
    let mut round = 0u64;
    loop {
        let mut outboxes: Vec<Vec<Message>> = vec![Vec::new(); n];
        let mut all_halted = true;
        for v in 0..n {
            if halted[v] {
                continue;
            }
            match programs[v].step(v, round, &inboxes[v]) {
                Step::Send(msgs) => {
                    outboxes[v] = msgs;
                    all_halted = false;
                }
                Step::Halt => halted[v] = true,
            }
        }
        if all_halted {
            return Ok(clique.into_ledger());
        }
        inboxes = clique.exchange(outboxes)?;
        round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HaltNow;
    impl NodeProgram for HaltNow {
        fn step(&mut self, _v: NodeId, _round: u64, _inbox: &[Message]) -> Step {
            Step::Halt
        }
    }

    #[test]
    fn empty_program_takes_zero_rounds() {
        let mut programs: Vec<HaltNow> = (0..4).map(|_| HaltNow).collect();
        let ledger = run(&mut programs, SimConfig::default()).unwrap();
        assert_eq!(ledger.rounds, 0);
        assert_eq!(ledger.charged_rounds, 0);
    }

    struct Bcast {
        n: usize,
        got: Vec<Word>,
    }
    impl NodeProgram for Bcast {
        fn step(&mut self, v: NodeId, round: u64, inbox: &[Message]) -> Step {
            for m in inbox {
                self.got.extend(&m.payload);
            }
            if round == 0 {
                if v == 0 {
                    let out = (1..self.n).map(|dst| Message::new(0, dst, vec![42])).collect();
                    Step::Send(out)
                } else {
                    Step::Send(vec![])
                }
            } else {
                Step::Halt
            }
        }
    }

    #[test]
    fn single_broadcast_takes_one_round() {
        let n = 5;
        let mut programs: Vec<Bcast> = (0..n).map(|_| Bcast { n, got: vec![] }).collect();
        let ledger = run(&mut programs, SimConfig::default()).unwrap();
        assert_eq!(ledger.rounds, 1);
        let delivered: usize = programs.iter().map(|p| p.got.len()).sum();
        assert_eq!(delivered, n - 1);
        assert!(programs[1..].iter().all(|p| p.got == vec![42]));
    }

    #[test]
    fn double_send_on_one_pair_is_a_bandwidth_violation() {
        let mut clique = Clique::new(3, SimConfig::default());
        let out = vec![
            vec![
                Message::new(0, 1, vec![1]),
                Message::new(0, 1, vec![2]),
            ],
            vec![],
            vec![],
        ];
        match clique.exchange(out) {
            Err(Error::BandwidthViolation(_)) => {}
            other => panic!("expected bandwidth violation, got {other:?}"),
        }
    }

    #[test]
    fn oversized_payload_is_rejected() {
        let mut clique = Clique::new(2, SimConfig::default());
        let out = vec![vec![Message::new(0, 1, vec![0; 4])], vec![]];
        assert!(matches!(
            clique.exchange(out),
            Err(Error::BandwidthViolation(_))
        ));
    }

    #[test]
    fn route_all_empty_still_charges() {
        let mut clique = Clique::new(4, SimConfig::default());
        let inboxes = clique.route_all(vec![]).unwrap();
        assert!(inboxes.iter().all(|i| i.is_empty()));
        assert_eq!(clique.ledger().charged_rounds, 2);
        assert_eq!(clique.ledger().rounds, 0);
        assert_eq!(clique.ledger().primitives["route_all"], 1);
    }

    #[test]
    fn route_all_permutation() {
        let n = 6;
        let mut clique = Clique::new(n, SimConfig::default());
        let demands: Vec<Message> = (0..n)
            .map(|i| Message::new(i, (i + 1) % n, vec![i as Word]))
            .collect();
        let inboxes = clique.route_all(demands).unwrap();
        for (v, inbox) in inboxes.iter().enumerate() {
            assert_eq!(inbox.len(), 1);
            assert_eq!(inbox[0].payload, vec![((v + n - 1) % n) as Word]);
        }
    }

    #[test]
    fn route_all_scatter_from_one_node() {
        let n = 5;
        let mut clique = Clique::new(n, SimConfig::default());
        let demands: Vec<Message> = (1..n).map(|dst| Message::new(0, dst, vec![dst as Word])).collect();
        let inboxes = clique.route_all(demands).unwrap();
        for dst in 1..n {
            assert_eq!(inboxes[dst].len(), 1);
            assert_eq!(inboxes[dst][0].payload, vec![dst as Word]);
        }
    }

    #[test]
    fn route_all_rejects_excess_demand() {
        let n = 3;
        let mut clique = Clique::new(n, SimConfig::default());
        // node 0 receives 2n messages
        let mut demands = Vec::new();
        for src in 1..n {
            for i in 0..n + 1 {
                demands.push(Message::new(src, 0, vec![i as Word]));
            }
        }
        assert!(matches!(
            clique.route_all(demands),
            Err(Error::DemandViolation { .. })
        ));
    }

    #[test]
    fn sort_global_sorted_input_stays_put() {
        let n = 3;
        let mut clique = Clique::new(n, SimConfig::default());
        let per_node: Vec<Vec<Vec<Word>>> = (0..n)
            .map(|i| (0..n).map(|j| vec![(i * n + j) as Word]).collect())
            .collect();
        let out = clique.sort_global(per_node.clone()).unwrap();
        assert_eq!(out, per_node);
    }

    #[test]
    fn sort_global_reverse_input() {
        let n = 4;
        let mut clique = Clique::new(n, SimConfig::default());
        let per_node: Vec<Vec<Vec<Word>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| vec![(n * n - 1 - (i * n + j)) as Word])
                    .collect()
            })
            .collect();
        let out = clique.sort_global(per_node).unwrap();
        for i in 0..n {
            let expect: Vec<Vec<Word>> = (0..n).map(|j| vec![(i * n + j) as Word]).collect();
            assert_eq!(out[i], expect, "node {i} holds keys [i*n, (i+1)*n)");
        }
    }

    #[test]
    fn sort_global_wrong_arity_rejected() {
        let mut clique = Clique::new(2, SimConfig::default());
        let per_node = vec![vec![vec![1]], vec![vec![2], vec![3]]];
        assert!(matches!(
            clique.sort_global(per_node),
            Err(Error::ArityViolation { .. })
        ));
    }

    #[test]
    fn ledger_json_shape() {
        let mut clique = Clique::new(2, SimConfig::default());
        clique.route_all(vec![]).unwrap();
        let json = clique.ledger().to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(parsed.get("rounds").is_some());
        assert!(parsed.get("charged_rounds").is_some());
        assert!(parsed.get("primitives").is_some());
        assert!(parsed.get("peak_pair_load").is_some());
        let back: RoundLedger = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, clique.ledger());
    }
}
