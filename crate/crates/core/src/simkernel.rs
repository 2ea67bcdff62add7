//! Data placement, round-by-round execution with multicast-aware per-edge
//! accounting, capacity cost, output verification and seeded hashing.

use crate::exact::{Ext, Q};
use crate::topology::{EdgeId, NodeId, Topology, TopologyError};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("round {round} out of range, trace has {rounds} rounds")]
    RoundOutOfRange { round: usize, rounds: usize },
    #[error("node {0} is not a compute node")]
    NotCompute(NodeId),
    #[error("element {id} of relation {rel:?} placed twice")]
    DuplicateElement { rel: Rel, id: u64 },
    #[error("send without destinations")]
    NoDestinations,
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(String),
    #[error("negative probability for node {0}")]
    NegativeProbability(NodeId),
    #[error("trace charges edge {0} that has no bandwidth")]
    UnknownEdge(EdgeId),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    R,
    S,
}

/// One tuple: a relation-unique `id` and a join/sort `key`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem {
    pub id: u64,
    pub key: u64,
}

impl Elem {
    pub fn new(id: u64, key: u64) -> Elem {
        Elem { id, key }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Local {
    pub r: Vec<Elem>,
    pub s: Vec<Elem>,
}

impl Local {
    pub fn rel(&self, rel: Rel) -> &[Elem] {
        match rel {
            Rel::R => &self.r,
            Rel::S => &self.s,
        }
    }

    fn rel_mut(&mut self, rel: Rel) -> &mut Vec<Elem> {
        match rel {
            Rel::R => &mut self.r,
            Rel::S => &mut self.s,
        }
    }

    pub fn len(&self) -> u64 {
        (self.r.len() + self.s.len()) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty() && self.s.is_empty()
    }
}

/// Initial placement of `R` and `S` over compute nodes. Every element sits at
/// exactly one node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Distribution {
    locals: BTreeMap<NodeId, Local>,
}

static EMPTY: Local = Local { r: Vec::new(), s: Vec::new() };

impl Distribution {
    pub fn new(locals: BTreeMap<NodeId, Local>) -> Result<Distribution, SimError> {
        for rel in [Rel::R, Rel::S] {
            let mut seen = HashSet::new();
            for l in locals.values() {
                for e in l.rel(rel) {
                    if !seen.insert(e.id) {
                        return Err(SimError::DuplicateElement { rel, id: e.id });
                    }
                }
            }
        }
        Ok(Distribution { locals })
    }

    /// Keys per node; ids are assigned in node order.
    pub fn from_keys(per_node: &[(NodeId, Vec<u64>, Vec<u64>)]) -> Distribution {
        let mut locals: BTreeMap<NodeId, Local> = BTreeMap::new();
        let mut sorted: Vec<_> = per_node.iter().collect();
        sorted.sort_by_key(|x| x.0);
        let (mut rid, mut sid) = (0, 0);
        for (v, rk, sk) in sorted {
            let l = locals.entry(*v).or_default();
            for &k in rk {
                l.r.push(Elem::new(rid, k));
                rid += 1;
            }
            for &k in sk {
                l.s.push(Elem::new(sid, k));
                sid += 1;
            }
        }
        Distribution { locals }
    }

    /// Counts per node; keys equal ids, numbered consecutively in node order.
    pub fn from_counts(per_node: &[(NodeId, u64, u64)]) -> Distribution {
        let mut sorted: Vec<_> = per_node.to_vec();
        sorted.sort_by_key(|x| x.0);
        let (mut r0, mut s0) = (0, 0);
        let mut keys = Vec::new();
        for (v, r, s) in sorted {
            keys.push((v, (r0..r0 + r).collect(), (s0..s0 + s).collect()));
            r0 += r;
            s0 += s;
        }
        Distribution::from_keys(&keys)
    }

    pub fn check_against(&self, t: &Topology) -> Result<(), SimError> {
        for &v in self.locals.keys() {
            if !t.is_compute(v) {
                return Err(SimError::NotCompute(v));
            }
        }
        Ok(())
    }

    pub fn local(&self, v: NodeId) -> &Local {
        self.locals.get(&v).unwrap_or(&EMPTY)
    }

    pub fn locals(&self) -> &BTreeMap<NodeId, Local> {
        &self.locals
    }

    pub fn r_v(&self, v: NodeId) -> u64 {
        self.local(v).r.len() as u64
    }

    pub fn s_v(&self, v: NodeId) -> u64 {
        self.local(v).s.len() as u64
    }

    pub fn n_v(&self, v: NodeId) -> u64 {
        self.local(v).len()
    }

    pub fn r_len(&self) -> u64 {
        self.locals.values().map(|l| l.r.len() as u64).sum()
    }

    pub fn s_len(&self) -> u64 {
        self.locals.values().map(|l| l.s.len() as u64).sum()
    }

    pub fn n(&self) -> u64 {
        self.r_len() + self.s_len()
    }

    /// Dense `N_v` vector indexed by node id.
    pub fn sizes(&self, node_count: usize) -> Vec<u64> {
        (0..node_count).map(|v| self.n_v(v)).collect()
    }

    pub fn all(&self, rel: Rel) -> Vec<Elem> {
        self.locals.values().flat_map(|l| l.rel(rel).iter().copied()).collect()
    }

    /// The same placement with the roles of `R` and `S` exchanged.
    pub fn swapped(&self) -> Distribution {
        Distribution {
            locals: self.locals.iter().map(|(v, l)| (*v, Local { r: l.s.clone(), s: l.r.clone() })).collect(),
        }
    }

    /// A copy where the given relation is emptied at the listed nodes.
    pub fn without(&self, rel: Rel, nodes: &BTreeSet<NodeId>) -> Distribution {
        let mut locals = self.locals.clone();
        for v in nodes {
            if let Some(l) = locals.get_mut(v) {
                l.rel_mut(rel).clear();
            }
        }
        Distribution { locals }
    }
}

/// Per-round, per-edge tuple counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrafficTrace {
    pub rounds: Vec<BTreeMap<EdgeId, u64>>,
    pub element_width_bits: u32,
}

pub const DEFAULT_WIDTH_BITS: u32 = 64;

impl TrafficTrace {
    pub fn new(rounds: usize, element_width_bits: u32) -> TrafficTrace {
        TrafficTrace { rounds: vec![BTreeMap::new(); rounds], element_width_bits }
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn charge(&mut self, round: usize, edge: EdgeId, count: u64) -> Result<(), SimError> {
        let rounds = self.rounds.len();
        let r = self.rounds.get_mut(round).ok_or(SimError::RoundOutOfRange { round, rounds })?;
        if count > 0 {
            *r.entry(edge).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn on_edge(&self, round: usize, edge: EdgeId) -> u64 {
        self.rounds.get(round).and_then(|r| r.get(&edge)).copied().unwrap_or(0)
    }

    /// Tuples arriving at `v` over all its incoming edges in a round.
    pub fn inbound(&self, t: &Topology, round: usize, v: NodeId) -> u64 {
        t.neighbors(v).iter().filter_map(|&u| t.edge_id(u, v)).map(|e| self.on_edge(round, e)).sum()
    }

    /// Tuples leaving `v` over all its outgoing edges in a round.
    pub fn outbound(&self, t: &Topology, round: usize, v: NodeId) -> u64 {
        t.neighbors(v).iter().filter_map(|&u| t.edge_id(v, u)).map(|e| self.on_edge(round, e)).sum()
    }

    /// CSV rows `round,edge_from,edge_to,tuples`.
    pub fn to_csv(&self, t: &Topology) -> String {
        let mut out = String::from("round,edge_from,edge_to,tuples\n");
        for (i, r) in self.rounds.iter().enumerate() {
            for (&e, &c) in r {
                let ed = &t.edges()[e];
                out.push_str(&format!("{},{},{},{}\n", i + 1, t.label(ed.from), t.label(ed.to), c));
            }
        }
        out
    }
}

/// Charge `count` tuples once on every edge of the Steiner union of paths
/// from `src` to the destinations.
pub fn send(
    trace: &mut TrafficTrace,
    t: &Topology,
    round: usize,
    src: NodeId,
    dests: &[NodeId],
    count: u64,
) -> Result<(), SimError> {
    if dests.is_empty() {
        return Err(SimError::NoDestinations);
    }
    let edges = t.steiner_edges(src, dests)?;
    for e in edges {
        trace.charge(round, e, count)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub tuple_cost: Ext,
    pub bit_cost: Ext,
    pub rounds: usize,
    /// Bottleneck edge and its cost in each round; `None` for an idle round.
    pub per_edge_max: Vec<Option<(EdgeId, Ext)>>,
    pub seed: u64,
    pub diagnostic: Option<String>,
}

impl CostReport {
    pub fn round_cost(&self, i: usize) -> Ext {
        self.per_edge_max[i].as_ref().map(|x| x.1.clone()).unwrap_or_else(Ext::zero)
    }
}

pub fn cost(trace: &TrafficTrace, bandwidths: &[Ext], seed: u64) -> Result<CostReport, SimError> {
    let width = Q::from_integer(BigInt::from(trace.element_width_bits));
    let mut tuple_cost = Ext::zero();
    let mut bit_cost = Ext::zero();
    let mut per_edge_max = Vec::with_capacity(trace.rounds.len());
    let mut diagnostic = None;
    for round in &trace.rounds {
        let mut best: Option<(EdgeId, Ext)> = None;
        let mut best_bits = Ext::zero();
        for (&e, &c) in round {
            let w = bandwidths.get(e).ok_or(SimError::UnknownEdge(e))?;
            let cq = Q::from_integer(BigInt::from(c));
            let x = w.per(&cq);
            if x.is_inf() && diagnostic.is_none() {
                diagnostic = Some(format!("edge {e} has zero bandwidth and carries {c} tuples"));
            }
            let bits = w.per(&(cq * &width));
            if bits > best_bits {
                best_bits = bits;
            }
            if best.as_ref().is_none_or(|b| x > b.1) {
                best = Some((e, x));
            }
        }
        if let Some((_, x)) = &best {
            tuple_cost = tuple_cost.add(x);
        }
        bit_cost = bit_cost.add(&best_bits);
        per_edge_max.push(best);
    }
    Ok(CostReport { tuple_cost, bit_cost, rounds: trace.rounds.len(), per_edge_max, seed, diagnostic })
}

/// What each node holds after the final round, plus sorted output runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeState {
    pub held: BTreeMap<NodeId, Local>,
    pub runs: BTreeMap<NodeId, Vec<Elem>>,
}

impl NodeState {
    pub fn from_dist(t: &Topology, dist: &Distribution) -> NodeState {
        let mut held: BTreeMap<NodeId, Local> = t.compute_nodes().iter().map(|&v| (v, Local::default())).collect();
        for (v, l) in dist.locals() {
            held.insert(*v, l.clone());
        }
        NodeState { held, runs: BTreeMap::new() }
    }

    pub fn held(&self, v: NodeId) -> &Local {
        self.held.get(&v).unwrap_or(&EMPTY)
    }

    pub fn deliver(&mut self, v: NodeId, rel: Rel, elems: &[Elem]) {
        self.held.entry(v).or_default().rel_mut(rel).extend_from_slice(elems);
    }
}

/// A protocol run in progress: topology, trace and node state.
pub struct Sim<'t> {
    pub topo: &'t Topology,
    pub trace: TrafficTrace,
    pub state: NodeState,
    paths: HashMap<(NodeId, Vec<NodeId>), Vec<EdgeId>>,
}

impl<'t> Sim<'t> {
    pub fn new(topo: &'t Topology, dist: &Distribution, rounds: usize, width: u32) -> Sim<'t> {
        Sim {
            topo,
            trace: TrafficTrace::new(rounds, width),
            state: NodeState::from_dist(topo, dist),
            paths: HashMap::new(),
        }
    }

    /// Multicast `elems` of relation `rel` from `src`; every destination other
    /// than `src` receives a copy.
    pub fn ship(
        &mut self,
        round: usize,
        src: NodeId,
        dests: &[NodeId],
        rel: Rel,
        elems: &[Elem],
    ) -> Result<(), SimError> {
        if elems.is_empty() {
            return Ok(());
        }
        if dests.is_empty() {
            return Err(SimError::NoDestinations);
        }
        let mut key = dests.to_vec();
        key.sort_unstable();
        key.dedup();
        let key = (src, key);
        if !self.paths.contains_key(&key) {
            let edges: Vec<EdgeId> = self.topo.steiner_edges(src, &key.1)?.into_iter().collect();
            self.paths.insert(key.clone(), edges);
        }
        let count = elems.len() as u64;
        for &e in &self.paths[&key] {
            self.trace.charge(round, e, count)?;
        }
        for &d in &key.1 {
            if d != src {
                if !self.topo.is_compute(d) {
                    return Err(SimError::NotCompute(d));
                }
                self.state.deliver(d, rel, elems);
            }
        }
        Ok(())
    }

    /// Ship a batch grouped by `(src, destination set)`.
    pub fn ship_groups(
        &mut self,
        round: usize,
        rel: Rel,
        groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>>,
    ) -> Result<(), SimError> {
        for ((src, dests), elems) in groups {
            self.ship(round, src, &dests, rel, &elems)?;
        }
        Ok(())
    }

    pub fn finish(self) -> (TrafficTrace, NodeState) {
        (self.trace, self.state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict<W> {
    pub ok: bool,
    pub witness: Vec<W>,
}

const WITNESS_LIMIT: usize = 16;

impl<W> Verdict<W> {
    fn from_witness(witness: Vec<W>) -> Verdict<W> {
        Verdict { ok: witness.is_empty(), witness }
    }
}

/// Every key of `R ∩ S` is held as an `R` and an `S` element at one node.
pub fn verify_intersection(state: &NodeState, dist: &Distribution) -> Verdict<u64> {
    let rk: BTreeSet<u64> = dist.all(Rel::R).iter().map(|e| e.key).collect();
    let sk: BTreeSet<u64> = dist.all(Rel::S).iter().map(|e| e.key).collect();
    let mut met = HashSet::new();
    for l in state.held.values() {
        let here: HashSet<u64> = l.r.iter().map(|e| e.key).collect();
        met.extend(l.s.iter().map(|e| e.key).filter(|k| here.contains(k)));
    }
    let missing: Vec<u64> = rk.intersection(&sk).filter(|k| !met.contains(*k)).copied().take(WITNESS_LIMIT).collect();
    Verdict::from_witness(missing)
}

/// Checks that every `(r, s)` with `r` in `rows` and `s` in `cols` meets at
/// some node. Rows holding the same node set share one union check.
fn pairs_covered(state: &NodeState, rows: &[Elem], cols: &[Elem], limit: usize) -> Vec<(u64, u64)> {
    let row_ids: HashSet<u64> = rows.iter().map(|e| e.id).collect();
    let col_ids: HashSet<u64> = cols.iter().map(|e| e.id).collect();
    let mut holders: HashMap<u64, Vec<NodeId>> = HashMap::new();
    let mut col_held: BTreeMap<NodeId, HashSet<u64>> = BTreeMap::new();
    for (&v, l) in &state.held {
        for e in &l.r {
            if row_ids.contains(&e.id) {
                holders.entry(e.id).or_default().push(v);
            }
        }
        col_held.insert(v, l.s.iter().map(|e| e.id).filter(|i| col_ids.contains(i)).collect());
    }
    let mut groups: BTreeMap<Vec<NodeId>, Vec<u64>> = BTreeMap::new();
    for e in rows {
        let mut sig = holders.remove(&e.id).unwrap_or_default();
        sig.sort_unstable();
        sig.dedup();
        groups.entry(sig).or_default().push(e.id);
    }
    let mut out = Vec::new();
    for (sig, ids) in groups {
        let mut union: HashSet<u64> = HashSet::new();
        for v in &sig {
            union.extend(col_held[v].iter().copied());
        }
        if let Some(j) = cols.iter().map(|e| e.id).filter(|j| !union.contains(j)).min() {
            for &i in &ids {
                out.push((i, j));
                if out.len() >= limit {
                    return out;
                }
            }
        }
    }
    out
}

/// Every pair of `R × S` (by element id) meets at some node.
pub fn verify_cartesian(state: &NodeState, dist: &Distribution) -> Verdict<(u64, u64)> {
    Verdict::from_witness(pairs_covered(state, &dist.all(Rel::R), &dist.all(Rel::S), WITNESS_LIMIT))
}

/// Every `(r, s)` with equal keys meets at some node. Witness `(key, r, s)`.
pub fn verify_join(state: &NodeState, dist: &Distribution) -> Verdict<(u64, u64, u64)> {
    let mut by_key: BTreeMap<u64, (Vec<Elem>, Vec<Elem>)> = BTreeMap::new();
    for e in dist.all(Rel::R) {
        by_key.entry(e.key).or_default().0.push(e);
    }
    for e in dist.all(Rel::S) {
        by_key.entry(e.key).or_default().1.push(e);
    }
    let mut by_node: BTreeMap<u64, NodeState> = BTreeMap::new();
    for (&v, l) in &state.held {
        for e in &l.r {
            if by_key.get(&e.key).is_some_and(|x| !x.1.is_empty()) {
                by_node.entry(e.key).or_default().deliver(v, Rel::R, &[*e]);
            }
        }
        for e in &l.s {
            if by_key.get(&e.key).is_some_and(|x| !x.0.is_empty()) {
                by_node.entry(e.key).or_default().deliver(v, Rel::S, &[*e]);
            }
        }
    }
    let empty = NodeState::default();
    let mut witness = Vec::new();
    for (k, (rs, ss)) in &by_key {
        if rs.is_empty() || ss.is_empty() {
            continue;
        }
        let st = by_node.get(k).unwrap_or(&empty);
        let mut st = st.clone();
        for v in state.held.keys() {
            st.held.entry(*v).or_default();
        }
        for (i, j) in pairs_covered(&st, rs, ss, WITNESS_LIMIT - witness.len()) {
            witness.push((*k, i, j));
        }
        if witness.len() >= WITNESS_LIMIT {
            break;
        }
    }
    Verdict::from_witness(witness)
}

/// The runs concatenated in `order` are nondecreasing, use every input `R`
/// element exactly once, and each run is held by its node.
pub fn verify_sorted(state: &NodeState, dist: &Distribution, order: &[NodeId]) -> bool {
    let mut prev: Option<u64> = None;
    let mut ids = Vec::new();
    for v in order {
        let Some(run) = state.runs.get(v) else { continue };
        let held: HashSet<u64> = state.held(*v).r.iter().map(|e| e.id).collect();
        for e in run {
            if prev.is_some_and(|p| e.key < p) || !held.contains(&e.id) {
                return false;
            }
            prev = Some(e.key);
            ids.push(e.id);
        }
    }
    if state.runs.keys().any(|v| !order.contains(v) && !state.runs[v].is_empty()) {
        return false;
    }
    let mut want: Vec<u64> = dist.all(Rel::R).iter().map(|e| e.id).collect();
    want.sort_unstable();
    ids.sort_unstable();
    ids == want
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Uniform 64-bit value determined by `(seed, function id, key)`.
pub fn keyed_u64(seed: u64, fid: u64, key: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ fid) ^ key)
}

/// A seeded PRNG for protocol-internal randomness.
pub fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed) ^ splitmix(salt.wrapping_add(0x5151)))
}

/// A member `h` of a keyed hash family with `Pr[h(a) = v] = p_v`.
#[derive(Clone, Debug)]
pub struct HashFamily {
    seed: u64,
    fid: u64,
    nodes: Vec<NodeId>,
    thresholds: Vec<u128>,
}

/// Build `h` from exact probabilities. The key's uniform value `u / 2^64`
/// maps to the first node whose cumulative probability exceeds it.
pub fn make_hash(seed: u64, fid: u64, probs: &[(NodeId, Q)]) -> Result<HashFamily, SimError> {
    let mut probs = probs.to_vec();
    probs.sort_by_key(|x| x.0);
    let mut total = Q::zero();
    let two64 = Q::from_integer(BigInt::from(1u128 << 64));
    let mut thresholds = Vec::with_capacity(probs.len());
    for (v, p) in &probs {
        if p.is_negative() {
            return Err(SimError::NegativeProbability(*v));
        }
        total += p;
        let t = (&total * &two64).ceil().to_integer().to_u128().unwrap_or(u128::MAX);
        thresholds.push(t.min(1u128 << 64));
    }
    if total != Q::from_integer(BigInt::from(1)) {
        return Err(SimError::ProbabilitySum(total.to_string()));
    }
    Ok(HashFamily { seed, fid, nodes: probs.iter().map(|x| x.0).collect(), thresholds })
}

impl HashFamily {
    pub fn eval(&self, key: u64) -> NodeId {
        let u = keyed_u64(self.seed, self.fid, key) as u128;
        let i = self.thresholds.partition_point(|&t| t <= u);
        self.nodes[i.min(self.nodes.len() - 1)]
    }

    pub fn support(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// Normalize nonnegative weights into probabilities over their nodes.
pub fn proportional_probs(weights: &[(NodeId, Q)]) -> Option<Vec<(NodeId, Q)>> {
    let total: Q = weights.iter().map(|x| &x.1).sum();
    if total.is_zero() {
        return None;
    }
    Some(weights.iter().map(|(v, w)| (*v, w / &total)).collect())
}

pub mod gen {
    //! Instance generators.
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution as _, Zipf};

    fn place(nodes: &[NodeId], counts: &[u64], keys: &[u64]) -> Vec<Vec<u64>> {
        let mut out = Vec::with_capacity(nodes.len());
        let mut at = 0usize;
        for &c in counts {
            out.push(keys[at..at + c as usize].to_vec());
            at += c as usize;
        }
        out
    }

    fn assemble(nodes: &[NodeId], r: Vec<Vec<u64>>, s: Vec<Vec<u64>>) -> Distribution {
        let rows: Vec<_> = nodes.iter().zip(r).zip(s).map(|((&v, r), s)| (v, r, s)).collect();
        Distribution::from_keys(&rows)
    }

    /// `R` and `S` each drawn without replacement from `[0, universe)`.
    pub fn uniform_instance(
        nodes: &[NodeId],
        r_counts: &[u64],
        s_counts: &[u64],
        universe: u64,
        seed: u64,
    ) -> Distribution {
        let mut rng = rng_for(seed, 1);
        let rn: u64 = r_counts.iter().sum();
        let sn: u64 = s_counts.iter().sum();
        let universe = universe.max(rn).max(sn);
        let rk: Vec<u64> =
            rand::seq::index::sample(&mut rng, universe as usize, rn as usize).into_iter().map(|x| x as u64).collect();
        let sk: Vec<u64> =
            rand::seq::index::sample(&mut rng, universe as usize, sn as usize).into_iter().map(|x| x as u64).collect();
        assemble(nodes, place(nodes, r_counts, &rk), place(nodes, s_counts, &sk))
    }

    /// Join keys with frequencies proportional to `rank^-zipf_s` over `keys` ranks.
    pub fn skewed_join_instance(
        nodes: &[NodeId],
        r_counts: &[u64],
        s_counts: &[u64],
        keys: u64,
        zipf_s: f64,
        seed: u64,
    ) -> Distribution {
        let mut rng = rng_for(seed, 2);
        let z = Zipf::new(keys.max(1) as f64, zipf_s).expect("valid zipf parameters");
        let mut draw = |n: u64| -> Vec<u64> { (0..n).map(|_| z.sample(&mut rng) as u64 - 1).collect() };
        let rn: u64 = r_counts.iter().sum();
        let sn: u64 = s_counts.iter().sum();
        let rk = draw(rn);
        let sk = draw(sn);
        assemble(nodes, place(nodes, r_counts, &rk), place(nodes, s_counts, &sk))
    }

    /// Ranks `1..=N` laid out as `r1, r3, ..., r2, r4, ...` and cut into
    /// consecutive chunks for the nodes in the given order.
    pub fn adversarial_sort_instance(nodes: &[NodeId], sizes: &[u64]) -> Distribution {
        let n: u64 = sizes.iter().sum();
        let seq: Vec<u64> = (1..=n).step_by(2).chain((2..=n).step_by(2)).collect();
        let r = place(nodes, sizes, &seq);
        assemble(nodes, r, vec![Vec::new(); nodes.len()])
    }

    /// Distinct random sort keys.
    pub fn sort_instance(nodes: &[NodeId], sizes: &[u64], seed: u64) -> Distribution {
        let zeros = vec![0; sizes.len()];
        let n: u64 = sizes.iter().sum();
        uniform_instance(nodes, sizes, &zeros, 16 * n.max(1), seed)
    }

    /// Random sizes summing to `total` spread over `parts` entries.
    pub fn random_split(rng: &mut impl Rng, total: u64, parts: usize) -> Vec<u64> {
        let mut out = vec![0u64; parts];
        for _ in 0..total {
            out[rng.random_range(0..parts)] += 1;
        }
        out
    }
}
