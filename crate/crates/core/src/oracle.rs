//! Exhaustive optima on tiny instances, for checking lower bounds and
//! protocol costs from both sides.

use crate::bounds::{lb_intersect_tree, lb_join_star, BoundError};
use crate::cartesian::generalized_star_cartesian;
use crate::exact::{qu, Ext, Surd, Q};
use crate::intersect::{star_intersect, tree_intersect};
use crate::joinstar::star_join;
use crate::simkernel::{
    cost, verify_cartesian, verify_intersection, verify_join, Distribution, Elem, NodeState, Rel, SimError,
};
use crate::topology::{NodeId, Topology};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub const MAX_ELEMENTS: u64 = 8;
pub const MAX_COMPUTE: usize = 3;
pub const DEFAULT_MAX_STATES: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Intersect,
    Cartesian,
    Join,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Intersect => "intersect",
            Task::Cartesian => "cartesian",
            Task::Join => "join",
        })
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {0}")]
    TooLarge(String),
    #[error("search exceeded {0} states")]
    StateLimit(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// Where one element is copied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub rel: Rel,
    pub id: u64,
    pub from: NodeId,
    pub dests: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub opt_cost: Ext,
    /// Elements that move; every other element stays home.
    pub witness: Vec<Route>,
    pub states: u64,
}

impl OracleResult {
    /// Node state after applying the witness routes.
    pub fn apply(&self, t: &Topology, dist: &Distribution) -> NodeState {
        let mut st = NodeState::from_dist(t, dist);
        for r in &self.witness {
            let e =
                dist.local(r.from).rel(r.rel).iter().find(|e| e.id == r.id).copied().expect("routed element exists");
            for &d in &r.dests {
                st.deliver(d, r.rel, &[e]);
            }
        }
        st
    }
}

/// Pairs `(r, s)` of element positions that must meet.
fn required_pairs(rs: &[Elem], ss: &[Elem], task: Task) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, r) in rs.iter().enumerate() {
        for (j, s) in ss.iter().enumerate() {
            if task == Task::Cartesian || r.key == s.key {
                out.push((i, j));
            }
        }
    }
    out
}

struct Search<'a> {
    bws: Vec<Ext>,
    /// Per element, the candidate destination sets and their edges.
    options: Vec<Vec<(u32, Vec<usize>)>>,
    home: Vec<NodeId>,
    nodes: &'a [NodeId],
    /// Pairs to check once both elements are fixed, keyed by the later one.
    checks: Vec<Vec<usize>>,
    loads: Vec<u64>,
    chosen: Vec<u32>,
    best: Option<(Ext, Vec<u32>)>,
    states: u64,
    max_states: u64,
}

impl Search<'_> {
    fn cost(&self) -> Ext {
        self.loads.iter().zip(&self.bws).map(|(&y, w)| w.per(&qu(y))).max().unwrap_or_else(Ext::zero)
    }

    /// Bit `k` set when element `i` sits at `nodes[k]`.
    fn at(&self, i: usize) -> u32 {
        let home = self.nodes.iter().position(|&v| v == self.home[i]).expect("home is compute");
        self.chosen[i] | (1 << home)
    }

    fn run(&mut self, i: usize) -> Result<(), OracleError> {
        self.states += 1;
        if self.states > self.max_states {
            return Err(OracleError::StateLimit(self.max_states));
        }
        let c = self.cost();
        if self.best.as_ref().is_some_and(|(b, _)| c >= *b) {
            return Ok(());
        }
        if i == self.options.len() {
            self.best = Some((c, self.chosen.clone()));
            return Ok(());
        }
        for k in 0..self.options[i].len() {
            let (mask, edges) = self.options[i][k].clone();
            self.chosen[i] = mask;
            if self.checks[i].iter().all(|&j| self.at(i) & self.at(j) != 0) {
                for &e in &edges {
                    self.loads[e] += 1;
                }
                self.run(i + 1)?;
                for &e in &edges {
                    self.loads[e] -= 1;
                }
            }
        }
        self.chosen[i] = 0;
        Ok(())
    }
}

/// Minimal one-round cost over all choices of destination sets, such that
/// every pair the task requires meets at some compute node. Data-aware: only
/// the pairs of this concrete instance are required.
pub fn opt_one_round(
    t: &Topology,
    dist: &Distribution,
    task: Task,
    max_states: u64,
) -> Result<OracleResult, OracleError> {
    dist.check_against(t)?;
    let nodes = t.compute_nodes();
    if dist.n() > MAX_ELEMENTS || nodes.len() > MAX_COMPUTE {
        return Err(OracleError::TooLarge(format!("{} elements on {} compute nodes", dist.n(), nodes.len())));
    }
    let mut rs = Vec::new();
    let mut ss = Vec::new();
    for (&v, l) in dist.locals() {
        rs.extend(l.r.iter().map(|e| (v, *e)));
        ss.extend(l.s.iter().map(|e| (v, *e)));
    }
    let r_elems: Vec<Elem> = rs.iter().map(|x| x.1).collect();
    let s_elems: Vec<Elem> = ss.iter().map(|x| x.1).collect();
    let pairs = required_pairs(&r_elems, &s_elems, task);
    // only elements in some required pair may move
    let mut involved: Vec<(Rel, NodeId, Elem)> = Vec::new();
    let mut r_pos = vec![usize::MAX; rs.len()];
    let mut s_pos = vec![usize::MAX; ss.len()];
    for &(i, j) in &pairs {
        if r_pos[i] == usize::MAX {
            r_pos[i] = involved.len();
            involved.push((Rel::R, rs[i].0, rs[i].1));
        }
        if s_pos[j] == usize::MAX {
            s_pos[j] = involved.len();
            involved.push((Rel::S, ss[j].0, ss[j].1));
        }
    }
    let mut checks = vec![Vec::new(); involved.len()];
    for &(i, j) in &pairs {
        let (a, b) = (r_pos[i], s_pos[j]);
        checks[a.max(b)].push(a.min(b));
    }
    let mut options = Vec::with_capacity(involved.len());
    for &(_, home, _) in &involved {
        let mut opts = Vec::new();
        for mask in 0u32..(1 << nodes.len()) {
            let dests: Vec<NodeId> = (0..nodes.len()).filter(|&k| mask >> k & 1 == 1).map(|k| nodes[k]).collect();
            if dests.contains(&home) {
                continue;
            }
            let edges: Vec<usize> = if dests.is_empty() {
                Vec::new()
            } else {
                t.steiner_edges(home, &dests).map_err(SimError::from)?.into_iter().collect()
            };
            opts.push((mask, edges));
        }
        opts.sort_by_key(|(m, _)| (m.count_ones(), *m));
        options.push(opts);
    }
    let mut search = Search {
        bws: t.bandwidths(),
        home: involved.iter().map(|x| x.1).collect(),
        options,
        nodes,
        checks,
        loads: vec![0; t.edges().len()],
        chosen: vec![0; involved.len()],
        best: None,
        states: 0,
        max_states,
    };
    search.run(0)?;
    let (opt_cost, chosen) = search.best.expect("staying home plus full multicast is always feasible");
    let witness = involved
        .iter()
        .zip(&chosen)
        .filter(|(_, &m)| m != 0)
        .map(|(&(rel, from, e), &m)| Route {
            rel,
            id: e.id,
            from,
            dests: (0..nodes.len()).filter(|&k| m >> k & 1 == 1).map(|k| nodes[k]).collect(),
        })
        .collect();
    Ok(OracleResult { opt_cost, witness, states: search.states })
}

/// The instance with `R` and `S` keyed so that the intersection optimum is
/// largest: every element of the smaller relation matches a distinct element
/// of the other, over all such matchings.
pub fn worst_case_intersect(
    t: &Topology,
    dist: &Distribution,
    max_states: u64,
) -> Result<(Distribution, OracleResult), OracleError> {
    let swap = dist.r_len() > dist.s_len();
    let d = if swap { dist.swapped() } else { dist.clone() };
    let small: Vec<(NodeId, usize)> =
        d.locals().iter().flat_map(|(&v, l)| (0..l.r.len()).map(move |i| (v, i))).collect();
    let large: Vec<(NodeId, usize)> =
        d.locals().iter().flat_map(|(&v, l)| (0..l.s.len()).map(move |i| (v, i))).collect();
    let mut best: Option<(Distribution, OracleResult)> = None;
    let mut pick = Vec::with_capacity(small.len());
    let mut used = vec![false; large.len()];
    let mut err = None;
    injections(large.len(), small.len(), &mut pick, &mut used, &mut |m: &[usize]| {
        if err.is_some() {
            return;
        }
        let mut locals = d.locals().clone();
        for (k, &(v, i)) in large.iter().enumerate() {
            locals.get_mut(&v).expect("node").s[i].key = k as u64;
        }
        for (a, &(v, i)) in small.iter().enumerate() {
            locals.get_mut(&v).expect("node").r[i].key = m[a] as u64;
        }
        let keyed = Distribution::new(locals).expect("ids unchanged");
        match opt_one_round(t, &keyed, Task::Intersect, max_states) {
            Ok(res) => {
                if best.as_ref().is_none_or(|(_, b)| res.opt_cost > b.opt_cost) {
                    best = Some((keyed, res));
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (keyed, res) = best.expect("at least one matching");
    Ok((if swap { keyed.swapped() } else { keyed }, res))
}

fn injections(n: usize, k: usize, pick: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for j in 0..n {
        if !used[j] {
            used[j] = true;
            pick.push(j);
            injections(n, k, pick, used, f);
            pick.pop();
            used[j] = false;
        }
    }
}

/// Every tuple rekeyed to one key, so the join is the full cartesian product.
pub fn single_key(dist: &Distribution) -> Distribution {
    let mut locals = dist.locals().clone();
    for l in locals.values_mut() {
        for e in l.r.iter_mut().chain(l.s.iter_mut()) {
            e.key = 0;
        }
    }
    Distribution::new(locals).expect("ids unchanged")
}

/// Best assignment within the structured class: each key either goes whole
/// to one node, or is split over a set of nodes that handle nothing else.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackOracle {
    pub cost: Surd,
    /// Key index to node index for whole keys.
    pub whole: BTreeMap<usize, usize>,
    /// Key index to node indices for split keys.
    pub split: BTreeMap<usize, Vec<usize>>,
    pub states: u64,
}

/// Exhaustive search over the structured class for keys of sizes `sizes`
/// (half in each relation) on nodes with budgets `budgets`. A whole-key node
/// costs the sum of its key sizes over its bandwidth; a split key costs
/// `N_a / sqrt(sum w^2)` over its nodes.
pub fn opt_packcp_assignment(sizes: &[u64], budgets: &[Q]) -> Result<PackOracle, OracleError> {
    if sizes.len() > 4 || budgets.len() > 4 {
        return Err(OracleError::TooLarge(format!("{} keys on {} nodes", sizes.len(), budgets.len())));
    }
    if budgets.iter().any(|w| *w <= Q::zero()) {
        return Err(SimError::Precondition("budgets must be positive".into()).into());
    }
    let (k, n) = (sizes.len(), budgets.len());
    if k == 0 {
        return Ok(PackOracle { cost: Surd::zero(), whole: BTreeMap::new(), split: BTreeMap::new(), states: 1 });
    }
    let mut best: Option<PackOracle> = None;
    let mut states = 0u64;
    // label per node: 0 = whole keys, a + 1 = part of split key a
    let labelings = (k as u64 + 1).pow(n as u32);
    for code in 0..labelings {
        let labels: Vec<usize> =
            (0..n).map(|v| (code / (k as u64 + 1).pow(v as u32) % (k as u64 + 1)) as usize).collect();
        let whole_nodes: Vec<usize> = (0..n).filter(|&v| labels[v] == 0).collect();
        let mut split: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            if labels[v] > 0 {
                split.entry(labels[v] - 1).or_default().push(v);
            }
        }
        let free: Vec<usize> = (0..k).filter(|a| !split.contains_key(a)).collect();
        if !free.is_empty() && whole_nodes.is_empty() {
            continue;
        }
        let mut split_cost = Surd::zero();
        for (&a, vs) in &split {
            let w2: Q = vs.iter().map(|&v| &budgets[v] * &budgets[v]).sum();
            split_cost = split_cost.max(Surd::sqrt_of(qu(sizes[a]) * qu(sizes[a]) / w2));
        }
        let combos = (whole_nodes.len().max(1) as u64).pow(free.len() as u32);
        for c in 0..combos {
            states += 1;
            let mut load = vec![0u64; n];
            let mut whole = BTreeMap::new();
            for (i, &a) in free.iter().enumerate() {
                let v = whole_nodes[(c / (whole_nodes.len() as u64).pow(i as u32) % whole_nodes.len() as u64) as usize];
                load[v] += sizes[a];
                whole.insert(a, v);
            }
            let mut total = split_cost.clone();
            for &v in &whole_nodes {
                total = total.max(Surd::rational(&(qu(load[v]) / &budgets[v])));
            }
            if best.as_ref().is_none_or(|b| total < b.cost) {
                best = Some(PackOracle { cost: total, whole, split: split.clone(), states: 0 });
            }
        }
    }
    let mut best = best.expect("one node taking every key is always in the class");
    best.states = states;
    Ok(best)
}

/// `lb / 2 <= opt <= alg` for one instance. The halving is the constant the
/// lower-bound arguments lose when they add the two directions of a link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sandwich {
    pub task: Task,
    pub lb_half: Q,
    pub opt: Ext,
    pub alg: Ext,
    pub algorithm: &'static str,
    pub alg_correct: bool,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.alg_correct && Ext::Fin(self.lb_half.clone()) <= self.opt && self.opt <= self.alg
    }
}

fn surd_half(s: &Surd) -> Q {
    s.as_rational().expect("these bounds are rational") / qu(2)
}

/// Runs the matching one-round protocol and the oracle on `dist` as given.
/// Intersection and join bounds only hold against the optimum of their
/// worst keying, so callers pass [`worst_case_intersect`] or [`single_key`]
/// instances for those tasks.
pub fn sandwich_check(t: &Topology, dist: &Distribution, task: Task, seed: u64) -> Result<Sandwich, OracleError> {
    let star = t.star_center().is_some();
    let (lb, (trace, state), algorithm) = match task {
        Task::Intersect if star => (lb_intersect_tree(t, dist)?, star_intersect(t, dist, seed)?, "star_intersect"),
        Task::Intersect => (lb_intersect_tree(t, dist)?, tree_intersect(t, dist, seed)?, "tree_intersect"),
        Task::Cartesian => {
            let run = generalized_star_cartesian(t, dist)?;
            (lb_join_star(t, dist)?, (run.trace, run.state), "generalized_star_cartesian")
        }
        Task::Join => (lb_join_star(t, dist)?, star_join(t, dist, seed)?, "star_join"),
    };
    let alg_correct = match task {
        Task::Intersect => verify_intersection(&state, dist).ok,
        Task::Cartesian => verify_cartesian(&state, dist).ok,
        Task::Join => verify_join(&state, dist).ok,
    };
    let alg = cost(&trace, &t.bandwidths(), seed)?.tuple_cost;
    let opt = opt_one_round(t, dist, task, DEFAULT_MAX_STATES)?.opt_cost;
    Ok(Sandwich { task, lb_half: surd_half(&lb.value), opt, alg, algorithm, alg_correct })
}
