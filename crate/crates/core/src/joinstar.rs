//! Equi-join on a symmetric star: bandwidth-weighted hash join, packing of
//! per-key cartesian products, and the composed star protocol.

use crate::cartesian::{converge, finite_bw, need_star, plan_targets, star_weights, subset_whc_plan};
use crate::exact::{qu, Surd, Q};
use crate::intersect::swap_state;
use crate::simkernel::{
    make_hash, proportional_probs, Distribution, Elem, HashFamily, NodeState, Rel, Sim, SimError, TrafficTrace,
    DEFAULT_WIDTH_BITS,
};
use crate::topology::{NodeId, Topology};
use num_traits::{ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

const HASH_FID: u64 = 3;

/// `h'(a) = v` with probability `w_v / W'`, over nodes whose bandwidth is at
/// least `W / (2 |V| log2 |V|)`.
pub fn weighted_hash(t: &Topology, seed: u64) -> Result<HashFamily, SimError> {
    let o = need_star(t)?;
    let ws = star_weights(t, o, t.compute_nodes())?;
    let p = ws.len() as f64;
    let total: Q = ws.iter().map(|(_, w)| w).sum();
    let cut = if ws.len() > 1 { total.to_f64().unwrap_or(f64::INFINITY) / (2.0 * p * p.log2()) } else { 0.0 };
    let eligible: Vec<(NodeId, Q)> =
        ws.into_iter().filter(|(_, w)| w.to_f64().unwrap_or(f64::INFINITY) >= cut).collect();
    let probs =
        proportional_probs(&eligible).ok_or_else(|| SimError::Precondition("no eligible hash target".into()))?;
    make_hash(seed, HASH_FID, &probs)
}

/// One round: every tuple with key `a` goes to `h'(a)`.
pub fn weighted_hash_join(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    dist.check_against(t)?;
    let h = weighted_hash(t, seed)?;
    let mut sim = Sim::new(t, dist, 1, DEFAULT_WIDTH_BITS);
    for rel in [Rel::R, Rel::S] {
        let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
        for (&v, l) in dist.locals() {
            for e in l.rel(rel) {
                let d = h.eval(e.key);
                if d != v {
                    groups.entry((v, vec![d])).or_default().push(*e);
                }
            }
        }
        sim.ship_groups(0, rel, groups)?;
    }
    Ok(sim.finish())
}

/// One step of a [`pack_eqcp`] plan, indexing keys in `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EqStep {
    Absorb { key: usize, node: NodeId },
    Subset { key: usize, nodes: Vec<NodeId> },
}

/// Places `k` keys of equal size `n` (half in each relation) at scale `l`.
/// The node with the largest remaining budget takes a whole key when
/// `l w_j >= n` and loses `n / l` of budget. Otherwise a set of nodes whose
/// squared budgets sum into `[n^2 / 2l^2, n^2 / l^2)` runs wHC for the key
/// and leaves the pool. `None` when the pool runs dry.
pub fn pack_eqcp(k: usize, n: u64, budgets: &[(NodeId, Q)], l: &Q) -> Option<Vec<EqStep>> {
    if k == 0 {
        return Some(Vec::new());
    }
    if *l <= Q::zero() {
        return None;
    }
    let nq = qu(n);
    let full = &nq * &nq / (l * l);
    let half = &full / qu(2);
    let mut pool: Vec<(NodeId, Q)> = budgets.to_vec();
    let mut steps = Vec::with_capacity(k);
    for key in 0..k {
        pool.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let top = pool.first()?;
        if l * &top.1 >= nq {
            steps.push(EqStep::Absorb { key, node: top.0 });
            pool[0].1 -= &nq / l;
            continue;
        }
        let mut mass = Q::zero();
        let mut take = 0;
        while mass < half && take < pool.len() {
            mass += &pool[take].1 * &pool[take].1;
            take += 1;
        }
        if mass < half || mass >= full {
            return None;
        }
        let nodes: Vec<NodeId> = pool.drain(..take).map(|x| x.0).collect();
        steps.push(EqStep::Subset { key, nodes });
    }
    Some(steps)
}

/// A realized step of [`packcp`], with 0-based indices into the sorted
/// key sizes and budgets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PackStep {
    /// Keys `keys` go whole to node `node`.
    Absorb { keys: Range<usize>, node: usize },
    /// wHC for key `key` over nodes `nodes`.
    Split { key: usize, nodes: Range<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Absorb(usize),
    Split(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackStrategy {
    pub sizes: Vec<u64>,
    pub budgets: Vec<Q>,
    /// `table[k][n]` for the first `k` keys on the first `n` nodes; `None`
    /// stands for `+inf`.
    pub table: Vec<Vec<Option<Surd>>>,
    pub steps: Vec<PackStep>,
    pub cost: Surd,
}

impl PackStrategy {
    /// Cost of the realized steps, recomputed from the steps alone.
    pub fn plan_cost(&self) -> Surd {
        self.steps.iter().map(|s| step_cost(&self.sizes, &self.budgets, s)).max().unwrap_or_else(Surd::zero)
    }
}

fn step_cost(sizes: &[u64], budgets: &[Q], step: &PackStep) -> Surd {
    match step {
        PackStep::Absorb { keys, node } => {
            let total: u64 = sizes[keys.clone()].iter().sum();
            Surd::rational(&(qu(total) / &budgets[*node]))
        }
        PackStep::Split { key, nodes } => {
            let w2: Q = budgets[nodes.clone()].iter().map(|w| w * w).sum();
            let nk = qu(sizes[*key]);
            Surd::sqrt_of(&nk * &nk / w2)
        }
    }
}

fn max_opt(a: Surd, b: &Option<Surd>) -> Option<Surd> {
    b.as_ref().map(|b| a.max(b.clone()))
}

/// The PackCP dynamic program over key sizes `N_1 <= ... <= N_k` and
/// budgets `w_1 <= ... <= w_n`: either a suffix of keys goes whole to the
/// widest node, or the largest key runs wHC over a suffix of nodes.
pub fn packcp(sizes: &[u64], budgets: &[Q]) -> Result<PackStrategy, SimError> {
    if sizes.windows(2).any(|w| w[0] > w[1]) || budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(SimError::Precondition("PackCP needs sorted sizes and budgets".into()));
    }
    if budgets.iter().any(|w| *w <= Q::zero()) {
        return Err(SimError::Precondition("PackCP needs positive budgets".into()));
    }
    let (k, n) = (sizes.len(), budgets.len());
    let mut prefix = vec![0u64; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] + sizes[i];
    }
    let mut w2_prefix = vec![Q::zero(); n + 1];
    for i in 0..n {
        w2_prefix[i + 1] = &w2_prefix[i] + &budgets[i] * &budgets[i];
    }
    let mut table: Vec<Vec<Option<Surd>>> = vec![vec![None; n + 1]; k + 1];
    let mut back: Vec<Vec<Option<Choice>>> = vec![vec![None; n + 1]; k + 1];
    for row in table[0].iter_mut() {
        *row = Some(Surd::zero());
    }
    for kk in 1..=k {
        for nn in 1..=n {
            let mut best: Option<Surd> = None;
            let mut choice = None;
            let mut consider = |val: Option<Surd>, c: Choice| {
                if let Some(v) = val {
                    if best.as_ref().is_none_or(|b| v < *b) {
                        best = Some(v);
                        choice = Some(c);
                    }
                }
            };
            for i in 1..=kk {
                let load = qu(prefix[kk] - prefix[i - 1]) / &budgets[nn - 1];
                consider(max_opt(Surd::rational(&load), &table[i - 1][nn - 1]), Choice::Absorb(i));
            }
            let nk = qu(sizes[kk - 1]);
            for i in 1..=nn {
                let w2 = &w2_prefix[nn] - &w2_prefix[i - 1];
                consider(max_opt(Surd::sqrt_of(&nk * &nk / w2), &table[kk - 1][i - 1]), Choice::Split(i));
            }
            table[kk][nn] = best;
            back[kk][nn] = choice;
        }
    }
    let Some(cost) = table[k][n].clone() else {
        return Err(SimError::Precondition(format!("PackCP({k}, 0) is infeasible")));
    };
    let mut steps = Vec::new();
    let (mut kk, mut nn) = (k, n);
    while kk > 0 {
        match back[kk][nn].expect("finite cell has a choice") {
            Choice::Absorb(i) => {
                steps.push(PackStep::Absorb { keys: i - 1..kk, node: nn - 1 });
                kk = i - 1;
                nn -= 1;
            }
            Choice::Split(i) => {
                steps.push(PackStep::Split { key: kk - 1, nodes: i - 1..nn });
                kk -= 1;
                nn = i - 1;
            }
        }
    }
    Ok(PackStrategy { sizes: sizes.to_vec(), budgets: budgets.to_vec(), table, steps, cost })
}

/// A key's cartesian product cut into near-square pieces: `r` and `s` are
/// index ranges into the key's `R` and `S` tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualKey {
    pub key: u64,
    pub r: Range<u64>,
    pub s: Range<u64>,
}

impl VirtualKey {
    /// Size used for packing: twice the longer side, so a short last chunk
    /// counts as a full square.
    pub fn size(&self) -> u64 {
        2 * (self.r.end - self.r.start).max(self.s.end - self.s.start)
    }
}

/// Splits the larger side of each `(key, |R(a)|, |S(a)|)` into chunks of the
/// smaller side's size. Keys with an empty side produce nothing.
pub fn split_skew(keys: &[(u64, u64, u64)]) -> Vec<VirtualKey> {
    let mut out = Vec::new();
    for &(key, r, s) in keys {
        if r == 0 || s == 0 {
            continue;
        }
        let (small, large) = (r.min(s), r.max(s));
        let mut at = 0;
        while at < large {
            let chunk = at..(at + small).min(large);
            let vk = if r <= s { VirtualKey { key, r: 0..r, s: chunk } } else { VirtualKey { key, r: chunk, s: 0..s } };
            out.push(vk);
            at += small;
        }
    }
    out
}

/// Residual key statistics after the `V_beta` step: `S` tuples at nodes
/// holding more than `|R|` stay put and leave `S'`.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyStats {
    /// `(|R'(a)|, |S'(a)|)` per key.
    pub per_key: BTreeMap<u64, (u64, u64)>,
    pub local_s: BTreeSet<NodeId>,
    pub alpha: Vec<NodeId>,
    pub beta: Vec<NodeId>,
    pub n_prime: u64,
    /// `N' log2 |V| / sum w`.
    pub threshold: f64,
    pub heavy: BTreeSet<u64>,
}

/// Key statistics for `d` with `|R| <= |S|` on a symmetric star.
pub fn key_stats(t: &Topology, d: &Distribution) -> Result<KeyStats, SimError> {
    let o = need_star(t)?;
    let (r, n) = (d.r_len(), d.n());
    let nodes = t.compute_nodes();
    let alpha: Vec<NodeId> = nodes.iter().copied().filter(|&v| d.n_v(v).min(n - d.n_v(v)) < r).collect();
    let beta: Vec<NodeId> = nodes.iter().copied().filter(|v| !alpha.contains(v)).collect();
    let local_s: BTreeSet<NodeId> = nodes.iter().copied().filter(|&v| d.n_v(v) > r).collect();
    let mut per_key: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for (&v, l) in d.locals() {
        for e in &l.r {
            per_key.entry(e.key).or_default().0 += 1;
        }
        if !local_s.contains(&v) {
            for e in &l.s {
                per_key.entry(e.key).or_default().1 += 1;
            }
        }
    }
    let n_prime: u64 = per_key.values().map(|(a, b)| a + b).sum();
    let w_sum: Q = nodes.iter().map(|&v| finite_bw(t, v, o)).sum::<Result<Q, SimError>>()?;
    let p = nodes.len() as f64;
    let threshold = n_prime as f64 * p.log2() / w_sum.to_f64().unwrap_or(f64::INFINITY);
    let heavy =
        per_key.iter().filter(|(_, &(a, b))| a as f64 > threshold || b as f64 > threshold).map(|(&k, _)| k).collect();
    Ok(KeyStats { per_key, local_s, alpha, beta, n_prime, threshold, heavy })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinPath {
    Converge(NodeId),
    Split,
}

#[derive(Clone, Debug)]
pub struct StarJoinRun {
    pub trace: TrafficTrace,
    pub state: NodeState,
    pub path: JoinPath,
    /// Set on the split path.
    pub stats: Option<KeyStats>,
    pub virtual_keys: Vec<VirtualKey>,
    /// PackCP over the heavy virtual keys, when there are any.
    pub packing: Option<PackStrategy>,
}

pub fn star_join(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    let run = star_join_run(t, dist, seed)?;
    Ok((run.trace, run.state))
}

/// One round. If some node holds at least `|S|` tuples everything converges
/// there. Otherwise `R` is multicast to `V_beta`, light keys are hashed by
/// bandwidth and heavy keys are packed by PackCP.
pub fn star_join_run(t: &Topology, dist: &Distribution, seed: u64) -> Result<StarJoinRun, SimError> {
    need_star(t)?;
    dist.check_against(t)?;
    let swap = dist.r_len() > dist.s_len();
    let d = if swap { dist.swapped() } else { dist.clone() };
    let mut run = star_join_ordered(t, &d, seed)?;
    if swap {
        swap_state(&mut run.state);
    }
    Ok(run)
}

fn star_join_ordered(t: &Topology, d: &Distribution, seed: u64) -> Result<StarJoinRun, SimError> {
    let nodes = t.compute_nodes();
    let (top, top_n) = nodes
        .iter()
        .map(|&v| (v, d.n_v(v)))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("star has compute nodes");
    let mut sim = Sim::new(t, d, 1, DEFAULT_WIDTH_BITS);
    if top_n >= d.s_len() {
        converge(&mut sim, d, 0, top)?;
        let (trace, state) = sim.finish();
        return Ok(StarJoinRun {
            trace,
            state,
            path: JoinPath::Converge(top),
            stats: None,
            virtual_keys: Vec::new(),
            packing: None,
        });
    }
    let stats = key_stats(t, d)?;
    let h = weighted_hash(t, seed)?;
    let o = need_star(t)?;

    // tuples of R'(a), S'(a) in node id order, as the grid labeling of each key
    let mut r_of: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut s_of: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (&v, l) in d.locals() {
        for e in l.r.iter().filter(|e| stats.heavy.contains(&e.key)) {
            r_of.entry(e.key).or_default().push(e.id);
        }
        if !stats.local_s.contains(&v) {
            for e in l.s.iter().filter(|e| stats.heavy.contains(&e.key)) {
                s_of.entry(e.key).or_default().push(e.id);
            }
        }
    }
    let heavy_sizes: Vec<(u64, u64, u64)> =
        stats.heavy.iter().map(|&a| (a, stats.per_key[&a].0, stats.per_key[&a].1)).collect();
    let mut vkeys = split_skew(&heavy_sizes);
    vkeys.sort_by(|a, b| {
        a.size().cmp(&b.size()).then(a.key.cmp(&b.key)).then(a.s.start.cmp(&b.s.start)).then(a.r.start.cmp(&b.r.start))
    });
    let mut ws = star_weights(t, o, nodes)?;
    ws.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut r_dest: BTreeMap<u64, BTreeSet<NodeId>> = BTreeMap::new();
    let mut s_dest: BTreeMap<u64, BTreeSet<NodeId>> = BTreeMap::new();
    let packing = if vkeys.is_empty() {
        None
    } else {
        let sizes: Vec<u64> = vkeys.iter().map(VirtualKey::size).collect();
        let budgets: Vec<Q> = ws.iter().map(|x| x.1.clone()).collect();
        let strat = packcp(&sizes, &budgets)?;
        for step in &strat.steps {
            match step {
                PackStep::Absorb { keys, node } => {
                    let v = ws[*node].0;
                    for vk in &vkeys[keys.clone()] {
                        for i in vk.r.clone() {
                            r_dest.entry(r_of[&vk.key][i as usize]).or_default().insert(v);
                        }
                        for j in vk.s.clone() {
                            s_dest.entry(s_of[&vk.key][j as usize]).or_default().insert(v);
                        }
                    }
                }
                PackStep::Split { key, nodes: range } => {
                    let vk = &vkeys[*key];
                    let (rows, cols) = (vk.r.end - vk.r.start, vk.s.end - vk.s.start);
                    let plan = subset_whc_plan(&ws[range.clone()], rows, cols, vk.size())?;
                    if !plan.covers_grid() {
                        return Err(SimError::Precondition("packed key not covered".into()));
                    }
                    let (row_t, col_t) = plan_targets(&plan);
                    for (i, targets) in row_t.iter().enumerate() {
                        let id = r_of[&vk.key][(vk.r.start + i as u64) as usize];
                        r_dest.entry(id).or_default().extend(targets);
                    }
                    for (j, targets) in col_t.iter().enumerate() {
                        let id = s_of[&vk.key][(vk.s.start + j as u64) as usize];
                        s_dest.entry(id).or_default().extend(targets);
                    }
                }
            }
        }
        Some(strat)
    };

    for rel in [Rel::R, Rel::S] {
        let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
        for (&v, l) in d.locals() {
            if rel == Rel::S && stats.local_s.contains(&v) {
                continue;
            }
            for e in l.rel(rel) {
                let mut dests: BTreeSet<NodeId> = BTreeSet::new();
                if rel == Rel::R {
                    dests.extend(&stats.beta);
                }
                if stats.heavy.contains(&e.key) {
                    let table = if rel == Rel::R { &r_dest } else { &s_dest };
                    dests.extend(table.get(&e.id).into_iter().flatten());
                } else {
                    dests.insert(h.eval(e.key));
                }
                dests.remove(&v);
                if !dests.is_empty() {
                    groups.entry((v, dests.into_iter().collect())).or_default().push(*e);
                }
            }
        }
        sim.ship_groups(0, rel, groups)?;
    }
    let (trace, state) = sim.finish();
    Ok(StarJoinRun { trace, state, path: JoinPath::Split, stats: Some(stats), virtual_keys: vkeys, packing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::lb_join_star;
    use crate::cartesian::rects_cover;
    use crate::exact::{q, qr};
    use crate::simkernel::{cost, gen, rng_for, verify_cartesian, verify_join};
    use crate::topology::fixtures::unit_star;
    use crate::topology::symmetric_star;
    use crate::Ext;
    use proptest::prelude::*;
    use rand::Rng;

    fn star(ws: &[i64]) -> Topology {
        symmetric_star(&ws.iter().map(|&w| Ext::int(w)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hash_join_on_unit_star_is_uniform_and_correct() {
        let t = unit_star(4);
        let h = weighted_hash(&t, 1).unwrap();
        assert_eq!(h.support(), &[0, 1, 2, 3]);
        let d = gen::skewed_join_instance(&[0, 1, 2, 3], &[30, 30, 30, 30], &[40, 40, 40, 40], 200, 0.0, 5);
        let (trace, state) = weighted_hash_join(&t, &d, 5).unwrap();
        assert_eq!(trace.round_count(), 1);
        assert!(verify_join(&state, &d).ok);
    }

    #[test]
    fn hash_join_favours_the_dominant_link() {
        let t = star(&[1, 1, 1, 1000]);
        let h = weighted_hash(&t, 2).unwrap();
        assert_eq!(h.support(), &[3]);
        let d = gen::uniform_instance(&[0, 1, 2, 3], &[20, 20, 20, 20], &[20, 20, 20, 20], 100, 2);
        let (trace, state) = weighted_hash_join(&t, &d, 2).unwrap();
        assert!(verify_join(&state, &d).ok);
        assert!(trace.inbound(&t, 0, 3) <= d.n());
        assert_eq!(state.held(3).r.len() + state.held(3).s.len(), d.n() as usize);
    }

    #[test]
    fn hash_join_cost_on_light_keys() {
        let mut within = 0;
        for seed in 0..100u64 {
            let mut rng = rng_for(seed, 11);
            let ws: Vec<i64> = (0..8).map(|_| rng.random_range(1..=4)).collect();
            let t = star(&ws);
            let nodes: Vec<NodeId> = (0..8).collect();
            let rs = gen::random_split(&mut rng, 400, 8);
            let ss = gen::random_split(&mut rng, 400, 8);
            let d = gen::uniform_instance(&nodes, &rs, &ss, 1000, seed);
            let (trace, state) = weighted_hash_join(&t, &d, seed).unwrap();
            assert!(verify_join(&state, &d).ok);
            let c = cost(&trace, &t.bandwidths(), seed).unwrap().tuple_cost.to_f64();
            let w: f64 = ws.iter().sum::<i64>() as f64;
            let local = nodes.iter().map(|&v| d.n_v(v) as f64 / ws[v] as f64).fold(0.0, f64::max);
            let n = d.n() as f64;
            if c <= 4.0 * n.ln() * (n / w + local) {
                within += 1;
            }
        }
        assert!(within >= 95, "{within}");
    }

    #[test]
    fn pack_eqcp_examples() {
        let one = pack_eqcp(1, 4, &[(0, q(4))], &q(1)).unwrap();
        assert_eq!(one, vec![EqStep::Absorb { key: 0, node: 0 }]);

        let k = 3;
        let budgets: Vec<(NodeId, Q)> = (0..k).map(|v| (v, q(2))).collect();
        let steps = pack_eqcp(k, 4, &budgets, &q(2)).unwrap();
        assert_eq!(steps.len(), k);
        let used: BTreeSet<NodeId> = steps
            .iter()
            .map(|s| match s {
                EqStep::Absorb { node, .. } => *node,
                EqStep::Subset { .. } => panic!("expected absorb"),
            })
            .collect();
        assert_eq!(used.len(), k);

        let budgets = [(0, q(4)), (1, q(2)), (2, q(2))];
        let steps = pack_eqcp(2, 4, &budgets, &q(1)).unwrap();
        assert_eq!(steps[0], EqStep::Absorb { key: 0, node: 0 });
        let EqStep::Subset { nodes, .. } = &steps[1] else { panic!("expected a subset step") };
        assert_eq!(nodes, &vec![1, 2]);
        // the subset's wHC covers the key's 2 x 2 grid
        let ws: Vec<(NodeId, Q)> = nodes.iter().map(|&v| (v, budgets[v].1.clone())).collect();
        let plan = subset_whc_plan(&ws, 2, 2, 4).unwrap();
        assert!(rects_cover(&plan.regions, 2, 2));

        assert_eq!(pack_eqcp(3, 4, &budgets, &q(1)), None);
        assert_eq!(pack_eqcp(0, 4, &[], &q(1)), Some(Vec::new()));
    }

    #[test]
    fn packcp_examples() {
        let s = packcp(&[], &[q(1)]).unwrap();
        assert_eq!(s.cost, Surd::zero());
        assert!(s.steps.is_empty());

        let s = packcp(&[6], &[q(3)]).unwrap();
        assert_eq!(s.cost, Surd::rational(&q(2)));

        assert!(packcp(&[1], &[]).is_err());
        assert!(packcp(&[3, 1], &[q(1)]).is_err());
        assert!(packcp(&[1], &[q(2), q(1)]).is_err());

        // two equal nodes, one big key: splitting beats absorbing
        let s = packcp(&[8], &[q(1), q(1)]).unwrap();
        assert_eq!(s.steps, vec![PackStep::Split { key: 0, nodes: 0..2 }]);
        assert_eq!(s.cost, Surd::sqrt_of(q(32)));

        // many small keys on one wide node
        let s = packcp(&[2, 2, 2], &[q(1), qr(15, 2)]).unwrap();
        assert_eq!(s.steps, vec![PackStep::Absorb { keys: 0..3, node: 1 }]);
        assert_eq!(s.cost, Surd::rational(&qr(4, 5)));
    }

    proptest! {
        #[test]
        fn packcp_plan_recosts_to_table_value(
            mut sizes in prop::collection::vec(1u64..40, 0..7),
            mut ws in prop::collection::vec(1i64..9, 1..6),
        ) {
            sizes.sort_unstable();
            ws.sort_unstable();
            let budgets: Vec<Q> = ws.iter().map(|&w| q(w)).collect();
            let s = packcp(&sizes, &budgets).unwrap();
            prop_assert_eq!(s.plan_cost(), s.cost.clone());
            // every key is placed by exactly one step, and nodes are used at most once
            let mut keys = vec![0; sizes.len()];
            let mut nodes = vec![0; budgets.len()];
            for st in &s.steps {
                match st {
                    PackStep::Absorb { keys: ks, node } => {
                        ks.clone().for_each(|i| keys[i] += 1);
                        nodes[*node] += 1;
                    }
                    PackStep::Split { key, nodes: ns } => {
                        keys[*key] += 1;
                        ns.clone().for_each(|i| nodes[i] += 1);
                    }
                }
            }
            prop_assert!(keys.iter().all(|&c| c == 1));
            prop_assert!(nodes.iter().all(|&c| c <= 1));
        }
    }

    #[test]
    fn split_skew_examples() {
        let same = split_skew(&[(7, 3, 3)]);
        assert_eq!(same, vec![VirtualKey { key: 7, r: 0..3, s: 0..3 }]);
        let skew = split_skew(&[(1, 2, 5)]);
        let chunks: Vec<u64> = skew.iter().map(|v| v.s.end - v.s.start).collect();
        assert_eq!(chunks, vec![2, 2, 1]);
        assert!(skew.iter().all(|v| v.r == (0..2)));
        assert_eq!(skew[2].size(), 4);
        let other = split_skew(&[(1, 5, 2)]);
        assert_eq!(other.len(), 3);
        assert!(other.iter().all(|v| v.s == (0..2)));
        assert!(split_skew(&[(4, 0, 9)]).is_empty());
    }

    fn check_run(t: &Topology, d: &Distribution, seed: u64) -> StarJoinRun {
        let run = star_join_run(t, d, seed).unwrap();
        assert_eq!(run.trace.round_count(), 1);
        let v = verify_join(&run.state, d);
        assert!(v.ok, "seed {seed}: {:?}", v.witness);
        if let Some(st) = &run.stats {
            assert!(st.heavy.len() as f64 * st.threshold <= 2.0 * st.n_prime as f64);
        }
        if let Some(p) = &run.packing {
            assert_eq!(p.plan_cost(), p.cost);
        }
        run
    }

    #[test]
    fn star_join_paths() {
        let t = unit_star(4);
        let d = gen::uniform_instance(&[0, 1, 2, 3], &[10, 10, 10, 10], &[10, 10, 10, 10], 1000, 3);
        let run = check_run(&t, &d, 3);
        assert_eq!(run.path, JoinPath::Split);
        assert!(run.stats.unwrap().heavy.is_empty());
        assert!(run.packing.is_none());

        let nodes: Vec<NodeId> = (0..8).collect();
        let t = unit_star(8);
        let one_key: Vec<(NodeId, Vec<u64>, Vec<u64>)> = nodes.iter().map(|&v| (v, vec![9; 5], vec![9; 5])).collect();
        let d = Distribution::from_keys(&one_key);
        let run = check_run(&t, &d, 4);
        assert_eq!(run.stats.as_ref().unwrap().heavy, BTreeSet::from([9]));
        assert!(run.packing.is_some());
        assert!(verify_cartesian(&run.state, &d).ok);

        let d = Distribution::from_keys(&[(0, vec![1; 5], vec![1; 30]), (1, vec![1], vec![1; 2])]);
        let run = check_run(&unit_star(2), &d, 1);
        assert_eq!(run.path, JoinPath::Converge(0));
    }

    #[test]
    fn star_join_on_zipf() {
        let nodes: Vec<NodeId> = (0..8).collect();
        let t = unit_star(8);
        for seed in 0..5 {
            let d = gen::skewed_join_instance(&nodes, &[60; 8], &[80; 8], 300, 1.2, seed);
            let run = check_run(&t, &d, seed);
            let c = cost(&run.trace, &t.bandwidths(), seed).unwrap().tuple_cost;
            let lb = lb_join_star(&t, &d).unwrap().value;
            assert!(!c.is_inf() && !lb.is_zero());
        }
    }

    #[test]
    fn star_join_mixes_hashing_and_packing() {
        let nodes: Vec<NodeId> = (0..32).collect();
        let ws: Vec<i64> = (0..32).map(|i| 1 + i % 3).collect();
        let t = star(&ws);
        for seed in 0..4 {
            let d = gen::skewed_join_instance(&nodes, &[20; 32], &[20; 32], 300, 1.5, seed);
            let run = check_run(&t, &d, seed);
            let st = run.stats.as_ref().unwrap();
            assert!(!st.heavy.is_empty());
            assert!(st.per_key.len() > st.heavy.len());
            assert!(run.packing.is_some());
        }
    }

    #[test]
    fn star_join_swaps_when_r_is_larger() {
        let t = star(&[1, 2, 3]);
        let d = gen::skewed_join_instance(&[0, 1, 2], &[50, 40, 30], &[10, 5, 8], 20, 1.0, 8);
        check_run(&t, &d, 8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn star_join_always_correct(seed in 0u64..10_000, p in 2usize..9, zipf in 0.0f64..2.0) {
            let mut rng = rng_for(seed, 12);
            let ws: Vec<i64> = (0..p).map(|_| rng.random_range(1..=6)).collect();
            let t = star(&ws);
            let nodes: Vec<NodeId> = (0..p).collect();
            let (rn, sn) = (rng.random_range(0..150), rng.random_range(0..300));
            let rs = gen::random_split(&mut rng, rn, p);
            let ss = gen::random_split(&mut rng, sn, p);
            let d = gen::skewed_join_instance(&nodes, &rs, &ss, 40, zipf, seed);
            check_run(&t, &d, seed);
        }
    }
}
