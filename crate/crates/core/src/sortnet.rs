//! Sorting on symmetric trees: proportional redistribution, weighted TeraSort
//! and the uniform TeraSort baseline.

use crate::exact::{floor_u64, qu, Q};
use crate::simkernel::{
    rng_for, send, Distribution, Elem, NodeState, Rel, Sim, SimError, TrafficTrace, DEFAULT_WIDTH_BITS,
};
use crate::topology::{NodeId, Topology};
use num_traits::Zero;
use rand::Rng;
use std::collections::BTreeMap;

/// Splits `n_u` items over targets in proportion to `weights`, carrying the
/// rounding slack `delta` from one target to the next so that every prefix
/// stays within one item of its proportional share.
pub fn proportional(weights: &[Q], n_u: u64) -> Result<Vec<u64>, SimError> {
    let total: Q = weights.iter().sum();
    if weights.iter().any(|w| *w <= Q::zero()) || (total.is_zero() && n_u > 0) {
        return Err(SimError::Precondition("proportional needs positive weights".into()));
    }
    let mut delta = Q::zero();
    let mut out = Vec::with_capacity(weights.len());
    for w in weights {
        let x = w / &total * qu(n_u);
        let frac = &x - x.floor();
        let base = floor_u64(&x);
        if delta >= frac {
            delta -= frac;
            out.push(base);
        } else {
            delta += Q::from_integer(1.into()) - frac;
            out.push(base + 1);
        }
    }
    Ok(out)
}

/// Compute nodes in depth-first order from `root`, children in id order.
pub fn valid_ordering(t: &Topology, root: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![(root, usize::MAX)];
    while let Some((v, parent)) = stack.pop() {
        if t.is_compute(v) {
            out.push(v);
        }
        for &c in t.neighbors(v).iter().rev() {
            if c != parent {
                stack.push((c, v));
            }
        }
    }
    out
}

/// Traversal root used by the sorting protocols: the highest-id router, or
/// the only node of a router-free network.
pub fn sort_root(t: &Topology) -> NodeId {
    (0..t.node_count()).rev().find(|&v| !t.is_compute(v)).unwrap_or_else(|| t.compute_nodes()[0])
}

/// A splitter in the `(key, id)` order, with both infinities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    NegInf,
    At(u64, u64),
    PosInf,
}

impl Bound {
    fn of(e: &Elem) -> Bound {
        Bound::At(e.key, e.id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SortPlan {
    pub heavy: Vec<NodeId>,
    pub light: Vec<NodeId>,
    pub rho: f64,
    pub samples: usize,
    /// `b_0..b_k`.
    pub splitters: Vec<Bound>,
    /// `t_1, t_2, ...` up to the largest index the splitters use.
    pub sample_quantiles: Vec<Bound>,
    pub interval_counts: Vec<u64>,
    pub post_round1_sizes: Vec<u64>,
    /// Round-1 chunk sizes `N^i_u` per light node.
    pub round1_alloc: BTreeMap<NodeId, Vec<u64>>,
}

fn by_key(xs: &mut [Elem]) {
    xs.sort_unstable_by_key(|e| (e.key, e.id));
}

fn need_symmetric_tree(t: &Topology) -> Result<(), SimError> {
    if !t.is_tree() || !t.is_symmetric() {
        return Err(SimError::Precondition("sorting needs a symmetric tree".into()));
    }
    if t.compute_nodes().is_empty() {
        return Err(SimError::Precondition("no compute nodes".into()));
    }
    Ok(())
}

/// `min(1, 4 (p/N) ln(p N))`, zero when there is nothing to sample.
pub fn sampling_rate(p: usize, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, n) = (p as f64, n as f64);
    (4.0 * p / n * (p * n).ln()).clamp(0.0, 1.0)
}

fn bernoulli(elems: &[Elem], rho: f64, seed: u64, v: NodeId) -> Vec<Elem> {
    let mut rng = rng_for(seed, 1000 + v as u64);
    elems.iter().copied().filter(|_| rng.random_bool(rho)).collect()
}

/// The `i`-th quantile `t_i`: the `i * ceil(s/p)`-th smallest sample, clamped
/// to the largest. `PosInf` when there are no samples.
fn quantile(sorted: &[Elem], p: usize, i: u64) -> Bound {
    if sorted.is_empty() {
        return Bound::PosInf;
    }
    let step = (sorted.len() as u64).div_ceil(p as u64);
    let idx = (i * step).clamp(1, sorted.len() as u64);
    Bound::of(&sorted[idx as usize - 1])
}

/// Index `i` with `b_i <= x < b_{i+1}`, given the finite part `b_1..b_{k-1}`.
fn interval(inner: &[Bound], e: &Elem) -> usize {
    let x = Bound::of(e);
    inner.partition_point(|b| *b <= x)
}

/// Route every held element to its interval's node and sort the runs.
fn route(
    sim: &mut Sim,
    round: usize,
    holders: &BTreeMap<NodeId, Vec<Elem>>,
    order: &[NodeId],
    inner: &[Bound],
) -> Result<(), SimError> {
    let mut runs: BTreeMap<NodeId, Vec<Elem>> = order.iter().map(|&v| (v, Vec::new())).collect();
    for (&v, elems) in holders {
        let mut out: BTreeMap<NodeId, Vec<Elem>> = BTreeMap::new();
        for e in elems {
            out.entry(order[interval(inner, e)]).or_default().push(*e);
        }
        for (d, chunk) in out {
            if d != v {
                sim.ship(round, v, &[d], Rel::R, &chunk)?;
            }
            runs.get_mut(&d).expect("ordered node").extend(chunk);
        }
    }
    for (v, mut run) in runs {
        by_key(&mut run);
        sim.state.runs.insert(v, run);
    }
    Ok(())
}

/// Weighted TeraSort in 4 rounds on a symmetric tree. Output runs sit on the
/// heavy nodes in `plan.heavy` order.
pub fn wts_sort(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState, SortPlan), SimError> {
    need_symmetric_tree(t)?;
    dist.check_against(t)?;
    let n = dist.r_len();
    let p = t.compute_nodes().len();
    let order = valid_ordering(t, sort_root(t));
    let (heavy, light): (Vec<NodeId>, Vec<NodeId>) = order.iter().partition(|&&v| 2 * p as u64 * dist.r_v(v) >= n);
    let mut sim = Sim::new(t, dist, 4, DEFAULT_WIDTH_BITS);

    let mut holders: BTreeMap<NodeId, Vec<Elem>> = heavy.iter().map(|&v| (v, dist.local(v).r.clone())).collect();
    let weights: Vec<Q> = heavy.iter().map(|&v| qu(dist.r_v(v))).collect();
    let mut round1_alloc = BTreeMap::new();
    for &u in &light {
        let elems = &dist.local(u).r;
        let alloc = proportional(&weights, elems.len() as u64)?;
        let mut rest = &elems[..];
        for (i, &a) in alloc.iter().enumerate() {
            let (chunk, tail) = rest.split_at((a as usize).min(rest.len()));
            rest = tail;
            sim.ship(0, u, &[heavy[i]], Rel::R, chunk)?;
            holders.get_mut(&heavy[i]).expect("heavy node").extend_from_slice(chunk);
        }
        round1_alloc.insert(u, alloc);
    }
    let post_round1_sizes: Vec<u64> = heavy.iter().map(|v| holders[v].len() as u64).collect();

    let rho = sampling_rate(p, n);
    let v1 = heavy[0];
    let mut samples = Vec::new();
    for &v in &heavy {
        let got = bernoulli(&holders[&v], rho, seed, v);
        if v != v1 && !got.is_empty() {
            send(&mut sim.trace, t, 1, v, &[v1], got.len() as u64)?;
        }
        samples.extend(got);
    }
    by_key(&mut samples);

    let interval_counts: Vec<u64> =
        post_round1_sizes.iter().map(|&m| if n == 0 { 0 } else { (p as u64 * m).div_ceil(n) }).collect();
    let total_c: u64 = interval_counts.iter().sum();
    let sample_quantiles: Vec<Bound> = (1..=total_c).map(|i| quantile(&samples, p, i)).collect();
    let mut splitters = vec![Bound::NegInf];
    let mut acc = 0;
    for &c in &interval_counts[..heavy.len() - 1] {
        acc += c;
        splitters.push(if acc == 0 { Bound::NegInf } else { sample_quantiles[acc as usize - 1] });
    }
    splitters.push(Bound::PosInf);
    if heavy.len() > 1 {
        send(&mut sim.trace, t, 2, v1, &heavy[1..], heavy.len() as u64 + 1)?;
    }

    route(&mut sim, 3, &holders, &heavy, &splitters[1..heavy.len()])?;
    let (trace, state) = sim.finish();
    let plan = SortPlan {
        heavy,
        light,
        rho,
        samples: samples.len(),
        splitters,
        sample_quantiles,
        interval_counts,
        post_round1_sizes,
        round1_alloc,
    };
    Ok((trace, state, plan))
}

/// TeraSort with uniform splitters in 3 rounds. The coordinator is the
/// smallest-id compute node; runs cover all compute nodes in
/// [`valid_ordering`] order.
pub fn terasort(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    need_symmetric_tree(t)?;
    dist.check_against(t)?;
    let n = dist.r_len();
    let p = t.compute_nodes().len();
    let order = valid_ordering(t, sort_root(t));
    let coord = t.compute_nodes()[0];
    let mut sim = Sim::new(t, dist, 3, DEFAULT_WIDTH_BITS);
    let rho = sampling_rate(p, n);
    let mut samples = Vec::new();
    for &v in &order {
        let got = bernoulli(&dist.local(v).r, rho, seed, v);
        if v != coord && !got.is_empty() {
            send(&mut sim.trace, t, 0, v, &[coord], got.len() as u64)?;
        }
        samples.extend(got);
    }
    by_key(&mut samples);
    let inner: Vec<Bound> = (1..p as u64).map(|i| quantile(&samples, p, i)).collect();
    let others: Vec<NodeId> = order.iter().copied().filter(|&v| v != coord).collect();
    if !others.is_empty() {
        send(&mut sim.trace, t, 1, coord, &others, p as u64 + 1)?;
    }
    let holders: BTreeMap<NodeId, Vec<Elem>> = order.iter().map(|&v| (v, dist.local(v).r.clone())).collect();
    route(&mut sim, 2, &holders, &order, &inner)?;
    Ok(sim.finish())
}

/// Node holding the most of `R` (lowest id on ties).
pub fn max_holder(t: &Topology, dist: &Distribution) -> NodeId {
    let nodes = t.compute_nodes();
    *nodes.iter().rev().max_by_key(|&&v| dist.r_v(v)).expect("compute nodes")
}

/// Every node sends its `R` to [`max_holder`], which sorts it.
pub fn send_all_to_max(t: &Topology, dist: &Distribution) -> Result<(TrafficTrace, NodeState), SimError> {
    if t.compute_nodes().is_empty() {
        return Err(SimError::Precondition("no compute nodes".into()));
    }
    dist.check_against(t)?;
    let m = max_holder(t, dist);
    let mut sim = Sim::new(t, dist, 1, DEFAULT_WIDTH_BITS);
    let mut run = Vec::new();
    for (&v, l) in dist.locals() {
        sim.ship(0, v, &[m], Rel::R, &l.r)?;
        run.extend_from_slice(&l.r);
    }
    by_key(&mut run);
    sim.state.runs.insert(m, run);
    Ok(sim.finish())
}
