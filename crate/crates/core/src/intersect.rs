//! Set intersection on symmetric stars and trees.

use crate::exact::{qu, Q};
use crate::simkernel::{
    make_hash, proportional_probs, Distribution, Elem, NodeState, Rel, Sim, SimError, TrafficTrace, DEFAULT_WIDTH_BITS,
};
use crate::topology::{NodeId, Topology};
use std::collections::{BTreeMap, BTreeSet};

/// Undirected edge as `(smaller id, larger id)`.
pub type Link = (NodeId, NodeId);

fn link(a: NodeId, b: NodeId) -> Link {
    (a.min(b), a.max(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeClasses {
    pub alpha: BTreeSet<Link>,
    pub beta: BTreeSet<Link>,
}

impl EdgeClasses {
    pub fn is_alpha(&self, a: NodeId, b: NodeId) -> bool {
        self.alpha.contains(&link(a, b))
    }
}

fn need_tree(t: &Topology) -> Result<(), SimError> {
    if !t.is_symmetric() || !t.is_tree() {
        return Err(SimError::Precondition("needs a symmetric tree".into()));
    }
    Ok(())
}

/// `(|R|, |S|)` with the smaller relation first.
fn small_first(dist: &Distribution) -> (u64, u64) {
    let (r, s) = (dist.r_len(), dist.s_len());
    (r.min(s), r.max(s))
}

/// An edge is alpha when one of its sides holds fewer than `min(|R|, |S|)`
/// tuples.
pub fn classify_edges(t: &Topology, dist: &Distribution) -> Result<EdgeClasses, SimError> {
    need_tree(t)?;
    let (r, _) = small_first(dist);
    let sizes = dist.sizes(t.node_count());
    let sides = t.side_sums(&sizes)?;
    let mut out = EdgeClasses { alpha: BTreeSet::new(), beta: BTreeSet::new() };
    for (e, (tail, head)) in t.edges().iter().zip(sides) {
        if tail.min(head) < r {
            out.alpha.insert(link(e.from, e.to));
        } else {
            out.beta.insert(link(e.from, e.to));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<BTreeSet<NodeId>>,
    /// Links of the subtree spanning each block.
    pub trees: Vec<BTreeSet<Link>>,
    /// Node visits spent by the construction.
    pub visits: usize,
}

fn spanning_links(t: &Topology, block: &BTreeSet<NodeId>) -> Result<BTreeSet<Link>, SimError> {
    let mut it = block.iter();
    let Some(&first) = it.next() else { return Ok(BTreeSet::new()) };
    let rest: Vec<NodeId> = it.copied().collect();
    let mut out = BTreeSet::new();
    for e in t.steiner_edges(first, &rest)? {
        let edge = t.edge(e)?;
        out.insert(link(edge.from, edge.to));
    }
    Ok(out)
}

/// Greedy peeling of the beta subtree: the lightest leaf either becomes a
/// block or is folded into its neighbor. Ties go to the smaller id.
pub fn balanced_partition(t: &Topology, dist: &Distribution) -> Result<Partition, SimError> {
    let classes = classify_edges(t, dist)?;
    let (r, _) = small_first(dist);
    let n = t.node_count();
    let mut visits = 0usize;
    let mut blocks: Vec<BTreeSet<NodeId>> = Vec::new();
    if classes.beta.is_empty() {
        blocks.push(t.compute_nodes().iter().copied().collect());
    } else {
        let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
        for &(a, b) in &classes.beta {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let beta_nodes: Vec<NodeId> = (0..n).filter(|&v| !adj[v].is_empty()).collect();
        let mut gamma: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
        let mut weight = vec![0u64; n];
        let mut seen = vec![false; n];
        for &x in &beta_nodes {
            seen[x] = true;
            let mut stack = vec![x];
            while let Some(y) = stack.pop() {
                visits += 1;
                if t.is_compute(y) {
                    gamma[x].insert(y);
                    weight[x] += dist.n_v(y);
                }
                for &z in t.neighbors(y) {
                    if !seen[z] && classes.is_alpha(y, z) {
                        seen[z] = true;
                        stack.push(z);
                    }
                }
            }
        }
        let mut leaves: BTreeSet<(u64, NodeId)> =
            beta_nodes.iter().filter(|&&x| adj[x].len() <= 1).map(|&x| (weight[x], x)).collect();
        while let Some((w, x)) = leaves.pop_first() {
            visits += 1;
            let nb = adj[x].iter().next().copied();
            if w >= r || nb.is_none() {
                let g = std::mem::take(&mut gamma[x]);
                if w >= r {
                    if !g.is_empty() {
                        blocks.push(g);
                    }
                } else if let Some(last) = blocks.last_mut() {
                    // the final leftover is lighter than |R|
                    last.extend(g);
                } else if !g.is_empty() {
                    blocks.push(g);
                }
            }
            if let Some(y) = nb {
                visits += 1;
                if w < r {
                    let g = std::mem::take(&mut gamma[x]);
                    gamma[y].extend(g);
                    if adj[y].len() <= 1 {
                        leaves.remove(&(weight[y], y));
                    }
                    weight[y] += w;
                }
                adj[y].remove(&x);
                adj[x].clear();
                if adj[y].len() <= 1 {
                    leaves.insert((weight[y], y));
                }
            }
        }
    }
    let trees = blocks.iter().map(|b| spanning_links(t, b)).collect::<Result<Vec<_>, _>>()?;
    Ok(Partition { blocks, trees, visits })
}

/// Checks the four partition properties and returns the first violation.
pub fn check_partition(t: &Topology, dist: &Distribution, p: &Partition) -> Result<(), String> {
    let classes = classify_edges(t, dist).map_err(|e| e.to_string())?;
    let (r, _) = small_first(dist);
    let mut owner: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (i, b) in p.blocks.iter().enumerate() {
        for &v in b {
            if owner.insert(v, i).is_some() {
                return Err(format!("node {v} in two blocks"));
            }
        }
    }
    if owner.len() != t.compute_nodes().len() {
        return Err("blocks do not cover every compute node".into());
    }
    // alpha-connected compute nodes share a block
    let n = t.node_count();
    let mut comp = vec![usize::MAX; n];
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = s;
        let mut stack = vec![s];
        while let Some(y) = stack.pop() {
            for &z in t.neighbors(y) {
                if comp[z] == usize::MAX && classes.is_alpha(y, z) {
                    comp[z] = s;
                    stack.push(z);
                }
            }
        }
    }
    for &u in t.compute_nodes() {
        for &v in t.compute_nodes() {
            if comp[u] == comp[v] && owner[&u] != owner[&v] {
                return Err(format!("alpha-connected {u} and {v} split"));
            }
        }
    }
    let mut used: BTreeMap<Link, usize> = BTreeMap::new();
    for (i, tree) in p.trees.iter().enumerate() {
        for l in tree {
            if let Some(j) = used.insert(*l, i) {
                return Err(format!("link {l:?} spans blocks {j} and {i}"));
            }
        }
    }
    for (i, b) in p.blocks.iter().enumerate() {
        let total: u64 = b.iter().map(|&v| dist.n_v(v)).sum();
        if total < r {
            return Err(format!("block {i} holds {total} < {r}"));
        }
        let restricted: Vec<u64> = (0..n).map(|v| if b.contains(&v) { dist.n_v(v) } else { 0 }).collect();
        for &(a, c) in &p.trees[i] {
            if !classes.beta.contains(&(a, c)) {
                continue;
            }
            let side: u64 = t.side_of(a, c).map_err(|e| e.to_string())?.iter().map(|&v| restricted[v]).sum();
            if side.min(total - side) > r {
                return Err(format!("beta link ({a},{c}) in block {i} has both sides above {r}"));
            }
        }
    }
    Ok(())
}

pub(crate) fn swap_state(state: &mut NodeState) {
    for l in state.held.values_mut() {
        std::mem::swap(&mut l.r, &mut l.s);
    }
}

/// Runs `body` with `R` as the smaller relation and restores the roles.
pub(crate) fn with_small_r(
    dist: &Distribution,
    body: impl FnOnce(&Distribution) -> Result<(TrafficTrace, NodeState), SimError>,
) -> Result<(TrafficTrace, NodeState), SimError> {
    if dist.r_len() <= dist.s_len() {
        return body(dist);
    }
    let (trace, mut state) = body(&dist.swapped())?;
    swap_state(&mut state);
    Ok((trace, state))
}

pub fn star_intersect(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    if t.star_center().is_none() || !t.is_symmetric() {
        return Err(SimError::Precondition("needs a symmetric star".into()));
    }
    with_small_r(dist, |d| star_intersect_ordered(t, d, seed))
}

fn star_intersect_ordered(t: &Topology, d: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    let mut sim = Sim::new(t, d, 1, DEFAULT_WIDTH_BITS);
    let (r, n) = (d.r_len(), d.n());
    if r == 0 {
        return Ok(sim.finish());
    }
    let nodes = t.compute_nodes();
    let alpha: BTreeSet<NodeId> = nodes.iter().copied().filter(|&v| d.n_v(v).min(n - d.n_v(v)) < r).collect();
    let beta: Vec<NodeId> = nodes.iter().copied().filter(|v| !alpha.contains(v)).collect();
    let weights: Vec<(NodeId, Q)> =
        nodes.iter().map(|&v| (v, qu(if alpha.contains(&v) { d.n_v(v) } else { d.r_v(v) }))).collect();
    let h = make_hash(seed, 0, &proportional_probs(&weights).expect("|R| > 0"))?;
    for &v in nodes {
        let l = d.local(v).clone();
        let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
        for e in &l.r {
            let mut dests = beta.clone();
            dests.push(h.eval(e.key));
            dests.sort_unstable();
            dests.dedup();
            groups.entry((v, dests)).or_default().push(*e);
        }
        sim.ship_groups(0, Rel::R, groups)?;
        if alpha.contains(&v) {
            let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
            for e in &l.s {
                groups.entry((v, vec![h.eval(e.key)])).or_default().push(*e);
            }
            sim.ship_groups(0, Rel::S, groups)?;
        }
    }
    Ok(sim.finish())
}

pub fn tree_intersect(t: &Topology, dist: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    need_tree(t)?;
    with_small_r(dist, |d| tree_intersect_ordered(t, d, seed))
}

fn tree_intersect_ordered(t: &Topology, d: &Distribution, seed: u64) -> Result<(TrafficTrace, NodeState), SimError> {
    let mut sim = Sim::new(t, d, 1, DEFAULT_WIDTH_BITS);
    if d.r_len() == 0 {
        return Ok(sim.finish());
    }
    let p = balanced_partition(t, d)?;
    let mut hashes = Vec::new();
    let mut block_of: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (i, b) in p.blocks.iter().enumerate() {
        for &v in b {
            block_of.insert(v, i);
        }
        let weights: Vec<(NodeId, Q)> = b.iter().map(|&v| (v, qu(d.n_v(v)))).collect();
        hashes.push(match proportional_probs(&weights) {
            Some(probs) => Some(make_hash(seed, i as u64 + 1, &probs)?),
            None => None,
        });
    }
    for (&v, l) in d.locals() {
        let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
        for e in &l.r {
            let mut dests: Vec<NodeId> = hashes.iter().flatten().map(|h| h.eval(e.key)).collect();
            dests.sort_unstable();
            dests.dedup();
            groups.entry((v, dests)).or_default().push(*e);
        }
        sim.ship_groups(0, Rel::R, groups)?;
        if let Some(h) = &hashes[block_of[&v]] {
            let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
            for e in &l.s {
                groups.entry((v, vec![h.eval(e.key)])).or_default().push(*e);
            }
            sim.ship_groups(0, Rel::S, groups)?;
        }
    }
    Ok(sim.finish())
}
