//! Bandwidth-annotated network graphs: stars, trees, normalization, edge cuts,
//! the data-dependent orientation `G†` and its minimal covers.

use crate::exact::Ext;
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Compute,
    Router,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub bw: Ext,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("star needs at least one compute node")]
    EmptyStar,
    #[error("topology has no compute nodes")]
    NoCompute,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge {0}->{1} has nonpositive bandwidth")]
    NonPositive(NodeId, NodeId),
    #[error("compute node {0} cannot reach compute node {1}")]
    Disconnected(NodeId, NodeId),
    #[error("symmetric flag set but edge {0}->{1} has no equal-bandwidth reverse")]
    FlagMismatch(NodeId, NodeId),
    #[error("topology is not symmetric")]
    NotSymmetric,
    #[error("undirected skeleton is not a tree")]
    NotATree,
    #[error("no directed edge {0}->{1} along the tree path")]
    MissingDirection(NodeId, NodeId),
    #[error("all data sizes are zero")]
    ZeroSizes,
    #[error("cover enumeration is limited to {limit} nodes, tree has {got}")]
    TooLarge { limit: usize, got: usize },
}

/// Rooting of the undirected skeleton at the node with the largest id.
#[derive(Clone, Debug)]
struct TreeMeta {
    parent: Vec<Option<NodeId>>,
    depth: Vec<usize>,
    preorder: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    symmetric: bool,
    index: HashMap<(NodeId, NodeId), EdgeId>,
    nbrs: Vec<Vec<NodeId>>,
    compute: Vec<NodeId>,
    tree: Option<TreeMeta>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.symmetric == other.symmetric
    }
}

impl Topology {
    /// Node ids are the positions in `nodes`.
    pub fn new(nodes: Vec<(NodeKind, String)>, edges: Vec<Edge>, symmetric: bool) -> Result<Topology, TopologyError> {
        let n = nodes.len();
        let nodes: Vec<Node> =
            nodes.into_iter().enumerate().map(|(id, (kind, label))| Node { id, kind, label }).collect();
        let mut index = HashMap::new();
        let mut nbrs = vec![BTreeSet::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n {
                return Err(TopologyError::UnknownNode(e.from));
            }
            if e.to >= n {
                return Err(TopologyError::UnknownNode(e.to));
            }
            if e.from == e.to {
                return Err(TopologyError::SelfLoop(e.from));
            }
            if e.bw <= Ext::zero() {
                return Err(TopologyError::NonPositive(e.from, e.to));
            }
            if index.insert((e.from, e.to), i).is_some() {
                return Err(TopologyError::DuplicateEdge(e.from, e.to));
            }
            nbrs[e.from].insert(e.to);
            nbrs[e.to].insert(e.from);
        }
        if symmetric {
            for e in &edges {
                match index.get(&(e.to, e.from)) {
                    Some(&r) if edges[r].bw == e.bw => {}
                    _ => return Err(TopologyError::FlagMismatch(e.from, e.to)),
                }
            }
        }
        let compute: Vec<NodeId> = nodes.iter().filter(|v| v.kind == NodeKind::Compute).map(|v| v.id).collect();
        if compute.is_empty() {
            return Err(TopologyError::NoCompute);
        }
        let mut t = Topology {
            nodes,
            edges,
            symmetric,
            index,
            nbrs: nbrs.into_iter().map(|s| s.into_iter().collect()).collect(),
            compute,
            tree: None,
        };
        t.check_connected()?;
        t.tree = t.build_tree_meta();
        Ok(t)
    }

    /// Symmetric topology from undirected links.
    pub fn symmetric_tree(
        nodes: Vec<(NodeKind, String)>,
        links: &[(NodeId, NodeId, Ext)],
    ) -> Result<Topology, TopologyError> {
        let mut edges = Vec::with_capacity(2 * links.len());
        for (a, b, w) in links {
            edges.push(Edge { from: *a, to: *b, bw: w.clone() });
            edges.push(Edge { from: *b, to: *a, bw: w.clone() });
        }
        Topology::new(nodes, edges, true)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        let mut out = vec![Vec::new(); n];
        for e in &self.edges {
            out[e.from].push(e.to);
        }
        for &s in &self.compute {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(x) = queue.pop_front() {
                for &y in &out[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            if let Some(&t) = self.compute.iter().find(|&&t| !seen[t]) {
                return Err(TopologyError::Disconnected(s, t));
            }
        }
        Ok(())
    }

    fn build_tree_meta(&self) -> Option<TreeMeta> {
        let n = self.nodes.len();
        let links: usize = self.nbrs.iter().map(Vec::len).sum::<usize>() / 2;
        if links + 1 != n {
            return None;
        }
        let root = n - 1;
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(x) = stack.pop() {
            preorder.push(x);
            for &y in self.nbrs[x].iter().rev() {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    depth[y] = depth[x] + 1;
                    stack.push(y);
                }
            }
        }
        if preorder.len() != n {
            return None;
        }
        Some(TreeMeta { parent, depth, preorder })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge, TopologyError> {
        self.edges.get(e).ok_or(TopologyError::UnknownEdge(e))
    }

    pub fn edge_id(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.index.get(&(from, to)).copied()
    }

    pub fn bw(&self, from: NodeId, to: NodeId) -> Option<&Ext> {
        self.edge_id(from, to).map(|e| &self.edges[e].bw)
    }

    pub fn bandwidths(&self) -> Vec<Ext> {
        self.edges.iter().map(|e| e.bw.clone()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_tree(&self) -> bool {
        self.tree.is_some()
    }

    pub fn compute_nodes(&self) -> &[NodeId] {
        &self.compute
    }

    pub fn is_compute(&self, v: NodeId) -> bool {
        self.nodes.get(v).is_some_and(|x| x.kind == NodeKind::Compute)
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.nbrs[v]
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.nodes[v].label
    }

    pub fn find_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|v| v.label == label).map(|v| v.id)
    }

    fn check_node(&self, v: NodeId) -> Result<(), TopologyError> {
        if v < self.nodes.len() {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(v))
        }
    }

    fn meta(&self) -> Result<&TreeMeta, TopologyError> {
        self.tree.as_ref().ok_or(TopologyError::NotATree)
    }

    /// The star center when every compute node hangs off one router.
    pub fn star_center(&self) -> Option<NodeId> {
        let routers: Vec<NodeId> = (0..self.nodes.len()).filter(|&v| !self.is_compute(v)).collect();
        if routers.len() != 1 || !self.is_tree() {
            return None;
        }
        let o = routers[0];
        self.compute
            .iter()
            .all(|&v| self.nbrs[v] == [o] && self.index.contains_key(&(v, o)) && self.index.contains_key(&(o, v)))
            .then_some(o)
    }

    /// Uplink `w(v,o)` and downlink `w(o,v)` for a star leaf.
    pub fn star_links(&self, v: NodeId) -> Option<(Ext, Ext)> {
        let o = self.star_center()?;
        Some((self.bw(v, o)?.clone(), self.bw(o, v)?.clone()))
    }

    /// `(child, parent)` pairs of the skeleton rooted at the largest node id.
    pub fn links(&self) -> Result<Vec<(NodeId, NodeId)>, TopologyError> {
        let m = self.meta()?;
        Ok(m.preorder.iter().filter_map(|&c| m.parent[c].map(|p| (c, p))).collect())
    }

    /// Node sums of `sizes` over each subtree of the largest-id rooting.
    fn subtree_sums(&self, sizes: &[u64]) -> Result<Vec<u64>, TopologyError> {
        let m = self.meta()?;
        let mut sub: Vec<u64> = (0..self.nodes.len())
            .map(|v| if self.is_compute(v) { sizes.get(v).copied().unwrap_or(0) } else { 0 })
            .collect();
        for &v in m.preorder.iter().rev() {
            if let Some(p) = m.parent[v] {
                sub[p] += sub[v];
            }
        }
        Ok(sub)
    }

    /// Compute-node sums on the tail and head side of every directed edge.
    pub fn side_sums(&self, sizes: &[u64]) -> Result<Vec<(u64, u64)>, TopologyError> {
        let m = self.meta()?;
        let sub = self.subtree_sums(sizes)?;
        let total = sub[m.preorder[0]];
        Ok(self
            .edges
            .iter()
            .map(|e| {
                if m.parent[e.from] == Some(e.to) {
                    (sub[e.from], total - sub[e.from])
                } else {
                    (total - sub[e.to], sub[e.to])
                }
            })
            .collect())
    }

    /// Nodes in the subtree of `v` when the skeleton is cut at `{v, away}`.
    pub fn side_of(&self, v: NodeId, away: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        self.check_node(v)?;
        self.check_node(away)?;
        let mut seen = vec![false; self.nodes.len()];
        seen[v] = true;
        seen[away] = true;
        let mut out = vec![v];
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &y in &self.nbrs[x] {
                if !seen[y] {
                    seen[y] = true;
                    out.push(y);
                    stack.push(y);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn unique_path(&self, u: NodeId, v: NodeId) -> Result<Vec<EdgeId>, TopologyError> {
        self.check_node(u)?;
        self.check_node(v)?;
        let m = self.meta()?;
        let (mut a, mut b) = (u, v);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while a != b {
            if m.depth[a] >= m.depth[b] {
                let p = m.parent[a].expect("non-root has parent");
                up.push((a, p));
                a = p;
            } else {
                let p = m.parent[b].expect("non-root has parent");
                down.push((p, b));
                b = p;
            }
        }
        up.into_iter()
            .chain(down.into_iter().rev())
            .map(|(x, y)| self.edge_id(x, y).ok_or(TopologyError::MissingDirection(x, y)))
            .collect()
    }

    /// Edges of the union of the paths from `src` to each destination.
    pub fn steiner_edges(&self, src: NodeId, dests: &[NodeId]) -> Result<BTreeSet<EdgeId>, TopologyError> {
        let mut out = BTreeSet::new();
        for &d in dests {
            out.extend(self.unique_path(src, d)?);
        }
        Ok(out)
    }
}

/// Star with `p` compute leaves `v1..vp` (ids `0..p`) and center `o` (id `p`).
pub fn build_star(links: &[(Ext, Ext)]) -> Result<Topology, TopologyError> {
    if links.is_empty() {
        return Err(TopologyError::EmptyStar);
    }
    let p = links.len();
    let mut nodes: Vec<(NodeKind, String)> = (0..p).map(|i| (NodeKind::Compute, format!("v{}", i + 1))).collect();
    nodes.push((NodeKind::Router, "o".to_string()));
    let mut edges = Vec::with_capacity(2 * p);
    for (v, (up, down)) in links.iter().enumerate() {
        edges.push(Edge { from: v, to: p, bw: up.clone() });
        edges.push(Edge { from: p, to: v, bw: down.clone() });
    }
    let symmetric = links.iter().all(|(u, d)| u == d);
    Topology::new(nodes, edges, symmetric)
}

/// Symmetric star with the given per-leaf bandwidths.
pub fn symmetric_star(bws: &[Ext]) -> Result<Topology, TopologyError> {
    build_star(&bws.iter().map(|w| (w.clone(), w.clone())).collect::<Vec<_>>())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalizeReport {
    /// Internal compute nodes moved to a fresh leaf behind a new router.
    pub leafed: Vec<String>,
    /// Degree-2 routers removed with their edges fused.
    pub fused: Vec<String>,
    /// Leaf routers removed.
    pub pruned: Vec<String>,
}

impl NormalizeReport {
    pub fn is_noop(&self) -> bool {
        self.leafed.is_empty() && self.fused.is_empty() && self.pruned.is_empty()
    }
}

/// Rewrite a symmetric tree so compute nodes are leaves and degree-2 routers
/// disappear. An internal compute node keeps its id and label as a leaf and
/// hands its links to a new router joined by an infinite link. A degree-2
/// router is fused away unless it is the only router left, so stars with two
/// leaves stay stars.
pub fn normalize_tree(t: &Topology) -> Result<(Topology, NormalizeReport), TopologyError> {
    if !t.is_symmetric() {
        return Err(TopologyError::NotSymmetric);
    }
    if !t.is_tree() {
        return Err(TopologyError::NotATree);
    }
    let mut kinds: Vec<(NodeKind, String)> = t.nodes.iter().map(|v| (v.kind, v.label.clone())).collect();
    let mut alive = vec![true; kinds.len()];
    let mut adj: Vec<std::collections::BTreeMap<NodeId, Ext>> = vec![Default::default(); kinds.len()];
    for e in &t.edges {
        adj[e.from].insert(e.to, e.bw.clone());
    }
    let mut report = NormalizeReport::default();

    for v in 0..t.nodes.len() {
        if kinds[v].0 == NodeKind::Compute && adj[v].len() >= 2 {
            let r = kinds.len();
            kinds.push((NodeKind::Router, format!("{}~", kinds[v].1)));
            alive.push(true);
            let moved = std::mem::take(&mut adj[v]);
            adj.push(Default::default());
            for (u, w) in moved {
                let back = adj[u].remove(&v).expect("symmetric");
                adj[u].insert(r, back);
                adj[r].insert(u, w);
            }
            adj[v].insert(r, Ext::Inf);
            adj[r].insert(v, Ext::Inf);
            report.leafed.push(kinds[v].1.clone());
        }
    }

    loop {
        let routers = (0..kinds.len()).filter(|&v| alive[v] && kinds[v].0 == NodeKind::Router).count();
        let leaf = (0..kinds.len())
            .find(|&v| alive[v] && kinds[v].0 == NodeKind::Router && adj[v].len() <= 1 && kinds.len() > 1);
        if let Some(x) = leaf {
            for u in std::mem::take(&mut adj[x]).into_keys() {
                adj[u].remove(&x);
            }
            alive[x] = false;
            report.pruned.push(kinds[x].1.clone());
            continue;
        }
        let deg2 =
            (0..kinds.len()).find(|&v| alive[v] && kinds[v].0 == NodeKind::Router && adj[v].len() == 2 && routers > 1);
        let Some(x) = deg2 else { break };
        let ends: Vec<(NodeId, Ext)> = std::mem::take(&mut adj[x]).into_iter().collect();
        let (a, wa) = &ends[0];
        let (b, wb) = &ends[1];
        adj[*a].remove(&x);
        adj[*b].remove(&x);
        let w = wa.clone().min(wb.clone());
        adj[*a].insert(*b, w.clone());
        adj[*b].insert(*a, w);
        alive[x] = false;
        report.fused.push(kinds[x].1.clone());
    }

    let mut remap = vec![usize::MAX; kinds.len()];
    let mut nodes = Vec::new();
    for v in 0..kinds.len() {
        if alive[v] {
            remap[v] = nodes.len();
            nodes.push(kinds[v].clone());
        }
    }
    let mut edges = Vec::new();
    for v in 0..kinds.len() {
        if alive[v] {
            for (u, w) in &adj[v] {
                edges.push(Edge { from: remap[v], to: remap[*u], bw: w.clone() });
            }
        }
    }
    // keep the input's edge order when nothing changed
    if report.is_noop() {
        return Ok((t.clone(), report));
    }
    Ok((Topology::new(nodes, edges, true)?, report))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCut {
    pub edge: EdgeId,
    pub minus: BTreeSet<NodeId>,
    pub plus: BTreeSet<NodeId>,
}

pub fn edge_cut(t: &Topology, e: EdgeId) -> Result<EdgeCut, TopologyError> {
    let edge = t.edge(e)?.clone();
    let tail: BTreeSet<NodeId> = t.side_of(edge.from, edge.to)?.into_iter().filter(|&v| t.is_compute(v)).collect();
    let plus = t.compute.iter().copied().filter(|v| !tail.contains(v)).collect();
    Ok(EdgeCut { edge: e, minus: tail, plus })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedTree {
    pub parent: Vec<Option<NodeId>>,
    pub root: NodeId,
    pub children: Vec<Vec<NodeId>>,
}

impl OrientedTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Nodes without incoming edges.
    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&v| self.children[v].is_empty()).collect()
    }

    /// `v` followed by its ancestors up to the root.
    pub fn chain(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = vec![v];
        let mut x = v;
        while let Some(p) = self.parent[x] {
            out.push(p);
            x = p;
        }
        out
    }

    /// Post-order traversal (children in id order).
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                out.push(v);
            } else {
                stack.push((v, true));
                for &c in self.children[v].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Bandwidth of the outgoing edge `v -> parent(v)`.
    pub fn out_bw<'a>(&self, t: &'a Topology, v: NodeId) -> Option<&'a Ext> {
        self.parent[v].and_then(|p| t.bw(v, p))
    }

    pub fn is_cover(&self, set: &BTreeSet<NodeId>) -> bool {
        self.leaves().into_iter().all(|l| self.chain(l).iter().any(|x| set.contains(x)))
    }

    pub fn is_minimal_cover(&self, set: &BTreeSet<NodeId>) -> bool {
        self.is_cover(set)
            && set.iter().all(|x| {
                let mut smaller = set.clone();
                smaller.remove(x);
                !self.is_cover(&smaller)
            })
    }
}

/// Orient every skeleton edge toward the side holding at least half the data.
/// A tie points toward the side containing the largest node id, which is the
/// parent side in the largest-id rooting.
pub fn orient(t: &Topology, sizes: &[u64]) -> Result<OrientedTree, TopologyError> {
    let m = t.meta()?;
    let sub = t.subtree_sums(sizes)?;
    let n = t.nodes.len();
    let total = sub[m.preorder[0]];
    if total == 0 {
        return Err(TopologyError::ZeroSizes);
    }
    let mut parent = vec![None; n];
    for &c in &m.preorder {
        if let Some(p) = m.parent[c] {
            if sub[c] <= total - sub[c] {
                parent[c] = Some(p);
            } else {
                parent[p] = Some(c);
            }
        }
    }
    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    let roots: Vec<NodeId> = (0..n).filter(|&v| parent[v].is_none()).collect();
    debug_assert_eq!(roots.len(), 1);
    Ok(OrientedTree { parent, root: roots[0], children })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cover {
    pub members: BTreeSet<NodeId>,
}

pub const COVER_LIMIT: usize = 24;

/// All minimal covers. Within the subtree of `v` a minimal cover is either
/// `{v}` or the union of minimal covers of every child.
pub fn enumerate_minimal_covers(ot: &OrientedTree) -> Result<Vec<Cover>, TopologyError> {
    if ot.len() > COVER_LIMIT {
        return Err(TopologyError::TooLarge { limit: COVER_LIMIT, got: ot.len() });
    }
    let mut memo: Vec<Vec<BTreeSet<NodeId>>> = vec![Vec::new(); ot.len()];
    for v in ot.postorder() {
        let mut own = vec![BTreeSet::from([v])];
        if !ot.children[v].is_empty() {
            let mut acc = vec![BTreeSet::new()];
            for &c in &ot.children[v] {
                let mut next = Vec::with_capacity(acc.len() * memo[c].len());
                for a in &acc {
                    for b in &memo[c] {
                        next.push(a.union(b).copied().collect());
                    }
                }
                acc = next;
            }
            own.extend(acc);
        }
        memo[v] = own;
    }
    let mut out: Vec<Cover> = std::mem::take(&mut memo[ot.root]).into_iter().map(|members| Cover { members }).collect();
    out.sort();
    Ok(out)
}

/// Test and bench fixtures.
pub mod fixtures {
    use super::*;

    /// Two-level tree: `o` over routers `a`, `b`; `a` holds `v1,v2` and `b`
    /// holds `v3,v4`. Ids: `v1..v4 = 0..3`, `a = 4`, `b = 5`, `o = 6`.
    pub fn tree4(w: Ext) -> Topology {
        let mut nodes: Vec<(NodeKind, String)> = (1..=4).map(|i| (NodeKind::Compute, format!("v{i}"))).collect();
        for l in ["a", "b", "o"] {
            nodes.push((NodeKind::Router, l.to_string()));
        }
        let links = [(0, 4), (1, 4), (2, 5), (3, 5), (4, 6), (5, 6)];
        let links: Vec<_> = links.iter().map(|&(a, b)| (a, b, w.clone())).collect();
        Topology::symmetric_tree(nodes, &links).expect("valid fixture")
    }

    pub fn unit_star(p: usize) -> Topology {
        symmetric_star(&vec![Ext::int(1); p]).expect("valid fixture")
    }

    /// Random normalized symmetric tree. Routers form a random recursive
    /// tree, each compute node hangs off a random router, and every link
    /// gets an integer bandwidth in `1..=max_bw`. Needs `compute >= 2`.
    pub fn random_tree(seed: u64, compute: usize, routers: usize, max_bw: i64) -> Topology {
        use rand::Rng;
        let mut rng = crate::simkernel::rng_for(seed, 7);
        let routers = routers.max(1);
        let mut nodes: Vec<(NodeKind, String)> = (0..compute).map(|i| (NodeKind::Compute, format!("v{i}"))).collect();
        nodes.extend((0..routers).map(|i| (NodeKind::Router, format!("x{i}"))));
        let mut links = Vec::new();
        for i in 1..routers {
            let p = rng.random_range(0..i);
            links.push((compute + p, compute + i, Ext::int(rng.random_range(1..=max_bw))));
        }
        for v in 0..compute {
            let p = rng.random_range(0..routers);
            links.push((v, compute + p, Ext::int(rng.random_range(1..=max_bw))));
        }
        let t = Topology::symmetric_tree(nodes, &links).expect("valid random tree");
        normalize_tree(&t).expect("tree normalizes").0
    }
}
