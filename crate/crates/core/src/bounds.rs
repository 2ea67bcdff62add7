//! Lower bounds on tuple cost, evaluated exactly.

use crate::asymstar::{opt_split, SplitResult};
use crate::exact::{qu, Ext, Surd, Q};
use crate::simkernel::Distribution;
use crate::topology::{enumerate_minimal_covers, orient, Cover, EdgeId, NodeId, Topology, TopologyError};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("bound needs a star topology")]
    NotStar,
    #[error("bound needs a symmetric topology")]
    NotSymmetric,
    #[error("bound needs |R| = |S|, got {0} and {1}")]
    UnequalSizes(u64, u64),
    #[error("bound not applicable: {0}")]
    NotApplicable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    IntersectTree,
    CartesianCut,
    CartesianCover,
    Sorting,
    JoinStar,
    CpUnequal,
    AsymSendingFree,
    AsymReceivingFree,
    AsymGeneral,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::IntersectTree => "intersect-tree",
            BoundKind::CartesianCut => "cartesian-cut",
            BoundKind::CartesianCover => "cartesian-cover",
            BoundKind::Sorting => "sorting",
            BoundKind::JoinStar => "join-star",
            BoundKind::CpUnequal => "cartesian-unequal",
            BoundKind::AsymSendingFree => "asym-sending-free",
            BoundKind::AsymReceivingFree => "asym-receiving-free",
            BoundKind::AsymGeneral => "asym-general",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What realizes the bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Edge(EdgeId),
    Cover(BTreeSet<NodeId>),
    Node(NodeId),
    /// A sending/receiving split `(V_alpha, V_beta)`.
    Split {
        alpha: BTreeSet<NodeId>,
        beta: BTreeSet<NodeId>,
    },
    /// A named term of a composite formula.
    Term(&'static str),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(s: &BTreeSet<NodeId>) -> String {
            s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        }
        match self {
            Witness::Edge(e) => write!(f, "edge {e}"),
            Witness::Cover(c) => write!(f, "cover {{{}}}", set(c)),
            Witness::Node(v) => write!(f, "node {v}"),
            Witness::Split { alpha, beta } => write!(f, "alpha {{{}}} beta {{{}}}", set(alpha), set(beta)),
            Witness::Term(t) => f.write_str(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub value: Surd,
    pub kind: BoundKind,
    pub witness: Witness,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn rational(value: Q, kind: BoundKind, witness: Witness) -> BoundReport {
        BoundReport { value: Surd::rational(&value), kind, witness, notes: Vec::new() }
    }
}

/// `count / w` with `count / inf = 0`. Bandwidths are positive.
pub(crate) fn per(count: &Q, w: &Ext) -> Q {
    match w.per(count) {
        Ext::Fin(x) => x,
        Ext::Inf => unreachable!("bandwidths are positive"),
    }
}

fn need_symmetric(t: &Topology) -> Result<(), BoundError> {
    if !t.is_symmetric() {
        return Err(BoundError::NotSymmetric);
    }
    if !t.is_tree() {
        return Err(TopologyError::NotATree.into());
    }
    Ok(())
}

/// Max over directed edges of `term(tail, head) / w_e`, first argmax by id.
fn edge_max(t: &Topology, sizes: &[u64], term: impl Fn(u64, u64) -> u64) -> Result<(Q, EdgeId), BoundError> {
    let sides = t.side_sums(sizes)?;
    let mut best = (Q::zero(), 0);
    for (e, (edge, (tail, head))) in t.edges().iter().zip(sides).enumerate() {
        let x = per(&qu(term(tail, head)), &edge.bw);
        if x > best.0 {
            best = (x, e);
        }
    }
    Ok(best)
}

pub fn lb_intersect_tree(t: &Topology, dist: &Distribution) -> Result<BoundReport, BoundError> {
    need_symmetric(t)?;
    let m = dist.r_len().min(dist.s_len());
    let (v, e) = edge_max(t, &dist.sizes(t.node_count()), |a, b| m.min(a).min(b))?;
    Ok(BoundReport::rational(v, BoundKind::IntersectTree, Witness::Edge(e)))
}

pub fn lb_cartesian_cut(t: &Topology, dist: &Distribution) -> Result<BoundReport, BoundError> {
    need_symmetric(t)?;
    let (v, e) = edge_max(t, &dist.sizes(t.node_count()), |a, b| a.min(b))?;
    Ok(BoundReport::rational(v, BoundKind::CartesianCut, Witness::Edge(e)))
}

pub fn lb_sorting(t: &Topology, dist: &Distribution) -> Result<BoundReport, BoundError> {
    let mut r = lb_cartesian_cut(t, dist)?;
    r.kind = BoundKind::Sorting;
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverChoice {
    Given(Cover),
    Exhaustive,
}

pub fn lb_cartesian_cover(t: &Topology, dist: &Distribution, choice: &CoverChoice) -> Result<BoundReport, BoundError> {
    need_symmetric(t)?;
    let (r, s) = (dist.r_len(), dist.s_len());
    if r != s {
        return Err(BoundError::UnequalSizes(r, s));
    }
    let sizes = dist.sizes(t.node_count());
    let ot = orient(t, &sizes)?;
    if t.is_compute(ot.root) {
        return Err(BoundError::NotApplicable(format!(
            "orientation is rooted at compute node {}; routing everything there is optimal",
            t.label(ot.root)
        )));
    }
    let n = qu(dist.n());
    let eval = |members: &BTreeSet<NodeId>| -> Surd {
        let mut sum = Q::zero();
        for &v in members {
            match ot.out_bw(t, v).expect("cover members below the root") {
                Ext::Inf => return Surd::zero(),
                Ext::Fin(w) => sum += w * w,
            }
        }
        Surd::sqrt_of(&n * &n / sum)
    };
    let root_only = BTreeSet::from([ot.root]);
    match choice {
        CoverChoice::Given(c) => {
            if c.members == root_only || !ot.is_minimal_cover(&c.members) {
                return Err(BoundError::NotApplicable("not a minimal cover other than the root".into()));
            }
            Ok(BoundReport {
                value: eval(&c.members),
                kind: BoundKind::CartesianCover,
                witness: Witness::Cover(c.members.clone()),
                notes: Vec::new(),
            })
        }
        CoverChoice::Exhaustive => {
            let mut best: Option<(Surd, BTreeSet<NodeId>)> = None;
            for c in enumerate_minimal_covers(&ot)? {
                if c.members == root_only {
                    continue;
                }
                let v = eval(&c.members);
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, c.members));
                }
            }
            let (value, members) =
                best.ok_or_else(|| BoundError::NotApplicable("no minimal cover besides the root".into()))?;
            Ok(BoundReport {
                value,
                kind: BoundKind::CartesianCover,
                witness: Witness::Cover(members),
                notes: Vec::new(),
            })
        }
    }
}

fn star_center(t: &Topology) -> Result<NodeId, BoundError> {
    t.star_center().ok_or(BoundError::NotStar)
}

/// Symmetric star bandwidth of leaf `v`.
fn leaf_bw(t: &Topology, v: NodeId) -> Ext {
    t.star_links(v).expect("star leaf").0
}

fn ordered(dist: &Distribution) -> Distribution {
    if dist.r_len() > dist.s_len() {
        dist.swapped()
    } else {
        dist.clone()
    }
}

pub fn lb_join_star(t: &Topology, dist: &Distribution) -> Result<BoundReport, BoundError> {
    star_center(t)?;
    if !t.is_symmetric() {
        return Err(BoundError::NotSymmetric);
    }
    let d = ordered(dist);
    let (r, s, n) = (d.r_len(), d.s_len(), d.n());
    let mut best = BoundReport::rational(Q::zero(), BoundKind::JoinStar, Witness::Node(t.compute_nodes()[0]));
    for &v in t.compute_nodes() {
        let nv = d.n_v(v);
        let x = per(&qu(r.min(nv).min(n - nv)), &leaf_bw(t, v));
        if Surd::rational(&x) > best.value {
            best = BoundReport::rational(x, BoundKind::JoinStar, Witness::Node(v));
        }
    }
    let max_nu = t.compute_nodes().iter().map(|&u| d.n_v(u)).max().unwrap_or(0);
    if max_nu < s {
        let n_prime: u64 = t.compute_nodes().iter().map(|&v| if d.n_v(v) > r { d.r_v(v) } else { d.n_v(v) }).sum();
        let mut w_sum = Ext::zero();
        for &v in t.compute_nodes() {
            w_sum = w_sum.add(&leaf_bw(t, v));
        }
        let x = per(&qu(n_prime), &w_sum);
        if Surd::rational(&x) > best.value {
            let notes = best.notes.clone();
            best = BoundReport::rational(x, BoundKind::JoinStar, Witness::Term("hash"));
            best.notes = notes;
        }
    } else {
        best.notes.push("hash term omitted: some node holds at least |S| tuples".into());
    }
    Ok(best)
}

/// Minimal `C >= 0` with `sum_v min{C w_v, r} C w_v >= r s`, and whether it
/// is exact. Irrational roots are bracketed by bisection to relative
/// precision `2^-30` and the feasible end is returned.
pub fn eq1_minimizer(r: u64, s: u64, ws: &[Ext]) -> (Q, bool) {
    let target = qu(r) * qu(s);
    if target.is_zero() || ws.iter().any(Ext::is_inf) {
        return (Q::zero(), true);
    }
    let rq = qu(r);
    let mut ws: Vec<Q> = ws.iter().map(|w| w.fin().expect("finite").clone()).collect();
    if ws.is_empty() {
        return (Q::zero(), false);
    }
    // saturate in order of decreasing w, i.e. increasing breakpoint r / w
    ws.sort_by(|a, b| b.cmp(a));
    let lhs = |c: &Q| -> Q { ws.iter().map(|w| (c * w).min(rq.clone()) * c * w).sum() };
    let mut lo = Q::zero();
    let mut sat_w = Q::zero();
    let mut unsat_w2: Q = ws.iter().map(|w| w * w).sum();
    for k in 0..=ws.len() {
        let hi = ws.get(k).map(|w| &rq / w);
        let feasible_here = match &hi {
            Some(h) => lhs(h) >= target,
            None => true,
        };
        if feasible_here {
            // a c^2 + b c = target on [lo, hi]
            let a = unsat_w2.clone();
            let b = &rq * &sat_w;
            if a.is_zero() {
                return (&target / &b, true);
            }
            let disc = &b * &b + qu(4) * &a * &target;
            let two_a = qu(2) * &a;
            if let Some(root) = Surd::sqrt_of(disc.clone()).as_rational() {
                return ((root - &b) / two_a, true);
            }
            let mut lo_c = lo.clone();
            let mut hi_c = hi.unwrap_or_else(|| {
                let mut h = Q::one();
                while lhs(&h) < target {
                    h *= qu(2);
                }
                h
            });
            let eps = &hi_c / Q::from_integer(BigInt::from(1u64 << 30));
            while &hi_c - &lo_c > eps {
                let mid = (&lo_c + &hi_c) / qu(2);
                if lhs(&mid) >= target {
                    hi_c = mid;
                } else {
                    lo_c = mid;
                }
            }
            return (hi_c, false);
        }
        let w = &ws[k];
        lo = &rq / w;
        sat_w += w;
        unsat_w2 -= w * w;
    }
    unreachable!("the last piece is unbounded")
}

pub fn lb_cp_unequal(t: &Topology, dist: &Distribution) -> Result<BoundReport, BoundError> {
    star_center(t)?;
    if !t.is_symmetric() {
        return Err(BoundError::NotSymmetric);
    }
    let d = ordered(dist);
    let (r, s, n) = (d.r_len(), d.s_len(), d.n());
    let nodes = t.compute_nodes();
    let mut best = BoundReport::rational(Q::zero(), BoundKind::CpUnequal, Witness::Node(nodes[0]));
    for &v in nodes {
        let nv = d.n_v(v);
        let x = per(&qu(nv.min(n - nv).min(r)), &leaf_bw(t, v));
        if Surd::rational(&x) > best.value {
            best = BoundReport::rational(x, BoundKind::CpUnequal, Witness::Node(v));
        }
    }
    let max_nv = nodes.iter().map(|&v| d.n_v(v)).max().unwrap_or(0);
    if 2 * max_nv > n {
        best.notes.push("packing term omitted: some node holds more than N/2".into());
        return Ok(best);
    }
    let alpha: Vec<NodeId> = nodes.iter().copied().filter(|&v| d.n_v(v).min(n - d.n_v(v)) < r).collect();
    let beta: Vec<NodeId> = nodes.iter().copied().filter(|v| !alpha.contains(v)).collect();
    let max_w = nodes.iter().map(|&v| leaf_bw(t, v)).max().expect("nonempty");
    let mut terms: Vec<(Q, &'static str)> = vec![(per(&qu(s), &max_w), "all-to-widest")];
    let s_alpha: u64 = alpha.iter().map(|&v| d.s_v(v)).sum();
    if beta.is_empty() {
        best.notes.push("redistribution term dropped: V_beta is empty".into());
    } else {
        let mut wb = Ext::zero();
        for &v in &beta {
            wb = wb.add(&leaf_bw(t, v));
        }
        terms.push((per(&qu(s_alpha), &wb.scale(&qu(2))), "redistribute"));
    }
    let ws: Vec<Ext> = alpha.iter().map(|&v| leaf_bw(t, v)).collect();
    let (c, exact) = eq1_minimizer(r, s_alpha, &ws);
    if !exact {
        best.notes.push("packing term is a bisection upper bracket".into());
    }
    terms.push((c, "packing"));
    let (x, name) = terms.into_iter().min_by(|a, b| a.0.cmp(&b.0)).expect("nonempty");
    if Surd::rational(&x) > best.value {
        let notes = std::mem::take(&mut best.notes);
        best = BoundReport::rational(x, BoundKind::CpUnequal, Witness::Term(name));
        best.notes = notes;
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AsymVariant {
    SendingFree,
    ReceivingFree,
    General,
}

/// Per-leaf sizes and link bandwidths of a star.
pub(crate) struct StarView {
    pub nodes: Vec<NodeId>,
    pub r: Vec<u64>,
    pub s: Vec<u64>,
    pub up: Vec<Ext>,
    pub down: Vec<Ext>,
}

impl StarView {
    pub fn new(t: &Topology, dist: &Distribution) -> Option<StarView> {
        t.star_center()?;
        let nodes = t.compute_nodes().to_vec();
        let links: Vec<(Ext, Ext)> = nodes.iter().map(|&v| t.star_links(v).expect("leaf")).collect();
        Some(StarView {
            r: nodes.iter().map(|&v| dist.r_v(v)).collect(),
            s: nodes.iter().map(|&v| dist.s_v(v)).collect(),
            up: links.iter().map(|l| l.0.clone()).collect(),
            down: links.iter().map(|l| l.1.clone()).collect(),
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn rt(&self) -> u64 {
        self.r.iter().sum()
    }

    pub fn st(&self) -> u64 {
        self.s.iter().sum()
    }

    pub fn down_sum(&self) -> Ext {
        self.down.iter().fold(Ext::zero(), |a, w| a.add(w))
    }

    pub fn set(&self, idx: impl IntoIterator<Item = usize>) -> BTreeSet<NodeId> {
        idx.into_iter().map(|i| self.nodes[i]).collect()
    }
}

fn ratio(c: u64, w: &Ext) -> Q {
    per(&qu(c), w)
}

fn max_q(it: impl Iterator<Item = Q>) -> Q {
    it.fold(Q::zero(), |a, b| a.max(b))
}

pub fn lb_asym_star(t: &Topology, dist: &Distribution, variant: AsymVariant) -> Result<BoundReport, BoundError> {
    let sv = StarView::new(t, dist).ok_or(BoundError::NotStar)?;
    let (value, witness) = match variant {
        AsymVariant::SendingFree => sending_free_lb(&sv),
        AsymVariant::ReceivingFree => receiving_free_lb(&sv),
        AsymVariant::General => general_lb(&sv),
    };
    let kind = match variant {
        AsymVariant::SendingFree => BoundKind::AsymSendingFree,
        AsymVariant::ReceivingFree => BoundKind::AsymReceivingFree,
        AsymVariant::General => BoundKind::AsymGeneral,
    };
    Ok(BoundReport::rational(value, kind, witness))
}

fn all_but(sv: &StarView, i: usize) -> BTreeSet<NodeId> {
    sv.set((0..sv.len()).filter(|&j| j != i))
}

fn complement(sv: &StarView, chosen: &BTreeSet<usize>) -> BTreeSet<NodeId> {
    sv.set((0..sv.len()).filter(|j| !chosen.contains(j)))
}

/// Receiving links carry the cost; uplinks are ignored.
fn sending_free_lb(sv: &StarView) -> (Q, Witness) {
    let (r, s) = (sv.rt(), sv.st());
    let w = sv.down_sum();
    let mut best: Option<(Q, Witness)> = None;
    let mut offer = |x: Q, wit: Witness| {
        if best.as_ref().is_none_or(|b| x < b.0) {
            best = Some((x, wit));
        }
    };
    for i in 0..sv.len() {
        let keep = ratio(s - sv.s[i], &sv.down[i]).max(ratio(r - sv.r[i], &sv.down[i]));
        let x = keep + ratio(r + s - sv.r[i] - sv.s[i], &w);
        let rest = all_but(sv, i);
        offer(x, Witness::Split { alpha: rest.clone(), beta: rest });
    }
    // V_alpha = V_C: the nodes outside V_beta keep S and need the rest of R
    let fg: Vec<(Q, Q)> = (0..sv.len()).map(|i| (ratio(r - sv.r[i], &sv.down[i]), ratio(sv.s[i], &w))).collect();
    let SplitResult { chosen, value } = opt_split(&fg);
    offer(value + ratio(r, &w), Witness::Split { alpha: sv.set(0..sv.len()), beta: complement(sv, &chosen) });
    let fg: Vec<(Q, Q)> = (0..sv.len()).map(|i| (ratio(s - sv.s[i], &sv.down[i]), ratio(sv.r[i], &w))).collect();
    let SplitResult { chosen, value } = opt_split(&fg);
    offer(value + ratio(s, &w), Witness::Split { alpha: complement(sv, &chosen), beta: sv.set(0..sv.len()) });
    best.expect("star has a leaf")
}

/// Sending links carry the cost; downlinks are ignored.
fn receiving_free_lb(sv: &StarView) -> (Q, Witness) {
    let rr: Vec<Q> = (0..sv.len()).map(|i| ratio(sv.r[i], &sv.up[i])).collect();
    let ss: Vec<Q> = (0..sv.len()).map(|i| ratio(sv.s[i], &sv.up[i])).collect();
    let mut best = (Q::zero(), Witness::Node(sv.nodes[0]));
    for i in 0..sv.len() {
        let other_s = max_q((0..sv.len()).filter(|&u| u != i).map(|u| ss[u].clone()));
        let other_r = max_q((0..sv.len()).filter(|&u| u != i).map(|u| rr[u].clone()));
        let x = rr[i].clone().min(other_s).max(ss[i].clone().min(other_r));
        if x > best.0 {
            best = (x, Witness::Node(sv.nodes[i]));
        }
    }
    best
}

/// Largest and second largest entries with the argmax.
fn top2(xs: &[Q]) -> (Q, usize, Q) {
    let mut a = (Q::zero(), usize::MAX);
    let mut b = Q::zero();
    for (i, x) in xs.iter().enumerate() {
        if a.1 == usize::MAX || *x > a.0 {
            b = a.0.clone();
            a = (x.clone(), i);
        } else if *x > b {
            b = x.clone();
        }
    }
    (a.0, a.1, b)
}

fn except(top: &(Q, usize, Q), i: usize) -> Q {
    if top.1 == i {
        top.2.clone()
    } else {
        top.0.clone()
    }
}

/// The general lower bound evaluated for one of the two symmetric families:
/// every node ships all of `B` (`V_beta = V_C` for `B = S`) while `X` ships
/// all of `A`. Returns the optimum and `X`.
fn general_family(a_rel: &[u64], b_rel: &[u64], up: &[Ext], down: &[Ext], down_sum: &Ext) -> (Q, BTreeSet<usize>) {
    let n = a_rel.len();
    let b_total: u64 = b_rel.iter().sum();
    let b_up: Vec<Q> = (0..n).map(|i| ratio(b_rel[i], &up[i])).collect();
    let top_b = top2(&b_up);
    let a_up: Vec<Q> = (0..n).map(|i| ratio(a_rel[i], &up[i])).collect();
    // node outside X keeps some of A, so needs the rest of B and every other
    // node must ship its B
    let g: Vec<Q> = (0..n).map(|i| ratio(b_total - b_rel[i], &down[i]).max(except(&top_b, i))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| g[y].cmp(&g[x]).then(x.cmp(&y)));
    let mut best: Option<(Q, BTreeSet<usize>)> = None;
    let mut x_set = BTreeSet::new();
    let mut a_sum = 0u64;
    let mut a_max = Q::zero();
    for k in 0..=n {
        let outside = order.get(k).map(|&i| g[i].clone()).unwrap_or_else(Q::zero);
        let v = a_max.clone().max(outside).max(top_b.0.clone()).max(ratio(a_sum + b_total, down_sum));
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, x_set.clone()));
        }
        if let Some(&i) = order.get(k) {
            x_set.insert(i);
            a_sum += a_rel[i];
            a_max = a_max.max(a_up[i].clone());
        }
    }
    best.expect("at least the empty split")
}

fn general_lb(sv: &StarView) -> (Q, Witness) {
    let n = sv.len();
    let (r, s) = (sv.rt(), sv.st());
    let wsum = sv.down_sum();
    let r_up: Vec<Q> = (0..n).map(|i| ratio(sv.r[i], &sv.up[i])).collect();
    let s_up: Vec<Q> = (0..n).map(|i| ratio(sv.s[i], &sv.up[i])).collect();
    let (top_r, top_s) = (top2(&r_up), top2(&s_up));
    let mut best: Option<(Q, Witness)> = None;
    let mut offer = |x: Q, wit: Witness| {
        if best.as_ref().is_none_or(|b| x < b.0) {
            best = Some((x, wit));
        }
    };
    for i in 0..n {
        let x = except(&top_r, i)
            .max(except(&top_s, i))
            .max(ratio(s - sv.s[i], &sv.down[i]))
            .max(ratio(r - sv.r[i], &sv.down[i]))
            .max(ratio(r + s - sv.r[i] - sv.s[i], &wsum));
        let rest = all_but(sv, i);
        offer(x, Witness::Split { alpha: rest.clone(), beta: rest });
    }
    let (x, alpha) = general_family(&sv.r, &sv.s, &sv.up, &sv.down, &wsum);
    offer(x, Witness::Split { alpha: sv.set(alpha), beta: sv.set(0..n) });
    let (x, beta) = general_family(&sv.s, &sv.r, &sv.up, &sv.down, &wsum);
    offer(x, Witness::Split { alpha: sv.set(0..n), beta: sv.set(beta) });
    best.expect("star has a leaf")
}

/// Every bound that applies to the instance, skipping inapplicable ones.
pub fn all_bounds(t: &Topology, dist: &Distribution) -> Vec<Result<BoundReport, BoundError>> {
    let mut out = vec![lb_intersect_tree(t, dist), lb_cartesian_cut(t, dist)];
    if dist.r_len() == dist.s_len() && dist.n() > 0 {
        out.push(lb_cartesian_cover(t, dist, &CoverChoice::Exhaustive));
    }
    out.push(lb_sorting(t, dist));
    if t.star_center().is_some() {
        out.push(lb_join_star(t, dist));
        out.push(lb_cp_unequal(t, dist));
        for v in [AsymVariant::SendingFree, AsymVariant::ReceivingFree, AsymVariant::General] {
            out.push(lb_asym_star(t, dist, v));
        }
    }
    out
}
