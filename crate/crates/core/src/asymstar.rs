//! Set intersection on stars whose uplinks and downlinks differ, and the
//! subset optimizations the strategies share.

use crate::bounds::{per, StarView};
use crate::exact::{qu, Ext, Q};
use crate::simkernel::{
    make_hash, Distribution, Elem, HashFamily, NodeState, Rel, Sim, SimError, TrafficTrace, DEFAULT_WIDTH_BITS,
};
use crate::topology::{NodeId, Topology};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult {
    /// Indices into the input slice.
    pub chosen: BTreeSet<usize>,
    pub value: Q,
}

fn by_f<T>(values: &[T], f: impl Fn(&T) -> &Q) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| f(&values[a]).cmp(f(&values[b])).then(a.cmp(&b)));
    order
}

/// `min_X max_{v in X} f(v) + sum_{v not in X} g(v)`. Some optimal `X` is a
/// prefix of the nodes sorted by `f`.
pub fn opt_split(values: &[(Q, Q)]) -> SplitResult {
    let order = by_f(values, |x| &x.0);
    let mut suffix = vec![Q::zero(); values.len() + 1];
    for k in (0..values.len()).rev() {
        suffix[k] = &suffix[k + 1] + &values[order[k]].1;
    }
    let mut best = (suffix[0].clone(), 0);
    for k in 1..=values.len() {
        let v = &values[order[k - 1]].0 + &suffix[k];
        if v < best.0 {
            best = (v, k);
        }
    }
    SplitResult { chosen: order[..best.1].iter().copied().collect(), value: best.0 }
}

/// `min_X max_{v in X} f(v) + max_{v not in X} g(v) + sum_{v not in X} h(v)`.
pub fn opt_split3(values: &[(Q, Q, Q)]) -> SplitResult {
    let n = values.len();
    let order = by_f(values, |x| &x.0);
    let mut gmax = vec![Q::zero(); n + 1];
    let mut hsum = vec![Q::zero(); n + 1];
    for k in (0..n).rev() {
        let (_, g, h) = &values[order[k]];
        gmax[k] = gmax[k + 1].clone().max(g.clone());
        hsum[k] = &hsum[k + 1] + h;
    }
    let mut best = (&gmax[0] + &hsum[0], 0);
    for k in 1..=n {
        let v = &values[order[k - 1]].0 + &gmax[k] + &hsum[k];
        if v < best.0 {
            best = (v, k);
        }
    }
    SplitResult { chosen: order[..best.1].iter().copied().collect(), value: best.0 }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AsymStrategy {
    /// Everything moves to one node.
    Converge(NodeId),
    /// `S` goes to every node of the set; the remaining `R` is hash joined.
    ShipS(BTreeSet<NodeId>),
    /// `R` goes to every node of the set; the remaining `S` is hash joined.
    ShipR(BTreeSet<NodeId>),
    BroadcastR,
    BroadcastS,
}

#[derive(Clone, Debug)]
pub struct AsymRun {
    pub trace: TrafficTrace,
    pub state: NodeState,
    pub strategy: AsymStrategy,
    /// Analytic cost of each candidate strategy, in order.
    pub candidates: Vec<(AsymStrategy, Q)>,
    pub analytic_cost: Q,
}

fn ratio(c: u64, w: &Ext) -> Q {
    per(&qu(c), w)
}

/// Hash probabilities proportional to bandwidth; infinite links take all
/// the mass uniformly.
fn bandwidth_probs(nodes: &[NodeId], ws: &[Ext]) -> Vec<(NodeId, Q)> {
    let inf: Vec<NodeId> = nodes.iter().zip(ws).filter(|(_, w)| w.is_inf()).map(|(v, _)| *v).collect();
    if !inf.is_empty() {
        let p = Q::one() / qu(inf.len() as u64);
        return inf.into_iter().map(|v| (v, p.clone())).collect();
    }
    let total: Q = ws.iter().map(|w| w.fin().expect("finite").clone()).sum();
    nodes.iter().zip(ws).map(|(v, w)| (*v, w.fin().expect("finite") / &total)).collect()
}

/// Cost of shipping `B` to `X` while hash joining `A` held outside `X`
/// against all of `B`: exact uplink load plus the expected hashed downlink
/// share.
fn ship_cost(sv: &StarView, a_rel: &[u64], b_rel: &[u64], x: &BTreeSet<usize>) -> Q {
    let b_total: u64 = b_rel.iter().sum();
    let outside_a: u64 = (0..sv.len()).filter(|i| !x.contains(i)).map(|i| a_rel[i]).sum();
    let hashed = ratio(b_total + outside_a, &sv.down_sum());
    let mut c = hashed.clone();
    for i in 0..sv.len() {
        let a_out = if x.contains(&i) { 0 } else { a_rel[i] };
        c = c.max(ratio(b_rel[i] + a_out, &sv.up[i]));
        if x.contains(&i) {
            c = c.max(ratio(b_total - b_rel[i], &sv.down[i]) + &hashed);
        }
    }
    c
}

fn converge_cost(sv: &StarView, i: usize) -> Q {
    let n = sv.rt() + sv.st();
    let mut c = ratio(n - sv.r[i] - sv.s[i], &sv.down[i]);
    for u in 0..sv.len() {
        if u != i {
            c = c.max(ratio(sv.r[u] + sv.s[u], &sv.up[u]));
        }
    }
    c
}

fn pick(candidates: &[(AsymStrategy, Q)]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.1 < candidates[best].1 {
            best = i;
        }
    }
    best
}

fn execute(
    t: &Topology,
    dist: &Distribution,
    sv: &StarView,
    strategy: &AsymStrategy,
    seed: u64,
) -> Result<(TrafficTrace, NodeState), SimError> {
    let mut sim = Sim::new(t, dist, 1, DEFAULT_WIDTH_BITS);
    let all: Vec<NodeId> = sv.nodes.clone();
    match strategy {
        AsymStrategy::Converge(target) => {
            for &v in &all {
                let l = dist.local(v).clone();
                sim.ship(0, v, &[*target], Rel::R, &l.r)?;
                sim.ship(0, v, &[*target], Rel::S, &l.s)?;
            }
        }
        AsymStrategy::BroadcastR | AsymStrategy::BroadcastS => {
            let rel = if *strategy == AsymStrategy::BroadcastR { Rel::R } else { Rel::S };
            for &v in &all {
                let l = dist.local(v).clone();
                sim.ship(0, v, &all, rel, l.rel(rel))?;
            }
        }
        AsymStrategy::ShipS(x) | AsymStrategy::ShipR(x) => {
            let (b, a) = if matches!(strategy, AsymStrategy::ShipS(_)) { (Rel::S, Rel::R) } else { (Rel::R, Rel::S) };
            let h = make_hash(seed, 0, &bandwidth_probs(&sv.nodes, &sv.down))?;
            let targets: Vec<NodeId> = x.iter().copied().collect();
            for &v in &all {
                let l = dist.local(v).clone();
                let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
                for e in l.rel(b) {
                    let mut d = targets.clone();
                    d.push(h.eval(e.key));
                    d.sort_unstable();
                    d.dedup();
                    groups.entry((v, d)).or_default().push(*e);
                }
                sim.ship_groups(0, b, groups)?;
                if !x.contains(&v) {
                    ship_hashed(&mut sim, v, a, l.rel(a), &h)?;
                }
            }
        }
    }
    Ok(sim.finish())
}

fn ship_hashed(sim: &mut Sim<'_>, v: NodeId, rel: Rel, elems: &[Elem], h: &HashFamily) -> Result<(), SimError> {
    let mut groups: BTreeMap<(NodeId, Vec<NodeId>), Vec<Elem>> = BTreeMap::new();
    for e in elems {
        groups.entry((v, vec![h.eval(e.key)])).or_default().push(*e);
    }
    sim.ship_groups(0, rel, groups)
}

fn finish(
    t: &Topology,
    dist: &Distribution,
    sv: &StarView,
    candidates: Vec<(AsymStrategy, Q)>,
    seed: u64,
) -> Result<AsymRun, SimError> {
    let best = pick(&candidates);
    let (strategy, analytic_cost) = candidates[best].clone();
    let (trace, state) = execute(t, dist, sv, &strategy, seed)?;
    Ok(AsymRun { trace, state, strategy, candidates, analytic_cost })
}

fn view(t: &Topology, dist: &Distribution) -> Result<StarView, SimError> {
    StarView::new(t, dist).ok_or_else(|| SimError::Precondition("topology is not a star".into()))
}

/// Uplinks are free; the receiving links are the bottleneck.
pub fn sf_star_intersect(t: &Topology, dist: &Distribution, seed: u64) -> Result<AsymRun, SimError> {
    let sv = view(t, dist)?;
    if sv.up.iter().any(|w| !w.is_inf()) {
        return Err(SimError::Precondition("sending-free star needs infinite uplinks".into()));
    }
    let (r, s) = (sv.rt(), sv.st());
    let w = sv.down_sum();
    let n = sv.len();
    let mut candidates = Vec::new();
    let c1 = (0..n).min_by(|&a, &b| converge_cost(&sv, a).cmp(&converge_cost(&sv, b)).then(a.cmp(&b))).expect("leaf");
    candidates.push((AsymStrategy::Converge(sv.nodes[c1]), converge_cost(&sv, c1)));
    let v1: Vec<usize> = (0..n).filter(|&i| r - sv.r[i] > s - sv.s[i]).collect();
    let v2: Vec<usize> = (0..n).filter(|&i| r - sv.r[i] <= s - sv.s[i]).collect();
    let fg: Vec<(Q, Q)> = v1.iter().map(|&i| (ratio(s - sv.s[i], &sv.down[i]), ratio(sv.r[i], &w))).collect();
    let x1: BTreeSet<usize> = opt_split(&fg).chosen.into_iter().map(|k| v1[k]).collect();
    candidates.push((AsymStrategy::ShipS(sv.set(x1.iter().copied())), ship_cost(&sv, &sv.r, &sv.s, &x1)));
    let fg: Vec<(Q, Q)> = v2.iter().map(|&i| (ratio(r - sv.r[i], &sv.down[i]), ratio(sv.s[i], &w))).collect();
    let x2: BTreeSet<usize> = opt_split(&fg).chosen.into_iter().map(|k| v2[k]).collect();
    candidates.push((AsymStrategy::ShipR(sv.set(x2.iter().copied())), ship_cost(&sv, &sv.s, &sv.r, &x2)));
    finish(t, dist, &sv, candidates, seed)
}

/// Second largest entry, zero for fewer than two entries.
pub fn twomax(xs: &[Q]) -> Q {
    let mut v: Vec<&Q> = xs.iter().collect();
    v.sort_by(|a, b| b.cmp(a));
    v.get(1).map(|x| (*x).clone()).unwrap_or_else(Q::zero)
}

/// Downlinks are free; the sending links are the bottleneck.
pub fn rf_star_intersect(t: &Topology, dist: &Distribution) -> Result<AsymRun, SimError> {
    let sv = view(t, dist)?;
    if sv.down.iter().any(|w| !w.is_inf()) {
        return Err(SimError::Precondition("receiving-free star needs infinite downlinks".into()));
    }
    let n = sv.len();
    let loads: Vec<Q> = (0..n).map(|i| ratio(sv.r[i] + sv.s[i], &sv.up[i])).collect();
    let target = (0..n).max_by(|&a, &b| loads[a].cmp(&loads[b]).then(b.cmp(&a))).expect("leaf");
    let max_of = |xs: &[u64]| (0..n).map(|i| ratio(xs[i], &sv.up[i])).max().expect("leaf");
    let candidates = vec![
        (AsymStrategy::Converge(sv.nodes[target]), twomax(&loads)),
        (AsymStrategy::BroadcastR, max_of(&sv.r)),
        (AsymStrategy::BroadcastS, max_of(&sv.s)),
    ];
    finish(t, dist, &sv, candidates, 0)
}

/// Finite links in both directions.
pub fn asym_star_intersect(t: &Topology, dist: &Distribution, seed: u64) -> Result<AsymRun, SimError> {
    let sv = view(t, dist)?;
    let (r, s) = (sv.rt(), sv.st());
    let n = sv.len();
    let wsum = sv.down_sum();
    let c1 = (0..n).min_by(|&a, &b| converge_cost(&sv, a).cmp(&converge_cost(&sv, b)).then(a.cmp(&b))).expect("leaf");
    let mut candidates = vec![(AsymStrategy::Converge(sv.nodes[c1]), converge_cost(&sv, c1))];
    let fgh: Vec<(Q, Q, Q)> =
        (0..n).map(|i| (ratio(s - sv.s[i], &sv.down[i]), ratio(sv.r[i], &sv.up[i]), ratio(sv.r[i], &wsum))).collect();
    let x1 = opt_split3(&fgh).chosen;
    candidates.push((AsymStrategy::ShipS(sv.set(x1.iter().copied())), ship_cost(&sv, &sv.r, &sv.s, &x1)));
    let fgh: Vec<(Q, Q, Q)> =
        (0..n).map(|i| (ratio(r - sv.r[i], &sv.down[i]), ratio(sv.s[i], &sv.up[i]), ratio(sv.s[i], &wsum))).collect();
    let x2 = opt_split3(&fgh).chosen;
    candidates.push((AsymStrategy::ShipR(sv.set(x2.iter().copied())), ship_cost(&sv, &sv.s, &sv.r, &x2)));
    finish(t, dist, &sv, candidates, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{lb_asym_star, AsymVariant};
    use crate::exact::{q, qr};
    use crate::simkernel::{cost, verify_intersection};
    use crate::topology::build_star;
    use proptest::prelude::*;

    fn brute2(values: &[(Q, Q)]) -> Q {
        let n = values.len();
        (0u32..1 << n)
            .map(|m| {
                let mx = (0..n).filter(|i| m >> i & 1 == 1).map(|i| values[i].0.clone()).max().unwrap_or_else(Q::zero);
                let sum: Q = (0..n).filter(|i| m >> i & 1 == 0).map(|i| values[i].1.clone()).sum();
                mx + sum
            })
            .min()
            .unwrap()
    }

    fn brute3(values: &[(Q, Q, Q)]) -> Q {
        let n = values.len();
        (0u32..1 << n)
            .map(|m| {
                let inside = |i: &usize| m >> i & 1 == 1;
                let fx = (0..n).filter(inside).map(|i| values[i].0.clone()).max().unwrap_or_else(Q::zero);
                let gx = (0..n).filter(|i| !inside(i)).map(|i| values[i].1.clone()).max().unwrap_or_else(Q::zero);
                let hx: Q = (0..n).filter(|i| !inside(i)).map(|i| values[i].2.clone()).sum();
                fx + gx + hx
            })
            .min()
            .unwrap()
    }

    #[test]
    fn split_examples() {
        let r = opt_split(&[(q(5), q(1)), (q(1), q(10))]);
        assert_eq!(r.value, q(2));
        assert_eq!(r.chosen, BTreeSet::from([1]));
        let r = opt_split(&[(q(5), q(0)), (q(1), q(0))]);
        assert_eq!(r.value, q(0));
        assert!(r.chosen.is_empty());
        assert_eq!(opt_split(&[(q(3), q(7))]).value, q(3));
        assert_eq!(opt_split(&[]).value, q(0));
        let r = opt_split3(&[(q(5), q(1), q(1)), (q(1), q(10), q(10))]);
        assert_eq!(r.value, brute3(&[(q(5), q(1), q(1)), (q(1), q(10), q(10))]));
        assert_eq!(opt_split3(&[(q(3), q(2), q(4))]).value, q(3));
        assert_eq!(opt_split3(&[]).value, q(0));
    }

    fn rat() -> impl Strategy<Value = Q> {
        (0i64..40, 1i64..5).prop_map(|(a, b)| qr(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn split_is_optimal(values in prop::collection::vec((rat(), rat()), 0..=12)) {
            let r = opt_split(&values);
            prop_assert_eq!(&r.value, &brute2(&values));
            let mx = r.chosen.iter().map(|&i| values[i].0.clone()).max().unwrap_or_else(Q::zero);
            let rest: Q = (0..values.len()).filter(|i| !r.chosen.contains(i)).map(|i| values[i].1.clone()).sum();
            prop_assert_eq!(mx + rest, r.value);
        }

        #[test]
        fn split3_is_optimal(values in prop::collection::vec((rat(), rat(), rat()), 0..=12)) {
            prop_assert_eq!(opt_split3(&values).value, brute3(&values));
        }
    }

    fn star(links: &[(Ext, Ext)]) -> Topology {
        build_star(links).unwrap()
    }

    #[test]
    fn single_holder_converges_for_free() {
        let d = Distribution::from_keys(&[(1, vec![1, 2, 3], vec![2, 3, 4])]);
        let t = star(&[(Ext::Inf, Ext::int(1)), (Ext::Inf, Ext::int(2))]);
        let run = sf_star_intersect(&t, &d, 3).unwrap();
        assert_eq!(run.analytic_cost, q(0));
        assert_eq!(run.strategy, AsymStrategy::Converge(1));
        let t = star(&[(Ext::int(1), Ext::Inf), (Ext::int(2), Ext::Inf)]);
        let run = rf_star_intersect(&t, &d).unwrap();
        assert_eq!(run.analytic_cost, q(0));
        let t = star(&[(Ext::int(1), Ext::int(2)), (Ext::int(2), Ext::int(1))]);
        let run = asym_star_intersect(&t, &d, 3).unwrap();
        assert_eq!(run.strategy, AsymStrategy::Converge(1));
        assert_eq!(run.analytic_cost, q(0));
        assert!(cost(&run.trace, &t.bandwidths(), 3).unwrap().tuple_cost == Ext::zero());
    }

    #[test]
    fn rf_prefers_broadcasting_small_r() {
        let t = star(&[(Ext::int(1), Ext::Inf), (Ext::int(1), Ext::Inf), (Ext::int(1), Ext::Inf)]);
        let d = Distribution::from_keys(&[
            (0, vec![7], (0..20).collect()),
            (1, vec![], (20..40).collect()),
            (2, vec![3], (40..60).collect()),
        ]);
        let run = rf_star_intersect(&t, &d).unwrap();
        assert_eq!(run.strategy, AsymStrategy::BroadcastR);
        assert_eq!(run.analytic_cost, q(1));
        assert!(verify_intersection(&run.state, &d).ok);
        let realized = cost(&run.trace, &t.bandwidths(), 0).unwrap().tuple_cost;
        assert_eq!(realized, Ext::int(1));
    }

    #[test]
    fn sf_ship_everywhere_counts() {
        // v2 holds most of R
        let t = star(&[(Ext::Inf, Ext::int(1)), (Ext::Inf, Ext::int(1))]);
        let d = Distribution::from_keys(&[(0, vec![1], vec![1, 2]), (1, (10..20).collect(), vec![12])]);
        let run = sf_star_intersect(&t, &d, 9).unwrap();
        assert!(verify_intersection(&run.state, &d).ok);
        let lb = lb_asym_star(&t, &d, AsymVariant::SendingFree).unwrap();
        assert!(Ext::Fin(run.analytic_cost.clone()) <= Ext::Fin(lb.value.as_rational().unwrap() * q(4)));
    }

    #[test]
    fn preconditions() {
        let t = star(&[(Ext::int(1), Ext::int(1))]);
        let d = Distribution::from_counts(&[(0, 1, 1)]);
        assert!(sf_star_intersect(&t, &d, 0).is_err());
        assert!(rf_star_intersect(&t, &d).is_err());
        assert!(asym_star_intersect(&t, &d, 0).is_ok());
    }
}
