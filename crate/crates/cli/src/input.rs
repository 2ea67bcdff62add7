//! Topology and distribution files, and `gen:` generator specs.
//!
//! Topology files are TOML:
//!
//! ```toml
//! symmetric = true
//! nodes = [{ id = "v1", compute = true }, { id = "o", compute = false }]
//! edges = [{ from = "v1", to = "o", bw = "2.5" }]
//! ```
//!
//! `id` is a string or an integer. `bw` is a decimal (integer, float or
//! string such as `"0.1"`) or the string `"inf"`. With `symmetric = true`
//! each listed edge also adds its reverse unless the reverse is listed
//! explicitly, in which case both must carry the same bandwidth. Node ids in
//! the library are positions in `nodes`.
//!
//! Distribution files are TOML:
//!
//! ```toml
//! multiset = false
//! [[nodes]]
//! node = "v1"
//! r = [3, 5, 8]        # explicit keys
//! s = 4                # a count
//! [[nodes]]
//! node = "v2"
//! r = [[7, 3]]         # key 7 three times
//! s = []
//! ```
//!
//! Counts synthesize fresh keys, numbered after the largest explicit key of
//! the relation in node order. Unless `multiset = true` a key may appear only
//! once per relation.

use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::Path;
use tampc_core::exact::parse_decimal;
use tampc_core::simkernel::gen;
use tampc_core::simkernel::rng_for;
use tampc_core::topology::fixtures::{random_tree, tree4};
use tampc_core::topology::{build_star, normalize_tree, symmetric_star, Edge, NormalizeReport};
use tampc_core::{Distribution, Ext, NodeId, NodeKind, Topology, TopologyError};
use toml::Spanned;

use crate::CliError;

#[derive(Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(untagged)]
enum Name {
    Int(i64),
    Str(String),
}

impl Name {
    fn label(&self) -> String {
        match self {
            Name::Int(i) => i.to_string(),
            Name::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Bw {
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRow {
    id: Spanned<Name>,
    compute: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRow {
    from: Spanned<Name>,
    to: Spanned<Name>,
    bw: Spanned<Bw>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopoFile {
    #[serde(default)]
    symmetric: bool,
    nodes: Vec<NodeRow>,
    #[serde(default)]
    edges: Vec<Spanned<EdgeRow>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RelSpec {
    Count(u64),
    Keys(Vec<u64>),
    Pairs(Vec<(u64, u64)>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistRow {
    node: Spanned<Name>,
    #[serde(default)]
    r: Option<RelSpec>,
    #[serde(default)]
    s: Option<RelSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistFile {
    #[serde(default)]
    multiset: bool,
    #[serde(default)]
    nodes: Vec<Spanned<DistRow>>,
}

/// A text source for error positions.
struct Source<'a> {
    path: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn at(&self, span: Range<usize>, msg: impl Into<String>) -> CliError {
        let before = &self.text[..span.start.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        CliError::Parse { path: self.path.to_string(), line, col, msg: msg.into() }
    }

    fn whole(&self, msg: impl Into<String>) -> CliError {
        CliError::Config(format!("{}: {}", self.path, msg.into()))
    }

    fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        toml::from_str(self.text).map_err(|e| match e.span() {
            Some(span) => self.at(span, e.message().trim().to_string()),
            None => self.whole(e.message().trim().to_string()),
        })
    }
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Config(format!("{path}: {e}")))
}

fn parse_bw(b: &Bw) -> Option<Ext> {
    match b {
        Bw::Int(i) => u64::try_from(*i).ok().map(|x| Ext::Fin(tampc_core::exact::qu(x))),
        Bw::Float(f) => {
            if f.is_infinite() && *f > 0.0 {
                Some(Ext::Inf)
            } else if f.is_finite() {
                parse_decimal(&format!("{f}")).map(Ext::Fin)
            } else {
                None
            }
        }
        Bw::Str(s) if s.trim() == "inf" => Some(Ext::Inf),
        Bw::Str(s) => parse_decimal(s).map(Ext::Fin),
    }
}

pub fn parse_topology(path: &str, text: &str) -> Result<Topology, CliError> {
    let src = Source { path, text };
    let file: TopoFile = src.parse()?;
    let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for row in &file.nodes {
        let label = row.id.get_ref().label();
        if ids.insert(label.clone(), nodes.len()).is_some() {
            return Err(src.at(row.id.span(), format!("duplicate node id {label}")));
        }
        let kind = if row.compute { NodeKind::Compute } else { NodeKind::Router };
        nodes.push((kind, label));
    }
    let lookup = |n: &Spanned<Name>| -> Result<NodeId, CliError> {
        let label = n.get_ref().label();
        ids.get(&label).copied().ok_or_else(|| src.at(n.span(), format!("unknown node {label}")))
    };
    let mut edges = Vec::new();
    let mut spans: BTreeMap<(NodeId, NodeId), Range<usize>> = BTreeMap::new();
    for e in &file.edges {
        let row = e.get_ref();
        let (a, b) = (lookup(&row.from)?, lookup(&row.to)?);
        let bw = parse_bw(row.bw.get_ref())
            .ok_or_else(|| src.at(row.bw.span(), "bandwidth must be a nonnegative decimal or \"inf\""))?;
        if spans.insert((a, b), e.span()).is_some() {
            return Err(src
                .at(e.span(), format!("duplicate edge {}->{}", row.from.get_ref().label(), row.to.get_ref().label())));
        }
        edges.push(Edge { from: a, to: b, bw });
    }
    if file.symmetric {
        let listed: BTreeSet<(NodeId, NodeId)> = spans.keys().copied().collect();
        let extra: Vec<Edge> = edges
            .iter()
            .filter(|e| !listed.contains(&(e.to, e.from)))
            .map(|e| Edge { from: e.to, to: e.from, bw: e.bw.clone() })
            .collect();
        edges.extend(extra);
    }
    let names: Vec<String> = nodes.iter().map(|n| n.1.clone()).collect();
    Topology::new(nodes, edges, file.symmetric).map_err(|err| {
        let pair = match &err {
            TopologyError::FlagMismatch(a, b)
            | TopologyError::DuplicateEdge(a, b)
            | TopologyError::NonPositive(a, b) => Some((*a, *b)),
            TopologyError::SelfLoop(a) => Some((*a, *a)),
            _ => None,
        };
        let msg = relabel(&err, &names);
        match pair.and_then(|(a, b)| spans.get(&(a, b)).or_else(|| spans.get(&(b, a)))) {
            Some(span) => src.at(span.clone(), msg),
            None => src.whole(msg),
        }
    })
}

fn relabel(err: &TopologyError, names: &[String]) -> String {
    let n = |v: &NodeId| names.get(*v).cloned().unwrap_or_else(|| v.to_string());
    match err {
        TopologyError::FlagMismatch(a, b) => {
            format!("symmetric flag set but edge {}->{} has no equal-bandwidth reverse", n(a), n(b))
        }
        TopologyError::DuplicateEdge(a, b) => format!("duplicate edge {}->{}", n(a), n(b)),
        TopologyError::NonPositive(a, b) => {
            format!("edge {}->{} has nonpositive bandwidth", n(a), n(b))
        }
        TopologyError::SelfLoop(a) => format!("self loop at node {}", n(a)),
        TopologyError::Disconnected(a, b) => {
            format!("compute node {} cannot reach compute node {}", n(a), n(b))
        }
        other => other.to_string(),
    }
}

/// `name[:arg][,key=value]*`.
#[derive(Debug)]
struct GenSpec {
    name: String,
    arg: Option<String>,
    kv: BTreeMap<String, String>,
}

impl GenSpec {
    fn parse(spec: &str) -> Result<GenSpec, CliError> {
        let mut parts = spec.split(',');
        let head = parts.next().unwrap_or_default().trim();
        let (name, arg) = match head.split_once(':') {
            Some((n, a)) => (n.to_string(), Some(a.to_string())),
            None => (head.to_string(), None),
        };
        let mut kv = BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("generator spec {spec}: expected key=value, got {p}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(GenSpec { name, arg, kv })
    }

    fn allow(&self, keys: &[&str]) -> Result<(), CliError> {
        match self.kv.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!("generator {}: unknown parameter {k}", self.name))),
            None => Ok(()),
        }
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.kv.get(key) {
            Some(v) => {
                v.parse().map_err(|_| CliError::Config(format!("generator {}: bad value {v} for {key}", self.name)))
            }
            None => default.ok_or_else(|| CliError::Config(format!("generator {}: missing {key}", self.name))),
        }
    }

    fn bws(&self, key: &str) -> Result<Option<Vec<Ext>>, CliError> {
        let Some(v) = self.kv.get(key) else {
            return Ok(None);
        };
        v.split('/')
            .map(|x| {
                let x = x.trim();
                if x == "inf" {
                    Some(Ext::Inf)
                } else {
                    parse_decimal(x).map(Ext::Fin)
                }
            })
            .collect::<Option<Vec<_>>>()
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("generator {}: bad bandwidth list {v}", self.name)))
    }
}

/// Generated topologies:
/// `star,p=4[,bw=1]`, `star,bw=1/2/4`, `asym,up=inf/1,down=1/1`, `mpc,p=4`,
/// `tree,compute=8[,routers=3][,max_bw=4][,seed=S]` and `tree4[,w=1]`.
fn gen_topology(spec: &str, seed: u64) -> Result<Topology, CliError> {
    let g = GenSpec::parse(spec)?;
    let topo = match g.name.as_str() {
        "star" => {
            g.allow(&["p", "bw"])?;
            let bws = match g.bws("bw")? {
                Some(list) if list.len() > 1 || !g.kv.contains_key("p") => list,
                Some(list) => vec![list[0].clone(); g.num("p", None)?],
                None => vec![Ext::int(1); g.num("p", None)?],
            };
            symmetric_star(&bws)
        }
        "asym" => {
            g.allow(&["up", "down"])?;
            let up = g.bws("up")?.ok_or_else(|| CliError::Config("generator asym: missing up".into()))?;
            let down = g.bws("down")?.ok_or_else(|| CliError::Config("generator asym: missing down".into()))?;
            if up.len() != down.len() {
                return Err(CliError::Config("generator asym: up and down lists differ in length".into()));
            }
            build_star(&up.into_iter().zip(down).collect::<Vec<_>>())
        }
        "mpc" => {
            g.allow(&["p"])?;
            build_star(&vec![(Ext::Inf, Ext::int(1)); g.num("p", None)?])
        }
        "tree" => {
            g.allow(&["compute", "routers", "max_bw", "seed"])?;
            let compute: usize = g.num("compute", None)?;
            if compute < 2 {
                return Err(CliError::Config("generator tree: compute must be at least 2".into()));
            }
            let max_bw: i64 = g.num("max_bw", Some(4))?;
            if max_bw < 1 {
                return Err(CliError::Config("generator tree: max_bw must be at least 1".into()));
            }
            return Ok(random_tree(g.num("seed", Some(seed))?, compute, g.num("routers", Some(compute / 2))?, max_bw));
        }
        "tree4" => {
            g.allow(&["w"])?;
            let w = g.bws("w")?.map_or(Ext::int(1), |l| l[0].clone());
            return Ok(tree4(w));
        }
        other => return Err(CliError::Config(format!("unknown topology generator {other}"))),
    };
    topo.map_err(|e| CliError::Config(format!("generator {}: {e}", g.name)))
}

/// Loads `FILE` or `gen:SPEC` and normalizes symmetric trees.
pub fn load_topology(spec: &str, seed: u64) -> Result<(Topology, Option<NormalizeReport>), CliError> {
    let t = match spec.strip_prefix("gen:") {
        Some(g) => gen_topology(g, seed)?,
        None => parse_topology(spec, &read(spec)?)?,
    };
    normalize(t)
}

pub fn normalize(t: Topology) -> Result<(Topology, Option<NormalizeReport>), CliError> {
    if t.is_symmetric() && t.is_tree() {
        let (n, rep) = normalize_tree(&t).map_err(|e| CliError::Config(e.to_string()))?;
        Ok((n, Some(rep)))
    } else {
        Ok((t, None))
    }
}

fn expand(spec: &RelSpec) -> Option<Vec<u64>> {
    match spec {
        RelSpec::Count(_) => None,
        RelSpec::Keys(k) => Some(k.clone()),
        RelSpec::Pairs(p) => Some(p.iter().flat_map(|&(k, c)| std::iter::repeat_n(k, c as usize)).collect()),
    }
}

pub fn parse_distribution(path: &str, text: &str, t: &Topology) -> Result<Distribution, CliError> {
    let src = Source { path, text };
    let file: DistFile = src.parse()?;
    let mut rows: BTreeMap<NodeId, [Option<&RelSpec>; 2]> = BTreeMap::new();
    for row in &file.nodes {
        let r = row.get_ref();
        let label = r.node.get_ref().label();
        let v = t.find_label(&label).ok_or_else(|| src.at(r.node.span(), format!("unknown node {label}")))?;
        if !t.is_compute(v) {
            return Err(src.at(r.node.span(), format!("node {label} is not a compute node")));
        }
        if rows.insert(v, [r.r.as_ref(), r.s.as_ref()]).is_some() {
            return Err(src.at(r.node.span(), format!("node {label} listed twice")));
        }
    }
    let mut keys: BTreeMap<NodeId, [Vec<u64>; 2]> = BTreeMap::new();
    for side in 0..2 {
        let explicit: BTreeMap<NodeId, Vec<u64>> =
            rows.iter().filter_map(|(&v, x)| x[side].and_then(expand).map(|k| (v, k))).collect();
        let mut next = explicit.values().flatten().max().map_or(0, |m| m + 1);
        for (&v, x) in &rows {
            let list = match x[side] {
                None => Vec::new(),
                Some(RelSpec::Count(c)) => {
                    let ks: Vec<u64> = (next..next + c).collect();
                    next += c;
                    ks
                }
                Some(_) => explicit[&v].clone(),
            };
            keys.entry(v).or_default()[side] = list;
        }
        if !file.multiset {
            let mut seen = BTreeSet::new();
            for (&v, ks) in &keys {
                for &k in &ks[side] {
                    if !seen.insert(k) {
                        let rel = if side == 0 { "R" } else { "S" };
                        return Err(src.whole(format!(
                            "duplicate element: key {k} of {rel} appears again at node {} (set multiset = true to allow)",
                            t.label(v)
                        )));
                    }
                }
            }
        }
    }
    let per_node: Vec<(NodeId, Vec<u64>, Vec<u64>)> = keys.into_iter().map(|(v, [r, s])| (v, r, s)).collect();
    Ok(Distribution::from_keys(&per_node))
}

/// Generated instances over the compute nodes of `t`:
/// `uniform,r=N,s=M[,universe=U]`, `zipf:S,n=N[,keys=K]`, `sort,n=N`,
/// `adversarial,n=N`. Per-node sizes are a seeded random split.
fn gen_distribution(spec: &str, t: &Topology, seed: u64) -> Result<Distribution, CliError> {
    let g = GenSpec::parse(spec)?;
    let nodes = t.compute_nodes();
    let mut rng = rng_for(seed, 31);
    let p = nodes.len();
    let split = |rng: &mut ChaCha8Rng, total: u64| gen::random_split(rng, total, p);
    let d = match g.name.as_str() {
        "uniform" => {
            g.allow(&["r", "s", "universe"])?;
            let (r, s): (u64, u64) = (g.num("r", None)?, g.num("s", None)?);
            let universe = g.num("universe", Some(2 * r.max(s)))?;
            let (rc, sc) = (split(&mut rng, r), split(&mut rng, s));
            gen::uniform_instance(nodes, &rc, &sc, universe, seed)
        }
        "zipf" => {
            g.allow(&["n", "keys"])?;
            let z: f64 = g
                .arg
                .as_deref()
                .and_then(|a| a.parse().ok())
                .filter(|z: &f64| *z > 0.0)
                .ok_or_else(|| CliError::Config("generator zipf: expected zipf:S with S > 0".into()))?;
            let n: u64 = g.num("n", None)?;
            let keys = g.num("keys", Some(n.max(1)))?;
            let (rc, sc) = (split(&mut rng, n / 2), split(&mut rng, n - n / 2));
            gen::skewed_join_instance(nodes, &rc, &sc, keys, z, seed)
        }
        "sort" => {
            g.allow(&["n"])?;
            let sizes = split(&mut rng, g.num("n", None)?);
            gen::sort_instance(nodes, &sizes, seed)
        }
        "adversarial" => {
            g.allow(&["n"])?;
            let sizes = split(&mut rng, g.num("n", None)?);
            gen::adversarial_sort_instance(nodes, &sizes)
        }
        other => return Err(CliError::Config(format!("unknown distribution generator {other}"))),
    };
    Ok(d)
}

/// Loads `FILE` or `gen:SPEC` against `t`.
pub fn load_distribution(spec: &str, t: &Topology, seed: u64) -> Result<Distribution, CliError> {
    match spec.strip_prefix("gen:") {
        Some(g) => gen_distribution(g, t, seed),
        None => parse_distribution(spec, &read(spec)?, t),
    }
}
