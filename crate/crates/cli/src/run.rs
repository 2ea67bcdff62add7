//! The `run` subcommand: seeded trials, cost accounting and CSV rows.

use rayon::prelude::*;
use std::path::PathBuf;
use std::str::FromStr;
use tampc_core::bounds::{
    lb_asym_star, lb_cartesian_cover, lb_cartesian_cut, lb_cp_unequal, lb_intersect_tree, lb_join_star, lb_sorting,
};
use tampc_core::exact::fmt_sig;
use tampc_core::oracle::{
    sandwich_check, single_key, worst_case_intersect, DEFAULT_MAX_STATES, MAX_COMPUTE, MAX_ELEMENTS,
};
use tampc_core::simkernel::{verify_cartesian, verify_intersection, verify_join, verify_sorted};
use tampc_core::sortnet::{max_holder, sort_root, valid_ordering};
use tampc_core::{
    asym_star_intersect, cost, generalized_star_cartesian, rf_star_intersect, send_all_to_max, sf_star_intersect,
    star_cartesian, star_intersect, star_join, terasort, tree_cartesian, tree_intersect, weighted_hash_join,
    whc_unequal, wts_sort, AsymVariant, BoundReport, CoverChoice, Distribution, Ext, NodeId, NodeState, SimError, Surd,
    Task, Topology, TrafficTrace,
};

use crate::{emit, input, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Intersect,
    Cartesian,
    Sort,
    Join,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Intersect => "intersect",
            TaskKind::Cartesian => "cartesian",
            TaskKind::Sort => "sort",
            TaskKind::Join => "join",
        }
    }

    /// Algorithm names and whether each needs a star.
    pub fn algorithms(self) -> &'static [(&'static str, bool)] {
        match self {
            TaskKind::Intersect => {
                &[("star", true), ("tree", false), ("asym-sf", true), ("asym-rf", true), ("asym-general", true)]
            }
            TaskKind::Cartesian => &[("star", true), ("tree", false), ("unequal", true), ("generalized", true)],
            TaskKind::Sort => &[("wts", false), ("terasort", false), ("converge", false)],
            TaskKind::Join => &[("star", true), ("hash", true)],
        }
    }
}

impl FromStr for TaskKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<TaskKind, CliError> {
        match s {
            "intersect" => Ok(TaskKind::Intersect),
            "cartesian" => Ok(TaskKind::Cartesian),
            "sort" => Ok(TaskKind::Sort),
            "join" => Ok(TaskKind::Join),
            other => Err(CliError::Config(format!("unknown task {other}, expected intersect|cartesian|sort|join"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: TaskKind,
    pub algo: String,
    pub topo: String,
    pub dist: String,
    pub seed: u64,
    pub trials: u32,
    pub width_bits: u32,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub oracle: bool,
}

pub fn fmt_ext(x: &Ext) -> String {
    match x {
        Ext::Fin(q) => fmt_sig(q, 12),
        Ext::Inf => "inf".to_string(),
    }
}

/// `cost / lb`, exact until printed.
pub fn fmt_ratio(c: &Ext, lb: &Surd) -> String {
    match c {
        Ext::Inf => "inf".to_string(),
        Ext::Fin(q) => match Surd::rational(q).div(lb) {
            Some(r) => r.to_string(),
            None if q == &tampc_core::Q::default() => "nan".to_string(),
            None => "inf".to_string(),
        },
    }
}

fn need_star(t: &Topology, cfg: &RunConfig) -> Result<(), CliError> {
    let star_only = cfg.task.algorithms().iter().find(|a| a.0 == cfg.algo).map(|a| a.1);
    match star_only {
        None => {
            let names: Vec<&str> = cfg.task.algorithms().iter().map(|a| a.0).collect();
            Err(CliError::Config(format!(
                "unknown algorithm {} for task {}, expected {}",
                cfg.algo,
                cfg.task.name(),
                names.join("|")
            )))
        }
        Some(true) if t.star_center().is_none() => {
            Err(CliError::Config(format!("algorithm {} needs a star topology", cfg.algo)))
        }
        Some(false) if !(t.is_symmetric() && t.is_tree()) => {
            Err(CliError::Config(format!("algorithm {} needs a symmetric tree topology", cfg.algo)))
        }
        _ => Ok(()),
    }
}

fn lib(e: SimError) -> CliError {
    CliError::Config(e.to_string())
}

/// Runs the algorithm and checks its output. Returns the trace.
fn execute(cfg: &RunConfig, t: &Topology, d: &Distribution, seed: u64) -> Result<TrafficTrace, CliError> {
    let (trace, state, order): (TrafficTrace, NodeState, Option<Vec<NodeId>>) = match (cfg.task, cfg.algo.as_str()) {
        (TaskKind::Intersect, "star") => star_intersect(t, d, seed).map(|(a, b)| (a, b, None)),
        (TaskKind::Intersect, "tree") => tree_intersect(t, d, seed).map(|(a, b)| (a, b, None)),
        (TaskKind::Intersect, "asym-sf") => sf_star_intersect(t, d, seed).map(|r| (r.trace, r.state, None)),
        (TaskKind::Intersect, "asym-rf") => rf_star_intersect(t, d).map(|r| (r.trace, r.state, None)),
        (TaskKind::Intersect, _) => asym_star_intersect(t, d, seed).map(|r| (r.trace, r.state, None)),
        (TaskKind::Cartesian, "star") => star_cartesian(t, d).map(|(a, b)| (a, b, None)),
        (TaskKind::Cartesian, "tree") => tree_cartesian(t, d).map(|(a, b)| (a, b, None)),
        (TaskKind::Cartesian, "unequal") => whc_unequal(t, d).map(|(a, b)| (a, b, None)),
        (TaskKind::Cartesian, _) => generalized_star_cartesian(t, d).map(|r| (r.trace, r.state, None)),
        (TaskKind::Sort, "wts") => wts_sort(t, d, seed).map(|(a, b, plan)| (a, b, Some(plan.heavy))),
        (TaskKind::Sort, "terasort") => {
            terasort(t, d, seed).map(|(a, b)| (a, b, Some(valid_ordering(t, sort_root(t)))))
        }
        (TaskKind::Sort, _) => send_all_to_max(t, d).map(|(a, b)| (a, b, Some(vec![max_holder(t, d)]))),
        (TaskKind::Join, "star") => star_join(t, d, seed).map(|(a, b)| (a, b, None)),
        (TaskKind::Join, _) => weighted_hash_join(t, d, seed).map(|(a, b)| (a, b, None)),
    }
    .map_err(lib)?;
    check(cfg.task, &state, d, order.as_deref())?;
    Ok(trace)
}

/// Verifies the final state for the task.
pub fn check(task: TaskKind, state: &NodeState, d: &Distribution, order: Option<&[NodeId]>) -> Result<(), CliError> {
    let ok = match task {
        TaskKind::Intersect => verify_intersection(state, d).ok,
        TaskKind::Cartesian => verify_cartesian(state, d).ok,
        TaskKind::Join => verify_join(state, d).ok,
        TaskKind::Sort => verify_sorted(state, d, order.unwrap_or_default()),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Verify(format!("{} output is wrong", task.name())))
    }
}

/// The largest applicable lower bound for the task and algorithm.
fn lower_bound(cfg: &RunConfig, t: &Topology, d: &Distribution) -> Option<BoundReport> {
    let candidates = match (cfg.task, cfg.algo.as_str()) {
        (TaskKind::Intersect, "asym-sf") => vec![lb_asym_star(t, d, AsymVariant::SendingFree)],
        (TaskKind::Intersect, "asym-rf") => vec![lb_asym_star(t, d, AsymVariant::ReceivingFree)],
        (TaskKind::Intersect, "asym-general") => vec![lb_asym_star(t, d, AsymVariant::General)],
        (TaskKind::Intersect, _) => vec![lb_intersect_tree(t, d)],
        (TaskKind::Cartesian, _) => {
            let mut v = vec![lb_cp_unequal(t, d), lb_join_star(t, d)];
            if d.r_len() == d.s_len() {
                v.push(lb_cartesian_cut(t, d));
                v.push(lb_cartesian_cover(t, d, &CoverChoice::Exhaustive));
            }
            v
        }
        (TaskKind::Sort, _) => vec![lb_sorting(t, d)],
        (TaskKind::Join, _) => vec![lb_join_star(t, d)],
    };
    candidates.into_iter().filter_map(Result::ok).fold(None, |best: Option<BoundReport>, b| match best {
        Some(x) if x.value >= b.value => Some(x),
        _ => Some(b),
    })
}

/// `lb_half,opt_cost,sandwich_ok` on the worst keying of the instance, or
/// empty fields when the instance is too large or no bound applies.
fn sandwich_fields(task: TaskKind, t: &Topology, d: &Distribution, seed: u64) -> String {
    let small = d.n() <= MAX_ELEMENTS && t.compute_nodes().len() <= MAX_COMPUTE;
    let task = match task {
        TaskKind::Intersect => Task::Intersect,
        TaskKind::Cartesian => Task::Cartesian,
        TaskKind::Join => Task::Join,
        TaskKind::Sort => return ",,".to_string(),
    };
    if !small {
        return ",,".to_string();
    }
    let keyed = match task {
        Task::Intersect => worst_case_intersect(t, d, DEFAULT_MAX_STATES).map(|x| x.0),
        Task::Cartesian => Ok(d.clone()),
        Task::Join => Ok(single_key(d)),
    };
    match keyed.and_then(|k| sandwich_check(t, &k, task, seed)) {
        Ok(s) => format!("{},{},{}", fmt_sig(&s.lb_half, 12), fmt_ext(&s.opt), s.holds()),
        Err(_) => ",,".to_string(),
    }
}

struct Trial {
    row: String,
    trace: String,
}

fn trial(cfg: &RunConfig, t: &Topology, fixed: Option<&Distribution>, i: u32) -> Result<Trial, CliError> {
    let seed = cfg.seed.wrapping_add(i as u64);
    let generated;
    let d = match fixed {
        Some(d) => d,
        None => {
            generated = input::load_distribution(&cfg.dist, t, seed)?;
            &generated
        }
    };
    d.check_against(t).map_err(lib)?;
    let mut trace = execute(cfg, t, d, seed)?;
    trace.element_width_bits = cfg.width_bits;
    let c = cost(&trace, &t.bandwidths(), seed).map_err(lib)?;
    let (lb_value, lb_kind, ratio) = match lower_bound(cfg, t, d) {
        Some(b) => (b.value.to_string(), b.kind.name().to_string(), fmt_ratio(&c.tuple_cost, &b.value)),
        None => (String::new(), "none".to_string(), String::new()),
    };
    let mut row = format!(
        "{i},{},{},{},{},{},{lb_value},{lb_kind},{ratio},{seed}",
        cfg.task.name(),
        cfg.algo,
        c.rounds,
        fmt_ext(&c.tuple_cost),
        fmt_ext(&c.bit_cost),
    );
    if cfg.oracle {
        row.push(',');
        row.push_str(&sandwich_fields(cfg.task, t, d, seed));
    }
    row.push('\n');
    let mut trace_rows = String::new();
    if cfg.trace.is_some() {
        for line in trace.to_csv(t).lines().skip(1) {
            trace_rows.push_str(&format!("{i},{line}\n"));
        }
    }
    Ok(Trial { row, trace: trace_rows })
}

pub const HEADER: &str = "trial,task,algo,rounds,tuple_cost,bit_cost,lb_value,lb_kind,ratio,seed";

/// Results CSV and trace CSV for a configuration.
pub fn run_to_strings(cfg: &RunConfig) -> Result<(String, String), CliError> {
    if cfg.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let (t, _) = input::load_topology(&cfg.topo, cfg.seed)?;
    need_star(&t, cfg)?;
    let fixed =
        if cfg.dist.starts_with("gen:") { None } else { Some(input::load_distribution(&cfg.dist, &t, cfg.seed)?) };
    let mut results: Vec<(u32, Result<Trial, CliError>)> =
        (0..cfg.trials).into_par_iter().map(|i| (i, trial(cfg, &t, fixed.as_ref(), i))).collect();
    results.sort_by_key(|r| r.0);
    let mut out = String::from(HEADER);
    if cfg.oracle {
        out.push_str(",lb_half,opt_cost,sandwich_ok");
    }
    out.push('\n');
    let mut trace = String::from("trial,round,edge_from,edge_to,tuples\n");
    for (i, r) in results {
        let r = r.map_err(|e| match e {
            CliError::Verify(m) => CliError::Verify(format!("trial {i}: {m}")),
            other => other,
        })?;
        out.push_str(&r.row);
        trace.push_str(&r.trace);
    }
    Ok((out, trace))
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let (out, trace) = run_to_strings(cfg)?;
    if let Some(p) = &cfg.trace {
        emit(Some(p), &trace)?;
    }
    emit(cfg.out.as_deref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tampc_core::exact::{q, qr};
    use tampc_core::simkernel::Rel;
    use tampc_core::topology::fixtures::unit_star;
    use tampc_core::Elem;

    #[test]
    fn ratio_formatting() {
        assert_eq!(fmt_ratio(&Ext::Fin(q(3)), &Surd::rational(&q(2))), "1.5");
        assert_eq!(fmt_ratio(&Ext::Fin(q(2)), &Surd::sqrt_of(q(2))), "1.41421356237");
        assert_eq!(fmt_ratio(&Ext::Fin(q(0)), &Surd::zero()), "nan");
        assert_eq!(fmt_ratio(&Ext::Fin(qr(1, 3)), &Surd::zero()), "inf");
        assert_eq!(fmt_ratio(&Ext::Inf, &Surd::rational(&q(1))), "inf");
        assert_eq!(fmt_ext(&Ext::Fin(qr(2, 3))), "0.666666666667");
    }

    #[test]
    fn wrong_output_is_a_verification_failure() {
        let t = unit_star(2);
        let d = Distribution::from_keys(&[(0, vec![1, 2], vec![2]), (1, vec![], vec![1])]);
        let mut st = NodeState::from_dist(&t, &d);
        assert_eq!(check(TaskKind::Intersect, &st, &d, None).unwrap_err().exit_code(), 3);
        st.deliver(0, Rel::S, &[Elem::new(1, 1)]);
        assert!(check(TaskKind::Intersect, &st, &d, None).is_ok());
        assert_eq!(check(TaskKind::Sort, &st, &d, Some(&[])).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn algorithm_names_and_topology_classes() {
        let cfg = |task, algo: &str| RunConfig {
            task,
            algo: algo.to_string(),
            topo: String::new(),
            dist: String::new(),
            seed: 0,
            trials: 1,
            width_bits: 64,
            out: None,
            trace: None,
            oracle: false,
        };
        let star = unit_star(3);
        let tree = tampc_core::topology::fixtures::tree4(Ext::int(1));
        assert!(need_star(&star, &cfg(TaskKind::Join, "star")).is_ok());
        assert!(need_star(&tree, &cfg(TaskKind::Join, "star")).is_err());
        assert!(need_star(&tree, &cfg(TaskKind::Cartesian, "tree")).is_ok());
        assert!(need_star(&tree, &cfg(TaskKind::Sort, "bogus")).is_err());
        let mpc = tampc_core::build_star(&vec![(Ext::Inf, Ext::int(1)); 3]).unwrap();
        assert!(need_star(&mpc, &cfg(TaskKind::Intersect, "asym-general")).is_ok());
        assert!(need_star(&mpc, &cfg(TaskKind::Intersect, "tree")).is_err());
    }
}
