//! Experiment runner for the `tampc` binary.

pub mod input;
pub mod run;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use tampc_core::bounds::{
    lb_asym_star, lb_cartesian_cover, lb_cartesian_cut, lb_cp_unequal, lb_intersect_tree, lb_join_star, lb_sorting,
};
use tampc_core::oracle::{opt_one_round, DEFAULT_MAX_STATES};
use tampc_core::{AsymVariant, CoverChoice, NodeId, Task, Topology, Witness};
use thiserror::Error;

pub use run::{run, RunConfig, TaskKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{col}: {msg}")]
    Parse { path: String, line: usize, col: usize, msg: String },
    #[error("{0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 3,
            CliError::Io(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tampc", version, about = "Topology-aware MPC simulator and experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an algorithm over seeded trials and write one CSV row per trial.
    Run(RunArgs),
    /// Evaluate every lower bound on an instance.
    Bounds(InstanceArgs),
    /// Check topology and distribution files.
    Validate(ValidateArgs),
    /// Exact one-round optimum on a tiny instance.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// TOML file with any of the run options; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// intersect, cartesian, sort or join.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub algo: Option<String>,
    /// Topology file or `gen:SPEC`.
    #[arg(long)]
    pub topo: Option<String>,
    /// Distribution file or `gen:SPEC`.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub width_bits: Option<u32>,
    /// Results CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-round edge traffic CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Add oracle sandwich columns on small instances.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    task: Option<String>,
    algo: Option<String>,
    topo: Option<String>,
    dist: Option<String>,
    seed: Option<u64>,
    trials: Option<u32>,
    width_bits: Option<u32>,
    out: Option<String>,
    trace: Option<String>,
    oracle: Option<bool>,
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    #[arg(long)]
    pub topo: String,
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub topo: String,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// intersect, cartesian or join.
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub topo: String,
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: u64,
}

/// Paths inside a config file are relative to the file; `gen:` specs are kept.
fn resolve(base: &Path, p: String) -> String {
    if p.starts_with("gen:") || Path::new(&p).is_absolute() {
        p
    } else {
        base.join(p).to_string_lossy().into_owned()
    }
}

impl RunArgs {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut file = ConfigFile::default();
        let mut base = PathBuf::new();
        if let Some(path) = &self.config {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            file = toml::from_str(&text).map_err(|e| {
                let (line, col) = e.span().map_or((1, 1), |s| line_col(&text, s.start));
                CliError::Parse { path: path.display().to_string(), line, col, msg: e.message().trim().to_string() }
            })?;
            base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        }
        let need = |flag: Option<String>, cfg: Option<String>, name: &str| {
            flag.or(cfg).ok_or_else(|| CliError::Config(format!("missing --{name}")))
        };
        let task: TaskKind = need(self.task, file.task, "task")?.parse()?;
        let algo = need(self.algo, file.algo, "algo")?;
        let topo = self.topo.or_else(|| file.topo.map(|p| resolve(&base, p)));
        let dist = self.dist.or_else(|| file.dist.map(|p| resolve(&base, p)));
        Ok(RunConfig {
            task,
            algo,
            topo: topo.ok_or_else(|| CliError::Config("missing --topo".into()))?,
            dist: dist.ok_or_else(|| CliError::Config("missing --dist".into()))?,
            seed: self.seed.or(file.seed).unwrap_or(0),
            trials: self.trials.or(file.trials).unwrap_or(1),
            width_bits: self.width_bits.or(file.width_bits).unwrap_or(tampc_core::simkernel::DEFAULT_WIDTH_BITS),
            out: self.out.or_else(|| file.out.map(|p| PathBuf::from(resolve(&base, p)))),
            trace: self.trace.or_else(|| file.trace.map(|p| PathBuf::from(resolve(&base, p)))),
            oracle: self.oracle || file.oracle.unwrap_or(false),
        })
    }
}

fn line_col(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at.min(text.len())];
    (before.matches('\n').count() + 1, before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A witness with node labels in place of ids.
pub fn witness_labels(t: &Topology, w: &Witness) -> String {
    let set = |s: &BTreeSet<NodeId>| s.iter().map(|&v| t.label(v)).collect::<Vec<_>>().join(" ");
    match w {
        Witness::Edge(e) => {
            let e = &t.edges()[*e];
            format!("edge {}->{}", t.label(e.from), t.label(e.to))
        }
        Witness::Cover(c) => format!("cover {{{}}}", set(c)),
        Witness::Node(v) => format!("node {}", t.label(*v)),
        Witness::Split { alpha, beta } => {
            format!("alpha {{{}}} beta {{{}}}", set(alpha), set(beta))
        }
        Witness::Term(x) => x.to_string(),
    }
}

/// `kind,value,witness,status` for every bound, applicable or not.
pub fn bounds_table(args: &InstanceArgs) -> Result<String, CliError> {
    let (t, _) = input::load_topology(&args.topo, args.seed)?;
    let d = input::load_distribution(&args.dist, &t, args.seed)?;
    let rows = [
        ("intersect-tree", lb_intersect_tree(&t, &d)),
        ("cartesian-cut", lb_cartesian_cut(&t, &d)),
        ("cartesian-cover", lb_cartesian_cover(&t, &d, &CoverChoice::Exhaustive)),
        ("sorting", lb_sorting(&t, &d)),
        ("join-star", lb_join_star(&t, &d)),
        ("cartesian-unequal", lb_cp_unequal(&t, &d)),
        ("asym-sending-free", lb_asym_star(&t, &d, AsymVariant::SendingFree)),
        ("asym-receiving-free", lb_asym_star(&t, &d, AsymVariant::ReceivingFree)),
        ("asym-general", lb_asym_star(&t, &d, AsymVariant::General)),
    ];
    let mut out = String::from("kind,value,witness,status\n");
    for (name, res) in rows {
        match res {
            Ok(b) => {
                let status = if b.notes.is_empty() { "ok".to_string() } else { b.notes.join("; ") };
                let w = witness_labels(&t, &b.witness);
                out.push_str(&format!("{},{},{},{}\n", name, b.value, csv_field(&w), csv_field(&status)));
            }
            Err(e) => out.push_str(&format!("{name},,,{}\n", csv_field(&format!("n/a: {e}")))),
        }
    }
    Ok(out)
}

/// Diagnostics for `validate`. Errors abort with exit code 2.
pub fn validate_report(args: &ValidateArgs) -> Result<String, CliError> {
    let (t, rep) = input::load_topology(&args.topo, args.seed)?;
    let mut out = String::new();
    out.push_str(&format!(
        "topology: {} nodes, {} compute, {} directed edges, {}, {}\n",
        t.node_count(),
        t.compute_nodes().len(),
        t.edges().len(),
        if t.is_symmetric() { "symmetric" } else { "asymmetric" },
        if t.is_tree() { "tree" } else { "not a tree" },
    ));
    if let Some(o) = t.star_center() {
        out.push_str(&format!("star centered at {}\n", t.label(o)));
    }
    match &rep {
        Some(r) if r.is_noop() => out.push_str("normalization: already normalized\n"),
        Some(r) => {
            for l in &r.fused {
                out.push_str(&format!("normalization: fused degree-2 node {l}\n"));
            }
            for l in &r.leafed {
                out.push_str(&format!("normalization: moved internal compute node {l} to a leaf\n"));
            }
            for l in &r.pruned {
                out.push_str(&format!("normalization: pruned leaf router {l}\n"));
            }
        }
        None => out.push_str("normalization: skipped, topology is not a symmetric tree\n"),
    }
    if !t.is_symmetric() {
        let paired = t.edges().iter().all(|e| t.bw(e.to, e.from) == Some(&e.bw));
        if paired {
            out.push_str("warning: every edge has an equal reverse but symmetric is false\n");
        }
    }
    if let Some(spec) = &args.dist {
        let d = input::load_distribution(spec, &t, args.seed)?;
        out.push_str(&format!("distribution: |R| = {}, |S| = {}, N = {}\n", d.r_len(), d.s_len(), d.n()));
        if d.n() == 0 {
            out.push_str("warning: distribution is empty\n");
        } else {
            if d.r_len() == 0 || d.s_len() == 0 {
                out.push_str("warning: one relation is empty\n");
            }
            let idle: Vec<&str> = t.compute_nodes().iter().filter(|&&v| d.n_v(v) == 0).map(|&v| t.label(v)).collect();
            if !idle.is_empty() {
                out.push_str(&format!("warning: compute nodes without data: {}\n", idle.join(" ")));
            }
            if let Some((&v, _)) = d.locals().iter().find(|(_, l)| l.len() == d.n()) {
                out.push_str(&format!("warning: all data sits at {}\n", t.label(v)));
            }
        }
    }
    Ok(out)
}

pub fn oracle_report(args: &OracleArgs) -> Result<String, CliError> {
    let task = match args.task.as_str() {
        "intersect" => Task::Intersect,
        "cartesian" => Task::Cartesian,
        "join" => Task::Join,
        other => return Err(CliError::Config(format!("oracle supports intersect, cartesian and join, not {other}"))),
    };
    let (t, _) = input::load_topology(&args.topo, args.seed)?;
    let d = input::load_distribution(&args.dist, &t, args.seed)?;
    let res = opt_one_round(&t, &d, task, args.max_states).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = format!("task,{task}\nopt_cost,{}\nstates,{}\n", run::fmt_ext(&res.opt_cost), res.states);
    out.push_str("rel,id,from,dests\n");
    for r in &res.witness {
        let dests: Vec<&str> = r.dests.iter().map(|&v| t.label(v)).collect();
        out.push_str(&format!("{:?},{},{},{}\n", r.rel, r.id, t.label(r.from), dests.join(" ")));
    }
    Ok(out)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run(&args.into_config()?),
        Command::Bounds(args) => emit(None, &bounds_table(&args)?),
        Command::Validate(args) => emit(None, &validate_report(&args)?),
        Command::Oracle(args) => emit(None, &oracle_report(&args)?),
    }
}
