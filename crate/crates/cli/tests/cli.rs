use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

fn tampc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tampc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = tampc(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn two_trials_give_two_stable_rows() {
    let args = [
        "run",
        "--task",
        "intersect",
        "--algo",
        "star",
        "--topo",
        "gen:star,p=4",
        "--dist",
        "gen:uniform,r=300,s=200",
        "--trials",
        "2",
        "--seed",
        "9",
    ];
    let a = ok(&args);
    assert_eq!(a.lines().next().unwrap(), "trial,task,algo,rounds,tuple_cost,bit_cost,lb_value,lb_kind,ratio,seed");
    let r = rows(&a);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0][0], "0");
    assert_eq!(r[1][9], "10");
    assert_eq!(a, ok(&args));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, extra: &[&str]| -> (Vec<u8>, Vec<u8>) {
        let out = dir.path().join(format!("{tag}.csv"));
        let trace = dir.path().join(format!("{tag}.trace.csv"));
        let mut args: Vec<&str> = extra.to_vec();
        let (o, t) = (out.to_string_lossy().into_owned(), trace.to_string_lossy().into_owned());
        args.extend(["--out", &o, "--trace", &t]);
        ok(&args);
        (std::fs::read(&out).unwrap(), std::fs::read(&trace).unwrap())
    };
    let topo = data("tree4.toml");
    let configs: Vec<Vec<&str>> = vec![
        vec![
            "run",
            "--task",
            "join",
            "--algo",
            "star",
            "--topo",
            "gen:star,bw=1/2/3/4/5",
            "--dist",
            "gen:zipf:1.2,n=1000",
            "--trials",
            "4",
        ],
        vec![
            "run",
            "--task",
            "sort",
            "--algo",
            "wts",
            "--topo",
            "gen:tree,compute=6,routers=3",
            "--dist",
            "gen:sort,n=3000",
            "--trials",
            "3",
            "--seed",
            "4",
        ],
        vec![
            "run",
            "--task",
            "cartesian",
            "--algo",
            "tree",
            "--topo",
            &topo,
            "--dist",
            "gen:uniform,r=50,s=50",
            "--trials",
            "3",
        ],
        vec![
            "run",
            "--task",
            "intersect",
            "--algo",
            "asym-general",
            "--topo",
            "gen:asym,up=inf/1/2,down=1/3/1",
            "--dist",
            "gen:uniform,r=90,s=40",
            "--trials",
            "5",
        ],
    ];
    for (i, c) in configs.iter().enumerate() {
        let a = run(&format!("a{i}"), c);
        let b = run(&format!("b{i}"), c);
        assert_eq!(a, b, "{c:?}");
        assert!(!a.1.is_empty());
    }
}

#[test]
fn trace_has_one_block_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let t = trace.to_string_lossy().into_owned();
    let out = ok(&[
        "run",
        "--task",
        "sort",
        "--algo",
        "terasort",
        "--topo",
        "gen:star,p=3",
        "--dist",
        "gen:sort,n=600",
        "--trials",
        "2",
        "--trace",
        &t,
    ]);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,round,edge_from,edge_to,tuples");
    let body = rows(&text);
    for trial in ["0", "1"] {
        let rounds: std::collections::BTreeSet<&str> =
            body.iter().filter(|r| r[0] == trial).map(|r| r[1].as_str()).collect();
        assert!(!rounds.is_empty());
        assert!(rounds.iter().all(|r| ["1", "2", "3"].contains(r)));
    }
    assert!(rows(&out).iter().all(|r| r[3] == "3"));
}

#[test]
fn ratio_matches_its_row() {
    let specs: [&[&str]; 4] = [
        &[
            "--task",
            "intersect",
            "--algo",
            "tree",
            "--topo",
            "gen:tree,compute=7,routers=3,max_bw=5",
            "--dist",
            "gen:uniform,r=400,s=300",
        ],
        &[
            "--task",
            "cartesian",
            "--algo",
            "generalized",
            "--topo",
            "gen:star,bw=1/2/4",
            "--dist",
            "gen:uniform,r=30,s=90",
        ],
        &["--task", "sort", "--algo", "converge", "--topo", "gen:star,p=5", "--dist", "gen:sort,n=500"],
        &["--task", "join", "--algo", "hash", "--topo", "gen:star,bw=2/1/1", "--dist", "gen:zipf:1.1,n=300"],
    ];
    for s in specs {
        let mut args = vec!["run", "--trials", "6"];
        args.extend_from_slice(s);
        for r in rows(&ok(&args)) {
            let (c, lb, ratio): (f64, f64, f64) = (r[4].parse().unwrap(), r[6].parse().unwrap(), r[8].parse().unwrap());
            assert!(lb > 0.0, "{r:?}");
            assert!((ratio - c / lb).abs() <= 1e-9 * ratio.max(1.0), "{r:?}");
            let bits: f64 = r[5].parse().unwrap();
            assert!((bits - 64.0 * c).abs() <= 1e-9 * bits.max(1.0), "{r:?}");
        }
    }
}

#[test]
fn width_bits_scale_bit_cost() {
    let r = rows(&ok(&[
        "run",
        "--task",
        "intersect",
        "--algo",
        "star",
        "--topo",
        "gen:star,p=3",
        "--dist",
        "gen:uniform,r=30,s=30",
        "--width-bits",
        "8",
    ]));
    let (c, b): (f64, f64) = (r[0][4].parse().unwrap(), r[0][5].parse().unwrap());
    assert_eq!(b, 8.0 * c);
}

#[test]
fn config_file_and_flag_override() {
    let cfg = data("run.toml");
    let a = ok(&["run", "--config", &cfg]);
    let r = rows(&a);
    assert_eq!(r.len(), 3);
    assert!(r.iter().all(|x| x[1] == "intersect" && x[2] == "tree"));
    assert_eq!(r[0][9], "11");
    let b = ok(&["run", "--config", &cfg, "--trials", "1", "--seed", "12"]);
    assert_eq!(rows(&b)[0][4..9], r[1][4..9]);
}

#[test]
fn oracle_columns_on_small_instances() {
    let out = ok(&[
        "run",
        "--task",
        "intersect",
        "--algo",
        "star",
        "--topo",
        "gen:star,p=3",
        "--dist",
        "gen:uniform,r=4,s=3",
        "--trials",
        "4",
        "--oracle",
    ]);
    assert!(out.starts_with(
        "trial,task,algo,rounds,tuple_cost,bit_cost,lb_value,lb_kind,ratio,seed,lb_half,opt_cost,sandwich_ok\n"
    ));
    for r in rows(&out) {
        assert_eq!(r[12], "true", "{r:?}");
    }
    let big = ok(&[
        "run",
        "--task",
        "join",
        "--algo",
        "star",
        "--topo",
        "gen:star,p=3",
        "--dist",
        "gen:zipf:1.5,n=100",
        "--oracle",
    ]);
    assert!(rows(&big)[0][10..].iter().all(String::is_empty));
}

#[test]
fn incompatible_algorithm_is_a_config_error() {
    let tree = data("tree4.toml");
    for args in [
        vec!["run", "--task", "join", "--algo", "star", "--topo", &tree, "--dist", "gen:uniform,r=4,s=4"],
        vec!["run", "--task", "intersect", "--algo", "tree", "--topo", "gen:mpc,p=3", "--dist", "gen:uniform,r=4,s=4"],
        vec!["run", "--task", "sort", "--algo", "bitonic", "--topo", "gen:star,p=3", "--dist", "gen:sort,n=10"],
        vec!["run", "--task", "scan", "--algo", "star", "--topo", "gen:star,p=3", "--dist", "gen:sort,n=10"],
        vec!["run", "--task", "sort", "--algo", "wts", "--topo", "gen:star,p=3", "--dist", "gen:sort,n=10,k=2"],
    ] {
        let o = tampc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn parse_errors_carry_line_and_column() {
    let o = tampc(&["validate", "--topo", &data("bad_bw.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad_bw.toml:7:33:"), "{}", stderr(&o));
    let o = tampc(&["validate", "--topo", &data("star2.toml"), "--dist", &data("unknown_node.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown_node.toml:6:8: unknown node v9"), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.toml");
    std::fs::write(&p, "symmetric = true\nnodes = [\n  { id = \"v1\", compute = yes },\n]\n").unwrap();
    let o = tampc(&["validate", "--topo", &p.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.toml:3:"), "{}", stderr(&o));
}

#[test]
fn validate_reports_fusion_and_rejects_bad_inputs() {
    let out = ok(&["validate", "--topo", &data("chain.toml")]);
    assert!(out.contains("normalization: fused degree-2 node m"), "{out}");
    let o = tampc(&["validate", "--topo", &data("star2.toml"), "--dist", &data("duplicate.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate element"));
    let o = tampc(&["validate", "--topo", &data("mismatch.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mismatch.toml:8:3: symmetric flag set"), "{}", stderr(&o));
    let out = ok(&["validate", "--topo", &data("star2.toml"), "--dist", &data("join_mult.toml")]);
    assert!(out.contains("|R| = 5, |S| = 3"), "{out}");
}

fn bound(table: &str, kind: &str) -> (String, String) {
    let r = rows(table).into_iter().find(|r| r[0] == kind).unwrap();
    (r[1].clone(), r[2].clone())
}

#[test]
fn bounds_on_worked_instances() {
    let t = ok(&["bounds", "--topo", &data("star2.toml"), "--dist", &data("star2_keys.toml")]);
    assert_eq!(bound(&t, "intersect-tree").0, "2");
    let t = ok(&["bounds", "--topo", &data("tree4.toml"), "--dist", &data("tree4_even.toml")]);
    assert_eq!(bound(&t, "intersect-tree"), ("8".to_string(), "edge a->b".to_string()));
    assert!(bound(&t, "join-star").0.is_empty());
    let t = ok(&["bounds", "--topo", &data("tree4.toml"), "--dist", &data("tree4_cut.toml")]);
    assert_eq!(bound(&t, "cartesian-cut").0, "2");
    assert_eq!(bound(&t, "sorting").0, "2");
}

#[test]
fn oracle_subcommand_prints_optimum_and_witness() {
    let out = ok(&["oracle", "--task", "join", "--topo", &data("star2.toml"), "--dist", &data("join_mult.toml")]);
    assert!(out.starts_with("task,join\nopt_cost,2\n"), "{out}");
    assert!(out.contains("rel,id,from,dests\n"));
    let o = tampc(&["oracle", "--task", "sort", "--topo", &data("star2.toml"), "--dist", &data("join_mult.toml")]);
    assert_eq!(o.status.code(), Some(2));
    let o = tampc(&["oracle", "--task", "cartesian", "--topo", "gen:star,p=4", "--dist", "gen:uniform,r=4,s=4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn file_instances_run_every_algorithm() {
    let star = data("star2.toml");
    let tree = data("tree4.toml");
    let mpc = data("mpc3.toml");
    let even = data("tree4_even.toml");
    let cases: Vec<(&str, &str, &str, String)> = vec![
        ("intersect", "star", &star, data("star2_keys.toml")),
        ("intersect", "tree", &tree, even.clone()),
        ("intersect", "asym-sf", &mpc, "gen:uniform,r=20,s=30".into()),
        ("intersect", "asym-rf", "gen:asym,up=1/2/1,down=inf/inf/inf", "gen:uniform,r=20,s=30".into()),
        ("cartesian", "star", &star, data("star2_keys.toml")),
        ("cartesian", "tree", &tree, even.clone()),
        ("cartesian", "unequal", &star, data("join_mult.toml")),
        ("sort", "wts", &tree, even.clone()),
        ("sort", "terasort", &tree, even.clone()),
        ("join", "star", &star, data("join_mult.toml")),
        ("join", "hash", &star, data("join_mult.toml")),
    ];
    for (task, algo, topo, dist) in cases {
        let out = ok(&["run", "--task", task, "--algo", algo, "--topo", topo, "--dist", &dist, "--trials", "2"]);
        assert_eq!(rows(&out).len(), 2, "{task} {algo}");
    }
}
