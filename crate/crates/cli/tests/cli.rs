use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mrp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn setup(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Lines after the version/config header.
fn body(text: &str) -> Vec<&str> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mrp "));
    lines.collect()
}

/// `node -> value` for propagated rows of a results CSV.
fn results(text: &str) -> Vec<(String, Option<f64>)> {
    body(text)[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let v = (f[2] == "true").then(|| f[1].parse().unwrap());
            (f[0].to_owned(), v)
        })
        .collect()
}

#[test]
fn two_node_example_row() {
    let dir = setup(&[
        ("e.tsv", "j\tp\ti\n"),
        ("v.csv", "j,3\n"),
        (
            "p.toml",
            "[[relation]]\nname = \"p\"\neta = 2.0\ntau = 2.0\nomega = 1.0\n",
        ),
    ]);
    let out = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--params",
            "p.toml",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "o/results.csv");
    assert_eq!(
        body(&csv),
        vec!["node,value,propagated", "j,3.0,true", "i,8.0,true"]
    );
    let summary = read(dir.path(), "o/summary.toml");
    assert!(summary.contains("converged = true"));
    assert!(summary.contains("unreached_count = 0"));
}

const EDGES: &str = "a\tr\tb\nb\ts\tc\nc\tr\td\nd\ts\ta\nb\tr\td\ne\ts\tc\n";
const LABELS: &str = "node,value\na,1.0\nc,4.5\ne,-2\n";

#[test]
fn lp_flag_matches_all_default_params() {
    let defaults = "[[relation]]\nname = \"r\"\neta = 1.0\ntau = 0.0\nomega = 1.0\n\n\
                    [[relation]]\nname = \"s\"\neta = 1.0\ntau = 0.0\nomega = 1.0\n";
    let dir = setup(&[("e.tsv", EDGES), ("v.csv", LABELS), ("d.toml", defaults)]);
    let lp = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--lp",
            "--out",
            "a",
        ],
    );
    assert_eq!(code(&lp), 0);
    let via_params = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--params",
            "d.toml",
            "--out",
            "b",
        ],
    );
    assert_eq!(code(&via_params), 0);
    assert_eq!(
        body(&read(dir.path(), "a/results.csv")),
        body(&read(dir.path(), "b/results.csv"))
    );
}

#[test]
fn missing_values_file_is_an_input_error() {
    let dir = setup(&[("e.tsv", EDGES)]);
    let out = mrp(
        dir.path(),
        &[
            "estimate", "--edges", "e.tsv", "--values", "nope.csv", "--out", "o",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    let out = mrp(dir.path(), &["estimate", "--edges", "e.tsv", "--out", "o"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let dir = setup(&[]);
    assert_eq!(code(&mrp(dir.path(), &["propagate", "--no-such-flag"])), 1);
    assert_eq!(code(&mrp(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&mrp(dir.path(), &["--help"])), 0);
    assert_eq!(code(&mrp(dir.path(), &["--version"])), 0);
    let conflicting = mrp(dir.path(), &["propagate", "--lp", "--estimate"]);
    assert_eq!(code(&conflicting), 1);
}

#[test]
fn malformed_input_reports_line() {
    let dir = setup(&[("e.tsv", "a\tr\tb\nb\tr\n"), ("v.csv", "a,1\n")]);
    let out = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--lp",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("e.tsv") && err.contains("line 2"), "{err}");
}

#[test]
fn estimated_params_round_trip_into_propagate() {
    let dir = setup(&[("e.tsv", EDGES), ("v.csv", "a,1\nb,3.5\nc,4.5\nd,6\n")]);
    let est = mrp(
        dir.path(),
        &[
            "estimate", "--edges", "e.tsv", "--values", "v.csv", "--out", "est",
        ],
    );
    assert_eq!(code(&est), 0);
    let file = read(dir.path(), "est/params.toml");
    assert!(file.contains("pair_count"));
    let a = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--params",
            "est/params.toml",
            "--out",
            "a",
        ],
    );
    let b = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--estimate",
            "--out",
            "b",
        ],
    );
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_eq!(
        body(&read(dir.path(), "a/results.csv")),
        body(&read(dir.path(), "b/results.csv"))
    );
    assert_eq!(
        body(&read(dir.path(), "est/params.toml")),
        body(&read(dir.path(), "b/params.toml"))
    );
}

#[test]
fn too_few_pairs_gives_defaults_and_warning() {
    let dir = setup(&[("e.tsv", "a\tr\tb\nb\tr\tc\n"), ("v.csv", "a,1\nb,2\n")]);
    let out = mrp(
        dir.path(),
        &[
            "estimate", "--edges", "e.tsv", "--values", "v.csv", "--out", "o",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let report = read(dir.path(), "o/params.toml");
    assert!(
        report.contains("eta = 1.0")
            && report.contains("tau = 0.0")
            && report.contains("omega = 1.0")
    );
    assert!(report.contains("pair_count = 1"));
    assert!(report.contains("warning = "));
}

#[test]
fn unreachable_node_listed_and_exit_0() {
    let dir = setup(&[("e.tsv", "a\tr\tb\nc\tr\td\n"), ("v.csv", "a,2\n")]);
    let out = mrp(
        dir.path(),
        &[
            "propagate",
            "--edges",
            "e.tsv",
            "--values",
            "v.csv",
            "--lp",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0);
    let summary = read(dir.path(), "o/summary.toml");
    assert!(summary.contains("unreached_count = 2"), "{summary}");
    assert!(summary.contains(r#"unreached = ["c", "d"]"#), "{summary}");
    let rows = results(&read(dir.path(), "o/results.csv"));
    assert_eq!(rows[1], ("b".to_owned(), Some(2.0)));
    assert_eq!(rows[2], ("c".to_owned(), None));
}

#[test]
fn iteration_cap_exits_2_and_flags_override_config() {
    let chain: String = (0..30).map(|i| format!("n{i}\tr\tn{}\n", i + 1)).collect();
    let dir = setup(&[
        ("e.tsv", &chain),
        ("v.csv", "n0,0\nn30,30\n"),
        ("run.toml", "[paths]\nedges = \"e.tsv\"\nvalues = \"v.csv\"\nout = \"o\"\n[engine]\nmax_iterations = 3\n"),
    ]);
    let capped = mrp(dir.path(), &["propagate", "--config", "run.toml", "--lp"]);
    assert_eq!(code(&capped), 2);
    assert!(read(dir.path(), "o/summary.toml").contains("converged = false"));
    let freed = mrp(
        dir.path(),
        &[
            "propagate",
            "--config",
            "run.toml",
            "--lp",
            "--max-iterations",
            "5000",
        ],
    );
    assert_eq!(code(&freed), 0);
    let echo = read(dir.path(), "o/effective_config.toml");
    assert!(echo.contains("max_iterations = 5000"), "{echo}");
}

#[test]
fn outputs_carry_header_and_track_config() {
    let dir = setup(&[("e.tsv", EDGES), ("v.csv", LABELS)]);
    let run = |xi: &str, out: &str| {
        let o = mrp(
            dir.path(),
            &[
                "propagate",
                "--edges",
                "e.tsv",
                "--values",
                "v.csv",
                "--lp",
                "--xi",
                xi,
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0);
        read(dir.path(), &format!("{out}/results.csv"))
            .lines()
            .next()
            .unwrap()
            .to_owned()
    };
    let h1 = run("0.5", "o");
    let h2 = run("0.5", "o");
    let h3 = run("0.25", "o");
    assert!(h1.starts_with(&format!("# mrp {} config=", env!("CARGO_PKG_VERSION"))));
    assert_eq!(h1, h2);
    assert_ne!(h1, h3);
    for f in ["summary.toml", "effective_config.toml"] {
        assert_eq!(
            read(dir.path(), &format!("o/{f}")).lines().next().unwrap(),
            h3
        );
    }
}

const SYNTH: &str = "node_count = 400\nseed = 17\nroot_value_mean = 10.0\nroot_value_std = 1.0\n\
                     [[relations]]\nname = \"up\"\neta = 1.0\ntau = 5.0\nsigma = 0.1\n\
                     [[relations]]\nname = \"down\"\neta = 1.0\ntau = -5.0\nsigma = 0.1\n";

#[test]
fn synth_then_estimate_recovers_shift() {
    let dir = setup(&[("s.toml", SYNTH)]);
    assert_eq!(
        code(&mrp(
            dir.path(),
            &[
                "synth",
                "--spec",
                "s.toml",
                "--label-ratio",
                "0.5",
                "--out",
                "d"
            ]
        )),
        0
    );
    for f in [
        "edges.tsv",
        "relations.csv",
        "values.csv",
        "labels.csv",
        "truth_params.toml",
    ] {
        assert!(dir.path().join("d").join(f).exists(), "{f}");
    }
    let est = mrp(
        dir.path(),
        &[
            "estimate",
            "--edges",
            "d/edges.tsv",
            "--relations",
            "d/relations.csv",
            "--values",
            "d/values.csv",
            "--out",
            "e",
        ],
    );
    assert_eq!(code(&est), 0);
    let text = read(dir.path(), "e/params.toml");
    let report: toml::Table = toml::from_str(&text).unwrap();
    let rels = report["relation"].as_array().unwrap();
    for (rel, tau) in rels.iter().zip([5.0, -5.0]) {
        let got = rel["tau"].as_float().unwrap();
        assert!((got - tau).abs() < 0.05, "{text}");
    }
}

#[test]
fn mc_is_deterministic_and_mrp_beats_lp_on_shifted_data() {
    let dir = setup(&[("s.toml", SYNTH)]);
    assert_eq!(
        code(&mrp(
            dir.path(),
            &["synth", "--spec", "s.toml", "--out", "d"]
        )),
        0
    );
    let args = [
        "mc",
        "--edges",
        "d/edges.tsv",
        "--truth",
        "d/values.csv",
        "--trials",
        "8",
        "--ratio",
        "0.5",
        "--methods",
        "lp,mrp",
        "--seed",
        "3",
        "--out",
        "m",
    ];
    assert_eq!(code(&mrp(dir.path(), &args)), 0);
    let first = (
        read(dir.path(), "m/mc.csv"),
        read(dir.path(), "m/mc_summary.txt"),
    );
    assert_eq!(code(&mrp(dir.path(), &args)), 0);
    let second = (
        read(dir.path(), "m/mc.csv"),
        read(dir.path(), "m/mc_summary.txt"),
    );
    assert_eq!(first, second);

    let rows = body(&first.0);
    assert_eq!(rows[0], "method,relation,rmse,mape,nrmse,trials_used");
    let rmse = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(rows[1].starts_with("LP,union,"));
    assert!(rows[2].starts_with("MrP,,"));
    assert!(rmse(rows[2]) < rmse(rows[1]), "{}", first.0);
    assert!(rows[1].ends_with(",8") && rows[2].ends_with(",8"));
}

#[test]
fn stats_rows() {
    let dir = setup(&[
        ("e.tsv", "a\tsib\tb\nb\tsib\tc\nx\tage\ty\np\tnone\tq\n"),
        (
            "r.csv",
            "relation,symmetric\nsib,true\nage,false\nnone,false\n",
        ),
        ("v.csv", "a,1\nb,4\nc,9\nx,5\ny,2\n"),
    ]);
    let out = mrp(
        dir.path(),
        &[
            "stats",
            "--edges",
            "e.tsv",
            "--relations",
            "r.csv",
            "--values",
            "v.csv",
            "--bins",
            "2",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(dir.path(), "o/stats.csv");
    let rows = body(&table);
    assert_eq!(rows[0], "relation,symmetric,edges,pairs,mean,variance");
    assert!(rows[1].starts_with("sib,true,2,4,0.0,"), "{table}");
    // y - x = 2 - 5
    assert_eq!(rows[2], "age,false,1,1,-3.0,0.0");
    assert_eq!(rows[3], "none,false,1,0,,");
    let hist = read(dir.path(), "o/histogram.csv");
    let h = body(&hist);
    assert_eq!(h[0], "relation,bin_lo,bin_hi,count");
    let sib_total: usize = h
        .iter()
        .filter(|l| l.starts_with("sib,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(sib_total, 4);
    assert!(h.contains(&"none,,,0"));
}

#[test]
fn evaluate_excludes_labeled_nodes() {
    let dir = setup(&[
        ("e.tsv", "a\tr\tb\nb\tr\tc\nc\tr\td\n"),
        ("t.csv", "a,10\nb,20\nc,40\nd,0\n"),
        ("v.csv", "a,10\n"),
        ("p.csv", "# predictions\nnode,value,propagated\na,10.0,true\nb,22.0,true\nc,37.0,true\nd,,false\n"),
    ]);
    let out = mrp(
        dir.path(),
        &[
            "evaluate",
            "--edges",
            "e.tsv",
            "--truth",
            "t.csv",
            "--values",
            "v.csv",
            "--predictions",
            "p.csv",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m: toml::Table = toml::from_str(&read(dir.path(), "o/metrics.toml")).unwrap();
    // eval set {b, c}: errors 2 and -3
    let rmse = m["rmse"].as_float().unwrap();
    assert!((rmse - (13.0f64 / 2.0).sqrt()).abs() < 1e-12);
    let mape = m["mape"].as_float().unwrap();
    assert!((mape - (0.1 + 0.075) / 2.0).abs() < 1e-12);
    assert!((m["nrmse"].as_float().unwrap() - rmse / 20.0).abs() < 1e-12);
    assert_eq!(m["eval_count"].as_integer(), Some(2));
    assert_eq!(m["unpredicted"].as_integer(), Some(1));
}

#[test]
fn solve_exact_agrees_with_propagation() {
    let dir = setup(&[
        ("e.tsv", EDGES),
        ("v.csv", LABELS),
        (
            "p.toml",
            "[[relation]]\nname = \"r\"\neta = 1.5\ntau = 0.5\nomega = 2.0\n\n\
                    [[relation]]\nname = \"s\"\neta = 0.8\ntau = -1.0\nomega = 0.5\n",
        ),
    ]);
    let common = [
        "--edges", "e.tsv", "--values", "v.csv", "--params", "p.toml",
    ];
    let mut a: Vec<&str> = vec!["solve-exact"];
    a.extend(common);
    a.extend(["--out", "x"]);
    let mut b: Vec<&str> = vec!["propagate"];
    b.extend(common);
    b.extend([
        "--epsilon-fraction",
        "1e-12",
        "--max-iterations",
        "100000",
        "--out",
        "y",
    ]);
    assert_eq!(code(&mrp(dir.path(), &a)), 0);
    assert_eq!(code(&mrp(dir.path(), &b)), 0);
    let exact = results(&read(dir.path(), "x/results.csv"));
    let iter = results(&read(dir.path(), "y/results.csv"));
    for ((n1, v1), (n2, v2)) in exact.iter().zip(&iter) {
        assert_eq!(n1, n2);
        let (v1, v2) = (v1.unwrap(), v2.unwrap());
        assert!((v1 - v2).abs() < 1e-8, "{n1}: {v1} vs {v2}");
    }
}

#[test]
fn config_paths_resolve_against_config_dir() {
    let dir = setup(&[]);
    let sub: PathBuf = dir.path().join("runs");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("e.tsv"), "j\tp\ti\n").unwrap();
    fs::write(sub.join("v.csv"), "j,3\n").unwrap();
    fs::write(
        sub.join("run.toml"),
        "[paths]\nedges = \"e.tsv\"\nvalues = \"v.csv\"\nout = \"o\"\n",
    )
    .unwrap();
    let out = mrp(
        dir.path(),
        &["propagate", "--config", "runs/run.toml", "--lp"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&sub, "o/results.csv").contains("i,3.0,true"));
}
