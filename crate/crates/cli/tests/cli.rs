//! Subcommand contracts: output formats, exit codes, error lines.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockbn::dataio::write_network;
use common::{community_network, CommunitySpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blockbn"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_fixture_network(dir: &Path) -> PathBuf {
    let net = community_network(
        23,
        &[4, 4, 4, 4],
        CommunitySpec {
            inter_edges: 1,
            inter_weight: 0.4,
            extra_parent_prob: 0.2,
            intra_weight: 12.0,
            ..Default::default()
        },
    );
    let path = dir.join("net.json");
    write_network(&net, &path).unwrap();
    path
}

fn sample_data(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let net = write_fixture_network(dir);
    let data = dir.join("data.csv");
    let out = run(
        &[
            "sample",
            "--network",
            net.to_str().unwrap(),
            "--n",
            &n.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            data.to_str().unwrap(),
        ],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

#[test]
fn sample_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_fixture_network(dir.path());
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = run(
            &[
                "sample",
                "--network",
                net.to_str().unwrap(),
                "--n",
                "200",
                "--seed",
                "9",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert!(out.status.success());
        bytes.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes[0].clone()).unwrap();
    assert!(text.starts_with("V000,V001,"));
}

#[test]
fn learn_classic_writes_model_and_shd_prints_integer() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_data(dir.path(), 800, 4);
    let out = run(
        &[
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--mode",
            "classic",
            "--score",
            "bic",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap())
            .unwrap();
    assert_eq!(doc["mode"], "classic");

    let out = run(
        &["shd", "--learned", "m.json", "--truth", "net.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let printed = String::from_utf8(out.stdout).unwrap();
    printed.trim().parse::<usize>().expect("a single integer");
}

#[test]
fn learn_block_document_mode_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_data(dir.path(), 700, 5);
    let out = run(
        &[
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--mode",
            "block",
            "--score",
            "bic",
            "--threshold",
            "auto",
            "--compression",
            "hamming",
            "--out",
            "b.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap())
            .unwrap();
    assert_eq!(doc["mode"], "block");
    assert!(doc["timings_ms"].is_null(), "timings only with --timings");
}

#[test]
fn infeasible_compression_exits_with_distinct_code() {
    let dir = tempfile::tempdir().unwrap();
    // 40 rows over 16 coupled variables: some frequent combination must
    // fall under the min-count constraint.
    let data = sample_data(dir.path(), 40, 6);
    let out = run(
        &[
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--mode",
            "block",
            "--threshold",
            "0.9",
            "--compression",
            "freq",
            "--out",
            "x.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.starts_with("error: compression_infeasible:"),
        "stderr: {err}"
    );
    assert_eq!(err.trim().lines().count(), 1, "one-line machine error");
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: clap usage error.
    let out = run(&["learn", "--nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // Missing file: one-line io error, exit 1.
    let out = run(
        &[
            "divergence",
            "--data",
            "missing.csv",
            "--out",
            "d.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: io:"));
    // Ragged CSV: structural error naming the row.
    std::fs::write(dir.path().join("ragged.csv"), "a,b\n1,2\n1,2,3\n").unwrap();
    let out = run(
        &[
            "divergence",
            "--data",
            "ragged.csv",
            "--out",
            "d.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.starts_with("error: csv_structure:"), "{err}");
    assert!(err.contains("row 1"), "{err}");
}

#[test]
fn divergence_and_cluster_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_data(dir.path(), 400, 7);
    let out = run(
        &[
            "divergence",
            "--data",
            data.to_str().unwrap(),
            "--out",
            "div.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let div = std::fs::read_to_string(dir.path().join("div.csv")).unwrap();
    assert!(div.starts_with("variable,V000,"));
    assert_eq!(div.lines().count(), 17);

    let out = run(
        &[
            "cluster",
            "--data",
            data.to_str().unwrap(),
            "--threshold",
            "0.5",
            "--out",
            "c.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("c.txt")).unwrap();
    assert!(text.starts_with("0: "), "{text}");
}

#[test]
fn trace_flag_prints_moves() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_data(dir.path(), 500, 8);
    let out = run(
        &[
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--mode",
            "classic",
            "--trace",
            "--out",
            "t.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first = stdout.lines().next().expect("at least one applied move");
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 5, "iter,kind,parent,child,gain: {first}");
    assert_eq!(fields[0], "1");
    assert!(["add", "delete", "reverse"].contains(&fields[1]));
}

#[test]
fn bench_report_shape_and_self_check() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_network(dir.path());
    let out = run(
        &[
            "bench",
            "--network",
            "net.json",
            "--n",
            "300",
            "--seed",
            "2",
            "--scores",
            "bic",
            "--compressions",
            "hamming",
            "--grid-step",
            "0.25",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines[0],
        "dataset,p,n,score,compression,threshold,recommended,elapsed_block_ms,\
elapsed_classic_ms,time_ratio,shd_block,shd_classic,shd_ratio,status"
    );
    // 1 self-check row + 3 grid rows for step 0.25.
    assert_eq!(lines.len(), 1 + 1 + 3);
    let self_check: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(self_check[4], "classic");
    assert_eq!(self_check[9], "0.000000");
    // Exactly one grid row is flagged recommended.
    let flagged = lines[2..]
        .iter()
        .filter(|l| l.split(',').nth(6) == Some("true"))
        .count();
    assert_eq!(flagged, 1);
    assert!(dir.path().join("r.summary.csv").exists());
}

#[test]
fn bench_records_infeasible_runs_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_network(dir.path());
    // 40 rows cannot satisfy min-count 5 across a rich combination spectrum
    // at coarse thresholds; the harness must keep going and mark the rows.
    let out = run(
        &[
            "bench",
            "--network",
            "net.json",
            "--n",
            "40",
            "--seed",
            "1",
            "--scores",
            "bic",
            "--compressions",
            "freq",
            "--grid-step",
            "0.2",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let infeasible: Vec<&str> = report
        .lines()
        .filter(|l| l.ends_with("compression_infeasible"))
        .collect();
    assert!(!infeasible.is_empty(), "expected status rows:\n{report}");
    // Status rows blank out the block metrics but keep the baseline.
    let fields: Vec<&str> = infeasible[0].split(',').collect();
    assert_eq!(fields[7], "NA");
    assert_eq!(fields[10], "NA");
    assert_eq!(fields[12], "NA");
}

#[test]
fn bench_parallel_matches_sequential_structure() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_network(dir.path());
    for (out, extra) in [("seq.csv", None), ("par.csv", Some("--parallel"))] {
        let mut args = vec![
            "bench",
            "--network",
            "net.json",
            "--n",
            "400",
            "--seed",
            "6",
            "--scores",
            "bic",
            "--compressions",
            "hamming",
            "--grid-step",
            "0.25",
            "--out",
            out,
        ];
        if let Some(flag) = extra {
            args.push(flag);
        }
        let res = run(&args, dir.path());
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let strip = |name: &str| -> Vec<Vec<String>> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .map(|l| {
                l.split(',')
                    .enumerate()
                    .filter(|(i, _)| ![7, 8, 9].contains(i))
                    .map(|(_, f)| f.to_string())
                    .collect()
            })
            .collect()
    };
    assert_eq!(strip("seq.csv"), strip("par.csv"));
    // The parallel run records its timing caveat in the summary sidecar.
    let summary = std::fs::read_to_string(dir.path().join("par.summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with("parallel_grid"), "{summary}");
}

#[test]
fn impute_eval_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_data(dir.path(), 600, 9);
    let out = run(
        &[
            "impute-eval",
            "--data",
            data.to_str().unwrap(),
            "--compression",
            "hamming",
            "--rows",
            "50",
            "--out",
            "imp.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("imp.json")).unwrap())
            .unwrap();
    assert_eq!(report["rows_evaluated"], 50);
    assert!(report["overall_connected"].as_f64().unwrap() >= 0.0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("connected "), "{stdout}");
}
