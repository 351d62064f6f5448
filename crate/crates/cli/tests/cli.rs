use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dfls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_lines(path: &Path, values: &[Value]) {
    let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    std::fs::write(path, text.join("\n") + "\n").unwrap();
}

#[test]
fn run_writes_header_records_and_terminal() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("qc.jsonl");
    let out = dfls(&[
        "run",
        "--problem",
        "quad-corner",
        "-n",
        "4",
        "--seed",
        "1",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("stop=delta-tol"), "{}", stdout(&out));

    let v = lines(&trace);
    assert_eq!(v[0]["type"], "header");
    assert_eq!(v[0]["problem"], "quad-corner");
    assert_eq!(v[0]["n"], 4);
    assert_eq!(v[0]["seed"], 1);
    assert_eq!(v[0]["format_version"], 1);
    let last = v.last().unwrap();
    assert_eq!(last["type"], "terminal");
    assert_eq!(last["reason"], "delta-tol");
    let records = &v[1..v.len() - 1];
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r["type"] == "record"));
    assert_eq!(last["iterations"], records.len());
}

#[test]
fn invalid_theta_exits_2() {
    let out = dfls(&[
        "run",
        "--problem",
        "quad-interior",
        "-n",
        "2",
        "--theta",
        "1.5",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("theta must lie in (0,1)"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn infeasible_start_exits_2() {
    let out = dfls(&[
        "run",
        "--problem",
        "quad-interior",
        "-n",
        "2",
        "--x0",
        "0,-3",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("infeasible"), "{}", stderr(&out));
}

#[test]
fn unknown_problem_and_odd_rosenbrock_exit_2() {
    assert_eq!(code(&dfls(&["run", "--problem", "nope", "-n", "2"])), 2);
    assert_eq!(
        code(&dfls(&["run", "--problem", "rosenbrock-box", "-n", "3"])),
        2
    );
}

#[test]
fn verify_fresh_trace_passes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("qi.jsonl");
    let t = trace.to_str().unwrap();
    let out = dfls(&[
        "run",
        "--problem",
        "quad-interior",
        "-n",
        "3",
        "--start",
        "random",
        "--trace",
        t,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let before = std::fs::read(&trace).unwrap();
    let out = dfls(&["verify", t, "--eps", "0.1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("result: PASS"));
    assert!(!text.contains("FAIL"));
    assert_eq!(
        std::fs::read(&trace).unwrap(),
        before,
        "verify must not touch the trace"
    );
}

#[test]
fn verify_with_tiny_eps_reports_vacuous_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("short.jsonl");
    let t = trace.to_str().unwrap();
    let out = dfls(&[
        "run",
        "--problem",
        "quad-interior",
        "-n",
        "3",
        "--start",
        "corner",
        "--max-iterations",
        "5",
        "--trace",
        t,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("stop=iteration-limit"));
    let out = dfls(&["verify", t, "--eps", "1e-9"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("j_eps not reached"), "{text}");
    assert!(text.contains("VACUOUS"), "{text}");
}

#[test]
fn edited_delta_fails_stepsize_check() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("edit.jsonl");
    let t = trace.to_str().unwrap();
    assert_eq!(
        code(&dfls(&[
            "run",
            "--problem",
            "quad-corner",
            "-n",
            "3",
            "--seed",
            "2",
            "--trace",
            t
        ])),
        0
    );
    let mut v = lines(&trace);
    let d = v[4]["delta"].as_f64().unwrap();
    v[4]["delta"] = Value::from(d * 3.0);
    write_lines(&trace, &v);
    let out = dfls(&["verify", t]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    let text = stdout(&out);
    let line = text
        .lines()
        .find(|l| l.starts_with("stepsize-dynamics"))
        .unwrap();
    assert!(line.contains("FAIL"), "{line}");
}

#[test]
fn corrupt_or_missing_trace_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.jsonl");
    std::fs::write(&trace, "{\"type\":\"header\"\nnot json\n").unwrap();
    let out = dfls(&["verify", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("corrupt trace"), "{}", stderr(&out));

    let missing = dir.path().join("missing.jsonl");
    assert_eq!(code(&dfls(&["verify", missing.to_str().unwrap()])), 3);
}

#[test]
fn verify_json_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("le.jsonl");
    let t = trace.to_str().unwrap();
    assert_eq!(
        code(&dfls(&[
            "run",
            "--problem",
            "linear-edge",
            "-n",
            "3",
            "--trace",
            t
        ])),
        0
    );
    let out = dfls(&["verify", t, "--json"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(
        doc["identification"]["strict_active"],
        serde_json::json!([0, 1, 2])
    );
    assert!(doc["identification"]["first_identified_iteration"]["at"].is_u64());
    let names: Vec<&str> = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"lyapunov-decrease"));
}

#[test]
fn list_outputs() {
    let out = dfls(&["list"]);
    assert_eq!(code(&out), 0);
    for name in ["quad-interior", "linear-edge", "degenerate-bound"] {
        assert!(stdout(&out).contains(name));
    }
    let out = dfls(&["list", "--json"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 6);
    assert_eq!(code(&dfls(&["list", "--bogus"])), 2);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for rep in 0..2 {
        let trace = dir.path().join(format!("r{rep}.jsonl"));
        let out = dfls(&[
            "run",
            "--problem",
            "rosenbrock-box",
            "-n",
            "4",
            "--seed",
            "9",
            "--start",
            "random",
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        files.push(std::fs::read(&trace).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn batch_writes_summary_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    let summary = dir.path().join("summary.csv");
    let out = dfls(&[
        "run",
        "--problem",
        "quad-corner,degenerate-bound",
        "-n",
        "2,3",
        "--seeds",
        "0..4",
        "--start",
        "random",
        "--eps",
        "0.1,0.01",
        "--trace-dir",
        traces.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut rdr = csv::Reader::from_path(&summary).unwrap();
    let head: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        head,
        [
            "problem",
            "n",
            "seed",
            "iters",
            "evals",
            "final_f",
            "final_delta",
            "j_eps[0.1]",
            "j_eps[0.01]",
            "identified_at"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        let expect = if &r[0] == "degenerate-bound" {
            "vacuous"
        } else {
            ""
        };
        if expect.is_empty() {
            assert!(r[9].parse::<u64>().is_ok(), "{r:?}");
        } else {
            assert_eq!(&r[9], expect);
        }
        let file = traces.join(format!("{}-n{}-s{}.jsonl", &r[0], &r[1], &r[2]));
        let out = dfls(&["verify", file.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
    }
}

#[test]
fn single_run_rejects_lists() {
    let out = dfls(&["run", "--problem", "quad-corner,linear-edge", "-n", "2"]);
    assert_eq!(code(&out), 2);
}
