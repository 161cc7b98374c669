use std::path::Path;
use std::process::{Command, Output};

fn dispatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_corrupted_flow(dir: &Path) -> String {
    let path = dir.join("bad_flow.json");
    let text = r#"{"objective": 8, "flow_numerators": [[5,0,0],[10,0,0],[0,10,0],[10,0,5],[0,5,5]], "flow_denominator": 10}"#;
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn solve_example_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    let o = dispatch(&["gen", "example", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let o = dispatch(&["--format", "json", "solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["objective"], serde_json::json!(8.0));
    assert_eq!(v["flow_denominator"], serde_json::json!(10));
    assert_eq!(v["certified"], serde_json::json!(true));
}

#[test]
fn lower_bound_objective_is_printed_in_decimal_and_rational() {
    let o = dispatch(&["--format", "json", "solve", "--gen", "lb:2:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["objective"], serde_json::json!(1.0));
    assert_eq!(v["flow"][1][1], serde_json::json!("1/2"));
}

#[test]
fn missing_file_is_exit_two() {
    let o = dispatch(&["solve", "definitely-missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn invalid_instance_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(
        &path,
        r#"{"n":1,"k":1,"denominator":1,"numerators":[1],"utilities":[[-1.0]]}"#,
    )
    .unwrap();
    let o = dispatch(&["solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(w1, j1)"));
}

#[test]
fn bad_flags_are_exit_two() {
    assert_eq!(dispatch(&["solve"]).status.code(), Some(2));
    assert_eq!(
        dispatch(&["--format", "xml", "solve", "--gen", "example"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dispatch(&["simulate", "--gen", "example", "--policy", "best"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dispatch(&["lowerbound", "--n", "5", "--p", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn capacity_is_exit_three() {
    let o = dispatch(&["exact", "--gen", "random:12:2:1:2", "--max-n", "10"]);
    assert_eq!(o.status.code(), Some(3));
    let o = dispatch(&["solve", "--gen", "example", "--max-total-supply", "10"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reproduce_example() {
    let o = dispatch(&["reproduce-example"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# dispatch_value = 6"));
    assert!(text.contains("# opt_value = 8"));
    assert!(text.contains("# tpp = 8"));

    let o = dispatch(&["--format", "json", "reproduce-example"]);
    let lines: Vec<_> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 5);
    let last: serde_json::Value = serde_json::from_str(&lines[4]).unwrap();
    assert_eq!(last["preferred"], serde_json::json!(4));
    assert_eq!(last["assigned"], serde_json::json!(1));
    assert_eq!(last["preferred_available"], serde_json::json!(false));
}

#[test]
fn corrupted_flow_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let flow = write_corrupted_flow(dir.path());
    let o = dispatch(&["reproduce-example", "--flow", &flow]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatch"));
}

#[test]
fn exact_marks_three_inequalities() {
    let o = dispatch(&["exact", "--gen", "example"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches(",PASS").count(), 3);
    let o = dispatch(&[
        "--format",
        "json",
        "exact",
        "--gen",
        "example",
        "--edge-probabilities",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["edge_probabilities"].as_array().unwrap().len(), 5);
    assert_eq!(v["tpp"], serde_json::json!(8.0));
}

#[test]
fn lemmas_pass_and_fail() {
    let o = dispatch(&["lemmas", "--gen", "example", "--trials", "200000"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(text.matches(",PASS,").count(), 4, "{text}");

    let dir = tempfile::tempdir().unwrap();
    let flow = write_corrupted_flow(dir.path());
    let o = dispatch(&[
        "lemmas", "--gen", "example", "--trials", "20000", "--flow", &flow,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL lemma2"));
}

#[test]
fn run_prints_a_trace() {
    let o = dispatch(&["run", "--gen", "example", "--sequence", "3,1,2,2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(text.contains("# opt = 8"));
    let o = dispatch(&[
        "--format",
        "json",
        "run",
        "--gen",
        "example",
        "--policy",
        "greedy",
        "--replication",
        "3",
    ]);
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = dispatch(&["run", "--gen", "example", "--sequence", "3,1,4,2,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--gen",
            "random:6:3:5:12:4",
            "--trials",
            "20000",
        ],
        vec![
            "--format", "json", "simulate", "--gen", "example", "--trials", "20000",
        ],
        vec!["lemmas", "--gen", "example", "--trials", "20000", "--exact"],
        vec![
            "lowerbound",
            "--n",
            "30",
            "--p",
            "0.5,1/10",
            "--trials",
            "5000",
        ],
        vec!["--seed", "7", "run", "--gen", "example"],
    ];
    for (i, case) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for (jobs, attempt) in [("1", 0), ("4", 1), ("4", 2), ("1", 3)] {
            let path = dir.path().join(format!("{i}-{attempt}.out"));
            let mut args = case.clone();
            args.extend(["--jobs", jobs, "--out", path.to_str().unwrap()]);
            let o = dispatch(&args);
            assert!(
                o.status.success(),
                "{case:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            outputs.push(std::fs::read(&path).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{case:?}");
    }
}
