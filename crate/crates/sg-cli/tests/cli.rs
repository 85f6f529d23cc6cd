//! Black-box tests of the `sgsolver` binary: exit codes, report fields,
//! generated files, and the bench CSV schema.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sg_core::{generate, parse_model, serialize_model, GeneratorParams};
use tempfile::TempDir;

fn sgsolver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgsolver"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

/// Writes a generated family to `<dir>/<name>.sg` and returns the path.
fn write_model(dir: &Path, name: &str, params: &GeneratorParams) -> PathBuf {
    let path = dir.join(format!("{name}.sg"));
    let g = generate(params).expect("generator families are valid");
    std::fs::write(&path, serialize_model(&g)).expect("temp dir is writable");
    path
}

/// The value of a `key: value` line in a solve report.
fn field(report: &str, key: &str) -> String {
    let prefix = format!("{key}: ");
    report
        .lines()
        .find_map(|line| line.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("report has no '{key}' line:\n{report}"))
        .to_string()
}

#[test]
fn solve_reports_the_fig2_value() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig2", &GeneratorParams::fig2());
    let out = sgsolver(&[
        "solve",
        model.to_str().unwrap(),
        "--algorithm",
        "wp",
        "--epsilon",
        "1e-6",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let report = stdout(&out);
    let lower: f64 = field(&report, "value_lower").parse().unwrap();
    let upper: f64 = field(&report, "value_upper").parse().unwrap();
    assert!(upper - lower <= 1e-6, "gap still open: {lower} {upper}");
    assert!((lower - 0.9).abs() <= 1e-6, "lower bound {lower}");
    assert!((upper - 0.9).abs() <= 1e-6, "upper bound {upper}");
    assert_eq!(field(&report, "stopped_by"), "converged");
}

#[test]
fn solve_exits_two_when_naive_bvi_stalls() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig1", &GeneratorParams::fig1());
    let out = sgsolver(&[
        "solve",
        model.to_str().unwrap(),
        "--algorithm",
        "bvi",
        "--max-iterations",
        "1000",
    ]);
    assert_eq!(exit_code(&out), 2);
    let report = stdout(&out);
    assert_eq!(field(&report, "value_lower"), "0");
    assert_eq!(field(&report, "value_upper"), "1");
    assert_eq!(field(&report, "stopped_by"), "max-iterations");
}

#[test]
fn solve_reports_missing_files_as_input_errors() {
    let out = sgsolver(&["solve", "/nonexistent/missing.sg"]);
    assert_eq!(exit_code(&out), 1);
    assert!(!out.stderr.is_empty(), "expected an error message");
}

#[test]
fn solve_rejects_unknown_algorithms() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig2", &GeneratorParams::fig2());
    let out = sgsolver(&["solve", model.to_str().unwrap(), "--algorithm", "nope"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn solve_rejects_misapplied_flags() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig2", &GeneratorParams::fig2());
    let path = model.to_str().unwrap();
    for args in [
        ["solve", path, "--algorithm", "vi", "--epsilon", "0.1"],
        ["solve", path, "--algorithm", "wp", "--delta", "0.1"],
        ["solve", path, "--algorithm", "bvi", "--wp-period", "2"],
    ] {
        let out = sgsolver(&args);
        assert_eq!(exit_code(&out), 1, "args {args:?} should be rejected");
    }
}

#[test]
fn solve_trace_prints_one_line_per_iteration() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig2", &GeneratorParams::fig2());
    let out = sgsolver(&["solve", model.to_str().unwrap(), "--trace"]);
    assert_eq!(exit_code(&out), 0);
    let report = stdout(&out);
    let iterations: usize = field(&report, "iterations").parse().unwrap();
    let traced = report
        .lines()
        .filter(|line| line.starts_with("trace "))
        .count();
    assert_eq!(traced, iterations);
}

#[test]
fn solve_writes_report_and_graph_dump_to_files() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path(), "fig2", &GeneratorParams::fig2());
    let report_path = dir.path().join("report.txt");
    let dot_path = dir.path().join("graph.dot");
    let out = sgsolver(&[
        "solve",
        model.to_str().unwrap(),
        "-o",
        report_path.to_str().unwrap(),
        "--dump-graph",
        dot_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout(&out).is_empty(), "report should go to the file");
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(field(&report, "stopped_by"), "converged");
    let dot = std::fs::read_to_string(&dot_path).unwrap();
    assert!(dot.starts_with("digraph"), "not DOT text: {dot}");
    assert!(dot.contains("\"one\""), "target label missing: {dot}");
}

#[test]
fn generate_manyecs_counts_match_the_reference_scale() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.sg");
    let out = sgsolver(&[
        "generate",
        "manyecs",
        "--n",
        "1000",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let g = parse_model(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(g.num_states(), 2004);
    assert_eq!(g.num_transitions(), 6007);
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.sg");
    let b = dir.path().join("b.sg");
    for path in [&a, &b] {
        let out = sgsolver(&[
            "generate",
            "random",
            "--states",
            "6",
            "--seed",
            "7",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must give identical bytes"
    );
}

#[test]
fn generate_writes_fixed_families_and_rejects_misapplied_flags() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("f4.sg");
    let out = sgsolver(&["generate", "fig4", "-o", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let g = parse_model(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(g.num_states(), 5);

    let out = sgsolver(&["generate", "fig2", "--n", "3"]);
    assert_eq!(exit_code(&out), 1, "--n does not apply to fig2");
    let out = sgsolver(&["generate", "manyecs", "--seed", "3"]);
    assert_eq!(exit_code(&out), 1, "--seed does not apply to manyecs");
}

#[test]
fn bench_emits_the_documented_schema() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = sgsolver(&[
        "bench",
        "manyecs:n=500",
        "manyecs:n=1000",
        "--algorithms",
        "wp,dfl",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    assert_eq!(
        header,
        [
            "model",
            "N",
            "states",
            "transitions",
            "mecs",
            "algorithm",
            "iterations",
            "solves",
            "value_lower",
            "value_upper",
            "time_seconds",
            "stopped_by"
        ]
    );

    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4, "one row per (model, algorithm) pair");
    // Input order: models as listed, algorithms as listed within each model.
    let expect = [
        ("manyecs", "500", "1004", "3007", "wp"),
        ("manyecs", "500", "1004", "3007", "dfl"),
        ("manyecs", "1000", "2004", "6007", "wp"),
        ("manyecs", "1000", "2004", "6007", "dfl"),
    ];
    for (row, (model, n, states, transitions, algorithm)) in rows.iter().zip(expect) {
        assert_eq!(&row[0], model);
        assert_eq!(&row[1], n);
        assert_eq!(&row[2], states);
        assert_eq!(&row[3], transitions);
        assert_eq!(&row[5], algorithm);
        assert_eq!(&row[11], "converged");
        let mecs = &row[4];
        if algorithm == "dfl" {
            let count: usize = mecs.parse().expect("dfl rows carry a MEC count");
            assert!(count > 0);
        } else {
            assert!(mecs.is_empty(), "only dfl rows carry a MEC count");
        }
        let lower: f64 = row[8].parse().unwrap();
        let upper: f64 = row[9].parse().unwrap();
        assert!((lower - 0.5).abs() <= 1e-6 && (upper - 0.5).abs() <= 1e-6);
        let time: f64 = row[10].parse().unwrap();
        assert!(time >= 0.0);
    }
}

#[test]
fn bench_leaves_upper_bound_empty_for_plain_value_iteration() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = sgsolver(&[
        "bench",
        "fig2",
        "--algorithms",
        "vi",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][5], "vi");
    assert!(rows[0][9].is_empty(), "vi has no upper bound");
    assert_eq!(&rows[0][11], "threshold");
}

#[test]
fn bench_records_nonconvergence_within_the_budget() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = sgsolver(&[
        "bench",
        "manyecs:n=5000",
        "--algorithms",
        "bvi",
        "--time-budget",
        "0.05",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "non-convergence is a row, not an abort");
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let stopped_by = &rows[0][11];
    assert!(
        stopped_by == "timeout" || stopped_by == "max-iterations",
        "naive BVI cannot converge here, got {stopped_by}"
    );
}

#[test]
fn bench_rejects_unknown_algorithms_and_families() {
    let out = sgsolver(&["bench", "fig2", "--algorithms", "wp,zzz"]);
    assert_eq!(exit_code(&out), 1);
    let out = sgsolver(&["bench", "nosuch-family"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn bench_reads_model_files_and_directories() {
    let dir = TempDir::new().unwrap();
    write_model(dir.path(), "a-fig1", &GeneratorParams::fig1());
    write_model(dir.path(), "b-fig4", &GeneratorParams::fig4());
    let csv_path = dir.path().join("out.csv");
    let out = sgsolver(&[
        "bench",
        dir.path().to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "a-fig1", "directory entries sort by name");
    assert_eq!(&rows[1][0], "b-fig4");
    assert!(rows[0][1].is_empty(), "file models have no N column");
}
