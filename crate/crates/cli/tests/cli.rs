use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jacobsthal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jacobsthal"))
        .args(args)
        .env_remove("JACOBSTHAL_PSIMIN_PATH")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compute_reports_table_rows() {
    let out = jacobsthal(&["compute", "--n", "9", "--algo", "bsa"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("n=9 algo=bsa omega=19 h=40 n_seq=12 "));

    let out = jacobsthal(&["compute", "--n", "2", "--algo", "gpa", "--format", "jsonl"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!((v["omega"].as_u64(), v["h"].as_u64()), (Some(1), Some(4)));

    let out = jacobsthal(&["compute", "--n", "1", "--format", "jsonl"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["h"], 2);
    assert!(v["omega"].is_null());

    let out = jacobsthal(&["compute", "--n", "12", "--algo", "dsa", "--workers", "2", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,algo,omega,h,n_seq,visited,wall_time"));
    assert!(lines.next().unwrap().starts_with("12,dsa,32,66,24,"));
}

#[test]
fn guard_and_usage_errors_exit_2() {
    let out = jacobsthal(&["compute", "--n", "12", "--algo", "bsa"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("N_BSA"), "{err}");
    assert!(err.contains("gpa"), "{err}");

    assert_eq!(jacobsthal(&["compute", "--n", "5", "--algo", "fast"]).status.code(), Some(2));
    assert_eq!(jacobsthal(&["compute"]).status.code(), Some(2));
}

#[test]
fn enumerate_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = jacobsthal(&["enumerate", "--n", "6", "--algo", "dsa", "--out-dir", path(dir.path())]);
    assert!(out.status.success());
    let moduli = fs::read_to_string(dir.path().join("moduli.txt")).unwrap();
    assert!(moduli.starts_with("# n=6 omega=10 count=2\n"));
    assert!(moduli.lines().any(|l| l == "3 7 5 3 11 13 3 5 7 3"));
    let rem = fs::read_to_string(dir.path().join("remainders.txt")).unwrap();
    assert!(rem.lines().any(|l| l == "1 3 2 5 6"));
    let perm = fs::read_to_string(dir.path().join("permutations.txt")).unwrap();
    assert!(perm.lines().any(|l| l == "3 7 5 11 13"));
}

#[test]
fn psimin_file_feeds_the_searches() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("psi_min.txt");
    let out = jacobsthal(&["psimin", "--max-m", "40", "--max-k", "4", "--out", path(&table)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("psi_min v1 max_m=40 max_k=4"));
    // m = 10: column 2 is floor(10/3)
    assert_eq!(lines.nth(9).unwrap().split_whitespace().nth(1), Some("3"));

    let out = Command::new(env!("CARGO_BIN_EXE_jacobsthal"))
        .args(["compute", "--n", "11", "--algo", "dsa"])
        .env("JACOBSTHAL_PSIMIN_PATH", &table)
        .output()
        .unwrap();
    assert!(stdout(&out).starts_with("n=11 algo=dsa omega=28 "));

    let out = jacobsthal(&["psimin", "--max-m", "40", "--max-k", "12", "--out", path(&table)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ilp_export_and_classification() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.lp");
    let out = jacobsthal(&["export-ilp", "--n", "4", "--m1", "3", "--m2", "6", "--out", path(&model)]);
    assert!(out.status.success());
    let lp = fs::read_to_string(&model).unwrap();
    assert!(lp.contains("obj: 8 y_3 + 4 y_4 + 2 y_5 + 1 y_6"));
    assert!(lp.trim_end().ends_with("End"));

    // remainders (1, 3, 2) cover 1..4 and miss 5
    let sol = dir.path().join("s.txt");
    fs::write(&sol, "# optimum\nx_2_1 1\nx_3_3 1\nx_4_2 1\ny_3 1\ny_4 1\ny_5 0\ny_6 0\n").unwrap();
    let out = jacobsthal(&["classify-solution", "--model", path(&model), "--solution", path(&sol)]);
    assert_eq!(stdout(&out).trim(), "omega_found(4)");

    fs::write(&sol, "x_2_1 1\nx_3_3 1\nx_4_2 1\ny_3 1\ny_4 1\ny_5 1\ny_6 0\n").unwrap();
    let out = jacobsthal(&["classify-solution", "--model", path(&model), "--solution", path(&sol)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("link_5"));
}

#[test]
fn split_then_run_units() {
    let dir = tempfile::tempdir().unwrap();
    let units = dir.path().join("units.txt");
    let out = jacobsthal(&["split", "--n", "10", "--algo", "dsa", "--kstar", "4", "--out", path(&units)]);
    assert!(out.status.success());
    let exports = dir.path().join("seqs");
    let out = jacobsthal(&["run-units", "--file", path(&units), "--workers", "2", "--out-dir", path(&exports)]);
    assert!(stdout(&out).starts_with("n=10 algo=dsa omega=22 h=46 n_seq=2 "));
    assert!(exports.join("remainders.txt").exists());

    let text = fs::read_to_string(&units).unwrap().replace("criterion=true", "criterion=false");
    fs::write(&units, text).unwrap();
    let out = jacobsthal(&["run-units", "--file", path(&units)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("stale"));
}

#[test]
fn bench_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = jacobsthal(&["bench", "--n-min", "2", "--n-max", "10", "--algos", "bsa,gpa", "--out", path(&csv)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,algo,seconds,log1p_seconds,visited");
    assert_eq!(lines.len(), 1 + 9 * 2);
    assert_eq!(lines[17], "10,bsa,,,");
    assert!(lines[18].starts_with("10,gpa,"));
}

#[test]
fn verify_matrix_and_exit_code() {
    let out = jacobsthal(&["verify", "--n-max", "8", "--literature"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("all runs agree"));
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["8", "16/2", "16/2", "16/2", "16/2", "16/2", "16/2"]));

    let out = jacobsthal(&["verify", "--n-max", "10", "--algos", "bsa,dsa", "--format", "csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("10,bsa,,,skipped,"));
}
