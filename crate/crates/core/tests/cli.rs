use std::process::{Command, Output};

use magicdecay::rom;
use magicdecay::stabilizer;
use magicdecay::Hypergraph;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magicdecay"))
        .args(args)
        .env_remove("MAGICDECAY_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV output, keyed by header name.
fn rows(o: &Output) -> Vec<Vec<(String, String)>> {
    let text = stdout(o);
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    rd.records()
        .map(|r| {
            header
                .iter()
                .cloned()
                .zip(r.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

fn field(row: &[(String, String)], name: &str) -> f64 {
    row.iter().find(|(k, _)| k == name).unwrap().1.parse().unwrap()
}

#[test]
fn rom_of_builtin_states() {
    let o = run(&["rom", "--state", "ccz"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((field(&rows(&o)[0], "rom") - 23.0 / 9.0).abs() < 1e-6);
    assert!(stdout(&o).lines().any(|l| l.starts_with("# basis_sha256: ")));

    let o = run(&["rom", "--state", "plus", "-n", "3"]);
    assert!((field(&rows(&o)[0], "rom") - 1.0).abs() < 1e-7);
}

#[test]
fn file_input_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    std::fs::write(&path, "n=3\n1 2 3\n1 2\n").unwrap();
    let o = run(&["rom", "--file", path.to_str().unwrap(), "--noise", "dep:0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = Hypergraph::new(3, &[vec![1, 2, 3], vec![1, 2]]).unwrap();
    let want = rom::rom_noisy(
        &h,
        &magicdecay::NoiseModel::Depolarizing(0.1),
        stabilizer::shared_basis(3).unwrap(),
    )
    .unwrap()
    .value;
    assert!((field(&rows(&o)[0], "rom") - want).abs() < 1e-9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["sweep", "--family", "ccz", "--lambdas", "0:1:5"][..],
        &["--format", "json", "rom", "--state", "cnz:4", "--keep", "1,2,3"][..],
        &["wigner", "--cnz", "-n", "3..5", "--lambdas", "0,0.1"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn json_output_has_provenance_envelope() {
    let o = run(&["--format", "json", "rom", "--state", "ccz"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["provenance"]["command"], "rom");
    assert!(v["provenance"]["basis_sha256"].as_str().unwrap().len() == 64);
    assert!((v["result"]["rom"].as_f64().unwrap() - 23.0 / 9.0).abs() < 1e-6);
}

#[test]
fn error_codes_and_exit_status() {
    let o = run(&["rom", "--state", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_INPUT: "));

    let o = run(&["rom", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("E_USAGE: "));

    let o = run(&["enumerate", "-n", "5", "--count-only"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_CAPACITY: "), "{}", stderr(&o));

    let o = run(&["rom", "--state", "cnz:6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_"), "{}", stderr(&o));

    let o = run(&["wigner", "--d", "4", "--cnz", "-n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_INPUT: "));

    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn wigner_rows() {
    let o = run(&["wigner", "--cnz", "-n", "3..7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let want = [4.5555, 5.7846, 9.9368, 12.7727, 18.2254];
    let got: Vec<f64> = rows(&o).iter().map(|r| field(r, "1+2sn")).collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-3, "{g} vs {w}");
    }
}

#[test]
fn enumerate_counts() {
    let o = run(&["enumerate", "-n", "3", "--count-only"]);
    assert!(o.status.success());
    assert_eq!(field(&rows(&o)[0], "states"), 1080.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b2.stbb");
    let o = run(&["enumerate", "-n", "2", "--basis-file", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stabilizer::StabilizerBasis::load(&path).unwrap().len(), 60);
}

#[test]
fn thresholds() {
    let o = run(&["threshold", "--state", "plus", "-n", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&rows(&o)[0], "lambda_star"), 0.0);

    let o = run(&["threshold", "--state", "ccz", "--eps", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&o)[0];
    assert!((field(r, "lambda_star") - 1.0 / 3.0).abs() < 1e-3);
    assert!(field(r, "evaluations") <= 25.0);
}

#[test]
fn certificates_verify() {
    let o = run(&["verify-certificates"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn output_file_option() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = run(&["-o", path.to_str().unwrap(), "rom", "--state", "ccz"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("ccz,3"));
}

#[test]
fn four_qubit_scan_ranks_three_complete_first() {
    if std::env::var("MAGICDECAY_HEAVY").map_or(true, |v| v != "1") {
        eprintln!("skipped: set MAGICDECAY_HEAVY=1 (about 5 minutes on one core)");
        return;
    }
    let o = run(&["threshold", "--scan4", "--eps", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = rows(&o);
    assert_eq!(rows.len(), 9);
    let best = rows
        .iter()
        .max_by(|a, b| field(a, "lambda_star").total_cmp(&field(b, "lambda_star")))
        .unwrap();
    assert_eq!(best[0].1, "n=4 {123,124,134,234}");
}
