use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use mdent_core::statefile::{load_state, parse_basis, StateData};
use mdent_core::sweep::{csv_line, evaluate_point, CSV_HEADER};
use mdent_core::witness::psi432_pair_sets;
use mdent_core::{schmidt_rank_vector, WitnessConvention, DEFAULT_RANK_TOL};

fn mdent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = mdent(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).expect("JSON output")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = path(dir, &format!("{name}.json"));
    let mut full = vec!["gen-state"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", s(&out)]);
    ok(&full);
    out
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn analyze_psi432_reports_ranks_and_entropies() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "psi432", &["psi432"]);
    let text = ok(&["analyze", s(&f)]);
    assert!(text.contains("rank vector: (4,3,2)"), "{text}");
    assert!(
        text.contains("entropy vector: (1.224745, 1.118034, 1.000000)"),
        "{text}"
    );
    assert!(text.contains("validation: ok"));

    let v = json(&["analyze", s(&f), "--json"]);
    assert_eq!(v["rank_vector"], serde_json::json!([4, 3, 2]));
    let e = numbers(&v["entropy_vector"]);
    for (x, y) in e.iter().zip([1.5f64.sqrt(), 1.25f64.sqrt(), 1.0]) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn analyze_noise_family_corners() {
    let dir = TempDir::new().unwrap();
    let pure = gen(&dir, "pure", &["test-state", "--p", "1"]);
    assert_eq!(
        json(&["analyze", s(&pure), "--json"])["certified"],
        serde_json::json!([4, 3, 2])
    );
    let white = gen(&dir, "white", &["test-state", "--p", "0", "--q", "0"]);
    assert_eq!(
        json(&["analyze", s(&white), "--json"])["certified"],
        serde_json::json!([1, 1, 1])
    );
    let half = gen(&dir, "half", &["test-state", "--p", "0.5"]);
    let v = json(&["analyze", s(&half), "--json"]);
    assert_eq!(v["certified"], serde_json::json!([2, 2, 2]));
    let w = numbers(&v["witness"]);
    for (x, y) in w.iter().zip([0.574, 0.489, 0.191]) {
        assert!((x - y).abs() < 1e-3, "{w:?}");
    }
    assert!(v.get("rank_vector").is_none());
}

#[test]
fn analyze_literal_first_set_and_safe_convention() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "psi432", &["psi432"]);
    let v = json(&["analyze", s(&f), "--pairs", "paper-432", "--json"]);
    assert!((numbers(&v["witness"])[0] - 0.75f64.sqrt()).abs() < 1e-12);
    let v = json(&["analyze", s(&f), "--convention", "safe", "--json"]);
    assert!((numbers(&v["witness"])[0] - 1.5f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn analyze_pair_file_per_slot() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "bell", &["bell"]);
    let pairs = path(&dir, "pairs.txt");
    fs::write(&pairs, "# Bell coherence\n0,0 | 1,1\n").unwrap();
    let v = json(&["analyze", s(&f), "--pairs", s(&pairs), "--json"]);
    assert!(numbers(&v["witness"])
        .iter()
        .all(|w| (w - 1.0).abs() < 1e-12));
    assert_eq!(v["certified"], serde_json::json!([2, 2]));
    // One source per slot is also accepted; any other count is an argument error.
    let v = json(&[
        "analyze",
        s(&f),
        "--pairs",
        s(&pairs),
        "--pairs",
        "full-support",
        "--json",
    ]);
    assert!((numbers(&v["witness"])[0] - 1.0).abs() < 1e-12);
    let o = mdent(&[
        "analyze",
        s(&f),
        "--pairs",
        s(&pairs),
        "--pairs",
        s(&pairs),
        "--pairs",
        s(&pairs),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = mdent(&["analyze", s(&f), "--pairs", "paper-432"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_pair_file_reports_line() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "bell", &["bell"]);
    let pairs = path(&dir, "pairs.txt");
    fs::write(&pairs, "0,0 | 1,1\n0,0 1,1\n").unwrap();
    let o = mdent(&["analyze", s(&f), "--pairs", s(&pairs)]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn analyze_errors_have_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(&bad, "{\n  \"kind\": \"pure\",\n  \"dims\": [2,\n").unwrap();
    let o = mdent(&["analyze", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let trace = path(&dir, "trace.json");
    fs::write(
        &trace,
        r#"{"kind":"density","dims":[2],"entries":[{"row":[0],"col":[0],"re":2.0,"im":0.0}]}"#,
    )
    .unwrap();
    let o = mdent(&["analyze", s(&trace)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trace"), "{}", stderr(&o));

    let o = mdent(&["analyze", s(&path(&dir, "missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = mdent(&["analyze"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mdent(&["analyze", s(&trace), "--convention", "loose"]);
    assert_eq!(o.status.code(), Some(2));
}

fn read_csv(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sweep_csv_matches_library_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "grid.csv");
    let text = ok(&[
        "sweep",
        "--p-steps",
        "21",
        "--q-steps",
        "11",
        "--out",
        s(&out),
    ]);
    assert!(text.contains("(4,3,2)"));
    let raw = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = raw.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);

    let mut sets = psi432_pair_sets().to_vec();
    sets[0] = sets[2].clone();
    let mut expected = Vec::new();
    for i in 0..21 {
        for j in 0..11 {
            let (p, q) = (i as f64 / 20.0, j as f64 / 10.0);
            if p + q <= 1.0 + 1e-12 {
                expected.push(csv_line(
                    &evaluate_point(p, q, &sets, WitnessConvention::Tight).unwrap(),
                ));
            }
        }
    }
    assert_eq!(
        lines[1..],
        expected.iter().map(String::as_str).collect::<Vec<_>>()[..]
    );

    let again = path(&dir, "again.csv");
    ok(&[
        "sweep",
        "--p-steps",
        "21",
        "--q-steps",
        "11",
        "--out",
        s(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn sweep_boundaries_within_one_cell() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "grid.csv");
    let steps = 201;
    ok(&[
        "sweep",
        "--p-steps",
        "201",
        "--q-steps",
        "201",
        "--out",
        s(&out),
        "--gnuplot",
        s(&path(&dir, "g.dat")),
    ]);
    let rows = read_csv(&out);
    let cell = 1.0 / (steps - 1) as f64;
    let parse = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    let first_jump = |edge: &dyn Fn(f64, f64) -> bool, col: usize, target: usize| {
        let mut prev: Option<usize> = None;
        for r in rows[1..].iter().filter(|r| edge(parse(r, 0), parse(r, 1))) {
            let v: usize = r[col].parse().unwrap();
            if prev.is_some_and(|x| x < target) && v >= target {
                return parse(r, 0);
            }
            prev = Some(v);
        }
        panic!("no jump to {target} in column {col}");
    };
    let white = |_p: f64, q: f64| q == 0.0;
    let dephased = |p: f64, q: f64| (p + q - 1.0).abs() < 1e-9;
    let r6 = 2.0 * 6f64.sqrt();
    let r5 = 2.0 * 5f64.sqrt();
    let t1 = ((4.0f64 / 3.0).sqrt() / r6 + 1.0 / 64.0) / (17.0 / 64.0);
    let t2 = (1.0 / r5 + 1.0 / 32.0) / (9.0 / 32.0);
    for (edge, col, target, threshold) in [
        (&white as &dyn Fn(f64, f64) -> bool, 5, 4, t1),
        (&white, 6, 3, t2),
        (&white, 7, 2, 3.0 / 11.0),
        (&dephased, 7, 2, 0.5),
    ] {
        let p = first_jump(edge, col, target);
        assert!(
            p - threshold > -1e-12 && p - threshold <= cell + 1e-12,
            "col {col}: {p} vs {threshold}"
        );
    }
    let dat = fs::read_to_string(path(&dir, "g.dat")).unwrap();
    assert_eq!(dat.matches("\n\n").count(), steps - 1);
}

#[test]
fn sweep_rejects_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let o = mdent(&["sweep", "--p-steps", "1", "--out", s(&path(&dir, "x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = mdent(&[
        "sweep",
        "--p-steps",
        "3",
        "--q-steps",
        "3",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("I/O"), "{}", stderr(&o));
}

#[test]
fn feasible_verdicts_and_emission() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "432.json");
    let text = ok(&["feasible", "4", "3", "2", "--emit", "--out", s(&out)]);
    assert!(text.starts_with("feasible"));
    let psi = match load_state(&out).unwrap() {
        StateData::Pure(p) => p,
        StateData::Density(_) => panic!("expected a pure state"),
    };
    assert_eq!(
        schmidt_rank_vector(&psi, DEFAULT_RANK_TOL).unwrap().ranks(),
        [4, 3, 2]
    );

    let unsorted = path(&dir, "234.json");
    ok(&["feasible", "2", "3", "4", "--emit", "--out", s(&unsorted)]);
    let v = json(&["analyze", s(&unsorted), "--json"]);
    assert_eq!(v["rank_vector"], serde_json::json!([4, 3, 2]));
    assert_eq!(v["dims"][0], 2);

    let o = mdent(&["feasible", "5", "2", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("infeasible"));
    let refused = path(&dir, "522.json");
    let o = mdent(&["feasible", "5", "2", "2", "--emit", "--out", s(&refused)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("5 > 2*2"));
    assert!(!refused.exists());

    let product = path(&dir, "111.json");
    ok(&["feasible", "1", "1", "1", "--emit", "--out", s(&product)]);
    match load_state(&product).unwrap() {
        StateData::Pure(p) => {
            assert_eq!(p.structure().dims(), [1, 1, 1]);
            assert_eq!(
                schmidt_rank_vector(&p, DEFAULT_RANK_TOL).unwrap().ranks(),
                [1, 1, 1]
            );
        }
        StateData::Density(_) => panic!("expected a pure state"),
    }

    assert_eq!(mdent(&["feasible", "0", "1", "1"]).status.code(), Some(2));
    assert_eq!(mdent(&["feasible", "2", "2"]).status.code(), Some(2));
    assert_eq!(
        mdent(&["feasible", "2", "2", "2", "--emit"]).status.code(),
        Some(2)
    );
}

#[test]
fn conjecture_scan_reports() {
    let v = json(&["conjecture-scan", "--count", "300", "--seed", "5", "--json"]);
    assert_eq!(v["count"], 300);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["ghz_probe"]["lhs"], 8);
    assert_eq!(v["ghz_probe"]["rhs"], 8);
    let again = json(&["conjecture-scan", "--count", "300", "--seed", "5", "--json"]);
    assert_eq!(v, again);

    let text = ok(&[
        "conjecture-scan",
        "--count",
        "200",
        "--max-dim",
        "3",
        "--seed",
        "1",
    ]);
    assert!(text.contains("violations: 0"));
    assert!(text.contains("8 >= r_A*r_B*r_C = 8 (equality)"));

    assert_eq!(
        mdent(&["conjecture-scan", "--count", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mdent(&["conjecture-scan", "--dims", "2,2,2"]).status.code(),
        Some(2)
    );
}

#[test]
fn optimize_recovers_hidden_bell_state() {
    let dir = TempDir::new().unwrap();
    let hidden = gen(&dir, "hidden", &["bell", "--rotate-seed", "11"]);
    let pairs = path(&dir, "pairs.txt");
    fs::write(&pairs, "0,0 | 1,1\n").unwrap();
    let basis = path(&dir, "basis.json");
    let args = [
        "optimize",
        s(&hidden),
        "--k",
        "1",
        "--pairs",
        s(&pairs),
        "--seed",
        "4",
        "--json",
        "--out",
        s(&basis),
    ];
    let v = json(&args);
    assert!(v["after"].as_f64().unwrap() >= 1.0 - 1e-6, "{v}");
    assert_eq!(v["certified_after"], 2);
    let b = parse_basis(&fs::read_to_string(&basis).unwrap()).unwrap();
    assert!(b.deviation() < 1e-9);

    let first = fs::read(&basis).unwrap();
    assert_eq!(json(&args), v);
    assert_eq!(fs::read(&basis).unwrap(), first);
}

#[test]
fn optimize_never_loses_and_product_stays_one() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "psi432", &["psi432"]);
    let v = json(&[
        "optimize",
        s(&f),
        "--k",
        "2",
        "--restarts",
        "2",
        "--steps",
        "30",
        "--json",
    ]);
    assert!(v["after"].as_f64().unwrap() >= v["before"].as_f64().unwrap());

    let product = path(&dir, "product.json");
    fs::write(
        &product,
        r#"{"kind":"pure","dims":[2,2],"entries":[{"index":[0,0],"re":1.0,"im":0.0}]}"#,
    )
    .unwrap();
    let pairs = path(&dir, "pairs.txt");
    fs::write(&pairs, "0,0 | 1,1\n0,1 | 1,0\n").unwrap();
    let v = json(&[
        "optimize",
        s(&product),
        "--k",
        "1",
        "--pairs",
        s(&pairs),
        "--restarts",
        "2",
        "--steps",
        "50",
        "--json",
    ]);
    assert_eq!(v["certified_after"], 1);

    assert_eq!(
        mdent(&["optimize", s(&f), "--k", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mdent(&["optimize", s(&f), "--k", "1", "--steps", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gen_state_variants() {
    let dir = TempDir::new().unwrap();
    for (name, ranks) in [("psi332", [3, 3, 2]), ("psi422", [4, 2, 2])] {
        let f = gen(&dir, name, &[name]);
        assert_eq!(
            json(&["analyze", s(&f), "--json"])["rank_vector"],
            serde_json::json!(ranks)
        );
    }
    let g = gen(&dir, "ghz", &["ghz", "--dims", "3,3,3"]);
    assert_eq!(
        json(&["analyze", s(&g), "--json"])["rank_vector"],
        serde_json::json!([3, 3, 3])
    );

    let rotated = gen(&dir, "rotated", &["psi432", "--rotate-seed", "9"]);
    let v = json(&["analyze", s(&rotated), "--json"]);
    assert_eq!(v["rank_vector"], serde_json::json!([4, 3, 2]));

    let to_stdout = ok(&["gen-state", "bell"]);
    assert!(to_stdout.contains("\"kind\": \"pure\""));

    assert_eq!(
        mdent(&["gen-state", "psi432", "--p", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(mdent(&["gen-state", "test-state"]).status.code(), Some(2));
    assert_eq!(
        mdent(&["gen-state", "test-state", "--p", "0.8", "--q", "0.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(mdent(&["gen-state", "psi999"]).status.code(), Some(2));
}
