use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use paradmm::instance::read_meta;
use paradmm::output::read_history_csv;

fn paradmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paradmm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn generate_records_dims_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["generate", "exchange", "--n", "100", "--N", "100", "--p", "80", "--seed", "7", "--out"];
    let oa = paradmm(&[&args[..], &[a.to_str().unwrap()]].concat());
    let ob = paradmm(&[&args[..], &[b.to_str().unwrap()]].concat());
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(stdout(&oa), stdout(&ob));
    assert!(stdout(&oa).contains("seed 7"));
    let meta = read_meta(&a).unwrap();
    assert_eq!((meta.dims.n, meta.dims.n_blocks, meta.dims.p), (Some(100), 100, Some(80)));

    let bp = dir.path().join("bp");
    let o = paradmm(&[
        "generate", "bp", "--n", "1000", "--m", "300", "--k", "60", "--sigma", "1e-3", "--seed", "1", "--out",
        bp.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let meta = read_meta(&bp).unwrap();
    assert_eq!((meta.dims.n, meta.dims.m, meta.dims.k), (Some(1000), Some(300), Some(60)));
    assert_eq!(meta.sigma, Some(1e-3));

    let o = paradmm(&["generate", "exchange", "--n", "0", "--N", "2", "--p", "3", "--out", bp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

fn exchange_config(dir: &Path, extra: &str, iters: usize) -> std::path::PathBuf {
    let cfg = dir.join("run.toml");
    write(
        &cfg,
        &format!(
            r#"
[problem]
kind = "exchange"
n = 100
N = 100
p = 80
seed = 0

[solver]
scheme = "prox_jacobi"
rho = 0.01
tau_policy = "exchange"
max_iters = {iters}
stop_tol = 0.0
{extra}

[output]
csv = "history.csv"
jsonl = "history.jsonl"
"#
        ),
    );
    cfg
}

#[test]
fn solve_writes_two_hundred_rows_and_exits_on_the_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = exchange_config(dir.path(), "", 200);
    let o = paradmm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_history_csv(&dir.path().join("history.csv")).unwrap();
    assert_eq!(rows.len(), 200);
    assert_eq!(fs::read_to_string(dir.path().join("history.jsonl")).unwrap().lines().count(), 200);
    let line = stdout(&o);
    assert!(line.contains("iterations 200") && line.contains("rel_error"), "{line}");
}

#[test]
fn zero_iterations_give_an_empty_valid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = exchange_config(dir.path(), "", 0);
    let o = paradmm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(read_history_csv(&dir.path().join("history.csv")).unwrap().is_empty());
}

#[test]
fn exit_codes_for_tolerance_divergence_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tol.toml");
    write(
        &cfg,
        r#"
[problem]
kind = "bp"
n = 60
m = 30
k = 4
N = 6
seed = 1
[solver]
scheme = "prox_jacobi"
rho_over_c_l1 = 10.0
prox = "prox_linear"
tau_policy = "l1"
max_iters = 5000
stop_tol = 1e-6
"#,
    );
    let o = paradmm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));

    let div = dir.path().join("div.toml");
    write(
        &div,
        r#"
[problem]
kind = "exchange"
n = 10
N = 10
p = 10
[solver]
scheme = "jacobi"
rho = 1.0
max_iters = 5000
"#,
    );
    let o = paradmm(&["solve", "--config", div.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));

    let bad = dir.path().join("bad.toml");
    write(&bad, "[problem]\nkind = \"exchange\"\nwhat = 1\n");
    let o = paradmm(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("what"));
}

#[test]
fn distributed_solve_matches_serial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = exchange_config(dir.path(), "", 30);
    assert_eq!(paradmm(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let serial = read_history_csv(&dir.path().join("history.csv")).unwrap();
    assert_eq!(
        paradmm(&["solve", "--config", cfg.to_str().unwrap(), "--workers", "4"]).status.code(),
        Some(2)
    );
    let dist = read_history_csv(&dir.path().join("history.csv")).unwrap();
    assert_eq!(serial.len(), dist.len());
    assert!(serial.iter().zip(&dist).all(|(a, b)| paradmm_core::solvers::record_bits_eq(a, b)));
}

#[test]
fn check_reports_and_exit_status() {
    use paradmm::instance::Instance;
    use paradmm_core::Matrix;
    let dir = tempfile::tempdir().unwrap();
    // orthonormal blocks with disjoint column spaces
    let mut a0 = Matrix::zeros(4, 2);
    a0.set(0, 0, 1.0);
    a0.set(1, 1, 1.0);
    let mut a1 = Matrix::zeros(4, 2);
    a1.set(2, 0, 1.0);
    a1.set(3, 1, 1.0);
    let ortho = dir.path().join("ortho");
    Instance::Operator {
        blocks: vec![a0, a1],
        rhs: vec![1.0; 4],
    }
    .save(&ortho)
    .unwrap();
    let o = paradmm(&["check", "--instance", ortho.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let near = &v["reports"][1];
    assert_eq!(near["condition"], "near_orthogonality");
    assert_eq!(near["delta"], 0.0);

    let bp = dir.path().join("bp");
    let o = paradmm(&["generate", "bp", "--n", "1000", "--m", "300", "--k", "60", "--N", "100", "--out", bp.to_str().unwrap()]);
    assert!(o.status.success());
    let o = paradmm(&["check", "--instance", bp.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"][1]["satisfied"], false);

    let o = paradmm(&[
        "check", "--instance", bp.to_str().unwrap(), "--condition", "proximal", "--suggest-tau", "1.1", "--rho", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let taus = v["tau"].as_array().unwrap();
    assert_eq!(taus.len(), 100);
    let tau: Vec<String> = taus.iter().map(|t| t.as_f64().unwrap().to_string()).collect();
    let o = paradmm(&[
        "check", "--instance", bp.to_str().unwrap(), "--condition", "proximal", "--rho", "0.5", "--tau",
        &taus.iter().map(|t| t.as_f64().unwrap()).fold(0.0, f64::max).to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{tau:?}");
}

#[test]
fn bench_averages_and_matches_solve_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    write(
        &cfg,
        r#"
[problem]
kind = "exchange"
n = 10
N = 4
p = 8
seed = 3
[solver]
scheme = "prox_jacobi"
rho = 0.01
tau_policy = "exchange"
max_iters = 20
stop_tol = 0.0
[output]
csv = "solve.csv"
[bench]
trials = 1
[[bench.schemes]]
scheme = "prox_jacobi"
"#,
    );
    let out = dir.path().join("bench.csv");
    let o = paradmm(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(paradmm(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# seeds: 3\n"));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&out).unwrap();
    let mut sd = csv::Reader::from_path(dir.path().join("solve.csv")).unwrap();
    let bh = rd.headers().unwrap().clone();
    let sh = sd.headers().unwrap().clone();
    assert_eq!(bh.iter().skip(3).collect::<Vec<_>>(), sh.iter().collect::<Vec<_>>());
    let brows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let srows: Vec<csv::StringRecord> = sd.records().map(|r| r.unwrap()).collect();
    assert_eq!(brows.len(), srows.len());
    let last = sh.len() - 1; // durations differ between runs
    for (b, s) in brows.iter().zip(&srows) {
        assert_eq!(b.iter().skip(3).take(last).collect::<Vec<_>>(), s.iter().take(last).collect::<Vec<_>>());
    }

    write(
        &cfg,
        &(fs::read_to_string(&cfg).unwrap().replace("trials = 1", "trials = 3")
            + "[[bench.schemes]]\nscheme = \"gauss_seidel\"\ntau_policy = \"none\"\n"),
    );
    let o = paradmm(&["bench", "--config", cfg.to_str().unwrap(), "--rho-grid", "0.01,0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# seeds: 3,4,5\n"));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 2 * 20);
    assert!(rows.iter().all(|r| &r[2] == "3"), "{text}");
}
