use std::io::Write;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pim-spmv");

fn pim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn list_kernels_prints_the_registry() {
    let o = pim(&["list-kernels"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(names, pim_spmv::kernel_registry());
    assert_eq!(names.len(), 25);
    let o = pim(&["list-kernels", "--dtypes"]);
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn run_emits_a_json_report() {
    let o = pim(&[
        "run",
        "1D-CSR.nnz",
        "--gen",
        "identity",
        "--size",
        "16",
        "--machine",
        "tiny",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kernel"], "1D-CSR.nnz");
    assert_eq!(v["correct"], true);
    assert_eq!(v["y"].as_array().unwrap().len(), 16);
    let b = &v["breakdown"];
    let sum: u64 = [
        "transfer_in_cycles",
        "kernel_cycles",
        "transfer_out_cycles",
        "merge_cycles",
    ]
    .iter()
    .map(|k| b[k].as_u64().unwrap())
    .sum();
    assert_eq!(b["total_cycles"].as_u64().unwrap(), sum);
}

#[test]
fn run_applies_switches() {
    let o = pim(&[
        "run",
        "2D-eqs-BCOO.block",
        "--gen",
        "banded:2",
        "--size",
        "40",
        "--machine",
        "tiny",
        "--cores",
        "6",
        "--grid",
        "3x2",
        "--block",
        "2",
        "2",
        "--dtype",
        "float64",
        "--sync",
        "fine_grained_lock",
        "--plan",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["spec"]["grid"], serde_json::json!([3, 2]));
    assert_eq!(v["report"]["spec"]["dtype"], "float64");
    assert_eq!(v["report"]["spec"]["sync"], "fine_grained_lock");
    assert_eq!(v["plan"]["tiles"].as_array().unwrap().len(), 6);
}

#[test]
fn run_reads_matrix_and_vector_files() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    let mut f = std::fs::File::create(&mtx).unwrap();
    writeln!(f, "%%MatrixMarket matrix coordinate integer general").unwrap();
    writeln!(f, "3 3 5\n1 1 1\n1 2 2\n2 2 3\n3 1 4\n3 3 5").unwrap();
    let x = dir.path().join("x.txt");
    std::fs::write(&x, "1 2\n3\n").unwrap();
    let o = pim(&[
        "run",
        "1D-COO.nnz",
        "--matrix",
        mtx.to_str().unwrap(),
        "--x-file",
        x.to_str().unwrap(),
        "--machine",
        "tiny",
        "--cores",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // [[1,2,0],[0,3,0],[4,0,5]] times [1,2,3]
    assert_eq!(v["y"], serde_json::json!([5, 6, 19]));
}

#[test]
fn sweep_csv_is_sorted_by_kernel() {
    let o = pim(&[
        "sweep",
        "--gen",
        "zipf:1.5:8",
        "--seed",
        "7",
        "--size",
        "256",
        "--machine",
        "tiny",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap().len(), pim_spmv::runtime::CSV_HEADER.len());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 25);
    let names: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(rows.iter().all(|r| &r[23] == "true"));
}

#[test]
fn sweep_json_names_the_best_kernel() {
    let o = pim(&[
        "sweep",
        "1D-CSR.row",
        "1D-CSR.nnz",
        "--all-sync",
        "--gen",
        "zipf:1.5:8",
        "--seed",
        "7",
        "--size",
        "1024",
        "--machine",
        "tiny",
        "-o",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let best = rows.iter().min_by_key(|r| r["total_cycles"].as_u64().unwrap()).unwrap();
    assert_eq!(v["best"], best["kernel"]);
    assert_eq!(v["best"], "1D-CSR.nnz");
}

#[test]
fn verify_reports_each_kernel() {
    let o = pim(&[
        "verify",
        "1D-CSR.row",
        "2D-var-COO.row",
        "--gen",
        "uniform:0.1",
        "--seed",
        "2",
        "--size",
        "48",
        "--machine",
        "tiny",
        "--all-dtypes",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("ok")).count(), 12);
    assert!(out.trim_end().ends_with("12/12 verified"));
}

#[test]
fn info_prints_matrix_statistics() {
    let o = pim(&[
        "info",
        "--gen",
        "zipf:1.5:8",
        "--seed",
        "7",
        "--size",
        "1024",
        "-o",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["nnz"], 7628);
    assert_eq!(v["row_nnz_max"], 106);
    let o = pim(&[
        "info",
        "--gen",
        "dense",
        "--size",
        "8",
        "--plan",
        "2D-var-CSR.row",
        "--machine",
        "tiny",
    ]);
    assert!(stdout(&o).contains("plan for 2D-var-CSR.row on 4 cores"));
}

#[test]
fn exit_codes_distinguish_failures() {
    let missing = pim(&["run", "1D-CSR.row", "--matrix", "/nonexistent.mtx"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).starts_with("error:"));
    assert_eq!(pim(&["run", "1D-XYZ.row", "--gen", "identity"]).status.code(), Some(2));
    assert_eq!(
        pim(&["run", "1D-CSR.row", "--gen", "uniform:0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(pim(&["run", "1D-CSR.row"]).status.code(), Some(2));
    let full = pim(&[
        "run",
        "1D-CSR.row",
        "--gen",
        "dense",
        "--size",
        "512",
        "--machine",
        "tiny",
        "--cores",
        "1",
    ]);
    assert_eq!(full.status.code(), Some(3));
    assert!(stderr(&full).contains("bank holds"));
}

#[test]
fn machine_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let mut sim = pim_spmv::SimConfig::tiny_preset();
    sim.machine.n_cores = 2;
    std::fs::write(&path, serde_json::to_string(&sim).unwrap()).unwrap();
    let o = pim(&[
        "run",
        "1D-CSR.row",
        "--gen",
        "identity",
        "--size",
        "8",
        "--machine",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["machine"]["n_cores"], 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(
        pim(&[
            "run",
            "1D-CSR.row",
            "--gen",
            "identity",
            "--machine",
            bad.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}
