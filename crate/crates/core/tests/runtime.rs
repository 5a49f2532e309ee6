mod common;

use pim_spmv::runtime::plan_for;
use pim_spmv::{
    generate_synthetic, kernel_registry, run_end_to_end, sweep, ElementType, ExecutionReport, KernelSpec, RunError,
    RunOptions, SimConfig, SyntheticKind, TripletMatrix,
};
use proptest::prelude::*;

use common::{arb_matrix, dense_product};

fn tiny(cores: usize) -> SimConfig {
    let mut sim = SimConfig::tiny_preset();
    sim.machine = sim.machine.with_cores(cores);
    sim
}

fn run(m: &TripletMatrix<i32>, label: &str, sim: &SimConfig) -> ExecutionReport {
    let spec = KernelSpec::parse(label).unwrap();
    run_end_to_end(m, &spec, sim, &vec![1; m.n_cols()], RunOptions::default()).unwrap()
}

fn zipf_1024<T: pim_spmv::Scalar>() -> TripletMatrix<T> {
    generate_synthetic(
        SyntheticKind::ZipfRows {
            exponent: 1.5,
            avg_nnz_per_row: 8.0,
            seed: 7,
        },
        1024,
        1024,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn transfers_follow_the_plan(m in arb_matrix(16, 16), cores in 1usize..5) {
        let sim = tiny(cores);
        for name in kernel_registry() {
            let spec = KernelSpec::from_name(&name).unwrap();
            let Ok(plan) = plan_for(&m, &spec, cores) else { continue };
            let r = run_end_to_end(&m, &spec, &sim, &vec![1; m.n_cols()], RunOptions::default()).unwrap();
            let w = 4u64;
            let b = r.breakdown;
            // the vector goes out once per core, or once per core row for 2D
            let segments: u64 = plan.vector_segments.iter().map(|s| s.len() as u64).sum();
            prop_assert_eq!(r.transfers.vector_in.payload_bytes, segments * w);
            if !plan.is_2d() {
                prop_assert_eq!(segments, (cores * m.n_cols()) as u64);
            }
            let rows: u64 = plan.tiles.iter().map(|t| t.row_range.len() as u64).sum();
            prop_assert_eq!(r.transfers.output.payload_bytes, rows * w);
            prop_assert_eq!(b.merge_cycles, plan.merged_elements() as u64 * sim.cost.merge_cycles_per_element);
            prop_assert_eq!(b.total_cycles, b.transfer_in_cycles + b.kernel_cycles + b.transfer_out_cycles + b.merge_cycles);
            prop_assert_eq!(b.transfer_in_cycles, b.matrix_transfer_in_cycles + b.vector_transfer_in_cycles);
            prop_assert_eq!(r.correct, Some(true));
            prop_assert_eq!(r.y.to_f64(), dense_product(&m, &vec![1; m.n_cols()]).iter().map(|&v| v as f64).collect::<Vec<_>>());
        }
    }
}

#[test]
fn broadcast_grows_with_cores_while_kernel_shrinks() {
    let m: TripletMatrix<i32> =
        generate_synthetic(SyntheticKind::UniformRandom { density: 0.02, seed: 1 }, 1024, 1024).unwrap();
    let mut last: Option<ExecutionReport> = None;
    for cores in [16, 64, 256, 1024] {
        let mut sim = SimConfig::default_preset();
        sim.machine = sim.machine.with_cores(cores);
        let r = run(&m, "1D-CSR.nnz", &sim);
        assert_eq!(r.transfers.vector_in.payload_bytes, (cores * 1024 * 4) as u64);
        if let Some(prev) = last {
            assert!(r.breakdown.vector_transfer_in_cycles > prev.breakdown.vector_transfer_in_cycles);
            assert!(r.breakdown.kernel_cycles < prev.breakdown.kernel_cycles);
        }
        last = Some(r);
    }
}

#[test]
fn amortizing_drops_only_the_matrix_transfer() {
    let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Banded { half_width: 3 }, 128, 128).unwrap();
    let spec = KernelSpec::from_name("1D-BCSR.block").unwrap();
    let sim = tiny(4);
    let x = vec![1; 128];
    let full = run_end_to_end(&m, &spec, &sim, &x, RunOptions::default()).unwrap();
    let amortized = run_end_to_end(
        &m,
        &spec,
        &sim,
        &x,
        RunOptions {
            amortize_matrix: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(
        full.breakdown.total_cycles - amortized.breakdown.total_cycles,
        full.breakdown.matrix_transfer_in_cycles
    );
    assert_eq!(full.y, amortized.y);
}

#[test]
fn identity_sweep_over_the_registry_is_correct() {
    let m: TripletMatrix<f64> = generate_synthetic(SyntheticKind::Identity, 16, 16).unwrap();
    let specs: Vec<KernelSpec> = kernel_registry()
        .iter()
        .map(|n| KernelSpec::from_name(n).unwrap().with_dtype(ElementType::Float64))
        .collect();
    let x: Vec<f64> = (0..16).map(|i| i as f64 * 0.5).collect();
    let out = sweep(&m, &specs, &SimConfig::tiny_preset(), &x, RunOptions::default());
    assert_eq!(out.entries.len(), 25);
    for e in &out.entries {
        let r = e
            .report
            .as_ref()
            .unwrap_or_else(|| panic!("{}: {:?}", e.kernel, e.error));
        assert_eq!(r.y.to_f64(), x, "{}", e.kernel);
    }
    let totals: Vec<u64> = out.reports().map(|r| r.breakdown.total_cycles).collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(out.best.as_deref(), Some(out.entries[0].kernel.as_str()));
}

#[test]
fn sweep_keeps_going_past_failures() {
    let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Dense, 2, 2).unwrap();
    let specs = vec![
        KernelSpec::from_name("1D-CSR.row").unwrap(),
        KernelSpec::from_name("1D-CSR.row")
            .unwrap()
            .with_dtype(ElementType::Int8),
    ];
    let out = sweep(&m, &specs, &tiny(2), &[1, 1], RunOptions::default());
    assert!(out.entries[0].report.is_some());
    assert!(out.entries[1].error.as_ref().unwrap().contains("int8"));
}

#[test]
fn wide_matrix_favours_two_dimensional_tiling() {
    // few rows, very many columns: broadcasting the whole vector dominates
    let m: TripletMatrix<i32> = generate_synthetic(
        SyntheticKind::UniformRandom {
            density: 0.01,
            seed: 11,
        },
        64,
        16384,
    )
    .unwrap();
    let sim = tiny(4);
    let best = |prefix: &str| {
        kernel_registry()
            .iter()
            .filter(|n| n.starts_with(prefix))
            .map(|n| run(&m, n, &sim).breakdown.total_cycles)
            .min()
            .unwrap()
    };
    let (one_d, two_d) = (best("1D-"), best("2D-"));
    assert!(two_d < one_d, "2D {two_d} vs 1D {one_d}");
}

#[test]
fn exact_split_evens_out_skewed_rows() {
    let m = zipf_1024::<i32>();
    let sim = tiny(64);
    let heaviest = |label| run(&m, label, &sim).cores.iter().map(|c| c.work_items).max().unwrap();
    let exact = heaviest("1D-COO.nnz");
    assert_eq!(exact, (m.nnz() as u64).div_ceil(64));
    assert!(exact * 2 <= heaviest("1D-CSR.row"));
}

#[test]
fn bad_inputs_are_reported() {
    let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Identity, 8, 8).unwrap();
    let spec = KernelSpec::from_name("1D-CSR.row").unwrap();
    let sim = tiny(2);
    let short = run_end_to_end(&m, &spec, &sim, &[1; 3], RunOptions::default()).unwrap_err();
    assert!(matches!(short, RunError::DimensionMismatch { expected: 8, got: 3 }));
    let f = m.cast::<f32>();
    let dtype = run_end_to_end(&f, &spec, &sim, &[1.0; 8], RunOptions::default()).unwrap_err();
    assert!(matches!(dtype, RunError::DtypeMismatch { .. }));

    let mut small = tiny(2);
    small.machine.bank_capacity_bytes = 64;
    let big: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Dense, 16, 16).unwrap();
    let cap = run_end_to_end(&big, &spec, &small, &[1; 16], RunOptions::default()).unwrap_err();
    assert!(cap.is_capacity(), "{cap}");
}

#[test]
fn reports_serialize() {
    let m = zipf_1024::<f32>();
    let spec = KernelSpec::from_name("2D-var-CSR.row")
        .unwrap()
        .with_dtype(ElementType::Float32);
    let r = run_end_to_end(&m, &spec, &tiny(4), &vec![1.0; 1024], RunOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["matrix"]["nnz"], 7628);
    assert_eq!(v["y"].as_array().unwrap().len(), 1024);
    assert_eq!(r.csv_record().len(), pim_spmv::runtime::CSV_HEADER.len());
}
