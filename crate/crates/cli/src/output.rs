//! Text, CSV and JSON renderings.

use std::io::{self, Write};

use pim_spmv::partition::BalanceStats;
use pim_spmv::runtime::{MatrixSummary, SweepOutcome, CSV_HEADER, SCHEMA_VERSION};
use pim_spmv::{
    BlockShape, ElementType, ExecutionReport, MachineConfig, PartitionPlan, Scalar, SimConfig, TripletMatrix,
};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct InfoReport {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    pub row_nnz_min: usize,
    pub row_nnz_max: usize,
    pub row_nnz_mean: f64,
    /// Population standard deviation over mean of per-row counts.
    pub row_nnz_cv: f64,
    pub empty_rows: usize,
    pub bandwidth: usize,
    pub block: BlockShape,
    pub block_fill_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PartitionPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceStats>,
}

const INFO_FIELDS: [&str; 11] = [
    "n_rows",
    "n_cols",
    "nnz",
    "row_nnz_min",
    "row_nnz_max",
    "row_nnz_mean",
    "row_nnz_cv",
    "empty_rows",
    "bandwidth",
    "block",
    "block_fill_ratio",
];

fn info_values(r: &InfoReport) -> [String; 11] {
    [
        r.n_rows.to_string(),
        r.n_cols.to_string(),
        r.nnz.to_string(),
        r.row_nnz_min.to_string(),
        r.row_nnz_max.to_string(),
        format!("{:.6}", r.row_nnz_mean),
        format!("{:.6}", r.row_nnz_cv),
        r.empty_rows.to_string(),
        r.bandwidth.to_string(),
        format!("{}x{}", r.block.r, r.block.c),
        format!("{:.6}", r.block_fill_ratio),
    ]
}

pub fn info_table(out: &mut impl Write, r: &InfoReport) -> io::Result<()> {
    for (k, v) in INFO_FIELDS.iter().zip(info_values(r)) {
        writeln!(out, "{k:<18} {v}")?;
    }
    if let (Some(kernel), Some(plan), Some(b)) = (&r.kernel, &r.plan, &r.balance) {
        writeln!(out)?;
        writeln!(out, "plan for {kernel} on {} cores", plan.n_cores())?;
        writeln!(out, "{:<18} {}", "core_nnz_min", b.nnz_min)?;
        writeln!(out, "{:<18} {}", "core_nnz_max", b.nnz_max)?;
        writeln!(out, "{:<18} {:.6}", "core_nnz_mean", b.nnz_mean)?;
        writeln!(out, "{:<18} {:.6}", "core_nnz_cv", b.nnz_cv)?;
        writeln!(out, "{:<18} {}", "split_rows", b.split_rows)?;
        writeln!(out, "{:<18} {}", "vector_bytes", b.vector_segment_bytes)?;
        writeln!(out, "{}", plan.to_json())?;
    }
    Ok(())
}

pub fn info_csv(out: &mut impl Write, r: &InfoReport) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INFO_FIELDS)?;
    w.write_record(info_values(r))?;
    w.flush()
}

pub fn run_table(out: &mut impl Write, r: &ExecutionReport) -> io::Result<()> {
    let b = &r.breakdown;
    let pct = |v: u64| {
        if b.total_cycles == 0 {
            0.0
        } else {
            100.0 * v as f64 / b.total_cycles as f64
        }
    };
    writeln!(out, "kernel             {}", r.kernel)?;
    writeln!(
        out,
        "matrix             {}x{}, {} nnz",
        r.matrix.n_rows, r.matrix.n_cols, r.matrix.nnz
    )?;
    writeln!(
        out,
        "machine            {} cores x {} threads",
        r.machine.n_cores, r.machine.threads_per_core
    )?;
    let amortized = if b.matrix_amortized { " (not in total)" } else { "" };
    writeln!(out, "matrix in          {:>12}{amortized}", b.matrix_transfer_in_cycles)?;
    writeln!(out, "vector in          {:>12}", b.vector_transfer_in_cycles)?;
    for (name, v) in [
        ("transfer in", b.transfer_in_cycles),
        ("kernel", b.kernel_cycles),
        ("transfer out", b.transfer_out_cycles),
        ("merge", b.merge_cycles),
    ] {
        writeln!(out, "{name:<18} {v:>12}  {:5.1}%", pct(v))?;
    }
    writeln!(out, "total              {:>12}", b.total_cycles)?;
    writeln!(out, "padding bytes      {:>12}", r.padding_bytes)?;
    writeln!(out, "max core nnz       {:>12}", r.balance.nnz_max)?;
    let correct = r.correct.map_or("not checked".to_string(), |c| c.to_string());
    writeln!(out, "correct            {correct}")
}

pub fn reports_csv(out: &mut impl Write, reports: &[ExecutionReport]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()
}

/// One sweep row; numbers are absent when the kernel did not run.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub kernel: String,
    pub total_cycles: Option<u64>,
    pub matrix_in_cycles: Option<u64>,
    pub vector_in_cycles: Option<u64>,
    pub kernel_cycles: Option<u64>,
    pub transfer_out_cycles: Option<u64>,
    pub merge_cycles: Option<u64>,
    pub padding_bytes: Option<u64>,
    pub output_padding_bytes: Option<u64>,
    pub max_core_nnz: Option<usize>,
    pub correct: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub matrix: MatrixSummary,
    pub dtype: ElementType,
    pub machine: MachineConfig,
    pub best: Option<String>,
    /// Sorted by kernel label.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn new<T: Scalar>(m: &TripletMatrix<T>, dtype: ElementType, sim: &SimConfig, outcome: &SweepOutcome) -> Self {
        let mut rows: Vec<SweepRow> = outcome
            .entries
            .iter()
            .map(|e| {
                let r = e.report.as_ref();
                let b = r.map(|r| r.breakdown);
                SweepRow {
                    kernel: e.kernel.clone(),
                    total_cycles: b.map(|b| b.total_cycles),
                    matrix_in_cycles: b.map(|b| b.matrix_transfer_in_cycles),
                    vector_in_cycles: b.map(|b| b.vector_transfer_in_cycles),
                    kernel_cycles: b.map(|b| b.kernel_cycles),
                    transfer_out_cycles: b.map(|b| b.transfer_out_cycles),
                    merge_cycles: b.map(|b| b.merge_cycles),
                    padding_bytes: r.map(|r| r.padding_bytes),
                    output_padding_bytes: r.map(|r| r.transfers.output.padding_bytes()),
                    max_core_nnz: r.map(|r| r.balance.nnz_max),
                    correct: r.and_then(|r| r.correct),
                    error: e.error.clone(),
                }
            })
            .collect();
        rows.sort_by(|a, b| a.kernel.cmp(&b.kernel));
        Self {
            schema_version: SCHEMA_VERSION,
            matrix: MatrixSummary {
                n_rows: m.n_rows(),
                n_cols: m.n_cols(),
                nnz: m.nnz(),
            },
            dtype,
            machine: sim.machine,
            best: outcome.best.clone(),
            rows,
        }
    }
}

/// CSV rows sorted by kernel label.
pub fn sweep_csv(out: &mut impl Write, outcome: &SweepOutcome) -> io::Result<()> {
    let mut records: Vec<Vec<String>> = outcome
        .entries
        .iter()
        .map(|e| match (&e.report, &e.error) {
            (Some(r), _) => r.csv_record(),
            (None, err) => ExecutionReport::csv_error_record(&e.kernel, err.as_deref().unwrap_or_default()),
        })
        .collect();
    records.sort_by(|a, b| a[0].cmp(&b[0]));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()
}

pub fn sweep_table(out: &mut impl Write, t: &SweepTable) -> io::Result<()> {
    let width = t.rows.iter().map(|r| r.kernel.len()).max().unwrap_or(6).max(6);
    writeln!(
        out,
        "{:<width$} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}  correct",
        "kernel", "total", "in", "kernel", "out", "merge", "padding"
    )?;
    let num = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
    for r in &t.rows {
        let transfer_in = match (r.matrix_in_cycles, r.vector_in_cycles) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let status = match (&r.error, r.correct) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => c.to_string(),
            (None, None) => "-".to_string(),
        };
        writeln!(
            out,
            "{:<width$} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}  {status}",
            r.kernel,
            num(r.total_cycles),
            num(transfer_in),
            num(r.kernel_cycles),
            num(r.transfer_out_cycles),
            num(r.merge_cycles),
            num(r.padding_bytes),
        )?;
    }
    if let Some(best) = &t.best {
        writeln!(out, "best: {best}")?;
    }
    Ok(())
}
