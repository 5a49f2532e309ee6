//! Execution reports and their JSON/CSV forms.

use serde::Serialize;

use crate::formats::TypedVec;
use crate::kernels::KernelSpec;
use crate::machine::{CostModel, MachineConfig, TransferCost};
use crate::partition::BalanceStats;

pub const SCHEMA_VERSION: u32 = 1;

/// Column names of [`ExecutionReport::csv_record`], in order. The last
/// column holds an error message for rows that did not run.
pub const CSV_HEADER: [&str; 25] = [
    "kernel",
    "format",
    "layout",
    "core_balancing",
    "thread_balancing",
    "sync",
    "dtype",
    "n_cores",
    "threads_per_core",
    "n_rows",
    "n_cols",
    "nnz",
    "total_cycles",
    "matrix_in_cycles",
    "vector_in_cycles",
    "kernel_cycles",
    "transfer_out_cycles",
    "merge_cycles",
    "padding_bytes",
    "output_padding_bytes",
    "vector_in_bytes",
    "max_core_nnz",
    "nnz_cv",
    "correct",
    "error",
];

/// Phase cycles. `total_cycles = transfer_in_cycles + kernel_cycles +
/// transfer_out_cycles + merge_cycles`, where `transfer_in_cycles` covers the
/// vector and, unless amortized, the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeBreakdown {
    pub matrix_transfer_in_cycles: u64,
    pub vector_transfer_in_cycles: u64,
    pub matrix_amortized: bool,
    pub transfer_in_cycles: u64,
    pub kernel_cycles: u64,
    pub transfer_out_cycles: u64,
    pub merge_cycles: u64,
    pub total_cycles: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transfers {
    pub matrix_in: TransferCost,
    pub vector_in: TransferCost,
    pub output: TransferCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatrixSummary {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoreSummary {
    pub core: usize,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    /// Entries or blocks.
    pub units: usize,
    pub threads: usize,
    pub cycles: u64,
    pub work_items: u64,
    pub mem_words: u64,
    pub lock_ops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionReport {
    pub schema_version: u32,
    pub kernel: String,
    pub spec: KernelSpec,
    pub machine: MachineConfig,
    pub cost: CostModel,
    pub matrix: MatrixSummary,
    pub breakdown: TimeBreakdown,
    pub transfers: Transfers,
    /// Padding over all three transfers.
    pub padding_bytes: u64,
    pub balance: BalanceStats,
    pub cores: Vec<CoreSummary>,
    /// `None` when verification was skipped.
    pub correct: Option<bool>,
    pub y: TypedVec,
}

impl ExecutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_record(&self) -> Vec<String> {
        let b = &self.breakdown;
        let s = &self.spec;
        vec![
            self.kernel.clone(),
            s.format.to_string(),
            s.layout.prefix().to_string(),
            s.core_balancing.to_string(),
            s.thread_balancing.to_string(),
            s.sync.to_string(),
            s.dtype.to_string(),
            self.machine.n_cores.to_string(),
            self.machine.threads_per_core.to_string(),
            self.matrix.n_rows.to_string(),
            self.matrix.n_cols.to_string(),
            self.matrix.nnz.to_string(),
            b.total_cycles.to_string(),
            b.matrix_transfer_in_cycles.to_string(),
            b.vector_transfer_in_cycles.to_string(),
            b.kernel_cycles.to_string(),
            b.transfer_out_cycles.to_string(),
            b.merge_cycles.to_string(),
            self.padding_bytes.to_string(),
            self.transfers.output.padding_bytes().to_string(),
            self.transfers.vector_in.payload_bytes.to_string(),
            self.balance.nnz_max.to_string(),
            format!("{:.6}", self.balance.nnz_cv),
            self.correct.map_or_else(String::new, |c| c.to_string()),
            String::new(),
        ]
    }

    /// A CSV row for a kernel that failed before producing a report.
    pub fn csv_error_record(kernel: &str, error: &str) -> Vec<String> {
        let mut row = vec![String::new(); CSV_HEADER.len()];
        row[0] = kernel.to_string();
        row[CSV_HEADER.len() - 1] = error.to_string();
        row
    }
}
