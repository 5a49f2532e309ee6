use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pim_spmv::{ElementType, SyncMode, ThreadBalancing};

/// Sparse matrix-vector multiplication on a simulated processing-in-memory
/// machine.
///
/// Every command takes a matrix from a Matrix Market file (`--matrix`) or a
/// synthetic generator (`--gen`). Costs are reported in cycles of the
/// selected machine model (`--machine default|tiny|FILE.json`).
///
/// Exit codes: 0 success, 1 verification failure, 2 usage or input error,
/// 3 bank capacity exceeded.
#[derive(Debug, Parser)]
#[command(name = "pim-spmv", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sparsity statistics of a matrix, optionally with a partition plan.
    Info(InfoArgs),
    /// Run one kernel and print its execution report.
    Run(RunArgs),
    /// Run many kernels on one matrix and tabulate them.
    Sweep(SweepArgs),
    /// Check kernels against the reference result.
    Verify(VerifyArgs),
    /// Print the kernel registry, one name per line.
    ListKernels(ListArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Matrix Market coordinate file.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Synthetic matrix: identity, dense, banded:B, uniform:DENSITY or
    /// zipf:EXPONENT:AVG_NNZ_PER_ROW.
    #[arg(long = "gen", value_name = "KIND")]
    pub generator: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub source: Source,
    /// Generated matrix size, `N` or `ROWSxCOLS`.
    #[arg(long, default_value = "64", value_name = "N|RxC")]
    pub size: String,
    /// Seed for random generators (required by uniform and zipf).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct MachineArgs {
    /// Machine preset (`default`, `tiny`) or JSON configuration file.
    #[arg(long, default_value = "default", value_name = "PRESET|FILE")]
    pub machine: String,
    /// Override the number of PIM cores.
    #[arg(long)]
    pub cores: Option<usize>,
    /// Override the threads per core.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Element type: int8, int16, int32, int64, float32, float64.
    #[arg(long)]
    pub dtype: Option<ElementType>,
    /// Synchronization: lock_free, coarse_lock, fine_grained_lock.
    #[arg(long)]
    pub sync: Option<SyncMode>,
    /// Thread balancing: rows, nnz, blocks.
    #[arg(long)]
    pub thread_balancing: Option<ThreadBalancing>,
    /// 2D grid `PRxPC`; must multiply to the core count.
    #[arg(long, value_name = "PRxPC")]
    pub grid: Option<String>,
    /// Block shape for BCSR/BCOO.
    #[arg(long, num_args = 2, value_names = ["R", "C"])]
    pub block: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Leave the matrix transfer out of total cycles.
    #[arg(long)]
    pub amortize_matrix: bool,
    /// Skip the comparison against the reference result.
    #[arg(long)]
    pub no_verify: bool,
    /// Input vector as whitespace-separated values (default: all ones).
    #[arg(long, value_name = "FILE")]
    pub x_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    /// Block shape used for the fill ratio.
    #[arg(long, num_args = 2, value_names = ["R", "C"])]
    pub block: Option<Vec<usize>>,
    /// Also print the partition plan this kernel would use.
    #[arg(long, value_name = "KERNEL")]
    pub plan: Option<String>,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(short, long, value_enum, default_value = "table")]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Kernel name or label, e.g. `1D-CSR.nnz` or `1D-COO.nnz[s=fine_grained_lock]`.
    pub kernel: String,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[command(flatten)]
    pub kernel_opts: KernelArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// Also print the partition plan.
    #[arg(long)]
    pub plan: bool,
    #[arg(short, long, value_enum, default_value = "json")]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Kernels to run (default: the whole registry).
    pub kernels: Vec<String>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[command(flatten)]
    pub kernel_opts: KernelArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// Run every kernel once per sync mode that is legal for it.
    #[arg(long)]
    pub all_sync: bool,
    #[arg(short, long, value_enum, default_value = "csv")]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Kernels to check (default: the whole registry).
    pub kernels: Vec<String>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[command(flatten)]
    pub kernel_opts: KernelArgs,
    /// Check every element type instead of `--dtype` only.
    #[arg(long)]
    pub all_dtypes: bool,
    /// Check every sync mode legal for each kernel.
    #[arg(long)]
    pub all_sync: bool,
    /// Input vector file.
    #[arg(long, value_name = "FILE")]
    pub x_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// List the sparse formats instead.
    #[arg(long, group = "what")]
    pub formats: bool,
    /// List the element types instead.
    #[arg(long, group = "what")]
    pub dtypes: bool,
    /// List the synchronization modes instead.
    #[arg(long, group = "what")]
    pub sync_modes: bool,
    /// List the thread balancing schemes instead.
    #[arg(long, group = "what")]
    pub thread_balancings: bool,
}
