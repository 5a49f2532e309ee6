//! Sparse matrix-vector multiplication on a simulated near-bank
//! processing-in-memory machine.
//!
//! * [`formats`]: ingestion and the CSR/COO/BCSR/BCOO representations;
//! * [`partition`]: 1D and 2D assignment of tiles to cores;
//! * [`machine`]: geometry and the cycle cost model;
//! * [`kernels`]: per-core thread scheduling, synchronization and arithmetic;
//! * [`runtime`]: end-to-end runs, verification and sweeps.

pub mod formats;
pub mod kernels;
pub mod machine;
pub mod partition;
pub mod runtime;

pub use formats::{
    generate_synthetic, parse_matrix_market, BlockShape, ElementType, FormatError, FormattedMatrix, Scalar,
    SparseFormat, SyntheticKind, TripletMatrix, TypedVec,
};
pub use kernels::{kernel_registry, KernelError, KernelSpec, Layout, SyncMode, ThreadBalancing};
pub use machine::{CostModel, MachineConfig, MachineError, SimConfig, ThreadStats, TransferCost};
pub use partition::{CoreBalancing, PartitionPlan, PartitionScheme};
pub use runtime::{run_end_to_end, spmv_oracle, sweep, ExecutionReport, RunError, RunOptions, SweepOutcome};
