//! Host-side orchestration of one SpMV on the simulated machine.
//!
//! Phases run in order and never overlap:
//!
//! 1. transfer in: one parallel transfer of every core's tile, then one of
//!    every core's input-vector payload (the whole vector for 1D plans, the
//!    tile's column segment for 2D plans);
//! 2. kernel: every core runs its tile; the phase lasts as long as the
//!    slowest core;
//! 3. transfer out: one parallel transfer of every core's partial output;
//! 4. merge: the host folds partials of rows shared by several cores, in
//!    ascending core order.
//!
//! The assembled output is checked against [`spmv_oracle`] unless
//! verification is turned off.

mod oracle;
mod report;
mod sweep;

use rayon::prelude::*;

use crate::formats::{FormattedMatrix, Scalar, TripletMatrix};
use crate::kernels::{run_core, KernelError, KernelSpec};
use crate::machine::{
    check_capacity, core_time, machine_kernel_time, parallel_transfer, price, Direction, MachineError, SimConfig,
};
use crate::partition::{plan, plan_stats, CoreBalancing, MatrixMeta, PartitionError, PartitionPlan};

pub use oracle::{row_scales, spmv_oracle};
pub use report::{CoreSummary, ExecutionReport, MatrixSummary, TimeBreakdown, Transfers, CSV_HEADER, SCHEMA_VERSION};
pub use sweep::{sweep, FailureKind, SweepEntry, SweepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Compare the result against the reference oracle.
    pub verify: bool,
    /// Leave the matrix transfer out of the total, as when the matrix stays
    /// resident across many multiplications.
    pub amortize_matrix: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            verify: true,
            amortize_matrix: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("kernel is configured for {expected} but the matrix holds {got}")]
    DtypeMismatch {
        expected: crate::formats::ElementType,
        got: crate::formats::ElementType,
    },
    #[error("input vector has {got} elements, matrix has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("result differs from the reference at index {index}: got {got}, expected {expected}")]
    OracleMismatch {
        index: usize,
        got: String,
        expected: String,
    },
}

impl RunError {
    pub fn is_capacity(&self) -> bool {
        matches!(self, RunError::Machine(MachineError::Capacity { .. }))
    }
}

/// Cuts the matrix into tile-local sub-matrices, one per core.
pub fn extract_tiles<T: Scalar>(m: &TripletMatrix<T>, plan: &PartitionPlan) -> Vec<TripletMatrix<T>> {
    plan.tiles
        .par_iter()
        .map(|t| {
            if plan.balancing == CoreBalancing::NnzExact {
                m.entry_slice(t.entry_range.clone(), t.row_range.start, t.row_range.len())
            } else {
                m.submatrix(t.row_range.clone(), t.col_range.clone())
            }
        })
        .collect()
}

/// The partition plan a spec uses on `m` with `n_cores` cores.
pub fn plan_for<T: Scalar>(m: &TripletMatrix<T>, spec: &KernelSpec, n_cores: usize) -> Result<PartitionPlan, RunError> {
    let meta = MatrixMeta::for_format(m, spec.format, spec.block);
    Ok(plan(&meta, spec.scheme(n_cores)?, spec.core_balancing, n_cores)?)
}

/// Runs one SpMV end to end and reports its modeled cost.
pub fn run_end_to_end<T: Scalar>(
    m: &TripletMatrix<T>,
    spec: &KernelSpec,
    sim: &SimConfig,
    x: &[T],
    opts: RunOptions,
) -> Result<ExecutionReport, RunError> {
    if spec.dtype != T::DTYPE {
        return Err(RunError::DtypeMismatch {
            expected: spec.dtype,
            got: T::DTYPE,
        });
    }
    if x.len() != m.n_cols() {
        return Err(RunError::DimensionMismatch {
            expected: m.n_cols(),
            got: x.len(),
        });
    }
    sim.validate()?;
    let (mc, cm) = (&sim.machine, &sim.cost);
    let width = T::DTYPE.width_bytes();

    let plan = plan_for(m, spec, mc.n_cores)?;
    let tiles: Vec<FormattedMatrix<T>> = extract_tiles(m, &plan)
        .par_iter()
        .map(|t| FormattedMatrix::build(t, spec.format, spec.block))
        .collect();

    // transfer in
    let tile_bytes: Vec<usize> = tiles.iter().map(FormattedMatrix::storage_bytes).collect();
    check_capacity(&plan, &tile_bytes, width, mc)?;
    let matrix_payloads: Vec<u64> = tile_bytes.iter().map(|&b| b as u64).collect();
    let vector_payloads: Vec<u64> = plan.vector_segments.iter().map(|s| (s.len() * width) as u64).collect();
    let matrix_in = parallel_transfer(&matrix_payloads, Direction::ToBanks, mc, cm)?;
    let vector_in = parallel_transfer(&vector_payloads, Direction::ToBanks, mc, cm)?;

    // kernel
    let results = tiles
        .par_iter()
        .zip(plan.vector_segments.par_iter())
        .map(|(tile, seg)| {
            let mut res = run_core(tile, &x[seg.clone()], spec, mc.threads_per_core)?;
            price(&mut res.stats, spec.dtype, cm);
            let cycles = core_time(&res.stats, cm);
            Ok((res, cycles))
        })
        .collect::<Result<Vec<_>, KernelError>>()?;
    let core_cycles: Vec<u64> = results.iter().map(|(_, c)| *c).collect();
    let kernel_cycles = machine_kernel_time(&core_cycles);

    // transfer out
    let out_payloads: Vec<u64> = plan.tiles.iter().map(|t| (t.row_range.len() * width) as u64).collect();
    let output = parallel_transfer(&out_payloads, Direction::FromBanks, mc, cm)?;

    // merge
    let mut y = vec![T::zero(); m.n_rows()];
    for (tile, (res, _)) in plan.tiles.iter().zip(&results) {
        for (slot, &v) in y[tile.row_range.clone()].iter_mut().zip(&res.partial_y) {
            *slot = slot.add(v);
        }
    }
    let merge_cycles = plan.merged_elements() as u64 * cm.merge_cycles_per_element;

    let correct = if opts.verify {
        verify(m, x, &y)?;
        Some(true)
    } else {
        None
    };

    let cores = plan
        .tiles
        .iter()
        .zip(&results)
        .map(|(tile, (res, cycles))| CoreSummary {
            core: tile.core_id,
            rows: tile.row_range.len(),
            cols: tile.col_range.len(),
            nnz: tile.nnz,
            units: tile.units,
            threads: res.stats.len(),
            cycles: *cycles,
            work_items: res.stats.iter().map(|s| s.work_items).sum(),
            mem_words: res.stats.iter().map(|s| s.mem_words).sum(),
            lock_ops: res.stats.iter().map(|s| s.lock_ops()).sum(),
        })
        .collect();

    let counted_matrix = if opts.amortize_matrix { 0 } else { matrix_in.cycles };
    let transfer_in_cycles = counted_matrix + vector_in.cycles;
    let breakdown = TimeBreakdown {
        matrix_transfer_in_cycles: matrix_in.cycles,
        vector_transfer_in_cycles: vector_in.cycles,
        matrix_amortized: opts.amortize_matrix,
        transfer_in_cycles,
        kernel_cycles,
        transfer_out_cycles: output.cycles,
        merge_cycles,
        total_cycles: transfer_in_cycles + kernel_cycles + output.cycles + merge_cycles,
    };
    Ok(ExecutionReport {
        schema_version: SCHEMA_VERSION,
        kernel: spec.label(),
        spec: *spec,
        machine: *mc,
        cost: *cm,
        matrix: MatrixSummary {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            nnz: m.nnz(),
        },
        breakdown,
        transfers: Transfers {
            matrix_in,
            vector_in,
            output,
        },
        padding_bytes: matrix_in.padding_bytes() + vector_in.padding_bytes() + output.padding_bytes(),
        balance: plan_stats(&plan, width),
        cores,
        correct,
        y: T::into_typed(y),
    })
}

fn verify<T: Scalar>(m: &TripletMatrix<T>, x: &[T], y: &[T]) -> Result<(), RunError> {
    let expected = spmv_oracle(m, x);
    let scales = row_scales(m, x);
    match (0..y.len()).find(|&i| !y[i].close_to(expected[i], scales[i])) {
        Some(index) => Err(RunError::OracleMismatch {
            index,
            got: y[index].to_string(),
            expected: expected[index].to_string(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{generate_synthetic, SyntheticKind, TypedVec};

    fn tiny(cores: usize) -> SimConfig {
        let mut sim = SimConfig::tiny_preset();
        sim.machine = sim.machine.with_cores(cores);
        sim
    }

    fn spec(name: &str) -> KernelSpec {
        KernelSpec::from_name(name).unwrap()
    }

    #[test]
    fn identity_broadcast() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Identity, 8, 8).unwrap();
        let x: Vec<i32> = (1..=8).collect();
        let r = run_end_to_end(&m, &spec("1D-CSR.row"), &tiny(4), &x, RunOptions::default()).unwrap();
        assert_eq!(r.y, TypedVec::Int32(x.clone()));
        assert_eq!(r.transfers.vector_in.payload_bytes, 4 * 8 * 4);
        assert_eq!(r.correct, Some(true));
        let b = r.breakdown;
        assert_eq!(
            b.total_cycles,
            b.transfer_in_cycles + b.kernel_cycles + b.transfer_out_cycles + b.merge_cycles
        );
    }

    #[test]
    fn equally_sized_gather_and_merge() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Dense, 8, 8).unwrap();
        let x = vec![1; 8];
        let s = spec("2D-eqs-CSR.row").with_grid(2, 2).unwrap();
        let r = run_end_to_end(&m, &s, &tiny(4), &x, RunOptions::default()).unwrap();
        assert_eq!(r.transfers.output.payload_bytes, 4 * 4 * 4);
        assert_eq!(r.transfers.output.padding_bytes(), 0);
        // every row is shared by two tiles
        assert_eq!(r.breakdown.merge_cycles, 16);
        assert_eq!(r.correct, Some(true));
    }

    #[test]
    fn amortized_matrix_leaves_total() {
        let m: TripletMatrix<f32> = generate_synthetic(SyntheticKind::Banded { half_width: 1 }, 16, 16).unwrap();
        let x = vec![1.0; 16];
        let opts = RunOptions {
            verify: true,
            amortize_matrix: true,
        };
        let full = run_end_to_end(
            &m,
            &spec("1D-CSR.nnz").with_dtype(crate::formats::ElementType::Float32),
            &tiny(4),
            &x,
            RunOptions::default(),
        )
        .unwrap();
        let amortized = run_end_to_end(
            &m,
            &spec("1D-CSR.nnz").with_dtype(crate::formats::ElementType::Float32),
            &tiny(4),
            &x,
            opts,
        )
        .unwrap();
        assert_eq!(
            full.breakdown.total_cycles - amortized.breakdown.total_cycles,
            full.breakdown.matrix_transfer_in_cycles
        );
    }

    #[test]
    fn errors() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Identity, 8, 8).unwrap();
        let x = vec![1; 8];
        assert!(matches!(
            run_end_to_end(
                &m,
                &spec("1D-CSR.row").with_dtype(crate::formats::ElementType::Int8),
                &tiny(4),
                &x,
                RunOptions::default()
            ),
            Err(RunError::DtypeMismatch { .. })
        ));
        assert!(matches!(
            run_end_to_end(&m, &spec("1D-CSR.row"), &tiny(4), &x[..3], RunOptions::default()),
            Err(RunError::DimensionMismatch { .. })
        ));
        let mut small = tiny(4);
        small.machine.bank_capacity_bytes = 16;
        let err = run_end_to_end(&m, &spec("1D-CSR.row"), &small, &x, RunOptions::default()).unwrap_err();
        assert!(err.is_capacity());
    }
}
