//! Executing one core's share of an SpMV and counting its events.
//!
//! Every thread accumulates into private per-row accumulators in storage
//! order, then flushes them into the tile's output in thread-index order
//! (under the sync mode's locks). Integer results are therefore identical
//! in every sync mode, and float results are reproducible.
//!
//! Bank words moved per thread:
//!
//! | format      | per walked row | per entry / block    | per output row |
//! |-------------|----------------|----------------------|----------------|
//! | CSR         | 1 (row_ptr)    | 3 (col, value, x)    | 1              |
//! | COO         |                | 4 (row, col, value, x) | 1            |
//! | BCSR / BCOO |                | `r*c + 2 + c`        | 1              |
//!
//! Blocked kernels multiply whole tiles, fill zeros included.

use super::schedule::{schedule_threads, Schedule};
use super::{KernelError, KernelSpec};
use crate::formats::{BlockShape, FormattedMatrix, Scalar, SparseFormat};
use crate::machine::ThreadStats;

/// What one thread touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounts {
    /// Rows whose `row_ptr` pair was read (CSR).
    pub rows_walked: u64,
    pub entries: u64,
    pub blocks: u64,
    /// Distinct block rows visited (BCSR loop control).
    pub block_rows_walked: u64,
    pub produced_rows: u64,
}

/// Bank words read and written for the given work, per the table in the
/// module docs. `shape` is required for blocked formats.
pub fn mem_words_for(format: SparseFormat, shape: BlockShape, w: &WorkCounts) -> u64 {
    let (r, c) = (shape.r as u64, shape.c as u64);
    match format {
        SparseFormat::Csr => w.rows_walked + 3 * w.entries + w.produced_rows,
        SparseFormat::Coo => 4 * w.entries + w.produced_rows,
        SparseFormat::Bcsr | SparseFormat::Bcoo => w.blocks * (r * c + 2 + c) + w.produced_rows,
    }
}

fn thread_stats(format: SparseFormat, shape: BlockShape, w: &WorkCounts, lock_ops: u64) -> ThreadStats {
    let (r, cells) = (shape.r as u64, shape.cells() as u64);
    let (work_items, mac_ops, loop_iters) = match format {
        SparseFormat::Csr => (w.entries, w.entries, w.rows_walked + w.entries),
        SparseFormat::Coo => (w.entries, w.entries, w.entries),
        SparseFormat::Bcsr => (w.blocks, w.blocks * cells, w.block_rows_walked + w.blocks * (1 + r)),
        SparseFormat::Bcoo => (w.blocks, w.blocks * cells, w.blocks * (1 + r)),
    };
    ThreadStats {
        work_items,
        mac_ops,
        loop_iters,
        compute_cycles: 0,
        mem_words: mem_words_for(format, shape, w),
        lock_acquires: lock_ops / 2,
        lock_releases: lock_ops / 2,
        barriers: 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreResult<T> {
    /// One value per row of the tile's row range.
    pub partial_y: Vec<T>,
    /// One entry per thread used. `compute_cycles` is left at zero for the
    /// machine model to price.
    pub stats: Vec<ThreadStats>,
    pub schedule: Schedule,
}

/// Private accumulators of one thread: `(tile-local row, value)` in row
/// order.
type Partials<T> = Vec<(usize, T)>;

/// Runs the kernel on one tile (tile-local coordinates) against its input
/// segment.
pub fn run_core<T: Scalar>(
    tile: &FormattedMatrix<T>,
    x_segment: &[T],
    spec: &KernelSpec,
    n_threads: usize,
) -> Result<CoreResult<T>, KernelError> {
    if tile.format() != spec.format {
        return Err(KernelError::FormatMismatch {
            expected: spec.format,
            got: tile.format(),
        });
    }
    let (n_rows, n_cols) = tile.dims();
    if x_segment.len() != n_cols {
        return Err(KernelError::DimensionMismatch {
            expected: n_cols,
            got: x_segment.len(),
        });
    }
    let schedule = schedule_threads(tile, n_threads, spec)?;
    let shape = match tile {
        FormattedMatrix::Bcsr(m) => m.shape,
        FormattedMatrix::Bcoo(m) => m.shape,
        _ => spec.block,
    };
    let mut partial_y = vec![T::zero(); n_rows];
    let mut stats = Vec::with_capacity(schedule.threads.len());
    for work in &schedule.threads {
        let (partials, counts) = match tile {
            FormattedMatrix::Csr(m) => csr_thread(m, x_segment, work.range.clone()),
            FormattedMatrix::Coo(m) => coo_thread(m, x_segment, work.range.clone()),
            FormattedMatrix::Bcsr(m) => {
                let row_of = |k: usize| m.block_row_ptr.partition_point(|&p| p <= k) - 1;
                blocked_thread(
                    m.shape,
                    n_rows,
                    x_segment,
                    work.range.clone(),
                    row_of,
                    |k| m.block_col_idx[k],
                    |k| m.tile(k),
                )
            }
            FormattedMatrix::Bcoo(m) => blocked_thread(
                m.shape,
                n_rows,
                x_segment,
                work.range.clone(),
                |k| m.block_row[k],
                |k| m.block_col[k],
                |k| m.tile(k),
            ),
        };
        for (row, v) in partials {
            partial_y[row] = partial_y[row].add(v);
        }
        stats.push(thread_stats(spec.format, shape, &counts, work.lock_ops));
    }
    Ok(CoreResult {
        partial_y,
        stats,
        schedule,
    })
}

fn csr_thread<T: Scalar>(
    m: &crate::formats::CsrMatrix<T>,
    x: &[T],
    rows: std::ops::Range<usize>,
) -> (Partials<T>, WorkCounts) {
    let mut out = Vec::with_capacity(rows.len());
    let mut counts = WorkCounts::default();
    for i in rows {
        let mut acc = T::zero();
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            acc = T::mul_add(acc, m.values[k], x[m.col_idx[k]]);
        }
        counts.entries += (m.row_ptr[i + 1] - m.row_ptr[i]) as u64;
        counts.rows_walked += 1;
        out.push((i, acc));
    }
    counts.produced_rows = out.len() as u64;
    (out, counts)
}

fn coo_thread<T: Scalar>(
    m: &crate::formats::CooMatrix<T>,
    x: &[T],
    entries: std::ops::Range<usize>,
) -> (Partials<T>, WorkCounts) {
    let mut out: Partials<T> = Vec::new();
    let mut counts = WorkCounts::default();
    for k in entries {
        let row = m.rows[k];
        match out.last_mut() {
            Some((r, acc)) if *r == row => *acc = T::mul_add(*acc, m.values[k], x[m.cols[k]]),
            _ => out.push((row, T::mul_add(T::zero(), m.values[k], x[m.cols[k]]))),
        }
        counts.entries += 1;
    }
    counts.produced_rows = out.len() as u64;
    (out, counts)
}

fn blocked_thread<'a, T: Scalar + 'a>(
    shape: BlockShape,
    n_rows: usize,
    x: &[T],
    blocks: std::ops::Range<usize>,
    block_row: impl Fn(usize) -> usize,
    block_col: impl Fn(usize) -> usize,
    tile: impl Fn(usize) -> &'a [T],
) -> (Partials<T>, WorkCounts) {
    let (r, c) = (shape.r, shape.c);
    let mut out: Partials<T> = Vec::new();
    let mut counts = WorkCounts::default();
    let mut acc = vec![T::zero(); r];
    let mut current: Option<usize> = None;
    let flush = |br: usize, acc: &mut Vec<T>, out: &mut Partials<T>| {
        for (rr, a) in acc.iter_mut().enumerate() {
            let row = br * r + rr;
            if row < n_rows {
                out.push((row, *a));
            }
            *a = T::zero();
        }
    };
    for k in blocks {
        let br = block_row(k);
        if current != Some(br) {
            if let Some(prev) = current {
                flush(prev, &mut acc, &mut out);
            }
            current = Some(br);
            counts.block_rows_walked += 1;
        }
        let col0 = block_col(k) * c;
        let values = tile(k);
        for (rr, a) in acc.iter_mut().enumerate() {
            for cc in 0..c {
                // Edge blocks hang past the last column; those cells are
                // zero fill with no input element behind them.
                if let Some(&xv) = x.get(col0 + cc) {
                    *a = T::mul_add(*a, values[rr * c + cc], xv);
                }
            }
        }
        counts.blocks += 1;
    }
    if let Some(br) = current {
        flush(br, &mut acc, &mut out);
    }
    counts.produced_rows = out.len() as u64;
    (out, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{generate_synthetic, SyntheticKind, TripletMatrix};
    use crate::kernels::{SyncMode, ThreadBalancing};

    fn build<T: Scalar>(m: &TripletMatrix<T>, format: SparseFormat) -> FormattedMatrix<T> {
        FormattedMatrix::build(m, format, BlockShape { r: 2, c: 2 })
    }

    fn spec_for(format: SparseFormat, sync: SyncMode) -> KernelSpec {
        let name = match format {
            SparseFormat::Csr => "1D-CSR.row",
            SparseFormat::Coo => "1D-COO.row",
            SparseFormat::Bcsr => "1D-BCSR.block",
            SparseFormat::Bcoo => "1D-BCOO.block",
        };
        let mut spec = KernelSpec::from_name(name)
            .unwrap()
            .with_block(BlockShape { r: 2, c: 2 });
        if format.is_blocked() && sync == SyncMode::LockFree {
            spec = spec.with_thread_balancing(ThreadBalancing::Rows).unwrap();
        }
        spec.with_sync(sync)
    }

    fn dense_oracle(m: &TripletMatrix<i32>, x: &[i32]) -> Vec<i32> {
        let mut dense = vec![vec![0i32; m.n_cols()]; m.n_rows()];
        for (i, j, v) in m.triples() {
            dense[i][j] = v;
        }
        dense
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(0i32, |a, (v, xv)| a.wrapping_add(v.wrapping_mul(*xv)))
            })
            .collect()
    }

    #[test]
    fn formula_examples() {
        let csr_row = WorkCounts {
            rows_walked: 1,
            entries: 3,
            produced_rows: 1,
            ..Default::default()
        };
        assert_eq!(mem_words_for(SparseFormat::Csr, BlockShape::default(), &csr_row), 11);
        let coo_entry = WorkCounts {
            entries: 1,
            ..Default::default()
        };
        assert_eq!(mem_words_for(SparseFormat::Coo, BlockShape::default(), &coo_entry), 4);
        let block = WorkCounts {
            blocks: 1,
            ..Default::default()
        };
        assert_eq!(
            mem_words_for(SparseFormat::Bcsr, BlockShape::default(), &block),
            16 + 2 + 4
        );
    }

    #[test]
    fn identity_tile_copies_segment() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Identity, 5, 5).unwrap();
        let x = [3, 1, 4, 1, 5];
        for format in SparseFormat::ALL {
            let res = run_core(&build(&m, format), &x, &spec_for(format, SyncMode::CoarseLock), 3).unwrap();
            assert_eq!(res.partial_y, x, "{format}");
        }
    }

    #[test]
    fn empty_tile() {
        let m = TripletMatrix::<f32>::empty(3, 4);
        for format in SparseFormat::ALL {
            let res = run_core(
                &build(&m, format),
                &[1.0; 4],
                &spec_for(format, SyncMode::CoarseLock),
                4,
            )
            .unwrap();
            assert_eq!(res.partial_y, vec![0.0; 3]);
            assert_eq!(res.stats.iter().map(|s| s.work_items).sum::<u64>(), 0);
        }
    }

    #[test]
    fn small_random_tile_all_formats_and_sync_modes() {
        let m: TripletMatrix<i32> =
            generate_synthetic(SyntheticKind::UniformRandom { density: 0.5, seed: 11 }, 4, 4).unwrap();
        let x = [2, -1, 3, 5];
        let expected = dense_oracle(&m, &x);
        for format in SparseFormat::ALL {
            for sync in SyncMode::ALL {
                let res = run_core(&build(&m, format), &x, &spec_for(format, sync), 2).unwrap();
                assert_eq!(res.partial_y, expected, "{format} {sync}");
            }
        }
    }

    #[test]
    fn work_is_conserved() {
        let m: TripletMatrix<i32> =
            generate_synthetic(SyntheticKind::UniformRandom { density: 0.3, seed: 5 }, 30, 20).unwrap();
        let x = vec![1; 20];
        for format in SparseFormat::ALL {
            let tile = build(&m, format);
            let res = run_core(&tile, &x, &spec_for(format, SyncMode::CoarseLock), 4).unwrap();
            let total: u64 = res.stats.iter().map(|s| s.work_items).sum();
            let expected = match &tile {
                FormattedMatrix::Bcsr(b) => b.n_blocks(),
                FormattedMatrix::Bcoo(b) => b.n_blocks(),
                _ => m.nnz(),
            };
            assert_eq!(total, expected as u64, "{format}");
        }
    }

    #[test]
    fn rejects_wrong_segment_and_format() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Identity, 3, 3).unwrap();
        let spec = spec_for(SparseFormat::Csr, SyncMode::LockFree);
        assert!(matches!(
            run_core(&build(&m, SparseFormat::Csr), &[1, 2], &spec, 1),
            Err(KernelError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            run_core(&build(&m, SparseFormat::Coo), &[1, 2, 3], &spec, 1),
            Err(KernelError::FormatMismatch { .. })
        ));
    }

    #[test]
    fn lock_counts_follow_sync_mode() {
        let m: TripletMatrix<i32> = generate_synthetic(SyntheticKind::Dense, 6, 3).unwrap();
        let tile = build(&m, SparseFormat::Csr);
        let locks = |sync| {
            run_core(&tile, &[1; 3], &spec_for(SparseFormat::Csr, sync), 2)
                .unwrap()
                .stats
                .iter()
                .map(|s| s.lock_acquires + s.lock_releases)
                .collect::<Vec<_>>()
        };
        assert_eq!(locks(SyncMode::LockFree), vec![0, 0]);
        assert_eq!(locks(SyncMode::CoarseLock), vec![2, 2]);
        assert_eq!(locks(SyncMode::FineGrainedLock), vec![6, 6]);
    }

    #[test]
    fn csr_counts() {
        let m = TripletMatrix::from_triples(2, 3, [(0, 0, 1i32), (0, 1, 1), (0, 2, 1)]).unwrap();
        let res = run_core(
            &build(&m, SparseFormat::Csr),
            &[1; 3],
            &spec_for(SparseFormat::Csr, SyncMode::LockFree),
            1,
        )
        .unwrap();
        let s = res.stats[0];
        // row 0: 1 + 9 + 1, empty row 1: 1 + 0 + 1
        assert_eq!(s.mem_words, 11 + 2);
        assert_eq!((s.mac_ops, s.loop_iters, s.barriers), (3, 5, 1));
    }
}
