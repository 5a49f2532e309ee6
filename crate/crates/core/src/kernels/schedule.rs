//! Splitting one core's tile across its threads.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{KernelError, KernelSpec, SyncMode, ThreadBalancing};
use crate::formats::{FormattedMatrix, Scalar};
use crate::partition::split::{split_even, split_min_max};

/// What a thread's range indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkUnit {
    /// CSR threads walk whole rows.
    Rows,
    /// COO threads walk entries in storage order.
    Entries,
    /// BCSR/BCOO threads walk blocks in storage order.
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadWork {
    pub range: Range<usize>,
    /// Distinct output rows this thread writes.
    pub produced_rows: usize,
    /// Predicted lock acquires plus releases.
    pub lock_ops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub walk: WalkUnit,
    /// One entry per thread used; `min(n_threads, divisible units)`.
    pub threads: Vec<ThreadWork>,
    /// Tile-local output rows written by more than one thread.
    pub split_rows: Vec<usize>,
}

/// Maps row-space boundaries to unit ranges, where `row_of[k]` is the
/// (block) row of unit `k` in storage order.
fn rows_to_units(row_of: &[usize], row_bounds: &[usize]) -> Vec<usize> {
    row_bounds.iter().map(|&r| row_of.partition_point(|&x| x < r)).collect()
}

fn row_weights(row_of: &[usize], n_rows: usize, weight: impl Fn(usize) -> u64) -> Vec<u64> {
    let mut w = vec![0u64; n_rows];
    for (k, &r) in row_of.iter().enumerate() {
        w[r] += weight(k);
    }
    w
}

/// Unit ranges for units keyed by `row_of` over `n_rows` (block) rows.
fn unit_bounds(
    row_of: &[usize],
    n_rows: usize,
    n_threads: usize,
    tb: ThreadBalancing,
    row_granular: bool,
    weight: impl Fn(usize) -> u64,
) -> Vec<usize> {
    let n_units = row_of.len();
    match tb {
        ThreadBalancing::Rows => {
            let parts = n_threads.min(n_rows);
            if parts == 0 {
                return vec![0];
            }
            rows_to_units(row_of, &split_even(n_rows, parts))
        }
        ThreadBalancing::Nnz if row_granular => {
            let parts = n_threads.min(n_rows);
            if parts == 0 {
                return vec![0];
            }
            rows_to_units(row_of, &split_min_max(&row_weights(row_of, n_rows, weight), parts))
        }
        ThreadBalancing::Nnz => {
            let parts = n_threads.min(n_units);
            if parts == 0 {
                return vec![0];
            }
            let w: Vec<u64> = (0..n_units).map(weight).collect();
            split_min_max(&w, parts)
        }
        ThreadBalancing::Blocks => {
            let parts = n_threads.min(n_units);
            if parts == 0 {
                return vec![0];
            }
            split_even(n_units, parts)
        }
    }
}

/// Builds per-thread work for keyed units and finds rows shared between
/// threads. `rows_in(key)` lists the tile-local output rows behind a key.
fn keyed_threads(
    bounds: &[usize],
    row_of: &[usize],
    sync: SyncMode,
    rows_in: impl Fn(usize) -> Range<usize>,
) -> (Vec<ThreadWork>, Vec<usize>) {
    let mut threads = Vec::with_capacity(bounds.len().saturating_sub(1));
    let mut split_rows = Vec::new();
    let mut prev_last: Option<usize> = None;
    for w in bounds.windows(2) {
        let keys = &row_of[w[0]..w[1]];
        let mut produced = 0;
        let mut last: Option<usize> = None;
        for &k in keys {
            if last != Some(k) {
                produced += rows_in(k).len();
                last = Some(k);
            }
        }
        if let (Some(first), Some(p)) = (keys.first(), prev_last) {
            if *first == p && split_rows.last().is_none_or(|&r| !rows_in(p).contains(&r)) {
                split_rows.extend(rows_in(p));
            }
        }
        if last.is_some() {
            prev_last = last;
        }
        threads.push(ThreadWork {
            range: w[0]..w[1],
            produced_rows: produced,
            lock_ops: sync.lock_ops(produced),
        });
    }
    (threads, split_rows)
}

/// Assigns contiguous runs of the tile to at most `n_threads` threads per
/// the spec's thread balancing, and predicts lock operations per thread.
///
/// * rows: equal (block) row counts, differing by at most one;
/// * nnz: CSR and row-granular COO minimise the heaviest thread at row
///   granularity; COO otherwise splits entries evenly; blocked formats
///   minimise the heaviest thread over per-block nonzeros;
/// * blocks: equal block counts.
///
/// Ties resolve to the earliest boundary.
pub fn schedule_threads<T: Scalar>(
    tile: &FormattedMatrix<T>,
    n_threads: usize,
    spec: &KernelSpec,
) -> Result<Schedule, KernelError> {
    let tb = spec.thread_balancing;
    if !tb.valid_for(tile.format()) {
        return Err(KernelError::IncompatibleThreadBalancing {
            balancing: tb,
            format: tile.format(),
        });
    }
    let n_threads = n_threads.max(1);
    let sync = spec.sync;
    let schedule = match tile {
        FormattedMatrix::Csr(m) => {
            let parts = n_threads.min(m.n_rows);
            let bounds = match (parts, tb) {
                (0, _) => vec![0],
                (_, ThreadBalancing::Rows) => split_even(m.n_rows, parts),
                _ => {
                    let w: Vec<u64> = (0..m.n_rows).map(|i| m.row_nnz(i) as u64).collect();
                    split_min_max(&w, parts)
                }
            };
            let threads = bounds
                .windows(2)
                .map(|w| ThreadWork {
                    range: w[0]..w[1],
                    produced_rows: w[1] - w[0],
                    lock_ops: sync.lock_ops(w[1] - w[0]),
                })
                .collect();
            Schedule {
                walk: WalkUnit::Rows,
                threads,
                split_rows: Vec::new(),
            }
        }
        FormattedMatrix::Coo(m) => {
            let bounds = if spec.exact_entry_threads() {
                let parts = n_threads.min(m.nnz());
                if parts == 0 {
                    vec![0]
                } else {
                    split_even(m.nnz(), parts)
                }
            } else {
                unit_bounds(&m.rows, m.n_rows, n_threads, tb, true, |_| 1)
            };
            let (threads, split_rows) = keyed_threads(&bounds, &m.rows, sync, |r| r..r + 1);
            Schedule {
                walk: WalkUnit::Entries,
                threads,
                split_rows,
            }
        }
        FormattedMatrix::Bcsr(m) => {
            let row_of: Vec<usize> = (0..m.block_rows)
                .flat_map(|br| std::iter::repeat_n(br, m.block_row_ptr[br + 1] - m.block_row_ptr[br]))
                .collect();
            blocked_schedule(
                &row_of,
                m.block_rows,
                m.shape.r,
                m.n_rows,
                &m.block_nnz,
                n_threads,
                tb,
                sync,
            )
        }
        FormattedMatrix::Bcoo(m) => blocked_schedule(
            &m.block_row,
            m.block_rows,
            m.shape.r,
            m.n_rows,
            &m.block_nnz,
            n_threads,
            tb,
            sync,
        ),
    };
    if sync == SyncMode::LockFree {
        if let Some(&row) = schedule.split_rows.first() {
            return Err(KernelError::SplitRowWithoutLocks { row });
        }
    }
    Ok(schedule)
}

#[allow(clippy::too_many_arguments)]
fn blocked_schedule(
    row_of: &[usize],
    block_rows: usize,
    r: usize,
    n_rows: usize,
    block_nnz: &[usize],
    n_threads: usize,
    tb: ThreadBalancing,
    sync: SyncMode,
) -> Schedule {
    let bounds = unit_bounds(row_of, block_rows, n_threads, tb, false, |k| block_nnz[k] as u64);
    let (threads, split_rows) = keyed_threads(&bounds, row_of, sync, |br| {
        (br * r).min(n_rows)..((br + 1) * r).min(n_rows)
    });
    Schedule {
        walk: WalkUnit::Blocks,
        threads,
        split_rows,
    }
}
