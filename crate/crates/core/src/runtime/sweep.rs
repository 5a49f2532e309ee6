//! Running many kernels on one matrix and ranking them.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_end_to_end, ExecutionReport, RunError, RunOptions};
use crate::formats::{Scalar, TripletMatrix};
use crate::kernels::KernelSpec;
use crate::machine::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// A tile or transfer did not fit in a bank.
    Capacity,
    /// The result differed from the reference.
    Mismatch,
    /// The kernel cannot run on this matrix and machine as configured.
    Config,
}

impl FailureKind {
    pub fn of(e: &RunError) -> Self {
        match e {
            RunError::OracleMismatch { .. } => FailureKind::Mismatch,
            e if e.is_capacity() => FailureKind::Capacity,
            _ => FailureKind::Config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub kernel: String,
    pub report: Option<ExecutionReport>,
    pub error: Option<String>,
    pub failure: Option<FailureKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    /// Label of the kernel with the lowest total cycles.
    pub best: Option<String>,
    /// Successful runs by total cycles (ties by label), then failures by
    /// label.
    pub entries: Vec<SweepEntry>,
}

impl SweepOutcome {
    pub fn reports(&self) -> impl Iterator<Item = &ExecutionReport> {
        self.entries.iter().filter_map(|e| e.report.as_ref())
    }
}

/// Runs every spec (in parallel) and ranks the results. A failing kernel is
/// recorded with its error and does not stop the sweep.
pub fn sweep<T: Scalar>(
    m: &TripletMatrix<T>,
    specs: &[KernelSpec],
    sim: &SimConfig,
    x: &[T],
    opts: RunOptions,
) -> SweepOutcome {
    let mut entries: Vec<SweepEntry> = specs
        .par_iter()
        .map(|spec| match run_end_to_end(m, spec, sim, x, opts) {
            Ok(report) => SweepEntry {
                kernel: spec.label(),
                report: Some(report),
                error: None,
                failure: None,
            },
            Err(e) => SweepEntry {
                kernel: spec.label(),
                report: None,
                error: Some(e.to_string()),
                failure: Some(FailureKind::of(&e)),
            },
        })
        .collect();
    entries.sort_by(|a, b| {
        let key = |e: &SweepEntry| e.report.as_ref().map_or(u64::MAX, |r| r.breakdown.total_cycles);
        (a.report.is_none(), key(a), &a.kernel).cmp(&(b.report.is_none(), key(b), &b.kernel))
    });
    let best = entries.first().filter(|e| e.report.is_some()).map(|e| e.kernel.clone());
    SweepOutcome { best, entries }
}
