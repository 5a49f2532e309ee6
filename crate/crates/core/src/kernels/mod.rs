//! Device-side SpMV kernels and the kernel registry.
//!
//! A kernel name fixes the format, the partitioning layout and the core
//! balancing. Thread balancing, synchronization mode, element type, block
//! shape and the 2D grid are switches on top of a name; the canonical
//! label lists only the switches that differ from the name's defaults:
//!
//! ```text
//! 1D-CSR.nnz
//! 1D-COO.nnz[t=rows,s=fine_grained_lock,dtype=float64]
//! 2D-var-BCSR.block[grid=4x2,block=2x2]
//! ```
//!
//! For 1D names the suffix names the core balancing. For 2D names it names
//! the thread balancing; the core balancing follows from the tile scheme
//! (equally sized: rows; equally wide and variable: nnz).
//!
//! The 25 names are a reconstruction: the nine 1D kernels, the twelve
//! (2D scheme x format) pairs, and the four equally-sized 2D kernels that
//! balance nonzeros across threads.

mod exec;
mod schedule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formats::{BlockShape, ElementType, SparseFormat};
use crate::partition::{default_grid, CoreBalancing, PartitionError, PartitionScheme};

pub use exec::{mem_words_for, run_core, CoreResult, WorkCounts};
pub use schedule::{schedule_threads, Schedule, ThreadWork, WalkUnit};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("unknown kernel `{0}` (see `list-kernels`)")]
    UnknownKernel(String),
    #[error("invalid kernel option `{0}`")]
    BadOption(String),
    #[error("thread balancing `{balancing}` is not valid for {format}")]
    IncompatibleThreadBalancing {
        balancing: ThreadBalancing,
        format: SparseFormat,
    },
    #[error("lock_free needs each output row owned by one thread, but row {row} is split across threads")]
    SplitRowWithoutLocks { row: usize },
    #[error("input segment has {got} elements, tile has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tile is stored as {got} but the kernel uses {expected}")]
    FormatMismatch { expected: SparseFormat, got: SparseFormat },
    #[error("grid {pr}x{pc} given to a 1D kernel")]
    GridOnOneD { pr: usize, pc: usize },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreadBalancing {
    /// Equal counts of (block) rows per thread.
    Rows,
    /// Balanced nonzeros. CSR, and COO under row-granularity core
    /// balancing, keep whole rows per thread; COO otherwise splits entries
    /// exactly; blocked formats balance at block granularity.
    Nnz,
    /// Equal counts of blocks per thread.
    Blocks,
}

impl ThreadBalancing {
    pub const ALL: [ThreadBalancing; 3] = [ThreadBalancing::Rows, ThreadBalancing::Nnz, ThreadBalancing::Blocks];

    pub fn valid_for(self, format: SparseFormat) -> bool {
        self != ThreadBalancing::Blocks || format.is_blocked()
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            ThreadBalancing::Rows => "rows",
            ThreadBalancing::Nnz => "nnz",
            ThreadBalancing::Blocks => "blocks",
        }
    }
}

impl fmt::Display for ThreadBalancing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThreadBalancing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown thread balancing `{s}` (rows, nnz, blocks)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    LockFree,
    CoarseLock,
    FineGrainedLock,
}

impl SyncMode {
    pub const ALL: [SyncMode; 3] = [SyncMode::LockFree, SyncMode::CoarseLock, SyncMode::FineGrainedLock];

    pub const fn as_str(self) -> &'static str {
        match self {
            SyncMode::LockFree => "lock_free",
            SyncMode::CoarseLock => "coarse_lock",
            SyncMode::FineGrainedLock => "fine_grained_lock",
        }
    }

    /// Lock operations for a thread that writes `rows` output rows: one
    /// acquire/release pair around the whole flush (coarse) or around each
    /// row (fine).
    pub fn lock_ops(self, rows: usize) -> u64 {
        match self {
            SyncMode::LockFree => 0,
            SyncMode::CoarseLock => 2 * u64::from(rows > 0),
            SyncMode::FineGrainedLock => 2 * rows as u64,
        }
    }
}

impl fmt::Display for SyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyncMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lock_free" | "lock-free" => Ok(SyncMode::LockFree),
            "coarse_lock" | "coarse-lock" | "coarse" => Ok(SyncMode::CoarseLock),
            "fine_grained_lock" | "fine-grained-lock" | "fine" => Ok(SyncMode::FineGrainedLock),
            _ => Err(format!(
                "unknown sync mode `{s}` (lock_free, coarse_lock, fine_grained_lock)"
            )),
        }
    }
}

/// How the matrix is cut across cores, without the grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    OneD,
    EquallySized,
    EquallyWide,
    Variable,
}

impl Layout {
    pub const fn prefix(self) -> &'static str {
        match self {
            Layout::OneD => "1D",
            Layout::EquallySized => "2D-eqs",
            Layout::EquallyWide => "2D-eqw",
            Layout::Variable => "2D-var",
        }
    }

    pub const fn is_2d(self) -> bool {
        !matches!(self, Layout::OneD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub format: SparseFormat,
    pub layout: Layout,
    pub core_balancing: CoreBalancing,
    pub thread_balancing: ThreadBalancing,
    pub sync: SyncMode,
    pub dtype: ElementType,
    pub block: BlockShape,
    /// `pr x pc` for 2D layouts; `None` picks the most square grid for the
    /// core count.
    pub grid: Option<(usize, usize)>,
}

/// The name-defining part of a spec: layout, format, suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BaseKernel {
    layout: Layout,
    format: SparseFormat,
    suffix: &'static str,
}

impl BaseKernel {
    fn name(self) -> String {
        format!("{}-{}.{}", self.layout.prefix(), self.format, self.suffix)
    }

    fn core_balancing(self) -> CoreBalancing {
        let blocked = self.format.is_blocked();
        match (self.layout, self.suffix) {
            (Layout::OneD, "row") => CoreBalancing::Rows,
            (Layout::OneD, "nnz-rgrn") => CoreBalancing::NnzRowGranularity,
            (Layout::OneD, "nnz") if self.format == SparseFormat::Coo => CoreBalancing::NnzExact,
            (Layout::OneD, "nnz") if blocked => CoreBalancing::NnzBlockGranularity,
            (Layout::OneD, "nnz") => CoreBalancing::NnzRowGranularity,
            (Layout::OneD, _) => CoreBalancing::Blocks,
            (Layout::EquallySized, _) => CoreBalancing::Rows,
            (_, _) if blocked => CoreBalancing::NnzBlockGranularity,
            (_, _) => CoreBalancing::NnzRowGranularity,
        }
    }

    fn thread_balancing(self) -> ThreadBalancing {
        match self.suffix {
            "row" => ThreadBalancing::Rows,
            "block" => ThreadBalancing::Blocks,
            _ => ThreadBalancing::Nnz,
        }
    }
}

fn base_kernels() -> Vec<BaseKernel> {
    use SparseFormat::*;
    let mut out = Vec::with_capacity(25);
    let one_d = [
        (Csr, "row"),
        (Csr, "nnz"),
        (Coo, "row"),
        (Coo, "nnz-rgrn"),
        (Coo, "nnz"),
        (Bcsr, "block"),
        (Bcsr, "nnz"),
        (Bcoo, "block"),
        (Bcoo, "nnz"),
    ];
    for (format, suffix) in one_d {
        out.push(BaseKernel {
            layout: Layout::OneD,
            format,
            suffix,
        });
    }
    for layout in [Layout::EquallySized, Layout::EquallyWide, Layout::Variable] {
        for format in SparseFormat::ALL {
            let suffix = if format.is_blocked() { "block" } else { "row" };
            out.push(BaseKernel { layout, format, suffix });
        }
    }
    for format in SparseFormat::ALL {
        out.push(BaseKernel {
            layout: Layout::EquallySized,
            format,
            suffix: "nnz",
        });
    }
    out
}

/// Canonical kernel names in registry order.
pub fn kernel_registry() -> Vec<String> {
    base_kernels().into_iter().map(BaseKernel::name).collect()
}

fn default_sync(format: SparseFormat, core: CoreBalancing, threads: ThreadBalancing) -> SyncMode {
    if rows_exclusive(format, core, threads) {
        SyncMode::LockFree
    } else {
        SyncMode::CoarseLock
    }
}

/// Whether the thread schedule gives every output row to a single thread
/// regardless of the tile contents.
fn rows_exclusive(format: SparseFormat, core: CoreBalancing, threads: ThreadBalancing) -> bool {
    match threads {
        ThreadBalancing::Rows => true,
        ThreadBalancing::Nnz => {
            format == SparseFormat::Csr || (format == SparseFormat::Coo && core == CoreBalancing::NnzRowGranularity)
        }
        ThreadBalancing::Blocks => false,
    }
}

impl KernelSpec {
    /// The spec a registry name stands for, with default switches
    /// (int32, 4x4 blocks, automatic grid).
    pub fn from_name(name: &str) -> Result<Self, KernelError> {
        let base = base_kernels()
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| KernelError::UnknownKernel(name.to_string()))?;
        let core = base.core_balancing();
        let threads = base.thread_balancing();
        Ok(Self {
            format: base.format,
            layout: base.layout,
            core_balancing: core,
            thread_balancing: threads,
            sync: default_sync(base.format, core, threads),
            dtype: ElementType::Int32,
            block: BlockShape::default(),
            grid: None,
        })
    }

    fn base(&self) -> BaseKernel {
        let suffix = match (self.layout, self.format, self.core_balancing, self.thread_balancing) {
            (Layout::OneD, _, CoreBalancing::Rows, _) => "row",
            (Layout::OneD, SparseFormat::Coo, CoreBalancing::NnzRowGranularity, _) => "nnz-rgrn",
            (Layout::OneD, _, CoreBalancing::Blocks, _) => "block",
            (Layout::OneD, _, _, _) => "nnz",
            (_, _, _, ThreadBalancing::Rows) => "row",
            (_, _, _, ThreadBalancing::Blocks) => "block",
            (_, _, _, ThreadBalancing::Nnz) => "nnz",
        };
        BaseKernel {
            layout: self.layout,
            format: self.format,
            suffix,
        }
    }

    /// Registry name this spec derives from. For 2D layouts the name may
    /// fall outside the registry when thread balancing is overridden (for
    /// example `2D-eqw-CSR.nnz`); [`KernelSpec::label`] always round-trips.
    pub fn name(&self) -> String {
        let base = self.base();
        if self.layout.is_2d() && !kernel_registry().contains(&base.name()) {
            let suffix = if self.format.is_blocked() { "block" } else { "row" };
            return BaseKernel { suffix, ..base }.name();
        }
        base.name()
    }

    /// Canonical name plus every switch that differs from that name's
    /// defaults.
    pub fn label(&self) -> String {
        let defaults = Self::from_name(&self.name()).expect("name is in the registry");
        let mut opts = Vec::new();
        if self.thread_balancing != defaults.thread_balancing {
            opts.push(format!("t={}", self.thread_balancing));
        }
        if self.sync != defaults.sync {
            opts.push(format!("s={}", self.sync));
        }
        if self.dtype != defaults.dtype {
            opts.push(format!("dtype={}", self.dtype));
        }
        if let Some((pr, pc)) = self.grid {
            opts.push(format!("grid={pr}x{pc}"));
        }
        if self.format.is_blocked() && self.block != defaults.block {
            opts.push(format!("block={}x{}", self.block.r, self.block.c));
        }
        if opts.is_empty() {
            self.name()
        } else {
            format!("{}[{}]", self.name(), opts.join(","))
        }
    }

    /// Parses a bare registry name or a label with `[key=value,...]`
    /// overrides. Keys: `t`, `s`, `dtype`, `grid`, `block`.
    pub fn parse(text: &str) -> Result<Self, KernelError> {
        let (name, opts) = match text.split_once('[') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(']')
                    .ok_or_else(|| KernelError::BadOption(text.to_string()))?;
                (name, Some(inner))
            }
            None => (text, None),
        };
        let mut spec = Self::from_name(name)?;
        for opt in opts.into_iter().flat_map(|o| o.split(',')).filter(|o| !o.is_empty()) {
            let bad = || KernelError::BadOption(opt.to_string());
            let (key, value) = opt.split_once('=').ok_or_else(bad)?;
            match key {
                "t" => spec = spec.with_thread_balancing(value.parse().map_err(|_| bad())?)?,
                "s" => spec.sync = value.parse().map_err(|_| bad())?,
                "dtype" => spec.dtype = value.parse().map_err(|_| bad())?,
                "grid" => {
                    let (pr, pc) = parse_pair(value).ok_or_else(bad)?;
                    spec = spec.with_grid(pr, pc)?;
                }
                "block" => {
                    let (r, c) = parse_pair(value).ok_or_else(bad)?;
                    spec.block = BlockShape::new(r, c).map_err(|_| bad())?;
                }
                _ => return Err(bad()),
            }
        }
        Ok(spec)
    }

    /// Changes thread balancing and resets sync to the new default.
    pub fn with_thread_balancing(mut self, tb: ThreadBalancing) -> Result<Self, KernelError> {
        if !tb.valid_for(self.format) {
            return Err(KernelError::IncompatibleThreadBalancing {
                balancing: tb,
                format: self.format,
            });
        }
        self.thread_balancing = tb;
        self.sync = default_sync(self.format, self.core_balancing, tb);
        Ok(self)
    }

    pub fn with_sync(mut self, sync: SyncMode) -> Self {
        self.sync = sync;
        self
    }

    pub fn with_dtype(mut self, dtype: ElementType) -> Self {
        self.dtype = dtype;
        self
    }

    pub fn with_block(mut self, block: BlockShape) -> Self {
        self.block = block;
        self
    }

    pub fn with_grid(mut self, pr: usize, pc: usize) -> Result<Self, KernelError> {
        if !self.layout.is_2d() {
            return Err(KernelError::GridOnOneD { pr, pc });
        }
        if pr == 0 || pc == 0 {
            return Err(PartitionError::NoCores.into());
        }
        self.grid = Some((pr, pc));
        Ok(self)
    }

    /// True when every tile's schedule keeps each output row on one thread,
    /// so all three sync modes are legal on any input.
    pub fn rows_exclusive(&self) -> bool {
        rows_exclusive(self.format, self.core_balancing, self.thread_balancing)
    }

    /// Sync modes that cannot fail at schedule time.
    pub fn legal_sync_modes(&self) -> Vec<SyncMode> {
        if self.rows_exclusive() {
            SyncMode::ALL.to_vec()
        } else {
            vec![SyncMode::CoarseLock, SyncMode::FineGrainedLock]
        }
    }

    /// Whether nnz thread balancing on COO splits entries exactly (rows may
    /// span threads) rather than at row granularity.
    pub(crate) fn exact_entry_threads(&self) -> bool {
        self.format == SparseFormat::Coo
            && self.thread_balancing == ThreadBalancing::Nnz
            && self.core_balancing != CoreBalancing::NnzRowGranularity
    }

    /// Partition scheme for `n_cores`.
    pub fn scheme(&self, n_cores: usize) -> Result<PartitionScheme, KernelError> {
        let (pr, pc) = match self.layout {
            Layout::OneD => return Ok(PartitionScheme::Oned),
            _ => self.grid.unwrap_or_else(|| default_grid(n_cores)),
        };
        if pr * pc != n_cores {
            return Err(PartitionError::GridMismatch { pr, pc, n_cores }.into());
        }
        Ok(match self.layout {
            Layout::EquallySized => PartitionScheme::TwodEquallySized { pr, pc },
            Layout::EquallyWide => PartitionScheme::TwodEquallyWide { pr, pc },
            Layout::Variable => PartitionScheme::TwodVariable { pr, pc },
            Layout::OneD => unreachable!(),
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for KernelSpec {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn parse_pair(text: &str) -> Option<(usize, usize)> {
    let (a, b) = text.split_once(['x', 'X'])?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn registry_has_25_unique_names() {
        let names = kernel_registry();
        assert_eq!(names.len(), 25);
        assert_eq!(names.iter().collect::<HashSet<_>>().len(), 25);
        assert!(names.contains(&"1D-COO.nnz".to_string()));
        assert!(names.contains(&"2D-eqw-BCOO.block".to_string()));
        assert!(names.contains(&"2D-eqs-BCSR.nnz".to_string()));
    }

    #[test]
    fn names_round_trip_to_unique_specs() {
        let specs: Vec<KernelSpec> = kernel_registry()
            .iter()
            .map(|n| KernelSpec::from_name(n).unwrap())
            .collect();
        for (spec, name) in specs.iter().zip(kernel_registry()) {
            assert_eq!(spec.name(), name);
            assert_eq!(spec.label(), name);
            assert_eq!(KernelSpec::parse(&name).unwrap(), *spec);
            assert!(spec.core_balancing.valid_for(spec.format), "{name}");
            assert!(spec.thread_balancing.valid_for(spec.format), "{name}");
        }
        assert_eq!(specs.iter().collect::<HashSet<_>>().len(), 25);
    }

    #[test]
    fn one_d_suffixes() {
        let cb = |n: &str| KernelSpec::from_name(n).unwrap().core_balancing;
        assert_eq!(cb("1D-CSR.row"), CoreBalancing::Rows);
        assert_eq!(cb("1D-CSR.nnz"), CoreBalancing::NnzRowGranularity);
        assert_eq!(cb("1D-COO.nnz-rgrn"), CoreBalancing::NnzRowGranularity);
        assert_eq!(cb("1D-COO.nnz"), CoreBalancing::NnzExact);
        assert_eq!(cb("1D-BCSR.block"), CoreBalancing::Blocks);
        assert_eq!(cb("1D-BCOO.nnz"), CoreBalancing::NnzBlockGranularity);
        assert_eq!(cb("2D-eqs-CSR.nnz"), CoreBalancing::Rows);
        assert_eq!(cb("2D-var-BCSR.block"), CoreBalancing::NnzBlockGranularity);
    }

    #[test]
    fn default_sync_modes() {
        let sync = |n: &str| KernelSpec::from_name(n).unwrap().sync;
        assert_eq!(sync("1D-CSR.nnz"), SyncMode::LockFree);
        assert_eq!(sync("1D-COO.nnz"), SyncMode::CoarseLock);
        assert_eq!(sync("1D-COO.nnz-rgrn"), SyncMode::LockFree);
        assert_eq!(sync("1D-BCSR.block"), SyncMode::CoarseLock);
        assert_eq!(sync("2D-eqw-COO.row"), SyncMode::LockFree);
    }

    #[test]
    fn labels_with_overrides_round_trip() {
        let spec = KernelSpec::from_name("1D-COO.nnz")
            .unwrap()
            .with_thread_balancing(ThreadBalancing::Rows)
            .unwrap()
            .with_sync(SyncMode::FineGrainedLock)
            .with_dtype(ElementType::Float64);
        assert_eq!(spec.label(), "1D-COO.nnz[t=rows,s=fine_grained_lock,dtype=float64]");
        assert_eq!(KernelSpec::parse(&spec.label()).unwrap(), spec);

        let spec = KernelSpec::parse("2D-var-BCSR.block[grid=4x2,block=2x2]").unwrap();
        assert_eq!(spec.grid, Some((4, 2)));
        assert_eq!(spec.block, BlockShape { r: 2, c: 2 });
        assert_eq!(KernelSpec::parse(&spec.label()).unwrap(), spec);

        let spec = KernelSpec::parse("2D-eqw-CSR.row[t=nnz]").unwrap();
        assert_eq!(spec.name(), "2D-eqw-CSR.row");
        assert_eq!(KernelSpec::parse(&spec.label()).unwrap(), spec);
    }

    #[test]
    fn rejects_bad_names_and_options() {
        assert!(matches!(
            KernelSpec::parse("1D-CSR.block"),
            Err(KernelError::UnknownKernel(_))
        ));
        assert!(KernelSpec::parse("1D-CSR.row[t=blocks]").is_err());
        assert!(KernelSpec::parse("1D-CSR.row[grid=2x2]").is_err());
        assert!(KernelSpec::parse("1D-CSR.row[q=1]").is_err());
        assert!(KernelSpec::parse("1D-CSR.row[s=lock_free").is_err());
    }

    #[test]
    fn schemes() {
        let spec = KernelSpec::from_name("2D-eqs-CSR.row").unwrap();
        assert_eq!(
            spec.scheme(1024).unwrap(),
            PartitionScheme::TwodEquallySized { pr: 32, pc: 32 }
        );
        let spec = spec.with_grid(2, 3).unwrap();
        assert!(spec.scheme(8).is_err());
        assert_eq!(
            KernelSpec::from_name("1D-CSR.row").unwrap().scheme(7).unwrap(),
            PartitionScheme::Oned
        );
    }

    #[test]
    fn lock_op_prediction() {
        assert_eq!(SyncMode::FineGrainedLock.lock_ops(3), 6);
        assert_eq!(SyncMode::CoarseLock.lock_ops(3), 2);
        assert_eq!(SyncMode::CoarseLock.lock_ops(0), 0);
        assert_eq!(SyncMode::LockFree.lock_ops(3), 0);
    }
}
