//! Assignment of matrix tiles to PIM cores.
//!
//! Planners work on a grid of *units*: single entries for CSR/COO, or
//! `r x c` blocks for BCSR/BCOO. Every partition uses contiguous row and
//! column ranges; ties always resolve to the earliest boundary.
//!
//! One-dimensional plans give each core a horizontal stripe and the whole
//! input vector. Two-dimensional plans give each core a rectangle and only
//! the input-vector slice under its columns; rows shared by several tiles
//! are reduced on the host (see [`PartitionPlan::merge_map`]).
//!
//! The three 2D variants are a reconstruction:
//! * equally sized: a `pr x pc` grid of equal row bands and equal column bands;
//! * equally wide: `pc` equal-width column bands, each split into `pr` row
//!   stripes that minimise the heaviest stripe of that band;
//! * variable: column bands cut greedily at nnz quantiles, then split into
//!   stripes like equally wide. If the greedy cut ends up with a heavier
//!   tile than the equally-sized grid, the equal-width columns are used.

pub mod split;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formats::{BlockShape, Scalar, SparseFormat, TripletMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("at least one core is required")]
    NoCores,
    #[error("more cores than divisible units: {cores} cores for {units} {what}")]
    MoreCoresThanUnits {
        cores: usize,
        units: usize,
        what: &'static str,
    },
    #[error("core balancing `{balancing}` is not valid for {format}")]
    IncompatibleBalancing {
        balancing: CoreBalancing,
        format: SparseFormat,
    },
    #[error("grid {pr}x{pc} does not match {n_cores} cores")]
    GridMismatch { pr: usize, pc: usize, n_cores: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreBalancing {
    Rows,
    NnzRowGranularity,
    NnzExact,
    Blocks,
    NnzBlockGranularity,
}

impl CoreBalancing {
    pub const ALL: [CoreBalancing; 5] = [
        CoreBalancing::Rows,
        CoreBalancing::NnzRowGranularity,
        CoreBalancing::NnzExact,
        CoreBalancing::Blocks,
        CoreBalancing::NnzBlockGranularity,
    ];

    /// Block schemes need a blocked format; exact nnz splits need
    /// individually addressable entries (COO). Blocked formats balance at
    /// block-row granularity, so the row-granularity nnz scheme is theirs
    /// under the name `nnz_block_granularity`.
    pub fn valid_for(self, format: SparseFormat) -> bool {
        match self {
            CoreBalancing::Rows => true,
            CoreBalancing::NnzRowGranularity => !format.is_blocked(),
            CoreBalancing::NnzExact => format == SparseFormat::Coo,
            CoreBalancing::Blocks | CoreBalancing::NnzBlockGranularity => format.is_blocked(),
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            CoreBalancing::Rows => "rows",
            CoreBalancing::NnzRowGranularity => "nnz_row_granularity",
            CoreBalancing::NnzExact => "nnz_exact",
            CoreBalancing::Blocks => "blocks",
            CoreBalancing::NnzBlockGranularity => "nnz_block_granularity",
        }
    }
}

impl fmt::Display for CoreBalancing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoreBalancing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown core balancing `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionScheme {
    Oned,
    TwodEquallySized { pr: usize, pc: usize },
    TwodEquallyWide { pr: usize, pc: usize },
    TwodVariable { pr: usize, pc: usize },
}

impl PartitionScheme {
    pub fn grid(self) -> Option<(usize, usize)> {
        match self {
            PartitionScheme::Oned => None,
            PartitionScheme::TwodEquallySized { pr, pc }
            | PartitionScheme::TwodEquallyWide { pr, pc }
            | PartitionScheme::TwodVariable { pr, pc } => Some((pr, pc)),
        }
    }
}

/// Most square `pr x pc` factorisation of `n_cores` with `pr >= pc`.
pub fn default_grid(n_cores: usize) -> (usize, usize) {
    let mut pc = (n_cores as f64).sqrt() as usize;
    while pc > 1 && !n_cores.is_multiple_of(pc) {
        pc -= 1;
    }
    let pc = pc.max(1);
    (n_cores / pc, pc)
}

/// One unit of partitioning: an entry, or a block with its true nnz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub row: usize,
    pub col: usize,
    pub nnz: usize,
}

/// Sparsity structure the planners work from.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMeta {
    pub n_rows: usize,
    pub n_cols: usize,
    pub block: Option<BlockShape>,
    pub unit_rows: usize,
    pub unit_cols: usize,
    /// Row-major, which is also the storage order of every format.
    pub units: Vec<Unit>,
}

impl MatrixMeta {
    pub fn entries<T: Scalar>(m: &TripletMatrix<T>) -> Self {
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            block: None,
            unit_rows: m.n_rows(),
            unit_cols: m.n_cols(),
            units: m
                .entries()
                .iter()
                .map(|e| Unit {
                    row: e.row,
                    col: e.col,
                    nnz: 1,
                })
                .collect(),
        }
    }

    pub fn blocked<T: Scalar>(m: &TripletMatrix<T>, shape: BlockShape) -> Self {
        let mut keys: Vec<(usize, usize)> = m.entries().iter().map(|e| (e.row / shape.r, e.col / shape.c)).collect();
        keys.sort_unstable();
        let mut units: Vec<Unit> = Vec::new();
        for (row, col) in keys {
            match units.last_mut() {
                Some(u) if u.row == row && u.col == col => u.nnz += 1,
                _ => units.push(Unit { row, col, nnz: 1 }),
            }
        }
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            block: Some(shape),
            unit_rows: m.n_rows().div_ceil(shape.r),
            unit_cols: m.n_cols().div_ceil(shape.c),
            units,
        }
    }

    pub fn for_format<T: Scalar>(m: &TripletMatrix<T>, format: SparseFormat, shape: BlockShape) -> Self {
        if format.is_blocked() {
            Self::blocked(m, shape)
        } else {
            Self::entries(m)
        }
    }

    pub fn nnz(&self) -> usize {
        self.units.iter().map(|u| u.nnz).sum()
    }

    fn block_dims(&self) -> (usize, usize) {
        self.block.map_or((1, 1), |b| (b.r, b.c))
    }

    /// Matrix rows covered by unit rows `a..b`.
    pub fn rows_of(&self, units: Range<usize>) -> Range<usize> {
        let (r, _) = self.block_dims();
        (units.start * r).min(self.n_rows)..(units.end * r).min(self.n_rows)
    }

    /// Matrix columns covered by unit columns `a..b`.
    pub fn cols_of(&self, units: Range<usize>) -> Range<usize> {
        let (_, c) = self.block_dims();
        (units.start * c).min(self.n_cols)..(units.end * c).min(self.n_cols)
    }

    /// Per unit row: `(units, nnz)`.
    fn row_loads(&self, cols: Range<usize>) -> (Vec<u64>, Vec<u64>) {
        let mut count = vec![0u64; self.unit_rows];
        let mut nnz = vec![0u64; self.unit_rows];
        for u in self.units.iter().filter(|u| cols.contains(&u.col)) {
            count[u.row] += 1;
            nnz[u.row] += u.nnz as u64;
        }
        (count, nnz)
    }

    fn col_nnz(&self) -> Vec<u64> {
        let mut nnz = vec![0u64; self.unit_cols];
        for u in &self.units {
            nnz[u.col] += u.nnz as u64;
        }
        nnz
    }

    /// First unit index in unit row `row`.
    fn unit_row_start(&self, row: usize) -> usize {
        self.units.partition_point(|u| u.row < row)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub core_id: usize,
    pub row_range: Range<usize>,
    pub col_range: Range<usize>,
    /// Units owned by this core, indexing the plan's storage order: the
    /// format's own row-major order for 1D plans, tile-major order (tiles in
    /// core order, row-major inside a tile) for 2D plans.
    pub entry_range: Range<usize>,
    /// Entries (CSR/COO) or blocks (BCSR/BCOO) owned.
    pub units: usize,
    /// Source nonzeros owned.
    pub nnz: usize,
    pub produces_partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRow {
    pub row: usize,
    /// Contributing cores in ascending order.
    pub cores: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub scheme: PartitionScheme,
    pub balancing: CoreBalancing,
    pub n_rows: usize,
    pub n_cols: usize,
    pub block: Option<BlockShape>,
    pub tiles: Vec<Tile>,
    pub vector_segments: Vec<Range<usize>>,
    pub merge_map: Vec<MergeRow>,
}

impl PartitionPlan {
    pub fn n_cores(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_2d(&self) -> bool {
        self.scheme.grid().is_some()
    }

    /// Number of partials folded on the host: one per contributor of every
    /// shared row.
    pub fn merged_elements(&self) -> usize {
        self.merge_map.iter().map(|m| m.cores.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    fn finish(
        scheme: PartitionScheme,
        balancing: CoreBalancing,
        meta: &MatrixMeta,
        mut tiles: Vec<Tile>,
        vector_segments: Vec<Range<usize>>,
    ) -> Self {
        let merge_map = build_merge_map(meta.n_rows, &tiles);
        let mut shared = vec![false; tiles.len()];
        for m in &merge_map {
            for &c in &m.cores {
                shared[c] = true;
            }
        }
        for (t, s) in tiles.iter_mut().zip(shared) {
            t.produces_partial = s;
        }
        Self {
            scheme,
            balancing,
            n_rows: meta.n_rows,
            n_cols: meta.n_cols,
            block: meta.block,
            tiles,
            vector_segments,
            merge_map,
        }
    }
}

fn build_merge_map(n_rows: usize, tiles: &[Tile]) -> Vec<MergeRow> {
    let mut cover = vec![0i64; n_rows + 1];
    for t in tiles {
        cover[t.row_range.start] += 1;
        cover[t.row_range.end] -= 1;
    }
    let mut running = 0i64;
    let mut shared_rows = Vec::new();
    for (row, delta) in cover.iter().enumerate().take(n_rows) {
        running += *delta;
        if running >= 2 {
            shared_rows.push(row);
        }
    }
    let mut merge: Vec<MergeRow> = shared_rows
        .into_iter()
        .map(|row| MergeRow { row, cores: Vec::new() })
        .collect();
    for t in tiles {
        let lo = merge.partition_point(|m| m.row < t.row_range.start);
        for m in merge[lo..].iter_mut().take_while(|m| m.row < t.row_range.end) {
            m.cores.push(t.core_id);
        }
    }
    merge
}

fn check_cores(n_cores: usize, units: usize, what: &'static str) -> Result<(), PartitionError> {
    if n_cores == 0 {
        return Err(PartitionError::NoCores);
    }
    if n_cores > units {
        return Err(PartitionError::MoreCoresThanUnits {
            cores: n_cores,
            units,
            what,
        });
    }
    Ok(())
}

fn row_unit_label(meta: &MatrixMeta) -> &'static str {
    if meta.block.is_some() {
        "block rows"
    } else {
        "rows"
    }
}

/// One horizontal stripe per core.
pub fn plan_1d(meta: &MatrixMeta, n_cores: usize, balancing: CoreBalancing) -> Result<PartitionPlan, PartitionError> {
    let format_hint = if meta.block.is_some() {
        SparseFormat::Bcsr
    } else if balancing == CoreBalancing::NnzExact {
        SparseFormat::Coo
    } else {
        SparseFormat::Csr
    };
    if !balancing.valid_for(format_hint) {
        return Err(PartitionError::IncompatibleBalancing {
            balancing,
            format: format_hint,
        });
    }
    let full_cols = 0..meta.n_cols;

    if balancing == CoreBalancing::NnzExact {
        if n_cores == 0 {
            return Err(PartitionError::NoCores);
        }
        let bounds = split::split_even(meta.units.len(), n_cores);
        let tiles = bounds
            .windows(2)
            .enumerate()
            .map(|(core_id, w)| {
                let run = &meta.units[w[0]..w[1]];
                let row_range = match (run.first(), run.last()) {
                    (Some(a), Some(b)) => a.row..b.row + 1,
                    _ => 0..0,
                };
                Tile {
                    core_id,
                    row_range,
                    col_range: full_cols.clone(),
                    entry_range: w[0]..w[1],
                    units: run.len(),
                    nnz: run.iter().map(|u| u.nnz).sum(),
                    produces_partial: false,
                }
            })
            .collect();
        let segments = vec![full_cols.clone(); n_cores];
        return Ok(PartitionPlan::finish(
            PartitionScheme::Oned,
            balancing,
            meta,
            tiles,
            segments,
        ));
    }

    check_cores(n_cores, meta.unit_rows, row_unit_label(meta))?;
    let (count, nnz) = meta.row_loads(full_cols.clone());
    let bounds = match balancing {
        CoreBalancing::Rows => split::split_even(meta.unit_rows, n_cores),
        CoreBalancing::NnzRowGranularity | CoreBalancing::NnzBlockGranularity => split::split_min_max(&nnz, n_cores),
        CoreBalancing::Blocks => split::split_min_max(&count, n_cores),
        CoreBalancing::NnzExact => unreachable!("handled above"),
    };
    let tiles = bounds
        .windows(2)
        .enumerate()
        .map(|(core_id, w)| {
            let (a, b) = (meta.unit_row_start(w[0]), meta.unit_row_start(w[1]));
            Tile {
                core_id,
                row_range: meta.rows_of(w[0]..w[1]),
                col_range: full_cols.clone(),
                entry_range: a..b,
                units: b - a,
                nnz: nnz[w[0]..w[1]].iter().sum::<u64>() as usize,
                produces_partial: false,
            }
        })
        .collect();
    let segments = vec![full_cols; n_cores];
    Ok(PartitionPlan::finish(
        PartitionScheme::Oned,
        balancing,
        meta,
        tiles,
        segments,
    ))
}

fn check_grid(meta: &MatrixMeta, pr: usize, pc: usize) -> Result<(), PartitionError> {
    if pr == 0 || pc == 0 {
        return Err(PartitionError::NoCores);
    }
    check_cores(pr, meta.unit_rows, row_unit_label(meta))?;
    check_cores(
        pc,
        meta.unit_cols,
        if meta.block.is_some() {
            "block columns"
        } else {
            "columns"
        },
    )
}

/// Row boundaries (in unit rows) for each column band.
type BandRows = Vec<Vec<usize>>;

fn stripe_rows(meta: &MatrixMeta, col_bounds: &[usize], pr: usize) -> BandRows {
    col_bounds
        .windows(2)
        .map(|w| {
            let (_, nnz) = meta.row_loads(w[0]..w[1]);
            split::split_min_max(&nnz, pr)
        })
        .collect()
}

/// Builds 2D tiles from column-band bounds and per-band row bounds.
/// Core `i * pc + j` owns row stripe `i` of column band `j`.
fn grid_tiles(meta: &MatrixMeta, col_bounds: &[usize], band_rows: &BandRows) -> Vec<Tile> {
    let pc = col_bounds.len() - 1;
    let pr = band_rows[0].len() - 1;
    let mut units = vec![0usize; pr * pc];
    let mut nnz = vec![0usize; pr * pc];
    for u in &meta.units {
        let j = col_bounds.partition_point(|&b| b <= u.col) - 1;
        let i = band_rows[j].partition_point(|&b| b <= u.row) - 1;
        units[i * pc + j] += 1;
        nnz[i * pc + j] += u.nnz;
    }
    let mut offset = 0;
    (0..pr * pc)
        .map(|core_id| {
            let (i, j) = (core_id / pc, core_id % pc);
            let rows = band_rows[j][i]..band_rows[j][i + 1];
            let tile = Tile {
                core_id,
                row_range: meta.rows_of(rows),
                col_range: meta.cols_of(col_bounds[j]..col_bounds[j + 1]),
                entry_range: offset..offset + units[core_id],
                units: units[core_id],
                nnz: nnz[core_id],
                produces_partial: false,
            };
            offset += units[core_id];
            tile
        })
        .collect()
}

fn finish_2d(scheme: PartitionScheme, balancing: CoreBalancing, meta: &MatrixMeta, tiles: Vec<Tile>) -> PartitionPlan {
    let segments = tiles.iter().map(|t| t.col_range.clone()).collect();
    PartitionPlan::finish(scheme, balancing, meta, tiles, segments)
}

fn nnz_balancing(meta: &MatrixMeta) -> CoreBalancing {
    if meta.block.is_some() {
        CoreBalancing::NnzBlockGranularity
    } else {
        CoreBalancing::NnzRowGranularity
    }
}

pub fn plan_2d_equally_sized(meta: &MatrixMeta, pr: usize, pc: usize) -> Result<PartitionPlan, PartitionError> {
    check_grid(meta, pr, pc)?;
    let col_bounds = split::split_even(meta.unit_cols, pc);
    let rows = split::split_even(meta.unit_rows, pr);
    let band_rows = vec![rows; pc];
    let tiles = grid_tiles(meta, &col_bounds, &band_rows);
    Ok(finish_2d(
        PartitionScheme::TwodEquallySized { pr, pc },
        CoreBalancing::Rows,
        meta,
        tiles,
    ))
}

pub fn plan_2d_equally_wide(meta: &MatrixMeta, pr: usize, pc: usize) -> Result<PartitionPlan, PartitionError> {
    check_grid(meta, pr, pc)?;
    let col_bounds = split::split_even(meta.unit_cols, pc);
    let band_rows = stripe_rows(meta, &col_bounds, pr);
    let tiles = grid_tiles(meta, &col_bounds, &band_rows);
    Ok(finish_2d(
        PartitionScheme::TwodEquallyWide { pr, pc },
        nnz_balancing(meta),
        meta,
        tiles,
    ))
}

pub fn plan_2d_variable(meta: &MatrixMeta, pr: usize, pc: usize) -> Result<PartitionPlan, PartitionError> {
    check_grid(meta, pr, pc)?;
    let greedy = split::split_greedy_cuts(&meta.col_nnz(), pc);
    let band_rows = stripe_rows(meta, &greedy, pr);
    let mut tiles = grid_tiles(meta, &greedy, &band_rows);

    let baseline = plan_2d_equally_sized(meta, pr, pc)?;
    let worst = |ts: &[Tile]| ts.iter().map(|t| t.nnz).max().unwrap_or(0);
    if worst(&tiles) > worst(&baseline.tiles) {
        let col_bounds = split::split_even(meta.unit_cols, pc);
        let band_rows = stripe_rows(meta, &col_bounds, pr);
        tiles = grid_tiles(meta, &col_bounds, &band_rows);
    }
    Ok(finish_2d(
        PartitionScheme::TwodVariable { pr, pc },
        nnz_balancing(meta),
        meta,
        tiles,
    ))
}

/// Dispatches on the scheme. For 2D schemes `balancing` is implied by the
/// scheme and ignored; `pr * pc` must equal `n_cores`.
pub fn plan(
    meta: &MatrixMeta,
    scheme: PartitionScheme,
    balancing: CoreBalancing,
    n_cores: usize,
) -> Result<PartitionPlan, PartitionError> {
    if let Some((pr, pc)) = scheme.grid() {
        if pr * pc != n_cores {
            return Err(PartitionError::GridMismatch { pr, pc, n_cores });
        }
    }
    match scheme {
        PartitionScheme::Oned => plan_1d(meta, n_cores, balancing),
        PartitionScheme::TwodEquallySized { pr, pc } => plan_2d_equally_sized(meta, pr, pc),
        PartitionScheme::TwodEquallyWide { pr, pc } => plan_2d_equally_wide(meta, pr, pc),
        PartitionScheme::TwodVariable { pr, pc } => plan_2d_variable(meta, pr, pc),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceStats {
    pub per_core_nnz: Vec<usize>,
    pub per_core_rows: Vec<usize>,
    /// Entries or blocks per core.
    pub per_core_units: Vec<usize>,
    pub nnz_min: usize,
    pub nnz_max: usize,
    pub nnz_mean: f64,
    /// Population standard deviation over mean; zero when the mean is zero.
    pub nnz_cv: f64,
    pub split_rows: usize,
    pub vector_segment_bytes: usize,
}

/// Population mean and coefficient of variation.
pub fn mean_cv(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.into_iter().collect();
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt() / mean)
}

pub fn plan_stats(plan: &PartitionPlan, width_bytes: usize) -> BalanceStats {
    let per_core_nnz: Vec<usize> = plan.tiles.iter().map(|t| t.nnz).collect();
    let (nnz_mean, nnz_cv) = mean_cv(per_core_nnz.iter().map(|&v| v as f64));
    BalanceStats {
        nnz_min: per_core_nnz.iter().copied().min().unwrap_or(0),
        nnz_max: per_core_nnz.iter().copied().max().unwrap_or(0),
        nnz_mean,
        nnz_cv,
        per_core_rows: plan.tiles.iter().map(|t| t.row_range.len()).collect(),
        per_core_units: plan.tiles.iter().map(|t| t.units).collect(),
        per_core_nnz,
        split_rows: plan.merge_map.len(),
        vector_segment_bytes: plan.vector_segments.iter().map(|s| s.len() * width_bytes).sum(),
    }
}
