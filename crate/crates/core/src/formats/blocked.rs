//! Block-compressed formats storing dense `r x c` tiles.
//!
//! A block is stored when it holds at least one entry of the source matrix.
//! Cells of a stored block with no source entry are filled with zero. Tiles
//! are row-major. Blocks on the right/bottom edge are padded out to the full
//! `r x c` shape; the padding cells are fill.

use serde::{Deserialize, Serialize};

use super::element::Scalar;
use super::triplet::{Entry, TripletMatrix};
use super::{FormatError, INDEX_BYTES};

/// Block dimensions, rows by columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockShape {
    pub r: usize,
    pub c: usize,
}

impl BlockShape {
    pub fn new(r: usize, c: usize) -> Result<Self, FormatError> {
        if r == 0 || c == 0 {
            return Err(FormatError::BadBlockShape { r, c });
        }
        Ok(Self { r, c })
    }

    pub const fn cells(self) -> usize {
        self.r * self.c
    }
}

impl Default for BlockShape {
    fn default() -> Self {
        Self { r: 4, c: 4 }
    }
}

/// Blocks of a matrix as `(block_row, block_col, tile, true_nnz)`, sorted by
/// block coordinate.
fn group_blocks<T: Scalar>(m: &TripletMatrix<T>, shape: BlockShape) -> Vec<(usize, usize, Vec<T>, usize)> {
    let mut keyed: Vec<(usize, usize, &Entry<T>)> = m
        .entries()
        .iter()
        .map(|e| (e.row / shape.r, e.col / shape.c, e))
        .collect();
    // Stable sort keeps row-major order of entries inside each block.
    keyed.sort_by_key(|&(br, bc, _)| (br, bc));

    let mut blocks: Vec<(usize, usize, Vec<T>, usize)> = Vec::new();
    for (br, bc, e) in keyed {
        let fresh = !matches!(blocks.last(), Some(b) if b.0 == br && b.1 == bc);
        if fresh {
            blocks.push((br, bc, vec![T::zero(); shape.cells()], 0));
        }
        let block = blocks.last_mut().expect("block pushed above");
        block.2[(e.row % shape.r) * shape.c + e.col % shape.c] = e.value;
        block.3 += 1;
    }
    blocks
}

fn blocks_to_triplets<T: Scalar>(
    n_rows: usize,
    n_cols: usize,
    shape: BlockShape,
    coords: impl Iterator<Item = (usize, usize)>,
    values: &[T],
) -> TripletMatrix<T> {
    let mut entries = Vec::new();
    for (k, (br, bc)) in coords.enumerate() {
        let tile = &values[k * shape.cells()..(k + 1) * shape.cells()];
        for (cell, &v) in tile.iter().enumerate() {
            let row = br * shape.r + cell / shape.c;
            let col = bc * shape.c + cell % shape.c;
            if v != T::zero() && row < n_rows && col < n_cols {
                entries.push(Entry { row, col, value: v });
            }
        }
    }
    entries.sort_by_key(|e| (e.row, e.col));
    TripletMatrix::from_sorted_unchecked(n_rows, n_cols, entries)
}

fn fill_ratio(n_blocks: usize, shape: BlockShape, nnz_true: usize) -> f64 {
    if nnz_true == 0 {
        1.0
    } else {
        (n_blocks * shape.cells()) as f64 / nnz_true as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcsrMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub shape: BlockShape,
    pub block_rows: usize,
    pub block_cols: usize,
    pub block_row_ptr: Vec<usize>,
    pub block_col_idx: Vec<usize>,
    /// `n_blocks * r * c` values, one row-major tile per block.
    pub block_values: Vec<T>,
    /// Source entries inside each block.
    pub block_nnz: Vec<usize>,
    pub nnz_true: usize,
}

impl<T: Scalar> BcsrMatrix<T> {
    pub fn from_triplets(m: &TripletMatrix<T>, shape: BlockShape) -> Self {
        let block_rows = m.n_rows().div_ceil(shape.r);
        let block_cols = m.n_cols().div_ceil(shape.c);
        let blocks = group_blocks(m, shape);
        let mut block_row_ptr = vec![0; block_rows + 1];
        let mut block_col_idx = Vec::with_capacity(blocks.len());
        let mut block_values = Vec::with_capacity(blocks.len() * shape.cells());
        let mut block_nnz = Vec::with_capacity(blocks.len());
        for (br, bc, tile, nnz) in blocks {
            block_row_ptr[br + 1] += 1;
            block_col_idx.push(bc);
            block_values.extend(tile);
            block_nnz.push(nnz);
        }
        for i in 0..block_rows {
            block_row_ptr[i + 1] += block_row_ptr[i];
        }
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            shape,
            block_rows,
            block_cols,
            block_row_ptr,
            block_col_idx,
            block_values,
            block_nnz,
            nnz_true: m.nnz(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.block_col_idx.len()
    }

    pub fn tile(&self, block: usize) -> &[T] {
        &self.block_values[block * self.shape.cells()..(block + 1) * self.shape.cells()]
    }

    pub fn fill_ratio(&self) -> f64 {
        fill_ratio(self.n_blocks(), self.shape, self.nnz_true)
    }

    /// Drops every zero cell, so fill (and explicit zeros) disappear.
    pub fn to_triplets(&self) -> TripletMatrix<T> {
        let coords = (0..self.block_rows).flat_map(|br| {
            (self.block_row_ptr[br]..self.block_row_ptr[br + 1]).map(move |k| (br, self.block_col_idx[k]))
        });
        blocks_to_triplets(self.n_rows, self.n_cols, self.shape, coords, &self.block_values)
    }

    /// `(block_rows + 1)` offsets and one column index per block at 4 bytes,
    /// plus `r * c` values per block.
    pub fn storage_bytes(&self) -> usize {
        (self.block_rows + 1) * INDEX_BYTES
            + self.n_blocks() * (INDEX_BYTES + self.shape.cells() * T::DTYPE.width_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcooMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub shape: BlockShape,
    pub block_rows: usize,
    pub block_cols: usize,
    pub block_row: Vec<usize>,
    pub block_col: Vec<usize>,
    pub block_values: Vec<T>,
    pub block_nnz: Vec<usize>,
    pub nnz_true: usize,
}

impl<T: Scalar> BcooMatrix<T> {
    pub fn from_triplets(m: &TripletMatrix<T>, shape: BlockShape) -> Self {
        let blocks = group_blocks(m, shape);
        let mut out = Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            shape,
            block_rows: m.n_rows().div_ceil(shape.r),
            block_cols: m.n_cols().div_ceil(shape.c),
            block_row: Vec::with_capacity(blocks.len()),
            block_col: Vec::with_capacity(blocks.len()),
            block_values: Vec::with_capacity(blocks.len() * shape.cells()),
            block_nnz: Vec::with_capacity(blocks.len()),
            nnz_true: m.nnz(),
        };
        for (br, bc, tile, nnz) in blocks {
            out.block_row.push(br);
            out.block_col.push(bc);
            out.block_values.extend(tile);
            out.block_nnz.push(nnz);
        }
        out
    }

    pub fn n_blocks(&self) -> usize {
        self.block_row.len()
    }

    pub fn tile(&self, block: usize) -> &[T] {
        &self.block_values[block * self.shape.cells()..(block + 1) * self.shape.cells()]
    }

    pub fn fill_ratio(&self) -> f64 {
        fill_ratio(self.n_blocks(), self.shape, self.nnz_true)
    }

    pub fn to_triplets(&self) -> TripletMatrix<T> {
        let coords = self.block_row.iter().copied().zip(self.block_col.iter().copied());
        blocks_to_triplets(self.n_rows, self.n_cols, self.shape, coords, &self.block_values)
    }

    /// Per block: 4-byte block-row and block-column indices plus `r * c`
    /// values.
    pub fn storage_bytes(&self) -> usize {
        self.n_blocks() * (2 * INDEX_BYTES + self.shape.cells() * T::DTYPE.width_bytes())
    }
}
