//! Compressed sparse row and coordinate formats.

use super::element::Scalar;
use super::triplet::{Entry, TripletMatrix};
use super::INDEX_BYTES;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_triplets(m: &TripletMatrix<T>) -> Self {
        let mut row_ptr = vec![0; m.n_rows() + 1];
        for e in m.entries() {
            row_ptr[e.row + 1] += 1;
        }
        for i in 0..m.n_rows() {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            row_ptr,
            col_idx: m.entries().iter().map(|e| e.col).collect(),
            values: m.entries().iter().map(|e| e.value).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_nnz(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    pub fn to_triplets(&self) -> TripletMatrix<T> {
        let mut entries = Vec::with_capacity(self.nnz());
        for row in 0..self.n_rows {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                entries.push(Entry {
                    row,
                    col: self.col_idx[k],
                    value: self.values[k],
                });
            }
        }
        TripletMatrix::from_sorted_unchecked(self.n_rows, self.n_cols, entries)
    }

    /// Bank-resident size: `(n_rows + 1)` offsets and `nnz` column indices
    /// at 4 bytes each, plus `nnz` values.
    pub fn storage_bytes(&self) -> usize {
        (self.n_rows + 1) * INDEX_BYTES + self.nnz() * (INDEX_BYTES + T::DTYPE.width_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CooMatrix<T> {
    pub fn from_triplets(m: &TripletMatrix<T>) -> Self {
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            rows: m.entries().iter().map(|e| e.row).collect(),
            cols: m.entries().iter().map(|e| e.col).collect(),
            values: m.entries().iter().map(|e| e.value).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_triplets(&self) -> TripletMatrix<T> {
        let entries = (0..self.nnz())
            .map(|k| Entry {
                row: self.rows[k],
                col: self.cols[k],
                value: self.values[k],
            })
            .collect();
        TripletMatrix::from_sorted_unchecked(self.n_rows, self.n_cols, entries)
    }

    /// Bank-resident size: per entry a 4-byte row index, a 4-byte column
    /// index and one value.
    pub fn storage_bytes(&self) -> usize {
        self.nnz() * (2 * INDEX_BYTES + T::DTYPE.width_bytes())
    }
}
