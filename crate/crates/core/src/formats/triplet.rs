use super::element::Scalar;
use super::FormatError;

/// One stored entry of a sparse matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

/// Canonical coordinate form: entries sorted by `(row, col)`, no duplicates.
///
/// Every compressed format is built from this type and converts back to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<Entry<T>>,
}

impl<T: Scalar> TripletMatrix<T> {
    /// Builds a matrix from unordered entries. Sorts them and rejects
    /// out-of-range or duplicate coordinates.
    pub fn new(n_rows: usize, n_cols: usize, mut entries: Vec<Entry<T>>) -> Result<Self, FormatError> {
        for e in &entries {
            if e.row >= n_rows || e.col >= n_cols {
                return Err(FormatError::OutOfBounds {
                    row: e.row,
                    col: e.col,
                    n_rows,
                    n_cols,
                });
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(FormatError::Duplicate {
                row: w[0].row,
                col: w[0].col,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_triples(
        n_rows: usize,
        n_cols: usize,
        triples: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, FormatError> {
        let entries = triples
            .into_iter()
            .map(|(row, col, value)| Entry { row, col, value })
            .collect();
        Self::new(n_rows, n_cols, entries)
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry<T>] {
        &self.entries
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.entries.iter().map(|e| (e.row, e.col, e.value))
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_rows];
        for e in &self.entries {
            counts[e.row] += 1;
        }
        counts
    }

    /// Converts every value to another element type (truncating/saturating
    /// toward the target as [`Scalar::from_f64`] does).
    pub fn cast<U: Scalar>(&self) -> TripletMatrix<U> {
        TripletMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries: self
                .entries
                .iter()
                .map(|e| Entry {
                    row: e.row,
                    col: e.col,
                    value: U::from_f64(e.value.to_f64()),
                })
                .collect(),
        }
    }

    /// Maximum `|row - col|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.entries.iter().map(|e| e.row.abs_diff(e.col)).max().unwrap_or(0)
    }

    /// Entries whose coordinates fall inside a rectangle, in storage order.
    pub fn window(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> impl Iterator<Item = &Entry<T>> + '_ {
        let lo = self.entries.partition_point(|e| e.row < rows.start);
        let hi = self.entries.partition_point(|e| e.row < rows.end);
        self.entries[lo..hi].iter().filter(move |e| cols.contains(&e.col))
    }

    /// Sub-matrix for a rectangle, re-indexed so `(rows.start, cols.start)`
    /// becomes the origin.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        let n_rows = rows.len();
        let n_cols = cols.len();
        let entries = self
            .window(rows, cols)
            .map(|e| Entry {
                row: e.row - r0,
                col: e.col - c0,
                value: e.value,
            })
            .collect();
        Self {
            n_rows,
            n_cols,
            entries,
        }
    }

    /// Sub-matrix made of a run of stored entries, re-indexed to start at
    /// row `row_offset`.
    pub fn entry_slice(&self, range: std::ops::Range<usize>, row_offset: usize, n_rows: usize) -> Self {
        let entries = self.entries[range]
            .iter()
            .map(|e| Entry {
                row: e.row - row_offset,
                col: e.col,
                value: e.value,
            })
            .collect();
        Self {
            n_rows,
            n_cols: self.n_cols,
            entries,
        }
    }

    pub(crate) fn from_sorted_unchecked(n_rows: usize, n_cols: usize, entries: Vec<Entry<T>>) -> Self {
        debug_assert!(entries.windows(2).all(|w| (w[0].row, w[0].col) < (w[1].row, w[1].col)));
        Self {
            n_rows,
            n_cols,
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_sorts_entries() {
        let m = TripletMatrix::from_triples(3, 3, [(2, 0, 1i32), (0, 2, 2), (0, 1, 3)]).unwrap();
        let coords: Vec<_> = m.triples().map(|(r, c, _)| (r, c)).collect();
        assert_eq!(coords, vec![(0, 1), (0, 2), (2, 0)]);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(matches!(
            TripletMatrix::from_triples(2, 2, [(0, 0, 1i32), (0, 0, 2)]),
            Err(FormatError::Duplicate { row: 0, col: 0 })
        ));
        assert!(matches!(
            TripletMatrix::from_triples(2, 2, [(2, 0, 1i32)]),
            Err(FormatError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn submatrix_reindexes() {
        let m = TripletMatrix::from_triples(4, 4, [(0, 0, 1i32), (1, 3, 2), (3, 2, 3)]).unwrap();
        let s = m.submatrix(1..4, 2..4);
        assert_eq!(s.n_rows(), 3);
        assert_eq!(s.triples().collect::<Vec<_>>(), vec![(0, 1, 2), (2, 0, 3)]);
    }
}
