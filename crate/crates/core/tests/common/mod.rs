#![allow(dead_code)]

use pim_spmv::formats::Scalar;
use pim_spmv::TripletMatrix;
use proptest::prelude::*;

/// Random sparse matrices with distinct coordinates and nonzero values.
pub fn arb_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = TripletMatrix<i32>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::btree_map(
            (0..r, 0..c),
            (1i32..50).prop_map(|v| if v % 2 == 0 { v } else { -v }),
            0..=(r * c).min(60),
        )
        .prop_map(move |cells| {
            TripletMatrix::from_triples(r, c, cells.into_iter().map(|((i, j), v)| (i, j, v))).unwrap()
        })
    })
}

/// Dense reference product, independent of the library's oracle.
pub fn dense_product<T: Scalar>(m: &TripletMatrix<T>, x: &[T]) -> Vec<T> {
    let mut dense = vec![vec![None; m.n_cols()]; m.n_rows()];
    for (i, j, v) in m.triples() {
        dense[i][j] = Some(v);
    }
    dense
        .iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(T::zero(), |acc, (v, &xv)| v.map_or(acc, |v| T::mul_add(acc, v, xv)))
        })
        .collect()
}

/// Per-row populations: `counts[i]` entries in the first columns of row `i`.
pub fn from_row_counts(counts: &[usize]) -> TripletMatrix<i32> {
    let n_cols = counts.iter().copied().max().unwrap_or(0).max(1);
    let triples = counts
        .iter()
        .enumerate()
        .flat_map(|(r, &k)| (0..k).map(move |c| (r, c, 1 + (r + c) as i32 % 5)));
    TripletMatrix::from_triples(counts.len(), n_cols, triples).unwrap()
}
