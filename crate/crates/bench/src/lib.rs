//! Fixtures shared by the benchmarks.

use pim_spmv::{generate_synthetic, SyntheticKind, TripletMatrix};

/// Skewed rows: Zipf(1.5) populations averaging 8 per row.
pub fn zipf(n: usize) -> TripletMatrix<f32> {
    generate_synthetic(
        SyntheticKind::ZipfRows {
            exponent: 1.5,
            avg_nnz_per_row: 8.0,
            seed: 7,
        },
        n,
        n,
    )
    .expect("valid generator")
}

pub fn uniform(n: usize, density: f64) -> TripletMatrix<f32> {
    generate_synthetic(SyntheticKind::UniformRandom { density, seed: 1 }, n, n).expect("valid generator")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_square() {
        let m = super::zipf(64);
        assert_eq!((m.n_rows(), m.n_cols()), (64, 64));
        assert!(super::uniform(64, 0.1).nnz() > 0);
    }
}
