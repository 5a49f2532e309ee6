mod common;

use std::collections::HashSet;

use pim_spmv::formats::{parse_matrix_market_str, write_matrix_market, BcooMatrix, BcsrMatrix, CsrMatrix};
use pim_spmv::{generate_synthetic, BlockShape, FormattedMatrix, SparseFormat, SyntheticKind, TripletMatrix};
use proptest::prelude::*;

use common::arb_matrix;

proptest! {
    #[test]
    fn every_format_round_trips(m in arb_matrix(12, 12), r in 1usize..5, c in 1usize..5) {
        let shape = BlockShape::new(r, c).unwrap();
        for format in SparseFormat::ALL {
            let back = FormattedMatrix::build(&m, format, shape).to_triplets();
            prop_assert_eq!(&back, &m, "{}", format);
        }
    }

    #[test]
    fn blocked_counts_match_coordinate_grouping(m in arb_matrix(16, 16), r in 1usize..5, c in 1usize..5) {
        let shape = BlockShape::new(r, c).unwrap();
        let expected: HashSet<(usize, usize)> = m.triples().map(|(i, j, _)| (i / r, j / c)).collect();
        let bcsr = BcsrMatrix::from_triplets(&m, shape);
        let bcoo = BcooMatrix::from_triplets(&m, shape);
        prop_assert_eq!(bcsr.n_blocks(), expected.len());
        prop_assert_eq!(bcoo.n_blocks(), expected.len());
        prop_assert_eq!(bcsr.block_nnz.iter().sum::<usize>(), m.nnz());
        if m.nnz() > 0 {
            prop_assert!(bcsr.fill_ratio() >= 1.0);
        }
    }

    #[test]
    fn csr_offsets_are_monotone(m in arb_matrix(12, 12)) {
        let csr = CsrMatrix::from_triplets(&m);
        prop_assert_eq!(csr.row_ptr.len(), m.n_rows() + 1);
        prop_assert!(csr.row_ptr.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*csr.row_ptr.last().unwrap(), m.nnz());
    }

    #[test]
    fn market_text_round_trips(m in arb_matrix(10, 10)) {
        let mut text = Vec::new();
        write_matrix_market(&m, &mut text).unwrap();
        let back: TripletMatrix<i32> = parse_matrix_market_str(std::str::from_utf8(&text).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn storage_sizes_follow_layout() {
    let m: TripletMatrix<f64> = generate_synthetic(SyntheticKind::Identity, 8, 8).unwrap();
    let shape = BlockShape::new(2, 2).unwrap();
    let size = |f| FormattedMatrix::build(&m, f, shape).storage_bytes();
    assert_eq!(size(SparseFormat::Csr), 9 * 4 + 8 * (4 + 8));
    assert_eq!(size(SparseFormat::Coo), 8 * (4 + 4 + 8));
    // 4 diagonal 2x2 blocks
    assert_eq!(size(SparseFormat::Bcsr), 5 * 4 + 4 * (4 + 4 * 8));
    assert_eq!(size(SparseFormat::Bcoo), 4 * (8 + 4 * 8));
}

#[test]
fn uniform_fixture_blocking() {
    let m: TripletMatrix<f32> =
        generate_synthetic(SyntheticKind::UniformRandom { density: 0.05, seed: 1 }, 64, 64).unwrap();
    let bcsr = BcsrMatrix::from_triplets(&m, BlockShape::default());
    // frozen from a coordinate-grouping count over the generated entries
    assert_eq!(m.nnz(), 216);
    assert_eq!(bcsr.n_blocks(), 148);
    assert!((bcsr.fill_ratio() - 148.0 * 16.0 / 216.0).abs() < 1e-12);
}

#[test]
fn zipf_fixture_is_skewed() {
    let m: TripletMatrix<f64> = generate_synthetic(
        SyntheticKind::ZipfRows {
            exponent: 1.5,
            avg_nnz_per_row: 8.0,
            seed: 7,
        },
        1000,
        1000,
    )
    .unwrap();
    let counts = m.row_counts();
    let max = *counts.iter().max().unwrap();
    let mean = m.nnz() as f64 / 1000.0;
    assert_eq!((m.nnz(), max), (7429, 106));
    assert!(max as f64 / mean >= 4.0);
}

#[test]
fn generators_fill_expected_patterns() {
    let dense: TripletMatrix<i8> = generate_synthetic(SyntheticKind::Dense, 3, 5).unwrap();
    assert_eq!(dense.nnz(), 15);
    let banded: TripletMatrix<i64> = generate_synthetic(SyntheticKind::Banded { half_width: 3 }, 128, 128).unwrap();
    assert_eq!(banded.bandwidth(), 3);
    // 128 rows of width 7, minus the triangles clipped at both corners
    assert_eq!(banded.nnz(), 128 * 7 - 2 * (3 + 2 + 1));
    let uniform: TripletMatrix<i32> =
        generate_synthetic(SyntheticKind::UniformRandom { density: 0.02, seed: 1 }, 512, 512).unwrap();
    let expected = 0.02 * 512.0 * 512.0;
    assert!((uniform.nnz() as f64 - expected).abs() < 0.1 * expected);
}

#[test]
fn market_errors_carry_line_numbers() {
    let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n3 1 2.0\n";
    let err = parse_matrix_market_str::<f64>(text).unwrap_err();
    assert!(err.to_string().starts_with("line 5:"), "{err}");
}
