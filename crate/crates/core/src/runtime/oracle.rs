//! Reference SpMV used to verify every run.

use crate::formats::{Scalar, TripletMatrix};

/// `y = A x` accumulated in storage order in the element type's own
/// arithmetic.
pub fn spmv_oracle<T: Scalar>(m: &TripletMatrix<T>, x: &[T]) -> Vec<T> {
    assert_eq!(x.len(), m.n_cols(), "input vector length");
    let mut y = vec![T::zero(); m.n_rows()];
    for e in m.entries() {
        y[e.row] = T::mul_add(y[e.row], e.value, x[e.col]);
    }
    y
}

/// Per row, `sum |a_ij * x_j|` in `f64`: the magnitude that float rounding
/// error is measured against.
pub fn row_scales<T: Scalar>(m: &TripletMatrix<T>, x: &[T]) -> Vec<f64> {
    let mut s = vec![0.0; m.n_rows()];
    for e in m.entries() {
        s[e.row] += (e.value.to_f64() * x[e.col].to_f64()).abs();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixture() {
        let m = TripletMatrix::from_triples(3, 3, [(0, 0, 1i32), (0, 1, 2), (1, 1, 3), (2, 0, 4), (2, 2, 5)]).unwrap();
        assert_eq!(spmv_oracle(&m, &[1, 1, 1]), vec![3, 3, 9]);
    }

    #[test]
    fn zero_matrix() {
        let m = TripletMatrix::<f64>::empty(4, 2);
        assert_eq!(spmv_oracle(&m, &[1.0, 2.0]), vec![0.0; 4]);
    }

    #[test]
    fn wraps_like_the_element_type() {
        let m = TripletMatrix::from_triples(1, 2, [(0, 0, 100i8), (0, 1, 100)]).unwrap();
        assert_eq!(spmv_oracle(&m, &[1, 1]), vec![200u8 as i8]);
    }
}
