//! Matrix ingestion and the four compressed representations.

mod blocked;
mod compressed;
mod element;
mod market;
mod synthetic;
mod triplet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use blocked::{BcooMatrix, BcsrMatrix, BlockShape};
pub use compressed::{CooMatrix, CsrMatrix};
pub use element::{ElementType, Scalar, TypedVec, UnknownElementType};
pub use market::{parse_matrix_market, parse_matrix_market_str, write_matrix_market};
pub use synthetic::{generate_synthetic, SyntheticKind};
pub use triplet::{Entry, TripletMatrix};

/// Offsets and indices are laid out in banks as 4-byte integers.
pub const INDEX_BYTES: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate coordinate ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("block shape {r}x{c} must have positive dimensions")]
    BadBlockShape { r: usize, c: usize },
    #[error("generator: {0}")]
    Generator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SparseFormat {
    #[serde(rename = "CSR")]
    Csr,
    #[serde(rename = "COO")]
    Coo,
    #[serde(rename = "BCSR")]
    Bcsr,
    #[serde(rename = "BCOO")]
    Bcoo,
}

impl SparseFormat {
    pub const ALL: [SparseFormat; 4] = [
        SparseFormat::Csr,
        SparseFormat::Coo,
        SparseFormat::Bcsr,
        SparseFormat::Bcoo,
    ];

    pub const fn is_blocked(self) -> bool {
        matches!(self, SparseFormat::Bcsr | SparseFormat::Bcoo)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            SparseFormat::Csr => "CSR",
            SparseFormat::Coo => "COO",
            SparseFormat::Bcsr => "BCSR",
            SparseFormat::Bcoo => "BCOO",
        }
    }
}

impl fmt::Display for SparseFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SparseFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CSR" => Ok(SparseFormat::Csr),
            "COO" => Ok(SparseFormat::Coo),
            "BCSR" => Ok(SparseFormat::Bcsr),
            "BCOO" => Ok(SparseFormat::Bcoo),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

/// A matrix stored in one of the compressed formats.
#[derive(Debug, Clone, PartialEq)]
pub enum FormattedMatrix<T> {
    Csr(CsrMatrix<T>),
    Coo(CooMatrix<T>),
    Bcsr(BcsrMatrix<T>),
    Bcoo(BcooMatrix<T>),
}

impl<T: Scalar> FormattedMatrix<T> {
    pub fn build(m: &TripletMatrix<T>, format: SparseFormat, shape: BlockShape) -> Self {
        match format {
            SparseFormat::Csr => Self::Csr(CsrMatrix::from_triplets(m)),
            SparseFormat::Coo => Self::Coo(CooMatrix::from_triplets(m)),
            SparseFormat::Bcsr => Self::Bcsr(BcsrMatrix::from_triplets(m, shape)),
            SparseFormat::Bcoo => Self::Bcoo(BcooMatrix::from_triplets(m, shape)),
        }
    }

    pub fn format(&self) -> SparseFormat {
        match self {
            Self::Csr(_) => SparseFormat::Csr,
            Self::Coo(_) => SparseFormat::Coo,
            Self::Bcsr(_) => SparseFormat::Bcsr,
            Self::Bcoo(_) => SparseFormat::Bcoo,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Csr(m) => (m.n_rows, m.n_cols),
            Self::Coo(m) => (m.n_rows, m.n_cols),
            Self::Bcsr(m) => (m.n_rows, m.n_cols),
            Self::Bcoo(m) => (m.n_rows, m.n_cols),
        }
    }

    pub fn storage_bytes(&self) -> usize {
        match self {
            Self::Csr(m) => m.storage_bytes(),
            Self::Coo(m) => m.storage_bytes(),
            Self::Bcsr(m) => m.storage_bytes(),
            Self::Bcoo(m) => m.storage_bytes(),
        }
    }

    pub fn to_triplets(&self) -> TripletMatrix<T> {
        match self {
            Self::Csr(m) => m.to_triplets(),
            Self::Coo(m) => m.to_triplets(),
            Self::Bcsr(m) => m.to_triplets(),
            Self::Bcoo(m) => m.to_triplets(),
        }
    }
}
