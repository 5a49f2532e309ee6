//! Deterministic synthetic matrices.
//!
//! Non-identity generators fill values with small integers in `1..=9` so
//! that every element type represents them exactly.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::element::Scalar;
use super::triplet::{Entry, TripletMatrix};
use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    Identity,
    Dense,
    /// Entries with `|row - col| <= half_width`.
    Banded {
        half_width: usize,
    },
    /// Each cell is stored independently with probability `density`.
    UniformRandom {
        density: f64,
        seed: u64,
    },
    /// Per-row counts drawn from a Zipf law on `1..=k_max`, where `k_max`
    /// is the smallest cut-off whose mean reaches `avg_nnz_per_row`.
    ZipfRows {
        exponent: f64,
        avg_nnz_per_row: f64,
        seed: u64,
    },
}

impl SyntheticKind {
    /// Parses `identity`, `dense`, `banded:B`, `uniform:DENSITY` or
    /// `zipf:EXPONENT:AVG`. Random kinds require `seed`.
    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self, FormatError> {
        let bad = |msg: &str| FormatError::Generator(format!("`{text}`: {msg}"));
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
        let need_seed = || seed.ok_or_else(|| bad("random generators require --seed"));
        match parts.as_slice() {
            ["identity"] => Ok(Self::Identity),
            ["dense"] => Ok(Self::Dense),
            ["banded", b] => Ok(Self::Banded {
                half_width: b.parse().map_err(|_| bad("invalid band width"))?,
            }),
            ["uniform", d] => Ok(Self::UniformRandom {
                density: num(d)?,
                seed: need_seed()?,
            }),
            ["zipf", e, a] => Ok(Self::ZipfRows {
                exponent: num(e)?,
                avg_nnz_per_row: num(a)?,
                seed: need_seed()?,
            }),
            _ => Err(bad("expected identity, dense, banded:B, uniform:D or zipf:S:AVG")),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Dense => write!(f, "dense"),
            Self::Banded { half_width } => write!(f, "banded:{half_width}"),
            Self::UniformRandom { density, seed } => write!(f, "uniform:{density}@{seed}"),
            Self::ZipfRows {
                exponent,
                avg_nnz_per_row,
                seed,
            } => write!(f, "zipf:{exponent}:{avg_nnz_per_row}@{seed}"),
        }
    }
}

fn pattern_value(row: usize, col: usize) -> i64 {
    1 + ((row * 7 + col * 13) % 9) as i64
}

/// Smallest `k_max` in `1..=limit` whose truncated Zipf mean reaches `avg`.
fn zipf_cutoff(exponent: f64, avg: f64, limit: usize) -> usize {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for k in 1..=limit {
        let kf = k as f64;
        num += kf.powf(1.0 - exponent);
        den += kf.powf(-exponent);
        if num / den >= avg {
            return k;
        }
    }
    limit
}

fn sorted_columns(rng: &mut ChaCha8Rng, n_cols: usize, count: usize) -> Vec<usize> {
    let mut cols = index::sample(rng, n_cols, count.min(n_cols)).into_vec();
    cols.sort_unstable();
    cols
}

pub fn generate_synthetic<T: Scalar>(
    kind: SyntheticKind,
    n_rows: usize,
    n_cols: usize,
) -> Result<TripletMatrix<T>, FormatError> {
    let mut entries: Vec<Entry<T>> = Vec::new();
    let mut push = |row: usize, col: usize, v: i64| {
        entries.push(Entry {
            row,
            col,
            value: T::from_i64(v),
        })
    };
    match kind {
        SyntheticKind::Identity => {
            for i in 0..n_rows.min(n_cols) {
                push(i, i, 1);
            }
        }
        SyntheticKind::Dense => {
            for i in 0..n_rows {
                for j in 0..n_cols {
                    push(i, j, pattern_value(i, j));
                }
            }
        }
        SyntheticKind::Banded { half_width } => {
            for i in 0..n_rows {
                let lo = i.saturating_sub(half_width);
                let hi = (i + half_width + 1).min(n_cols);
                for j in lo..hi {
                    push(i, j, pattern_value(i, j));
                }
            }
        }
        SyntheticKind::UniformRandom { density, seed } => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(FormatError::Generator(format!("density {density} outside (0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let per_row = Binomial::new(n_cols as u64, density).map_err(|e| FormatError::Generator(e.to_string()))?;
            for i in 0..n_rows {
                let count = per_row.sample(&mut rng) as usize;
                for j in sorted_columns(&mut rng, n_cols, count) {
                    let v = rng.random_range(1..=9);
                    push(i, j, v);
                }
            }
        }
        SyntheticKind::ZipfRows {
            exponent,
            avg_nnz_per_row,
            seed,
        } => {
            if exponent.is_nan() || exponent <= 0.0 {
                return Err(FormatError::Generator(format!(
                    "zipf exponent {exponent} must be positive"
                )));
            }
            if avg_nnz_per_row.is_nan() || avg_nnz_per_row < 1.0 {
                return Err(FormatError::Generator(format!(
                    "average row count {avg_nnz_per_row} must be at least 1"
                )));
            }
            if n_cols == 0 {
                return Ok(TripletMatrix::empty(n_rows, n_cols));
            }
            let k_max = zipf_cutoff(exponent, avg_nnz_per_row, n_cols);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let counts = Zipf::new(k_max as f64, exponent).map_err(|e| FormatError::Generator(e.to_string()))?;
            for i in 0..n_rows {
                let count = counts.sample(&mut rng) as usize;
                for j in sorted_columns(&mut rng, n_cols, count) {
                    let v = rng.random_range(1..=9);
                    push(i, j, v);
                }
            }
        }
    }
    Ok(TripletMatrix::from_sorted_unchecked(n_rows, n_cols, entries))
}
