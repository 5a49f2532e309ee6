//! Matrix Market coordinate files.
//!
//! Accepted header: `%%MatrixMarket matrix coordinate <field> <symmetry>`
//! with field `real`, `integer` or `pattern` and symmetry `general` or
//! `symmetric`. Keywords are case-insensitive.

use std::io::{self, BufRead, Write};

use super::element::Scalar;
use super::triplet::{Entry, TripletMatrix};
use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(Field, Symmetry), FormatError> {
    let lower = line.trim().to_ascii_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(
            1,
            "malformed header, expected `%%MatrixMarket matrix coordinate <field> <symmetry>`",
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(
            1,
            format!("unsupported storage `{}`, only `coordinate` is accepted", tokens[2]),
        ));
    }
    let field = match tokens[3] {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };
    Ok((field, symmetry))
}

fn parse_index(tok: Option<&str>, line: usize, what: &str) -> Result<usize, FormatError> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

/// Parses a Matrix Market coordinate stream.
///
/// Symmetric files are expanded (an off-diagonal `(i, j)` also yields
/// `(j, i)`), `pattern` entries take value one, and duplicate coordinates
/// are rejected rather than summed.
pub fn parse_matrix_market<T: Scalar, R: BufRead>(reader: R) -> Result<TripletMatrix<T>, FormatError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let (field, symmetry) = parse_header(&header?)?;

    let mut size: Option<(usize, usize, usize)> = None;
    // (row, col, value, line)
    let mut raw: Vec<(usize, usize, T, usize)> = Vec::new();
    let mut seen = 0usize;

    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let Some((n_rows, n_cols, declared)) = size else {
            let r = parse_index(toks.next(), lineno, "row count")?;
            let c = parse_index(toks.next(), lineno, "column count")?;
            let n = parse_index(toks.next(), lineno, "entry count")?;
            if toks.next().is_some() {
                return Err(parse_err(lineno, "size line must hold exactly three integers"));
            }
            size = Some((r, c, n));
            raw.reserve(if symmetry == Symmetry::Symmetric { 2 * n } else { n });
            continue;
        };

        seen += 1;
        if seen > declared {
            return Err(parse_err(
                lineno,
                format!("entry count mismatch: header declares {declared} entries, found more"),
            ));
        }
        let i = parse_index(toks.next(), lineno, "row index")?;
        let j = parse_index(toks.next(), lineno, "column index")?;
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(parse_err(
                lineno,
                format!("index ({i}, {j}) out of range for a {n_rows}x{n_cols} matrix"),
            ));
        }
        let value = match field {
            Field::Pattern => T::one(),
            Field::Real | Field::Integer => {
                let tok = toks.next().ok_or_else(|| parse_err(lineno, "missing value"))?;
                T::parse_token(tok).ok_or_else(|| parse_err(lineno, format!("invalid value `{tok}`")))?
            }
        };
        if toks.next().is_some() {
            return Err(parse_err(lineno, "trailing tokens after entry"));
        }
        raw.push((i - 1, j - 1, value, lineno));
        if symmetry == Symmetry::Symmetric && i != j {
            raw.push((j - 1, i - 1, value, lineno));
        }
    }

    let (n_rows, n_cols, declared) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if seen != declared {
        return Err(parse_err(
            0,
            format!("entry count mismatch: header declares {declared} entries, found {seen}"),
        ));
    }

    raw.sort_by_key(|&(r, c, _, line)| (r, c, line));
    if let Some(w) = raw.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(parse_err(
            w[1].3,
            format!("duplicate coordinate ({}, {})", w[1].0 + 1, w[1].1 + 1),
        ));
    }
    let entries = raw
        .into_iter()
        .map(|(row, col, value, _)| Entry { row, col, value })
        .collect();
    Ok(TripletMatrix::from_sorted_unchecked(n_rows, n_cols, entries))
}

pub fn parse_matrix_market_str<T: Scalar>(text: &str) -> Result<TripletMatrix<T>, FormatError> {
    parse_matrix_market(text.as_bytes())
}

/// Writes a `general` coordinate file: `real` for float types, `integer`
/// otherwise. Values use shortest round-trip formatting.
pub fn write_matrix_market<T: Scalar, W: Write>(m: &TripletMatrix<T>, mut out: W) -> io::Result<()> {
    let field = if T::DTYPE.is_float() { "real" } else { "integer" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.triples() {
        writeln!(out, "{} {} {}", r + 1, c + 1, v)?;
    }
    Ok(())
}
