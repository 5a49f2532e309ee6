//! Value types supported by every kernel, and the arithmetic they use.
//!
//! Integer types wrap at their width; floating-point types follow IEEE-754
//! with plain multiply-then-add (no fused multiply-add), so results are
//! reproducible across platforms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Tag for the six supported element types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Int8,
    Int16,
    Int32,
    Int64,
    Float32,
    Float64,
}

impl ElementType {
    pub const ALL: [ElementType; 6] = [
        ElementType::Int8,
        ElementType::Int16,
        ElementType::Int32,
        ElementType::Int64,
        ElementType::Float32,
        ElementType::Float64,
    ];

    pub const fn width_bytes(self) -> usize {
        match self {
            ElementType::Int8 => 1,
            ElementType::Int16 => 2,
            ElementType::Int32 | ElementType::Float32 => 4,
            ElementType::Int64 | ElementType::Float64 => 8,
        }
    }

    pub const fn is_float(self) -> bool {
        matches!(self, ElementType::Float32 | ElementType::Float64)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            ElementType::Int8 => "int8",
            ElementType::Int16 => "int16",
            ElementType::Int32 => "int32",
            ElementType::Int64 => "int64",
            ElementType::Float32 => "float32",
            ElementType::Float64 => "float64",
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown element type `{0}` (expected one of int8, int16, int32, int64, float32, float64)")]
pub struct UnknownElementType(pub String);

impl FromStr for ElementType {
    type Err = UnknownElementType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "int8" | "i8" => ElementType::Int8,
            "int16" | "i16" => ElementType::Int16,
            "int32" | "i32" => ElementType::Int32,
            "int64" | "i64" => ElementType::Int64,
            "float32" | "f32" | "fp32" => ElementType::Float32,
            "float64" | "f64" | "fp64" => ElementType::Float64,
            _ => return Err(UnknownElementType(s.to_string())),
        })
    }
}

/// Scalar arithmetic used by the kernels and the reference oracle.
pub trait Scalar: Copy + PartialEq + fmt::Debug + fmt::Display + Send + Sync + Serialize + 'static {
    const DTYPE: ElementType;

    fn zero() -> Self;
    fn one() -> Self;
    /// `acc + a * b` in the type's arithmetic.
    fn mul_add(acc: Self, a: Self, b: Self) -> Self;
    fn add(self, other: Self) -> Self;
    /// Converts by truncation toward zero, saturating at the type's range.
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    fn to_f64(self) -> f64;
    /// Parses a Matrix Market value token into this type.
    fn parse_token(tok: &str) -> Option<Self>;
    /// Whether `self` matches `expected` under the type's comparison rule
    /// (exact for integers, relative to `scale` for floats).
    fn close_to(self, expected: Self, scale: f64) -> bool;
    fn into_typed(values: Vec<Self>) -> TypedVec;
}

/// A vector tagged with its element type; serializes as a plain array.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TypedVec {
    Int8(Vec<i8>),
    Int16(Vec<i16>),
    Int32(Vec<i32>),
    Int64(Vec<i64>),
    Float32(Vec<f32>),
    Float64(Vec<f64>),
}

impl TypedVec {
    pub fn dtype(&self) -> ElementType {
        match self {
            TypedVec::Int8(_) => ElementType::Int8,
            TypedVec::Int16(_) => ElementType::Int16,
            TypedVec::Int32(_) => ElementType::Int32,
            TypedVec::Int64(_) => ElementType::Int64,
            TypedVec::Float32(_) => ElementType::Float32,
            TypedVec::Float64(_) => ElementType::Float64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TypedVec::Int8(v) => v.len(),
            TypedVec::Int16(v) => v.len(),
            TypedVec::Int32(v) => v.len(),
            TypedVec::Int64(v) => v.len(),
            TypedVec::Float32(v) => v.len(),
            TypedVec::Float64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64` (lossy for large 64-bit integers).
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TypedVec::Int8(v) => v.iter().map(|&x| x as f64).collect(),
            TypedVec::Int16(v) => v.iter().map(|&x| x as f64).collect(),
            TypedVec::Int32(v) => v.iter().map(|&x| x as f64).collect(),
            TypedVec::Int64(v) => v.iter().map(|&x| x as f64).collect(),
            TypedVec::Float32(v) => v.iter().map(|&x| x as f64).collect(),
            TypedVec::Float64(v) => v.clone(),
        }
    }
}

macro_rules! impl_int_scalar {
    ($t:ty, $tag:expr, $variant:ident) => {
        impl Scalar for $t {
            const DTYPE: ElementType = $tag;

            fn zero() -> Self {
                0
            }
            fn one() -> Self {
                1
            }
            fn mul_add(acc: Self, a: Self, b: Self) -> Self {
                acc.wrapping_add(a.wrapping_mul(b))
            }
            fn add(self, other: Self) -> Self {
                self.wrapping_add(other)
            }
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn from_i64(v: i64) -> Self {
                v.clamp(<$t>::MIN as i64, <$t>::MAX as i64) as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn parse_token(tok: &str) -> Option<Self> {
                if let Ok(v) = tok.parse::<i128>() {
                    return Some(v.clamp(<$t>::MIN as i128, <$t>::MAX as i128) as $t);
                }
                let f = tok.parse::<f64>().ok()?;
                if f.is_nan() {
                    return None;
                }
                Some(f as $t)
            }
            fn into_typed(values: Vec<Self>) -> TypedVec {
                TypedVec::$variant(values)
            }
            fn close_to(self, expected: Self, _scale: f64) -> bool {
                self == expected
            }
        }
    };
}

impl_int_scalar!(i8, ElementType::Int8, Int8);
impl_int_scalar!(i16, ElementType::Int16, Int16);
impl_int_scalar!(i32, ElementType::Int32, Int32);
impl_int_scalar!(i64, ElementType::Int64, Int64);

macro_rules! impl_float_scalar {
    ($t:ty, $tag:expr, $variant:ident, $tol:expr) => {
        impl Scalar for $t {
            const DTYPE: ElementType = $tag;

            fn zero() -> Self {
                0.0
            }
            fn one() -> Self {
                1.0
            }
            fn mul_add(acc: Self, a: Self, b: Self) -> Self {
                acc + a * b
            }
            fn add(self, other: Self) -> Self {
                self + other
            }
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn parse_token(tok: &str) -> Option<Self> {
                tok.parse::<$t>().ok()
            }
            fn into_typed(values: Vec<Self>) -> TypedVec {
                TypedVec::$variant(values)
            }
            fn close_to(self, expected: Self, scale: f64) -> bool {
                if self == expected || (self.is_nan() && expected.is_nan()) {
                    return true;
                }
                let diff = (self as f64 - expected as f64).abs();
                diff <= $tol * scale.max((expected as f64).abs())
            }
        }
    };
}

impl_float_scalar!(f32, ElementType::Float32, Float32, 1e-5);
impl_float_scalar!(f64, ElementType::Float64, Float64, 1e-12);

/// Runs `$body` with `$t` bound to the Rust type for an [`ElementType`].
#[macro_export]
macro_rules! with_element_type {
    ($dtype:expr, $t:ident => $body:expr) => {
        match $dtype {
            $crate::formats::ElementType::Int8 => {
                type $t = i8;
                $body
            }
            $crate::formats::ElementType::Int16 => {
                type $t = i16;
                $body
            }
            $crate::formats::ElementType::Int32 => {
                type $t = i32;
                $body
            }
            $crate::formats::ElementType::Int64 => {
                type $t = i64;
                $body
            }
            $crate::formats::ElementType::Float32 => {
                type $t = f32;
                $body
            }
            $crate::formats::ElementType::Float64 => {
                type $t = f64;
                $body
            }
        }
    };
}
