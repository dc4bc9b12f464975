//! Exact rational scalars and dense matrices.
//!
//! Rationals are `num::BigRational`, which normalizes to lowest terms with a
//! positive denominator on construction. In JSON they travel as strings,
//! `"p/q"` or `"p"` when the denominator is one.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-1.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim().replace('\u{2212}', "-");
    if let Ok(q) = t.parse::<BigRational>() {
        return Ok(q);
    }
    parse_decimal(&t).ok_or_else(|| Error::ParseRational(s.to_string()))
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num::pow(BigInt::from(10), frac_part.len());
    let q = BigRational::new(numer, denom);
    Some(if neg { -q } else { q })
}

pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator too large for a direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub(crate) mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let raw = RationalLiteral::deserialize(d)?;
        raw.into_rational().map_err(de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &[Rational],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(format_rational))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let raw = Vec::<RationalLiteral>::deserialize(d)?;
            raw.into_iter()
                .map(|r| r.into_rational().map_err(de::Error::custom))
                .collect()
        }
    }

    pub mod rows {
        use super::*;

        pub fn serialize<S: Serializer>(
            rows: &[Vec<Rational>],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(
                rows.iter()
                    .map(|r| r.iter().map(format_rational).collect::<Vec<_>>()),
            )
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            let raw = Vec::<Vec<RationalLiteral>>::deserialize(d)?;
            raw.into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|r| r.into_rational().map_err(de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }

    /// Input side is lenient: integers are accepted alongside strings.
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum RationalLiteral {
        Text(String),
        Int(i64),
    }

    impl RationalLiteral {
        fn into_rational(self) -> Result<Rational> {
            match self {
                RationalLiteral::Text(s) => parse_rational(&s),
                RationalLiteral::Int(n) => Ok(int(n)),
            }
        }
    }
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| self.row(r).iter().map(format_rational).collect())
            .collect();
        f.debug_struct("RationalMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("entries", &rows)
            .finish()
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from rows; `cols` is needed to describe a 0-row matrix.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self {
            rows: n,
            cols,
            entries,
        })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| int(x)).collect())
            .collect();
        Self::from_rows(rows, cols).expect("ragged integer matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rational) {
        self.entries[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Rational>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    /// Appends a row of ones, the affine augmentation used throughout.
    pub fn with_ones_row(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(std::iter::repeat_n(Rational::one(), self.cols));
        Self {
            rows: self.rows + 1,
            cols: self.cols,
            entries,
        }
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(to_f64).collect())
            .collect()
    }

    /// Reduced row echelon form. Columns are scanned left to right and the
    /// pivot is the first remaining row with a nonzero entry.
    pub fn rref(&self) -> Echelon {
        let mut m = self.to_rows();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let Some(p) = (lead..self.rows).find(|&r| !m[r][c].is_zero()) else {
                continue;
            };
            m.swap(lead, p);
            let inv = m[lead][c].recip();
            for x in m[lead].iter_mut() {
                *x *= &inv;
            }
            let pivot_row = m[lead].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r == lead || row[c].is_zero() {
                    continue;
                }
                let factor = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &factor * y;
                    }
                }
            }
            pivots.push(c);
            lead += 1;
        }
        m.truncate(lead);
        Echelon {
            matrix: Self::from_rows(m, self.cols).expect("rref keeps the column count"),
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of `{x : M x = 0}` as the rows of the returned matrix, one row
    /// per free column in increasing order.
    pub fn nullspace(&self) -> Self {
        let Echelon { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            out.set(k, f, Rational::one());
            for (r, &p) in pivots.iter().enumerate() {
                out.set(k, p, -matrix.get(r, f).clone());
            }
        }
        out
    }

    /// True when both matrices have the same row space.
    pub fn row_equivalent(&self, other: &Self) -> bool {
        self.cols == other.cols && self.rref().matrix == other.rref().matrix
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn max_abs(&self) -> Rational {
        self.entries
            .iter()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

#[derive(Debug, Clone)]
pub struct Echelon {
    /// Nonzero rows of the reduced echelon form.
    pub matrix: RationalMatrix,
    pub pivots: Vec<usize>,
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_rational::rows::serialize(&self.to_rows(), s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = serde_rational::rows::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, cols).map_err(de::Error::custom)
    }
}
