//! Sparse `{0,1}` matrices on `[n1] x [n2]` and their text format.
//!
//! Indices are 0-based inside the library. The text format is 1-based:
//!
//! ```text
//! # a 2x2 identity
//! 2 2
//! 1 1
//! 2 2
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    n1: usize,
    n2: usize,
    bits: Vec<bool>,
    ones: usize,
}

impl BinaryMatrix {
    /// Builds a matrix from 0-based one-entries. Duplicates and out-of-range
    /// pairs are rejected.
    pub fn new(n1: usize, n2: usize, ones: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidMatrix(format!("dimensions must be positive, got {n1}x{n2}")));
        }
        let mut bits = vec![false; n1 * n2];
        let mut count = 0;
        for (i, j) in ones {
            if i >= n1 || j >= n2 {
                return Err(Error::IndexOutOfRange { row: i, col: j, n1, n2 });
            }
            let slot = &mut bits[i * n2 + j];
            if *slot {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({}, {})", i + 1, j + 1)));
            }
            *slot = true;
            count += 1;
        }
        Ok(BinaryMatrix { n1, n2, bits, ones: count })
    }

    /// Row-major dense constructor.
    pub fn from_dense(n1: usize, n2: usize, bits: Vec<bool>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || bits.len() != n1 * n2 {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n1}x{n2} matrix, got {}",
                n1 * n2,
                bits.len()
            )));
        }
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(BinaryMatrix { n1, n2, bits, ones })
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..n1 * n2).map(|k| f(k / n2, k % n2)).collect();
        Self::from_dense(n1, n2, bits)
    }

    pub fn zeros(n1: usize, n2: usize) -> Result<Self> {
        Self::from_fn(n1, n2, |_, _| false)
    }

    pub fn all_ones(n1: usize, n2: usize) -> Result<Self> {
        Self::from_fn(n1, n2, |_, _| true)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| i == j)
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n2 + j]
    }

    /// Number of one-entries.
    #[inline]
    pub fn count_ones(&self) -> usize {
        self.ones
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n1 * self.n2
    }

    /// `|ones| / (n1 n2)`, which is also the `L_1` norm under the uniform measure.
    pub fn density(&self) -> f64 {
        self.ones as f64 / self.size() as f64
    }

    /// One-entries in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n2 = self.n2;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / n2, k % n2))
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n2..(i + 1) * self.n2]
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let bits = (0..self.size())
            .map(|k| {
                let (j, i) = (k / self.n1, k % self.n1);
                self.get(i, j)
            })
            .collect();
        BinaryMatrix { n1: self.n2, n2: self.n1, bits, ones: self.ones }
    }

    /// Parses the line-oriented text format (header `n1 n2`, then 1-based
    /// `i j` pairs). Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut bits = Vec::new();
        let mut ones = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let fields = parse_usize_fields(line, line_no)?;
            if fields.len() != 2 {
                return Err(Error::parse(line_no, format!("expected two integers, found {}", fields.len())));
            }
            let (a, b) = (fields[0], fields[1]);
            match header {
                None => {
                    if a == 0 || b == 0 {
                        return Err(Error::parse(line_no, "dimensions must be positive"));
                    }
                    header = Some((a, b));
                    bits = vec![false; a * b];
                }
                Some((n1, n2)) => {
                    if a == 0 || b == 0 || a > n1 || b > n2 {
                        return Err(Error::parse(
                            line_no,
                            format!("entry ({a}, {b}) outside [1..{n1}] x [1..{n2}]"),
                        ));
                    }
                    let slot = &mut bits[(a - 1) * n2 + (b - 1)];
                    if *slot {
                        return Err(Error::parse(line_no, format!("duplicate entry ({a}, {b})")));
                    }
                    *slot = true;
                    ones += 1;
                }
            }
        }
        let (n1, n2) = header.ok_or_else(|| Error::parse(0, "missing \"n1 n2\" header"))?;
        Ok(BinaryMatrix { n1, n2, bits, ones })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n1, self.n2);
        for (i, j) in self.ones() {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }
}

pub(crate) fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(pos) => raw[..pos].trim(),
        None => raw.trim(),
    }
}

pub(crate) fn parse_usize_fields(line: &str, line_no: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("not a nonnegative integer: {tok:?}")))
        })
        .collect()
}
