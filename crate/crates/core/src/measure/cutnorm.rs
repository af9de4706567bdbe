//! Exact cut norm by exhaustive enumeration of the smaller side.
//!
//! For a fixed row set `S` the best column set is sign-determined: collect
//! the columns whose partial sums over `S` are positive (or negative, for
//! the `-g` half of the absolute value). Row sets are walked in Gray-code
//! order so each step updates the partial sums with a single row.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::partition::Rectangle;
use super::real::{Integrable, RealMatrix};
use crate::error::{Error, Result};
use crate::TOL;

pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 22;

/// Column partial sums within this band count as zero.
const SIGN_EPS: f64 = 1e-10;

/// Gray-code runs at least this long per parallel chunk.
const MIN_LOW_BITS: usize = 12;
const MAX_HIGH_BITS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct CutNorm {
    /// `max_{S,T} |sum_{S x T} g|`.
    pub value: f64,
    pub witness: Rectangle,
}

/// `||g||_cut` with the default exhaustive limit on `min(n1, n2)`.
pub fn cut_norm_exact(g: &RealMatrix) -> Result<CutNorm> {
    cut_norm_exact_with_limit(g, DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn cut_norm_exact_with_limit(g: &RealMatrix, limit: usize) -> Result<CutNorm> {
    let transposed = g.n1() > g.n2();
    let lines = if transposed { g.dense_cols() } else { g.dense_rows() };
    let m = lines.len();
    if m > limit.min(63) {
        return Err(Error::ExhaustiveLimit {
            dim: m,
            limit,
            hint: "use the heuristic oracle for larger matrices",
        });
    }
    let high = m.saturating_sub(MIN_LOW_BITS).min(MAX_HIGH_BITS);
    let low = m - high;
    let scan = Scan { lines: &lines, low, transposed };
    let partials: Vec<Option<Candidate>> = (0..1u64 << high)
        .into_par_iter()
        .map(|chunk| scan.run(chunk))
        .collect();
    let best = partials
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Candidate>, c| Some(match acc {
            None => c,
            Some(a) => pick(a, c),
        }))
        .expect("the empty row set is always scanned");
    let witness = best.rect;
    let value = g.raw_sum(&witness).abs();
    Ok(CutNorm { value, witness })
}

struct Candidate {
    value: f64,
    rect: Rectangle,
}

fn pick(a: Candidate, b: Candidate) -> Candidate {
    let tied = b.value >= a.value - TOL && b.rect.witness_cmp(&a.rect) == Ordering::Less;
    if b.value > a.value + TOL || tied {
        b
    } else {
        a
    }
}

struct Scan<'a> {
    lines: &'a [Vec<f64>],
    low: usize,
    transposed: bool,
}

impl Scan<'_> {
    fn run(&self, chunk: u64) -> Option<Candidate> {
        let m = self.lines.len();
        let w = self.lines.first().map_or(0, Vec::len);
        let mut sums = vec![0.0f64; w];
        let mut mask = chunk << self.low;
        for bit in self.low..m {
            if mask >> bit & 1 == 1 {
                add_line(&mut sums, &self.lines[bit], 1.0);
            }
        }
        let mut best: Option<Candidate> = None;
        for t in 0..1u64 << self.low {
            if t > 0 {
                let bit = t.trailing_zeros() as usize;
                mask ^= 1 << bit;
                let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                add_line(&mut sums, &self.lines[bit], sign);
            }
            let (mut pos, mut neg, mut n_pos, mut n_neg) = (0.0, 0.0, 0usize, 0usize);
            for &c in &sums {
                if c > SIGN_EPS {
                    pos += c;
                    n_pos += 1;
                } else if c < -SIGN_EPS {
                    neg -= c;
                    n_neg += 1;
                }
            }
            self.consider(&mut best, pos, mask, n_pos, &sums, true);
            self.consider(&mut best, neg, mask, n_neg, &sums, false);
        }
        best
    }

    fn consider(&self, best: &mut Option<Candidate>, value: f64, mask: u64, n_cols: usize, sums: &[f64], positive: bool) {
        let n_rows = mask.count_ones() as usize;
        let shape = if self.transposed { (n_cols, n_rows) } else { (n_rows, n_cols) };
        let replace = match best {
            None => true,
            Some(b) if value > b.value + TOL => true,
            Some(b) if value >= b.value - TOL => {
                let best_shape = (b.rect.rows().len(), b.rect.cols().len());
                match shape.cmp(&best_shape) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => self.rect(mask, sums, positive).witness_cmp(&b.rect) == Ordering::Less,
                }
            }
            Some(_) => false,
        };
        if replace {
            *best = Some(Candidate { value, rect: self.rect(mask, sums, positive) });
        }
    }

    fn rect(&self, mask: u64, sums: &[f64], positive: bool) -> Rectangle {
        let selected = (0..self.lines.len()).filter(|&b| mask >> b & 1 == 1);
        let others = sums
            .iter()
            .enumerate()
            .filter(|(_, &c)| if positive { c > SIGN_EPS } else { c < -SIGN_EPS })
            .map(|(j, _)| j);
        if self.transposed {
            Rectangle::new(others, selected)
        } else {
            Rectangle::new(selected, others)
        }
    }
}

#[inline]
fn add_line(sums: &mut [f64], line: &[f64], sign: f64) {
    for (s, &v) in sums.iter_mut().zip(line) {
        *s += sign * v;
    }
}
