//! Rectangles `S x T` and partitions of `[n1] x [n2]` into rectangles.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when turning a density threshold into an integer side length,
/// so that `eta = 1/3` on `[6]` asks for sides of length 2, not 3.
const SIDE_SLACK: f64 = 1e-9;

/// Smallest nonempty side length `s` with `s / n >= eta`.
pub fn min_side_len(eta: f64, n: usize) -> usize {
    let raw = (eta * n as f64 - SIDE_SLACK).ceil();
    if raw <= 1.0 {
        1
    } else {
        raw as usize
    }
}

/// `S x T` with sorted, duplicate-free sides. Either side may be empty
/// (oracle witnesses); partition cells require both sides nonempty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "RectangleJson", try_from = "RectangleJson")]
pub struct Rectangle {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Rectangle {
    pub fn new(rows: impl IntoIterator<Item = usize>, cols: impl IntoIterator<Item = usize>) -> Self {
        let mut rows: Vec<usize> = rows.into_iter().collect();
        let mut cols: Vec<usize> = cols.into_iter().collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        Rectangle { rows, cols }
    }

    pub fn full(n1: usize, n2: usize) -> Self {
        Rectangle { rows: (0..n1).collect(), cols: (0..n2).collect() }
    }

    pub fn empty() -> Self {
        Rectangle::default()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    /// Number of entries `|S| |T|`.
    pub fn count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    /// `mu(S x T) = |S| |T| / (n1 n2)`.
    pub fn measure(&self, n1: usize, n2: usize) -> f64 {
        self.count() as f64 / (n1 * n2) as f64
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.binary_search(&i).is_ok() && self.cols.binary_search(&j).is_ok()
    }

    pub fn check_bounds(&self, n1: usize, n2: usize) -> Result<()> {
        if let Some(&i) = self.rows.last().filter(|&&i| i >= n1) {
            return Err(Error::IndexOutOfRange { row: i, col: 0, n1, n2 });
        }
        if let Some(&j) = self.cols.last().filter(|&&j| j >= n2) {
            return Err(Error::IndexOutOfRange { row: 0, col: j, n1, n2 });
        }
        Ok(())
    }

    pub fn transpose(&self) -> Rectangle {
        Rectangle { rows: self.cols.clone(), cols: self.rows.clone() }
    }

    /// Tie-break order among equal-value witnesses: `(|rows|, |cols|, rows, cols)`.
    pub fn witness_cmp(&self, other: &Rectangle) -> Ordering {
        (self.rows.len(), self.cols.len(), &self.rows, &self.cols).cmp(&(
            other.rows.len(),
            other.cols.len(),
            &other.rows,
            &other.cols,
        ))
    }

    pub fn intersect(&self, other: &Rectangle) -> Rectangle {
        Rectangle {
            rows: intersect_sorted(&self.rows, &other.rows),
            cols: intersect_sorted(&self.cols, &other.cols),
        }
    }

    /// Entry iterator in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().flat_map(move |&i| self.cols.iter().map(move |&j| (i, j)))
    }
}

pub(crate) fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut x, mut y) = (0, 0);
    let mut out = Vec::new();
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => x += 1,
            Ordering::Greater => y += 1,
            Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out
}

pub(crate) fn difference_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|v| b.binary_search(v).is_err()).collect()
}

/// Wire form of a rectangle: 1-based index lists.
#[derive(Serialize, Deserialize)]
struct RectangleJson {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl From<Rectangle> for RectangleJson {
    fn from(r: Rectangle) -> Self {
        RectangleJson {
            rows: r.rows.iter().map(|i| i + 1).collect(),
            cols: r.cols.iter().map(|j| j + 1).collect(),
        }
    }
}

impl TryFrom<RectangleJson> for Rectangle {
    type Error = String;

    fn try_from(r: RectangleJson) -> std::result::Result<Self, Self::Error> {
        if r.rows.contains(&0) || r.cols.contains(&0) {
            return Err("indices are 1-based; found 0".into());
        }
        Ok(Rectangle::new(r.rows.into_iter().map(|i| i - 1), r.cols.into_iter().map(|j| j - 1)))
    }
}

/// A partition of `[n1] x [n2]` into rectangles, with a per-entry cell map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectPartition {
    n1: usize,
    n2: usize,
    cells: Vec<Rectangle>,
    cell_of: Vec<u32>,
}

impl RectPartition {
    /// Validates that `cells` are nonempty, pairwise disjoint, and cover the box.
    pub fn new(n1: usize, n2: usize, cells: Vec<Rectangle>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidPartition(format!("empty box {n1}x{n2}")));
        }
        const UNSET: u32 = u32::MAX;
        let mut cell_of = vec![UNSET; n1 * n2];
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::InvalidPartition(format!("cell {c} has an empty side")));
            }
            cell.check_bounds(n1, n2)
                .map_err(|e| Error::InvalidPartition(format!("cell {c}: {e}")))?;
            for (i, j) in cell.entries() {
                let slot = &mut cell_of[i * n2 + j];
                if *slot != UNSET {
                    return Err(Error::InvalidPartition(format!(
                        "cells {} and {c} overlap at ({}, {})",
                        *slot,
                        i + 1,
                        j + 1
                    )));
                }
                *slot = c as u32;
            }
        }
        if let Some(k) = cell_of.iter().position(|&c| c == UNSET) {
            return Err(Error::InvalidPartition(format!(
                "entry ({}, {}) is not covered",
                k / n2 + 1,
                k % n2 + 1
            )));
        }
        Ok(RectPartition { n1, n2, cells, cell_of })
    }

    /// `{[n1] x [n2]}`.
    pub fn trivial(n1: usize, n2: usize) -> Self {
        RectPartition {
            n1,
            n2,
            cells: vec![Rectangle::full(n1, n2)],
            cell_of: vec![0; n1 * n2],
        }
    }

    /// Product partition from a row partition and a column partition.
    pub fn grid(n1: usize, n2: usize, row_blocks: &[Vec<usize>], col_blocks: &[Vec<usize>]) -> Result<Self> {
        let cells = row_blocks
            .iter()
            .flat_map(|r| col_blocks.iter().map(move |c| Rectangle::new(r.iter().copied(), c.iter().copied())))
            .collect();
        Self::new(n1, n2, cells)
    }

    /// All singleton cells, row-major.
    pub fn finest(n1: usize, n2: usize) -> Self {
        let cells = (0..n1 * n2).map(|k| Rectangle::new([k / n2], [k % n2])).collect();
        RectPartition { n1, n2, cells, cell_of: (0..(n1 * n2) as u32).collect() }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn cells(&self) -> &[Rectangle] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn into_cells(self) -> Vec<Rectangle> {
        self.cells
    }

    #[inline]
    pub fn cell_of(&self, i: usize, j: usize) -> usize {
        self.cell_of[i * self.n2 + j] as usize
    }

    /// `iota(P)`: the minimum over cells of `min(mu1(P1), mu2(P2))`.
    pub fn iota(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| side_density(c, self.n1, self.n2))
            .fold(1.0, f64::min)
    }

    pub fn ln_iota(&self) -> f64 {
        self.iota().ln()
    }

    /// Whether every cell of `self` lies inside a single cell of `coarser`.
    pub fn refines(&self, coarser: &RectPartition) -> bool {
        self.parent_map(coarser).is_ok()
    }

    /// For each cell of `self`, the index of the `coarser` cell containing it.
    pub fn parent_map(&self, coarser: &RectPartition) -> Result<Vec<usize>> {
        if (self.n1, self.n2) != (coarser.n1, coarser.n2) {
            return Err(Error::InvalidPartition("partitions live on different boxes".into()));
        }
        self.cells
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let (i0, j0) = (cell.rows[0], cell.cols[0]);
                let parent = coarser.cell_of(i0, j0);
                if cell.entries().all(|(i, j)| coarser.cell_of(i, j) == parent) {
                    Ok(parent)
                } else {
                    Err(Error::InvalidPartition(format!("cell {c} straddles several coarser cells")))
                }
            })
            .collect()
    }
}

fn side_density(cell: &Rectangle, n1: usize, n2: usize) -> f64 {
    (cell.rows.len() as f64 / n1 as f64).min(cell.cols.len() as f64 / n2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrants(n: usize) -> RectPartition {
        let h = n / 2;
        let lo: Vec<usize> = (0..h).collect();
        let hi: Vec<usize> = (h..n).collect();
        RectPartition::grid(n, n, &[lo.clone(), hi.clone()], &[lo, hi]).unwrap()
    }

    #[test]
    fn iota_examples() {
        assert_eq!(RectPartition::trivial(5, 7).iota(), 1.0);
        let p = RectPartition::new(
            3,
            3,
            vec![Rectangle::new([0, 1], 0..3), Rectangle::new([2], 0..3)],
        )
        .unwrap();
        assert!((p.iota() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(quadrants(4).iota(), 0.5);
    }

    #[test]
    fn rejects_overlap_gap_and_empty_cells() {
        let overlap = RectPartition::new(2, 2, vec![Rectangle::full(2, 2), Rectangle::new([0], [0])]);
        assert!(matches!(overlap, Err(Error::InvalidPartition(_))));
        let gap = RectPartition::new(2, 2, vec![Rectangle::new([0], [0, 1])]);
        assert!(gap.is_err());
        let empty = RectPartition::new(2, 2, vec![Rectangle::full(2, 2), Rectangle::new([], [0])]);
        assert!(empty.is_err());
    }

    #[test]
    fn refinement_detection() {
        let q = quadrants(4);
        let t = RectPartition::trivial(4, 4);
        assert!(q.refines(&t));
        assert!(!t.refines(&q));
        assert!(RectPartition::finest(4, 4).refines(&q));
        assert_eq!(q.parent_map(&t).unwrap(), vec![0; 4]);
    }

    #[test]
    fn min_side_len_handles_thirds() {
        assert_eq!(min_side_len(1.0 / 3.0, 6), 2);
        assert_eq!(min_side_len(0.25, 8), 2);
        assert_eq!(min_side_len(0.26, 8), 3);
        assert_eq!(min_side_len(1e-300, 8), 1);
    }

    #[test]
    fn rectangle_json_is_one_based() {
        let r = Rectangle::new([0, 2], [1]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"rows":[1,3],"cols":[2]}"#);
        let back: Rectangle = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Rectangle>(r#"{"rows":[0],"cols":[1]}"#).is_err());
    }

    #[test]
    fn witness_order_prefers_small_then_lexicographic() {
        let a = Rectangle::new([0], [0]);
        let b = Rectangle::new([1], [1]);
        let c = Rectangle::new([0, 1], [0]);
        assert_eq!(a.witness_cmp(&b), Ordering::Less);
        assert_eq!(b.witness_cmp(&c), Ordering::Less);
        assert_eq!(Rectangle::empty().witness_cmp(&a), Ordering::Less);
    }
}
