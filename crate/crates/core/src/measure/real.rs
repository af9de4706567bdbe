//! Real-valued matrices and integrals over rectangles.

use super::matrix::BinaryMatrix;
use super::partition::{intersect_sorted, Rectangle};
use super::step::{neumaier_sum, StepMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Dense(Vec<f64>),
    /// `f - E(f | A_P)`, kept unexpanded.
    Residual { f: BinaryMatrix, step: StepMatrix },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    n1: usize,
    n2: usize,
    repr: Repr,
}

impl RealMatrix {
    pub fn from_dense(n1: usize, n2: usize, entries: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || entries.len() != n1 * n2 {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n1}x{n2} matrix, got {}",
                n1 * n2,
                entries.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {v}")));
        }
        Ok(RealMatrix { n1, n2, repr: Repr::Dense(entries) })
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let entries = (0..n1 * n2).map(|k| f(k / n2, k % n2)).collect();
        Self::from_dense(n1, n2, entries)
    }

    pub fn zeros(n1: usize, n2: usize) -> Result<Self> {
        Self::from_dense(n1, n2, vec![0.0; n1 * n2])
    }

    pub fn from_binary(f: &BinaryMatrix) -> Self {
        Self::from_fn(f.n1(), f.n2(), |i, j| if f.get(i, j) { 1.0 } else { 0.0 })
            .expect("binary entries are finite")
    }

    /// `f - step`, stored without densifying.
    pub fn residual(f: &BinaryMatrix, step: &StepMatrix) -> Result<Self> {
        if (f.n1(), f.n2()) != (step.n1(), step.n2()) {
            return Err(Error::InvalidMatrix("residual of mismatched shapes".into()));
        }
        Ok(RealMatrix {
            n1: f.n1(),
            n2: f.n2(),
            repr: Repr::Residual { f: f.clone(), step: step.clone() },
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Dense(e) => e[i * self.n2 + j],
            Repr::Residual { f, step } => f64::from(u8::from(f.get(i, j))) - step.entry(i, j),
        }
    }

    /// Row-major entries.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(e) => e.clone(),
            Repr::Residual { .. } => (0..self.n1 * self.n2).map(|k| self.get(k / self.n2, k % self.n2)).collect(),
        }
    }

    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n1).map(|i| (0..self.n2).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn dense_cols(&self) -> Vec<Vec<f64>> {
        (0..self.n2).map(|j| (0..self.n1).map(|i| self.get(i, j)).collect()).collect()
    }

    pub fn neg(&self) -> RealMatrix {
        RealMatrix {
            n1: self.n1,
            n2: self.n2,
            repr: Repr::Dense(self.to_dense().into_iter().map(|v| -v).collect()),
        }
    }

    pub fn transpose(&self) -> RealMatrix {
        RealMatrix {
            n1: self.n2,
            n2: self.n1,
            repr: Repr::Dense(self.dense_cols().concat()),
        }
    }

    pub fn is_residual(&self) -> bool {
        matches!(self.repr, Repr::Residual { .. })
    }
}

/// Matrices whose entries can be summed over a rectangle.
pub trait Integrable {
    fn dims(&self) -> (usize, usize);

    /// `sum_{(i,j) in A} g(i,j)`, without range checks.
    fn raw_sum(&self, rect: &Rectangle) -> f64;

    fn sum_over(&self, rect: &Rectangle) -> Result<f64> {
        let (n1, n2) = self.dims();
        rect.check_bounds(n1, n2)?;
        Ok(self.raw_sum(rect))
    }

    /// `int_A g dmu = (sum over A) / (n1 n2)`.
    fn integral_over(&self, rect: &Rectangle) -> Result<f64> {
        let (n1, n2) = self.dims();
        Ok(self.sum_over(rect)? / (n1 * n2) as f64)
    }
}

impl Integrable for BinaryMatrix {
    fn dims(&self) -> (usize, usize) {
        (self.n1(), self.n2())
    }

    fn raw_sum(&self, rect: &Rectangle) -> f64 {
        count_ones_in(self, rect) as f64
    }
}

impl Integrable for StepMatrix {
    fn dims(&self) -> (usize, usize) {
        (self.n1(), self.n2())
    }

    fn raw_sum(&self, rect: &Rectangle) -> f64 {
        neumaier_sum(self.partition().cells().iter().enumerate().map(|(c, cell)| {
            let overlap = intersect_sorted(cell.rows(), rect.rows()).len()
                * intersect_sorted(cell.cols(), rect.cols()).len();
            self.value(c) * overlap as f64
        }))
    }
}

impl Integrable for RealMatrix {
    fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn raw_sum(&self, rect: &Rectangle) -> f64 {
        match &self.repr {
            Repr::Dense(e) => neumaier_sum(rect.entries().map(|(i, j)| e[i * self.n2 + j])),
            Repr::Residual { f, step } => f.raw_sum(rect) - step.raw_sum(rect),
        }
    }
}

pub(crate) fn count_ones_in(f: &BinaryMatrix, rect: &Rectangle) -> usize {
    rect.rows()
        .iter()
        .map(|&i| {
            let row = f.row(i);
            rect.cols().iter().filter(|&&j| row[j]).count()
        })
        .sum()
}

/// `int_A g dmu`.
pub fn integral_over<G: Integrable + ?Sized>(g: &G, rect: &Rectangle) -> Result<f64> {
    g.integral_over(rect)
}
