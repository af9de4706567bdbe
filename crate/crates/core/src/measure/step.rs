//! Step matrices `E(f | A_P)`: one value per cell of a rectangle partition.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::BinaryMatrix;
use super::partition::{RectPartition, Rectangle};
use super::real::RealMatrix;
use crate::error::{Error, Result};

/// An exponent `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("exponent must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(Exponent::Infinity);
        }
        Ok(Exponent::Finite(p))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// The value as an `f64` (`inf` for the infinite exponent).
    pub fn value(&self) -> f64 {
        match *self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `p_dagger = min(2, p)`.
    pub fn dagger(&self) -> f64 {
        self.value().min(2.0)
    }

    /// Conjugate exponent of `p_dagger`; at least 2 whenever `p > 1`.
    pub fn dagger_conjugate(&self) -> f64 {
        let d = self.dagger();
        d / (d - 1.0)
    }

    pub fn exceeds_one(&self) -> bool {
        self.value() > 1.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent {s:?}")))
                .and_then(Exponent::finite),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::finite(p),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A cut matrix `c * 1_{S x T}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutMatrix {
    pub support: Rectangle,
    pub coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct CutMatrixJson {
    rows: Vec<usize>,
    cols: Vec<usize>,
    c: f64,
}

impl Serialize for CutMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CutMatrixJson {
            rows: self.support.rows().iter().map(|i| i + 1).collect(),
            cols: self.support.cols().iter().map(|j| j + 1).collect(),
            c: self.coefficient,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CutMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CutMatrixJson::deserialize(d)?;
        if raw.rows.contains(&0) || raw.cols.contains(&0) {
            return Err(serde::de::Error::custom("indices are 1-based; found 0"));
        }
        Ok(CutMatrix {
            support: Rectangle::new(raw.rows.into_iter().map(|i| i - 1), raw.cols.into_iter().map(|j| j - 1)),
            coefficient: raw.c,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepMatrix {
    partition: RectPartition,
    values: Vec<f64>,
    /// Ones per cell when built from a `{0,1}` matrix; values are then exact
    /// rationals `counts[c] / |cell|`.
    counts: Option<Vec<u64>>,
}

impl StepMatrix {
    pub fn from_values(partition: RectPartition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} cells",
                values.len(),
                partition.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite step value {v}")));
        }
        Ok(StepMatrix { partition, values, counts: None })
    }

    pub fn partition(&self) -> &RectPartition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Exact cell value `ones / |cell|`, when known.
    pub fn value_ratio(&self, cell: usize) -> Option<Ratio<u64>> {
        let counts = self.counts.as_ref()?;
        Some(Ratio::new(counts[cell], self.partition.cells()[cell].count() as u64))
    }

    pub fn cell_ones(&self, cell: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| c[cell])
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[self.partition.cell_of(i, j)]
    }

    pub fn n1(&self) -> usize {
        self.partition.n1()
    }

    pub fn n2(&self) -> usize {
        self.partition.n2()
    }

    fn cell_measure(&self, cell: usize) -> f64 {
        self.partition.cells()[cell].measure(self.n1(), self.n2())
    }

    /// `sum_cells value * mu(cell)`.
    pub fn mean(&self) -> f64 {
        (0..self.values.len()).map(|c| self.values[c] * self.cell_measure(c)).sum()
    }

    /// Exact mean `sum_cells ones / (n1 n2)`, when the counts are known.
    pub fn exact_mean(&self) -> Option<Ratio<u64>> {
        let counts = self.counts.as_ref()?;
        Some(Ratio::new(counts.iter().sum(), (self.n1() * self.n2()) as u64))
    }

    /// `L_p` norm under the uniform probability measure. Rejects `p <= 1`;
    /// use [`StepMatrix::l1_norm`] for `p = 1`.
    pub fn lp_norm(&self, p: Exponent) -> Result<f64> {
        match p {
            Exponent::Infinity => Ok(self.values.iter().fold(0.0, |m, v| m.max(v.abs()))),
            Exponent::Finite(p) if p > 1.0 => Ok(self.finite_norm(p)),
            Exponent::Finite(p) => Err(Error::InvalidParameter(format!(
                "step_lp_norm needs p > 1, got {p}"
            ))),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.finite_norm(1.0)
    }

    fn finite_norm(&self, p: f64) -> f64 {
        let sum: f64 = (0..self.values.len())
            .map(|c| self.values[c].abs().powf(p) * self.cell_measure(c))
            .sum();
        sum.powf(1.0 / p)
    }

    /// `self - coarser`, expressed on `self`'s partition. `self` must refine
    /// `coarser`.
    pub fn difference(&self, coarser: &StepMatrix) -> Result<StepMatrix> {
        let parents = self.partition.parent_map(&coarser.partition)?;
        let values = parents
            .iter()
            .enumerate()
            .map(|(c, &p)| self.values[c] - coarser.values[p])
            .collect();
        StepMatrix::from_values(self.partition.clone(), values)
    }

    /// The step matrix as a sum of cut matrices with disjoint supports; zero
    /// cells are omitted.
    pub fn cut_matrices(&self) -> Vec<CutMatrix> {
        self.partition
            .cells()
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(cell, &v)| CutMatrix { support: cell.clone(), coefficient: v })
            .collect()
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix::from_fn(self.n1(), self.n2(), |i, j| self.entry(i, j))
            .expect("step values are finite")
    }
}

/// `E(f | A_P)`: per-cell averages of `f`, kept as exact counts.
pub fn conditional_expectation(f: &BinaryMatrix, partition: &RectPartition) -> Result<StepMatrix> {
    check_dims(f.n1(), f.n2(), partition)?;
    let mut counts = vec![0u64; partition.len()];
    for (i, j) in f.ones() {
        counts[partition.cell_of(i, j)] += 1;
    }
    let values = partition
        .cells()
        .iter()
        .zip(&counts)
        .map(|(cell, &k)| k as f64 / cell.count() as f64)
        .collect();
    Ok(StepMatrix { partition: partition.clone(), values, counts: Some(counts) })
}

/// Per-cell averages of a real matrix. Cells on which `g` is constant keep
/// that constant bit-for-bit.
pub fn conditional_expectation_real(g: &RealMatrix, partition: &RectPartition) -> Result<StepMatrix> {
    check_dims(g.n1(), g.n2(), partition)?;
    let values = partition
        .cells()
        .iter()
        .map(|cell| {
            let first = g.get(cell.rows()[0], cell.cols()[0]);
            if cell.entries().all(|(i, j)| g.get(i, j) == first) {
                return first;
            }
            neumaier_sum(cell.entries().map(|(i, j)| g.get(i, j))) / cell.count() as f64
        })
        .collect();
    StepMatrix::from_values(partition.clone(), values)
}

/// `||g||_{L_p}` for a step matrix.
pub fn step_lp_norm(g: &StepMatrix, p: Exponent) -> Result<f64> {
    g.lp_norm(p)
}

fn check_dims(n1: usize, n2: usize, partition: &RectPartition) -> Result<()> {
    if (n1, n2) != (partition.n1(), partition.n2()) {
        return Err(Error::InvalidPartition(format!(
            "partition of {}x{} applied to a {n1}x{n2} matrix",
            partition.n1(),
            partition.n2()
        )));
    }
    Ok(())
}

/// Compensated summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves() -> RectPartition {
        RectPartition::new(2, 2, vec![Rectangle::new([0], [0, 1]), Rectangle::new([1], [0, 1])]).unwrap()
    }

    #[test]
    fn conditional_expectation_examples() {
        let f = BinaryMatrix::new(2, 2, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(conditional_expectation(&f, &halves()).unwrap().values(), &[1.0, 0.0]);

        let f = BinaryMatrix::new(3, 5, [(0, 0), (2, 4), (1, 3)]).unwrap();
        let e = conditional_expectation(&f, &RectPartition::trivial(3, 5)).unwrap();
        assert_eq!(e.values(), &[f.density()]);

        let id = BinaryMatrix::identity(2).unwrap();
        let e = conditional_expectation(&id, &RectPartition::finest(2, 2)).unwrap();
        assert_eq!(e.values(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(e.value_ratio(0), Some(Ratio::new(1, 1)));
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let f = BinaryMatrix::identity(3).unwrap();
        assert!(matches!(
            conditional_expectation(&f, &RectPartition::trivial(2, 2)),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn lp_norm_examples() {
        let f = BinaryMatrix::new(2, 2, [(0, 0), (0, 1)]).unwrap();
        let e = conditional_expectation(&f, &halves()).unwrap();
        assert_eq!(e.lp_norm(Exponent::Infinity).unwrap(), 1.0);
        assert!((e.lp_norm(Exponent::Finite(2.0)).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let c = StepMatrix::from_values(RectPartition::trivial(3, 3), vec![-0.4]).unwrap();
        for p in [1.5, 2.0, 7.0] {
            assert!((c.lp_norm(Exponent::Finite(p)).unwrap() - 0.4).abs() < 1e-12);
        }
        assert_eq!(c.lp_norm(Exponent::Infinity).unwrap(), 0.4);
        assert!(c.lp_norm(Exponent::Finite(1.0)).is_err());
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::Finite(1.5));
        assert!("0.5".parse::<Exponent>().is_err());
        assert_eq!(Exponent::Infinity.dagger(), 2.0);
        assert_eq!(Exponent::Finite(1.5).dagger_conjugate(), 3.0);
        let json = serde_json::to_string(&[Exponent::Finite(2.0), Exponent::Infinity]).unwrap();
        assert_eq!(json, r#"[2.0,"inf"]"#);
        let back: Vec<Exponent> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Exponent::Finite(2.0), Exponent::Infinity]);
    }

    #[test]
    fn difference_needs_refinement() {
        let f = BinaryMatrix::identity(2).unwrap();
        let fine = conditional_expectation(&f, &RectPartition::finest(2, 2)).unwrap();
        let coarse = conditional_expectation(&f, &RectPartition::trivial(2, 2)).unwrap();
        let d = fine.difference(&coarse).unwrap();
        assert_eq!(d.values(), &[0.5, -0.5, -0.5, 0.5]);
        assert!(coarse.difference(&fine).is_err());
    }

    #[test]
    fn cut_matrices_skip_zero_cells() {
        let f = BinaryMatrix::new(2, 2, [(0, 0), (0, 1)]).unwrap();
        let e = conditional_expectation(&f, &halves()).unwrap();
        let cuts = e.cut_matrices();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].coefficient, 1.0);
        let json = serde_json::to_string(&cuts[0]).unwrap();
        assert_eq!(json, r#"{"rows":[1],"cols":[1,2],"c":1.0}"#);
    }
}
