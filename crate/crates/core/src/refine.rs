//! Partition refinement driven by an oracle rectangle.
//!
//! [`envelope_partition`] covers a rectangle `A1 x A2` inside a box
//! `X1 x X2` by a cell of a partition of at most four cells, so that the
//! covering cell is not much larger than `A1 x A2`. [`refine_partition`]
//! applies it inside every cell of `P` where `A` is large on both sides and
//! leaves the other cells whole.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{
    conditional_expectation, difference_sorted, intersect_sorted, neumaier_sum, BinaryMatrix, Exponent,
    RectPartition, Rectangle, Tiny,
};
use crate::TOL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RefineParams {
    pub vartheta: f64,
    /// `vartheta^q * iota(P)^(2q / p_dagger)`, for the partition given at construction.
    pub theta: f64,
    pub q: f64,
    pub p_dagger: f64,
    pub eta: Tiny,
    /// Regularity constant, used only for the analytic checks in the report.
    pub c: f64,
    pub ln_iota: f64,
}

impl RefineParams {
    pub fn new(vartheta: f64, c: f64, p: Exponent, eta: Tiny, partition: &RectPartition) -> Result<Self> {
        if !(vartheta > 0.0 && vartheta < 0.5) {
            return Err(Error::InvalidParameter(format!("vartheta must lie in (0, 1/2), got {vartheta}")));
        }
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be finite and >= 1, got {c}")));
        }
        let p_dagger = p.dagger();
        let q = p.dagger_conjugate();
        let mut params = RefineParams { vartheta, theta: 0.0, q, p_dagger, eta, c, ln_iota: 0.0 };
        params.rebase(partition)?;
        Ok(params)
    }

    /// Recomputes `theta` for a new partition.
    pub fn rebase(&mut self, partition: &RectPartition) -> Result<()> {
        self.ln_iota = partition.ln_iota();
        self.theta = (self.q * self.vartheta.ln() + 2.0 * self.q / self.p_dagger * self.ln_iota).exp();
        if self.theta <= 0.0 {
            return Err(Error::InvalidParameter("theta underflows".into()));
        }
        Ok(())
    }

    /// `2 / p_dagger + 1`.
    pub fn iota_exponent(&self) -> f64 {
        2.0 / self.p_dagger + 1.0
    }

    /// `ln (vartheta * iota(P)^(2/p_dagger + 1))^q`: the stated lower bound on `iota(Q)`
    /// and the largest admissible `eta`.
    pub fn ln_iota_bound(&self) -> f64 {
        self.q * (self.vartheta.ln() + self.iota_exponent() * self.ln_iota)
    }

    pub fn check_precondition(&self) -> Result<()> {
        if self.eta.le_ln(self.ln_iota_bound()) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "eta exceeds (vartheta * iota(P)^{:.4})^q: ln(-ln eta) = {}, bound ln = {}",
                self.iota_exponent(),
                self.eta.loglog(),
                self.ln_iota_bound()
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeCase {
    /// Both sides small: four cells, `B = A1 x A2`.
    BothSmall,
    /// Rows small, columns large: `B = A1 x X2`.
    RowsSmall,
    /// Rows large, columns small: `B = X1 x A2`.
    ColsSmall,
    /// Both large: `Q = {X1 x X2}`.
    BothLarge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub cells: Vec<Rectangle>,
    /// Index of `B` in `cells`.
    pub b: usize,
    pub case: EnvelopeCase,
}

impl Envelope {
    pub fn b_rect(&self) -> &Rectangle {
        &self.cells[self.b]
    }
}

fn relative_at_least(part: usize, whole: usize, t: f64) -> bool {
    part as f64 >= t * whole as f64
}

fn is_subset(a: &[usize], x: &[usize]) -> bool {
    intersect_sorted(a, x).len() == a.len()
}

/// Four-case envelope of `A1 x A2` inside `X1 x X2`. Index sets are sorted
/// and measures are relative to `X1`, `X2`.
pub fn envelope_partition(x1: &[usize], x2: &[usize], a1: &[usize], a2: &[usize], vartheta: f64) -> Result<Envelope> {
    if !(vartheta > 0.0 && vartheta < 0.5) {
        return Err(Error::Precondition(format!("vartheta must lie in (0, 1/2), got {vartheta}")));
    }
    if x1.is_empty() || x2.is_empty() {
        return Err(Error::Precondition("empty ambient box".into()));
    }
    if !is_subset(a1, x1) || !is_subset(a2, x2) {
        return Err(Error::Precondition("A1 x A2 is not inside X1 x X2".into()));
    }
    if !relative_at_least(a1.len(), x1.len(), vartheta) || !relative_at_least(a2.len(), x2.len(), vartheta) {
        return Err(Error::Precondition(format!(
            "side densities {}/{} and {}/{} must be at least vartheta = {vartheta}",
            a1.len(),
            x1.len(),
            a2.len(),
            x2.len()
        )));
    }
    let large1 = relative_at_least(a1.len(), x1.len(), 1.0 - vartheta);
    let large2 = relative_at_least(a2.len(), x2.len(), 1.0 - vartheta);
    let rect = |r: &[usize], c: &[usize]| Rectangle::new(r.iter().copied(), c.iter().copied());
    let env = match (large1, large2) {
        (false, false) => {
            let (r1, r2) = (difference_sorted(x1, a1), difference_sorted(x2, a2));
            Envelope {
                cells: vec![rect(a1, a2), rect(a1, &r2), rect(&r1, a2), rect(&r1, &r2)],
                b: 0,
                case: EnvelopeCase::BothSmall,
            }
        }
        (false, true) => Envelope {
            cells: vec![rect(a1, x2), rect(&difference_sorted(x1, a1), x2)],
            b: 0,
            case: EnvelopeCase::RowsSmall,
        },
        (true, false) => Envelope {
            cells: vec![rect(x1, a2), rect(x1, &difference_sorted(x2, a2))],
            b: 0,
            case: EnvelopeCase::ColsSmall,
        },
        (true, true) => Envelope { cells: vec![rect(x1, x2)], b: 0, case: EnvelopeCase::BothLarge },
    };
    Ok(env)
}

/// Position of a cell of `P` relative to `A = A1 x A2` at threshold `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellClass {
    /// `A1` and `A2` both meet the cell below the threshold.
    SmallBoth,
    /// Rows below, columns at or above.
    SmallRows,
    /// Rows at or above, columns below.
    SmallCols,
    /// Both at or above: the only cells that get split.
    LargeBoth,
}

impl CellClass {
    pub fn index(self) -> usize {
        match self {
            CellClass::SmallBoth => 0,
            CellClass::SmallRows => 1,
            CellClass::SmallCols => 2,
            CellClass::LargeBoth => 3,
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

pub fn classify_cells(p: &RectPartition, a: &Rectangle, theta: f64) -> Vec<CellClass> {
    p.cells()
        .iter()
        .map(|cell| {
            let rows = intersect_sorted(a.rows(), cell.rows()).len();
            let cols = intersect_sorted(a.cols(), cell.cols()).len();
            let large_rows = relative_at_least(rows, cell.rows().len(), theta);
            let large_cols = relative_at_least(cols, cell.cols().len(), theta);
            match (large_rows, large_cols) {
                (false, false) => CellClass::SmallBoth,
                (false, true) => CellClass::SmallRows,
                (true, false) => CellClass::SmallCols,
                (true, true) => CellClass::LargeBoth,
            }
        })
        .collect()
}

/// `lhs <= rhs` up to the absolute tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    pub fn at_most(lhs: f64, rhs: f64) -> Self {
        Inequality { lhs, rhs, holds: lhs <= rhs + TOL }
    }

    pub fn at_least(lhs: f64, rhs: f64) -> Self {
        Inequality { lhs, rhs, holds: lhs + TOL >= rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefineReport {
    pub cells_before: usize,
    pub cells_after: usize,
    /// Cells per class, in `P1..P4` order.
    pub class_counts: [usize; 4],
    pub theta: f64,
    pub refines: bool,
    pub cell_bound_holds: bool,
    pub ln_iota_q: f64,
    /// `iota(Q) >= (vartheta * iota(P)^(2/p_dagger + 1))^q`, in logs.
    pub iota_stated: Inequality,
    /// `iota(Q) >= theta * iota(P)`, in logs.
    pub iota_local: Inequality,
    pub sym_diff_entries: u64,
    /// `mu(A sym-diff B) <= 2 theta`, compared exactly.
    pub sym_diff: Inequality,
    /// `int_{A sym-diff B} E(f | A_P) <= 2 C ||f||_1 vartheta`.
    pub expectation_on_sym_diff: Inequality,
    /// `int_{A sym-diff B} f <= 6 C ||f||_1 vartheta`.
    pub ones_on_sym_diff: Inequality,
    /// `sum_P mu(P)^(1/q) <= |P|^(1/p_dagger)`.
    pub concavity: Inequality,
}

impl RefineReport {
    /// Whether every structural clause holds. The analytic inequalities depend
    /// on the regularity of `f` and are reported separately.
    pub fn structural_ok(&self) -> bool {
        self.refines && self.cell_bound_holds && self.iota_stated.holds && self.sym_diff.holds && self.concavity.holds
    }

    pub fn analytic_ok(&self) -> bool {
        self.expectation_on_sym_diff.holds && self.ones_on_sym_diff.holds
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub partition: RectPartition,
    /// Cells of `partition` whose union is `B`.
    pub b_cells: Vec<usize>,
    pub classes: Vec<CellClass>,
    pub report: RefineReport,
}

impl Refinement {
    pub fn b_rects(&self) -> impl Iterator<Item = &Rectangle> {
        self.b_cells.iter().map(|&c| &self.partition.cells()[c])
    }
}

/// Refines `P` along `A`: cells where `A` is large on both sides (relative
/// to `theta`) are split by [`envelope_partition`] with local parameter
/// `theta`; all others stay whole and contribute nothing to `B`.
pub fn refine_partition(f: &BinaryMatrix, p: &RectPartition, a: &Rectangle, params: &RefineParams) -> Result<Refinement> {
    if (f.n1(), f.n2()) != (p.n1(), p.n2()) {
        return Err(Error::InvalidPartition("partition and matrix dimensions differ".into()));
    }
    a.check_bounds(p.n1(), p.n2())?;
    if (params.ln_iota - p.ln_iota()).abs() > 1e-12 {
        return Err(Error::InvalidParameter("RefineParams were built for a different partition".into()));
    }
    params.check_precondition()?;

    let theta = params.theta;
    let classes = classify_cells(p, a, theta);
    let mut cells = Vec::with_capacity(4 * p.len());
    let mut b_cells = Vec::new();
    for (cell, class) in p.cells().iter().zip(&classes) {
        if *class != CellClass::LargeBoth {
            cells.push(cell.clone());
            continue;
        }
        let a1 = intersect_sorted(a.rows(), cell.rows());
        let a2 = intersect_sorted(a.cols(), cell.cols());
        let env = envelope_partition(cell.rows(), cell.cols(), &a1, &a2, theta)?;
        b_cells.push(cells.len() + env.b);
        cells.extend(env.cells);
    }
    let q = RectPartition::new(p.n1(), p.n2(), cells)?;
    let report = build_report(f, p, &q, a, &b_cells, &classes, params)?;
    Ok(Refinement { partition: q, b_cells, classes, report })
}

/// `count / total <= bound` with `bound` taken as the exact binary64 value.
fn ratio_at_most(count: u64, total: u64, bound: f64) -> bool {
    if bound <= 0.0 {
        return count == 0;
    }
    let (mant, exp, _) = bound.integer_decode();
    let lhs = BigUint::from(count);
    let rhs = BigUint::from(mant) * BigUint::from(total);
    if exp >= 0 {
        lhs <= rhs << exp as usize
    } else {
        lhs << (-exp) as usize <= rhs
    }
}

fn build_report(
    f: &BinaryMatrix,
    p: &RectPartition,
    q: &RectPartition,
    a: &Rectangle,
    b_cells: &[usize],
    classes: &[CellClass],
    params: &RefineParams,
) -> Result<RefineReport> {
    let (n1, n2) = (p.n1(), p.n2());
    let total = (n1 * n2) as u64;
    let mut class_counts = [0usize; 4];
    for c in classes {
        class_counts[c.index()] += 1;
    }
    let ln_iota_q = q.ln_iota();

    let mut in_b = vec![false; q.len()];
    for &c in b_cells {
        in_b[c] = true;
    }
    let mut in_rows = vec![false; n1];
    let mut in_cols = vec![false; n2];
    a.rows().iter().for_each(|&i| in_rows[i] = true);
    a.cols().iter().for_each(|&j| in_cols[j] = true);

    let e = conditional_expectation(f, p)?;
    let mut sym_diff_entries = 0u64;
    let mut ones = 0u64;
    let mut expectation_terms = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if (in_rows[i] && in_cols[j]) != in_b[q.cell_of(i, j)] {
                sym_diff_entries += 1;
                ones += f.get(i, j) as u64;
                expectation_terms.push(e.entry(i, j));
            }
        }
    }
    let n = total as f64;
    let d = f.density();
    let cd_vartheta = params.c * d * params.vartheta;
    let concavity_lhs: f64 = p.cells().iter().map(|c| c.measure(n1, n2).powf(1.0 / params.q)).sum();

    Ok(RefineReport {
        cells_before: p.len(),
        cells_after: q.len(),
        class_counts,
        theta: params.theta,
        refines: q.refines(p),
        cell_bound_holds: q.len() <= 4 * p.len(),
        ln_iota_q,
        iota_stated: Inequality::at_least(ln_iota_q, params.ln_iota_bound()),
        iota_local: Inequality::at_least(ln_iota_q, params.theta.ln() + params.ln_iota),
        sym_diff_entries,
        sym_diff: Inequality {
            lhs: sym_diff_entries as f64 / n,
            rhs: 2.0 * params.theta,
            holds: ratio_at_most(sym_diff_entries, total, 2.0 * params.theta),
        },
        expectation_on_sym_diff: Inequality::at_most(neumaier_sum(expectation_terms) / n, 2.0 * cd_vartheta),
        ones_on_sym_diff: Inequality::at_most(ones as f64 / n, 6.0 * cd_vartheta),
        concavity: Inequality::at_most(concavity_lhs, (p.len() as f64).powf(1.0 / params.p_dagger)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncrementOutcome {
    Confirmed,
    HypothesisNotMet,
    Breach,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementCheck {
    pub outcome: IncrementOutcome,
    /// `|int_A (f - E(f | A_P))|` against `a0 eps ||f||_1`.
    pub hypothesis: Inequality,
    /// `|int_B (f - E(f | A_P))|`.
    pub b_integral: f64,
    /// `||E(f | A_Q) - E(f | A_P)||_{p_dagger}` against `a0 eps ||f||_1 / 2`.
    pub increment: Inequality,
}

/// Checks the energy increment of a refinement: when the oracle rectangle
/// `A` carries a residual integral of at least `a0 eps ||f||_1`, the refined
/// conditional expectation moves by at least half that in `L_{p_dagger}`.
#[allow(clippy::too_many_arguments)]
pub fn increment_guarantee_check(
    f: &BinaryMatrix,
    p: &RectPartition,
    q: &RectPartition,
    a: &Rectangle,
    b_cells: &[usize],
    eps: f64,
    a0: f64,
    exponent: Exponent,
) -> Result<IncrementCheck> {
    if !q.refines(p) {
        return Err(Error::Precondition("Q does not refine P".into()));
    }
    if let Some(&c) = b_cells.iter().find(|&&c| c >= q.len()) {
        return Err(Error::Precondition(format!("B names cell {c} but Q has {} cells", q.len())));
    }
    a.check_bounds(p.n1(), p.n2())?;
    let n = (p.n1() * p.n2()) as f64;
    let d = f.density();
    let ep = conditional_expectation(f, p)?;
    let eq = conditional_expectation(f, q)?;

    let residual_sum = |cells: &mut dyn Iterator<Item = (usize, usize)>| -> f64 {
        neumaier_sum(cells.map(|(i, j)| f.get(i, j) as u8 as f64 - ep.entry(i, j)))
    };
    let lhs = residual_sum(&mut a.entries()).abs() / n;
    let threshold = a0 * eps * d;
    let hypothesis = Inequality { lhs, rhs: threshold, holds: lhs >= threshold };
    let b_integral = residual_sum(&mut b_cells.iter().flat_map(|&c| q.cells()[c].entries())).abs() / n;

    let p_dagger = Exponent::Finite(exponent.dagger());
    let norm = eq.difference(&ep)?.lp_norm(p_dagger)?;
    let increment = Inequality::at_least(norm, threshold / 2.0);
    let outcome = match (hypothesis.holds, increment.holds) {
        (false, _) => IncrementOutcome::HypothesisNotMet,
        (true, true) => IncrementOutcome::Confirmed,
        (true, false) => IncrementOutcome::Breach,
    };
    Ok(IncrementCheck { outcome, hypothesis, b_integral, increment })
}
