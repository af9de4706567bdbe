//! The decomposition engine: starting from the trivial partition, ask the
//! oracle for a rectangle carrying residual mass, stop when that mass is at
//! most `a0 eps ||f||_1`, otherwise refine along the rectangle. After `tau`
//! refinements the partition is returned unconditionally.

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{
    conditional_expectation, cut_norm_exact_with_limit, BinaryMatrix, CutMatrix, Exponent, RealMatrix,
    RectPartition, Rectangle, StepMatrix, Tiny,
};
use crate::oracle::{oracle_dispatch, OracleConfig, OracleOutcome};
use crate::refine::{refine_partition, Inequality, RefineParams, RefineReport};
use crate::TOL;

/// Beyond this `tau` the exact exponent of `eta` is not materialized.
const EXACT_EXPONENT_MAX_TAU: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsInput")]
pub struct DecomposeParams {
    pub eps: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub p: Exponent,
    pub a0: f64,
    pub p_dagger: f64,
    pub q: f64,
    pub vartheta: f64,
    pub tau: u64,
    /// `ln E` where `eta = vartheta^E`.
    pub ln_eta_exponent: f64,
    /// `E` in decimal, computed exactly when `p_dagger = 2`.
    pub eta_exponent: Option<String>,
    /// `eta`, stored as `ln(-ln eta)`.
    pub eta: Tiny,
}

#[derive(Deserialize)]
struct ParamsInput {
    eps: f64,
    #[serde(rename = "C")]
    c: f64,
    p: Exponent,
    a0: f64,
}

impl TryFrom<ParamsInput> for DecomposeParams {
    type Error = Error;

    fn try_from(raw: ParamsInput) -> Result<Self> {
        synthesize_params(raw.eps, raw.c, raw.p, raw.a0)
    }
}

/// Derives `vartheta = a0 eps / (16 C)`,
/// `tau = ceil(4 C^2 / ((p_dagger - 1) eps^2 a0^2))` and
/// `eta = vartheta^E` with `E = sum_{i=1}^{tau+1} (2/p_dagger + 1)^(i-1) q^i`.
///
/// `tau` is the exact ceiling for the binary64 values of the inputs.
pub fn synthesize_params(eps: f64, c: f64, p: Exponent, a0: f64) -> Result<DecomposeParams> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be finite and >= 1, got {c}")));
    }
    if !p.exceeds_one() {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    if !(a0 > 0.0 && a0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("a0 must lie in (0, 1], got {a0}")));
    }
    let p_dagger = p.dagger();
    let q = p.dagger_conjugate();
    let vartheta = a0 * eps / (16.0 * c);
    let tau = exact_tau(eps, c, p_dagger, a0)?;
    let ln_eta_exponent = ln_exponent_partial(p_dagger, q, tau + 1);
    let eta_exponent = (p_dagger == 2.0 && tau <= EXACT_EXPONENT_MAX_TAU).then(|| exact_exponent_p2(tau).to_string());
    let eta = Tiny::from_ln(vartheta.ln())?.pow_ln(ln_eta_exponent);
    Ok(DecomposeParams { eps, c, p, a0, p_dagger, q, vartheta, tau, ln_eta_exponent, eta_exponent, eta })
}

fn exact_tau(eps: f64, c: f64, p_dagger: f64, a0: f64) -> Result<u64> {
    let r = |x: f64| Ratio::<BigInt>::from_float(x).expect("finite");
    let num = r(4.0) * r(c) * r(c);
    let den = r(p_dagger - 1.0) * r(eps) * r(eps) * r(a0) * r(a0);
    (num / den)
        .ceil()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("tau does not fit in 64 bits".into()))
}

/// `ln sum_{i=1}^{m} r^(i-1) q^i` with `r = 2/p_dagger + 1`.
fn ln_exponent_partial(p_dagger: f64, q: f64, m: u64) -> f64 {
    if p_dagger == 2.0 && m <= EXACT_EXPONENT_MAX_TAU + 1 {
        return ln_biguint(&exact_exponent_partial_p2(m));
    }
    // q * ((rq)^m - 1) / (rq - 1), with rq >= 4
    let ln_rq = ((2.0 / p_dagger + 1.0) * q).ln();
    let m = m as f64;
    q.ln() + m * ln_rq + (-(-m * ln_rq).exp()).ln_1p() - (ln_rq.exp() - 1.0).ln()
}

/// `sum_{i=1}^{m} 2^(2i - 1)`.
fn exact_exponent_partial_p2(m: u64) -> BigUint {
    (1..=m).fold(BigUint::zero(), |acc, i| acc + (BigUint::from(1u8) << (2 * i - 1) as usize))
}

fn exact_exponent_p2(tau: u64) -> BigUint {
    exact_exponent_partial_p2(tau + 1)
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift as usize).to_u64().expect("fits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

impl DecomposeParams {
    pub fn refine_params(&self, partition: &RectPartition) -> Result<RefineParams> {
        RefineParams::new(self.vartheta, self.c, self.p, self.eta, partition)
    }

    /// `a0 eps ||f||_1`, the halting threshold on `|int_A (f - E(f | A_P))|`.
    pub fn threshold(&self, density: f64) -> f64 {
        self.a0 * self.eps * density
    }

    /// `vartheta^(sum_{i=1}^{m} ...)`: the proof's lower bound on
    /// `(vartheta * iota(P_{m-1})^(2/p_dagger + 1))^q`.
    pub fn chain_bound(&self, m: u64) -> Tiny {
        Tiny::from_ln(self.vartheta.ln())
            .expect("vartheta < 1")
            .pow_ln(ln_exponent_partial(self.p_dagger, self.q, m))
    }

    /// `ln 4^tau`.
    pub fn ln_cell_bound(&self) -> f64 {
        self.tau as f64 * 4f64.ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Initial,
    General,
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub m: u64,
    pub phase: Phase,
    pub cells: usize,
    pub ln_iota: f64,
    /// Absent after the final refinement, which is not tested.
    pub oracle: Option<OracleOutcome>,
    /// `|int_{A_m} (f - E(f | A_{P_m}))|`.
    pub integral: Option<f64>,
    pub threshold: f64,
    /// `||E(f | A_{P_m}) - E(f | A_{P_{m-1}})||_{p_dagger}` against half the threshold.
    pub increment: Option<Inequality>,
    /// `(vartheta * iota(P_{m-1})^(2/p_dagger + 1))^q >= vartheta^(sum_{i<=m})`, in logs.
    pub chain_holds: Option<bool>,
    /// `|P_m| <= 4^m`.
    pub cell_bound_holds: bool,
    pub refine: Option<RefineReport>,
    pub halted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "m", rename_all = "kebab-case")]
pub enum HaltingReason {
    InitialHalt,
    GeneralHalt(u64),
    FinalStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTrace {
    pub steps: Vec<StepRecord>,
    pub halting_reason: HaltingReason,
    /// `P_0, ..., P_last`.
    pub partitions: Vec<RectPartition>,
}

impl Serialize for DecompositionTrace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.steps.serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Verified,
    Failed,
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub status: CertificateStatus,
    pub residual_cut_norm: Option<f64>,
    /// `eps * |ones|`.
    pub bound: f64,
    pub clauses: Vec<Clause>,
}

impl Certificate {
    pub fn failed_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.holds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub params: DecomposeParams,
    #[serde(serialize_with = "serialize_cells")]
    pub partition: RectPartition,
    #[serde(skip)]
    pub step: StepMatrix,
    pub cut_matrices: Vec<CutMatrix>,
    pub trace: DecompositionTrace,
    pub halting_reason: HaltingReason,
    pub certificate: Option<Certificate>,
}

fn serialize_cells<S: Serializer>(p: &RectPartition, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.cells())
}

/// The parts of a serialized result that verification reads back.
#[derive(Clone, Debug, Deserialize)]
pub struct DecompositionRecord {
    pub params: DecomposeParams,
    pub partition: Vec<Rectangle>,
    pub cut_matrices: Vec<CutMatrix>,
}

fn run_oracle(f: &BinaryMatrix, e: &StepMatrix, oracle: &OracleConfig) -> Result<(OracleOutcome, f64)> {
    let residual = RealMatrix::residual(f, e)?;
    let outcome = oracle_dispatch(&residual, oracle)?;
    let integral = outcome.unscaled_value(f.n1(), f.n2());
    Ok((outcome, integral))
}

/// Runs the engine. The regularity of `f` is a hypothesis and is not checked.
pub fn decompose(f: &BinaryMatrix, params: &DecomposeParams, oracle: &OracleConfig) -> Result<DecompositionResult> {
    if f.count_ones() == 0 {
        return Err(Error::InvalidMatrix("density 0: the halting threshold vanishes".into()));
    }
    oracle.validate()?;
    let threshold = params.threshold(f.density());
    let exponent = Exponent::Finite(params.p_dagger);

    let mut partition = RectPartition::trivial(f.n1(), f.n2());
    let mut e = conditional_expectation(f, &partition)?;
    let (mut outcome, integral) = run_oracle(f, &e, oracle)?;
    let halted = integral <= threshold + TOL;
    let mut steps = vec![StepRecord {
        m: 0,
        phase: Phase::Initial,
        cells: 1,
        ln_iota: 0.0,
        oracle: Some(outcome.clone()),
        integral: Some(integral),
        threshold,
        increment: None,
        chain_holds: None,
        cell_bound_holds: true,
        refine: None,
        halted,
    }];
    let mut partitions = vec![partition.clone()];
    let mut reason = HaltingReason::InitialHalt;

    if !halted {
        for m in 1..=params.tau {
            let refine_params = params.refine_params(&partition)?;
            let chain_holds = params.chain_bound(m).le_ln(refine_params.ln_iota_bound());
            let refined = refine_partition(f, &partition, &outcome.witness, &refine_params)?;
            let next = refined.partition;
            let e_next = conditional_expectation(f, &next)?;
            let increment = Inequality::at_least(e_next.difference(&e)?.lp_norm(exponent)?, threshold / 2.0);
            let cell_bound_holds = (next.len() as f64).ln() <= m as f64 * 4f64.ln() + TOL;
            partition = next;
            e = e_next;
            partitions.push(partition.clone());

            let is_final = m == params.tau;
            let mut record = StepRecord {
                m,
                phase: if is_final { Phase::Final } else { Phase::General },
                cells: partition.len(),
                ln_iota: partition.ln_iota(),
                oracle: None,
                integral: None,
                threshold,
                increment: Some(increment),
                chain_holds: Some(chain_holds),
                cell_bound_holds,
                refine: Some(refined.report),
                halted: is_final,
            };
            if is_final {
                steps.push(record);
                reason = HaltingReason::FinalStep;
                break;
            }
            let (next_outcome, integral) = run_oracle(f, &e, oracle)?;
            record.oracle = Some(next_outcome.clone());
            record.integral = Some(integral);
            record.halted = integral <= threshold + TOL;
            let halted = record.halted;
            steps.push(record);
            outcome = next_outcome;
            if halted {
                reason = HaltingReason::GeneralHalt(m);
                break;
            }
        }
    }
    let cut_matrices = e.cut_matrices();
    Ok(DecompositionResult {
        params: params.clone(),
        partition,
        step: e,
        cut_matrices,
        trace: DecompositionTrace { steps, halting_reason: reason, partitions },
        halting_reason: reason,
        certificate: None,
    })
}

/// Independent check of the output contract, recomputed from `f`, the
/// partition cells and the cut matrices alone.
pub fn verify_result(f: &BinaryMatrix, result: &DecompositionResult, params: &DecomposeParams) -> Certificate {
    verify_parts(f, result.partition.cells(), &result.cut_matrices, params, crate::measure::DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn verify_record(f: &BinaryMatrix, record: &DecompositionRecord) -> Certificate {
    verify_parts(f, &record.partition, &record.cut_matrices, &record.params, crate::measure::DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn verify_parts(
    f: &BinaryMatrix,
    cells: &[Rectangle],
    cut_matrices: &[CutMatrix],
    params: &DecomposeParams,
    exhaustive_limit: usize,
) -> Certificate {
    let bound = params.eps * f.count_ones() as f64;
    let mut clauses = Vec::new();
    let fail = |clauses: Vec<Clause>| Certificate { status: CertificateStatus::Failed, residual_cut_norm: None, bound, clauses };

    let partition = match RectPartition::new(f.n1(), f.n2(), cells.to_vec()) {
        Ok(p) => {
            clauses.push(Clause { name: "partition", holds: true, detail: format!("{} rectangle cells", p.len()) });
            p
        }
        Err(e) => {
            clauses.push(Clause { name: "partition", holds: false, detail: e.to_string() });
            return fail(clauses);
        }
    };
    let ln_cells = (partition.len() as f64).ln();
    clauses.push(Clause {
        name: "cell-count",
        holds: ln_cells <= params.ln_cell_bound() + TOL,
        detail: format!("|P| = {} against 4^{}", partition.len(), params.tau),
    });
    clauses.push(Clause {
        name: "iota",
        holds: params.eta.le_ln(partition.ln_iota()),
        detail: format!("ln iota(P) = {}, ln(-ln eta) = {}", partition.ln_iota(), params.eta.loglog()),
    });

    let e = match conditional_expectation(f, &partition) {
        Ok(e) => e,
        Err(err) => {
            clauses.push(Clause { name: "conditional-expectation", holds: false, detail: err.to_string() });
            return fail(clauses);
        }
    };
    let (disjoint, reconstructs, detail) = check_cut_matrices(&e, cut_matrices);
    clauses.push(Clause {
        name: "disjoint-supports",
        holds: disjoint,
        detail: format!("{} cut matrices", cut_matrices.len()),
    });
    clauses.push(Clause { name: "reconstruction", holds: reconstructs, detail });

    let residual = RealMatrix::residual(f, &e).expect("dimensions agree");
    let (status, value) = match cut_norm_exact_with_limit(&residual, exhaustive_limit) {
        Ok(c) => {
            let holds = c.value <= bound + TOL;
            clauses.push(Clause {
                name: "residual-cut-norm",
                holds,
                detail: format!("||f - E(f | A_P)||_cut = {} against eps |ones| = {bound}", c.value),
            });
            (if holds { CertificateStatus::Verified } else { CertificateStatus::Failed }, Some(c.value))
        }
        Err(_) => (CertificateStatus::Uncertified, None),
    };
    let status = if clauses.iter().any(|c| !c.holds) { CertificateStatus::Failed } else { status };
    Certificate { status, residual_cut_norm: value, bound, clauses }
}

/// Supports pairwise disjoint, and the sum reproduces `E(f | A_P)` bit for bit.
fn check_cut_matrices(e: &StepMatrix, cut_matrices: &[CutMatrix]) -> (bool, bool, String) {
    let (n1, n2) = (e.n1(), e.n2());
    let mut dense = vec![0.0f64; n1 * n2];
    let mut covered = vec![false; n1 * n2];
    let mut disjoint = true;
    for cm in cut_matrices {
        if cm.support.check_bounds(n1, n2).is_err() {
            return (false, false, "a support leaves the matrix".into());
        }
        for (i, j) in cm.support.entries() {
            let k = i * n2 + j;
            disjoint &= !covered[k];
            covered[k] = true;
            dense[k] += cm.coefficient;
        }
    }
    let mismatch = (0..n1 * n2).find(|&k| dense[k] != e.entry(k / n2, k % n2));
    match mismatch {
        None => (disjoint, true, "sum of cut matrices equals E(f | A_P)".into()),
        Some(k) => (
            disjoint,
            false,
            format!(
                "entry ({}, {}) is {} but E(f | A_P) gives {}",
                k / n2 + 1,
                k % n2 + 1,
                dense[k],
                e.entry(k / n2, k % n2)
            ),
        ),
    }
}

impl DecompositionResult {
    pub fn verify(&mut self, f: &BinaryMatrix) -> &Certificate {
        let cert = verify_result(f, self, &self.params);
        self.certificate.insert(cert)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    /// `||d_i||_{p_dagger}` for `i = 0..`.
    pub increments: Vec<f64>,
    /// `(sum ||d_i||^2)^(1/2) <= (p_dagger - 1)^(-1/2) ||sum d_i||`.
    pub inequality: Inequality,
    /// `sum d_i = E(f | A_{P_last})` in exact rationals.
    pub telescoping_exact: bool,
}

/// Martingale-difference inequality along the trace's partition chain.
pub fn martingale_check(trace: &DecompositionTrace, f: &BinaryMatrix, p_dagger: f64) -> Result<MartingaleReport> {
    if trace.partitions.is_empty() {
        return Err(Error::InvalidParameter("trace has no partitions".into()));
    }
    if !(p_dagger > 1.0 && p_dagger <= 2.0) {
        return Err(Error::InvalidParameter(format!("p_dagger must lie in (1, 2], got {p_dagger}")));
    }
    let exponent = Exponent::Finite(p_dagger);
    let es: Vec<StepMatrix> =
        trace.partitions.iter().map(|p| conditional_expectation(f, p)).collect::<Result<_>>()?;
    let mut increments = vec![es[0].lp_norm(exponent)?];
    for w in es.windows(2) {
        increments.push(w[1].difference(&w[0])?.lp_norm(exponent)?);
    }
    let last = es.last().expect("nonempty");
    let lhs = increments.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rhs = (p_dagger - 1.0).powf(-0.5) * last.lp_norm(exponent)?;

    // d_i evaluated on each cell of the last partition
    let last_p = last.partition();
    let parents: Vec<Vec<usize>> = es.iter().map(|e| last_p.parent_map(e.partition())).collect::<Result<_>>()?;
    let ratio = |e: &StepMatrix, c: usize| -> Ratio<i128> {
        let r = e.value_ratio(c).expect("built from a binary matrix");
        Ratio::new(*r.numer() as i128, *r.denom() as i128)
    };
    let telescoping_exact = (0..last_p.len()).all(|c| {
        let mut sum = ratio(&es[0], parents[0][c]);
        for i in 1..es.len() {
            sum += ratio(&es[i], parents[i][c]) - ratio(&es[i - 1], parents[i - 1][c]);
        }
        sum == ratio(last, c)
    });
    Ok(MartingaleReport { increments, inequality: Inequality::at_most(lhs, rhs), telescoping_exact })
}
