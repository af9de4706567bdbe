//! Cut-norm oracles: given a real matrix, return a rectangle whose entry sum
//! captures at least a fraction `alpha` of the cut norm.
//!
//! [`oracle_exact`] enumerates and certifies `alpha = 1`. [`oracle_heuristic`]
//! runs seeded alternating ascent and only *claims* its `alpha`; the claim is
//! audited against the exact oracle in the test suite, never proven.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{cut_norm_exact_with_limit, Integrable, RealMatrix, Rectangle, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::TOL;

pub const DEFAULT_HEURISTIC_ALPHA: f64 = 0.3;
pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_MAX_ITERS: usize = 100;

const POWER_ITERATIONS: usize = 64;
const SIGN_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub kind: OracleKind,
    pub alpha_claim: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub exhaustive_limit: usize,
}

impl OracleConfig {
    pub fn exact() -> Self {
        OracleConfig {
            kind: OracleKind::Exact,
            alpha_claim: 1.0,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }

    pub fn heuristic(seed: u64) -> Self {
        OracleConfig {
            kind: OracleKind::Heuristic,
            alpha_claim: DEFAULT_HEURISTIC_ALPHA,
            seed,
            ..Self::exact()
        }
    }

    /// Builds a config; the exact kind always claims `alpha = 1`.
    pub fn new(kind: OracleKind, alpha_claim: Option<f64>, seed: u64, restarts: usize) -> Result<Self> {
        let base = match kind {
            OracleKind::Exact => Self::exact(),
            OracleKind::Heuristic => Self::heuristic(seed),
        };
        let cfg = OracleConfig {
            alpha_claim: match kind {
                OracleKind::Exact => 1.0,
                OracleKind::Heuristic => alpha_claim.unwrap_or(DEFAULT_HEURISTIC_ALPHA),
            },
            seed,
            restarts,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_claim > 0.0 && self.alpha_claim <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {}", self.alpha_claim)));
        }
        if self.kind == OracleKind::Exact && self.alpha_claim != 1.0 {
            return Err(Error::InvalidParameter("the exact oracle has alpha = 1".into()));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("restarts and max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub witness: Rectangle,
    /// `(n1 n2) |int_witness g dmu|`, i.e. the absolute entry sum.
    pub scaled_value: f64,
    /// Signed entry sum over the witness.
    pub signed_sum: f64,
    pub alpha: f64,
}

impl OracleOutcome {
    fn from_witness(g: &RealMatrix, witness: Rectangle, alpha: f64) -> Self {
        let signed_sum = g.raw_sum(&witness);
        OracleOutcome { witness, scaled_value: signed_sum.abs(), signed_sum, alpha }
    }

    /// `|int_witness g dmu|`.
    pub fn unscaled_value(&self, n1: usize, n2: usize) -> f64 {
        self.scaled_value / (n1 * n2) as f64
    }
}

pub fn oracle_exact(g: &RealMatrix) -> Result<OracleOutcome> {
    oracle_exact_with_limit(g, DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn oracle_exact_with_limit(g: &RealMatrix, limit: usize) -> Result<OracleOutcome> {
    let c = cut_norm_exact_with_limit(g, limit)?;
    Ok(OracleOutcome::from_witness(g, c.witness, 1.0))
}

/// Seeded multi-restart alternating ascent over `+g` and `-g`, warm-started
/// from the sign pattern of the top left singular vector and from random row
/// sets. For a fixed row set the best column set is sign-determined and
/// vice versa, so every half-step is non-decreasing.
pub fn oracle_heuristic(g: &RealMatrix, cfg: &OracleConfig) -> Result<OracleOutcome> {
    cfg.validate()?;
    let rows = g.dense_rows();
    let (n1, n2) = (g.n1(), g.n2());

    let mut starts: Vec<Vec<bool>> = Vec::with_capacity(cfg.restarts + 2);
    if let Some(u) = top_left_singular_vector(&rows, n2) {
        starts.push(u.iter().map(|&x| x > 0.0).collect());
        starts.push(u.iter().map(|&x| x < 0.0).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        starts.push((0..n1).map(|_| rng.gen_bool(0.5)).collect());
    }

    let jobs: Vec<(&Vec<bool>, f64)> = starts.iter().flat_map(|s| [(s, 1.0), (s, -1.0)]).collect();
    let results: Vec<Ascent> = jobs
        .par_iter()
        .map(|&(start, sign)| ascend(&rows, n2, start, sign, cfg.max_iters))
        .collect();

    let mut best = Ascent { value: 0.0, rect: Rectangle::empty() };
    for r in results {
        if r.value > best.value + TOL
            || (r.value >= best.value - TOL && r.rect.witness_cmp(&best.rect) == Ordering::Less)
        {
            best = r;
        }
    }
    Ok(OracleOutcome::from_witness(g, best.rect, cfg.alpha_claim))
}

/// Routes to the configured oracle.
pub fn oracle_dispatch(g: &RealMatrix, cfg: &OracleConfig) -> Result<OracleOutcome> {
    cfg.validate()?;
    match cfg.kind {
        OracleKind::Exact => oracle_exact_with_limit(g, cfg.exhaustive_limit),
        OracleKind::Heuristic => oracle_heuristic(g, cfg),
    }
}

struct Ascent {
    value: f64,
    rect: Rectangle,
}

fn ascend(rows: &[Vec<f64>], n2: usize, start: &[bool], sign: f64, max_iters: usize) -> Ascent {
    let mut sel_rows: Vec<bool> = start.to_vec();
    let mut best = Ascent { value: 0.0, rect: Rectangle::empty() };
    for _ in 0..max_iters {
        // columns given rows
        let mut col_sums = vec![0.0; n2];
        for (row, _) in rows.iter().zip(&sel_rows).filter(|(_, &s)| s) {
            for (c, &v) in col_sums.iter_mut().zip(row) {
                *c += sign * v;
            }
        }
        let sel_cols: Vec<bool> = col_sums.iter().map(|&c| c > SIGN_EPS).collect();
        // rows given columns
        let row_sums: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().zip(&sel_cols).filter(|(_, &s)| s).map(|(&v, _)| sign * v).sum())
            .collect();
        let next_rows: Vec<bool> = row_sums.iter().map(|&r| r > SIGN_EPS).collect();
        let value: f64 = row_sums.iter().filter(|&&r| r > SIGN_EPS).sum();
        if value <= best.value + 1e-12 {
            break;
        }
        best = Ascent {
            value,
            rect: Rectangle::new(
                next_rows.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i),
                sel_cols.iter().enumerate().filter(|(_, &s)| s).map(|(j, _)| j),
            ),
        };
        if next_rows == sel_rows {
            break;
        }
        sel_rows = next_rows;
    }
    best
}

/// Power iteration on `g^T g` from a fixed start; `None` for a (numerically) zero matrix.
fn top_left_singular_vector(rows: &[Vec<f64>], n2: usize) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = (0..n2).map(|j| 1.0 + j as f64 / (n2 as f64 * 7.0)).collect();
    let apply = |v: &[f64]| -> Vec<f64> { rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    for _ in 0..POWER_ITERATIONS {
        let u = apply(&v);
        let mut w = vec![0.0; n2];
        for (r, &ui) in rows.iter().zip(&u) {
            for (wj, &x) in w.iter_mut().zip(r) {
                *wj += x * ui;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return None;
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Some(apply(&v))
}
