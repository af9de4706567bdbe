//! Boundedness and `L_p` regularity: predicates, witness searches, the
//! Hölder-type bound for regular matrices, and W-random instance generation.
//!
//! Regularity quantifies over every rectangle partition with `iota >= eta`,
//! which cannot be enumerated beyond toy sizes. The searches here therefore
//! report `no-violation-found`, never "regular".

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{
    conditional_expectation, min_side_len, parse_usize_fields, strip_comment, BinaryMatrix, Exponent,
    RectPartition, Rectangle,
};
use crate::TOL;

pub const BOUNDED_EXHAUSTIVE_LIMIT: usize = 15;
pub const GRID_EXHAUSTIVE_LIMIT: usize = 8;

/// `(C, eta, p)` with the derived `p_dagger = min(2, p)` and its conjugate `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    c: f64,
    eta: f64,
    p: Exponent,
}

impl RegularityParams {
    pub fn new(c: f64, eta: f64, p: Exponent) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be finite and >= 1, got {c}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
        }
        Ok(RegularityParams { c, eta, p })
    }

    /// An `eta` below `1 / max(n1, n2)` admits every partition, so all such
    /// values behave identically on desk-scale matrices; this uses the
    /// smallest positive normal `f64`.
    pub fn with_vanishing_eta(c: f64, p: Exponent) -> Result<Self> {
        Self::new(c, f64::MIN_POSITIVE, p)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn p_dagger(&self) -> f64 {
        self.p.dagger()
    }

    pub fn q(&self) -> f64 {
        self.p.dagger_conjugate()
    }
}

/// Smallest `C` for which `f` is `(C, eta, p)`-regular once `eta` admits the
/// all-singletons partition: `||f||_p / ||f||_1 = density^(1/p - 1)`.
/// Conditional expectation contracts every `L_p` norm, so no partition can
/// exceed this value and it is a valid constant for every `eta`.
pub fn universal_regularity_constant(density: f64, p: Exponent) -> f64 {
    if density <= 0.0 {
        return 1.0;
    }
    let c = match p {
        Exponent::Infinity => 1.0 / density,
        Exponent::Finite(p) => density.powf(1.0 / p - 1.0),
    };
    c.max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Boundedness {
    Bounded,
    /// First violator in enumeration order.
    Violated { rect: Rectangle, average: f64, bound: f64 },
}

impl Boundedness {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Boundedness::Bounded)
    }
}

/// Exhaustive `(C, eta)`-boundedness: every `S x T` with `mu1(S), mu2(T) >= eta`
/// has average at most `C ||f||_1`.
///
/// Row sets of the smaller side are enumerated in increasing bitmask order;
/// for each, the densest `T` of every admissible size is the prefix of the
/// columns sorted by count (ties by index), so the first violating size is
/// reported.
pub fn is_bounded(f: &BinaryMatrix, c: f64, eta: f64) -> Result<Boundedness> {
    is_bounded_with_limit(f, c, eta, BOUNDED_EXHAUSTIVE_LIMIT)
}

pub fn is_bounded_with_limit(f: &BinaryMatrix, c: f64, eta: f64, limit: usize) -> Result<Boundedness> {
    check_c_eta(c, eta)?;
    let (g, transposed) = oriented(f);
    if g.n1() > limit {
        return Err(Error::ExhaustiveLimit {
            dim: g.n1(),
            limit,
            hint: "use the sampled boundedness check",
        });
    }
    let bound = c * f.density();
    let cols = column_masks(&g);
    let (s_min, t_min) = (min_side_len(eta, g.n1()), min_side_len(eta, g.n2()));
    for mask in 1u64..1 << g.n1() {
        if (mask.count_ones() as usize) < s_min {
            continue;
        }
        if let Some(v) = densest_violation(&cols, mask, t_min, bound) {
            return Ok(v.into_boundedness(g.n1(), transposed, bound));
        }
    }
    Ok(Boundedness::Bounded)
}

/// Sampled boundedness: `samples` random row sets of admissible size, each
/// paired with its exactly optimal column sets. `Bounded` here means no
/// violation was found.
pub fn is_bounded_sampled(f: &BinaryMatrix, c: f64, eta: f64, samples: usize, seed: u64) -> Result<Boundedness> {
    check_c_eta(c, eta)?;
    let bound = c * f.density();
    let (s_min, t_min) = (min_side_len(eta, f.n1()), min_side_len(eta, f.n2()));
    if s_min > f.n1() || t_min > f.n2() {
        return Ok(Boundedness::Bounded);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = (0..f.n1()).collect();
    for _ in 0..samples {
        let size = rng.gen_range(s_min..=f.n1());
        let mut s: Vec<usize> = rows.choose_multiple(&mut rng, size).copied().collect();
        s.sort_unstable();
        let counts: Vec<usize> = (0..f.n2()).map(|j| s.iter().filter(|&&i| f.get(i, j)).count()).collect();
        if let Some((t, avg)) = densest_prefix_violation(&counts, s.len(), t_min, bound) {
            return Ok(Boundedness::Violated { rect: Rectangle::new(s, t), average: avg, bound });
        }
    }
    Ok(Boundedness::Bounded)
}

fn check_c_eta(c: f64, eta: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) || !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("need C > 0 and eta in (0, 1], got C={c}, eta={eta}")));
    }
    Ok(())
}

/// `f` or its transpose, whichever has at most as many rows as columns.
fn oriented(f: &BinaryMatrix) -> (std::borrow::Cow<'_, BinaryMatrix>, bool) {
    if f.n1() > f.n2() {
        (std::borrow::Cow::Owned(f.transpose()), true)
    } else {
        (std::borrow::Cow::Borrowed(f), false)
    }
}

/// Per-column bitmask of the rows holding a one (requires `n1 <= 64`).
fn column_masks(f: &BinaryMatrix) -> Vec<u64> {
    (0..f.n2())
        .map(|j| (0..f.n1()).filter(|&i| f.get(i, j)).fold(0u64, |m, i| m | 1 << i))
        .collect()
}

struct PrefixViolation {
    mask: u64,
    cols: Vec<usize>,
    value: f64,
}

impl PrefixViolation {
    fn rect(&self, n1: usize, transposed: bool) -> Rectangle {
        let rows = (0..n1).filter(|&i| self.mask >> i & 1 == 1);
        let r = Rectangle::new(rows, self.cols.iter().copied());
        if transposed {
            r.transpose()
        } else {
            r
        }
    }

    fn into_boundedness(self, n1: usize, transposed: bool, bound: f64) -> Boundedness {
        Boundedness::Violated { rect: self.rect(n1, transposed), average: self.value, bound }
    }
}

fn densest_violation(cols: &[u64], mask: u64, t_min: usize, bound: f64) -> Option<PrefixViolation> {
    let counts: Vec<usize> = cols.iter().map(|&c| (c & mask).count_ones() as usize).collect();
    densest_prefix_violation(&counts, mask.count_ones() as usize, t_min, bound)
        .map(|(cols, value)| PrefixViolation { mask, cols, value })
}

/// Columns sorted by count (desc, then index); returns the first admissible
/// prefix whose average exceeds `bound`.
fn densest_prefix_violation(counts: &[usize], s: usize, t_min: usize, bound: f64) -> Option<(Vec<usize>, f64)> {
    let order = sorted_by_count(counts);
    let mut acc = 0usize;
    for (t, &j) in order.iter().enumerate() {
        acc += counts[j];
        let t = t + 1;
        if t < t_min {
            continue;
        }
        let avg = acc as f64 / (s * t) as f64;
        if avg > bound + TOL {
            let mut cols = order[..t].to_vec();
            cols.sort_unstable();
            return Some((cols, avg));
        }
    }
    None
}

fn sorted_by_count(counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    GridExhaustive,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoViolationFound,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub verdict: Verdict,
    #[serde(serialize_with = "serialize_partition_opt")]
    pub violating_partition: Option<RectPartition>,
    pub attained_lp: Option<f64>,
    /// `C ||f||_1`.
    pub bound: f64,
    pub search_mode: SearchMode,
    pub partitions_checked: usize,
}

fn serialize_partition_opt<S: Serializer>(p: &Option<RectPartition>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.collect_seq(p.cells()),
        None => s.serialize_none(),
    }
}

/// Searches for a partition violating `||E(f | A_P)||_p <= C ||f||_1`.
///
/// `GridExhaustive` enumerates every product partition (row set-partition by
/// column set-partition, all blocks of density at least `eta`); general
/// rectangle partitions need not be grids, so this is a necessary-condition
/// check. `Random` first tries the trivial partition and the finest
/// admissible consecutive-block grid, then `budget` partitions grown by
/// recursive random splitting.
pub fn regularity_witness_search(
    f: &BinaryMatrix,
    params: &RegularityParams,
    mode: SearchMode,
    budget: usize,
    seed: u64,
) -> Result<WitnessReport> {
    match mode {
        SearchMode::GridExhaustive => grid_search(f, params),
        SearchMode::Random => random_search(f, params, budget, seed),
    }
}

fn step_norm(f: &BinaryMatrix, p: &RectPartition, exponent: Exponent) -> Result<f64> {
    let e = conditional_expectation(f, p)?;
    match exponent {
        Exponent::Finite(x) if x <= 1.0 => Ok(e.l1_norm()),
        _ => e.lp_norm(exponent),
    }
}

fn grid_search(f: &BinaryMatrix, params: &RegularityParams) -> Result<WitnessReport> {
    let (n1, n2) = (f.n1(), f.n2());
    if n1 > GRID_EXHAUSTIVE_LIMIT || n2 > GRID_EXHAUSTIVE_LIMIT {
        return Err(Error::ExhaustiveLimit {
            dim: n1.max(n2),
            limit: GRID_EXHAUSTIVE_LIMIT,
            hint: "grid-exhaustive search needs n1, n2 <= 8; use random mode",
        });
    }
    let bound = params.c * f.density();
    let row_parts = set_partitions(n1, min_side_len(params.eta, n1));
    let col_parts = set_partitions(n2, min_side_len(params.eta, n2));
    let mut checked = 0;
    for rows in &row_parts {
        // ones per (row block, column)
        let block_counts: Vec<Vec<usize>> = rows
            .iter()
            .map(|b| (0..n2).map(|j| b.iter().filter(|&&i| f.get(i, j)).count()).collect())
            .collect();
        for cols in &col_parts {
            checked += 1;
            let norm = grid_norm(&block_counts, rows, cols, n1 * n2, params.p);
            if norm > bound + TOL {
                return Ok(WitnessReport {
                    verdict: Verdict::Violated,
                    violating_partition: Some(RectPartition::grid(n1, n2, rows, cols)?),
                    attained_lp: Some(norm),
                    bound,
                    search_mode: SearchMode::GridExhaustive,
                    partitions_checked: checked,
                });
            }
        }
    }
    Ok(WitnessReport {
        verdict: Verdict::NoViolationFound,
        violating_partition: None,
        attained_lp: None,
        bound,
        search_mode: SearchMode::GridExhaustive,
        partitions_checked: checked,
    })
}

fn grid_norm(block_counts: &[Vec<usize>], rows: &[Vec<usize>], cols: &[Vec<usize>], total: usize, p: Exponent) -> f64 {
    let mut acc = 0.0f64;
    for (rb, counts) in rows.iter().zip(block_counts) {
        for cb in cols {
            let ones: usize = cb.iter().map(|&j| counts[j]).sum();
            let size = rb.len() * cb.len();
            let v = ones as f64 / size as f64;
            match p {
                Exponent::Infinity => acc = acc.max(v),
                Exponent::Finite(x) => acc += v.powf(x) * size as f64 / total as f64,
            }
        }
    }
    match p {
        Exponent::Infinity => acc,
        Exponent::Finite(x) => acc.powf(1.0 / x),
    }
}

/// All set partitions of `0..n` whose blocks have at least `min_block`
/// elements, via restricted growth strings.
pub fn set_partitions(n: usize, min_block: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(pos: usize, max_label: usize, labels: &mut [usize], min_block: usize, out: &mut Vec<Vec<Vec<usize>>>) {
        let n = labels.len();
        if pos == n {
            let blocks = max_label + 1;
            let mut parts = vec![Vec::new(); blocks];
            for (i, &l) in labels.iter().enumerate() {
                parts[l].push(i);
            }
            if parts.iter().all(|b| b.len() >= min_block) {
                out.push(parts);
            }
            return;
        }
        for l in 0..=max_label + 1 {
            labels[pos] = l;
            rec(pos + 1, max_label.max(l), labels, min_block, out);
        }
    }
    if n == 0 {
        return out;
    }
    // element 0 always opens block 0
    rec(1, 0, &mut labels, min_block, &mut out);
    out
}

fn random_search(f: &BinaryMatrix, params: &RegularityParams, budget: usize, seed: u64) -> Result<WitnessReport> {
    let (n1, n2) = (f.n1(), f.n2());
    let bound = params.c * f.density();
    let (s1, s2) = (min_side_len(params.eta, n1), min_side_len(params.eta, n2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut candidates: Vec<RectPartition> = vec![RectPartition::trivial(n1, n2)];
    if s1 <= n1 && s2 <= n2 {
        candidates.push(RectPartition::grid(n1, n2, &consecutive_blocks(n1, s1), &consecutive_blocks(n2, s2))?);
    }
    let mut checked = 0;
    let report = |p: RectPartition, checked: usize| -> Result<Option<WitnessReport>> {
        let norm = step_norm(f, &p, params.p)?;
        Ok((norm > bound + TOL).then_some(WitnessReport {
            verdict: Verdict::Violated,
            violating_partition: Some(p),
            attained_lp: Some(norm),
            bound,
            search_mode: SearchMode::Random,
            partitions_checked: checked,
        }))
    };
    for p in candidates {
        checked += 1;
        if let Some(r) = report(p, checked)? {
            return Ok(r);
        }
    }
    for _ in 0..budget {
        checked += 1;
        let p = random_split_partition(n1, n2, s1, s2, &mut rng)?;
        if let Some(r) = report(p, checked)? {
            return Ok(r);
        }
    }
    Ok(WitnessReport {
        verdict: Verdict::NoViolationFound,
        violating_partition: None,
        attained_lp: None,
        bound,
        search_mode: SearchMode::Random,
        partitions_checked: checked,
    })
}

/// `0..n` cut into consecutive blocks of `size`, the remainder joining the last block.
fn consecutive_blocks(n: usize, size: usize) -> Vec<Vec<usize>> {
    let k = (n / size).max(1);
    (0..k)
        .map(|b| {
            let end = if b + 1 == k { n } else { (b + 1) * size };
            (b * size..end).collect()
        })
        .collect()
}

/// Grows a rectangle partition by repeatedly splitting a random cell along a
/// random side, keeping every side at least `s1` rows / `s2` columns.
pub fn random_split_partition(n1: usize, n2: usize, s1: usize, s2: usize, rng: &mut impl Rng) -> Result<RectPartition> {
    let mut cells = vec![Rectangle::full(n1, n2)];
    let splits = rng.gen_range(0..=n1 + n2);
    for _ in 0..splits {
        let c = rng.gen_range(0..cells.len());
        let split_rows = rng.gen_bool(0.5);
        let (side, min) = if split_rows { (cells[c].rows(), s1) } else { (cells[c].cols(), s2) };
        if side.len() < 2 * min {
            continue;
        }
        let mut shuffled = side.to_vec();
        shuffled.shuffle(rng);
        let cut = rng.gen_range(min..=side.len() - min);
        let (a, b) = shuffled.split_at(cut);
        let cell = cells.swap_remove(c);
        if split_rows {
            cells.push(Rectangle::new(a.iter().copied(), cell.cols().iter().copied()));
            cells.push(Rectangle::new(b.iter().copied(), cell.cols().iter().copied()));
        } else {
            cells.push(Rectangle::new(cell.rows().iter().copied(), a.iter().copied()));
            cells.push(Rectangle::new(cell.rows().iter().copied(), b.iter().copied()));
        }
    }
    RectPartition::new(n1, n2, cells)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum HolderOutcome {
    Holds,
    Counterexample { rect: Rectangle, lhs: f64, rhs: f64 },
}

/// Checks `int_A f <= C ||f||_1 (mu(A) + 6 eta)^(1/q)` over every rectangle,
/// with `q` the conjugate of `p_dagger`.
pub fn holder_bound_check(f: &BinaryMatrix, params: &RegularityParams) -> Result<HolderOutcome> {
    let (g, transposed) = oriented(f);
    if g.n1() > BOUNDED_EXHAUSTIVE_LIMIT {
        return Err(Error::ExhaustiveLimit {
            dim: g.n1(),
            limit: BOUNDED_EXHAUSTIVE_LIMIT,
            hint: "the rectangle sweep is exhaustive only",
        });
    }
    let total = (g.n1() * g.n2()) as f64;
    let scale = params.c * f.density();
    let inv_q = 1.0 / params.q();
    let cols = column_masks(&g);
    for mask in 1u64..1 << g.n1() {
        let s = mask.count_ones() as usize;
        let counts: Vec<usize> = cols.iter().map(|&c| (c & mask).count_ones() as usize).collect();
        let order = sorted_by_count(&counts);
        let mut acc = 0usize;
        for (t, &j) in order.iter().enumerate() {
            acc += counts[j];
            let t = t + 1;
            let lhs = acc as f64 / total;
            let rhs = scale * ((s * t) as f64 / total + 6.0 * params.eta).powf(inv_q);
            if lhs > rhs + TOL {
                let mut tcols = order[..t].to_vec();
                tcols.sort_unstable();
                let v = PrefixViolation { mask, cols: tcols, value: lhs };
                return Ok(HolderOutcome::Counterexample { rect: v.rect(g.n1(), transposed), lhs, rhs });
            }
        }
    }
    Ok(HolderOutcome::Holds)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactAudit {
    pub bounded: bool,
    pub grid_regular_infinity: bool,
    pub bounded_four_c: bool,
    pub breaches: Vec<String>,
}

/// Both directions of the boundedness / `L_inf`-regularity correspondence:
/// bounded at `C` implies no grid violation at `(C, eta, inf)`, and no grid
/// violation implies bounded at `4C`.
pub fn boundedness_vs_regularity_audit(f: &BinaryMatrix, c: f64, eta: f64) -> Result<FactAudit> {
    let bounded = is_bounded(f, c, eta)?.is_bounded();
    let params = RegularityParams::new(c, eta, Exponent::Infinity)?;
    let grid = grid_search(f, &params)?;
    let grid_regular_infinity = grid.verdict == Verdict::NoViolationFound;
    let bounded_four_c = is_bounded(f, 4.0 * c, eta)?.is_bounded();
    let mut breaches = Vec::new();
    if bounded && !grid_regular_infinity {
        breaches.push(format!("bounded at C={c} but a grid partition violates (C, eta, inf)-regularity"));
    }
    if grid_regular_infinity && !bounded_four_c {
        breaches.push(format!("no (C, eta, inf) grid violation but not bounded at 4C={}", 4.0 * c));
    }
    Ok(FactAudit { bounded, grid_regular_infinity, bounded_four_c, breaches })
}

/// Step-function graphon on an `m x m` grid over `[0,1]^2`, normalized to mean 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WGrid {
    m: usize,
    values: Vec<f64>,
}

impl WGrid {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != m * m {
            return Err(Error::InvalidParameter(format!("a W grid needs m*m values, m = {m}")));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("W grid values must be finite and nonnegative".into()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean <= 0.0 {
            return Err(Error::InvalidParameter("W grid is identically zero".into()));
        }
        Ok(WGrid { m, values: values.into_iter().map(|v| v / mean).collect() })
    }

    pub fn flat() -> Self {
        WGrid { m: 1, values: vec![1.0] }
    }

    /// Text form: `m` on the first line, then `m` lines of `m` reals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m: Option<usize> = None;
        let mut values = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            last_line = line_no;
            match m {
                None => {
                    let fields = parse_usize_fields(line, line_no)?;
                    if fields.len() != 1 || fields[0] == 0 {
                        return Err(Error::parse(line_no, "expected a single positive grid size"));
                    }
                    m = Some(fields[0]);
                }
                Some(m) => {
                    let row: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| Error::parse(line_no, format!("not a number: {t:?}"))))
                        .collect::<Result<_>>()?;
                    if row.len() != m {
                        return Err(Error::parse(line_no, format!("expected {m} values, found {}", row.len())));
                    }
                    if values.len() == m * m {
                        return Err(Error::parse(line_no, "too many grid rows"));
                    }
                    values.extend(row);
                }
            }
        }
        let m = m.ok_or_else(|| Error::parse(0, "missing grid size"))?;
        if values.len() != m * m {
            return Err(Error::parse(last_line, format!("expected {m} grid rows")));
        }
        WGrid::new(m, values).map_err(|e| Error::parse(last_line, e.to_string()))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `W(x, y)` for `x, y` in `[0, 1]`.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let cell = |t: f64| ((t * self.m as f64) as usize).min(self.m - 1);
        self.values[cell(x) * self.m + cell(y)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenStats {
    /// Entries whose probability `density * W` exceeded 1 and was clipped.
    pub clipped_entries: usize,
}

/// W-random `n x n` matrix: entry `(i, j)` is one independently with
/// probability `min(1, density * W(x_i, x_j))`, `x_i = (i + 1/2) / n`. The
/// symmetric variant samples `i <= j` and mirrors.
pub fn generate_w_random(
    w: &WGrid,
    n: usize,
    target_density: f64,
    seed: u64,
    symmetric: bool,
) -> Result<(BinaryMatrix, GenStats)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&target_density) {
        return Err(Error::InvalidParameter(format!("density must lie in [0, 1], got {target_density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![false; n * n];
    let mut clipped = 0;
    let x = |i: usize| (i as f64 + 0.5) / n as f64;
    for i in 0..n {
        let start = if symmetric { i } else { 0 };
        for j in start..n {
            let raw = target_density * w.at(x(i), x(j));
            if raw > 1.0 {
                clipped += 1;
            }
            let hit = rng.gen::<f64>() < raw.min(1.0);
            bits[i * n + j] = hit;
            if symmetric {
                bits[j * n + i] = hit;
            }
        }
    }
    Ok((BinaryMatrix::from_dense(n, n, bits)?, GenStats { clipped_entries: clipped }))
}
