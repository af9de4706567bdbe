//! Boolean MAX-CSP instances, their type tensors, brute-force OPT and the
//! approximation through cut-tensor decompositions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{parse_usize_fields, strip_comment, Exponent};
use crate::oracle::OracleConfig;
use crate::regularity::universal_regularity_constant;
use crate::tensor::{flatten, tensor_decompose, BinaryTensor, CutTensor, TensorReport};

pub const BRUTE_FORCE_LIMIT: usize = 24;
pub const MAX_ARITY: usize = 6;
/// Largest count-vector grid searched.
pub const GRID_BUDGET: u64 = 1 << 22;
/// Largest number of entries in a type tensor.
pub const TENSOR_ENTRY_LIMIT: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Constraint {
    /// Strictly increasing 0-based variable indices.
    pub vars: Vec<usize>,
    /// Bit `j` is the value on the assignment with binary encoding `j`, the
    /// first variable being the most significant bit.
    pub table: u64,
}

impl Constraint {
    pub fn eval(&self, sigma: &[bool]) -> bool {
        let j = self.vars.iter().fold(0usize, |acc, &v| acc << 1 | sigma[v] as usize);
        self.table >> j & 1 == 1
    }
}

pub const AND: u64 = 0b1000;
pub const OR: u64 = 0b1110;
pub const XOR: u64 = 0b0110;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CspInstance {
    n: usize,
    k: usize,
    constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(n: usize, k: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if !(2..=MAX_ARITY).contains(&k) {
            return Err(Error::InvalidParameter(format!("arity must lie in 2..={MAX_ARITY}, got {k}")));
        }
        if n < k {
            return Err(Error::InvalidParameter(format!("{n} variables cannot carry a {k}-ary constraint")));
        }
        let full = if k == 6 { u64::MAX } else { (1u64 << (1 << k)) - 1 };
        let mut seen = BTreeSet::new();
        for (idx, c) in constraints.iter().enumerate() {
            if c.vars.len() != k {
                return Err(Error::InvalidParameter(format!("constraint {} has {} variables", idx + 1, c.vars.len())));
            }
            if c.vars.windows(2).any(|w| w[0] >= w[1]) || c.vars[k - 1] >= n {
                return Err(Error::InvalidParameter(format!(
                    "constraint {} variables must be strictly increasing within 1..={n}",
                    idx + 1
                )));
            }
            if c.table == 0 || c.table & !full != 0 {
                return Err(Error::InvalidParameter(format!("constraint {} has an invalid truth table", idx + 1)));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidParameter(format!("constraint {} duplicates an earlier one", idx + 1)));
            }
        }
        Ok(CspInstance { n, k, constraints })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// `n k`, then per constraint a `vars i1 .. ik` line (1-based) and a
    /// `table b0 .. b_{2^k - 1}` line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l))).filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty CSP file"))?;
        let head = parse_usize_fields(header, line_no)?;
        let [n, k] = head[..] else {
            return Err(Error::parse(line_no, "expected \"n k\""));
        };
        if !(2..=MAX_ARITY).contains(&k) {
            return Err(Error::parse(line_no, format!("arity must lie in 2..={MAX_ARITY}")));
        }
        let mut constraints = Vec::new();
        while let Some((vars_no, vars_line)) = lines.next() {
            let rest = vars_line
                .strip_prefix("vars")
                .ok_or_else(|| Error::parse(vars_no, "expected a \"vars\" line"))?;
            let vars = parse_usize_fields(rest, vars_no)?;
            if vars.len() != k || vars.iter().any(|&v| v == 0 || v > n) {
                return Err(Error::parse(vars_no, format!("expected {k} variable indices in 1..={n}")));
            }
            if vars.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::parse(vars_no, "variable indices must be strictly increasing"));
            }
            let (table_no, table_line) =
                lines.next().ok_or_else(|| Error::parse(vars_no, "missing \"table\" line"))?;
            let rest = table_line
                .strip_prefix("table")
                .ok_or_else(|| Error::parse(table_no, "expected a \"table\" line"))?;
            let bits = parse_usize_fields(rest, table_no)?;
            if bits.len() != 1 << k || bits.iter().any(|&b| b > 1) {
                return Err(Error::parse(table_no, format!("expected {} bits", 1 << k)));
            }
            let table = bits.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | (b as u64) << j);
            if table == 0 {
                return Err(Error::parse(table_no, "truth table has no satisfying row"));
            }
            let c = Constraint { vars: vars.iter().map(|v| v - 1).collect(), table };
            if constraints.contains(&c) {
                return Err(Error::parse(vars_no, "duplicate constraint"));
            }
            constraints.push(c);
        }
        Self::new(n, k, constraints)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for c in &self.constraints {
            let vars: Vec<String> = c.vars.iter().map(|v| (v + 1).to_string()).collect();
            let bits: Vec<String> = (0..1 << self.k).map(|j| (c.table >> j & 1).to_string()).collect();
            out.push_str(&format!("vars {}\ntable {}\n", vars.join(" "), bits.join(" ")));
        }
        out
    }
}

/// One `{0,1}` tensor per truth table present, set at the sorted variable
/// tuples of the constraints of that type.
pub fn build_type_tensors(inst: &CspInstance) -> Result<BTreeMap<u64, BinaryTensor>> {
    let entries = inst.n.checked_pow(inst.k as u32).filter(|&e| e <= TENSOR_ENTRY_LIMIT);
    if entries.is_none() {
        return Err(Error::InvalidParameter(format!(
            "type tensors with {}^{} entries exceed the limit {TENSOR_ENTRY_LIMIT}",
            inst.n, inst.k
        )));
    }
    let mut by_type: BTreeMap<u64, Vec<Vec<usize>>> = BTreeMap::new();
    for c in &inst.constraints {
        by_type.entry(c.table).or_default().push(c.vars.clone());
    }
    let dims = vec![inst.n; inst.k];
    by_type.into_iter().map(|(t, ones)| Ok((t, BinaryTensor::new(&dims, ones)?))).collect()
}

pub fn evaluate_assignment(inst: &CspInstance, sigma: &[bool]) -> Result<u64> {
    if sigma.len() != inst.n {
        return Err(Error::InvalidParameter(format!("assignment has {} values for {} variables", sigma.len(), inst.n)));
    }
    Ok(inst.constraints.iter().filter(|c| c.eval(sigma)).count() as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Optimum {
    pub value: u64,
    /// Lexicographically least among the maximizers.
    pub sigma: Vec<bool>,
}

pub fn opt_bruteforce(inst: &CspInstance) -> Result<Optimum> {
    let n = inst.n;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::ExhaustiveLimit {
            dim: n,
            limit: BRUTE_FORCE_LIMIT,
            hint: "brute-force OPT enumerates 2^n assignments",
        });
    }
    // Encoding with x1 as the most significant bit enumerates in
    // lexicographic order.
    let sigma_of = |mask: u64| -> Vec<bool> { (0..n).map(|v| mask >> (n - 1 - v) & 1 == 1).collect() };
    let value_of = |mask: u64| -> u64 {
        inst.constraints
            .iter()
            .filter(|c| {
                let j = c.vars.iter().fold(0u64, |acc, &v| acc << 1 | (mask >> (n - 1 - v) & 1));
                c.table >> j & 1 == 1
            })
            .count() as u64
    };
    let (value, mask) = (0u64..1 << n)
        .into_par_iter()
        .map(|m| (value_of(m), m))
        .reduce(|| (0, u64::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok(Optimum { value, sigma: sigma_of(mask) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeRegularity {
    pub table: u64,
    pub ones: usize,
    /// Smallest constant at which the flattened type tensor is regular for
    /// every `eta`.
    pub universal_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityHypothesis {
    pub c: f64,
    pub types: Vec<TypeRegularity>,
    /// Every type tensor is regular by construction at `c`.
    pub holds: bool,
}

/// Sufficient check of the regularity hypothesis: each flattened type tensor
/// is `(c, eta, p)`-regular for all `eta` once `c` reaches its universal
/// constant.
pub fn csp_regularity_check(inst: &CspInstance, c: f64, p: Exponent) -> Result<RegularityHypothesis> {
    let mut types = Vec::new();
    for (table, t) in build_type_tensors(inst)? {
        let (f, _) = flatten(&t)?;
        types.push(TypeRegularity { table, ones: t.count_ones(), universal_c: universal_regularity_constant(f.density(), p) });
    }
    let holds = types.iter().all(|t| t.universal_c <= c * (1.0 + 1e-12));
    Ok(RegularityHypothesis { c, types, holds })
}

/// Smallest `c` passing [`csp_regularity_check`].
pub fn csp_universal_constant(inst: &CspInstance, p: Exponent) -> Result<f64> {
    Ok(csp_regularity_check(inst, 1.0, p)?.types.iter().map(|t| t.universal_c).fold(1.0, f64::max))
}

/// Accuracy at which each type tensor is decomposed.
pub fn csp_accuracy(eps: f64, k: usize) -> f64 {
    eps * 2f64.powi(-((1i32 << k) + 2 * k as i32 + 2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CspCertificate {
    pub opt: u64,
    pub opt_sigma: Vec<bool>,
    pub ratio: f64,
    /// `value >= (1 - eps) OPT`.
    pub meets_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeDecomposition {
    pub table: u64,
    pub cut_tensors: Vec<CutTensor>,
    pub report: TensorReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CspSolution {
    pub sigma: Vec<bool>,
    /// Exact objective of `sigma`.
    pub value: u64,
    pub eps: f64,
    pub accuracy: f64,
    /// Common refinement of all cut-tensor sides, 0-based.
    pub atoms: Vec<Vec<usize>>,
    /// Ones per atom in `sigma`.
    pub counts: Vec<usize>,
    pub surrogate: f64,
    pub grid_size: u64,
    pub types: Vec<TypeDecomposition>,
    pub certificate: Option<CspCertificate>,
}

/// The `{"sigma", "value", "opt", "ratio"}` summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CspOutput {
    pub sigma: Vec<u8>,
    pub value: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl CspSolution {
    pub fn output(&self) -> CspOutput {
        CspOutput {
            sigma: self.sigma.iter().map(|&b| b as u8).collect(),
            value: self.value,
            opt: self.certificate.as_ref().map(|c| c.opt),
            ratio: self.certificate.as_ref().map(|c| c.ratio),
        }
    }
}

/// Approximate MAX-CSP.
///
/// Each type tensor is decomposed into cut tensors at accuracy
/// `eps 2^-(2^k + 2k + 2)`. Replacing the tensors by their decompositions
/// gives a surrogate objective that depends on `sigma` only through the
/// number of ones inside each atom of the common refinement of all sides, so
/// all count vectors are searched. The best one is realized by setting the
/// lowest-indexed variables of each atom, and the exact objective of that
/// assignment is reported.
pub fn approx_max_csp(inst: &CspInstance, eps: f64, c: f64, p: Exponent, oracle: &OracleConfig) -> Result<CspSolution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let accuracy = csp_accuracy(eps, inst.k);
    let tensors: Vec<(u64, BinaryTensor)> = build_type_tensors(inst)?.into_iter().collect();
    let types = tensors
        .par_iter()
        .map(|(table, t)| {
            let d = tensor_decompose(t, accuracy, c, p, oracle)?;
            Ok(TypeDecomposition { table: *table, cut_tensors: d.cut_tensors, report: d.report })
        })
        .collect::<Result<Vec<_>>>()?;

    let atoms = common_atoms(inst.n, types.iter().flat_map(|t| t.cut_tensors.iter().flat_map(|g| g.sides.iter())));
    let mut atom_of = vec![0; inst.n];
    for (a, members) in atoms.iter().enumerate() {
        members.iter().for_each(|&v| atom_of[v] = a);
    }
    let surrogate = Surrogate::new(&types, &atoms, &atom_of);

    let radices: Vec<u64> = atoms.iter().map(|a| a.len() as u64 + 1).collect();
    let grid_size = radices.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r).filter(|&g| g <= GRID_BUDGET));
    let Some(grid_size) = grid_size else {
        return Err(Error::Budget(format!(
            "{} atoms give more than {GRID_BUDGET} count vectors; retry with a larger eps",
            atoms.len()
        )));
    };
    let decode = |mut idx: u64| -> Vec<usize> {
        let mut counts = vec![0; radices.len()];
        for (slot, &r) in counts.iter_mut().zip(&radices).rev() {
            *slot = (idx % r) as usize;
            idx /= r;
        }
        counts
    };
    let (best, best_idx) = (0..grid_size)
        .into_par_iter()
        .map(|idx| (surrogate.value(&decode(idx)), idx))
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| if b.0 > a.0 + 1e-9 || ((b.0 - a.0).abs() <= 1e-9 && b.1 < a.1) { b } else { a },
        );
    let counts = decode(best_idx);

    let mut sigma = vec![false; inst.n];
    for (members, &x) in atoms.iter().zip(&counts) {
        members.iter().take(x).for_each(|&v| sigma[v] = true);
    }
    let value = evaluate_assignment(inst, &sigma)?;
    let certificate = if inst.n <= BRUTE_FORCE_LIMIT {
        let opt = opt_bruteforce(inst)?;
        let ratio = if opt.value == 0 { 1.0 } else { value as f64 / opt.value as f64 };
        Some(CspCertificate {
            opt: opt.value,
            meets_bound: value as f64 >= (1.0 - eps) * opt.value as f64 - crate::TOL,
            opt_sigma: opt.sigma,
            ratio,
        })
    } else {
        None
    };
    Ok(CspSolution { sigma, value, eps, accuracy, atoms, counts, surrogate: best, grid_size, types, certificate })
}

/// Groups variables by their membership pattern across `sides`.
fn common_atoms<'a>(n: usize, sides: impl Iterator<Item = &'a Vec<usize>>) -> Vec<Vec<usize>> {
    let mut signature: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, side) in sides.enumerate() {
        side.iter().for_each(|&v| signature[v].push(s as u32));
    }
    let mut index: HashMap<&[u32], usize> = HashMap::new();
    let mut atoms: Vec<Vec<usize>> = Vec::new();
    for (v, sig) in signature.iter().enumerate() {
        let a = *index.entry(sig).or_insert_with(|| {
            atoms.push(Vec::new());
            atoms.len() - 1
        });
        atoms[a].push(v);
    }
    atoms
}

/// `sum_psi sum_G c_G sum_{x in S_1 x .. x S_k} psi(sigma(x))` as a function
/// of the per-atom counts.
struct Surrogate {
    /// Distinct sides as (atoms covered, size).
    sides: Vec<(Vec<usize>, usize)>,
    /// (truth table, coefficient, side ids).
    terms: Vec<(u64, f64, Vec<usize>)>,
}

impl Surrogate {
    fn new(types: &[TypeDecomposition], atoms: &[Vec<usize>], atom_of: &[usize]) -> Self {
        let mut ids: HashMap<&[usize], usize> = HashMap::new();
        let mut sides = Vec::new();
        let mut terms = Vec::new();
        for t in types {
            for g in &t.cut_tensors {
                let side_ids = g
                    .sides
                    .iter()
                    .map(|s| {
                        *ids.entry(s.as_slice()).or_insert_with(|| {
                            let covered: BTreeSet<usize> = s.iter().map(|&v| atom_of[v]).collect();
                            debug_assert!(covered.iter().map(|&a| atoms[a].len()).sum::<usize>() == s.len());
                            sides.push((covered.into_iter().collect(), s.len()));
                            sides.len() - 1
                        })
                    })
                    .collect();
                terms.push((t.table, g.coefficient, side_ids));
            }
        }
        Surrogate { sides, terms }
    }

    fn value(&self, counts: &[usize]) -> f64 {
        let ones: Vec<f64> = self.sides.iter().map(|(atoms, _)| atoms.iter().map(|&a| counts[a]).sum::<usize>() as f64).collect();
        let mut total = 0.0;
        for (table, coefficient, side_ids) in &self.terms {
            let k = side_ids.len();
            let mut sum = 0.0;
            for j in 0..1usize << k {
                if table >> j & 1 == 0 {
                    continue;
                }
                let mut prod = 1.0;
                for (t, &s) in side_ids.iter().enumerate() {
                    let bit = j >> (k - 1 - t) & 1;
                    prod *= if bit == 1 { ones[s] } else { self.sides[s].1 as f64 - ones[s] };
                }
                sum += prod;
            }
            total += coefficient * sum;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(a: usize, b: usize, table: u64) -> Constraint {
        Constraint { vars: vec![a, b], table }
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CspInstance {
        let mut cs = BTreeSet::new();
        while cs.len() < m {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                cs.insert(pair(a.min(b), a.max(b), rng.gen_range(1..16)));
            }
        }
        CspInstance::new(n, 2, cs.into_iter().collect()).unwrap()
    }

    /// Independent oracle: plain enumeration over assignments.
    fn naive_opt(inst: &CspInstance) -> (u64, Vec<bool>) {
        let n = inst.n();
        let mut best = (0, vec![false; n]);
        let mut first = true;
        for mask in 0u64..1 << n {
            let sigma: Vec<bool> = (0..n).map(|v| mask >> (n - 1 - v) & 1 == 1).collect();
            let v = evaluate_assignment(inst, &sigma).unwrap();
            if first || v > best.0 {
                best = (v, sigma);
                first = false;
            }
        }
        best
    }

    #[test]
    fn evaluate_examples() {
        let and = CspInstance::new(2, 2, vec![pair(0, 1, AND)]).unwrap();
        assert_eq!(evaluate_assignment(&and, &[true, true]).unwrap(), 1);
        assert_eq!(evaluate_assignment(&and, &[true, false]).unwrap(), 0);
        let both = CspInstance::new(2, 2, vec![pair(0, 1, AND), pair(0, 1, XOR)]).unwrap();
        let values: Vec<u64> = [[false, false], [false, true], [true, false], [true, true]]
            .iter()
            .map(|s| evaluate_assignment(&both, s).unwrap())
            .collect();
        assert_eq!(values, vec![0, 1, 1, 1]);
    }

    #[test]
    fn table_bit_order() {
        // bit j for encoding j with the first variable most significant
        let first_only = Constraint { vars: vec![0, 1], table: 0b1100 };
        assert!(first_only.eval(&[true, false]));
        assert!(!first_only.eval(&[false, true]));
    }

    #[test]
    fn opt_examples() {
        let and = CspInstance::new(2, 2, vec![pair(0, 1, AND)]).unwrap();
        assert_eq!(opt_bruteforce(&and).unwrap(), Optimum { value: 1, sigma: vec![true, true] });
        let both = CspInstance::new(2, 2, vec![pair(0, 1, AND), pair(0, 1, XOR)]).unwrap();
        assert_eq!(opt_bruteforce(&both).unwrap(), Optimum { value: 1, sigma: vec![false, true] });
        let empty = CspInstance::new(3, 2, vec![]).unwrap();
        assert_eq!(opt_bruteforce(&empty).unwrap().value, 0);
    }

    #[test]
    fn opt_matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(0..=n * (n - 1) / 2).min(12);
            let inst = random_instance(&mut rng, n, m);
            let (v, s) = naive_opt(&inst);
            assert_eq!(opt_bruteforce(&inst).unwrap(), Optimum { value: v, sigma: s });
        }
    }

    #[test]
    fn type_tensor_examples() {
        let and = CspInstance::new(2, 2, vec![pair(0, 1, AND)]).unwrap();
        let t = build_type_tensors(&and).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[&AND].ones().collect::<Vec<_>>(), vec![vec![0, 1]]);
        assert!(build_type_tensors(&CspInstance::new(4, 2, vec![]).unwrap()).unwrap().is_empty());
        let both = CspInstance::new(2, 2, vec![pair(0, 1, AND), pair(0, 1, XOR)]).unwrap();
        let t = build_type_tensors(&both).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.values().all(|x| x.count_ones() == 1));
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "# two constraints\n3 2\nvars 1 2\ntable 0 0 0 1\nvars 2 3\ntable 0 1 1 0\n";
        let inst = CspInstance::parse(text).unwrap();
        assert_eq!(inst.constraints(), &[pair(0, 1, AND), pair(1, 2, XOR)]);
        assert_eq!(CspInstance::parse(&inst.to_text()).unwrap(), inst);
        for bad in [
            "3 2\nvars 2 1\ntable 0 0 0 1\n",
            "3 2\nvars 1 4\ntable 0 0 0 1\n",
            "3 2\nvars 1 2\ntable 0 0 0 0\n",
            "3 2\nvars 1 2\ntable 0 0 1\n",
            "3 2\nvars 1 2\n",
            "3 2\nvars 1 2\ntable 0 0 0 1\nvars 1 2\ntable 0 0 0 1\n",
            "3\n",
        ] {
            assert!(matches!(CspInstance::parse(bad), Err(Error::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn atoms_refine_every_side() {
        let sides = [vec![0, 1, 2], vec![2, 3], vec![0, 1, 2, 3, 4]];
        let atoms = common_atoms(6, sides.iter());
        assert_eq!(atoms, vec![vec![0, 1], vec![2], vec![3], vec![4], vec![5]]);
    }

    #[test]
    fn single_and_reaches_opt() {
        let inst = CspInstance::new(2, 2, vec![pair(0, 1, AND)]).unwrap();
        let c = csp_universal_constant(&inst, Exponent::Finite(2.0)).unwrap();
        let s = approx_max_csp(&inst, 0.25, c, Exponent::Finite(2.0), &OracleConfig::exact()).unwrap();
        assert_eq!(s.value, 1);
        assert_eq!(s.sigma, vec![true, true]);
        let out = serde_json::to_value(s.output()).unwrap();
        assert_eq!(out, serde_json::json!({"sigma": [1, 1], "value": 1, "opt": 1, "ratio": 1.0}));
    }

    #[test]
    fn empty_instance() {
        let inst = CspInstance::new(3, 2, vec![]).unwrap();
        let s = approx_max_csp(&inst, 0.3, 1.0, Exponent::Finite(2.0), &OracleConfig::exact()).unwrap();
        assert_eq!(s.value, 0);
        assert_eq!(s.certificate.unwrap().ratio, 1.0);
    }

    #[test]
    fn value_is_exact_and_near_opt_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Exponent::Finite(2.0);
        for _ in 0..8 {
            let n = rng.gen_range(4..=9);
            let m = rng.gen_range(1..=10);
            let inst = random_instance(&mut rng, n, m);
            let c = csp_universal_constant(&inst, p).unwrap();
            assert!(csp_regularity_check(&inst, c, p).unwrap().holds);
            let s = approx_max_csp(&inst, 0.3, c, p, &OracleConfig::exact()).unwrap();
            assert_eq!(s.value, evaluate_assignment(&inst, &s.sigma).unwrap());
            assert!(s.certificate.as_ref().unwrap().meets_bound, "{:?}", s.output());
            let ones: Vec<usize> = s.atoms.iter().map(|a| a.iter().filter(|&&v| s.sigma[v]).count()).collect();
            assert_eq!(ones, s.counts);
        }
    }

    #[test]
    fn accuracy_constant() {
        assert_eq!(csp_accuracy(0.3, 2), 0.3 / 1024.0);
        assert_eq!(csp_accuracy(1.0, 3), 2f64.powi(-16));
    }
}
