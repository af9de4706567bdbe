//! `{0,1}` tensors, their flattening into matrices, the tensor cut norm, and
//! decomposition into cut tensors.

use serde::{Deserialize, Serialize, Serializer};

use crate::decompose::{decompose, synthesize_params, DecompositionResult};
use crate::error::{Error, Result};
use crate::measure::{parse_usize_fields, strip_comment, BinaryMatrix, Exponent};
use crate::oracle::OracleConfig;
use crate::regularity::universal_regularity_constant;
use crate::TOL;

pub const TENSOR_EXHAUSTIVE_LIMIT: usize = 18;

/// Row-major linearization of index tuples over `dims`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codec {
    dims: Vec<usize>,
}

impl Codec {
    pub fn new(dims: &[usize]) -> Self {
        Codec { dims: dims.to_vec() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &n) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTensor {
    codec: Codec,
    bits: Vec<bool>,
    ones: usize,
}

impl BinaryTensor {
    /// From 0-based index tuples; duplicates and out-of-range tuples are rejected.
    pub fn new(dims: &[usize], ones: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("tensor dimensions must be positive, got {dims:?}")));
        }
        let codec = Codec::new(dims);
        let mut bits = vec![false; codec.len()];
        let mut count = 0;
        for t in ones {
            if t.len() != dims.len() || t.iter().zip(dims).any(|(&i, &n)| i >= n) {
                return Err(Error::InvalidParameter(format!("tuple {t:?} outside dimensions {dims:?}")));
            }
            let k = codec.encode(&t);
            if bits[k] {
                return Err(Error::InvalidParameter(format!("duplicate tuple {t:?}")));
            }
            bits[k] = true;
            count += 1;
        }
        Ok(BinaryTensor { codec, bits, ones: count })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let codec = Codec::new(dims);
        let ones: Vec<Vec<usize>> = (0..codec.len()).map(|k| codec.decode(k)).filter(|t| f(t)).collect();
        Self::new(dims, ones)
    }

    pub fn dims(&self) -> &[usize] {
        self.codec.dims()
    }

    pub fn order(&self) -> usize {
        self.codec.dims.len()
    }

    pub fn get(&self, tuple: &[usize]) -> bool {
        self.bits[self.codec.encode(tuple)]
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn size(&self) -> usize {
        self.bits.len()
    }

    pub fn density(&self) -> f64 {
        self.ones as f64 / self.size() as f64
    }

    pub fn ones(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| self.codec.decode(k))
    }

    /// First line `n1 .. nk`, then one 1-based `i1 .. ik` tuple per line;
    /// the matrix format is the case `k = 2`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l))).filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty tensor file"))?;
        let dims = parse_usize_fields(header, line_no)?;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::parse(line_no, "expected at least two positive dimensions"));
        }
        let codec = Codec::new(&dims);
        let mut bits = vec![false; codec.len()];
        let mut ones = Vec::new();
        for (no, line) in lines {
            let tuple = parse_usize_fields(line, no)?;
            if tuple.len() != dims.len() || tuple.iter().zip(&dims).any(|(&i, &n)| i == 0 || i > n) {
                return Err(Error::parse(no, format!("expected {} indices within {dims:?}", dims.len())));
            }
            let t: Vec<usize> = tuple.iter().map(|i| i - 1).collect();
            let k = codec.encode(&t);
            if bits[k] {
                return Err(Error::parse(no, format!("duplicate tuple {tuple:?}")));
            }
            bits[k] = true;
            ones.push(t);
        }
        Self::new(&dims, ones)
    }

    pub fn to_text(&self) -> String {
        let line = |t: &[usize]| t.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = line(self.dims());
        out.push('\n');
        for t in self.ones() {
            let shifted: Vec<usize> = t.iter().map(|i| i + 1).collect();
            out.push_str(&line(&shifted));
            out.push('\n');
        }
        out
    }

    pub fn to_real(&self) -> RealTensor {
        RealTensor { codec: self.codec.clone(), values: self.bits.iter().map(|&b| b as u8 as f64).collect() }
    }
}

/// Index codecs of a flattening: rows are the first `floor(k/2)` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flattening {
    pub rows: Codec,
    pub cols: Codec,
}

impl Flattening {
    pub fn for_dims(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter("flattening needs at least two coordinates".into()));
        }
        let k1 = dims.len() / 2;
        Ok(Flattening { rows: Codec::new(&dims[..k1]), cols: Codec::new(&dims[k1..]) })
    }

    pub fn split(&self, tuple: &[usize]) -> (usize, usize) {
        let k1 = self.rows.dims().len();
        (self.rows.encode(&tuple[..k1]), self.cols.encode(&tuple[k1..]))
    }

    pub fn join(&self, row: usize, col: usize) -> Vec<usize> {
        let mut t = self.rows.decode(row);
        t.extend(self.cols.decode(col));
        t
    }
}

pub fn flatten(t: &BinaryTensor) -> Result<(BinaryMatrix, Flattening)> {
    let fl = Flattening::for_dims(t.dims())?;
    let ones: Vec<(usize, usize)> = t.ones().map(|tuple| fl.split(&tuple)).collect();
    Ok((BinaryMatrix::new(fl.rows.len(), fl.cols.len(), ones)?, fl))
}

pub fn unflatten(f: &BinaryMatrix, fl: &Flattening) -> Result<BinaryTensor> {
    if (f.n1(), f.n2()) != (fl.rows.len(), fl.cols.len()) {
        return Err(Error::InvalidParameter("matrix does not match the flattening".into()));
    }
    let mut dims = fl.rows.dims().to_vec();
    dims.extend(fl.cols.dims());
    BinaryTensor::new(&dims, f.ones().map(|(i, j)| fl.join(i, j)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealTensor {
    codec: Codec,
    values: Vec<f64>,
}

impl RealTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let codec = Codec::new(dims);
        RealTensor { values: vec![0.0; codec.len()], codec }
    }

    pub fn dims(&self) -> &[usize] {
        self.codec.dims()
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.codec.encode(tuple)]
    }

    pub fn add_cut(&mut self, g: &CutTensor, sign: f64) {
        for_each_product(&g.sides, |t| {
            let k = self.codec.encode(t);
            self.values[k] += sign * g.coefficient;
        });
    }
}

/// Calls `f` on every tuple of `S1 x ... x Sk`.
fn for_each_product(sides: &[Vec<usize>], mut f: impl FnMut(&[usize])) {
    if sides.iter().any(Vec::is_empty) {
        return;
    }
    let mut pos = vec![0usize; sides.len()];
    let mut tuple: Vec<usize> = sides.iter().map(|s| s[0]).collect();
    loop {
        f(&tuple);
        let mut d = sides.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            pos[d] += 1;
            if pos[d] < sides[d].len() {
                tuple[d] = sides[d][pos[d]];
                break;
            }
            pos[d] = 0;
            tuple[d] = sides[d][0];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCutNorm {
    pub value: f64,
    pub witness: Vec<Vec<usize>>,
}

/// `max |sum_{S1 x ... x Sk} F|` by enumerating all subsets of the first
/// `k - 1` coordinates; the last side is chosen by sign.
pub fn tensor_cut_norm_exact(t: &RealTensor) -> Result<TensorCutNorm> {
    let dims = t.dims();
    let total: usize = dims.iter().sum();
    if total > TENSOR_EXHAUSTIVE_LIMIT {
        return Err(Error::ExhaustiveLimit {
            dim: total,
            limit: TENSOR_EXHAUSTIVE_LIMIT,
            hint: "tensor cut norm enumerates every side tuple; sum of dimensions too large",
        });
    }
    let k = dims.len();
    let head = &dims[..k - 1];
    let last = dims[k - 1];
    let bits: usize = head.iter().sum();
    let mut best = TensorCutNorm { value: 0.0, witness: vec![Vec::new(); k] };
    for mask in 0u64..1 << bits {
        let mut sides = Vec::with_capacity(k);
        let mut offset = 0;
        for &n in head {
            sides.push((0..n).filter(|i| mask >> (offset + i) & 1 == 1).collect::<Vec<_>>());
            offset += n;
        }
        let mut sums = vec![0.0f64; last];
        let mut probe = sides.clone();
        probe.push((0..last).collect());
        for_each_product(&probe, |tuple| sums[tuple[k - 1]] += t.get(tuple));
        for sign in [1.0, -1.0] {
            let chosen: Vec<usize> = (0..last).filter(|&j| sign * sums[j] > 1e-12).collect();
            let value: f64 = chosen.iter().map(|&j| sign * sums[j]).sum();
            if value > best.value + TOL {
                let mut witness = sides.clone();
                witness.push(chosen);
                best = TensorCutNorm { value, witness };
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutTensor {
    /// Sorted 0-based index sets, one per coordinate.
    pub sides: Vec<Vec<usize>>,
    pub coefficient: f64,
}

impl CutTensor {
    pub fn support_size(&self) -> usize {
        self.sides.iter().map(Vec::len).product()
    }
}

impl Serialize for CutTensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Json {
            sides: Vec<Vec<usize>>,
            c: f64,
        }
        Json {
            sides: self.sides.iter().map(|side| side.iter().map(|i| i + 1).collect()).collect(),
            c: self.coefficient,
        }
        .serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorStatus {
    Verified,
    Failed,
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorReport {
    pub order: usize,
    pub dims: Vec<usize>,
    /// Number of cut tensors `s`.
    pub s: usize,
    /// Accuracy used for the flattened matrix.
    pub eps_top: f64,
    /// Accuracy used for side-set roundings at this level.
    pub eps_sides: f64,
    pub top_cells: usize,
    pub residual_cut_norm: Option<f64>,
    /// `eps * |ones|`.
    pub bound: f64,
    pub status: TensorStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorDecomposition {
    pub cut_tensors: Vec<CutTensor>,
    pub report: TensorReport,
}

impl TensorDecomposition {
    pub fn residual(&self, t: &BinaryTensor) -> RealTensor {
        let mut r = t.to_real();
        for g in &self.cut_tensors {
            r.add_cut(g, -1.0);
        }
        r
    }
}

/// Approximates `F` by cut tensors with `||F - sum G||_cut <= eps ||F||_cut`.
///
/// The flattened matrix is decomposed at `eps / 2`. Each of its cut matrices
/// `c 1_{R x T}` has tuple sets `R`, `T` as sides; a side spanning two or
/// more coordinates is itself decomposed (recursively, at the remaining
/// budget, split evenly when both sides need it) and the product of the two
/// expansions gives cut tensors. All coefficients are nonnegative and every
/// level preserves mass, so the side errors add up to at most the remaining
/// budget times `|ones|`.
///
/// Sub-problems use the regularity constant at which their indicator is
/// regular for every `eta`.
pub fn tensor_decompose(
    t: &BinaryTensor,
    eps: f64,
    c: f64,
    p: Exponent,
    oracle: &OracleConfig,
) -> Result<TensorDecomposition> {
    let (cut_tensors, top_cells) = decompose_rec(t, eps, Some(c), p, oracle)?;
    let bound = eps * t.count_ones() as f64;
    let (residual_cut_norm, status) = if t.dims().iter().sum::<usize>() <= TENSOR_EXHAUSTIVE_LIMIT {
        let mut r = t.to_real();
        for g in &cut_tensors {
            r.add_cut(g, -1.0);
        }
        let v = tensor_cut_norm_exact(&r)?.value;
        (Some(v), if v <= bound + TOL { TensorStatus::Verified } else { TensorStatus::Failed })
    } else {
        (None, TensorStatus::Uncertified)
    };
    let report = TensorReport {
        order: t.order(),
        dims: t.dims().to_vec(),
        s: cut_tensors.len(),
        eps_top: eps / 2.0,
        eps_sides: side_budget(t.order(), eps),
        top_cells,
        residual_cut_norm,
        bound,
        status,
    };
    Ok(TensorDecomposition { cut_tensors, report })
}

/// Accuracy for each side that spans two or more coordinates.
fn side_budget(k: usize, eps: f64) -> f64 {
    let k1 = k / 2;
    let rounded = (k1 >= 2) as usize + (k - k1 >= 2) as usize;
    if rounded == 0 {
        0.0
    } else {
        eps / 2.0 / rounded as f64
    }
}

/// Returns the cut tensors and the cell count of the top-level partition.
fn decompose_rec(
    t: &BinaryTensor,
    eps: f64,
    c: Option<f64>,
    p: Exponent,
    oracle: &OracleConfig,
) -> Result<(Vec<CutTensor>, usize)> {
    if t.count_ones() == 0 {
        return Ok((Vec::new(), 0));
    }
    if t.order() == 1 {
        return Ok((vec![CutTensor { sides: vec![t.ones().map(|v| v[0]).collect()], coefficient: 1.0 }], 1));
    }
    let (f, fl) = flatten(t)?;
    let c = c.unwrap_or_else(|| universal_regularity_constant(f.density(), p));
    let top = decompose_matrix(&f, eps / 2.0, c, p, oracle)?;
    let side_eps = side_budget(t.order(), eps);

    let mut out = Vec::new();
    for cm in &top.cut_matrices {
        let row_tuples: Vec<Vec<usize>> = cm.support.rows().iter().map(|&r| fl.rows.decode(r)).collect();
        let col_tuples: Vec<Vec<usize>> = cm.support.cols().iter().map(|&c| fl.cols.decode(c)).collect();
        let left = expand_side(fl.rows.dims(), row_tuples, side_eps, p, oracle)?;
        let right = expand_side(fl.cols.dims(), col_tuples, side_eps, p, oracle)?;
        for l in &left {
            for r in &right {
                let mut sides = l.sides.clone();
                sides.extend(r.sides.iter().cloned());
                out.push(CutTensor { sides, coefficient: cm.coefficient * l.coefficient * r.coefficient });
            }
        }
    }
    Ok((out, top.partition.len()))
}

/// Expresses the indicator of a tuple set as cut tensors over `dims`.
fn expand_side(dims: &[usize], tuples: Vec<Vec<usize>>, eps: f64, p: Exponent, oracle: &OracleConfig) -> Result<Vec<CutTensor>> {
    if dims.len() == 1 {
        let side = tuples.into_iter().map(|t| t[0]).collect();
        return Ok(vec![CutTensor { sides: vec![side], coefficient: 1.0 }]);
    }
    let indicator = BinaryTensor::new(dims, tuples)?;
    Ok(decompose_rec(&indicator, eps, None, p, oracle)?.0)
}

fn decompose_matrix(f: &BinaryMatrix, eps: f64, c: f64, p: Exponent, oracle: &OracleConfig) -> Result<DecompositionResult> {
    let params = synthesize_params(eps, c, p, oracle.alpha_claim)?;
    decompose(f, &params, oracle)
}
