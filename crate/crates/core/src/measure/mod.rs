//! Measures, densities, rectangle partitions, conditional expectations,
//! `L_p` norms and the exact cut norm.
//!
//! Every matrix lives on `[n1] x [n2]` with the uniform probability measure,
//! so `int_A f dmu = (sum over A) / (n1 n2)`.

mod cutnorm;
mod matrix;
mod partition;
mod real;
mod step;
mod tiny;

pub use cutnorm::{cut_norm_exact, cut_norm_exact_with_limit, CutNorm, DEFAULT_EXHAUSTIVE_LIMIT};
pub use matrix::BinaryMatrix;
pub(crate) use matrix::{parse_usize_fields, strip_comment};
pub use partition::{min_side_len, RectPartition, Rectangle};
pub(crate) use partition::{difference_sorted, intersect_sorted};
pub use real::{integral_over, Integrable, RealMatrix};
pub use step::{
    conditional_expectation, conditional_expectation_real, step_lp_norm, CutMatrix, Exponent, StepMatrix,
};
pub(crate) use step::neumaier_sum;
pub use tiny::Tiny;

/// `|ones| / (n1 n2)`.
pub fn density(f: &BinaryMatrix) -> f64 {
    f.density()
}

/// `iota(P)`.
pub fn iota(p: &RectPartition) -> f64 {
    p.iota()
}

#[cfg(test)]
mod invariants {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn binary(max: usize) -> impl Strategy<Value = BinaryMatrix> {
        (1..=max, 1..=max).prop_flat_map(|(n1, n2)| {
            prop::collection::vec(any::<bool>(), n1 * n2)
                .prop_map(move |bits| BinaryMatrix::from_dense(n1, n2, bits).unwrap())
        })
    }

    /// Random grid partition from cut points.
    fn grid_for(f: &BinaryMatrix, rows: u32, cols: u32) -> RectPartition {
        fn blocks(n: usize, cuts: u32) -> Vec<Vec<usize>> {
            let mut out = vec![vec![0]];
            for i in 1..n {
                if cuts >> i & 1 == 1 {
                    out.push(vec![]);
                }
                out.last_mut().unwrap().push(i);
            }
            out
        }
        RectPartition::grid(f.n1(), f.n2(), &blocks(f.n1(), rows), &blocks(f.n2(), cols)).unwrap()
    }

    proptest! {
        #[test]
        fn cut_norm_of_binary_is_its_one_count(f in binary(6)) {
            let c = cut_norm_exact(&RealMatrix::from_binary(&f)).unwrap();
            prop_assert_eq!(c.value, f.count_ones() as f64);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let e = conditional_expectation(&f, &RectPartition::finest(f.n1(), f.n2())).unwrap();
                let norm_p = if p == 1.0 { e.l1_norm() } else { e.lp_norm(Exponent::Finite(p)).unwrap() };
                prop_assert!((norm_p.powf(p) * f.size() as f64 - c.value).abs() < 1e-9);
            }
        }

        #[test]
        fn conditional_expectation_preserves_mean(f in binary(7), r in any::<u32>(), c in any::<u32>()) {
            let p = grid_for(&f, r, c);
            let e = conditional_expectation(&f, &p).unwrap();
            prop_assert_eq!(e.exact_mean().unwrap(), Ratio::new(f.count_ones() as u64, f.size() as u64));
            prop_assert!((e.mean() - f.density()).abs() < 1e-12);
            prop_assert!((e.l1_norm() - f.density()).abs() < 1e-12);
        }

        #[test]
        fn lp_norm_monotone_in_p(f in binary(6), r in any::<u32>(), c in any::<u32>()) {
            let e = conditional_expectation(&f, &grid_for(&f, r, c)).unwrap();
            let ps = [Exponent::Finite(1.1), Exponent::Finite(1.5), Exponent::Finite(2.0),
                      Exponent::Finite(4.0), Exponent::Infinity];
            for w in ps.windows(2) {
                prop_assert!(e.lp_norm(w[0]).unwrap() <= e.lp_norm(w[1]).unwrap() + 1e-12);
            }
        }

        #[test]
        fn conditional_expectation_is_idempotent(f in binary(6), r in any::<u32>(), c in any::<u32>()) {
            let p = grid_for(&f, r, c);
            let e = conditional_expectation(&f, &p).unwrap();
            let again = conditional_expectation_real(&e.to_real(), &p).unwrap();
            prop_assert_eq!(again.values(), e.values());
        }
    }
}
