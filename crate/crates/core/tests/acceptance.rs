//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpreg::csp::{approx_max_csp, csp_regularity_check, csp_universal_constant, Constraint, CspInstance};
use lpreg::decompose::{decompose, martingale_check, synthesize_params, CertificateStatus, DecompositionResult};
use lpreg::measure::{
    conditional_expectation, cut_norm_exact, BinaryMatrix, Exponent, RealMatrix, RectPartition, Rectangle, Tiny,
};
use lpreg::oracle::{oracle_exact, oracle_heuristic, OracleConfig};
use lpreg::refine::{envelope_partition, increment_guarantee_check, refine_partition, IncrementOutcome, RefineParams};
use lpreg::regularity::{
    boundedness_vs_regularity_audit, generate_w_random, random_split_partition, regularity_witness_search,
    universal_regularity_constant, RegularityParams, SearchMode, Verdict, WGrid,
};
use lpreg::tensor::{flatten, tensor_decompose, unflatten, BinaryTensor, TensorStatus};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n1: usize, n2: usize, density: f64) -> BinaryMatrix {
    BinaryMatrix::from_fn(n1, n2, |_, _| rng.gen_bool(density)).unwrap()
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

fn cut_norm_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut bad = 0;
    for _ in 0..200 {
        let (n1, n2) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let density = rng.gen_range(0.0..=1.0);
        let f = random_matrix(&mut rng, n1, n2, density);
        if cut_norm_exact(&RealMatrix::from_binary(&f)).unwrap().value != f.count_ones() as f64 {
            bad += 1;
        }
    }
    let t = start.elapsed();
    Outcome::new(bad == 0 && within(Duration::from_secs(30), t), format!("{bad}/200 mismatches, {t:.2?}"))
}

fn envelope_exhaustive() -> Outcome {
    let start = Instant::now();
    let x: Vec<usize> = (0..6).collect();
    let subsets: Vec<Vec<usize>> = (0u32..64).map(|m| (0..6).filter(|i| m >> i & 1 == 1).collect()).collect();
    let (mut checked, mut bad) = (0, 0);
    for vartheta in [0.1, 0.2, 0.34] {
        for a1 in &subsets {
            for a2 in &subsets {
                if (a1.len() as f64) < vartheta * 6.0 || (a2.len() as f64) < vartheta * 6.0 {
                    continue;
                }
                checked += 1;
                let Ok(env) = envelope_partition(&x, &x, a1, a2, vartheta) else {
                    bad += 1;
                    continue;
                };
                let q = RectPartition::new(6, 6, env.cells.clone()).unwrap();
                let b = env.b_rect();
                let contains = a1.iter().all(|i| b.rows().contains(i)) && a2.iter().all(|j| b.cols().contains(j));
                // exact: |B| - |A| <= 2 vartheta * 36
                let slack = (b.count() - a1.len() * a2.len()) as f64;
                let ok = q.len() <= 4 && q.iota() >= vartheta && contains && slack <= 2.0 * vartheta * 36.0;
                bad += !ok as usize;
            }
        }
    }
    let t = start.elapsed();
    Outcome::new(bad == 0 && within(Duration::from_secs(10), t), format!("{checked} admissible (A1, A2, vartheta), {bad} failures, {t:.2?}"))
}

fn refinement_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let c = 2.0;
    let p = Exponent::Finite(2.0);
    let reg = RegularityParams::with_vanishing_eta(c, p).unwrap();
    let eta = Tiny::from_value(f64::MIN_POSITIVE).unwrap();
    let (mut corpus, mut attempts, mut bad, mut hypotheses) = (0, 0, Vec::new(), 0);
    while corpus < 60 && attempts < 2000 {
        attempts += 1;
        let (n1, n2) = (rng.gen_range(4..=6), rng.gen_range(4..=6));
        let density = rng.gen_range(0.2..0.6);
        let f = random_matrix(&mut rng, n1, n2, density);
        if f.count_ones() == 0 {
            continue;
        }
        let search = regularity_witness_search(&f, &reg, SearchMode::GridExhaustive, 0, 0).unwrap();
        if search.verdict != Verdict::NoViolationFound {
            continue;
        }
        let part = random_split_partition(n1, n2, 1, 1, &mut rng).unwrap();
        let residual = RealMatrix::residual(&f, &conditional_expectation(&f, &part).unwrap()).unwrap();
        let a = if rng.gen_bool(0.7) {
            cut_norm_exact(&residual).unwrap().witness
        } else {
            let rows: Vec<usize> = (0..n1).filter(|_| rng.gen_bool(0.5)).collect();
            let cols: Vec<usize> = (0..n2).filter(|_| rng.gen_bool(0.5)).collect();
            Rectangle::new(rows, cols)
        };
        let eps = if rng.gen_bool(0.5) { 0.3 } else { 0.45 };
        let vartheta = eps / (16.0 * c);
        let params = RefineParams::new(vartheta, c, p, eta, &part).unwrap();
        let r = refine_partition(&f, &part, &a, &params).unwrap();
        corpus += 1;
        let rep = &r.report;
        if !(rep.refines && rep.sym_diff.holds && rep.expectation_on_sym_diff.holds && rep.ones_on_sym_diff.holds) {
            bad.push(format!("instance {corpus}: {rep:?}"));
        }
        let check = increment_guarantee_check(&f, &part, &r.partition, &a, &r.b_cells, eps, 1.0, p).unwrap();
        match check.outcome {
            IncrementOutcome::Confirmed => hypotheses += 1,
            IncrementOutcome::HypothesisNotMet => {}
            IncrementOutcome::Breach => bad.push(format!("instance {corpus}: increment {check:?}")),
        }
    }
    let detail = format!(
        "{corpus} regular instances ({attempts} drawn), increment hypothesis met on {hypotheses}, {} failures{}",
        bad.len(),
        bad.first().map(|b| format!(": {b}")).unwrap_or_default()
    );
    Outcome::new(corpus >= 50 && bad.is_empty(), detail)
}

/// Desk corpus for the end-to-end suite.
fn structured_corpus() -> Vec<(String, BinaryMatrix)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for n in [8usize, 12, 16, 20] {
        for blocks in [2, 3, 4] {
            let size = n.div_ceil(blocks);
            let f = BinaryMatrix::from_fn(n, n, |i, j| i / size == j / size).unwrap();
            out.push((format!("block-diagonal n={n} b={blocks}"), f));
        }
        let noisy = BinaryMatrix::from_fn(n, n, |i, j| {
            let same = (i < n / 2) == (j < n / 2);
            rng.gen_bool(if same { 0.6 } else { 0.1 })
        })
        .unwrap();
        out.push((format!("noisy two-block n={n}"), noisy));
    }
    for (k, n) in [10, 12, 14, 16, 18, 20, 20, 22].into_iter().enumerate() {
        let density = 0.1 + 0.05 * k as f64;
        let (f, _) = generate_w_random(&WGrid::flat(), n, density, k as u64, k % 2 == 0).unwrap();
        out.push((format!("W-random flat n={n} d={density:.2}"), f));
    }
    let w = WGrid::new(2, vec![3.0, 0.5, 0.5, 1.0]).unwrap();
    for (k, n) in [12, 16, 20].into_iter().enumerate() {
        let (f, _) = generate_w_random(&w, n, 0.2, 40 + k as u64, true).unwrap();
        out.push((format!("W-random two-step n={n}"), f));
    }
    for n in [9, 15] {
        let f = BinaryMatrix::from_fn(n, n + 3, |i, j| i < n / 3 && j >= 2).unwrap();
        out.push((format!("planted rectangle {n}x{}", n + 3), f));
    }
    let wide = BinaryMatrix::from_fn(10, 24, |i, j| rng.gen_bool(if (i < 5) == (j < 12) { 0.5 } else { 0.05 })).unwrap();
    out.push(("noisy two-block 10x24".into(), wide));
    out.push(("checkerboard 12x12".into(), BinaryMatrix::from_fn(12, 12, |i, j| (i / 3 + j / 3) % 2 == 0).unwrap()));
    let (f, _) = generate_w_random(&w, 22, 0.15, 43, false).unwrap();
    out.push(("W-random two-step n=22".into(), f));
    out
}

struct EndToEnd {
    outcome: Outcome,
    runs: Vec<(f64, BinaryMatrix, DecompositionResult)>,
    json: String,
}

fn end_to_end() -> EndToEnd {
    let start = Instant::now();
    let corpus = structured_corpus();
    let oracle = OracleConfig::exact();
    let mut bad = Vec::new();
    let mut runs = Vec::new();
    let mut json = String::new();
    for (name, f) in &corpus {
        for p in [Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Infinity] {
            let c = universal_regularity_constant(f.density(), p);
            for eps in [0.3, 0.45] {
                let params = synthesize_params(eps, c, p, oracle.alpha_claim).unwrap();
                let mut r = decompose(f, &params, &oracle).unwrap();
                let cert = r.verify(f).clone();
                let steps_ok = r.trace.steps.len() as u64 <= params.tau + 1;
                let cells_ok = (r.partition.len() as f64).ln() <= params.tau as f64 * 4f64.ln();
                let iota_ok = params.eta.le_ln(r.partition.ln_iota());
                let verified = cert.status == CertificateStatus::Verified
                    && cert.residual_cut_norm.is_some_and(|v| v <= eps * f.count_ones() as f64 + TOL);
                if !(steps_ok && cells_ok && iota_ok && verified) {
                    bad.push(format!("{name} p={p} eps={eps}: {:?}", cert.failed_clauses().collect::<Vec<_>>()));
                }
                json.push_str(&serde_json::to_string(&r).unwrap());
                runs.push((params.p_dagger, f.clone(), r));
            }
        }
    }
    let t = start.elapsed();
    let detail = format!(
        "{} matrices x 3 exponents x 2 eps = {} runs, {} certificate failures, {t:.2?}{}",
        corpus.len(),
        runs.len(),
        bad.len(),
        bad.first().map(|b| format!(": {b}")).unwrap_or_default()
    );
    let pass = corpus.len() >= 30 && bad.is_empty() && within(Duration::from_secs(300), t);
    EndToEnd { outcome: Outcome::new(pass, detail), runs, json }
}

fn martingale_suite(runs: &[(f64, BinaryMatrix, DecompositionResult)]) -> Outcome {
    let mut bad = 0;
    let mut exact = 0;
    for (p_dagger, f, r) in runs {
        let m = martingale_check(&r.trace, f, *p_dagger).unwrap();
        bad += !m.inequality.holds as usize;
        exact += m.telescoping_exact as usize;
    }
    Outcome::new(
        bad == 0 && exact == runs.len(),
        format!("{} traces, {bad} violations, telescoping exact on {exact}", runs.len()),
    )
}

fn fact_audit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut breaches = Vec::new();
    for _ in 0..50 {
        let density = rng.gen_range(0.1..0.7);
        let f = random_matrix(&mut rng, 6, 6, density);
        if f.count_ones() == 0 {
            continue;
        }
        for c in [1.0, 2.0] {
            let audit = boundedness_vs_regularity_audit(&f, c, 1.0 / 3.0).unwrap();
            breaches.extend(audit.breaches);
        }
    }
    Outcome::new(breaches.is_empty(), format!("50 matrices x 2 (C, eta), {} breaches", breaches.len()))
}

fn oracle_audit() -> (Outcome, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = f64::INFINITY;
    let mut json = String::new();
    for k in 0..100 {
        let (n1, n2) = (rng.gen_range(2..=12), rng.gen_range(2..=12));
        let density = rng.gen_range(0.05..0.6);
        let mut f = random_matrix(&mut rng, n1, n2, density);
        if f.count_ones() == 0 {
            f = BinaryMatrix::new(n1, n2, [(0, 0)]).unwrap();
        }
        let part = random_split_partition(n1, n2, 1, 1, &mut rng).unwrap();
        let g = RealMatrix::residual(&f, &conditional_expectation(&f, &part).unwrap()).unwrap();
        let exact = oracle_exact(&g).unwrap();
        let heuristic = oracle_heuristic(&g, &OracleConfig::heuristic(k)).unwrap();
        let ratio = if exact.scaled_value <= TOL { 1.0 } else { heuristic.scaled_value / exact.scaled_value };
        worst = worst.min(ratio);
        json.push_str(&serde_json::to_string(&(&exact, &heuristic)).unwrap());
    }
    (Outcome::new(worst >= 0.5, format!("100 residuals, worst heuristic/exact ratio {worst:.4}")), json)
}

fn random_tensor(rng: &mut ChaCha8Rng, k: usize) -> BinaryTensor {
    let dims: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
    let density = rng.gen_range(0.0..=1.0);
    BinaryTensor::from_fn(&dims, |_| rng.gen_bool(density)).unwrap()
}

fn tensor_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut round_trip_bad = 0;
    for _ in 0..100 {
        let k = rng.gen_range(2..=4);
        let t = random_tensor(&mut rng, k);
        let (f, fl) = flatten(&t).unwrap();
        if unflatten(&f, &fl).unwrap() != t || f.count_ones() != t.count_ones() {
            round_trip_bad += 1;
        }
    }
    let p = Exponent::Finite(2.0);
    let instances: Vec<(&str, BinaryTensor)> = vec![
        ("block", BinaryTensor::from_fn(&[4, 4, 4], |x| (x[0] < 2) == (x[1] < 2) && (x[1] < 2) == (x[2] < 2)).unwrap()),
        ("slab", BinaryTensor::from_fn(&[4, 4, 4], |x| x[0] < 2).unwrap()),
        ("diagonal", BinaryTensor::from_fn(&[4, 4, 4], |x| x[0] == x[1] && x[1] == x[2]).unwrap()),
        ("planted", BinaryTensor::from_fn(&[4, 4, 4], |x| x[0] < 3 && x[1] > 0 && x[2] % 2 == 0).unwrap()),
        ("random", {
            let mut r = ChaCha8Rng::seed_from_u64(809);
            BinaryTensor::from_fn(&[4, 4, 4], |_| r.gen_bool(0.3)).unwrap()
        }),
        ("random-sparse", {
            let mut r = ChaCha8Rng::seed_from_u64(810);
            BinaryTensor::from_fn(&[4, 4, 4], |_| r.gen_bool(0.1)).unwrap()
        }),
    ];
    let mut failed = Vec::new();
    let mut sizes = Vec::new();
    for (name, t) in &instances {
        let c = universal_regularity_constant(flatten(t).unwrap().0.density(), p);
        let d = tensor_decompose(t, 0.45, c, p, &OracleConfig::exact()).unwrap();
        let ok = d.report.status == TensorStatus::Verified
            && d.report.residual_cut_norm.is_some_and(|v| v <= 0.45 * t.count_ones() as f64 + TOL);
        if !ok {
            failed.push(name.to_string());
        }
        sizes.push(format!("{name}:{}", d.report.s));
    }
    Outcome::new(
        round_trip_bad == 0 && failed.is_empty(),
        format!(
            "100 round trips ({round_trip_bad} bad); (4,4,4) instances verified at eps 0.45 except {failed:?}; cut tensors {}",
            sizes.join(" ")
        ),
    )
}

fn random_csp(rng: &mut ChaCha8Rng) -> CspInstance {
    let n = rng.gen_range(4..=12);
    let m = rng.gen_range(1..=2 * n);
    let mut cs = std::collections::BTreeSet::new();
    while cs.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            cs.insert(Constraint { vars: vec![a.min(b), a.max(b)], table: rng.gen_range(1..16) });
        }
    }
    CspInstance::new(n, 2, cs.into_iter().collect()).unwrap()
}

fn max_csp_suite() -> (Outcome, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let p = Exponent::Finite(2.0);
    let eps = 0.3;
    let (mut bad, mut worst, mut json) = (0, f64::INFINITY, String::new());
    for _ in 0..50 {
        let inst = random_csp(&mut rng);
        let c = csp_universal_constant(&inst, p).unwrap();
        assert!(csp_regularity_check(&inst, c, p).unwrap().holds);
        let s = approx_max_csp(&inst, eps, c, p, &OracleConfig::exact()).unwrap();
        let cert = s.certificate.as_ref().unwrap();
        bad += !cert.meets_bound as usize;
        worst = worst.min(cert.ratio);
        json.push_str(&serde_json::to_string(&s).unwrap());
    }
    let t = start.elapsed();
    let pass = bad == 0 && within(Duration::from_secs(300), t);
    (Outcome::new(pass, format!("50 instances, {bad} below (1 - eps) OPT, worst ratio {worst:.4}, {t:.2?}")), json)
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("[{}] criterion {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "cut-norm identity", cut_norm_identity());
    report(2, "envelope exhaustive", envelope_exhaustive());
    report(3, "refinement", refinement_suite());
    let e2e = end_to_end();
    let martingale = martingale_suite(&e2e.runs);
    report(4, "end-to-end decomposition", e2e.outcome);
    report(5, "martingale differences", martingale);
    report(6, "boundedness audit", fact_audit());
    let (oracle, oracle_json) = oracle_audit();
    report(7, "oracle audit", oracle);
    report(8, "tensors", tensor_suite());
    let (csp, csp_json) = max_csp_suite();
    report(9, "max-csp", csp);

    let again = (end_to_end().json, oracle_audit().1, max_csp_suite().1);
    let same = [e2e.json == again.0, oracle_json == again.1, csp_json == again.2];
    report(
        10,
        "determinism",
        Outcome::new(same.iter().all(|&s| s), format!("criteria 4, 7, 9 rerun byte-identical: {same:?}")),
    );

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
