use std::error::Error as StdError;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use lpreg::csp::{approx_max_csp, csp_regularity_check, csp_universal_constant, CspInstance};
use lpreg::decompose::{decompose, synthesize_params, verify_record, CertificateStatus, DecompositionRecord};
use lpreg::measure::{conditional_expectation, BinaryMatrix, RealMatrix, RectPartition};
use lpreg::oracle::oracle_dispatch;
use lpreg::regularity::{
    generate_w_random, holder_bound_check, is_bounded, is_bounded_sampled, regularity_witness_search,
    universal_regularity_constant, Boundedness, HolderOutcome, RegularityParams, SearchMode, Verdict, WGrid,
    BOUNDED_EXHAUSTIVE_LIMIT, GRID_EXHAUSTIVE_LIMIT,
};
use lpreg::tensor::{flatten, tensor_decompose, BinaryTensor, TensorStatus};

use crate::args::{
    CheckArgs, CheckMode, Command, CutnormArgs, DecomposeArgs, Format, GenArgs, MaxcspArgs, ReplayArgs, TensorArgs,
};
use crate::manifest::RunManifest;
use crate::{EXIT_OK, EXIT_VERIFY};

pub type Result<T> = std::result::Result<T, Box<dyn StdError>>;

pub fn run(command: Command, format: Format) -> Result<u8> {
    match &command {
        Command::Decompose(a) => cmd_decompose(&command, a, format),
        Command::Cutnorm(a) => cmd_cutnorm(&command, a, format),
        Command::Check(a) => cmd_check(&command, a, format),
        Command::Gen(a) => cmd_gen(&command, a, format),
        Command::Tensor(a) => cmd_tensor(&command, a, format),
        Command::Maxcsp(a) => cmd_maxcsp(&command, a, format),
        Command::Replay(a) => cmd_replay(a, format),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn with_path<T>(path: &Path, r: lpreg::Result<T>) -> Result<T> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_matrix(path: &Path) -> Result<BinaryMatrix> {
    with_path(path, BinaryMatrix::parse(&read(path)?))
}

/// Writes `body` with the manifest under `"manifest"`, or `text` in text mode.
fn emit(manifest: &RunManifest, body: &impl Serialize, format: Format, text: String, out: Option<&Path>) -> Result<()> {
    let rendered = match format {
        Format::Json => {
            let mut map = match serde_json::to_value(body)? {
                Value::Object(map) => map,
                other => Map::from_iter([("result".to_string(), other)]),
            };
            map.insert("manifest".into(), serde_json::to_value(manifest)?);
            serde_json::to_string_pretty(&map)? + "\n"
        }
        Format::Text => text,
    };
    match out {
        Some(path) => fs::write(path, rendered).map_err(|e| format!("{}: {e}", path.display()).into()),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn cmd_decompose(command: &Command, a: &DecomposeArgs, format: Format) -> Result<u8> {
    let f = read_matrix(&a.file)?;
    if let Some(path) = &a.check {
        let mut manifest = RunManifest::new(command, vec![a.file.clone(), path.clone()]);
        let record: DecompositionRecord =
            serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        let certificate = manifest.time("verify", || verify_record(&f, &record));
        let mut text = format!("certificate: {:?}\n", certificate.status);
        for c in certificate.failed_clauses() {
            text.push_str(&format!("failed {}: {}\n", c.name, c.detail));
        }
        emit(&manifest, &json!({ "certificate": certificate }), format, text, a.out.as_deref())?;
        return Ok(if certificate.status == CertificateStatus::Failed { EXIT_VERIFY } else { EXIT_OK });
    }

    let mut manifest = RunManifest::new(command, vec![a.file.clone()]);
    let oracle = a.oracle.config()?;
    let params = synthesize_params(a.eps, a.c, a.p, oracle.alpha_claim)?;
    let mut result = manifest.time("decompose", || decompose(&f, &params, &oracle))?;
    if a.verify {
        manifest.time("verify", || {
            result.verify(&f);
        });
    }
    let mut text = format!(
        "tau: {}\nhalting: {:?}\ncells: {}\ncut matrices: {}\n",
        result.params.tau,
        result.halting_reason,
        result.partition.len(),
        result.cut_matrices.len()
    );
    if let Some(c) = &result.certificate {
        text.push_str(&format!(
            "certificate: {:?} (residual cut norm {:?}, bound {})\n",
            c.status, c.residual_cut_norm, c.bound
        ));
    }
    emit(&manifest, &result, format, text, a.out.as_deref())?;
    let failed = result.certificate.as_ref().is_some_and(|c| c.status == CertificateStatus::Failed);
    Ok(if failed { EXIT_VERIFY } else { EXIT_OK })
}

fn cmd_cutnorm(command: &Command, a: &CutnormArgs, format: Format) -> Result<u8> {
    let mut manifest = RunManifest::new(command, vec![a.file.clone()]);
    let f = read_matrix(&a.file)?;
    let g = if a.residual {
        let mean = conditional_expectation(&f, &RectPartition::trivial(f.n1(), f.n2()))?;
        RealMatrix::residual(&f, &mean)?
    } else {
        RealMatrix::from_binary(&f)
    };
    let oracle = a.oracle.config()?;
    let outcome = manifest.time("oracle", || oracle_dispatch(&g, &oracle))?;
    let text = format!("cut norm: {}\n", outcome.scaled_value);
    let body = json!({
        "value": outcome.scaled_value,
        "witness": outcome.witness,
        "signed_sum": outcome.signed_sum,
        "alpha": outcome.alpha,
        "oracle": oracle.kind,
    });
    emit(&manifest, &body, format, text, None)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckOutput {
    boundedness: Boundedness,
    boundedness_mode: &'static str,
    witness_search: lpreg::regularity::WitnessReport,
    holder: HolderOutcome,
}

fn cmd_check(command: &Command, a: &CheckArgs, format: Format) -> Result<u8> {
    let mut manifest = RunManifest::new(command, vec![a.file.clone()]);
    let f = read_matrix(&a.file)?;
    let params = RegularityParams::new(a.c, a.eta, a.p)?;
    let (boundedness, boundedness_mode) = manifest.time("boundedness", || {
        if f.n1().min(f.n2()) <= BOUNDED_EXHAUSTIVE_LIMIT {
            is_bounded(&f, a.c, a.eta).map(|b| (b, "exhaustive"))
        } else {
            is_bounded_sampled(&f, a.c, a.eta, a.samples, a.seed).map(|b| (b, "sampled"))
        }
    })?;
    let mode = match a.mode {
        Some(CheckMode::Grid) => SearchMode::GridExhaustive,
        Some(CheckMode::Random) => SearchMode::Random,
        None if f.n1().max(f.n2()) <= GRID_EXHAUSTIVE_LIMIT => SearchMode::GridExhaustive,
        None => SearchMode::Random,
    };
    let witness_search = manifest.time("witness_search", || regularity_witness_search(&f, &params, mode, a.budget, a.seed))?;
    let holder = manifest.time("holder", || holder_bound_check(&f, &params))?;
    let violated = !boundedness.is_bounded()
        || witness_search.verdict == Verdict::Violated
        || matches!(holder, HolderOutcome::Counterexample { .. });
    let text = format!(
        "bounded ({boundedness_mode}): {}\nregularity witness search ({:?}, {} partitions): {:?}\nholder bound: {}\n",
        boundedness.is_bounded(),
        witness_search.search_mode,
        witness_search.partitions_checked,
        witness_search.verdict,
        if matches!(holder, HolderOutcome::Holds) { "holds" } else { "counterexample" },
    );
    let body = CheckOutput { boundedness, boundedness_mode, witness_search, holder };
    emit(&manifest, &body, format, text, None)?;
    Ok(if violated { EXIT_VERIFY } else { EXIT_OK })
}

fn cmd_gen(command: &Command, a: &GenArgs, format: Format) -> Result<u8> {
    let inputs: Vec<PathBuf> = a.grid.iter().cloned().collect();
    let mut manifest = RunManifest::new(command, inputs);
    let w = match &a.grid {
        Some(path) => with_path(path, WGrid::parse(&read(path)?))?,
        None => WGrid::flat(),
    };
    let (m, stats) = manifest.time("generate", || generate_w_random(&w, a.n, a.density, a.seed, a.symmetric))?;
    let Some(out) = &a.out else {
        print!("{}", m.to_text());
        return Ok(EXIT_OK);
    };
    fs::write(out, m.to_text()).map_err(|e| format!("{}: {e}", out.display()))?;
    let text = format!("wrote {} ({} ones, density {})\n", out.display(), m.count_ones(), m.density());
    let body = json!({
        "out": out,
        "n": a.n,
        "ones": m.count_ones(),
        "density": m.density(),
        "clipped_entries": stats.clipped_entries,
    });
    emit(&manifest, &body, format, text, None)?;
    Ok(EXIT_OK)
}

fn cmd_tensor(command: &Command, a: &TensorArgs, format: Format) -> Result<u8> {
    let mut manifest = RunManifest::new(command, vec![a.file.clone()]);
    let t = with_path(&a.file, BinaryTensor::parse(&read(&a.file)?))?;
    let c = match a.c {
        Some(c) => c,
        None => universal_regularity_constant(flatten(&t)?.0.density(), a.p),
    };
    let oracle = a.oracle.config()?;
    let d = manifest.time("decompose", || tensor_decompose(&t, a.eps, c, a.p, &oracle))?;
    let text = format!(
        "cut tensors: {}\nstatus: {:?} (residual cut norm {:?}, bound {})\n",
        d.report.s, d.report.status, d.report.residual_cut_norm, d.report.bound
    );
    let body = json!({
        "params": { "eps": a.eps, "C": c, "p": a.p },
        "cut_tensors": d.cut_tensors,
        "report": d.report,
    });
    emit(&manifest, &body, format, text, None)?;
    Ok(if d.report.status == TensorStatus::Failed { EXIT_VERIFY } else { EXIT_OK })
}

fn cmd_maxcsp(command: &Command, a: &MaxcspArgs, format: Format) -> Result<u8> {
    let mut manifest = RunManifest::new(command, vec![a.file.clone()]);
    let inst = with_path(&a.file, CspInstance::parse(&read(&a.file)?))?;
    let c = match a.c {
        Some(c) => c,
        None => csp_universal_constant(&inst, a.p)?,
    };
    let hypothesis = csp_regularity_check(&inst, c, a.p)?;
    let oracle = a.oracle.config()?;
    let s = manifest.time("approximate", || approx_max_csp(&inst, a.eps, c, a.p, &oracle))?;
    let out = s.output();
    let mut text = format!("value: {}\n", out.value);
    if let (Some(opt), Some(ratio)) = (out.opt, out.ratio) {
        text.push_str(&format!("opt: {opt}\nratio: {ratio}\n"));
    }
    let sigma: Vec<String> = out.sigma.iter().map(u8::to_string).collect();
    text.push_str(&format!("sigma: {}\n", sigma.join(" ")));
    let mut body = serde_json::to_value(&out)?;
    let atoms: Vec<Vec<usize>> = s.atoms.iter().map(|a| a.iter().map(|v| v + 1).collect()).collect();
    if let Value::Object(map) = &mut body {
        map.insert("accuracy".into(), json!(s.accuracy));
        map.insert("atoms".into(), json!(atoms));
        map.insert("hypothesis".into(), serde_json::to_value(&hypothesis)?);
    }
    emit(&manifest, &body, format, text, None)?;
    let failed = s.certificate.as_ref().is_some_and(|c| !c.meets_bound);
    Ok(if failed { EXIT_VERIFY } else { EXIT_OK })
}

fn cmd_replay(a: &ReplayArgs, format: Format) -> Result<u8> {
    let value: Value = serde_json::from_str(&read(&a.file)?).map_err(|e| format!("{}: {e}", a.file.display()))?;
    let invocation = value
        .get("manifest")
        .and_then(|m| m.get("invocation"))
        .ok_or_else(|| format!("{}: no manifest invocation", a.file.display()))?;
    let command: Command = serde_json::from_value(invocation.clone())?;
    if matches!(command, Command::Replay(_)) {
        return Err("a replay cannot replay a replay".into());
    }
    run(command, format)
}
