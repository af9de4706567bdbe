use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lpreg::measure::Exponent;
use lpreg::oracle::{OracleConfig, OracleKind, DEFAULT_RESTARTS};

#[derive(Debug, Parser)]
#[command(name = "lpreg", version, about = "Regularity decompositions of sparse {0,1} matrices")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Decompose a matrix into cut matrices with disjoint supports.
    Decompose(DecomposeArgs),
    /// Cut norm of a matrix or of its deviation from its density.
    Cutnorm(CutnormArgs),
    /// Boundedness and regularity checks.
    Check(CheckArgs),
    /// Generate a W-random matrix.
    Gen(GenArgs),
    /// Decompose a tensor into cut tensors.
    Tensor(TensorArgs),
    /// Approximate MAX-CSP.
    Maxcsp(MaxcspArgs),
    /// Re-run the invocation recorded in a JSON output's manifest.
    Replay(ReplayArgs),
}

fn parse_exponent(s: &str) -> Result<Exponent, String> {
    s.parse().map_err(|e: lpreg::Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleChoice::Exact)]
    pub oracle: OracleChoice,
    /// Approximation constant claimed by the heuristic oracle.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
}

impl OracleArgs {
    pub fn config(&self) -> lpreg::Result<OracleConfig> {
        let kind = match self.oracle {
            OracleChoice::Exact => OracleKind::Exact,
            OracleChoice::Heuristic => OracleKind::Heuristic,
        };
        OracleConfig::new(kind, self.alpha, self.seed, self.restarts)
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct DecomposeArgs {
    /// Matrix file.
    pub file: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: f64,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Exponent,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    /// Certify the result by an exact residual cut norm.
    #[arg(long)]
    pub verify: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verify a stored result against the matrix instead of decomposing.
    #[arg(long, value_name = "RESULT")]
    pub check: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CutnormArgs {
    pub file: PathBuf,
    /// Use `f - density` instead of `f`.
    #[arg(long)]
    pub residual: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Grid,
    Random,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub p: Exponent,
    /// Witness search mode; grid for small matrices, random otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<CheckMode>,
    /// Partitions tried by the random search.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    /// Row sets tried by sampled boundedness on large matrices.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step function W; constant when omitted.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub symmetric: bool,
    /// Write the matrix here; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct TensorArgs {
    /// Tensor file: a line of dimensions, then one index tuple per line.
    pub file: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Regularity constant; the universal constant of the input when omitted.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub p: Exponent,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct MaxcspArgs {
    /// CSP instance file.
    pub file: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Regularity constant; the smallest one regular by construction when omitted.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_exponent, default_value = "2")]
    pub p: Exponent,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A JSON output of an earlier run.
    pub file: PathBuf,
}
