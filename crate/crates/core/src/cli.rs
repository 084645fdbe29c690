//! Command-line front end.
//!
//! Every command writes one JSON run record to stdout:
//! `{command, version, seed, config_echo, result, wall_time_ms}`. States and
//! witnesses are given either by canonical name or as a JSON file path.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::{to_raw_value, RawValue};
use serde_json::Value;

use crate::cmatrix::C64;
use crate::deficit::{self, ClassificationResult};
use crate::error::{Error, Result};
use crate::json::{real17, state_from_json, witness_from_json};
use crate::protocol::{run_sigma_protocol, ProtocolResult};
use crate::rng::stream_rng;
use crate::search::{closed_form_c_opt, monte_carlo_search, SearchConfig, SearchReport};
use crate::states::{
    canonical_state, entropy_purity, CanonicalState, DensityMatrix, EigMode, TauParameters,
};
use crate::witness::{self, factor_traces, w_02plus, w_bell, w_sigma, WitnessMap};

/// Upper end of the accepted range for `search --witness w_sigma`.
pub const SIGMA_SEARCH_BOUND: f64 = 0.18213836;

pub const SEED_ENV: &str = "NCW_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "ncwitness",
    version,
    about = "Witnesses for nonclassical correlation"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Human-readable summary on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a witness on a state.
    Eval(EvalArgs),
    /// Monte Carlo search for the optimal witness constant.
    Search(SearchArgs),
    /// Simulate the three-readout protocol for W_sigma.
    Protocol(ProtocolArgs),
    /// Decide whether a state has a product eigenbasis.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// sigma, bell, rho_02plus, max_mixed:AxB, tau:theta,a,re_b,im_b, 00..11, or a file.
    #[arg(long)]
    pub state: String,
    /// w_sigma[:c], w_bell, w_02plus, or a file.
    #[arg(long)]
    pub witness: String,
    #[arg(long, default_value_t = witness::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub witness: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// `dirichlet` or `fixed:v1,v2,...` (entries may be fractions like 1/3).
    #[arg(long, default_value = "dirichlet")]
    pub eig_mode: String,
    #[arg(long, default_value_t = 2000)]
    pub refine_steps: usize,
    #[arg(long, default_value_t = 0.3)]
    pub refine_initial_step: f64,
    #[arg(long, default_value_t = 0.995)]
    pub refine_decay: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub state: String,
    /// Defaults to the optimal constant.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value_t = deficit::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = deficit::DEFAULT_CLASSIFY_TOL)]
    pub tol: f64,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config_echo: Value,
    pub result: Box<RawValue>,
    pub wall_time_ms: u128,
}

impl RunRecord {
    pub fn result_value(&self) -> Value {
        serde_json::from_str(self.result.get()).expect("valid json")
    }
}

/// Resolves a state spec: canonical name, two-qubit basis label or file.
pub fn parse_state(spec: &str) -> Result<DensityMatrix> {
    let parse_err = |detail: String| Error::Parse {
        what: format!("state `{spec}`"),
        detail,
    };
    let named = match spec {
        "sigma" => Some(CanonicalState::Sigma),
        "bell" => Some(CanonicalState::BellPhiPlus),
        "rho_02plus" => Some(CanonicalState::Rho02Plus),
        _ => None,
    };
    if let Some(name) = named {
        return canonical_state(&name);
    }
    if let Some(dims) = spec.strip_prefix("max_mixed:") {
        let (a, b) = dims
            .split_once('x')
            .ok_or_else(|| parse_err("expected max_mixed:AxB".into()))?;
        let dim_a = a.parse().map_err(|e| parse_err(format!("{e}")))?;
        let dim_b = b.parse().map_err(|e| parse_err(format!("{e}")))?;
        return canonical_state(&CanonicalState::MaxMixed { dim_a, dim_b });
    }
    if let Some(args) = spec.strip_prefix("tau:") {
        let v = args
            .split(',')
            .map(parse_real)
            .collect::<Result<Vec<f64>>>()?;
        let [theta, a, re_b, im_b] = v[..] else {
            return Err(parse_err("expected tau:theta,a,re_b,im_b".into()));
        };
        let params = TauParameters::new(theta, a, C64::new(re_b, im_b))?;
        return canonical_state(&CanonicalState::Tau(params));
    }
    if let [i @ (b'0' | b'1'), j @ (b'0' | b'1')] = spec.as_bytes() {
        return DensityMatrix::basis(2, 2, (i - b'0') as usize, (j - b'0') as usize);
    }
    state_from_json(&read_file(spec)?)
}

/// Resolves a witness spec: `w_sigma`, `w_sigma:c`, `w_bell`, `w_02plus` or
/// a file.
pub fn parse_witness(spec: &str) -> Result<WitnessMap> {
    match spec {
        "w_sigma" => Ok(witness::w_sigma_optimal()),
        "w_bell" => Ok(w_bell()),
        "w_02plus" => Ok(w_02plus()),
        _ => match spec.strip_prefix("w_sigma:") {
            Some(c) => w_sigma(parse_real(c)?),
            None => witness_from_json(&read_file(spec)?),
        },
    }
}

/// `dirichlet` or `fixed:v1,v2,...`.
pub fn parse_eig_mode(spec: &str) -> Result<EigMode> {
    if spec == "dirichlet" {
        return Ok(EigMode::DirichletUniform);
    }
    match spec.strip_prefix("fixed:") {
        Some(list) => Ok(EigMode::Fixed(
            list.split(',').map(parse_real).collect::<Result<_>>()?,
        )),
        None => Err(Error::Parse {
            what: "eig mode".into(),
            detail: format!("`{spec}` is neither `dirichlet` nor `fixed:...`"),
        }),
    }
}

/// A decimal or a fraction `p/q`.
fn parse_real(s: &str) -> Result<f64> {
    let err = |detail: String| Error::Parse {
        what: format!("number `{s}`"),
        detail,
    };
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|e| err(format!("{e}")))?;
            let q: f64 = q.trim().parse().map_err(|e| err(format!("{e}")))?;
            p / q
        }
        None => s.parse().map_err(|e| err(format!("{e}")))?,
    };
    if !value.is_finite() {
        return Err(err("not finite".into()));
    }
    Ok(value)
}

fn read_file(path: &str) -> Result<String> {
    if !Path::new(path).exists() {
        return Err(Error::Parse {
            what: format!("`{path}`"),
            detail: "not a canonical name and no such file".into(),
        });
    }
    Ok(std::fs::read_to_string(path)?)
}

#[derive(Serialize)]
struct EvalPayload {
    #[serde(serialize_with = "real17")]
    value: f64,
    detected: bool,
    #[serde(serialize_with = "real17")]
    tolerance: f64,
    #[serde(serialize_with = "real17")]
    f_value: f64,
    traces: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct SearchPayload {
    report: SearchReport,
    /// Present for `w_sigma` only.
    sigma_bound_check: Option<BoundCheck>,
}

#[derive(Serialize)]
struct BoundCheck {
    #[serde(serialize_with = "real17")]
    bound: f64,
    within_bound: bool,
}

#[derive(Serialize)]
struct ProtocolPayload {
    protocol: ProtocolResult,
    #[serde(serialize_with = "real17")]
    direct_value: f64,
}

#[derive(Serialize)]
struct ClassifyPayload {
    classification: ClassificationResult,
    #[serde(serialize_with = "real17")]
    deficit_bits: f64,
    #[serde(serialize_with = "real17")]
    entropy_bits: f64,
    #[serde(serialize_with = "real17")]
    purity: f64,
}

fn raw_real(x: f64) -> Box<RawValue> {
    RawValue::from_string(crate::json::format_real17(x)).expect("number")
}

fn is_sigma_witness(w: &WitnessMap) -> bool {
    let reference = w_sigma(w.c()).expect("valid c");
    w.dim_a() == 2 && w.dim_b() == 2 && w.factors() == reference.factors()
}

fn record<T: Serialize, C: Serialize>(
    command: &str,
    seed: Option<u64>,
    config: &C,
    payload: &T,
    start: Instant,
) -> Result<RunRecord> {
    Ok(RunRecord {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config_echo: serde_json::to_value(config)?,
        result: to_raw_value(payload)?,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Runs one command and returns its record plus a one-line summary.
pub fn execute(command: &Command) -> Result<(RunRecord, String)> {
    let start = Instant::now();
    match command {
        Command::Eval(args) => {
            let rho = parse_state(&args.state)?;
            let w = parse_witness(&args.witness)?;
            let v = witness::verdict(&w, &rho, args.tol)?;
            let traces = factor_traces(&rho, w.factors())?;
            let payload = EvalPayload {
                value: v.value,
                detected: v.detected,
                tolerance: v.tolerance,
                f_value: witness::f_value(&rho, w.factors())?,
                traces: traces.iter().map(|&t| raw_real(t)).collect(),
            };
            let summary = format!("W(rho) = {:.9} detected = {}", v.value, v.detected);
            Ok((record("eval", None, args, &payload, start)?, summary))
        }
        Command::Search(args) => {
            let w = parse_witness(&args.witness)?;
            let config = SearchConfig {
                n_samples: args.samples,
                seed: args.seed,
                shards: args.shards,
                eig_mode: parse_eig_mode(&args.eig_mode)?,
                refine_steps: args.refine_steps,
                refine_initial_step: args.refine_initial_step,
                refine_decay: args.refine_decay,
            };
            let report = monte_carlo_search(w.factors(), w.dim_a(), w.dim_b(), &config)?;
            let sigma_bound_check = is_sigma_witness(&w).then_some(BoundCheck {
                bound: SIGMA_SEARCH_BOUND,
                within_bound: report.max_f <= SIGMA_SEARCH_BOUND,
            });
            let summary = format!(
                "max_f = {:.9} (sampled {:.9}, purity {:.5}, {} distinct eigenvalues)",
                report.max_f,
                report.sampled_max_f,
                report.best_purity,
                report.distinct_nonzero_eigenvalues
            );
            let payload = SearchPayload {
                report,
                sigma_bound_check,
            };
            Ok((
                record("search", Some(args.seed), args, &payload, start)?,
                summary,
            ))
        }
        Command::Protocol(args) => {
            let rho = parse_state(&args.state)?;
            let c = args.c.unwrap_or_else(|| closed_form_c_opt().0);
            let w = w_sigma(c)?;
            let protocol = run_sigma_protocol(&rho, c, args.noise, &mut stream_rng(args.seed, 0))?;
            let payload = ProtocolPayload {
                protocol,
                direct_value: witness::evaluate(&w, &rho)?,
            };
            let summary = format!(
                "<Z1> = {:.6} <Z2> = {:.6} <Z2'> = {:.6} W = {:.9}",
                protocol.z1_ii, protocol.z2_ii, protocol.z2_iv, protocol.w_value
            );
            Ok((
                record("protocol", Some(args.seed), args, &payload, start)?,
                summary,
            ))
        }
        Command::Classify(args) => {
            let rho = parse_state(&args.state)?;
            let mut rng = stream_rng(args.seed, 0);
            let classification =
                deficit::has_product_eigenbasis_with(&rho, args.tol, args.restarts, &mut rng)?;
            let deficit_bits = match classification.path {
                deficit::ClassificationPath::DeficitMinimization => classification.residual,
                deficit::ClassificationPath::ExactNondegenerate => {
                    deficit::zero_way_deficit(&rho, args.restarts, &mut rng)?.0
                }
            };
            let (entropy_bits, purity) = entropy_purity(&rho);
            let summary = format!(
                "{:?} via {:?} (residual {:.3e}, deficit {:.6} bits)",
                classification.verdict, classification.path, classification.residual, deficit_bits
            );
            let payload = ClassifyPayload {
                classification,
                deficit_bits,
                entropy_bits,
                purity,
            };
            Ok((
                record("classify", Some(args.seed), args, &payload, start)?,
                summary,
            ))
        }
    }
}

fn flatten_scalars(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_scalars(&key, x, out);
            }
        }
        Value::Array(_) => {}
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

/// Header and value row of every scalar field, nested keys joined by `.`;
/// arrays are skipped.
pub fn to_csv(rec: &RunRecord) -> Result<String> {
    let mut v = serde_json::to_value(rec)?;
    v["result"] = rec.result_value();
    let mut cells = Vec::new();
    flatten_scalars("", &v, &mut cells);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(cells.iter().map(|c| &c.0))
        .map_err(csv_err)?;
    w.write_record(cells.iter().map(|c| &c.1))
        .map_err(csv_err)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("utf8"))
}

pub fn render(rec: &RunRecord, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(rec)? + "\n"),
        Format::Csv => to_csv(rec),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = execute(&cli.command).and_then(|(rec, summary)| {
        let text = render(&rec, cli.format)?;
        std::io::stdout().write_all(text.as_bytes())?;
        if cli.verbose {
            eprintln!("{}: {summary} [{} ms]", rec.command, rec.wall_time_ms);
        }
        Ok(())
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cmd(args: &[&str]) -> RunRecord {
        let cli =
            Cli::try_parse_from(std::iter::once("ncwitness").chain(args.iter().copied())).unwrap();
        execute(&cli.command).unwrap().0
    }

    #[test]
    fn state_specs() {
        assert_eq!(parse_state("sigma").unwrap().dim(), 4);
        assert_eq!(parse_state("rho_02plus").unwrap().dim_a(), 3);
        let m = parse_state("max_mixed:2x3").unwrap();
        assert_eq!((m.dim_a(), m.dim_b()), (2, 3));
        let t = parse_state("tau:0.3,0.8,0.1,0.0").unwrap();
        assert_eq!((t.dim_a(), t.dim_b()), (2, 2));
        let b = parse_state("10").unwrap();
        assert_eq!(b.matrix()[(2, 2)], C64::new(1.0, 0.0));
        assert!(parse_state("max_mixed:2").is_err());
        assert!(parse_state("tau:1,2").is_err());
        assert!(parse_state("no_such_state").is_err());
    }

    #[test]
    fn witness_and_mode_specs() {
        assert_eq!(parse_witness("w_sigma:0.2").unwrap().c(), 0.2);
        assert!(parse_witness("w_sigma:-1").is_err());
        assert_eq!(
            parse_eig_mode("fixed:1/3,1/3,1/3,0").unwrap(),
            EigMode::Fixed(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0])
        );
        assert!(parse_eig_mode("uniform").is_err());
    }

    #[test]
    fn eval_sigma() {
        let rec = run_cmd(&["eval", "--state", "sigma", "--witness", "w_sigma"]);
        let v = rec.result_value();
        assert!((v["value"].as_f64().unwrap() + 0.067862).abs() < 1e-6);
        assert_eq!(v["detected"], true);
        assert_eq!(v["traces"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn eval_02plus() {
        let rec = run_cmd(&["eval", "--state", "rho_02plus", "--witness", "w_02plus"]);
        let v = rec.result_value()["value"].as_f64().unwrap();
        assert!((v - (0.02 - 1.0 / 27.0)).abs() < 1e-15);
    }

    #[test]
    fn protocol_on_basis_state() {
        let rec = run_cmd(&["protocol", "--state", "00", "--c", "0.1"]);
        assert_eq!(
            rec.result_value()["protocol"]["w_value"].as_f64().unwrap(),
            0.1
        );
    }

    #[test]
    fn search_is_deterministic_and_checks_bound() {
        let args = [
            "search",
            "--witness",
            "w_sigma",
            "--samples",
            "500",
            "--seed",
            "7",
            "--refine-steps",
            "50",
        ];
        let a = run_cmd(&args);
        let b = run_cmd(&args);
        assert_eq!(a.result.get(), b.result.get());
        assert_eq!(a.result_value()["sigma_bound_check"]["within_bound"], true);
        let bell = run_cmd(&[
            "search",
            "--witness",
            "w_bell",
            "--samples",
            "50",
            "--refine-steps",
            "5",
        ]);
        assert!(bell.result_value()["sigma_bound_check"].is_null());
    }

    #[test]
    fn csv_flattens_scalars() {
        let rec = run_cmd(&["eval", "--state", "sigma", "--witness", "w_sigma"]);
        let text = to_csv(&rec).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("result.value"));
        assert!(header.contains("config_echo.state"));
        assert!(!header.contains("traces"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ncwitness", "eval", "--state", "sigma"]), 1);
        assert_eq!(run(["ncwitness", "frobnicate"]), 1);
    }
}
