//! Command-line front-end: argument parsing, input loading and report output.
//!
//! Every command prints one JSON report (`{command, field, seed, trials,
//! input, result}`), with keys in sorted order so identical arguments give
//! byte-identical output. Exit codes: 0 when a verdict was produced, 1 when a
//! self-test or a verification failed, 2 for malformed input, 3 for inputs
//! that violate a precondition of the requested computation.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use blowup_core::certify::{envelope, verify_report};
use blowup_core::exactalg::{Field, FieldSpec, Matrix, PrimeField, Rationals, DEFAULT_PRIME};
use blowup_core::hardinstances::{build_fd, verify_hard_instance};
use blowup_core::ncformula::{parse, rit};
use blowup_core::nullcone::{decisive_blowup_size, degree_bounds, in_nullcone, ncrank_lower_bound, skewfield_invertible};
use blowup_core::quiver::{matrix_from_value, pq_full_test, QuiverInstance};
use blowup_core::selftest::{run_selftest, SelftestConfig};
use blowup_core::{Error, Pencil, PencilJson, DEFAULT_TRIALS};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Exact blow-up computations for matrix pencils")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Work over GF(p) (default p = 2^61 - 1).
    #[arg(long, global = true, conflicts_with = "rationals")]
    pub prime: Option<String>,
    /// Work over the rationals.
    #[arg(long, global = true)]
    pub rationals: bool,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Add wall-clock time to the report (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Re-verify the certificates in a saved report.
    #[arg(long, global = true, value_name = "REPORT")]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Null cone membership of a square tuple.
    Nullcone {
        #[arg(long)]
        input: PathBuf,
    },
    /// Lower bound on the non-commutative rank from blow-ups d = 1..=dmax.
    Ncrank {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dmax: Option<usize>,
    },
    /// Invertibility of a (linear or affine) pencil over the free skew field.
    Invertible {
        #[arg(long)]
        input: PathBuf,
    },
    /// Randomized rational identity test.
    Rit {
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        formula: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build and verify the size-d lower-bound pencil.
    HardInstance {
        #[arg(long)]
        d: usize,
    },
    /// Quiver semistability.
    Quiver {
        #[command(subcommand)]
        action: QuiverAction,
    },
    /// Degree bounds for n x n tuples of m matrices.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
    /// Run the property suites.
    Selftest,
}

#[derive(Debug, Subcommand)]
pub enum QuiverAction {
    /// Semistability of a quiver representation for a weight.
    Check {
        #[arg(long)]
        input: PathBuf,
    },
    /// SL_p x SL_q semistability of a tuple of p x q matrices.
    Pq {
        #[arg(long)]
        input: PathBuf,
    },
}

/// Exit code, standard output and standard error of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_format_error() => 2,
        Error::ModulusTooLarge(_) => 2,
        Error::VerificationFailed { .. } => 1,
        _ => 3,
    }
}

/// Parse arguments and run; clap usage errors also exit with 2.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    let start = Instant::now();
    let result = match (&cli.global.verify, &cli.command) {
        (Some(path), _) => run_verify(path),
        (None, Some(cmd)) => run_command(&cli.global, cmd),
        (None, None) => Err(Error::Format("no command given (see --help)".into())),
    };
    match result {
        Ok((code, mut report)) => {
            if cli.global.timing {
                report["wall_time_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
            }
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            if let Some(path) = &cli.global.output {
                if let Err(e) = fs::write(path, &text) {
                    return Outcome {
                        code: 2,
                        stdout: String::new(),
                        stderr: format!("cannot write {}: {e}\n", path.display()),
                    };
                }
                text.clear();
            }
            Outcome { code, stdout: text, stderr: String::new() }
        }
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn read_text(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &PathBuf) -> Result<Value, Error> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn run_verify(path: &PathBuf) -> Result<(i32, Value), Error> {
    let report = read_json(path)?;
    let (code, outcome) = match verify_report(&report) {
        Ok(v) => (
            0,
            json!({
                "verified": true,
                "command": v.command,
                "status": v.status,
                "certified": v.certified,
                "checks": v.checks,
            }),
        ),
        Err(Error::VerificationFailed { clause, detail }) => (
            1,
            json!({ "verified": false, "clause": clause, "detail": detail }),
        ),
        Err(e) => return Err(e),
    };
    Ok((code, json!({ "command": "verify", "report": path.display().to_string(), "result": outcome })))
}

fn cli_field(g: &Global) -> Result<Option<FieldSpec>, Error> {
    if g.rationals {
        return Ok(Some(FieldSpec::Rationals));
    }
    match &g.prime {
        None => Ok(None),
        Some(text) => text
            .trim()
            .parse::<u64>()
            .map(|p| Some(FieldSpec::Prime(p)))
            .map_err(|_| Error::Format(format!("--prime expects a decimal integer below 2^64, got `{text}`"))),
    }
}

/// Flags win over the input's own `field`, but the two must not disagree.
fn resolve_field(g: &Global, input: Option<&Value>) -> Result<FieldSpec, Error> {
    let from_input = match input.and_then(|v| v.get("field")) {
        Some(f) => Some(
            serde_json::from_value::<FieldSpec>(f.clone())
                .map_err(|e| Error::Format(format!("bad field spec: {e}")))?,
        ),
        None => None,
    };
    match (cli_field(g)?, from_input) {
        (Some(a), Some(b)) if a != b => Err(Error::Format(format!(
            "input is over {b} but the command line asks for {a}"
        ))),
        (a, b) => Ok(a.or(b).unwrap_or(FieldSpec::Prime(DEFAULT_PRIME))),
    }
}

fn run_command(g: &Global, cmd: &Command) -> Result<(i32, Value), Error> {
    let input = match cmd {
        Command::Nullcone { input } | Command::Ncrank { input, .. } | Command::Invertible { input } => {
            Some(read_json(input)?)
        }
        Command::Quiver {
            action: QuiverAction::Check { input } | QuiverAction::Pq { input },
        } => Some(read_json(input)?),
        _ => None,
    };
    match resolve_field(g, input.as_ref())? {
        FieldSpec::Prime(p) => run_in(&PrimeField::new(p)?, g, cmd, input),
        FieldSpec::Rationals => run_in(&Rationals, g, cmd, input),
    }
}

/// Convert JSON integers to strings inside matrix arrays.
fn stringify(v: &Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(items) => Value::Array(items.iter().map(stringify).collect()),
        other => other.clone(),
    }
}

/// Accept either pencil JSON (entries as strings or integers, `field` and
/// `vars` optional) or a bare array of equally shaped matrices.
pub fn load_pencil<F: Field>(field: &F, v: &Value) -> Result<Pencil<F>, Error> {
    let mut obj = match v {
        Value::Array(_) => json!({ "coeffs": v }),
        Value::Object(_) => v.clone(),
        _ => return Err(Error::Format("pencil must be an object or an array of matrices".into())),
    };
    let coeffs = obj
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("pencil needs `coeffs`".into()))?
        .clone();
    let first = coeffs.first().or(obj.get("constant"));
    let rows = first.and_then(Value::as_array).map_or(0, Vec::len);
    let cols = first
        .and_then(Value::as_array)
        .and_then(|r| r.first())
        .and_then(Value::as_array)
        .map_or(0, Vec::len);
    let defaults = [
        ("rows", json!(rows)),
        ("cols", json!(cols)),
        ("vars", json!(coeffs.len())),
        ("field", json!(field.spec())),
    ];
    for (key, value) in defaults {
        if obj.get(key).is_none() {
            obj[key] = value;
        }
    }
    obj["coeffs"] = stringify(&obj["coeffs"]);
    if let Some(c) = obj.get("constant").cloned() {
        obj["constant"] = stringify(&c);
    }
    let json: PencilJson = serde_json::from_value(obj).map_err(|e| Error::Format(format!("bad pencil: {e}")))?;
    Pencil::from_json(field.clone(), &json)
}

fn load_pq<F: Field>(field: &F, v: &Value) -> Result<Vec<Matrix<F>>, Error> {
    let mats = match v {
        Value::Array(_) => v,
        _ => v
            .get("matrices")
            .ok_or_else(|| Error::Format("pq input needs `matrices`".into()))?,
    };
    let mats = mats
        .as_array()
        .filter(|m| !m.is_empty())
        .ok_or_else(|| Error::Format("`matrices` must be a non-empty array".into()))?;
    mats.iter()
        .map(|m| {
            let rows = m.as_array().map_or(0, Vec::len);
            let cols = m
                .as_array()
                .and_then(|r| r.first())
                .and_then(Value::as_array)
                .map_or(0, Vec::len);
            matrix_from_value(field, rows, cols, m)
        })
        .collect()
}

fn run_in<F: Field>(field: &F, g: &Global, cmd: &Command, input: Option<Value>) -> Result<(i32, Value), Error> {
    let spec = field.spec();
    let (seed, trials) = (g.seed, g.trials);
    let wrap = |name: &str, input: Value, result: Value| envelope(name, &spec, seed, trials, input, result);
    let input = input.unwrap_or(Value::Null);
    let report = match cmd {
        Command::Nullcone { .. } => {
            let pencil = load_pencil(field, &input)?;
            let v = in_nullcone(&pencil, trials, seed)?;
            wrap("nullcone", json!({ "pencil": pencil.to_json() }), v.to_json(field))
        }
        Command::Invertible { .. } => {
            let pencil = load_pencil(field, &input)?;
            let v = skewfield_invertible(&pencil, trials, seed)?;
            wrap("invertible", json!({ "pencil": pencil.to_json() }), v.to_json(field))
        }
        Command::Ncrank { dmax, .. } => {
            let pencil = load_pencil(field, &input)?;
            let dmax = dmax.unwrap_or_else(|| decisive_blowup_size(pencil.rows().max(pencil.cols())));
            let v = ncrank_lower_bound(&pencil, dmax, trials, seed)?;
            let mut out = wrap("ncrank", json!({ "pencil": pencil.to_json() }), v.to_json());
            out["dmax"] = json!(dmax);
            out
        }
        Command::Rit { formula, input } => {
            let text = match (formula, input) {
                (Some(f), _) => f.clone(),
                (None, Some(path)) => read_text(path)?.trim().to_string(),
                (None, None) => return Err(Error::Format("rit needs --formula or --input".into())),
            };
            let f = parse(&text)?;
            let v = rit(field, &f, trials, seed)?;
            wrap("rit", json!({ "formula": text }), v.to_json())
        }
        Command::HardInstance { d } => {
            let inst = build_fd(field.clone(), *d)?;
            let rep = verify_hard_instance(&inst, trials, seed);
            let mut result = json!({
                "pencil": inst.pencil.to_json(),
                "canonical_tuple": inst.canonical_tuple.iter().map(Matrix::to_strings).collect::<Vec<_>>(),
            });
            let code = match rep {
                Ok(r) => {
                    result["report"] = r.to_json();
                    0
                }
                Err(Error::VerificationFailed { clause, detail }) => {
                    result["report"] = json!({ "failed_clause": clause, "detail": detail });
                    1
                }
                Err(e) => return Err(e),
            };
            return Ok((code, wrap("hard-instance", json!({ "d": d }), result)));
        }
        Command::Quiver { action: QuiverAction::Check { .. } } => {
            let inst = QuiverInstance::from_json(field, &input)?;
            let v = inst.semistable(field, trials, seed)?;
            wrap("quiver", inst.to_json(), v.to_json())
        }
        Command::Quiver { action: QuiverAction::Pq { .. } } => {
            let xs = load_pq(field, &input)?;
            let v = pq_full_test(&xs, trials, seed)?;
            let (p, q) = xs[0].shape();
            let echo = json!({
                "p": p,
                "q": q,
                "matrices": xs.iter().map(Matrix::to_strings).collect::<Vec<_>>(),
            });
            wrap("quiver-pq", echo, v.to_json())
        }
        Command::Bounds { n, m } => {
            let b = degree_bounds(*n, *m)?;
            wrap(
                "bounds",
                json!({ "n": n, "m": m }),
                serde_json::to_value(b).expect("bounds serialize"),
            )
        }
        Command::Selftest => {
            let summary = run_selftest(field, SelftestConfig { seed, trials });
            let code = if summary.passed { 0 } else { 1 };
            return Ok((code, wrap("selftest", Value::Null, summary.to_json())));
        }
    };
    Ok((0, report))
}
