//! Offline re-verification of serialized reports.
//!
//! A report is the JSON envelope written by the CLI:
//!
//! ```text
//! {"command": ..., "field": {...}, "seed": .., "trials": .., "input": {...}, "result": {...}}
//! ```
//!
//! Positive verdicts carry exact certificates. They are re-checked here from
//! the JSON alone, without reusing the code path that produced them: blow-ups
//! are assembled entry by entry instead of through Kronecker products,
//! determinants come from the characteristic polynomial instead of
//! elimination, and ranks are computed on the transpose. Monte Carlo
//! verdicts have nothing exact to check; for those only the report's
//! internal consistency is verified.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactalg::{Field, FieldSpec, Matrix, PrimeField, Rationals};
use crate::hardinstances::build_fd;
use crate::ncformula::{evaluate_at, parse, rit_dimension, Evaluation};
use crate::nullcone::{decisive_blowup_size, degree_bounds};
use crate::pencil::{Pencil, PencilJson, WitnessJson};
use crate::quiver::{build_semi_pencil, matrix_from_value, Quiver, QuiverInstance, Representation};

/// Wrap a command result in the report envelope.
pub fn envelope(command: &str, field: &FieldSpec, seed: u64, trials: usize, input: Value, result: Value) -> Value {
    json!({
        "command": command,
        "field": field,
        "seed": seed,
        "trials": trials,
        "input": input,
        "result": result,
    })
}

/// What a successful verification established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub command: String,
    pub status: String,
    /// An exact certificate was present and re-verified.
    pub certified: bool,
    pub checks: Vec<String>,
}

fn mismatch(clause: &str, detail: impl Into<String>) -> Error {
    Error::VerificationFailed {
        clause: clause.to_string(),
        detail: detail.into(),
    }
}

fn get<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::format(format!("report is missing `{key}`")))
}

fn get_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    get(v, key)?
        .as_str()
        .ok_or_else(|| Error::format(format!("`{key}` must be a string")))
}

fn get_usize(v: &Value, key: &str) -> Result<usize> {
    get(v, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::format(format!("`{key}` must be a nonnegative integer")))
}

fn decode<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::format(format!("bad {what}: {e}")))
}

/// `X_0 (x) I_p + sum_k X_k (x) T_k`, one entry at a time.
pub fn assemble_blowup<F: Field>(pencil: &Pencil<F>, tuple: &[Matrix<F>], p: usize, q: usize) -> Result<Matrix<F>> {
    if tuple.len() != pencil.vars() || tuple.iter().any(|t| t.shape() != (p, q)) {
        return Err(mismatch("witness", "tuple does not match the pencil"));
    }
    if pencil.is_affine() && p != q {
        return Err(mismatch("witness", "affine pencil with a rectangular blow-up"));
    }
    let field = pencil.field();
    let (k, n) = (pencil.rows(), pencil.cols());
    let mut out = Matrix::zeros(field.clone(), k * p, n * q);
    for i in 0..k {
        for j in 0..n {
            for a in 0..p {
                for b in 0..q {
                    let mut acc = field.zero();
                    if let Some(c) = pencil.constant() {
                        if a == b {
                            acc = c.get(i, j).clone();
                        }
                    }
                    for (x, t) in pencil.coeffs().iter().zip(tuple) {
                        acc = field.add(&acc, &field.mul(x.get(i, j), t.get(a, b)));
                    }
                    out.set(i * p + a, j * q + b, acc);
                }
            }
        }
    }
    Ok(out)
}

/// `det M = (-1)^n c_0` from the characteristic polynomial.
pub fn det_from_charpoly<F: Field>(m: &Matrix<F>) -> Result<F::Elem> {
    let field = m.field();
    let n = m.rows();
    if n == 0 {
        return Ok(field.one());
    }
    let c0 = m.charpoly()?[0].clone();
    Ok(if n.is_multiple_of(2) { c0 } else { field.neg(&c0) })
}

/// Rank computed on the transpose.
pub fn rank_via_transpose<F: Field>(m: &Matrix<F>) -> usize {
    m.transpose().rank()
}

/// Re-verify any report produced by the CLI.
pub fn verify_report(report: &Value) -> Result<Verification> {
    let spec: FieldSpec = decode(get(report, "field")?, "field spec")?;
    match spec {
        FieldSpec::Prime(p) => verify_in(&PrimeField::new(p)?, report),
        FieldSpec::Rationals => verify_in(&Rationals, report),
    }
}

fn verify_in<F: Field>(field: &F, report: &Value) -> Result<Verification> {
    let command = get_str(report, "command")?.to_string();
    let input = get(report, "input")?;
    let result = get(report, "result")?;
    let mut checks = Vec::new();
    let (status, certified) = match command.as_str() {
        "nullcone" | "invertible" => {
            let pencil = load_pencil(field, get(input, "pencil")?)?;
            let positive = if command == "nullcone" { "NotInNullCone" } else { "Invertible" };
            if command == "nullcone" && pencil.is_affine() {
                return Err(mismatch("input", "null cone reports need a linear pencil"));
            }
            full_rank_certificate(field, &pencil, result, positive, &mut checks)?
        }
        "ncrank" => {
            let pencil = load_pencil(field, get(input, "pencil")?)?;
            verify_ncrank(field, &pencil, result, &mut checks)?
        }
        "quiver" => {
            let inst = QuiverInstance::from_json(field, input)?;
            let pencil = build_semi_pencil(field, &inst.quiver, &inst.alpha, &inst.sigma, &inst.rep)?;
            same_pencil(&pencil, result, &mut checks)?;
            full_rank_certificate(field, &pencil, result, "Semistable", &mut checks)?
        }
        "quiver-pq" => {
            let pencil = rebuild_pq_pencil(field, input)?;
            same_pencil(&pencil, result, &mut checks)?;
            full_rank_certificate(field, &pencil, result, "Semistable", &mut checks)?
        }
        "rit" => verify_rit(field, input, result, &mut checks)?,
        "hard-instance" => verify_hard_instance_report(field, input, result, &mut checks)?,
        "bounds" => {
            let (n, m) = (get_usize(input, "n")? as u64, get_usize(input, "m")? as u64);
            let expected = serde_json::to_value(degree_bounds(n, m)?).expect("bounds serialize");
            if &expected != result {
                return Err(mismatch("bounds", "reported bounds differ from the formulas"));
            }
            checks.push(format!("degree bounds for n = {n}, m = {m} recomputed"));
            ("Bounds".to_string(), true)
        }
        other => return Err(Error::format(format!("unknown report command `{other}`"))),
    };
    Ok(Verification {
        command,
        status,
        certified,
        checks,
    })
}

fn load_pencil<F: Field>(field: &F, v: &Value) -> Result<Pencil<F>> {
    Pencil::from_json(field.clone(), &decode::<PencilJson>(v, "pencil")?)
}

fn same_pencil<F: Field>(pencil: &Pencil<F>, result: &Value, checks: &mut Vec<String>) -> Result<()> {
    let reported = load_pencil(pencil.field(), get(result, "pencil")?)?;
    if &reported != pencil {
        return Err(mismatch("pencil", "reported pencil differs from the one rebuilt from the input"));
    }
    checks.push(format!("{}x{} pencil rebuilt from input", pencil.rows(), pencil.cols()));
    Ok(())
}

/// Check a full-rank verdict at the decisive blow-up size.
fn full_rank_certificate<F: Field>(
    field: &F,
    pencil: &Pencil<F>,
    result: &Value,
    positive: &str,
    checks: &mut Vec<String>,
) -> Result<(String, bool)> {
    let status = get_str(result, "status")?.to_string();
    let d = decisive_blowup_size(pencil.rows());
    if get_usize(result, "blowup")? != d {
        return Err(mismatch("blowup", format!("expected blow-up size {d}")));
    }
    if status != positive {
        let best = get_usize(result, "best_rank")?;
        if best >= pencil.max_blowup_rank(d, d) {
            return Err(mismatch("verdict", "negative verdict reports a full-rank sample"));
        }
        checks.push(format!("Monte Carlo verdict at blow-up {d}, nothing exact to check"));
        return Ok((status, false));
    }
    let w: WitnessJson = decode(get(result, "witness")?, "witness")?;
    let tuple = w
        .tuple
        .iter()
        .map(|m| Matrix::from_strings(field.clone(), w.p, w.q, m))
        .collect::<Result<Vec<_>>>()?;
    if (w.p, w.q) != (d, d) {
        return Err(mismatch("witness", "witness shape differs from the blow-up size"));
    }
    let m = assemble_blowup(pencil, &tuple, d, d)?;
    let det = det_from_charpoly(&m)?;
    if field.is_zero(&det) {
        return Err(mismatch("det", "witness blow-up is singular"));
    }
    let reported = field.parse_elem(get_str(result, "det")?)?;
    if reported != det {
        return Err(mismatch("det", "reported determinant is wrong"));
    }
    checks.push(format!(
        "det of {}x{} blow-up = {} (nonzero)",
        m.rows(),
        m.cols(),
        field.format_elem(&det)
    ));
    Ok((status, true))
}

fn verify_ncrank<F: Field>(
    field: &F,
    pencil: &Pencil<F>,
    result: &Value,
    checks: &mut Vec<String>,
) -> Result<(String, bool)> {
    let steps = get(result, "per_d")?
        .as_array()
        .ok_or_else(|| Error::format("`per_d` must be an array"))?;
    let mut best = 0;
    for step in steps {
        let d = get_usize(step, "d")?;
        let w: WitnessJson = decode(get(step, "witness")?, "witness")?;
        let tuple = w
            .tuple
            .iter()
            .map(|m| Matrix::from_strings(field.clone(), d, d, m))
            .collect::<Result<Vec<_>>>()?;
        let rank = rank_via_transpose(&assemble_blowup(pencil, &tuple, d, d)?);
        if rank != get_usize(step, "rank")? || rank != w.achieved_rank {
            return Err(mismatch("rank", format!("rank at d = {d} does not match")));
        }
        best = best.max(rank.div_ceil(d));
        checks.push(format!("rank {rank} at d = {d}"));
    }
    if best != get_usize(result, "best")? {
        return Err(mismatch("best", "reported bound is not max ceil(rank/d)"));
    }
    Ok((format!("NcRankAtLeast({best})"), true))
}

fn rebuild_pq_pencil<F: Field>(field: &F, input: &Value) -> Result<Pencil<F>> {
    let (p, q) = (get_usize(input, "p")?, get_usize(input, "q")?);
    let mats = get(input, "matrices")?
        .as_array()
        .ok_or_else(|| Error::format("`matrices` must be an array"))?;
    let xs = mats
        .iter()
        .map(|m| matrix_from_value(field, p, q, m))
        .collect::<Result<Vec<_>>>()?;
    let g = num_integer::gcd(p, q);
    let sigma = [(q / g) as i64, -((p / g) as i64)];
    let quiver = Quiver::kronecker(xs.len());
    let rep = Representation::new(&quiver, &[p, q], xs.iter().map(Matrix::transpose).collect())?;
    build_semi_pencil(field, &quiver, &[p, q], &sigma, &rep)
}

fn verify_rit<F: Field>(field: &F, input: &Value, result: &Value, checks: &mut Vec<String>) -> Result<(String, bool)> {
    let f = parse(get_str(input, "formula")?)?;
    let p = rit_dimension(&f);
    if get_usize(result, "dimension")? != p {
        return Err(mismatch("dimension", format!("expected evaluation dimension {p}")));
    }
    let status = get_str(result, "status")?.to_string();
    if status != "NonZero" {
        checks.push(format!("Monte Carlo verdict at dimension {p}, nothing exact to check"));
        return Ok((status, false));
    }
    let tuple = get(result, "witness")?
        .as_array()
        .ok_or_else(|| Error::format("`witness` must be an array"))?
        .iter()
        .map(|m| matrix_from_value(field, p, p, m))
        .collect::<Result<Vec<_>>>()?;
    let value = matrix_from_value(field, p, p, get(result, "value")?)?;
    match evaluate_at(&f, field, p, &tuple)? {
        Evaluation::Defined(v) if v == value && !v.is_zero() => {}
        Evaluation::Defined(_) => return Err(mismatch("value", "formula value at the witness differs or is zero")),
        Evaluation::Undefined => return Err(mismatch("value", "formula is undefined at the witness")),
    }
    checks.push(format!("formula defined and nonzero at the {p}x{p} witness"));
    Ok((status, true))
}

fn verify_hard_instance_report<F: Field>(
    field: &F,
    input: &Value,
    result: &Value,
    checks: &mut Vec<String>,
) -> Result<(String, bool)> {
    let d = get_usize(input, "d")?;
    let inst = build_fd(field.clone(), d)?;
    same_pencil(&inst.pencil, result, checks)?;
    let tuple = get(result, "canonical_tuple")?
        .as_array()
        .ok_or_else(|| Error::format("`canonical_tuple` must be an array"))?
        .iter()
        .map(|m| matrix_from_value(field, d, d, m))
        .collect::<Result<Vec<_>>>()?;
    if tuple.first().is_none_or(|t| !t.is_identity()) {
        return Err(mismatch("b", "canonical tuple must start with the identity"));
    }
    let det = det_from_charpoly(&assemble_blowup(&inst.pencil, &tuple, d, d)?)?;
    let report = get(result, "report")?;
    let reported = field.parse_elem(get_str(get(report, "canonical")?, "fd_det")?)?;
    if field.is_zero(&det) || det != reported {
        return Err(mismatch("b", "canonical substitution is not invertible as reported"));
    }
    checks.push(format!("canonical {d}x{d} substitution: det = {}", field.format_elem(&det)));
    let n = d * d - 1;
    let bounds = degree_bounds(n as u64, (d + 1) as u64)?;
    if bounds.delta_lower != d as u64 || get_str(report, "conclusion")? != format!("delta({n}) >= {d}") {
        return Err(mismatch("c", "conclusion does not follow"));
    }
    checks.push(format!("delta({n}) >= {d}"));
    Ok((format!("delta({n}) >= {d}"), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullcone::{in_nullcone, skewfield_invertible};
    use crate::pencil::blowup_rank;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entrywise_assembly_matches_kronecker_route() {
        let f = PrimeField::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pencil = Pencil::random_linear(f, 3, 2, 2, &mut rng);
        let tuple = vec![Matrix::random(f, 2, 3, &mut rng), Matrix::random(f, 2, 3, &mut rng)];
        assert_eq!(
            assemble_blowup(&pencil, &tuple, 2, 3).unwrap(),
            pencil.blowup_eval(&tuple).unwrap()
        );
        let m = Matrix::random(f, 5, 5, &mut rng);
        assert_eq!(det_from_charpoly(&m).unwrap(), m.det().unwrap());
    }

    fn report_for(command: &str, pencil: &Pencil<PrimeField>, result: Value) -> Value {
        envelope(
            command,
            &pencil.field().spec(),
            0,
            8,
            json!({ "pencil": pencil.to_json() }),
            result,
        )
    }

    #[test]
    fn nullcone_certificates_verify_and_tampering_is_caught() {
        let f = PrimeField::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pencil = Pencil::random_linear(f, 3, 3, 2, &mut rng);
        let v = in_nullcone(&pencil, 8, 1).unwrap();
        let report = report_for("nullcone", &pencil, v.to_json(&f));
        let ok = verify_report(&report).unwrap();
        assert!(ok.certified);
        assert_eq!(ok.status, "NotInNullCone");

        let mut bad = report.clone();
        bad["result"]["det"] = json!("1");
        assert!(matches!(verify_report(&bad), Err(Error::VerificationFailed { .. })));
        let mut bad = report.clone();
        bad["result"]["witness"]["tuple"][0][0][0] = json!("12345");
        assert!(verify_report(&bad).is_err());
    }

    #[test]
    fn negative_verdicts_are_consistent_but_uncertified() {
        let f = PrimeField::default();
        let zero = Pencil::linear(f, 2, 2, vec![Matrix::zeros(f, 2, 2)]).unwrap();
        let v = skewfield_invertible(&zero, 4, 0).unwrap();
        let out = verify_report(&report_for("invertible", &zero, v.to_json(&f))).unwrap();
        assert!(!out.certified);
        assert_eq!(out.status, "SingularWhp");
    }

    #[test]
    fn ncrank_ranks_recomputed() {
        let f = PrimeField::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pencil = Pencil::random_linear(f, 3, 3, 2, &mut rng);
        let bound = crate::nullcone::ncrank_lower_bound(&pencil, 3, 4, 0).unwrap();
        let report = report_for("ncrank", &pencil, bound.to_json());
        assert!(verify_report(&report).unwrap().certified);
        let w = blowup_rank(&pencil, 1, 1, 1, 0).unwrap();
        assert_eq!(rank_via_transpose(&pencil.blowup_eval(&w.tuple).unwrap()), w.achieved_rank);
    }

    #[test]
    fn hard_instance_rebuilt() {
        let f = PrimeField::default();
        let inst = build_fd(f, 3).unwrap();
        let rep = crate::hardinstances::verify_hard_instance(&inst, 5, 0).unwrap();
        let result = json!({
            "pencil": inst.pencil.to_json(),
            "canonical_tuple": inst.canonical_tuple.iter().map(Matrix::to_strings).collect::<Vec<_>>(),
            "report": rep.to_json(),
        });
        let report = envelope("hard-instance", &f.spec(), 0, 5, json!({"d": 3}), result);
        let out = verify_report(&report).unwrap();
        assert_eq!(out.status, "delta(8) >= 3");
    }

    #[test]
    fn rit_witness_rechecked() {
        let f = PrimeField::default();
        let formula = parse("t1*t2 - t2*t1").unwrap();
        let v = crate::ncformula::rit(&f, &formula, 2, 0).unwrap();
        let report = envelope("rit", &f.spec(), 0, 2, json!({"formula": "t1*t2 - t2*t1"}), v.to_json());
        assert!(verify_report(&report).unwrap().certified);
        let mut bad = report.clone();
        bad["result"]["value"][0][0] = json!("7");
        assert!(verify_report(&bad).is_err());
    }
}
