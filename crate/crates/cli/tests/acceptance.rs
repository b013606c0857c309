//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use blowup_cli::run;
use blowup_core::certify::{envelope, verify_report};
use blowup_core::exactalg::{Field, Matrix, PrimeField};
use blowup_core::ncformula::{parse, rit, RitStatus};
use blowup_core::nullcone::{degree_bounds, in_nullcone, skewfield_invertible};
use blowup_core::pencil::{blowup_rank, Pencil};
use blowup_core::quiver::{is_semistable, pq_full_test, Quiver, Representation};
use blowup_core::rng::{derive_seed, substream};
use blowup_core::selftest::{grid_violations, random_formula, rank_grid};
use rand::RngCore;
use serde_json::{json, Value};

type Gf = PrimeField;

fn gf() -> Gf {
    PrimeField::default()
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn criterion(id: u32, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let ok = out.ok && elapsed <= limit;
    println!(
        "{} criterion {id} ({name}): {} [{:.2}s, limit {}s]",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn regularity() -> Outcome {
    let mut good = 0;
    let mut rng = substream(1, 0);
    for i in 0..100 {
        let n = 2 + i % 3;
        let m = 2 + (i / 3) % 2;
        let pencil = Pencil::random_linear(gf(), n, n, m, &mut rng);
        let ok = [2, 3].iter().all(|&d| {
            let w = blowup_rank(&pencil, d, d, 8, derive_seed(i as u64, d as u64)).unwrap();
            w.achieved_rank % d == 0
        });
        good += ok as usize;
    }
    outcome(good == 100, format!("{good}/100 pencils with rank divisible by d for d in {{2,3}}"))
}

fn concavity() -> Outcome {
    let mut rng = substream(2, 0);
    let mut violations = Vec::new();
    for i in 0..25 {
        let pencil = Pencil::random_linear(gf(), 3, 3, 2, &mut rng);
        let grid = rank_grid(&pencil, 4, 8, i).unwrap();
        violations.extend(grid_violations(&grid).into_iter().map(|v| format!("pencil {i}: {v}")));
    }
    outcome(
        violations.is_empty(),
        format!("{} monotonicity or concavity violations over 25 pencils, grid 0..=4", violations.len()),
    )
}

/// Generic 3x3 skew-symmetric pencil: commutatively singular, yet its
/// blow-ups reach full rank.
fn skew3(field: &Gf) -> Vec<Matrix<Gf>> {
    let unit = |i: usize, j: usize| {
        let mut m = Matrix::zeros(*field, 3, 3);
        m.set(i, j, 1);
        m.set(j, i, field.neg(&1));
        m
    };
    vec![unit(0, 1), unit(0, 2), unit(1, 2)]
}

fn descent() -> Outcome {
    let f = gf();
    let mut rng = substream(3, 0);
    let (mut tested, mut good, mut structured) = (0, 0, 0);
    let mut i = 0u64;
    while tested < 50 {
        i += 1;
        let n = 3 + (i as usize) % 3;
        // half generic, half a skew block plus a random block under random GL
        let pencil = if i.is_multiple_of(2) {
            Pencil::random_linear(f, n, n, 2, &mut rng)
        } else {
            let rest = Pencil::random_linear(f, n - 3, n - 3, 3, &mut rng);
            let a = Matrix::random(f, n, n, &mut rng);
            let b = Matrix::random(f, n, n, &mut rng);
            let coeffs = skew3(&f)
                .iter()
                .zip(rest.coeffs().iter().map(Some).chain(std::iter::repeat(None)))
                .map(|(s, r)| {
                    let block = match r {
                        Some(r) => s.direct_sum(r),
                        None => s.direct_sum(&Matrix::zeros(f, n - 3, n - 3)),
                    };
                    a.mul(&block).unwrap().mul(&b).unwrap()
                })
                .collect();
            Pencil::from_tuple(coeffs).unwrap()
        };
        let w = blowup_rank(&pencil, n, n, 8, derive_seed(i, 0)).unwrap();
        if w.achieved_rank != n * n {
            continue;
        }
        tested += 1;
        if blowup_rank(&pencil, 1, 1, 8, derive_seed(i, 2)).unwrap().achieved_rank < n {
            structured += 1;
        }
        good += (!in_nullcone(&pencil, 8, derive_seed(i, 1)).unwrap().in_nullcone()) as usize;
    }
    outcome(
        good == 50,
        format!("{good}/50 full at d = n - 1 ({structured} of them singular at d = 1)"),
    )
}

fn tmp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("blowup-acceptance-{}-{name}", std::process::id()))
}

fn cli_json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["blowup"];
    full.extend_from_slice(args);
    let out = run(full);
    let v = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out.code, v)
}

fn hard_instance(d: usize) -> Outcome {
    let (code, report) = cli_json(&["--trials", "500", "hard-instance", "--d", &d.to_string()]);
    let r = &report["result"]["report"];
    let below = r["below_size"].as_array().cloned().unwrap_or_default();
    let a_ok = below.len() == d - 1
        && below
            .iter()
            .all(|c| c["singular"] == 500 && c["trials"] == 500 && c["kernel_residual_zero"] == true && c["kernel_rank"] == c["k"]);
    let det = r["canonical"]["fd_det"].as_str().unwrap_or("0");
    let b_ok = det != "0" && r["canonical"]["nd_det"].as_str().is_some_and(|x| x != "0");
    let n = d * d - 1;
    let c_ok = r["conclusion"] == format!("delta({n}) >= {d}");
    let reverified = verify_report(&serde_json::from_str(&report.to_string()).unwrap()).is_ok();
    let singular: Vec<String> = below.iter().map(|c| format!("k={}: {}/500", c["k"], c["singular"])).collect();
    outcome(
        code == 0 && a_ok && b_ok && c_ok && reverified,
        format!(
            "d={d}: (a) singular {} with zero kernel residual, (b) det F_{d}(canonical) = {det}, (c) {}",
            singular.join(", "),
            r["conclusion"].as_str().unwrap_or("?")
        ),
    )
}

fn bounds() -> Outcome {
    let mut bad = Vec::new();
    for d in 2..=6u64 {
        let b = degree_bounds(d * d - 1, d + 1).unwrap();
        if b.delta_lower != d {
            bad.push(format!("delta_lower({}) = {}", d * d - 1, b.delta_lower));
        }
    }
    for (n, m) in [(3u64, 2u64), (8, 4)] {
        let b = degree_bounds(n, m).unwrap();
        if b.gamma_upper != n * (n - 1) || b.beta_upper_char0 != m.min(n * n) * n.pow(4) {
            bad.push(format!("(n,m) = ({n},{m})"));
        }
    }
    let (code, report) = cli_json(&["bounds", "--n", "8", "--m", "4"]);
    if code != 0 || report["result"]["delta_lower"] != 3 || report["result"]["delta_upper"] != 7 {
        bad.push("bounds --n 8 --m 4".into());
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "delta_lower(d^2-1) = d for d = 2..6; gamma_upper, beta_upper at (3,2), (8,4); delta(8) in [3, 7]".to_string()
        } else {
            bad.join("; ")
        },
    )
}

/// The semi-invariant pencil of `(X_i)` for weight `(q', -p')`, assembled
/// directly: `p'` block rows of height `q`, `q'` block columns of width `p`,
/// block `(j, i)` equal to `sum_a t_{i,j,a} X_a^T`.
fn pq_pencil_oracle(xs: &[Matrix<Gf>]) -> Pencil<Gf> {
    let f = gf();
    let (p, q) = xs[0].shape();
    let g = gcd(p, q);
    let (pp, qq) = (p / g, q / g);
    let n = pp * q;
    let mut coeffs = Vec::new();
    for i in 0..qq {
        for j in 0..pp {
            for x in xs {
                let mut c = Matrix::zeros(f, n, n);
                for r in 0..q {
                    for s in 0..p {
                        c.set(j * q + r, i * p + s, *x.get(s, r));
                    }
                }
                coeffs.push(c);
            }
        }
    }
    Pencil::linear(f, n, n, coeffs).unwrap()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn quiver_equivalence() -> Outcome {
    let f = gf();
    let mut rng = substream(6, 0);
    let mut theta_agree = 0;
    let mut theta_semistable = 0;
    for i in 0..50u64 {
        let n = 1 + (i as usize) % 3;
        let m = 1 + (i as usize / 3) % 3;
        let theta = Quiver::kronecker(m);
        let mut rep = Representation::random(&f, &theta, &[n, n], &mut rng);
        if i % 4 == 3 {
            // common kernel vector: unstable
            for x in &mut rep.maps {
                for r in 0..n {
                    x.set(r, 0, 0);
                }
            }
        }
        let q = is_semistable(&f, &theta, &[n, n], &[1, -1], &rep, 8, i).unwrap();
        let nc = in_nullcone(&Pencil::from_tuple(rep.maps.clone()).unwrap(), 8, i).unwrap();
        theta_agree += (q.is_semistable() == !nc.in_nullcone()) as usize;
        theta_semistable += q.is_semistable() as usize;
    }

    let mut pq_agree = Vec::new();
    for (p, q) in [(1usize, 2usize), (2, 3)] {
        let mut agree = 0;
        let mut semistable = 0;
        for i in 0..20u64 {
            let m = 1 + (i as usize) % 3;
            let mut xs: Vec<_> = (0..m).map(|_| Matrix::random(f, p, q, &mut rng)).collect();
            if i % 5 == 4 {
                for x in &mut xs {
                    for r in 0..p {
                        x.set(r, q - 1, 0);
                    }
                }
            }
            let verdict = pq_full_test(&xs, 8, i).unwrap().is_semistable();
            let oracle = pq_pencil_oracle(&xs);
            let l = p * q / gcd(p, q);
            let brute = (1..=(l - 1).max(1)).any(|d| {
                let w = blowup_rank(&oracle, d, d, 8, derive_seed(i, d as u64 + 100)).unwrap();
                w.achieved_rank == oracle.rows() * d
            });
            agree += (verdict == brute) as usize;
            semistable += verdict as usize;
        }
        pq_agree.push(format!("({p},{q}): {agree}/20 agree, {semistable} semistable"));
        if agree != 20 {
            return outcome(false, pq_agree.join("; "));
        }
    }
    outcome(
        theta_agree == 50,
        format!(
            "theta: {theta_agree}/50 agree ({theta_semistable} semistable); pq {}",
            pq_agree.join("; ")
        ),
    )
}

fn rit_criterion() -> Outcome {
    let limit = Duration::from_secs(10);
    let mut parts = Vec::new();
    let mut ok = true;
    let cases = [
        ("(t1 + t1*t2^-1*t1)^-1 + (t1+t2)^-1 - t1^-1", "ZeroWhp"),
        ("t1*t2 - t2*t1", "NonZero"),
        ("(t1 \u{2212} t1)^-1", "UndefinedWhp"),
    ];
    for (text, expected) in cases {
        let start = Instant::now();
        let (code, report) = cli_json(&["rit", "--formula", text]);
        let elapsed = start.elapsed();
        let status = report["result"]["status"].as_str().unwrap_or("?").to_string();
        let mut good = code == 0 && status == expected && elapsed <= limit;
        if expected == "NonZero" {
            let reparsed: Value = serde_json::from_str(&report.to_string()).unwrap();
            good &= verify_report(&reparsed).is_ok_and(|v| v.certified);
        }
        ok &= good;
        parts.push(format!(
            "{status} at p={} in {:.2}s",
            report["result"]["dimension"],
            elapsed.as_secs_f64()
        ));
    }
    outcome(ok, format!("Hua, commutator, (t1-t1)^-1: {}", parts.join("; ")))
}

/// Serialize to text and back, then verify.
fn reverify(report: &Value) -> bool {
    let text = serde_json::to_string(report).unwrap();
    verify_report(&serde_json::from_str(&text).unwrap()).is_ok_and(|v| v.certified)
}

fn certificate_soundness() -> Outcome {
    let f = gf();
    let spec = f.spec();
    let mut rng = substream(8, 0);
    let (mut positives, mut verified) = (0, 0);
    let mut tally = |report: Value, positive: bool| {
        if positive {
            positives += 1;
            verified += reverify(&report) as usize;
        }
    };
    for i in 0..30u64 {
        let n = 1 + (i as usize) % 4;
        let pencil = Pencil::random_linear(f, n, n, 2, &mut rng);
        let v = in_nullcone(&pencil, 8, i).unwrap();
        tally(
            envelope("nullcone", &spec, i, 8, json!({ "pencil": pencil.to_json() }), v.to_json(&f)),
            !v.in_nullcone(),
        );
        let affine = Pencil::new(f, n, n, Some(Matrix::random(f, n, n, &mut rng)), pencil.coeffs().to_vec()).unwrap();
        let v = skewfield_invertible(&affine, 8, i).unwrap();
        tally(
            envelope("invertible", &spec, i, 8, json!({ "pencil": affine.to_json() }), v.to_json(&f)),
            v.is_invertible(),
        );
    }
    for i in 0..10u64 {
        let (p, q) = [(1, 2), (2, 3), (2, 2)][i as usize % 3];
        let xs: Vec<_> = (0..3).map(|_| Matrix::random(f, p, q, &mut rng)).collect();
        let v = pq_full_test(&xs, 8, i).unwrap();
        let input = json!({ "p": p, "q": q, "matrices": xs.iter().map(Matrix::to_strings).collect::<Vec<_>>() });
        tally(envelope("quiver-pq", &spec, i, 8, input, v.to_json()), v.is_semistable());
    }
    // quiver check through the CLI, from a file
    let path = tmp_path("quiver.json");
    std::fs::write(
        &path,
        json!({
            "vertices": ["x", "y", "z"],
            "arrows": [{"name": "a", "tail": "x", "head": "y"}, {"name": "b", "tail": "y", "head": "z"},
                       {"name": "c", "tail": "x", "head": "z"}],
            "dim": {"x": 2, "y": 1, "z": 2},
            "weight": {"x": 1, "z": -1},
            "rep": {"a": [[1, 2]], "b": [[3], [4]], "c": [[0, 1], [1, 0]]}
        })
        .to_string(),
    )
    .unwrap();
    let (_, report) = cli_json(&["quiver", "check", "--input", path.to_str().unwrap()]);
    let _ = std::fs::remove_file(&path);
    let semistable = report["result"]["status"] == "Semistable";
    tally(report, semistable);
    for i in 0..15u64 {
        let formula = random_formula(&mut rng, 8);
        let v = rit(&f, &formula, 2, i).unwrap();
        let nonzero = matches!(v.status, RitStatus::NonZero { .. });
        tally(
            envelope("rit", &spec, i, 2, json!({ "formula": formula.to_string() }), v.to_json()),
            nonzero,
        );
    }
    let commutator = parse("t1*t2 - t2*t1").unwrap();
    let v = rit(&f, &commutator, 1, rng.next_u64()).unwrap();
    tally(envelope("rit", &spec, 0, 1, json!({ "formula": "t1*t2 - t2*t1" }), v.to_json()), true);
    outcome(
        positives > 0 && verified == positives,
        format!("{verified}/{positives} positive verdicts re-verified from JSON"),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "regularity", secs(120), regularity),
        criterion(2, "concavity/monotonicity", secs(120), concavity),
        criterion(3, "descent", secs(180), descent),
        criterion(4, "lower bound d=2", secs(60), || hard_instance(2)),
        criterion(4, "lower bound d=3", secs(60), || hard_instance(3)),
        criterion(4, "lower bound d=4", secs(60), || hard_instance(4)),
        criterion(5, "degree bounds", secs(1), bounds),
        criterion(6, "quiver equivalence", secs(120), quiver_equivalence),
        criterion(7, "rational identity testing", secs(30), rit_criterion),
        criterion(8, "certificate soundness", secs(120), certificate_soundness),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
