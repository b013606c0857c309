//! Property suites run by `blowup selftest`.
//!
//! Every suite draws its instances from the configured seed and reports how
//! many instances it checked, how many failed, and an upper bound on the
//! probability that sampling alone caused a failure (0 for suites that are
//! exact). Suites are generic over the field, so a small prime exposes the
//! elevated failure bounds of the sampled properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::certify::{envelope, verify_report};
use crate::error::Result;
use crate::exactalg::{Field, Matrix};
use crate::hardinstances::{build_fd, build_nd, charpoly_kernel_basis};
use crate::ncformula::{evaluate_at, parse, rit, Formula, RitStatus};
use crate::nullcone::{decisive_blowup_size, f_t, in_nullcone, skewfield_invertible};
use crate::pencil::{blowup_rank, per_trial_failure_bound, random_tuple, Pencil};
use crate::quiver::{build_semi_pencil, is_semistable, semi_pencil_vars, Quiver, Representation};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestConfig {
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub instances: usize,
    pub failures: usize,
    /// Union bound on the chance that sampling caused a failure.
    pub failure_bound: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestSummary {
    pub field: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl SelftestSummary {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("summary serializes")
    }
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &str) -> Self {
        Suite {
            result: SuiteResult {
                suite: name.to_string(),
                instances: 0,
                failures: 0,
                failure_bound: 0.0,
                failed: Vec::new(),
            },
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.result.instances += 1;
        if !ok {
            self.result.failures += 1;
            if self.result.failed.len() < 10 {
                self.result.failed.push(what());
            }
        }
    }

    fn sampled(&mut self, bound: f64) {
        self.result.failure_bound = (self.result.failure_bound + bound).min(1.0);
    }

    /// Turn an unexpected error into a recorded failure.
    fn run(&mut self, label: &str, body: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = body(self) {
            self.check(false, || format!("{label}: {e}"));
        }
    }
}

/// Run every suite.
pub fn run_selftest<F: Field>(field: &F, config: SelftestConfig) -> SelftestSummary {
    let suites: Vec<fn(&F, SelftestConfig, &mut ChaCha8Rng) -> SuiteResult> = vec![
        exactalg_suite,
        pencil_suite,
        regularity_suite,
        concavity_suite,
        nullcone_suite,
        hardinstance_suite,
        quiver_suite,
        ncformula_suite,
    ];
    let suites: Vec<_> = suites
        .into_iter()
        .enumerate()
        .map(|(i, suite)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, i as u64));
            suite(field, config, &mut rng)
        })
        .collect();
    SelftestSummary {
        field: field.spec().to_string(),
        seed: config.seed,
        trials: config.trials,
        passed: suites.iter().all(|s| s.failures == 0),
        suites,
    }
}

fn exactalg_suite<F: Field>(field: &F, _: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("exactalg");
    for i in 0..20 {
        let n = 1 + i % 5;
        s.run("exactalg", |s| {
            let a = Matrix::random(field.clone(), n, n, rng);
            let b = Matrix::random(field.clone(), n, n, rng);
            let mut low = Matrix::random(field.clone(), n, n + 1, rng);
            // force a rank deficiency half the time
            if i % 2 == 0 && n > 1 {
                for c in 0..n + 1 {
                    low.set(n - 1, c, low.get(0, c).clone());
                }
            }
            s.check(low.rank() == low.transpose().rank(), || format!("rank/transpose n={n}"));
            let det_ab = a.mul(&b)?.det()?;
            s.check(det_ab == field.mul(&a.det()?, &b.det()?), || format!("det multiplicative n={n}"));
            let square = low.block(0, 0, n, n);
            let invertible = !field.is_zero(&square.det()?);
            match square.inverse() {
                Ok(inv) => s.check(invertible && inv.mul(&square)?.is_identity(), || "inverse".into()),
                Err(_) => s.check(!invertible, || "inverse failed on invertible matrix".into()),
            }
            let c = Matrix::random(field.clone(), 2, 3, rng);
            let d = Matrix::random(field.clone(), 3, 2, rng);
            let lhs = a.kronecker(&c).mul(&b.kronecker(&d))?;
            s.check(lhs == a.mul(&b)?.kronecker(&c.mul(&d)?), || "mixed product".into());
            let coeffs = a.charpoly()?;
            let mut p_a = a.pow(n as u32)?;
            for (k, ck) in coeffs.iter().enumerate() {
                p_a = p_a.add(&a.pow(k as u32)?.scale(ck))?;
            }
            s.check(p_a.is_zero(), || format!("Cayley-Hamilton n={n}"));
            Ok(())
        });
    }
    s.result
}

fn pencil_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("pencil");
    for i in 0..10 {
        s.run("pencil", |s| {
            let (k, n, m) = (1 + i % 3, 1 + (i + 1) % 3, 1 + i % 2);
            let pencil = Pencil::random_linear(field.clone(), k, n, m, rng);
            let (p, q) = (2, 3);
            let t = random_tuple(field, m, p, q, rng);
            let u = random_tuple(field, m, p, q, rng);
            let sum: Vec<_> = t.iter().zip(&u).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
            let lhs = pencil.blowup_eval(&sum)?;
            let rhs = pencil.blowup_eval(&t)?.add(&pencil.blowup_eval(&u)?)?;
            s.check(lhs == rhs, || "linearity".into());

            // rank of a direct-sum substitution is the sum of ranks
            let t1 = random_tuple(field, m, 1, 1, rng);
            let t2 = random_tuple(field, m, 2, 2, rng);
            let joined: Vec<_> = t1.iter().zip(&t2).map(|(a, b)| a.direct_sum(b)).collect();
            let r = pencil.blowup_eval(&joined)?.rank();
            let r1 = pencil.blowup_eval(&t1)?.rank();
            let r2 = pencil.blowup_eval(&t2)?.rank();
            s.check(r == r1 + r2, || "direct sum rank".into());

            let seed = rng.gen();
            let few = blowup_rank(&pencil, 2, 2, 1, seed)?.achieved_rank;
            let more = blowup_rank(&pencil, 2, 2, config.trials.max(1), seed)?.achieved_rank;
            s.check(more >= few, || "monotone in trials".into());
            Ok(())
        });
    }
    s.result
}

fn regularity_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("regularity");
    for i in 0..12 {
        let (n, m, d) = (2 + i % 2, 2 + (i / 2) % 2, 2 + (i / 4) % 2);
        s.run("regularity", |s| {
            let pencil = Pencil::random_linear(field.clone(), n, n, m, rng);
            let w = blowup_rank(&pencil, d, d, config.trials, rng.gen())?;
            s.check(w.achieved_rank % d == 0, || {
                format!("n={n} m={m} d={d}: rank {} not divisible", w.achieved_rank)
            });
            s.sampled(per_trial_failure_bound(&pencil, d, d).powi(config.trials as i32));
            Ok(())
        });
    }
    s.result
}

/// Sampled `r(p, q)` for `0 <= p, q <= max`.
pub fn rank_grid<F: Field>(pencil: &Pencil<F>, max: usize, trials: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    (0..=max)
        .map(|p| {
            (0..=max)
                .map(|q| {
                    let s = derive_seed(seed, (p * (max + 1) + q) as u64);
                    Ok(blowup_rank(pencil, p, q, trials, s)?.achieved_rank)
                })
                .collect()
        })
        .collect()
}

/// Violations of monotonicity and concavity in each argument.
pub fn grid_violations(r: &[Vec<usize>]) -> Vec<String> {
    let max = r.len() - 1;
    let mut out = Vec::new();
    for p in 0..=max {
        for q in 0..=max {
            let v = |a: usize, b: usize| r[a][b] as i64;
            if q < max && v(p, q + 1) < v(p, q) {
                out.push(format!("not monotone in q at ({p},{q})"));
            }
            if p < max && v(p + 1, q) < v(p, q) {
                out.push(format!("not monotone in p at ({p},{q})"));
            }
            if q + 2 <= max && 2 * v(p, q + 1) < v(p, q) + v(p, q + 2) {
                out.push(format!("not concave in q at ({p},{q})"));
            }
            if p + 2 <= max && 2 * v(p + 1, q) < v(p, q) + v(p + 2, q) {
                out.push(format!("not concave in p at ({p},{q})"));
            }
        }
    }
    out
}

fn concavity_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("concavity");
    for _ in 0..4 {
        s.run("concavity", |s| {
            let pencil = Pencil::random_linear(field.clone(), 3, 3, 2, rng);
            let grid = rank_grid(&pencil, 3, config.trials, rng.gen())?;
            let bad = grid_violations(&grid);
            s.check(bad.is_empty(), || bad.join(", "));
            let per: f64 = (1..=3)
                .flat_map(|p| (1..=3).map(move |q| (p, q)))
                .map(|(p, q)| per_trial_failure_bound(&pencil, p, q).powi(config.trials as i32))
                .sum();
            s.sampled(per);
            Ok(())
        });
    }
    s.result
}

/// Product of elementary matrices `I + c E_ij` (determinant 1).
fn random_sl<F: Field, R: Rng>(field: &F, n: usize, rng: &mut R) -> Result<Matrix<F>> {
    let mut g = Matrix::identity(field.clone(), n);
    for _ in 0..2 * n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j {
            let mut e = Matrix::identity(field.clone(), n);
            e.set(i, j, field.random(rng));
            g = g.mul(&e)?;
        }
    }
    Ok(g)
}

fn nullcone_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("nullcone");
    for i in 0..8 {
        let n = 2 + i % 3;
        s.run("nullcone", |s| {
            let pencil = Pencil::random_linear(field.clone(), n, n, 2, rng);
            let seed = rng.gen();
            // descent: full rank at some small d implies full rank at n - 1
            let small = blowup_rank(&pencil, 2, 2, config.trials, seed)?;
            let verdict = in_nullcone(&pencil, config.trials, seed)?;
            if small.is_full_rank(&pencil) {
                s.check(!verdict.in_nullcone(), || format!("descent n={n}"));
            }
            let d = decisive_blowup_size(n);
            s.sampled(per_trial_failure_bound(&pencil, d, d).powi(config.trials as i32));
            let report = envelope(
                "nullcone",
                &field.spec(),
                seed,
                config.trials,
                serde_json::json!({ "pencil": pencil.to_json() }),
                verdict.to_json(field),
            );
            s.check(verify_report(&report).is_ok(), || format!("certificate n={n}"));

            // SL_n x SL_n invariance of f_T
            let (a, b) = (random_sl(field, n, rng)?, random_sl(field, n, rng)?);
            let b_inv = b.inverse()?;
            let moved = pencil
                .coeffs()
                .iter()
                .map(|x| a.mul(x)?.mul(&b_inv))
                .collect::<Result<Vec<_>>>()?;
            let moved = Pencil::from_tuple(moved)?;
            let t = random_tuple(field, 2, 2, 2, rng);
            s.check(f_t(&pencil, &t)? == f_t(&moved, &t)?, || format!("SL invariance n={n}"));
            Ok(())
        });
    }
    s.run("n = 1", |s| {
        let zero = Pencil::from_tuple(vec![Matrix::zeros(field.clone(), 1, 1); 2])?;
        s.check(in_nullcone(&zero, config.trials, 0)?.in_nullcone(), || "zero 1x1".into());
        let one = Pencil::from_tuple(vec![Matrix::zeros(field.clone(), 1, 1), Matrix::identity(field.clone(), 1)])?;
        let v = in_nullcone(&one, config.trials, 0)?;
        s.check(!v.in_nullcone(), || "nonzero 1x1".into());
        s.sampled(per_trial_failure_bound(&one, 1, 1).powi(config.trials as i32));
        let aff = Pencil::new(
            field.clone(),
            1,
            1,
            Some(Matrix::identity(field.clone(), 1)),
            vec![Matrix::zeros(field.clone(), 1, 1)],
        )?;
        s.check(skewfield_invertible(&aff, config.trials, 0)?.is_invertible(), || "constant 1".into());
        Ok(())
    });
    s.result
}

fn hardinstance_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("hardinstances");
    for d in 2..=5 {
        for k in 1..d {
            s.run("charpoly kernel", |s| {
                let a = Matrix::random(field.clone(), k, k, rng);
                let bs = random_tuple(field, d - 1, k, k, rng);
                let basis = charpoly_kernel_basis(d, &a, &bs)?;
                let nd = build_nd(d, &a, &bs)?;
                s.check(nd.mul(&basis)?.is_zero(), || format!("kernel d={d} k={k}"));
                Ok(())
            });
        }
        s.run("canonical", |s| {
            let inst = build_fd(field.clone(), d)?;
            let (a, bs) = inst.canonical_nd_inputs();
            s.check(!field.is_zero(&build_nd(d, a, bs)?.det()?), || format!("canonical N_{d}"));
            let full = inst.pencil.blowup_eval(&inst.canonical_tuple)?.rank() == inst.size() * d;
            s.check(full, || format!("canonical F_{d}"));
            if d <= 3 {
                for k in 1..d {
                    let w = blowup_rank(&inst.pencil, k, k, config.trials, rng.gen())?;
                    s.check(!w.is_full_rank(&inst.pencil), || format!("F_{d} full at k={k}"));
                }
            }
            Ok(())
        });
    }
    s.result
}

fn quiver_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("quiver");
    for i in 0..8 {
        let (n, m) = (1 + i % 3, 1 + (i / 3) % 3);
        s.run("theta", |s| {
            let theta = Quiver::kronecker(m);
            let rep = Representation::random(field, &theta, &[n, n], rng);
            let seed = rng.gen();
            let q = is_semistable(field, &theta, &[n, n], &[1, -1], &rep, config.trials, seed)?;
            let nc = in_nullcone(&Pencil::from_tuple(rep.maps.clone())?, config.trials, seed)?;
            s.check(q.is_semistable() != nc.in_nullcone(), || format!("theta n={n} m={m}"));

            let doubled = build_semi_pencil(field, &theta, &[n, n], &[2, -2], &rep)?;
            s.check(doubled.vars() == semi_pencil_vars(&theta, &[2, -2]), || "variable count".into());
            s.check(doubled.rows() == 2 * n, || "pencil size".into());
            let d = decisive_blowup_size(doubled.rows());
            let w = blowup_rank(&doubled, d, d, config.trials, seed)?;
            s.check(w.is_full_rank(&doubled) == q.is_semistable(), || format!("scaling n={n} m={m}"));
            s.sampled(2.0 * per_trial_failure_bound(&doubled, d, d).powi(config.trials as i32));
            Ok(())
        });
    }
    s.result
}

/// Random formula with at most `budget` nodes over `t1..t3`.
pub fn random_formula<R: Rng>(rng: &mut R, budget: usize) -> Formula {
    if budget <= 1 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.2) {
            Formula::constant(rng.gen_range(0..10))
        } else {
            Formula::var(rng.gen_range(1..=3))
        };
    }
    let ops = if budget >= 3 { 4 } else { 2 };
    match rng.gen_range(0..ops) {
        0 => random_formula(rng, budget - 1).neg(),
        1 => random_formula(rng, budget - 1).inv(),
        op => {
            let left = rng.gen_range(1..budget - 1);
            let (a, b) = (random_formula(rng, left), random_formula(rng, budget - 1 - left));
            if op == 2 {
                a.add(b)
            } else {
                a.mul(b)
            }
        }
    }
}

fn ncformula_suite<F: Field>(field: &F, config: SelftestConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = Suite::new("ncformula");
    for _ in 0..20 {
        let f = random_formula(rng, 10);
        s.run("formula", |s| {
            s.check(parse(&f.to_string())? == f, || format!("round trip {f}"));
            if !f.has_inverse() {
                let xs: Vec<_> = (0..3).map(|_| Matrix::random(field.clone(), 1, 1, rng)).collect();
                let m = evaluate_at(&f, field, 1, &xs)?;
                s.check(m.value().is_some(), || format!("inverse-free {f} undefined"));
            }
            let v = rit(field, &f, 1, rng.gen())?;
            if let RitStatus::NonZero { tuple, value, .. } = &v.status {
                let again = evaluate_at(&f, field, v.dimension, tuple)?;
                s.check(again.value() == Some(value) && !value.is_zero(), || format!("witness {f}"));
            }
            Ok(())
        });
    }
    for (text, expect_zero) in [("t1 - t1", true), ("t1*t2 - t2*t1", false), ("(t1+t2)*(t1+t2) - t1*t1 - t2*t2 - 2*t1*t2", false)] {
        s.run(text, |s| {
            let v = rit(field, &parse(text)?, config.trials, rng.gen())?;
            s.check(matches!(v.status, RitStatus::ZeroWhp) == expect_zero, || format!("rit {text}"));
            s.sampled(v.failure_bound);
            Ok(())
        });
    }
    s.result
}
