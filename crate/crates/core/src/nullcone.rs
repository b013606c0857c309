//! Null cone membership, non-commutative rank and free skew field
//! invertibility through blow-ups of size `n - 1`.
//!
//! For an `n x n` tuple `X`, the invariant `f_T(X) = det(sum_i X_i (x) T_i)`
//! for `d x d` matrices `T_i` is nonzero for some `T` exactly when the
//! `d`-fold blow-up of `span(X)` has full rank `dn`. If any blow-up reaches
//! full rank, the one of size `max(1, n - 1)` already does, so a single
//! blow-up size decides membership. Sampling gives one-sided error:
//! "not in the null cone" always carries a tuple with exactly verified
//! nonzero determinant; "in the null cone" is wrong with probability at
//! most `(dn / |S|)^trials`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactalg::{Field, Matrix};
use crate::pencil::{blowup_rank, per_trial_failure_bound, BlowupWitness, Pencil};
use crate::rng::{derive_seed, substream};

/// Blow-up size that decides full rank for an `n x n` pencil.
pub fn decisive_blowup_size(n: usize) -> usize {
    n.saturating_sub(1).max(1)
}

/// `f_T(X) = det(X_1 (x) T_1 + ... + X_m (x) T_m)`.
pub fn f_t<F: Field>(pencil: &Pencil<F>, tuple: &[Matrix<F>]) -> Result<F::Elem> {
    if !pencil.is_square() || pencil.is_affine() {
        return Err(Error::shape("f_T needs a square linear pencil"));
    }
    let d = tuple
        .first()
        .map(Matrix::rows)
        .ok_or_else(|| Error::shape("f_T needs a non-empty tuple"))?;
    pencil.blowup_eval_shaped(d, d, tuple)?.det()
}

/// Outcome of a full-rank test at one blow-up size.
#[derive(Debug, Clone, PartialEq)]
pub enum FullRankVerdict<F: Field> {
    /// A tuple whose blow-up has the exact nonzero determinant `det`.
    Full { witness: BlowupWitness<F>, det: F::Elem },
    /// No sampled tuple reached full rank.
    NotFullWhp {
        blowup: usize,
        trials: usize,
        best_rank: usize,
        failure_bound: f64,
    },
}

impl<F: Field> FullRankVerdict<F> {
    pub fn is_full(&self) -> bool {
        matches!(self, FullRankVerdict::Full { .. })
    }

    pub fn witness(&self) -> Option<&BlowupWitness<F>> {
        match self {
            FullRankVerdict::Full { witness, .. } => Some(witness),
            FullRankVerdict::NotFullWhp { .. } => None,
        }
    }

    fn to_json(&self, field: &F, positive: &str, negative: &str) -> Value {
        match self {
            FullRankVerdict::Full { witness, det } => json!({
                "status": positive,
                "blowup": witness.p,
                "witness": witness.to_json(),
                "det": field.format_elem(det),
            }),
            FullRankVerdict::NotFullWhp {
                blowup,
                trials,
                best_rank,
                failure_bound,
            } => json!({
                "status": negative,
                "blowup": blowup,
                "trials": trials,
                "best_rank": best_rank,
                "failure_bound": failure_bound,
            }),
        }
    }
}

/// Sample `d x d` blow-ups of a square pencil (affine constants enter as an
/// identity slot) and certify full rank with an exact determinant.
pub fn full_rank_test<F: Field>(
    pencil: &Pencil<F>,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<FullRankVerdict<F>> {
    if !pencil.is_square() {
        return Err(Error::precondition(format!(
            "pencil is {}x{}, expected square",
            pencil.rows(),
            pencil.cols()
        )));
    }
    let witness = blowup_rank(pencil, d, d, trials, seed)?;
    if witness.is_full_rank(pencil) {
        let det = pencil.blowup_eval_shaped(d, d, &witness.tuple)?.det()?;
        // full rank from elimination and a nonzero determinant must agree
        debug_assert!(!pencil.field().is_zero(&det));
        return Ok(FullRankVerdict::Full { witness, det });
    }
    let failure_bound = per_trial_failure_bound(pencil, d, d).powi(trials as i32);
    Ok(FullRankVerdict::NotFullWhp {
        blowup: d,
        trials,
        best_rank: witness.achieved_rank,
        failure_bound,
    })
}

/// Null cone verdict for a square linear pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct NullConeVerdict<F: Field>(pub FullRankVerdict<F>);

impl<F: Field> NullConeVerdict<F> {
    pub fn in_nullcone(&self) -> bool {
        !self.0.is_full()
    }

    pub fn to_json(&self, field: &F) -> Value {
        self.0.to_json(field, "NotInNullCone", "InNullCone")
    }
}

/// Decide membership of `(X_1, ..., X_m)` in the null cone with one blow-up
/// of size `max(1, n - 1)`.
pub fn in_nullcone<F: Field>(pencil: &Pencil<F>, trials: usize, seed: u64) -> Result<NullConeVerdict<F>> {
    if pencil.is_affine() {
        return Err(Error::precondition("null cone test needs a linear pencil"));
    }
    if !pencil.is_square() || pencil.rows() == 0 {
        return Err(Error::precondition("null cone test needs an n x n tuple with n >= 1"));
    }
    let d = decisive_blowup_size(pencil.rows());
    full_rank_test(pencil, d, trials, seed).map(NullConeVerdict)
}

/// Skew field invertibility verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewVerdict<F: Field>(pub FullRankVerdict<F>);

impl<F: Field> SkewVerdict<F> {
    pub fn is_invertible(&self) -> bool {
        self.0.is_full()
    }

    pub fn to_json(&self, field: &F) -> Value {
        self.0.to_json(field, "Invertible", "SingularWhp")
    }
}

/// Invertibility of `X_0 + sum_i t_i X_i` over the free skew field.
pub fn skewfield_invertible<F: Field>(pencil: &Pencil<F>, trials: usize, seed: u64) -> Result<SkewVerdict<F>> {
    if !pencil.is_square() || pencil.rows() == 0 {
        return Err(Error::precondition("invertibility test needs an n x n pencil with n >= 1"));
    }
    let d = decisive_blowup_size(pencil.rows());
    full_rank_test(pencil, d, trials, seed).map(SkewVerdict)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcRankStep<F: Field> {
    pub d: usize,
    pub witness: BlowupWitness<F>,
}

impl<F: Field> NcRankStep<F> {
    pub fn rank(&self) -> usize {
        self.witness.achieved_rank
    }
}

/// Certified lower bound on the non-commutative rank.
#[derive(Debug, Clone, PartialEq)]
pub struct NcRankBound<F: Field> {
    pub best: usize,
    pub per_d: Vec<NcRankStep<F>>,
}

impl<F: Field> NcRankBound<F> {
    pub fn to_json(&self) -> Value {
        json!({
            "best": self.best,
            "per_d": self.per_d.iter().map(|s| json!({
                "d": s.d,
                "rank": s.rank(),
                "witness": s.witness.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// `max_d ceil(r(d,d) / d)` over sampled ranks for `d = 1..=d_max`.
///
/// Each term is a lower bound for the non-commutative rank because the true
/// blow-up rank is a multiple of `d` and at least the sampled one. The bound
/// is exact for full rank; below full rank it is only a bound.
pub fn ncrank_lower_bound<F: Field>(
    pencil: &Pencil<F>,
    d_max: usize,
    trials: usize,
    seed: u64,
) -> Result<NcRankBound<F>> {
    if pencil.is_affine() {
        return Err(Error::precondition("ncrank is defined here for linear pencils"));
    }
    if d_max == 0 {
        return Err(Error::precondition("d_max must be at least 1"));
    }
    let per_d = (1..=d_max)
        .map(|d| {
            let witness = blowup_rank(pencil, d, d, trials, derive_seed(seed, d as u64))?;
            Ok(NcRankStep { d, witness })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = per_d
        .iter()
        .map(|s| s.rank().div_ceil(s.d))
        .max()
        .unwrap_or(0);
    Ok(NcRankBound { best, per_d })
}

/// Result of [`normalize_witness`]; `normalized` is false when the retry
/// budget ran out and `witness` is the unchanged input.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized<F: Field> {
    pub witness: BlowupWitness<F>,
    pub normalized: bool,
    pub attempts: usize,
}

/// Rewrite a full-rank square witness so that its first slot is the
/// identity: with `T_1` invertible, `S_i = T_1^{-1} T_i` gives
/// `sum X_i (x) T_i = (I (x) T_1)(sum X_i (x) S_i)`. A singular `T_1` is
/// resampled (stream `attempt` of `seed`) up to `retries` times.
pub fn normalize_witness<F: Field>(
    pencil: &Pencil<F>,
    witness: &BlowupWitness<F>,
    retries: usize,
    seed: u64,
) -> Result<Normalized<F>> {
    if pencil.is_affine() || pencil.vars() == 0 {
        return Err(Error::precondition("normalization needs a linear pencil with a first variable"));
    }
    if witness.p != witness.q {
        return Err(Error::precondition("normalization needs a square blow-up"));
    }
    if !witness.is_full_rank(pencil) || !witness.verify(pencil)? {
        return Err(Error::precondition("witness does not certify full rank"));
    }
    let d = witness.p;
    let field = pencil.field();
    let full = pencil.max_blowup_rank(d, d);
    let mut tuple = witness.tuple.clone();
    for attempt in 0..=retries {
        if attempt > 0 {
            let mut rng = substream(seed, attempt as u64);
            tuple[0] = Matrix::random(field.clone(), d, d, &mut rng);
            if pencil.blowup_eval_shaped(d, d, &tuple)?.rank() != full {
                continue;
            }
        }
        let Ok(t1_inv) = tuple[0].inverse() else {
            continue;
        };
        let normalized = tuple
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == 0 {
                    Ok(Matrix::identity(field.clone(), d))
                } else {
                    t1_inv.mul(t)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let achieved_rank = pencil.blowup_eval_shaped(d, d, &normalized)?.rank();
        debug_assert_eq!(achieved_rank, full);
        return Ok(Normalized {
            witness: BlowupWitness {
                p: d,
                q: d,
                tuple: normalized,
                achieved_rank,
                trial: witness.trial,
            },
            normalized: true,
            attempts: attempt + 1,
        });
    }
    Ok(Normalized {
        witness: witness.clone(),
        normalized: false,
        attempts: retries + 1,
    })
}

/// Closed-form degree bounds for the invariants of `m`-tuples of `n x n`
/// matrices. These are bounds, not exact values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeBoundReport {
    pub n: u64,
    pub m: u64,
    /// Blow-up size that always suffices: `max(1, n - 1)`.
    pub delta_upper: u64,
    /// Invariant degree defining the null cone: `n * delta_upper`.
    pub gamma_upper: u64,
    /// Lower bound on the worst-case blow-up size: `floor(sqrt(n + 1))`.
    pub delta_lower: u64,
    pub gamma_lower: u64,
    /// Generating degree in characteristic 0: `min(m, n^2) * n^4`.
    pub beta_upper_char0: u64,
    /// `n^6`, valid for every `m`.
    pub beta_cap_char0: u64,
}

pub fn degree_bounds(n: u64, m: u64) -> Result<DegreeBoundReport> {
    if n == 0 || m == 0 {
        return Err(Error::precondition("degree bounds need n >= 1 and m >= 1"));
    }
    let overflow = || Error::precondition(format!("degree bounds overflow u64 at n = {n}"));
    let n2 = n.checked_mul(n).ok_or_else(overflow)?;
    let n4 = n2.checked_mul(n2).ok_or_else(overflow)?;
    let delta_upper = n.saturating_sub(1).max(1);
    let delta_lower = (n + 1).isqrt();
    Ok(DegreeBoundReport {
        n,
        m,
        delta_upper,
        gamma_upper: n * delta_upper,
        delta_lower,
        gamma_lower: n * delta_lower,
        beta_upper_char0: m.min(n2).checked_mul(n4).ok_or_else(overflow)?,
        beta_cap_char0: n4.checked_mul(n2).ok_or_else(overflow)?,
    })
}
