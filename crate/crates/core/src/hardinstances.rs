//! Pencils whose blow-ups are singular below a prescribed size.
//!
//! For `d >= 2`, [`build_fd`] assembles a `(d^2 - 1) x (d^2 - 1)` pencil in
//! `d + 1` variables `t_1, a, b_1, ..., b_{d-1}`. Substituting `t_1 = I_k` and
//! `k x k` matrices for the rest gives a matrix that is invertible exactly
//! when the block matrix
//!
//! ```text
//!          block column j = 0 .. d-1  (power A^{d-1-j})
//! N_d = [ A^{d-1} B_1      ...  A B_1      B_1     ]   block row 0
//!       [   ...                              ...   ]
//!       [ A^{d-1} B_{d-1}  ...  A B_{d-1}  B_{d-1} ]   block row d-2
//!       [ A^{d-1}          ...  A          I       ]   block row d-1
//! ```
//!
//! is. For `k < d` the characteristic polynomial of `A` gives an explicit
//! kernel vector of `N_d` ([`charpoly_kernel`]); at `k = d` the substitution
//! `A = diag(1, ..., d)`, `B_i = C^i` with `C` the long cycle makes `N_d` a
//! permuted block-diagonal of Vandermonde matrices. Hence the pencil is
//! outside the null cone but needs blow-ups of size `d`.
//!
//! Layout of `F_d` in units of `k x k` blocks:
//!
//! ```text
//! [ P_d                       I_d (x) B_1     ]   rows 0 .. d
//! [      P_d                  I_d (x) B_2     ]
//! [           ...             ...             ]
//! [               P_d         I_d (x) B_{d-1} ]
//! [                   P_{d-1} Q_d             ]   last d-1 rows
//! ```
//!
//! where `P_r` is `r x (r-1)` with `I` on the diagonal and `-A` below it, and
//! `Q_d` is `(d-1) x d` with `A` on the diagonal and `I` in its last column.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exactalg::{Field, Matrix};
use crate::nullcone::degree_bounds;
use crate::pencil::{random_tuple, Pencil};
use crate::rng::{derive_seed, substream};

/// `N_d` with block `(i, j)` equal to `A^{d-1-j} B_{i+1}` for `i < d - 1`
/// and `A^{d-1-j}` in the last block row.
pub fn build_nd<F: Field>(d: usize, a: &Matrix<F>, bs: &[Matrix<F>]) -> Result<Matrix<F>> {
    if d < 2 {
        return Err(Error::precondition("N_d needs d >= 2"));
    }
    if bs.len() != d - 1 {
        return Err(Error::shape(format!("N_{d} needs {} B matrices, got {}", d - 1, bs.len())));
    }
    let k = a.rows();
    if !a.is_square() || bs.iter().any(|b| b.shape() != (k, k)) {
        return Err(Error::shape("A and every B_i must be k x k"));
    }
    let field = a.field().clone();
    let powers = (0..d as u32).map(|e| a.pow(e)).collect::<Result<Vec<_>>>()?;
    let mut out = Matrix::zeros(field, d * k, d * k);
    for i in 0..d {
        for j in 0..d {
            let power = &powers[d - 1 - j];
            let block = if i + 1 < d { power.mul(&bs[i])? } else { power.clone() };
            out.write_block(i * k, j * k, &block);
        }
    }
    Ok(out)
}

/// Coefficients of `p(t) = t^k + c_{k-1} t^{k-1} + ... + c_0` laid out
/// against the block-column powers `t^{d-1}, ..., t^0`.
fn kernel_weights<F: Field>(d: usize, a: &Matrix<F>) -> Result<Vec<F::Elem>> {
    let field = a.field();
    let k = a.rows();
    if k >= d {
        return Err(Error::precondition(format!(
            "charpoly kernel needs k < d, got k = {k}, d = {d}"
        )));
    }
    let coeffs = a.charpoly()?;
    Ok((0..d)
        .map(|j| {
            let power = d - 1 - j;
            match power.cmp(&k) {
                std::cmp::Ordering::Greater => field.zero(),
                std::cmp::Ordering::Equal => field.one(),
                std::cmp::Ordering::Less => coeffs[power].clone(),
            }
        })
        .collect())
}

/// Kernel vector `w (x) u` of `N_d` for `k < d`: every block row of
/// `N_d (w (x) u)` equals `p(A) B_i u`, which vanishes by Cayley-Hamilton.
pub fn charpoly_kernel<F: Field>(
    d: usize,
    a: &Matrix<F>,
    bs: &[Matrix<F>],
    u: &[F::Elem],
) -> Result<Vec<F::Elem>> {
    let k = a.rows();
    if u.len() != k || bs.len() + 1 != d {
        return Err(Error::shape("u must have length k and there must be d - 1 B matrices"));
    }
    let field = a.field();
    let w = kernel_weights(d, a)?;
    Ok(w.iter()
        .flat_map(|wj| u.iter().map(move |ui| field.mul(wj, ui)))
        .collect())
}

/// The `dk x k` matrix whose columns are the kernel vectors for `u` running
/// over the standard basis of `K^k`.
pub fn charpoly_kernel_basis<F: Field>(d: usize, a: &Matrix<F>, bs: &[Matrix<F>]) -> Result<Matrix<F>> {
    let k = a.rows();
    let field = a.field().clone();
    let mut out = Matrix::zeros(field.clone(), d * k, k);
    for col in 0..k {
        let mut u = vec![field.zero(); k];
        u[col] = field.one();
        for (row, v) in charpoly_kernel(d, a, bs, &u)?.into_iter().enumerate() {
            out.set(row, col, v);
        }
    }
    Ok(out)
}

/// `F_d` together with its canonical invertible substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance<F: Field> {
    pub d: usize,
    /// Coefficients in variable order `t_1` (identity slot), `a`, `b_1..b_{d-1}`.
    pub pencil: Pencil<F>,
    pub lambdas: Vec<F::Elem>,
    /// `(I_d, diag(lambdas), C, C^2, ..., C^{d-1})`.
    pub canonical_tuple: Vec<Matrix<F>>,
}

impl<F: Field> HardInstance<F> {
    pub fn size(&self) -> usize {
        self.pencil.rows()
    }

    /// `(A, [B_1, ..., B_{d-1}])` of the canonical substitution.
    pub fn canonical_nd_inputs(&self) -> (&Matrix<F>, &[Matrix<F>]) {
        (&self.canonical_tuple[1], &self.canonical_tuple[2..])
    }
}

/// Permutation matrix of the long cycle `e_j -> e_{j+1 mod d}`.
pub fn long_cycle<F: Field>(field: F, d: usize) -> Matrix<F> {
    let mut c = Matrix::zeros(field.clone(), d, d);
    for j in 0..d {
        c.set((j + 1) % d, j, field.one());
    }
    c
}

/// `F_d` with `lambda_i = i`.
pub fn build_fd<F: Field>(field: F, d: usize) -> Result<HardInstance<F>> {
    let lambdas: Vec<_> = (1..=d as i64).map(|i| field.from_i64(i)).collect();
    build_fd_with_lambdas(field, d, lambdas)
}

/// `F_d` with a caller-chosen diagonal for the canonical `A`. Repeated
/// values are accepted; verification then fails on the invertibility clause.
pub fn build_fd_with_lambdas<F: Field>(field: F, d: usize, lambdas: Vec<F::Elem>) -> Result<HardInstance<F>> {
    if d < 2 {
        return Err(Error::precondition("F_d needs d >= 2"));
    }
    if lambdas.len() != d {
        return Err(Error::shape(format!("F_{d} needs {d} lambdas")));
    }
    let n = d * d - 1;
    let vars = d + 1;
    let (one, minus_one) = (field.one(), field.neg(&field.one()));
    let mut coeffs = vec![Matrix::zeros(field.clone(), n, n); vars];
    // variable slots
    let (ident, a) = (0usize, 1usize);
    let b = |i: usize| 1 + i;

    let right = (d - 1) * (d - 1) + (d - 2);
    for tower in 0..d - 1 {
        let (r0, c0) = (tower * d, tower * (d - 1));
        for j in 0..d - 1 {
            coeffs[ident].set(r0 + j, c0 + j, one.clone());
            coeffs[a].set(r0 + j + 1, c0 + j, minus_one.clone());
        }
        for j in 0..d {
            coeffs[b(tower + 1)].set(r0 + j, right + j, one.clone());
        }
    }
    let (r0, c0) = ((d - 1) * d, (d - 1) * (d - 1));
    for j in 0..d - 2 {
        coeffs[ident].set(r0 + j, c0 + j, one.clone());
        coeffs[a].set(r0 + j + 1, c0 + j, minus_one.clone());
    }
    for j in 0..d - 1 {
        coeffs[a].set(r0 + j, right + j, one.clone());
    }
    coeffs[ident].set(r0 + d - 2, right + d - 1, one.clone());

    let pencil = Pencil::linear(field.clone(), n, n, coeffs)?;
    let cycle = long_cycle(field.clone(), d);
    let mut canonical_tuple = vec![
        Matrix::identity(field.clone(), d),
        Matrix::diag(field.clone(), &lambdas),
    ];
    let mut power = cycle.clone();
    for _ in 1..d {
        canonical_tuple.push(power.clone());
        power = power.mul(&cycle)?;
    }
    Ok(HardInstance {
        d,
        pencil,
        lambdas,
        canonical_tuple,
    })
}

/// Clause (a) evidence at one substitution size `k < d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BelowSizeCheck {
    pub k: usize,
    pub trials: usize,
    /// Random substitutions with `t_1 = I_k` that came out singular.
    pub singular: usize,
    /// Largest rank seen among those substitutions.
    pub best_rank: usize,
    pub full_rank: usize,
    /// `N_d` times the charpoly kernel basis is exactly zero.
    pub kernel_residual_zero: bool,
    /// Rank of the kernel basis (equals `k` when the `k` vectors are independent).
    pub kernel_rank: usize,
    /// Probability that every sample is singular although some
    /// substitution of this size is not.
    pub failure_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalCheck {
    /// Determinant of `F_d` at the canonical substitution.
    pub fd_det: String,
    /// Determinant of `N_d` at the canonical `(A, B_i)`.
    pub nd_det: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardInstanceReport {
    pub d: usize,
    pub size: usize,
    pub vars: usize,
    pub below_size: Vec<BelowSizeCheck>,
    pub canonical: CanonicalCheck,
    pub delta_lower_from_bounds: u64,
    pub conclusion: String,
}

impl HardInstanceReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn fail(clause: &str, detail: String) -> Error {
    Error::VerificationFailed {
        clause: clause.to_string(),
        detail,
    }
}

/// Check that `inst` certifies blow-up size `d`:
///
/// * (a) for each `k < d`, `trials` random substitutions with `t_1 = I_k`
///   are all singular, and `N_d` at a random `k x k` input is annihilated by
///   its charpoly kernel (exact);
/// * (b) the canonical `d x d` substitution is invertible (exact);
/// * (c) the degree-bound formula gives `delta_lower = d` for `n = d^2 - 1`.
pub fn verify_hard_instance<F: Field>(inst: &HardInstance<F>, trials: usize, seed: u64) -> Result<HardInstanceReport> {
    let d = inst.d;
    let field = inst.pencil.field().clone();
    let n = inst.size();
    let vars = inst.pencil.vars();
    if trials == 0 {
        return Err(Error::precondition("at least one trial is required"));
    }

    let mut below_size = Vec::with_capacity(d - 1);
    for k in 1..d {
        let full_rank = n * k;
        let k_seed = derive_seed(seed, k as u64);
        let mut singular = 0;
        let mut best_rank = 0;
        for trial in 0..trials {
            let mut rng = substream(k_seed, trial as u64);
            let mut tuple = vec![Matrix::identity(field.clone(), k)];
            tuple.extend(random_tuple(&field, vars - 1, k, k, &mut rng));
            let rank = inst.pencil.blowup_eval_shaped(k, k, &tuple)?.rank();
            best_rank = best_rank.max(rank);
            if rank < full_rank {
                singular += 1;
            } else {
                return Err(fail(
                    "a",
                    format!("substitution of size {k} (trial {trial}) is invertible"),
                ));
            }
        }

        let mut rng = substream(derive_seed(seed, 1_000 + k as u64), 0);
        let a = Matrix::random(field.clone(), k, k, &mut rng);
        let bs = random_tuple(&field, d - 1, k, k, &mut rng);
        let nd = build_nd(d, &a, &bs)?;
        let basis = charpoly_kernel_basis(d, &a, &bs)?;
        let kernel_residual_zero = nd.mul(&basis)?.is_zero();
        let kernel_rank = basis.rank();
        if !kernel_residual_zero || kernel_rank != k {
            return Err(fail(
                "a",
                format!("charpoly kernel of N_{d} at size {k} does not certify singularity"),
            ));
        }
        let per_trial = (full_rank as f64 / field.sample_space()).min(1.0);
        below_size.push(BelowSizeCheck {
            k,
            trials,
            singular,
            best_rank,
            full_rank,
            kernel_residual_zero,
            kernel_rank,
            failure_bound: per_trial.powi(trials as i32),
        });
    }

    let fd_det = inst.pencil.blowup_eval(&inst.canonical_tuple)?.det()?;
    let (a, bs) = inst.canonical_nd_inputs();
    let nd_det = build_nd(d, a, bs)?.det()?;
    if field.is_zero(&fd_det) || field.is_zero(&nd_det) {
        return Err(fail(
            "b",
            format!("canonical substitution of size {d} is singular (lambdas not pairwise distinct?)"),
        ));
    }

    let bounds = degree_bounds(n as u64, vars as u64)?;
    if bounds.delta_lower != d as u64 {
        return Err(fail(
            "c",
            format!("delta_lower({n}) = {} differs from d = {d}", bounds.delta_lower),
        ));
    }

    Ok(HardInstanceReport {
        d,
        size: n,
        vars,
        below_size,
        canonical: CanonicalCheck {
            fd_det: field.format_elem(&fd_det),
            nd_det: field.format_elem(&nd_det),
        },
        delta_lower_from_bounds: bounds.delta_lower,
        conclusion: format!("delta({n}) >= {d}"),
    })
}
