//! Matrix pencils and their tensor blow-ups.
//!
//! A pencil is `X_0 + t_1 X_1 + ... + t_m X_m` with `k x n` coefficient
//! matrices; it is *affine* when the constant `X_0` is present and *linear*
//! otherwise. Substituting `p x q` matrices `T_i` for the `t_i` gives the
//! blow-up `X_0 (x) I_p + sum_i X_i (x) T_i` of shape `kp x nq`.
//!
//! [`blowup_rank`] samples random tuples and keeps the best rank seen. The
//! returned [`BlowupWitness`] carries the tuple, so the rank it claims is a
//! certified lower bound for the generic blow-up rank `r(p, q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::{Field, FieldSpec, Matrix};
use crate::rng::substream;

/// Default number of random tuples per blow-up rank estimate.
pub const DEFAULT_TRIALS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Pencil<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    constant: Option<Matrix<F>>,
    coeffs: Vec<Matrix<F>>,
}

impl<F: Field> Pencil<F> {
    pub fn new(
        field: F,
        rows: usize,
        cols: usize,
        constant: Option<Matrix<F>>,
        coeffs: Vec<Matrix<F>>,
    ) -> Result<Self> {
        for (i, x) in constant.iter().chain(&coeffs).enumerate() {
            if x.shape() != (rows, cols) {
                return Err(Error::shape(format!(
                    "coefficient {} is {}x{}, pencil is {rows}x{cols}",
                    i,
                    x.rows(),
                    x.cols()
                )));
            }
            if *x.field() != field {
                return Err(Error::shape("coefficients live in different fields"));
            }
        }
        Ok(Pencil {
            field,
            rows,
            cols,
            constant,
            coeffs,
        })
    }

    pub fn linear(field: F, rows: usize, cols: usize, coeffs: Vec<Matrix<F>>) -> Result<Self> {
        Self::new(field, rows, cols, None, coeffs)
    }

    /// Linear pencil from a non-empty tuple, shape taken from the first matrix.
    pub fn from_tuple(coeffs: Vec<Matrix<F>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::shape("cannot infer pencil shape from an empty tuple"))?;
        let (field, (rows, cols)) = (first.field().clone(), first.shape());
        Self::linear(field, rows, cols, coeffs)
    }

    /// Linear pencil with uniformly random coefficients.
    pub fn random_linear<R: rand::Rng + ?Sized>(
        field: F,
        rows: usize,
        cols: usize,
        vars: usize,
        rng: &mut R,
    ) -> Self {
        let coeffs = (0..vars)
            .map(|_| Matrix::random(field.clone(), rows, cols, rng))
            .collect();
        Pencil {
            field,
            rows,
            cols,
            constant: None,
            coeffs,
        }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn constant(&self) -> Option<&Matrix<F>> {
        self.constant.as_ref()
    }

    pub fn coeffs(&self) -> &[Matrix<F>] {
        &self.coeffs
    }

    pub fn is_affine(&self) -> bool {
        self.constant.is_some()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Evaluate at a tuple of equally shaped matrices. The blow-up shape is
    /// read off the tuple, so the tuple must be non-empty.
    pub fn blowup_eval(&self, tuple: &[Matrix<F>]) -> Result<Matrix<F>> {
        let (p, q) = tuple
            .first()
            .map(Matrix::shape)
            .ok_or_else(|| Error::shape("empty tuple: use blowup_eval_shaped"))?;
        self.blowup_eval_shaped(p, q, tuple)
    }

    /// `X_0 (x) I_p + sum_i X_i (x) T_i` for `p x q` matrices `T_i`.
    pub fn blowup_eval_shaped(&self, p: usize, q: usize, tuple: &[Matrix<F>]) -> Result<Matrix<F>> {
        if tuple.len() != self.vars() {
            return Err(Error::shape(format!(
                "tuple has {} matrices, pencil has {} variables",
                tuple.len(),
                self.vars()
            )));
        }
        if let Some(bad) = tuple.iter().find(|t| t.shape() != (p, q)) {
            return Err(Error::shape(format!(
                "tuple entry is {}x{}, expected {p}x{q}",
                bad.rows(),
                bad.cols()
            )));
        }
        if self.is_affine() && p != q {
            return Err(Error::shape(format!(
                "affine pencil needs square blow-ups, got {p}x{q}"
            )));
        }
        let mut out = Matrix::zeros(self.field.clone(), self.rows * p, self.cols * q);
        if let Some(c) = &self.constant {
            out = c.kronecker(&Matrix::identity(self.field.clone(), p));
        }
        for (x, t) in self.coeffs.iter().zip(tuple) {
            out.add_scaled_assign(&self.field.one(), &x.kronecker(t));
        }
        Ok(out)
    }

    /// Largest rank any blow-up of shape `(p, q)` can have.
    pub fn max_blowup_rank(&self, p: usize, q: usize) -> usize {
        (self.rows * p).min(self.cols * q)
    }

    pub fn to_json(&self) -> PencilJson {
        PencilJson {
            rows: self.rows,
            cols: self.cols,
            vars: self.vars(),
            field: self.field.spec(),
            constant: self.constant.as_ref().map(Matrix::to_strings),
            coeffs: self.coeffs.iter().map(Matrix::to_strings).collect(),
        }
    }

    /// Load a pencil whose `field` entry must describe `field`.
    pub fn from_json(field: F, json: &PencilJson) -> Result<Self> {
        if json.field != field.spec() {
            return Err(Error::format(format!(
                "pencil is over {}, expected {}",
                json.field,
                field.spec()
            )));
        }
        if json.coeffs.len() != json.vars {
            return Err(Error::format(format!(
                "\"vars\" is {} but {} coefficient matrices were given",
                json.vars,
                json.coeffs.len()
            )));
        }
        let parse = |m: &Vec<Vec<String>>| Matrix::from_strings(field.clone(), json.rows, json.cols, m);
        let constant = json.constant.as_ref().map(parse).transpose()?;
        let coeffs = json.coeffs.iter().map(parse).collect::<Result<Vec<_>>>()?;
        Self::new(field, json.rows, json.cols, constant, coeffs)
    }
}

/// Wire form of a pencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilJson {
    pub rows: usize,
    pub cols: usize,
    pub vars: usize,
    pub field: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<Vec<String>>>,
    pub coeffs: Vec<Vec<Vec<String>>>,
}

/// A tuple of `p x q` matrices together with the exact rank of the blow-up
/// it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupWitness<F: Field> {
    pub p: usize,
    pub q: usize,
    pub tuple: Vec<Matrix<F>>,
    pub achieved_rank: usize,
    /// Index of the trial that produced this tuple.
    pub trial: usize,
}

impl<F: Field> BlowupWitness<F> {
    /// Recompute the blow-up and compare its rank with `achieved_rank`.
    pub fn verify(&self, pencil: &Pencil<F>) -> Result<bool> {
        let m = pencil.blowup_eval_shaped(self.p, self.q, &self.tuple)?;
        Ok(m.rank() == self.achieved_rank)
    }

    pub fn is_full_rank(&self, pencil: &Pencil<F>) -> bool {
        self.achieved_rank == pencil.max_blowup_rank(self.p, self.q)
    }

    pub fn to_json(&self) -> WitnessJson {
        WitnessJson {
            p: self.p,
            q: self.q,
            tuple: self.tuple.iter().map(Matrix::to_strings).collect(),
            achieved_rank: self.achieved_rank,
            trial: self.trial,
        }
    }

    pub fn from_json(field: F, json: &WitnessJson) -> Result<Self> {
        let tuple = json
            .tuple
            .iter()
            .map(|m| Matrix::from_strings(field.clone(), json.p, json.q, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlowupWitness {
            p: json.p,
            q: json.q,
            tuple,
            achieved_rank: json.achieved_rank,
            trial: json.trial,
        })
    }
}

/// Wire form of a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub p: usize,
    pub q: usize,
    pub tuple: Vec<Vec<Vec<String>>>,
    pub achieved_rank: usize,
    #[serde(default)]
    pub trial: usize,
}

pub(crate) fn random_tuple<F: Field, R: rand::Rng + ?Sized>(
    field: &F,
    len: usize,
    p: usize,
    q: usize,
    rng: &mut R,
) -> Vec<Matrix<F>> {
    (0..len)
        .map(|_| Matrix::random(field.clone(), p, q, rng))
        .collect()
}

/// Sample `trials` uniform tuples of `p x q` matrices and return the one of
/// maximal blow-up rank (lowest trial index on ties).
///
/// Trial `i` draws from stream `i` of `seed`; trials run in parallel and the
/// result does not depend on scheduling.
pub fn blowup_rank<F: Field>(
    pencil: &Pencil<F>,
    p: usize,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<BlowupWitness<F>> {
    if trials == 0 {
        return Err(Error::precondition("at least one trial is required"));
    }
    if pencil.is_affine() && p != q {
        return Err(Error::shape(format!(
            "affine pencil needs square blow-ups, got {p}x{q}"
        )));
    }
    let samples = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, trial as u64);
            let tuple = random_tuple(pencil.field(), pencil.vars(), p, q, &mut rng);
            let rank = pencil.blowup_eval_shaped(p, q, &tuple)?.rank();
            Ok((rank, tuple))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, usize)> = None;
    for (trial, (rank, _)) in samples.iter().enumerate() {
        if best.is_none_or(|(r, _)| *rank > r) {
            best = Some((*rank, trial));
        }
    }
    let (achieved_rank, trial) = best.expect("trials >= 1");
    let tuple = samples.into_iter().nth(trial).expect("index in range").1;
    Ok(BlowupWitness {
        p,
        q,
        tuple,
        achieved_rank,
        trial,
    })
}

/// Schwartz-Zippel bound on the probability that one uniform sample misses
/// the generic rank: a maximal nonvanishing minor has degree at most
/// `min(kp, nq)` in the tuple entries.
pub fn per_trial_failure_bound<F: Field>(pencil: &Pencil<F>, p: usize, q: usize) -> f64 {
    (pencil.max_blowup_rank(p, q) as f64 / pencil.field().sample_space()).min(1.0)
}
