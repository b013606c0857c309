//! Dense matrices over an exact field.
//!
//! Entries are stored row-major. Gaussian elimination always pivots on the
//! first nonzero entry found scanning down the current column, so every
//! result is a deterministic function of the input.

use std::fmt;

use rand::Rng;

use super::field::Field;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| self.field.format_elem(e)).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<F: Field> Matrix<F> {
    pub fn new(field: F, rows: usize, cols: usize, data: Vec<F::Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(field: F, rows: usize, cols: usize) -> Self {
        let data = vec![field.zero(); rows * cols];
        Matrix {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn identity(field: F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = m.field.one();
        }
        m
    }

    pub fn diag(field: F, diagonal: &[F::Elem]) -> Self {
        let n = diagonal.len();
        let mut m = Self::zeros(field, n, n);
        for (i, d) in diagonal.iter().enumerate() {
            m.data[i * n + i] = d.clone();
        }
        m
    }

    /// Build from integer rows. Panics on ragged input; meant for literals.
    pub fn from_i64_rows(field: F, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix literal");
        let data = rows.iter().flatten().map(|&v| field.from_i64(v)).collect();
        Matrix {
            field,
            rows: r,
            cols: c,
            data,
        }
    }

    /// Matrix with every entry drawn independently from the field's sampler.
    pub fn random<R: Rng + ?Sized>(field: F, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        Matrix {
            field,
            rows,
            cols,
            data,
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F::Elem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F::Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[F::Elem] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| self.field.is_zero(e))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = self.get(i, j);
                    if i == j {
                        self.field.is_one(e)
                    } else {
                        self.field.is_zero(e)
                    }
                })
            })
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            field: self.field.clone(),
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&F::Elem, &F::Elem) -> F::Elem) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "cannot combine {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| op(a, b)).collect();
        Ok(Matrix {
            field: self.field.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| self.field.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| self.field.sub(a, b))
    }

    pub fn scale(&self, c: &F::Elem) -> Self {
        let data = self.data.iter().map(|a| self.field.mul(c, a)).collect();
        Matrix {
            field: self.field.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn neg(&self) -> Self {
        let data = self.data.iter().map(|a| self.field.neg(a)).collect();
        Matrix {
            field: self.field.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self += c * other`, shapes must agree.
    pub(crate) fn add_scaled_assign(&mut self, c: &F::Elem, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        if self.field.is_zero(c) {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !self.field.is_zero(b) {
                *a = self.field.add(a, &self.field.mul(c, b));
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Self::zeros(f.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !f.is_zero(b) {
                        let idx = i * other.cols + j;
                        out.data[idx] = f.add(&out.data[idx], &f.mul(a, b));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F::Elem]) -> Result<Vec<F::Elem>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let f = &self.field;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(f.zero(), |acc, (a, b)| f.add(&acc, &f.mul(a, b)))
            })
            .collect())
    }

    pub fn pow(&self, mut exp: u32) -> Result<Self> {
        self.require_square()?;
        let mut acc = Self::identity(self.field.clone(), self.rows);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Kronecker product: the `(i, j)` block of the result is `a_ij * other`.
    pub fn kronecker(&self, other: &Self) -> Self {
        let (p, q) = other.shape();
        let mut out = Self::zeros(self.field.clone(), self.rows * p, self.cols * q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if self.field.is_zero(a) {
                    continue;
                }
                for r in 0..p {
                    for c in 0..q {
                        out.set(i * p + r, j * q + c, self.field.mul(a, other.get(r, c)));
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal matrix `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(
            self.field.clone(),
            self.rows + other.rows,
            self.cols + other.cols,
        );
        out.write_block(0, 0, self);
        out.write_block(self.rows, self.cols, other);
        out
    }

    /// Overwrite the block whose top-left corner is `(r0, c0)`.
    pub fn write_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in r0..r0 + rows {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c0 + cols]);
        }
        Matrix {
            field: self.field.clone(),
            rows,
            cols,
            data,
        }
    }

    /// Reorder rows and columns: entry `(i, j)` of the result is
    /// `self[row_order[i]][col_order[j]]`.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Result<Self> {
        if row_order.len() != self.rows || col_order.len() != self.cols {
            return Err(Error::shape("permutation length does not match matrix shape"));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &i in row_order {
            for &j in col_order {
                data.push(self.get(i, j).clone());
            }
        }
        Ok(Matrix {
            field: self.field.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn rank(&self) -> usize {
        let mut work = self.data.clone();
        eliminate(&self.field, &mut work, self.rows, self.cols).rank
    }

    pub fn det(&self) -> Result<F::Elem> {
        self.require_square()?;
        let f = &self.field;
        let mut work = self.data.clone();
        let e = eliminate(f, &mut work, self.rows, self.cols);
        if e.rank < self.rows {
            return Ok(f.zero());
        }
        Ok(if e.swaps % 2 == 1 {
            f.neg(&e.pivot_product)
        } else {
            e.pivot_product
        })
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square()?;
        let f = &self.field;
        let n = self.rows;
        let w = 2 * n;
        let mut aug = Vec::with_capacity(n * w);
        for i in 0..n {
            aug.extend_from_slice(self.row(i));
            aug.extend((0..n).map(|j| if i == j { f.one() } else { f.zero() }));
        }
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !f.is_zero(&aug[r * w + col]))
                .ok_or(Error::Singular)?;
            if pivot != col {
                for j in 0..w {
                    aug.swap(pivot * w + j, col * w + j);
                }
            }
            let inv = f.inv(&aug[col * w + col]).expect("pivot is nonzero");
            for j in 0..w {
                aug[col * w + j] = f.mul(&inv, &aug[col * w + j]);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug[r * w + col].clone();
                if f.is_zero(&factor) {
                    continue;
                }
                for j in 0..w {
                    let sub = f.mul(&factor, &aug[col * w + j]);
                    aug[r * w + j] = f.sub(&aug[r * w + j], &sub);
                }
            }
        }
        let data = (0..n)
            .flat_map(|i| aug[i * w + n..(i + 1) * w].to_vec())
            .collect();
        Ok(Matrix {
            field: f.clone(),
            rows: n,
            cols: n,
            data,
        })
    }

    /// Characteristic polynomial `det(tI - A) = t^k + c_{k-1} t^{k-1} + ... + c_0`,
    /// returned as `[c_0, ..., c_{k-1}]`.
    ///
    /// Berkowitz's algorithm: only ring operations, so the result is valid
    /// over every field regardless of characteristic.
    pub fn charpoly(&self) -> Result<Vec<F::Elem>> {
        self.require_square()?;
        let f = &self.field;
        let n = self.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        // Coefficients of the charpoly of the leading r x r block, highest degree first.
        let mut poly = vec![f.one(), f.neg(self.get(0, 0))];
        for r in 1..n {
            // Toeplitz column: 1, -a_rr, -R C, -R A C, ..., -R A^{r-1} C
            let mut toeplitz = Vec::with_capacity(r + 2);
            toeplitz.push(f.one());
            toeplitz.push(f.neg(self.get(r, r)));
            let mut w: Vec<F::Elem> = (0..r).map(|i| self.get(i, r).clone()).collect();
            for step in 0..r {
                let dot = (0..r).fold(f.zero(), |acc, j| f.add(&acc, &f.mul(self.get(r, j), &w[j])));
                toeplitz.push(f.neg(&dot));
                if step + 1 < r {
                    w = (0..r)
                        .map(|i| {
                            (0..r).fold(f.zero(), |acc, j| f.add(&acc, &f.mul(self.get(i, j), &w[j])))
                        })
                        .collect();
                }
            }
            let next: Vec<F::Elem> = (0..r + 2)
                .map(|i| {
                    (0..=i.min(r)).fold(f.zero(), |acc, j| {
                        f.add(&acc, &f.mul(&toeplitz[i - j], &poly[j]))
                    })
                })
                .collect();
            poly = next;
        }
        // poly[i] is the coefficient of t^{n-i}
        Ok((0..n).map(|j| poly[n - j].clone()).collect())
    }

    /// Entries as decimal strings, one inner vector per row.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|e| self.field.format_elem(e)).collect())
            .collect()
    }

    /// Parse rows of decimal strings, checking them against an expected shape.
    pub fn from_strings(field: F, rows: usize, cols: usize, text: &[Vec<String>]) -> Result<Self> {
        if text.len() != rows || text.iter().any(|r| r.len() != cols) {
            return Err(Error::format(format!("expected a {rows}x{cols} matrix")));
        }
        let data = text
            .iter()
            .flatten()
            .map(|s| field.parse_elem(s))
            .collect::<Result<Vec<_>>>()?;
        Matrix::new(field, rows, cols, data)
    }

    /// Parse rows of decimal strings, taking the shape from the data.
    pub fn from_string_rows(field: F, text: &[Vec<String>]) -> Result<Self> {
        let rows = text.len();
        let cols = text.first().map_or(0, Vec::len);
        Self::from_strings(field, rows, cols, text)
    }
}

struct Echelon<E> {
    rank: usize,
    swaps: usize,
    pivot_product: E,
}

/// Forward elimination in place. Pivot: first nonzero entry at or below the
/// current pivot row in the current column.
fn eliminate<F: Field>(f: &F, a: &mut [F::Elem], rows: usize, cols: usize) -> Echelon<F::Elem> {
    let mut rank = 0;
    let mut swaps = 0;
    let mut pivot_product = f.one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !f.is_zero(&a[r * cols + col])) else {
            continue;
        };
        if pivot != rank {
            for j in col..cols {
                a.swap(pivot * cols + j, rank * cols + j);
            }
            swaps += 1;
        }
        let p = a[rank * cols + col].clone();
        pivot_product = f.mul(&pivot_product, &p);
        let inv = f.inv(&p).expect("pivot is nonzero");
        for r in rank + 1..rows {
            let lead = a[r * cols + col].clone();
            if f.is_zero(&lead) {
                continue;
            }
            let factor = f.mul(&lead, &inv);
            a[r * cols + col] = f.zero();
            for j in col + 1..cols {
                let pv = &a[rank * cols + j];
                if f.is_zero(pv) {
                    continue;
                }
                let sub = f.mul(&factor, pv);
                a[r * cols + j] = f.sub(&a[r * cols + j], &sub);
            }
        }
        rank += 1;
    }
    Echelon {
        rank,
        swaps,
        pivot_product,
    }
}
