//! Acyclic quivers, their semi-invariant pencils and weight semistability.
//!
//! For a representation `V` of dimension `alpha` and a weight `sigma` with
//! `sigma . alpha = 0`, the semi-invariants of weight `sigma` are spanned by
//! `det` of the linear matrix
//!
//! ```text
//! A : (+)_x V(x)^{sigma_+(x)}  -->  (+)_y V(y)^{sigma_-(y)}
//! ```
//!
//! whose block from a copy of `x` to a copy of `y` is `sum_p t_p V(p)` over
//! all paths `p: x -> y`, with fresh variables in every block. `V` is
//! semistable exactly when that pencil is not in the null cone, so the null
//! cone test decides it with a blow-up of size `max(1, n - 1)`.
//!
//! Ordering conventions: vertices and arrows keep their declaration order,
//! paths are listed by depth-first search taking arrows in declaration
//! order, block rows/columns are vertex-major then copy index, and
//! variables are numbered by (source copy, sink copy, path) in that order.

use std::collections::{BTreeMap, HashMap};

use num_integer::Integer;
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactalg::{Field, Matrix};
use crate::nullcone::{decisive_blowup_size, full_rank_test, FullRankVerdict};
use crate::pencil::Pencil;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub tail: usize,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    vertices: Vec<String>,
    arrows: Vec<Arrow>,
}

/// Arrows `a_1, ..., a_k` in the order they are traversed, so
/// `V(p) = V(a_k) ... V(a_1)`. Empty for the trivial path at `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub source: usize,
    pub target: usize,
    pub arrows: Vec<usize>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.arrows.is_empty()
    }
}

impl Quiver {
    /// Arrows are `(name, tail, head)` with endpoints given by vertex name.
    pub fn new(vertices: Vec<String>, arrows: Vec<(String, String, String)>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::format(format!("duplicate vertex `{v}`")));
            }
        }
        let lookup = |v: &str| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| Error::format(format!("unknown vertex `{v}`")))
        };
        let mut names = HashMap::new();
        let mut out = Vec::with_capacity(arrows.len());
        for (name, tail, head) in arrows {
            if names.insert(name.clone(), ()).is_some() || index.contains_key(&name) {
                return Err(Error::format(format!("duplicate name `{name}`")));
            }
            out.push(Arrow {
                tail: lookup(&tail)?,
                head: lookup(&head)?,
                name,
            });
        }
        let mut graph = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = vertices.iter().map(|_| graph.add_node(())).collect();
        for a in &out {
            graph.add_edge(nodes[a.tail], nodes[a.head], ());
        }
        if is_cyclic_directed(&graph) {
            return Err(Error::CyclicQuiver);
        }
        Ok(Quiver { vertices, arrows: out })
    }

    /// `theta(m)`: vertices `x`, `y` and arrows `a1..am` from `x` to `y`.
    pub fn kronecker(m: usize) -> Self {
        let arrows = (1..=m)
            .map(|i| (format!("a{i}"), "x".to_string(), "y".to_string()))
            .collect();
        Quiver::new(vec!["x".into(), "y".into()], arrows).expect("theta(m) is acyclic")
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// All paths from `x` to `y`, including the trivial path when `x == y`.
    pub fn paths(&self, x: usize, y: usize) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.walk(x, y, &mut stack, &mut out);
        out.into_iter()
            .map(|arrows| Path {
                source: x,
                target: y,
                arrows,
            })
            .collect()
    }

    fn walk(&self, at: usize, y: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == y {
            out.push(stack.clone());
        }
        for (i, a) in self.arrows.iter().enumerate() {
            if a.tail == at {
                stack.push(i);
                self.walk(a.head, y, stack, out);
                stack.pop();
            }
        }
    }
}

/// `sigma_+(x) = max(sigma(x), 0)`.
pub fn sigma_plus(sigma: &[i64]) -> Vec<usize> {
    sigma.iter().map(|s| (*s).max(0) as usize).collect()
}

/// `sigma_-(x) = max(-sigma(x), 0)`.
pub fn sigma_minus(sigma: &[i64]) -> Vec<usize> {
    sigma.iter().map(|s| (-*s).max(0) as usize).collect()
}

/// `sigma . alpha`.
pub fn pairing(alpha: &[usize], sigma: &[i64]) -> i64 {
    alpha.iter().zip(sigma).map(|(a, s)| *a as i64 * s).sum()
}

/// One matrix per arrow, `V(a)` of shape `alpha(head) x alpha(tail)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation<F: Field> {
    pub maps: Vec<Matrix<F>>,
}

impl<F: Field> Representation<F> {
    pub fn new(quiver: &Quiver, alpha: &[usize], maps: Vec<Matrix<F>>) -> Result<Self> {
        check_dim(quiver, alpha)?;
        if maps.len() != quiver.arrows.len() {
            return Err(Error::shape(format!(
                "{} arrows but {} matrices",
                quiver.arrows.len(),
                maps.len()
            )));
        }
        for (a, m) in quiver.arrows.iter().zip(&maps) {
            let want = (alpha[a.head], alpha[a.tail]);
            if m.shape() != want {
                return Err(Error::shape(format!(
                    "V({}) is {}x{}, expected {}x{}",
                    a.name,
                    m.rows(),
                    m.cols(),
                    want.0,
                    want.1
                )));
            }
        }
        Ok(Representation { maps })
    }

    /// Uniformly random representation.
    pub fn random<R: rand::Rng + ?Sized>(field: &F, quiver: &Quiver, alpha: &[usize], rng: &mut R) -> Self {
        let maps = quiver
            .arrows
            .iter()
            .map(|a| Matrix::random(field.clone(), alpha[a.head], alpha[a.tail], rng))
            .collect();
        Representation { maps }
    }

    /// `V(p)`, the identity on `V(x)` for a trivial path.
    pub fn eval_path(&self, field: &F, alpha: &[usize], path: &Path) -> Result<Matrix<F>> {
        let mut out = Matrix::identity(field.clone(), alpha[path.source]);
        for a in &path.arrows {
            out = self.maps[*a].mul(&out)?;
        }
        Ok(out)
    }
}

fn check_dim(quiver: &Quiver, alpha: &[usize]) -> Result<()> {
    if alpha.len() != quiver.vertices.len() {
        return Err(Error::shape(format!(
            "dimension vector has {} entries for {} vertices",
            alpha.len(),
            quiver.vertices.len()
        )));
    }
    Ok(())
}

/// Number of variables of the semi-invariant pencil:
/// `sum_{x,y} sigma_+(x) |paths(x, y)| sigma_-(y)`.
pub fn semi_pencil_vars(quiver: &Quiver, sigma: &[i64]) -> usize {
    let (plus, minus) = (sigma_plus(sigma), sigma_minus(sigma));
    let nv = quiver.vertices.len();
    (0..nv)
        .flat_map(|x| (0..nv).map(move |y| (x, y)))
        .map(|(x, y)| plus[x] * quiver.paths(x, y).len() * minus[y])
        .sum()
}

/// The square linear pencil whose determinant spans the weight-`sigma`
/// semi-invariants.
pub fn build_semi_pencil<F: Field>(
    field: &F,
    quiver: &Quiver,
    alpha: &[usize],
    sigma: &[i64],
    rep: &Representation<F>,
) -> Result<Pencil<F>> {
    check_dim(quiver, alpha)?;
    if sigma.len() != alpha.len() {
        return Err(Error::shape("weight and dimension vector differ in length"));
    }
    let pair = pairing(alpha, sigma);
    if pair != 0 {
        return Err(Error::NonzeroPairing(pair));
    }
    let (plus, minus) = (sigma_plus(sigma), sigma_minus(sigma));
    let nv = quiver.vertices.len();
    // block offsets, vertex-major then copy
    let mut col_blocks = Vec::new();
    let mut row_blocks = Vec::new();
    let (mut cols, mut rows) = (0, 0);
    for x in 0..nv {
        for _ in 0..plus[x] {
            col_blocks.push((x, cols));
            cols += alpha[x];
        }
        for _ in 0..minus[x] {
            row_blocks.push((x, rows));
            rows += alpha[x];
        }
    }
    debug_assert_eq!(rows, cols);
    let n = rows;

    let mut path_values: BTreeMap<(usize, usize), Vec<Matrix<F>>> = BTreeMap::new();
    let mut coeffs = Vec::new();
    for &(x, c0) in &col_blocks {
        for &(y, r0) in &row_blocks {
            if let std::collections::btree_map::Entry::Vacant(e) = path_values.entry((x, y)) {
                let values = quiver
                    .paths(x, y)
                    .iter()
                    .map(|p| rep.eval_path(field, alpha, p))
                    .collect::<Result<Vec<_>>>()?;
                e.insert(values);
            }
            for value in &path_values[&(x, y)] {
                let mut coeff = Matrix::zeros(field.clone(), n, n);
                coeff.write_block(r0, c0, value);
                coeffs.push(coeff);
            }
        }
    }
    Pencil::linear(field.clone(), n, n, coeffs)
}

/// Semistability verdict together with the pencil it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct SemistabilityVerdict<F: Field> {
    pub pencil: Pencil<F>,
    pub verdict: FullRankVerdict<F>,
}

impl<F: Field> SemistabilityVerdict<F> {
    pub fn is_semistable(&self) -> bool {
        self.verdict.is_full()
    }

    pub fn to_json(&self) -> Value {
        let field = self.pencil.field();
        let mut out = match &self.verdict {
            FullRankVerdict::Full { witness, det } => json!({
                "status": "Semistable",
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
                "status": "UnstableWhp",
                "blowup": blowup,
                "trials": trials,
                "best_rank": best_rank,
                "failure_bound": failure_bound,
            }),
        };
        out["pencil"] = serde_json::to_value(self.pencil.to_json()).expect("pencil serializes");
        out
    }
}

/// Decide weight-`sigma` semistability of `rep` by the null cone test on
/// its semi-invariant pencil.
pub fn is_semistable<F: Field>(
    field: &F,
    quiver: &Quiver,
    alpha: &[usize],
    sigma: &[i64],
    rep: &Representation<F>,
    trials: usize,
    seed: u64,
) -> Result<SemistabilityVerdict<F>> {
    let pencil = build_semi_pencil(field, quiver, alpha, sigma, rep)?;
    if pencil.rows() == 0 {
        return Err(Error::precondition(
            "weight vanishes on the support of the dimension vector (0 x 0 pencil)",
        ));
    }
    let d = decisive_blowup_size(pencil.rows());
    let verdict = full_rank_test(&pencil, d, trials, seed)?;
    Ok(SemistabilityVerdict { pencil, verdict })
}

/// `SL_p x SL_q` semistability of a tuple of `p x q` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PqVerdict<F: Field> {
    pub p: usize,
    pub q: usize,
    pub lcm: usize,
    pub sigma: [i64; 2],
    pub inner: SemistabilityVerdict<F>,
}

impl<F: Field> PqVerdict<F> {
    pub fn is_semistable(&self) -> bool {
        self.inner.is_semistable()
    }

    /// `(pq lcm(p, q))^2`, the degree bound for generating invariants.
    pub fn degree_bound(&self) -> u128 {
        let v = (self.p * self.q * self.lcm) as u128;
        v * v
    }

    pub fn to_json(&self) -> Value {
        let mut out = self.inner.to_json();
        out["p"] = json!(self.p);
        out["q"] = json!(self.q);
        out["lcm"] = json!(self.lcm);
        out["weight"] = json!(self.sigma);
        out["invariant_degree_bound"] = json!(self.degree_bound().to_string());
        out
    }
}

/// Run the Kronecker-quiver test with `alpha = (p, q)`,
/// `sigma = (q / gcd, -p / gcd)` and `V(a_i) = X_i^T`. The pencil has size
/// `lcm(p, q)`, so the blow-up is `lcm(p, q) - 1` (or 1).
pub fn pq_full_test<F: Field>(xs: &[Matrix<F>], trials: usize, seed: u64) -> Result<PqVerdict<F>> {
    let first = xs
        .first()
        .ok_or_else(|| Error::shape("need at least one matrix"))?;
    let (p, q) = first.shape();
    if let Some(bad) = xs.iter().find(|x| x.shape() != (p, q)) {
        return Err(Error::shape(format!(
            "all matrices must be {p}x{q}, found {}x{}",
            bad.rows(),
            bad.cols()
        )));
    }
    if p == 0 || q == 0 {
        return Err(Error::precondition("p and q must be positive"));
    }
    let field = first.field().clone();
    let g = p.gcd(&q);
    let sigma = [(q / g) as i64, -((p / g) as i64)];
    let quiver = Quiver::kronecker(xs.len());
    let alpha = [p, q];
    let rep = Representation::new(&quiver, &alpha, xs.iter().map(Matrix::transpose).collect())?;
    let inner = is_semistable(&field, &quiver, &alpha, &sigma, &rep, trials, seed)?;
    Ok(PqVerdict {
        p,
        q,
        lcm: p.lcm(&q),
        sigma,
        inner,
    })
}

/// A quiver problem read from JSON:
/// `{"vertices": [..], "arrows": [{"name", "tail", "head"}], "dim": {..},
///   "weight": {..}, "rep": {"<arrow>": [[..]]}}`.
/// Missing `dim`/`weight` entries default to 0. Matrix entries may be JSON
/// integers or strings in the field's text format.
#[derive(Debug, Clone, PartialEq)]
pub struct QuiverInstance<F: Field> {
    pub quiver: Quiver,
    pub alpha: Vec<usize>,
    pub sigma: Vec<i64>,
    pub rep: Representation<F>,
}

fn entry_text(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::format(format!("matrix entry must be a string or integer, got {other}"))),
    }
}

/// Parse a JSON array of rows into a `rows x cols` matrix.
pub fn matrix_from_value<F: Field>(field: &F, rows: usize, cols: usize, v: &Value) -> Result<Matrix<F>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::format("matrix must be an array of rows"))?;
    let text = arr
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::format("matrix row must be an array"))?
                .iter()
                .map(entry_text)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    // a zero-column matrix may be written as [] or as rows of []
    if cols == 0 && text.iter().all(Vec::is_empty) && (text.is_empty() || text.len() == rows) {
        return Ok(Matrix::zeros(field.clone(), rows, 0));
    }
    Matrix::from_strings(field.clone(), rows, cols, &text)
}

impl<F: Field> QuiverInstance<F> {
    pub fn from_json(field: &F, v: &Value) -> Result<Self> {
        let str_list = |key: &str| -> Result<&Vec<Value>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format(format!("missing array `{key}`")))
        };
        let vertices = str_list("vertices")?
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::format("vertex names must be strings"))
            })
            .collect::<Result<Vec<_>>>()?;
        let arrows = str_list("arrows")?
            .iter()
            .map(|a| {
                let field = |k: &str| {
                    a.get(k)
                        .and_then(Value::as_str)
                        .map(str::to_string)
                        .ok_or_else(|| Error::format(format!("arrow needs string `{k}`")))
                };
                Ok((field("name")?, field("tail")?, field("head")?))
            })
            .collect::<Result<Vec<_>>>()?;
        let quiver = Quiver::new(vertices, arrows)?;

        let per_vertex = |key: &str| -> Result<Vec<i64>> {
            let mut out = vec![0; quiver.vertices.len()];
            let Some(map) = v.get(key) else { return Ok(out) };
            let map = map
                .as_object()
                .ok_or_else(|| Error::format(format!("`{key}` must be an object")))?;
            for (name, val) in map {
                let i = quiver
                    .vertex_index(name)
                    .ok_or_else(|| Error::format(format!("`{key}` names unknown vertex `{name}`")))?;
                out[i] = val
                    .as_i64()
                    .ok_or_else(|| Error::format(format!("`{key}.{name}` must be an integer")))?;
            }
            Ok(out)
        };
        let alpha = per_vertex("dim")?
            .into_iter()
            .map(|a| usize::try_from(a).map_err(|_| Error::format("dimensions must be nonnegative")))
            .collect::<Result<Vec<_>>>()?;
        let sigma = per_vertex("weight")?;

        let rep_obj = v.get("rep").and_then(Value::as_object);
        let mut maps = Vec::with_capacity(quiver.arrows.len());
        for a in &quiver.arrows {
            let (rows, cols) = (alpha[a.head], alpha[a.tail]);
            let m = match rep_obj.and_then(|r| r.get(&a.name)) {
                Some(val) => matrix_from_value(field, rows, cols, val)?,
                None if rows * cols == 0 => Matrix::zeros(field.clone(), rows, cols),
                None => return Err(Error::format(format!("no matrix for arrow `{}`", a.name))),
            };
            maps.push(m);
        }
        if let Some(obj) = rep_obj {
            if let Some(extra) = obj.keys().find(|k| !quiver.arrows.iter().any(|a| &a.name == *k)) {
                return Err(Error::format(format!("`rep` names unknown arrow `{extra}`")));
            }
        }
        let rep = Representation::new(&quiver, &alpha, maps)?;
        Ok(QuiverInstance {
            quiver,
            alpha,
            sigma,
            rep,
        })
    }

    pub fn to_json(&self) -> Value {
        let q = &self.quiver;
        json!({
            "vertices": q.vertices,
            "arrows": q.arrows.iter().map(|a| json!({
                "name": a.name,
                "tail": q.vertices[a.tail],
                "head": q.vertices[a.head],
            })).collect::<Vec<_>>(),
            "dim": q.vertices.iter().cloned().zip(self.alpha.iter().copied()).collect::<BTreeMap<_, _>>(),
            "weight": q.vertices.iter().cloned().zip(self.sigma.iter().copied()).collect::<BTreeMap<_, _>>(),
            "rep": q.arrows.iter().zip(&self.rep.maps)
                .map(|(a, m)| (a.name.clone(), m.to_strings()))
                .collect::<BTreeMap<_, _>>(),
        })
    }

    pub fn semistable(&self, field: &F, trials: usize, seed: u64) -> Result<SemistabilityVerdict<F>> {
        is_semistable(field, &self.quiver, &self.alpha, &self.sigma, &self.rep, trials, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::PrimeField;
    use crate::nullcone::in_nullcone;
    use crate::pencil::blowup_rank;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf() -> PrimeField {
        PrimeField::default()
    }

    fn quiver(vertices: &[&str], arrows: &[(&str, &str, &str)]) -> Result<Quiver> {
        Quiver::new(
            vertices.iter().map(|s| s.to_string()).collect(),
            arrows
                .iter()
                .map(|(n, t, h)| (n.to_string(), t.to_string(), h.to_string()))
                .collect(),
        )
    }

    #[test]
    fn path_enumeration() {
        let theta = Quiver::kronecker(3);
        let ps = theta.paths(0, 1);
        assert_eq!(ps.iter().map(|p| p.arrows.clone()).collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
        let trivial = theta.paths(0, 0);
        assert_eq!(trivial.len(), 1);
        assert!(trivial[0].is_trivial());
        assert!(theta.paths(1, 0).is_empty());

        let chain = quiver(&["x", "y", "z"], &[("a", "x", "y"), ("b", "y", "z")]).unwrap();
        let ps = chain.paths(0, 2);
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].arrows, vec![0, 1]);
        assert_eq!(ps[0].len(), 2);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            quiver(&["x", "y"], &[("a", "x", "y"), ("b", "y", "x")]),
            Err(Error::CyclicQuiver)
        ));
        assert!(matches!(quiver(&["x"], &[("a", "x", "x")]), Err(Error::CyclicQuiver)));
        assert!(matches!(quiver(&["x", "x"], &[]), Err(Error::Format(_))));
        assert!(matches!(quiver(&["x", "y"], &[("a", "x", "y"), ("a", "x", "y")]), Err(Error::Format(_))));
        assert!(matches!(quiver(&["x"], &[("a", "x", "w")]), Err(Error::Format(_))));
    }

    #[test]
    fn theta_pencil_is_the_tuple() {
        let f = gf();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = Quiver::kronecker(3);
        let rep = Representation::random(&f, &theta, &[2, 2], &mut rng);
        let pencil = build_semi_pencil(&f, &theta, &[2, 2], &[1, -1], &rep).unwrap();
        assert_eq!(pencil.coeffs(), rep.maps.as_slice());
    }

    #[test]
    fn theta2_scalar_pencil() {
        let f = gf();
        let theta = Quiver::kronecker(2);
        let rep = Representation::new(&theta, &[1, 1], vec![Matrix::diag(f, &[5]), Matrix::diag(f, &[7])]).unwrap();
        let pencil = build_semi_pencil(&f, &theta, &[1, 1], &[1, -1], &rep).unwrap();
        assert_eq!((pencil.rows(), pencil.vars()), (1, 2));
        assert_eq!(pencil.coeffs()[0].get(0, 0), &5);
        assert_eq!(pencil.coeffs()[1].get(0, 0), &7);
    }

    #[test]
    fn nonzero_pairing_rejected() {
        let f = gf();
        let theta = Quiver::kronecker(1);
        let rep = Representation::random(&f, &theta, &[1, 2], &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(
            build_semi_pencil(&f, &theta, &[1, 2], &[1, -1], &rep),
            Err(Error::NonzeroPairing(-1))
        ));
    }

    #[test]
    fn semistability_examples() {
        let f = gf();
        let theta = Quiver::kronecker(2);
        let rep = Representation::new(&theta, &[1, 1], vec![Matrix::diag(f, &[1]), Matrix::diag(f, &[0])]).unwrap();
        let v = is_semistable(&f, &theta, &[1, 1], &[1, -1], &rep, 8, 0).unwrap();
        assert!(v.is_semistable());
        assert_eq!(v.verdict.witness().unwrap().p, 1);

        let zero = Representation::new(&theta, &[2, 2], vec![Matrix::zeros(f, 2, 2), Matrix::zeros(f, 2, 2)]).unwrap();
        let v = is_semistable(&f, &theta, &[2, 2], &[1, -1], &zero, 8, 0).unwrap();
        assert!(!v.is_semistable());
        assert_eq!(v.to_json()["status"], "UnstableWhp");
    }

    #[test]
    fn pq_examples() {
        let f = gf();
        // a single 1 x 2 matrix has only constant SL_1 x SL_2 invariants
        let v = pq_full_test(&[Matrix::from_i64_rows(f, &[vec![1, 0]])], 8, 0).unwrap();
        assert!(!v.is_semistable());
        assert_eq!((v.lcm, v.sigma, v.inner.pencil.rows()), (2, [2, -1], 2));

        let two = [Matrix::from_i64_rows(f, &[vec![1, 0]]), Matrix::from_i64_rows(f, &[vec![0, 1]])];
        let v = pq_full_test(&two, 8, 0).unwrap();
        assert!(v.is_semistable());
        assert_eq!(v.inner.verdict.witness().unwrap().p, 1);

        let zeros = vec![Matrix::zeros(f, 2, 3); 3];
        let v = pq_full_test(&zeros, 8, 0).unwrap();
        assert!(!v.is_semistable());
        assert_eq!(v.lcm, 6);
        assert_eq!(v.to_json()["blowup"], 5);
        assert_eq!(v.to_json()["invariant_degree_bound"], "1296");

        let mixed = [Matrix::zeros(f, 2, 3), Matrix::zeros(f, 3, 2)];
        assert!(matches!(pq_full_test(&mixed, 8, 0), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn pq_square_reduces_to_nullcone() {
        let f = gf();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let xs: Vec<_> = (0..2).map(|_| Matrix::random(f, n, n, &mut rng)).collect();
            let pq = pq_full_test(&xs, 8, 1).unwrap();
            let nc = in_nullcone(&Pencil::from_tuple(xs.clone()).unwrap(), 8, 1).unwrap();
            assert_eq!(pq.is_semistable(), !nc.in_nullcone());
            assert_eq!(pq.lcm, n);
        }
    }

    #[test]
    fn kronecker_pq_pencil_has_size_lcm() {
        let f = gf();
        for (p, q) in [(1, 2), (2, 3), (2, 4), (3, 3), (4, 6)] {
            let xs = vec![Matrix::zeros(f, p, q); 2];
            let v = pq_full_test(&xs, 1, 0).unwrap();
            assert_eq!(v.inner.pencil.rows(), p.lcm(&q));
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "vertices": ["x", "y", "z"],
            "arrows": [{"name": "a", "tail": "x", "head": "y"},
                       {"name": "b", "tail": "y", "head": "z"},
                       {"name": "c", "tail": "x", "head": "z"}],
            "dim": {"x": 1, "y": 1, "z": 1},
            "weight": {"x": 1, "z": -1},
            "rep": {"a": [[2]], "b": [["3"]], "c": [[1]]}
        }"#;
        let f = gf();
        let inst = QuiverInstance::from_json(&f, &serde_json::from_str(text).unwrap()).unwrap();
        let back = QuiverInstance::from_json(&f, &inst.to_json()).unwrap();
        assert_eq!(inst, back);
        // x -> z has paths b.a and c: pencil t_1 * 6 + t_2 * 1
        let pencil = build_semi_pencil(&f, &inst.quiver, &inst.alpha, &inst.sigma, &inst.rep).unwrap();
        assert_eq!(pencil.vars(), 2);
        assert_eq!(pencil.coeffs()[0].get(0, 0), &6);
        assert!(inst.semistable(&f, 4, 0).unwrap().is_semistable());

        let bad = serde_json::json!({"vertices": ["x"], "arrows": [], "dim": {"w": 1}});
        assert!(matches!(QuiverInstance::<PrimeField>::from_json(&f, &bad), Err(Error::Format(_))));
    }

    fn random_quiver(rng: &mut ChaCha8Rng, nv: usize, na: usize) -> Quiver {
        use rand::Rng;
        let vertices = (0..nv).map(|i| format!("v{i}")).collect();
        // arrows go from lower to higher index, so the quiver is acyclic
        let arrows = (0..na)
            .map(|i| {
                let t = rng.gen_range(0..nv - 1);
                let h = rng.gen_range(t + 1..nv);
                (format!("e{i}"), format!("v{t}"), format!("v{h}"))
            })
            .collect();
        Quiver::new(vertices, arrows).unwrap()
    }

    /// Weight with sigma . alpha = 0: alpha entries in 1..=2, sigma on the
    /// first vertex balanced against the last.
    fn balanced(rng: &mut ChaCha8Rng, nv: usize) -> (Vec<usize>, Vec<i64>) {
        use rand::Rng;
        let alpha: Vec<usize> = (0..nv).map(|_| rng.gen_range(1..=2)).collect();
        let mut sigma = vec![0i64; nv];
        let (a, b) = (alpha[0] as i64, alpha[nv - 1] as i64);
        let g = a.gcd(&b);
        let k = rng.gen_range(1..=2);
        sigma[0] = k * b / g;
        sigma[nv - 1] = -k * a / g;
        (alpha, sigma)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pencil_size_and_variable_count(seed in any::<u64>(), nv in 2usize..5, na in 1usize..6) {
            let f = gf();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_quiver(&mut rng, nv, na);
            let (alpha, sigma) = balanced(&mut rng, nv);
            let rep = Representation::random(&f, &q, &alpha, &mut rng);
            let pencil = build_semi_pencil(&f, &q, &alpha, &sigma, &rep).unwrap();
            let plus: usize = sigma_plus(&sigma).iter().zip(&alpha).map(|(s, a)| s * a).sum();
            let minus: usize = sigma_minus(&sigma).iter().zip(&alpha).map(|(s, a)| s * a).sum();
            prop_assert_eq!(pencil.rows(), plus);
            prop_assert_eq!(pencil.cols(), minus);
            prop_assert_eq!(pencil.vars(), semi_pencil_vars(&q, &sigma));
        }

        #[test]
        fn theta_equivalence(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, sparse in any::<bool>()) {
            let f = gf();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = Quiver::kronecker(m);
            let mut rep = Representation::random(&f, &theta, &[n, n], &mut rng);
            if sparse {
                // rank-one maps with a common kernel vector are unstable
                for x in &mut rep.maps {
                    for i in 0..n {
                        x.set(i, 0, 0);
                    }
                }
            }
            let q = is_semistable(&f, &theta, &[n, n], &[1, -1], &rep, 8, seed).unwrap();
            let nc = in_nullcone(&Pencil::from_tuple(rep.maps.clone()).unwrap(), 8, seed).unwrap();
            prop_assert_eq!(q.is_semistable(), !nc.in_nullcone());
            prop_assert_eq!(q.is_semistable(), !sparse);
        }

        #[test]
        fn scaling_the_weight_agrees(seed in any::<u64>(), nv in 2usize..4, na in 1usize..4) {
            let f = gf();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_quiver(&mut rng, nv, na);
            let (alpha, sigma) = balanced(&mut rng, nv);
            let rep = Representation::random(&f, &q, &alpha, &mut rng);
            let base = is_semistable(&f, &q, &alpha, &sigma, &rep, 8, seed).unwrap();
            let doubled: Vec<i64> = sigma.iter().map(|s| 2 * s).collect();
            let pencil = build_semi_pencil(&f, &q, &alpha, &doubled, &rep).unwrap();
            let d = decisive_blowup_size(pencil.rows());
            let w = blowup_rank(&pencil, d, d, 8, seed).unwrap();
            prop_assert_eq!(base.is_semistable(), w.is_full_rank(&pencil));
        }
    }
}
