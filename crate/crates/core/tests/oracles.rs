//! Exact results checked against slow, direct recomputations over GF(7).

use blowup_core::exactalg::{Field, Matrix, PrimeField};
use blowup_core::ncformula::{evaluate, parse, Evaluation};
use blowup_core::Pencil;
use proptest::prelude::*;

fn gf7() -> PrimeField {
    PrimeField::new(7).unwrap()
}

fn mat(n: usize, m: usize, entries: &[u64]) -> Matrix<PrimeField> {
    Matrix::new(gf7(), n, m, entries.iter().map(|e| e % 7).collect()).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn sign(p: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            inversions += (p[i] > p[j]) as usize;
        }
    }
    inversions % 2 == 0
}

fn leibniz(a: &Matrix<PrimeField>) -> u64 {
    let f = gf7();
    let n = a.rows();
    permutations(n).iter().fold(0, |acc, p| {
        let term = (0..n).fold(1, |t, i| f.mul(&t, a.get(i, p[i])));
        if sign(p) {
            f.add(&acc, &term)
        } else {
            f.sub(&acc, &term)
        }
    })
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| (0..n).filter(|i| s >> i & 1 == 1).collect())
        .collect()
}

/// Largest k with a nonzero k x k minor.
fn minor_rank(a: &Matrix<PrimeField>) -> usize {
    let (r, c) = a.shape();
    (1..=r.min(c))
        .rev()
        .find(|&k| {
            subsets(r, k).iter().any(|rows| {
                subsets(c, k).iter().any(|cols| {
                    let sub: Vec<u64> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| *a.get(i, j))).collect();
                    leibniz(&mat(k, k, &sub)) != 0
                })
            })
        })
        .unwrap_or(0)
}

fn square(max: usize) -> impl Strategy<Value = Matrix<PrimeField>> {
    (1..=max).prop_flat_map(|n| prop::collection::vec(0u64..7, n * n).prop_map(move |e| mat(n, n, &e)))
}

fn rect(max: usize) -> impl Strategy<Value = Matrix<PrimeField>> {
    (1..=max, 1..=max)
        .prop_flat_map(|(r, c)| prop::collection::vec(0u64..7, r * c).prop_map(move |e| mat(r, c, &e)))
}

proptest! {
    #[test]
    fn det_matches_leibniz(a in square(5)) {
        prop_assert_eq!(a.det().unwrap(), leibniz(&a));
    }

    #[test]
    fn rank_matches_minors(a in rect(4)) {
        prop_assert_eq!(a.rank(), minor_rank(&a));
    }

    #[test]
    fn charpoly_matches_det_of_shift(a in square(4)) {
        let f = gf7();
        let n = a.rows();
        let c = a.charpoly().unwrap();
        for t in 0..7u64 {
            let shifted = Matrix::identity(f, n).scale(&t).sub(&a).unwrap();
            let mut value = f.one();
            for _ in 0..n {
                value = f.mul(&value, &t);
            }
            for (i, ci) in c.iter().enumerate() {
                let mut ti = 1;
                for _ in 0..i {
                    ti = f.mul(&ti, &t);
                }
                value = f.add(&value, &f.mul(ci, &ti));
            }
            prop_assert_eq!(value, leibniz(&shifted));
        }
    }

    #[test]
    fn blowup_matches_entrywise_assembly(
        coeffs in prop::collection::vec(prop::collection::vec(0u64..7, 4), 1..4),
        tuple_entries in prop::collection::vec(prop::collection::vec(0u64..7, 9), 3),
    ) {
        let f = gf7();
        let xs: Vec<_> = coeffs.iter().map(|e| mat(2, 2, e)).collect();
        let ts: Vec<_> = tuple_entries.iter().take(xs.len()).map(|e| mat(3, 3, e)).collect();
        let pencil = Pencil::from_tuple(xs.clone()).unwrap();
        let big = pencil.blowup_eval(&ts).unwrap();
        prop_assert_eq!(big.shape(), (6, 6));
        for r in 0..6 {
            for c in 0..6 {
                let (i, a) = (r / 3, r % 3);
                let (j, b) = (c / 3, c % 3);
                let want = xs.iter().zip(&ts).fold(0, |acc, (x, t)| f.add(&acc, &f.mul(x.get(i, j), t.get(a, b))));
                prop_assert_eq!(*big.get(r, c), want);
            }
        }
    }

    #[test]
    fn formula_evaluation_matches_matrix_arithmetic(
        x in prop::collection::vec(0u64..7, 4),
        y in prop::collection::vec(0u64..7, 4),
    ) {
        let (x, y) = (mat(2, 2, &x), mat(2, 2, &y));
        let f = parse("t1*t2 - t2*t1 + t1").unwrap();
        let want = x.mul(&y).unwrap().sub(&y.mul(&x).unwrap()).unwrap().add(&x).unwrap();
        match evaluate(&f, &[x.clone(), y.clone()]).unwrap() {
            Evaluation::Defined(v) => prop_assert_eq!(v, want),
            Evaluation::Undefined => prop_assert!(false, "polynomial formula undefined"),
        }
        let g = parse("(t1)^-1").unwrap();
        match evaluate(&g, &[x.clone(), y]).unwrap() {
            Evaluation::Defined(v) => prop_assert!(v.mul(&x).unwrap().is_identity()),
            Evaluation::Undefined => prop_assert_eq!(leibniz(&x), 0),
        }
    }
}

#[test]
fn oracle_self_check() {
    assert_eq!(permutations(4).len(), 24);
    assert_eq!(leibniz(&mat(2, 2, &[1, 2, 3, 4])), 5); // -2 mod 7
    assert_eq!(minor_rank(&mat(2, 3, &[1, 2, 3, 2, 4, 6])), 1);
}
