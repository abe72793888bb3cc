#![allow(dead_code)]

use hypershell::{QuadraticForm, Rational, Scalar};
use proptest::prelude::*;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// `AAᵀ + I` with entries of `A` in {−1, 0, 1}.
pub fn pd_block(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(-1i64..=1, n * n).prop_map(move |a| {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<i64>() + (i == j) as i64).collect())
            .collect()
    })
}

fn to_scalars(rows: &[Vec<i64>], c: &Rational) -> Vec<Vec<Scalar>> {
    rows.iter().map(|row| row.iter().map(|&x| Scalar::from(int(x) * c)).collect()).collect()
}

/// Rational block form `blockdiag(P, −cN)` with `P, N` from [`pd_block`] and `c` a small rational.
pub fn block_form(max_plus: usize, max_minus: usize) -> impl Strategy<Value = QuadraticForm> {
    (1..=max_plus, 1..=max_minus, prop::sample::select(vec![(1, 1), (3, 2), (5, 3), (2, 5)]))
        .prop_flat_map(|(p, m, c)| (pd_block(p), pd_block(m), Just(c)))
        .prop_map(|(p, n, (cp, cq))| QuadraticForm::new_block_form(to_scalars(&p, &int(1)), to_scalars(&n, &ratio(cp, cq))).unwrap())
}

/// Same shapes with the minus block scaled by `√2` or `√3`, so the form sits on the float track.
pub fn irrational_block_form(max_plus: usize, max_minus: usize) -> impl Strategy<Value = QuadraticForm> {
    (1..=max_plus, 1..=max_minus, prop::sample::select(vec![2.0f64, 3.0]))
        .prop_flat_map(|(p, m, k)| (pd_block(p), pd_block(m), Just(k)))
        .prop_map(|(p, n, k)| {
            let plus = p.iter().map(|row| row.iter().map(|&x| Scalar::from(x)).collect()).collect();
            let minus = n.iter().map(|row| row.iter().map(|&x| Scalar::from(x as f64 * k.sqrt())).collect()).collect();
            QuadraticForm::new_block_form(plus, minus).unwrap()
        })
}

/// Every point of `{−k..k}^d`.
pub fn box_points(d: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|p| (-k..=k).map(move |v| { let mut q = p.clone(); q.push(v); q })).collect();
    }
    out
}

pub fn rationals(x: &[i64]) -> Vec<Rational> {
    x.iter().map(|&v| int(v)).collect()
}
