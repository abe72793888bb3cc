//! Integer bases: saturation of a span, unimodular completion and block LLL.

use crate::error::{Error, Result};

pub(crate) type Col = Vec<i128>;

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

fn lin(a: i128, x: &[i128], b: i128, y: &[i128]) -> Result<Col> {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| a.checked_mul(xi).and_then(|p| b.checked_mul(yi).and_then(|q| p.checked_add(q))))
        .collect::<Option<Col>>()
        .ok_or(Error::Underdetermined)
}

/// Unimodular `m × m` matrix (as columns) whose first column is the primitive vector `p`.
pub(crate) fn complete_primitive(p: &[i128]) -> Result<Vec<Col>> {
    let m = p.len();
    // reduce p to ±e_0 by 2×2 unimodular row steps, recording them
    let mut v = p.to_vec();
    let mut steps = Vec::new();
    for i in (1..m).rev() {
        let (a, b) = (v[i - 1], v[i]);
        if b == 0 {
            continue;
        }
        let (g, s, t) = ext_gcd(a, b);
        // [[s, t], [−b/g, a/g]] maps (a, b) to (g, 0) and has determinant 1
        steps.push((i, s, t, -b / g, a / g));
        v[i - 1] = g;
        v[i] = 0;
    }
    if v[0].abs() != 1 || v[1..].iter().any(|&x| x != 0) {
        return Err(Error::Underdetermined);
    }
    // V = W⁻¹ · diag(±1): undo the steps on the identity, last step first
    let mut cols: Vec<Col> = (0..m).map(|j| (0..m).map(|i| (i == j) as i128).collect()).collect();
    if v[0] == -1 {
        for c in cols.iter_mut() {
            c[0] = -c[0];
        }
    }
    for &(i, s, t, c, d) in steps.iter().rev() {
        // inverse of [[s, t], [c, d]] is [[d, −t], [−c, s]]; apply to rows i−1, i of every column
        for col in cols.iter_mut() {
            let (x, y) = (col[i - 1], col[i]);
            let nx = d.checked_mul(x).and_then(|u| t.checked_mul(y).and_then(|w| u.checked_sub(w)));
            let ny = s.checked_mul(y).and_then(|u| c.checked_mul(x).and_then(|w| u.checked_sub(w)));
            match (nx, ny) {
                (Some(nx), Some(ny)) => {
                    col[i - 1] = nx;
                    col[i] = ny;
                }
                _ => return Err(Error::Underdetermined),
            }
        }
    }
    Ok(cols)
}

/// Replaces the complement `cols[boundary..]` so that its first column is `Σ w_i cols[boundary + i]`
/// divided by the gcd of `w`; the result is again a basis of the full lattice.
pub(crate) fn absorb(cols: &mut [Col], boundary: usize, w: &[i128]) -> Result<()> {
    let g = w.iter().fold(0i128, |acc, &x| ext_gcd(acc, x).0);
    if g == 0 {
        return Err(Error::Underdetermined);
    }
    let p: Col = w.iter().map(|&x| x / g).collect();
    let v = complete_primitive(&p)?;
    let old: Vec<Col> = cols[boundary..].to_vec();
    let len = old[0].len();
    for (j, vj) in v.iter().enumerate() {
        let mut acc: Col = vec![0; len];
        for (k, &coef) in vj.iter().enumerate() {
            if coef != 0 {
                acc = lin(1, &acc, coef, &old[k])?;
            }
        }
        cols[boundary + j] = acc;
    }
    Ok(())
}

/// Gram–Schmidt data for a real basis.
pub(crate) struct Gso {
    pub mu: Vec<Vec<f64>>,
    pub bstar_sq: Vec<f64>,
}

pub(crate) fn gso(b: &[Vec<f64>]) -> Gso {
    let n = b.len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut bstar_sq = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = dot(&b[i], &bstar[j]) / bstar_sq[j];
            mu[i][j] = m;
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= m * bk;
            }
        }
        bstar_sq[i] = dot(&v, &v);
        bstar.push(v);
    }
    Gso { mu, bstar_sq }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LLL with `δ = 0.99`, never swapping across `boundary`, so `cols[..boundary]` keeps its span.
/// `embed` maps an integer column to its real vector.
pub(crate) fn block_lll(cols: &mut [Col], boundary: usize, embed: &impl Fn(&[i128]) -> Vec<f64>) -> Result<Vec<Vec<f64>>> {
    let n = cols.len();
    let mut b: Vec<Vec<f64>> = cols.iter().map(|c| embed(c)).collect();
    let delta = 0.99;
    let mut k = 1;
    let mut rounds = 0usize;
    while k < n {
        rounds += 1;
        if rounds > 100_000 {
            return Err(Error::Underdetermined);
        }
        let mut g = gso(&b);
        let mut changed = false;
        for j in (0..k).rev() {
            let m = g.mu[k][j];
            if m.abs() > 0.5 + 1e-9 {
                let q = m.round();
                let new = lin(1, &cols[k], -(q as i128), &cols[j])?;
                cols[k] = new;
                changed = true;
                g.mu[k][j] -= q;
                for l in 0..j {
                    g.mu[k][l] -= q * g.mu[j][l];
                }
            }
        }
        if changed {
            b[k] = embed(&cols[k]);
            g = gso(&b);
        }
        if k == boundary {
            k += 1;
            continue;
        }
        let m = g.mu[k][k - 1];
        if g.bstar_sq[k] >= (delta - m * m) * g.bstar_sq[k - 1] {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            b.swap(k, k - 1);
            k = if k - 1 == boundary { k } else { (k - 1).max(1) };
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_identity() {
        for (a, b) in [(12, 18), (-7, 3), (0, 5), (5, 0), (-4, -6)] {
            let (g, s, t) = ext_gcd(a, b);
            assert_eq!(s * a + t * b, g);
            assert!(g >= 0);
        }
    }

    fn det(m: &[Col]) -> i128 {
        // Bareiss on a small integer matrix (columns)
        let n = m.len();
        let mut a: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect();
        let mut sign = 1;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else { return 0 };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[n - 1][n - 1]
    }

    #[test]
    fn primitive_completion() {
        for p in [vec![3, 5], vec![0, 0, 1], vec![6, 10, 15], vec![-4, 0, 7, 2], vec![-1]] {
            let v = complete_primitive(&p).unwrap();
            assert_eq!(v[0], p);
            assert_eq!(det(&v).abs(), 1);
        }
        assert!(complete_primitive(&[2, 4]).is_err());
    }

    #[test]
    fn absorb_keeps_unimodular() {
        let mut cols: Vec<Col> = (0..4).map(|j| (0..4).map(|i| (i == j) as i128).collect()).collect();
        absorb(&mut cols, 1, &[0, 4, 6]).unwrap();
        assert_eq!(cols[1], vec![0, 0, 2, 3]);
        assert_eq!(det(&cols).abs(), 1);
        assert_eq!(cols[0], vec![1, 0, 0, 0]);
    }

    #[test]
    fn lll_keeps_boundary_span() {
        let mut cols: Vec<Col> = vec![vec![1, 0, 0], vec![5, 1, 0], vec![7, 3, 1]];
        let embed = |c: &[i128]| c.iter().map(|&x| x as f64).collect::<Vec<f64>>();
        let b = block_lll(&mut cols, 1, &embed).unwrap();
        assert_eq!(cols[0], vec![1, 0, 0]);
        assert!(b.iter().all(|v| v.iter().all(|x| x.abs() <= 1.0)));
        assert_eq!(det(&cols).abs(), 1);
    }
}
