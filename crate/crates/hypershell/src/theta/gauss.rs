//! `Σ_{m ∈ ℤ^d} exp(−B[m] + ⟨c, m⟩)` for complex symmetric `B` with positive definite real part.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative tail the truncation radius aims for.
pub(crate) const TARGET_TAIL: f64 = 1e-14;
/// Relative tail above which a sum is rejected.
pub(crate) const MAX_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSum {
    pub value: Complex64,
    /// Certified bound on the dropped terms (absolute).
    pub tail: f64,
    /// Sum of the moduli of the retained terms.
    pub abs_sum: f64,
    pub terms: u64,
}

/// Evaluates the sum, choosing the box radius per connected block of `B` so the certified
/// tail is below `TARGET_TAIL` of the retained mass. `min_radius_scale` forces at least
/// `scale / √p₀` terms per side; `budget` caps the number of terms.
pub(crate) fn gaussian_sum(b: &DMatrix<Complex64>, c: &[Complex64], min_radius_scale: f64, budget: f64) -> Result<GaussSum> {
    let d = c.len();
    let p = b.map(|z| z.re);
    let eig = SymmetricEigen::new(p.clone());
    let p0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(p0 > 0.0) {
        return Err(Error::Divergent(format!("real part of the quadratic exponent is not positive definite (smallest eigenvalue {p0:.3e})")));
    }
    // peak of the modulus: maximise −P[m] + ⟨Re c, m⟩
    let a = nalgebra::DVector::from_iterator(d, c.iter().map(|z| z.re));
    let pinv = eig.eigenvectors.clone() * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    let mstar = &pinv * &a / 2.0;
    let peak_log = (mstar.transpose() * &p * &mstar)[(0, 0)];

    let mut value = Complex64::new(1.0, 0.0);
    let mut abs_prod = 1.0;
    let mut bound_prod = 1.0;
    let mut terms = 1u64;
    for comp in components(b) {
        let k = comp.len();
        let sub_b = DMatrix::from_fn(k, k, |i, j| b[(comp[i], comp[j])]);
        let sub_c: Vec<Complex64> = comp.iter().map(|&i| c[i]).collect();
        let sub_m: Vec<f64> = comp.iter().map(|&i| mstar[i]).collect();
        let sub_p = sub_b.map(|z| z.re);
        let q0 = SymmetricEigen::new(sub_p.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let s = block_sum(&sub_b, &sub_c, &sub_m, &sub_p, q0, min_radius_scale, budget)?;
        value *= s.value;
        abs_prod *= s.abs_sum;
        bound_prod *= s.abs_sum + s.tail;
        terms = terms.saturating_mul(s.terms);
    }
    // |Π(S_i + e_i) − Π S_i| ≤ Π(|S_i| + |e_i|) − Π|S_i|, all in units of exp(peak_log)
    let tail_rel = (bound_prod - abs_prod) / abs_prod;
    if tail_rel > MAX_TAIL {
        return Err(Error::TruncationTooLoose(tail_rel));
    }
    let scale = peak_log.exp();
    Ok(GaussSum { value: value * scale, tail: (bound_prod - abs_prod) * scale, abs_sum: abs_prod * scale, terms })
}

/// Connected components of the nonzero pattern of `b`.
pub(crate) fn components(b: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let d = b.nrows();
    let mut comp = vec![usize::MAX; d];
    let mut out = Vec::new();
    for s in 0..d {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![s];
        let mut members = Vec::new();
        comp[s] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..d {
                if comp[j] == usize::MAX && (b[(i, j)].norm() > 0.0 || b[(j, i)].norm() > 0.0) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// `Σ_{j ≥ from} exp(−p (j − ½)²)`, bounded by a geometric series after the explicit part.
fn half_shift_tail(p: f64, from: i64) -> f64 {
    let mut s = 0.0f64;
    let mut j = from.max(1);
    loop {
        let x = j as f64 - 0.5;
        let t = (-p * x * x).exp();
        // ratio of consecutive terms is exp(−p(2x+1)) and decreases
        let ratio = (-p * (2.0 * x + 1.0)).exp();
        if t < 1e-300 || (ratio < 0.5 && t / (1.0 - ratio) < 1e-18 * s.max(1e-300)) {
            return s + t / (1.0 - ratio);
        }
        s += t;
        j += 1;
        if j - from > 1_000_000 {
            return s + t / (1.0 - ratio);
        }
    }
}

struct BlockSum {
    value: Complex64,
    abs_sum: f64,
    tail: f64,
    terms: u64,
}

/// One connected block, in units of `exp(P[m*])` restricted to the block.
fn block_sum(b: &DMatrix<Complex64>, c: &[Complex64], mstar: &[f64], p: &DMatrix<f64>, p0: f64, min_scale: f64, budget: f64) -> Result<BlockSum> {
    let k = c.len();
    let center: Vec<i64> = mstar.iter().map(|m| m.round() as i64).collect();
    let offset: Vec<f64> = center.iter().zip(mstar).map(|(&m0, &ms)| m0 as f64 - ms).collect();
    let off_q: f64 = (0..k).map(|i| (0..k).map(|j| p[(i, j)] * offset[i] * offset[j]).sum::<f64>()).sum();
    // the retained sum is at least the centre term exp(−P[m0 − m*])
    let floor = (-off_q).exp();
    let full = 1.0 + 2.0 * half_shift_tail(p0, 1);
    let tail_of = |r: i64| k as f64 * 2.0 * half_shift_tail(p0, r + 1) * full.powi(k as i32 - 1);
    let mut r = ((min_scale / p0.sqrt()).ceil() as i64).max(1);
    let max_r = (((budget.powf(1.0 / k as f64)) - 1.0) / 2.0).floor().max(1.0) as i64;
    while tail_of(r) > TARGET_TAIL * floor && r < max_r {
        r += 1;
    }
    r = r.min(max_r);
    let side = 2 * r + 1;
    let total = (side as u64).saturating_pow(k as u32);
    let peak: f64 = {
        // P[m*] on this block, removed from every exponent
        (0..k).map(|i| (0..k).map(|j| p[(i, j)] * mstar[i] * mstar[j]).sum::<f64>()).sum()
    };
    let term = |m: &[i64]| -> Complex64 {
        let mut e = Complex64::new(-peak, 0.0);
        for i in 0..k {
            let mi = m[i] as f64;
            e += c[i] * mi;
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..k {
                row += b[(i, j)] * m[j] as f64;
            }
            e -= row * mi;
        }
        e.exp()
    };
    // parallel over the first coordinate, reduced in index order
    let slices: Vec<(Complex64, f64)> = (0..side)
        .into_par_iter()
        .map(|i0| {
            let mut m: Vec<i64> = center.iter().map(|&c0| c0 - r).collect();
            m[0] = center[0] - r + i0;
            let mut s = Complex64::new(0.0, 0.0);
            let mut a = 0.0;
            loop {
                let t = term(&m);
                s += t;
                a += t.norm();
                let mut i = 1;
                while i < k {
                    m[i] += 1;
                    if m[i] <= center[i] + r {
                        break;
                    }
                    m[i] = center[i] - r;
                    i += 1;
                }
                if i >= k {
                    break;
                }
            }
            (s, a)
        })
        .collect();
    let (mut value, mut abs_sum) = (Complex64::new(0.0, 0.0), 0.0);
    for (s, a) in slices {
        value += s;
        abs_sum += a;
    }
    Ok(BlockSum { value, abs_sum, tail: tail_of(r), terms: total })
}
