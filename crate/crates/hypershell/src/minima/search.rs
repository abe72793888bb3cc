//! Depth-first search for the shortest lattice vector, in a weighted sup-norm,
//! among vectors with a nonzero coefficient outside a given sublattice.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::lattice::{gso, Col};
use crate::error::{Error, Result};

/// Norms within this relative distance are treated as equal; the search only
/// looks for vectors shorter than the incumbent by at least this much.
pub(crate) const TIE_REL: f64 = 1e-10;

pub(crate) struct Found {
    pub norm: f64,
    /// Integer coordinates of the vector.
    pub coeffs: Col,
    /// Coefficients with respect to the search basis (empty for a caller-supplied seed).
    pub z: Vec<i64>,
}

pub(crate) struct Search<'a> {
    /// Reduced real basis vectors.
    pub basis: Vec<Vec<f64>>,
    /// Integer coordinates of the same vectors.
    pub ints: Vec<Col>,
    /// `basis[..boundary]` spans the excluded sublattice.
    pub boundary: usize,
    /// Objective is `max |x_l| / weight_l` over coordinates with positive weight.
    pub weight: Vec<f64>,
    /// Hard constraint `|x_l| <= cap_l` where the weight is zero.
    pub cap: Vec<f64>,
    pub embed: &'a dyn Fn(&[i128]) -> Vec<f64>,
    pub budget: u64,
}

struct State {
    mu: Vec<Vec<f64>>,
    bstar_sq: Vec<f64>,
    best: Option<Found>,
    nodes: u64,
}

impl Search<'_> {
    fn objective(&self, x: &[f64]) -> f64 {
        let mut w = 0.0f64;
        for (l, &xl) in x.iter().enumerate() {
            if self.weight[l] > 0.0 {
                w = w.max(xl.abs() / self.weight[l]);
            } else if xl.abs() > self.cap[l] * (1.0 + 1e-12) + 1e-12 {
                return f64::INFINITY;
            }
        }
        w
    }

    fn bounds(&self, u: f64) -> Vec<f64> {
        let u = u * (1.0 - TIE_REL);
        self.weight.iter().zip(&self.cap).map(|(&w, &c)| if w > 0.0 { u * w } else { c }).collect()
    }

    /// Runs the search. `initial` seeds the incumbent; otherwise the complement basis vectors do.
    pub fn run(&self, initial: Option<Found>) -> Result<(Found, u64)> {
        let n = self.basis.len();
        let g = gso(&self.basis);
        let mut st = State { mu: g.mu, bstar_sq: g.bstar_sq, best: None, nodes: 0 };
        if let Some(f) = initial {
            st.best = Some(f);
        }
        for i in self.boundary..n {
            let x = (self.embed)(&self.ints[i]);
            let w = self.objective(&x);
            if w.is_finite() {
                let mut e = vec![0i64; n];
                e[i] = 1;
                self.offer(&mut st, w, self.ints[i].clone(), e);
            }
        }
        if st.best.is_none() {
            return Err(Error::Underdetermined);
        }
        let mut y = vec![0.0; n];
        let mut c: Col = vec![0; self.ints[0].len()];
        let mut z = vec![0i64; n];
        self.descend(&mut st, n, &mut y, &mut c, &mut z, 0.0, false)?;
        let nodes = st.nodes;
        Ok((st.best.expect("incumbent set above"), nodes))
    }

    fn offer(&self, st: &mut State, norm: f64, coeffs: Col, mut z: Vec<i64>) {
        let flip = coeffs.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0);
        let coeffs = normalize_sign(coeffs);
        if flip {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        match &st.best {
            None => st.best = Some(Found { norm, coeffs, z }),
            Some(b) => {
                if norm < b.norm * (1.0 - TIE_REL) {
                    st.best = Some(Found { norm, coeffs, z });
                } else if norm <= b.norm * (1.0 + TIE_REL) && coeffs < b.coeffs {
                    st.best = Some(Found { norm: norm.min(b.norm), coeffs, z });
                }
            }
        }
    }

    fn incumbent(st: &State) -> f64 {
        st.best.as_ref().map_or(f64::INFINITY, |b| b.norm)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(&self, st: &mut State, level: usize, y: &mut [f64], c: &mut Col, z: &mut [i64], partial: f64, nonzero: bool) -> Result<()> {
        let i = level - 1;
        st.nodes += 1;
        if st.nodes > self.budget {
            return Err(Error::EnumerationBudgetExceeded(self.budget));
        }
        if i < self.boundary && !nonzero {
            return Ok(());
        }
        let n = self.basis.len();
        let bnd = self.bounds(Self::incumbent(st));
        let radius_sq: f64 = bnd.iter().map(|b| b * b).sum();
        let rem = radius_sq - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let center: f64 = -(i + 1..n).map(|k| z[k] as f64 * st.mu[k][i]).sum::<f64>();
        let half = (rem / st.bstar_sq[i]).sqrt();
        let (mut lo, mut hi) = (center - half, center + half);
        let restricted = !nonzero && i >= self.boundary;

        if i == 0 {
            let b0 = &self.basis[0];
            for l in 0..n {
                if b0[l].abs() > 1e-300 {
                    let (a, b) = ((-bnd[l] - y[l]) / b0[l], (bnd[l] - y[l]) / b0[l]);
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                } else if y[l].abs() > bnd[l] {
                    return Ok(());
                }
            }
            let mut lo_i = (lo - 1e-9).ceil() as i64;
            let hi_i = (hi + 1e-9).floor() as i64;
            if restricted {
                lo_i = lo_i.max(1);
            }
            if lo_i > hi_i {
                return Ok(());
            }
            let g = |zz: i64| -> f64 {
                let x: Vec<f64> = y.iter().zip(b0).map(|(a, b)| a + zz as f64 * b).collect();
                self.objective(&x)
            };
            // g is convex in z: find the integer minimiser by bisection on the forward difference
            let (mut a, mut b) = (lo_i, hi_i);
            while a < b {
                let mid = a + (b - a) / 2;
                if g(mid + 1) >= g(mid) {
                    b = mid;
                } else {
                    a = mid + 1;
                }
            }
            let gmin = g(a);
            let mut cands = vec![a];
            let mut k = a - 1;
            while k >= lo_i && g(k) <= gmin * (1.0 + 1e-8) + 1e-300 {
                cands.push(k);
                k -= 1;
            }
            let mut k = a + 1;
            while k <= hi_i && g(k) <= gmin * (1.0 + 1e-8) + 1e-300 {
                cands.push(k);
                k += 1;
            }
            for zz in cands {
                if zz == 0 && restricted {
                    continue;
                }
                let full: Col = c.iter().zip(&self.ints[0]).map(|(&ci, &ui)| ci + zz as i128 * ui).collect();
                if self.boundary == 0 && full.iter().all(|&v| v == 0) {
                    continue;
                }
                let x = (self.embed)(&full);
                let w = self.objective(&x);
                if w.is_finite() {
                    let mut zf = z.to_vec();
                    zf[0] = zz;
                    self.offer(st, w, full, zf);
                }
            }
            return Ok(());
        }

        let span = (hi + 1e-9).floor() - (lo - 1e-9).ceil() + 1.0;
        if span > 2.0 {
            match lp_range(&self.basis, i, y, &bnd) {
                LpRange::Infeasible => return Ok(()),
                LpRange::Range(a, b) => {
                    let pad = 1e-7 * (1.0 + a.abs().max(b.abs()));
                    lo = lo.max(a - pad);
                    hi = hi.min(b + pad);
                }
                LpRange::Failed => {}
            }
        }
        let mut lo_i = (lo - 1e-9).ceil() as i64;
        let hi_i = (hi + 1e-9).floor() as i64;
        if restricted {
            lo_i = lo_i.max(0);
        }
        if lo_i > hi_i {
            return Ok(());
        }
        let start = (center.round() as i64).clamp(lo_i, hi_i);
        for zz in zigzag(start, lo_i, hi_i) {
            let dz = zz as f64 - center;
            let np = partial + dz * dz * st.bstar_sq[i];
            let bnd_now = self.bounds(Self::incumbent(st));
            if np > bnd_now.iter().map(|b| b * b).sum::<f64>() {
                continue;
            }
            let bi = &self.basis[i];
            for (yl, bl) in y.iter_mut().zip(bi) {
                *yl += zz as f64 * bl;
            }
            for (cl, ul) in c.iter_mut().zip(&self.ints[i]) {
                *cl += zz as i128 * ul;
            }
            z[i] = zz;
            let nz = nonzero || (i >= self.boundary && zz != 0);
            let res = self.descend(st, level - 1, y, c, z, np, nz);
            for (yl, bl) in y.iter_mut().zip(bi) {
                *yl -= zz as f64 * bl;
            }
            for (cl, ul) in c.iter_mut().zip(&self.ints[i]) {
                *cl -= zz as i128 * ul;
            }
            z[i] = 0;
            res?;
        }
        Ok(())
    }
}

/// Integers of `[lo, hi]` ordered by distance from `start`.
fn zigzag(start: i64, lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let width = (hi - lo + 1) as usize;
    (0..2 * width + 1)
        .map(move |k| {
            let off = k.div_ceil(2) as i64;
            if k % 2 == 1 { start + off } else { start - off }
        })
        .filter(move |&v| v >= lo && v <= hi)
        .take(width)
}

enum LpRange {
    Infeasible,
    Range(f64, f64),
    Failed,
}

/// Range of `z_i` over real `z_0..z_i` with `|y + Σ z_k b_k|_l <= bnd_l` for every coordinate.
fn lp_range(basis: &[Vec<f64>], i: usize, y: &[f64], bnd: &[f64]) -> LpRange {
    let n = y.len();
    let solve = |dir: OptimizationDirection| -> std::result::Result<f64, bool> {
        let mut p = Problem::new(dir);
        let vars: Vec<_> = (0..=i).map(|k| p.add_var(if k == i { 1.0 } else { 0.0 }, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        for l in 0..n {
            let expr: Vec<_> = (0..=i).filter(|&k| basis[k][l] != 0.0).map(|k| (vars[k], basis[k][l])).collect();
            if expr.is_empty() {
                if y[l].abs() > bnd[l] {
                    return Err(true);
                }
                continue;
            }
            p.add_constraint(expr.as_slice(), ComparisonOp::Le, bnd[l] - y[l]);
            p.add_constraint(expr.as_slice(), ComparisonOp::Ge, -bnd[l] - y[l]);
        }
        match p.solve() {
            Ok(out) => out.solution().map(|s| s.objective()).ok_or(false),
            Err(microlp::Error::Infeasible) => Err(true),
            Err(_) => Err(false),
        }
    };
    match (solve(OptimizationDirection::Minimize), solve(OptimizationDirection::Maximize)) {
        (Ok(a), Ok(b)) => LpRange::Range(a, b),
        (Err(true), _) | (_, Err(true)) => LpRange::Infeasible,
        _ => LpRange::Failed,
    }
}

/// Flips the sign so the first nonzero entry is positive.
pub(crate) fn normalize_sign(mut c: Col) -> Col {
    if c.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
        for v in c.iter_mut() {
            *v = -*v;
        }
    }
    c
}
