//! Successive minima of the parametric norm `F(m, n) = |(r(m − tQn), n/r)|_∞` on `ℤ^{2d}`,
//! and the functionals built on them.

mod lattice;
mod search;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{BlockId, Error, Result};
use crate::forms::QuadraticForm;
use crate::scalar::{Rational, Scalar};
use lattice::{absorb, block_lll, Col};
use search::{Found, Search};

/// Default node budget of a single shortest-vector search.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Largest `d` accepted by [`successive_minima`].
pub const MAX_MINIMA_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaProblem {
    pub form: QuadraticForm,
    pub t: Scalar,
    pub r: Scalar,
}

impl MinimaProblem {
    pub fn new(form: QuadraticForm, t: impl Into<Scalar>, r: impl Into<Scalar>) -> Result<Self> {
        let r = r.into();
        if !(r.to_f64() >= 1.0) {
            return Err(Error::InvalidParameter(format!("r must be at least 1, got {r}")));
        }
        Ok(Self { form, t: t.into(), r })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// `|L(m, n, t)|_∞` in floating point.
    pub fn norm(&self, m: &[i64], n: &[i64]) -> f64 {
        let c: Col = m.iter().chain(n).map(|&v| v as i128).collect();
        sup(&self.embedding()(&c))
    }

    /// `|L(m, n, t)|_∞` in exact arithmetic, when the form, `t` and `r` are rational.
    pub fn norm_exact(&self, m: &[i64], n: &[i64]) -> Option<Rational> {
        let q = self.form.rational_entries()?;
        let t = self.t.as_rational()?;
        let r = self.r.as_rational()?;
        let d = self.dim();
        let mut best = Rational::zero();
        for j in 0..d {
            let mut qn = Rational::zero();
            for k in 0..d {
                qn += &q[j * d + k] * Rational::from_integer(n[k].into());
            }
            let v = (Rational::from_integer(m[j].into()) - t * qn) * r;
            best = best.max(v.abs());
            let w = Rational::from_integer(n[j].into()) / r;
            best = best.max(w.abs());
        }
        Some(best)
    }

    fn embedding(&self) -> impl Fn(&[i128]) -> Vec<f64> + '_ {
        let d = self.dim();
        let t = self.t.to_f64();
        let r = self.r.to_f64();
        let tq: Vec<f64> = self.form.matrix().transpose().iter().map(|q| q * t).collect();
        move |c: &[i128]| {
            let mut x = vec![0.0; 2 * d];
            for j in 0..d {
                let mut acc = c[j] as f64;
                for k in 0..d {
                    acc -= tq[j * d + k] * c[d + k] as f64;
                }
                x[j] = r * acc;
                x[d + j] = c[d + j] as f64 / r;
            }
            x
        }
    }

    fn is_exact(&self) -> bool {
        self.form.rational_entries().is_some() && self.t.as_rational().is_some() && self.r.as_rational().is_some()
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |a, v| a.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimaOptions {
    /// How many of the `2d` minima to compute.
    pub count: Option<usize>,
    pub node_budget: u64,
}

impl Default for MinimaOptions {
    fn default() -> Self {
        Self { count: None, node_budget: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaResult {
    pub minima: Vec<f64>,
    /// Attaining vectors `(m, n)` concatenated, first nonzero entry positive.
    pub vectors: Vec<Vec<i64>>,
    /// `M_1 ⋯ M_d`, present when at least `d` minima were computed.
    pub product_d: Option<f64>,
    /// Exact values of the minima for rational inputs.
    pub exact_minima: Option<Vec<Rational>>,
    pub exact: bool,
    pub error_radius: f64,
    pub nodes: u64,
}

/// All `2d` successive minima.
pub fn successive_minima(p: &MinimaProblem) -> Result<MinimaResult> {
    successive_minima_with(p, &MinimaOptions::default())
}

pub fn successive_minima_with(p: &MinimaProblem, opts: &MinimaOptions) -> Result<MinimaResult> {
    let d = p.dim();
    if d > MAX_MINIMA_DIM {
        return Err(Error::InvalidParameter(format!("successive minima need d ≤ {MAX_MINIMA_DIM}, got {d}")));
    }
    let n = 2 * d;
    let count = opts.count.unwrap_or(n).min(n);
    let comps = components(&p.form);
    let (minima, found, nodes) = if comps.len() > 1 {
        split_minima(p, &comps, count, opts.node_budget)?
    } else {
        connected_minima(p, count, opts.node_budget)?
    };
    finish(p, minima, found, nodes, count)
}

/// Index sets of the connected components of the graph of nonzero off-diagonal entries.
fn components(form: &QuadraticForm) -> Vec<Vec<usize>> {
    let d = form.dim();
    let mut label: Vec<usize> = (0..d).collect();
    fn root(l: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while l[i] != i {
            l[i] = l[l[i]];
            i = l[i];
        }
        i
    }
    for i in 0..d {
        for j in i + 1..d {
            if !form.entry(i, j).is_zero() {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for i in 0..d {
        let r = root(&mut label, i);
        let k = *seen.entry(r).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[k].push(i);
    }
    out
}

/// The lattice is a direct sum over components and the sup-norm is the max over the parts,
/// so the successive minima are the merged minima of the parts.
fn split_minima(p: &MinimaProblem, comps: &[Vec<usize>], count: usize, budget: u64) -> Result<(Vec<f64>, Vec<Col>, u64)> {
    let d = p.dim();
    let mut all: Vec<(f64, Col)> = Vec::new();
    let mut nodes = 0u64;
    for comp in comps {
        let rows: Vec<Vec<Scalar>> = comp.iter().map(|&i| comp.iter().map(|&j| p.form.entry(i, j).clone()).collect()).collect();
        let sub = MinimaProblem { form: QuadraticForm::symmetric(rows)?, t: p.t.clone(), r: p.r.clone() };
        let c = comp.len();
        let (mins, vecs, used) = connected_minima(&sub, count.min(2 * c), budget.saturating_sub(nodes).max(1))?;
        nodes += used;
        for (w, v) in mins.into_iter().zip(vecs) {
            let mut full: Col = vec![0; 2 * d];
            for (k, &i) in comp.iter().enumerate() {
                full[i] = v[k];
                full[d + i] = v[c + k];
            }
            all.push((w, search::normalize_sign(full)));
        }
    }
    all.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= search::TIE_REL * a.0.max(b.0) {
            a.1.cmp(&b.1)
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    all.truncate(count);
    let (minima, found) = all.into_iter().unzip();
    Ok((minima, found, nodes))
}

fn connected_minima(p: &MinimaProblem, count: usize, budget: u64) -> Result<(Vec<f64>, Vec<Col>, u64)> {
    let n = 2 * p.dim();
    let embed = p.embedding();
    let mut found: Vec<Col> = Vec::with_capacity(count);
    let mut minima = Vec::with_capacity(count);
    let mut nodes = 0u64;
    let mut cols: Vec<Col> = (0..n).map(|j| (0..n).map(|i| (i == j) as i128).collect()).collect();
    for boundary in 0..count {
        let basis = block_lll(&mut cols, boundary, &embed)?;
        let search = Search {
            basis,
            ints: cols.clone(),
            boundary,
            weight: vec![1.0; n],
            cap: vec![0.0; n],
            embed: &embed,
            budget: budget.saturating_sub(nodes).max(1),
        };
        let (f, used) = search.run(None)?;
        nodes += used;
        minima.push(f.norm);
        let w: Col = f.z[boundary..].iter().map(|&v| v as i128).collect();
        absorb(&mut cols, boundary, &w)?;
        found.push(f.coeffs);
    }
    Ok((minima, found, nodes))
}

fn finish(p: &MinimaProblem, mut minima: Vec<f64>, found: Vec<Col>, nodes: u64, count: usize) -> Result<MinimaResult> {
    let d = p.dim();
    let n = 2 * d;
    let vectors: Vec<Vec<i64>> = found
        .iter()
        .map(|c| c.iter().map(|&v| i64::try_from(v).map_err(|_| Error::Underdetermined)).collect())
        .collect::<Result<_>>()?;
    let exact = p.is_exact();
    let exact_minima = if exact {
        vectors.iter().map(|v| p.norm_exact(&v[..d], &v[d..])).collect::<Option<Vec<_>>>()
    } else {
        None
    };
    if let Some(ex) = &exact_minima {
        for (m, e) in minima.iter_mut().zip(ex) {
            *m = crate::scalar::rational_to_f64(e);
        }
    }
    let product_d = (count >= d).then(|| minima[..d].iter().product());
    let top = minima.iter().cloned().fold(0.0, f64::max);
    let error_radius = top * (search::TIE_REL + 64.0 * f64::EPSILON * n as f64);
    Ok(MinimaResult { minima, vectors, product_d, exact_minima, exact, error_radius, nodes })
}

/// The first `k` minima.
pub fn first_minima(p: &MinimaProblem, k: usize) -> Result<MinimaResult> {
    successive_minima_with(p, &MinimaOptions { count: Some(k), ..Default::default() })
}

/// `M^±_{1,t}`: first minimum of the norm built from one block.
pub fn block_first_minimum(p: &MinimaProblem, block: BlockId) -> Result<f64> {
    let form = match block {
        BlockId::Plus => p.form.plus_form()?,
        BlockId::Minus => p.form.minus_form()?,
    };
    let q = MinimaProblem { form, t: p.t.clone(), r: p.r.clone() };
    Ok(first_minima(&q, 1)?.minima[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub gamma: f64,
    pub t_argmin: f64,
    /// `(t, r^d M_1 ⋯ M_d)` on the grid.
    pub grid: Vec<(f64, f64)>,
}

/// Approximates `inf r^d M_{1,t}⋯M_{d,t}` over `T^{−1/(d−4)} ≤ |t| ≤ T`.
pub fn gamma(form: &QuadraticForm, r: impl Into<Scalar>, big_t: f64, grid: usize) -> Result<GammaReport> {
    let d = form.dim();
    if d <= 4 {
        return Err(Error::DimensionTooSmall(d));
    }
    if !(big_t >= 1.0) {
        return Err(Error::InvalidParameter(format!("T must be at least 1, got {big_t}")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 points, got {grid}")));
    }
    let r = r.into();
    let rf = r.to_f64();
    let lo = big_t.powf(-1.0 / (d as f64 - 4.0));
    let value = |t: f64| -> Result<f64> {
        let p = MinimaProblem::new(form.clone(), t, r.clone())?;
        Ok(rf.powi(d as i32) * first_minima(&p, d)?.product_d.expect("d minima requested"))
    };
    let ts: Vec<f64> = if big_t == 1.0 {
        vec![1.0]
    } else {
        (0..grid).map(|i| lo * (big_t / lo).powf(i as f64 / (grid - 1) as f64)).collect()
    };
    let vals: Vec<f64> = ts.par_iter().map(|&t| value(t)).collect::<Result<_>>()?;
    let mut pts: Vec<(f64, f64)> = ts.into_iter().zip(vals).collect();
    let (k, _) = pts.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, p)| if p.1 < acc.1 { (i, p.1) } else { acc });
    let (mut best_t, mut best) = pts[k];
    if pts.len() > 2 {
        // golden section on the bracketing cells, in log t
        let a0 = pts[k.saturating_sub(1)].0.ln();
        let b0 = pts[(k + 1).min(pts.len() - 1)].0.ln();
        let (mut a, mut b) = (a0, b0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = value(x1.exp())?;
        let mut f2 = value(x2.exp())?;
        for _ in 0..16 {
            if f1 < best {
                (best, best_t) = (f1, x1.exp());
            }
            if f2 < best {
                (best, best_t) = (f2, x2.exp());
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = value(x1.exp())?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = value(x2.exp())?;
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best {
                (best, best_t) = (f, x.exp());
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GammaReport { gamma: best, t_argmin: best_t, grid: pts })
}

/// `D(t, ν) = ν · min { ‖tQn‖ : n ∈ ℤ^d, 0 < |n|_∞ ≤ ν }` with `‖·‖` the sup-distance to `ℤ^d`.
pub fn dioph_d(form: &QuadraticForm, t: f64, nu: f64, node_budget: u64) -> Result<f64> {
    if !(nu >= 1.0) {
        return Err(Error::InvalidParameter(format!("ν must be at least 1, got {nu}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = form.dim();
    let cap = nu.floor();
    let tq: Vec<f64> = form.matrix().transpose().iter().map(|q| q * t).collect();
    // coordinates (tQn − m, n); the m-part is the excluded sublattice
    let embed = move |c: &[i128]| {
        let mut x = vec![0.0; 2 * d];
        for j in 0..d {
            let mut acc = -(c[j] as f64);
            for k in 0..d {
                acc += tq[j * d + k] * c[d + k] as f64;
            }
            x[j] = acc;
            x[d + j] = c[d + j] as f64;
        }
        x
    };
    let mut cols: Vec<Col> = (0..2 * d).map(|j| (0..2 * d).map(|i| (i == j) as i128).collect()).collect();
    let basis = block_lll(&mut cols, d, &embed)?;
    let mut weight = vec![1.0; d];
    weight.extend(vec![0.0; d]);
    let mut capv = vec![0.0; d];
    capv.extend(vec![cap; d]);
    let search = Search { basis, ints: cols, boundary: d, weight, cap: capv, embed: &embed, budget: node_budget };
    // n = e_1 with the nearest m is always admissible
    let mut c0: Col = vec![0; 2 * d];
    c0[d] = 1;
    for j in 0..d {
        c0[j] = (t * form.matrix()[(j, 0)]).round() as i128;
    }
    let x0 = embed(&c0);
    let w0 = x0[..d].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (f, _) = search.run(Some(Found { norm: w0, coeffs: search::normalize_sign(c0), z: Vec::new() }))?;
    Ok(nu * f.norm)
}

/// Brute-force `D(t, ν)`, usable as an oracle for small `ν^d`.
pub fn dioph_d_brute(form: &QuadraticForm, t: f64, nu: f64, budget: f64) -> Result<f64> {
    let d = form.dim();
    let k = nu.floor() as i64;
    let total = ((2 * k + 1) as f64).powi(d as i32);
    if total > budget {
        return Err(Error::BudgetExceeded(total));
    }
    let mut n = vec![-k; d];
    let mut best = f64::INFINITY;
    loop {
        if n.iter().any(|&v| v != 0) {
            let mut w = 0.0f64;
            for j in 0..d {
                let v: f64 = (0..d).map(|l| t * form.matrix()[(j, l)] * n[l] as f64).sum();
                w = w.max((v - v.round()).abs());
            }
            best = best.min(w);
        }
        let mut i = 0;
        while i < d {
            n[i] += 1;
            if n[i] <= k {
                break;
            }
            n[i] = -k;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    Ok(nu * best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEstimate {
    pub measure: f64,
    /// Grid spacing.
    pub resolution: f64,
    /// `(t, M_{1,t})` on the grid.
    pub samples: Vec<(f64, f64)>,
}

/// `M_{1,t}` on a uniform grid of `[κ, ξ]`.
pub fn first_minimum_grid(form: &QuadraticForm, r: &Scalar, kappa: f64, xi: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    if !(0.0 < kappa && kappa < xi) {
        return Err(Error::InvalidParameter(format!("need 0 < κ < ξ, got [{kappa}, {xi}]")));
    }
    if grid < 16 {
        return Err(Error::InvalidParameter(format!("grid needs at least 16 points, got {grid}")));
    }
    let h = (xi - kappa) / (grid - 1) as f64;
    (0..grid)
        .into_par_iter()
        .map(|i| {
            let t = kappa + i as f64 * h;
            let p = MinimaProblem::new(form.clone(), t, r.clone())?;
            Ok((t, first_minima(&p, 1)?.minima[0]))
        })
        .collect()
}

/// Trapezoidal measure of `{t : M_{1,t} ≤ τ}` from grid samples.
pub fn measure_from_samples(samples: &[(f64, f64)], tau: f64) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let h = w[1].0 - w[0].0;
            h * ((w[0].1 <= tau) as u8 as f64 + (w[1].1 <= tau) as u8 as f64) / 2.0
        })
        .sum()
}

/// Estimate of `λ{ t ∈ [κ, ξ] : M_{1,t} ≤ τ }`.
pub fn minima_measure(form: &QuadraticForm, r: impl Into<Scalar>, kappa: f64, xi: f64, tau: f64, grid: usize) -> Result<MeasureEstimate> {
    let r = r.into();
    let resolution = (xi - kappa) / (grid.max(2) - 1) as f64;
    if tau < 1.0 / r.to_f64() {
        first_minimum_grid_check(kappa, xi, grid)?;
        return Ok(MeasureEstimate { measure: 0.0, resolution, samples: Vec::new() });
    }
    let samples = first_minimum_grid(form, &r, kappa, xi, grid)?;
    Ok(MeasureEstimate { measure: measure_from_samples(&samples, tau), resolution, samples })
}

fn first_minimum_grid_check(kappa: f64, xi: f64, grid: usize) -> Result<()> {
    if !(0.0 < kappa && kappa < xi) {
        return Err(Error::InvalidParameter(format!("need 0 < κ < ξ, got [{kappa}, {xi}]")));
    }
    if grid < 16 {
        return Err(Error::InvalidParameter(format!("grid needs at least 16 points, got {grid}")));
    }
    Ok(())
}

/// `#{ m ∈ ℤ^d : ‖(tQm)_j‖ < 1/r, |m_j| < r for all j }` by direct enumeration.
pub fn davenport_count(form: &QuadraticForm, t: f64, r: f64, budget: f64) -> Result<u64> {
    let d = form.dim();
    // |m_j| < r
    let k = (r.ceil() as i64 - 1).max(0);
    let total = ((2 * k + 1) as f64).powi(d as i32);
    if total > budget {
        return Err(Error::BudgetExceeded(total));
    }
    let q = form.matrix();
    let mut m = vec![-k; d];
    let mut count = 0u64;
    loop {
        let ok = (0..d).all(|j| {
            let v: f64 = (0..d).map(|l| t * q[(j, l)] * m[l] as f64).sum();
            (v - v.round()).abs() < 1.0 / r
        }) && m.iter().all(|&v| (v as f64).abs() < r);
        count += ok as u64;
        let mut i = 0;
        while i < d {
            m[i] += 1;
            if m[i] <= k {
                break;
            }
            m[i] = -k;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    Ok(count)
}

/// Exhaustive successive minima over `|m|_∞ ≤ m_bound`, `|n|_∞ ≤ n_bound`, for testing.
pub fn successive_minima_brute(p: &MinimaProblem, m_bound: i64, n_bound: i64) -> Result<Vec<f64>> {
    let d = p.dim();
    let n = 2 * d;
    let total = ((2 * m_bound + 1) as f64).powi(d as i32) * ((2 * n_bound + 1) as f64).powi(d as i32);
    if total > 5e7 {
        return Err(Error::BudgetExceeded(total));
    }
    let bound = |i: usize| if i < d { m_bound } else { n_bound };
    let embed = p.embedding();
    let mut pts: Vec<(f64, Vec<i64>)> = Vec::new();
    let mut c: Vec<i64> = (0..n).map(|i| -bound(i)).collect();
    loop {
        if c.iter().any(|&v| v != 0) {
            let ci: Col = c.iter().map(|&v| v as i128).collect();
            pts.push((sup(&embed(&ci)), c.clone()));
        }
        let mut i = 0;
        while i < n {
            c[i] += 1;
            if c[i] <= bound(i) {
                break;
            }
            c[i] = -bound(i);
            i += 1;
        }
        if i == n {
            break;
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // greedy independence by rank over the rationals (floating elimination on small integers)
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for (w, v) in pts {
        let mut x: Vec<f64> = v.iter().map(|&a| a as f64).collect();
        for b in &basis {
            let piv = b.iter().position(|&e| e.abs() > 1e-9).expect("nonzero row");
            let f = x[piv] / b[piv];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= f * bi;
            }
        }
        if x.iter().any(|e| e.abs() > 1e-9) {
            basis.push(x);
            out.push(w);
            if out.len() == n {
                break;
            }
        }
    }
    Ok(out)
}
