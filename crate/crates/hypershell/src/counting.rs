//! Lattice points in shells and the gap statistic `d(r)` of the value set.
//!
//! Block-type forms split as `Q[x−M] = u − v` with `u = Q⁺[x⁺−M⁺]` and
//! `v = Q⁻[x⁻−M⁻]`, so a count over the cube becomes a count of pairs with
//! `u − v ∈ [a, b]`: materialise and sort the smaller side, stream the other.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::scalar::{ceil_rational, floor_rational, lcm_of_denominators, rational_to_f64, Rational, Scalar, Track};
use crate::shells::ShellSpec;

pub const DEFAULT_BUDGET: f64 = 2e9;
/// Relative slack for closed comparisons on the floating track.
pub const FLOAT_COMPARE_REL: f64 = 1e-12;
pub const DEFAULT_DEDUP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    BlockSplit,
    Direct,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::BlockSplit => "block_split",
            Algorithm::Direct => "direct",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CountOptions {
    /// `None` picks block split for block-type forms.
    pub algorithm: Option<Algorithm>,
    pub budget: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { algorithm: None, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub count: u64,
    pub points_evaluated: u64,
    pub algorithm: Algorithm,
    pub track: Track,
}

/// Integer cube half-width `⌊r⌋`.
pub fn cube_radius(r: &Scalar) -> i64 {
    match r.as_rational() {
        Some(q) => floor_rational(q).to_i64().unwrap_or(i64::MAX),
        None => r.to_f64().floor() as i64,
    }
}

/// Everything scaled to integers: `S(x) = N[μx − μM] = λμ²·Q[x−M]`.
#[derive(Debug, Clone)]
struct IntegerShell {
    d: usize,
    n: Vec<i128>,
    mu: i128,
    mu_m: Vec<i128>,
    scale: Rational,
}

impl IntegerShell {
    fn new(form: &QuadraticForm, m: &[Scalar]) -> Option<Self> {
        let (n, lambda) = form.integer_scaling()?;
        let mr: Vec<Rational> = m.iter().map(|x| x.as_rational().cloned()).collect::<Option<_>>()?;
        let mu = lcm_of_denominators(mr.iter());
        let mu_m: Vec<i128> = mr.iter().map(|x| (x * Rational::from_integer(mu.clone())).to_integer().to_i128()).collect::<Option<_>>()?;
        let n: Vec<i128> = n.iter().map(|x| x.to_i128()).collect::<Option<_>>()?;
        let scale = lambda * Rational::from_integer(&mu * &mu);
        Some(IntegerShell { d: form.dim(), n, mu: mu.to_i128()?, mu_m, scale })
    }

    /// Rough magnitude bound, used to refuse inputs that could overflow.
    fn fits(&self, rr: i64) -> bool {
        let ymax = self.mu as f64 * rr as f64 + self.mu_m.iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
        let nmax = self.n.iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
        nmax * ymax * ymax * (self.d * self.d) as f64 * 4.0 < 1e36
    }

    fn bound_lo(&self, a: &Rational) -> Option<i128> {
        ceil_rational(&(a * &self.scale)).to_i128()
    }

    fn bound_hi(&self, b: &Rational) -> Option<i128> {
        floor_rational(&(b * &self.scale)).to_i128()
    }

    /// `N[μx − μM]` restricted to coordinates `lo..lo+x.len()`.
    fn partial(&self, lo: usize, x: &[i64]) -> i128 {
        let d = self.d;
        let k = x.len();
        let mut y = [0i128; 16];
        for i in 0..k {
            y[i] = self.mu * x[i] as i128 - self.mu_m[lo + i];
        }
        let mut s = 0i128;
        for i in 0..k {
            let row = &self.n[(lo + i) * d + lo..(lo + i) * d + lo + k];
            let mut t = 0i128;
            for j in 0..k {
                t += row[j] * y[j];
            }
            s += t * y[i];
        }
        s
    }
}

/// Floating counterpart of [`IntegerShell`].
#[derive(Debug, Clone)]
struct FloatShell {
    d: usize,
    q: Vec<f64>,
    m: Vec<f64>,
}

impl FloatShell {
    fn new(form: &QuadraticForm, m: &[Scalar]) -> Self {
        let d = form.dim();
        let mat = form.matrix();
        FloatShell { d, q: (0..d * d).map(|k| mat[(k / d, k % d)]).collect(), m: m.iter().map(Scalar::to_f64).collect() }
    }

    fn partial(&self, lo: usize, x: &[i64]) -> f64 {
        let d = self.d;
        let k = x.len();
        let mut y = [0f64; 16];
        for i in 0..k {
            y[i] = x[i] as f64 - self.m[lo + i];
        }
        let mut s = 0.0;
        for i in 0..k {
            let row = &self.q[(lo + i) * d + lo..(lo + i) * d + lo + k];
            let mut t = 0.0;
            for j in 0..k {
                t += row[j] * y[j];
            }
            s += t * y[i];
        }
        s
    }

    /// Bound on `|Q[x−M]|` over the cube, for the comparison slack.
    fn magnitude(&self, rr: i64) -> f64 {
        let ymax = rr as f64 + self.m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let qmax = self.q.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        1.0 + qmax * (self.d * self.d) as f64 * ymax * ymax
    }
}

/// Calls `f` on every point of `[−R, R]^k` whose first coordinate is `first`.
fn for_each_with_first(k: usize, rr: i64, first: i64, mut f: impl FnMut(&[i64])) {
    let mut x = vec![-rr; k];
    if k == 0 {
        f(&x);
        return;
    }
    x[0] = first;
    loop {
        f(&x);
        let mut i = k - 1;
        loop {
            if i == 0 {
                return;
            }
            if x[i] < rr {
                x[i] += 1;
                break;
            }
            x[i] = -rr;
            i -= 1;
        }
    }
}

/// All values over `[−R, R]^k` in lexicographic point order.
fn block_values<T: Send>(k: usize, rr: i64, f: impl Fn(&[i64]) -> T + Sync) -> Vec<T> {
    if k == 0 {
        return vec![f(&[])];
    }
    (-rr..=rr)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            for_each_with_first(k, rr, first, |x| out.push(f(x)));
            out
        })
        .collect()
}

/// Sum of `g(value)` over `[−R, R]^k`, streamed without storing the values.
fn block_stream_sum<T>(k: usize, rr: i64, f: impl Fn(&[i64]) -> T + Sync, g: impl Fn(T) -> u64 + Sync) -> u64 {
    (-rr..=rr)
        .into_par_iter()
        .map(|first| {
            let mut acc = 0u64;
            for_each_with_first(k, rr, first, |x| acc += g(f(x)));
            acc
        })
        .sum()
}

fn side_len(k: usize, rr: i64) -> f64 {
    ((2 * rr + 1) as f64).powi(k as i32)
}

/// Work estimate of a count in evaluated (sub-)vectors.
pub fn estimate_work(form: &QuadraticForm, r: &Scalar, algorithm: Algorithm) -> f64 {
    let rr = cube_radius(r);
    match (algorithm, form.block()) {
        (Algorithm::BlockSplit, Some((dp, dm))) => side_len(dp, rr) + side_len(dm, rr),
        _ => side_len(form.dim(), rr),
    }
}

pub fn count_lattice_points(form: &QuadraticForm, spec: &ShellSpec) -> Result<CountResult> {
    count_with(form, spec, &CountOptions::default())
}

/// Exact count of `x ∈ ℤ^d` with `|x|_∞ ≤ r` and `a ≤ Q[x−M] ≤ b`.
pub fn count_with(form: &QuadraticForm, spec: &ShellSpec, opts: &CountOptions) -> Result<CountResult> {
    let d = form.dim();
    if spec.m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.m.len() });
    }
    if d > crate::forms::MAX_ENUM_DIM {
        return Err(Error::InvalidParameter(format!("d = {d} above the enumeration limit")));
    }
    let algorithm = match opts.algorithm {
        Some(Algorithm::BlockSplit) if form.block().is_none() => return Err(Error::NotBlockType),
        Some(a) => a,
        None if form.block().is_some() => Algorithm::BlockSplit,
        None => Algorithm::Direct,
    };
    let spec = spec.resolve(form)?;
    let work = estimate_work(form, &spec.r, algorithm);
    if work > opts.budget {
        return Err(Error::BudgetExceeded(work));
    }
    let rr = cube_radius(&spec.r);
    if rr < 0 {
        return Ok(CountResult { count: 0, points_evaluated: 0, algorithm, track: spec.track(form) });
    }
    let a = spec.a.as_ref().expect("resolved");
    let exact = match (spec.track(form), IntegerShell::new(form, &spec.m)) {
        (Track::Exact, Some(ish)) if ish.fits(rr) => {
            let lo = ish.bound_lo(a.as_rational().unwrap());
            let hi = ish.bound_hi(spec.b.as_rational().unwrap());
            lo.zip(hi).map(|(lo, hi)| (ish, lo, hi))
        }
        _ => None,
    };
    let (count, track) = match exact {
        Some((ish, lo, hi)) => {
            let c = if lo > hi { 0 } else { count_integer(&ish, form.block(), rr, lo, hi, algorithm) };
            (c, Track::Exact)
        }
        None => {
            let fsh = FloatShell::new(form, &spec.m);
            let tol = FLOAT_COMPARE_REL * fsh.magnitude(rr);
            let (lo, hi) = (a.to_f64() - tol, spec.b.to_f64() + tol);
            (count_float(&fsh, form.block(), rr, lo, hi, algorithm), Track::Float)
        }
    };
    Ok(CountResult { count, points_evaluated: work as u64, algorithm, track })
}

fn count_pairs<T: PartialOrd + Copy + Send + Sync + std::ops::Sub<Output = T> + std::ops::Add<Output = T>>(
    plus: (usize, &(dyn Fn(&[i64]) -> T + Sync)),
    minus: (usize, &(dyn Fn(&[i64]) -> T + Sync)),
    rr: i64,
    lo: T,
    hi: T,
) -> u64 {
    let (dp, fu) = plus;
    let (dm, fv) = minus;
    let cmp = |x: &T, y: &T| x.partial_cmp(y).expect("finite values");
    if dm <= dp {
        let mut v = block_values(dm, rr, fv);
        v.sort_by(cmp);
        // lo ≤ u − v ≤ hi  ⇔  u − hi ≤ v ≤ u − lo
        block_stream_sum(dp, rr, fu, |u| {
            let l = v.partition_point(|&x| x < u - hi);
            let h = v.partition_point(|&x| x <= u - lo);
            (h - l) as u64
        })
    } else {
        let mut u = block_values(dp, rr, fu);
        u.sort_by(cmp);
        block_stream_sum(dm, rr, fv, |v| {
            let l = u.partition_point(|&x| x < v + lo);
            let h = u.partition_point(|&x| x <= v + hi);
            (h - l) as u64
        })
    }
}

fn count_integer(ish: &IntegerShell, block: Option<(usize, usize)>, rr: i64, lo: i128, hi: i128, algorithm: Algorithm) -> u64 {
    match (algorithm, block) {
        (Algorithm::BlockSplit, Some((dp, dm))) => {
            let fu = |x: &[i64]| ish.partial(0, x);
            let fv = |x: &[i64]| -ish.partial(dp, x);
            count_pairs::<i128>((dp, &fu), (dm, &fv), rr, lo, hi)
        }
        _ => block_stream_sum(ish.d, rr, |x| ish.partial(0, x), |s| (lo <= s && s <= hi) as u64),
    }
}

fn count_float(fsh: &FloatShell, block: Option<(usize, usize)>, rr: i64, lo: f64, hi: f64, algorithm: Algorithm) -> u64 {
    match (algorithm, block) {
        (Algorithm::BlockSplit, Some((dp, dm))) => {
            let fu = |x: &[i64]| fsh.partial(0, x);
            let fv = |x: &[i64]| -fsh.partial(dp, x);
            count_pairs::<f64>((dp, &fu), (dm, &fv), rr, lo, hi)
        }
        _ => block_stream_sum(fsh.d, rr, |x| fsh.partial(0, x), |s| (lo <= s && s <= hi) as u64),
    }
}

/// Sorted, deduplicated values `Q[x−M]` over `ℤ^d ∩ C_r`, optionally cut to a window.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSet {
    /// Integers `k` standing for `k / scale` with `scale = λμ²`.
    Exact { scale: Rational, values: Vec<i128> },
    Float { values: Vec<f64>, tolerance: f64 },
}

impl ValueSet {
    pub fn len(&self) -> usize {
        match self {
            ValueSet::Exact { values, .. } => values.len(),
            ValueSet::Float { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            ValueSet::Exact { scale, values } => {
                let s = rational_to_f64(scale);
                values.iter().map(|&k| k as f64 / s).collect()
            }
            ValueSet::Float { values, .. } => values.clone(),
        }
    }

    pub fn track(&self) -> Track {
        match self {
            ValueSet::Exact { .. } => Track::Exact,
            ValueSet::Float { .. } => Track::Float,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapOptions {
    pub budget: f64,
    pub tolerance: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { budget: DEFAULT_BUDGET, tolerance: DEFAULT_DEDUP_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub r: Scalar,
    pub window: Option<(Scalar, Scalar)>,
    pub num_values: usize,
    pub max_gap: f64,
    pub gap_argument: f64,
    /// Exact gap and its left endpoint on the rational track.
    pub max_gap_exact: Option<Rational>,
    pub gap_argument_exact: Option<Rational>,
    /// `λ⁻¹μ⁻²`, the spacing every exact gap is a multiple of.
    pub quantum: Option<Rational>,
    pub track: Track,
}

fn distinct_sorted<T: PartialOrd + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup_by(|a, b| a == b);
    v
}

fn exact_window(m: &[Scalar], window: &Option<(Scalar, Scalar)>) -> bool {
    m.iter().all(|x| x.as_rational().is_some())
        && window.as_ref().map_or(true, |(l, h)| l.as_rational().is_some() && h.as_rational().is_some())
}

/// `V(r)` materialised, with pairwise differences restricted to the window while streaming.
pub fn value_set(form: &QuadraticForm, m: &[Scalar], r: &Scalar, window: Option<(Scalar, Scalar)>, opts: &GapOptions) -> Result<ValueSet> {
    let d = form.dim();
    if m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
    }
    let rr = cube_radius(r);
    let block = form.block();
    let base_work = match block {
        Some((dp, dm)) => side_len(dp, rr) + side_len(dm, rr),
        None => side_len(d, rr),
    };
    if base_work > opts.budget {
        return Err(Error::BudgetExceeded(base_work));
    }
    let ish = if form.track() == Track::Exact && exact_window(m, &window) { IntegerShell::new(form, m).filter(|s| s.fits(rr)) } else { None };
    if let Some(ish) = ish {
        let win = match &window {
            Some((l, h)) => {
                let lo = ish.bound_lo(l.as_rational().unwrap()).ok_or(Error::BudgetExceeded(f64::INFINITY))?;
                let hi = ish.bound_hi(h.as_rational().unwrap()).ok_or(Error::BudgetExceeded(f64::INFINITY))?;
                Some((lo, hi))
            }
            None => None,
        };
        let values = match block {
            Some((dp, dm)) => {
                let u = distinct_sorted(block_values(dp, rr, |x| ish.partial(0, x)));
                let v = distinct_sorted(block_values(dm, rr, |x| -ish.partial(dp, x)));
                merge_differences(&u, &v, win, opts.budget)?
            }
            None => block_values(d, rr, |x| ish.partial(0, x)).into_iter().filter(|s| win.map_or(true, |(l, h)| l <= *s && *s <= h)).collect(),
        };
        return Ok(ValueSet::Exact { scale: ish.scale.clone(), values: distinct_sorted(values) });
    }
    let fsh = FloatShell::new(form, m);
    let win = window.as_ref().map(|(l, h)| (l.to_f64() - opts.tolerance, h.to_f64() + opts.tolerance));
    let values = match block {
        Some((dp, dm)) => {
            let u = distinct_sorted(block_values(dp, rr, |x| fsh.partial(0, x)));
            let v = distinct_sorted(block_values(dm, rr, |x| -fsh.partial(dp, x)));
            merge_differences(&u, &v, win, opts.budget)?
        }
        None => block_values(d, rr, |x| fsh.partial(0, x)).into_iter().filter(|s| win.map_or(true, |(l, h)| l <= *s && *s <= h)).collect(),
    };
    let mut values = distinct_sorted(values);
    let tol = opts.tolerance;
    values.dedup_by(|next, kept| *next - *kept <= tol);
    Ok(ValueSet::Float { values, tolerance: tol })
}

fn merge_differences<T>(u: &[T], v: &[T], window: Option<(T, T)>, budget: f64) -> Result<Vec<T>>
where
    T: PartialOrd + Copy + std::ops::Sub<Output = T>,
{
    let mut out = Vec::new();
    for &ui in u {
        let (l, h) = match window {
            // lo ≤ u − v ≤ hi ⇔ u − hi ≤ v ≤ u − lo
            Some((lo, hi)) => (v.partition_point(|&x| x < ui - hi), v.partition_point(|&x| x <= ui - lo)),
            None => (0, v.len()),
        };
        out.extend(v[l..h].iter().map(|&vj| ui - vj));
        if out.len() as f64 > budget {
            return Err(Error::BudgetExceeded(out.len() as f64));
        }
    }
    Ok(out)
}

pub fn value_gaps(form: &QuadraticForm, m: &[Scalar], r: &Scalar, window: Option<(Scalar, Scalar)>) -> Result<GapReport> {
    value_gaps_with(form, m, r, window, &GapOptions::default())
}

/// `d(r)`: the largest difference between consecutive elements of `V(r)`.
pub fn value_gaps_with(form: &QuadraticForm, m: &[Scalar], r: &Scalar, window: Option<(Scalar, Scalar)>, opts: &GapOptions) -> Result<GapReport> {
    let vs = value_set(form, m, r, window.clone(), opts)?;
    if vs.len() < 2 {
        return Err(Error::EmptyValueSet);
    }
    let report = |num_values, max_gap, gap_argument, max_gap_exact, gap_argument_exact, quantum, track| GapReport {
        r: r.clone(),
        window: window.clone(),
        num_values,
        max_gap,
        gap_argument,
        max_gap_exact,
        gap_argument_exact,
        quantum,
        track,
    };
    match &vs {
        ValueSet::Exact { scale, values } => {
            let (i, g) = values.windows(2).enumerate().map(|(i, w)| (i, w[1] - w[0])).fold((0, i128::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            let gap = Rational::from_integer(BigInt::from(g)) / scale;
            let arg = Rational::from_integer(BigInt::from(values[i])) / scale;
            let quantum = Rational::from_integer(BigInt::from(1)) / scale;
            Ok(report(values.len(), rational_to_f64(&gap), rational_to_f64(&arg), Some(gap), Some(arg), Some(quantum), Track::Exact))
        }
        ValueSet::Float { values, .. } => {
            let (i, g) = values.windows(2).enumerate().map(|(i, w)| (i, w[1] - w[0])).fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            Ok(report(values.len(), g, values[i], None, None, None, Track::Float))
        }
    }
}

/// Exact rational gaps between consecutive values, for rational inputs.
pub fn exact_gaps(vs: &ValueSet) -> Option<Vec<Rational>> {
    match vs {
        ValueSet::Exact { scale, values } => Some(values.windows(2).map(|w| Rational::from_integer(BigInt::from(w[1] - w[0])) / scale).collect()),
        ValueSet::Float { .. } => None,
    }
}
