//! Shells `{a ≤ Q[x−M] ≤ b, |x|_∞ ≤ r}`, annuli, and the cube minimum `a_r`.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::scalar::{Rational, Scalar, Track};

/// `H_{r,M}`. `a = None` means `−∞` (distribution-function mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpec {
    pub a: Option<Scalar>,
    pub b: Scalar,
    pub m: Vec<Scalar>,
    pub r: Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: Scalar,
    pub hi: Scalar,
}

impl Interval {
    pub fn new(lo: impl Into<Scalar>, hi: impl Into<Scalar>) -> Result<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo.to_f64() > hi.to_f64() {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }
}

/// `H(r, I₀, I, M) = {r⁻¹|x|_∞ ∈ I₀, Q[x−M] ∈ I}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusShellSpec {
    pub i0: Interval,
    pub i: Interval,
    pub m: Vec<Scalar>,
    pub r: Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Shell(ShellSpec),
    Annulus(AnnulusShellSpec),
}

impl From<ShellSpec> for Region {
    fn from(s: ShellSpec) -> Self {
        Region::Shell(s)
    }
}

impl From<AnnulusShellSpec> for Region {
    fn from(s: AnnulusShellSpec) -> Self {
        Region::Annulus(s)
    }
}

impl ShellSpec {
    pub fn new(a: impl Into<Scalar>, b: impl Into<Scalar>, m: Vec<Scalar>, r: impl Into<Scalar>) -> Result<Self> {
        let s = ShellSpec { a: Some(a.into()), b: b.into(), m, r: r.into() };
        s.validate()?;
        Ok(s)
    }

    /// Distribution-function mode `F_{r,M}(b)`.
    pub fn distribution(b: impl Into<Scalar>, m: Vec<Scalar>, r: impl Into<Scalar>) -> Result<Self> {
        let s = ShellSpec { a: None, b: b.into(), m, r: r.into() };
        s.validate()?;
        Ok(s)
    }

    /// Shell centred at the origin in dimension `d`.
    pub fn centered(a: impl Into<Scalar>, b: impl Into<Scalar>, d: usize, r: impl Into<Scalar>) -> Result<Self> {
        Self::new(a, b, vec![Scalar::zero(); d], r)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r.to_f64() > 0.0) {
            return Err(Error::InvalidParameter(format!("r = {} must be positive", self.r)));
        }
        if let Some(a) = &self.a {
            if a.to_f64() > self.b.to_f64() {
                return Err(Error::InvalidParameter(format!("a = {a} exceeds b = {}", self.b)));
            }
        }
        Ok(())
    }

    pub fn m_f64(&self) -> Vec<f64> {
        self.m.iter().map(Scalar::to_f64).collect()
    }

    /// Replace `a = −∞` by the cube minimum.
    pub fn resolve(&self, form: &QuadraticForm) -> Result<ShellSpec> {
        match self.a {
            Some(_) => Ok(self.clone()),
            None => {
                let a = cube_minimum(form, &self.m, &self.r)?;
                Ok(ShellSpec { a: Some(a), ..self.clone() })
            }
        }
    }

    /// Track for comparisons: exact when form, bounds, shift and radius are rational.
    pub fn track(&self, form: &QuadraticForm) -> Track {
        let exact = form.track() == Track::Exact
            && self.a.as_ref().map_or(true, |a| a.as_rational().is_some())
            && self.b.as_rational().is_some()
            && self.m.iter().all(|x| x.as_rational().is_some())
            && self.r.as_rational().is_some();
        if exact { Track::Exact } else { Track::Float }
    }
}

impl AnnulusShellSpec {
    pub fn new(i0: Interval, i: Interval, m: Vec<Scalar>, r: impl Into<Scalar>) -> Result<Self> {
        let r = r.into();
        if !(r.to_f64() > 0.0) {
            return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
        }
        if i0.lo.to_f64() < 0.0 {
            return Err(Error::InvalidParameter("I0 must lie in [0, ∞)".into()));
        }
        Ok(AnnulusShellSpec { i0, i, m, r })
    }

    pub fn m_f64(&self) -> Vec<f64> {
        self.m.iter().map(Scalar::to_f64).collect()
    }
}

fn exact_point(x: &[f64]) -> Option<Vec<Rational>> {
    x.iter().map(|&v| Rational::from_float(v)).collect()
}

fn shifted(x: &[Rational], m: &[Scalar]) -> Option<Vec<Rational>> {
    x.iter().zip(m).map(|(xi, mi)| mi.as_rational().map(|mi| xi - mi)).collect()
}

fn sup_norm_exact(x: &[Rational]) -> Rational {
    x.iter().map(|v| v.abs()).fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

/// Closed membership test, exact when everything involved is rational.
pub fn contains(region: &Region, form: &QuadraticForm, x: &[f64]) -> Result<bool> {
    let d = form.dim();
    let m = match region {
        Region::Shell(s) => &s.m,
        Region::Annulus(s) => &s.m,
    };
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
    }
    let exact = exact_point(x).and_then(|xe| {
        let y = shifted(&xe, m)?;
        let val = form.value_exact(&y)?;
        Some((sup_norm_exact(&xe), val))
    });
    let xf: Vec<f64> = x.to_vec();
    let mf: Vec<f64> = m.iter().map(Scalar::to_f64).collect();
    let yf: Vec<f64> = xf.iter().zip(&mf).map(|(a, b)| a - b).collect();
    let val_f = form.value(&yf);
    let sup_f = xf.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    // compare p ≤ q picking the exact side when both are available
    let cmp = |lhs: CmpSide, rhs: CmpSide| -> bool {
        match (lhs.exact, rhs.exact) {
            (Some(l), Some(r)) => l <= r,
            _ => lhs.float <= rhs.float,
        }
    };
    let (sup_e, val_e) = match &exact {
        Some((s, v)) => (Some(s.clone()), Some(v.clone())),
        None => (None, None),
    };
    let side = |e: Option<Rational>, f: f64| CmpSide { exact: e, float: f };
    let sc = |s: &Scalar| side(s.as_rational().cloned(), s.to_f64());
    match region {
        Region::Shell(s) => {
            let r_side = sc(&s.r);
            if !cmp(side(sup_e.clone(), sup_f), r_side) {
                return Ok(false);
            }
            let lower = match &s.a {
                Some(a) => cmp(sc(a), side(val_e.clone(), val_f)),
                None => true,
            };
            Ok(lower && cmp(side(val_e, val_f), sc(&s.b)))
        }
        Region::Annulus(s) => {
            let scale = |bound: &Scalar| -> CmpSide {
                let e = bound.as_rational().and_then(|b| s.r.as_rational().map(|r| b * r));
                side(e, bound.to_f64() * s.r.to_f64())
            };
            let in_i0 = cmp(scale(&s.i0.lo), side(sup_e.clone(), sup_f)) && cmp(side(sup_e, sup_f), scale(&s.i0.hi));
            let in_i = cmp(sc(&s.i.lo), side(val_e.clone(), val_f)) && cmp(side(val_e, val_f), sc(&s.i.hi));
            Ok(in_i0 && in_i)
        }
    }
}

struct CmpSide {
    exact: Option<Rational>,
    float: f64,
}

/// Exact rational Gaussian elimination; `None` when singular.
pub(crate) fn solve_rational(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
            let t = &f * &b[k];
            b[i] -= t;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k].clone();
        for j in k + 1..n {
            s -= &a[k][j] * &x[j];
        }
        x[k] = s / &a[k][k];
    }
    Some(x)
}

fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

/// Numeric field used by the box-constrained minimisation.
trait Field: Clone + PartialOrd {
    fn fzero() -> Self;
    fn fadd(&self, o: &Self) -> Self;
    fn fsub(&self, o: &Self) -> Self;
    fn fmul(&self, o: &Self) -> Self;
    fn fneg(&self) -> Self;
    fn fabs(&self) -> Self;
    fn solve(a: Vec<Vec<Self>>, b: Vec<Self>) -> Option<Vec<Self>>;
}

impl Field for f64 {
    fn fzero() -> Self {
        0.0
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fneg(&self) -> Self {
        -self
    }
    fn fabs(&self) -> Self {
        f64::abs(*self)
    }
    fn solve(a: Vec<Vec<Self>>, b: Vec<Self>) -> Option<Vec<Self>> {
        solve_f64(a, b)
    }
}

impl Field for Rational {
    fn fzero() -> Self {
        Zero::zero()
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fneg(&self) -> Self {
        -self
    }
    fn fabs(&self) -> Self {
        Signed::abs(self)
    }
    fn solve(a: Vec<Vec<Self>>, b: Vec<Self>) -> Option<Vec<Self>> {
        solve_rational(a, b)
    }
}

fn quad<F: Field>(a: &[Vec<F>], y: &[F]) -> F {
    let mut s = F::fzero();
    for i in 0..y.len() {
        for j in 0..y.len() {
            s = s.fadd(&a[i][j].fmul(&y[i]).fmul(&y[j]));
        }
    }
    s
}

/// `min Q⁺[y − c]` over `|y|_∞ ≤ r`, by enumerating active sets (each coordinate free, at −r or at +r).
fn min_over_box<F: Field>(a: &[Vec<F>], c: &[F], r: &F) -> F {
    let n = c.len();
    if c.iter().all(|ci| ci.fabs() <= *r) {
        return F::fzero();
    }
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[i][j] == F::fzero()));
    if diagonal {
        let y: Vec<F> = c
            .iter()
            .map(|ci| {
                if *ci > *r {
                    r.clone()
                } else if *ci < r.fneg() {
                    r.fneg()
                } else {
                    ci.clone()
                }
            })
            .collect();
        let diff: Vec<F> = y.iter().zip(c).map(|(yi, ci)| yi.fsub(ci)).collect();
        return quad(a, &diff);
    }
    let mut best: Option<F> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let mut y: Vec<F> = state
            .iter()
            .map(|&s| match s {
                1 => r.fneg(),
                2 => r.clone(),
                _ => F::fzero(),
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        if !free.is_empty() {
            // stationarity on the free coordinates: Q_FF (y_F − c_F) = −Q_FX (y_X − c_X)
            let sys: Vec<Vec<F>> = free.iter().map(|&i| free.iter().map(|&j| a[i][j].clone()).collect()).collect();
            let rhs: Vec<F> = free
                .iter()
                .map(|&i| {
                    let mut s = F::fzero();
                    for j in 0..n {
                        if state[j] != 0 {
                            s = s.fsub(&a[i][j].fmul(&y[j].fsub(&c[j])));
                        }
                    }
                    s
                })
                .collect();
            let Some(delta) = F::solve(sys, rhs) else { continue };
            let mut feasible = true;
            for (k, &i) in free.iter().enumerate() {
                y[i] = c[i].fadd(&delta[k]);
                if y[i].fabs() > *r {
                    feasible = false;
                }
            }
            if !feasible {
                continue;
            }
        }
        let diff: Vec<F> = y.iter().zip(c).map(|(yi, ci)| yi.fsub(ci)).collect();
        let v = quad(a, &diff);
        if best.as_ref().map_or(true, |b| v < *b) {
            best = Some(v);
        }
    }
    best.unwrap_or_else(F::fzero)
}

/// `max Q⁻[y − c]` over `|y|_∞ ≤ r`; a convex maximum sits at a vertex.
fn max_over_box<F: Field>(a: &[Vec<F>], c: &[F], r: &F) -> F {
    let n = c.len();
    let mut best: Option<F> = None;
    for mask in 0u64..(1u64 << n) {
        let diff: Vec<F> = (0..n)
            .map(|i| {
                let y = if mask >> i & 1 == 1 { r.clone() } else { r.fneg() };
                y.fsub(&c[i])
            })
            .collect();
        let v = quad(a, &diff);
        if best.as_ref().map_or(true, |b| v > *b) {
            best = Some(v);
        }
    }
    best.unwrap_or_else(F::fzero)
}

fn a_r_generic<F: Field>(plus: Vec<Vec<F>>, minus: Vec<Vec<F>>, m: &[F], r: &F) -> F {
    let dp = plus.len();
    let lo = min_over_box(&plus, &m[..dp], r);
    let hi = max_over_box(&minus, &m[dp..], r);
    lo.fsub(&hi)
}

/// `a_r = min{Q[x−M] : |x|_∞ ≤ r}` for block-type forms.
///
/// The positive block is minimised over the box exactly; for a diagonal `Q⁺`
/// this is the per-coordinate clamp of `M⁺`. The subtracted block peaks at a vertex.
pub fn cube_minimum(form: &QuadraticForm, m: &[Scalar], r: &Scalar) -> Result<Scalar> {
    let (dp, dm) = form.block().ok_or(Error::NotBlockType)?;
    let d = form.dim();
    if m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
    }
    if dm > 24 {
        return Err(Error::BudgetExceeded((2f64).powi(dm as i32)));
    }
    let exact = form.rational_entries().and_then(|q| {
        let me: Option<Vec<Rational>> = m.iter().map(|x| x.as_rational().cloned()).collect();
        Some((q, me?, r.as_rational()?.clone()))
    });
    if let Some((q, me, re)) = exact {
        if dp <= 10 {
            let plus = (0..dp).map(|i| (0..dp).map(|j| q[i * d + j].clone()).collect()).collect();
            let minus = (dp..d).map(|i| (dp..d).map(|j| -q[i * d + j].clone()).collect()).collect();
            return Ok(Scalar::from(a_r_generic::<Rational>(plus, minus, &me, &re)));
        }
    }
    let mat = form.matrix();
    let plus = (0..dp).map(|i| (0..dp).map(|j| mat[(i, j)]).collect()).collect();
    let minus = (dp..d).map(|i| (dp..d).map(|j| -mat[(i, j)]).collect()).collect();
    let mf: Vec<f64> = m.iter().map(Scalar::to_f64).collect();
    Ok(Scalar::Float(a_r_generic::<f64>(plus, minus, &mf, &r.to_f64())))
}
