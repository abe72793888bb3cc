//! Nondegenerate quadratic forms, their spectra and rationality.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{BlockId, Error, Result};
use crate::scalar::{lcm_of_denominators, Rational, Scalar, Surd, Track};

/// Largest dimension accepted by the enumeration-backed operations.
pub const MAX_ENUM_DIM: usize = 16;

const PD_TOL: f64 = 1e-10;
const DEGENERATE_TOL: f64 = 1e-12;

/// A symmetric nondegenerate form `Q[x] = <Qx, x>`, optionally of block type
/// `blockdiag(Q⁺, −Q⁻)` with `Q⁺` on the first `d⁺` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    dim: usize,
    entries: Vec<Scalar>,
    matrix: DMatrix<f64>,
    block: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub q0: f64,
    pub q: f64,
    pub qbar: f64,
    pub eigenvalues: Vec<f64>,
    /// Absolute error radius valid for every eigenvalue.
    pub error_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rationality {
    /// Minimal positive `λ` with `λQ` integral. Surd-valued when all entries share one radicand.
    Rational { lambda: Surd },
    Irrational,
    Unknown,
}

fn check_square(rows: &[Vec<Scalar>]) -> Result<usize> {
    let n = rows.len();
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    Ok(n)
}

fn check_symmetric(rows: &[Vec<Scalar>]) -> Result<()> {
    for i in 0..rows.len() {
        for j in 0..i {
            if rows[i][j] != rows[j][i] {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    Ok(())
}

fn to_dmatrix(rows: &[Vec<Scalar>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j].to_f64())
}

fn all_rational(rows: &[Vec<Scalar>]) -> Option<Vec<Vec<Rational>>> {
    rows.iter()
        .map(|row| row.iter().map(|s| s.as_rational().cloned()).collect::<Option<Vec<_>>>())
        .collect()
}

/// Exact LDLᵀ with symmetric pivoting over the rationals.
fn rational_positive_definite(mut a: Vec<Vec<Rational>>) -> bool {
    let n = a.len();
    for k in 0..n {
        if !a[k][k].is_positive() {
            return false;
        }
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            for j in k + 1..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    true
}

/// Cholesky with diagonal pivoting and a relative floor on the pivots.
fn float_positive_definite(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut m = a.clone();
    let mut done = vec![false; n];
    for _ in 0..n {
        let (p, piv) = (0..n)
            .filter(|&i| !done[i])
            .map(|i| (i, m[(i, i)]))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if piv <= PD_TOL * scale {
            return false;
        }
        done[p] = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let f = m[(i, p)] / piv;
            for j in 0..n {
                if !done[j] {
                    m[(i, j)] -= f * m[(p, j)];
                }
            }
        }
    }
    true
}

fn block_positive_definite(rows: &[Vec<Scalar>]) -> bool {
    match all_rational(rows) {
        Some(q) => rational_positive_definite(q),
        None => float_positive_definite(&to_dmatrix(rows)),
    }
}

impl QuadraticForm {
    /// `blockdiag(plus, −minus)` from two positive definite blocks.
    pub fn new_block_form(plus: Vec<Vec<Scalar>>, minus: Vec<Vec<Scalar>>) -> Result<Self> {
        let dp = check_square(&plus)?;
        let dm = check_square(&minus)?;
        if dp == 0 || dm == 0 {
            return Err(Error::ZeroDimensionBlock);
        }
        check_symmetric(&plus)?;
        check_symmetric(&minus).map_err(|e| match e {
            Error::NotSymmetric(i, j) => Error::NotSymmetric(i + dp, j + dp),
            e => e,
        })?;
        if !block_positive_definite(&plus) {
            return Err(Error::NotPositiveDefinite(BlockId::Plus));
        }
        if !block_positive_definite(&minus) {
            return Err(Error::NotPositiveDefinite(BlockId::Minus));
        }
        let d = dp + dm;
        let mut entries = vec![Scalar::zero(); d * d];
        for i in 0..dp {
            for j in 0..dp {
                entries[i * d + j] = plus[i][j].clone();
            }
        }
        for i in 0..dm {
            for j in 0..dm {
                entries[(dp + i) * d + dp + j] = minus[i][j].neg();
            }
        }
        Self::from_entries(d, entries, Some((dp, dm)))
    }

    /// A general symmetric nondegenerate form, no block structure assumed.
    pub fn symmetric(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let d = check_square(&rows)?;
        if d == 0 {
            return Err(Error::ZeroDimensionBlock);
        }
        check_symmetric(&rows)?;
        let entries = rows.into_iter().flatten().collect();
        Self::from_entries(d, entries, None)
    }

    /// Diagonal form. Block type when all positive entries precede the negative ones.
    pub fn diagonal(diag: Vec<Scalar>) -> Result<Self> {
        let d = diag.len();
        let npos = diag.iter().take_while(|s| s.to_f64() > 0.0).count();
        let block_type = npos > 0 && npos < d && diag[npos..].iter().all(|s| s.to_f64() < 0.0);
        if block_type {
            let plus = (0..npos)
                .map(|i| (0..npos).map(|j| if i == j { diag[i].clone() } else { Scalar::zero() }).collect())
                .collect();
            let minus = (npos..d)
                .map(|i| (npos..d).map(|j| if i == j { diag[i].neg() } else { Scalar::zero() }).collect())
                .collect();
            return Self::new_block_form(plus, minus);
        }
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { diag[i].clone() } else { Scalar::zero() }).collect())
            .collect();
        Self::symmetric(rows)
    }

    /// Convenience: parse every diagonal entry from text.
    pub fn diagonal_str(diag: &[&str]) -> Result<Self> {
        Self::diagonal(diag.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?)
    }

    fn from_entries(d: usize, entries: Vec<Scalar>, block: Option<(usize, usize)>) -> Result<Self> {
        let matrix = DMatrix::from_fn(d, d, |i, j| entries[i * d + j].to_f64());
        let form = QuadraticForm { dim: d, entries, matrix, block };
        form.spectral()?;
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self) -> Option<(usize, usize)> {
        self.block
    }

    pub fn entry(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.dim + j]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Entry-exact track: every entry is a rational.
    pub fn track(&self) -> Track {
        if self.rational_entries().is_some() {
            Track::Exact
        } else {
            Track::Float
        }
    }

    pub fn rational_entries(&self) -> Option<Vec<Rational>> {
        self.entries.iter().map(|s| s.as_rational().cloned()).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.entry(i, j).is_zero()))
    }

    /// `Q⁺` as a matrix (block forms only).
    pub fn plus_block(&self) -> Option<DMatrix<f64>> {
        let (dp, _) = self.block?;
        Some(self.matrix.view((0, 0), (dp, dp)).into_owned())
    }

    /// `Q⁻` as a positive definite matrix (block forms only).
    pub fn minus_block(&self) -> Option<DMatrix<f64>> {
        let (dp, dm) = self.block?;
        Some(-self.matrix.view((dp, dp), (dm, dm)).into_owned())
    }

    fn sub_form(&self, lo: usize, len: usize, negate: bool) -> Result<QuadraticForm> {
        let rows = (lo..lo + len)
            .map(|i| {
                (lo..lo + len)
                    .map(|j| {
                        let e = self.entry(i, j);
                        if negate { e.neg() } else { e.clone() }
                    })
                    .collect()
            })
            .collect();
        QuadraticForm::symmetric(rows)
    }

    /// `Q⁺` as a positive definite form of its own.
    pub fn plus_form(&self) -> Result<QuadraticForm> {
        let (dp, _) = self.block.ok_or(Error::NotBlockType)?;
        self.sub_form(0, dp, false)
    }

    /// `Q⁻` (positive definite) as a form of its own.
    pub fn minus_form(&self) -> Result<QuadraticForm> {
        let (dp, dm) = self.block.ok_or(Error::NotBlockType)?;
        self.sub_form(dp, dm, true)
    }

    /// `Q[x]` in floating point via the full matrix.
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.matrix[(i, j)] * x[j];
            }
            s += row * x[i];
        }
        s
    }

    /// `Q₊[x]`.
    pub fn plus_value(&self, x: &[f64]) -> f64 {
        let qp = self.q_plus();
        let v = DVector::from_column_slice(x);
        v.dot(&(&qp * &v))
    }

    /// `Q[x]` exactly, when all entries are rational.
    pub fn value_exact(&self, x: &[Rational]) -> Option<Rational> {
        let q = self.rational_entries()?;
        let d = self.dim;
        let mut s = Rational::zero();
        for i in 0..d {
            for j in 0..d {
                if !q[i * d + j].is_zero() {
                    s += &q[i * d + j] * &x[i] * &x[j];
                }
            }
        }
        Some(s)
    }

    /// `cQ`. Negative `c` swaps the signature, so the result is no longer block type.
    pub fn scale(&self, c: &Scalar) -> Result<QuadraticForm> {
        if c.is_zero() {
            return Err(Error::Degenerate(0.0));
        }
        let entries: Vec<Scalar> = self.entries.iter().map(|e| e.mul(c)).collect();
        let block = if c.to_f64() > 0.0 { self.block } else { None };
        Self::from_entries(self.dim, entries, block)
    }

    pub fn spectral(&self) -> Result<SpectralSummary> {
        let eigenvalues = self.eigenvalues();
        let abs: Vec<f64> = eigenvalues.iter().map(|l| l.abs()).collect();
        let q = abs.iter().cloned().fold(0.0, f64::max);
        let q0 = abs.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(q0 > DEGENERATE_TOL * q.max(1.0)) {
            return Err(Error::Degenerate(q0));
        }
        let error_radius = 8.0 * self.dim as f64 * f64::EPSILON * q;
        Ok(SpectralSummary { q0, q, qbar: q.max(1.0 / q0), eigenvalues, error_radius })
    }

    /// Eigenvalues; in coordinate order for diagonal forms, ascending within blocks otherwise.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.is_diagonal() {
            return (0..self.dim).map(|i| self.matrix[(i, i)]).collect();
        }
        let sorted = |m: DMatrix<f64>| {
            let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
            e.sort_by(f64::total_cmp);
            e
        };
        match self.block {
            Some((dp, dm)) => {
                let mut e = sorted(self.matrix.view((0, 0), (dp, dp)).into_owned());
                e.extend(sorted(self.matrix.view((dp, dp), (dm, dm)).into_owned()));
                e
            }
            None => sorted(self.matrix.clone()),
        }
    }

    /// `Q₊ = (QᵀQ)^{1/2}`, the spectral absolute value.
    pub fn q_plus(&self) -> DMatrix<f64> {
        if let Some((dp, dm)) = self.block {
            let mut m = self.matrix.clone();
            let minus = -self.matrix.view((dp, dp), (dm, dm)).into_owned();
            m.view_mut((dp, dp), (dm, dm)).copy_from(&minus);
            return m;
        }
        if self.is_diagonal() {
            return self.matrix.map(f64::abs);
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        let abs = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::abs));
        let v = &eig.eigenvectors;
        let m = v * abs * v.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// `|D(Q)M|` read basis-free as `Q₊[M]^{1/2}`; equal to the coordinate formula for diagonal `Q`.
    pub fn dq_norm(&self, m: &[f64]) -> f64 {
        let qp = self.q_plus();
        let v = DVector::from_column_slice(m);
        (v.dot(&(&qp * &v))).max(0.0).sqrt()
    }

    pub fn is_rational(&self) -> Rationality {
        if self.entries.iter().any(|e| matches!(e, Scalar::Float(_))) {
            return Rationality::Unknown;
        }
        let surds: Vec<&Surd> = self
            .entries
            .iter()
            .filter_map(|e| match e {
                Scalar::Exact(s) if !s.is_zero() => Some(s),
                _ => None,
            })
            .collect();
        let k = surds.first().map(|s| s.radicand).unwrap_or(1);
        if surds.iter().any(|s| s.radicand != k) {
            return Rationality::Irrational;
        }
        let l = lcm_of_denominators(surds.iter().map(|s| &s.coeff));
        let g = surds
            .iter()
            .map(|s| (&s.coeff * Rational::from_integer(l.clone())).to_integer().abs())
            .fold(BigInt::zero(), |acc, n| acc.gcd(&n));
        let g = if g.is_zero() { BigInt::one() } else { g };
        // λ·c·√k ∈ ℤ with λ = (l/g)/√k = l/(g·k)·√k
        let lambda = Rational::new(l, g * BigInt::from(k));
        Rationality::Rational { lambda: Surd { coeff: lambda, radicand: k } }
    }

    /// Integer matrix `N = λQ` and rational `λ`, available when every entry is rational.
    pub fn integer_scaling(&self) -> Option<(Vec<BigInt>, Rational)> {
        let q = self.rational_entries()?;
        match self.is_rational() {
            Rationality::Rational { lambda } if lambda.is_rational() => {
                let n = q.iter().map(|x| (x * &lambda.coeff).to_integer()).collect();
                Some((n, lambda.coeff))
            }
            _ => None,
        }
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.matrix[(i, j)]).collect()).collect()
    }
}

impl std::fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_diagonal() {
            write!(f, "diag(")?;
            for i in 0..self.dim {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entry(i, i))?;
            }
            return write!(f, ")");
        }
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, ";")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
        }
        write!(f, "]")
    }
}
