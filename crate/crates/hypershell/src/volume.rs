//! Lebesgue volumes of shells and the relative remainder `Δ(r, M)`.

use rayon::prelude::*;

use crate::counting::{count_lattice_points, CountResult};
use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::quad::integrate;
use crate::rng::uniform_points;
use crate::scalar::Scalar;
use crate::shells::{Region, ShellSpec};

pub const MIN_SAMPLES: usize = 1000;
pub const QUADRATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    /// Pair counting across the two blocks.
    BlockMc,
    /// Single-stream Monte Carlo for forms without block structure.
    PlainMc,
    Quadrature,
}

impl std::fmt::Display for VolumeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VolumeMethod::BlockMc => "block_mc",
            VolumeMethod::PlainMc => "plain_mc",
            VolumeMethod::Quadrature => "quadrature",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: VolumeMethod,
    pub samples: usize,
    pub seed: u64,
    /// Number of (x⁺, x⁻) pairs behind the estimate.
    pub effective_pairs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    TwoSided,
    Distribution,
}

impl std::fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeltaMode::TwoSided => "two_sided",
            DeltaMode::Distribution => "distribution",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub count: CountResult,
    pub volume: VolumeEstimate,
    pub delta: f64,
    pub mode: DeltaMode,
    /// Lower bound actually used (the cube minimum in distribution mode).
    pub a: Scalar,
}

/// Region reduced to floats: cube half-width, sup-norm floor, value interval, shift.
struct Geometry {
    half_width: f64,
    sup_floor: f64,
    lo: f64,
    hi: f64,
    m: Vec<f64>,
}

fn geometry(form: &QuadraticForm, region: &Region) -> Result<Geometry> {
    let d = form.dim();
    match region {
        Region::Shell(s) => {
            if s.m.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.m.len() });
            }
            let s = s.resolve(form)?;
            Ok(Geometry { half_width: s.r.to_f64(), sup_floor: 0.0, lo: s.a.as_ref().unwrap().to_f64(), hi: s.b.to_f64(), m: s.m_f64() })
        }
        Region::Annulus(s) => {
            if s.m.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.m.len() });
            }
            let r = s.r.to_f64();
            let (l0, h0) = s.i0.to_f64();
            let (lo, hi) = s.i.to_f64();
            Ok(Geometry { half_width: r * h0, sup_floor: r * l0, lo, hi, m: s.m_f64() })
        }
    }
}

fn block_eval(q: &nalgebra::DMatrix<f64>, m: &[f64], pts: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    pts.par_chunks(k)
        .map(|x| {
            let mut y = [0f64; 64];
            for i in 0..k {
                y[i] = x[i] - m[i];
            }
            let mut s = 0.0;
            for i in 0..k {
                let mut t = 0.0;
                for j in 0..k {
                    t += q[(i, j)] * y[j];
                }
                s += t * y[i];
            }
            (s, x.iter().fold(0.0f64, |a, b| a.max(b.abs())))
        })
        .unzip()
}

fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.collect();
    v.sort_by(f64::total_cmp);
    v
}

fn count_in(v: &[f64], lo: f64, hi: f64) -> usize {
    v.partition_point(|&x| x <= hi) - v.partition_point(|&x| x < lo)
}

/// Monte Carlo volume; pair counting for block-type forms.
pub fn volume_estimate(form: &QuadraticForm, region: &Region, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::BadSampleCount(samples));
    }
    let g = geometry(form, region)?;
    let d = form.dim();
    let cube = (2.0 * g.half_width).powi(d as i32);
    let n = samples;
    let Some((dp, dm)) = form.block() else {
        let pts = uniform_points(seed, 0, d, n, -g.half_width, g.half_width);
        let (vals, sups) = block_eval(form.matrix(), &g.m, &pts, d);
        let hits = vals.iter().zip(&sups).filter(|(v, s)| g.lo <= **v && **v <= g.hi && **s >= g.sup_floor).count() as f64;
        let p = hits / n as f64;
        let se = (p * (1.0 - p) / (n as f64 - 1.0)).sqrt();
        return Ok(VolumeEstimate { value: p * cube, std_error: se * cube, method: VolumeMethod::PlainMc, samples, seed, effective_pairs: n as f64 });
    };
    let plus = form.plus_block().unwrap();
    let minus = form.minus_block().unwrap();
    let xp = uniform_points(seed, 0, dp, n, -g.half_width, g.half_width);
    let xm = uniform_points(seed, 1, dm, n, -g.half_width, g.half_width);
    let (u, su) = block_eval(&plus, &g.m[..dp], &xp, dp);
    let (v, sv) = block_eval(&minus, &g.m[dp..], &xm, dm);
    let rho = g.sup_floor;
    let u_all = sorted(u.iter().cloned());
    let v_all = sorted(v.iter().cloned());
    let u_big = sorted(u.iter().zip(&su).filter(|(_, s)| **s >= rho).map(|(x, _)| *x));
    let v_big = sorted(v.iter().zip(&sv).filter(|(_, s)| **s >= rho).map(|(x, _)| *x));
    let norm = n as f64;
    // lo ≤ u − v ≤ hi, and the pair must reach the sup-norm floor through one of its halves
    let rows: Vec<f64> = u
        .par_iter()
        .zip(su.par_iter())
        .map(|(&ui, &si)| {
            let pool = if si >= rho { &v_all } else { &v_big };
            count_in(pool, ui - g.hi, ui - g.lo) as f64 / norm
        })
        .collect();
    let cols: Vec<f64> = v
        .par_iter()
        .zip(sv.par_iter())
        .map(|(&vj, &sj)| {
            let pool = if sj >= rho { &u_all } else { &u_big };
            count_in(pool, vj + g.lo, vj + g.hi) as f64 / norm
        })
        .collect();
    let theta = rows.iter().sum::<f64>() / norm;
    let var = sample_var(&rows) / norm + sample_var(&cols) / norm;
    Ok(VolumeEstimate {
        value: theta * cube,
        std_error: var.max(0.0).sqrt() * cube,
        method: VolumeMethod::BlockMc,
        samples,
        seed,
        effective_pairs: norm * norm,
    })
}

/// `{t : αt² + βt + γ ≤ c}` as at most two intervals.
fn sublevel(alpha: f64, beta: f64, gamma: f64, c: f64) -> Vec<(f64, f64)> {
    let e = c - gamma;
    const INF: f64 = f64::INFINITY;
    if alpha == 0.0 {
        return if beta > 0.0 {
            vec![(-INF, e / beta)]
        } else if beta < 0.0 {
            vec![(e / beta, INF)]
        } else if e >= 0.0 {
            vec![(-INF, INF)]
        } else {
            vec![]
        };
    }
    // roots of αt² + βt − e
    let disc = beta * beta + 4.0 * alpha * e;
    if disc < 0.0 {
        return if alpha > 0.0 { vec![] } else { vec![(-INF, INF)] };
    }
    let sq = disc.sqrt();
    let sgn = if beta >= 0.0 { 1.0 } else { -1.0 };
    let qq = -0.5 * (beta + sgn * sq);
    let (mut t1, mut t2) = if qq != 0.0 { (qq / alpha, -e / qq) } else { (0.0, 0.0) };
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
    }
    if alpha > 0.0 {
        vec![(t1, t2)]
    } else {
        vec![(-INF, t1), (t2, INF)]
    }
}

fn overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                s += hi - lo;
            }
        }
    }
    s
}

/// Deterministic adaptive quadrature, `d ≤ 3`. The innermost coordinate is integrated exactly.
pub fn volume_quadrature(form: &QuadraticForm, region: &Region, tol: f64) -> Result<VolumeEstimate> {
    let d = form.dim();
    if d > 3 {
        return Err(Error::QuadratureDimTooHigh(d));
    }
    let g = geometry(form, region)?;
    let q = form.matrix().clone();
    let w = g.half_width;
    let last = d - 1;
    let alpha = q[(last, last)];
    // measure of admissible x_d given the leading coordinates
    let inner = |lead: &[f64]| -> f64 {
        let y: Vec<f64> = lead.iter().zip(&g.m).map(|(a, b)| a - b).collect();
        let mut beta = 0.0;
        let mut gamma = 0.0;
        for i in 0..last {
            beta += 2.0 * q[(last, i)] * y[i];
            for j in 0..last {
                gamma += q[(i, j)] * y[i] * y[j];
            }
        }
        let outer_sup = lead.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let md = g.m[last];
        let allowed: Vec<(f64, f64)> = if outer_sup >= g.sup_floor || g.sup_floor <= 0.0 {
            vec![(-w - md, w - md)]
        } else {
            vec![(-w - md, -g.sup_floor - md), (g.sup_floor - md, w - md)]
        };
        overlap(&sublevel(alpha, beta, gamma, g.hi), &allowed) - overlap(&sublevel(alpha, beta, gamma, g.lo), &allowed)
    };
    let value = match d {
        1 => inner(&[]),
        2 => integrate(|x| inner(&[x]), -w, w, tol).0,
        _ => {
            let t_in = tol / (4.0 * w);
            integrate(|x| integrate(|y| inner(&[x, y]), -w, w, t_in).0, -w, w, tol).0
        }
    };
    Ok(VolumeEstimate { value, std_error: 0.0, method: VolumeMethod::Quadrature, samples: 0, seed: 0, effective_pairs: 0.0 })
}

/// `Δ(r, M) = |#(H ∩ ℤ^d) − vol H| / vol H`.
pub fn delta_report(form: &QuadraticForm, spec: &ShellSpec, samples: usize, seed: u64) -> Result<DeltaReport> {
    let mode = if spec.a.is_none() { DeltaMode::Distribution } else { DeltaMode::TwoSided };
    let resolved = spec.resolve(form)?;
    let count = count_lattice_points(form, &resolved)?;
    let volume = volume_estimate(form, &Region::Shell(resolved.clone()), samples, seed)?;
    let delta = (count.count as f64 - volume.value).abs() / volume.value;
    Ok(DeltaReport { count, volume, delta, mode, a: resolved.a.unwrap() })
}

/// Remainder over `F_{r,M}(b) = {Q[x−M] ≤ b, |x|_∞ ≤ r}`.
pub fn distribution_delta(form: &QuadraticForm, b: impl Into<Scalar>, m: Vec<Scalar>, r: impl Into<Scalar>, samples: usize, seed: u64) -> Result<DeltaReport> {
    if form.block().is_none() {
        return Err(Error::NotBlockType);
    }
    delta_report(form, &ShellSpec::distribution(b, m, r)?, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shells::{AnnulusShellSpec, Interval};

    fn diag(d: &[&str]) -> QuadraticForm {
        QuadraticForm::diagonal_str(d).unwrap()
    }

    #[test]
    fn disk_area() {
        let q = diag(&["1", "1"]);
        let region: Region = ShellSpec::centered(0, 1, 2, 2).unwrap().into();
        let v = volume_estimate(&q, &region, 200_000, 3).unwrap();
        assert_eq!(v.method, VolumeMethod::PlainMc);
        assert!((v.value - std::f64::consts::PI).abs() < 3.0 * v.std_error + 1e-12);
        let qv = volume_quadrature(&q, &region, 1e-9).unwrap();
        assert!((qv.value - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn whole_square() {
        let q = diag(&["1", "-1"]);
        let region: Region = ShellSpec::centered(-1, 1, 2, 1).unwrap().into();
        let v = volume_estimate(&q, &region, 4000, 1).unwrap();
        assert_eq!(v.value, 4.0);
        assert_eq!(v.std_error, 0.0);
        let qv = volume_quadrature(&q, &region, 1e-9).unwrap();
        assert!((qv.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn deltas_of_small_examples() {
        let q = diag(&["1", "-1"]);
        let rep = delta_report(&q, &ShellSpec::centered(-1, 1, 2, 1).unwrap(), 4000, 1).unwrap();
        assert_eq!(rep.count.count, 9);
        assert!((rep.delta - 1.25).abs() < 1e-12);
        let rep = distribution_delta(&q, 0, vec![Scalar::zero(); 2], 1, 100_000, 5).unwrap();
        assert_eq!(rep.count.count, 7);
        assert_eq!(rep.mode, DeltaMode::Distribution);
        assert!((rep.volume.value - 2.0).abs() < 3.0 * rep.volume.std_error);
    }

    #[test]
    fn sample_floor() {
        let q = diag(&["1", "-1"]);
        let region: Region = ShellSpec::centered(-1, 1, 2, 1).unwrap().into();
        assert_eq!(volume_estimate(&q, &region, 10, 1), Err(Error::BadSampleCount(10)));
        let q3 = diag(&["1", "1", "1", "-1"]);
        let region: Region = ShellSpec::centered(-1, 1, 4, 1).unwrap().into();
        assert_eq!(volume_quadrature(&q3, &region, 1e-6), Err(Error::QuadratureDimTooHigh(4)));
    }

    #[test]
    fn annulus_quadrature_matches_mc() {
        let q = diag(&["1", "-1"]);
        let a = AnnulusShellSpec::new(Interval::new(Scalar::from(1), Scalar::from(2)).unwrap(), Interval::new(-1, 1).unwrap(), vec![Scalar::zero(); 2], 2).unwrap();
        let region: Region = a.into();
        let exact = volume_quadrature(&q, &region, 1e-9).unwrap().value;
        let mc = volume_estimate(&q, &region, 100_000, 9).unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error, "{} vs {exact}", mc.value);
    }
}
