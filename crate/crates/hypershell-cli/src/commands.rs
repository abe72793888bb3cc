use std::time::Instant;

use hypershell::bounds::{default_t_grid, rho, run_inequality_suite, DEFAULT_GAMMA_GRID};
use hypershell::counting::{count_with, estimate_work, value_gaps_with, CountOptions, GapOptions, DEFAULT_BUDGET};
use hypershell::minima::{dioph_d, first_minimum_grid, gamma, measure_from_samples, successive_minima_with, MinimaOptions, DEFAULT_NODE_BUDGET};
use hypershell::theta::{poisson_trials, smoothed_counts, theta_bound_check, theta_sum_with, SmoothingParams, DEFAULT_TERM_BUDGET};
use hypershell::{delta_report, distribution_delta, theta_integral, Algorithm, MinimaProblem, QuadraticForm, Scalar, ShellSpec, ThetaParams};

use crate::args::*;
use crate::config::{load_suite, parse_complex, parse_complex_list, parse_list, parse_lower, parse_scalar, parse_shift, CliError, CliResult};
use crate::output::{opt, Table};
use crate::row;

pub struct Ctx<'a> {
    pub form: Option<&'a QuadraticForm>,
    pub seed: u64,
    pub budget: Option<f64>,
}

impl Ctx<'_> {
    fn form(&self) -> CliResult<&QuadraticForm> {
        self.form.ok_or_else(|| CliError::ConfigParse("this operation needs --form".into()))
    }
}

fn algorithm(a: Option<AlgoArg>) -> Option<Algorithm> {
    a.map(|a| match a {
        AlgoArg::Block => Algorithm::BlockSplit,
        AlgoArg::Direct => Algorithm::Direct,
    })
}

fn shell(form: &QuadraticForm, a: &Option<Scalar>, b: &Scalar, m: &[Scalar], r: &Scalar) -> CliResult<ShellSpec> {
    Ok(match a {
        Some(a) => ShellSpec::new(a.clone(), b.clone(), m.to_vec(), r.clone())?,
        None => ShellSpec::distribution(b.clone(), m.to_vec(), r.clone())?.resolve(form)?,
    })
}

fn f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    parse_list(s, what)
}

fn scalar_list(s: &str, what: &str) -> CliResult<Vec<Scalar>> {
    parse_list(s, what)
}

fn count(ctx: &Ctx, a: &CountArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let lower = parse_lower(&a.a)?;
    let b = parse_scalar(&a.b, "b")?;
    let m = parse_shift(a.m.as_deref(), form.dim())?;
    let opts = CountOptions { algorithm: algorithm(a.algo), budget: ctx.budget.unwrap_or(DEFAULT_BUDGET) };
    let mut t = Table::new(&["r", "a", "b", "count", "work", "algo", "seconds"]);
    for r in scalar_list(&a.r, "r")? {
        let spec = shell(form, &lower, &b, &m, &r)?;
        let start = Instant::now();
        let res = count_with(form, &spec, &opts)?;
        let secs = if a.timing { format!("{:.6}", start.elapsed().as_secs_f64()) } else { String::new() };
        t.push(row![r, opt(spec.a), b, res.count, res.points_evaluated, res.algorithm, secs]);
    }
    Ok(t)
}

fn delta(ctx: &Ctx, a: &DeltaArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let lower = parse_lower(&a.a)?;
    let b = parse_scalar(&a.b, "b")?;
    let m = parse_shift(a.m.as_deref(), form.dim())?;
    let mut t = Table::new(&["r", "count", "volume", "std_error", "delta"]);
    for r in scalar_list(&a.r_list, "r-list")? {
        let rep = match &lower {
            Some(lo) => delta_report(form, &ShellSpec::new(lo.clone(), b.clone(), m.clone(), r.clone())?, a.samples, ctx.seed)?,
            None => distribution_delta(form, b.clone(), m.clone(), r.clone(), a.samples, ctx.seed)?,
        };
        t.push(row![r, rep.count.count, rep.volume.value, rep.volume.std_error, rep.delta]);
    }
    Ok(t)
}

fn distr(ctx: &Ctx, a: &DistrArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let b = parse_scalar(&a.b, "b")?;
    let m = parse_shift(a.m.as_deref(), form.dim())?;
    let mut t = Table::new(&["r", "a", "count", "volume", "std_error", "delta"]);
    for r in scalar_list(&a.r_list, "r-list")? {
        let rep = distribution_delta(form, b.clone(), m.clone(), r.clone(), a.samples, ctx.seed)?;
        t.push(row![r, rep.a, rep.count.count, rep.volume.value, rep.volume.std_error, rep.delta]);
    }
    Ok(t)
}

fn gaps(ctx: &Ctx, a: &GapsArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let m = parse_shift(a.m.as_deref(), form.dim())?;
    let window = match &a.window {
        None => None,
        Some(w) => match &scalar_list(w, "window")?[..] {
            [lo, hi] => Some((lo.clone(), hi.clone())),
            _ => return Err(CliError::ConfigParse(format!("window must be \"lo,hi\", got `{w}`"))),
        },
    };
    let opts = GapOptions { budget: ctx.budget.unwrap_or(DEFAULT_BUDGET), ..GapOptions::default() };
    let mut t = Table::new(&["r", "num_values", "max_gap", "gap_argument", "max_gap_exact", "gap_argument_exact", "quantum", "track"]);
    for r in scalar_list(&a.r_list, "r-list")? {
        let g = value_gaps_with(form, &m, &r, window.clone(), &opts)?;
        t.push(row![r, g.num_values, g.max_gap, g.gap_argument, opt(g.max_gap_exact), opt(g.gap_argument_exact), opt(g.quantum), g.track]);
    }
    Ok(t)
}

fn node_budget(ctx: &Ctx) -> u64 {
    ctx.budget.map_or(DEFAULT_NODE_BUDGET, |b| b as u64)
}

fn minima(ctx: &Ctx, a: &MinimaArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let r = parse_scalar(&a.r, "r")?;
    let tt = parse_scalar(&a.t, "t")?;
    let p = MinimaProblem::new(form.clone(), tt.clone(), r.clone())?;
    let res = successive_minima_with(&p, &MinimaOptions { count: a.count, node_budget: node_budget(ctx) })?;
    let mut t = Table::new(&["r", "t", "k", "minimum", "minimum_exact", "vector"]);
    for (k, (val, vec)) in res.minima.iter().zip(&res.vectors).enumerate() {
        let exact = res.exact_minima.as_ref().map(|e| e[k].to_string());
        let v: Vec<String> = vec.iter().map(i64::to_string).collect();
        t.push(row![r, tt, k + 1, val, opt(exact), v.join(" ")]);
    }
    Ok(t)
}

fn gamma_cmd(ctx: &Ctx, a: &GammaArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let mut t = Table::new(&["r", "T", "t", "scaled_product", "gamma", "argmin"]);
    for r in scalar_list(&a.r_list, "r-list")? {
        let g = gamma(form, r.clone(), a.big_t, a.grid)?;
        for (tt, v) in &g.grid {
            t.push(row![r, a.big_t, tt, v, g.gamma, *tt == g.t_argmin]);
        }
    }
    Ok(t)
}

fn dioph(ctx: &Ctx, a: &DiophArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let mut t = Table::new(&["t", "nu", "D"]);
    for nu in f64_list(&a.nu, "nu")? {
        let d = dioph_d(form, a.t, nu, node_budget(ctx))?;
        t.push(row![a.t, nu, d]);
    }
    Ok(t)
}

fn mmeasure(ctx: &Ctx, a: &MmeasureArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let taus = f64_list(&a.tau, "tau")?;
    let mut t = Table::new(&["r", "kappa", "xi", "tau", "grid", "measure", "resolution"]);
    let resolution = (a.xi - a.kappa) / (a.grid.max(2) - 1) as f64;
    for r in scalar_list(&a.r_list, "r-list")? {
        let samples = first_minimum_grid(form, &r, a.kappa, a.xi, a.grid)?;
        for &tau in &taus {
            let measure = if tau < 1.0 / r.to_f64() { 0.0 } else { measure_from_samples(&samples, tau) };
            t.push(row![r, a.kappa, a.xi, tau, a.grid, measure, resolution]);
        }
    }
    Ok(t)
}

fn theta(ctx: &Ctx, a: &ThetaArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let d = form.dim();
    let m: Vec<f64> = parse_shift(a.m.as_deref(), d)?.iter().map(Scalar::to_f64).collect();
    if let Some(grid) = a.bound_grid {
        let rep = theta_bound_check(form, &m, a.r, grid)?;
        let mut t = Table::new(&["r", "t", "theta_abs", "product_d", "bound", "ratio"]);
        for row in &rep.rows {
            t.push(row![a.r, row.t, row.theta_abs, row.product_d, row.bound, row.ratio]);
        }
        return Ok(t);
    }
    let z = parse_complex(a.z.as_deref().ok_or_else(|| CliError::ConfigParse("theta needs --z (or --bound-grid)".into()))?)?;
    let v = parse_complex_list(a.v.as_deref(), d)?;
    let mut p = ThetaParams::new(form.clone(), a.r, z).with_m(m).with_v(v);
    p.truncation = a.truncation;
    let s = theta_sum_with(&p, ctx.budget.unwrap_or(DEFAULT_TERM_BUDGET))?;
    let i = theta_integral(&p)?;
    let mut t = Table::new(&["r", "z_re", "z_im", "theta_re", "theta_im", "tail", "terms", "integral_re", "integral_im"]);
    t.push(row![a.r, z.re, z.im, s.value.re, s.value.im, s.tail, s.terms, i.re, i.im]);
    Ok(t)
}

fn poisson(ctx: &Ctx, a: &PoissonArgs) -> CliResult<Table> {
    let mut t = Table::new(&["trial", "kind", "dim", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "tail"]);
    for tr in poisson_trials(a.dim, a.trials, ctx.seed)? {
        let r = tr.report;
        t.push(row![tr.trial, tr.kind, a.dim, r.lhs.re, r.lhs.im, r.rhs.re, r.rhs.im, r.residual, r.tail]);
    }
    Ok(t)
}

fn smoothed(ctx: &Ctx, a: &SmoothedArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let d = form.dim();
    let m: Vec<f64> = parse_shift(a.m.as_deref(), d)?.iter().map(Scalar::to_f64).collect();
    let mut sp = SmoothingParams::new(a.a, a.b, a.w, a.eps, d);
    sp.outer = !a.inner;
    if let Some(k) = a.k {
        sp.k = k;
    }
    let side = if sp.outer { "outer" } else { "inner" }.to_string();
    let mut t = Table::new(&["r", "a", "b", "w", "eps", "K", "side", "volz", "volr", "volr_stderr", "lattice_points"]);
    for r in f64_list(&a.r_list, "r-list")? {
        let s = smoothed_counts(form, &m, r, &sp, a.samples, ctx.seed)?;
        t.push(row![r, a.a, a.b, a.w, a.eps, sp.k, side, s.volz, s.volr, s.volr_stderr, s.lattice_points]);
    }
    Ok(t)
}

fn rho_cmd(ctx: &Ctx, a: &RhoArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let grid = match &a.t_grid {
        Some(g) => f64_list(g, "T-grid")?,
        None => default_t_grid(),
    };
    let mut t = Table::new(&["r", "T", "gamma", "value", "rho", "argmin"]);
    for r in f64_list(&a.r_list, "r-list")? {
        let rep = rho(form, r, &grid)?;
        for (big_t, g, v) in &rep.per_t {
            t.push(row![r, big_t, g, v, rep.value, *big_t == rep.t_argmin]);
        }
    }
    Ok(t)
}

fn suite(ctx: &Ctx, a: &SuiteArgs) -> CliResult<Table> {
    let form = ctx.form()?;
    let (cfg, _) = load_suite(a.config.as_deref(), a.r_list.as_deref(), a.r_min, ctx.seed)?;
    let out = run_inequality_suite(form, &cfg)?;
    let mut t = Table::new(&["check", "r", "lhs", "rhs", "constant", "pass"]);
    for rep in &out.reports {
        t.push(row![rep.name, rep.r, rep.lhs, rep.rhs_without_constant, rep.measured_constant, rep.pass]);
    }
    t.violations = out.skipped.iter().map(|s| format!("{} at r = {}: {}", s.check, s.r, s.reason)).collect();
    Ok(t)
}

pub fn run(ctx: &Ctx, cmd: &Command) -> CliResult<Table> {
    match cmd {
        Command::Count(a) => count(ctx, a),
        Command::Delta(a) => delta(ctx, a),
        Command::Distr(a) => distr(ctx, a),
        Command::Gaps(a) => gaps(ctx, a),
        Command::Minima(a) => minima(ctx, a),
        Command::Gamma(a) => gamma_cmd(ctx, a),
        Command::Dioph(a) => dioph(ctx, a),
        Command::Mmeasure(a) => mmeasure(ctx, a),
        Command::Theta(a) => theta(ctx, a),
        Command::PoissonCheck(a) => poisson(ctx, a),
        Command::Smoothed(a) => smoothed(ctx, a),
        Command::Rho(a) => rho_cmd(ctx, a),
        Command::Suite(a) => suite(ctx, a),
        Command::Run(_) => unreachable!("experiments are expanded before dispatch"),
    }
}

fn cube_points(d: usize, half: f64) -> f64 {
    (2.0 * half.floor() + 1.0).powi(d as i32)
}

/// A rough operation count, validated against the same inputs the real run would parse.
pub fn estimate(ctx: &Ctx, cmd: &Command) -> CliResult<String> {
    let form = || ctx.form();
    Ok(match cmd {
        Command::Count(a) => {
            let f = form()?;
            parse_shift(a.m.as_deref(), f.dim())?;
            let algo = algorithm(a.algo).unwrap_or(if f.block().is_some() { Algorithm::BlockSplit } else { Algorithm::Direct });
            let w: f64 = scalar_list(&a.r, "r")?.iter().map(|r| estimate_work(f, r, algo)).sum();
            format!("{w:e} lattice points ({algo})")
        }
        Command::Delta(DeltaArgs { r_list, samples, m, .. }) | Command::Distr(DistrArgs { r_list, samples, m, .. }) => {
            let f = form()?;
            parse_shift(m.as_deref(), f.dim())?;
            let rs = scalar_list(r_list, "r-list")?;
            let w: f64 = rs.iter().map(|r| estimate_work(f, r, Algorithm::Direct)).sum();
            format!("{w:e} lattice points, {} volume samples", *samples as f64 * rs.len() as f64)
        }
        Command::Gaps(a) => {
            let f = form()?;
            let w: f64 = scalar_list(&a.r_list, "r-list")?.iter().map(|r| cube_points(f.dim(), r.to_f64())).sum();
            format!("{w:e} values")
        }
        Command::Minima(_) => format!("at most {:e} enumeration nodes", node_budget(ctx) as f64),
        Command::Gamma(a) => format!("{} minima computations", scalar_list(&a.r_list, "r-list")?.len() * a.grid),
        Command::Dioph(a) => format!("{} lattice searches of at most {:e} nodes", f64_list(&a.nu, "nu")?.len(), node_budget(ctx) as f64),
        Command::Mmeasure(a) => format!("{} first-minimum computations", scalar_list(&a.r_list, "r-list")?.len() * a.grid),
        Command::Theta(a) => match a.bound_grid {
            Some(g) => format!("{g} theta sums and {g} minima computations"),
            None => format!("about {:e} theta terms", cube_points(form()?.dim(), a.truncation * a.r)),
        },
        Command::PoissonCheck(a) => format!("{} instances, at most {:e} terms each", a.trials, 2.0 * hypershell::theta::TRIAL_TERMS as f64),
        Command::Smoothed(a) => {
            let f = form()?;
            let rs = f64_list(&a.r_list, "r-list")?;
            let w: f64 = rs.iter().map(|r| cube_points(f.dim(), (1.0 + a.eps) * r)).sum();
            format!("{w:e} lattice points, {} samples", a.samples * rs.len())
        }
        Command::Rho(a) => {
            let n = a.t_grid.as_deref().map_or(Ok(default_t_grid().len()), |g| f64_list(g, "T-grid").map(|v| v.len()))?;
            format!("{} minima computations", f64_list(&a.r_list, "r-list")?.len() * n * DEFAULT_GAMMA_GRID)
        }
        Command::Suite(a) => {
            let (cfg, _) = load_suite(a.config.as_deref(), a.r_list.as_deref(), a.r_min, ctx.seed)?;
            format!("{} checks at {} radii, {} samples per volume", cfg.checks.len(), cfg.r_list.len(), cfg.samples)
        }
        Command::Run(_) => unreachable!("experiments are expanded before dispatch"),
    })
}
