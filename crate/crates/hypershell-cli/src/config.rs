//! Form files, suite files, experiment files and the list syntax of the flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use hypershell::bounds::{Check, MaindeltaConstants, SuiteConfig};
use hypershell::{QuadraticForm, Scalar};
use num_complex::Complex64;
use serde::Deserialize;
use toml::Value;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),
    #[error(transparent)]
    Lib(#[from] hypershell::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(hypershell::Error::PreconditionViolated { .. }) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::ConfigParse(msg.into())
}

/// A comma-separated list with at least one entry.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err(cfg_err(format!("empty {what}")));
    }
    items.iter().map(|x| x.parse().map_err(|_| cfg_err(format!("bad entry `{x}` in {what}")))).collect()
}

pub fn parse_scalar(s: &str, what: &str) -> CliResult<Scalar> {
    s.parse().map_err(|_| cfg_err(format!("bad {what} `{s}`")))
}

/// `None` for "-inf".
pub fn parse_lower(s: &str) -> CliResult<Option<Scalar>> {
    if s.trim() == "-inf" {
        return Ok(None);
    }
    parse_scalar(s, "a").map(Some)
}

/// The shift, zero when absent.
pub fn parse_shift(s: Option<&str>, d: usize) -> CliResult<Vec<Scalar>> {
    let m: Vec<Scalar> = match s {
        None => vec![Scalar::zero(); d],
        Some(s) => parse_list(s, "M")?,
    };
    if m.len() != d {
        return Err(cfg_err(format!("M has {} entries, form has dimension {d}", m.len())));
    }
    Ok(m)
}

pub fn parse_complex(s: &str) -> CliResult<Complex64> {
    let parts: Vec<f64> = parse_list(s, "z")?;
    match parts[..] {
        [re] => Ok(Complex64::new(re, 0.0)),
        [re, im] => Ok(Complex64::new(re, im)),
        _ => Err(cfg_err(format!("z must be \"re,im\", got `{s}`"))),
    }
}

pub fn parse_complex_list(s: Option<&str>, d: usize) -> CliResult<Vec<Complex64>> {
    let v: Vec<Complex64> = match s {
        None => vec![Complex64::new(0.0, 0.0); d],
        Some(s) => parse_list(s, "v")?,
    };
    if v.len() != d {
        return Err(cfg_err(format!("v has {} entries, form has dimension {d}", v.len())));
    }
    Ok(v)
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
}

/// Strings are parsed exactly (`"sqrt(2)"`, `"7/4"`), integers are exact, floats go to the
/// float track.
fn scalar_value(v: &Value, what: &str) -> CliResult<Scalar> {
    match v {
        Value::String(s) => parse_scalar(s, what),
        Value::Integer(i) => Ok(Scalar::from(*i)),
        Value::Float(x) => Ok(Scalar::from(*x)),
        other => Err(cfg_err(format!("{what}: expected a number or string, got {other}"))),
    }
}

fn scalar_rows(v: &Value, what: &str) -> CliResult<Vec<Vec<Scalar>>> {
    let rows = v.as_array().ok_or_else(|| cfg_err(format!("{what} must be an array of rows")))?;
    rows.iter()
        .map(|row| {
            let row = row.as_array().ok_or_else(|| cfg_err(format!("{what}: each row must be an array")))?;
            row.iter().map(|x| scalar_value(x, what)).collect()
        })
        .collect()
}

#[derive(Debug)]
pub struct FormFile {
    pub form: QuadraticForm,
    pub path: PathBuf,
    pub source: String,
}

/// `dim` plus one of `plus_block`/`minus_block`, `matrix` or `diagonal`.
pub fn load_form(path: &Path) -> CliResult<FormFile> {
    let source = read(path)?;
    let table: toml::Table = source.parse().map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    for key in table.keys() {
        if !["dim", "plus_block", "minus_block", "matrix", "diagonal"].contains(&key.as_str()) {
            return Err(cfg_err(format!("{}: unknown key `{key}`", path.display())));
        }
    }
    let form = match (table.get("plus_block"), table.get("minus_block"), table.get("matrix"), table.get("diagonal")) {
        (Some(p), Some(m), None, None) => QuadraticForm::new_block_form(scalar_rows(p, "plus_block")?, scalar_rows(m, "minus_block")?)?,
        (None, None, Some(m), None) => QuadraticForm::symmetric(scalar_rows(m, "matrix")?)?,
        (None, None, None, Some(d)) => {
            let d = d.as_array().ok_or_else(|| cfg_err("diagonal must be an array"))?;
            QuadraticForm::diagonal(d.iter().map(|x| scalar_value(x, "diagonal")).collect::<CliResult<_>>()?)?
        }
        _ => return Err(cfg_err(format!("{}: give plus_block and minus_block, or matrix, or diagonal", path.display()))),
    };
    if let Some(dim) = table.get("dim") {
        let dim = dim.as_integer().ok_or_else(|| cfg_err("dim must be an integer"))?;
        if dim != form.dim() as i64 {
            return Err(cfg_err(format!("dim = {dim} but the matrix has dimension {}", form.dim())));
        }
    }
    Ok(FormFile { form, path: path.to_path_buf(), source })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    r_list: Option<Vec<f64>>,
    a: Option<Value>,
    b: Option<Value>,
    #[serde(rename = "M")]
    m: Option<Vec<Value>>,
    xi: Option<f64>,
    delta: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    t_points: Option<usize>,
    t_max: Option<f64>,
    ceiling: Option<f64>,
    factor: Option<f64>,
    r_min: Option<f64>,
    checks: Option<Vec<String>>,
    constants: Option<ConstantsFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsFile {
    c: Option<f64>,
    c_qm: Option<f64>,
    k: Option<u32>,
}

/// Suite defaults overlaid with the file, then the flags. The global seed applies unless the
/// file sets one.
pub fn load_suite(path: Option<&Path>, r_list: Option<&str>, r_min: Option<f64>, seed: u64) -> CliResult<(SuiteConfig, Option<String>)> {
    let (file, source) = match path {
        Some(p) => {
            let src = read(p)?;
            let f: SuiteFile = toml::from_str(&src).map_err(|e| cfg_err(format!("{}: {e}", p.display())))?;
            (f, Some(src))
        }
        None => (SuiteFile::default(), None),
    };
    let mut cfg = SuiteConfig { seed, ..SuiteConfig::default() };
    if let Some(r) = file.r_list {
        if r.is_empty() {
            return Err(cfg_err("empty r_list"));
        }
        cfg.r_list = r;
    }
    if let Some(r) = r_list {
        cfg.r_list = parse_list(r, "r-list")?;
    }
    if let Some(a) = &file.a {
        cfg.a = scalar_value(a, "a")?;
    }
    if let Some(b) = &file.b {
        cfg.b = scalar_value(b, "b")?;
    }
    if let Some(m) = &file.m {
        cfg.m = Some(m.iter().map(|x| scalar_value(x, "M")).collect::<CliResult<_>>()?);
    }
    macro_rules! take {
        ($($f:ident),*) => { $(if let Some(x) = file.$f { cfg.$f = x; })* };
    }
    take!(xi, delta, samples, seed, t_points, t_max, ceiling, factor, r_min);
    if let Some(r) = r_min {
        cfg.r_min = r;
    }
    if let Some(names) = &file.checks {
        cfg.checks = names.iter().map(|n| Check::parse(n).ok_or_else(|| cfg_err(format!("unknown check `{n}`")))).collect::<CliResult<_>>()?;
    }
    if let Some(c) = file.constants {
        let d = MaindeltaConstants::default();
        cfg.constants = MaindeltaConstants { c: c.c.unwrap_or(d.c), c_qm: c.c_qm.unwrap_or(d.c_qm), k: c.k.unwrap_or(d.k) };
    }
    Ok((cfg, source))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    operation: String,
    form: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    budget: Option<f64>,
    #[serde(default)]
    params: toml::Table,
}

fn flag_value(key: &str, v: &Value) -> CliResult<Option<String>> {
    Ok(Some(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(x) => x.to_string(),
        Value::Boolean(_) => return Ok(None),
        Value::Array(items) => {
            let parts = items.iter().map(|x| flag_value(key, x)?.ok_or_else(|| cfg_err(format!("{key}: nested booleans")))).collect::<CliResult<Vec<_>>>()?;
            parts.join(",")
        }
        other => return Err(cfg_err(format!("{key}: unsupported value {other}"))),
    }))
}

/// Translates an experiment file into the equivalent command line. Paths are relative to the
/// file; `run` inside an experiment is rejected.
pub fn experiment_argv(path: &Path) -> CliResult<Vec<String>> {
    let src = read(path)?;
    let exp: ExperimentFile = toml::from_str(&src).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    if exp.operation == "run" {
        return Err(cfg_err("an experiment cannot run another experiment"));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut argv = vec!["hypershell".to_string()];
    if let Some(f) = exp.form {
        let f = base.join(f);
        if !f.exists() {
            return Err(cfg_err(format!("form file {} does not exist", f.display())));
        }
        argv.extend(["--form".into(), f.display().to_string()]);
    }
    if let Some(o) = exp.out {
        argv.extend(["--out".into(), base.join(o).display().to_string()]);
    }
    if let Some(s) = exp.seed {
        argv.extend(["--seed".into(), s.to_string()]);
    }
    if let Some(t) = exp.threads {
        argv.extend(["--threads".into(), t.to_string()]);
    }
    if let Some(b) = exp.budget {
        argv.extend(["--budget".into(), b.to_string()]);
    }
    argv.push(exp.operation.clone());
    for (key, v) in &exp.params {
        let flag = format!("--{}", key.replace('_', "-"));
        match (v, flag_value(key, v)?) {
            (Value::Boolean(true), _) => argv.push(flag),
            (Value::Boolean(false), _) => {}
            (_, Some(val)) => {
                if key == "config" {
                    argv.extend([flag, base.join(val).display().to_string()]);
                } else {
                    argv.push(format!("{flag}={val}"));
                }
            }
            (_, None) => {}
        }
    }
    Ok(argv)
}
