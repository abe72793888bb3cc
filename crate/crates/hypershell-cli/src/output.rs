use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::CliResult;

/// A CSV table plus the contexts the operation skipped because a precondition failed.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub violations: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// One CSV cell. Floats use the shortest round-trip form, switching to exponent notation far
/// from unit scale.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        let a = self.abs();
        if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
            format!("{self:e}")
        } else {
            self.to_string()
        }
    }
}

impl<T: Cell> Cell for &T {
    fn cell(&self) -> String {
        (*self).cell()
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => { $(impl Cell for $t { fn cell(&self) -> String { self.to_string() } })* };
}

display_cell!(u32, u64, usize, i64, bool, String, hypershell::Scalar, hypershell::Algorithm, hypershell::Track, hypershell::theta::PoissonKind);

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::cell(&$x)),*] };
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv(table: &Table, out: Option<&Path>) -> CliResult<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(std::fs::File::create(p)?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".json");
    out.with_file_name(name)
}

pub struct Provenance<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub config: Value,
    pub seed: u64,
    pub threads: usize,
    pub form: Option<(&'a Path, &'a str)>,
    pub extra_files: Vec<(&'a str, &'a str)>,
    pub wall_seconds: f64,
    pub exit_status: u8,
}

pub fn write_sidecar(path: &Path, table: &Table, p: &Provenance) -> CliResult<()> {
    let form = p.form.map(|(path, src)| json!({ "path": path.display().to_string(), "source": src }));
    let files: serde_json::Map<String, Value> = p.extra_files.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let doc = json!({
        "tool": "hypershell",
        "version": env!("CARGO_PKG_VERSION"),
        "command": p.command,
        "argv": p.argv,
        "config": p.config,
        "seed": p.seed,
        "threads": p.threads,
        "form": form,
        "files": files,
        "columns": table.header,
        "rows": table.rows.len(),
        "precondition_violations": table.violations,
        "exit_status": p.exit_status,
        "wall_time_seconds": p.wall_seconds,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
