use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command};
use commands::Ctx;
use config::{experiment_argv, load_form, CliError, CliResult};
use output::{sidecar_path, write_csv, write_sidecar, Provenance};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    let (cli, argv) = match &cli.command {
        Command::Run(r) => match experiment_argv(&r.config) {
            Ok(inner) => match Cli::try_parse_from(&inner) {
                Ok(c) => (c, inner),
                Err(e) => return fail(&CliError::ConfigParse(format!("{}: {e}", r.config.display()))),
            },
            Err(e) => return fail(&e),
        },
        _ => (cli, argv),
    };
    match execute(&cli, &argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn execute(cli: &Cli, argv: &[String]) -> CliResult<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::ConfigParse("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::ConfigParse(format!("thread pool: {e}")))?;
    }
    let form_file = cli.form.as_deref().map(load_form).transpose()?;
    let ctx = Ctx { form: form_file.as_ref().map(|f| &f.form), seed: cli.seed, budget: cli.budget };

    if cli.dry_run {
        println!("{}: estimated work {}", cli.command.name(), commands::estimate(&ctx, &cli.command)?);
        return Ok(0);
    }

    let start = Instant::now();
    let table = commands::run(&ctx, &cli.command)?;
    let wall = start.elapsed().as_secs_f64();
    for v in &table.violations {
        eprintln!("precondition violated: {v}");
    }
    let code = if table.violations.is_empty() { 0 } else { 2 };

    write_csv(&table, cli.out.as_deref())?;
    if let Some(out) = &cli.out {
        let suite_text = match &cli.command {
            Command::Suite(s) => s.config.as_ref().map(std::fs::read_to_string).transpose()?,
            _ => None,
        };
        let prov = Provenance {
            command: cli.command.name(),
            argv,
            config: serde_json::to_value(cli)?,
            seed: cli.seed,
            threads: rayon::current_num_threads(),
            form: form_file.as_ref().map(|f| (f.path.as_path(), f.source.as_str())),
            extra_files: suite_text.iter().map(|s| ("suite", s.as_str())).collect(),
            wall_seconds: wall,
            exit_status: code,
        };
        write_sidecar(&sidecar_path(out), &table, &prov)?;
    }
    Ok(code)
}
