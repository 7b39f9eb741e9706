use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use floqdyn::{config, presets, run, CliError, Overrides, Workflow};

/// Floquet dynamics of driven open quantum systems.
///
/// Exit codes: 0 success, 2 invalid configuration, 3 numerical abort, 4 I/O
/// error. The worker count defaults to FLOQDYN_THREADS when neither
/// --threads nor numerics.threads is set.
#[derive(Debug, Parser)]
#[command(name = "floqdyn", version)]
struct Args {
    workflow: Workflow,
    /// TOML run configuration; overlays the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset path; the metadata goes next to it as <stem>.meta.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Print the effective configuration and exit without computing.
    #[arg(long)]
    print_config: bool,
    /// Print the preset names and exit.
    #[arg(long, exclusive = true)]
    list_presets: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::args().any(|a| a == "--list-presets") {
        for name in presets::names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let args = Args::parse();
    match real_main(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floqdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(args: &Args) -> Result<(), CliError> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(CliError::Validation("give --config <path> or --preset <name>".into()));
    }
    let text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let over = Overrides { workflow: Some(args.workflow), seed: args.seed, out: args.out.clone() };
    let cfg = config::load(args.preset.as_deref(), text.as_deref(), &over)?;
    if args.print_config {
        print!("{}", cfg.echo());
        return Ok(());
    }
    let threads = run::resolve_threads(args.threads, &cfg)?;
    let report = run::execute(&cfg, threads)?;
    eprintln!(
        "floqdyn: wrote {} rows to {} (metadata {})",
        report.dataset.table.rows.len(),
        report.csv.display(),
        report.meta.display()
    );
    Ok(())
}
