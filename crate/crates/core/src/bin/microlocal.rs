use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use microlocal::experiments::{self, Suite, VerifyOptions};
use microlocal::Error;

/// Batch front end for the microlocal experiments.
#[derive(Parser, Debug)]
#[command(name = "microlocal", disable_help_subcommand = true)]
struct Cli {
    /// Subcommand, or `keys` to list the accepted config keys.
    subcommand: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and manifest.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of the randomized corpora.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suite of verify-all: fast or full.
    #[arg(long)]
    suite: Option<String>,
}

const MISUSE: u8 = 2;

fn misuse(msg: &str) -> ExitCode {
    if !msg.is_empty() {
        eprintln!("error: {msg}");
    }
    eprint!("{}", experiments::usage());
    ExitCode::from(MISUSE)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(MISUSE),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(name) = cli.subcommand.as_deref() else {
        return misuse("");
    };
    if name == "keys" {
        print!("{}", experiments::key_help());
        return ExitCode::SUCCESS;
    }
    if experiments::find_subcommand(name).is_err() {
        return misuse(&format!("unknown subcommand `{name}`"));
    }
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => return fail(&Error::Io(format!("{}: {e}", path.display()))),
        },
        None => None,
    };
    let config = match experiments::configure(name, text.as_deref(), cli.out.clone(), cli.seed) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };

    let outcomes = if name == "verify-all" {
        let suite = match Suite::parse(cli.suite.as_deref().unwrap_or("fast")) {
            Ok(s) => s,
            Err(e) => return misuse(&e.to_string()),
        };
        let mut opts = VerifyOptions::new(suite, cli.seed);
        opts.statphase_constant_scale = match config.real("statphase_constant_scale") {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        let summary = match experiments::verify_all(&opts) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        print!("{}", summary.table());
        summary.outcomes
    } else {
        if cli.suite.is_some() {
            return misuse("--suite applies to verify-all only");
        }
        match experiments::run(&config) {
            Ok(o) => {
                println!(
                    "{}: {} | {}",
                    name,
                    if o.pass() { "PASS" } else { "FAIL" },
                    o.entry.summary
                );
                vec![o]
            }
            Err(e) => return fail(&e),
        }
    };
    match experiments::write_outputs(&cli.out, &outcomes) {
        Ok(path) => println!("manifest: {}", path.display()),
        Err(e) => return fail(&e),
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass())
        .map(|o| {
            o.entry
                .criterion
                .clone()
                .unwrap_or_else(|| o.entry.subcommand.clone())
        })
        .collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
