use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hfe::corpus;
use hfe::pipeline::{self, RunOptions};
use hfe::report::VerificationReport;

#[derive(Parser)]
#[command(name = "hfe", version, about = "Verify metalinear and metaplectic bundle scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files (or built-in scenario names) and print reports.
    Verify {
        #[arg(required = true)]
        files: Vec<String>,
        /// Comma-separated pipelines replacing the scenario's own list.
        #[arg(long, value_delimiter = ',')]
        pipeline: Option<Vec<String>>,
        /// Tolerance override `key=value` (rel, abs, singular, track); repeatable.
        #[arg(long)]
        tolerance: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        report: Format,
        /// Scenarios run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print the scenario JSON schema.
    Schema,
}

enum Outcome {
    Report(VerificationReport),
    Rejected(String),
}

fn read(file: &str) -> Result<String, String> {
    if Path::new(file).exists() {
        return std::fs::read_to_string(file).map_err(|e| e.to_string());
    }
    corpus::get(file)
        .map(str::to_owned)
        .ok_or_else(|| "no such file or built-in scenario".to_string())
}

fn run_one(file: &str, opts: &RunOptions) -> Outcome {
    match read(file).and_then(|t| pipeline::run_text(&t, opts).map_err(|e| e.to_string())) {
        Ok(r) => Outcome::Report(r),
        Err(e) => Outcome::Rejected(format!("{file}: {e}")),
    }
}

fn verify(files: Vec<String>, opts: RunOptions, format: Format, jobs: usize) -> ExitCode {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcomes: Vec<Outcome> = pool.install(|| files.par_iter().map(|f| run_one(f, &opts)).collect());
    let mut code = 0u8;
    let mut rendered = Vec::new();
    for o in &outcomes {
        match o {
            Outcome::Report(r) => {
                code = code.max(r.exit_code() as u8);
                rendered.push(match format {
                    Format::Json => r.to_json(),
                    Format::Text => r.to_text(),
                });
            }
            Outcome::Rejected(msg) => {
                code = code.max(2);
                eprintln!("error: {msg}");
            }
        }
    }
    match format {
        Format::Json if rendered.len() > 1 => {
            let body: Vec<String> = rendered.iter().map(|s| s.trim_end().to_string()).collect();
            println!("[\n{}\n]", body.join(",\n"));
        }
        _ => {
            for r in rendered {
                print!("{r}");
            }
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            files,
            pipeline,
            tolerance,
            seed,
            report,
            jobs,
        } => verify(
            files,
            RunOptions {
                pipelines: pipeline,
                tolerances: tolerance,
                seed,
                base: None,
            },
            report,
            jobs,
        ),
        Command::ListScenarios => {
            for (name, text) in corpus::SCENARIOS {
                let desc = hfe::scenario::parse(text).map(|s| s.description).unwrap_or_default();
                println!("{name}\t{desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Schema => {
            print!("{}", corpus::SCHEMA);
            ExitCode::SUCCESS
        }
    }
}
