use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shipdata_cli::{
    emit_plotdata, load_inputs, load_processed, run_pipeline, RunOptions, EXIT_FATAL, PROCESSED_CSV, REPORT_JSON,
};
use shipdata_core::ingest::{parse_stage_list, unit_map_from, PipelineConfig};
use shipdata_core::ProcessingReport;

#[derive(Parser)]
#[command(name = "shipdata", version, about = "Process ship operational time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load every configured input and summarize it without processing.
    IngestCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the pipeline and write processed.csv, report.txt, report.json and plot data.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated stages to run, overriding the configuration.
        #[arg(long)]
        stages: Option<String>,
        /// Leave the generation time out of report.txt.
        #[arg(long)]
        no_timestamp_header: bool,
    },
    /// Print the report of a previous run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate plot-data files from a previous run's processed.csv.
    Plotdata {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fatal(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_FATAL as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::IngestCheck { config } => {
            let cfg = match PipelineConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            match load_inputs(&cfg) {
                Ok(inp) => {
                    let ds = &inp.dataset;
                    println!("rows: {}", ds.len());
                    for spec in ds.schema() {
                        println!("  {:<24} present {}", spec.name, ds.present_count(&spec.name));
                    }
                    println!("hindcast grids: {}", inp.grids.len());
                    println!("particulars: {}", if inp.particulars.is_some() { "yes" } else { "no" });
                    for w in &inp.ingest.warnings {
                        println!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fatal(e),
            }
        }
        Command::Run { config, out, stages, no_timestamp_header } => {
            let mut cfg = match PipelineConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fatal(e),
            };
            if let Some(s) = stages {
                match parse_stage_list(&s) {
                    Ok(set) => cfg.stages = set,
                    Err(e) => return fatal(e),
                }
            }
            let opts = RunOptions { out_dir: out, timestamp_header: !no_timestamp_header };
            match run_pipeline(&cfg, &opts) {
                Ok(outcome) => {
                    println!(
                        "rows in: {}, rows out: {}, exit status {}",
                        outcome.input_rows,
                        outcome.processed.dataset.len(),
                        outcome.exit_code
                    );
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fatal(e),
            }
        }
        Command::Report { out } => {
            let path = out.join(REPORT_JSON);
            let report = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|s| ProcessingReport::from_json(&s).map_err(|e| e.to_string()));
            match report {
                Ok(r) => {
                    print!("{}", r.to_text());
                    ExitCode::SUCCESS
                }
                Err(e) => fatal(format!("{}: {e}", path.display())),
            }
        }
        Command::Plotdata { config, out } => {
            let result = PipelineConfig::load(&config).and_then(|cfg| {
                let units = unit_map_from(&cfg.units)?;
                let ds = load_processed(&out.join(PROCESSED_CSV), &cfg, &units)?;
                let particulars = match &cfg.particulars {
                    Some(p) => Some(shipdata_core::ingest::load_particulars(p)?.0),
                    None => None,
                };
                emit_plotdata(&ds, particulars.as_ref(), &out.join(shipdata_cli::pipeline::PLOT_DIR))
            });
            match result {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fatal(e),
            }
        }
    }
}
