use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geoflow_cli::config::{output_dir_override, ScenarioConfig};
use geoflow_cli::output::{write_atomic, OutputDir};
use geoflow_cli::{plot, run_scenario, verify, CliError};

/// Geometric flow laboratory.
#[derive(Parser)]
#[command(name = "geoflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its artifacts.
    Run { config: PathBuf },
    /// Run the acceptance criteria for `all` or one module.
    Verify {
        #[arg(default_value = "all")]
        module: String,
        /// Also write verify.json here (GEOFLOW_OUT takes precedence).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw columns of a diagnostic series CSV as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geoflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = run_scenario(&cfg)?;
            let dir = cfg.resolved_output_dir();
            println!("termination: {}", serde_json::to_string(&report.termination).unwrap_or_default());
            for a in &report.artifacts {
                println!("wrote {}", dir.join(a).display());
            }
            for c in &report.checks {
                let tag = if c.informational { "info" } else if c.passed { "ok" } else { "FAIL" };
                println!("  {tag:<4} {} = {:e} ({})", c.name, c.value, c.bound);
            }
            let failed = report.failed_checks();
            if failed.is_empty() {
                Ok(())
            } else {
                let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
                Err(CliError::Verification(names.join("; ")))
            }
        }
        Command::Verify { module, out } => {
            let summary = verify::verify(&module, |r| eprintln!("{}", r.summary_line()))?;
            let json = serde_json::to_string_pretty(&summary).unwrap_or_default();
            println!("{json}");
            if let Some(dir) = output_dir_override().or(out) {
                let mut dir = OutputDir::create(&dir)?;
                dir.write("verify.json", format!("{json}\n").as_bytes())?;
            }
            eprintln!(
                "verify {}: {}/{} criteria PASS",
                summary.suite, summary.criteria_passed, summary.criteria_total
            );
            if summary.passed {
                Ok(())
            } else {
                let ids: Vec<String> = summary.failing().iter().map(|r| r.id.to_string()).collect();
                Err(CliError::Verification(format!("criteria {} failed", ids.join(", "))))
            }
        }
        Command::Plot { csv, cols, output } => {
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| CliError::Config(format!("csv: cannot read {}: {e}", csv.display())))?;
            let svg = plot::render_svg(&text, &cols)?;
            write_atomic(&output, svg.as_bytes())
        }
    }
}
