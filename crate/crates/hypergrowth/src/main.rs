//! Command-line front end. Every subcommand prints JSON to stdout; errors
//! go to stderr with exit codes 2 (bad input), 3 (i/o), 4 (numerical).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hypergrowth::error::{Error, Result};
use hypergrowth::hypermodel::fit_hyperbolic;
use hypergrowth::hypotheses::{compare_models, stagnation_report_with, StagnationThresholds};
use hypergrowth::ingest::{parse_series, ParsedSeries, SeriesSummary};
use hypergrowth::regimes::{detect_divergence, find_breakpoint, singularity_margin, DivergenceConfig};
use hypergrowth::report::{
    export_figure_data, render_report_json, run_pipeline, Figure, FitReport, PipelineConfig,
};

#[derive(Parser)]
#[command(
    name = "hypergrowth",
    version,
    about = "Fits finite-time-singularity growth models to sparse series and reports regime structure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Two-column CSV with header `year,value`
    #[arg(long)]
    csv: PathBuf,
    /// Label carried through reports
    #[arg(long, default_value = "series")]
    region: String,
    /// Multiplier applied to every value on ingest
    #[arg(long, default_value_t = 1.0)]
    unit_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a CSV and print its summary
    Ingest(InputArgs),
    /// Fit the model inside a year window
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
    },
    /// Search data years for the best two-regime split
    Segment {
        #[command(flatten)]
        input: InputArgs,
        /// Minimum points each side of a candidate must keep
        #[arg(long, default_value_t = 2)]
        min_side: usize,
        /// Restrict the search to years from here
        #[arg(long)]
        from: Option<f64>,
        /// Restrict the search to years up to here
        #[arg(long)]
        to: Option<f64>,
    },
    /// Scan for sustained departure from a window's extrapolated fit
    Diverge {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        scan_from: f64,
        #[arg(long, default_value_t = 5)]
        persistence: usize,
        #[arg(long, default_value_t = 0.02)]
        min_rel_residual: f64,
    },
    /// Stagnation-vs-growth verdict for a window
    Stagnation {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 0.95)]
        min_r2: f64,
        #[arg(long, default_value_t = 0.05)]
        runs_alpha: f64,
    },
    /// Rank hyperbolic, exponential, and constant fits by AIC
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
    },
    /// Full analysis: report.json, fig1.csv, fig2.csv into a directory
    Report {
        #[arg(long)]
        csv: PathBuf,
        /// JSON overrides for the pipeline configuration
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_series(input: &InputArgs) -> Result<ParsedSeries> {
    let text = read_text(&input.csv)?;
    parse_series(&text, &input.region, input.unit_scale)
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    String::from_utf8(bytes).map_err(|_| Error::Validation("input is not valid UTF-8".into()))
}

fn print_json<T: Serialize>(value: &T) {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    print!("{s}");
}

#[derive(Serialize)]
struct IngestOutput {
    #[serde(flatten)]
    summary: SeriesSummary,
    rows_skipped: usize,
}

#[derive(Serialize)]
struct DivergeOutput {
    fit: FitReport,
    divergence: Option<hypergrowth::regimes::DivergenceReport>,
    singularity_margin_years: Option<f64>,
}

#[derive(Serialize)]
struct ReportManifest {
    report: String,
    fig1: String,
    fig2: String,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(input) => {
            let parsed = read_series(&input)?;
            print_json(&IngestOutput {
                summary: parsed.series.summary(),
                rows_skipped: parsed.rows_skipped,
            });
        }
        Command::Fit { input, from, to } => {
            let parsed = read_series(&input)?;
            let fit = fit_hyperbolic(&parsed.series, (from, to))?;
            print_json(&FitReport::from_fit(&fit));
        }
        Command::Segment {
            input,
            min_side,
            from,
            to,
        } => {
            let parsed = read_series(&input)?;
            let series = match (from, to) {
                (Some(t0), Some(t1)) => hypergrowth::ingest::select_range(&parsed.series, t0, t1)?,
                (None, None) => parsed.series,
                _ => {
                    return Err(Error::Validation(
                        "--from and --to must be given together".into(),
                    ))
                }
            };
            let candidates: Vec<f64> = series.years().collect();
            let seg = find_breakpoint(&series, &candidates, min_side)?;
            print_json(&seg);
        }
        Command::Diverge {
            input,
            from,
            to,
            scan_from,
            persistence,
            min_rel_residual,
        } => {
            let parsed = read_series(&input)?;
            let fit = fit_hyperbolic(&parsed.series, (from, to))?;
            let config = DivergenceConfig {
                persistence,
                min_rel_residual,
            };
            let divergence = detect_divergence(&parsed.series, &fit, scan_from, &config)?;
            let margin = divergence
                .as_ref()
                .map(|d| singularity_margin(&fit, d))
                .transpose()?;
            print_json(&DivergeOutput {
                fit: FitReport::from_fit(&fit),
                divergence,
                singularity_margin_years: margin,
            });
        }
        Command::Stagnation {
            input,
            from,
            to,
            min_r2,
            runs_alpha,
        } => {
            let parsed = read_series(&input)?;
            let thresholds = StagnationThresholds { min_r2, runs_alpha };
            let report = stagnation_report_with(&parsed.series, (from, to), &thresholds)?;
            print_json(&report);
        }
        Command::Compare { input, from, to } => {
            let parsed = read_series(&input)?;
            let cmp = compare_models(&parsed.series, (from, to))?;
            print_json(&cmp);
        }
        Command::Report { csv, config, out } => {
            let config = match config {
                Some(path) => serde_json::from_str(&read_text(&path)?)
                    .map_err(|e| Error::Validation(format!("config: {e}")))?,
                None => PipelineConfig::default(),
            };
            let output = run_pipeline(&csv, &config)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            let report_path = out.join("report.json");
            std::fs::write(&report_path, render_report_json(&output.report))
                .map_err(|e| Error::io(report_path.display().to_string(), e))?;
            let fig1 = out.join("fig1.csv");
            let fig2 = out.join("fig2.csv");
            export_figure_data(&output, Figure::Fig1, &fig1)?;
            export_figure_data(&output, Figure::Fig2, &fig2)?;
            print_json(&ReportManifest {
                report: report_path.display().to_string(),
                fig1: fig1.display().to_string(),
                fig2: fig2.display().to_string(),
            });
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
