use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracfp::harness::{
    format_table, run_moment, run_rate_curve, run_stability, run_table, write_csv,
    ExperimentConfig, Mode,
};
use fracfp::Error;

/// Experiments for the time-fractional Fokker-Planck solver.
///
/// Settings are taken from a preset, then a config file, then flags.
/// List-valued flags take comma-separated values.
#[derive(Parser, Debug)]
#[command(name = "fracfp", version)]
struct Cli {
    /// time-graded, time-uniform, space, rate-curve, moment-desk, moment-full or random
    #[arg(long)]
    preset: Option<String>,
    /// File of `key = value` lines using the flag names as keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// manufactured, application, random or decay
    #[arg(long)]
    problem: Option<String>,
    /// time, space, moment, rate-curve or stability
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// explicit (use --gamma) or inverse-alpha
    #[arg(long)]
    grading: Option<String>,
    #[arg(long)]
    num_steps: Option<String>,
    #[arg(long)]
    num_elements: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    half_width: Option<String>,
    #[arg(long)]
    final_time: Option<String>,
    /// global:<points> or elementwise:<points>
    #[arg(long)]
    norm: Option<String>,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(cli: &Cli) -> fracfp::Result<ExperimentConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => ExperimentConfig::preset(name)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &cli.config {
        cfg.parse_str(&std::fs::read_to_string(path)?)?;
    }
    let flags = [
        ("problem", &cli.problem),
        ("mode", &cli.mode),
        ("alpha", &cli.alpha),
        ("gamma", &cli.gamma),
        ("grading", &cli.grading),
        ("num-steps", &cli.num_steps),
        ("num-elements", &cli.num_elements),
        ("seed", &cli.seed),
        ("sigma", &cli.sigma),
        ("half-width", &cli.half_width),
        ("final-time", &cli.final_time),
        ("norm", &cli.norm),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<R: fracfp::harness::CsvRecord>(cfg: &ExperimentConfig, rows: &[R]) -> fracfp::Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_csv(&mut w, rows)?;
            w.flush()?;
        }
        None => write_csv(io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> fracfp::Result<()> {
    let cfg = config(cli)?;
    match cfg.mode {
        Mode::Time | Mode::Space => {
            let rows = run_table(&cfg)?;
            if cfg.out.is_some() {
                print!("{}", format_table(&rows));
            }
            emit(&cfg, &rows)
        }
        Mode::RateCurve => {
            let pts = run_rate_curve(&cfg.alphas, &cfg)?;
            emit(&cfg, &pts)
        }
        Mode::Moment => emit(&cfg, &run_moment(&cfg)?),
        Mode::Stability => emit(&cfg, &run_stability(&cfg)?),
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::PivotBreakdown { .. } => "pivot_breakdown",
        Error::Step { .. } => "step",
        Error::Quadrature { .. } => "quadrature",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\t'], " ");
            eprintln!("error\tkind={}\tmessage={msg}", kind(&e));
            ExitCode::FAILURE
        }
    }
}
