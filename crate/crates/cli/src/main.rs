use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rbsb_core::case_study::to_markdown;
use rbsb_core::config::default_programme;
use rbsb_core::output::{emit_plot_data, read_reports, run_simulate};
use rbsb_core::sim::{assurance, with_workers, AssuranceSpec};
use rbsb_core::{
    parse_config, run_analyze, run_case_study, AnalysisReport, CaseStudyInput, DesignKind,
    ProgrammeSpec, RbsbError, ReportOptions, Result, RunConfig, StudySummary,
};

#[derive(Parser)]
#[command(name = "rbsb", version, about = "Robust sequential borrowing across an ordered programme of studies")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo operating characteristics for one or more scenarios.
    Simulate(SimulateArgs),
    /// Sequential analysis of user-supplied study summaries.
    Analyze(AnalyzeArgs),
    /// Analyse a case-study file of strata (the packaged asthma example by default).
    CaseStudy(CaseStudyArgs),
    /// Monte Carlo assurance for one design at one stage.
    Assurance(AssuranceArgs),
    /// Long-format plot data from a saved simulation report.
    EmitPlots(EmitPlotsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Config or run manifest (JSON). Defaults to the nine packaged settings.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    /// Comma-separated designs: standalone, full_pooling, adjacent, rbsb.
    #[arg(long, value_delimiter = ',')]
    designs: Option<Vec<DesignKind>>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(short, long)]
    workers: Option<usize>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Json,
}

#[derive(Args)]
struct ReportArgs {
    /// Write `<name>.json` and `<name>.md` into this directory instead of printing.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(short, long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON with `summaries` and optionally `programme`, `credible_level`, `exponentiate`.
    input: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct CaseStudyArgs {
    input: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct AssuranceArgs {
    /// JSON with `assurance` and optionally `programme`.
    spec: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EmitPlotsArgs {
    /// `report.json` written by `simulate`.
    #[arg(long)]
    report: PathBuf,
    #[arg(short, long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeInput {
    summaries: Vec<StudySummary>,
    programme: Option<ProgrammeSpec>,
    #[serde(default = "default_level")]
    credible_level: f64,
    #[serde(default)]
    exponentiate: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssuranceInput {
    assurance: AssuranceSpec,
    programme: Option<ProgrammeSpec>,
}

fn default_level() -> f64 {
    0.95
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| RbsbError::Io { path: path.into(), source })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| RbsbError::Io { path: path.into(), source })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| RbsbError::Input(format!("{}: {e}", path.display())))
}

fn maybe_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(0) => Err(RbsbError::Config("--workers must be at least 1".into())),
        Some(n) => with_workers(n, f),
        None => Ok(f()),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::packaged(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(designs) = args.designs {
        cfg.designs = designs;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let outcome = maybe_workers(args.workers, || run_simulate(&cfg))??;
    println!(
        "{} scenario(s), {} replicates, seed {} in {:.1}s",
        outcome.reports.len(),
        cfg.reps,
        cfg.seed,
        outcome.manifest.wall_time_seconds
    );
    for f in &outcome.files {
        println!("  {}", f.display());
    }
    Ok(())
}

fn emit_report(report: &AnalysisReport, args: &ReportArgs, name: &str) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serialises");
    let md = to_markdown(report);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| RbsbError::Io { path: dir.clone(), source })?;
            write(&dir.join(format!("{name}.json")), &json)?;
            write(&dir.join(format!("{name}.md")), &md)?;
            println!("wrote {name}.json and {name}.md to {}", dir.display());
        }
        None => match args.format {
            Format::Json => println!("{json}"),
            Format::Markdown => print!("{md}"),
        },
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let input: AnalyzeInput = parse_json(&args.input)?;
    let programme = match input.programme {
        Some(p) => p,
        None => {
            let k = input.summaries.len().max(1);
            let mut p = default_programme();
            p.borrow_weights = (0..k).map(|j| if j == 0 { 0.0 } else { 0.5 }).collect();
            p
        }
    };
    let opts = ReportOptions {
        credible_level: input.credible_level,
        exponentiate: input.exponentiate,
    };
    let report = run_analyze(&input.summaries, &programme, opts)?;
    emit_report(&report, &args.report, "analysis")
}

fn case_study(args: CaseStudyArgs) -> Result<()> {
    let input = match &args.input {
        Some(path) => CaseStudyInput::from_json(&read(path)?)?,
        None => CaseStudyInput::start(),
    };
    let report = run_case_study(&input)?;
    emit_report(&report, &args.report, "case_study")
}

fn run_assurance(args: AssuranceArgs) -> Result<()> {
    let input: AssuranceInput = parse_json(&args.spec)?;
    let programme = input.programme.unwrap_or_else(default_programme);
    let report = maybe_workers(args.workers, || assurance(&input.assurance, &programme, args.reps, args.seed))??;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    Ok(())
}

fn emit_plots(args: EmitPlotsArgs) -> Result<()> {
    let reports = read_reports(&args.report)?;
    for f in emit_plot_data(&reports, &args.out)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::CaseStudy(a) => case_study(a),
        Command::Assurance(a) => run_assurance(a),
        Command::EmitPlots(a) => emit_plots(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
