mod checks;
mod ops;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qrf_core::json::{load_group, ScenarioJson};
use qrf_core::quantum::standard_system_rep;
use qrf_core::{Frame, UnitaryRep};
use serde_json::Value;

use checks::{Setup, SUITES};
use report::Report;

#[derive(Parser)]
#[command(name = "qrf", version, about = "Quantum reference frame verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a report
    Verify(VerifyArgs),
    /// Relativize an operator (or apply the predual to a state)
    Yen(OpArgs),
    /// G-twirl an operator or state
    Twirl(OpArgs),
    /// Change a framed relative state from one frame to another
    FrameChange {
        #[command(flatten)]
        args: OpArgs,
        /// Source frame, numbered from 1 (overrides the request)
        #[arg(long)]
        from: Option<usize>,
        /// Target frame, numbered from 1 (overrides the request)
        #[arg(long)]
        to: Option<usize>,
    },
    /// Reconstruct a system state relative to frame 2 from one relative to frame 1
    Reconstruct(OpArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Built-in group (z1..z8, d3..d5, s3, s4, q8, optionally prefixed builtin:) or group JSON file
    #[arg(long)]
    group: Option<String>,
    /// Scenario JSON with frames and system; replaces the default frames
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated suites, or "all"
    #[arg(long, value_delimiter = ',', default_value = "all")]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for sampled checks [default: the scenario seed, else 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Seeded samples per randomized check
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// System dimension for the default scenario
    #[arg(long, default_value_t = 2)]
    system_dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report runtime_ms as 0 so reports are byte-identical across runs
    #[arg(long)]
    no_timing: bool,
}

#[derive(clap::Args)]
struct OpArgs {
    /// Request JSON file, or - for stdin
    #[arg(long)]
    input: PathBuf,
    /// Group used when the request does not name one
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors in inputs exit with 2, failed checks with 1.
enum Failure {
    Input(anyhow::Error),
    Checks,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QRF_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("QRF_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        bail!("QRF_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Verify(args) => verify(args),
        Command::Yen(a) => {
            let req = ops::parse(&read_input(&a.input)?, "yen")?;
            emit(&ops::yen_op(req, a.group.as_deref())?, a.out.as_deref())
        }
        Command::Twirl(a) => {
            let req = ops::parse(&read_input(&a.input)?, "twirl")?;
            emit(&ops::twirl_op(req, a.group.as_deref())?, a.out.as_deref())
        }
        Command::FrameChange { args, from, to } => {
            let req = ops::parse(&read_input(&args.input)?, "frame-change")?;
            emit(&ops::frame_change_op(req, from, to)?, args.out.as_deref())
        }
        Command::Reconstruct(a) => {
            let req = ops::parse(&read_input(&a.input)?, "reconstruct")?;
            emit(&ops::reconstruct_op(req, a.group.as_deref())?, a.out.as_deref())
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        return io::read_to_string(io::stdin()).context("reading stdin");
    }
    fs::read_to_string(path).with_context(|| format!("cannot read '{}'", path.display()))
}

fn emit(v: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).map_err(anyhow::Error::from)?;
    text.push('\n');
    write_out(text.as_bytes(), out)?;
    Ok(())
}

fn write_out(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write '{}'", p.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn selected_suites(requested: &[String]) -> Result<Vec<String>> {
    if requested.iter().any(|s| s == "all") {
        return Ok(SUITES.iter().map(|s| s.to_string()).collect());
    }
    for s in requested {
        if !SUITES.contains(&s.as_str()) {
            bail!("unknown suite '{s}'; expected one of {} or all", SUITES.join(", "));
        }
    }
    Ok(requested.to_vec())
}

fn build_setup(args: &VerifyArgs) -> Result<(String, Setup)> {
    if args.tol.is_nan() || args.tol <= 0.0 {
        bail!("--tol must be positive");
    }
    if args.trials == 0 {
        bail!("--trials must be positive");
    }
    if let Some(path) = &args.scenario {
        let text = read_input(path)?;
        let sc: ScenarioJson =
            serde_json::from_str(&text).with_context(|| format!("invalid scenario '{}'", path.display()))?;
        let group = sc.group.build()?;
        if let Some(flag) = &args.group {
            if load_group(flag)? != group {
                bail!("--group {flag} differs from the scenario group");
            }
        }
        let frames = sc.frames.iter().map(|f| f.build_in(&group)).collect::<qrf_core::Result<Vec<_>>>()?;
        if frames.is_empty() {
            bail!("scenario needs at least one frame");
        }
        if let Some(i) = frames.iter().position(|f| !f.flags().principal) {
            bail!("scenario frame {} is not principal", i + 1);
        }
        let system = sc.system.rep.build(&group, sc.system.dim)?;
        let label = args.group.clone().unwrap_or_else(|| path.display().to_string());
        let seed = args.seed.unwrap_or(sc.seed);
        return Ok((label, Setup { group, frames, system, trials: args.trials, seed }));
    }
    let Some(name) = &args.group else { bail!("pass --group or --scenario") };
    let group = load_group(name)?;
    let frames = vec![
        Frame::canonical(&UnitaryRep::left_right(&group))?,
        Frame::canonical(&UnitaryRep::left_regular(&group))?,
    ];
    let system = standard_system_rep(&group, args.system_dim)?;
    Ok((name.clone(), Setup { group, frames, system, trials: args.trials, seed: args.seed.unwrap_or(0) }))
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites = selected_suites(&args.suite)?;
    let (label, setup) = build_setup(&args)?;
    let (mut records, skipped) = checks::run(&setup, &suites, args.tol);
    if args.no_timing {
        records.iter_mut().for_each(|r| r.runtime_ms = 0);
    }
    let report = Report::new(label, setup.group.order(), args.tol, setup.seed, args.trials, records, skipped);
    let mut buf = Vec::new();
    match args.format {
        Format::Json => report.write_json(&mut buf)?,
        Format::Csv => report.write_csv(&mut buf)?,
    }
    write_out(&buf, args.out.as_deref())?;
    let s = &report.summary;
    eprintln!("qrf verify: {} passed, {} failed, {} skipped", s.passed, s.failed, s.skipped);
    for r in report.records.iter().filter(|r| !r.pass) {
        match (&r.detail, r.max_deviation) {
            (Some(d), _) => eprintln!("  FAIL {}: {d}", r.name),
            (None, Some(dev)) => eprintln!("  FAIL {}: max deviation {dev:.2e} above {:.0e}", r.name, args.tol),
            (None, None) => eprintln!("  FAIL {}: deviation not finite", r.name),
        }
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
