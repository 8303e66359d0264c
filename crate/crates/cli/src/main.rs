use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sibgain_core::config::{apply_override, parse_config, to_toml};
use sibgain_core::harness::{grid_config, ResultTable};
use sibgain_core::report::{self, Format, Provenance};
use sibgain_core::{run_cell, run_table, with_threads, Error, ScenarioConfig, ScenarioId, SimulationSet, TableKind};

mod analytic;

const PRECEDENCE: &str = "\
Configuration precedence, lowest to highest:
  1. built-in baseline (delta=3, chi=1, gamma=2, psi=5, other coefficients 0,
     n_obs=5000, n_runs=1000, seed=20160301); for `analytic`, `simulate` and
     `cell` the scenario's grid parameters are added (e.g. phi=0.9 for 2A)
  2. --config FILE, which replaces layer 1 entirely (omitted coefficients are 0)
  3. --override/-D key=value, in the order given
  4. --seed, --runs and --n
Table commands then set eta and pi per simulation set and the grid's
additional parameters per model.";

#[derive(Debug, Parser)]
#[command(
    name = "sibgain",
    version,
    about = "Sibling gain-score robustness test: path analysis and Monte Carlo tables"
)]
#[command(after_long_help = PRECEDENCE)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trek table and population partial coefficients for one scenario.
    Analytic(ScenarioArgs),
    /// One replication's sibling-pair sample as CSV.
    Simulate(SimulateArgs),
    /// Robustness-test coefficient for the seven main models, all four sets.
    Table1(Common),
    /// Same grid with both treatment coefficients.
    Appendix1(Common),
    /// Post-hoc single-treatment associations.
    Appendix2(Common),
    /// One scenario under one simulation set.
    Cell(CellArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Md,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Md => Format::Markdown,
        }
    }
}

#[derive(Debug, Args)]
#[command(after_long_help = PRECEDENCE)]
struct Common {
    /// Scenario file (flat TOML, keys are field names).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `-D eta=0.3`. Repeatable.
    #[arg(short = 'D', long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; tables default to csv, `analytic` to aligned text.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (falls back to SIBGAIN_THREADS, then all cores).
    #[arg(long, env = "SIBGAIN_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Master seed (default 20160301).
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per cell.
    #[arg(long)]
    runs: Option<usize>,
    /// Sibling pairs per replication.
    #[arg(long)]
    n: Option<usize>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario id: 1A-1D, 2A-2F, PH-nu, PH-tau (e.g. fig2b).
    #[arg(long)]
    scenario: String,
    /// Simulation set (1.1, 1.2, 2.1, 2.2) supplying eta and pi.
    #[arg(long)]
    set: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Replication index.
    #[arg(long, default_value_t = 0)]
    run: usize,
}

#[derive(Debug, Args)]
struct CellArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    set: String,
    #[command(flatten)]
    common: Common,
}

/// Usage and configuration problems exit with 2, everything else with 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigParse { .. }
            | Error::InvalidConfig { .. }
            | Error::UnknownScenario(_)
            | Error::UnknownSimulationSet(_) => Failure::Usage(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn resolve_config(common: &Common, scenario: Option<ScenarioId>) -> Outcome<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))
                .map_err(Failure::Usage)?;
            parse_config(&text).map_err(|e| Failure::Usage(anyhow!("{}: {e}", path.display())))?
        }
        None => {
            let base = ScenarioConfig::baseline();
            match scenario {
                Some(id) => grid_config(id, &base),
                None => base,
            }
        }
    };
    for assignment in &common.overrides {
        apply_override(&mut config, assignment)?;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(runs) = common.runs {
        config.n_runs = runs;
    }
    if let Some(n) = common.n {
        config.n_obs = n;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::Runtime)
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .context("cannot write to standard output")
            .map_err(Failure::Runtime),
    }
}

fn in_pool<T: Send>(common: &Common, f: impl FnOnce() -> T + Send) -> Outcome<T> {
    match common.threads {
        Some(k) => Ok(with_threads(k as usize, f)?),
        None => Ok(f()),
    }
}

fn dump_if_requested(common: &Common, config: &ScenarioConfig) -> Outcome<bool> {
    if common.dump_config {
        write_output(common.out.as_deref(), &to_toml(config))?;
    }
    Ok(common.dump_config)
}

fn table(kind: TableKind, common: &Common) -> Outcome<()> {
    let config = resolve_config(common, None)?;
    if dump_if_requested(common, &config)? {
        return Ok(());
    }
    let result = in_pool(common, || run_table(kind, &config))??;
    let format = common.format.map_or(Format::Csv, Format::from);
    write_output(common.out.as_deref(), &report::render(format, &result, &Provenance::new(&config)))
}

fn cell(args: &CellArgs) -> Outcome<()> {
    let id: ScenarioId = args.scenario.parse()?;
    let set: SimulationSet = args.set.parse()?;
    let config = resolve_config(&args.common, Some(id))?;
    if dump_if_requested(&args.common, &config)? {
        return Ok(());
    }
    let aggregate = in_pool(&args.common, || run_cell(id, set, &config))??;
    let result = ResultTable::single(id, &config, aggregate);
    let format = args.common.format.map_or(Format::Csv, Format::from);
    write_output(args.common.out.as_deref(), &report::render(format, &result, &Provenance::new(&config)))
}

fn scenario_config(args: &ScenarioArgs) -> Outcome<(ScenarioId, ScenarioConfig)> {
    let id: ScenarioId = args.scenario.parse()?;
    let mut config = resolve_config(&args.common, Some(id))?;
    if let Some(set) = &args.set {
        set.parse::<SimulationSet>()?.apply(&mut config);
    }
    Ok((id, config))
}

fn simulate(args: &SimulateArgs) -> Outcome<()> {
    let (id, config) = scenario_config(&args.scenario)?;
    let common = &args.scenario.common;
    if dump_if_requested(common, &config)? {
        return Ok(());
    }
    if matches!(common.format, Some(FormatArg::Json | FormatArg::Md)) {
        return Err(Failure::Usage(anyhow!("simulate only writes csv")));
    }
    let sample = sibgain_core::generate_replication(&config, id, args.run)?;
    let provenance = Provenance::new(&config);
    let mut buffer = format!(
        "# {} {} scenario={id} run={} seed={} config_sha256={}\n",
        provenance.tool, provenance.version, args.run, provenance.seed, provenance.config_sha256
    )
    .into_bytes();
    sample.write_csv(&mut buffer).map_err(|e| Failure::Runtime(e.into()))?;
    write_output(common.out.as_deref(), &String::from_utf8(buffer).expect("ascii csv"))
}

fn run(cli: Cli) -> Outcome<()> {
    match &cli.command {
        Command::Analytic(args) => {
            let (id, config) = scenario_config(args)?;
            if dump_if_requested(&args.common, &config)? {
                return Ok(());
            }
            let text = analytic::render(id, &config, args.common.format)?;
            write_output(args.common.out.as_deref(), &text)
        }
        Command::Simulate(args) => simulate(args),
        Command::Table1(common) => table(TableKind::Table1, common),
        Command::Appendix1(common) => table(TableKind::Appendix1, common),
        Command::Appendix2(common) => table(TableKind::Appendix2, common),
        Command::Cell(args) => cell(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
