use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use groundhold::generator::Preset;
use groundhold::oracle::{brute_force_min_delay, check_full};
use groundhold::{
    solve_multi_start, Instance, PreprocessedModel, ReportOptions, ScenarioParams, SearchConfig,
    SolveReport, StatsPopulation,
};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "groundhold",
    version,
    about = "Ground-holding under sliding-window cell capacities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic instance.
    Generate(GenerateArgs),
    /// Solve an instance and write a report.
    Solve(SolveArgs),
    /// Re-render a JSON report.
    Report(ReportArgs),
    /// Print the preprocessed model summary.
    Inspect(InspectArgs),
    /// Check a report against the unpruned constraints, or brute-force a tiny instance.
    #[command(hide = true)]
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Tiny,
    CongestedEcac,
    Infeasible,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Tiny => Preset::Tiny,
            PresetArg::CongestedEcac => Preset::CongestedEcac,
            PresetArg::Infeasible => Preset::Infeasible,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Default, PartialEq, Eq)]
enum Format {
    #[default]
    Json,
    Csv,
    Md,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PopulationArg {
    Relevant,
    All,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    now: Option<i64>,
    #[arg(long)]
    start: Option<i64>,
    #[arg(long)]
    end: Option<i64>,
    #[arg(long)]
    window: Option<i64>,
    #[arg(long)]
    step: Option<i64>,
    #[arg(long)]
    max_hold: Option<i64>,
    #[arg(long)]
    cap: Option<i64>,
}

impl ScenarioArgs {
    fn apply(&self, mut p: ScenarioParams) -> ScenarioParams {
        let set = |slot: &mut i64, v: Option<i64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.now, self.now);
        set(&mut p.start, self.start);
        set(&mut p.end, self.end);
        set(&mut p.window, self.window);
        set(&mut p.step, self.step);
        set(&mut p.max_hold, self.max_hold);
        set(&mut p.cap, self.cap);
        p
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// JSON search configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
    /// Independent starts run in parallel; the best result is reported.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PopulationArg::Relevant)]
    stats_population: PopulationArg,
    /// Leave run time out of the report so repeated runs match byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Also write the delay histogram as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Report whose delays are checked.
    #[arg(
        long,
        conflicts_with = "brute_force",
        required_unless_present = "brute_force"
    )]
    report: Option<PathBuf>,
    #[arg(long)]
    brute_force: bool,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_IO,
            error: error.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Report(a) => report(a),
        Command::Inspect(a) => inspect(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::io)
}

fn load_instance(path: &Path, scenario: &ScenarioArgs) -> Result<Instance, Failure> {
    let bytes = read(path)?;
    let instance = Instance::parse(&bytes)
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(Failure::usage)?;
    let params = scenario.apply(instance.params);
    if params == instance.params {
        return Ok(instance);
    }
    instance
        .with_params(params)
        .context("invalid scenario parameters")
        .map_err(Failure::usage)
}

/// Writes through a temporary sibling and renames it into place; `None`
/// writes to stdout.
fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    let Some(path) = path else {
        return io::stdout()
            .write_all(contents.as_bytes())
            .context("cannot write to stdout")
            .map_err(Failure::io);
    };
    let name = path
        .file_name()
        .ok_or_else(|| Failure::usage(anyhow!("output path {} names no file", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|err| {
            let _ = fs::remove_file(&tmp);
            Failure::io(anyhow!(err).context(format!("cannot write {}", path.display())))
        })
}

fn render(report: &SolveReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Md => report.to_markdown(),
    }
}

fn generate(args: GenerateArgs) -> Outcome {
    let instance = Preset::from(args.preset)
        .generate(args.seed)
        .map_err(Failure::usage)?;
    let mut json = instance.to_json();
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    Ok(0)
}

fn solve(args: SolveArgs) -> Outcome {
    let instance = load_instance(&args.instance, &args.scenario)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = String::from_utf8(read(path)?)
                .context("search configuration is not UTF-8")
                .map_err(Failure::usage)?;
            SearchConfig::from_json(&text)
                .with_context(|| format!("invalid search configuration {}", path.display()))
                .map_err(Failure::usage)?
        }
        None => SearchConfig::default(),
    };
    if let Some(v) = args.max_iter {
        config.max_iter = v;
    }
    if let Some(v) = args.seed {
        config.rng_seed = v;
    }
    if args.time_limit.is_some() {
        config.time_limit_secs = args.time_limit;
    }

    let model = PreprocessedModel::build(&instance);
    let result = solve_multi_start(&model, &config, args.starts).map_err(Failure::usage)?;
    let options = ReportOptions {
        population: match args.stats_population {
            PopulationArg::Relevant => StatsPopulation::Relevant,
            PopulationArg::All => StatsPopulation::All,
        },
        include_timing: !args.no_timing,
    };
    let report = SolveReport::build(&instance, &model, &result, options);
    emit(args.out.as_deref(), &render(&report, args.format))?;
    if let Some(svg) = &args.svg {
        emit(Some(svg), &report.histogram_svg())?;
    }

    if report.feasible {
        eprintln!(
            "feasible: total delay {} over {} waiting flights ({} iterations)",
            report.total_delay, report.waiting_flights, report.iterations
        );
        Ok(0)
    } else {
        eprintln!(
            "infeasible within budget: minimum violations {} after {} iterations",
            report.min_violations, report.iterations
        );
        Ok(EXIT_INFEASIBLE)
    }
}

fn report(args: ReportArgs) -> Outcome {
    let bytes = read(&args.input)?;
    let text = String::from_utf8(bytes)
        .context("report is not UTF-8")
        .map_err(Failure::usage)?;
    let report = SolveReport::from_json(&text)
        .with_context(|| format!("invalid report {}", args.input.display()))
        .map_err(Failure::usage)?;
    emit(args.out.as_deref(), &render(&report, args.format))?;
    if let Some(svg) = &args.svg {
        emit(Some(svg), &report.histogram_svg())?;
    }
    Ok(0)
}

fn inspect(args: InspectArgs) -> Outcome {
    let instance = load_instance(&args.instance, &args.scenario)?;
    let summary = PreprocessedModel::build(&instance).summary();
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    emit(None, &json)?;
    Ok(0)
}

fn verify(args: VerifyArgs) -> Outcome {
    let instance = load_instance(&args.instance, &args.scenario)?;
    let json = if args.brute_force {
        let result = brute_force_min_delay(&instance).map_err(Failure::usage)?;
        serde_json::to_string_pretty(&result)
    } else {
        let path = args
            .report
            .expect("clap requires --report without --brute-force");
        let text = String::from_utf8(read(&path)?)
            .context("report is not UTF-8")
            .map_err(Failure::usage)?;
        let report = SolveReport::from_json(&text)
            .with_context(|| format!("invalid report {}", path.display()))
            .map_err(Failure::usage)?;
        let index: HashMap<&str, usize> = instance
            .flights
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.as_str(), i))
            .collect();
        let mut delays = vec![0u32; instance.flights.len()];
        for fd in &report.delays {
            let &i = index.get(fd.id.as_str()).ok_or_else(|| {
                Failure::usage(anyhow!("report names unknown flight `{}`", fd.id))
            })?;
            delays[i] = fd.delay;
        }
        let check = check_full(&instance, &delays).map_err(Failure::usage)?;
        let ok = check.ok;
        let json = serde_json::to_string_pretty(&check);
        if !ok {
            emit(None, &(json.expect("check serializes") + "\n"))?;
            return Ok(EXIT_INFEASIBLE);
        }
        json
    };
    emit(None, &(json.expect("result serializes") + "\n"))?;
    Ok(0)
}
