//! Subcommands and argument parsing.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use forage_core::agents::Team;
use forage_core::experiments::{
    ablation_study, default_grid, epsilon_sweep, run_batch, AblationResult, AblationSpec,
    BatchSpec, SweepResult, SweepSpec,
};
use forage_core::metrics::{report_from_trace, MetricReport};
use forage_core::trace::EpisodeTrace;
use serde::{Deserialize, Serialize};

use crate::output::{json_pretty, write_reports, ReportFile};
use crate::plot::{render, report_panels, sweep_panels, PlotKind};
use crate::scenario::{self, LoadedScenario};
use crate::{CliError, CliResult};

pub const SWEEP_SCHEMA: &str = "forage-sweep/1";
pub const ABLATION_SCHEMA: &str = "forage-ablation/1";

/// Short names accepted for the `_final` scalars.
const SCALAR_ALIASES: [&str; 6] = ["pta_d", "pta_c", "rmse", "mi", "csr", "gini"];

#[derive(Debug, Parser)]
#[command(name = "forage", version, about = "Scout/forager team simulator", long_about = None)]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of episodes and write traces plus reports.
    Run(RunArgs),
    /// Recompute reports from trace files.
    Metrics(MetricsArgs),
    /// Corrupt one team over a grid of epsilon values.
    Sweep(SweepArgs),
    /// Compare the complete team against single-agent removals.
    Ablate(AblateArgs),
    /// Render a report or sweep as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Master seed; overrides the scenario's seed.
    #[arg(long, env = "FORAGE_SEED")]
    pub seed: Option<u64>,
    /// Episodes per batch; overrides the scenario.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Episode trace files, plain or gzip-compressed JSONL.
    #[arg(long = "trace", required = true, num_args = 1..)]
    pub traces: Vec<PathBuf>,
    /// Output directory for the recomputed reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TeamArg {
    #[value(alias = "scout")]
    Scouts,
    #[value(alias = "forager")]
    Foragers,
}

impl From<TeamArg> for Team {
    fn from(t: TeamArg) -> Team {
        match t {
            TeamArg::Scouts => Team::Scout,
            TeamArg::Foragers => Team::Forager,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
    /// Team whose decisions are corrupted.
    #[arg(long, value_enum)]
    pub team: TeamArg,
    /// Scalar metric observed at each grid point.
    #[arg(long, default_value = "pta_c_final")]
    pub metric: String,
    /// Comma-separated epsilon values; defaults to 0, 0.05, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// report.json files, or sweep.json files for `--kind sweep`.
    #[arg(long = "report", required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// SVG file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub schema: String,
    pub sweep: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationFile {
    pub schema: String,
    pub ablation: AblationResult,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Run(a) => run(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Plot(a) => plot(&a),
    })
}

struct Prepared {
    spec: BatchSpec,
    out: PathBuf,
}

fn prepare(args: &BatchArgs) -> CliResult<Prepared> {
    let loaded: LoadedScenario = scenario::load(&args.scenario)?;
    let s = &loaded.scenario;
    let seed = args.seed.unwrap_or(s.seed);
    let episodes = args.episodes.unwrap_or(s.episodes);
    if episodes == 0 {
        return Err(CliError::Config("episodes: must be at least 1".into()));
    }
    let out = match (&args.out, &s.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => loaded.base_dir.join(o),
        (None, None) => PathBuf::from("out"),
    };
    let base = loaded.episode_config(seed)?;
    Ok(Prepared {
        spec: BatchSpec::new(base, episodes),
        out,
    })
}

pub fn trace_file_name(index: usize) -> String {
    format!("episode_{index:03}.jsonl")
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let p = prepare(&args.batch)?;
    let result = run_batch(&p.spec, true)?;
    let traces_dir = p.out.join("traces");
    fs::create_dir_all(&traces_dir)?;
    for (i, trace) in result.traces.iter().enumerate() {
        trace.save(&traces_dir.join(trace_file_name(i)))?;
    }
    let file = ReportFile::new(&result.label, result.reports)?;
    write_reports(&p.out, &file)?;
    println!(
        "{}: {} episodes, PTA_C {}, written to {}",
        file.aggregate.label,
        file.aggregate.episodes,
        fmt_mean(file.aggregate.scalar_mean("pta_c_final")),
        p.out.display()
    );
    Ok(())
}

fn fmt_mean(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

fn with_path(path: &Path, e: forage_core::Error) -> CliError {
    match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
    }
}

pub fn metrics(args: &MetricsArgs) -> CliResult<()> {
    if args.traces.is_empty() {
        return Err(CliError::Config("no trace files given".into()));
    }
    let mut label = None;
    let mut reports: Vec<MetricReport> = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        let trace = EpisodeTrace::load(path).map_err(|e| with_path(path, e))?;
        label.get_or_insert_with(|| {
            let p = &trace.header.policies;
            format!("{}/{}", p.scout, p.forager)
        });
        reports.push(report_from_trace(&trace).map_err(|e| with_path(path, e))?);
    }
    let label = label.expect("at least one trace");
    let file = ReportFile::new(&label, reports)?;
    write_reports(&args.out, &file)?;
    println!(
        "{}: {} episodes recomputed into {}",
        label,
        file.episodes.len(),
        args.out.display()
    );
    Ok(())
}

fn sweep_csv(result: &SweepResult) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "mean", "ci", "n"])?;
    for p in &result.curve.points {
        w.write_record([
            p.epsilon.to_string(),
            p.mean.to_string(),
            p.ci.to_string(),
            p.n.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let p = prepare(&args.batch)?;
    // reject a bad metric name before running anything
    let name = args.metric.as_str();
    if !MetricReport::SCALARS.contains(&name) && !SCALAR_ALIASES.contains(&name) {
        return Err(CliError::Config(format!("--metric: unknown metric '{name}'")));
    }
    let spec = SweepSpec {
        batch: p.spec,
        team: args.team.into(),
        grid: args.grid.clone().unwrap_or_else(default_grid),
        metric: args.metric.clone(),
    };
    let result = epsilon_sweep(&spec)?;
    fs::create_dir_all(&p.out)?;
    fs::write(p.out.join("sweep.csv"), sweep_csv(&result)?)?;
    let ss = result.curve.fit.slope;
    let file = SweepFile {
        schema: SWEEP_SCHEMA.into(),
        sweep: result,
    };
    fs::write(p.out.join("sweep.json"), json_pretty(&file)?)?;
    println!(
        "{} [{}] {}: SS = {ss:.4} over {} points, written to {}",
        file.sweep.label,
        file.sweep.team.as_str(),
        file.sweep.metric,
        file.sweep.curve.points.len(),
        p.out.display()
    );
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ablation_csvs(result: &AblationResult) -> CliResult<(Vec<u8>, Vec<u8>)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "config", "scouts", "foragers", "pta_d_mean", "pta_d_ci", "pta_c_mean", "pta_c_ci",
        "rmse_mean", "rmse_ci",
    ])?;
    for r in &result.rows {
        w.write_record([
            r.config.clone(),
            r.scouts.to_string(),
            r.foragers.to_string(),
            r.pta_d.mean.to_string(),
            r.pta_d.ci.to_string(),
            r.pta_c.mean.to_string(),
            r.pta_c.ci.to_string(),
            r.rmse.mean.to_string(),
            r.rmse.ci.to_string(),
        ])?;
    }
    let rows = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["removed", "pta_d", "pta_c", "rmse"])?;
    for m in &result.mc {
        w.write_record([
            m.removed.as_str().to_string(),
            opt(m.pta_d),
            opt(m.pta_c),
            opt(m.rmse),
        ])?;
    }
    let mc = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok((rows, mc))
}

pub fn ablate(args: &AblateArgs) -> CliResult<()> {
    let p = prepare(&args.batch)?;
    let result = ablation_study(&AblationSpec { batch: p.spec })?;
    let (rows, mc) = ablation_csvs(&result)?;
    fs::create_dir_all(&p.out)?;
    fs::write(p.out.join("ablation.csv"), rows)?;
    fs::write(p.out.join("mc.csv"), mc)?;
    let file = AblationFile {
        schema: ABLATION_SCHEMA.into(),
        ablation: result,
    };
    fs::write(p.out.join("ablation.json"), json_pretty(&file)?)?;
    println!(
        "{}: {} configurations, written to {}",
        file.ablation.label,
        file.ablation.rows.len(),
        p.out.display()
    );
    Ok(())
}

fn load_sweep(path: &Path) -> CliResult<SweepResult> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: SweepFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if file.schema != SWEEP_SCHEMA {
        return Err(CliError::Config(format!(
            "{}: unsupported sweep schema '{}'",
            path.display(),
            file.schema
        )));
    }
    Ok(file.sweep)
}

pub fn plot(args: &PlotArgs) -> CliResult<()> {
    let panels = if args.kind == PlotKind::Sweep {
        let sweeps = args
            .reports
            .iter()
            .map(|p| load_sweep(p))
            .collect::<CliResult<Vec<_>>>()?;
        sweep_panels(&sweeps)
    } else {
        let reports = args
            .reports
            .iter()
            .map(|p| ReportFile::load(p).map(|f| f.aggregate))
            .collect::<CliResult<Vec<_>>>()?;
        report_panels(args.kind, &reports)?
    };
    let svg = render(&panels)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&args.out, svg)?;
    Ok(())
}
