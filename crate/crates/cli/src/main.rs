//! `emplab` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use emplab::analysis::{aggregate_with, AnalysisOptions, LatencyStat, Z_95, Z_99};
use emplab::backends::{Backend, MockBackend, RetryBackend};
use emplab::encode::{
    format_list, number_to_words, register_language, words_to_number, Encoding, LanguageTable,
};
use emplab::problems::{gen_instance, solve, GenConfig, ProblemError};
use emplab::report::{emit_csv, emit_report, load_csv, write_csv};
use emplab::runner::{read_transcript, run, ExperimentPlan, RunOptions};
use emplab::{Answer, Origin, TaskInstance, TaskKind};

#[derive(Parser)]
#[command(name = "emplab", version, about = "Measure how well a language model computes when simply asked to")]
struct Cli {
    /// Register an extra number-word table (repeatable).
    #[arg(long = "language-table", global = true, value_name = "FILE")]
    language_tables: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate problem instances as JSONL.
    Gen(GenArgs),
    /// Execute an experiment plan and write a transcript.
    Run(RunArgs),
    /// Aggregate a transcript into a metrics CSV.
    Analyze(AnalyzeArgs),
    /// Render CSV, SVG charts and a markdown report.
    Report(ReportArgs),
    /// Print the reference answer for one instance.
    Oracle(OracleArgs),
    /// Convert a number to words, or words to a number.
    Encode(EncodeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Emit the generated instance of every trial in this plan.
    #[arg(long, conflicts_with_all = ["task", "n"])]
    plan: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    task: Option<TaskKind>,
    /// Instance size.
    #[arg(long, required_unless_present = "plan")]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Mock,
    Live,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendKind::Mock)]
    backend: BackendKind,
    /// Transcript path (default: `<plan_id>.jsonl`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue an existing transcript.
    #[arg(long)]
    resume: bool,
    /// Run the batches on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Stop after this many new trials.
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Confidence {
    #[value(name = "95")]
    P95,
    #[value(name = "99")]
    P99,
}

#[derive(Args)]
struct StatArgs {
    /// Confidence level of the Wilson interval.
    #[arg(long, value_enum, default_value_t = Confidence::P95)]
    confidence: Confidence,
    /// Report median latency instead of the mean.
    #[arg(long)]
    median: bool,
}

impl StatArgs {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            z: match self.confidence {
                Confidence::P95 => Z_95,
                Confidence::P99 => Z_99,
            },
            latency: if self.median { LatencyStat::Median } else { LatencyStat::Mean },
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    transcript: PathBuf,
    /// Output CSV (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    stats: StatArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, required_unless_present = "metrics", conflicts_with = "metrics")]
    transcript: Option<PathBuf>,
    /// A CSV written by `analyze`, instead of a transcript.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    stats: StatArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// A JSON instance, as written by `gen`.
    #[arg(long, conflicts_with_all = ["task", "numbers", "target", "text"])]
    file: Option<PathBuf>,
    #[arg(long, required_unless_present = "file")]
    task: Option<TaskKind>,
    /// Comma-separated integers.
    #[arg(long, allow_hyphen_values = true)]
    numbers: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<i64>,
    #[arg(long)]
    text: Option<String>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Language code or name.
    #[arg(long, default_value = "en")]
    lang: String,
    /// Parse words into a number.
    #[arg(long)]
    reverse: bool,
    #[arg(required = true, allow_hyphen_values = true, num_args = 1..)]
    value: Vec<String>,
}

/// Errors that are the caller's fault rather than the environment's.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = register_tables(&cli.language_tables).and_then(|()| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn register_tables(paths: &[PathBuf]) -> anyhow::Result<()> {
    for path in paths {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let table = LanguageTable::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        register_language(table);
    }
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Report(a) => cmd_report(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Encode(a) => cmd_encode(a),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn load_plan(path: &Path) -> anyhow::Result<ExperimentPlan> {
    ExperimentPlan::load(path).map_err(|e| usage(e.to_string()))
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    let mut out = output(a.out.as_deref())?;
    if let Some(path) = a.plan {
        let plan = load_plan(&path)?;
        let config = plan.gen_config();
        for key in plan.trials().iter().filter(|k| k.origin == Origin::Generated) {
            let instance = gen_instance(key.task, plan.seed_for(key), key.size, &config)?;
            writeln!(out, "{}", serde_json::to_string(&instance)?)?;
        }
    } else {
        let (task, n) = (a.task.expect("required by clap"), a.n.expect("required by clap"));
        let config = GenConfig::default();
        for k in 0..a.count {
            let seed = a.seed.wrapping_add(k);
            let instance = gen_instance(task, seed, n, &config).map_err(|e| usage(e.to_string()))?;
            writeln!(out, "{}", serde_json::to_string(&instance)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let plan = load_plan(&a.plan)?;
    let path = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.jsonl", plan.plan_id)));
    let backend: Box<dyn Backend> = match a.backend {
        BackendKind::Mock => Box::new(MockBackend::new(plan.backend.mock.clone())),
        BackendKind::Live => live_backend(&plan)?,
    };
    let options = RunOptions {
        resume: a.resume,
        stop_after: a.stop_after,
        executor: a.sequential.then(emplab::exec::Executor::sequential),
        ..RunOptions::default()
    };
    let summary = run(&plan, backend.as_ref(), &path, options)?;
    println!(
        "{}: {} planned, {} already done, {} executed, {} failed",
        path.display(),
        summary.planned,
        summary.already_done,
        summary.executed,
        summary.failed
    );
    Ok(())
}

#[cfg(feature = "live")]
fn live_backend(plan: &ExperimentPlan) -> anyhow::Result<Box<dyn Backend>> {
    let live = emplab::backends::LiveBackend::from_env(plan.backend.live.clone())?;
    Ok(Box::new(RetryBackend::new(live, plan.backend.retry.clone())))
}

#[cfg(not(feature = "live"))]
fn live_backend(_: &ExperimentPlan) -> anyhow::Result<Box<dyn Backend>> {
    let _ = RetryBackend::<MockBackend>::new;
    Err(usage("this build has no live backend (enable the `live` feature)"))
}

fn cmd_analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let transcript = read_transcript(&a.transcript)?;
    let rows = aggregate_with(&transcript.records, &a.stats.options());
    match a.out {
        Some(p) => emit_csv(&rows, &p)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let (rows, plan) = match (&a.transcript, &a.metrics) {
        (Some(t), _) => {
            let transcript = read_transcript(t)?;
            (aggregate_with(&transcript.records, &a.stats.options()), Some(transcript.header.plan))
        }
        (None, Some(m)) => (load_csv(m)?, None),
        (None, None) => unreachable!("clap requires one input"),
    };
    let bundle = emit_report(&rows, plan.as_ref(), &a.out)?;
    println!("{}", bundle.markdown.display());
    Ok(())
}

fn parse_numbers(text: &str) -> anyhow::Result<Vec<i64>> {
    let text = text.trim().trim_start_matches('[').trim_end_matches(']');
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|_| usage(format!("not an integer: {s:?}"))))
        .collect()
}

fn oracle_instance(a: &OracleArgs) -> anyhow::Result<TaskInstance> {
    if let Some(path) = &a.file {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        return serde_json::from_str(line).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let task = a.task.expect("required by clap");
    let numbers = || a.numbers.as_deref().ok_or_else(|| usage(format!("{task} needs --numbers"))).and_then(parse_numbers);
    let target = || a.target.ok_or_else(|| usage(format!("{task} needs --target")));
    Ok(match task {
        TaskKind::Sort => TaskInstance::sort(numbers()?),
        TaskKind::SearchSorted | TaskKind::SearchUnsorted => TaskInstance::search(task, numbers()?, target()?),
        TaskKind::SubsetSum => TaskInstance::subset_sum(numbers()?, target()?),
        TaskKind::LongestPalindromicSubstring => {
            TaskInstance::palindrome(a.text.clone().ok_or_else(|| usage("lps needs --text"))?)
        }
    })
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<()> {
    let instance = oracle_instance(&a)?;
    let answer = match solve(&instance) {
        Ok(answer) => answer,
        Err(ProblemError::NoSolution) => {
            println!("none");
            return Ok(());
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let text = match answer {
        Answer::NumberList(xs) | Answer::Subset(xs) => format_list(&xs, &Encoding::Digits)?,
        Answer::Index(i) => i.to_string(),
        Answer::Substring(s) => s,
        Answer::Unparseable(s) => return Err(anyhow!("oracle produced no answer: {s}")),
    };
    println!("{text}");
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> anyhow::Result<()> {
    let value = a.value.join(" ");
    let text = if a.reverse {
        words_to_number(&value, &a.lang).map_err(|e| usage(e.to_string()))?.to_string()
    } else {
        let n: i64 = value.trim().parse().map_err(|_| usage(format!("not an integer: {value:?}")))?;
        number_to_words(n, &a.lang).map_err(|e| usage(e.to_string()))?
    };
    println!("{text}");
    Ok(())
}
