//! Renders metric rows as CSV, SVG line charts and a markdown report.
//!
//! Everything here is a pure function of its input rows: no clocks, no
//! hash-map iteration, so identical rows give byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{MetricRow, Seconds};
use crate::encode::{language, Encoding};
use crate::problems::{Origin, TaskKind};
use crate::runner::ExperimentPlan;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {reason}")]
    Sink { path: PathBuf, reason: String },
    #[error("bad metrics file: {0}")]
    Parse(String),
}

pub const CSV_COLUMNS: [&str; 12] = [
    "task",
    "n",
    "encoding",
    "origin",
    "trials",
    "correct",
    "p_hat",
    "ci_low",
    "ci_high",
    "mean_latency",
    "e_first_correct",
    "flagged",
];

/// Decimal places for every real-valued CSV column.
pub const CSV_DECIMALS: usize = 4;

pub const CSV_FILE: &str = "metrics.csv";
pub const LATENCY_SVG: &str = "latency.svg";
pub const CORRECTNESS_SVG: &str = "correctness.svg";
pub const EXPECTED_TIME_SVG: &str = "expected_time.svg";
pub const LANGUAGES_SVG: &str = "correctness_by_language.svg";
pub const REPORT_MD: &str = "report.md";

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub csv: PathBuf,
    pub svgs: Vec<PathBuf>,
    pub markdown: PathBuf,
    pub plan: Option<ExperimentPlan>,
}

fn sink(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |e| ReportError::Sink {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn sorted(rows: &[MetricRow]) -> Vec<&MetricRow> {
    let mut out: Vec<&MetricRow> = rows.iter().collect();
    out.sort_by(|a, b| {
        (a.task, a.n, &a.encoding, a.origin).cmp(&(b.task, b.n, &b.encoding, b.origin))
    });
    out
}

fn fixed(v: f64) -> String {
    format!("{v:.prec$}", prec = CSV_DECIMALS)
}

/// Writes the header and one line per row, ordered by
/// (task, n, encoding, origin).
pub fn write_csv<W: Write>(rows: &[MetricRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in sorted(rows) {
        w.write_record([
            r.task.to_string(),
            r.n.to_string(),
            r.encoding.to_string(),
            r.origin.to_string(),
            r.trials.to_string(),
            r.correct.to_string(),
            fixed(r.p_hat),
            fixed(r.ci_low),
            fixed(r.ci_high),
            fixed(r.mean_latency),
            format!("{:.prec$}", r.e_first_correct, prec = CSV_DECIMALS),
            r.flagged.to_string(),
        ])?;
    }
    w.flush()
}

pub fn csv_string(rows: &[MetricRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

pub fn emit_csv(rows: &[MetricRow], path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, csv_string(rows)).map_err(sink(path))
}

/// Parses a file written by [`write_csv`]. Real values come back rounded to
/// [`CSV_DECIMALS`] places.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| ReportError::Parse(e.to_string()))?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(ReportError::Parse(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ReportError::Parse(e.to_string()))?;
        let line = i + 2;
        let bad = |col: &str| ReportError::Parse(format!("line {line}: bad {col}"));
        let field = |k: usize| rec.get(k).unwrap_or("");
        let real = |k: usize| field(k).parse::<f64>().map_err(|_| bad(CSV_COLUMNS[k]));
        let count = |k: usize| field(k).parse::<usize>().map_err(|_| bad(CSV_COLUMNS[k]));
        rows.push(MetricRow {
            task: field(0).parse::<TaskKind>().map_err(|_| bad("task"))?,
            n: count(1)?,
            encoding: field(2).parse::<Encoding>().map_err(|_| bad("encoding"))?,
            origin: field(3).parse::<Origin>().map_err(|_| bad("origin"))?,
            trials: count(4)?,
            correct: count(5)?,
            p_hat: real(6)?,
            ci_low: real(7)?,
            ci_high: real(8)?,
            mean_latency: real(9)?,
            e_first_correct: match field(10) {
                "inf" => Seconds::Infinite,
                _ => Seconds::Finite(real(10)?),
            },
            flagged: field(11).parse::<bool>().map_err(|_| bad("flagged"))?,
        });
    }
    Ok(rows)
}

pub fn load_csv(path: &Path) -> Result<Vec<MetricRow>, ReportError> {
    let file = std::fs::File::open(path).map_err(|e| ReportError::Parse(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

// ---------------------------------------------------------------------------
// Charts

/// One line in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Fixed y range; otherwise `[0, nice(max)]`.
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    pub footnotes: Vec<String>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const FOOT_LINE: f64 = 16.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Smallest 1/2/5·10^k step giving at most `max_ticks` intervals up to `max`.
fn nice_step(max: f64, max_ticks: usize) -> f64 {
    if max <= 0.0 || !max.is_finite() {
        return 1.0;
    }
    let raw = max / max_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * mag >= raw {
            return m * mag;
        }
    }
    10.0 * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{v:.decimals$}")
}

/// Renders `chart` as a standalone SVG 1.1 document.
pub fn render_svg(chart: &LineChart) -> String {
    let foot_h = FOOT_LINE * chart.footnotes.len() as f64;
    let height = HEIGHT + foot_h;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;

    let xs: BTreeSet<u64> = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0.to_bits()))
        .collect();
    let xs: Vec<f64> = {
        let mut v: Vec<f64> = xs.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (x_min, x_max) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let (y_min, y_max, y_step) = match chart.y_range {
        Some((lo, hi)) => (lo, hi, nice_step(hi - lo, 5)),
        None => {
            let top = chart
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .fold(0.0_f64, f64::max);
            let step = nice_step(top, 5);
            (0.0, (top / step).ceil().max(1.0) * step, step)
        }
    };
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&chart.title)
    );

    // Grid and y ticks.
    let mut y = y_min;
    while y <= y_max + y_step * 1e-9 {
        let yy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            tick_label(y, y_step)
        );
        y += y_step;
    }
    // x ticks: the data's own x values when there are few of them.
    let x_ticks: Vec<f64> = if !xs.is_empty() && xs.len() <= 12 {
        xs.clone()
    } else {
        let step = nice_step(x_max - x_min, 8);
        let mut v = Vec::new();
        let mut t = (x_min / step).ceil() * step;
        while t <= x_max + step * 1e-9 {
            v.push(t);
            t += step;
        }
        v
    };
    let bottom = TOP + plot_h;
    for x in &x_ticks {
        let xx = px(*x);
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.1}" y1="{bottom:.1}" x2="{xx:.1}" y2="{:.1}" stroke="#000000"/>"##,
            bottom + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            tick_label(*x, 1.0)
        );
    }
    let _ = writeln!(
        s,
        r##"<path d="M{LEFT},{TOP} V{bottom:.1} H{:.1}" fill="none" stroke="#000000"/>"##,
        LEFT + plot_w
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        bottom + 40.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&chart.y_label)
    );

    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&series.label),
            pts.join(" ")
        );
        for &(x, y) in &series.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }

    for (i, note) in chart.footnotes.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="{:.1}" font-size="11">{}</text>"#,
            HEIGHT - 4.0 + FOOT_LINE * i as f64,
            escape(note)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn encoding_label(encoding: &Encoding) -> String {
    match encoding {
        Encoding::Digits => "Digits".into(),
        Encoding::Words(code) => language(code).map_or_else(|_| code.clone(), |t| t.name.clone()),
    }
}

/// Rows that make up the per-task panels: generated instances in digits.
fn task_rows(rows: &[MetricRow]) -> BTreeMap<TaskKind, Vec<&MetricRow>> {
    let mut by_task: BTreeMap<TaskKind, Vec<&MetricRow>> = BTreeMap::new();
    for r in sorted(rows) {
        if r.origin == Origin::Generated && r.encoding == Encoding::Digits {
            by_task.entry(r.task).or_default().push(r);
        }
    }
    by_task
}

fn task_chart(
    rows: &[MetricRow],
    title: &str,
    y_label: &str,
    y_range: Option<(f64, f64)>,
    value: impl Fn(&MetricRow) -> f64,
) -> LineChart {
    LineChart {
        title: title.into(),
        x_label: "n (input size)".into(),
        y_label: y_label.into(),
        y_range,
        series: task_rows(rows)
            .into_iter()
            .map(|(task, rs)| Series {
                label: task.to_string(),
                points: rs.iter().map(|r| (r.n as f64, value(r))).collect(),
            })
            .collect(),
        footnotes: Vec::new(),
    }
}

pub fn latency_chart(rows: &[MetricRow]) -> LineChart {
    task_chart(rows, "Average latency", "seconds", None, |r| r.mean_latency)
}

pub fn correctness_chart(rows: &[MetricRow]) -> LineChart {
    task_chart(rows, "Correctness", "proportion correct", Some((0.0, 1.0)), |r| r.p_hat)
}

/// E[T] per task. Groups that were never correct have no finite value; they
/// are left out and listed in a footnote.
pub fn expected_time_chart(rows: &[MetricRow]) -> LineChart {
    let mut footnotes = Vec::new();
    let series = task_rows(rows)
        .into_iter()
        .map(|(task, rs)| {
            let mut points = Vec::new();
            for r in rs {
                match r.e_first_correct {
                    Seconds::Finite(t) => points.push((r.n as f64, t)),
                    Seconds::Infinite => footnotes.push(format!(
                        "* {task}, n = {}: never correct in {} trials, E[T] unbounded (omitted)",
                        r.n, r.trials
                    )),
                }
            }
            Series {
                label: task.to_string(),
                points,
            }
        })
        .collect();
    LineChart {
        title: "Expected time to first correct answer".into(),
        x_label: "n (input size)".into(),
        y_label: "seconds".into(),
        y_range: None,
        series,
        footnotes,
    }
}

/// Sorting correctness, one series per encoding.
pub fn language_chart(rows: &[MetricRow]) -> LineChart {
    let mut by_encoding: BTreeMap<&Encoding, Vec<(f64, f64)>> = BTreeMap::new();
    for r in sorted(rows) {
        if r.task == TaskKind::Sort && r.origin == Origin::Generated {
            by_encoding.entry(&r.encoding).or_default().push((r.n as f64, r.p_hat));
        }
    }
    LineChart {
        title: "Sorting correctness by language".into(),
        x_label: "n (input size)".into(),
        y_label: "proportion correct".into(),
        y_range: Some((0.0, 1.0)),
        series: by_encoding
            .into_iter()
            .map(|(e, points)| Series {
                label: encoding_label(e),
                points,
            })
            .collect(),
        footnotes: Vec::new(),
    }
}

/// Writes the four charts into `out_dir` and returns their paths.
pub fn emit_plots(rows: &[MetricRow], out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir).map_err(sink(out_dir))?;
    let charts = [
        (LATENCY_SVG, latency_chart(rows)),
        (CORRECTNESS_SVG, correctness_chart(rows)),
        (EXPECTED_TIME_SVG, expected_time_chart(rows)),
        (LANGUAGES_SVG, language_chart(rows)),
    ];
    let mut paths = Vec::new();
    for (name, chart) in charts {
        let path = out_dir.join(name);
        std::fs::write(&path, render_svg(&chart)).map_err(sink(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

// ---------------------------------------------------------------------------
// Markdown

const MISSING: &str = "—";

/// Random versus familiar sorting correctness, digits only. Row sizes are
/// those of the random column (falling back to the familiar bins when there
/// are no random rows); familiar cells carry the bin's trial count.
pub fn emit_table1(rows: &[MetricRow]) -> String {
    let sort_rows = |origin| -> BTreeMap<usize, &MetricRow> {
        rows.iter()
            .filter(|r| r.task == TaskKind::Sort && r.encoding == Encoding::Digits && r.origin == origin)
            .map(|r| (r.n, r))
            .collect()
    };
    let random = sort_rows(Origin::Generated);
    let familiar = sort_rows(Origin::LlmFamiliar);
    let sizes: Vec<usize> = if random.is_empty() {
        familiar.keys().copied().collect()
    } else {
        random.keys().copied().collect()
    };
    let mut s = String::from("| Array Size | Random | Familiar |\n|---:|:---|:---|\n");
    for n in sizes {
        let r = random.get(&n).map_or(MISSING.to_string(), |r| format!("{:.2}", r.p_hat));
        let f = familiar
            .get(&n)
            .map_or(MISSING.to_string(), |r| format!("{:.2} ({})", r.p_hat, r.trials));
        let _ = writeln!(s, "| {n} | {r} | {f} |");
    }
    s
}

/// Every row as a markdown table.
pub fn metrics_table(rows: &[MetricRow]) -> String {
    let mut s = String::from(
        "| Task | n | Encoding | Origin | Trials | p̂ | 95% CI | Latency (s) | E[T] (s) |\n\
         |:---|---:|:---|:---|---:|---:|:---|---:|---:|\n",
    );
    for r in sorted(rows) {
        let flag = if r.flagged { " †" } else { "" };
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {}{flag} | {:.2} | [{:.2}, {:.2}] | {:.2} | {:.2} |",
            r.task, r.n, r.encoding, r.origin, r.trials, r.p_hat, r.ci_low, r.ci_high, r.mean_latency,
            r.e_first_correct
        );
    }
    s
}

/// The markdown report body. Links refer to the files written by
/// [`emit_report`].
pub fn render_markdown(rows: &[MetricRow], plan: Option<&ExperimentPlan>) -> String {
    let mut s = String::from("# Empirical computation report\n\n");
    if let Some(plan) = plan {
        let tasks: Vec<String> = plan.tasks.iter().map(|t| t.to_string()).collect();
        let sizes: Vec<String> = plan.sizes.iter().map(|n| n.to_string()).collect();
        let encodings: Vec<String> = plan.encodings.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "- Plan: `{}`", plan.plan_id);
        let _ = writeln!(s, "- Tasks: {}", tasks.join(", "));
        let _ = writeln!(s, "- Sizes: {}", sizes.join(", "));
        let _ = writeln!(s, "- Encodings: {}", encodings.join(", "));
        let _ = writeln!(s, "- Repetitions: {}", plan.repetitions);
        let _ = writeln!(s, "- Base seed: {}\n", plan.base_seed);
    }
    s.push_str("## Time and correctness by task\n\n");
    for (name, alt) in [
        (LATENCY_SVG, "Average latency"),
        (CORRECTNESS_SVG, "Correctness"),
        (EXPECTED_TIME_SVG, "Expected time to first correct answer"),
    ] {
        let _ = writeln!(s, "![{alt}]({name})\n");
    }
    let never: Vec<String> = rows
        .iter()
        .filter(|r| r.e_first_correct == Seconds::Infinite)
        .map(|r| format!("{} n = {}", r.task, r.n))
        .collect();
    if !never.is_empty() {
        let _ = writeln!(s, "Never correct (E[T] unbounded): {}.\n", never.join("; "));
    }
    if rows.iter().any(|r| r.encoding != Encoding::Digits) {
        s.push_str("## Sorting correctness by language\n\n");
        let _ = writeln!(s, "![Sorting correctness by language]({LANGUAGES_SVG})\n");
    }
    if rows.iter().any(|r| r.origin == Origin::LlmFamiliar) {
        s.push_str("## Familiar instances\n\n");
        s.push_str("Familiar instances are binned by the length actually returned; the count is in parentheses.\n\n");
        s.push_str(&emit_table1(rows));
        s.push('\n');
    }
    s.push_str("## All groups\n\n");
    s.push_str(&metrics_table(rows));
    if rows.iter().any(|r| r.flagged) {
        let _ = writeln!(s, "\n† fewer than {} trials", crate::analysis::MIN_RELIABLE_TRIALS);
    }
    let _ = writeln!(s, "\nFull-precision values: [{CSV_FILE}]({CSV_FILE})");
    s
}

/// Writes CSV, charts and markdown into `out_dir`.
pub fn emit_report(
    rows: &[MetricRow],
    plan: Option<&ExperimentPlan>,
    out_dir: &Path,
) -> Result<ReportBundle, ReportError> {
    std::fs::create_dir_all(out_dir).map_err(sink(out_dir))?;
    let csv = out_dir.join(CSV_FILE);
    emit_csv(rows, &csv)?;
    let svgs = emit_plots(rows, out_dir)?;
    let markdown = out_dir.join(REPORT_MD);
    std::fs::write(&markdown, render_markdown(rows, plan)).map_err(sink(&markdown))?;
    Ok(ReportBundle {
        csv,
        svgs,
        markdown,
        plan: plan.cloned(),
    })
}
