mod common;

use emplab::analysis::{aggregate, MetricRow, Seconds};
use emplab::encode::Encoding;
use emplab::report::{
    correctness_chart, csv_string, emit_report, emit_table1, expected_time_chart, language_chart,
    read_csv, render_svg, CSV_COLUMNS,
};
use emplab::{Origin, TaskKind};

use common::{group, record_for, table1_records};

fn row(task: TaskKind, n: usize, correct: usize, trials: usize) -> MetricRow {
    let records: Vec<_> = (0..trials)
        .map(|i| record_for(task, n, Encoding::Digits, Origin::Generated, i < correct, 0.5 + i as f64 * 0.01))
        .collect();
    aggregate(&records).remove(0)
}

#[test]
fn csv_single_row_prints_proportion() {
    let text = csv_string(&[row(TaskKind::Sort, 10, 99, 100)]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    assert!(lines[1].starts_with("sort,10,digits,generated,100,99,0.9900,"), "{}", lines[1]);
}

#[test]
fn csv_empty_is_header_only() {
    assert_eq!(csv_string(&[]), format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn csv_rows_are_ordered() {
    let a = row(TaskKind::SubsetSum, 10, 3, 10);
    let b = row(TaskKind::Sort, 20, 3, 10);
    let c = row(TaskKind::Sort, 10, 3, 10);
    let text = csv_string(&[a, b, c]);
    let keys: Vec<String> = text.lines().skip(1).map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(keys, ["sort,10", "sort,20", "subset_sum,10"]);
}

#[test]
fn csv_roundtrip_within_printed_precision() {
    let mut rows = aggregate(&table1_records());
    rows.push(row(TaskKind::SearchSorted, 30, 0, 7));
    let text = csv_string(&rows);
    let back = read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((a.task, a.n, &a.encoding, a.origin), (b.task, b.n, &b.encoding, b.origin));
        assert_eq!((a.trials, a.correct, a.flagged), (b.trials, b.correct, b.flagged));
        for (x, y) in [(a.p_hat, b.p_hat), (a.ci_low, b.ci_low), (a.ci_high, b.ci_high), (a.mean_latency, b.mean_latency)] {
            assert!((x - y).abs() <= 5e-5, "{x} {y}");
        }
        match (a.e_first_correct, b.e_first_correct) {
            (Seconds::Finite(x), Seconds::Finite(y)) => assert!((x - y).abs() <= 5e-5),
            (x, y) => assert_eq!(x, y),
        }
    }
    // Re-emitting the parsed rows reproduces the file.
    assert_eq!(csv_string(&back), text);
}

#[test]
fn csv_rejects_foreign_header() {
    assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn table1_fixture_renders_published_rows() {
    let table = emit_table1(&aggregate(&table1_records()));
    let expected = "\
| Array Size | Random | Familiar |
|---:|:---|:---|
| 10 | 0.99 | 1.00 (100) |
| 20 | 0.95 | 1.00 (100) |
| 30 | 0.81 | 0.95 (100) |
| 40 | 0.66 | 0.67 (122) |
| 50 | 0.56 | 0.70 (161) |
";
    assert_eq!(table, expected);
    assert!(table.contains("50 | 0.56 | 0.70 (161)"));
}

#[test]
fn table1_missing_familiar_bin_is_dash() {
    let mut records = group(10, Origin::Generated, 9, 10);
    records.extend(group(20, Origin::Generated, 8, 10));
    records.extend(group(10, Origin::LlmFamiliar, 10, 10));
    let table = emit_table1(&aggregate(&records));
    assert!(table.contains("| 10 | 0.90 | 1.00 (10) |"));
    assert!(table.contains("| 20 | 0.80 | — |"));
}

#[test]
fn table1_prints_equal_counts() {
    let mut records = Vec::new();
    for n in [10, 20] {
        records.extend(group(n, Origin::Generated, 5, 10));
        records.extend(group(n, Origin::LlmFamiliar, 5, 10));
    }
    let table = emit_table1(&aggregate(&records));
    assert_eq!(table.matches("(10)").count(), 2);
}

#[test]
fn correctness_chart_has_one_series_per_task() {
    let rows = vec![
        row(TaskKind::Sort, 10, 9, 10),
        row(TaskKind::Sort, 20, 7, 10),
        row(TaskKind::SearchSorted, 10, 10, 10),
        row(TaskKind::SearchSorted, 20, 10, 10),
    ];
    let svg = render_svg(&correctness_chart(&rows));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(r#"data-label="sort""#) && svg.contains(r#"data-label="search_sorted""#));
}

#[test]
fn never_correct_point_is_omitted_and_footnoted() {
    let rows = vec![row(TaskKind::Sort, 10, 5, 10), row(TaskKind::Sort, 50, 0, 10)];
    let chart = expected_time_chart(&rows);
    assert_eq!(chart.series[0].points.len(), 1);
    assert_eq!(chart.footnotes.len(), 1);
    assert!(chart.footnotes[0].contains("n = 50"));
    let svg = render_svg(&chart);
    assert!(svg.contains("omitted"));
    assert!(!svg.contains("inf") && !svg.contains("NaN"));
}

#[test]
fn language_chart_uses_language_names() {
    let mut records = Vec::new();
    for (enc, c) in [(Encoding::Digits, 9), (Encoding::words("de"), 6), (Encoding::words("ko"), 4)] {
        for i in 0..10 {
            records.push(record_for(TaskKind::Sort, 10, enc.clone(), Origin::Generated, i < c, 1.0));
        }
    }
    let chart = language_chart(&aggregate(&records));
    let labels: Vec<&str> = chart.series.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["Digits", "German", "Korean"]);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let rows = aggregate(&table1_records());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ba = emit_report(&rows, None, a.path()).unwrap();
    let bb = emit_report(&rows, None, b.path()).unwrap();
    assert_eq!(ba.svgs.len(), 4);
    let files = std::iter::once(&ba.csv).chain(&ba.svgs).chain(std::iter::once(&ba.markdown));
    for p in files {
        let name = p.file_name().unwrap();
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    assert_eq!(bb.csv, b.path().join("metrics.csv"));
    let md = std::fs::read_to_string(&ba.markdown).unwrap();
    assert!(md.contains("| 50 | 0.56 | 0.70 (161) |"));
}

#[test]
fn every_row_appears_once_in_csv() {
    let rows = aggregate(&table1_records());
    assert_eq!(csv_string(&rows).lines().count(), rows.len() + 1);
}
