use std::path::Path;
use std::process::{Command, Output};

fn emplab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emplab"))
        .args(args)
        .current_dir(dir)
        .env_remove("EMPLAB_API_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const PLAN: &str = r#"
plan_id = "cli-test"
tasks = ["sort", "search_sorted"]
sizes = [5, 8]
repetitions = 2
base_seed = 11
max_in_flight = 2

[backend.mock]
p_drop = 0.05
rng_seed = 3
"#;

#[test]
fn encode_german_42() {
    let dir = tempfile::tempdir().unwrap();
    let o = emplab(&["encode", "--lang", "de", "42"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "zweiundvierzig\n");
}

#[test]
fn encode_reverse_and_negative() {
    let dir = tempfile::tempdir().unwrap();
    let o = emplab(&["encode", "--lang", "en", "--reverse", "minus", "forty-two"], dir.path());
    assert_eq!(stdout(&o), "-42\n");
    let o = emplab(&["encode", "--lang", "fr", "-17"], dir.path());
    assert_eq!(stdout(&o), "moins dix-sept\n");
}

#[test]
fn encode_bad_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emplab(&["encode", "--lang", "xx", "1"], dir.path()).status.code(), Some(1));
    assert_eq!(emplab(&["encode", "--lang", "de", "--reverse", "banana"], dir.path()).status.code(), Some(1));
    assert_eq!(emplab(&["encode", "--lang", "de", "1000000"], dir.path()).status.code(), Some(1));
}

#[test]
fn oracle_sort_inline() {
    let dir = tempfile::tempdir().unwrap();
    let o = emplab(&["oracle", "--task", "sort", "--numbers", "3,1,2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "[1, 2, 3]\n");
}

#[test]
fn oracle_other_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| stdout(&emplab(args, dir.path()));
    assert_eq!(run(&["oracle", "--task", "search_sorted", "--numbers", "1,4,9", "--target", "9"]), "2\n");
    assert_eq!(run(&["oracle", "--task", "search_unsorted", "--numbers", "5,3", "--target", "7"]), "-1\n");
    assert_eq!(run(&["oracle", "--task", "lps", "--text", "forgeeksskeegfor"]), "geeksskeeg\n");
    assert_eq!(run(&["oracle", "--task", "subset_sum", "--numbers", "3,34,4,12,5,2", "--target", "9"]), "[4, 5]\n");
    assert_eq!(run(&["oracle", "--task", "subset_sum", "--numbers", "2,4", "--target", "5"]), "none\n");
}

#[test]
fn oracle_from_generated_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = emplab(&["gen", "--task", "sort", "--n", "6", "--seed", "4", "--out", "inst.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = emplab(&["oracle", "--file", "inst.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let xs: Vec<i64> = text.trim().trim_matches(['[', ']']).split(", ").map(|s| s.parse().unwrap()).collect();
    assert_eq!(xs.len(), 6);
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emplab(&[], dir.path()).status.code(), Some(1));
    assert_eq!(emplab(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(emplab(&["oracle", "--task", "sort"], dir.path()).status.code(), Some(1));
    let o = emplab(&["run", "--plan", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
    assert_eq!(emplab(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = emplab(&["analyze", "--transcript", "nope.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("plan.toml"), PLAN).unwrap();
    // No credentials in the environment.
    let o = emplab(&["run", "--plan", "plan.toml", "--backend", "live"], dir.path());
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn run_then_resume_executes_nothing_new() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("plan.toml"), PLAN).unwrap();
    let first = emplab(&["run", "--plan", "plan.toml", "--backend", "mock", "--out", "t.jsonl"], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("8 planned, 0 already done, 8 executed"));
    let before = std::fs::read(dir.path().join("t.jsonl")).unwrap();

    let again = emplab(&["run", "--plan", "plan.toml", "--backend", "mock", "--out", "t.jsonl"], dir.path());
    assert_eq!(again.status.code(), Some(2), "refuses to overwrite");

    let resumed = emplab(&["run", "--plan", "plan.toml", "--backend", "mock", "--out", "t.jsonl", "--resume"], dir.path());
    assert_eq!(resumed.status.code(), Some(0));
    assert!(stdout(&resumed).contains("8 already done, 0 executed"));
    assert_eq!(std::fs::read(dir.path().join("t.jsonl")).unwrap(), before);
}

#[test]
fn analyze_and_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("plan.toml"), PLAN).unwrap();
    assert_eq!(emplab(&["run", "--plan", "plan.toml", "--out", "t.jsonl"], dir.path()).status.code(), Some(0));

    let o = emplab(&["analyze", "--transcript", "t.jsonl", "--out", "m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);

    let o = emplab(&["report", "--transcript", "t.jsonl", "--out", "rep"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for f in ["metrics.csv", "latency.svg", "correctness.svg", "expected_time.svg", "report.md"] {
        assert!(dir.path().join("rep").join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("rep/metrics.csv")).unwrap(), csv);

    let o = emplab(&["report", "--metrics", "m.csv", "--out", "rep2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("rep/correctness.svg")).unwrap(),
        std::fs::read(dir.path().join("rep2/correctness.svg")).unwrap()
    );
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = emplab(&["gen", "--task", "subset_sum", "--n", "8", "--count", "3", "--seed", "9"], dir.path());
    let b = emplab(&["gen", "--task", "subset_sum", "--n", "8", "--count", "3", "--seed", "9"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 3);
}

#[test]
fn user_language_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/languages/en.txt"))
        .unwrap()
        .replace("code = en", "code = xq")
        .replace("name = English", "name = Testish")
        .replace("= seven\n", "= sevven\n");
    std::fs::write(dir.path().join("xq.txt"), table).unwrap();
    let o = emplab(&["--language-table", "xq.txt", "encode", "--lang", "xq", "77"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "seventy-sevven\n");
    std::fs::write(dir.path().join("bad.txt"), "code = zz\n").unwrap();
    let o = emplab(&["encode", "--language-table", "bad.txt", "--lang", "zz", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
