use std::path::PathBuf;
use std::process::{Command, Output};

fn seqnash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqnash")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqnash-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')))
        .map(str::trim)
}

#[test]
fn inspect_reports_tree_and_model_sizes() {
    let out = stdout(&seqnash(&["inspect", "kuhn3", "--ncp"]));
    assert_eq!(field(&out, "nodes"), Some("601"));
    assert_eq!(field(&out, "infosets"), Some("48"));
    let reduced = stdout(&seqnash(&["inspect", "kuhn3-reduced"]));
    assert_eq!(field(&reduced, "nodes"), Some("415"));
    let free = stdout(&seqnash(&["inspect", "kuhn3", "--ncp", "--pins", "none"]));
    assert_eq!(field(&free, "linear_rows"), Some("51"));
}

#[test]
fn solve_then_verify_round_trip() {
    let profile = scratch("pennies.json");
    let solved = seqnash(&["solve", "pennies", "--out", profile.to_str().unwrap()]);
    assert!(solved.status.success());
    assert!(stdout(&solved).contains("EquilibriumFound"));
    let verified = seqnash(&["verify", "pennies", profile.to_str().unwrap(), "--epsilon", "1e-9"]);
    assert!(verified.status.success());
    let text = stdout(&verified);
    assert!(text.starts_with("player,expected,best_response,regret"));
    let eps: f64 = field(&text, "epsilon").unwrap().parse().unwrap();
    assert!(eps <= 1e-9);
}

#[test]
fn generated_files_load_back() {
    let efg = scratch("kuhn2.efg");
    assert!(seqnash(&["gen", "kuhn2", "--out", efg.to_str().unwrap()]).status.success());
    let out = stdout(&seqnash(&["solve", efg.to_str().unwrap(), "--method", "zslp"]));
    assert!(out.contains("EquilibriumFound"), "{out}");

    let sfg = scratch("game.json");
    let args = ["gen", "sfg", "--players", "3", "--strategies", "2", "--seed", "4", "--out", sfg.to_str().unwrap()];
    assert!(seqnash(&args).status.success());
    assert!(seqnash(&["solve", sfg.to_str().unwrap()]).status.success());
}

#[test]
fn bench_writes_one_row_per_game() {
    let out = stdout(&seqnash(&["bench", "sfg", "--players", "3", "--strategies", "2", "--count", "3"]));
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert_eq!(&headers[0], "seed");
    assert_eq!(rows.records().count(), 3);
}

#[test]
fn unknown_game_is_an_error() {
    let o = seqnash(&["inspect", "no-such-game"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("built-in"));
}

#[test]
fn node_limit_without_heuristic_exits_nonzero() {
    let o = seqnash(&["solve", "kuhn3-reduced", "--no-heuristic", "--node-limit", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("LimitReached"));
}
