use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hragent(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_hragent"))
        .args(args)
        .current_dir(root())
        .env("RUST_LOG", "warn")
        .env_remove("HRAGENT_CONFIG")
        .env_remove("HRAGENT_BACKEND_URL")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn eval_dst_on_identical_files() {
    let out = hragent(&["eval", "dst", "--pred", "fixtures/dst_pred.jsonl", "--gold", "fixtures/dst_gold.jsonl"]);
    assert!(out.contains("jga,1.000\naga,1.000\nturns,52"), "{out}");
    let pretty = hragent(&[
        "eval", "dst", "--pred", "fixtures/dst_pred.jsonl", "--gold", "fixtures/dst_gold.jsonl", "--format", "pretty",
    ]);
    assert!(pretty.contains("100.00"), "{pretty}");
}

#[test]
fn eval_select_and_extract() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    std::fs::write(&pairs, "{\"gold\":[\"a\",\"b\"],\"pred\":[\"a\"]}\n{\"gold\":[\"c\"],\"pred\":[\"c\",\"d\"]}\n").unwrap();
    let out = hragent(&["eval", "select", "--input", pairs.to_str().unwrap()]);
    assert!(out.contains("precision,0.667,0.750"), "{out}");
    assert!(out.contains("recall,0.667,0.750"), "{out}");

    let ex = dir.path().join("ex.jsonl");
    std::fs::write(&ex, "{\"prediction\":\"next Monday\",\"reference\":\"next Monday\"}\n{\"prediction\":\"Monday\",\"reference\":\"next Monday\"}\n").unwrap();
    let out = hragent(&["eval", "extract", "--input", ex.to_str().unwrap()]);
    assert!(out.contains("rouge1,0.833"), "{out}");
}

#[test]
fn filter_writes_split_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = hragent(&[
        "filter", "--input", "fixtures/datagen_batch.txt", "--out-dir", dir.path().to_str().unwrap(), "--seed", "1",
    ]);
    assert!(out.contains("parsed,50\nrejected_blocks,0\nkept,40\nclean,36\ntest,4"), "{out}");
    let count = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!((count("raw.jsonl"), count("clean.jsonl"), count("test.jsonl")), (50, 36, 4));

    let prompts = hragent(&["validate", "--input", dir.path().join("test.jsonl").to_str().unwrap(), "--dry-run"]);
    assert!(prompts.lines().all(|l| l.contains("Does tha Answer answer the Question based on Text?")));
}

#[test]
fn gen_dry_run_is_deterministic() {
    let a = hragent(&["gen", "--dry-run", "--seed", "9", "--number1", "8", "--number2", "4"]);
    assert_eq!(a, hragent(&["gen", "--dry-run", "--seed", "9", "--number1", "8", "--number2", "4"]));
    assert!(a.starts_with("Human: "));
    assert!(a.contains("physical exam"), "the matching example should be shown");
}
