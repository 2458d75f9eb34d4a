use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aidwallet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aidwallet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const FAMILY: &str = "seed 2\noram recursive 16\nregister 500 2\nspend 0.0 30 1 bakery\nspend 0.1 45 1 bakery\nreclaim bakery 1\naudit 1\n";

#[test]
fn run_prints_a_deterministic_log() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "family.txt", FAMILY);
    let first = aidwallet(&["run", &file]);
    assert_eq!(first.status.code(), Some(0));
    let log = stdout(&first);
    assert!(log.contains("0003 reclaim bakery 1 -> ok total 75 items 2\n"), "{log}");
    assert!(log.contains("balance 0 425 ctr 2 period 0\n"));
    assert_eq!(stdout(&aidwallet(&["run", &file])), log);
}

#[test]
fn run_halts_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "halt.txt", "halt-on-error\nregister 5 1\nspend 0.0 9 1 v\nspend 0.0 1 1 v\n");
    let out = aidwallet(&["run", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("halted"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "register 5\n");
    assert_eq!(aidwallet(&["run", &bad]).status.code(), Some(2));
    assert_eq!(aidwallet(&["run", "/nonexistent/scenario"]).status.code(), Some(2));
    assert_eq!(aidwallet(&["bench", "--variants", "heap"]).status.code(), Some(2));
    assert_eq!(aidwallet(&["bench", "--sizes", "0"]).status.code(), Some(2));
    assert_eq!(aidwallet(&["exp", "--ids", "nope"]).status.code(), Some(2));
    assert_eq!(aidwallet(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let status =
        aidwallet(&["bench", "--variants", "naive,recursive", "--sizes", "256,8192", "--accesses", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0));
    let rows = aidwallet::sim::read_bench(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].bytes() > rows[0].bytes());
    assert!(String::from_utf8_lossy(&status.stderr).contains("from N = 8192"));
}

#[test]
fn exp_reports_the_rewind_and_repeats_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = aidwallet(&[
            "exp",
            "--ids",
            "ind",
            "--strategies",
            "db-rewind",
            "--trials",
            "20",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rows = aidwallet::harness::read_results(fs::File::open(&a).unwrap()).unwrap();
    assert_eq!((rows[0].wins, rows[0].detections), (20, 20));
}

#[test]
fn db_store_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "family.txt", FAMILY);
    let db = dir.path().join("db.bin");
    let db = db.to_str().unwrap();
    assert_eq!(aidwallet(&["db", "store", db, "--scenario", &scenario]).status.code(), Some(0));
    let bytes = fs::read(db).unwrap();
    let loaded = aidwallet(&["db", "load", db]);
    assert_eq!(loaded.status.code(), Some(0));
    assert!(stdout(&loaded).starts_with("recursive capacity 16 "));

    let from_run = dir.path().join("run.bin");
    aidwallet(&["run", &scenario, "--db-out", from_run.to_str().unwrap()]);
    assert_eq!(fs::read(&from_run).unwrap(), bytes);

    let mut wrong = bytes.clone();
    wrong[4] = 9;
    fs::write(db, wrong).unwrap();
    let out = aidwallet(&["db", "load", db]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}
