use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seedsweep::io::{read_results, read_summary};

fn seedsweep(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seedsweep"))
        .args(args)
        .current_dir(dir)
        .env_remove("SEEDSWEEP_JOBS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SYNTH: &str = "\
[synthetic]
n = 120
p = 4
groups = 2
rho = 0.2
truth = \"linear\"
coefficients = [0.6, 0.0, 0.3, 0.0]
seed = 5
";

fn write_data_config(dir: &Path, model: &str, csv: &str) {
    let text = format!(
        "model = \"{model}\"\nseeds = [1, 2, 3]\n\n[data]\npath = \"{csv}\"\noutcome = \"y\"\nexposures = [\"z1\", \"z2\", \"z3\", \"z4\"]\ncovariates = [\"x_cont\", \"x_bin\"]\n"
    );
    fs::write(dir.join("run.toml"), text).unwrap();
}

#[test]
fn synth_then_run_then_resummarize() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("synth.toml"), SYNTH).unwrap();
    let o = seedsweep(&["synth", "--config", "synth.toml", "--out", "data/d.csv"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = fs::read_to_string(dir.join("data/d.csv")).unwrap();
    assert!(header.starts_with("y,z1,z2,z3,z4,x_cont,x_bin\n"));

    write_data_config(dir, "lasso", "data/d.csv");
    let o = seedsweep(&["validate", "--config", "run.toml"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("n = 120"));

    let o = seedsweep(&["run", "--config", "run.toml", "--out", "out"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["summary.json", "results.json", "coefficients.csv", "cv_curves.csv", "failures.csv"] {
        assert!(dir.join("out").join(f).exists(), "missing {f}");
    }
    let results = read_results(&dir.join("out/results.json")).unwrap();
    assert_eq!(results.records.len(), 3);

    let o = seedsweep(&["summarize", "out/results.json", "--out", "again"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.join("out/summary.json")).unwrap(),
        fs::read(dir.join("again/summary.json")).unwrap()
    );
    assert_eq!(
        fs::read(dir.join("out/coefficients.csv")).unwrap(),
        fs::read(dir.join("again/coefficients.csv")).unwrap()
    );
    let s = read_summary(&dir.join("again/summary.json")).unwrap();
    assert_eq!(s.seeds, vec![1, 2, 3]);
}

#[test]
fn overrides_and_json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("c.toml"), format!("model = \"lasso\"\n{SYNTH}")).unwrap();
    let o = seedsweep(
        &["run", "--config", "c.toml", "--model", "wqs", "--seeds", "4..6", "--out", "o", "--format", "json"],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut files: Vec<String> = fs::read_dir(dir.join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    assert_eq!(files, vec!["results.json", "summary.json"]);
    let s = read_summary(&dir.join("o/summary.json")).unwrap();
    assert_eq!(s.seeds, vec![4, 5, 6]);
    assert!(s.wqs.is_some());
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = seedsweep(&["run", "--config", "nope.toml"], dir);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("SS-E020"), "{}", stderr(&o));

    fs::write(dir.join("bad.toml"), "model = \"lasso\"\nsedes = \"1..3\"\n").unwrap();
    let o = seedsweep(&["validate", "--config", "bad.toml"], dir);
    assert_eq!(code(&o), 1);

    fs::write(dir.join("c.toml"), format!("model = \"lasso\"\n{SYNTH}")).unwrap();
    let o = seedsweep(&["run", "--config", "c.toml", "--model", "ridge"], dir);
    assert_eq!(code(&o), 1);
    let o = seedsweep(&["run", "--config", "c.toml", "--seeds", "3..1"], dir);
    assert_eq!(code(&o), 1);
    let o = seedsweep(&["frobnicate"], dir);
    assert_eq!(code(&o), 1);
    let o = seedsweep(&["--help"], dir);
    assert_eq!(code(&o), 0);
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_data_config(dir, "lasso", "d.csv");

    fs::write(dir.join("d.csv"), "y,z1,z2,z3,x_cont,x_bin\n1,2,3,4,5,6\n").unwrap();
    let o = seedsweep(&["validate", "--config", "run.toml"], dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SS-E021"), "{}", stderr(&o));

    fs::write(dir.join("d.csv"), "y,z1,z2,z3,z4,x_cont,x_bin\n1,2,3,4,5,6,7\n1,2,NA,4,5,6,7\n").unwrap();
    let o = seedsweep(&["validate", "--config", "run.toml"], dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    fs::write(dir.join("d.csv"), "y,z1,z2,z3,z4,x_cont,x_bin\n1,2,3,4,5,6,7\n1,2,abc,4,5,6,7\n").unwrap();
    let o = seedsweep(&["validate", "--config", "run.toml"], dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SS-E023"), "{}", stderr(&o));

    let o = seedsweep(&["summarize", "missing.json", "--out", "x"], dir);
    assert_eq!(code(&o), 2);
}

#[test]
fn all_seeds_failing_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_data_config(dir, "lasso", "d.csv");
    let mut csv = String::from("y,z1,z2,z3,z4,x_cont,x_bin\n");
    for i in 0..30 {
        // z2 is constant, so every fit fails to standardize it
        csv += &format!("{},{},1,{},{},{},{}\n", i % 7, i % 5, (i * 3) % 11, i % 4, i % 3, i % 2);
    }
    fs::write(dir.join("d.csv"), csv).unwrap();
    let o = seedsweep(&["run", "--config", "run.toml", "--out", "o"], dir);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("SS-E012"), "{}", stderr(&o));
}
