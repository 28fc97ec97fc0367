use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stltree::data::{load_dataset, Schema};
use stltree::encoding::{expand_solution, ProblemManifest};
use stltree::solver::SolutionFile;
use stltree::{InferenceProblem, ProblemConfig};
use tempfile::TempDir;

fn stltree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stltree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

/// Writes a plateau dataset and returns its path.
fn plateau(dir: &TempDir) -> String {
    let file = path(dir, "plateau.csv");
    assert_eq!(
        code(&stltree(&[
            "gen-data", "--gen", "plateau", "--seed", "1", "--out", &file
        ])),
        0
    );
    file
}

/// Depth-2 level-1 run on the plateau data; small enough to be quick but
/// needs three decisions.
fn train(data: &str, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--data", data, "--depth", "2", "--stride", "3", "--out", out];
    args.extend_from_slice(extra);
    stltree(&args)
}

fn without_timing(mut report: Value) -> Value {
    report.as_object_mut().unwrap().remove("timing");
    report
}

#[test]
fn gen_data_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (path(&dir, "a.csv"), path(&dir, "b.csv"), path(&dir, "c.csv"));
    for (file, seed) in [(&a, "4"), (&b, "4"), (&c, "5")] {
        assert_eq!(
            code(&stltree(&[
                "gen-data", "--gen", "naval:50", "--seed", seed, "--out", file
            ])),
            0
        );
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert_eq!(load_dataset(&a, Schema::Csv).unwrap().len(), 150);

    let p = plateau(&dir);
    assert_eq!(load_dataset(&p, Schema::Csv).unwrap().len(), 300);
}

#[test]
fn unknown_generator_is_an_error() {
    let dir = TempDir::new().unwrap();
    let out = stltree(&["gen-data", "--gen", "weather", "--out", &path(&dir, "w.csv")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown generator"));
}

#[test]
fn train_writes_artifacts_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = path(&dir, "run");
    let first = train(&data, &out, &[]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    for file in [
        "solution.json",
        "tree.json",
        "manifest.json",
        "report.json",
        "train.csv",
    ] {
        assert!(Path::new(&out).join(file).exists(), "{file} missing");
    }
    let report = json(&first);
    assert_eq!(report["status"], "optimal");
    assert_eq!(report["decisions"], 3);
    assert_eq!(report["formulas"].as_object().unwrap().len(), 2);
    // Keys come out in declaration order, not sorted.
    assert!(String::from_utf8_lossy(&first.stdout).starts_with("{\n  \"status\""));

    let second = train(&data, &out, &[]);
    assert_eq!(without_timing(report.clone()), without_timing(json(&second)));
    let threaded = train(&data, &out, &["--threads", "2"]);
    let mut threaded = without_timing(json(&threaded));
    threaded["config"]["threads"] = Value::Null;
    assert_eq!(without_timing(report), threaded);
}

#[test]
fn full_penalty_gives_a_single_leaf() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = train(&data, &path(&dir, "run"), &["--lambda", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["decisions"], 0);
}

#[test]
fn budget_exhaustion_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = stltree(&[
        "train",
        "--data",
        &data,
        "--depth",
        "2",
        "--level",
        "2",
        "--budget-secs",
        "0.01",
        "--out",
        &path(&dir, "run"),
    ]);
    assert_eq!(code(&out), 2);
    let report = json(&out);
    assert_eq!(report["status"], "budget-exhausted");
    assert!(report["train_ccr"].as_f64().unwrap() > 0.0);
}

#[test]
fn split_reports_test_accuracy() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "run");
    let run = stltree(&[
        "train",
        "--gen",
        "naval:20",
        "--seed",
        "3",
        "--split",
        "0.75",
        "--depth",
        "2",
        "--max-width",
        "10",
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0);
    let report = json(&run);
    assert_eq!(report["samples"], 45);
    assert_eq!(report["test_samples"], 15);
    let test = stltree(&[
        "classify",
        "--model",
        &format!("{out}/tree.json"),
        "--data",
        &format!("{out}/test.csv"),
    ]);
    assert_eq!(code(&test), 0);
    let summary: Value = serde_json::from_slice(&test.stderr).unwrap();
    assert_eq!(summary["ccr"], report["test_ccr"]);
    assert_eq!(String::from_utf8_lossy(&test.stdout).lines().count(), 16);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let config = path(&dir, "config.json");
    let out = path(&dir, "run");
    fs::write(
        &config,
        format!(r#"{{"data": {data:?}, "depth": 2, "stride": 3, "lambda": 1.0, "out": {out:?}}}"#),
    )
    .unwrap();
    let from_file = stltree(&["train", "--config", &config]);
    assert_eq!(json(&from_file)["decisions"], 0);
    let overridden = stltree(&["train", "--config", &config, "--lambda", "0"]);
    assert_eq!(json(&overridden)["decisions"], 3);

    fs::write(&config, r#"{"depht": 2}"#).unwrap();
    assert_eq!(code(&stltree(&["train", "--config", &config])), 1);
}

#[test]
fn bad_settings_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = path(&dir, "run");
    for extra in [
        &["--depth", "7"][..],
        &["--lambda", "1.5"],
        &["--level", "3"],
        &["--threads", "0"],
    ] {
        let mut args = vec!["train", "--data", data.as_str(), "--out", out.as_str()];
        args.extend_from_slice(extra);
        let run = stltree(&args);
        assert_eq!(code(&run), 1, "{extra:?}");
        assert!(!run.stderr.is_empty());
    }
    assert_eq!(code(&stltree(&["train", "--out", &out])), 1);
    assert_eq!(
        code(&stltree(&[
            "train",
            "--data",
            &path(&dir, "missing.csv"),
            "--out",
            &out
        ])),
        1
    );
}

#[test]
fn classify_reproduces_the_training_accuracy() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = path(&dir, "run");
    let report = json(&train(&data, &out, &[]));
    let predictions = path(&dir, "pred.csv");
    let model = format!("{out}/tree.json");
    let run = stltree(&["classify", "--model", &model, "--data", &data, "--out", &predictions]);
    assert_eq!(code(&run), 0);
    assert_eq!(json(&run)["ccr"], report["train_ccr"]);

    let csv = fs::read_to_string(&predictions).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sample_id,predicted,actual,correct"));
    assert_eq!(lines.count(), 300);
}

#[test]
fn classify_rejects_incompatible_or_empty_data() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let out = path(&dir, "run");
    train(&data, &out, &[]);
    let model = format!("{out}/tree.json");

    let short = path(&dir, "short.csv");
    fs::write(&short, "sample_id,label,t,x1\n0,1,0,0.5\n0,1,1,0.7\n").unwrap();
    let run = stltree(&["classify", "--model", &model, "--data", &short]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("horizon"));

    let empty = path(&dir, "empty.csv");
    fs::write(&empty, "sample_id,label,t,x1\n").unwrap();
    assert_eq!(code(&stltree(&["classify", "--model", &model, "--data", &empty])), 1);
}

#[test]
fn manifest_tracks_the_grid() {
    let dir = TempDir::new().unwrap();
    let data = plateau(&dir);
    let manifest = |stride: &str| {
        let out = path(&dir, &format!("lp{stride}"));
        let run = stltree(&[
            "export-lp",
            "--data",
            &data,
            "--depth",
            "1",
            "--stride",
            stride,
            "--out",
            &out,
        ]);
        assert_eq!(code(&run), 0);
        assert!(fs::read_to_string(format!("{out}/model.lp")).unwrap().starts_with("\\"));
        let text = fs::read_to_string(format!("{out}/manifest.json")).unwrap();
        serde_json::from_str::<ProblemManifest>(&text).unwrap()
    };
    let (a, b) = (manifest("3"), manifest("4"));
    assert_eq!(a.dataset_hash, b.dataset_hash);
    assert_ne!(a.grid_signature, b.grid_signature);
    assert_ne!(a.thetas, b.thetas);
}

/// Trains into `dir/run` and returns `(data, run dir)`.
fn trained(dir: &TempDir) -> (String, PathBuf) {
    let data = plateau(dir);
    let out = path(dir, "run");
    assert_eq!(code(&train(&data, &out, &[])), 0);
    (data, PathBuf::from(out))
}

fn check(dir: &Path, solution: &Path, data: &str) -> Output {
    stltree(&[
        "check-solution",
        "--solution",
        &solution.display().to_string(),
        "--manifest",
        &dir.join("manifest.json").display().to_string(),
        "--data",
        data,
    ])
}

#[test]
fn solver_output_passes_the_check() {
    let dir = TempDir::new().unwrap();
    let (data, run) = trained(&dir);
    let out = check(&run, &run.join("solution.json"), &data);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["violations"], 0);
    let trained: Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["objective"], trained["objective"]);
    assert_eq!(report["formulas"], trained["formulas"]);
}

#[test]
fn corrupted_solution_reports_violations() {
    let dir = TempDir::new().unwrap();
    let (data, run) = trained(&dir);
    let mut file: Value = serde_json::from_str(&fs::read_to_string(run.join("solution.json")).unwrap()).unwrap();
    // Relabel the first leaf; its recorded flows now end at the wrong class.
    let leaf = file["solution"]["roles"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|r| r["role"] == "classify")
        .unwrap();
    leaf["class"] = Value::from(if leaf["class"] == 1 { 2 } else { 1 });
    let corrupted = dir.path().join("corrupted.json");
    fs::write(&corrupted, serde_json::to_string(&file).unwrap()).unwrap();

    let out = check(&run, &corrupted, &data);
    assert_eq!(code(&out), 3);
    let report = json(&out);
    assert!(report["violations"].as_u64().unwrap() > 0);
    assert!(report["details"][0].as_str().unwrap().contains("at"));
}

#[test]
fn other_dataset_fails_the_manifest() {
    let dir = TempDir::new().unwrap();
    let (_, run) = trained(&dir);
    let other = path(&dir, "other.csv");
    stltree(&["gen-data", "--gen", "plateau", "--seed", "2", "--out", &other]);
    let out = check(&run, &run.join("solution.json"), &other);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dataset hash"));
}

#[test]
fn external_assignment_is_checked_and_decoded() {
    let dir = TempDir::new().unwrap();
    let (data, run) = trained(&dir);
    let dataset = load_dataset(&data, Schema::Csv).unwrap();
    let config = ProblemConfig {
        depth: 2,
        stride: Some(3),
        ..Default::default()
    };
    let problem = InferenceProblem::new(&dataset, &config).unwrap();
    let solution = SolutionFile::load(run.join("solution.json")).unwrap();
    let assignment = expand_solution(&problem, &solution.solution).unwrap();
    let mut names: Vec<_> = assignment.iter().collect();
    names.sort_by(|a, b| a.0.cmp(b.0));
    let text: String = names.iter().map(|(n, v)| format!("{n} {v}\n")).collect();
    let external = dir.path().join("external.sol");
    fs::write(&external, format!("# from another solver\n{text}")).unwrap();

    let out = check(&run, &external, &data);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["decisions"], 3);
    assert_eq!(report["objective"].as_f64().unwrap(), solution.objective);
}
