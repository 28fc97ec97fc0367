use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime};

use anyhow::{bail, Context as _};
use log::info;
use serde::Serialize;
use stltree::data::{load_dataset, save_dataset, Schema};
use stltree::encoding::{
    decode_assignment, expand_solution, export_lp as write_lp, objective_value, validate_solution, Assignment,
    GridSpec, ProblemManifest,
};
use stltree::solver::{solve_exact_with, SolutionFile, SolveOptions};
use stltree::stl::format_formula;
use stltree::*;

use crate::config::{generate, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_BUDGET: u8 = 2;
pub const EXIT_VIOLATIONS: u8 = 3;

/// Everything that changes from run to run even with identical inputs.
#[derive(Serialize)]
struct Timing {
    timestamp: String,
    runtime_secs: f64,
    expansions: u64,
}

#[derive(Serialize)]
struct TrainReport {
    status: &'static str,
    objective: f64,
    correct: usize,
    samples: usize,
    decisions: usize,
    train_ccr: f64,
    test_ccr: Option<f64>,
    test_samples: Option<usize>,
    formulas: BTreeMap<String, String>,
    dataset_hash: String,
    problem: ProblemConfig,
    grid: GridSpec,
    config: RunConfig,
    timing: Timing,
}

fn print_json(value: &impl Serialize) -> anyhow::Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(text)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn budget(run: &RunConfig) -> anyhow::Result<SolveBudget> {
    match run.budget_secs {
        None => Ok(SolveBudget::unlimited()),
        Some(s) if s.is_finite() && s > 0.0 => Ok(SolveBudget::seconds(s)),
        Some(s) => bail!("budget must be a positive number of seconds, got {s}"),
    }
}

pub fn train(run: &RunConfig) -> anyhow::Result<u8> {
    let started = Instant::now();
    let (train, test) = run.datasets()?;
    let problem_config = run.problem();
    let threads = run.threads.unwrap_or(1);
    if threads == 0 {
        bail!("threads must be at least 1");
    }
    let budget = budget(run)?;
    let problem = InferenceProblem::new(&train, &problem_config)?;
    info!(
        "{} samples, {} columns, depth {}",
        problem.n_samples(),
        problem.columns().len(),
        problem.depth()
    );
    let options = SolveOptions {
        threads,
        ..Default::default()
    };
    let result = solve_exact_with(&problem, &budget, &options)?;
    let tree = extract_bdt(&result.solution)?;
    let train_ccr = ccr(&tree, &train)?;
    let test_ccr = test.as_ref().map(|t| ccr(&tree, t)).transpose()?;
    let formulas = summarize_formulae(&tree)
        .into_iter()
        .map(|(class, f)| (class.to_string(), format_formula(&f)))
        .collect();

    let out = run.out_dir();
    create_dir(&out)?;
    SolutionFile::from_result(&result).save(out.join("solution.json"))?;
    tree.save_json(out.join("tree.json"))?;
    fs::write(
        out.join("manifest.json"),
        ProblemManifest::of(&problem).to_json() + "\n",
    )?;
    save_dataset(&train, out.join("train.csv"), Schema::Csv)?;
    if let Some(test) = &test {
        save_dataset(test, out.join("test.csv"), Schema::Csv)?;
    }

    let report = TrainReport {
        status: result.status.as_str(),
        objective: result.objective,
        correct: result.correct,
        samples: train.len(),
        decisions: result.decisions,
        train_ccr,
        test_ccr,
        test_samples: test.as_ref().map(|t| t.len()),
        formulas,
        dataset_hash: problem.dataset_hash().to_string(),
        problem: problem_config,
        grid: problem.grid(),
        config: run.clone(),
        timing: Timing {
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            runtime_secs: started.elapsed().as_secs_f64(),
            expansions: result.expansions,
        },
    };
    let text = print_json(&report)?;
    fs::write(out.join("report.json"), text)?;
    Ok(match result.status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

#[derive(Serialize)]
struct Prediction {
    sample_id: usize,
    predicted: usize,
    actual: usize,
    correct: bool,
}

#[derive(Serialize)]
struct ClassifyReport {
    samples: usize,
    correct: usize,
    ccr: f64,
}

pub fn classify(model: &Path, data: &Path, out: Option<&Path>) -> anyhow::Result<u8> {
    let tree = DecisionTree::load_json(model).with_context(|| format!("loading {}", model.display()))?;
    let dataset = load_dataset(data, Schema::from_path(data)).with_context(|| format!("loading {}", data.display()))?;
    if dataset.horizon() < tree.horizon() {
        bail!(
            "model needs traces with horizon at least {}, but {} has horizon {}",
            tree.horizon(),
            data.display(),
            dataset.horizon()
        );
    }
    let predictions = dataset
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let predicted = stltree::classify(&tree, &s.signal)?;
            Ok(Prediction {
                sample_id: i,
                predicted,
                actual: s.label,
                correct: predicted == s.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions.iter().filter(|p| p.correct).count();

    let sink: Box<dyn std::io::Write> = match out {
        Some(path) => Box::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    for p in &predictions {
        writer.serialize(p)?;
    }
    writer.flush()?;

    let report = ClassifyReport {
        samples: predictions.len(),
        correct,
        ccr: correct as f64 / predictions.len() as f64,
    };
    let text = serde_json::to_string_pretty(&report)?;
    // Keep stdout parseable when it already carries the predictions.
    if out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ExportReport {
    lp: String,
    manifest: ProblemManifest,
    variables: usize,
    constraints: usize,
}

pub fn export_lp(run: &RunConfig) -> anyhow::Result<u8> {
    let (train, _) = run.datasets()?;
    let problem = InferenceProblem::new(&train, &run.problem())?;
    let model = encode(&problem)?;
    let out = run.out_dir();
    create_dir(&out)?;
    let lp = out.join("model.lp");
    write_lp(&model, &lp)?;
    let manifest = ProblemManifest::of(&problem);
    fs::write(out.join("manifest.json"), manifest.to_json() + "\n")?;
    print_json(&ExportReport {
        lp: lp.display().to_string(),
        manifest,
        variables: model.variables().len(),
        constraints: model.constraints().len(),
    })?;
    Ok(EXIT_OK)
}

pub fn gen_data(spec: &str, seed: u64, out: &Path) -> anyhow::Result<u8> {
    let dataset = generate(spec, seed)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_dataset(&dataset, out, Schema::Csv)?;
    info!("wrote {} samples to {}", dataset.len(), out.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckReport {
    violations: usize,
    details: Vec<String>,
    objective: f64,
    decisions: Option<usize>,
    formulas: Option<BTreeMap<String, String>>,
}

/// Reads `name value` lines; blank lines and lines starting with `#` are skipped.
fn parse_assignment(text: &str) -> anyhow::Result<Assignment> {
    let mut values = Assignment::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            bail!("line {}: expected `name value`", k + 1);
        };
        let value: f64 = value
            .parse()
            .with_context(|| format!("line {}: bad value {value:?}", k + 1))?;
        values.insert(name.to_string(), value);
    }
    Ok(values)
}

pub fn check_solution(solution: &Path, manifest: &Path, run: &RunConfig) -> anyhow::Result<u8> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let manifest: ProblemManifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    let (train, _) = run.datasets()?;
    let config = ProblemConfig {
        depth: manifest.depth,
        level: manifest.grid.level,
        stride: Some(manifest.grid.stride),
        max_width: manifest.grid.max_width,
        lambda: manifest.lambda,
    };
    let problem = InferenceProblem::new(&train, &config)?;
    manifest.check(&problem)?;
    let model = encode(&problem)?;

    let raw = fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let assignment = if raw.trim_start().starts_with('{') {
        let file = SolutionFile::load(solution)?;
        expand_solution(&problem, &file.solution)?
    } else {
        parse_assignment(&raw)?
    };
    let violations = validate_solution(&model, &assignment)?;
    let (decisions, formulas) = if violations.is_empty() {
        let tree = decode_assignment(&problem, &assignment)?;
        let decisions = tree.decision_count();
        let formulas = summarize_formulae(&extract_bdt(&tree)?)
            .into_iter()
            .map(|(class, f)| (class.to_string(), format_formula(&f)))
            .collect();
        (Some(decisions), Some(formulas))
    } else {
        (None, None)
    };
    print_json(&CheckReport {
        violations: violations.len(),
        details: violations.iter().map(|v| v.to_string()).collect(),
        objective: objective_value(&assignment, problem.lambda()),
        decisions,
        formulas,
    })?;
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}
