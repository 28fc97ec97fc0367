mod common;

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use stltree::data::{gen_naval, naval};
use stltree::encoding::{
    decode_assignment, expand_solution, export_lp, lp_string, names, objective_value, validate_solution, Assignment,
    ConstraintTag, ProblemManifest, VarKind,
};
use stltree::solver::evaluate_solution;
use stltree::tree::NodeRole;
use stltree::*;

fn scalar_dataset(rows: &[(&[f64], usize)]) -> LabeledDataset {
    let samples = rows
        .iter()
        .map(|(values, label)| Sample {
            signal: Signal::scalar(values.to_vec()).unwrap(),
            label: *label,
        })
        .collect();
    LabeledDataset::new(samples, None).unwrap()
}

fn tiny() -> LabeledDataset {
    scalar_dataset(&[(&[0.0, 1.0], 1), (&[2.0, 0.5], 2)])
}

fn solved(dataset: &LabeledDataset, config: ProblemConfig) -> (InferenceProblem, MilpModel, Assignment, SolveResult) {
    let problem = InferenceProblem::new(dataset, &config).unwrap();
    let model = encode(&problem).unwrap();
    let result = solve_exact(&problem, &SolveBudget::unlimited()).unwrap();
    let assignment = expand_solution(&problem, &result.solution).unwrap();
    (problem, model, assignment, result)
}

#[test]
fn variable_counts_match_closed_forms() {
    // Two samples, two reduced templates, three time parameters on H = 1.
    let p = InferenceProblem::new(
        &tiny(),
        &ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!((p.templates().len(), p.thetas().len()), (2, 3));
    let m = encode(&p).unwrap();
    let (samples, internal, leaves, templates, thetas, classes) = (2, 1, 2, 2, 3, 2);
    assert_eq!(
        m.count_block("zs") + m.count_block("z"),
        samples * (internal + leaves + 1)
    );
    assert_eq!(m.count_block("zt"), samples * (internal + leaves));
    assert_eq!(m.count_block("b"), internal * templates);
    assert_eq!(m.count_block("xi"), internal * thetas);
    assert_eq!(m.count_block("w"), (internal + leaves) * classes);
    for block in ["y", "k", "rho"] {
        assert_eq!(m.count_block(block), samples * internal * templates, "{block}");
    }
    assert_eq!(m.count_block("pi"), internal);
    let n = m.variables().len();
    assert!(m.constraints().iter().all(|c| c.terms.iter().all(|&(k, _)| k < n)));
}

#[test]
fn big_m_bounds_every_robustness_value() {
    let data = gen_naval(5, 3);
    let p = InferenceProblem::new(
        &data,
        &ProblemConfig {
            depth: 1,
            max_width: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    let m = p.big_m();
    assert!(m > 0.0);
    for (c, col) in p.columns().iter().enumerate() {
        let template = &p.templates()[col.template];
        for &pi in &p.splits(c).thresholds {
            for &tau in &col.values {
                assert!(template.shift(tau, pi).abs() < m);
            }
        }
    }
}

#[test]
fn empty_roles_violate_node_rows() {
    let (_, model, mut a, _) = solved(
        &tiny(),
        ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    );
    for (name, v) in a.iter_mut() {
        if name.starts_with("b_") || name.starts_with("w_") {
            *v = 0.0;
        }
    }
    let violations = validate_solution(&model, &a).unwrap();
    assert!(violations.iter().any(|v| v.tag == ConstraintTag::Node));
}

#[test]
fn solver_solutions_replay_without_violations() {
    for seed in 0..20 {
        let inst = common::random_instance(seed);
        let config = ProblemConfig {
            depth: inst.depth,
            lambda: inst.lambda,
            ..Default::default()
        };
        let (_, model, a, result) = solved(&inst.dataset, config);
        assert_eq!(validate_solution(&model, &a).unwrap(), vec![], "seed {seed}");
        let objective = model.evaluate(&a).unwrap();
        assert!((objective - result.objective).abs() < 1e-9, "seed {seed}");
        // Each sample reaches at most one sink.
        for i in 0..inst.dataset.len() {
            let sinks = (1..=(1 << (inst.depth + 1)) - 1)
                .filter(|&n| a[&names::z_t(i, n)] == 1.0)
                .count();
            assert!(sinks <= 1);
        }
    }
}

#[test]
fn flipped_sink_breaks_only_flow_rows_at_that_node() {
    let (_, model, mut a, result) = solved(
        &tiny(),
        ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    );
    let sink = result.solution.flows.as_ref().unwrap()[1].expect("sample 1 is classified");
    a.insert(names::z_t(1, sink), 0.0);
    let violations = validate_solution(&model, &a).unwrap();
    assert!(!violations.is_empty());
    for v in &violations {
        assert_eq!(
            (v.tag, v.node, v.sample),
            (ConstraintTag::Flow, Some(sink), Some(1)),
            "{v}"
        );
    }
}

#[test]
fn routing_left_against_the_sign_is_reported() {
    let (_, model, mut a, result) = solved(
        &tiny(),
        ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    );
    let NodeRole::Decision(d) = result.solution.role(1) else {
        panic!("root decides")
    };
    let i = (0..2).find(|&i| a[&names::z(i, 2)] == 1.0).expect("a sample goes left");
    a.insert(names::y(i, 1, d.template_id), 0.0);
    a.insert(names::kappa(i, 1, d.template_id), 0.0);
    let violations = validate_solution(&model, &a).unwrap();
    assert!(violations
        .iter()
        .any(|v| v.tag == ConstraintTag::RouteLeft && v.node == Some(1) && v.sample == Some(i)));
}

#[test]
fn missing_variable_is_an_error() {
    let (_, model, mut a, _) = solved(
        &tiny(),
        ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    );
    a.remove(&names::pi(1));
    assert!(matches!(validate_solution(&model, &a), Err(Error::MissingVariable(_))));
}

#[test]
fn objective_value_examples() {
    let mut all = Assignment::new();
    for i in 0..100 {
        all.insert(names::z_t(i, 2), 1.0);
    }
    assert_eq!(objective_value(&all, 0.0), 100.0);

    let mut a = Assignment::new();
    for i in 0..10 {
        a.insert(names::z_t(i, 4), 1.0);
    }
    a.insert(names::b(1, 0), 1.0);
    a.insert(names::b(2, 1), 1.0);
    assert_eq!(objective_value(&a, 0.5), 4.0);
    assert_eq!(objective_value(&a, 1.0), -2.0);
}

#[test]
fn zero_lambda_export_has_no_penalty_terms() {
    let p = InferenceProblem::new(
        &tiny(),
        &ProblemConfig {
            depth: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let text = lp_string(&encode(&p).unwrap());
    let objective = text.split("Subject To").next().unwrap();
    assert!(!objective.contains("b_"));
    let penalized = lp_string(&encode(&p.with_lambda(0.25).unwrap()).unwrap());
    assert!(penalized.split("Subject To").next().unwrap().contains("- 0.25 b_1_0"));
}

type Terms = Vec<(String, f64)>;

/// Parsed LP file: objective, rows `(terms, op, rhs)`, bounds and binaries.
#[derive(Default)]
struct LpFile {
    objective: Terms,
    rows: Vec<(Terms, String, f64)>,
    bounds: HashMap<String, (f64, f64)>,
    binaries: Vec<String>,
}

fn parse_terms(tokens: &[&str]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef = None;
    for tok in tokens {
        match *tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            t => match t.parse::<f64>() {
                Ok(c) => coef = Some(c),
                Err(_) => {
                    out.push((t.to_string(), sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            },
        }
    }
    out
}

fn parse_lp(text: &str) -> LpFile {
    let mut lp = LpFile::default();
    let mut section = "";
    let mut statements: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        if ["Maximize", "Subject To", "Bounds", "Binary", "End"].contains(&trimmed) {
            section = match trimmed {
                "Maximize" => "obj",
                "Subject To" => "rows",
                "Bounds" => "bounds",
                "Binary" => "bin",
                _ => "end",
            };
            continue;
        }
        let starts_statement = trimmed.contains(':') || section == "bounds" || section == "bin";
        if starts_statement || statements.is_empty() {
            statements.push((section.to_string(), trimmed.to_string()));
        } else {
            let last = statements.last_mut().unwrap();
            last.1.push(' ');
            last.1.push_str(trimmed);
        }
    }
    for (section, body) in statements {
        let body = body.split_once(':').map_or(body.as_str(), |(_, rest)| rest).to_string();
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match section.as_str() {
            "obj" => lp.objective = parse_terms(&tokens),
            "rows" => {
                let (op_at, op) = tokens
                    .iter()
                    .enumerate()
                    .find(|(_, t)| ["<=", ">=", "="].contains(t))
                    .expect("row has a relation");
                lp.rows.push((
                    parse_terms(&tokens[..op_at]),
                    op.to_string(),
                    tokens[op_at + 1].parse().unwrap(),
                ));
            }
            "bounds" => {
                assert_eq!((tokens[1], tokens[3]), ("<=", "<="));
                lp.bounds.insert(
                    tokens[2].to_string(),
                    (tokens[0].parse().unwrap(), tokens[4].parse().unwrap()),
                );
            }
            "bin" => lp.binaries.push(tokens[0].to_string()),
            _ => {}
        }
    }
    lp
}

#[test]
fn exported_model_parses_and_round_trips_counts() {
    let p = InferenceProblem::new(
        &tiny(),
        &ProblemConfig {
            depth: 2,
            lambda: 0.1,
            ..Default::default()
        },
    )
    .unwrap();
    let model = encode(&p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    export_lp(&model, &path).unwrap();
    let lp = parse_lp(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(lp.rows.len(), model.constraints().len());
    let binaries = model.variables().iter().filter(|v| v.kind == VarKind::Binary).count();
    assert_eq!(lp.binaries.len(), binaries);
    assert_eq!(lp.binaries.len() + lp.bounds.len(), model.variables().len());
    assert_eq!(lp.objective.len(), model.objective().len());
    for (row, c) in lp.rows.iter().zip(model.constraints()) {
        assert_eq!(row.0.len(), c.terms.len());
        for ((name, coef), &(k, a)) in row.0.iter().zip(&c.terms) {
            assert_eq!(name, &model.variables()[k].name);
            assert_eq!(*coef, a);
        }
    }
}

/// Solves a parsed LP file with an independent MILP solver and returns the
/// objective and the variable values.
fn solve_lp(lp: &LpFile) -> (f64, Assignment) {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let objective: HashMap<&str, f64> = lp.objective.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let mut vars = HashMap::new();
    for name in &lp.binaries {
        let obj = objective.get(name.as_str()).copied().unwrap_or(0.0);
        vars.insert(name.clone(), problem.add_binary_var(obj));
    }
    for (name, &(lo, hi)) in &lp.bounds {
        let obj = objective.get(name.as_str()).copied().unwrap_or(0.0);
        vars.insert(name.clone(), problem.add_var(obj, (lo, hi)));
    }
    for (terms, op, rhs) in &lp.rows {
        let expr: Vec<_> = terms.iter().map(|(n, c)| (vars[n], *c)).collect();
        let op = match op.as_str() {
            "<=" => ComparisonOp::Le,
            ">=" => ComparisonOp::Ge,
            _ => ComparisonOp::Eq,
        };
        problem.add_constraint(expr.as_slice(), op, *rhs);
    }
    let solution = problem.solve().unwrap().into_solution().unwrap();
    let values = vars.iter().map(|(n, &v)| (n.clone(), solution.var_value(v))).collect();
    (solution.objective(), values)
}

#[test]
fn external_solver_agrees_with_exact_search() {
    let data = scalar_dataset(&[(&[0.0, 1.0], 1), (&[2.0, 0.5], 2), (&[1.0, 3.0], 1)]);
    for lambda in [0.0, 0.3] {
        let p = InferenceProblem::new(
            &data,
            &ProblemConfig {
                depth: 1,
                lambda,
                ..Default::default()
            },
        )
        .unwrap();
        let exact = solve_exact(&p, &SolveBudget::unlimited()).unwrap();
        let (objective, values) = solve_lp(&parse_lp(&lp_string(&encode(&p).unwrap())));
        assert!(
            (objective - exact.objective).abs() < 1e-6,
            "lambda {lambda}: {objective} vs {}",
            exact.objective
        );
        // The external assignment decodes to a tree with the same objective.
        let rounded: Assignment = values
            .into_iter()
            .map(|(n, v)| (n, if v.fract() == 0.0 { v } else { v.round() }))
            .collect();
        let decoded = decode_assignment(&p, &rounded).unwrap();
        let (correct, decisions) = evaluate_solution(&p, &decoded).unwrap();
        assert!((p.objective(correct, decisions) - exact.objective).abs() < 1e-9);
    }
}

#[test]
fn manifest_rejects_a_different_dataset() {
    let config = ProblemConfig {
        depth: 1,
        ..Default::default()
    };
    let a = InferenceProblem::new(&tiny(), &config).unwrap();
    let b = InferenceProblem::new(&scalar_dataset(&[(&[0.0, 1.0], 1), (&[2.0, 0.7], 2)]), &config).unwrap();
    let manifest = ProblemManifest::of(&a);
    manifest.check(&a).unwrap();
    assert!(matches!(manifest.check(&b), Err(Error::Manifest(_))));
    let back: ProblemManifest = serde_json::from_str(&manifest.to_json()).unwrap();
    assert_eq!(back, manifest);
}

#[test]
fn hand_built_naval_tree_is_feasible() {
    let data = gen_naval(6, 2);
    let p = InferenceProblem::new(
        &data,
        &ProblemConfig {
            depth: 2,
            level: 1,
            max_width: Some(10),
            ..Default::default()
        },
    )
    .unwrap();
    // Two eventually-primitives on x1 and x2; node 2 flags abnormal, nodes 6
    // and 7 classify.
    let theta = p.thetas().iter().position(|t| t.to_string() == "[13,23]").unwrap_or(0);
    let on = |var: usize| {
        let template = p
            .templates()
            .iter()
            .position(|t| t.var == var && t.relation.sign() > 0.0)
            .unwrap();
        let column = p.column_index(template, theta).unwrap();
        NodeRole::Decision(p.decision(column, p.splits(column).thresholds.len() / 2))
    };
    let roles = vec![
        on(0),
        NodeRole::Classify { class: naval::ABNORMAL },
        on(1),
        NodeRole::Unused,
        NodeRole::Unused,
        NodeRole::Classify { class: naval::NORMAL },
        NodeRole::Classify { class: naval::ABNORMAL },
    ];
    let solution = TreeSolution::new(2, roles).unwrap();
    let model = encode(&p).unwrap();
    let a = expand_solution(&p, &solution).unwrap();
    assert_eq!(validate_solution(&model, &a).unwrap(), vec![]);
    let dt = extract_bdt(&solution).unwrap();
    let rate = ccr(&dt, &data).unwrap();
    assert_eq!(objective_value(&a, 0.0), (rate * data.len() as f64).round());
}
