use std::collections::BTreeMap;

use super::DecisionTree;
use crate::data::Label;
use crate::stl::StlFormula;

/// A node formula on a path, `false` when the path takes the right branch.
type Literal = (StlFormula, bool);

/// One formula per predicted class: the disjunction over that class's leaves
/// of the conjunction along the root-to-leaf path, with right-branch formulas
/// negated. Two sound rewrites are applied until nothing changes:
/// `(R & l) | (R & !l & S)` becomes `(R & l) | (R & S)`, and a disjunct that
/// contains another one is dropped. Results are in negation normal form.
pub fn summarize_formulae(dt: &DecisionTree) -> BTreeMap<Label, StlFormula> {
    let mut paths: BTreeMap<Label, Vec<Vec<Literal>>> = BTreeMap::new();
    collect(dt, &mut Vec::new(), &mut paths);
    paths
        .into_iter()
        .map(|(class, disjuncts)| (class, to_formula(simplify(disjuncts))))
        .collect()
}

fn collect(dt: &DecisionTree, path: &mut Vec<Literal>, out: &mut BTreeMap<Label, Vec<Vec<Literal>>>) {
    match dt {
        DecisionTree::Class(c) => out.entry(*c).or_default().push(path.clone()),
        DecisionTree::Decision { formula, left, right } => {
            path.push((formula.clone(), true));
            collect(left, path, out);
            path.pop();
            path.push((formula.clone(), false));
            collect(right, path, out);
            path.pop();
        }
    }
}

fn complement(l: &Literal) -> Literal {
    (l.0.clone(), !l.1)
}

fn subset(a: &[Literal], b: &[Literal]) -> bool {
    a.iter().all(|l| b.contains(l))
}

fn simplify(mut disjuncts: Vec<Vec<Literal>>) -> Vec<Vec<Literal>> {
    for d in &mut disjuncts {
        let mut unique: Vec<Literal> = Vec::with_capacity(d.len());
        for l in d.drain(..) {
            if !unique.contains(&l) {
                unique.push(l);
            }
        }
        *d = unique;
    }
    // A path through both a formula and its negation is unreachable.
    disjuncts.retain(|d| !d.iter().any(|l| d.contains(&complement(l))));

    loop {
        let mut changed = false;

        let mut kept: Vec<Vec<Literal>> = Vec::with_capacity(disjuncts.len());
        for (i, d) in disjuncts.iter().enumerate() {
            let absorbed = disjuncts
                .iter()
                .enumerate()
                .any(|(j, e)| j != i && subset(e, d) && (e.len() < d.len() || j < i));
            if absorbed {
                changed = true;
            } else {
                kept.push(d.clone());
            }
        }
        disjuncts = kept;

        'outer: for i in 0..disjuncts.len() {
            for j in 0..disjuncts.len() {
                if i == j {
                    continue;
                }
                for l in &disjuncts[i] {
                    let neg = complement(l);
                    let Some(pos) = disjuncts[j].iter().position(|m| *m == neg) else {
                        continue;
                    };
                    let rest_in_j = disjuncts[i]
                        .iter()
                        .filter(|m| *m != l)
                        .all(|m| disjuncts[j].contains(m));
                    if rest_in_j {
                        disjuncts[j].remove(pos);
                        changed = true;
                        break 'outer;
                    }
                }
            }
        }

        if !changed {
            return disjuncts;
        }
    }
}

fn to_formula(disjuncts: Vec<Vec<Literal>>) -> StlFormula {
    let conj = |d: Vec<Literal>| {
        d.into_iter()
            .map(|(f, positive)| if positive { f } else { f.negate() })
            .reduce(StlFormula::and)
            .unwrap_or(StlFormula::True)
    };
    disjuncts
        .into_iter()
        .map(conj)
        .reduce(StlFormula::or)
        .unwrap_or(StlFormula::True.negate())
        .nnf()
}
