use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::model::{MilpModel, Sense, VarKind};
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(usize, f64)], model: &MilpModel) {
    for (j, &(k, c)) in terms.iter().enumerate() {
        if j > 0 && j % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let name = &model.variables()[k].name;
        if j == 0 && sign == '+' {
            let _ = write!(out, " {} {name}", c.abs());
        } else {
            let _ = write!(out, " {sign} {} {name}", c.abs());
        }
    }
}

/// The model in LP format: `Maximize`, `Subject To`, `Bounds`, `Binary`, `End`.
/// Row names are `r<index>_<tag>`.
pub fn lp_string(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ STL decision-tree inference model\n");
    let _ = writeln!(out, "\\ lambda = {}, M = {}", model.lambda(), model.big_m());
    out.push_str("Maximize\n obj:");
    if model.objective().is_empty() {
        let first = &model.variables()[0].name;
        let _ = write!(out, " 0 {first}");
    } else {
        push_terms(&mut out, model.objective(), model);
    }
    out.push_str("\nSubject To\n");
    for (r, c) in model.constraints().iter().enumerate() {
        let _ = write!(out, " r{r}_{}:", c.tag.as_str().replace('-', "_"));
        push_terms(&mut out, &c.terms, model);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if let VarKind::Continuous { lo, hi } = v.kind {
            let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
        }
    }
    out.push_str("Binary\n");
    for v in model.variables().iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

pub fn export_lp(model: &MilpModel, destination: impl AsRef<Path>) -> Result<()> {
    let path = destination.as_ref();
    fs::write(path, lp_string(model)).map_err(|e| Error::io(path, e))
}
