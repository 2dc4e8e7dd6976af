use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::Decision;

pub const CONIC_SCHEMA: &str = "jdpew-conic/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramKind {
    /// Joint design and pricing.
    Full,
    /// Design block with discount levels fixed.
    Design,
    /// Pricing block with recommendations fixed.
    Pricing,
    Bm1,
    Bm2,
    Bm3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    Binary,
    Continuous,
}

/// How a continuous variable is recovered once the binaries are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Definition {
    Product {
        left: usize,
        right: usize,
    },
    Reciprocal {
        of: usize,
    },
    /// Solve the equality row for this variable.
    Row {
        row: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    /// `None` is unbounded above.
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defined_by: Option<Definition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRow {
    pub name: String,
    /// `(variable index, coefficient)` pairs.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Rotated cone `w * t >= 1` with `w, t >= 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeRow {
    pub name: String,
    pub w: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub family: String,
    pub identity: String,
}

/// Solver-neutral mixed-integer conic program in minimization form.
///
/// The equivalent profit of a point is `profit_shift - objective`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConicProgram {
    pub kind: ProgramKind,
    pub variables: Vec<Variable>,
    pub rows: Vec<LinearRow>,
    pub cones: Vec<ConeRow>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub profit_shift: f64,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub binary: usize,
    pub continuous: usize,
    pub linear: usize,
    pub cone: usize,
}

/// Back-substituted point of a program.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub objective: f64,
    pub profit: f64,
}

fn infeasible(msg: String) -> Error {
    Error::InfeasibleAssignment(msg)
}

/// Split `x[3][1]` into `("x", [3, 1])`.
fn parse_name(name: &str) -> Option<(&str, Vec<usize>)> {
    let open = name.find('[')?;
    let family = &name[..open];
    let idx = name[open..]
        .split(['[', ']'])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect::<Option<Vec<usize>>>()?;
    Some((family, idx))
}

impl ConicProgram {
    pub fn counts(&self) -> Counts {
        let binary = self.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        Counts {
            binary,
            continuous: self.variables.len() - binary,
            linear: self.rows.len(),
            cone: self.cones.len(),
        }
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&v| self.variables[v].kind == VarKind::Binary)
            .collect()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Binary values of the free block that encode `decision`, in
    /// [`binary_indices`](Self::binary_indices) order.
    pub fn binaries_for(&self, decision: &Decision) -> Result<Vec<bool>> {
        let shared = matches!(self.kind, ProgramKind::Bm1 | ProgramKind::Bm3);
        self.binary_indices()
            .into_iter()
            .map(|v| {
                let name = &self.variables[v].name;
                let bad = || Error::Format(format!("binary `{name}` does not map onto the decision"));
                let (family, idx) = parse_name(name).ok_or_else(bad)?;
                let get = |grid: &[Vec<bool>], a: usize, b: usize| grid.get(a).and_then(|r| r.get(b)).copied();
                match (family, idx.as_slice()) {
                    ("y", [i]) => decision.y.get(*i).copied(),
                    ("x", [i]) if shared => {
                        let row = decision.x.get(*i).ok_or_else(bad)?;
                        let on = decision.y[*i];
                        if row.iter().any(|&b| b != on) {
                            return Err(infeasible(format!("contract {i} is not shared by every group")));
                        }
                        Some(on)
                    }
                    ("x", [i, j]) => get(&decision.x, *i, *j),
                    ("z", [i, h]) => get(&decision.z, *i, *h),
                    _ => None,
                }
                .ok_or_else(bad)
            })
            .collect()
    }

    /// Fix the binaries, recover every continuous variable from its
    /// defining identity, check all rows and cones, and evaluate.
    pub fn evaluate(&self, binaries: &[bool]) -> Result<Evaluation> {
        let bin = self.binary_indices();
        if bin.len() != binaries.len() {
            return Err(Error::Format(format!(
                "expected {} binary values, got {}",
                bin.len(),
                binaries.len()
            )));
        }
        let mut values = vec![f64::NAN; self.variables.len()];
        for (&v, &b) in bin.iter().zip(binaries) {
            values[v] = if b { 1.0 } else { 0.0 };
        }
        for v in 0..self.variables.len() {
            let var = &self.variables[v];
            if var.kind == VarKind::Binary {
                continue;
            }
            let value = match var.defined_by {
                Some(Definition::Product { left, right }) => values[left] * values[right],
                Some(Definition::Reciprocal { of }) => {
                    if values[of] <= 0.0 {
                        return Err(infeasible(format!("`{}` is not positive", self.variables[of].name)));
                    }
                    1.0 / values[of]
                }
                Some(Definition::Row { row }) => {
                    let r = &self.rows[row];
                    let mut own = 0.0;
                    let mut rest = 0.0;
                    for &(u, a) in &r.terms {
                        if u == v {
                            own += a;
                        } else {
                            rest += a * values[u];
                        }
                    }
                    (r.rhs - rest) / own
                }
                None => return Err(Error::Format(format!("`{}` has no defining identity", var.name))),
            };
            if !value.is_finite() {
                return Err(Error::Format(format!("`{}` depends on a later variable", var.name)));
            }
            values[v] = value;
        }

        for (v, var) in self.variables.iter().enumerate() {
            let x = values[v];
            let tol = 1e-9 * x.abs().max(1.0);
            if x < var.lower - tol || var.upper.is_some_and(|u| x > u + tol) {
                return Err(infeasible(format!("`{}` = {x} violates its bounds", var.name)));
            }
        }
        for r in &self.rows {
            let (mut lhs, mut scale) = (0.0, r.rhs.abs().max(1.0));
            for &(u, a) in &r.terms {
                lhs += a * values[u];
                scale = scale.max((a * values[u]).abs());
            }
            let tol = 1e-9 * scale;
            let ok = match r.sense {
                Sense::Le => lhs <= r.rhs + tol,
                Sense::Ge => lhs >= r.rhs - tol,
                Sense::Eq => (lhs - r.rhs).abs() <= tol,
            };
            if !ok {
                return Err(infeasible(format!("row `{}` violated: {lhs} vs {}", r.name, r.rhs)));
            }
        }
        for c in &self.cones {
            if values[c.w] * values[c.t] < 1.0 - 1e-9 {
                return Err(infeasible(format!("cone `{}` violated", c.name)));
            }
        }

        let objective = self.objective_constant + self.objective.iter().map(|&(v, a)| a * values[v]).sum::<f64>();
        Ok(Evaluation {
            profit: self.profit_shift - objective,
            objective,
            values,
        })
    }

    /// Structural self-check: every product variable has its envelope
    /// (four rows, or three rows plus a zero lower bound for products of
    /// binaries), and every cone variable `t` appears in exactly one cone.
    pub fn check_structure(&self) -> Result<()> {
        for (v, var) in self.variables.iter().enumerate() {
            if let Some(Definition::Product { left, right }) = var.defined_by {
                let prefix = format!("{}.", var.name);
                let rows = self
                    .rows
                    .iter()
                    .filter(|r| r.name.starts_with(&prefix))
                    .filter(|r| {
                        let has = |u: usize| r.terms.iter().any(|t| t.0 == u);
                        has(v) && (has(left) || has(right))
                    })
                    .count();
                let by_bound = self.variables[left].kind == VarKind::Binary
                    && self.variables[right].kind == VarKind::Binary
                    && var.lower == 0.0;
                let need = if by_bound { 3 } else { 4 };
                if rows != need {
                    return Err(Error::Format(format!(
                        "`{}` has {rows} envelope rows, expected {need}",
                        var.name
                    )));
                }
            }
        }
        for c in &self.cones {
            let uses = self.cones.iter().filter(|o| o.t == c.t).count();
            if uses != 1 {
                return Err(Error::Format(format!(
                    "`{}` appears in {uses} cones",
                    self.variables[c.t].name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConicFile {
    schema: String,
    counts: Counts,
    program: ConicProgram,
}

pub fn conic_to_json(program: &ConicProgram) -> Result<String> {
    io::to_json(&ConicFile {
        schema: CONIC_SCHEMA.into(),
        counts: program.counts(),
        program: program.clone(),
    })
}

pub fn conic_from_json(text: &str) -> Result<ConicProgram> {
    let file: ConicFile = io::from_json(text, CONIC_SCHEMA)?;
    let counts = file.program.counts();
    if counts != file.counts {
        return Err(Error::Format(format!(
            "declared counts {:?} disagree with contents {counts:?}",
            file.counts
        )));
    }
    let n = file.program.variables.len();
    let in_range = |u: &usize| *u < n;
    let rows_ok = file.program.rows.iter().all(|r| r.terms.iter().all(|t| in_range(&t.0)));
    let cones_ok = file.program.cones.iter().all(|c| in_range(&c.w) && in_range(&c.t));
    let obj_ok = file.program.objective.iter().all(|t| in_range(&t.0));
    if !(rows_ok && cones_ok && obj_ok) {
        return Err(Error::Format("variable index out of range".into()));
    }
    Ok(file.program)
}

pub fn export_conic(program: &ConicProgram, path: &Path) -> Result<()> {
    fs::write(path, conic_to_json(program)?)?;
    Ok(())
}

pub fn import_conic(path: &Path) -> Result<ConicProgram> {
    conic_from_json(&fs::read_to_string(path)?)
}
