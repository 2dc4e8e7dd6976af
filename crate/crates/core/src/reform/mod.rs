//! Conic reformulation of the joint problem, its block and benchmark
//! variants, count audit and file export.
//!
//! The fractional objective is rewritten with `t_j = 1 / w_j`, where `w_j`
//! is group `j`'s total attraction including the outside option. Products of
//! binaries and of a binary with `t_j` are linearized by McCormick envelopes,
//! and `w_j * t_j >= 1` is kept as a rotated cone.

mod program;

use serde::{Deserialize, Serialize};

pub use program::{
    conic_from_json, conic_to_json, export_conic, import_conic, Annotation, ConeRow, ConicProgram, Counts, Definition,
    Evaluation, LinearRow, ProgramKind, Sense, VarKind, Variable, CONIC_SCHEMA,
};

use crate::error::{Error, Result};
use crate::model::{base_price, claim_cost, discount, gross_attraction, Catalog, Decision, Instance};

/// Default cap on `n * m * l` for program construction.
pub const DEFAULT_BUILD_CAP: usize = 2_000_000;

/// Per-contract aggregates used by every program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformAux {
    /// `[i][j]` gross attraction.
    pub attraction: Vec<Vec<f64>>,
    /// `[i][j]` undiscounted bundle price.
    pub base_price: Vec<Vec<f64>>,
    /// `[i][j]` expected claim cost.
    pub claim: Vec<Vec<f64>>,
    /// Largest undiscounted margin per group.
    pub margin_cap: Vec<f64>,
    /// Bounds on `1 / w_j`.
    pub t_lower: Vec<f64>,
    pub t_upper: Vec<f64>,
}

pub fn compute_aux(instance: &Instance, catalog: &Catalog) -> Result<ReformAux> {
    instance.validate()?;
    let (n, m) = (catalog.n(), instance.m);
    let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..m).map(|j| f(i, j)).collect()).collect()
    };
    let attraction = grid(&|i, j| gross_attraction(instance, catalog, i, j));
    let base = grid(&|i, j| base_price(instance, catalog, i, j));
    let claim = grid(&|i, j| claim_cost(instance, catalog, i, j));
    let margin_cap = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| base[i][j] - claim[i][j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let t_lower = (0..m)
        .map(|j| 1.0 / (instance.u0[j] + (0..n).map(|i| attraction[i][j]).sum::<f64>()))
        .collect();
    let t_upper = instance.u0.iter().map(|u| 1.0 / u).collect();
    Ok(ReformAux {
        attraction,
        base_price: base,
        claim,
        margin_cap,
        t_lower,
        t_upper,
    })
}

/// The fixed block of a two-step program.
#[derive(Debug, Clone, Copy)]
pub enum FixedBlock<'a> {
    /// Discount level per contract; recommendations are free.
    Discounts(&'a [usize]),
    /// Recommendations and advertising; discounts are free.
    Recommendations { x: &'a [Vec<bool>], y: &'a [bool] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkProgram {
    Bm1,
    Bm2,
    Bm3,
}

struct Builder<'a> {
    inst: &'a Instance,
    cat: &'a Catalog,
    aux: &'a ReformAux,
    prog: ConicProgram,
}

impl<'a> Builder<'a> {
    fn new(kind: ProgramKind, inst: &'a Instance, cat: &'a Catalog, aux: &'a ReformAux) -> Result<Self> {
        let size = cat.n() * inst.m * inst.l;
        if size > DEFAULT_BUILD_CAP {
            return Err(Error::TooLarge(format!(
                "program dimension {size} exceeds cap {DEFAULT_BUILD_CAP}"
            )));
        }
        if aux.attraction.len() != cat.n() || aux.t_lower.len() != inst.m {
            return Err(Error::Format("auxiliary values do not match the instance".into()));
        }
        let profit_shift = (0..inst.m).map(|j| inst.lambda[j] * aux.margin_cap[j]).sum();
        Ok(Builder {
            inst,
            cat,
            aux,
            prog: ConicProgram {
                kind,
                variables: Vec::new(),
                rows: Vec::new(),
                cones: Vec::new(),
                objective: Vec::new(),
                objective_constant: 0.0,
                profit_shift,
                annotations: Vec::new(),
            },
        })
    }

    fn var(&mut self, name: String, kind: VarKind, upper: Option<f64>, def: Option<Definition>) -> usize {
        self.prog.variables.push(Variable {
            name,
            kind,
            lower: 0.0,
            upper,
            defined_by: def,
        });
        self.prog.variables.len() - 1
    }

    fn binary(&mut self, name: String) -> usize {
        self.var(name, VarKind::Binary, Some(1.0), None)
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.prog.rows.push(LinearRow {
            name,
            terms,
            sense,
            rhs,
        });
        self.prog.rows.len() - 1
    }

    fn note(&mut self, family: &str, identity: &str) {
        self.prog.annotations.push(Annotation {
            family: family.into(),
            identity: identity.into(),
        });
    }

    fn cost(&mut self, v: usize, c: f64) {
        if c != 0.0 {
            self.prog.objective.push((v, c));
        }
    }

    /// `s = a * b` for binaries; the zero lower bound is the fourth side.
    fn binary_product(&mut self, name: String, a: usize, b: usize) -> usize {
        let s = self.var(
            name.clone(),
            VarKind::Continuous,
            Some(1.0),
            Some(Definition::Product { left: a, right: b }),
        );
        self.row(
            format!("{name}.lo"),
            vec![(s, 1.0), (a, -1.0), (b, -1.0)],
            Sense::Ge,
            -1.0,
        );
        self.row(format!("{name}.hi-left"), vec![(s, 1.0), (a, -1.0)], Sense::Le, 0.0);
        self.row(format!("{name}.hi-right"), vec![(s, 1.0), (b, -1.0)], Sense::Le, 0.0);
        s
    }

    /// `g = t_j * b` for a binary (or binary-valued) `b` and `t_j` within its bounds.
    fn scaled_product(&mut self, name: String, t: usize, b: usize, j: usize) -> usize {
        let (lo, hi) = (self.aux.t_lower[j], self.aux.t_upper[j]);
        let g = self.var(
            name.clone(),
            VarKind::Continuous,
            None,
            Some(Definition::Product { left: t, right: b }),
        );
        self.row(
            format!("{name}.lo-t"),
            vec![(g, 1.0), (t, -1.0), (b, -hi)],
            Sense::Ge,
            -hi,
        );
        self.row(format!("{name}.lo-b"), vec![(g, 1.0), (b, -lo)], Sense::Ge, 0.0);
        self.row(
            format!("{name}.hi-t"),
            vec![(g, 1.0), (t, -1.0), (b, -lo)],
            Sense::Le,
            -lo,
        );
        self.row(format!("{name}.hi-b"), vec![(g, 1.0), (b, -hi)], Sense::Le, 0.0);
        g
    }

    /// `w_j` and `t_j` for every group; `weight_terms[j]` are the non-`w`
    /// terms of `w_j - sum(...) = rhs[j]`.
    fn attraction_totals(&mut self, weight_terms: Vec<Vec<(usize, f64)>>, rhs: Vec<f64>) -> Vec<usize> {
        let m = self.inst.m;
        let mut t = Vec::with_capacity(m);
        for j in 0..m {
            let w = self.var(format!("w[{j}]"), VarKind::Continuous, None, None);
            let mut terms = vec![(w, 1.0)];
            terms.extend(weight_terms[j].iter().map(|&(v, a)| (v, -a)));
            let r = self.row(format!("weight[{j}]"), terms, Sense::Eq, rhs[j]);
            self.prog.variables[w].defined_by = Some(Definition::Row { row: r });
            let tj = self.var(
                format!("t[{j}]"),
                VarKind::Continuous,
                None,
                Some(Definition::Reciprocal { of: w }),
            );
            self.prog.cones.push(ConeRow {
                name: format!("cone[{j}]"),
                w,
                t: tj,
            });
            t.push(tj);
        }
        self.note(
            "w",
            "w[j] = u0[j] + sum_i (attraction[i][j] - beta[j] * price[i][j]) * x[i][j]",
        );
        self.note("t", "t[j] = 1 / w[j], relaxed to the rotated cone w[j] * t[j] >= 1");
        t
    }

    fn link_rows(&mut self, x: &[Vec<usize>], y: &[usize]) {
        for i in 0..self.cat.n() {
            for j in 0..self.inst.m {
                self.row(
                    format!("link[{i}][{j}]"),
                    vec![(x[i][j], 1.0), (y[i], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    /// Coverage per group; `x[i][j]` indexes the group's recommendation variable.
    fn cover_rows(&mut self, x: &[Vec<usize>], groups: usize) {
        for k in 0..self.cat.w() {
            for j in 0..groups {
                let terms = (0..self.cat.n())
                    .filter(|&i| self.cat.indicator(i, k))
                    .map(|i| (x[i][j], 1.0))
                    .collect();
                let name = if groups == 1 {
                    format!("cover[{k}]")
                } else {
                    format!("cover[{k}][{j}]")
                };
                self.row(name, terms, Sense::Ge, 1.0);
            }
        }
    }

    /// One-level, pairwise monotone and price-definition rows.
    fn discount_rows(&mut self, z: &[Vec<usize>]) {
        let (n, l) = (self.cat.n(), self.inst.l);
        let d = self.inst.d.clone();
        for i in 0..n {
            let terms = (0..l).map(|h| (z[i][h], 1.0)).collect();
            self.row(format!("one[{i}]"), terms, Sense::Eq, 1.0);
        }
        for i in 0..n {
            for i2 in 0..n {
                if self.cat.size(i) > self.cat.size(i2) {
                    let mut terms: Vec<(usize, f64)> = (0..l).map(|h| (z[i][h], d[h])).collect();
                    terms.extend((0..l).map(|h| (z[i2][h], -d[h])));
                    self.row(format!("monotone[{i}][{i2}]"), terms, Sense::Le, 0.0);
                }
            }
        }
    }

    fn price_vars(&mut self, z: &[Vec<usize>]) {
        let (n, m, l) = (self.cat.n(), self.inst.m, self.inst.l);
        for i in 0..n {
            for j in 0..m {
                let p = self.var(format!("p[{i}][{j}]"), VarKind::Continuous, None, None);
                let mut terms = vec![(p, 1.0)];
                terms.extend((0..l).map(|h| (z[i][h], -self.aux.base_price[i][j] * self.inst.d[h])));
                let r = self.row(format!("price[{i}][{j}]"), terms, Sense::Eq, 0.0);
                self.prog.variables[p].defined_by = Some(Definition::Row { row: r });
            }
        }
        self.note("p", "p[i][j] = base_price[i][j] * sum_h d[h] * z[i][h]");
    }

    /// Objective weight of `t_j * x_ij` at multiplier `mult`:
    /// `lambda_j * (a - beta_j P mult) * (R - P mult + C)`.
    fn pair_cost(&self, i: usize, j: usize, mult: f64) -> f64 {
        let a = self.aux;
        let price = a.base_price[i][j] * mult;
        self.inst.lambda[j]
            * (a.attraction[i][j] - self.inst.beta[j] * price)
            * (a.margin_cap[j] - price + a.claim[i][j])
    }

    /// Split of [`pair_cost`](Self::pair_cost) into the part independent of
    /// the level and the part carried by the level product.
    fn level_cost(&self, i: usize, j: usize, h: usize) -> f64 {
        let a = self.aux;
        let (v, p, c, r, b, d) = (
            a.attraction[i][j],
            a.base_price[i][j],
            a.claim[i][j],
            a.margin_cap[j],
            self.inst.beta[j],
            self.inst.d[h],
        );
        self.inst.lambda[j] * (-v * p * d - b * p * r * d + b * p * p * d * d - b * p * c * d)
    }

    fn base_cost(&self, i: usize, j: usize) -> f64 {
        let a = self.aux;
        self.inst.lambda[j] * a.attraction[i][j] * (a.margin_cap[j] + a.claim[i][j])
    }

    fn outside_cost(&self, j: usize) -> f64 {
        self.inst.lambda[j] * self.inst.u0[j] * self.aux.margin_cap[j]
    }
}

/// The joint design-and-pricing program.
pub fn build_misocp(instance: &Instance, catalog: &Catalog, aux: &ReformAux) -> Result<ConicProgram> {
    let mut b = Builder::new(ProgramKind::Full, instance, catalog, aux)?;
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    let y: Vec<usize> = (0..n).map(|i| b.binary(format!("y[{i}]"))).collect();
    let x: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).map(|j| b.binary(format!("x[{i}][{j}]"))).collect())
        .collect();
    let z: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..l).map(|h| b.binary(format!("z[{i}][{h}]"))).collect())
        .collect();
    let mut s = vec![vec![Vec::with_capacity(l); m]; n];
    for i in 0..n {
        for j in 0..m {
            for h in 0..l {
                s[i][j].push(b.binary_product(format!("s[{i}][{j}][{h}]"), z[i][h], x[i][j]));
            }
        }
    }
    b.note("s", "s[i][j][h] = z[i][h] * x[i][j]");
    let weight_terms = (0..m)
        .map(|j| {
            let mut terms = Vec::new();
            for i in 0..n {
                terms.push((x[i][j], aux.attraction[i][j]));
                for h in 0..l {
                    terms.push((s[i][j][h], -instance.beta[j] * aux.base_price[i][j] * instance.d[h]));
                }
            }
            terms
        })
        .collect();
    let t = b.attraction_totals(weight_terms, instance.u0.clone());
    let mut g = vec![Vec::with_capacity(m); n];
    for i in 0..n {
        for j in 0..m {
            g[i].push(b.scaled_product(format!("g[{i}][{j}]"), t[j], x[i][j], j));
        }
    }
    b.note("g", "g[i][j] = t[j] * x[i][j]");
    let mut o = vec![vec![Vec::with_capacity(l); m]; n];
    for i in 0..n {
        for j in 0..m {
            for h in 0..l {
                o[i][j].push(b.scaled_product(format!("o[{i}][{j}][{h}]"), t[j], s[i][j][h], j));
            }
        }
    }
    b.note("o", "o[i][j][h] = t[j] * s[i][j][h]");
    b.price_vars(&z);
    b.link_rows(&x, &y);
    b.cover_rows(&x, m);
    b.discount_rows(&z);

    for j in 0..m {
        let c = b.outside_cost(j);
        b.cost(t[j], c);
    }
    for i in 0..n {
        b.cost(y[i], instance.theta);
        for j in 0..m {
            let c = b.base_cost(i, j);
            b.cost(g[i][j], c);
            for h in 0..l {
                let c = b.level_cost(i, j, h);
                b.cost(o[i][j][h], c);
            }
        }
    }
    Ok(b.prog)
}

fn check_levels(instance: &Instance, catalog: &Catalog, levels: &[usize]) -> Result<()> {
    if levels.len() != catalog.n() || levels.iter().any(|&h| h >= instance.l) {
        return Err(Error::InfeasibleAssignment(
            "fixed discount levels do not match the instance".into(),
        ));
    }
    if !discount::is_monotone(catalog, levels) {
        return Err(Error::InfeasibleAssignment(
            "fixed discount levels are not monotone".into(),
        ));
    }
    Ok(())
}

/// Design program: discount levels fixed, recommendations and advertising free.
fn design_program(
    kind: ProgramKind,
    instance: &Instance,
    catalog: &Catalog,
    aux: &ReformAux,
    levels: &[usize],
) -> Result<ConicProgram> {
    check_levels(instance, catalog, levels)?;
    let mut b = Builder::new(kind, instance, catalog, aux)?;
    let (n, m) = (catalog.n(), instance.m);
    let y: Vec<usize> = (0..n).map(|i| b.binary(format!("y[{i}]"))).collect();
    let x: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).map(|j| b.binary(format!("x[{i}][{j}]"))).collect())
        .collect();
    let mult: Vec<f64> = levels.iter().map(|&h| instance.d[h]).collect();
    let weight_terms = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| {
                    (
                        x[i][j],
                        aux.attraction[i][j] - instance.beta[j] * aux.base_price[i][j] * mult[i],
                    )
                })
                .collect()
        })
        .collect();
    let t = b.attraction_totals(weight_terms, instance.u0.clone());
    let mut g = vec![Vec::with_capacity(m); n];
    for i in 0..n {
        for j in 0..m {
            g[i].push(b.scaled_product(format!("g[{i}][{j}]"), t[j], x[i][j], j));
        }
    }
    b.note("g", "g[i][j] = t[j] * x[i][j]");
    b.link_rows(&x, &y);
    b.cover_rows(&x, m);
    for j in 0..m {
        let c = b.outside_cost(j);
        b.cost(t[j], c);
    }
    for i in 0..n {
        b.cost(y[i], instance.theta);
        for j in 0..m {
            let c = b.pair_cost(i, j, mult[i]);
            b.cost(g[i][j], c);
        }
    }
    Ok(b.prog)
}

/// Pricing program: recommendations fixed, discount levels free.
fn pricing_program(
    instance: &Instance,
    catalog: &Catalog,
    aux: &ReformAux,
    fixed_x: &[Vec<bool>],
    fixed_y: &[bool],
) -> Result<ConicProgram> {
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    if fixed_x.len() != n || fixed_y.len() != n || fixed_x.iter().any(|r| r.len() != m) {
        return Err(Error::InfeasibleAssignment(
            "fixed recommendations do not match the instance".into(),
        ));
    }
    for i in 0..n {
        for j in 0..m {
            if fixed_x[i][j] && !fixed_y[i] {
                return Err(Error::InfeasibleAssignment(format!(
                    "contract {i} recommended but not advertised"
                )));
            }
        }
    }
    for j in 0..m {
        let cover = (0..n)
            .filter(|&i| fixed_x[i][j])
            .fold(0u32, |acc, i| acc | catalog.mask(i));
        if cover != catalog.full_mask() {
            return Err(Error::InfeasibleAssignment(format!(
                "recommendations leave group {j} uncovered"
            )));
        }
    }
    let mut b = Builder::new(ProgramKind::Pricing, instance, catalog, aux)?;
    let z: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..l).map(|h| b.binary(format!("z[{i}][{h}]"))).collect())
        .collect();
    let on = |i: usize, j: usize| if fixed_x[i][j] { 1.0 } else { 0.0 };
    let weight_terms = (0..m)
        .map(|j| {
            let mut terms = Vec::new();
            for i in 0..n {
                for h in 0..l {
                    terms.push((
                        z[i][h],
                        -instance.beta[j] * aux.base_price[i][j] * instance.d[h] * on(i, j),
                    ));
                }
            }
            terms
        })
        .collect();
    let rhs = (0..m)
        .map(|j| instance.u0[j] + (0..n).map(|i| aux.attraction[i][j] * on(i, j)).sum::<f64>())
        .collect();
    let t = b.attraction_totals(weight_terms, rhs);
    let mut g = vec![vec![Vec::with_capacity(l); m]; n];
    for i in 0..n {
        for j in 0..m {
            for h in 0..l {
                g[i][j].push(b.scaled_product(format!("g[{i}][{j}][{h}]"), t[j], z[i][h], j));
            }
        }
    }
    b.note("g", "g[i][j][h] = t[j] * z[i][h]");
    b.price_vars(&z);
    b.discount_rows(&z);

    b.prog.objective_constant = instance.theta * fixed_y.iter().filter(|&&a| a).count() as f64;
    for j in 0..m {
        let c = b.outside_cost(j) + (0..n).map(|i| b.base_cost(i, j) * on(i, j)).sum::<f64>();
        b.cost(t[j], c);
    }
    for i in 0..n {
        for j in 0..m {
            for h in 0..l {
                let c = b.level_cost(i, j, h) * on(i, j);
                b.cost(g[i][j][h], c);
            }
        }
    }
    Ok(b.prog)
}

/// Program of one block of the two-step method, the other block fixed.
pub fn build_step_program(
    instance: &Instance,
    catalog: &Catalog,
    aux: &ReformAux,
    fixed: FixedBlock<'_>,
) -> Result<ConicProgram> {
    match fixed {
        FixedBlock::Discounts(levels) => design_program(ProgramKind::Design, instance, catalog, aux, levels),
        FixedBlock::Recommendations { x, y } => pricing_program(instance, catalog, aux, x, y),
    }
}

/// Programs of the industry benchmark strategies.
pub fn build_benchmark_program(
    instance: &Instance,
    catalog: &Catalog,
    aux: &ReformAux,
    which: BenchmarkProgram,
) -> Result<ConicProgram> {
    let z0 = discount::initial_levels(catalog, instance.l);
    match which {
        BenchmarkProgram::Bm2 => design_program(ProgramKind::Bm2, instance, catalog, aux, &z0),
        BenchmarkProgram::Bm1 => shared_program(instance, catalog, aux, Some(&z0)),
        BenchmarkProgram::Bm3 => shared_program(instance, catalog, aux, None),
    }
}

/// One recommendation set for every group; discount levels fixed when given.
fn shared_program(
    instance: &Instance,
    catalog: &Catalog,
    aux: &ReformAux,
    levels: Option<&[usize]>,
) -> Result<ConicProgram> {
    if let Some(levels) = levels {
        check_levels(instance, catalog, levels)?;
    }
    let kind = if levels.is_some() {
        ProgramKind::Bm1
    } else {
        ProgramKind::Bm3
    };
    let mut b = Builder::new(kind, instance, catalog, aux)?;
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    let x: Vec<usize> = (0..n).map(|i| b.binary(format!("x[{i}]"))).collect();
    let z: Option<Vec<Vec<usize>>> = levels.is_none().then(|| {
        (0..n)
            .map(|i| (0..l).map(|h| b.binary(format!("z[{i}][{h}]"))).collect())
            .collect()
    });
    let s: Option<Vec<Vec<usize>>> = z.as_ref().map(|z| {
        (0..n)
            .map(|i| {
                (0..l)
                    .map(|h| b.binary_product(format!("s[{i}][{h}]"), z[i][h], x[i]))
                    .collect()
            })
            .collect()
    });
    if s.is_some() {
        b.note("s", "s[i][h] = z[i][h] * x[i]");
    }
    let weight_terms = (0..m)
        .map(|j| {
            let mut terms = Vec::new();
            for i in 0..n {
                let (a, p, beta) = (aux.attraction[i][j], aux.base_price[i][j], instance.beta[j]);
                match (levels, &s) {
                    (Some(lv), _) => terms.push((x[i], a - beta * p * instance.d[lv[i]])),
                    (None, Some(s)) => {
                        terms.push((x[i], a));
                        terms.extend((0..l).map(|h| (s[i][h], -beta * p * instance.d[h])));
                    }
                    (None, None) => unreachable!(),
                }
            }
            terms
        })
        .collect();
    let t = b.attraction_totals(weight_terms, instance.u0.clone());
    let mut g = vec![Vec::with_capacity(m); n];
    for i in 0..n {
        for j in 0..m {
            g[i].push(b.scaled_product(format!("g[{i}][{j}]"), t[j], x[i], j));
        }
    }
    b.note("g", "g[i][j] = t[j] * x[i]");
    let o = s.as_ref().map(|s| {
        let mut o = vec![vec![Vec::with_capacity(l); m]; n];
        for i in 0..n {
            for j in 0..m {
                for h in 0..l {
                    o[i][j].push(b.scaled_product(format!("o[{i}][{j}][{h}]"), t[j], s[i][h], j));
                }
            }
        }
        o
    });
    if o.is_some() {
        b.note("o", "o[i][j][h] = t[j] * s[i][h]");
    }
    if let Some(z) = &z {
        b.price_vars(z);
    }
    let xs: Vec<Vec<usize>> = x.iter().map(|&v| vec![v]).collect();
    b.cover_rows(&xs, 1);
    if let Some(z) = &z {
        b.discount_rows(z);
    }

    for j in 0..m {
        let c = b.outside_cost(j);
        b.cost(t[j], c);
    }
    for i in 0..n {
        b.cost(x[i], instance.theta);
        for j in 0..m {
            match (levels, &o) {
                (Some(lv), _) => {
                    let c = b.pair_cost(i, j, instance.d[lv[i]]);
                    b.cost(g[i][j], c);
                }
                (None, Some(o)) => {
                    let c = b.base_cost(i, j);
                    b.cost(g[i][j], c);
                    for h in 0..l {
                        let c = b.level_cost(i, j, h);
                        b.cost(o[i][j][h], c);
                    }
                }
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(b.prog)
}

/// Back-substitute a feasible binary assignment and return the equivalent
/// profit together with every recovered variable.
pub fn evaluate_reformulated_objective(program: &ConicProgram, binaries: &[bool]) -> Result<Evaluation> {
    program.evaluate(binaries)
}

/// Convenience: evaluate the program at the binaries encoding `decision`.
pub fn evaluate_decision(program: &ConicProgram, decision: &Decision) -> Result<Evaluation> {
    program.evaluate(&program.binaries_for(decision)?)
}

/// Closed-form counts as printed in the complexity table, for the joint
/// program and the two blocks.
pub fn published_counts(kind: ProgramKind, m: usize, w: usize, l: usize) -> Option<Counts> {
    let n = (1usize << w) - 1;
    Some(match kind {
        ProgramKind::Full => Counts {
            binary: m * n + n * l + n,
            continuous: 2 * m * n * l + 2 * m * n + 2 * m,
            linear: n * n + 7 * m * n * l + 6 * m * n + 2 * m + w * m,
            cone: m,
        },
        ProgramKind::Design => Counts {
            binary: m * n + n,
            continuous: m * n + 2 * m,
            linear: 5 * m * n + w * m + m,
            cone: m,
        },
        ProgramKind::Pricing => Counts {
            binary: n * l,
            continuous: m * n * l + m * n + 2 * m,
            linear: n * n + 4 * m * n * l + m * n + n + m,
            cone: m,
        },
        _ => return None,
    })
}

/// As-built and published counts of one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountAudit {
    pub kind: ProgramKind,
    pub as_built: Counts,
    pub published: Counts,
    /// Ordered contract pairs with a strictly larger first contract.
    pub monotone_pairs: usize,
}

impl CountAudit {
    /// Binary, continuous and cone counts agree; linear rows may differ.
    pub fn structural_match(&self) -> bool {
        let (a, p) = (self.as_built, self.published);
        a.binary == p.binary && a.continuous == p.continuous && a.cone == p.cone
    }
}

/// Build the joint program and both blocks (at the initial discounts and the
/// full-bundle-everywhere recommendation) and compare their counts.
pub fn audit_counts(instance: &Instance, catalog: &Catalog) -> Result<Vec<CountAudit>> {
    let aux = compute_aux(instance, catalog)?;
    let (n, m, w, l) = (catalog.n(), instance.m, catalog.w(), instance.l);
    let z0 = discount::initial_levels(catalog, l);
    let full = catalog.full_bundle();
    let x: Vec<Vec<bool>> = (0..n).map(|i| vec![i == full; m]).collect();
    let y: Vec<bool> = (0..n).map(|i| i == full).collect();
    let programs = [
        build_misocp(instance, catalog, &aux)?,
        build_step_program(instance, catalog, &aux, FixedBlock::Discounts(&z0))?,
        build_step_program(instance, catalog, &aux, FixedBlock::Recommendations { x: &x, y: &y })?,
    ];
    let pairs = (0..n)
        .flat_map(|i| (0..n).map(move |i2| (i, i2)))
        .filter(|&(i, i2)| catalog.size(i) > catalog.size(i2))
        .count();
    Ok(programs
        .iter()
        .map(|p| CountAudit {
            kind: p.kind,
            as_built: p.counts(),
            published: published_counts(p.kind, m, w, l).expect("published counts exist for these programs"),
            monotone_pairs: pairs,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{default_table3_scenario, generate_instance};
    use crate::model::expected_profit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(w: usize, seed: u64) -> (Instance, Catalog, ReformAux) {
        let inst = generate_instance(&default_table3_scenario(w, 6.0, 8.0, seed).unwrap()).unwrap();
        let cat = Catalog::new(w).unwrap();
        let aux = compute_aux(&inst, &cat).unwrap();
        (inst, cat, aux)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn aux_values() {
        let (inst, cat, aux) = setup(3, 2);
        let i = cat.index_of_mask(0b011).unwrap();
        assert_eq!(aux.base_price[i][0], 300.0);
        assert_eq!(aux.claim[i][0], 600.0 * inst.f[0][0] + 1200.0 * inst.f[1][0]);
        for j in 0..inst.m {
            assert!(aux.t_lower[j] < aux.t_upper[j]);
            for i in 0..cat.n() {
                assert!(aux.margin_cap[j] >= aux.base_price[i][j] - aux.claim[i][j]);
            }
        }
    }

    #[test]
    fn counts_match_published_forms() {
        for w in 3..=5 {
            let (inst, cat, _) = setup(w, 1);
            for audit in audit_counts(&inst, &cat).unwrap() {
                assert!(audit.structural_match(), "{audit:?}");
                if audit.kind == ProgramKind::Design {
                    assert_eq!(audit.as_built, audit.published);
                }
            }
        }
        let (inst, cat, aux) = setup(3, 1);
        let c = build_misocp(&inst, &cat, &aux).unwrap().counts();
        assert_eq!((c.binary, c.continuous, c.cone), (63, 290, 5));
    }

    #[test]
    fn structure_holds_for_every_program() {
        let (inst, cat, aux) = setup(3, 1);
        let z0 = discount::initial_levels(&cat, 3);
        let full = build_misocp(&inst, &cat, &aux).unwrap();
        full.check_structure().unwrap();
        build_step_program(&inst, &cat, &aux, FixedBlock::Discounts(&z0))
            .unwrap()
            .check_structure()
            .unwrap();
        for which in [BenchmarkProgram::Bm1, BenchmarkProgram::Bm2, BenchmarkProgram::Bm3] {
            build_benchmark_program(&inst, &cat, &aux, which)
                .unwrap()
                .check_structure()
                .unwrap();
        }
    }

    #[test]
    fn benchmark_shapes() {
        let (inst, cat, aux) = setup(3, 1);
        let bm1 = build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm1).unwrap();
        assert!(bm1.variables.iter().all(|v| !v.name.starts_with('z')));
        let bm3 = build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm3).unwrap();
        assert!(bm3.find("x[0]").is_some() && bm3.find("x[0][0]").is_none());
        let bm2 = build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm2).unwrap();
        let z0 = discount::initial_levels(&cat, 3);
        let mut step = build_step_program(&inst, &cat, &aux, FixedBlock::Discounts(&z0)).unwrap();
        step.kind = ProgramKind::Bm2;
        assert_eq!(bm2, step);
    }

    #[test]
    fn solved_decisions_evaluate_to_their_profit() {
        let (inst, cat, aux) = setup(3, 5);
        let full = build_misocp(&inst, &cat, &aux).unwrap();
        let sol = crate::exact::solve_exact(&inst, &cat, crate::solution::Budget::default()).unwrap();
        let eval = evaluate_decision(&full, &sol.decision).unwrap();
        assert!(close(eval.profit, sol.profit));
        assert!(close(eval.profit + eval.objective, full.profit_shift));

        let levels = sol.decision.levels().unwrap();
        let design = build_step_program(&inst, &cat, &aux, FixedBlock::Discounts(&levels)).unwrap();
        assert!(close(
            evaluate_decision(&design, &sol.decision).unwrap().profit,
            sol.profit
        ));
        let pricing = build_step_program(
            &inst,
            &cat,
            &aux,
            FixedBlock::Recommendations {
                x: &sol.decision.x,
                y: &sol.decision.y,
            },
        )
        .unwrap();
        assert!(close(
            evaluate_decision(&pricing, &sol.decision).unwrap().profit,
            sol.profit
        ));

        for which in [crate::Benchmark::Bm1, crate::Benchmark::Bm2, crate::Benchmark::Bm3] {
            let s = crate::solve_benchmark(&inst, &cat, which, crate::solution::Budget::default()).unwrap();
            let prog = build_benchmark_program(
                &inst,
                &cat,
                &aux,
                match which {
                    crate::Benchmark::Bm1 => BenchmarkProgram::Bm1,
                    crate::Benchmark::Bm2 => BenchmarkProgram::Bm2,
                    crate::Benchmark::Bm3 => BenchmarkProgram::Bm3,
                },
            )
            .unwrap();
            assert!(close(evaluate_decision(&prog, &s.decision).unwrap().profit, s.profit));
        }
    }

    #[test]
    fn products_are_exact_at_binary_points() {
        let (inst, cat, aux) = setup(2, 3);
        let prog = build_misocp(&inst, &cat, &aux).unwrap();
        let sol = crate::exact::solve_exact(&inst, &cat, crate::solution::Budget::default()).unwrap();
        let eval = evaluate_decision(&prog, &sol.decision).unwrap();
        for (v, var) in prog.variables.iter().enumerate() {
            if let Some(Definition::Product { left, right }) = var.defined_by {
                assert_eq!(eval.values[v], eval.values[left] * eval.values[right]);
            }
        }
        let s = prog.find("s[0][0][0]").unwrap();
        assert!(eval.values[s] == 0.0 || eval.values[s] == 1.0);
    }

    #[test]
    fn infeasible_assignments_are_rejected() {
        let (inst, cat, aux) = setup(2, 3);
        let prog = build_misocp(&inst, &cat, &aux).unwrap();
        let mut d = Decision::empty(3, 5, 2);
        for i in 0..3 {
            d.set_level(i, 0);
        }
        let err = evaluate_decision(&prog, &d).unwrap_err();
        assert_eq!(err.kind(), "infeasible-assignment");

        let x = vec![vec![false; 5]; 3];
        let y = vec![false; 3];
        let err = build_step_program(&inst, &cat, &aux, FixedBlock::Recommendations { x: &x, y: &y }).unwrap_err();
        assert_eq!(err.kind(), "infeasible-assignment");
    }

    #[test]
    fn random_feasible_points_match_direct_profit() {
        let (inst, cat, aux) = setup(3, 9);
        let prog = build_misocp(&inst, &cat, &aux).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 200 {
            let raw = Decision {
                x: (0..7).map(|_| (0..5).map(|_| rng.random_bool(0.4)).collect()).collect(),
                y: (0..7).map(|_| rng.random_bool(0.5)).collect(),
                z: (0..7).map(|_| (0..3).map(|_| rng.random_bool(0.5)).collect()).collect(),
            };
            let d = crate::repair(&raw, &inst, &cat);
            let direct = expected_profit(&inst, &cat, &d).unwrap();
            let eval = evaluate_decision(&prog, &d).unwrap();
            assert!(close(eval.profit, direct), "{} vs {direct}", eval.profit);
            checked += 1;
        }
    }

    #[test]
    fn export_round_trip_is_byte_identical() {
        let (inst, cat, aux) = setup(3, 1);
        let prog = build_misocp(&inst, &cat, &aux).unwrap();
        let text = conic_to_json(&prog).unwrap();
        let back = conic_from_json(&text).unwrap();
        assert_eq!(back, prog);
        assert_eq!(conic_to_json(&back).unwrap(), text);
        let tampered = text.replacen("\"binary\": 63", "\"binary\": 64", 1);
        assert!(conic_from_json(&tampered).is_err());
    }
}
