//! Iterative two-step heuristic: alternate an exact design step (which
//! contracts to advertise and recommend, discounts fixed) and an exact
//! pricing step (discount levels, recommendations fixed) until an
//! iteration no longer improves the profit.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fixed_domains, run_search, select};
use crate::model::{
    discount, expected_profit, profit_tolerance, strictly_better, Catalog, Decision, Instance, OfferTable,
};
use crate::ratio::{Opt, RatioProblem, Slot};
use crate::solution::{Budget, Certificate, Method, Solution};

/// Outcome of one block solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub decision: Decision,
    pub profit: f64,
    /// The block was solved to proven optimality.
    pub exact: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationCap,
    TimeCap,
}

/// Changed-bit counts between the decisions at the start and end of an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChangeCount {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItsIteration {
    pub iteration: usize,
    pub design_profit: f64,
    pub pricing_profit: f64,
    pub changed: ChangeCount,
    pub design_exact: bool,
    pub pricing_exact: bool,
}

/// Improvement found by re-solving each block once at termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCheck {
    pub design_gain: f64,
    pub pricing_gain: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItsTrace {
    pub iterations: Vec<ItsIteration>,
    pub termination: Termination,
    pub block_check: Option<BlockCheck>,
}

impl ItsTrace {
    /// Profit after each step, in execution order.
    pub fn profit_sequence(&self) -> Vec<f64> {
        self.iterations
            .iter()
            .flat_map(|it| [it.design_profit, it.pricing_profit])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItsCaps {
    pub step_budget: Budget,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    /// Re-solve both blocks once after termination.
    pub check_blocks: bool,
}

impl Default for ItsCaps {
    fn default() -> Self {
        Self {
            step_budget: Budget::default(),
            max_iterations: 50,
            time_limit: None,
            check_blocks: true,
        }
    }
}

/// Starting discount levels: each contract at the level indexed by its
/// highest subsystem (clamped to the ladder), then raised where needed so
/// that larger contracts never sit above smaller ones.
pub fn initial_discounts(catalog: &Catalog, l: usize) -> Vec<usize> {
    discount::initial_levels(catalog, l)
}

/// Best advertised set and recommendations under fixed discount levels.
pub fn step1_design(
    instance: &Instance,
    catalog: &Catalog,
    levels: &[usize],
    budget: Budget,
    incumbent: Option<f64>,
) -> Result<StepResult> {
    instance.validate()?;
    if levels.len() != catalog.n() || levels.iter().any(|&h| h >= instance.l) {
        return Err(Error::InvalidConfig("discount levels do not match the instance".into()));
    }
    if !discount::is_monotone(catalog, levels) {
        return Err(Error::InvalidConfig(
            "fixed discount levels violate the monotone rule".into(),
        ));
    }
    let sol = run_search(
        instance,
        catalog,
        false,
        fixed_domains(levels),
        budget,
        incumbent,
        Method::Its,
    )?;
    Ok(StepResult {
        exact: sol.certificate == Certificate::ProvenOptimal,
        decision: sol.decision,
        profit: sol.profit,
        nodes: sol.nodes,
    })
}

struct Pricing<'a> {
    instance: &'a Instance,
    catalog: &'a Catalog,
    table: OfferTable,
    x: &'a [Vec<bool>],
    y: &'a [bool],
    /// Advertised contracts in (size, index) order.
    order: Vec<usize>,
    /// Levels allowed for each advertised contract by the weight rule.
    allowed: Vec<Vec<usize>>,
    deadline: Instant,
    nodes: u64,
    stopped: bool,
    best: f64,
    candidates: Vec<(f64, Vec<usize>)>,
}

impl Pricing<'_> {
    fn floor(&self, assign: &[usize], p: usize) -> usize {
        let size = self.catalog.size(self.order[p]);
        assign
            .iter()
            .enumerate()
            .filter(|&(q, _)| self.catalog.size(self.order[q]) < size)
            .map(|(_, &h)| h)
            .max()
            .unwrap_or(0)
    }

    fn threshold(&self) -> f64 {
        if self.best.is_finite() {
            self.best - profit_tolerance(self.best, self.best)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn bound(&self, assign: &[usize]) -> f64 {
        let d = assign.len();
        let floors: Vec<usize> = (d..self.order.len()).map(|p| self.floor(assign, p)).collect();
        let mut total = 0.0;
        for j in 0..self.instance.m {
            let mut slots = Vec::new();
            for (p, &i) in self.order.iter().enumerate() {
                if !self.x[i][j] {
                    continue;
                }
                let levels: Vec<usize> = if p < d {
                    vec![assign[p]]
                } else {
                    self.allowed[p]
                        .iter()
                        .copied()
                        .filter(|&h| h >= floors[p - d])
                        .collect()
                };
                let options = levels
                    .into_iter()
                    .map(|h| Opt {
                        weight: self.table.weight(i, j, h),
                        margin: self.table.margin(i, j, h),
                        tag: h,
                    })
                    .collect();
                slots.push(Slot {
                    mask: 0,
                    forced: true,
                    options,
                });
            }
            let problem = RatioProblem {
                u0: self.instance.u0[j],
                target: 0,
                slots,
            };
            match problem.maximize() {
                Some(sol) => total += self.instance.lambda[j] * sol.value,
                None => return f64::NEG_INFINITY,
            }
        }
        total
    }

    fn value(&self, assign: &[usize]) -> f64 {
        let mut total = 0.0;
        for j in 0..self.instance.m {
            let offers = self
                .order
                .iter()
                .zip(assign)
                .filter(|(&i, _)| self.x[i][j])
                .map(|(&i, &h)| (i, h));
            total += self.instance.lambda[j] * self.table.group_revenue(self.instance.u0[j], j, offers);
        }
        total
    }

    fn offer(&mut self, value: f64, assign: &[usize]) {
        if !self.best.is_finite() || value > self.best {
            self.best = value;
            let cut = self.threshold();
            self.candidates.retain(|c| c.0 >= cut);
        }
        if value >= self.threshold() {
            self.candidates.push((value, assign.to_vec()));
        }
    }

    fn dfs(&mut self, assign: &mut Vec<usize>) {
        if self.stopped {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) && Instant::now() >= self.deadline {
            self.stopped = true;
            return;
        }
        let p = assign.len();
        if p == self.order.len() {
            let v = self.value(assign);
            self.offer(v, assign);
            return;
        }
        if self.bound(assign) < self.threshold() {
            return;
        }
        let floor = self.floor(assign, p);
        let choices: Vec<usize> = self.allowed[p].iter().copied().filter(|&h| h >= floor).collect();
        for h in choices {
            assign.push(h);
            self.dfs(assign);
            assign.pop();
        }
    }

    fn decision(&self, assign: &[usize]) -> Decision {
        let n = self.catalog.n();
        let l = self.instance.l;
        let mut raw = vec![0; n];
        for (&i, &h) in self.order.iter().zip(assign) {
            raw[i] = h;
        }
        let full = discount::canonical_levels(self.catalog, l, self.y, &raw);
        Decision::from_levels(self.x.to_vec(), self.y.to_vec(), &full, l)
    }
}

/// Best monotone discount levels for the advertised contracts with the
/// recommendations fixed; other contracts get the canonical completion.
/// `incoming` levels, when feasible, seed the incumbent.
pub fn step2_pricing(
    instance: &Instance,
    catalog: &Catalog,
    x: &[Vec<bool>],
    y: &[bool],
    incoming: Option<&[usize]>,
    budget: Budget,
) -> Result<StepResult> {
    instance.validate()?;
    let n = catalog.n();
    if x.len() != n || y.len() != n || x.iter().any(|r| r.len() != instance.m) {
        return Err(Error::InvalidConfig(
            "recommendation shape does not match the instance".into(),
        ));
    }
    let l = instance.l;
    let table = OfferTable::new(instance, catalog);
    let order: Vec<usize> = catalog.by_size().iter().copied().filter(|&i| y[i]).collect();
    if order.is_empty() {
        return Err(Error::NoFeasibleSolution(
            "no contract is advertised, coverage cannot hold".into(),
        ));
    }
    let allowed: Vec<Vec<usize>> = order
        .iter()
        .map(|&i| {
            (0..l)
                .filter(|&h| (0..instance.m).all(|j| !x[i][j] || table.eligible(i, j, h)))
                .collect()
        })
        .collect();
    let start = Instant::now();
    let mut search = Pricing {
        instance,
        catalog,
        table,
        x,
        y,
        order,
        allowed,
        deadline: budget.deadline(start),
        nodes: 0,
        stopped: false,
        best: f64::NEG_INFINITY,
        candidates: Vec::new(),
    };
    let mut candidates = Vec::new();
    if let Some(levels) = incoming {
        let probe = Decision::from_levels(x.to_vec(), y.to_vec(), levels, l);
        if let Ok(p) = expected_profit(instance, catalog, &probe) {
            let seed: Vec<usize> = search.order.iter().map(|&i| levels[i]).collect();
            let v = p + instance.theta * y.iter().filter(|&&b| b).count() as f64;
            search.offer(v, &seed);
            let mut canon = probe;
            canon.canonicalize(catalog, l);
            candidates.push(canon);
        }
    }
    let mut assign = Vec::new();
    search.dfs(&mut assign);
    candidates.extend(search.candidates.iter().map(|(_, a)| search.decision(a)));
    let (decision, profit) = select(instance, catalog, candidates).ok_or_else(|| {
        Error::NoFeasibleSolution("every monotone assignment gives a recommended contract negative weight".into())
    })?;
    Ok(StepResult {
        decision,
        profit,
        exact: !search.stopped,
        nodes: search.nodes,
    })
}

fn changes(a: &Decision, b: &Decision) -> ChangeCount {
    let diff = |p: &[bool], q: &[bool]| p.iter().zip(q).filter(|(u, v)| u != v).count();
    ChangeCount {
        x: a.x.iter().zip(&b.x).map(|(p, q)| diff(p, q)).sum(),
        y: diff(&a.y, &b.y),
        z: a.z.iter().zip(&b.z).map(|(p, q)| diff(p, q)).sum(),
    }
}

/// Run the alternating scheme from the initial discount levels.
pub fn its_solve(instance: &Instance, catalog: &Catalog, caps: ItsCaps) -> Result<Solution> {
    instance.validate()?;
    if caps.max_iterations == 0 {
        return Err(Error::InvalidConfig("iteration cap must be at least 1".into()));
    }
    let start = Instant::now();
    let l = instance.l;
    let mut levels = initial_discounts(catalog, l);
    let mut current: Option<(Decision, f64)> = None;
    let mut iterations = Vec::new();
    let mut nodes = 0u64;
    let mut termination = Termination::IterationCap;

    for iteration in 1..=caps.max_iterations {
        if caps.time_limit.is_some_and(|t| start.elapsed() >= t) {
            termination = Termination::TimeCap;
            break;
        }
        let before = current.as_ref().map(|c| c.0.clone());

        let incumbent = current.as_ref().map(|c| c.1);
        let (designed, design_profit, design_exact) =
            match step1_design(instance, catalog, &levels, caps.step_budget, incumbent) {
                Ok(step) => {
                    nodes += step.nodes;
                    match &current {
                        Some((d, p)) if !strictly_better(step.profit, *p) => (d.clone(), *p, step.exact),
                        _ => (step.decision, step.profit, step.exact),
                    }
                }
                Err(Error::NoFeasibleSolution(_)) if current.is_some() => {
                    let (d, p) = current.clone().unwrap();
                    (d, p, false)
                }
                Err(e) => return Err(e),
            };

        let own_levels = designed.levels().expect("one level per contract");
        let (priced, pricing_profit, pricing_exact) = match step2_pricing(
            instance,
            catalog,
            &designed.x,
            &designed.y,
            Some(&own_levels),
            caps.step_budget,
        ) {
            Ok(step) => {
                nodes += step.nodes;
                if strictly_better(step.profit, design_profit) {
                    (step.decision, step.profit, step.exact)
                } else {
                    (designed.clone(), design_profit, step.exact)
                }
            }
            Err(Error::NoFeasibleSolution(_)) => (designed.clone(), design_profit, false),
            Err(e) => return Err(e),
        };

        let changed = match &before {
            Some(b) => changes(b, &priced),
            None => changes(&Decision::empty(catalog.n(), instance.m, l), &priced),
        };
        iterations.push(ItsIteration {
            iteration,
            design_profit,
            pricing_profit,
            changed,
            design_exact,
            pricing_exact,
        });
        let stalled = incumbent.is_some_and(|p| !strictly_better(pricing_profit, p));
        // the next design step sees non-advertised contracts at their shallowest allowed level
        let next = discount::shallow_levels(catalog, &priced.y, &priced.levels().expect("one level per contract"));
        let fixed_point = priced == designed && next == levels;
        levels = next;
        current = Some((priced, pricing_profit));
        if stalled || fixed_point {
            termination = Termination::Converged;
            break;
        }
    }

    let (decision, profit) = current.ok_or_else(|| Error::NoFeasibleSolution("no iteration completed".into()))?;
    let block_check = if caps.check_blocks {
        let design = step1_design(instance, catalog, &levels, caps.step_budget, Some(profit))?;
        let own_levels = decision.levels().expect("one level per contract");
        let pricing = step2_pricing(
            instance,
            catalog,
            &decision.x,
            &decision.y,
            Some(&own_levels),
            caps.step_budget,
        )?;
        Some(BlockCheck {
            design_gain: design.profit - profit,
            pricing_gain: pricing.profit - profit,
            exact: design.exact && pricing.exact,
        })
    } else {
        None
    };
    Ok(Solution {
        method: Method::Its,
        decision,
        profit,
        certificate: Certificate::BestFound,
        nodes,
        elapsed: start.elapsed(),
        its_trace: Some(ItsTrace {
            iterations,
            termination,
            block_check,
        }),
    })
}
