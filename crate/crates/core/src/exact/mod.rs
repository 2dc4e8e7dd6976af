//! Certified search: monotone discount enumeration, the branch-and-bound
//! solver, the exhaustive oracle and the single-group assortment subproblem.

mod brute;
pub(crate) mod engine;

use std::time::Instant;

pub use brute::{brute_force, BRUTE_FORCE_CAP};

use crate::error::{Error, Result};
use crate::model::{expected_profit, preference_weight, profit_tolerance, Catalog, Decision, Instance, OfferTable};
use crate::ratio::{Opt, RatioProblem, Slot};
use crate::solution::{Budget, Certificate, Method, Solution};
use engine::{Mode, Search};

/// Every monotone level assignment, as one level per contract.
///
/// Contracts of larger size never sit at a lower level index than contracts
/// of smaller size; contracts of equal size are unconstrained among
/// themselves. Assignments are produced in lexicographic order of the
/// (size, index)-ordered level vector.
pub fn enumerate_monotone_discounts(catalog: &Catalog, l: usize) -> Vec<Vec<usize>> {
    fn rec(
        catalog: &Catalog,
        l: usize,
        p: usize,
        below: usize,
        current: usize,
        levels: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let order = catalog.by_size();
        if p == order.len() {
            out.push(levels.clone());
            return;
        }
        let i = order[p];
        let (below, current) = if p > 0 && catalog.size(order[p - 1]) != catalog.size(i) {
            (below.max(current), 0)
        } else {
            (below, current)
        };
        for h in below..l {
            levels[i] = h;
            rec(catalog, l, p + 1, below, current.max(h), levels, out);
        }
    }
    let mut out = Vec::new();
    if l == 0 {
        return out;
    }
    let mut levels = vec![0; catalog.n()];
    rec(catalog, l, 0, 0, 0, &mut levels, &mut out);
    out
}

/// Pick the best candidate after re-evaluating each with the direct
/// objective; equal profits fall back to the decision key.
pub(crate) fn select(instance: &Instance, catalog: &Catalog, candidates: Vec<Decision>) -> Option<(Decision, f64)> {
    let scored: Vec<(f64, Decision)> = candidates
        .into_iter()
        .filter_map(|d| expected_profit(instance, catalog, &d).ok().map(|p| (p, d)))
        .collect();
    let best = scored.iter().map(|(p, _)| *p).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let cut = best - profit_tolerance(best, best);
    scored
        .into_iter()
        .filter(|(p, _)| *p >= cut)
        .min_by(|a, b| a.1.key().cmp(&b.1.key()))
        .map(|(p, d)| (d, p))
}

pub(crate) fn full_domains(catalog: &Catalog, l: usize) -> Vec<Vec<usize>> {
    vec![(0..l).collect(); catalog.n()]
}

pub(crate) fn fixed_domains(levels: &[usize]) -> Vec<Vec<usize>> {
    levels.iter().map(|&h| vec![h]).collect()
}

/// Run the search engine and package the outcome.
pub(crate) fn run_search(
    instance: &Instance,
    catalog: &Catalog,
    shared: bool,
    domains: Vec<Vec<usize>>,
    budget: Budget,
    incumbent: Option<f64>,
    method: Method,
) -> Result<Solution> {
    let start = Instant::now();
    let table = OfferTable::new(instance, catalog);
    let search = Search {
        instance,
        catalog,
        table: &table,
        mode: if shared { Mode::Shared } else { Mode::Personalized },
        domains,
        budget,
        incumbent,
    };
    let outcome = search.run();
    let candidates = outcome.candidates.into_iter().map(|(_, d)| d).collect();
    let (decision, profit) = select(instance, catalog, candidates).ok_or_else(|| {
        Error::NoFeasibleSolution(if outcome.complete {
            "no decision satisfies coverage with nonnegative recommended weights".into()
        } else {
            "budget expired before any feasible decision was found".into()
        })
    })?;
    Ok(Solution {
        method,
        decision,
        profit,
        certificate: if outcome.complete {
            Certificate::ProvenOptimal
        } else {
            Certificate::BestFound
        },
        nodes: outcome.nodes,
        elapsed: start.elapsed(),
        its_trace: None,
    })
}

/// Certified optimum over all feasible decisions, or the best decision
/// found when the budget runs out.
pub fn solve_exact(instance: &Instance, catalog: &Catalog, budget: Budget) -> Result<Solution> {
    instance.validate()?;
    if budget.time.is_zero() || budget.nodes == Some(0) {
        return Err(Error::ZeroBudget);
    }
    let domains = full_domains(catalog, instance.l);
    run_search(instance, catalog, false, domains, budget, None, Method::Exact)
}

/// Subset sizes up to this use exhaustive enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Best recommendation set for group `j` among `allowed` contracts at the
/// given prices (indexed by contract). Contracts with negative weight are
/// never recommended. Returns the chosen contracts in ascending order and
/// the expected revenue per customer.
pub fn best_assortment_given_prices(
    instance: &Instance,
    catalog: &Catalog,
    j: usize,
    allowed: &[usize],
    prices: &[f64],
) -> Result<(Vec<usize>, f64)> {
    if allowed.is_empty() {
        return Err(Error::NoFeasibleSolution("empty allowed set".into()));
    }
    let mut items = Vec::new();
    for &i in allowed {
        let price = *prices.get(i).ok_or(Error::IndexOutOfRange {
            what: "price",
            index: i,
            limit: prices.len(),
        })?;
        let u = preference_weight(instance, catalog, i, j, price)?;
        if u >= 0.0 {
            let margin = price - crate::model::claim_cost(instance, catalog, i, j);
            items.push((i, catalog.mask(i), u, margin));
        }
    }
    items.sort_by_key(|e| e.0);
    items.dedup_by_key(|e| e.0);
    let full = catalog.full_mask();
    let u0 = instance.u0[j];
    let no_cover =
        || Error::NoFeasibleSolution(format!("allowed contracts cannot cover every subsystem for group {j}"));

    if items.len() <= EXHAUSTIVE_LIMIT {
        let k = items.len();
        let mut values = vec![f64::NEG_INFINITY; 1 << k];
        for s in 1usize..1 << k {
            let (mut cover, mut num, mut den) = (0u32, 0.0, u0);
            for (b, item) in items.iter().enumerate() {
                if s >> b & 1 == 1 {
                    cover |= item.1;
                    num += item.2 * item.3;
                    den += item.2;
                }
            }
            if cover == full {
                values[s] = num / den;
            }
        }
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(no_cover());
        }
        let cut = best - profit_tolerance(best, best);
        // lexicographically smallest recommendation vector: lowest contract
        // index excluded first
        let pick = (1usize..1 << k)
            .filter(|&s| values[s] >= cut)
            .min_by_key(|&s| (0..k).map(|b| s >> b & 1).collect::<Vec<_>>())
            .unwrap();
        let chosen = (0..k).filter(|b| pick >> b & 1 == 1).map(|b| items[b].0).collect();
        return Ok((chosen, values[pick]));
    }

    let mut problem = RatioProblem {
        u0,
        target: full,
        slots: items
            .iter()
            .map(|&(i, mask, weight, margin)| Slot {
                mask,
                forced: false,
                options: vec![Opt { weight, margin, tag: i }],
            })
            .collect(),
    };
    let optimum = problem.maximize().ok_or_else(no_cover)?.value;
    let cut = optimum - profit_tolerance(optimum, optimum);
    let mut chosen = Vec::new();
    for s in 0..items.len() {
        let saved = std::mem::take(&mut problem.slots[s].options);
        if problem.maximize().is_some_and(|sol| sol.value >= cut) {
            continue;
        }
        problem.slots[s].options = saved;
        problem.slots[s].forced = true;
        chosen.push(items[s].0);
    }
    let value = problem.maximize().ok_or_else(no_cover)?.value;
    Ok((chosen, value))
}
