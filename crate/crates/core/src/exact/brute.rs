use std::time::Instant;

use super::{enumerate_monotone_discounts, select};
use crate::error::{Error, Result};
use crate::model::{base_price, claim_cost, discount, gross_attraction, profit_tolerance, Catalog, Decision, Instance};
use crate::solution::{Certificate, Method, Solution};

/// Largest number of subset evaluations the exhaustive scan accepts.
pub const BRUTE_FORCE_CAP: u128 = 2_000_000_000;

/// Exhaustive scan over every monotone discount assignment, advertised set
/// and per-group recommendation subset. Always proven optimal.
pub fn brute_force(instance: &Instance, catalog: &Catalog) -> Result<Solution> {
    instance.validate()?;
    let start = Instant::now();
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    if n > 20 {
        return Err(Error::TooLarge(format!("{n} contracts exceed the exhaustive scan")));
    }
    let assignments = enumerate_monotone_discounts(catalog, l);
    let work = assignments.len() as u128 * 3u128.pow(n as u32) * m as u128;
    if work > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge(format!(
            "exhaustive scan needs {work} subset evaluations (cap {BRUTE_FORCE_CAP})"
        )));
    }

    let full = catalog.full_mask();
    let mut best = f64::NEG_INFINITY;
    let mut candidates: Vec<(f64, Decision)> = Vec::new();
    let mut evaluated = 0u64;
    for levels in &assignments {
        // per contract and group: (weight, margin)
        let offers: Vec<Vec<(f64, f64)>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let price = base_price(instance, catalog, i, j) * instance.d[levels[i]];
                        let weight = gross_attraction(instance, catalog, i, j) - instance.beta[j] * price;
                        (weight, price - claim_cost(instance, catalog, i, j))
                    })
                    .collect()
            })
            .collect();
        for ymask in 1u32..1 << n {
            let y: Vec<bool> = (0..n).map(|i| ymask >> i & 1 == 1).collect();
            if discount::canonical_levels(catalog, l, &y, levels) != *levels {
                continue;
            }
            let mut total = 0.0;
            let mut sets = Vec::with_capacity(m);
            let mut feasible = true;
            for j in 0..m {
                let mut values: Vec<(u32, f64)> = Vec::new();
                // every subset of the advertised set
                let mut s = ymask;
                loop {
                    if s != 0 {
                        evaluated += 1;
                        let (mut cover, mut num, mut den, mut ok) = (0u32, 0.0, instance.u0[j], true);
                        for i in 0..n {
                            if s >> i & 1 == 1 {
                                let (u, margin) = offers[i][j];
                                if u < 0.0 {
                                    ok = false;
                                    break;
                                }
                                cover |= catalog.mask(i);
                                num += u * margin;
                                den += u;
                            }
                        }
                        if ok && cover == full {
                            values.push((s, num / den));
                        }
                    }
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & ymask;
                }
                let top = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
                if !top.is_finite() {
                    feasible = false;
                    break;
                }
                let cut = top - profit_tolerance(top, top);
                let pick = values
                    .iter()
                    .filter(|v| v.1 >= cut)
                    .min_by(|a, b| lex_cmp(a.0, b.0, n))
                    .unwrap();
                total += instance.lambda[j] * pick.1;
                sets.push(pick.0);
            }
            if !feasible {
                continue;
            }
            let profit = total - instance.theta * ymask.count_ones() as f64;
            if profit > best {
                best = profit;
                let cut = best - profit_tolerance(best, best);
                candidates.retain(|(p, _)| *p >= cut);
            }
            if profit >= best - profit_tolerance(best, best) {
                let x = (0..n).map(|i| sets.iter().map(|s| s >> i & 1 == 1).collect()).collect();
                candidates.push((profit, Decision::from_levels(x, y, levels, l)));
            }
        }
    }
    let (decision, profit) = select(instance, catalog, candidates.into_iter().map(|c| c.1).collect())
        .ok_or_else(|| Error::NoFeasibleSolution("no decision satisfies coverage with nonnegative weights".into()))?;
    Ok(Solution {
        method: Method::BruteForce,
        decision,
        profit,
        certificate: Certificate::ProvenOptimal,
        nodes: evaluated,
        elapsed: start.elapsed(),
        its_trace: None,
    })
}

/// Order of recommendation vectors over contract indices, `false < true`.
fn lex_cmp(a: u32, b: u32, n: usize) -> std::cmp::Ordering {
    for i in 0..n {
        let (x, y) = (a >> i & 1, b >> i & 1);
        if x != y {
            return x.cmp(&y);
        }
    }
    std::cmp::Ordering::Equal
}
