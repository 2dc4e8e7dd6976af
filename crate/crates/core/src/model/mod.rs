//! Problem data, pricing rule, attraction choice model and the closed-form
//! expected-profit objective.
//!
//! Indexing is zero-based throughout. Contract `i` covers the subsystems in
//! the binary expansion of `i + 1`, so contract 0 is `{1}`, contract 2 is
//! `{1,2}` and contract `n - 1` is the full bundle.

mod catalog;
mod decision;
pub mod discount;
mod instance;
mod table;
mod validate;

pub use catalog::{Catalog, MAX_SUBSYSTEMS};
pub use decision::{Decision, DecisionKey, PriceTable};
pub use instance::{Instance, UtilityMode};
pub use table::OfferTable;
pub use validate::{validate_decision, ValidationReport, Violation};

use crate::error::{Error, Result};

/// Probability tolerance for the choice simplex.
pub const PROB_TOL: f64 = 1e-12;

/// Absolute/relative profit tolerance; the larger of the two applies.
pub const PROFIT_TOL: f64 = 1e-9;

/// Tolerance used when comparing two profit values.
pub fn profit_tolerance(a: f64, b: f64) -> f64 {
    PROFIT_TOL.max(PROFIT_TOL * a.abs().max(b.abs()))
}

/// `a` and `b` are equal within [`profit_tolerance`].
pub fn profits_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= profit_tolerance(a, b)
}

/// `a` exceeds `b` by more than [`profit_tolerance`].
pub fn strictly_better(a: f64, b: f64) -> bool {
    a - b > profit_tolerance(a, b)
}

/// Choice probabilities of one group over all contracts plus the outside option.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    pub contracts: Vec<f64>,
    pub outside: f64,
}

impl ChoiceProbabilities {
    pub fn total(&self) -> f64 {
        self.contracts.iter().sum::<f64>() + self.outside
    }
}

fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, limit })
    }
}

/// Selling price of contract `i` for group `j`: base-price sum times the
/// selected discount multiplier.
pub fn contract_price(instance: &Instance, catalog: &Catalog, i: usize, j: usize, decision: &Decision) -> Result<f64> {
    check_index("contract", i, catalog.n())?;
    check_index("group", j, instance.m)?;
    check_index("contract", i, decision.z.len())?;
    let row = &decision.z[i];
    if row.len() != instance.l {
        return Err(Error::MalformedDiscountRow { contract: i });
    }
    let mut selected = row.iter().enumerate().filter(|(_, &on)| on);
    let multiplier = match (selected.next(), selected.next()) {
        (Some((h, _)), None) => instance.d[h],
        _ => return Err(Error::MalformedDiscountRow { contract: i }),
    };
    Ok(base_price(instance, catalog, i, j) * multiplier)
}

/// Sum of initial subsystem prices over the contract's subsystems, ascending `k`.
pub fn base_price(instance: &Instance, catalog: &Catalog, i: usize, j: usize) -> f64 {
    catalog.subsystems(i).map(|k| instance.p0[k][j]).sum()
}

/// Expected claim cost of contract `i` for group `j`, ascending `k`.
pub fn claim_cost(instance: &Instance, catalog: &Catalog, i: usize, j: usize) -> f64 {
    catalog.subsystems(i).map(|k| instance.f[k][j] * instance.c[k][j]).sum()
}

/// Gross attraction of contract `i` for group `j` before the price term.
pub fn gross_attraction(instance: &Instance, catalog: &Catalog, i: usize, j: usize) -> f64 {
    let additive: f64 = catalog.subsystems(i).map(|k| instance.v[k][j]).sum();
    match instance.utility_mode {
        UtilityMode::Linear => additive,
        UtilityMode::Diminishing => (1.0 - (catalog.size(i) as f64).ln() / 6.0) * additive,
    }
}

/// Preference weight of contract `i` for group `j` at `price`. May be negative.
pub fn preference_weight(instance: &Instance, catalog: &Catalog, i: usize, j: usize, price: f64) -> Result<f64> {
    check_index("contract", i, catalog.n())?;
    check_index("group", j, instance.m)?;
    Ok(gross_attraction(instance, catalog, i, j) - instance.beta[j] * price)
}

/// Attraction-model choice probabilities of group `j` under `decision`.
pub fn choice_probabilities(
    instance: &Instance,
    catalog: &Catalog,
    decision: &Decision,
    j: usize,
) -> Result<ChoiceProbabilities> {
    check_index("group", j, instance.m)?;
    let n = catalog.n();
    let mut weights = vec![0.0; n];
    for (i, weight) in weights.iter_mut().enumerate() {
        if !decision.x[i][j] {
            continue;
        }
        let price = contract_price(instance, catalog, i, j, decision)?;
        let u = preference_weight(instance, catalog, i, j, price)?;
        if u < 0.0 {
            return Err(Error::NegativeWeightRecommended { contract: i, group: j });
        }
        *weight = u;
    }
    let denominator = instance.u0[j] + weights.iter().sum::<f64>();
    Ok(ChoiceProbabilities {
        contracts: weights.iter().map(|u| u / denominator).collect(),
        outside: instance.u0[j] / denominator,
    })
}

/// Expected total profit of a feasible decision.
pub fn expected_profit(instance: &Instance, catalog: &Catalog, decision: &Decision) -> Result<f64> {
    let report = validate_decision(instance, catalog, decision);
    if !report.is_empty() {
        return Err(Error::Infeasible(report));
    }
    let mut total = 0.0;
    for j in 0..instance.m {
        let q = choice_probabilities(instance, catalog, decision, j)?;
        let mut group = 0.0;
        for (i, &qi) in q.contracts.iter().enumerate() {
            if decision.x[i][j] {
                let price = contract_price(instance, catalog, i, j, decision)?;
                group += qi * (price - claim_cost(instance, catalog, i, j));
            }
        }
        total += instance.lambda[j] * group;
    }
    let advertised = decision.y.iter().filter(|&&on| on).count() as f64;
    Ok(total - instance.theta * advertised)
}
