#![allow(dead_code)]

use jdpew_core::generate::{AttractionDist, CustomerCase, FailureSetting};
use jdpew_core::model::discount::is_monotone;
use jdpew_core::{
    choice_probabilities, default_table3_scenario, expected_profit, generate_instance, preference_weight, repair,
    validate_decision, Catalog, Decision, Instance, PriceTable, ScenarioSpec, UtilityMode, Violation,
};
use rand::Rng;

pub fn table_instance(w: usize, gamma: f64, theta: f64, seed: u64) -> (Instance, Catalog) {
    let inst = generate_instance(&default_table3_scenario(w, gamma, theta, seed).unwrap()).unwrap();
    (inst, Catalog::new(w).unwrap())
}

pub fn scenario_instance(spec: &ScenarioSpec) -> (Instance, Catalog) {
    (generate_instance(spec).unwrap(), Catalog::new(spec.w).unwrap())
}

/// Any scenario with `w <= 4` from the supported settings.
pub fn varied_scenario(rng: &mut impl Rng, seed: u64) -> ScenarioSpec {
    let w = rng.random_range(1..=4);
    let mut spec = default_table3_scenario(w, rng.random_range(2.0..12.0), rng.random_range(0.0..10.0), seed).unwrap();
    spec.customer_case =
        [CustomerCase::Uniform, CustomerCase::Decreasing, CustomerCase::Symmetric][rng.random_range(0..3)];
    spec.attraction_dist = [
        AttractionDist::Uniform,
        AttractionDist::Normal,
        AttractionDist::PowerLaw,
    ][rng.random_range(0..3)];
    spec.failure_setting = [
        FailureSetting::Baseline,
        FailureSetting::HuL,
        FailureSetting::HuH,
        FailureSetting::HeU,
        FailureSetting::UnM,
        FailureSetting::Correlated,
    ][rng.random_range(0..6)];
    spec.utility_mode = if rng.random_bool(0.5) {
        UtilityMode::Linear
    } else {
        UtilityMode::Diminishing
    };
    spec
}

/// Some decision is feasible iff every subsystem of every group lies in a
/// contract with nonnegative weight at the deepest discount.
pub fn has_feasible_decision(inst: &Instance, cat: &Catalog) -> bool {
    let deepest = inst.d[inst.l - 1];
    (0..inst.m).all(|j| {
        (0..inst.w).all(|k| {
            (0..cat.n()).any(|i| {
                let mut base = 0.0;
                for b in 0..inst.w {
                    if (i + 1) >> b & 1 == 1 {
                        base += inst.p0[b][j];
                    }
                }
                (i + 1) >> k & 1 == 1 && preference_weight(inst, cat, i, j, base * deepest).unwrap() >= 0.0
            })
        })
    })
}

/// Arbitrary bit pattern with exactly one level per contract.
pub fn random_decision(rng: &mut impl Rng, inst: &Instance, cat: &Catalog) -> Decision {
    let (n, m, l) = (cat.n(), inst.m, inst.l);
    let density = rng.random_range(0.05..0.9);
    let mut d = Decision::empty(n, m, l);
    for i in 0..n {
        d.y[i] = rng.random_bool(density);
        for j in 0..m {
            d.x[i][j] = rng.random_bool(density);
        }
        d.set_level(i, rng.random_range(0..l));
    }
    d
}

/// Arbitrary bit pattern including rows with zero or several levels.
pub fn random_pattern(rng: &mut impl Rng, inst: &Instance, cat: &Catalog) -> Decision {
    let mut d = random_decision(rng, inst, cat);
    for row in &mut d.z {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(0.4);
        }
    }
    d
}

pub fn feasible_decision(rng: &mut impl Rng, inst: &Instance, cat: &Catalog) -> Decision {
    let d = repair(&random_decision(rng, inst, cat), inst, cat);
    let report = validate_decision(inst, cat, &d);
    assert!(report.is_empty(), "repair left violations: {report}");
    d
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn popcount(i: usize) -> u32 {
    (i + 1).count_ones()
}

pub fn check_simplex(inst: &Instance, cat: &Catalog, d: &Decision) -> Result<(), String> {
    for j in 0..inst.m {
        let q = choice_probabilities(inst, cat, d, j).map_err(|e| e.to_string())?;
        if q.outside < 0.0 || q.contracts.iter().any(|&p| p < 0.0) {
            return Err(format!("negative probability for group {j}"));
        }
        let total = q.contracts.iter().sum::<f64>() + q.outside;
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("group {j} probabilities sum to {total}"));
        }
        for i in 0..cat.n() {
            if !d.x[i][j] && q.contracts[i] != 0.0 {
                return Err(format!("unrecommended contract {i} has probability {}", q.contracts[i]));
            }
        }
    }
    Ok(())
}

pub fn check_theta_linearity(inst: &Instance, cat: &Catalog, d: &Decision, theta2: f64) -> Result<(), String> {
    let p1 = expected_profit(inst, cat, d).map_err(|e| e.to_string())?;
    let mut other = inst.clone();
    other.theta = theta2;
    let p2 = expected_profit(&other, cat, d).map_err(|e| e.to_string())?;
    let advertised = d.y.iter().filter(|&&b| b).count() as f64;
    let expected = -(theta2 - inst.theta) * advertised;
    if (p2 - p1 - expected).abs() > 1e-9 * p1.abs().max(p2.abs()).max(1.0) {
        return Err(format!("profit moved by {} instead of {expected}", p2 - p1));
    }
    Ok(())
}

pub fn check_scale_invariance(inst: &Instance, cat: &Catalog, d: &Decision, scale: f64) -> Result<(), String> {
    let mut scaled = inst.clone();
    for j in 0..inst.m {
        for k in 0..inst.w {
            scaled.v[k][j] *= scale;
        }
        scaled.u0[j] *= scale;
        scaled.beta[j] *= scale;
    }
    for j in 0..inst.m {
        let a = choice_probabilities(inst, cat, d, j).map_err(|e| e.to_string())?;
        let b = choice_probabilities(&scaled, cat, d, j).map_err(|e| e.to_string())?;
        let worst = a
            .contracts
            .iter()
            .zip(&b.contracts)
            .map(|(x, y)| (x - y).abs())
            .fold((a.outside - b.outside).abs(), f64::max);
        if worst > 1e-12 {
            return Err(format!("group {j} probabilities moved by {worst} under scale {scale}"));
        }
    }
    Ok(())
}

pub fn check_price_determinism(inst: &Instance, cat: &Catalog, d: &Decision) -> Result<(), String> {
    let a = PriceTable::compute(inst, cat, d).map_err(|e| e.to_string())?;
    let b = PriceTable::compute(inst, cat, d).map_err(|e| e.to_string())?;
    for i in 0..cat.n() {
        let h = d.z[i].iter().position(|&on| on).ok_or("missing level")?;
        for j in 0..inst.m {
            let mut base = 0.0;
            for k in 0..inst.w {
                if (i + 1) >> k & 1 == 1 {
                    base += inst.p0[k][j];
                }
            }
            let direct = base * inst.d[h];
            if a.p[i][j].to_bits() != b.p[i][j].to_bits() || a.p[i][j].to_bits() != direct.to_bits() {
                return Err(format!(
                    "price of contract {i} for group {j}: {} vs {} vs {direct}",
                    a.p[i][j], b.p[i][j]
                ));
            }
        }
    }
    Ok(())
}

/// Validator monotone findings against a direct scan of all ordered pairs.
pub fn check_monotone_validator(inst: &Instance, cat: &Catalog, d: &Decision) -> Result<(), String> {
    let n = cat.n();
    let level = |i: usize| d.z[i].iter().position(|&on| on).unwrap();
    let mut expected = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if popcount(a) > popcount(b) && inst.d[level(a)] > inst.d[level(b)] {
                expected.push((a, b));
            }
        }
    }
    let mut found: Vec<(usize, usize)> = validate_decision(inst, cat, d)
        .violations
        .iter()
        .filter_map(|v| match v {
            Violation::MonotoneDiscount { larger, smaller } => Some((*larger, *smaller)),
            _ => None,
        })
        .collect();
    found.sort_unstable();
    if found != expected {
        return Err(format!("validator reported {found:?}, pairwise scan {expected:?}"));
    }
    let levels: Vec<usize> = (0..n).map(level).collect();
    if is_monotone(cat, &levels) != expected.is_empty() {
        return Err(format!("is_monotone disagrees with pairwise scan on {levels:?}"));
    }
    Ok(())
}

/// Linear-mode weight of a bundle equals the sum of its singleton weights at
/// their own base prices under the same multiplier.
pub fn check_additivity(inst: &Instance, cat: &Catalog, multiplier: f64) -> Result<(), String> {
    if inst.utility_mode != UtilityMode::Linear {
        return Ok(());
    }
    for i in 0..cat.n() {
        for j in 0..inst.m {
            let mut parts = 0.0;
            let mut base = 0.0;
            for k in 0..inst.w {
                if (i + 1) >> k & 1 == 1 {
                    let single = (1usize << k) - 1;
                    parts += preference_weight(inst, cat, single, j, inst.p0[k][j] * multiplier).unwrap();
                    base += inst.p0[k][j];
                }
            }
            let whole = preference_weight(inst, cat, i, j, base * multiplier).unwrap();
            if !rel_close(whole, parts, 1e-12) {
                return Err(format!("contract {i} group {j}: {whole} vs {parts}"));
            }
        }
    }
    Ok(())
}
