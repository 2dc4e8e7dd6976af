use std::fmt;

use serde::{Deserialize, Serialize};

use super::{base_price, discount, gross_attraction, Catalog, Decision, Instance};

/// One violated constraint instance. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "kebab-case")]
pub enum Violation {
    Shape { detail: String },
    AdvertisingLink { contract: usize, group: usize },
    SubsystemCoverage { subsystem: usize, group: usize },
    OneDiscount { contract: usize },
    MonotoneDiscount { larger: usize, smaller: usize },
    NonnegativeWeight { contract: usize, group: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { detail } => write!(f, "shape: {detail}"),
            Violation::AdvertisingLink { contract, group } => {
                write!(
                    f,
                    "advertising-link: contract {contract} recommended to group {group} but not advertised"
                )
            }
            Violation::SubsystemCoverage { subsystem, group } => {
                write!(
                    f,
                    "subsystem-coverage: subsystem {subsystem} uncovered for group {group}"
                )
            }
            Violation::OneDiscount { contract } => {
                write!(f, "one-discount: contract {contract} must select exactly one level")
            }
            Violation::MonotoneDiscount { larger, smaller } => {
                write!(
                    f,
                    "monotone-discount: contract {larger} has a larger multiplier than smaller contract {smaller}"
                )
            }
            Violation::NonnegativeWeight { contract, group } => {
                write!(
                    f,
                    "nonnegative-weight: contract {contract} recommended to group {group} with negative weight"
                )
            }
        }
    }
}

/// Every violated constraint of a decision; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn shape_errors(instance: &Instance, catalog: &Catalog, decision: &Decision) -> Option<String> {
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    if instance.n != n || instance.w != catalog.w() {
        return Some(format!("catalog has {n} contracts, instance expects {}", instance.n));
    }
    if decision.x.len() != n || decision.x.iter().any(|row| row.len() != m) {
        return Some(format!("x must be {n} x {m}"));
    }
    if decision.y.len() != n {
        return Some(format!("y must have {n} entries"));
    }
    if decision.z.len() != n || decision.z.iter().any(|row| row.len() != l) {
        return Some(format!("z must be {n} x {l}"));
    }
    None
}

/// Check a decision against the advertising-link, coverage, one-discount,
/// monotone-discount and nonnegative-weight rules.
pub fn validate_decision(instance: &Instance, catalog: &Catalog, decision: &Decision) -> ValidationReport {
    let mut violations = Vec::new();
    if let Some(detail) = shape_errors(instance, catalog, decision) {
        violations.push(Violation::Shape { detail });
        return ValidationReport { violations };
    }
    let (n, m) = (catalog.n(), instance.m);

    for i in 0..n {
        for j in 0..m {
            if decision.x[i][j] && !decision.y[i] {
                violations.push(Violation::AdvertisingLink { contract: i, group: j });
            }
        }
    }

    for j in 0..m {
        let covered = (0..n)
            .filter(|&i| decision.x[i][j])
            .fold(0u32, |acc, i| acc | catalog.mask(i));
        for k in 0..catalog.w() {
            if covered >> k & 1 == 0 {
                violations.push(Violation::SubsystemCoverage { subsystem: k, group: j });
            }
        }
    }

    let levels: Vec<Option<usize>> = (0..n).map(|i| decision.level(i)).collect();
    for (i, level) in levels.iter().enumerate() {
        if level.is_none() {
            violations.push(Violation::OneDiscount { contract: i });
        }
    }
    for (larger, smaller) in discount::monotone_violations(catalog, &levels) {
        violations.push(Violation::MonotoneDiscount { larger, smaller });
    }

    for i in 0..n {
        let Some(h) = levels[i] else { continue };
        for j in 0..m {
            if decision.x[i][j] {
                let price = base_price(instance, catalog, i, j) * instance.d[h];
                let weight = gross_attraction(instance, catalog, i, j) - instance.beta[j] * price;
                if weight < 0.0 {
                    violations.push(Violation::NonnegativeWeight { contract: i, group: j });
                }
            }
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UtilityMode;

    fn instance3() -> Instance {
        Instance {
            m: 1,
            w: 3,
            n: 7,
            l: 2,
            lambda: vec![1.0],
            v: vec![vec![22.0], vec![23.0], vec![24.0]],
            u0: vec![300.0],
            beta: vec![0.05],
            p0: vec![vec![100.0], vec![200.0], vec![300.0]],
            f: vec![vec![0.1]; 3],
            c: vec![vec![600.0], vec![1200.0], vec![1800.0]],
            theta: 8.0,
            d: vec![0.95, 0.90],
            utility_mode: UtilityMode::Linear,
            seed: None,
        }
    }

    fn full_bundle_only(l: usize) -> Decision {
        let mut d = Decision::empty(7, 1, l);
        for i in 0..7 {
            d.set_level(i, 1);
        }
        d.x[6][0] = true;
        d.y[6] = true;
        d
    }

    #[test]
    fn feasible_decision_has_empty_report() {
        let inst = instance3();
        let cat = Catalog::new(3).unwrap();
        assert!(validate_decision(&inst, &cat, &full_bundle_only(2)).is_empty());
    }

    #[test]
    fn monotone_rule_direction() {
        let inst = instance3();
        let cat = Catalog::new(3).unwrap();
        let single = cat.index_of_mask(0b001).unwrap();
        let triple = cat.full_bundle();

        // size-3 at 0.90 and size-1 at 0.95: fine
        let mut d = full_bundle_only(2);
        d.set_level(single, 0);
        d.set_level(triple, 1);
        assert!(validate_decision(&inst, &cat, &d).is_empty());

        // size-3 at 0.95 and size-1 at 0.90: violation for that pair
        d.set_level(single, 1);
        d.set_level(triple, 0);
        let report = validate_decision(&inst, &cat, &d);
        assert!(report.violations.contains(&Violation::MonotoneDiscount {
            larger: triple,
            smaller: single
        }));
    }

    #[test]
    fn coverage_gap_is_named() {
        let inst = instance3();
        let cat = Catalog::new(3).unwrap();
        let mut d = full_bundle_only(2);
        d.x[6][0] = false;
        d.x[cat.index_of_mask(0b101).unwrap()][0] = true;
        d.y[cat.index_of_mask(0b101).unwrap()] = true;
        let report = validate_decision(&inst, &cat, &d);
        assert_eq!(
            report.violations,
            vec![Violation::SubsystemCoverage { subsystem: 1, group: 0 }]
        );
    }

    #[test]
    fn link_discount_and_weight_rules() {
        let mut inst = instance3();
        let cat = Catalog::new(3).unwrap();
        let mut d = full_bundle_only(2);
        d.y[6] = false;
        d.z[0] = vec![true, true];
        inst.beta = vec![1.0];
        let report = validate_decision(&inst, &cat, &d);
        assert!(report
            .violations
            .contains(&Violation::AdvertisingLink { contract: 6, group: 0 }));
        assert!(report.violations.contains(&Violation::OneDiscount { contract: 0 }));
        assert!(report
            .violations
            .contains(&Violation::NonnegativeWeight { contract: 6, group: 0 }));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let inst = instance3();
        let cat = Catalog::new(3).unwrap();
        let d = Decision::empty(3, 1, 2);
        let report = validate_decision(&inst, &cat, &d);
        assert!(matches!(report.violations[0], Violation::Shape { .. }));
    }
}
