use crate::model::{discount, Catalog, Decision, Instance, OfferTable};

/// Map an arbitrary bit pattern of the right shape onto a feasible decision.
///
/// Rules, applied in order: advertise every recommended contract; keep the
/// lowest selected level of each discount row (or the initialization level
/// when none is selected); push larger contracts down to the deepest level
/// held by any smaller contract; give each group under-covered by its
/// recommendations the advertised covering contract with the lowest claim
/// cost, else the full bundle, else the eligible contract covering the most
/// missing subsystems; fix negative recommended weights by deepening the
/// discount, or drop recommendations that stay negative at the deepest level.
/// Feasible input is returned unchanged. When some group cannot be covered by
/// contracts of nonnegative weight, no feasible decision exists and the
/// result still fails validation.
pub fn repair(decision: &Decision, instance: &Instance, catalog: &Catalog) -> Decision {
    let table = OfferTable::new(instance, catalog);
    repair_with(decision, instance, catalog, &table)
}

pub(crate) fn repair_with(decision: &Decision, instance: &Instance, catalog: &Catalog, table: &OfferTable) -> Decision {
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    let mut x = decision.x.clone();
    let mut y = decision.y.clone();
    for i in 0..n {
        if x[i].iter().any(|&b| b) {
            y[i] = true;
        }
    }

    let mut levels: Vec<usize> = (0..n)
        .map(|i| {
            decision.z[i]
                .iter()
                .position(|&b| b)
                .unwrap_or_else(|| discount::z0_level(catalog, i, l))
        })
        .collect();
    discount::sweep_up(catalog, &mut levels);

    let full = catalog.full_bundle();
    let cover = |x: &[Vec<bool>], j: usize| (0..n).filter(|&i| x[i][j]).fold(0u32, |acc, i| acc | catalog.mask(i));
    // weights only grow with depth, so the deepest level decides curability
    let curable = |i: usize, j: usize| table.eligible(i, j, l - 1);
    let mut stuck = vec![false; m];

    // levels only deepen, drops only hit incurable cells and additions are curable
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..m {
                if !x[i][j] || table.eligible(i, j, levels[i]) {
                    continue;
                }
                match (levels[i] + 1..l).find(|&h| table.eligible(i, j, h)) {
                    Some(h) => {
                        levels[i] = h;
                        discount::sweep_up(catalog, &mut levels);
                    }
                    None => x[i][j] = false,
                }
                changed = true;
            }
        }
        for j in 0..m {
            let missing = catalog.full_mask() & !cover(&x, j);
            if missing == 0 || stuck[j] {
                continue;
            }
            let by_claim = |a: &usize, b: &usize| table.claim(*a, j).total_cmp(&table.claim(*b, j)).then(a.cmp(b));
            let pick = (0..n)
                .filter(|&i| y[i] && !x[i][j] && catalog.mask(i) & missing == missing)
                .filter(|&i| table.eligible(i, j, levels[i]))
                .min_by(by_claim)
                .or_else(|| curable(full, j).then_some(full))
                .or_else(|| {
                    (0..n)
                        .filter(|&i| !x[i][j] && catalog.mask(i) & missing != 0 && curable(i, j))
                        .max_by(|a, b| {
                            (catalog.mask(*a) & missing)
                                .count_ones()
                                .cmp(&(catalog.mask(*b) & missing).count_ones())
                                .then_with(|| by_claim(b, a))
                        })
                });
            match pick {
                Some(i) => {
                    x[i][j] = true;
                    y[i] = true;
                    changed = true;
                }
                // no eligible contract holds some subsystem: the group cannot be covered
                None => stuck[j] = true,
            }
        }
        if !changed {
            break;
        }
    }

    Decision::from_levels(x, y, &levels, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{default_table3_scenario, generate_instance};
    use crate::model::validate_decision;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Instance, Catalog) {
        let inst = generate_instance(&default_table3_scenario(3, 6.0, 8.0, 11).unwrap()).unwrap();
        (inst, Catalog::new(3).unwrap())
    }

    #[test]
    fn all_zero_becomes_full_bundle_everywhere() {
        let (inst, cat) = setup();
        let out = repair(&Decision::empty(7, 5, 3), &inst, &cat);
        let full = cat.full_bundle();
        assert_eq!(out.y, (0..7).map(|i| i == full).collect::<Vec<_>>());
        assert!(out.x[full].iter().all(|&b| b));
        assert_eq!(out.levels().unwrap(), discount::initial_levels(&cat, 3));
        assert!(validate_decision(&inst, &cat, &out).is_empty());
    }

    #[test]
    fn random_patterns_become_feasible_and_stay_fixed() {
        let (inst, cat) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let d = Decision {
                x: (0..7).map(|_| (0..5).map(|_| rng.random_bool(0.3)).collect()).collect(),
                y: (0..7).map(|_| rng.random_bool(0.3)).collect(),
                z: (0..7).map(|_| (0..3).map(|_| rng.random_bool(0.4)).collect()).collect(),
            };
            let once = repair(&d, &inst, &cat);
            assert!(validate_decision(&inst, &cat, &once).is_empty());
            assert_eq!(repair(&once, &inst, &cat), once);
        }
    }
}
