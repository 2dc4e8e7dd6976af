//! Acceptance suite: one check per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p jdpew-core --test acceptance -- --nocapture`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use jdpew_core::generate::{CustomerCase, FailureSetting};
use jdpew_core::its::Termination;
use jdpew_core::reform::{evaluate_decision, ProgramKind};
use jdpew_core::{
    audit_counts, brute_force, build_misocp, build_step_program, compute_aux, default_table3_scenario, expected_profit,
    ga_default_config, ga_solve, its_solve, metric_gap, metric_increment, repair, solve_benchmark, solve_exact,
    validate_decision, Benchmark, Budget, Catalog, Certificate, Decision, Instance, ItsCaps, Solution,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const REPS: u64 = 30;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs as f64, || {
        format!("took {:.1} s, limit {limit_secs} s", elapsed.as_secs_f64())
    })
}

fn exact(inst: &Instance, cat: &Catalog) -> Solution {
    let sol = solve_exact(inst, cat, Budget::default()).unwrap();
    assert_eq!(sol.certificate, Certificate::ProvenOptimal);
    sol
}

fn its(inst: &Instance, cat: &Catalog) -> Solution {
    its_solve(inst, cat, ItsCaps::default()).unwrap()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// The w=3 default-table instances shared by the oracle and heuristic checks.
fn oracle_instances() -> Vec<(Instance, Catalog)> {
    (1..=REPS).map(|seed| table_instance(3, 6.0, 8.0, seed)).collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let instances = oracle_instances();
    let mismatches: Vec<String> = instances
        .par_iter()
        .filter_map(|(inst, cat)| {
            let e = exact(inst, cat);
            let b = brute_force(inst, cat).unwrap();
            let same = rel_close(e.profit, b.profit, 1e-9) && e.decision == b.decision;
            (!same).then(|| format!("seed {:?}: {} vs {}", inst.seed, e.profit, b.profit))
        })
        .collect();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "{} instances agree in {:.1} s",
        instances.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn reformulation_equivalence() -> Outcome {
    let start = Instant::now();
    let cases = [(2, 1), (2, 2), (3, 3), (3, 4), (3, 5)];
    let results: Vec<Result<usize, String>> = cases
        .par_iter()
        .map(|&(w, seed)| {
            let (inst, cat) = table_instance(w, 6.0, 8.0, seed);
            let aux = compute_aux(&inst, &cat).unwrap();
            let program = build_misocp(&inst, &cat, &aux).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut checked = 0;
            for _ in 0..1000 {
                let d = feasible_decision(&mut rng, &inst, &cat);
                let direct = expected_profit(&inst, &cat, &d).unwrap();
                let eval = evaluate_decision(&program, &d).map_err(|e| e.to_string())?;
                ensure(rel_close(eval.profit, direct, 1e-9), || {
                    format!("w={w} seed {seed}: reformulated {} vs direct {direct}", eval.profit)
                })?;
                for (idx, var) in program.variables.iter().enumerate() {
                    if let Some(jdpew_core::reform::Definition::Product { left, right }) = var.defined_by {
                        let (a, b) = (eval.values[left], eval.values[right]);
                        if program.variables[left].kind == jdpew_core::reform::VarKind::Binary
                            && program.variables[right].kind == jdpew_core::reform::VarKind::Binary
                        {
                            ensure(eval.values[idx] == a * b, || {
                                format!("{} = {} at {a}, {b}", var.name, eval.values[idx])
                            })?;
                        }
                        checked += 1;
                    }
                }
            }
            Ok(checked)
        })
        .collect();
    let products: usize = results.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    within(start.elapsed(), 30)?;
    Ok(format!(
        "5000 points, {products} product values checked in {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

fn its_quality() -> Outcome {
    let start = Instant::now();
    let gaps: Vec<f64> = oracle_instances()
        .par_iter()
        .map(|(inst, cat)| metric_gap(exact(inst, cat).profit, its(inst, cat).profit).unwrap())
        .collect();
    // gaps are in percent
    let worst = gaps.iter().cloned().fold(f64::MIN, f64::max);
    let avg = mean(&gaps);
    ensure(worst <= 0.5, || {
        format!("worst gap {worst:.4}%, mean {avg:.4}%, all {gaps:.3?}")
    })?;
    ensure(avg <= 0.1, || format!("mean gap {avg:.4}%"))?;
    within(start.elapsed(), 300)?;
    Ok(format!("mean gap {avg:.4}%, worst {worst:.4}%"))
}

fn bcd_properties() -> Outcome {
    let mut instances = oracle_instances();
    instances.extend((1..=REPS).map(|seed| table_instance(2, 6.0, 8.0, seed)));
    let results: Vec<Result<usize, String>> = instances
        .par_iter()
        .map(|(inst, cat)| {
            let sol = its(inst, cat);
            let trace = sol.its_trace.as_ref().ok_or("missing trace")?;
            let seq = trace.profit_sequence();
            for pair in seq.windows(2) {
                ensure(pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0), || {
                    format!("seed {:?}: profit fell from {} to {}", inst.seed, pair[0], pair[1])
                })?;
            }
            ensure(trace.termination == Termination::Converged, || {
                format!("seed {:?}: terminated by {:?}", inst.seed, trace.termination)
            })?;
            ensure(trace.iterations.len() <= 50, || {
                format!("seed {:?}: {} iterations", inst.seed, trace.iterations.len())
            })?;
            let last = trace.iterations.last().ok_or("no iterations")?;
            ensure(last.design_profit == last.pricing_profit, || {
                format!("seed {:?}: last iteration still moved", inst.seed)
            })?;
            let check = trace.block_check.ok_or("missing block check")?;
            ensure(check.design_gain <= 1e-9 && check.pricing_gain <= 1e-9, || {
                format!(
                    "seed {:?}: block check gains {} / {}",
                    inst.seed, check.design_gain, check.pricing_gain
                )
            })?;
            Ok(trace.iterations.len())
        })
        .collect();
    let counts = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(format!(
        "{} runs, at most {} iterations",
        counts.len(),
        counts.iter().max().unwrap()
    ))
}

fn dominance_chain() -> Outcome {
    let instances: Vec<(Instance, Catalog)> = (1..=20)
        .flat_map(|seed| {
            [
                table_instance(2, 6.0, 8.0, 100 + seed),
                table_instance(3, 6.0, 8.0, 100 + seed),
            ]
        })
        .collect();
    let failures: Vec<String> = instances
        .par_iter()
        .filter_map(|(inst, cat)| {
            let e = exact(inst, cat).profit;
            let its = its(inst, cat).profit;
            let ga = ga_solve(inst, cat, &ga_default_config(), 1).unwrap().profit;
            let bm = |b| solve_benchmark(inst, cat, b, Budget::default()).unwrap().profit;
            let (bm1, bm2, bm3) = (bm(Benchmark::Bm1), bm(Benchmark::Bm2), bm(Benchmark::Bm3));
            let ge = |a: f64, b: f64| a >= b - 1e-9 * a.abs().max(b.abs()).max(1.0);
            let chain =
                ge(e, its) && ge(e, ga) && ge(e, bm3) && ge(bm3, bm1) && ge(e, bm2) && ge(bm2, bm1) && ge(its, bm2);
            let increments = [bm1, bm2, bm3].iter().all(|&b| metric_increment(e, b) >= 0.0);
            (!(chain && increments)).then(|| {
                format!(
                    "w={} seed {:?}: exact {e} its {its} ga {ga} bm1 {bm1} bm2 {bm2} bm3 {bm3}",
                    inst.w, inst.seed
                )
            })
        })
        .collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} instances", instances.len()))
}

/// Mean optimal and benchmark-1 profit over the matched replications of one scenario.
fn matched_means(make: impl Fn(u64) -> jdpew_core::ScenarioSpec + Sync) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = (0..REPS)
        .into_par_iter()
        .map(|rep| {
            let (inst, cat) = scenario_instance(&make(1000 + rep));
            let bm1 = solve_benchmark(&inst, &cat, Benchmark::Bm1, Budget::default())
                .unwrap()
                .profit;
            (exact(&inst, &cat).profit, bm1)
        })
        .collect();
    let (joint, bm1): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    (mean(&joint), mean(&bm1))
}

fn trend_reproduction() -> Outcome {
    let start = Instant::now();
    let base = |gamma: f64, theta: f64, seed: u64| default_table3_scenario(3, gamma, theta, seed).unwrap();
    let mut notes = Vec::new();

    let by_gamma: Vec<(f64, f64)> = [6.0, 8.0, 10.0]
        .iter()
        .map(|&g| matched_means(|s| base(g, 8.0, s)))
        .collect();
    let profits: Vec<f64> = by_gamma.iter().map(|p| p.0).collect();
    let increments: Vec<f64> = by_gamma.iter().map(|&(e, b)| metric_increment(e, b)).collect();
    ensure(profits.windows(2).all(|w| w[1] < w[0]), || {
        format!("profit over gamma {profits:?}")
    })?;
    ensure(increments.windows(2).all(|w| w[1] < w[0]), || {
        format!("increment over gamma {increments:?}")
    })?;
    notes.push(format!("gamma profit {profits:.2?} increment {increments:.4?}"));

    let case = |c: CustomerCase| {
        matched_means(move |s| {
            let mut spec = base(6.0, 8.0, s);
            spec.customer_case = c;
            spec
        })
        .0
    };
    let cases = [
        case(CustomerCase::Uniform),
        case(CustomerCase::Decreasing),
        case(CustomerCase::Symmetric),
    ];
    ensure(cases[0] > cases[1] && cases[0] > cases[2], || {
        format!("case profits {cases:?}")
    })?;
    notes.push(format!("cases {cases:.2?}"));

    let failure = |f: FailureSetting| {
        matched_means(move |s| {
            let mut spec = base(6.0, 8.0, s);
            spec.failure_setting = f;
            spec
        })
        .0
    };
    let (hu_l, hu_h) = (failure(FailureSetting::HuL), failure(FailureSetting::HuH));
    ensure(hu_l > hu_h, || format!("HU-L {hu_l} vs HU-H {hu_h}"))?;
    notes.push(format!("HU-L {hu_l:.2} HU-H {hu_h:.2}"));

    let by_theta: Vec<f64> = [0.0, 2.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|&t| matched_means(|s| base(6.0, t, s)).0)
        .collect();
    ensure(by_theta.windows(2).all(|w| w[1] <= w[0]), || {
        format!("profit over theta {by_theta:?}")
    })?;
    notes.push(format!("theta {by_theta:.2?}"));

    within(start.elapsed(), 1800)?;
    Ok(notes.join("; "))
}

fn count_audit() -> Outcome {
    let mut notes = Vec::new();
    for w in [3usize, 4, 5] {
        let mut spec = default_table3_scenario(w, 6.0, 8.0, 1).unwrap();
        spec.l = 3;
        let (inst, cat) = scenario_instance(&spec);
        let (m, n, l) = (5usize, (1usize << w) - 1, 3usize);
        let pairs = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| (a + 1).count_ones() > (b + 1).count_ones())
            .count();
        let report = audit_counts(&inst, &cat).map_err(|e| e.to_string())?;
        ensure(report.len() == 3, || format!("{} programs audited", report.len()))?;
        for a in &report {
            let p = a.published;
            let b = a.as_built;
            ensure(
                b.binary == p.binary && b.continuous == p.continuous && b.cone == p.cone,
                || format!("w={w} {:?}: built {b:?} published {p:?}", a.kind),
            )?;
            ensure(a.monotone_pairs == pairs, || {
                format!("w={w}: {} monotone pairs, expected {pairs}", a.monotone_pairs)
            })?;
            let (built_linear, paper_linear) = match a.kind {
                ProgramKind::Full => (
                    pairs + n + m + w * m + 7 * m * n * l + 6 * m * n,
                    n * n + 7 * m * n * l + 6 * m * n + 2 * m + w * m,
                ),
                ProgramKind::Design => (5 * m * n + w * m + m, 5 * m * n + w * m + m),
                ProgramKind::Pricing => (
                    pairs + n + m * n + m + 4 * m * n * l,
                    n * n + 4 * m * n * l + m * n + n + m,
                ),
                other => return Err(format!("unexpected program {other:?}")),
            };
            ensure(b.linear == built_linear && p.linear == paper_linear, || {
                format!("w={w} {:?}: linear built {} published {}", a.kind, b.linear, p.linear)
            })?;
            notes.push(format!("w={w} {:?} linear {}/{}", a.kind, b.linear, p.linear));
        }
        ensure(report[0].as_built.binary == m * n + n * l + n, || "binary count".into())?;
    }
    Ok(notes.join(", "))
}

fn ga_behavior() -> Outcome {
    let cfg = ga_default_config();
    ensure(
        (
            cfg.generations,
            cfg.population,
            cfg.crossover,
            cfg.mutation,
            cfg.elite_fraction,
        ) == (80, 60, 0.5, 0.12, 0.05),
        || format!("default config {cfg:?}"),
    )?;

    let instances = oracle_instances();
    for (inst, cat) in instances.iter().take(5) {
        let a = ga_solve(inst, cat, &cfg, 42).unwrap();
        let b = ga_solve(inst, cat, &cfg, 42).unwrap();
        ensure(
            a.decision == b.decision && a.profit.to_bits() == b.profit.to_bits(),
            || format!("seed {:?}: two runs differ", inst.seed),
        )?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..10_000 {
        let (inst, cat) = &instances[t % instances.len()];
        let d = repair(&random_pattern(&mut rng, inst, cat), inst, cat);
        let report = validate_decision(inst, cat, &d);
        ensure(report.is_empty(), || format!("pattern {t}: {report}"))?;
    }

    let pairs: Vec<(f64, f64)> = instances
        .par_iter()
        .enumerate()
        .map(|(k, (inst, cat))| {
            let ga = ga_solve(inst, cat, &cfg, k as u64).unwrap();
            let report = validate_decision(inst, cat, &ga.decision);
            assert!(report.is_empty(), "GA returned an infeasible decision: {report}");
            (ga.profit, its(inst, cat).profit)
        })
        .collect();
    let (ga, its): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let ratio = mean(&ga) / mean(&its);
    ensure(ratio >= 0.9, || format!("GA reaches {:.2}% of ITS", 100.0 * ratio))?;
    Ok(format!(
        "deterministic, 10000 repaired patterns feasible, GA at {:.2}% of ITS",
        100.0 * ratio
    ))
}

fn model_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut decisions = 0;
    let mut seed = 0u64;
    while decisions < 1000 {
        seed += 1;
        let spec = varied_scenario(&mut rng, seed);
        let (inst, cat) = scenario_instance(&spec);
        if !has_feasible_decision(&inst, &cat) {
            continue;
        }
        check_additivity(&inst, &cat, inst.d[inst.l - 1])?;
        for _ in 0..10 {
            let raw: Decision = random_decision(&mut rng, &inst, &cat);
            check_price_determinism(&inst, &cat, &raw)?;
            check_monotone_validator(&inst, &cat, &raw)?;
            let d = feasible_decision(&mut rng, &inst, &cat);
            check_simplex(&inst, &cat, &d)?;
            check_theta_linearity(&inst, &cat, &d, inst.theta + 3.0)?;
            check_scale_invariance(&inst, &cat, &d, 7.5)?;
            decisions += 1;
        }
    }
    Ok(format!("{decisions} decisions"))
}

/// Fixed-block programs evaluate to the same profit as the full program.
fn step_programs_agree(inst: &Instance, cat: &Catalog, d: &Decision) -> Result<(), String> {
    let aux = compute_aux(inst, cat).map_err(|e| e.to_string())?;
    let levels = d.levels().ok_or("missing level")?;
    let design = build_step_program(inst, cat, &aux, jdpew_core::reform::FixedBlock::Discounts(&levels));
    let pricing = build_step_program(
        inst,
        cat,
        &aux,
        jdpew_core::reform::FixedBlock::Recommendations { x: &d.x, y: &d.y },
    );
    let direct = expected_profit(inst, cat, d).map_err(|e| e.to_string())?;
    for program in [design, pricing] {
        let eval = evaluate_decision(&program.map_err(|e| e.to_string())?, d).map_err(|e| e.to_string())?;
        ensure(rel_close(eval.profit, direct, 1e-9), || {
            format!("{} vs {direct}", eval.profit)
        })?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 reformulation equivalence", reformulation_equivalence),
        ("3 two-step quality", its_quality),
        ("4 block-coordinate properties", bcd_properties),
        ("5 dominance chain", dominance_chain),
        ("6 trend reproduction", trend_reproduction),
        ("7 count audit", count_audit),
        ("8 genetic algorithm", ga_behavior),
        ("9 model invariants", model_invariants),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name} ({secs:.1} s): {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn fixed_block_programs_match_the_optimum() {
    for (inst, cat) in oracle_instances().iter().take(5) {
        let sol = exact(inst, cat);
        step_programs_agree(inst, cat, &sol.decision).unwrap();
    }
}
