//! Joint extended-warranty bundle design and pricing.
//!
//! The crate covers the problem model and closed-form profit, seeded instance
//! generation, the conic reformulation with a solver-neutral export, a
//! certified branch-and-bound solver, the iterative two-step heuristic, the
//! industry benchmark strategies, a genetic algorithm, and the experiment
//! harness used by the command-line tool.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod its;
pub mod model;
pub mod ratio;
pub mod reform;
pub mod solution;

pub use baselines::{ga_solve, repair, solve_benchmark, Benchmark, GaConfig};
pub use error::{Error, Result};
pub use exact::{best_assortment_given_prices, brute_force, enumerate_monotone_discounts, solve_exact};
pub use experiment::{
    metric_benefit, metric_gap, metric_increment, render_solution_grid, run_experiment, solve_with, ExperimentPlan,
    ResultTable, SolveOptions,
};
pub use generate::{default_table3_scenario, ga_default_config, generate_instance, ScenarioSpec};
pub use its::{initial_discounts, its_solve, step1_design, step2_pricing, ItsCaps, ItsTrace};
pub use model::{
    choice_probabilities, contract_price, expected_profit, preference_weight, validate_decision, Catalog, Decision,
    DecisionKey, Instance, PriceTable, UtilityMode, ValidationReport, Violation,
};
pub use reform::{
    audit_counts, build_benchmark_program, build_misocp, build_step_program, compute_aux,
    evaluate_reformulated_objective, export_conic, import_conic, ConicProgram, ReformAux,
};
pub use solution::{Budget, Certificate, CertifiedSolution, Method, Solution};
