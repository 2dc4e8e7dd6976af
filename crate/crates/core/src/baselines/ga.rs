use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::repair::repair_with;
use crate::error::{Error, Result};
use crate::model::{expected_profit, strictly_better, Catalog, Decision, Instance, OfferTable};
use crate::solution::{Certificate, Method, Solution};

/// Genetic-algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub generations: usize,
    pub population: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub elite_fraction: f64,
    /// Stop after this many generations without improvement of the best fitness.
    pub stall_generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            generations: 80,
            population: 60,
            crossover: 0.5,
            mutation: 0.12,
            elite_fraction: 0.05,
            stall_generations: 20,
        }
    }
}

impl GaConfig {
    pub fn new(
        generations: usize,
        population: usize,
        crossover: f64,
        mutation: f64,
        elite_fraction: f64,
    ) -> Result<Self> {
        let cfg = Self {
            generations,
            population,
            crossover,
            mutation,
            elite_fraction,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("crossover", self.crossover),
            ("mutation", self.mutation),
            ("elite fraction", self.elite_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        if self.generations < 1 || self.population < 1 || self.stall_generations < 1 {
            return Err(Error::InvalidConfig(
                "generation, population and stall counts must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Individuals carried over unchanged each generation.
    pub fn elite_count(&self) -> usize {
        let raw = self.elite_fraction * self.population as f64;
        ((raw - 1e-9).ceil().max(0.0) as usize).min(self.population)
    }
}

/// Run the genetic algorithm; deterministic for a fixed seed.
pub fn ga_solve(instance: &Instance, catalog: &Catalog, config: &GaConfig, seed: u64) -> Result<Solution> {
    instance.validate()?;
    config.validate()?;
    let start = Instant::now();
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    let table = OfferTable::new(instance, catalog);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let evaluate = |genomes: Vec<Decision>| -> Result<Vec<Individual>> {
        genomes
            .into_par_iter()
            .map(|g| {
                let decision = repair_with(&g, instance, catalog, &table);
                let fitness = expected_profit(instance, catalog, &decision)
                    .map_err(|e| Error::NoFeasibleSolution(format!("repair left an infeasible individual: {e}")))?;
                Ok(Individual { decision, fitness })
            })
            .collect()
    };

    let initial: Vec<Decision> = (0..config.population)
        .map(|_| Decision {
            x: (0..n).map(|_| (0..m).map(|_| rng.random_bool(0.5)).collect()).collect(),
            y: (0..n).map(|_| rng.random_bool(0.5)).collect(),
            z: (0..n).map(|_| (0..l).map(|_| rng.random_bool(0.5)).collect()).collect(),
        })
        .collect();
    let mut population = evaluate(initial)?;
    sort_population(&mut population);
    let mut best = population[0].clone();
    let mut stall = 0;
    let mut generations = 0u64;

    for _ in 0..config.generations {
        generations += 1;
        let elites = config.elite_count();
        let mut offspring = Vec::with_capacity(config.population);
        while offspring.len() + elites < config.population {
            let a = tournament(&population, &mut rng);
            let b = tournament(&population, &mut rng);
            let (mut c, mut d) = crossover(
                &population[a].decision,
                &population[b].decision,
                config.crossover,
                &mut rng,
            );
            mutate(&mut c, config.mutation, l, &mut rng);
            mutate(&mut d, config.mutation, l, &mut rng);
            offspring.push(c);
            if offspring.len() + elites < config.population {
                offspring.push(d);
            }
        }
        let mut next: Vec<Individual> = population[..elites].to_vec();
        next.extend(evaluate(offspring)?);
        sort_population(&mut next);
        population = next;
        if strictly_better(population[0].fitness, best.fitness) {
            best = population[0].clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.stall_generations {
                break;
            }
        }
    }

    let mut decision = best.decision;
    decision.canonicalize(catalog, l);
    let profit = expected_profit(instance, catalog, &decision)?;
    Ok(Solution {
        method: Method::Ga,
        decision,
        profit,
        certificate: Certificate::BestFound,
        nodes: generations,
        elapsed: start.elapsed(),
        its_trace: None,
    })
}

#[derive(Debug, Clone)]
struct Individual {
    decision: Decision,
    fitness: f64,
}

fn sort_population(population: &mut [Individual]) {
    population.sort_by(|a, b| {
        b.fitness
            .total_cmp(&a.fitness)
            .then_with(|| a.decision.key().cmp(&b.decision.key()))
    });
}

/// Index of the fitter of two uniformly drawn individuals.
fn tournament(population: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.random_range(0..population.len());
    let b = rng.random_range(0..population.len());
    // the population is sorted, so the smaller index is at least as fit
    a.min(b)
}

/// Uniform crossover: each x bit, y bit and z row is swapped with probability `p`.
fn crossover(a: &Decision, b: &Decision, p: f64, rng: &mut ChaCha8Rng) -> (Decision, Decision) {
    let (mut c, mut d) = (a.clone(), b.clone());
    for i in 0..a.n() {
        for j in 0..a.x[i].len() {
            if rng.random_bool(p) {
                std::mem::swap(&mut c.x[i][j], &mut d.x[i][j]);
            }
        }
        if rng.random_bool(p) {
            std::mem::swap(&mut c.y[i], &mut d.y[i]);
        }
        if rng.random_bool(p) {
            std::mem::swap(&mut c.z[i], &mut d.z[i]);
        }
    }
    (c, d)
}

/// Flip x and y bits with probability `p`; with the same probability move a
/// discount row to a uniformly drawn single level.
fn mutate(d: &mut Decision, p: f64, l: usize, rng: &mut ChaCha8Rng) {
    for i in 0..d.n() {
        for bit in d.x[i].iter_mut() {
            if rng.random_bool(p) {
                *bit = !*bit;
            }
        }
        if rng.random_bool(p) {
            d.y[i] = !d.y[i];
        }
        if rng.random_bool(p) {
            let h = rng.random_range(0..l);
            d.set_level(i, h);
        }
    }
}
