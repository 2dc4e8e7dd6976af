//! Industry benchmark strategies and the genetic-algorithm baseline.

mod ga;
mod repair;

use serde::{Deserialize, Serialize};

pub use ga::{ga_solve, GaConfig};
pub use repair::repair;

use crate::error::Result;
use crate::exact::{fixed_domains, full_domains, run_search};
use crate::model::{discount, Catalog, Instance};
use crate::solution::{Budget, Method, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    /// One shared contract set for all groups, initial discount levels.
    Bm1,
    /// Per-group recommendations, initial discount levels.
    Bm2,
    /// One shared contract set for all groups, discount levels optimized.
    Bm3,
}

impl Benchmark {
    pub fn method(self) -> Method {
        match self {
            Benchmark::Bm1 => Method::Bm1,
            Benchmark::Bm2 => Method::Bm2,
            Benchmark::Bm3 => Method::Bm3,
        }
    }
}

/// Solve one benchmark strategy exactly within the budget.
pub fn solve_benchmark(instance: &Instance, catalog: &Catalog, which: Benchmark, budget: Budget) -> Result<Solution> {
    instance.validate()?;
    let z0 = discount::initial_levels(catalog, instance.l);
    let (shared, domains) = match which {
        Benchmark::Bm1 => (true, fixed_domains(&z0)),
        Benchmark::Bm2 => (false, fixed_domains(&z0)),
        Benchmark::Bm3 => (true, full_domains(catalog, instance.l)),
    };
    run_search(instance, catalog, shared, domains, budget, None, which.method())
}
