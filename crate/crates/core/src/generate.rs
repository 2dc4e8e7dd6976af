//! Seeded instance generation for the default parameter table and its
//! sensitivity variants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::baselines::GaConfig;
use crate::error::{Error, Result};
use crate::model::{Instance, UtilityMode};

/// Rejection-sampling attempt cap.
pub const MAX_REJECTIONS: u64 = 1_000_000;

const U0: [f64; 5] = [300.0, 250.0, 200.0, 100.0, 50.0];
const BETA: [f64; 5] = [0.05, 0.04, 0.02, 0.005, 0.0001];
const V_RANGE: [(f64, f64); 5] = [(20.0, 25.0), (30.0, 35.0), (35.0, 40.0), (40.0, 45.0), (45.0, 50.0)];
/// Replacement cost per group (rows) and subsystem (columns), in thousands.
const COST: [[f64; 5]; 5] = [
    [0.6, 1.2, 1.8, 3.0, 4.8],
    [3.0, 3.6, 4.2, 5.4, 6.0],
    [6.0, 7.2, 8.4, 9.6, 12.0],
    [12.0, 15.0, 18.0, 21.0, 30.0],
    [30.0, 36.0, 42.0, 48.0, 54.0],
];

/// Default multiplier step of the discount ladder.
pub const DEFAULT_LADDER_STEP: f64 = 0.05;
pub const DEFAULT_THETA: f64 = 8.0;
pub const DEFAULT_GAMMA: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Ladder {
    /// `d_h = 1 - step * h` for zero-based `h < l`.
    Uniform {
        step: f64,
    },
    Explicit {
        multipliers: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CustomerCase {
    /// Equal proportions.
    #[default]
    Uniform,
    /// 0.4 / 0.2 / 0.15 / 0.1 / 0.05.
    Decreasing,
    /// 0.1 / 0.2 / 0.4 / 0.2 / 0.1.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AttractionDist {
    #[default]
    Uniform,
    Normal,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FailureSetting {
    /// U(0.05, 0.2) everywhere.
    #[default]
    Baseline,
    #[serde(rename = "hu-l")]
    HuL,
    #[serde(rename = "hu-h")]
    HuH,
    #[serde(rename = "heu")]
    HeU,
    #[serde(rename = "un-m")]
    UnM,
    Correlated,
}

/// Marginal law of one failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Uniform(f64, f64),
    /// Normal(mean, sd) restricted to `[lo, hi]` by rejection.
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
}

/// Joint multivariate-normal law per group, kept only inside a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedLaw {
    pub mean: f64,
    pub variance: f64,
    pub covariance: f64,
    pub lo: f64,
    pub hi: f64,
}

pub const CORRELATED: CorrelatedLaw = CorrelatedLaw {
    mean: 0.08,
    variance: 0.0009,
    covariance: 0.00036,
    lo: 0.05,
    hi: 0.2,
};

impl FailureSetting {
    /// Marginal law of subsystem `k`; `None` for the correlated setting.
    pub fn marginal(self, k: usize) -> Option<Marginal> {
        const HEU: [(f64, f64); 5] = [(0.0, 0.03), (0.02, 0.05), (0.03, 0.06), (0.04, 0.07), (0.05, 0.08)];
        let row = k.min(4);
        Some(match self {
            FailureSetting::Baseline => Marginal::Uniform(0.05, 0.2),
            FailureSetting::HuL => Marginal::Uniform(0.01, 0.05),
            FailureSetting::HuH => Marginal::Uniform(0.05, 0.10),
            FailureSetting::HeU => Marginal::Uniform(HEU[row].0, HEU[row].1),
            FailureSetting::UnM => match row {
                0 => Marginal::Uniform(0.0, 0.05),
                1 => Marginal::TruncatedNormal {
                    mean: 0.05,
                    sd: 0.1,
                    lo: 0.0,
                    hi: 1.0,
                },
                2 => Marginal::Uniform(0.06, 0.11),
                3 => Marginal::TruncatedNormal {
                    mean: 0.04,
                    sd: 0.1,
                    lo: 0.0,
                    hi: 1.0,
                },
                _ => Marginal::Uniform(0.04, 0.09),
            },
            FailureSetting::Correlated => return None,
        })
    }

    /// Support window of every sampled probability.
    pub fn window(self, k: usize) -> (f64, f64) {
        match self.marginal(k) {
            Some(Marginal::Uniform(lo, hi)) => (lo, hi),
            Some(Marginal::TruncatedNormal { lo, hi, .. }) => (lo, hi),
            None => (CORRELATED.lo, CORRELATED.hi),
        }
    }
}

/// Seeded recipe for one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub w: usize,
    pub m: usize,
    pub l: usize,
    pub gamma: f64,
    pub theta: f64,
    pub ladder: Ladder,
    #[serde(default)]
    pub customer_case: CustomerCase,
    #[serde(default)]
    pub attraction_dist: AttractionDist,
    #[serde(default)]
    pub failure_setting: FailureSetting,
    #[serde(default)]
    pub utility_mode: UtilityMode,
    pub seed: u64,
}

/// Default-table scenario: five groups, `l = w` levels, 5% ladder steps.
pub fn default_table3_scenario(w: usize, gamma: f64, theta: f64, seed: u64) -> Result<ScenarioSpec> {
    let spec = ScenarioSpec {
        w,
        m: 5,
        l: w,
        gamma,
        theta,
        ladder: Ladder::Uniform {
            step: DEFAULT_LADDER_STEP,
        },
        customer_case: CustomerCase::Uniform,
        attraction_dist: AttractionDist::Uniform,
        failure_setting: FailureSetting::Baseline,
        utility_mode: UtilityMode::Linear,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.w < 1 || self.w > crate::model::MAX_SUBSYSTEMS {
            return bad(format!("subsystem count {} out of range", self.w));
        }
        if self.m < 1 || self.m > 5 {
            return bad(format!("group count {} must lie in 1..=5", self.m));
        }
        if self.l < 1 {
            return bad("at least one discount level is required".into());
        }
        if !(self.gamma > 1.0) {
            return bad(format!("cost-to-price ratio must exceed 1, got {}", self.gamma));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return bad(format!("advertising cost must be nonnegative, got {}", self.theta));
        }
        let d = self.multipliers();
        if d.len() != self.l {
            return bad(format!("ladder has {} levels, expected {}", d.len(), self.l));
        }
        if d.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || d.windows(2).any(|p| p[0] <= p[1]) {
            return bad("ladder must be strictly decreasing within (0, 1]".into());
        }
        Ok(())
    }

    pub fn multipliers(&self) -> Vec<f64> {
        match &self.ladder {
            Ladder::Uniform { step } => (0..self.l).map(|h| 1.0 - step * h as f64).collect(),
            Ladder::Explicit { multipliers } => multipliers.clone(),
        }
    }

    /// Relative group weights as published for the customer case.
    pub fn proportions(&self) -> [f64; 5] {
        match self.customer_case {
            CustomerCase::Uniform => [0.2; 5],
            CustomerCase::Decreasing => [0.4, 0.2, 0.15, 0.1, 0.05],
            CustomerCase::Symmetric => [0.1, 0.2, 0.4, 0.2, 0.1],
        }
    }

    /// Group proportions of the first `m` groups, scaled to sum to one.
    pub fn lambda(&self) -> Vec<f64> {
        let full = self.proportions();
        let sum: f64 = full[..self.m].iter().sum();
        if (sum - 1.0).abs() <= 1e-12 {
            return full[..self.m].to_vec();
        }
        full[..self.m].iter().map(|x| x / sum).collect()
    }
}

/// Replacement cost of subsystem `k` for group `j`; rows beyond the table
/// continue the last increment.
pub fn table_cost(k: usize, j: usize) -> f64 {
    let row = &COST[j];
    let thousands = if k < 5 {
        row[k]
    } else {
        row[4] + (k - 4) as f64 * (row[4] - row[3])
    };
    thousands * 1000.0
}

fn sample_marginal(rng: &mut ChaCha8Rng, law: Marginal) -> Result<f64> {
    match law {
        Marginal::Uniform(lo, hi) => {
            Ok(rng.sample(Uniform::new(lo, hi).map_err(|e| Error::Generation(e.to_string()))?))
        }
        Marginal::TruncatedNormal { mean, sd, lo, hi } => {
            let normal = Normal::new(mean, sd).map_err(|e| Error::Generation(e.to_string()))?;
            for _ in 0..MAX_REJECTIONS {
                let x = normal.sample(rng);
                if (lo..=hi).contains(&x) {
                    return Ok(x);
                }
            }
            Err(Error::Generation(format!("truncation window [{lo}, {hi}] not reached")))
        }
    }
}

fn sample_correlated(rng: &mut ChaCha8Rng, w: usize, law: CorrelatedLaw) -> Result<Vec<f64>> {
    let cov = DMatrix::from_fn(w, w, |a, b| if a == b { law.variance } else { law.covariance });
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Generation("covariance matrix is not positive definite".into()))?;
    let lower = chol.l();
    for _ in 0..MAX_REJECTIONS {
        let z = DVector::from_fn(w, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = lower.clone() * z;
        let v: Vec<f64> = x.iter().map(|e| law.mean + e).collect();
        if v.iter().all(|p| (law.lo..=law.hi).contains(p)) {
            return Ok(v);
        }
    }
    Err(Error::Generation(format!(
        "no correlated sample inside [{}, {}] after {MAX_REJECTIONS} attempts",
        law.lo, law.hi
    )))
}

fn sample_attraction(rng: &mut ChaCha8Rng, dist: AttractionDist, lo: f64, hi: f64) -> Result<f64> {
    let err = |e: &dyn std::fmt::Display| Error::Generation(e.to_string());
    match dist {
        AttractionDist::Uniform => Ok(rng.sample(Uniform::new(lo, hi).map_err(|e| err(&e))?)),
        AttractionDist::Normal => {
            let sd = (hi - lo) / 12f64.sqrt();
            sample_marginal(
                rng,
                Marginal::TruncatedNormal {
                    mean: 0.5 * (lo + hi),
                    sd,
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
            )
        }
        AttractionDist::PowerLaw => {
            let pareto = Pareto::new(lo, 3.0).map_err(|e| err(&e))?;
            Ok(pareto.sample(rng).min(2.0 * hi))
        }
    }
}

/// Draw one instance. Values are sampled in a fixed order: attraction
/// values (subsystem-major), then failure probabilities.
pub fn generate_instance(spec: &ScenarioSpec) -> Result<Instance> {
    spec.validate()?;
    let (w, m) = (spec.w, spec.m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut v = vec![vec![0.0; m]; w];
    for row in v.iter_mut() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (lo, hi) = V_RANGE[j];
            *cell = sample_attraction(&mut rng, spec.attraction_dist, lo, hi)?;
        }
    }

    let mut f = vec![vec![0.0; m]; w];
    match spec.failure_setting {
        FailureSetting::Correlated => {
            for j in 0..m {
                let draw = sample_correlated(&mut rng, w, CORRELATED)?;
                for k in 0..w {
                    f[k][j] = draw[k];
                }
            }
        }
        setting => {
            for (k, row) in f.iter_mut().enumerate() {
                let law = setting.marginal(k).expect("marginal law");
                for cell in row.iter_mut() {
                    *cell = sample_marginal(&mut rng, law)?;
                }
            }
        }
    }

    let c: Vec<Vec<f64>> = (0..w).map(|k| (0..m).map(|j| table_cost(k, j)).collect()).collect();
    let p0 = c
        .iter()
        .map(|row| row.iter().map(|x| x / spec.gamma).collect())
        .collect();
    let instance = Instance {
        m,
        w,
        n: (1usize << w) - 1,
        l: spec.l,
        lambda: spec.lambda(),
        v,
        u0: U0[..m].to_vec(),
        beta: BETA[..m].to_vec(),
        p0,
        f,
        c,
        theta: spec.theta,
        d: spec.multipliers(),
        utility_mode: spec.utility_mode,
        seed: Some(spec.seed),
    };
    instance.validate()?;
    Ok(instance)
}

/// Default genetic-algorithm settings.
pub fn ga_default_config() -> GaConfig {
    GaConfig::default()
}
