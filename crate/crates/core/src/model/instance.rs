use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How subsystem attraction values combine into a contract's gross attraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityMode {
    /// Additive attraction values.
    #[default]
    Linear,
    /// Additive sum scaled by `1 - ln(size) / 6`.
    Diminishing,
}

/// All model parameters of one problem.
///
/// Per-subsystem arrays are indexed `[k][j]` (subsystem, group).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub m: usize,
    pub w: usize,
    pub n: usize,
    pub l: usize,
    pub lambda: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub u0: Vec<f64>,
    pub beta: Vec<f64>,
    pub p0: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub theta: f64,
    pub d: Vec<f64>,
    pub utility_mode: UtilityMode,
    /// Generator seed, when the instance came from a scenario.
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

fn check_grid(name: &str, grid: &[Vec<f64>], w: usize, m: usize) -> Result<()> {
    if grid.len() != w || grid.iter().any(|row| row.len() != m) {
        return Err(bad(format!("{name} must be a {w} x {m} grid")));
    }
    if grid.iter().flatten().any(|x| !x.is_finite()) {
        return Err(bad(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        let Instance { m, w, n, l, .. } = *self;
        if m == 0 {
            return Err(bad("at least one group is required"));
        }
        if w == 0 || w > super::catalog::MAX_SUBSYSTEMS {
            return Err(bad(format!("subsystem count {w} out of range")));
        }
        if n != (1usize << w) - 1 {
            return Err(bad(format!("contract count {n} must equal 2^{w} - 1")));
        }
        if l == 0 || self.d.len() != l {
            return Err(bad("discount ladder length must equal l >= 1"));
        }
        for (name, vec) in [("lambda", &self.lambda), ("u0", &self.u0), ("beta", &self.beta)] {
            if vec.len() != m || vec.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("{name} must hold {m} finite values")));
            }
        }
        check_grid("v", &self.v, w, m)?;
        check_grid("p0", &self.p0, w, m)?;
        check_grid("f", &self.f, w, m)?;
        check_grid("c", &self.c, w, m)?;

        let lambda_sum: f64 = self.lambda.iter().sum();
        if (lambda_sum - 1.0).abs() > 1e-9 || self.lambda.iter().any(|&x| x < 0.0) {
            return Err(bad(format!(
                "group proportions must be nonnegative and sum to 1, got {lambda_sum}"
            )));
        }
        if self.u0.iter().any(|&x| x <= 0.0) {
            return Err(bad("outside-option weights must be positive"));
        }
        if self.beta.iter().any(|&x| x <= 0.0) {
            return Err(bad("price sensitivities must be positive"));
        }
        if self.f.iter().flatten().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(bad("failure probabilities must lie in [0, 1]"));
        }
        if self.c.iter().flatten().any(|&x| x < 0.0) || self.p0.iter().flatten().any(|&x| x < 0.0) {
            return Err(bad("costs and initial prices must be nonnegative"));
        }
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(bad("advertising cost must be nonnegative"));
        }
        if self.d.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(bad("discount multipliers must lie in (0, 1]"));
        }
        if self.d.windows(2).any(|pair| pair[0] <= pair[1]) {
            return Err(bad("discount multipliers must be strictly decreasing"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Instance {
        Instance {
            m: 2,
            w: 1,
            n: 1,
            l: 2,
            lambda: vec![0.5, 0.5],
            v: vec![vec![20.0, 30.0]],
            u0: vec![300.0, 250.0],
            beta: vec![0.05, 0.04],
            p0: vec![vec![100.0, 500.0]],
            f: vec![vec![0.1, 0.1]],
            c: vec![vec![600.0, 3000.0]],
            theta: 8.0,
            d: vec![1.0, 0.95],
            utility_mode: UtilityMode::Linear,
            seed: None,
        }
    }

    #[test]
    fn valid_instance_passes() {
        base().validate().unwrap();
    }

    #[test]
    fn invariant_violations_are_rejected() {
        type Mutation = Box<dyn Fn(&mut Instance)>;
        let cases: Vec<Mutation> = vec![
            Box::new(|i| i.n = 2),
            Box::new(|i| i.lambda = vec![0.5, 0.6]),
            Box::new(|i| i.d = vec![0.95, 1.0]),
            Box::new(|i| i.d = vec![1.0, 1.0]),
            Box::new(|i| i.u0[0] = 0.0),
            Box::new(|i| i.beta[1] = -1.0),
            Box::new(|i| i.f[0][0] = 1.5),
            Box::new(|i| i.c[0][1] = -1.0),
            Box::new(|i| i.theta = -1.0),
            Box::new(|i| i.v = vec![vec![1.0]]),
        ];
        for (n, mutate) in cases.iter().enumerate() {
            let mut inst = base();
            mutate(&mut inst);
            assert!(inst.validate().is_err(), "case {n} should fail");
        }
    }
}
