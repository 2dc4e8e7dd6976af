use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::its::ItsTrace;
use crate::model::Decision;

/// Producing method of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    BruteForce,
    Its,
    Ga,
    Bm1,
    Bm2,
    Bm3,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Exact,
        Method::BruteForce,
        Method::Its,
        Method::Ga,
        Method::Bm1,
        Method::Bm2,
        Method::Bm3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::BruteForce => "brute-force",
            Method::Its => "its",
            Method::Ga => "ga",
            Method::Bm1 => "bm1",
            Method::Bm2 => "bm2",
            Method::Bm3 => "bm3",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    ProvenOptimal,
    BestFound,
}

impl Certificate {
    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::ProvenOptimal => "proven-optimal",
            Certificate::BestFound => "best-found",
        }
    }
}

/// A solved decision with its profit and run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub method: Method,
    pub decision: Decision,
    pub profit: f64,
    pub certificate: Certificate,
    pub nodes: u64,
    pub elapsed: Duration,
    pub its_trace: Option<ItsTrace>,
}

/// Result of a certified search; the certificate says whether the search finished.
pub type CertifiedSolution = Solution;

/// Wall-clock and node limits for one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub time: Duration,
    pub nodes: Option<u64>,
}

impl Budget {
    pub fn new(time: Duration) -> Result<Self> {
        if time.is_zero() {
            return Err(Error::ZeroBudget);
        }
        Ok(Self { time, nodes: None })
    }

    pub fn seconds(secs: f64) -> Result<Self> {
        if !(secs > 0.0) || !secs.is_finite() {
            return Err(Error::ZeroBudget);
        }
        Self::new(Duration::from_secs_f64(secs))
    }

    pub fn with_node_limit(mut self, nodes: u64) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::ZeroBudget);
        }
        self.nodes = Some(nodes);
        Ok(self)
    }

    pub fn deadline(&self, start: Instant) -> Instant {
        start
            .checked_add(self.time)
            .unwrap_or_else(|| start + Duration::from_secs(86_400 * 365))
    }
}

impl Default for Budget {
    /// Five minutes, no node limit.
    fn default() -> Self {
        Self {
            time: Duration::from_secs(300),
            nodes: None,
        }
    }
}
