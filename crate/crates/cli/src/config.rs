//! Experiment configuration files.

use occupancy_core::bounds::SuiteOptions;
use occupancy_core::estimate::{Estimator, IntervalKind};
use occupancy_core::metric::{BkCandidate, MetricSpec};
use occupancy_core::{Distribution, DistributionSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub distributions: Vec<DistributionSpec>,
    #[serde(default)]
    pub n: Vec<u64>,
    #[serde(default)]
    pub r: Vec<u64>,
    #[serde(default)]
    pub bounds: SuiteOptions,
    #[serde(default)]
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub intervals: Option<IntervalConfig>,
    #[serde(default)]
    pub monte_carlo: Option<McConfig>,
    #[serde(default)]
    pub coverage: Option<CoverageConfig>,
    #[serde(default)]
    pub poisson: Option<PoissonConfig>,
    #[serde(default)]
    pub metric: Option<MetricConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub kinds: Vec<IntervalKind>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub kind: IntervalKind,
    pub t: Vec<f64>,
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonConfig {
    pub lambda: Vec<f64>,
    pub r: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub models: Vec<MetricSpec>,
    pub n: Vec<u64>,
    pub delta: Vec<f64>,
    #[serde(default = "zero_only")]
    pub r: Vec<u64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub candidates: Vec<BkCandidate>,
    #[serde(default)]
    pub replicates: u64,
    #[serde(default = "default_probes")]
    pub probes: u64,
}

fn zero_only() -> Vec<u64> {
    vec![0]
}

fn default_probes() -> u64 {
    1000
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for d in &self.distributions {
            Distribution::from_spec(d).map_err(|e| usage(format!("config: {e}")))?;
        }
        if self.n.contains(&0) {
            return Err(usage("config: n must be positive"));
        }
        // an r that fits no n in the list can only be a mistake
        if let Some(&max_n) = self.n.iter().max() {
            if let Some(&r) = self.r.iter().find(|&&r| r > max_n) {
                return Err(usage(format!("config: r = {r} exceeds every n (largest n = {max_n})")));
            }
        }
        if let Some(iv) = &self.intervals {
            if iv.t.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(usage("config: interval t must be positive"));
            }
        }
        if let Some(c) = &self.coverage {
            if c.replicates == 0 || c.t.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(usage("config: coverage needs replicates >= 1 and positive t"));
            }
        }
        if let Some(mc) = &self.monte_carlo {
            if mc.replicates < 2 {
                return Err(usage("config: monte_carlo needs at least 2 replicates"));
            }
        }
        if let Some(p) = &self.poisson {
            if p.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return Err(usage("config: poisson lambda must be positive"));
            }
        }
        if let Some(m) = &self.metric {
            if m.delta.iter().any(|&d| !(d > 0.0 && d.is_finite())) || m.n.contains(&0) || m.probes == 0 {
                return Err(usage("config: metric needs positive delta, n and probes"));
            }
            if m.lambda.is_none() {
                if let (Some(&max_n), Some(&r)) = (m.n.iter().max(), m.r.iter().max()) {
                    if r > max_n {
                        return Err(usage(format!("config: metric r = {r} exceeds every n")));
                    }
                }
            }
            for s in &m.models {
                occupancy_core::metric::MetricModel::from_spec(s).map_err(|e| usage(format!("config: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn distributions(&self) -> Result<Vec<Distribution>, CliError> {
        self.distributions.iter().map(|s| Distribution::from_spec(s).map_err(|e| usage(e.to_string()))).collect()
    }

    /// `(n, r)` pairs with `r <= n`, in config order.
    pub fn nr_pairs(&self) -> Vec<(u64, u64)> {
        self.n.iter().flat_map(|&n| self.r.iter().filter(move |&&r| r <= n).map(move |&r| (n, r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::parse(r#"{"distributions":[{"family":"uniform","m":10}],"n":[10],"r":[0,1]}"#).unwrap();
        assert_eq!(c.nr_pairs(), vec![(10, 0), (10, 1)]);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"distributions":[],"n":[5],"r":[7]}"#,
            r#"{"distributions":[],"n":[5],"bogus":1}"#,
            r#"{"distributions":[{"family":"zipf","alpha":1.5}],"n":[5]}"#,
            r#"{"distributions":[{"family":"uniform","m":3,"extra":0}],"n":[5]}"#,
            r#"{"n":[0]}"#,
            r#"not json"#,
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn round_trip() {
        let text = r#"{"distributions":[{"family":"geometric","q":0.5}],"n":[10,100],"r":[0,5],
            "metric":{"models":[{"space":"segment","a":0,"b":1,"law":"uniform"}],"n":[10],"delta":[0.1]},
            "coverage":{"kind":"cbmm3","t":[3.0],"replicates":10},"seed":9}"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
