//! The standard test battery shared by the test suites and the CLI.

use crate::dist::Distribution;
use crate::error::Result;
use crate::metric::{MetricModel, MetricSpec, SegmentLaw};

pub const BATTERY_N: [u64; 5] = [2, 10, 100, 1_000, 10_000];
pub const BATTERY_R: [u64; 4] = [0, 1, 2, 5];

/// Uniform(2, 10, 100), Zipf(0.3, 0.5, 0.7), Geometric(0.5, 0.9) and Dirac.
pub fn distributions() -> Vec<Distribution> {
    let mut out = Vec::with_capacity(9);
    for m in [2, 10, 100] {
        out.push(Distribution::uniform(m).expect("valid"));
    }
    for a in [0.3, 0.5, 0.7] {
        out.push(Distribution::zipf(a).expect("valid"));
    }
    for q in [0.5, 0.9] {
        out.push(Distribution::geometric(q).expect("valid"));
    }
    out.push(Distribution::dirac());
    out
}

/// Every `(distribution, n, r)` of the battery with `r <= n`.
pub fn points() -> Vec<(Distribution, u64, u64)> {
    let mut out = Vec::new();
    for d in distributions() {
        for n in BATTERY_N {
            for r in BATTERY_R.into_iter().filter(|&r| r <= n) {
                out.push((d.clone(), n, r));
            }
        }
    }
    out
}

/// Segment and point-set laws used for the δ-neighbourhood checks.
pub fn metric_specs() -> Vec<MetricSpec> {
    vec![
        MetricSpec::Segment { a: 0.0, b: 1.0, law: SegmentLaw::Uniform },
        MetricSpec::Segment {
            a: 0.0,
            b: 2.0,
            law: SegmentLaw::Piecewise { breaks: vec![0.0, 0.5, 1.2, 2.0], weights: vec![3.0, 1.0, 2.0] },
        },
        MetricSpec::Points { coords: vec![0.0, 1.0, 2.0], masses: vec![0.5, 0.3, 0.2], distances: None },
        MetricSpec::Points {
            coords: vec![0.0, 0.1, 0.25, 0.3, 0.7, 1.0],
            masses: vec![0.3, 0.1, 0.2, 0.1, 0.2, 0.1],
            distances: None,
        },
        MetricSpec::Points {
            coords: vec![],
            masses: vec![0.4, 0.3, 0.2, 0.1],
            distances: Some(vec![
                vec![0.0, 1.0, 2.0, 2.5],
                vec![1.0, 0.0, 1.5, 2.0],
                vec![2.0, 1.5, 0.0, 0.6],
                vec![2.5, 2.0, 0.6, 0.0],
            ]),
        },
    ]
}

pub fn metric_models() -> Result<Vec<MetricModel>> {
    metric_specs().iter().map(MetricModel::from_spec).collect()
}

pub const METRIC_DELTAS: [f64; 3] = [0.05, 0.2, 0.7];
pub const METRIC_N: [u64; 4] = [1, 10, 100, 1_000];
