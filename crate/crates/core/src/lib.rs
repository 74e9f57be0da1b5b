//! Occupancy counts and masses of discrete laws.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dist;
pub mod error;
pub mod estimate;
pub mod metric;
pub mod exact;
pub mod numerics;
pub mod poisson;
pub mod report;
pub mod simulate;
pub mod battery;
pub mod bounds;
mod sums;

pub use dist::{Distribution, DistributionSpec, EnvelopeSide, Family, KappaSign, RvEnvelope};
pub use error::{Error, Result};
pub use exact::{exact_em, exact_em_certified, exact_ek, exact_ek_tail, km_inverse, km_transfer, Certified};
pub use report::{BoundReport, BoundResult, Condition, Side, Verdict};
