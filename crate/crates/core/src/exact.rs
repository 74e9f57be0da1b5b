//! Exact expected occupancy counts and probabilities.

use crate::dist::Distribution;
use crate::error::{domain, Result};
use crate::numerics::{gamma, ln_gamma};
use crate::sums::{sum_atoms, Kernel, TailSum};
use serde::{Deserialize, Serialize};

/// A value together with a certified bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub certificate: f64,
}

impl From<TailSum> for Certified {
    fn from(t: TailSum) -> Self {
        Certified { value: t.value, certificate: t.certificate }
    }
}

fn check(n: u64, r: u64) -> Result<()> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    if r > n {
        return domain(format!("r = {r} exceeds n = {n}"));
    }
    Ok(())
}

/// `E M_{n,r} = C(n,r) Σ_a p_a^{r+1} (1-p_a)^{n-r}`
pub fn exact_em_certified(d: &Distribution, n: u64, r: u64) -> Result<Certified> {
    check(n, r)?;
    Ok(sum_atoms(d, &Kernel::binom_point(n, r, r + 1), 1.0, 0)?.into())
}

pub fn exact_em(d: &Distribution, n: u64, r: u64) -> Result<f64> {
    Ok(exact_em_certified(d, n, r)?.value)
}

/// `E K_{n,r} = C(n,r) Σ_a p_a^r (1-p_a)^{n-r}`; `+∞` for `r = 0` on an
/// infinite support.
pub fn exact_ek_certified(d: &Distribution, n: u64, r: u64) -> Result<Certified> {
    check(n, r)?;
    if r == 0 && !d.is_finite() {
        return Ok(Certified { value: f64::INFINITY, certificate: 0.0 });
    }
    Ok(sum_atoms(d, &Kernel::binom_point(n, r, r), 1.0, 0)?.into())
}

pub fn exact_ek(d: &Distribution, n: u64, r: u64) -> Result<f64> {
    Ok(exact_ek_certified(d, n, r)?.value)
}

/// `E K_{n,≥r} = Σ_a P(ξ_n(a) >= r)`
pub fn exact_ek_tail(d: &Distribution, n: u64, r: u64) -> Result<f64> {
    check(n, r)?;
    if r == 0 {
        return Ok(d.support_size().map_or(f64::INFINITY, |s| s as f64));
    }
    Ok(sum_atoms(d, &Kernel::BinomSurv { s: r, n }, 1.0, 0)?.value)
}

/// `E K_{n+1,r+1}` from `E M_{n,r}`.
pub fn km_transfer(em: f64, n: u64, r: u64) -> f64 {
    em * (1 + n) as f64 / (1 + r) as f64
}

/// `E M_{n,r}` from `E K_{n+1,r+1}`.
pub fn km_inverse(ek: f64, n: u64, r: u64) -> f64 {
    ek * (1 + r) as f64 / (1 + n) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticKind {
    Counts,
    Probabilities,
    PoissonProbabilities,
}

/// Leading-order regular-variation asymptotics: `αΓ(r-α)/r! · s^α ℓ` for
/// counts and `αΓ(1+r-α)/r! · s^{α-1} ℓ` for probabilities.
pub fn asymptotic_reference(alpha: f64, ell_at: f64, scale: f64, r: u64, kind: AsymptoticKind) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let rf = r as f64;
    let ln_fact = ln_gamma(rf + 1.0);
    match kind {
        AsymptoticKind::Counts => {
            if r == 0 {
                return domain("count asymptotics need r >= 1");
            }
            Ok(alpha * gamma(rf - alpha) / ln_fact.exp() * scale.powf(alpha) * ell_at)
        }
        AsymptoticKind::Probabilities | AsymptoticKind::PoissonProbabilities => {
            Ok(alpha * gamma(1.0 + rf - alpha) / ln_fact.exp() * scale.powf(alpha - 1.0) * ell_at)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub r: u64,
    pub em: f64,
    #[serde(with = "crate::report::ext_real")]
    pub ek: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyProfile {
    pub n: u64,
    pub values: Vec<ProfileEntry>,
    /// Sum of the per-value tail certificates.
    pub truncation_error: f64,
    /// `Σ_r E M_{n,r}` when the profile covers `r = 0..=n`.
    pub normalization: Option<f64>,
}

pub fn occupancy_profile(d: &Distribution, n: u64, r_max: u64) -> Result<OccupancyProfile> {
    check(n, r_max)?;
    let mut values = Vec::with_capacity(r_max as usize + 1);
    let mut err = 0.0;
    for r in 0..=r_max {
        let em = exact_em_certified(d, n, r)?;
        let ek = exact_ek_certified(d, n, r)?;
        err += em.certificate + ek.certificate;
        values.push(ProfileEntry { r, em: em.value, ek: ek.value });
    }
    let normalization = (r_max == n).then(|| values.iter().map(|v| v.em).sum());
    Ok(OccupancyProfile { n, values, truncation_error: err, normalization })
}
