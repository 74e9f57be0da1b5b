//! Discrete laws on a countable alphabet and their counting functions.
//!
//! Atoms are always indexed `1, 2, ...` in non-increasing order of mass.
//! The counting function is `ν(ε) = #{a : p_a >= ε}`, the accrual function is
//! `F(ε) = Σ_{p_a <= ε} p_a`.

use crate::error::{domain, Error, Result};
use crate::numerics::{hurwitz_zeta, riemann_zeta, SlowlyVarying};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::fmt;

/// Default relative tolerance for certified tail sums.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Largest atom index the crate will enumerate explicitly.
pub const HORIZON_CAP: u64 = 20_000_000;

/// Serializable description of a distribution, as found in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Dirac {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_tol: Option<f64>,
    },
    Explicit {
        masses: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_tol: Option<f64>,
    },
    Uniform {
        m: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_tol: Option<f64>,
    },
    Zipf {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_tol: Option<f64>,
    },
    Geometric {
        q: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_tol: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dirac,
    Explicit,
    Uniform,
    Zipf,
    Geometric,
}

/// A run of equal masses: `count` atoms of mass `mass`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub mass: f64,
    pub count: u64,
}

/// Leading atoms of a law and the mass left beyond them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomList {
    pub atoms: Vec<Group>,
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    Upper,
    Lower,
}

/// `ν(ε) <= ε^{-α} ℓ(1/ε)` (upper) or `>=` (lower), for all `0 < ε <= valid_up_to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvEnvelope {
    pub alpha: f64,
    pub ell: SlowlyVarying,
    pub valid_up_to: f64,
}

impl RvEnvelope {
    /// `ε^{-α} ℓ(1/ε)`
    pub fn eval(&self, eps: f64) -> f64 {
        eps.powf(-self.alpha) * self.ell.eval(1.0 / eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSign {
    /// `κ₊(ε) = sup_{0<u<=ε} ν(u/2)/ν(u)`
    Plus,
    /// `κ₋(ε) = sup_{0<u<=ε} ν(u)/ν(u/2)`
    Minus,
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Finite { groups: Vec<Group>, cum: Vec<u64> },
    Zipf { alpha: f64, sigma: f64, z: f64 },
    Geometric { q: f64 },
}

#[derive(Debug, Clone)]
pub struct Distribution {
    family: Family,
    pub(crate) kind: Kind,
    // original explicit masses in non-increasing order (for sampling)
    masses: Vec<f64>,
    tol: f64,
    upper: Option<RvEnvelope>,
    lower: Option<RvEnvelope>,
}

impl Distribution {
    pub fn dirac() -> Self {
        Self::finite(Family::Dirac, vec![1.0])
    }

    pub fn uniform(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDistribution("uniform needs m >= 1".into()));
        }
        let groups = vec![Group { mass: 1.0 / m as f64, count: m }];
        Ok(Self {
            family: Family::Uniform,
            kind: Kind::Finite { groups, cum: vec![m] },
            masses: Vec::new(),
            tol: DEFAULT_TRUNCATION_TOL,
            upper: None,
            lower: None,
        })
    }

    /// Finite law from explicit masses; they must be positive and sum to 1
    /// within 1e-12.
    pub fn explicit(masses: &[f64]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidDistribution("explicit law needs at least one mass".into()));
        }
        if let Some(bad) = masses.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidDistribution(format!("masses must be positive, got {bad}")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::finite(Family::Explicit, masses.to_vec()))
    }

    fn finite(family: Family, mut masses: Vec<f64>) -> Self {
        masses.sort_by(|a, b| b.total_cmp(a));
        let mut groups: Vec<Group> = Vec::new();
        for &p in &masses {
            match groups.last_mut() {
                Some(g) if g.mass == p => g.count += 1,
                _ => groups.push(Group { mass: p, count: 1 }),
            }
        }
        let cum = groups
            .iter()
            .scan(0u64, |acc, g| {
                *acc += g.count;
                Some(*acc)
            })
            .collect();
        Self {
            family,
            kind: Kind::Finite { groups, cum },
            masses,
            tol: DEFAULT_TRUNCATION_TOL,
            upper: None,
            lower: None,
        }
    }

    /// Zipf law `p_k = k^{-1/α} / ζ(1/α)` for `α ∈ (0, 1)`.
    pub fn zipf(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidDistribution(format!("zipf needs alpha in (0, 1), got {alpha}")));
        }
        let sigma = 1.0 / alpha;
        let z = riemann_zeta(sigma)?;
        Ok(Self {
            family: Family::Zipf,
            kind: Kind::Zipf { alpha, sigma, z },
            masses: Vec::new(),
            tol: DEFAULT_TRUNCATION_TOL,
            upper: None,
            lower: None,
        })
    }

    /// Geometric law `p_k = (1 - q) q^{k-1}` for `q ∈ (0, 1)`.
    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidDistribution(format!("geometric needs q in (0, 1), got {q}")));
        }
        Ok(Self {
            family: Family::Geometric,
            kind: Kind::Geometric { q },
            masses: Vec::new(),
            tol: DEFAULT_TRUNCATION_TOL,
            upper: None,
            lower: None,
        })
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        let (d, tol) = match spec {
            DistributionSpec::Dirac { truncation_tol } => (Self::dirac(), *truncation_tol),
            DistributionSpec::Explicit { masses, truncation_tol } => (Self::explicit(masses)?, *truncation_tol),
            DistributionSpec::Uniform { m, truncation_tol } => (Self::uniform(*m)?, *truncation_tol),
            DistributionSpec::Zipf { alpha, truncation_tol } => (Self::zipf(*alpha)?, *truncation_tol),
            DistributionSpec::Geometric { q, truncation_tol } => (Self::geometric(*q)?, *truncation_tol),
        };
        match tol {
            Some(t) => d.with_truncation_tol(t),
            None => Ok(d),
        }
    }

    pub fn spec(&self) -> DistributionSpec {
        let truncation_tol = (self.tol != DEFAULT_TRUNCATION_TOL).then_some(self.tol);
        match (&self.kind, self.family) {
            (_, Family::Dirac) => DistributionSpec::Dirac { truncation_tol },
            (_, Family::Explicit) => DistributionSpec::Explicit { masses: self.masses.clone(), truncation_tol },
            (Kind::Finite { groups, .. }, Family::Uniform) => DistributionSpec::Uniform { m: groups[0].count, truncation_tol },
            (Kind::Zipf { alpha, .. }, _) => DistributionSpec::Zipf { alpha: *alpha, truncation_tol },
            (Kind::Geometric { q }, _) => DistributionSpec::Geometric { q: *q, truncation_tol },
            _ => unreachable!("family and kind are built together"),
        }
    }

    /// Relative tolerance used when certifying infinite sums.
    pub fn with_truncation_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidDistribution(format!("truncation_tol must be in (0, 1), got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    /// Attach a user-supplied envelope (needed for explicit laws).
    pub fn with_envelope(mut self, side: EnvelopeSide, env: RvEnvelope) -> Self {
        match side {
            EnvelopeSide::Upper => self.upper = Some(env),
            EnvelopeSide::Lower => self.lower = Some(env),
        }
        self
    }

    pub fn truncation_tol(&self) -> f64 {
        self.tol
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Short parameter string such as `alpha=0.5`.
    pub fn family_params(&self) -> String {
        match (&self.kind, self.family) {
            (_, Family::Dirac) => String::new(),
            (_, Family::Explicit) => {
                let ms: Vec<String> = self.masses.iter().map(|p| format!("{p}")).collect();
                format!("masses={}", ms.join(";"))
            }
            (Kind::Finite { groups, .. }, Family::Uniform) => format!("m={}", groups[0].count),
            (Kind::Zipf { alpha, .. }, _) => format!("alpha={alpha}"),
            (Kind::Geometric { q }, _) => format!("q={q}"),
            _ => unreachable!("family and kind are built together"),
        }
    }

    /// Label such as `zipf(alpha=0.5)`.
    pub fn label(&self) -> String {
        let name = match self.family {
            Family::Dirac => "dirac",
            Family::Explicit => "explicit",
            Family::Uniform => "uniform",
            Family::Zipf => "zipf",
            Family::Geometric => "geometric",
        };
        match self.family {
            Family::Dirac => name.to_string(),
            _ => format!("{name}({})", self.family_params()),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, Kind::Finite { .. })
    }

    /// `|S|`, or `None` when the support is infinite.
    pub fn support_size(&self) -> Option<u64> {
        match &self.kind {
            Kind::Finite { cum, .. } => cum.last().copied(),
            _ => None,
        }
    }

    /// Masses in non-increasing order, for explicit laws.
    pub fn explicit_masses(&self) -> &[f64] {
        &self.masses
    }

    pub(crate) fn groups(&self) -> Option<(&[Group], &[u64])> {
        match &self.kind {
            Kind::Finite { groups, cum } => Some((groups, cum)),
            _ => None,
        }
    }

    /// `(α, ζ(1/α))` for a Zipf law.
    pub fn zipf_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Zipf { alpha, z, .. } => Some((alpha, z)),
            _ => None,
        }
    }

    pub fn p_star(&self) -> f64 {
        self.mass(1)
    }

    /// Mass of the `k`-th atom (1-based); 0 beyond the support.
    pub fn mass(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Finite { groups, cum } => {
                let i = cum.partition_point(|&c| c < k);
                groups.get(i).map_or(0.0, |g| g.mass)
            }
            Kind::Zipf { sigma, z, .. } => (k as f64).powf(-sigma) / z,
            Kind::Geometric { q } => (1.0 - q) * q.powf((k - 1) as f64),
        }
    }

    /// `ν(ε)` for `ε > 0`.
    pub fn nu(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return domain(format!("nu needs eps > 0, got {eps}"));
        }
        Ok(self.nu_count(eps) as f64)
    }

    /// `ν(ε)` as an integer; saturates for astronomically small `ε`.
    pub(crate) fn nu_count(&self, eps: f64) -> u64 {
        match &self.kind {
            Kind::Finite { groups, cum } => {
                let i = groups.partition_point(|g| g.mass >= eps);
                if i == 0 {
                    0
                } else {
                    cum[i - 1]
                }
            }
            Kind::Zipf { alpha, z, .. } => {
                let x = (z * eps).powf(-alpha);
                self.adjust_count(x, eps)
            }
            Kind::Geometric { q } => {
                if eps > 1.0 - q {
                    return 0;
                }
                let x = ((eps / (1.0 - q)).ln() / q.ln()).floor() + 1.0;
                self.adjust_count(x, eps)
            }
        }
    }

    // refine a floating estimate of #{k: p_k >= eps} for strictly decreasing masses
    fn adjust_count(&self, estimate: f64, eps: f64) -> u64 {
        if !(estimate < 9.0e15) {
            return u64::MAX;
        }
        let mut k = estimate.max(0.0).floor() as u64;
        while k > 0 && self.mass(k) < eps {
            k -= 1;
        }
        while self.mass(k + 1) >= eps {
            k += 1;
        }
        k
    }

    /// Largest index whose mass is comfortably above the subnormal range.
    pub(crate) fn max_index(&self) -> u64 {
        match &self.kind {
            Kind::Finite { cum, .. } => *cum.last().expect("non-empty"),
            Kind::Zipf { .. } => HORIZON_CAP,
            Kind::Geometric { q } => {
                let k = ((1e-280 / (1.0 - q)).ln() / q.ln()).floor() as u64;
                k.clamp(2, HORIZON_CAP)
            }
        }
    }

    /// `#{a : p_a > ε}`, i.e. `ν(ε⁺)`.
    pub(crate) fn count_above(&self, eps: f64) -> u64 {
        match &self.kind {
            Kind::Finite { groups, cum } => {
                let i = groups.partition_point(|g| g.mass > eps);
                if i == 0 {
                    0
                } else {
                    cum[i - 1]
                }
            }
            _ => {
                let k = self.nu_count(eps);
                if k > 0 && k != u64::MAX && self.mass(k) == eps {
                    k - 1
                } else {
                    k
                }
            }
        }
    }

    /// Mass beyond the first `k` atoms, `Σ_{j>k} p_j`.
    pub fn tail_mass(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Finite { groups, cum } => {
                let mut acc = 0.0;
                for (g, &c) in groups.iter().zip(cum).rev() {
                    let before = c - g.count;
                    if c <= k {
                        break;
                    }
                    acc += g.mass * (c - before.max(k)) as f64;
                }
                acc
            }
            Kind::Zipf { sigma, z, .. } => hurwitz_zeta(*sigma, k as f64 + 1.0).map_or(0.0, |h| h / z),
            Kind::Geometric { q } => q.powf(k as f64),
        }
    }

    /// `F(ε) = Σ_{p_a <= ε} p_a`.
    pub fn accrual(&self, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) {
            return domain(format!("accrual needs eps >= 0, got {eps}"));
        }
        if eps == 0.0 {
            return Ok(0.0);
        }
        Ok(self.tail_mass(self.count_above(eps)))
    }

    /// First atoms (grouped by equal mass) and the mass beyond them. The
    /// list stops at `limit` entries or once the remaining mass is at most
    /// the truncation tolerance.
    pub fn atoms_desc(&self, limit: usize) -> AtomList {
        match &self.kind {
            Kind::Finite { groups, .. } => {
                let atoms: Vec<Group> = groups.iter().take(limit).copied().collect();
                let tail = groups.iter().skip(limit).map(|g| g.mass * g.count as f64).sum();
                AtomList { atoms, tail }
            }
            _ => {
                let mut atoms = Vec::new();
                let mut k = 0u64;
                while atoms.len() < limit && self.tail_mass(k) > self.tol {
                    k += 1;
                    atoms.push(Group { mass: self.mass(k), count: 1 });
                }
                AtomList { atoms, tail: self.tail_mass(k) }
            }
        }
    }

    /// Regular-variation envelope of `ν`.
    pub fn envelope(&self, side: EnvelopeSide) -> Result<RvEnvelope> {
        let user = match side {
            EnvelopeSide::Upper => self.upper,
            EnvelopeSide::Lower => self.lower,
        };
        if let Some(env) = user {
            return Ok(env);
        }
        let none = || Error::NoEnvelope(format!("{} ({side:?} side)", self.label()));
        match (&self.kind, self.family, side) {
            (_, Family::Explicit, _) => Err(none()),
            (Kind::Finite { cum, groups }, _, EnvelopeSide::Upper) => Ok(RvEnvelope {
                alpha: 0.0,
                ell: SlowlyVarying::Constant { c: *cum.last().expect("non-empty") as f64 },
                valid_up_to: 1.0,
            }
            .clamp_valid(groups[0].mass.max(1.0))),
            (Kind::Finite { cum, groups }, _, EnvelopeSide::Lower) => Ok(RvEnvelope {
                alpha: 0.0,
                ell: SlowlyVarying::Constant { c: *cum.last().expect("non-empty") as f64 },
                valid_up_to: groups.last().expect("non-empty").mass,
            }),
            (Kind::Zipf { alpha, z, .. }, _, EnvelopeSide::Upper) => Ok(RvEnvelope {
                alpha: *alpha,
                ell: SlowlyVarying::Constant { c: z.powf(-alpha) },
                valid_up_to: 1.0,
            }),
            (Kind::Zipf { alpha, z, .. }, _, EnvelopeSide::Lower) => Ok(RvEnvelope {
                alpha: *alpha,
                ell: SlowlyVarying::Constant { c: z.powf(-alpha) / 2.0 },
                valid_up_to: 1.0 / (2f64.powf(1.0 / alpha) * z),
            }),
            (Kind::Geometric { q }, _, EnvelopeSide::Upper) => {
                // smallest c with ν(ε) <= c ln(e + 1/ε); ν = k on (p_{k+1}, p_k]
                let lq = (1.0 / q).ln();
                let mut c = 1.0 / lq;
                for k in 1..=2000u64 {
                    c = c.max(k as f64 / (E + 1.0 / self.mass(k)).ln());
                }
                Ok(RvEnvelope { alpha: 0.0, ell: SlowlyVarying::LogPower { c, gamma: 1.0 }, valid_up_to: 1.0 })
            }
            (Kind::Geometric { .. }, _, EnvelopeSide::Lower) => Err(none()),
        }
    }

    /// Limit of `κ±(ε)` as `ε → 0`: `2^{±α}` for the regularly varying
    /// families and 1 for finite supports.
    pub fn kappa_limit(&self, sign: KappaSign) -> Result<f64> {
        match (&self.kind, sign) {
            (Kind::Finite { .. }, _) => Ok(1.0),
            (Kind::Geometric { .. }, _) => Ok(1.0),
            (Kind::Zipf { alpha, .. }, KappaSign::Plus) => Ok(2f64.powf(*alpha)),
            (Kind::Zipf { alpha, .. }, KappaSign::Minus) => Ok(2f64.powf(-alpha)),
        }
    }

    /// `κ±(ε)`. For infinite supports the values below the enumeration
    /// horizon are replaced by a certified upper bound, so the result is an
    /// upper bound that is exact up to a relative `O(1/horizon)` excess.
    pub fn kappa(&self, sign: KappaSign, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return domain(format!("kappa needs eps > 0, got {eps}"));
        }
        let horizon = default_horizon(self, eps);
        Ok(RatioProfile::build(self, sign, horizon)?.kappa(self, eps))
    }

    /// `L(P) = sup_{0<ε<1} (ν(ε/2) - ν(ε))`.
    pub fn l_p(&self) -> f64 {
        match &self.kind {
            Kind::Zipf { .. } => f64::INFINITY,
            Kind::Finite { groups, .. } => {
                let mut breaks: Vec<f64> = groups.iter().flat_map(|g| [g.mass, 2.0 * g.mass]).collect();
                sup_difference(self, &mut breaks)
            }
            Kind::Geometric { q } => {
                // the pattern of ν repeats in octaves; a few dozen suffice
                let per_octave = (2f64.ln() / (1.0 / q).ln()).ceil() as u64;
                let upto = (64 * per_octave + 64).min(self.max_index());
                let mut breaks: Vec<f64> = (1..=upto).flat_map(|k| {
                    let p = self.mass(k);
                    [p, 2.0 * p]
                }).collect();
                sup_difference(self, &mut breaks)
            }
        }
    }
}

impl RvEnvelope {
    fn clamp_valid(mut self, v: f64) -> Self {
        self.valid_up_to = v.min(1.0);
        self
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

// ν(ε/2) - ν(ε) is constant on (b_{i-1}, b_i] between consecutive breakpoints
fn sup_difference(d: &Distribution, breaks: &mut Vec<f64>) -> f64 {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut best = 0u64;
    let mut prev = 0.0;
    for &b in breaks.iter() {
        if prev >= 1.0 {
            break;
        }
        let diff = d.nu_count(b / 2.0) - d.nu_count(b).min(d.nu_count(b / 2.0));
        best = best.max(diff);
        prev = b;
    }
    best as f64
}

pub(crate) fn default_horizon(d: &Distribution, eps: f64) -> u64 {
    if d.is_finite() {
        return 0;
    }
    let at = d.nu_count(eps / 4.0);
    at.saturating_mul(4).max(4096).min(d.max_index())
}

fn ratio(num: u64, den: u64) -> f64 {
    match (num, den) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => num as f64 / den as f64,
    }
}

/// Running supremum of `ν(u/2)/ν(u)` (plus) or `ν(u)/ν(u/2)` (minus),
/// tabulated at the breakpoints `{p_k, 2 p_k}`.
#[derive(Debug, Clone)]
pub(crate) struct RatioProfile {
    sign: KappaSign,
    // below `floor` the ratio is bounded by `base`
    floor: f64,
    base: f64,
    breaks: Vec<f64>,
    prefix_max: Vec<f64>,
}

impl RatioProfile {
    pub(crate) fn build(d: &Distribution, sign: KappaSign, horizon: u64) -> Result<Self> {
        let (floor, base, mut breaks) = match &d.kind {
            Kind::Finite { groups, .. } => {
                let b: Vec<f64> = groups.iter().flat_map(|g| [g.mass, 2.0 * g.mass]).collect();
                (0.0, 1.0, b)
            }
            Kind::Zipf { alpha, .. } => {
                let h = horizon.clamp(2, d.max_index());
                let floor = d.mass(h);
                // below p_H, ν(u) = ⌊X⌋ with X >= H and ν(u/2) = ⌊2^α X⌋
                let base = match sign {
                    KappaSign::Plus => 2f64.powf(*alpha) * (1.0 + 1.0 / h as f64),
                    KappaSign::Minus => 1.0 / (2f64.powf(*alpha) - 1.0 / h as f64),
                };
                (floor, base, infinite_breaks(d, h, floor))
            }
            Kind::Geometric { q } => {
                let h = horizon.clamp(2, d.max_index());
                let floor = d.mass(h);
                let per_octave = (2f64.ln() / (1.0 / q).ln()).ceil();
                let base = match sign {
                    KappaSign::Plus => 1.0 + per_octave / h as f64,
                    KappaSign::Minus => 1.0,
                };
                (floor, base, infinite_breaks(d, h, floor))
            }
        };
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut prefix_max = Vec::with_capacity(breaks.len());
        let mut run = base;
        for &b in &breaks {
            run = run.max(Self::ratio_at(d, sign, b));
            prefix_max.push(run);
        }
        Ok(Self { sign, floor, base, breaks, prefix_max })
    }

    fn ratio_at(d: &Distribution, sign: KappaSign, u: f64) -> f64 {
        let full = d.nu_count(u);
        let half = d.nu_count(u / 2.0);
        match sign {
            KappaSign::Plus => ratio(half, full),
            KappaSign::Minus => ratio(full, half),
        }
    }

    pub(crate) fn floor(&self) -> f64 {
        self.floor
    }

    /// Bound on the ratio below the floor.
    pub(crate) fn base(&self) -> f64 {
        self.base
    }

    pub(crate) fn kappa(&self, d: &Distribution, eps: f64) -> f64 {
        if eps <= self.floor {
            return self.base;
        }
        let j = self.breaks.partition_point(|&b| b < eps);
        let before = if j == 0 { self.base } else { self.prefix_max[j - 1] };
        before.max(Self::ratio_at(d, self.sign, eps))
    }
}

fn infinite_breaks(d: &Distribution, h: u64, floor: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * h as usize);
    let mut k = 1u64;
    loop {
        let p = d.mass(k);
        if 2.0 * p <= floor {
            break;
        }
        out.push(2.0 * p);
        if p > floor {
            out.push(p);
        }
        k += 1;
    }
    out
}
