//! Turing's formula, its alternating modifications and probability
//! intervals for occupancy counts and the missing mass.

use crate::bounds::{bound_suite, c1, integral_condition};
use crate::dist::{Distribution, EnvelopeSide, KappaSign};
use crate::error::{domain, Error, Result};
use crate::exact::{exact_ek, exact_ek_tail, exact_em};
use crate::numerics::{ln_choose, lower_incomplete_gamma};
use crate::report::{Condition, Side};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::E;

/// Largest order accepted by [`turing_modified`].
pub const MODIFIED_S_CAP: u64 = 60;

/// Letter counts of a sample and the occupancy counts derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: u64,
    pub histogram: BTreeMap<String, u64>,
    /// `r -> K_{n,r}` for `r >= 1`.
    pub occupancy: BTreeMap<u64, u64>,
}

impl SampleSummary {
    pub fn from_histogram(histogram: BTreeMap<String, u64>) -> Self {
        let mut occupancy = BTreeMap::new();
        let mut n = 0;
        for &c in histogram.values() {
            if c > 0 {
                *occupancy.entry(c).or_insert(0) += 1;
                n += c;
            }
        }
        let histogram = histogram.into_iter().filter(|(_, c)| *c > 0).collect();
        Self { n, histogram, occupancy }
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut h = BTreeMap::new();
        for t in tokens {
            *h.entry(t.into()).or_insert(0) += 1;
        }
        Self::from_histogram(h)
    }

    /// `K_{n,r}` for `r >= 1`.
    pub fn k(&self, r: u64) -> u64 {
        self.occupancy.get(&r).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> u64 {
        self.histogram.len() as u64
    }
}

/// `T_{n,r} = (1+r) K_{n,1+r} / n`
pub fn turing(s: &SampleSummary, r: u64) -> Result<f64> {
    if r + 1 > s.n {
        return domain(format!("turing needs r + 1 <= n, got r = {r}, n = {}", s.n));
    }
    Ok((1 + r) as f64 * s.k(r + 1) as f64 / s.n as f64)
}

/// `T^{(s)}_{n,0} = Σ_{i=1}^{s} (-1)^{i+1} K_{n,i} / C(n,i)`
pub fn turing_modified(summary: &SampleSummary, s: u64) -> Result<f64> {
    if s == 0 || s > summary.n {
        return domain(format!("need 1 <= s <= n, got s = {s}, n = {}", summary.n));
    }
    if s > MODIFIED_S_CAP {
        return Err(Error::Unsupported(format!("s = {s} exceeds the cap {MODIFIED_S_CAP}")));
    }
    let nf = summary.n as f64;
    let mut acc = 0.0;
    for i in 1..=s {
        let k = summary.k(i);
        if k == 0 {
            continue;
        }
        let term = ((k as f64).ln() - ln_choose(nf, i as f64)).exp();
        acc += if i % 2 == 1 { term } else { -term };
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "s")]
pub enum Estimator {
    Turing,
    Modified(u64),
}

/// `E[M_{n,r} - T]` for Turing's formula (`E M_{n,r} - E M_{n-1,r}`) or
/// for `T^{(s)}_{n,0}` (`(-1)^s E M_{n,s} / C(n,s)`).
pub fn bias_exact(d: &Distribution, n: u64, r: u64, estimator: Estimator) -> Result<f64> {
    match estimator {
        Estimator::Turing => {
            if n < 2 {
                return domain("the Turing bias needs n >= 2");
            }
            let prev = if r < n { exact_em(d, n - 1, r)? } else { 0.0 };
            Ok(exact_em(d, n, r)? - prev)
        }
        Estimator::Modified(s) => {
            if s == 0 || s > n {
                return domain(format!("need 1 <= s <= n, got s = {s}, n = {n}"));
            }
            let v = (exact_em(d, n, s)?.ln() - ln_choose(n as f64, s as f64)).exp();
            Ok(if s % 2 == 0 { v } else { -v })
        }
    }
}

/// `E T^{(s)}_{n,0} = Σ_i (-1)^{i+1} E K_{n,i} / C(n,i)`
pub fn modified_expectation(d: &Distribution, n: u64, s: u64) -> Result<f64> {
    if s == 0 || s > n {
        return domain(format!("need 1 <= s <= n, got s = {s}, n = {n}"));
    }
    let mut acc = 0.0;
    for i in 1..=s {
        let term = exact_ek(d, n, i)? / (ln_choose(n as f64, i as f64)).exp();
        acc += if i % 2 == 1 { term } else { -term };
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Mo03,
    Bbo15,
    Cbmm1,
    Cbmm3,
}

impl IntervalKind {
    pub fn tag(&self) -> &'static str {
        match self {
            IntervalKind::Mo03 => "mo03",
            IntervalKind::Bbo15 => "bbo15",
            IntervalKind::Cbmm1 => "cbmm1",
            IntervalKind::Cbmm3 => "cbmm3",
        }
    }
}

/// An interval holding with probability at least `confidence_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticInterval {
    pub source: String,
    /// `M_{n,0}` for the missing-mass intervals, `K_{n,r}` for `bbo15`.
    pub target: String,
    pub lower: f64,
    #[serde(with = "crate::report::ext_real")]
    pub upper: f64,
    pub confidence_floor: f64,
    /// Floor of each one-sided statement, when the interval is a union of two.
    pub side_floor: Option<f64>,
    pub t: f64,
    pub applicable: bool,
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ProbabilisticInterval {
    fn new(kind: IntervalKind, target: &str, lower: f64, upper: f64, floor: f64, t: f64) -> Self {
        Self {
            source: kind.tag().to_string(),
            target: target.to_string(),
            lower,
            upper,
            confidence_floor: floor,
            side_floor: None,
            t,
            applicable: true,
            conditions: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn settle(mut self) -> Self {
        if self.conditions.iter().any(|c| !c.holds) {
            self.applicable = false;
            self.lower = 0.0;
            self.upper = f64::INFINITY;
        }
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be positive, got {t}"))
    }
}

/// `[E⁻ - √(2t/(ne)), E⁺ + √(t/n)]` from bounds `E⁻ <= E M_{n,0} <= E⁺`.
pub fn mo03_interval(e_minus: f64, e_plus: f64, n: u64, t: f64) -> Result<ProbabilisticInterval> {
    check_t(t)?;
    if n == 0 {
        return domain("n must be at least 1");
    }
    let nf = n as f64;
    let mut iv = ProbabilisticInterval::new(
        IntervalKind::Mo03,
        "M_{n,0}",
        e_minus - (2.0 * t / (nf * E)).sqrt(),
        e_plus + (t / nf).sqrt(),
        1.0 - 2.0 * (-t).exp(),
        t,
    );
    iv.side_floor = Some(1.0 - (-t).exp());
    Ok(iv)
}

/// Interval of the given kind for `M_{n,0}` or `K_{n,r}`. The expectation
/// bounds come from [`bound_suite`].
pub fn concentration_interval(kind: IntervalKind, d: &Distribution, n: u64, r: u64, t: f64) -> Result<ProbabilisticInterval> {
    check_t(t)?;
    if n == 0 || r > n {
        return domain(format!("need 1 <= n and r <= n, got n = {n}, r = {r}"));
    }
    let target = if kind == IntervalKind::Bbo15 { "K_{n,r}" } else { "M_{n,0}" };
    if kind != IntervalKind::Bbo15 && r != 0 {
        let mut iv = ProbabilisticInterval::new(kind, target, 0.0, f64::INFINITY, 0.0, t);
        iv.conditions.push(Condition::new("r_is_0", false, format!("r = {r}")));
        return Ok(iv.settle());
    }
    let nf = n as f64;
    match kind {
        IntervalKind::Mo03 => {
            let rep = bound_suite(d, n, 0)?;
            let pick = |side: Side| -> (f64, String) {
                let src = match side {
                    Side::Upper => rep.tightest_upper.clone(),
                    Side::Lower => rep.tightest_lower.clone(),
                };
                match src.and_then(|s| rep.bound(&s).map(|b| (b.value, s))) {
                    Some(x) => x,
                    None => (if side == Side::Upper { 1.0 } else { 0.0 }, "trivial".into()),
                }
            };
            let (lo, lo_src) = pick(Side::Lower);
            let (up, up_src) = pick(Side::Upper);
            let mut iv = mo03_interval(lo, up.min(1.0), n, t)?;
            iv.notes.push(format!("E- from {lo_src}, E+ from {up_src}"));
            Ok(iv)
        }
        IntervalKind::Cbmm1 => {
            let mut iv = ProbabilisticInterval::new(kind, target, 0.0, f64::INFINITY, 1.0 - (-t).exp(), t);
            iv.conditions.push(Condition::new("infinite_support", !d.is_finite(), d.label()));
            iv.conditions.push(Condition::new("n_at_least_2", n >= 2, format!("n = {n}")));
            match d.envelope(EnvelopeSide::Upper) {
                Ok(env) => {
                    let on_unit = env.valid_up_to >= 1.0;
                    iv.conditions.push(Condition::new("envelope_on_unit_interval", on_unit, format!("valid up to {}", env.valid_up_to)));
                    iv.conditions.push(Condition::new("ell_non_increasing", env.ell.is_non_increasing(), format!("{:?}", env.ell)));
                    iv.upper = c1(env.alpha, 0)? * env.ell.eval(nf) / nf.powf(1.0 - env.alpha) + (t / nf).sqrt();
                }
                Err(e) => iv.conditions.push(Condition::new("upper_envelope", false, e.to_string())),
            }
            Ok(iv.settle())
        }
        IntervalKind::Cbmm3 => {
            let mut iv = ProbabilisticInterval::new(kind, target, 0.0, f64::INFINITY, 1.0 - 2.0 * (-t).exp(), t);
            let Some((alpha, z)) = d.zipf_params() else {
                iv.conditions.push(Condition::new("zipf_law", false, d.label()));
                return Ok(iv.settle());
            };
            iv.conditions.push(Condition::new("zipf_law", true, d.label()));
            let n_min = 2f64.max(2f64.powf(1.0 / alpha) * z);
            iv.conditions.push(Condition::new("n_threshold", nf >= n_min, format!("n = {n}, need >= {n_min}")));
            let km = d.kappa(KappaSign::Minus, 2.0 / nf)?;
            let target_k = (2f64.powf(alpha) + 1.0) / 2f64.powf(alpha + 1.0);
            iv.conditions.push(Condition::new("kappa_minus", km <= target_k, format!("kappa_minus(2/n) = {km} against {target_k}")));
            let (lhs, rhs) = integral_condition(1.0 - alpha, n)?;
            iv.conditions.push(Condition::new("integral", lhs >= rhs, format!("integral = {lhs} against {rhs}")));
            let scale = z.powf(-alpha) / nf.powf(1.0 - alpha);
            let core_lo = (2f64.powf(alpha) - 1.0) * lower_incomplete_gamma(1.0 - alpha, 2.0)? / 32.0 * scale;
            let core_up = c1(alpha, 0)? * scale;
            iv.lower = core_lo - (2.0 * t / (nf * E)).sqrt();
            iv.upper = core_up + (t / nf).sqrt();
            if iv.lower < 0.0 {
                iv.notes.push(format!("lower endpoint {} is negative; M_{{n,0}} >= 0 clips it", iv.lower));
            }
            Ok(iv.settle())
        }
        IntervalKind::Bbo15 => bbo15(d, n, r, t),
    }
}

fn bbo15(d: &Distribution, n: u64, r: u64, t: f64) -> Result<ProbabilisticInterval> {
    let kind = IntervalKind::Bbo15;
    let mut iv = ProbabilisticInterval::new(kind, "K_{n,r}", 0.0, f64::INFINITY, 1.0 - 4.0 * (-t).exp(), t);
    let finite_inputs = d.is_finite() || r >= 1;
    iv.conditions.push(Condition::new("finite_expectations", finite_inputs, format!("r = {r}, {}", d.label())));
    if !finite_inputs {
        return Ok(iv.settle());
    }
    let v = bbo15_variance_proxy(d, n, r)?;
    // E K_{n,r} = (n/r) E M_{n-1,r-1}
    let (k_lo, k_up) = if r >= 1 && n >= 2 {
        let rep = bound_suite(d, n - 1, r - 1)?;
        let value = |s: &Option<String>| s.as_ref().and_then(|s| rep.bound(s)).map(|b| b.value);
        let scale = n as f64 / r as f64;
        let lo = value(&rep.tightest_lower).unwrap_or(0.0) * scale;
        let up = value(&rep.tightest_upper).map_or(f64::INFINITY, |u| u * scale);
        iv.notes.push(format!(
            "k- from {}, k+ from {}",
            rep.tightest_lower.as_deref().unwrap_or("trivial"),
            rep.tightest_upper.as_deref().unwrap_or("trivial")
        ));
        (lo, up)
    } else {
        let e = exact_ek(d, n, r)?;
        iv.notes.push("k- = k+ = E K_{n,r}".to_string());
        (e, e)
    };
    let w = (4.0 * v * t).sqrt() + 2.0 * t / 3.0;
    iv.lower = (k_lo - w).max(0.0);
    iv.upper = k_up + w;
    iv.notes.push(format!("v = {v}"));
    Ok(iv)
}

/// `v_{n,r} = 2 min{E K_{n,≥r}, max{r E K_{n,r}, (1+r) E K_{n,1+r}}}`
pub fn bbo15_variance_proxy(d: &Distribution, n: u64, r: u64) -> Result<f64> {
    let rf = r as f64;
    let ek = |s: u64| -> Result<f64> { if s > n { Ok(0.0) } else { exact_ek(d, n, s) } };
    Ok(2.0 * exact_ek_tail(d, n, r)?.min((rf * ek(r)?).max((1.0 + rf) * ek(r + 1)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::choose;

    fn summary(pairs: &[(&str, u64)]) -> SampleSummary {
        SampleSummary::from_histogram(pairs.iter().map(|(a, c)| (a.to_string(), *c)).collect())
    }

    #[test]
    fn turing_values() {
        let s = summary(&[("a", 2), ("b", 1)]);
        assert_eq!(s.n, 3);
        assert!((turing(&s, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((turing(&s, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let distinct = SampleSummary::from_tokens(["x", "y", "z", "w"]);
        assert_eq!(turing(&distinct, 0).unwrap(), 1.0);
        assert!(turing(&s, 3).is_err());
    }

    #[test]
    fn modified_values() {
        let s = summary(&[("a", 1), ("b", 1), ("c", 2)]);
        assert!((turing_modified(&s, 2).unwrap() - (0.5 - 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(turing_modified(&s, 1).unwrap(), turing(&s, 0).unwrap());
        let one = summary(&[("a", 4)]);
        assert!((turing_modified(&one, 4).unwrap() + 1.0).abs() < 1e-15);
        let big = SampleSummary::from_tokens((0..100).map(|i| format!("{i}")));
        assert!(matches!(turing_modified(&big, 61), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bias_values() {
        let u2 = Distribution::uniform(2).unwrap();
        assert!((bias_exact(&u2, 2, 0, Estimator::Turing).unwrap() + 0.25).abs() < 1e-15);
        let z = Distribution::zipf(0.5).unwrap();
        let v = bias_exact(&z, 7, 0, Estimator::Modified(7)).unwrap();
        assert!((v + exact_em(&z, 7, 7).unwrap()).abs() < 1e-15);
        let u10 = Distribution::uniform(10).unwrap();
        let b2 = bias_exact(&u10, 20, 0, Estimator::Modified(2)).unwrap();
        assert!((b2 - exact_em(&u10, 20, 2).unwrap() / choose(20, 2)).abs() < 1e-15);
        assert!(b2 > 0.0);
        assert!(b2.abs() <= bias_exact(&u10, 20, 0, Estimator::Modified(1)).unwrap().abs());
    }

    #[test]
    fn modified_bias_two_ways() {
        let laws = [
            Distribution::uniform(10).unwrap(),
            Distribution::explicit(&[0.4, 0.3, 0.2, 0.1]).unwrap(),
            Distribution::zipf(0.5).unwrap(),
            Distribution::geometric(0.8).unwrap(),
        ];
        for d in &laws {
            for n in [5u64, 20, 100] {
                for s in 1..=n.min(8) {
                    let direct = bias_exact(d, n, 0, Estimator::Modified(s)).unwrap();
                    let via = exact_em(d, n, 0).unwrap() - modified_expectation(d, n, s).unwrap();
                    assert!((direct - via).abs() < 1e-10, "{d} n={n} s={s}: {direct} vs {via}");
                }
            }
        }
    }

    #[test]
    fn chao_monotonicity() {
        let laws = [
            Distribution::uniform(10).unwrap(),
            Distribution::explicit(&[0.4, 0.3, 0.2, 0.1]).unwrap(),
            Distribution::geometric(0.8).unwrap(),
            Distribution::zipf(0.7).unwrap(),
        ];
        for d in &laws {
            assert!(d.p_star() < 0.5);
            for n in [2u64, 10, 100, 1000] {
                let mut prev = f64::INFINITY;
                for s in 1..=n.min(6) {
                    let b = bias_exact(d, n, 0, Estimator::Modified(s)).unwrap().abs();
                    assert!(b <= prev * (1.0 + 1e-12), "{d} n={n} s={s}");
                    prev = b;
                }
            }
        }
    }

    #[test]
    fn mo03_half_widths() {
        let iv = mo03_interval(0.0, 0.0, 100, 3.0).unwrap();
        assert!((iv.upper - 0.173_205_080_756_887_7).abs() < 1e-12);
        assert!((-iv.lower - (6.0 / (100.0 * E)).sqrt()).abs() < 1e-15);
        assert!((-iv.lower - 0.148_569).abs() < 1e-6);
        assert!((iv.confidence_floor - (1.0 - 2.0 * (-3.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn cbmm3_values() {
        let z = Distribution::zipf(0.5).unwrap();
        let iv = concentration_interval(IntervalKind::Cbmm3, &z, 10_000, 0, 3.0).unwrap();
        assert!(iv.applicable, "{:?}", iv.conditions);
        let radius_lo = (6.0 / (1e4 * E)).sqrt();
        assert!((iv.lower + radius_lo - 1.7075e-4).abs() < 1e-7, "{}", iv.lower + radius_lo);
        assert!(iv.lower < 0.0 && !iv.notes.is_empty());
        assert!((iv.upper - 0.017_320_508_075_688_77 - 0.040_606).abs() < 2e-6, "{}", iv.upper);
        let em = exact_em(&z, 10_000, 0).unwrap();
        assert!(iv.lower + radius_lo <= em && em <= iv.upper - (3.0f64 / 1e4).sqrt() + 1e-15);
        let u = Distribution::uniform(10).unwrap();
        assert!(!concentration_interval(IntervalKind::Cbmm3, &u, 10_000, 0, 3.0).unwrap().applicable);
        let small = concentration_interval(IntervalKind::Cbmm3, &z, 2, 0, 3.0).unwrap();
        assert!(!small.applicable);
    }

    #[test]
    fn cbmm3_cores_sandwich_exact() {
        for alpha in [0.3, 0.5, 0.7] {
            let z = Distribution::zipf(alpha).unwrap();
            for n in [10u64, 100, 1000, 10_000] {
                let t = 1.0;
                let iv = concentration_interval(IntervalKind::Cbmm3, &z, n, 0, t).unwrap();
                if !iv.applicable {
                    continue;
                }
                let nf = n as f64;
                let em = exact_em(&z, n, 0).unwrap();
                assert!(iv.lower + (2.0 * t / (nf * E)).sqrt() <= em);
                assert!(em <= iv.upper - (t / nf).sqrt());
            }
        }
    }

    #[test]
    fn cbmm1_matches_ctg() {
        let z = Distribution::zipf(0.5).unwrap();
        let iv = concentration_interval(IntervalKind::Cbmm1, &z, 100, 0, 2.0).unwrap();
        let ctg = crate::bounds::upper_rv(&z, 100, 0, crate::bounds::RvVariant::Ctg, None).unwrap();
        assert!((iv.upper - ctg.value - (0.02f64).sqrt()).abs() < 1e-12);
        assert!(!concentration_interval(IntervalKind::Cbmm1, &Distribution::uniform(3).unwrap(), 100, 0, 2.0).unwrap().applicable);
    }

    #[test]
    fn bbo15_values() {
        let u2 = Distribution::uniform(2).unwrap();
        assert!((bbo15_variance_proxy(&u2, 2, 1).unwrap() - 2.0).abs() < 1e-15);
        let iv = concentration_interval(IntervalKind::Bbo15, &u2, 2, 1, 1.0).unwrap();
        assert!(iv.applicable);
        assert!(iv.lower == 0.0 && iv.upper >= 1.0 + 8f64.sqrt());
        let z = Distribution::zipf(0.5).unwrap();
        assert!(!concentration_interval(IntervalKind::Bbo15, &z, 100, 0, 1.0).unwrap().applicable);
        let iv = concentration_interval(IntervalKind::Bbo15, &z, 1000, 2, 1.0).unwrap();
        let ek = exact_ek(&z, 1000, 2).unwrap();
        assert!(iv.lower <= ek && ek <= iv.upper);
    }
}
