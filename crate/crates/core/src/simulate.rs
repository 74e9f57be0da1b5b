//! Seeded sampling and Monte Carlo checks.
//!
//! Replicate `i` of master seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so each replicate is reproducible on its own and replicates
//! can run in any order or on any number of threads.

use crate::dist::{Distribution, Family};
use crate::error::{Error, Result};
use crate::estimate::{concentration_interval, IntervalKind, ProbabilisticInterval, SampleSummary};
use crate::exact::exact_em;
use crate::numerics::KahanSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution as _, Geometric, Zeta};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Generator of replicate `i`.
    pub fn rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(replicate);
        rng
    }
}

#[derive(Debug, Clone)]
enum Method {
    Point,
    Range(u64),
    Alias(WeightedAliasIndex<f64>),
    Geometric(Geometric),
    Zeta(Zeta<f64>),
}

/// Draws atom indices `1, 2, ...` of a law.
#[derive(Debug, Clone)]
pub struct Sampler {
    method: Method,
}

impl Sampler {
    pub fn new(d: &Distribution) -> Result<Self> {
        let bad = |e: String| Error::InvalidDistribution(e);
        let method = match d.family() {
            Family::Dirac => Method::Point,
            Family::Uniform => Method::Range(d.support_size().expect("finite")),
            Family::Explicit => {
                Method::Alias(WeightedAliasIndex::new(d.explicit_masses().to_vec()).map_err(|e| bad(e.to_string()))?)
            }
            Family::Geometric => Method::Geometric(Geometric::new(d.p_star()).map_err(|e| bad(e.to_string()))?),
            Family::Zipf => {
                let (alpha, _) = d.zipf_params().expect("zipf");
                Method::Zeta(Zeta::new(1.0 / alpha).map_err(|e| bad(e.to_string()))?)
            }
        };
        Ok(Self { method })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.method {
            Method::Point => 1,
            Method::Range(m) => rng.random_range(1..=*m),
            Method::Alias(w) => w.sample(rng) as u64 + 1,
            Method::Geometric(g) => g.sample(rng).saturating_add(1),
            // saturates far beyond any atom with representable mass
            Method::Zeta(z) => z.sample(rng) as u64,
        }
    }

    /// `(letter, count)` pairs of an `n`-sample, sorted by letter.
    pub fn counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<(u64, u64)> {
        let mut xs: Vec<u64> = (0..n).map(|_| self.draw(rng)).collect();
        xs.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for x in xs {
            match out.last_mut() {
                Some((a, c)) if *a == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }
}

fn summary_of(counts: &[(u64, u64)]) -> SampleSummary {
    SampleSummary::from_histogram(counts.iter().map(|&(a, c)| (a.to_string(), c)).collect())
}

/// `n` i.i.d. draws; letters are atom indices written in decimal.
pub fn sample_counts(d: &Distribution, n: u64, seed: SeedSpec, replicate: u64) -> Result<SampleSummary> {
    let s = Sampler::new(d)?;
    Ok(summary_of(&s.counts(n, &mut seed.rng(replicate))))
}

/// Realized `K_{n,r}` and `M_{n,r}` of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realized {
    /// `+∞` for `r = 0` on an infinite support.
    #[serde(with = "crate::report::ext_real")]
    pub k: f64,
    pub m: f64,
}

fn realized_from(d: &Distribution, counts: &[(u64, u64)], r: u64) -> Realized {
    if r == 0 {
        let seen: KahanSum = counts.iter().map(|&(a, _)| d.mass(a)).collect();
        let k = d.support_size().map_or(f64::INFINITY, |s| (s - counts.len() as u64) as f64);
        return Realized { k, m: (1.0 - seen.value()).max(0.0) };
    }
    let mut k = 0u64;
    let mut m = KahanSum::new();
    for &(a, c) in counts {
        if c == r {
            k += 1;
            m.add(d.mass(a));
        }
    }
    Realized { k: k as f64, m: m.value() }
}

/// `(K_{n,r}, M_{n,r})` of a sample drawn from `d`; `M_{n,0}` is one minus
/// the seen mass.
pub fn realized_km(d: &Distribution, summary: &SampleSummary, r: u64) -> Result<Realized> {
    let mut counts = Vec::with_capacity(summary.histogram.len());
    for (a, &c) in &summary.histogram {
        let idx: u64 = a.parse().map_err(|_| Error::Domain(format!("letter {a:?} is not an atom index")))?;
        counts.push((idx, c));
    }
    counts.sort_unstable();
    Ok(realized_from(d, &counts, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub dist: String,
    pub n: u64,
    pub r: u64,
    pub replicates: u64,
    #[serde(with = "crate::report::ext_real")]
    pub mean_k: f64,
    #[serde(with = "crate::report::ext_real")]
    pub se_k: f64,
    pub mean_m: f64,
    pub se_m: f64,
    pub exact_em: f64,
    #[serde(with = "crate::report::ext_real")]
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub seed: SeedSpec,
    pub rows: Vec<McRow>,
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let nf = count as f64;
    if xs.clone().any(|x| x.is_infinite()) {
        return (f64::INFINITY, f64::NAN);
    }
    let mean = xs.clone().collect::<KahanSum>().value() / nf;
    let ss = xs.map(|x| (x - mean) * (x - mean)).collect::<KahanSum>().value();
    (mean, (ss / (nf - 1.0) / nf).sqrt())
}

/// Means and standard errors of `K_{n,r}` and `M_{n,r}` over `replicates`
/// samples, next to `E M_{n,r}`.
pub fn monte_carlo(d: &Distribution, n: u64, r_set: &[u64], replicates: u64, seed: SeedSpec) -> Result<MonteCarloResult> {
    if replicates < 2 {
        return Err(Error::Domain("monte carlo needs at least 2 replicates".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let sampler = Sampler::new(d)?;
    let per_rep: Vec<Vec<Realized>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let counts = sampler.counts(n, &mut seed.rng(i));
            r_set.iter().map(|&r| realized_from(d, &counts, r)).collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(r_set.len());
    for (j, &r) in r_set.iter().enumerate() {
        let count = per_rep.len();
        let (mean_k, se_k) = mean_se(per_rep.iter().map(|v| v[j].k), count);
        let (mean_m, se_m) = mean_se(per_rep.iter().map(|v| v[j].m), count);
        let exact = if r <= n { exact_em(d, n, r)? } else { 0.0 };
        let diff = mean_m - exact;
        let z_score = if se_m > 0.0 { diff / se_m } else if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        rows.push(McRow { dist: d.label(), n, r, replicates, mean_k, se_k, mean_m, se_m, exact_em: exact, z_score });
    }
    Ok(MonteCarloResult { seed, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub dist: String,
    pub n: u64,
    pub replicates: u64,
    pub interval: ProbabilisticInterval,
    /// Fraction of replicates with `lower <= M_{n,0} <= upper`.
    pub coverage: f64,
    /// Fraction with `M_{n,0} >= lower`.
    pub coverage_lower_side: f64,
    /// Fraction with `M_{n,0} <= upper`.
    pub coverage_upper_side: f64,
}

/// Fraction of replicates whose realized missing mass lies in `interval`.
pub fn coverage_of(d: &Distribution, n: u64, interval: ProbabilisticInterval, replicates: u64, seed: SeedSpec) -> Result<CoverageResult> {
    if !interval.applicable {
        return Err(Error::Inapplicable(format!("{} interval is inapplicable", interval.source)));
    }
    if replicates == 0 {
        return Err(Error::Domain("coverage needs at least 1 replicate".into()));
    }
    let sampler = Sampler::new(d)?;
    let ms: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| realized_from(d, &sampler.counts(n, &mut seed.rng(i)), 0).m)
        .collect();
    let frac = |f: &dyn Fn(f64) -> bool| ms.iter().filter(|&&m| f(m)).count() as f64 / replicates as f64;
    let coverage = frac(&|m| interval.contains(m));
    let coverage_lower_side = frac(&|m| m >= interval.lower);
    let coverage_upper_side = frac(&|m| m <= interval.upper);
    Ok(CoverageResult { dist: d.label(), n, replicates, interval, coverage, coverage_lower_side, coverage_upper_side })
}

/// Coverage of the missing-mass interval of the given kind.
pub fn coverage_experiment(d: &Distribution, n: u64, t: f64, replicates: u64, seed: SeedSpec, kind: IntervalKind) -> Result<CoverageResult> {
    if kind == IntervalKind::Bbo15 {
        return Err(Error::Unsupported("coverage experiments track the missing mass".into()));
    }
    coverage_of(d, n, concentration_interval(kind, d, n, 0, t)?, replicates, seed)
}
