//! δ-neighbourhood occupancy for laws on a metric space.
//!
//! Two spaces are supported: a segment `[a, b]` with the absolute-value
//! metric carrying a piecewise-constant density, and a finite point set
//! (coordinates on the line, or an explicit distance matrix). Locations are
//! coordinates, except on a matrix space where they are point indices.
//!
//! On a segment the ball mass `x ↦ P(B_{x,δ})` is linear between the
//! breakpoints `{c_i, c_i ± δ}` of the density, so every integral against
//! `P(dx)` is evaluated piece by piece in closed form.

use crate::error::{domain, Error, Result};
use crate::numerics::{ln_gamma, KahanSum};
use crate::report::{BoundResult, Condition, Side};
use crate::simulate::SeedSpec;
use crate::sums::Kernel;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Largest set covered exactly; larger sets use a greedy cover.
pub const EXACT_COVER_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLaw {
    Uniform,
    /// Density proportional to `weights[i]` on `[breaks[i], breaks[i+1])`;
    /// `breaks` runs from `a` to `b`.
    Piecewise { breaks: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Segment {
        a: f64,
        b: f64,
        law: SegmentLaw,
    },
    Points {
        #[serde(default)]
        coords: Vec<f64>,
        masses: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distances: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone)]
enum Model {
    Segment { cuts: Vec<f64>, dens: Vec<f64>, cdf: Vec<f64> },
    // coordinates sorted, with masses and their prefix sums
    Coords { xs: Vec<f64>, ms: Vec<f64>, prefix: Vec<f64> },
    Matrix { dist: Vec<Vec<f64>>, ms: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct MetricModel {
    spec: MetricSpec,
    model: Model,
}

fn normalized(ws: &[f64], what: &str) -> Result<Vec<f64>> {
    if ws.is_empty() || ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("{what} must be finite and non-negative")));
    }
    let total: f64 = ws.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidDistribution(format!("{what} sum to zero")));
    }
    Ok(ws.iter().map(|w| w / total).collect())
}

impl MetricModel {
    pub fn from_spec(spec: &MetricSpec) -> Result<Self> {
        let model = match spec {
            MetricSpec::Segment { a, b, law } => {
                let (a, b) = (*a, *b);
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidDistribution(format!("segment needs a < b, got [{a}, {b}]")));
                }
                let (cuts, weights) = match law {
                    SegmentLaw::Uniform => (vec![a, b], vec![1.0]),
                    SegmentLaw::Piecewise { breaks, weights } => {
                        let ok = breaks.len() == weights.len() + 1
                            && breaks.first() == Some(&a)
                            && breaks.last() == Some(&b)
                            && breaks.windows(2).all(|w| w[0] < w[1]);
                        if !ok {
                            return Err(Error::InvalidDistribution(
                                "piecewise law needs increasing breaks from a to b, one weight per piece".into(),
                            ));
                        }
                        (breaks.clone(), weights.clone())
                    }
                };
                let masses = normalized(&weights, "weights")?;
                let dens: Vec<f64> = masses.iter().zip(cuts.windows(2)).map(|(m, w)| m / (w[1] - w[0])).collect();
                let mut cdf = vec![0.0];
                for m in &masses {
                    cdf.push(cdf.last().unwrap() + m);
                }
                *cdf.last_mut().unwrap() = 1.0;
                Model::Segment { cuts, dens, cdf }
            }
            MetricSpec::Points { coords, masses, distances } => {
                let ms = normalized(masses, "masses")?;
                match distances {
                    Some(dist) => {
                        let k = ms.len();
                        let square = dist.len() == k && dist.iter().all(|row| row.len() == k);
                        let metric = square
                            && (0..k).all(|i| {
                                dist[i][i] == 0.0 && (0..k).all(|j| dist[i][j] >= 0.0 && dist[i][j] == dist[j][i])
                            });
                        if !metric {
                            return Err(Error::InvalidDistribution("distances must be a symmetric matrix with zero diagonal".into()));
                        }
                        Model::Matrix { dist: dist.clone(), ms }
                    }
                    None => {
                        if coords.len() != ms.len() || coords.iter().any(|x| !x.is_finite()) {
                            return Err(Error::InvalidDistribution("need one finite coordinate per mass".into()));
                        }
                        let mut pairs: Vec<(f64, f64)> = coords.iter().copied().zip(ms).collect();
                        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
                        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                        let ms: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                        let mut prefix = vec![0.0];
                        let mut acc = KahanSum::new();
                        for m in &ms {
                            acc.add(*m);
                            prefix.push(acc.value());
                        }
                        Model::Coords { xs, ms, prefix }
                    }
                }
            }
        };
        Ok(Self { spec: spec.clone(), model })
    }

    pub fn uniform_segment(a: f64, b: f64) -> Result<Self> {
        Self::from_spec(&MetricSpec::Segment { a, b, law: SegmentLaw::Uniform })
    }

    pub fn points(coords: &[f64], masses: &[f64]) -> Result<Self> {
        Self::from_spec(&MetricSpec::Points { coords: coords.to_vec(), masses: masses.to_vec(), distances: None })
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        match &self.spec {
            MetricSpec::Segment { a, b, law } => match law {
                SegmentLaw::Uniform => format!("segment[{a},{b}](uniform)"),
                SegmentLaw::Piecewise { weights, .. } => format!("segment[{a},{b}](piecewise,{} pieces)", weights.len()),
            },
            MetricSpec::Points { masses, distances, .. } => {
                format!("points({}{})", masses.len(), if distances.is_some() { ",matrix" } else { "" })
            }
        }
    }

    /// Atoms `(location, mass)` of a point-set law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.model {
            Model::Segment { .. } => None,
            Model::Coords { xs, ms, .. } => Some(xs.iter().copied().zip(ms.iter().copied()).collect()),
            Model::Matrix { ms, .. } => Some(ms.iter().enumerate().map(|(i, &m)| (i as f64, m)).collect()),
        }
    }

    pub fn distance(&self, u: f64, v: f64) -> f64 {
        match &self.model {
            Model::Matrix { dist, .. } => dist[u as usize][v as usize],
            _ => (u - v).abs(),
        }
    }

    fn segment_cdf(cuts: &[f64], dens: &[f64], cdf: &[f64], y: f64) -> f64 {
        if y <= cuts[0] {
            return 0.0;
        }
        if y >= *cuts.last().unwrap() {
            return 1.0;
        }
        let i = cuts.partition_point(|&c| c <= y) - 1;
        cdf[i] + dens[i] * (y - cuts[i])
    }

    /// `P(B_{x,δ})`, the mass of the open ball of radius `δ` around `x`.
    pub fn ball_mass(&self, x: f64, delta: f64) -> f64 {
        match &self.model {
            Model::Segment { cuts, dens, cdf } => {
                let hi = Self::segment_cdf(cuts, dens, cdf, x + delta);
                let lo = Self::segment_cdf(cuts, dens, cdf, x - delta);
                (hi - lo).clamp(0.0, 1.0)
            }
            Model::Coords { xs, ms, prefix } => {
                let lo = xs.partition_point(|&y| y <= x - delta);
                let hi = xs.partition_point(|&y| y < x + delta).max(lo);
                if hi - lo <= 64 {
                    ms[lo..hi].iter().sum::<f64>().min(1.0)
                } else {
                    (prefix[hi] - prefix[lo]).clamp(0.0, 1.0)
                }
            }
            Model::Matrix { dist, ms } => {
                let i = x as usize;
                ms.iter().zip(&dist[i]).filter(|(_, &d)| d < delta).map(|(m, _)| m).sum::<f64>().min(1.0)
            }
        }
    }

    /// Pieces `[u, v]` of the segment on which the ball mass is linear, with
    /// the density on each.
    fn pieces(&self, delta: f64) -> Option<Vec<(f64, f64, f64)>> {
        let Model::Segment { cuts, dens, .. } = &self.model else {
            return None;
        };
        let (a, b) = (cuts[0], *cuts.last().unwrap());
        let mut pts: Vec<f64> = Vec::with_capacity(3 * cuts.len());
        for &c in cuts {
            for p in [c, c - delta, c + delta] {
                if p >= a && p <= b {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let out = pts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let i = (cuts.partition_point(|&c| c <= mid) - 1).min(dens.len() - 1);
                (w[0], w[1], dens[i])
            })
            .collect();
        Some(out)
    }

    /// `p★^{(δ)} = sup_x P(B_{x,δ})`
    pub fn p_star(&self, delta: f64) -> f64 {
        match self.pieces(delta) {
            Some(pieces) => pieces
                .iter()
                .flat_map(|&(u, v, _)| [self.ball_mass(u, delta), self.ball_mass(v, delta)])
                .fold(0.0, f64::max),
            None => self.atoms().unwrap().iter().map(|&(x, _)| self.ball_mass(x, delta)).fold(0.0, f64::max),
        }
    }

    /// `n` draws from the law.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match &self.model {
            Model::Segment { cuts, dens, .. } => {
                let masses: Vec<f64> = dens.iter().zip(cuts.windows(2)).map(|(d, w)| d * (w[1] - w[0])).collect();
                let pick = WeightedAliasIndex::new(masses).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                Ok((0..n)
                    .map(|_| {
                        let i = pick.sample(rng);
                        cuts[i] + (cuts[i + 1] - cuts[i]) * rng.random::<f64>()
                    })
                    .collect())
            }
            Model::Coords { xs, ms, .. } => {
                let pick = WeightedAliasIndex::new(ms.clone()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                Ok((0..n).map(|_| xs[pick.sample(rng)]).collect())
            }
            Model::Matrix { ms, .. } => {
                let pick = WeightedAliasIndex::new(ms.clone()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                Ok((0..n).map(|_| pick.sample(rng) as f64).collect())
            }
        }
    }
}

/// Number of points at distance strictly less than `δ` from `x`.
pub fn xi_delta(points: &[f64], x: f64, delta: f64) -> u64 {
    points.iter().filter(|&&p| (p - x).abs() < delta).count() as u64
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        domain(format!("delta must be positive, got {delta}"))
    }
}

/// Occupancy kernel `K(q)` at ball mass `q` and its antiderivative increment.
struct DeltaKernel {
    point: Kernel,
    surv: Kernel,
    // ∫_{q0}^{q1} K = surv.increment(q0, q1) * integral_scale
    integral_scale: f64,
}

impl DeltaKernel {
    fn new(n: u64, r: u64, lambda: Option<f64>) -> Result<Self> {
        match lambda {
            None => {
                if r > n {
                    return domain(format!("r = {r} exceeds n = {n}"));
                }
                Ok(Self {
                    point: Kernel::binom_point(n, r, r),
                    surv: Kernel::BinomSurv { s: r + 1, n: n + 1 },
                    integral_scale: 1.0 / (n + 1) as f64,
                })
            }
            Some(lam) => {
                if !(lam > 0.0 && lam.is_finite()) {
                    return domain(format!("Lambda must be positive, got {lam}"));
                }
                let rf = r as f64;
                Ok(Self {
                    point: Kernel::Pois { ln_coef: rf * lam.ln() - ln_gamma(rf + 1.0), j: rf, lambda: lam },
                    surv: Kernel::PoisSurv { s: r + 1, lambda: lam },
                    integral_scale: 1.0 / lam,
                })
            }
        }
    }

    fn integral(&self, q0: f64, q1: f64) -> f64 {
        let (lo, hi) = if q0 <= q1 { (q0, q1) } else { (q1, q0) };
        self.surv.increment(lo, hi) * self.integral_scale
    }
}

/// `E M^{(δ)}_{n,r} = ∫ C(n,r) P(B_x)^r (1-P(B_x))^{n-r} P(dx)`, or with
/// `lambda` the Poissonized `Λ^r/r! ∫ P(B_x)^r e^{-Λ P(B_x)} P(dx)`.
pub fn exact_em_delta(model: &MetricModel, n: u64, delta: f64, r: u64, lambda: Option<f64>) -> Result<f64> {
    check_delta(delta)?;
    let k = DeltaKernel::new(n, r, lambda)?;
    if let Some(atoms) = model.atoms() {
        let acc: KahanSum = atoms.iter().map(|&(x, m)| m * k.point.eval(model.ball_mass(x, delta))).collect();
        return Ok(acc.value());
    }
    let mut acc = KahanSum::new();
    for (u, v, f) in model.pieces(delta).unwrap() {
        let (q0, q1) = (model.ball_mass(u, delta), model.ball_mass(v, delta));
        let len = v - u;
        if (q1 - q0).abs() <= 1e-13 * q0.max(q1) {
            acc.add(f * len * k.point.eval(0.5 * (q0 + q1)));
        } else {
            acc.add(f * len / (q1 - q0).abs() * k.integral(q0, q1));
        }
    }
    Ok(acc.value())
}

/// `ν_δ(ε) = ∫_{P(B_x) >= ε} P(B_x)^{-1} P(dx)`
pub fn nu_delta(model: &MetricModel, delta: f64, eps: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(eps > 0.0) {
        return domain(format!("nu_delta needs eps > 0, got {eps}"));
    }
    if let Some(atoms) = model.atoms() {
        let acc: KahanSum = atoms
            .iter()
            .map(|&(x, m)| {
                let q = model.ball_mass(x, delta);
                if q >= eps {
                    m / q
                } else {
                    0.0
                }
            })
            .collect();
        return Ok(acc.value());
    }
    let mut acc = KahanSum::new();
    for (u, v, f) in model.pieces(delta).unwrap() {
        let (q0, q1) = (model.ball_mass(u, delta), model.ball_mass(v, delta));
        if q0.max(q1) < eps {
            continue;
        }
        if (q1 - q0).abs() <= 1e-13 * q0.max(q1) {
            acc.add(f * (v - u) / q0.max(q1));
            continue;
        }
        // restrict to the part of the piece where the linear ball mass is >= ε
        let slope = (q1 - q0) / (v - u);
        let (lo_q, hi_q) = (q0.min(q1).max(eps), q0.max(q1));
        acc.add(f / slope.abs() * (hi_q / lo_q).ln());
    }
    Ok(acc.value())
}

/// Candidate `(x, t, ρ)` of the covering bound. On a matrix space `x` is a
/// point index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkCandidate {
    pub x: f64,
    pub t: f64,
    pub rho: f64,
}

/// Covering number `N(B_{x,t}, ρ)`, exact on point sets up to
/// [`EXACT_COVER_LIMIT`] points and greedy beyond; the flag reports
/// whether the count is exact.
pub fn covering_number(model: &MetricModel, x: f64, t: f64, rho: f64) -> (u64, bool) {
    match &model.model {
        Model::Segment { cuts, .. } => {
            let (a, b) = (cuts[0], *cuts.last().unwrap());
            let len = ((x + t).min(b) - (x - t).max(a)).max(0.0);
            if len <= 0.0 {
                return (0, true);
            }
            (((len / (2.0 * rho)).ceil() as u64).max(1), true)
        }
        _ => {
            let atoms = model.atoms().unwrap();
            let targets: Vec<f64> = atoms.iter().map(|a| a.0).filter(|&y| model.distance(x, y) < t).collect();
            if targets.is_empty() {
                return (0, true);
            }
            // each candidate centre covers a subset of the targets
            let mut sets: Vec<Vec<usize>> = atoms
                .iter()
                .map(|&(u, _)| (0..targets.len()).filter(|&i| model.distance(u, targets[i]) < rho).collect())
                .collect();
            sets.sort();
            sets.dedup();
            if targets.len() <= EXACT_COVER_LIMIT {
                (exact_cover(targets.len(), &sets), true)
            } else {
                (greedy_cover(targets.len(), &sets), false)
            }
        }
    }
}

fn exact_cover(k: usize, sets: &[Vec<usize>]) -> u64 {
    let masks: Vec<u32> = sets.iter().map(|s| s.iter().fold(0u32, |m, &i| m | (1 << i))).collect();
    let full = (1u32 << k) - 1;
    let mut best = vec![u8::MAX; 1 << k];
    best[0] = 0;
    for mask in 0..=full {
        let cur = best[mask as usize];
        if cur == u8::MAX || mask == full {
            continue;
        }
        let first = (!mask & full).trailing_zeros();
        for &s in &masks {
            if s & (1 << first) != 0 {
                let next = (mask | s) as usize;
                best[next] = best[next].min(cur + 1);
            }
        }
    }
    best[full as usize] as u64
}

fn greedy_cover(k: usize, sets: &[Vec<usize>]) -> u64 {
    let mut covered = vec![false; k];
    let mut left = k;
    let mut used = 0;
    while left > 0 {
        let pick = sets.iter().max_by_key(|s| s.iter().filter(|&&i| !covered[i]).count()).expect("a set");
        for &i in pick {
            if !covered[i] {
                covered[i] = true;
                left -= 1;
            }
        }
        used += 1;
    }
    used
}

fn default_candidates(model: &MetricModel, delta: f64) -> Vec<BkCandidate> {
    let rho = delta / 2.0;
    match &model.model {
        Model::Segment { cuts, .. } => {
            let (a, b) = (cuts[0], *cuts.last().unwrap());
            let len = b - a;
            let mut out = Vec::new();
            for i in 0..=20 {
                let x = a + len * i as f64 / 20.0;
                for j in 0..=12 {
                    out.push(BkCandidate { x, t: 2.0 * len * 0.5f64.powi(j), rho });
                }
            }
            out
        }
        _ => {
            let mut atoms = model.atoms().unwrap();
            atoms.sort_by(|p, q| q.1.total_cmp(&p.1));
            atoms.truncate(50);
            let all = model.atoms().unwrap();
            let mut out = Vec::new();
            for &(x, _) in &atoms {
                let mut radii: Vec<f64> = all.iter().map(|&(y, _)| model.distance(x, y)).collect();
                radii.sort_by(f64::total_cmp);
                radii.dedup();
                for d in radii {
                    // just above d, so the open ball includes the points at distance d
                    out.push(BkCandidate { x, t: (d * (1.0 + 1e-12)).max(f64::MIN_POSITIVE), rho });
                }
            }
            out
        }
    }
}

/// `inf{τ_x(t) + N_x(t,ρ)/(ne)}` over the supplied candidates and a
/// default grid, `τ_x(t) = 1 - P(B_{x,t})`.
pub fn bkgen_upper(model: &MetricModel, n: u64, delta: f64, candidates: &[BkCandidate]) -> Result<BoundResult> {
    check_delta(delta)?;
    if n == 0 {
        return domain("n must be at least 1");
    }
    let nf = n as f64;
    let mut best: Option<(f64, BkCandidate, bool)> = None;
    let mut rejected = Vec::new();
    for c in candidates.iter().copied().chain(default_candidates(model, delta)) {
        if !(c.rho > 0.0 && c.rho <= delta / 2.0 && c.t > 0.0) {
            rejected.push(format!("(x={}, t={}, rho={}): need 0 < rho <= delta/2 and t > 0", c.x, c.t, c.rho));
            continue;
        }
        let tau = 1.0 - model.ball_mass(c.x, c.t);
        let (cover, exact) = covering_number(model, c.x, c.t, c.rho);
        let v = (tau + cover as f64 / (nf * E)).min(1.0);
        if best.is_none_or(|b| v < b.0) {
            best = Some((v, c, exact));
        }
    }
    let (v, c, exact) = best.expect("default grid is non-empty");
    let mut res = BoundResult::new("bkgen", Side::Upper, v, None)
        .with_condition(Condition::new("rho_at_most_delta_over_2", true, format!("rho = {}", c.rho)))
        .with_note(format!("x = {}, t = {}, rho = {}", c.x, c.t, c.rho));
    if !exact {
        res = res.with_note("greedy covering number (an upper bound on the minimum)");
    }
    for r in rejected {
        res = res.with_note(format!("rejected {r}"));
    }
    Ok(res)
}

/// `M^{(δ)}_{n,r}` of a sample: exact over the atoms of a point-set law,
/// otherwise the average of `1{ξ(X_j) = r}` over `probes` draws `X_j`
/// taken from replicate stream `replicate`.
pub fn m_delta_empirical(
    model: &MetricModel,
    sample: &[f64],
    delta: f64,
    r: u64,
    probes: u64,
    seed: SeedSpec,
    replicate: u64,
) -> Result<f64> {
    check_delta(delta)?;
    if probes == 0 {
        return domain("probes must be at least 1");
    }
    let xi: Box<dyn Fn(f64) -> u64> = match &model.model {
        Model::Matrix { .. } => Box::new(|x| sample.iter().filter(|&&u| model.distance(u, x) < delta).count() as u64),
        _ => {
            let mut sorted = sample.to_vec();
            sorted.sort_by(f64::total_cmp);
            Box::new(move |x| {
                let lo = sorted.partition_point(|&y| y <= x - delta);
                let hi = sorted.partition_point(|&y| y < x + delta);
                hi.saturating_sub(lo) as u64
            })
        }
    };
    if let Some(atoms) = model.atoms() {
        let acc: KahanSum = atoms.iter().filter(|&&(x, _)| xi(x) == r).map(|a| a.1).collect();
        return Ok(acc.value());
    }
    let xs = model.sample(probes as usize, &mut seed.rng(replicate))?;
    Ok(xs.iter().filter(|&&x| xi(x) == r).count() as f64 / probes as f64)
}
