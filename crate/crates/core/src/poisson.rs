//! Occupancy when the sample size is a Poisson count with mean `Λ`.

use crate::bounds::TgProblem;
use crate::dist::{Distribution, EnvelopeSide};
use crate::error::{domain, Result};
use crate::estimate::SampleSummary;
use crate::exact::Certified;
use crate::numerics::{c_bar_r, ln_gamma, lower_incomplete_gamma};
use crate::report::{BoundResult, Condition, Side, Verdict};
use crate::simulate::{Sampler, SeedSpec};
use crate::sums::{sum_atoms, Kernel};
use rand_distr::{Distribution as _, Poisson};
use serde::{Deserialize, Serialize};

/// Intensity `λ(u)` of the arrival process, with `Λ_t = ∫₀ᵗ λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityFn {
    Constant { lambda: f64 },
    /// `λ(u) = a u^b`, `b > -1`
    Power { a: f64, b: f64 },
}

impl IntensityFn {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntensityFn::Constant { lambda } if lambda >= 0.0 && lambda.is_finite() => Ok(()),
            IntensityFn::Power { a, b } if a >= 0.0 && a.is_finite() && b > -1.0 && b.is_finite() => Ok(()),
            other => domain(format!("invalid intensity {other:?}")),
        }
    }

    pub fn rate(&self, u: f64) -> f64 {
        match *self {
            IntensityFn::Constant { lambda } => lambda,
            IntensityFn::Power { a, b } => a * u.powf(b),
        }
    }

    /// `Λ_t`
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return domain(format!("t must be non-negative, got {t}"));
        }
        Ok(match *self {
            IntensityFn::Constant { lambda } => lambda * t,
            IntensityFn::Power { a, b } => a * t.powf(b + 1.0) / (b + 1.0),
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        domain(format!("Lambda must be positive and finite, got {lambda}"))
    }
}

/// `E M_r(t) = Λ^r/r! Σ_a p_a^{1+r} e^{-Λ p_a}`
pub fn exact_em_poisson_certified(d: &Distribution, lambda: f64, r: u64) -> Result<Certified> {
    check_lambda(lambda)?;
    let rf = r as f64;
    let kernel = Kernel::Pois { ln_coef: rf * lambda.ln() - ln_gamma(rf + 1.0), j: rf + 1.0, lambda };
    Ok(sum_atoms(d, &kernel, 1.0, 0)?.into())
}

pub fn exact_em_poisson(d: &Distribution, lambda: f64, r: u64) -> Result<f64> {
    Ok(exact_em_poisson_certified(d, lambda, r)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonVariant {
    Adaptt,
    Boundpoiss,
}

impl PoissonVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            PoissonVariant::Adaptt => "adaptt",
            PoissonVariant::Boundpoiss => "boundpoiss",
        }
    }
}

/// Upper bounds on `E M_r(t)` in terms of `Λ = Λ_t`.
pub fn upper_poisson(d: &Distribution, lambda: f64, r: u64, variant: PoissonVariant) -> Result<BoundResult> {
    check_lambda(lambda)?;
    let rf = r as f64;
    match variant {
        PoissonVariant::Adaptt => {
            // 2^{1+r}Λ^r/r! ∫₀^x u^r e^{-Λu/2} du = 4^{1+r}/Λ · P(r+1, Λx/2)
            let problem = TgProblem {
                phi_coef: c_bar_r(r) / lambda,
                psi_coef: 4f64.powf(1.0 + rf) / lambda,
                b: 2.0,
                kernel: Kernel::PoisSurv { s: r + 1, lambda },
            };
            let (v, e) = problem.optimize(d)?;
            Ok(BoundResult::new("adaptt", Side::Upper, v, Some(e)))
        }
        PoissonVariant::Boundpoiss => {
            let tag = "boundpoiss";
            let inapp = |c: Condition| Ok(BoundResult::inapplicable(tag, Side::Upper, c));
            if d.is_finite() {
                return inapp(Condition::new("infinite_support", false, "support is finite"));
            }
            let env = match d.envelope(EnvelopeSide::Upper) {
                Ok(e) => e,
                Err(e) => return inapp(Condition::new("upper_envelope", false, e.to_string())),
            };
            let mut res = BoundResult::new(tag, Side::Upper, 0.0, Some(1.0 / lambda));
            res.conditions.push(Condition::new("lambda_at_least_1", lambda >= 1.0, format!("Lambda = {lambda}")));
            res.conditions.push(Condition::new(
                "envelope_on_unit_interval",
                env.valid_up_to >= 1.0,
                format!("valid up to {}", env.valid_up_to),
            ));
            res.conditions.push(Condition::new("ell_non_increasing", env.ell.is_non_increasing(), format!("{:?}", env.ell)));
            let t = 1.0 + rf - env.alpha;
            let g = lower_incomplete_gamma(t, 0.5)?;
            let coef = c_bar_r(r) + (2.0 * (1.0 + rf) * 2f64.ln() - ln_gamma(rf + 1.0)).exp() * g;
            res.value = coef * lambda.powf(env.alpha - 1.0) * env.ell.eval(lambda);
            Ok(res.settle())
        }
    }
}

/// Exact value and both Poisson bounds, judged against each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub dist: String,
    pub lambda: f64,
    pub r: u64,
    pub exact: f64,
    pub exact_certificate: f64,
    pub bounds: Vec<BoundResult>,
    pub verdict: Verdict,
}

pub fn poisson_suite(d: &Distribution, lambda: f64, r: u64) -> Result<PoissonReport> {
    let exact = exact_em_poisson_certified(d, lambda, r)?;
    let mut bounds = vec![
        upper_poisson(d, lambda, r, PoissonVariant::Adaptt)?,
        upper_poisson(d, lambda, r, PoissonVariant::Boundpoiss)?,
    ];
    for b in &mut bounds {
        b.judge(exact.value);
    }
    let verdict = if bounds.iter().any(|b| b.verdict == Verdict::Fail) { Verdict::Fail } else { Verdict::Pass };
    Ok(PoissonReport { dist: d.label(), lambda, r, exact: exact.value, exact_certificate: exact.certificate, bounds, verdict })
}

/// Draw `n_t ~ Poisson(Λ_t)`, then an `n_t`-sample, from replicate stream
/// `replicate`.
pub fn sample_poissonized(d: &Distribution, intensity: &IntensityFn, t: f64, seed: SeedSpec, replicate: u64) -> Result<SampleSummary> {
    let lambda = intensity.cumulative(t)?;
    if !lambda.is_finite() {
        return domain("Lambda_t is not finite");
    }
    let mut rng = seed.rng(replicate);
    let n = if lambda > 0.0 {
        let p = Poisson::new(lambda).map_err(|e| crate::error::Error::Domain(e.to_string()))?;
        p.sample(&mut rng) as u64
    } else {
        0
    };
    let counts = Sampler::new(d)?.counts(n, &mut rng);
    Ok(SampleSummary::from_histogram(counts.iter().map(|&(a, c)| (a.to_string(), c)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{asymptotic_reference, AsymptoticKind};
    use crate::numerics::KahanSum;
    use crate::simulate::realized_km;
    use std::f64::consts::E;

    #[test]
    fn exact_values() {
        let u2 = Distribution::uniform(2).unwrap();
        assert!((exact_em_poisson(&u2, 2.0, 0).unwrap() - 1.0 / E).abs() < 1e-12);
        let lam = 3.5;
        assert!((exact_em_poisson(&Distribution::dirac(), lam, 0).unwrap() - (-lam).exp()).abs() < 1e-15);
        let u10 = Distribution::uniform(10).unwrap();
        assert!((exact_em_poisson(&u10, 10.0, 1).unwrap() - 1.0 / E).abs() < 1e-12);
        assert!(exact_em_poisson(&u10, 0.0, 1).is_err());
    }

    #[test]
    fn normalization() {
        let laws = [Distribution::uniform(10).unwrap(), Distribution::zipf(0.5).unwrap(), Distribution::geometric(0.9).unwrap()];
        for d in &laws {
            for lam in [1.0, 10.0, 100.0] {
                let top = (lam + 10.0 * f64::sqrt(lam) + 50.0) as u64;
                let total: KahanSum = (0..=top).map(|r| exact_em_poisson(d, lam, r).unwrap()).collect();
                assert!(total.value() >= 1.0 - 1e-10 && total.value() <= 1.0 + 1e-10, "{d} {lam}: {}", total.value());
            }
        }
    }

    #[test]
    fn c_bar_and_boundpoiss_value() {
        assert!((c_bar_r(0) - 1.0 / E).abs() < 1e-15);
        let z = Distribution::zipf(0.5).unwrap();
        let b = upper_poisson(&z, 100.0, 0, PoissonVariant::Boundpoiss).unwrap();
        let ctg = crate::bounds::upper_rv(&z, 100, 0, crate::bounds::RvVariant::Ctg, None).unwrap();
        assert!((b.value - ctg.value).abs() < 1e-14);
        assert!(!upper_poisson(&z, 0.5, 0, PoissonVariant::Boundpoiss).unwrap().applicable);
        let g = Distribution::geometric(0.5).unwrap();
        assert!(!upper_poisson(&g, 100.0, 0, PoissonVariant::Boundpoiss).unwrap().applicable);
    }

    #[test]
    fn adaptt_sandwich() {
        let u10 = Distribution::uniform(10).unwrap();
        let a = upper_poisson(&u10, 100.0, 0, PoissonVariant::Adaptt).unwrap();
        let exact = exact_em_poisson(&u10, 100.0, 0).unwrap();
        assert!((exact - (-10f64).exp()).abs() < 1e-15);
        assert!(a.value >= exact);
        for alpha in [0.3, 0.5, 0.7] {
            let z = Distribution::zipf(alpha).unwrap();
            for lam in [2.0, 10.0, 100.0, 1000.0] {
                for r in [0u64, 1, 2] {
                    let rep = poisson_suite(&z, lam, r).unwrap();
                    assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
                    let (ad, bp) = (&rep.bounds[0], &rep.bounds[1]);
                    assert!(bp.value >= ad.value, "alpha={alpha} lam={lam} r={r}");
                }
            }
        }
    }

    #[test]
    fn adaptt_grid_check() {
        // the breakpoint optimum is no larger than a fine grid of the objective
        let z = Distribution::zipf(0.5).unwrap();
        let lam = 50.0;
        let problem = TgProblem {
            phi_coef: c_bar_r(1) / lam,
            psi_coef: 16.0 / lam,
            b: 2.0,
            kernel: Kernel::PoisSurv { s: 2, lambda: lam },
        };
        let grid: Vec<f64> = (0..=400).map(|i| 10f64.powf(-6.0 + 6.0 * i as f64 / 400.0)).collect();
        let vals = problem.objective_many(&z, &grid).unwrap();
        let best = upper_poisson(&z, lam, 1, PoissonVariant::Adaptt).unwrap().value;
        assert!(vals.iter().all(|&v| v >= best - 1e-14));
    }

    #[test]
    fn asymptotic_trend() {
        let z = Distribution::zipf(0.5).unwrap();
        let (alpha, zz) = z.zipf_params().unwrap();
        let lam = 1e6;
        for r in [0u64, 1] {
            let e = exact_em_poisson(&z, lam, r).unwrap();
            let reference = asymptotic_reference(alpha, zz.powf(-alpha), lam, r, AsymptoticKind::PoissonProbabilities).unwrap();
            assert!((e / reference - 1.0).abs() < 0.1, "r={r}: {e} vs {reference}");
        }
    }

    #[test]
    fn intensity_forms() {
        let c = IntensityFn::Constant { lambda: 2.0 };
        assert_eq!(c.cumulative(3.0).unwrap(), 6.0);
        let p = IntensityFn::Power { a: 1.0, b: 0.5 };
        assert!((p.cumulative(4.0).unwrap() - 16.0 / 3.0).abs() < 1e-14);
        assert!(IntensityFn::Power { a: 1.0, b: -1.0 }.validate().is_err());
        let parsed: IntensityFn = serde_json::from_str(r#"{"form":"power","a":1.0,"b":0.5}"#).unwrap();
        assert_eq!(parsed, p);
    }

    #[test]
    fn poissonized_sampling() {
        let dirac = Distribution::dirac();
        let c = IntensityFn::Constant { lambda: 1.0 };
        let s = sample_poissonized(&dirac, &c, 5.0, SeedSpec::new(1), 0).unwrap();
        assert_eq!(s.histogram.len() as u64, if s.n > 0 { 1 } else { 0 });
        assert_eq!(s, sample_poissonized(&dirac, &c, 5.0, SeedSpec::new(1), 0).unwrap());
        let reps = 10_000u64;
        let ns: Vec<f64> = (0..reps).map(|i| sample_poissonized(&dirac, &c, 5.0, SeedSpec::new(2), i).unwrap().n as f64).collect();
        let mean = ns.iter().sum::<f64>() / reps as f64;
        assert!((mean - 5.0).abs() <= 4.0 * (5.0f64 / reps as f64).sqrt(), "{mean}");

        let u2 = Distribution::uniform(2).unwrap();
        let c2 = IntensityFn::Constant { lambda: 2.0 };
        let ms: Vec<f64> = (0..reps)
            .map(|i| realized_km(&u2, &sample_poissonized(&u2, &c2, 1.0, SeedSpec::new(3), i).unwrap(), 0).unwrap().m)
            .collect();
        let mean = ms.iter().sum::<f64>() / reps as f64;
        let var = ms.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - 1.0 / E).abs() <= 4.0 * se, "{mean} se {se}");
    }
}
