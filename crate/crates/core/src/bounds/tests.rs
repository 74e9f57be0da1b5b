use super::*;
use crate::exact::exact_em;
use crate::numerics::{integrate_pieces, riemann_zeta};
use crate::report::Verdict;
use proptest::prelude::*;
use std::f64::consts::{E, PI};

fn zipf(a: f64) -> Distribution {
    Distribution::zipf(a).unwrap()
}

fn unif(m: u64) -> Distribution {
    Distribution::uniform(m).unwrap()
}

// γ(1/2, x) = sqrt(π) erf(sqrt(x)), frozen from a 30-digit evaluation
fn gamma_half(x: f64) -> f64 {
    match x {
        0.5 => 1.210_035_619_311_108_9,
        1.0 => 1.493_648_265_624_854_1,
        2.0 => 1.691_806_732_945_198_3,
        _ => unreachable!(),
    }
}

#[test]
fn tg_reference_values() {
    let b = upper_tg(&unif(10), 100, 0, 2.0).unwrap();
    assert!((b.value - 10.0 / (100.0 * E)).abs() < 1e-15);
    assert_eq!(b.optimizer_eps, Some(0.0));
    let dirac = upper_tg(&Distribution::dirac(), 10, 10, 2.0).unwrap();
    assert!((dirac.value - 1.0).abs() < 1e-15);
    let z = upper_tg(&zipf(0.5), 100, 0, 2.0).unwrap();
    let exact = exact_em(&zipf(0.5), 100, 0).unwrap();
    assert!(z.value >= exact && z.value <= 0.41, "{}", z.value);
    assert!(upper_tg(&unif(10), 10, 0, 1.0).is_err());
}

#[test]
fn tg_breakpoint_optimum_beats_log_grid() {
    let laws = [unif(10), zipf(0.3), zipf(0.5), zipf(0.7), Distribution::geometric(0.9).unwrap(),
        Distribution::explicit(&[0.5, 0.2, 0.2, 0.07, 0.03]).unwrap()];
    for d in &laws {
        for (n, r) in [(10u64, 0u64), (100, 1), (1000, 2)] {
            let opt = upper_tg(d, n, r, 2.0).unwrap().value;
            let grid: Vec<f64> = (0..1000).map(|i| 10f64.powf(-8.0 * (1.0 - i as f64 / 999.0))).collect();
            let vals = tg_objective(d, n, r, 2.0, &grid).unwrap();
            for (eps, v) in grid.iter().zip(vals) {
                assert!(v >= opt - 1e-12, "{d} n={n} r={r} eps={eps}: {v} < {opt}");
            }
        }
    }
}

#[test]
fn tg_general_b_is_valid() {
    let d = zipf(0.5);
    let exact = exact_em(&d, 100, 0).unwrap();
    for b in [1.5, 2.0, 3.0, 8.0] {
        let v = upper_tg(&d, 100, 0, b).unwrap().value;
        assert!(v >= exact, "b={b}");
    }
}

#[test]
fn finite_bound_values() {
    assert!((upper_finite(&unif(10), 100, 0).unwrap().value - 0.036_787_944_117_144_23).abs() < 1e-15);
    let v1 = upper_finite(&unif(10), 100, 1).unwrap().value;
    assert!((v1 - 2.0 * E / PI.sqrt() * 0.1).abs() < 1e-15);
    assert!((v1 - 0.3067).abs() < 1e-4);
    assert!(!upper_finite(&zipf(0.5), 10, 0).unwrap().applicable);
}

#[test]
fn rv_bound_values() {
    let ell = 6f64.sqrt() / PI;
    let ctg = upper_rv(&zipf(0.5), 100, 0, RvVariant::Ctg, None).unwrap();
    let want = ((-1.0f64).exp() + 4.0 * gamma_half(0.5)) * ell / 10.0;
    assert!((ctg.value - want).abs() < 1e-12, "{} vs {want}", ctg.value);
    assert!((ctg.value - 0.406_06).abs() < 1e-5);

    // second term: c₂ n^{α-(1+β)/2} ℓ°_β(n) with ℓ°_β(n) = ℓ (2n)^{-(1-β)/2}/sqrt(1-β)
    let ctg2 = upper_rv(&zipf(0.5), 100, 0, RvVariant::Ctg2, Some(0.5)).unwrap();
    let first = (-1.0f64).exp() * ell / 10.0;
    let circ = ell * 200f64.powf(-0.25) / 0.5f64.sqrt();
    let k2 = 4.0 * 0.5f64.powf(0.25) * gamma_half(1.0).sqrt();
    let want2 = first + k2 * 100f64.powf(-0.25) * circ;
    assert!((ctg2.value - want2).abs() < 1e-12, "{} vs {want2}", ctg2.value);
    assert!((first - 0.028_683).abs() < 1e-6);
    assert!((circ - 0.293_21).abs() < 1e-5);

    // α = 1, r = 0: γ(0, 1/2) = +∞
    let env = RvEnvelope { alpha: 1.0, ell: SlowlyVarying::Constant { c: 1.0 }, valid_up_to: 1.0 };
    let d = zipf(0.5).with_envelope(EnvelopeSide::Upper, env);
    assert_eq!(upper_rv(&d, 100, 0, RvVariant::Ctg, None).unwrap().value, f64::INFINITY);

    assert!(!upper_rv(&unif(10), 100, 0, RvVariant::Ctg, None).unwrap().applicable);
    let geo = upper_rv(&Distribution::geometric(0.5).unwrap(), 100, 0, RvVariant::Ctg, None).unwrap();
    assert!(!geo.applicable);
    assert!(geo.conditions.iter().any(|c| c.name == "ell_non_increasing" && !c.holds));
    let geo2 = upper_rv(&Distribution::geometric(0.5).unwrap(), 100, 0, RvVariant::Ctg2, None).unwrap();
    assert!(geo2.applicable && geo2.value.is_finite());
    let bad_beta = upper_rv(&zipf(0.5), 100, 0, RvVariant::Ctg2, Some(-0.1)).unwrap();
    assert!(!bad_beta.applicable && bad_beta.value == f64::INFINITY);
}

#[test]
fn ctg2_second_term_matches_its_asymptotic_form() {
    let d = zipf(0.5);
    let (n, beta) = (1e6f64, 0.5f64);
    let ell = 6f64.sqrt() / PI;
    let full = upper_rv(&d, n as u64, 0, RvVariant::Ctg2, Some(beta)).unwrap().value;
    let second = full - (-1.0f64).exp() * ell / n.sqrt();
    let asym = c2(0.5, beta, 0).unwrap() * 2f64.powf(-(1.0 - beta) / 2.0) / (1.0 - beta).sqrt() * n.powf(-0.5) * ell;
    assert!((second / asym - 1.0).abs() < 0.05);
}

#[test]
fn ctg3_condition_is_recorded() {
    let small = upper_rv(&zipf(0.5), 2, 0, RvVariant::Ctg3, None).unwrap();
    assert!(!small.applicable);
    assert!(small.conditions.iter().any(|c| c.name == "kappa_plus_at_2_over_n" && !c.holds));
    let big = upper_rv(&zipf(0.5), 10_000, 0, RvVariant::Ctg3, None).unwrap();
    assert!(big.applicable);
    assert!(big.value >= exact_em(&zipf(0.5), 10_000, 0).unwrap());
}

// brute-force κ± on a finite law: the ratio only changes at {p, 2p}
fn kappa_brute(masses: &[f64], plus: bool, x: f64) -> f64 {
    let nu = |e: f64| masses.iter().filter(|&&p| p >= e).count() as f64;
    let ratio = |u: f64| {
        let (a, b) = if plus { (nu(u / 2.0), nu(u)) } else { (nu(u), nu(u / 2.0)) };
        if b == 0.0 {
            if a == 0.0 { 1.0 } else { f64::INFINITY }
        } else {
            a / b
        }
    };
    let mut pts: Vec<f64> = masses.iter().flat_map(|&p| [p, 2.0 * p]).filter(|&u| u <= x).collect();
    pts.push(x);
    // values just below breakpoints as well
    let extra: Vec<f64> = pts.iter().map(|u| u * (1.0 - 1e-9)).collect();
    pts.into_iter().chain(extra).fold(1.0, |m, u| m.max(ratio(u)))
}

// θ± by adaptive quadrature of the defining integrals
fn theta_brute(masses: &[f64], n: u64, r: u64, plus: bool, eps: f64) -> f64 {
    let nu = |e: f64| masses.iter().filter(|&&p| p >= e).count() as f64;
    let (nf, rf) = (n as f64, r as f64);
    let f = |u: f64| {
        if plus {
            (kappa_brute(masses, true, 2.0 * u) - 1.0) * nu(u) * u.powf(rf) * (1.0 - u / 2.0).powf(nf - rf)
        } else {
            (1.0 - kappa_brute(masses, false, 2.0 * u)) * nu(u) * u.powf(rf) * (1.0 - 2.0 * u).powf(nf - rf)
        }
    };
    let mut pts: Vec<f64> = masses.iter().flat_map(|&p| [p, p / 2.0]).filter(|&u| u > 0.0 && u < eps).collect();
    pts.push(0.0);
    pts.push(eps);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let integral = integrate_pieces(f, &pts, 1e-14, 1e-11).unwrap();
    let pre = if plus { 2f64.powf(1.0 + rf) } else { 2f64.powf(-rf) };
    pre * choose(n, r) * integral
}

#[test]
fn kappa_bounds_match_quadrature_oracle() {
    let masses = [0.35, 0.25, 0.15, 0.1, 0.08, 0.04, 0.03];
    let d = Distribution::explicit(&masses).unwrap();
    let nu = |e: f64| masses.iter().filter(|&&p| p >= e).count() as f64;
    for (n, r) in [(5u64, 0u64), (20, 1), (60, 2)] {
        let (nf, rf) = (n as f64, r as f64);
        // tgplus: inf over ε ∈ (0, p★/2] of c(r)ν(ε)/n + θ⁺(ε), sampled densely
        let eps_max = 0.175;
        let mut cands: Vec<f64> = masses.iter().flat_map(|&p| [p, p / 2.0]).filter(|&e| e < eps_max).map(|e| e * (1.0 + 1e-9)).collect();
        cands.push(eps_max);
        cands.push(1e-12);
        let oracle = cands.iter().map(|&e| c_r(r) * nu(e) / nf + theta_brute(&masses, n, r, true, e)).fold(f64::INFINITY, f64::min);
        let got = upper_tgplus(&d, n, r).unwrap().value;
        assert!((got - oracle).abs() < 1e-8 * oracle.max(1e-3), "tgplus n={n} r={r}: {got} vs {oracle}");

        let mut cands: Vec<f64> = masses.iter().copied().filter(|&p| p <= 0.5).collect();
        cands.push(0.5);
        let phi = |e: f64| choose(n, r) * nu(e) * e.powf(rf + 1.0) * (1.0 - 0.35f64).powf(nf - rf);
        let oracle = cands.iter().map(|&e| phi(e) + theta_brute(&masses, n, r, false, e)).fold(0.0, f64::max);
        let got = lower_low(&d, n, r).unwrap().value;
        assert!((got - oracle).abs() < 1e-8 * oracle.max(1e-6), "low n={n} r={r}: {got} vs {oracle}");
    }
}

#[test]
fn tgplus_reference_values() {
    let u = upper_tgplus(&unif(10), 100, 0).unwrap();
    assert!((u.value - 0.036_787_944_117_144_23).abs() < 1e-15);
    let dirac = upper_tgplus(&Distribution::dirac(), 10, 0).unwrap();
    assert!((dirac.value - (-1.0f64).exp() / 10.0).abs() < 1e-15);
    let z = zipf(0.5);
    let tg = upper_tg(&z, 100, 0, 2.0).unwrap();
    let eps = tg.optimizer_eps.unwrap();
    if eps > 0.0 && z.kappa(KappaSign::Plus, 2.0 * eps).unwrap() <= 2.0 {
        assert!(upper_tgplus(&z, 100, 0).unwrap().value <= tg.value + 1e-12);
    }
    assert!(!upper_tgplus(&z, 5, 5).unwrap().applicable);
}

#[test]
fn low_reference_values() {
    let u = lower_low(&unif(10), 10, 0).unwrap();
    assert!((u.value - 0.9f64.powi(10)).abs() < 1e-15);
    assert!((u.value - 0.348_678_44).abs() < 1e-8);
    assert_eq!(lower_low(&Distribution::dirac(), 5, 0).unwrap().value, 0.0);
    let z = lower_low(&zipf(0.5), 100, 0).unwrap().value;
    assert!(z > 0.0 && z <= exact_em(&zipf(0.5), 100, 0).unwrap());
}

#[test]
fn clow_reference_values() {
    let d = zipf(0.5);
    let v = lower_clow(&d, 10_000, 0).unwrap();
    assert!(v.applicable, "{:?}", v.conditions);
    let z = riemann_zeta(2.0).unwrap();
    let p_star = 1.0 / z;
    let ell = z.powf(-0.5) / 2.0;
    let oracle = 0.5 * ((1.0 - p_star).powi(10_000) + (1.0 - 0.5f64.sqrt()) * gamma_half(2.0) / (2f64.sqrt() * 4.0)) * ell / 100.0;
    assert!((v.value - oracle).abs() < 1e-15, "{} vs {oracle}", v.value);
    assert!(((2f64.sqrt() - 1.0) * gamma_half(2.0) / 32.0 * z.powf(-0.5) / 100.0 - 1.7075e-4).abs() < 1e-7);
    assert!(v.value <= exact_em(&d, 10_000, 0).unwrap());
    assert!(!lower_clow(&unif(10), 100, 0).unwrap().applicable);
    assert!(!lower_clow(&d, 3, 0).unwrap().applicable);
    assert!(!lower_clow(&Distribution::geometric(0.5).unwrap(), 100, 0).unwrap().applicable);
}

#[test]
fn clow_threshold_is_sharp() {
    let d = zipf(0.5);
    for r in [0u64, 1] {
        let n0 = clow_n0(&d, r).unwrap().expect("threshold below the cap");
        assert!(lower_clow(&d, n0, r).unwrap().applicable);
        if n0 > 2.max(1 + r) {
            assert!(!lower_clow(&d, n0 - 1, r).unwrap().applicable);
        }
        for n in [n0, n0 + 1, 2 * n0, 10 * n0] {
            assert!(lower_clow(&d, n, r).unwrap().applicable, "r={r} n={n}");
        }
    }
    assert_eq!(clow_n0(&unif(10), 0).unwrap(), None);
}

#[test]
fn od10_reference_values() {
    let (lo, up) = od10_bounds(&unif(10), 10).unwrap();
    assert!((lo.value - 0.9f64.powi(10)).abs() < 1e-15);
    assert!((up.value - 0.9f64.powi(10)).abs() < 1e-15);
    assert_eq!(lo.optimizer_eps, Some(0.1));
    let (lo, up) = od10_bounds(&Distribution::dirac(), 5).unwrap();
    assert_eq!((lo.value, up.value), (0.0, 0.0));
    for d in [zipf(0.5), zipf(0.3), Distribution::geometric(0.9).unwrap()] {
        let exact = exact_em(&d, 100, 0).unwrap();
        let (lo, up) = od10_bounds(&d, 100).unwrap();
        assert!(lo.value <= exact && exact <= up.value, "{d}");
        assert!(lo.value > 0.0);
    }
}

#[test]
fn bk12_reference_values() {
    assert!((bk12_upper(&unif(10), 5, 1.0).unwrap().value - (-0.5f64).exp()).abs() < 1e-15);
    assert!((bk12_upper(&unif(10), 20, 1.0).unwrap().value - 10.0 / (20.0 * E)).abs() < 1e-15);
    assert!(!bk12_upper(&zipf(0.5), 100, 1.0).unwrap().applicable);
    let g = bk12_upper(&Distribution::geometric(0.5).unwrap(), 100, 1.0).unwrap();
    assert!(g.applicable && !g.in_sandwich && !g.notes.is_empty());
}

#[test]
fn accrual_power_law() {
    // C₋ = C₊ = C collapses the lower constant to Cα/(1-α)
    let (c, a) = (0.8f64, 0.5f64);
    assert!(((c / (1.0 - a) - c) - c * a / (1.0 - a)).abs() < 1e-15_f64);

    let d = zipf(0.5);
    let z = riemann_zeta(2.0).unwrap();
    let (lo, up) = accrual_powerlaw_bounds(z.powf(-0.5) / 2.0, z.powf(-0.5), 0.5, 100, &d).unwrap();
    assert!(!lo.applicable && !up.applicable);
    assert!(lo.conditions.iter().any(|c| c.name == "power_law_envelope" && !c.holds));

    for alpha in [0.5, 0.7] {
        let d = zipf(alpha);
        let z = riemann_zeta(1.0 / alpha).unwrap();
        let upto = 1.0 / (2f64.powf(1.0 / alpha) * z);
        for n in [100u64, 1000, 10_000] {
            let (lo, up) = accrual_powerlaw_bounds_on(z.powf(-alpha) / 2.0, z.powf(-alpha), alpha, n, &d, upto).unwrap();
            assert!(lo.applicable && up.applicable, "{:?}", lo.conditions);
            let exact = exact_em(&d, n, 0).unwrap();
            assert!(lo.value <= exact && exact <= up.value, "alpha={alpha} n={n}");
        }
    }
}

#[test]
fn liminf_reference_values() {
    let c = liminf_chain(&zipf(0.5), 100, 0).unwrap();
    assert_eq!((c.a_n, c.k_n), (8, 105));
    let p8 = 1.0 / (64.0 * PI * PI / 6.0);
    let want = (1.0 - p8) * (1.0 - 1.0 / 105.0f64).powi(105);
    assert!((c.certified_lower - want).abs() < 1e-14);
    // 30-digit reference
    assert!((c.certified_lower - 0.362_642_920_267_422_1).abs() < 1e-15);
    assert!(c.holds && c.certified_lower < (-1.0f64).exp());

    let g = liminf_chain(&Distribution::geometric(0.5).unwrap(), 10, 0).unwrap();
    assert_eq!((g.a_n, g.k_n), (4, 16));
    assert!((g.certified_lower - 0.9375 * (15.0f64 / 16.0).powi(16)).abs() < 1e-14);
    assert!((g.certified_lower - 0.333_819_497_298_556).abs() < 1e-13);
    assert!(liminf_chain(&unif(10), 10, 0).is_err());
}

#[test]
fn suite_reference_points() {
    let rep = bound_suite(&unif(10), 10, 0).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    let target = 0.9f64.powi(10);
    for tag in ["low", "od10_lower", "od10_upper"] {
        assert!((rep.bound(tag).unwrap().value - target).abs() < 1e-15, "{tag}");
    }
    let dirac = bound_suite(&Distribution::dirac(), 5, 5).unwrap();
    assert!((dirac.exact - 1.0).abs() < 1e-15);
    assert!((dirac.bound("tg").unwrap().value - 1.0).abs() < 1e-15);
    let z = bound_suite(&zipf(0.5), 100, 1).unwrap();
    assert_eq!(z.verdict, Verdict::Pass, "{z:#?}");
    assert!(z.tightest_upper.is_some() && z.tightest_lower.is_some());
    for b in &z.bounds {
        assert!(b.verdict != Verdict::Fail);
        if !b.applicable {
            assert!(b.value == f64::INFINITY || b.value == 0.0);
        }
        if let Some(e) = b.optimizer_eps {
            assert!((0.0..=1.0).contains(&e));
        }
    }
}

#[test]
fn relaxed_forms_dominate_tg() {
    for d in [zipf(0.3), zipf(0.5), zipf(0.7)] {
        for n in [10u64, 100, 1000] {
            for r in [0u64, 1, 2] {
                let tg = upper_tg(&d, n, r, 2.0).unwrap().value;
                let ctg = upper_rv(&d, n, r, RvVariant::Ctg, None).unwrap();
                assert!(ctg.value >= tg, "{d} n={n} r={r}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_on_random_finite_laws(w in proptest::collection::vec(0.01f64..1.0, 1..12), n in 1u64..300, r in 0u64..6) {
        prop_assume!(r <= n);
        let total: f64 = w.iter().sum();
        let mut masses: Vec<f64> = w.iter().map(|x| x / total).collect();
        let drift: f64 = 1.0 - masses.iter().sum::<f64>();
        masses[0] += drift;
        let d = Distribution::explicit(&masses).unwrap();
        let rep = bound_suite(&d, n, r).unwrap();
        for b in &rep.bounds {
            prop_assert!(b.verdict != Verdict::Fail, "{} {} vs exact {}", b.source, b.value, rep.exact);
        }
    }
}
