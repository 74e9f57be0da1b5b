use occupancy_core::estimate::{turing, SampleSummary};
use occupancy_core::exact::exact_em;
use occupancy_core::metric::{bkgen_upper, exact_em_delta, nu_delta, xi_delta, MetricModel, MetricSpec, SegmentLaw};
use occupancy_core::poisson::{exact_em_poisson, upper_poisson, PoissonVariant};
use occupancy_core::simulate::{realized_km, sample_counts, SeedSpec};
use occupancy_core::Distribution;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, 1..10)
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_mass_is_monotone_in_delta(w in weights(), x in 0.0f64..1.0, d1 in 0.001f64..1.0, d2 in 0.001f64..1.0) {
        let n = w.len();
        let breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let m = MetricModel::from_spec(&MetricSpec::Segment { a: 0.0, b: 1.0, law: SegmentLaw::Piecewise { breaks, weights: w } }).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let (a, b) = (m.ball_mass(x, lo), m.ball_mass(x, hi));
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b + 1e-15);
    }

    #[test]
    fn nu_delta_is_non_increasing(w in weights(), delta in 0.01f64..0.6, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let coords: Vec<f64> = (0..w.len()).map(|i| i as f64 * 0.3).collect();
        let m = MetricModel::points(&coords, &w).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(nu_delta(&m, delta, lo).unwrap() >= nu_delta(&m, delta, hi).unwrap());
        prop_assert!(nu_delta(&m, delta, lo).unwrap() <= 1.0 / lo + 1e-12);
    }

    #[test]
    fn covering_bound_dominates_exact(w in weights(), spread in 0.05f64..2.0, delta in 0.01f64..1.0, n in 1u64..500) {
        let coords: Vec<f64> = (0..w.len()).map(|i| (i as f64 * spread).sin() * 3.0).collect();
        let m = MetricModel::points(&coords, &w).unwrap();
        let exact = exact_em_delta(&m, n, delta, 0, None).unwrap();
        let b = bkgen_upper(&m, n, delta, &[]).unwrap();
        prop_assert!(b.value >= exact - 1e-12, "{} < {}", b.value, exact);
    }

    #[test]
    fn separated_atoms_reduce_to_discrete(w in weights(), n in 1u64..200, r in 0u64..5) {
        prop_assume!(r <= n);
        let p = normalize(&w);
        let coords: Vec<f64> = (0..p.len()).map(|i| i as f64).collect();
        let m = MetricModel::points(&coords, &p).unwrap();
        let d = Distribution::explicit(&p).unwrap();
        let a = exact_em_delta(&m, n, 0.9, r, None).unwrap();
        let b = exact_em(&d, n, r).unwrap();
        prop_assert!((a - b).abs() < 1e-13, "{} vs {}", a, b);
    }

    #[test]
    fn xi_counts_strictly_inside(pts in proptest::collection::vec(-5.0f64..5.0, 0..30), x in -5.0f64..5.0, delta in 0.01f64..3.0) {
        let k = xi_delta(&pts, x, delta);
        prop_assert!(k as usize <= pts.len());
        prop_assert_eq!(xi_delta(&pts, x, delta + 10.0), pts.len() as u64);
    }

    #[test]
    fn poisson_upper_dominates_exact(w in weights(), lambda in 0.5f64..500.0, r in 0u64..4) {
        let d = Distribution::explicit(&normalize(&w)).unwrap();
        let exact = exact_em_poisson(&d, lambda, r).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&exact));
        let b = upper_poisson(&d, lambda, r, PoissonVariant::Adaptt).unwrap();
        if b.applicable {
            prop_assert!(b.value >= exact - 1e-10);
        }
    }

    #[test]
    fn realized_masses_partition_one(w in weights(), n in 1u64..300, seed in 0u64..1000) {
        let d = Distribution::explicit(&normalize(&w)).unwrap();
        let s = sample_counts(&d, n, SeedSpec::new(seed), 0).unwrap();
        let total: f64 = (0..=n).map(|r| realized_km(&d, &s, r).unwrap().m).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let ks: u64 = (1..=n).map(|r| s.k(r) * r).sum();
        prop_assert_eq!(ks, n);
    }
}

#[test]
fn turing_on_a_fixed_sample() {
    let s = SampleSummary::from_tokens(["a", "b", "b", "c", "c", "c"].iter().map(|t| t.to_string()));
    assert_eq!(s.k(1), 1);
    assert!((turing(&s, 0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!((turing(&s, 1).unwrap() - 2.0 / 6.0).abs() < 1e-15);
}
