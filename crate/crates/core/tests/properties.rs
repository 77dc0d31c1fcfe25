use kgres::algebra::{CubicNonlinearity, CubicTerm, Factor, Mass, MassVector};
use kgres::analysis::{fit_decay, DecayModel};
use kgres::condition::{check_condition, condition_ratio, ConditionMatrix, SamplingSpec};
use kgres::profile::HyperbolicChart;
use kgres::reduced::{reduced_oracle, HyperbolaPoint, ReducedSystem};
use num_complex::Complex;
use proptest::prelude::*;

mod common;
use common::{max_error, term_scale};

fn factor() -> impl Strategy<Value = (usize, u8)> {
    (0usize..4, 0u8..3)
}

prop_compose! {
    fn system()(n in 1usize..=4)(
        nums in prop::collection::vec(1i64..=12, n),
        dens in prop::collection::vec(prop::sample::select(vec![1i64, 2, 4]), n),
        terms in prop::collection::vec((0usize..4, [factor(), factor(), factor()], -2.0f64..2.0), 1..=6),
        n in Just(n),
    ) -> ReducedSystem<f64> {
        let mut masses: Vec<Mass> = nums.iter().zip(&dens).map(|(p, q)| Mass::new(*p, *q)).collect();
        masses.sort();
        let terms = terms
            .into_iter()
            .map(|(target, fs, coeff)| {
                let f = fs.map(|(k, d)| {
                    let k = k % n;
                    match d {
                        0 => Factor::u(k),
                        1 => Factor::dt(k),
                        _ => Factor::dx(k),
                    }
                });
                CubicTerm::new(target % n, f, coeff)
            })
            .collect();
        let f = CubicNonlinearity::new(n, terms).unwrap();
        ReducedSystem::new(MassVector::new(masses).unwrap(), f).unwrap()
    }
}

fn amplitude(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| Complex::new(a, b)), n)
}

fn close(a: &[Complex<f64>], b: &[Complex<f64>], scale: f64, rel: f64) -> bool {
    max_error(a, b) <= rel * scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_matches_oracle((sys, y, z) in system().prop_flat_map(|s| {
        let n = s.n_components();
        (Just(s), amplitude(n), -3.0f64..3.0)
    })) {
        let w = HyperbolaPoint::new(z);
        let fast = sys.eval_reduced(&w, &y);
        let slow = reduced_oracle(&sys, &w, &y);
        prop_assert!(close(&fast, &slow, term_scale(&sys, &w, &y), 1e-10), "{fast:?} vs {slow:?}");
    }

    #[test]
    fn cubic_homogeneity((sys, y, z, lambda) in system().prop_flat_map(|s| {
        let n = s.n_components();
        (Just(s), amplitude(n), -3.0f64..3.0, 0.1f64..3.0)
    })) {
        let w = HyperbolaPoint::new(z);
        let base = sys.eval_reduced(&w, &y);
        let scaled: Vec<_> = y.iter().map(|c| c * lambda).collect();
        let expect: Vec<_> = base.iter().map(|c| c * lambda.powi(3)).collect();
        prop_assert!(close(&sys.eval_reduced(&w, &scaled), &expect, term_scale(&sys, &w, &scaled), 1e-12));
    }

    #[test]
    fn gauge_covariance((sys, y, z, theta) in system().prop_flat_map(|s| {
        let n = s.n_components();
        (Just(s), amplitude(n), -3.0f64..3.0, -7.0f64..7.0)
    })) {
        let w = HyperbolaPoint::new(z);
        let m = sys.masses_real().to_vec();
        let rotated: Vec<_> = y.iter().zip(&m).map(|(c, mk)| c * Complex::from_polar(1.0, mk * theta)).collect();
        let expect: Vec<_> = sys
            .eval_reduced(&w, &y)
            .iter()
            .zip(&m)
            .map(|(c, mj)| c * Complex::from_polar(1.0, mj * theta))
            .collect();
        prop_assert!(close(&sys.eval_reduced(&w, &rotated), &expect, term_scale(&sys, &w, &y), 1e-12));
    }

    #[test]
    fn chart_round_trip(b in 0.1f64..5.0, extra in 0.01f64..10.0, tau_scale in 1.0f64..50.0, z in -4.0f64..4.0) {
        let tau0 = 1.0 + 2.0 * b + extra;
        let chart = HyperbolicChart::new(b, tau0, 4.0, 3).unwrap();
        let tau = tau0 * tau_scale;
        let (t, x) = chart.to_tx(tau, z);
        prop_assert!(t >= 0.0 && x.abs() < t + 2.0 * b);
        let (tau2, z2) = chart.from_tx(t, x).unwrap();
        prop_assert!((tau2 - tau).abs() <= 1e-10 * tau);
        prop_assert!((z2 - z).abs() <= 1e-9);
    }

    #[test]
    fn fit_is_scale_invariant(a in 0.1f64..1.5, gamma in -1.0f64..1.0, c in 1e-6f64..1e6) {
        let series: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 20.0 * 500f64.powf(i as f64 / 199.0);
                (t, t.powf(-a) * t.ln().powf(-gamma))
            })
            .collect();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, y)| (t, c * y)).collect();
        let f1 = fit_decay(&series, Some((20.0, 1e4)), DecayModel::full()).unwrap();
        let f2 = fit_decay(&scaled, Some((20.0, 1e4)), DecayModel::full()).unwrap();
        prop_assert!((f1.a - a).abs() < 1e-8 && (f1.gamma - gamma).abs() < 1e-8);
        prop_assert!((f1.a - f2.a).abs() < 1e-9 && (f1.gamma - f2.gamma).abs() < 1e-9);
        prop_assert!(f1.residual < 1e-10);
    }

    #[test]
    fn fit_window_stability(a in 0.2f64..1.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let series: Vec<(f64, f64)> = (0..400)
            .map(|i| {
                let t = 10.0 + i as f64 * 2.5;
                (t, t.powf(-a) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let full = fit_decay(&series, Some((100.0, 1000.0)), DecayModel::power_law()).unwrap();
        let half = fit_decay(&series, Some((550.0, 1000.0)), DecayModel::power_law()).unwrap();
        prop_assert!((full.a - half.a).abs() < 0.05, "{} vs {}", full.a, half.a);
    }
}

#[test]
fn worst_point_reproduces_ratio() {
    // the dissipative 1:3 pair checked with a deliberately poor matrix
    let f = CubicNonlinearity::new(
        2,
        vec![
            CubicTerm::new(0, [Factor::dt(0); 3], -1.0),
            CubicTerm::new(0, [Factor::dt(1), Factor::dt(1), Factor::dt(0)], -1.0),
            CubicTerm::new(0, [Factor::dt(0), Factor::dt(0), Factor::dt(1)], -1.0),
            CubicTerm::new(1, [Factor::dt(0), Factor::dt(0), Factor::dt(1)], -1.0),
            CubicTerm::new(1, [Factor::dt(1); 3], -1.0),
            CubicTerm::new(1, [Factor::dt(0); 3], 1.0),
        ],
    )
    .unwrap();
    let sys: ReducedSystem<f64> = ReducedSystem::new(MassVector::from_integers(&[1, 3]).unwrap(), f).unwrap();
    for diag in [[1.0, 9.0], [1.0, 1.0], [9.0, 1.0]] {
        let a = ConditionMatrix::diagonal(&diag).unwrap();
        let r = check_condition(&a, &sys, 3, &SamplingSpec::default()).unwrap();
        let again = condition_ratio(&a, &sys, 3, r.worst_point.z, &r.worst_point.y);
        assert!((again - r.worst_ratio).abs() <= 1e-12 * r.worst_ratio.abs().max(1.0));
    }
}
