mod common;

use amplitude_core::birth_death::*;
use amplitude_core::simulate::{monte_carlo, sample_path};
use amplitude_core::dirichlet_eigenpair;
use common::rng;
use proptest::prelude::*;
use rand::Rng;

struct Ladder;

impl RateFamily for Ladder {
    fn birth(&self, _x: usize) -> f64 {
        1.0
    }
    fn death(&self, _x: usize) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        "ladder".into()
    }
}

#[test]
fn hitting_time_against_simulation() {
    let exact = hitting_time_from(&Ladder, 5).unwrap();
    assert_eq!(exact, 10.0);
    // the truncation at 5 is the chain reflected at 5; state 1 is hit before absorption
    let g = truncate_neumann(&Ladder, 5).unwrap();
    let est = monte_carlo(100_000, 21, |r| {
        let out = sample_path(&g, 4, Some(0), r)?;
        assert!(out.hit_target);
        Ok(out.elapsed)
    })
    .unwrap();
    assert!(est.z_score(exact).abs() <= 3.0, "{est:?}");
}

#[test]
fn hitting_times_increase_to_the_s_series() {
    let v = entrance_check(&PoissonAccelerated, 2000).unwrap();
    let s = *v.s_partial_sums.last().unwrap();
    let t: Vec<f64> = [10, 100, 1000].iter().map(|&x| hitting_time_from(&PoissonAccelerated, x).unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(t[2] <= s);
}

#[test]
fn verdicts_are_consistent_across_cutoffs() {
    let families: Vec<Box<dyn RateFamily>> =
        vec![Box::new(Poisson), Box::new(PoissonAccelerated), Box::new(RhoRates { rho: 0.5 }), Box::new(RhoRates { rho: 2.0 })];
    for f in &families {
        let vs: Vec<EntranceVerdict> = [100, 1000, 10_000].iter().map(|&c| entrance_check(f.as_ref(), c).unwrap()).collect();
        for w in vs.windows(2) {
            for (a, b) in [
                (w[0].r_series_diverges, w[1].r_series_diverges),
                (w[0].s_series_converges, w[1].s_series_converges),
                (w[0].z_converges, w[1].z_converges),
            ] {
                assert!(!(a == Verdict::Yes && b == Verdict::No) && !(a == Verdict::No && b == Verdict::Yes), "{}", f.label());
            }
        }
    }
}

#[test]
fn absorption_series_diverges_for_examples() {
    for f in [&Poisson as &dyn RateFamily, &PoissonAccelerated, &RhoRates { rho: 0.5 }] {
        assert_eq!(entrance_check(f, 1000).unwrap().absorption_series_diverges, Verdict::Yes, "{}", f.label());
    }
}

#[test]
fn accelerated_lyapunov_with_slack() {
    let series = eigen_convergence(&PoissonAccelerated, 2, &doubling_schedule(6, 10), 1e-8).unwrap();
    let l0 = series.limits[0].unwrap();
    for row in &series.rows {
        assert!(row.phi_increasing);
        let r = lyapunov_check(&PoissonAccelerated, &row.phi, 0.9 * l0, row.n_states).unwrap();
        assert!(r.holds, "N = {}: {r:?}", row.n_states);
    }
    assert!(series.lambda0_prime_limit.unwrap() > l0);
}

#[test]
fn gap_identity_residual_stays_small() {
    let residuals: Vec<f64> =
        doubling_schedule(6, 14).iter().map(|&n| gap_identity_check(&PoissonAccelerated, n).unwrap().residual).collect();
    assert!(residuals.iter().all(|&r| r <= 1e-8), "{residuals:?}");
}

#[test]
fn poisson_truncations_decrease() {
    let l: Vec<f64> = [5, 10, 20, 40]
        .iter()
        .map(|&n| dirichlet_eigenpair(&truncate_neumann(&Poisson, n).unwrap()).unwrap().lambda0)
        .collect();
    assert!(l.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{l:?}");
}

#[test]
fn theorem_bound_on_a_finite_chain_is_the_spectral_bound() {
    use amplitude_core::bounds::spectral_bound;
    use amplitude_core::spectral::full_spectrum;
    let g = amplitude_core::build_rho_chain(12, 0.7).unwrap();
    let report = full_spectrum(&g).unwrap();
    let spectral = spectral_bound(&report).unwrap();
    let t = theorem_bound(report.lambda0(), report.lambda0_prime, &report.eigenvalues[1..], Some(0.0)).unwrap();
    assert!((t.bound / spectral.bound - 1.0).abs() < 1e-13);
}

#[test]
fn nonconvergent_truncations_report_deltas() {
    match eigen_convergence(&RhoRates { rho: 2.0 }, 2, &doubling_schedule(6, 8), 1e-8) {
        Err(amplitude_core::Error::NotConverged { last_deltas }) => assert!(last_deltas[0] > 0.1),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rayleigh_quotient_dominates_lambda0(seed in any::<u64>(), n in 2usize..60) {
        let mut r = rng(seed);
        let f: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let l0 = dirichlet_eigenpair(&truncate_neumann(&PoissonAccelerated, n).unwrap()).unwrap().lambda0;
        let q = dirichlet_form(&PoissonAccelerated, &f, n).unwrap().quotient;
        prop_assert!(q >= l0 * (1.0 - 1e-12));
    }
}
