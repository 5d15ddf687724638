mod common;

use common::laguerre_binomial;
use gamma_decoherence::models::interrupted::{interrupted_f, interrupted_linear};
use gamma_decoherence::models::ion::{
    ion_frequency_ratios, ion_p_down, ion_rabi_frequency, laguerre_gen1, IonParams,
};
use gamma_decoherence::models::rabi::{jc_p_eg_averaged, jc_p_eg_ideal, RabiQedParams};
use gamma_decoherence::models::ramsey::{
    ramsey_p_eg_averaged, ramsey_p_eg_gaussian, ramsey_p_eg_theory, ramsey_statevector_sequence,
    ramsey_visibility, ramsey_visibility_from_propagator, RamseyParams,
};
use gamma_decoherence::monte_carlo::{mc_observable_average, MCSettings};
use gamma_decoherence::quadrature::Quadrature;
use gamma_decoherence::{ScalingTimes, WaitingTimeDistribution, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn in_unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

#[test]
fn probabilities_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let tau = if rng.random_bool(0.1) {
            0.0
        } else {
            10f64.powf(rng.random_range(-9.0..-4.0))
        };
        let t = rng.random_range(0.0..1e-3);

        let jc = RabiQedParams::new(10f64.powf(rng.random_range(3.0..7.0)), tau).unwrap();
        assert!(in_unit(jc_p_eg_ideal(&jc, t)) && in_unit(jc_p_eg_averaged(&jc, t)));

        let ion = IonParams::new(
            10f64.powf(rng.random_range(4.0..7.0)),
            rng.random_range(0.001..0.5),
            tau,
            rng.random_range(0..=64),
        )
        .unwrap();
        assert!(in_unit(ion_p_down(&ion, t)));

        let r = RamseyParams::new(
            rng.random_range(-1e5..1e5),
            rng.random_range(-1e5..1e5),
            rng.random_range(0.01..1.0),
            rng.random_range(1e-6..1e-3),
            rng.random_range(0.0..5.0),
            tau,
        )
        .unwrap();
        for p in [
            ramsey_p_eg_theory(&r),
            ramsey_p_eg_averaged(&r),
            ramsey_p_eg_gaussian(&r),
        ] {
            assert!(in_unit(p), "{p} for {r:?}");
        }
    }
}

#[test]
fn jc_average_matches_quadrature_and_sampling() {
    let p = RabiQedParams::new(2.0 * PI * 25e3, 0.5e-6).unwrap();
    let q = Quadrature::default();
    let s = ScalingTimes::equal(p.tau()).unwrap();
    for t in [1e-6, 7.3e-6, 40e-6, 123e-6, 200e-6] {
        let law = WaitingTimeDistribution::new(t, s, 0).unwrap().law();
        let avg: f64 = law.expectation(&q, |tp| jc_p_eg_ideal(&p, tp)).unwrap();
        assert!((avg - jc_p_eg_averaged(&p, t)).abs() < 1e-8, "t = {t}");
        let mc = mc_observable_average(
            |tp| jc_p_eg_ideal(&p, tp),
            t,
            s,
            &MCSettings::with_samples(200_000, 4).unwrap(),
        )
        .unwrap();
        assert!(mc.z_score(jc_p_eg_averaged(&p, t)) < 5.0);
    }
}

#[test]
fn ramsey_statevector_equals_theory_on_fock_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(0..8usize);
        let p = RamseyParams::new(
            rng.random_range(-1e5..1e5),
            rng.random_range(-1e5..1e5),
            rng.random_range(0.01..1.0),
            rng.random_range(1e-6..3e-4),
            n as f64,
            0.0,
        )
        .unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = C64::new(1.0, 0.0);
        let sv = ramsey_statevector_sequence(&coeffs, &p, p.interaction_time()).unwrap();
        assert!((sv - ramsey_p_eg_theory(&p)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn ramsey_visibility_is_propagator_modulus(
        detuning in -2e5..2e5f64,
        chi in -1e5..1e5f64,
        t in 1e-5..1e-3f64,
        tau in 1e-8..1e-5f64,
    ) {
        let p = RamseyParams::new(detuning, chi, 0.1, t, 0.85, tau).unwrap();
        let v = ramsey_visibility(&p);
        prop_assert!((v - ramsey_visibility_from_propagator(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn interrupted_staircase_bound(tau1 in 0.01..5.0f64, extra in 0.0..5.0f64, start in 0.0..100.0f64) {
        let s = ScalingTimes::new(tau1, tau1 + extra).unwrap();
        let mut prev = interrupted_f(start, s).unwrap();
        for i in 0..=400 {
            let t = start + i as f64 * 0.05;
            let f = interrupted_f(t, s).unwrap();
            prop_assert!(f >= prev);
            prop_assert!((f - interrupted_linear(t, s)).abs() <= extra * (1.0 + 1e-12) + 1e-12);
            prev = f;
        }
    }
}

#[test]
fn laguerre_matches_binomial_sum() {
    for eta in [0.002, 0.02, 0.202, 0.5, 0.9] {
        let x = eta * eta;
        for n in 0..=64 {
            let rec = laguerre_gen1(n, x).unwrap();
            let direct = laguerre_binomial(n, x);
            assert!(
                (rec - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                "{eta} {n}"
            );
        }
    }
}

#[test]
fn ion_ratios_match_brute_force() {
    let eta: f64 = 0.202;
    let ratios = ion_frequency_ratios(eta, 16).unwrap();
    let l0 = laguerre_binomial(0, eta * eta);
    for &(n, r) in &ratios {
        let brute = laguerre_binomial(n, eta * eta) / l0 / ((n + 1) as f64).sqrt();
        assert!((r - brute).abs() < 1e-10);
    }
    let p = IonParams::new(1e6, eta, 0.0, 16).unwrap();
    assert!(ion_rabi_frequency(&p) > 0.0);
}
