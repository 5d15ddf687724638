use gamma_decoherence::monte_carlo::{
    mc_phase_average, mc_pulse_area_average, MCSettings, DEFAULT_SEED,
};
use gamma_decoherence::propagator::propagator_factor;
use gamma_decoherence::ScalingTimes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn phase_average_sweep_within_five_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mc = MCSettings::with_samples(1_000_000, DEFAULT_SEED).unwrap();
    for i in 0..20 {
        let tau = 10f64.powf(rng.random_range(-8.0..-5.0));
        let t = tau * rng.random_range(0.5..50.0);
        let omega = rng.random_range(-3.0..3.0) / tau;
        let s = ScalingTimes::equal(tau).unwrap();
        let est = mc_phase_average(omega, t, s, &mc).unwrap();
        let exact = propagator_factor(omega, t, s).unwrap();
        let z = est.z_score(exact);
        assert!(z < 5.0, "point {i}: omega={omega} t={t} tau={tau} z={z}");
    }
}

#[test]
fn pulse_area_average_matches() {
    let (rabi, tau) = (5.906e5, 1.7e-8);
    let mc = MCSettings::with_samples(400_000, 77).unwrap();
    for (w, t) in [(2.0, 5e-6), (1.0, 2e-5), (-2.0, 1e-6)] {
        let est = mc_pulse_area_average(w, rabi, tau, t, &mc).unwrap();
        let exact = propagator_factor(w * rabi, t, ScalingTimes::equal(tau).unwrap()).unwrap();
        assert!(est.z_score(exact) < 5.0);
    }
}

#[test]
fn std_error_halves_when_samples_double() {
    let s = ScalingTimes::equal(1.0).unwrap();
    let ratios: Vec<f64> = (0..8)
        .map(|seed| {
            let a = mc_phase_average(
                1.3,
                2.0,
                s,
                &MCSettings::with_samples(200_000, seed).unwrap(),
            )
            .unwrap();
            let b = mc_phase_average(
                1.3,
                2.0,
                s,
                &MCSettings::with_samples(800_000, seed + 100).unwrap(),
            )
            .unwrap();
            b.std_error / a.std_error
        })
        .collect();
    // Two doublings: expect 1/2.
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let per_doubling = mean.sqrt();
    let target = std::f64::consts::FRAC_1_SQRT_2;
    assert!(
        (per_doubling - target).abs() < 0.15 * target,
        "{per_doubling} {ratios:?}"
    );
}

#[test]
fn deterministic_across_batch_sizes() {
    let s = ScalingTimes::new(0.2, 0.5).unwrap();
    let reference =
        mc_phase_average(4.0, 3.0, s, &MCSettings::new(100_000, 1, 100_000).unwrap()).unwrap();
    for batch in [1, 777, 4096, 65_536, 1 << 22] {
        let e =
            mc_phase_average(4.0, 3.0, s, &MCSettings::new(100_000, 1, batch).unwrap()).unwrap();
        assert_eq!(e, reference, "batch {batch}");
    }
    let other = mc_phase_average(4.0, 3.0, s, &MCSettings::new(100_000, 2, 4096).unwrap()).unwrap();
    assert_ne!(other.value, reference.value);
}
