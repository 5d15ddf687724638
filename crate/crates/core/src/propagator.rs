//! The averaged evolution `V(t) = (1 + iLτ₁)^(-t/τ₂)`.
//!
//! In the energy eigenbasis the Liouvillian is diagonal, so `V(t)` acts on
//! each matrix element `ρ_{n,m}` by the scalar factor
//! `(1 + iω_{n,m}τ₁)^(-t/τ₂) = e^(-γt) e^(-iνt)` with
//!
//! ```text
//! γ = ln(1 + ω²τ₁²) / 2τ₂        ν = arctan(ωτ₁) / τ₂
//! ```
//!
//! The complex power is taken on the principal branch of the logarithm;
//! since `Re(1 + iωτ₁) = 1` no branch cut is ever crossed.

use nalgebra::DMatrix;

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::gamma_kernel::ScalingTimes;
use crate::state::{DensityMatrix, EnergySpectrum};
use crate::C64;

/// Decay rate and shifted frequency generated by one Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayShiftPair {
    pub gamma: f64,
    pub nu: f64,
}

/// `ln(1 + ω²τ₁²) / 2τ₂`.
pub fn decay_rate(omega: f64, s: ScalingTimes) -> Result<f64> {
    ensure_finite("omega", omega)?;
    let x = omega * s.tau1();
    Ok((x * x).ln_1p() / (2.0 * s.tau2()))
}

/// `arctan(ωτ₁) / τ₂`.
pub fn frequency_shift(omega: f64, s: ScalingTimes) -> Result<f64> {
    ensure_finite("omega", omega)?;
    Ok((omega * s.tau1()).atan() / s.tau2())
}

pub fn decay_shift(omega: f64, s: ScalingTimes) -> Result<DecayShiftPair> {
    Ok(DecayShiftPair {
        gamma: decay_rate(omega, s)?,
        nu: frequency_shift(omega, s)?,
    })
}

/// Principal logarithm of `1 + ix`, with the real part computed as
/// `ln_1p(x²)/2` so that small `x` keeps full precision.
pub(crate) fn principal_log_one_plus_i(x: f64) -> C64 {
    C64::new(0.5 * (x * x).ln_1p(), x.atan())
}

/// `(1 + iωτ₁)^(-t/τ₂)` on the principal branch.
pub fn propagator_factor(omega: f64, t: f64, s: ScalingTimes) -> Result<C64> {
    ensure_finite("omega", omega)?;
    ensure_non_negative("t", t)?;
    Ok(factor_unchecked(omega, t, s))
}

fn factor_unchecked(omega: f64, t: f64, s: ScalingTimes) -> C64 {
    if t == 0.0 || omega == 0.0 {
        return C64::new(1.0, 0.0);
    }
    (-(t / s.tau2()) * principal_log_one_plus_i(omega * s.tau1())).exp()
}

fn apply_factors<F>(
    rho0: &DensityMatrix,
    spectrum: &EnergySpectrum,
    factor: F,
) -> Result<DensityMatrix>
where
    F: Fn(f64) -> C64,
{
    let n = rho0.dim();
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: spectrum.len(),
        });
    }
    let mut out: DMatrix<C64> = rho0.entries().clone();
    for i in 0..n {
        for j in (i + 1)..n {
            // Conjugate pairs keep the output exactly Hermitian.
            let f = factor(spectrum.bohr(i, j));
            out[(i, j)] = rho0.get(i, j) * f;
            out[(j, i)] = rho0.get(j, i) * f.conj();
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Applies the averaged evolution to a state written in the eigenbasis of
/// `spectrum`. Diagonal entries are copied untouched.
pub fn evolve(
    rho0: &DensityMatrix,
    spectrum: &EnergySpectrum,
    t: f64,
    s: ScalingTimes,
) -> Result<DensityMatrix> {
    ensure_non_negative("t", t)?;
    apply_factors(rho0, spectrum, |omega| factor_unchecked(omega, t, s))
}

/// Averaged evolution over a random pulse area: the entry with
/// dimensionless Bohr frequency `ω̃` picks up `(1 + iω̃Ωτ)^(-t/τ)`.
pub fn pulse_area_evolve(
    rho0: &DensityMatrix,
    spec_dimensionless: &EnergySpectrum,
    mean_rabi: f64,
    tau: f64,
    t: f64,
) -> Result<DensityMatrix> {
    ensure_positive("mean_rabi", mean_rabi)?;
    ensure_non_negative("t", t)?;
    let s = ScalingTimes::equal(tau)?;
    apply_factors(rho0, spec_dimensionless, |w| {
        factor_unchecked(w * mean_rabi, t, s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eq(tau: f64) -> ScalingTimes {
        ScalingTimes::equal(tau).unwrap()
    }

    #[test]
    fn zero_bohr_frequency() {
        assert_eq!(decay_rate(0.0, eq(1e-6)).unwrap(), 0.0);
        assert_eq!(frequency_shift(0.0, eq(1e-6)).unwrap(), 0.0);
    }

    #[test]
    fn cavity_decay_rate_value() {
        let omega = 2.0 * 2.0 * PI * 25e3;
        let g = decay_rate(omega, eq(0.5e-6)).unwrap();
        // ln(1 + (0.1π)²)/1e-6, evaluated independently.
        assert!((g - 24_374.523_959_423_13).abs() < 1e-6, "{g}");
        assert!((1.0 / g - 41.0e-6).abs() < 0.05e-6);
        let small = omega * omega * 0.5e-6 / 2.0;
        assert!((small - 24_674.011_002_723_39).abs() < 1e-6);
        assert!((small - g).abs() / g < 0.015);
    }

    #[test]
    fn frequency_shift_value_and_taylor_bound() {
        let nu = frequency_shift(3.1416e5, eq(5e-7)).unwrap();
        assert!((nu - 3.116e5).abs() < 50.0, "{nu}");
        for &(omega, tau) in &[(1e3, 1e-6), (2e4, 3e-7), (-5e5, 1e-8)] {
            let x: f64 = omega * tau;
            let nu = frequency_shift(omega, eq(tau)).unwrap();
            assert!(((nu - omega) / omega).abs() < x * x / 3.0);
        }
    }

    #[test]
    fn factor_examples() {
        assert_eq!(
            propagator_factor(3.0, 0.0, eq(1.0)).unwrap(),
            C64::new(1.0, 0.0)
        );
        let f = propagator_factor(1e5, 1e-5, eq(1e-12)).unwrap();
        assert!((f - C64::new(0.0, -1.0).exp()).norm() < 1e-6);
        let f = propagator_factor(3.1416e5, 4e-5, eq(5e-7)).unwrap();
        assert!((f.norm() - (-0.974_985_463_117_706_7_f64).exp()).abs() < 1e-12);
        assert!((f.norm() - 0.377).abs() < 1e-3);
    }

    #[test]
    fn diagonal_state_is_stationary() {
        let spectrum = EnergySpectrum::new(vec![0.0, 2.0, 5.0]).unwrap();
        let rho = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let out = evolve(&rho, &spectrum, 3.0, eq(0.7)).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn qubit_coherence_decay() {
        let (omega, tau, t) = (4.0, 0.3, 2.5);
        let s = 0.5_f64.sqrt();
        let plus = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let spectrum = EnergySpectrum::new(vec![0.0, omega]).unwrap();
        let out = evolve(&plus, &spectrum, t, eq(tau)).unwrap();
        let expected = 0.5 * (1.0 + omega * omega * tau * tau).powf(-t / (2.0 * tau));
        assert!((out.get(0, 1).norm() - expected).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let spectrum = EnergySpectrum::new(vec![0.0, 1.0, 2.0]).unwrap();
        let rho = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        assert_eq!(
            evolve(&rho, &spectrum, 1.0, eq(1.0)).unwrap_err(),
            Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn pulse_area_matches_time_evolution() {
        let (omega_rabi, tau, t) = (5.906e5, 1.7e-8, 5e-5);
        let s = 0.5_f64.sqrt();
        let plus = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(0.0, s)]).unwrap();
        let dimless = EnergySpectrum::new(vec![-1.0, 1.0]).unwrap();
        let physical = EnergySpectrum::new(vec![-omega_rabi, omega_rabi]).unwrap();
        let a = pulse_area_evolve(&plus, &dimless, omega_rabi, tau, t).unwrap();
        let b = evolve(&plus, &physical, t, eq(tau)).unwrap();
        assert!((a.entries() - b.entries()).norm() < 1e-15);
        // Blue-sideband pair: off-diagonal decays at ln(1 + 4Ω²τ²)/2τ.
        let rate = (4.0 * omega_rabi * omega_rabi * tau * tau).ln_1p() / (2.0 * tau);
        assert!((a.get(0, 1).norm() - 0.5 * (-rate * t).exp()).abs() < 1e-14);
    }
}
