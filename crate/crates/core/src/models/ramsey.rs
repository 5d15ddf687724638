//! Ramsey fringes of a Rydberg atom probing a dispersively coupled cavity.
//!
//! Two `π/2` pulses separated by a flight time `T` read out the relative
//! phase `T(Δ − ε_n)` picked up between `|e⟩` and `|g⟩`, where `ε_n` is the
//! light shift of the `n`-photon field accumulated during the interaction
//! time `t_int = T·w/d`.

use super::RegimeWarning;
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::gamma_kernel::ScalingTimes;
use crate::propagator::propagator_factor;
use crate::C64;

/// `|Δ − ε_n|·τ` above which the Gaussian fringe envelope is flagged.
pub const GAUSSIAN_REGIME_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyParams {
    /// `Δ = ω_eg − ω_R` (rad/s).
    pub detuning: f64,
    /// Light shift per photon `Ω_R²/δ` (rad/s).
    pub dispersive_shift: f64,
    /// `w / d(R₁, R₂)`.
    pub waist_ratio: f64,
    pub flight_time: f64,
    /// Photon number; real so that a mean value can be used.
    pub mean_photon: f64,
    pub tau: f64,
}

impl RamseyParams {
    pub fn new(
        detuning: f64,
        dispersive_shift: f64,
        waist_ratio: f64,
        flight_time: f64,
        mean_photon: f64,
        tau: f64,
    ) -> Result<Self> {
        ensure_finite("detuning", detuning)?;
        ensure_finite("dispersive_shift", dispersive_shift)?;
        ensure_positive("waist_ratio", waist_ratio)?;
        if waist_ratio > 1.0 {
            return Err(Error::param(
                "waist_ratio",
                format!("{waist_ratio} exceeds 1"),
            ));
        }
        ensure_positive("flight_time", flight_time)?;
        ensure_non_negative("mean_photon", mean_photon)?;
        ensure_non_negative("tau", tau)?;
        Ok(Self {
            detuning,
            dispersive_shift,
            waist_ratio,
            flight_time,
            mean_photon,
            tau,
        })
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { detuning, ..*self }
    }

    /// `Δ − ε_n̄`.
    pub fn fringe_frequency(&self) -> f64 {
        self.detuning - ramsey_epsilon_n(self, self.mean_photon)
    }

    pub fn interaction_time(&self) -> f64 {
        self.flight_time * self.waist_ratio
    }
}

/// `ε_n = (Ω_R²/δ)(w/d)(2n + 1)`.
pub fn ramsey_epsilon_n(p: &RamseyParams, n: f64) -> f64 {
    p.dispersive_shift * p.waist_ratio * (2.0 * n + 1.0)
}

/// `cos²[(T/2)(Δ − ε_n)]`.
pub fn ramsey_p_eg_theory(p: &RamseyParams) -> f64 {
    (0.5 * p.flight_time * p.fringe_frequency()).cos().powi(2)
}

/// Probability of detecting `|g⟩` after the full pulse sequence, starting
/// from `|e⟩ ⊗ Σ c_n |n⟩`.
///
/// Each photon sector is propagated separately: a `π/2` pulse, free
/// evolution with the detuning over `T` and the dispersive light shift over
/// `t_int`, and a second `π/2` pulse.
pub fn ramsey_statevector_sequence(coeffs: &[C64], p: &RamseyParams, t_int: f64) -> Result<f64> {
    ensure_non_negative("t_int", t_int)?;
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization(norm));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = p.flight_time;
    let chi = p.dispersive_shift;
    let mut prob = 0.0;
    for (n, c) in coeffs.iter().enumerate() {
        let n = n as f64;
        // First π/2 pulse: |e⟩ → (|e⟩ + |g⟩)/√2, amplitudes (e, g).
        let (e, g) = (*c * s, *c * s);
        // Dispersive stage.
        let phase_e = -0.5 * p.detuning * t + chi * (n + 1.0) * t_int;
        let phase_g = 0.5 * p.detuning * t - chi * n * t_int;
        let e = e * C64::from_polar(1.0, phase_e);
        let g = g * C64::from_polar(1.0, phase_g);
        // Second π/2 pulse: |e⟩ → (|e⟩ + |g⟩)/√2, |g⟩ → (|g⟩ − |e⟩)/√2.
        let g_out = (e + g) * s;
        prob += g_out.norm_sqr();
    }
    Ok(prob)
}

/// Fringe visibility `[1 + (Δ − ε_n)²τ²]^(−T/2τ)`.
pub fn ramsey_visibility(p: &RamseyParams) -> f64 {
    if p.tau == 0.0 {
        return 1.0;
    }
    let x = p.fringe_frequency() * p.tau;
    ((x * x).ln_1p() * (-p.flight_time / (2.0 * p.tau))).exp()
}

/// `½{1 + F cos[(Δ′ − ε′_n)T]}` with the shifted fringe frequency
/// `arctan((Δ − ε_n)τ)/τ`.
pub fn ramsey_p_eg_averaged(p: &RamseyParams) -> f64 {
    if p.tau == 0.0 {
        return ramsey_p_eg_theory(p);
    }
    let x = p.fringe_frequency();
    let f = ramsey_visibility(p);
    let shifted = (x * p.tau).atan() / p.tau;
    0.5 * (1.0 + f * (shifted * p.flight_time).cos())
}

/// Visibility through the generic averaged propagator; agrees with
/// [`ramsey_visibility`].
pub fn ramsey_visibility_from_propagator(p: &RamseyParams) -> Result<f64> {
    if p.tau == 0.0 {
        return Ok(1.0);
    }
    let f = propagator_factor(
        p.fringe_frequency(),
        p.flight_time,
        ScalingTimes::equal(p.tau)?,
    )?;
    Ok(f.norm())
}

/// `½{1 + exp[−(Δ − ε_n)² Tτ/2] cos[(Δ − ε_n)T]}`.
pub fn ramsey_p_eg_gaussian(p: &RamseyParams) -> f64 {
    let x = p.fringe_frequency();
    let envelope = (-0.5 * x * x * p.flight_time * p.tau).exp();
    0.5 * (1.0 + envelope * (x * p.flight_time).cos())
}

/// Warning when `|Δ − ε_n|τ` leaves the Gaussian-envelope regime.
pub fn ramsey_gaussian_regime(p: &RamseyParams) -> Option<RegimeWarning> {
    let x = (p.fringe_frequency() * p.tau).abs();
    (x > GAUSSIAN_REGIME_LIMIT).then_some(RegimeWarning {
        quantity: "|delta - epsilon_n|*tau",
        value: x,
        limit: GAUSSIAN_REGIME_LIMIT,
    })
}

/// Width `σ_Δ = (Tτ)^(−1/2)` of the Gaussian envelope (rad/s).
pub fn ramsey_gaussian_width(flight_time: f64, tau: f64) -> Result<f64> {
    ensure_positive("flight_time", flight_time)?;
    ensure_positive("tau", tau)?;
    Ok((flight_time * tau).sqrt().recip())
}
