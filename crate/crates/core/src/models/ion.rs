//! Blue-sideband Rabi oscillations of a trapped ion.
//!
//! With the drive tuned to the first blue sideband, `|↓, n⟩ ↔ |↑, n+1⟩`
//! oscillates at
//!
//! ```text
//! Ω_n = Ω e^(−η²/2) η L_n¹(η²) / √(n+1)
//! ```
//!
//! and fluctuations of the pulse area damp each pair at `γ_n = 2Ω_n²τ`
//! (small τ) or `ln(1 + 4Ω_n²τ²)/2τ` (exact).

use crate::analysis::{fit_power_law, PowerLawFit};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::gamma_kernel::ScalingTimes;
use crate::propagator::decay_rate;

/// Highest Fock number for which the Laguerre recurrence is validated.
pub const MAX_FOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParams {
    pub base_rabi: f64,
    pub lamb_dicke: f64,
    pub tau: f64,
    pub fock_n: usize,
}

impl IonParams {
    pub fn new(base_rabi: f64, lamb_dicke: f64, tau: f64, fock_n: usize) -> Result<Self> {
        ensure_positive("base_rabi", base_rabi)?;
        ensure_positive("lamb_dicke", lamb_dicke)?;
        ensure_non_negative("tau", tau)?;
        if fock_n > MAX_FOCK {
            return Err(Error::OutOfRange {
                n: fock_n,
                max: MAX_FOCK,
            });
        }
        Ok(Self {
            base_rabi,
            lamb_dicke,
            tau,
            fock_n,
        })
    }

    pub fn with_fock(&self, fock_n: usize) -> Result<Self> {
        Self::new(self.base_rabi, self.lamb_dicke, self.tau, fock_n)
    }

    /// Outside the Lamb–Dicke-like regime the sideband picture studied
    /// here is no longer a good description.
    pub fn outside_lamb_dicke_regime(&self) -> bool {
        self.lamb_dicke >= 1.0
    }

    /// Base Rabi frequency that yields the given `n = 0` sideband frequency.
    pub fn base_rabi_for(omega0: f64, lamb_dicke: f64) -> Result<f64> {
        ensure_positive("omega0", omega0)?;
        ensure_positive("lamb_dicke", lamb_dicke)?;
        Ok(omega0 / (lamb_dicke * (-0.5 * lamb_dicke * lamb_dicke).exp()))
    }
}

/// Generalized Laguerre polynomial `L_n¹(x)` by forward recurrence.
pub fn laguerre_gen1(n: usize, x: f64) -> Result<f64> {
    if n > MAX_FOCK {
        return Err(Error::OutOfRange { n, max: MAX_FOCK });
    }
    ensure_non_negative("x", x)?;
    const ALPHA: f64 = 1.0;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + ALPHA - x;
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k + ALPHA - 1.0 - x) * cur - (k + ALPHA - 1.0) * prev) / k;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Sideband Rabi frequency `Ω_n` (rad/s).
pub fn ion_rabi_frequency(p: &IonParams) -> f64 {
    let eta = p.lamb_dicke;
    let lag = laguerre_gen1(p.fock_n, eta * eta).expect("fock_n validated at construction");
    p.base_rabi * (-0.5 * eta * eta).exp() * eta * lag / ((p.fock_n + 1) as f64).sqrt()
}

/// Decay rate `γ_n`: `2Ω_n²τ`, or the exact `ln(1 + 4Ω_n²τ²)/2τ` when
/// `exact` is set.
pub fn ion_decay_rate(p: &IonParams, exact: bool) -> f64 {
    let omega_n = ion_rabi_frequency(p);
    if p.tau == 0.0 {
        0.0
    } else if exact {
        decay_rate(2.0 * omega_n, ScalingTimes::equal(p.tau).expect("tau > 0")).expect("finite")
    } else {
        2.0 * omega_n * omega_n * p.tau
    }
}

/// `½(1 + e^(−γ_n t) cos 2Ω_n t)` for an ion prepared in `|↓, n⟩`.
pub fn ion_p_down(p: &IonParams, t: f64) -> f64 {
    let omega_n = ion_rabi_frequency(p);
    let gamma = ion_decay_rate(p, false);
    0.5 * (1.0 + (-gamma * t).exp() * (2.0 * omega_n * t).cos())
}

/// `τ = γ₀ / 2Ω₀²`.
pub fn ion_estimate_tau(gamma0: f64, omega0: f64) -> Result<f64> {
    ensure_positive("gamma0", gamma0)?;
    ensure_positive("omega0", omega0)?;
    Ok(gamma0 / (2.0 * omega0 * omega0))
}

/// Power-law description of the sideband frequencies over `n = 0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawExponents {
    /// Least-squares slope of `ln(Ω_n/Ω₀)` against `ln(n+1)`.
    pub freq_exponent: f64,
    /// `2 × freq_exponent`, since `γ_n ∝ Ω_n²`.
    pub decay_exponent: f64,
    /// Largest relative deviation of `Ω_n/Ω₀` from the fitted power law.
    pub max_residual: f64,
    /// Same, for the power law pinned to the data at `n = 0`.
    pub anchored_residual: f64,
    pub fit: PowerLawFit,
}

/// Ratios `Ω_n/Ω₀` for `n = 0..=n_max`.
pub fn ion_frequency_ratios(eta: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let p0 = IonParams::new(1.0, eta, 0.0, 0)?;
    let omega0 = ion_rabi_frequency(&p0);
    (0..=n_max)
        .map(|n| Ok((n, ion_rabi_frequency(&p0.with_fock(n)?) / omega0)))
        .collect()
}

pub fn ion_power_law_exponents(eta: f64, n_max: usize) -> Result<PowerLawExponents> {
    if n_max < 4 {
        return Err(Error::param("n_max", "need at least n = 0..=4"));
    }
    let ratios = ion_frequency_ratios(eta, n_max)?;
    let fit = fit_power_law(&ratios)?;
    let anchored_residual = crate::analysis::anchored_power_law_residual(&ratios, fit.exponent)?;
    Ok(PowerLawExponents {
        freq_exponent: fit.exponent,
        decay_exponent: 2.0 * fit.exponent,
        max_residual: fit.max_rel_residual,
        anchored_residual,
        fit,
    })
}
