//! Vacuum Rabi oscillations of a resonant atom–cavity pair.
//!
//! The vacuum sector `{|e,0⟩, |g,1⟩}` is a two-level system split by
//! `2Ω_R`, so its single coherence decays at `decay_rate(2Ω_R, τ)`.

use super::{RegimeWarning, TauEstimate};
use crate::error::{ensure_non_negative, ensure_positive, Result};
use crate::gamma_kernel::ScalingTimes;
use crate::propagator::{decay_shift, DecayShiftPair};

/// `Ω_R·τ` above which the small-τ estimate is flagged.
pub const SMALL_TAU_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiQedParams {
    rabi_frequency: f64,
    tau: f64,
}

impl RabiQedParams {
    pub fn new(rabi_frequency: f64, tau: f64) -> Result<Self> {
        ensure_positive("rabi_frequency", rabi_frequency)?;
        ensure_non_negative("tau", tau)?;
        Ok(Self {
            rabi_frequency,
            tau,
        })
    }

    pub fn rabi_frequency(&self) -> f64 {
        self.rabi_frequency
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Exact `(γ, ν)` of the vacuum-Rabi coherence; `(0, 2Ω_R)` at `τ = 0`.
    pub fn rates(&self) -> DecayShiftPair {
        let splitting = 2.0 * self.rabi_frequency;
        if self.tau == 0.0 {
            return DecayShiftPair {
                gamma: 0.0,
                nu: splitting,
            };
        }
        let s = ScalingTimes::equal(self.tau).expect("tau > 0");
        decay_shift(splitting, s).expect("finite splitting")
    }

    /// Small-τ decay rate `2Ω_R²τ`.
    pub fn small_tau_rate(&self) -> f64 {
        2.0 * self.rabi_frequency * self.rabi_frequency * self.tau
    }
}

/// `½(1 − cos 2Ω_R t)`.
pub fn jc_p_eg_ideal(p: &RabiQedParams, t: f64) -> f64 {
    0.5 * (1.0 - (2.0 * p.rabi_frequency * t).cos())
}

/// `½(1 − e^(−γt) cos νt)` with the exact averaged rates.
pub fn jc_p_eg_averaged(p: &RabiQedParams, t: f64) -> f64 {
    if p.tau == 0.0 {
        return jc_p_eg_ideal(p, t);
    }
    let r = p.rates();
    0.5 * (1.0 - (-r.gamma * t).exp() * (r.nu * t).cos())
}

/// `τ = γ / 2Ω_R²`, warning when `Ω_R τ ≥ 0.25`.
pub fn jc_estimate_tau(gamma: f64, rabi: f64) -> Result<TauEstimate> {
    ensure_positive("gamma", gamma)?;
    ensure_positive("rabi", rabi)?;
    let tau = gamma / (2.0 * rabi * rabi);
    let x = rabi * tau;
    let warning = (x >= SMALL_TAU_LIMIT).then_some(RegimeWarning {
        quantity: "rabi*tau",
        value: x,
        limit: SMALL_TAU_LIMIT,
    });
    Ok(TauEstimate { tau, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cavity() -> RabiQedParams {
        RabiQedParams::new(2.0 * PI * 25e3, 0.5e-6).unwrap()
    }

    #[test]
    fn ideal_values() {
        let p = cavity();
        assert_eq!(jc_p_eg_ideal(&p, 0.0), 0.0);
        let half = PI / (2.0 * p.rabi_frequency());
        assert!((jc_p_eg_ideal(&p, half) - 1.0).abs() < 1e-15);
        assert!((jc_p_eg_ideal(&p, 10e-6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_limits() {
        let p = cavity();
        let unitary = RabiQedParams::new(p.rabi_frequency(), 0.0).unwrap();
        for t in [0.0, 3e-6, 17e-6] {
            assert_eq!(jc_p_eg_averaged(&unitary, t), jc_p_eg_ideal(&unitary, t));
        }
        assert!((jc_p_eg_averaged(&p, 1.0) - 0.5).abs() < 1e-12);
        let r = p.rates();
        assert!((1.0 / r.gamma - 41.03e-6).abs() < 0.01e-6);
        assert!((1.0 / p.small_tau_rate() - 40.53e-6).abs() < 0.01e-6);
    }

    #[test]
    fn tau_estimates() {
        let rabi = 2.0 * PI * 25e3;
        let est = jc_estimate_tau(1.0 / 40e-6, rabi).unwrap();
        assert!((est.tau - 5.066e-7).abs() < 1e-10, "{}", est.tau);
        assert!(est.warning.is_none());
        assert!(jc_estimate_tau(0.0, rabi).is_err());
        let quarter = jc_estimate_tau(1.0 / 40e-6, 2.0 * rabi).unwrap();
        assert!((quarter.tau * 4.0 - est.tau).abs() < 1e-20);
        let strong = jc_estimate_tau(1.0, 1.0).unwrap();
        assert!(strong.warning.is_some());
    }
}
