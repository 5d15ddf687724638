//! Evolution switched on for `τ₁` out of every period `τ₂`.

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::gamma_kernel::ScalingTimes;

/// Accumulated "on" time `F(t)`: a staircase that rises with unit slope
/// during `[nτ₂, nτ₂ + τ₁]` and is flat at `(n+1)τ₁` for the rest of the
/// period.
pub fn interrupted_f(t: f64, s: ScalingTimes) -> Result<f64> {
    ensure_non_negative("t", t)?;
    let (tau1, tau2) = (s.tau1(), s.tau2());
    ensure_positive("tau1", tau1)?;
    if tau1 > tau2 {
        return Err(Error::param(
            "tau1",
            format!("{tau1} exceeds tau2 = {tau2}"),
        ));
    }
    if tau1 == tau2 {
        return Ok(t);
    }
    let n = (t / tau2).floor();
    let phase = t - n * tau2;
    Ok(if phase <= tau1 {
        n * tau1 + phase
    } else {
        (n + 1.0) * tau1
    })
}

/// The rescaled straight line `t τ₁/τ₂`.
pub fn interrupted_linear(t: f64, s: ScalingTimes) -> f64 {
    t * s.tau1() / s.tau2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: f64, b: f64) -> ScalingTimes {
        ScalingTimes::new(a, b).unwrap()
    }

    #[test]
    fn period_boundaries() {
        for n in 0..6 {
            let t = 2.0 * n as f64;
            assert_eq!(interrupted_f(t, s(1.0, 2.0)).unwrap(), n as f64);
        }
    }

    #[test]
    fn casewise_value_and_relative_error() {
        let sc = s(1.0, 2.0);
        let f = interrupted_f(5.0, sc).unwrap();
        assert_eq!(f, 3.0);
        let lin = interrupted_linear(5.0, sc);
        assert_eq!(lin, 2.5);
        assert!(((f - lin) / 2.5 - 0.2).abs() < 1e-15);
        assert_eq!(interrupted_f(3.5, sc).unwrap(), 2.0);
    }

    #[test]
    fn continuous_limit_and_errors() {
        for t in [0.0, 0.3, 7.7] {
            assert_eq!(interrupted_f(t, s(0.4, 0.4)).unwrap(), t);
        }
        assert!(interrupted_f(1.0, s(2.0, 1.0)).is_err());
        assert!(interrupted_f(1.0, s(0.0, 1.0)).is_err());
        assert!(interrupted_f(-1.0, s(0.5, 1.0)).is_err());
    }
}
