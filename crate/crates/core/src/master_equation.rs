//! Phase-destroying master equations.
//!
//! The averaged state obeys `dρ/dt = −(1/τ) log(1 + iLτ) ρ`. Expanding the
//! logarithm to second order in `Lτ` gives
//!
//! ```text
//! dρ/dt = −i[H, ρ] − (τ/2)[H, [H, ρ]]
//! ```
//!
//! with `H` in rad/s. Both equations are solved exactly in the eigenbasis
//! of `H`; the second-order one is also integrated with a fixed-step RK4
//! scheme in the original basis, and the eigenbasis solution serves as its
//! reference.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::propagator::principal_log_one_plus_i;
use crate::state::{hermiticity_defect, DensityMatrix};
use crate::C64;

/// Order of the fixed-step integrator.
pub const METHOD_ORDER: u32 = 4;

/// Entry magnitude beyond which a run is declared unstable.
pub const INSTABILITY_LIMIT: f64 = 1e6;

const MAX_STEPS: f64 = 1e8;

/// A Hermitian generator `H/ħ` (rad/s) with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianGenerator {
    matrix: DMatrix<C64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl HermitianGenerator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::param("H", "generator must be square and non-empty"));
        }
        let scale = matrix.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let defect = hermiticity_defect(&matrix);
        if defect > 1e-12 * scale {
            return Err(Error::param(
                "H",
                format!("not Hermitian (defect {defect:e})"),
            ));
        }
        let eig = matrix.clone().symmetric_eigen();
        let u = eig.eigenvectors;
        let n = matrix.nrows();
        let unitarity = (u.adjoint() * &u - DMatrix::<C64>::identity(n, n)).camax();
        if unitarity > 1e-10 {
            return Err(Error::param(
                "H",
                format!("diagonalizer not unitary (defect {unitarity:e})"),
            ));
        }
        Ok(Self {
            matrix,
            eigenvalues: eig.eigenvalues,
            eigenvectors: u,
        })
    }

    /// `(ω/2)σ_z + (Ω/2)σ_x` on the basis `{|0⟩, |1⟩}`.
    pub fn qubit(splitting: f64, drive: f64) -> Result<Self> {
        ensure_finite("splitting", splitting)?;
        ensure_finite("drive", drive)?;
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * splitting, 0.0),
                C64::new(0.5 * drive, 0.0),
                C64::new(0.5 * drive, 0.0),
                C64::new(-0.5 * splitting, 0.0),
            ],
        );
        Self::new(h)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    /// Largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    fn to_eigenbasis(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        self.eigenvectors.adjoint() * rho * &self.eigenvectors
    }

    fn out_of_eigenbasis(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        &self.eigenvectors * rho * self.eigenvectors.adjoint()
    }

    /// Multiplies each eigenbasis element `(n, m)` by `factor(ω_n − ω_m)`.
    fn propagate_elementwise<F: Fn(f64) -> C64>(
        &self,
        rho0: &DMatrix<C64>,
        factor: F,
    ) -> DMatrix<C64> {
        let mut eb = self.to_eigenbasis(rho0);
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    eb[(i, j)] *= factor(self.eigenvalues[i] - self.eigenvalues[j]);
                }
            }
        }
        self.out_of_eigenbasis(&eb)
    }
}

/// `−(1/τ) Ln(1 + iωτ)`, the eigenvalue of the generalized generator.
pub fn generalized_rate(omega: f64, tau: f64) -> Result<C64> {
    ensure_finite("omega", omega)?;
    ensure_positive("tau", tau)?;
    Ok(-principal_log_one_plus_i(omega * tau) / tau)
}

/// Exact solution of the generalized master equation at time `t`.
/// `tau = 0` gives unitary evolution.
pub fn evolve_generalized(
    h: &HermitianGenerator,
    rho0: &DMatrix<C64>,
    tau: f64,
    t: f64,
) -> Result<DMatrix<C64>> {
    check_dims(h, rho0)?;
    ensure_non_negative("tau", tau)?;
    ensure_non_negative("t", t)?;
    Ok(h.propagate_elementwise(rho0, |w| {
        if tau == 0.0 {
            C64::new(0.0, -w * t).exp()
        } else {
            (-(t / tau) * principal_log_one_plus_i(w * tau)).exp()
        }
    }))
}

/// Exact solution of the second-order equation at time `t`: each
/// eigenbasis coherence picks up `e^((−iω − ω²τ/2) t)`.
pub fn evolve_second_order_exact(
    h: &HermitianGenerator,
    rho0: &DMatrix<C64>,
    tau: f64,
    t: f64,
) -> Result<DMatrix<C64>> {
    check_dims(h, rho0)?;
    ensure_non_negative("tau", tau)?;
    ensure_non_negative("t", t)?;
    Ok(h.propagate_elementwise(rho0, |w| C64::new(-0.5 * w * w * tau * t, -w * t).exp()))
}

fn check_dims(h: &HermitianGenerator, rho: &DMatrix<C64>) -> Result<()> {
    if rho.nrows() != h.dim() || rho.ncols() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.nrows(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    dt: f64,
    t_final: f64,
    record_every: usize,
}

impl IntegratorSettings {
    /// Steps of at most `dt` up to `t_final`; every `record_every`-th step
    /// (and the final one) is stored.
    pub fn new(dt: f64, t_final: f64, record_every: usize) -> Result<Self> {
        ensure_positive("dt", dt)?;
        ensure_positive("t_final", t_final)?;
        if dt > t_final {
            return Err(Error::param(
                "dt",
                format!("{dt} exceeds t_final {t_final}"),
            ));
        }
        if t_final / dt > MAX_STEPS {
            return Err(Error::param("dt", format!("more than {MAX_STEPS:e} steps")));
        }
        if record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        Ok(Self {
            dt,
            t_final,
            record_every,
        })
    }

    /// Default step `0.01 / (‖H‖ · max(1, ‖H‖τ))`, capped at `t_final`.
    pub fn default_for(h: &HermitianGenerator, tau: f64, t_final: f64) -> Result<Self> {
        let norm = h.operator_norm();
        let dt = if norm == 0.0 {
            t_final
        } else {
            (0.01 / (norm * (norm * tau).max(1.0))).min(t_final)
        };
        Self::new(dt, t_final, 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    /// Number of equal steps actually taken; the step is shrunk so that
    /// they land exactly on `t_final`.
    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Sampled solution of the second-order master equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DMatrix<C64> {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn purity(&self, i: usize) -> f64 {
        self.states[i].iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn trace(&self, i: usize) -> C64 {
        self.states[i].trace()
    }
}

fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

fn second_order_rhs(h: &DMatrix<C64>, tau: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let c = commutator(h, rho);
    let cc = commutator(h, &c);
    c * C64::new(0.0, -1.0) - cc * C64::new(0.5 * tau, 0.0)
}

/// Integrates `dρ/dt = −i[H, ρ] − (τ/2)[H, [H, ρ]]` with classical RK4.
///
/// `rho0` may be written in any basis. The state is symmetrized after every
/// step to stop Hermiticity drift.
pub fn integrate_second_order(
    h: &HermitianGenerator,
    rho0: &DensityMatrix,
    tau: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    integrate_second_order_from(h, rho0.entries(), 0.0, tau, settings)
}

/// As [`integrate_second_order`], starting from an arbitrary matrix at
/// time `t0` (used to chain runs across a sampling grid).
pub fn integrate_second_order_from(
    h: &HermitianGenerator,
    rho0: &DMatrix<C64>,
    t0: f64,
    tau: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    check_dims(h, rho0)?;
    ensure_non_negative("tau", tau)?;
    let steps = settings.step_count();
    let dt = settings.t_final / steps as f64;
    let hm = h.matrix();
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut rho = rho0.clone();
    let mut times = vec![t0];
    let mut states = vec![rho.clone()];
    for step in 1..=steps {
        let k1 = second_order_rhs(hm, tau, &rho);
        let k2 = second_order_rhs(hm, tau, &(&rho + &k1 * half));
        let k3 = second_order_rhs(hm, tau, &(&rho + &k2 * half));
        let k4 = second_order_rhs(hm, tau, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);

        let t = t0 + dt * step as f64;
        let worst = rho.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        if !worst.is_finite() || worst > INSTABILITY_LIMIT {
            return Err(Error::StepInstability {
                time: t,
                magnitude: worst,
            });
        }
        if step % settings.record_every == 0 || step == steps {
            times.push(if step == steps {
                t0 + settings.t_final
            } else {
                t
            });
            states.push(rho.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// Exact and second-order decay rates of one coherence and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateGap {
    pub gamma_exact: f64,
    pub gamma_second_order: f64,
    /// `(γ₂ − γ_exact) / γ₂`; zero when both rates vanish.
    pub relative_gap: f64,
}

pub fn exact_vs_second_order_gap(omega: f64, tau: f64) -> Result<RateGap> {
    ensure_finite("omega", omega)?;
    ensure_positive("tau", tau)?;
    let x = omega * tau;
    let gamma_exact = (x * x).ln_1p() / (2.0 * tau);
    let gamma_second_order = omega * omega * tau / 2.0;
    let relative_gap = if gamma_second_order == 0.0 {
        0.0
    } else {
        (gamma_second_order - gamma_exact) / gamma_second_order
    };
    Ok(RateGap {
        gamma_exact,
        gamma_second_order,
        relative_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_kernel::ScalingTimes;
    use crate::propagator::{decay_rate, frequency_shift, propagator_factor};

    fn plus() -> DensityMatrix {
        let s = 0.5_f64.sqrt();
        DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap()
    }

    #[test]
    fn generalized_rate_examples() {
        assert_eq!(generalized_rate(0.0, 1e-6).unwrap(), C64::new(0.0, 0.0));
        let (omega, tau) = (1e4, 1e-6); // ωτ = 0.01
        let g = generalized_rate(omega, tau).unwrap();
        let taylor = C64::new(-omega * omega * tau / 2.0, -omega);
        assert!((g - taylor).norm() / taylor.norm() < 1e-4);
        let s = ScalingTimes::equal(tau).unwrap();
        let t = 3e-4;
        let f = propagator_factor(omega, t, s).unwrap();
        assert!(((g * t).exp() - f).norm() < 1e-12);
        let expected = C64::new(
            -decay_rate(omega, s).unwrap(),
            -frequency_shift(omega, s).unwrap(),
        );
        assert!((g - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn gap_examples() {
        let g = exact_vs_second_order_gap(1e4, 1e-6).unwrap();
        assert!(g.relative_gap < 1e-4 && g.relative_gap > 0.0);
        let g = exact_vs_second_order_gap(1.0, 1.0).unwrap();
        assert!((g.gamma_exact - 2f64.ln() / 2.0).abs() < 1e-15);
        assert_eq!(g.gamma_second_order, 0.5);
        assert!((g.relative_gap - (1.0 - 2f64.ln())).abs() < 1e-15);
        let g = exact_vs_second_order_gap(0.0, 1.0).unwrap();
        assert_eq!(
            (g.gamma_exact, g.gamma_second_order, g.relative_gap),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn commuting_state_is_constant() {
        let h = HermitianGenerator::qubit(2.0, 0.0).unwrap();
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let set = IntegratorSettings::new(0.01, 2.0, 10).unwrap();
        let traj = integrate_second_order(&h, &rho, 0.2, &set).unwrap();
        for s in &traj.states {
            assert!((s - rho.entries()).camax() < 1e-15);
        }
    }

    #[test]
    fn small_tau_qubit_decay_matches_exact_rate() {
        let (omega, tau) = (1.0, 0.02);
        let h = HermitianGenerator::qubit(omega, 0.0).unwrap();
        let t_final = 40.0;
        let set = IntegratorSettings::default_for(&h, tau, t_final).unwrap();
        let traj = integrate_second_order(&h, &plus(), tau, &set).unwrap();
        let measured = -(2.0 * traj.last()[(0, 1)].norm()).ln() / t_final;
        let exact = decay_rate(omega, ScalingTimes::equal(tau).unwrap()).unwrap();
        assert!(
            (measured - exact).abs() / exact < 0.01,
            "{measured} vs {exact}"
        );
        assert!((measured - omega * omega * tau / 2.0).abs() < 1e-9);
    }

    #[test]
    fn unitary_limit_keeps_purity() {
        let h = HermitianGenerator::qubit(1.3, 0.7).unwrap();
        let set = IntegratorSettings::new(0.005, 10.0, 50).unwrap();
        let traj = integrate_second_order(&h, &plus(), 0.0, &set).unwrap();
        for i in 0..traj.len() {
            assert!((traj.purity(i) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn instability_is_detected() {
        let h = HermitianGenerator::qubit(100.0, 30.0).unwrap();
        let set = IntegratorSettings::new(0.5, 50.0, 1).unwrap();
        let err = integrate_second_order(&h, &plus(), 1.0, &set).unwrap_err();
        assert!(matches!(err, Error::StepInstability { .. }));
    }

    #[test]
    fn settings_validation() {
        assert!(IntegratorSettings::new(2.0, 1.0, 1).is_err());
        assert!(IntegratorSettings::new(1e-9, 1.0, 1).is_err());
        assert!(IntegratorSettings::new(0.1, 1.0, 0).is_err());
        assert_eq!(
            IntegratorSettings::new(0.3, 1.0, 1).unwrap().step_count(),
            4
        );
        assert_eq!(
            IntegratorSettings::new(0.25, 1.0, 1).unwrap().step_count(),
            4
        );
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!(HermitianGenerator::new(m).is_err());
    }
}
