//! Gamma waiting-time distributions.
//!
//! The averaged evolution at clock time `t` weights the unitary evolution to
//! time `t'` by a Gamma density with shape `t/τ₂` and scale `τ₁`. The same
//! family, with scale `Ωτ`, governs the random pulse area of a fluctuating
//! Rabi drive.
//!
//! Integrals against the density are carried out in the dimensionless
//! variable `λ = t'/θ`. For shapes below 2 the head `(0, 1)` of the
//! integral is mapped through `u = λ^k`, which removes the `λ^(k-1)`
//! endpoint behaviour (a true divergence when `k < 1`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::quadrature::{QuadValue, Quadrature};
use crate::C64;

/// Probability mass left outside the integration window on either side.
pub const TAIL_MASS: f64 = 1e-12;

/// Shapes below this use the `u = λ^k` substitution on the head interval.
const HEAD_SUBSTITUTION_SHAPE: f64 = 2.0;

/// The two scaling times of the waiting-time distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingTimes {
    tau1: f64,
    tau2: f64,
}

impl ScalingTimes {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        ensure_non_negative("tau1", tau1)?;
        ensure_positive("tau2", tau2)?;
        Ok(Self { tau1, tau2 })
    }

    /// Continuous evolution: `τ₁ = τ₂ = τ`.
    pub fn equal(tau: f64) -> Result<Self> {
        ensure_positive("tau", tau)?;
        Ok(Self {
            tau1: tau,
            tau2: tau,
        })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn is_continuous(&self) -> bool {
        self.tau1 == self.tau2
    }
}

/// A Gamma law with the given shape and scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    shape: f64,
    scale: f64,
}

impl GammaLaw {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        ensure_positive("shape", shape)?;
        ensure_positive("scale", scale)?;
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// Density at `x ≥ 0`. At `x = 0` this is `0` for shape > 1, `1/scale`
    /// for shape 1 and `+∞` for shape < 1.
    pub fn density(&self, x: f64) -> Result<f64> {
        ensure_non_negative("x", x)?;
        if x == 0.0 {
            return Ok(match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.scale,
                _ => f64::INFINITY,
            });
        }
        Ok(standard_density(self.shape, x / self.scale) / self.scale)
    }

    /// Cumulative distribution (regularized lower incomplete gamma).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.shape, x / self.scale)
        }
    }

    /// `λ` above which the standard law keeps less than [`TAIL_MASS`].
    pub fn upper_cutoff(&self) -> f64 {
        let k = self.shape;
        let mut lo = f64::MIN_POSITIVE;
        let mut hi = k + 10.0 * k.sqrt() + 40.0;
        while gamma_ur(k, hi) > TAIL_MASS {
            lo = hi;
            hi *= 2.0;
        }
        bisect(|x| gamma_ur(k, x) - TAIL_MASS, lo, hi)
    }

    /// `λ` below which the standard law keeps less than [`TAIL_MASS`]
    /// (zero when the head is integrated by substitution).
    pub fn lower_cutoff(&self) -> f64 {
        let k = self.shape;
        if k < HEAD_SUBSTITUTION_SHAPE || gamma_lr(k, 1.0) > TAIL_MASS {
            return 0.0;
        }
        bisect(|x| gamma_lr(k, x) - TAIL_MASS, 1.0, k)
    }

    /// `E[f(X)]` by quadrature; `f` receives the physical variable `x`.
    pub fn expectation<T, F>(&self, quad: &Quadrature, f: F) -> Result<T>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        let k = self.shape;
        let theta = self.scale;
        let hi = self.upper_cutoff();
        let lo = self.lower_cutoff();
        let weight = |lambda: f64| standard_density(k, lambda);

        if k < HEAD_SUBSTITUTION_SHAPE {
            let head_end = hi.min(1.0);
            let norm = (-ln_gamma(k + 1.0)).exp();
            let head = quad.integrate(
                |u: f64| {
                    let lambda = u.powf(1.0 / k);
                    f(lambda * theta) * ((-lambda).exp() * norm)
                },
                0.0,
                head_end.powf(k),
            )?;
            let tail = quad.integrate(|l: f64| f(l * theta) * weight(l), head_end, hi)?;
            Ok(head.value + tail.value)
        } else {
            let mode = k - 1.0;
            let r = quad.integrate_with_breakpoints(
                |l: f64| f(l * theta) * weight(l),
                lo,
                hi,
                &[mode],
            )?;
            Ok(r.value)
        }
    }

    fn sampler(&self) -> Gamma<f64> {
        Gamma::new(self.shape, self.scale).expect("validated shape and scale")
    }

    /// `count` independent draws from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = self.sampler();
        Ok((0..count).map(|_| g.sample(&mut rng)).collect())
    }

    pub(crate) fn distribution(&self) -> Gamma<f64> {
        self.sampler()
    }
}

/// Standard Gamma(k, 1) density at `λ > 0`, through log-gamma.
fn standard_density(k: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    ((k - 1.0) * lambda.ln() - lambda - ln_gamma(k)).exp()
}

fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Distribution of the random evolution time `t'` at clock time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingTimeDistribution {
    clock_time: f64,
    scaling: ScalingTimes,
    rng_seed: u64,
    law: GammaLaw,
}

impl WaitingTimeDistribution {
    pub fn new(clock_time: f64, scaling: ScalingTimes, rng_seed: u64) -> Result<Self> {
        ensure_positive("t", clock_time)?;
        ensure_positive("tau1", scaling.tau1())?;
        let law = GammaLaw::new(clock_time / scaling.tau2(), scaling.tau1())?;
        Ok(Self {
            clock_time,
            scaling,
            rng_seed,
            law,
        })
    }

    pub fn clock_time(&self) -> f64 {
        self.clock_time
    }

    pub fn scaling(&self) -> ScalingTimes {
        self.scaling
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn law(&self) -> GammaLaw {
        self.law
    }

    /// `P(t, t', τ₁, τ₂)`. Diverges at `t' = 0` when `t < τ₂`, in which
    /// case `+∞` is returned there.
    pub fn density(&self, t_prime: f64) -> Result<f64> {
        self.law.density(t_prime)
    }

    pub fn moments(&self) -> (f64, f64) {
        (self.law.mean(), self.law.variance())
    }

    pub fn sample(&self, count: usize) -> Result<Vec<f64>> {
        self.law.sample(count, self.rng_seed)
    }
}

/// Density of the rescaled time `t'' = (τ₂/τ₁) t'`, which depends on `τ₂`
/// only.
pub fn density_rescaled(t: f64, t_dprime: f64, tau2: f64) -> Result<f64> {
    ensure_positive("t", t)?;
    ensure_positive("tau2", tau2)?;
    GammaLaw::new(t / tau2, tau2)?.density(t_dprime)
}

/// Mean and variance of the evolution time: `(τ₁/τ₂) t` and `(τ₁²/τ₂) t`.
pub fn moments(t: f64, s: ScalingTimes) -> Result<(f64, f64)> {
    ensure_positive("t", t)?;
    let ratio = t / s.tau2();
    Ok((s.tau1() * ratio, s.tau1() * s.tau1() * ratio))
}

/// Random pulse area `A` of a drive with mean Rabi frequency `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAreaDistribution {
    clock_time: f64,
    mean_rabi: f64,
    tau: f64,
    rng_seed: u64,
    law: GammaLaw,
}

impl PulseAreaDistribution {
    pub fn new(clock_time: f64, mean_rabi: f64, tau: f64, rng_seed: u64) -> Result<Self> {
        ensure_positive("t", clock_time)?;
        ensure_positive("mean_rabi", mean_rabi)?;
        ensure_positive("tau", tau)?;
        let law = GammaLaw::new(clock_time / tau, mean_rabi * tau)?;
        Ok(Self {
            clock_time,
            mean_rabi,
            tau,
            rng_seed,
            law,
        })
    }

    pub fn clock_time(&self) -> f64 {
        self.clock_time
    }

    pub fn mean_rabi(&self) -> f64 {
        self.mean_rabi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn law(&self) -> GammaLaw {
        self.law
    }

    pub fn density(&self, area: f64) -> Result<f64> {
        self.law.density(area)
    }

    /// `(Ωt, Ω²tτ)`.
    pub fn moments(&self) -> (f64, f64) {
        (self.law.mean(), self.law.variance())
    }

    pub fn sample(&self, count: usize) -> Result<Vec<f64>> {
        self.law.sample(count, self.rng_seed)
    }
}

/// `|∫ λ^(k-1) e^(-λ) e^(-iλωτ₁) dλ / Γ(k) − (1 + iωτ₁)^(-k)|` with
/// `k = t/τ₂`.
///
/// The head `(0, ε)` is summed from the series of the lower incomplete
/// gamma function; the rest is integrated adaptively up to the
/// `1 − 10⁻¹²` quantile.
pub fn gamma_identity_residual(omega: f64, t: f64, s: ScalingTimes) -> Result<f64> {
    crate::error::ensure_finite("omega", omega)?;
    ensure_positive("t", t)?;
    let k = t / s.tau2();
    let b = omega * s.tau1();
    let law = GammaLaw::new(k, 1.0)?;
    let c = C64::new(1.0, b);
    let hi = law.upper_cutoff();
    let quad = Quadrature::default();
    let integrand = |l: f64| C64::new(0.0, -l * b).exp() * standard_density(k, l);

    let integral = if k < HEAD_SUBSTITUTION_SHAPE {
        let eps = (0.25 / c.norm()).min(hi);
        let head = lower_gamma_series(k, c, eps)? * (-ln_gamma(k)).exp();
        let tail = quad.integrate(integrand, eps, hi)?.value;
        head + tail
    } else {
        let lo = law.lower_cutoff();
        quad.integrate_with_breakpoints(integrand, lo, hi, &[k - 1.0])?
            .value
    };
    let closed = (-k * c.ln()).exp();
    Ok((integral - closed).norm())
}

/// `∫₀^ε λ^(k-1) e^(-cλ) dλ = Σ_j (-c)^j ε^(k+j) / (j! (k+j))`.
fn lower_gamma_series(k: f64, c: C64, eps: f64) -> Result<C64> {
    let mut term = C64::new(eps.powf(k), 0.0); // (-cε)^j ε^k / j!
    let mut sum = term / k;
    for j in 1..200 {
        term *= -c * eps / j as f64;
        let add = term / (k + j as f64);
        sum += add;
        if add.norm() < 1e-18 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::QuadratureFailure {
        error: f64::NAN,
        intervals: 0,
    })
}

/// L1 distance between the pulse-area density and the Gaussian with the
/// same mean `Ωt` and variance `Ω²tτ`.
pub fn gaussian_limit_distance(p: &PulseAreaDistribution) -> Result<f64> {
    let k = p.clock_time / p.tau;
    if k < 1.0 {
        return Err(Error::param("t", "clock_time/tau must be >= 1"));
    }
    // Both laws are scale-free in λ = A/(Ωτ): Gamma(k, 1) vs N(k, k).
    let sd = k.sqrt();
    let gauss = |l: f64| {
        let z = (l - k) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let diff = |l: f64| standard_density(k, l) - gauss(l);

    let law = GammaLaw::new(k, 1.0)?;
    let lo = (k - 40.0 * sd).max(0.0);
    let hi = law.upper_cutoff().max(k + 40.0 * sd);

    // Locate sign changes so the kinks of |diff| fall on breakpoints.
    let grid = 2000;
    let step = (hi - lo) / grid as f64;
    let mut breaks = Vec::new();
    let mut prev_x = lo + 0.5 * step * 1e-6;
    let mut prev = diff(prev_x);
    for i in 1..=grid {
        let x = lo + step * i as f64;
        let v = diff(x);
        if v != 0.0 && prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            breaks.push(bisect(diff, prev_x, x));
        }
        prev = v;
        prev_x = x;
    }
    let quad = Quadrature::default();
    let inside = quad.integrate_with_breakpoints(|l: f64| diff(l).abs(), lo, hi, &breaks)?;

    // Gaussian mass outside [lo, hi] plus the truncated Gamma tails.
    let sqrt2 = std::f64::consts::SQRT_2;
    let gauss_below = 0.5 * erfc((k - lo) / (sd * sqrt2));
    let gauss_above = 0.5 * erfc((hi - k) / (sd * sqrt2));
    let below = if lo > 0.0 { gamma_lr(k, lo) } else { 0.0 };
    let gamma_outside = below + gamma_ur(k, hi);
    Ok(inside.value + gauss_below + gauss_above + gamma_outside)
}
