//! Sampling estimates of time- and pulse-area averages.
//!
//! Draws are produced in fixed blocks of [`BLOCK_LEN`] samples; block `b`
//! owns the ChaCha stream `(seed, b)`. The sample sequence therefore depends
//! only on `(seed, n_samples)`, never on how the work is split across
//! threads. Error bars come from [`STAT_BATCHES`] contiguous batch means.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::gamma_kernel::{GammaLaw, PulseAreaDistribution, ScalingTimes, WaitingTimeDistribution};
use crate::quadrature::QuadValue;
use crate::C64;

pub const DEFAULT_SEED: u64 = 0xDEC0_4E5E;
pub const STAT_BATCHES: usize = 100;
pub const BLOCK_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCSettings {
    n_samples: usize,
    seed: u64,
    batch_size: usize,
}

impl MCSettings {
    /// `batch_size` is the number of samples per parallel work item; it
    /// has no influence on the result.
    pub fn new(n_samples: usize, seed: u64, batch_size: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::param("n_samples", "must be at least 1"));
        }
        if batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        Ok(Self {
            n_samples,
            seed,
            batch_size,
        })
    }

    pub fn with_samples(n_samples: usize, seed: u64) -> Result<Self> {
        Self::new(n_samples, seed, 1 << 16)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate<T> {
    pub value: T,
    pub std_error: f64,
    pub n_samples: usize,
}

impl MCEstimate<C64> {
    /// `|value − reference| / std_error`; infinite when the error bar is
    /// zero and the values differ.
    pub fn z_score(&self, reference: C64) -> f64 {
        z((self.value - reference).norm(), self.std_error)
    }
}

impl MCEstimate<f64> {
    pub fn z_score(&self, reference: f64) -> f64 {
        z((self.value - reference).abs(), self.std_error)
    }
}

fn z(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn pairwise_sum<T: QuadValue>(xs: &[T]) -> T {
    if xs.len() <= 64 {
        xs.iter().fold(T::zero(), |acc, &x| acc + x)
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// `E[f(X)]` for `X` drawn from `law`.
pub fn mc_expectation<T, F>(law: &GammaLaw, f: F, mc: &MCSettings) -> MCEstimate<T>
where
    T: QuadValue + Send + Sync,
    F: Fn(f64) -> T + Sync,
{
    let n = mc.n_samples;
    let dist = law.distribution();
    let blocks = n.div_ceil(BLOCK_LEN);
    let blocks_per_task = mc.batch_size.div_ceil(BLOCK_LEN).max(1);

    let mut values: Vec<T> = vec![T::zero(); n];
    values
        .par_chunks_mut(BLOCK_LEN * blocks_per_task)
        .enumerate()
        .for_each(|(task, chunk)| {
            for (offset, block) in chunk.chunks_mut(BLOCK_LEN).enumerate() {
                let mut rng = block_rng(mc.seed, task * blocks_per_task + offset);
                for v in block.iter_mut() {
                    *v = f(dist.sample(&mut rng));
                }
            }
        });
    debug_assert_eq!(values.len().div_ceil(BLOCK_LEN), blocks);

    let batches = STAT_BATCHES.min(n);
    let bounds: Vec<usize> = (0..=batches).map(|g| g * n / batches).collect();
    let sums: Vec<T> = bounds
        .windows(2)
        .map(|w| pairwise_sum(&values[w[0]..w[1]]))
        .collect();
    let total = pairwise_sum(&sums);
    let mean = total * (1.0 / n as f64);

    let std_error = if batches < 2 {
        0.0
    } else {
        let ss: f64 = bounds
            .windows(2)
            .zip(&sums)
            .map(|(w, &s)| {
                let m = s * (1.0 / (w[1] - w[0]) as f64);
                (m - mean).magnitude().powi(2)
            })
            .sum();
        (ss / (batches * (batches - 1)) as f64).sqrt()
    };
    MCEstimate {
        value: mean,
        std_error,
        n_samples: n,
    }
}

/// Sample average of `e^(-iωt')` over the waiting-time distribution;
/// converges to `(1 + iωτ₁)^(-t/τ₂)`.
pub fn mc_phase_average(
    omega: f64,
    t: f64,
    s: ScalingTimes,
    mc: &MCSettings,
) -> Result<MCEstimate<C64>> {
    ensure_finite("omega", omega)?;
    let d = WaitingTimeDistribution::new(t, s, mc.seed)?;
    Ok(mc_expectation(
        &d.law(),
        |tp| C64::new(0.0, -omega * tp).exp(),
        mc,
    ))
}

/// Sample average of a real observable of the evolution time.
pub fn mc_observable_average<F>(
    observable: F,
    t: f64,
    s: ScalingTimes,
    mc: &MCSettings,
) -> Result<MCEstimate<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    let d = WaitingTimeDistribution::new(t, s, mc.seed)?;
    Ok(mc_expectation(&d.law(), observable, mc))
}

/// Sample average of `e^(-iω̃A)` over the pulse-area distribution;
/// converges to `(1 + iω̃Ωτ)^(-t/τ)`.
pub fn mc_pulse_area_average(
    omega_tilde: f64,
    mean_rabi: f64,
    tau: f64,
    t: f64,
    mc: &MCSettings,
) -> Result<MCEstimate<C64>> {
    ensure_finite("omega_tilde", omega_tilde)?;
    ensure_positive("mean_rabi", mean_rabi)?;
    let d = PulseAreaDistribution::new(t, mean_rabi, tau, mc.seed)?;
    Ok(mc_expectation(
        &d.law(),
        |a| C64::new(0.0, -omega_tilde * a).exp(),
        mc,
    ))
}

/// Sample average of a real function of the pulse area.
pub fn mc_pulse_area_observable<F>(
    observable: F,
    mean_rabi: f64,
    tau: f64,
    t: f64,
    mc: &MCSettings,
) -> Result<MCEstimate<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    let d = PulseAreaDistribution::new(t, mean_rabi, tau, mc.seed)?;
    Ok(mc_expectation(&d.law(), observable, mc))
}
