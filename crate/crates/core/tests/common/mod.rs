#![allow(dead_code)]

use gamma_decoherence::{DensityMatrix, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `GG†/Tr(GG†)` for a complex Ginibre matrix `G`.
pub fn ginibre_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let mut draw = || -> f64 { StandardNormal.sample(&mut *rng) };
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(draw(), draw()));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let mut rho = m / tr;
    for i in 0..n {
        rho[(i, i)].im = 0.0;
    }
    let h = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(h).expect("Ginibre state is valid")
}

pub fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// `L_n¹(x) = Σ_j (−1)^j C(n+1, n−j) x^j / j!`.
pub fn laguerre_binomial(n: usize, x: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..=n {
        let mut binom = 1.0;
        for i in 0..(n - j) {
            binom *= (n + 1 - i) as f64 / (i + 1) as f64;
        }
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * x.powi(j as i32) / fact;
    }
    sum
}
