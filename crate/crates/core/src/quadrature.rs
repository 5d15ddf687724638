//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature on finite
//! intervals, for real and complex integrands.

// The node and weight tables keep the published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::C64;

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_814_785_316,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 20_000,
        }
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).magnitude())
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<T, F>(&self, f: F, a: f64, b: f64) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        self.integrate_with_breakpoints(f, a, b, &[])
    }

    /// Integrates `f` over `[a, b]`, starting from a partition at the given
    /// interior points (kinks, peaks, discontinuities).
    pub fn integrate_with_breakpoints<T, F>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breakpoints: &[f64],
    ) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::param(
                "interval",
                format!("[{a}, {b}] is not finite"),
            ));
        }
        if a == b {
            return Ok(QuadResult {
                value: T::zero(),
                error: 0.0,
                intervals: 0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|p| *p > lo && *p < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap = BinaryHeap::new();
        let mut total = T::zero();
        let mut total_err = 0.0;
        let mut left = lo;
        for right in cuts.into_iter().chain(std::iter::once(hi)) {
            let (value, error) = kronrod21(&f, left, right);
            total = total + value;
            total_err += error;
            heap.push(Segment {
                a: left,
                b: right,
                value,
                error,
            });
            left = right;
        }

        while total_err > self.abs_tol.max(self.rel_tol * total.magnitude()) {
            if heap.len() >= self.max_intervals {
                return Err(Error::QuadratureFailure {
                    error: total_err,
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Interval can no longer be split in floating point.
                return Err(Error::QuadratureFailure {
                    error: total_err,
                    intervals: heap.len() + 1,
                });
            }
            let (v1, e1) = kronrod21(&f, worst.a, mid);
            let (v2, e2) = kronrod21(&f, mid, worst.b);
            total = total - worst.value + v1 + v2;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }

        // Re-sum to shed the drift accumulated by incremental updates.
        let intervals = heap.len();
        let mut segments = heap.into_vec();
        segments.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
        let error = segments.iter().map(|s| s.error).sum();
        Ok(QuadResult {
            value: value * sign,
            error,
            intervals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        // x^k on [0, 1] integrates to 1/(k+1); K21 is exact through degree 31.
        for k in 0..=31 {
            let (v, _) = kronrod21(&|x: f64| x.powi(k), 0.0, 1.0);
            assert!((v - 1.0 / f64::from(k + 1)).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn gauss_subrule_is_exact_through_degree_19() {
        for k in 0..=19 {
            let (_, err) = kronrod21(&|x: f64| x.powi(k), -1.0, 1.0);
            assert!(err < 1e-14, "degree {k}: {err}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = Quadrature::default();
        let r = q.integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        let q = Quadrature::default();
        let w = 50.0;
        let r = q
            .integrate(|x: f64| C64::new(0.0, -w * x).exp(), 0.0, 1.0)
            .unwrap();
        let exact = (C64::new(0.0, -w).exp() - 1.0) / C64::new(0.0, -w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let q = Quadrature::default();
        let r = q.integrate(|x: f64| x, 1.0, 0.0).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_at_kinks() {
        let q = Quadrature::default();
        let r = q
            .integrate_with_breakpoints(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3])
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = Quadrature {
            max_intervals: 4,
            ..Quadrature::default()
        };
        let err = q
            .integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }
}
