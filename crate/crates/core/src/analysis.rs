//! Parameter recovery from synthetic curves.
//!
//! [`fit_damped_cosine`] recovers `(γ, ν)` from `offset + amplitude·e^(−γt)cos νt`
//! by a periodogram peak, a grid over frequency and damping with the linear
//! parameters solved exactly, and a projected Levenberg–Marquardt refinement
//! of the best few grid candidates. [`fit_power_law`] is an ordinary
//! log-log least-squares fit.

use std::io::{Read, Write};

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::models::ion::{ion_estimate_tau, ion_p_down, IonParams};
use crate::models::rabi::{jc_estimate_tau, jc_p_eg_averaged, RabiQedParams};

/// Minimum number of samples accepted by [`fit_damped_cosine`].
pub const MIN_FIT_POINTS: usize = 8;
/// A fit whose rms residual exceeds this fraction of the data range fails.
pub const MAX_RMS_FRACTION: f64 = 0.1;

const PERIODOGRAM_OVERSAMPLING: f64 = 8.0;
const GAMMA_GRID: usize = 32;
const REFINED_CANDIDATES: usize = 5;
const LM_MAX_ITER: usize = 500;

/// Samples `(t, y)` with strictly increasing, finite `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} times but {} values",
                t.len(),
                y.len()
            )));
        }
        if let Some(i) = (0..t.len()).find(|&i| !t[i].is_finite() || !y[i].is_finite()) {
            return Err(Error::InvalidData(format!("non-finite sample at row {i}")));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "times not strictly increasing at row {}",
                i + 1
            )));
        }
        Ok(Self { t, y })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
    }

    /// Samples `f` on `n` evenly spaced times in `[t_start, t_stop]`.
    pub fn sample<F: Fn(f64) -> f64>(f: F, t_start: f64, t_stop: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n_points", "need at least 2 points"));
        }
        let t: Vec<f64> = (0..n)
            .map(|i| t_start + (t_stop - t_start) * i as f64 / (n - 1) as f64)
            .collect();
        let y = t.iter().map(|&x| f(x)).collect();
        Self::new(t, y)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.y.iter().copied())
    }

    fn range(&self) -> f64 {
        let (lo, hi) = self
            .y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedCosineFit {
    pub gamma: f64,
    pub nu: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    /// Rms residual of the best refined candidate at a clearly different
    /// frequency; infinite when no such candidate exists.
    pub runner_up_rms: f64,
}

impl DampedCosineFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-self.gamma * t).exp() * (self.nu * t).cos()
    }
}

/// Model parameters in scaled time `s = t / t_max`.
#[derive(Debug, Clone, Copy)]
struct Params {
    offset: f64,
    amplitude: f64,
    gamma: f64,
    nu: f64,
}

struct Problem<'a> {
    s: Vec<f64>,
    y: &'a [f64],
}

impl Problem<'_> {
    fn ssr(&self, p: &Params) -> f64 {
        self.s
            .iter()
            .zip(self.y)
            .map(|(&s, &y)| {
                let r = p.offset + p.amplitude * (-p.gamma * s).exp() * (p.nu * s).cos() - y;
                r * r
            })
            .sum()
    }

    /// Best offset and amplitude for a fixed basis function, with the SSR.
    fn linear_solve(&self, basis: &[f64]) -> (f64, f64, f64) {
        let n = self.y.len() as f64;
        let (mut sb, mut sbb, mut sy, mut sby) = (0.0, 0.0, 0.0, 0.0);
        for (&b, &y) in basis.iter().zip(self.y) {
            sb += b;
            sbb += b * b;
            sy += y;
            sby += b * y;
        }
        let det = n * sbb - sb * sb;
        let (offset, amplitude) = if det.abs() <= 1e-12 * n * sbb.max(f64::MIN_POSITIVE) {
            (sy / n, 0.0)
        } else {
            ((sbb * sy - sb * sby) / det, (n * sby - sb * sy) / det)
        };
        let ssr = basis
            .iter()
            .zip(self.y)
            .map(|(&b, &y)| {
                let r = offset + amplitude * b - y;
                r * r
            })
            .sum();
        (offset, amplitude, ssr)
    }

    /// Projected Levenberg–Marquardt on all four parameters, keeping `γ ≥ 0`.
    fn refine(&self, start: Params) -> (Params, f64) {
        let mut p = start;
        let mut ssr = self.ssr(&p);
        let mut lambda = 1e-3;
        for _ in 0..LM_MAX_ITER {
            let mut jtj = Matrix4::<f64>::zeros();
            let mut jtr = Vector4::<f64>::zeros();
            for (&s, &y) in self.s.iter().zip(self.y) {
                let e = (-p.gamma * s).exp();
                let (sin, cos) = (p.nu * s).sin_cos();
                let r = p.offset + p.amplitude * e * cos - y;
                let j = Vector4::new(
                    1.0,
                    e * cos,
                    -p.amplitude * s * e * cos,
                    -p.amplitude * s * e * sin,
                );
                jtj += j * j.transpose();
                jtr += j * r;
            }
            let mut improved = false;
            while lambda < 1e12 {
                let mut a = jtj;
                for k in 0..4 {
                    a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
                }
                let Some(delta) = a.lu().solve(&(-jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = Params {
                    offset: p.offset + delta[0],
                    amplitude: p.amplitude + delta[1],
                    gamma: (p.gamma + delta[2]).max(0.0),
                    nu: p.nu + delta[3],
                };
                let trial_ssr = self.ssr(&trial);
                if trial_ssr < ssr {
                    let gain = ssr - trial_ssr;
                    p = trial;
                    ssr = trial_ssr;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = gain > 1e-15 * ssr.max(f64::MIN_POSITIVE) && ssr > 0.0;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        (p, ssr)
    }
}

fn periodogram_peak(s: &[f64], y: &[f64]) -> Option<f64> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let span = s[n - 1] - s[0];
    let mut gaps: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let nyquist = std::f64::consts::PI / gaps[gaps.len() / 2];
    let step = 2.0 * std::f64::consts::PI / (span * PERIODOGRAM_OVERSAMPLING);
    let count = (nyquist / step).floor() as usize;
    let powers: Vec<(f64, f64)> = (1..=count)
        .into_par_iter()
        .map(|k| {
            let w = step * k as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (&t, &v) in s.iter().zip(&centered) {
                let (sin, cos) = (w * t).sin_cos();
                re += v * cos;
                im += v * sin;
            }
            (w, re * re + im * im)
        })
        .collect();
    powers
        .into_iter()
        .fold(None, |best: Option<(f64, f64)>, (w, pw)| match best {
            Some((_, bp)) if pw <= bp => best,
            _ => Some((w, pw)),
        })
        .filter(|&(_, pw)| pw > 0.0)
        .map(|(w, _)| w)
}

/// Fits `offset + amplitude·e^(−γt)cos νt` with `γ ≥ 0`.
pub fn fit_damped_cosine(series: &TimeSeries) -> Result<DampedCosineFit> {
    let n = series.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InvalidData(format!(
            "need at least {MIN_FIT_POINTS} points, got {n}"
        )));
    }
    let range = series.range();
    let scale_y = series.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if range <= 1e-12 * scale_y.max(f64::MIN_POSITIVE) {
        return Err(Error::FitFailure(
            "constant series: amplitude and damping are unidentifiable".into(),
        ));
    }
    let t_max = series.t[n - 1];
    if t_max <= 0.0 {
        return Err(Error::InvalidData("times must extend above zero".into()));
    }
    let problem = Problem {
        s: series.t.iter().map(|t| t / t_max).collect(),
        y: &series.y,
    };
    let peak = periodogram_peak(&problem.s, problem.y)
        .ok_or_else(|| Error::FitFailure("no oscillation found in the periodogram".into()))?;

    let span = problem.s[n - 1] - problem.s[0];
    let lobe = 2.0 * std::f64::consts::PI / span;
    let nu_count = ((peak / lobe) * 8.0).ceil().clamp(200.0, 4000.0) as usize + 1;
    let nus: Vec<f64> = (0..nu_count)
        .map(|i| peak * (0.5 + i as f64 / (nu_count - 1) as f64))
        .collect();
    let mut gammas = vec![0.0];
    gammas.extend((0..GAMMA_GRID - 1).map(|i| {
        let lo: f64 = 0.01 / span;
        let hi: f64 = 30.0 / span;
        lo * (hi / lo).powf(i as f64 / (GAMMA_GRID - 2) as f64)
    }));
    let envelopes: Vec<Vec<f64>> = gammas
        .iter()
        .map(|g| problem.s.iter().map(|s| (-g * s).exp()).collect())
        .collect();

    // Best (γ, offset, amplitude, ssr) for each grid frequency.
    let profile: Vec<(Params, f64)> = nus
        .par_iter()
        .map(|&nu| {
            let cos: Vec<f64> = problem.s.iter().map(|s| (nu * s).cos()).collect();
            let mut basis = vec![0.0; n];
            let mut best: Option<(Params, f64)> = None;
            for (g, env) in gammas.iter().zip(&envelopes) {
                for k in 0..n {
                    basis[k] = env[k] * cos[k];
                }
                let (offset, amplitude, ssr) = problem.linear_solve(&basis);
                if best.as_ref().is_none_or(|b| ssr < b.1) {
                    best = Some((
                        Params {
                            offset,
                            amplitude,
                            gamma: *g,
                            nu,
                        },
                        ssr,
                    ));
                }
            }
            best.expect("non-empty damping grid")
        })
        .collect();

    // Local minima of the frequency profile, best first, ties to lower ν.
    let mut minima: Vec<usize> = (0..profile.len())
        .filter(|&i| {
            let left = i == 0 || profile[i].1 <= profile[i - 1].1;
            let right = i + 1 == profile.len() || profile[i].1 <= profile[i + 1].1;
            left && right
        })
        .collect();
    minima.sort_by(|&a, &b| profile[a].1.total_cmp(&profile[b].1).then(a.cmp(&b)));
    minima.truncate(REFINED_CANDIDATES);

    let mut refined: Vec<(Params, f64)> = minima
        .par_iter()
        .map(|&i| problem.refine(profile[i].0))
        .collect();
    refined.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.nu.total_cmp(&b.0.nu)));
    let (best, best_ssr) = refined[0];
    let runner_up = refined
        .iter()
        .skip(1)
        .find(|c| (c.0.nu - best.nu).abs() > 0.01 * best.nu.abs())
        .map_or(f64::INFINITY, |c| (c.1 / n as f64).sqrt());

    let rms = (best_ssr / n as f64).sqrt();
    if !rms.is_finite() || rms > MAX_RMS_FRACTION * range {
        return Err(Error::FitFailure(format!(
            "rms residual {rms:e} exceeds {} of the data range {range:e}",
            MAX_RMS_FRACTION
        )));
    }
    Ok(DampedCosineFit {
        gamma: best.gamma / t_max,
        nu: best.nu.abs() / t_max,
        offset: best.offset,
        amplitude: best.amplitude,
        rms_residual: rms,
        runner_up_rms: runner_up,
    })
}

/// Least-squares power law `value ≈ prefactor·(n + 1)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// `max |fit/value − 1|` over the data.
    pub max_rel_residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, n: usize) -> f64 {
        self.prefactor * ((n + 1) as f64).powf(self.exponent)
    }
}

fn check_pairs(pairs: &[(usize, f64)]) -> Result<()> {
    if let Some(&(n, v)) = pairs.iter().find(|p| !(p.1.is_finite() && p.1 > 0.0)) {
        return Err(Error::InvalidData(format!(
            "value {v} at n = {n} is not positive"
        )));
    }
    Ok(())
}

pub fn fit_power_law(pairs: &[(usize, f64)]) -> Result<PowerLawFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidData(format!(
            "need at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    check_pairs(pairs)?;
    let xs: Vec<f64> = pairs.iter().map(|p| ((p.0 + 1) as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidData("all pairs share the same n".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let exponent = sxy / sxx;
    let prefactor = (ybar - exponent * xbar).exp();
    let mut fit = PowerLawFit {
        prefactor,
        exponent,
        max_rel_residual: 0.0,
    };
    fit.max_rel_residual = pairs
        .iter()
        .map(|&(n, v)| (fit.eval(n) / v - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

/// `max |value/pred − 1|` for the power law `pred = value₀·((n+1)/(n₀+1))^exponent`
/// pinned to the first pair.
pub fn anchored_power_law_residual(pairs: &[(usize, f64)], exponent: f64) -> Result<f64> {
    let Some(&(n0, v0)) = pairs.first() else {
        return Err(Error::InvalidData("no pairs".into()));
    };
    check_pairs(pairs)?;
    Ok(pairs
        .iter()
        .map(|&(n, v)| {
            let pred = v0 * ((n + 1) as f64 / (n0 + 1) as f64).powf(exponent);
            (v / pred - 1.0).abs()
        })
        .fold(0.0, f64::max))
}

/// Which closed-form estimator closes a round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundtripModel {
    /// Vacuum Rabi oscillation at the given `Ω_R` (rad/s).
    Jc { rabi: f64 },
    /// Blue-sideband oscillation of the `n = 0` pair at sideband frequency
    /// `Ω₀` (rad/s) and Lamb–Dicke parameter `η`.
    Ion { omega0: f64, lamb_dicke: f64 },
}

impl RoundtripModel {
    /// `Ω_R/2π = 25 kHz`.
    pub fn jc_default() -> Self {
        RoundtripModel::Jc {
            rabi: 2.0 * std::f64::consts::PI * 25e3,
        }
    }

    /// `Ω₀/2π = 94 kHz`, `η = 0.202`.
    pub fn ion_default() -> Self {
        RoundtripModel::Ion {
            omega0: 2.0 * std::f64::consts::PI * 94e3,
            lamb_dicke: 0.202,
        }
    }

    fn oscillation_frequency(&self) -> f64 {
        match *self {
            RoundtripModel::Jc { rabi } => 2.0 * rabi,
            RoundtripModel::Ion { omega0, .. } => 2.0 * omega0,
        }
    }

    /// Synthetic averaged data for the given `τ`: about three decay times
    /// (or twenty periods when undamped) at twenty points per period.
    pub fn synthesize(&self, tau: f64) -> Result<TimeSeries> {
        ensure_non_negative("tau", tau)?;
        let w = self.oscillation_frequency();
        let period = 2.0 * std::f64::consts::PI / w;
        let gamma_small = 0.5 * w * w * tau;
        let t_stop = if gamma_small > 0.0 {
            (3.0 / gamma_small).clamp(10.0 * period, 2000.0 * period)
        } else {
            20.0 * period
        };
        let n = ((t_stop / period) * 20.0).ceil() as usize + 1;
        match *self {
            RoundtripModel::Jc { rabi } => {
                let p = RabiQedParams::new(rabi, tau)?;
                TimeSeries::sample(|t| jc_p_eg_averaged(&p, t), 0.0, t_stop, n)
            }
            RoundtripModel::Ion { omega0, lamb_dicke } => {
                let base = IonParams::base_rabi_for(omega0, lamb_dicke)?;
                let p = IonParams::new(base, lamb_dicke, tau, 0)?;
                TimeSeries::sample(|t| ion_p_down(&p, t), 0.0, t_stop, n)
            }
        }
    }

    /// `τ` from a damped-cosine fit, using the fitted frequency as `2Ω`.
    pub fn estimate_tau(&self, series: &TimeSeries) -> Result<(f64, DampedCosineFit)> {
        let fit = fit_damped_cosine(series)?;
        let omega = 0.5 * fit.nu;
        if fit.gamma <= 0.0 {
            return Ok((0.0, fit));
        }
        let tau = match self {
            RoundtripModel::Jc { .. } => jc_estimate_tau(fit.gamma, omega)?.tau,
            RoundtripModel::Ion { .. } => ion_estimate_tau(fit.gamma, omega)?,
        };
        Ok((tau, fit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roundtrip {
    pub estimated_tau: f64,
    /// `|τ_est − τ|/τ`, or the absolute `τ_est` when `τ = 0`.
    pub relative_error: f64,
    pub fit: DampedCosineFit,
}

/// Synthesizes averaged data with `true_tau`, fits it and re-estimates `τ`.
pub fn roundtrip_tau(model: RoundtripModel, true_tau: f64) -> Result<Roundtrip> {
    let series = model.synthesize(true_tau)?;
    let (estimated_tau, fit) = model.estimate_tau(&series)?;
    let relative_error = if true_tau == 0.0 {
        estimated_tau.abs()
    } else {
        (estimated_tau - true_tau).abs() / true_tau
    };
    Ok(Roundtrip {
        estimated_tau,
        relative_error,
        fit,
    })
}

/// Copy of `series` with i.i.d. normal noise of standard deviation `sigma`.
pub fn add_gaussian_noise(series: &TimeSeries, sigma: f64, seed: u64) -> Result<TimeSeries> {
    ensure_positive("sigma", sigma)?;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = series
        .y
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    TimeSeries::new(series.t.clone(), y)
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidData(e.to_string())
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: [&str; 2]) -> Result<()> {
    let header = reader.headers().map_err(csv_error)?;
    if header.len() != 2 || header.iter().zip(expected).any(|(h, e)| h.trim() != e) {
        return Err(Error::InvalidData(format!(
            "expected header `{},{}`, found `{}`",
            expected[0],
            expected[1],
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

/// Reads a `t,y` CSV.
pub fn read_time_series<R: Read>(input: R) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    check_header(&mut reader, ["t", "y"])?;
    let rows: Vec<(f64, f64)> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)?;
    TimeSeries::from_points(&rows)
}

pub fn write_time_series<W: Write>(series: &TimeSeries, output: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(["t", "y"]).map_err(csv_error)?;
    for (t, y) in series.points() {
        writer
            .write_record([t.to_string(), y.to_string()])
            .map_err(csv_error)?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidData(e.to_string()))
}

/// Reads an `n,value` CSV.
pub fn read_pairs<R: Read>(input: R) -> Result<Vec<(usize, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    check_header(&mut reader, ["n", "value"])?;
    reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)
}

pub fn write_pairs<W: Write>(pairs: &[(usize, f64)], output: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(["n", "value"]).map_err(csv_error)?;
    for (n, v) in pairs {
        writer
            .write_record([n.to_string(), v.to_string()])
            .map_err(csv_error)?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidData(e.to_string()))
}
