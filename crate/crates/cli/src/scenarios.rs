//! One runner per scenario. Each produces CSV tables and a map of derived
//! quantities; nothing here touches the file system.

use std::collections::BTreeMap;

use gamma_decoherence::analysis::{fit_damped_cosine, RoundtripModel, TimeSeries};
use gamma_decoherence::gamma_kernel::{gamma_identity_residual, GammaLaw};
use gamma_decoherence::master_equation::{
    evolve_second_order_exact, exact_vs_second_order_gap, integrate_second_order_from,
    HermitianGenerator, IntegratorSettings,
};
use gamma_decoherence::models::interrupted::{interrupted_f, interrupted_linear};
use gamma_decoherence::models::ion::{
    ion_decay_rate, ion_estimate_tau, ion_frequency_ratios, ion_p_down, ion_power_law_exponents,
    ion_rabi_frequency, IonParams,
};
use gamma_decoherence::models::rabi::{
    jc_estimate_tau, jc_p_eg_averaged, jc_p_eg_ideal, RabiQedParams,
};
use gamma_decoherence::models::ramsey::{
    ramsey_epsilon_n, ramsey_gaussian_regime, ramsey_gaussian_width, ramsey_p_eg_averaged,
    ramsey_p_eg_gaussian, ramsey_p_eg_theory, ramsey_visibility, RamseyParams,
};
use gamma_decoherence::monte_carlo::{
    mc_observable_average, mc_phase_average, mc_pulse_area_observable, MCSettings, DEFAULT_SEED,
};
use gamma_decoherence::propagator::propagator_factor;
use gamma_decoherence::quadrature::Quadrature;
use gamma_decoherence::{DensityMatrix, Error, ScalingTimes, WaitingTimeDistribution, C64};

use crate::config::{Diagnostic, Scenario, ScenarioConfig};

/// `|Δ − ε_n|τ` up to which the Gaussian envelope is compared.
pub const GAUSSIAN_COMPARISON_LIMIT: f64 = 0.15;
const MC_CHECK_DEFAULT_SAMPLES: usize = 100_000;

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(file_name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            file_name: file_name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// Shortest round-trip representation; exponent form outside `[1e-4, 1e6)`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub derived: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ScenarioOutput {
    fn put(&mut self, key: &str, value: f64) {
        self.derived.insert(key.to_string(), value);
    }
}

fn diag(e: Error) -> Diagnostic {
    match e {
        Error::InvalidParameter { name, reason } => {
            Diagnostic::new(format!("params.{name}"), reason)
        }
        other => Diagnostic::new("params", other.to_string()),
    }
}

/// Model-level checks on an otherwise well-formed configuration.
pub fn check(c: &ScenarioConfig) -> Vec<Diagnostic> {
    let result = match c.scenario {
        Scenario::RabiQed => rabi_params(c).map(drop),
        Scenario::Ion => ion_params(c).map(drop),
        Scenario::Ramsey => ramsey_params(c, 0.0).map(drop),
        Scenario::Interrupted => interrupted_scaling(c).map(drop),
        Scenario::McCheck => scaling_from(c).map(drop),
        Scenario::MasterEq => master_eq_setup(c).map(drop),
        Scenario::GammaDiag => gamma_diag_law(c).map(drop),
    };
    result.err().into_iter().collect()
}

fn stem(output: &str) -> &str {
    output.strip_suffix(".csv").unwrap_or(output)
}

/// Runs a validated configuration.
pub fn execute(c: &ScenarioConfig) -> Result<ScenarioOutput, Error> {
    let rethrow = |d: Diagnostic| Error::InvalidData(d.to_string());
    match c.scenario {
        Scenario::RabiQed => run_rabi(c, rabi_params(c).map_err(rethrow)?),
        Scenario::Ion => run_ion(c, ion_params(c).map_err(rethrow)?),
        Scenario::Ramsey => run_ramsey(c),
        Scenario::Interrupted => run_interrupted(c, interrupted_scaling(c).map_err(rethrow)?),
        Scenario::McCheck => run_mc_check(c, scaling_from(c).map_err(rethrow)?),
        Scenario::MasterEq => run_master_eq(c, master_eq_setup(c).map_err(rethrow)?),
        Scenario::GammaDiag => run_gamma_diag(c, gamma_diag_law(c).map_err(rethrow)?),
    }
}

fn req(c: &ScenarioConfig, key: &str) -> f64 {
    c.param(key)
        .unwrap_or_else(|| panic!("schema guarantees `{key}`"))
}

// ---------------------------------------------------------------- rabi-qed

fn rabi_params(c: &ScenarioConfig) -> Result<RabiQedParams, Diagnostic> {
    RabiQedParams::new(req(c, "rabi"), req(c, "tau")).map_err(|e| match e {
        Error::InvalidParameter {
            name: "rabi_frequency",
            reason,
        } => Diagnostic::new("params.rabi", reason),
        other => diag(other),
    })
}

/// `(p_mc, std_error)` columns; exact at `t = 0` and for `τ = 0`.
fn mc_columns<F>(
    mc: &MCSettings,
    t: f64,
    tau: f64,
    exact: f64,
    sample: F,
) -> Result<[f64; 2], Error>
where
    F: FnOnce(&MCSettings) -> Result<gamma_decoherence::monte_carlo::MCEstimate<f64>, Error>,
{
    if t == 0.0 || tau == 0.0 {
        return Ok([exact, 0.0]);
    }
    let e = sample(mc)?;
    Ok([e.value, e.std_error])
}

fn run_rabi(c: &ScenarioConfig, p: RabiQedParams) -> Result<ScenarioOutput, Error> {
    let mut out = ScenarioOutput::default();
    let mut header = vec!["t_s", "p_ideal", "p_averaged"];
    if c.mc.is_some() {
        header.extend(["p_mc", "p_mc_stderr"]);
    }
    let mut table = Table::new(c.output.clone(), &header);
    let tau = p.tau();
    for t in c.grid.points() {
        let mut row = vec![t, jc_p_eg_ideal(&p, t), jc_p_eg_averaged(&p, t)];
        if let Some(mc) = &c.mc {
            row.extend(mc_columns(mc, t, tau, row[1], |mc| {
                mc_observable_average(|tp| jc_p_eg_ideal(&p, tp), t, ScalingTimes::equal(tau)?, mc)
            })?);
        }
        table.rows.push(row);
    }

    let rates = p.rates();
    out.put("rabi_rad_s", p.rabi_frequency());
    out.put("rabi_tau", p.rabi_frequency() * tau);
    out.put("nu_rad_s", rates.nu);
    out.put("gamma_exact_per_s", rates.gamma);
    out.put("gamma_small_tau_per_s", p.small_tau_rate());
    if tau > 0.0 {
        out.put("decay_time_exact_s", 1.0 / rates.gamma);
        out.put("decay_time_small_tau_s", 1.0 / p.small_tau_rate());
        let est = jc_estimate_tau(rates.gamma, p.rabi_frequency())?;
        out.put("tau_from_exact_gamma_s", est.tau);
        if let Some(w) = est.warning {
            out.notes.push(w.to_string());
        }
    }
    fit_into(
        &mut out,
        &table,
        "p_averaged",
        Some(RoundtripModel::Jc {
            rabi: p.rabi_frequency(),
        }),
    );
    out.tables.push(table);
    Ok(out)
}

/// Fits a damped cosine to one column and records the result.
fn fit_into(out: &mut ScenarioOutput, table: &Table, column: &str, model: Option<RoundtripModel>) {
    let series = TimeSeries::new(
        table.column("t_s").expect("time column"),
        table.column(column).expect("fitted column"),
    );
    let result = series.and_then(|s| match model {
        Some(m) => m.estimate_tau(&s).map(|(tau, fit)| (Some(tau), fit)),
        None => fit_damped_cosine(&s).map(|fit| (None, fit)),
    });
    match result {
        Ok((tau, fit)) => {
            out.put("fit_gamma_per_s", fit.gamma);
            out.put("fit_nu_rad_s", fit.nu);
            out.put("fit_rms_residual", fit.rms_residual);
            if let Some(tau) = tau {
                out.put("fit_tau_s", tau);
            }
        }
        Err(e) => out
            .notes
            .push(format!("damped-cosine fit of {column} skipped: {e}")),
    }
}

// --------------------------------------------------------------------- ion

struct IonSetup {
    params: IonParams,
    n_max: usize,
}

fn ion_params(c: &ScenarioConfig) -> Result<IonSetup, Diagnostic> {
    let eta = req(c, "lamb_dicke");
    let base = match (c.param("base_rabi"), c.param("omega0")) {
        (Some(b), _) => b,
        (None, Some(w0)) => IonParams::base_rabi_for(w0, eta).map_err(diag)?,
        (None, None) => unreachable!("schema guarantees one of omega0, base_rabi"),
    };
    let fock_n = c.param("fock_n").unwrap_or(0.0) as usize;
    let n_max = c.param("n_max").unwrap_or(16.0) as usize;
    if n_max < 4 {
        return Err(Diagnostic::new("params.n_max", "must be at least 4"));
    }
    let mut params = IonParams::new(base, eta, 0.0, fock_n).map_err(|e| match e {
        Error::OutOfRange { .. } => Diagnostic::new("params.fock_n", e.to_string()),
        other => diag(other),
    })?;
    if n_max > gamma_decoherence::models::ion::MAX_FOCK {
        return Err(Diagnostic::new(
            "params.n_max",
            format!(
                "must not exceed {}",
                gamma_decoherence::models::ion::MAX_FOCK
            ),
        ));
    }
    params.tau = match (c.param("tau"), c.param("gamma0")) {
        (Some(t), _) => t,
        (None, Some(g0)) => {
            let omega0 = ion_rabi_frequency(&params.with_fock(0).map_err(diag)?);
            ion_estimate_tau(g0, omega0).map_err(diag)?
        }
        (None, None) => unreachable!("schema guarantees one of tau, gamma0"),
    };
    let params = IonParams::new(params.base_rabi, eta, params.tau, fock_n).map_err(diag)?;
    Ok(IonSetup { params, n_max })
}

fn run_ion(c: &ScenarioConfig, setup: IonSetup) -> Result<ScenarioOutput, Error> {
    let p = setup.params;
    let ideal = IonParams { tau: 0.0, ..p };
    let omega_n = ion_rabi_frequency(&p);
    let mut out = ScenarioOutput::default();
    let mut header = vec!["t_s", "p_ideal", "p_averaged"];
    if c.mc.is_some() {
        header.extend(["p_mc", "p_mc_stderr"]);
    }
    let mut table = Table::new(c.output.clone(), &header);
    for t in c.grid.points() {
        let mut row = vec![t, ion_p_down(&ideal, t), ion_p_down(&p, t)];
        if let Some(mc) = &c.mc {
            row.extend(mc_columns(mc, t, p.tau, row[1], |mc| {
                mc_pulse_area_observable(|a| 0.5 * (1.0 + (2.0 * a).cos()), omega_n, p.tau, t, mc)
            })?);
        }
        table.rows.push(row);
    }
    if c.mc.is_some() && p.tau > 0.0 {
        out.notes.push(
            "p_mc samples the pulse area and so carries the exact damping and frequency shift; \
             p_averaged uses the small-tau rate 2*Omega_n^2*tau"
                .into(),
        );
    }

    let exps = ion_power_law_exponents(p.lamb_dicke, setup.n_max)?;
    let ratios = ion_frequency_ratios(p.lamb_dicke, setup.n_max)?;
    let mut ratio_table = Table::new(
        format!("{}_ratios.csv", stem(&c.output)),
        &[
            "n",
            "ratio",
            "fitted_power_law",
            "anchored_power_law",
            "gamma_n_per_s",
        ],
    );
    for &(n, r) in &ratios {
        let x = (n + 1) as f64;
        ratio_table.rows.push(vec![
            n as f64,
            r,
            exps.fit.prefactor * x.powf(exps.freq_exponent),
            x.powf(exps.freq_exponent),
            ion_decay_rate(&p.with_fock(n)?, false),
        ]);
    }

    out.put("omega_n_rad_s", omega_n);
    out.put("base_rabi_rad_s", p.base_rabi);
    out.put("tau_s", p.tau);
    out.put("gamma_n_small_tau_per_s", ion_decay_rate(&p, false));
    out.put("gamma_n_exact_per_s", ion_decay_rate(&p, true));
    out.put("freq_exponent", exps.freq_exponent);
    out.put("decay_exponent", exps.decay_exponent);
    out.put("max_fitted_residual", exps.max_residual);
    out.put("max_anchored_residual", exps.anchored_residual);
    if p.outside_lamb_dicke_regime() {
        out.notes.push(format!(
            "lamb_dicke = {} is outside the Lamb-Dicke regime",
            p.lamb_dicke
        ));
    }
    if p.tau > 0.0 {
        fit_into(
            &mut out,
            &table,
            "p_averaged",
            Some(RoundtripModel::Ion {
                omega0: omega_n,
                lamb_dicke: p.lamb_dicke,
            }),
        );
    }
    out.tables.push(table);
    out.tables.push(ratio_table);
    Ok(out)
}

// ------------------------------------------------------------------ ramsey

fn ramsey_params(c: &ScenarioConfig, detuning: f64) -> Result<RamseyParams, Diagnostic> {
    RamseyParams::new(
        detuning,
        req(c, "dispersive_shift"),
        req(c, "waist_ratio"),
        req(c, "flight_time"),
        c.param("mean_photon").unwrap_or(0.0),
        req(c, "tau"),
    )
    .map_err(diag)
}

fn run_ramsey(c: &ScenarioConfig) -> Result<ScenarioOutput, Error> {
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        c.output.clone(),
        &[
            "delta_rad_s",
            "p_theory",
            "p_averaged",
            "p_gaussian",
            "visibility",
        ],
    );
    let mut worst_gap: f64 = 0.0;
    let mut outside = 0usize;
    let mut base = None;
    for delta in c.grid.points() {
        let p = ramsey_params(c, delta).map_err(|d| Error::InvalidData(d.to_string()))?;
        let (avg, gauss) = (ramsey_p_eg_averaged(&p), ramsey_p_eg_gaussian(&p));
        table.rows.push(vec![
            delta,
            ramsey_p_eg_theory(&p),
            avg,
            gauss,
            ramsey_visibility(&p),
        ]);
        if (p.fringe_frequency() * p.tau).abs() <= GAUSSIAN_COMPARISON_LIMIT {
            worst_gap = worst_gap.max((avg - gauss).abs());
        }
        if ramsey_gaussian_regime(&p).is_some() {
            outside += 1;
        }
        base.get_or_insert(p);
    }
    let p = base.expect("grid has at least two points");
    out.put("epsilon_n_rad_s", ramsey_epsilon_n(&p, p.mean_photon));
    out.put("interaction_time_s", p.interaction_time());
    if p.tau > 0.0 {
        out.put(
            "sigma_delta_rad_s",
            ramsey_gaussian_width(p.flight_time, p.tau)?,
        );
        out.put("gaussian_max_abs_deviation", worst_gap);
    }
    if outside > 0 {
        out.notes.push(format!(
            "{outside} grid points lie outside the Gaussian-envelope regime |delta - epsilon_n|*tau <= {}",
            gamma_decoherence::models::ramsey::GAUSSIAN_REGIME_LIMIT
        ));
    }
    out.tables.push(table);
    Ok(out)
}

// ------------------------------------------------------------- interrupted

fn interrupted_scaling(c: &ScenarioConfig) -> Result<ScalingTimes, Diagnostic> {
    let s = ScalingTimes::new(req(c, "tau1"), req(c, "tau2")).map_err(diag)?;
    interrupted_f(0.0, s).map_err(diag)?;
    Ok(s)
}

fn run_interrupted(c: &ScenarioConfig, s: ScalingTimes) -> Result<ScenarioOutput, Error> {
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(c.output.clone(), &["t", "F", "linear_approx", "abs_err"]);
    let mut worst: f64 = 0.0;
    for t in c.grid.points() {
        let f = interrupted_f(t, s)?;
        let lin = interrupted_linear(t, s);
        worst = worst.max((f - lin).abs());
        table.rows.push(vec![t, f, lin, (f - lin).abs()]);
    }
    out.put("max_abs_err", worst);
    out.put("error_bound", s.tau2() - s.tau1());
    out.tables.push(table);
    Ok(out)
}

// ---------------------------------------------------------------- mc-check

fn scaling_from(c: &ScenarioConfig) -> Result<ScalingTimes, Diagnostic> {
    match (c.param("tau"), c.param("tau1"), c.param("tau2")) {
        (Some(t), None, None) => ScalingTimes::equal(t).map_err(diag),
        (Some(_), _, _) => Err(Diagnostic::new(
            "params.tau1",
            "give either tau or tau1/tau2",
        )),
        (None, tau1, Some(tau2)) => {
            let s = ScalingTimes::new(tau1.unwrap_or(tau2), tau2).map_err(diag)?;
            if s.tau1() == 0.0 {
                return Err(Diagnostic::new("params.tau1", "must be > 0"));
            }
            Ok(s)
        }
        (None, _, None) => Err(Diagnostic::new(
            "params.tau",
            "missing required parameter `tau`",
        )),
    }
}

fn run_mc_check(c: &ScenarioConfig, s: ScalingTimes) -> Result<ScenarioOutput, Error> {
    let mc = match c.mc {
        Some(m) => m,
        None => MCSettings::with_samples(MC_CHECK_DEFAULT_SAMPLES, DEFAULT_SEED)?,
    };
    let omega = req(c, "omega");
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        c.output.clone(),
        &[
            "t_s",
            "re_exact",
            "im_exact",
            "re_mc",
            "im_mc",
            "std_error",
            "z_score",
        ],
    );
    let mut worst: f64 = 0.0;
    for t in c.grid.points() {
        let exact = propagator_factor(omega, t, s)?;
        let (value, se) = if t == 0.0 {
            (C64::new(1.0, 0.0), 0.0)
        } else {
            let e = mc_phase_average(omega, t, s, &mc)?;
            (e.value, e.std_error)
        };
        let z = gamma_decoherence::monte_carlo::MCEstimate {
            value,
            std_error: se,
            n_samples: mc.n_samples(),
        }
        .z_score(exact);
        worst = worst.max(z);
        table
            .rows
            .push(vec![t, exact.re, exact.im, value.re, value.im, se, z]);
    }
    out.put("max_z_score", worst);
    out.put("n_samples", mc.n_samples() as f64);
    out.put("seed", mc.seed() as f64);
    out.tables.push(table);
    Ok(out)
}

// --------------------------------------------------------------- master-eq

struct MasterEqSetup {
    h: HermitianGenerator,
    tau: f64,
    dt: f64,
}

fn master_eq_setup(c: &ScenarioConfig) -> Result<MasterEqSetup, Diagnostic> {
    let h = HermitianGenerator::qubit(req(c, "splitting"), c.param("drive").unwrap_or(0.0))
        .map_err(diag)?;
    let tau = req(c, "tau");
    if tau.is_nan() || tau < 0.0 {
        return Err(Diagnostic::new("params.tau", "must be >= 0"));
    }
    let span = c.grid.stop;
    let dt = match c.param("dt") {
        Some(dt) if dt > 0.0 => dt,
        Some(_) => return Err(Diagnostic::new("params.dt", "must be > 0")),
        None => IntegratorSettings::default_for(&h, tau, span)
            .map_err(diag)?
            .dt(),
    };
    if span / dt > 1e8 {
        return Err(Diagnostic::new(
            "params.dt",
            "more than 1e8 steps over the grid",
        ));
    }
    Ok(MasterEqSetup { h, tau, dt })
}

fn run_master_eq(c: &ScenarioConfig, m: MasterEqSetup) -> Result<ScenarioOutput, Error> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(s, 0.0)])?;
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        c.output.clone(),
        &["t_s", "re_rho01", "im_rho01", "purity", "trace"],
    );
    let mut rho = plus.entries().clone();
    let mut now = 0.0;
    let mut worst: f64 = 0.0;
    for t in c.grid.points() {
        if t > now {
            let span = t - now;
            let settings = IntegratorSettings::new(m.dt.min(span), span, usize::MAX)?;
            let traj = integrate_second_order_from(&m.h, &rho, now, m.tau, &settings)?;
            rho = traj.last().clone();
            now = t;
        }
        let exact = evolve_second_order_exact(&m.h, plus.entries(), m.tau, t)?;
        worst = worst.max(
            (&rho - &exact)
                .iter()
                .fold(0.0, |a: f64, c| a.max(c.norm())),
        );
        let purity: f64 = rho.iter().map(|c| c.norm_sqr()).sum();
        table.rows.push(vec![
            t,
            rho[(0, 1)].re,
            rho[(0, 1)].im,
            purity,
            rho.trace().re,
        ]);
    }
    let ev = m.h.eigenvalues();
    let omega = (ev[1] - ev[0]).abs();
    out.put("bohr_frequency_rad_s", omega);
    out.put("dt_s", m.dt);
    out.put("max_deviation_from_exact", worst);
    if m.tau > 0.0 && omega > 0.0 {
        let gap = exact_vs_second_order_gap(omega, m.tau)?;
        out.put("gamma_second_order_per_s", gap.gamma_second_order);
        out.put("gamma_exact_per_s", gap.gamma_exact);
        out.put("relative_rate_gap", gap.relative_gap);
    }
    out.tables.push(table);
    Ok(out)
}

// -------------------------------------------------------------- gamma-diag

fn gamma_diag_law(c: &ScenarioConfig) -> Result<WaitingTimeDistribution, Diagnostic> {
    let s = scaling_from(c)?;
    WaitingTimeDistribution::new(req(c, "t"), s, DEFAULT_SEED).map_err(diag)
}

fn run_gamma_diag(c: &ScenarioConfig, d: WaitingTimeDistribution) -> Result<ScenarioOutput, Error> {
    let law: GammaLaw = d.law();
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(c.output.clone(), &["t_prime", "density", "cdf"]);
    for x in c.grid.points() {
        table.rows.push(vec![x, d.density(x)?, law.cdf(x)]);
    }
    let (mean, var) = d.moments();
    out.put("shape", law.shape());
    out.put("scale_s", law.scale());
    out.put("mean_s", mean);
    out.put("variance_s2", var);
    let q = Quadrature::default();
    out.put("normalization", law.expectation(&q, |_| 1.0)?);
    if let Some(omega) = c.param("omega") {
        out.put(
            "identity_residual",
            gamma_identity_residual(omega, d.clock_time(), d.scaling())?,
        );
    }
    out.tables.push(table);
    Ok(out)
}
