//! Subcommand bodies. Each returns the files it wrote.

use std::path::PathBuf;

use log::info;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use ylyap::io::{write_json_file, write_path_csv_file, write_series_csv_file};
use ylyap::lyapunov::{self, discrete_spectrum, exponent_bound, nonregularity};
use ylyap::path::{self, Interval, SampledPath};
use ylyap::solver::picard_solve;
use ylyap::stochastic::{self, AssumptionThresholds};
use ylyap::triangular::{self, TriangularYDE};
use ylyap::young::{self, young_integral, young_integral_trapezoid, young_loeve_defect_bound};

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub base: PathBuf,
    pub out: PathBuf,
}

impl Context {
    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Driver and the equation on the driver's span.
    fn load(&self) -> Result<(SampledPath, ylyap::LinearYDE), CliError> {
        let omega = self.cfg.driver(&self.base)?;
        info!("driver: {} nodes on [{}, {}]", omega.len(), omega.start(), omega.end());
        let eq = self.cfg.equation(&self.base, omega.end())?;
        Ok((omega, eq))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
        let f = self.file(name);
        write_json_file(value, &f)?;
        written.push(f);
        Ok(())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct IntegrateOut {
    window: Interval,
    left_point: Vec<Vec<f64>>,
    trapezoid: Vec<Vec<f64>>,
    /// `|∫C dω - C(a)(ω(b) - ω(a))|` (Frobenius).
    defect: f64,
    /// `K |||C|||_{q-var} |||ω|||_{p-var}`.
    defect_bound: f64,
    c_qvar: f64,
    omega_pvar: f64,
    k: f64,
    holds: bool,
}

pub fn integrate(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (omega, eq) = ctx.load()?;
    let window = ctx.cfg.window(ctx.cfg.integrate.window)?;
    let (c, om) = young::merge_grids(eq.c(), &omega, window)?;
    let left = young_integral(&c, &om, window)?;
    let trap = young_integral_trapezoid(&c, &om, window)?;
    let params = eq.params();
    let c_qvar = path::p_variation_seminorm(&c, params.q, window)?;
    let omega_pvar = path::p_variation_seminorm(&om, params.p, window)?;
    let (i, j) = om.window_indices(window)?;
    let c_a = c.matrix(i);
    let defect = (&left - c_a * (om.scalar_value(j) - om.scalar_value(i))).norm();
    let defect_bound = young_loeve_defect_bound(c_qvar, omega_pvar, params);
    info!("integral over [{}, {}]: defect {defect:e}, bound {defect_bound:e}", window.a, window.b);
    let out = IntegrateOut {
        window,
        left_point: rows(&left),
        trapezoid: rows(&trap),
        defect,
        defect_bound,
        c_qvar,
        omega_pvar,
        k: params.k,
        holds: defect <= defect_bound * (1.0 + 1e-12),
    };
    let mut written = Vec::new();
    ctx.json("integrate.json", &out, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct SolveOut {
    window: Interval,
    x0: Vec<f64>,
    final_value: Vec<f64>,
    iterations: Vec<usize>,
    greedy_times: Vec<f64>,
    sup_norm: f64,
    pvar_seminorm: f64,
    growth_bound: f64,
    pvar_bound: f64,
    bounds_hold: bool,
    m_star: f64,
    mu: f64,
    eta: f64,
    omega_pvar: f64,
}

pub fn solve(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (omega, eq) = ctx.load()?;
    let window = ctx.cfg.window(ctx.cfg.solve.window)?;
    let d = eq.dim();
    let x0 = ctx.cfg.solve.x0.clone().unwrap_or_else(|| (0..d).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect());
    let rep = picard_solve(&eq, &DVector::from_vec(x0.clone()), &omega, window, &ctx.cfg.solve_options())?;
    info!("solved on {} greedy intervals", rep.partition.count);
    let mut written = Vec::new();
    let f = ctx.file("solution.csv");
    write_path_csv_file(&rep.solution, &f)?;
    written.push(f);
    let out = SolveOut {
        window,
        x0,
        final_value: rep.final_value().iter().copied().collect(),
        iterations: rep.iterations.clone(),
        greedy_times: rep.partition.taus.clone(),
        sup_norm: rep.sup_norm,
        pvar_seminorm: rep.pvar_norm,
        growth_bound: rep.growth_bound,
        pvar_bound: rep.pvar_bound,
        bounds_hold: rep.bounds_hold(),
        m_star: rep.m_star,
        mu: rep.mu,
        eta: rep.eta,
        omega_pvar: rep.omega_pvar,
    };
    ctx.json("solve.json", &out, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct SpectrumOut<'a> {
    estimate: &'a lyapunov::SpectrumEstimate,
    /// `Γ_p` of the driver over the horizon (unit windows).
    gamma_p: f64,
    exponent_bound: f64,
    within_bound: bool,
}

pub fn spectrum(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (omega, eq) = ctx.load()?;
    let n = &ctx.cfg.numerics;
    let (series, est) = discrete_spectrum(&eq, &omega, n.t0, n.horizon, &ctx.cfg.spectrum_options())?;
    info!("spectrum {:?}", est.lambdas);
    let gamma = stochastic::gamma_p(&omega, n.p, n.horizon.floor() as usize)?;
    let bound = exponent_bound(&eq, gamma, n.mu)?;
    let mut written = Vec::new();
    let f = ctx.file("series.csv");
    write_series_csv_file(&series, &f)?;
    written.push(f);
    let out = SpectrumOut {
        estimate: &est,
        gamma_p: gamma,
        exponent_bound: bound,
        within_bound: est.lambdas.iter().all(|l| l.abs() <= bound),
    };
    ctx.json("spectrum.json", &out, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct AgreementRow {
    k: usize,
    triangular: f64,
    numerical: f64,
    difference: f64,
}

#[derive(Serialize)]
struct OracleOut<'a> {
    oracle: &'a triangular::TriangularSpectrum,
    numerical: &'a lyapunov::SpectrumEstimate,
    agreement: Vec<AgreementRow>,
    max_difference: f64,
    tolerance: f64,
    agree: bool,
    truncation_warning: Option<String>,
}

pub fn oracle(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    if !ctx.cfg.system.triangular {
        return Err(CliError::Config(vec!["system.triangular: the oracle needs a triangular system".into()]));
    }
    let (omega, eq) = ctx.load()?;
    let n = &ctx.cfg.numerics;
    let tri = TriangularYDE::new(eq.clone())?;
    let oracle = triangular::triangular_spectrum(&tri, n.t0 + n.horizon, ctx.cfg.oracle.exactness_tol)?;
    let (_, est) = discrete_spectrum(&eq, &omega, n.t0, n.horizon, &ctx.cfg.spectrum_options())?;
    let agreement: Vec<AgreementRow> = oracle
        .spectrum
        .iter()
        .zip(&est.lambdas)
        .enumerate()
        .map(|(k, (&t, &l))| AgreementRow { k: k + 1, triangular: t, numerical: l, difference: (t - l).abs() })
        .collect();
    let max_difference = agreement.iter().map(|r| r.difference).fold(0.0, f64::max);
    let mut written = Vec::new();
    let mut truncation_warning = None;
    if ctx.cfg.oracle.fundamental {
        let fund = triangular::triangular_fundamental(&tri, &omega, n.horizon, Some(n.t_max.unwrap_or(omega.end())), 1e-6)?;
        if let Some(w) = &fund.truncation_warning {
            log::warn!("{w}");
        }
        truncation_warning = fund.truncation_warning.clone();
        let f = ctx.file("fundamental.csv");
        write_path_csv_file(&fund.to_path()?, &f)?;
        written.push(f);
    }
    info!("oracle {:?} vs numerical {:?}", oracle.spectrum, est.lambdas);
    let out = OracleOut {
        oracle: &oracle,
        numerical: &est,
        agreement,
        max_difference,
        tolerance: ctx.cfg.oracle.tolerance,
        agree: max_difference <= ctx.cfg.oracle.tolerance,
        truncation_warning,
    };
    ctx.json("oracle.json", &out, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct RegularityOut {
    report: lyapunov::RegularityReport,
    /// Diagonal-mean criterion, for triangular systems only.
    triangular: Option<triangular::RegularityVerdict>,
}

pub fn regularity(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (omega, eq) = ctx.load()?;
    let n = &ctx.cfg.numerics;
    let report = nonregularity(&eq, &omega, n.t0, n.horizon, &ctx.cfg.spectrum_options(), ctx.cfg.regularity.threshold)?;
    let triangular = if ctx.cfg.system.triangular {
        let tri = TriangularYDE::new(eq.clone())?;
        Some(triangular::regularity_criterion(&tri, n.t0 + n.horizon, ctx.cfg.oracle.exactness_tol)?)
    } else {
        None
    };
    info!("σ = {:e}, regular = {}", report.sigma, report.regular);
    let mut written = Vec::new();
    ctx.json("regularity.json", &RegularityOut { report, triangular }, &mut written)?;
    Ok(written)
}

pub fn assumptions(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (omega, eq) = ctx.load()?;
    let n = &ctx.cfg.numerics;
    let c_diag = (0..eq.dim()).map(|k| eq.c().component(k, k)).collect::<ylyap::Result<Vec<_>>>()?;
    let a = &ctx.cfg.assumptions;
    let thresholds = AssumptionThresholds { h3: a.h3, gamma_drift: a.gamma_drift, h4: a.h4 };
    let rep = stochastic::check_assumptions(&omega, &c_diag, n.p, n.horizon.floor() as usize, thresholds)?;
    info!("verdicts {:?}", rep.verdicts);
    let mut written = Vec::new();
    ctx.json("assumptions.json", &rep, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    members: usize,
    failures: usize,
    flagged: bool,
    mean: &'a [f64],
    variance: &'a [f64],
    std_dev: &'a [f64],
    moments: &'a [[f64; 4]],
    tail_dispersion: &'a [f64],
    exceed_fraction: f64,
    second_moment_ok: bool,
}

pub fn ensemble(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let Some(spec) = ctx.cfg.fbm_spec() else {
        return Err(CliError::Config(vec!["driver.kind: ensembles need an fbm driver".into()]));
    };
    let eq = ctx.cfg.equation(&ctx.base, spec.horizon)?;
    let n = &ctx.cfg.numerics;
    let members = ctx.cfg.ensemble.members;
    info!("ensemble of {members} members, horizon {}", n.horizon);
    let rep = stochastic::ensemble_spectrum(&eq, &spec, members, n.horizon, &ctx.cfg.spectrum_options())?;
    let mut written = Vec::new();
    let dir = ctx.file("members");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for m in &rep.members {
        let f = dir.join(format!("member_{:05}.json", m.index));
        write_json_file(m, &f)?;
        written.push(f);
    }
    let summary = EnsembleSummary {
        members: rep.members.len(),
        failures: rep.failures,
        flagged: rep.flagged,
        mean: &rep.mean,
        variance: &rep.variance,
        std_dev: &rep.std_dev,
        moments: &rep.moments,
        tail_dispersion: &rep.tail_dispersion,
        exceed_fraction: rep.exceed_fraction,
        second_moment_ok: rep.second_moment_ok,
    };
    ctx.json("ensemble.json", &summary, &mut written)?;
    Ok(written)
}
