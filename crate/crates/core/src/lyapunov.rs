//! Lyapunov exponents of the discrete-time flow `Φ(t0, t0 + jh)`.
//!
//! Both estimators propagate an orthonormal frame with one QR step per
//! `h`-step (Benettin). The QR estimator accumulates `log|R_kk|`. The SVD
//! estimator additionally keeps the accumulated triangular factor
//! `T = R_m ⋯ R_1` in graded form `T = diag(e^{l}) U` with `U` unit upper
//! triangular, and reads singular values and right singular vectors of the
//! flow from it by block deflation, so that exponentially separated
//! singular values never share one floating-point matrix.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{self, DET_FLOOR};
use crate::path::{self, Interval, SampledPath};
use crate::solver::{self, eta, flow_matrix, resolve_mu, LinearYDE, SolveOptions};

/// Row blocks whose log-scales differ by more than this are deflated separately.
const GRADE_GAP: f64 = 36.0;

/// Largest `(1/t) log|h(t)|` over the trailing `tail_fraction` of the grid.
///
/// Returns `f64::NEG_INFINITY` when `h` vanishes on the whole tail
/// (`log 0 = -∞`). Nodes with `t <= 0` are skipped.
pub fn chi(h: &SampledPath, tail_fraction: f64) -> f64 {
    let span = h.span();
    let cut = span.b - tail_fraction.clamp(0.0, 1.0) * span.length();
    let mut best = f64::NEG_INFINITY;
    for (i, &t) in h.times().iter().enumerate() {
        if t < cut || t <= 0.0 {
            continue;
        }
        let n = path::norm(h.value(i));
        if n > 0.0 {
            best = best.max(n.ln() / t);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qr,
    Svd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Step of the discrete-time flow.
    pub h: f64,
    pub method: Method,
    /// Fraction of checkpoints averaged for the final exponents.
    pub tail_fraction: f64,
    pub solve: SolveOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { h: 1.0, method: Method::Qr, tail_fraction: 0.2, solve: SolveOptions::default() }
    }
}

/// Exponent estimates at every checkpoint `t0 + jh`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSeries {
    pub method: Method,
    pub t0: f64,
    pub times: Vec<f64>,
    /// Sorted nonincreasing at every checkpoint.
    pub lambdas: Vec<Vec<f64>>,
    /// `log|det Φ(t0, t)|`.
    pub logdet: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub method: Method,
    /// Tail averages, nonincreasing.
    pub lambdas: Vec<f64>,
    /// Largest value over the tail (limsup-style).
    pub lambdas_max: Vec<f64>,
    pub tail_window: (f64, f64),
    /// Tail standard deviation per exponent.
    pub dispersion: Vec<f64>,
    /// Orthonormal; its trailing `k` columns span the estimate of `E_k` at `t0`.
    pub flag_basis: DMatrix<f64>,
}

/// A fixed generic orthogonal starting frame.
fn initial_frame(d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| {
        let x = (i * d + j) as f64;
        (1.3 * x + 0.7).sin() + if i == j { 2.0 } else { 0.0 }
    });
    linalg::orthonormalize(&m)
}

/// One-step matrices `Φ(t0 + jh, t0 + (j+1)h)`, `j < steps`, solved in parallel.
pub fn one_step_flows(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    h: f64,
    steps: usize,
    opts: &SolveOptions,
) -> Result<Vec<DMatrix<f64>>> {
    (0..steps)
        .into_par_iter()
        .map(|j| {
            let s = t0 + h * j as f64;
            flow_matrix(eq, omega, s, s + h, opts)
        })
        .collect()
}

/// Accumulated factor `T = diag(e^{l}) U`.
struct Graded {
    l: Vec<f64>,
    u: DMatrix<f64>,
}

impl Graded {
    fn identity(d: usize) -> Self {
        Graded { l: vec![0.0; d], u: DMatrix::identity(d, d) }
    }

    /// `T ← R T`.
    fn push(&mut self, r: &DMatrix<f64>) -> Result<()> {
        let d = self.l.len();
        let new_l: Vec<f64> = (0..d).map(|i| self.l[i] + r[(i, i)].abs().ln()).collect();
        let mut scaled = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                scaled[(i, j)] = r[(i, j)] * (self.l[j] - new_l[i]).exp();
            }
        }
        self.u = scaled * &self.u;
        self.l = new_l;
        if self.u.iter().any(|x| !x.is_finite() || x.abs() > 1e150) {
            return Err(Error::Degenerate("graded triangular factor overflowed".into()));
        }
        Ok(())
    }

    /// Log singular values (descending) and matching right singular vectors.
    fn svd(&self) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.l.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| self.l[b].total_cmp(&self.l[a]));
        let mut basis = DMatrix::<f64>::identity(d, d);
        let rows = &self.u;
        let mut log_sv = Vec::with_capacity(d);
        let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(d);
        let mut k = 0;
        while k < d {
            let mut end = k + 1;
            while end < d && self.l[order[end - 1]] - self.l[order[end]] < GRADE_GAP {
                end += 1;
            }
            let top = self.l[order[k]];
            let r = basis.ncols();
            let block = end - k;
            let mut m = DMatrix::zeros(r, block);
            for (bi, &oi) in order[k..end].iter().enumerate() {
                let w = (self.l[oi] - top).exp();
                let proj = rows.row(oi) * &basis;
                for c in 0..r {
                    m[(c, bi)] = w * proj[c];
                }
            }
            let (sigma, dirs) = one_sided_jacobi(m);
            for (s, dir) in sigma.iter().zip(&dirs) {
                log_sv.push(s.ln() + top);
                vectors.push(&basis * dir);
            }
            if block >= r {
                break;
            }
            let mut ext = DMatrix::zeros(r, block + r);
            for (j, dir) in dirs.iter().enumerate() {
                ext.set_column(j, dir);
            }
            ext.view_mut((0, block), (r, r)).fill_with_identity();
            let q = ext.qr().q();
            let rest: Vec<DVector<f64>> = (block..r).map(|c| q.column(c).into_owned()).collect();
            basis = &basis * DMatrix::from_columns(&rest);
            k = end;
        }
        (log_sv, DMatrix::from_columns(&vectors))
    }
}

/// Singular values and left singular vectors of `m` by one-sided Jacobi, sorted descending.
///
/// Column scaling does not hurt the relative accuracy, which is what the graded factor needs.
fn one_sided_jacobi(mut m: DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let n = m.ncols();
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let a = m.column(i).norm_squared();
                let b = m.column(j).norm_squared();
                let g = m.column(i).dot(&m.column(j));
                if g == 0.0 || g.abs() <= f64::EPSILON * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ci = m.column(i).into_owned();
                let cj = m.column(j).into_owned();
                m.set_column(i, &(&ci * c - &cj * s));
                m.set_column(j, &(&ci * s + &cj * c));
            }
        }
        if !rotated {
            break;
        }
    }
    let mut out: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|j| {
            let s = m.column(j).norm();
            let dir = if s > 0.0 { m.column(j) / s } else { m.column(j).into_owned() };
            (s, dir)
        })
        .collect();
    out.sort_by(|x, y| y.0.total_cmp(&x.0));
    out.into_iter().unzip()
}

fn tail_stats(series: &[Vec<f64>], tail_fraction: f64) -> (usize, Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = series.len();
    let count = ((m as f64 * tail_fraction).ceil() as usize).clamp(1, m);
    let start = m - count;
    let d = series[0].len();
    let tail = &series[start..];
    let mean: Vec<f64> = (0..d).map(|k| tail.iter().map(|v| v[k]).sum::<f64>() / count as f64).collect();
    let std: Vec<f64> = (0..d)
        .map(|k| (tail.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / count as f64).sqrt())
        .collect();
    let max: Vec<f64> = (0..d).map(|k| tail.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    (start, mean, std, max)
}

/// Lyapunov spectrum from the one-step flows over `[t0, t0 + horizon]`.
pub fn discrete_spectrum(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    horizon: f64,
    opts: &SpectrumOptions,
) -> Result<(ExponentSeries, SpectrumEstimate)> {
    if !(opts.h > 0.0) {
        return domain(format!("step must be positive, got {}", opts.h));
    }
    let steps = (horizon / opts.h).round() as usize;
    if !(horizon > 0.0) || steps < 10 || (steps as f64 * opts.h - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return domain(format!("horizon {horizon} must be a multiple of h = {} with at least 10 steps", opts.h));
    }
    if !(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0) {
        return domain("tail fraction must lie in (0, 1]");
    }
    let flows = one_step_flows(eq, omega, t0, opts.h, steps, &opts.solve)?;
    spectrum_from_flows(&flows, t0, opts)
}

/// Orthonormal frame advanced by `Φ Q = Q' R` with a positive diagonal in `R`.
struct Frame {
    q: DMatrix<f64>,
}

impl Frame {
    fn step(&mut self, phi: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        let qr = (phi * &self.q).qr();
        let mut q = qr.q();
        let mut r = qr.r();
        for k in 0..r.nrows() {
            let rkk = r[(k, k)];
            if rkk.abs() < DET_FLOOR {
                return Err(Error::Degenerate(format!("|R_kk| = {rkk:e} for k = {k} at t = {t}")));
            }
            if rkk < 0.0 {
                q.column_mut(k).neg_mut();
                r.row_mut(k).neg_mut();
            }
        }
        self.q = q;
        Ok(r)
    }
}

/// Spectrum from precomputed one-step matrices (checkpoints `t0 + jh`, `j = 1..=flows.len()`).
///
/// The QR estimate starts from the identity frame, which keeps triangular
/// systems triangular. The SVD estimate and the flag start from a fixed
/// generic frame so that the accumulated factor becomes graded in the
/// Oseledets order.
pub fn spectrum_from_flows(
    flows: &[DMatrix<f64>],
    t0: f64,
    opts: &SpectrumOptions,
) -> Result<(ExponentSeries, SpectrumEstimate)> {
    let d = flows.first().map(|f| f.nrows()).ok_or_else(|| Error::Domain("no flow steps".into()))?;
    let q0 = initial_frame(d);
    let mut plain = Frame { q: DMatrix::identity(d, d) };
    let mut generic = Frame { q: q0.clone() };
    let mut sums = vec![0.0; d];
    let mut graded = Graded::identity(d);
    let mut times = Vec::with_capacity(flows.len());
    let mut lambdas = Vec::with_capacity(flows.len());
    let mut logdet = Vec::with_capacity(flows.len());
    for (j, phi) in flows.iter().enumerate() {
        let t = opts.h * (j + 1) as f64;
        let r = plain.step(phi, t0 + t)?;
        for (k, s) in sums.iter_mut().enumerate() {
            *s += r[(k, k)].ln();
        }
        logdet.push(sums.iter().sum());
        graded.push(&generic.step(phi, t0 + t)?)?;
        let mut row = match opts.method {
            Method::Qr => sums.iter().map(|s| s / t).collect::<Vec<_>>(),
            Method::Svd => graded.svd().0.iter().map(|s| s / t).collect(),
        };
        row.sort_by(|a, b| b.total_cmp(a));
        times.push(t0 + t);
        lambdas.push(row);
    }
    let (start, mean, dispersion, max) = tail_stats(&lambdas, opts.tail_fraction);
    let flag_basis = &q0 * graded.svd().1;
    let estimate = SpectrumEstimate {
        method: opts.method,
        lambdas: mean,
        lambdas_max: max,
        tail_window: (times[start], *times.last().unwrap()),
        dispersion,
        flag_basis,
    };
    Ok((ExponentSeries { method: opts.method, t0, times, lambdas, logdet }, estimate))
}

/// `η[2 + (2M₀/μ)^p (1 + Γ_p)]` for given `M₀`.
pub fn exponent_bound_value(m0: f64, p: f64, gamma_p: f64, mu: Option<f64>) -> Result<f64> {
    if !(gamma_p >= 0.0) {
        return domain(format!("Γ_p must be nonnegative, got {gamma_p}"));
    }
    let (m, mu) = resolve_mu(m0, mu)?;
    Ok(eta(mu) * (2.0 + (2.0 * m / mu).powf(p) * (1.0 + gamma_p)))
}

/// Bound on every `|λ_k|` given the driver statistic `Γ_p`, with `M₀` over unit windows.
pub fn exponent_bound(eq: &LinearYDE, gamma_p: f64, mu: Option<f64>) -> Result<f64> {
    exponent_bound_value(eq.m0(1.0)?, eq.params().p, gamma_p, mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub sum_lambda: f64,
    /// Tail minimum of `(1/t) log|det Φ(t0, t)|`.
    pub det_liminf: f64,
    pub sigma: f64,
    pub lambdas: Vec<f64>,
    /// Adjoint exponents, nondecreasing.
    pub adjoint_lambdas: Vec<f64>,
    /// `α_i + β_i` with `α` nonincreasing and `β` nondecreasing.
    pub perron_defects: Vec<f64>,
    pub threshold: f64,
    pub regular: bool,
}

/// Coefficient of nonregularity and Perron defects; `threshold = None` uses `0.05·d`.
pub fn nonregularity(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    horizon: f64,
    opts: &SpectrumOptions,
    threshold: Option<f64>,
) -> Result<RegularityReport> {
    let (series, est) = discrete_spectrum(eq, omega, t0, horizon, opts)?;
    let (_, adj) = discrete_spectrum(&eq.adjoint(), omega, t0, horizon, opts)?;
    let liouville = solver::liouville_series(eq, omega, t0, &series.times)?;
    let m = series.times.len();
    let count = ((m as f64 * opts.tail_fraction).ceil() as usize).clamp(1, m);
    let det_liminf = (m - count..m)
        .map(|i| liouville[i] / (series.times[i] - t0))
        .fold(f64::INFINITY, f64::min);
    let sum_lambda: f64 = est.lambdas.iter().sum();
    let sigma = sum_lambda - det_liminf;
    let mut beta = adj.lambdas.clone();
    beta.sort_by(|a, b| a.total_cmp(b));
    let perron_defects = est.lambdas.iter().zip(&beta).map(|(a, b)| a + b).collect();
    let threshold = threshold.unwrap_or(0.05 * eq.dim() as f64);
    Ok(RegularityReport {
        sum_lambda,
        det_liminf,
        sigma,
        lambdas: est.lambdas,
        adjoint_lambdas: beta,
        perron_defects,
        threshold,
        regular: sigma <= threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticReport {
    pub chi_each: Vec<f64>,
    pub chi_sum: f64,
    pub chi_product: f64,
    pub chi_sum_qvar: f64,
    pub chi_product_qvar: f64,
    pub max_lambda: f64,
    pub sum_lambda: f64,
    pub sum_ok: bool,
    pub product_ok: bool,
}

/// `χ` of the unit-window q-variation series `n ↦ |||g|||_{q-var,[n,n+1]}`.
fn qvar_series(g: &SampledPath, q: f64) -> Result<SampledPath> {
    let end = g.end().floor() as usize;
    let start = g.start().ceil() as usize;
    if end < start + 2 {
        return domain("need at least two unit windows");
    }
    let ints: Vec<f64> = (start..=end).map(|n| n as f64).collect();
    let g = g.with_nodes(&ints)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for n in start..end {
        let w = Interval::new(n as f64, n as f64 + 1.0)?;
        times.push(n as f64);
        values.push(path::p_variation_seminorm(&g, q, w)?);
    }
    SampledPath::scalar(times, values)
}

/// Checks `χ(Σ g_i) <= max λ_i` and `χ(Π g_i) <= Σ λ_i` (also for unit-window q-variation series).
pub fn exponent_arithmetic_check(
    paths: &[SampledPath],
    lambdas: &[f64],
    q: f64,
    tail_fraction: f64,
    tol: f64,
) -> Result<ArithmeticReport> {
    if paths.is_empty() || paths.len() != lambdas.len() {
        return domain("need one exponent per path");
    }
    let times = paths[0].times().to_vec();
    if paths.iter().any(|p| p.times() != times.as_slice() || p.shape() != (1, 1)) {
        return domain("paths must be scalar on a shared grid");
    }
    let n = times.len();
    let sum: Vec<f64> = (0..n).map(|i| paths.iter().map(|p| p.scalar_value(i)).sum()).collect();
    let prod: Vec<f64> = (0..n).map(|i| paths.iter().map(|p| p.scalar_value(i)).product()).collect();
    let sum = SampledPath::scalar(times.clone(), sum)?;
    let prod = SampledPath::scalar(times, prod)?;
    let chi_each = paths.iter().map(|p| chi(p, tail_fraction)).collect();
    let chi_sum = chi(&sum, tail_fraction);
    let chi_product = chi(&prod, tail_fraction);
    let chi_sum_qvar = chi(&qvar_series(&sum, q)?, tail_fraction);
    let chi_product_qvar = chi(&qvar_series(&prod, q)?, tail_fraction);
    let max_lambda = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum_lambda: f64 = lambdas.iter().sum();
    Ok(ArithmeticReport {
        chi_each,
        chi_sum,
        chi_product,
        chi_sum_qvar,
        chi_product_qvar,
        max_lambda,
        sum_lambda,
        sum_ok: chi_sum <= max_lambda + tol && chi_sum_qvar <= max_lambda + tol,
        product_ok: chi_product <= sum_lambda + tol && chi_product_qvar <= sum_lambda + tol,
    })
}
