//! Fractional Brownian motion drivers and statistics over driver ensembles.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lyapunov::{self, exponent_bound_value, SpectrumOptions};
use crate::path::{self, uniform_grid, Interval, SampledPath};
use crate::solver::{adjoint_fundamental, LinearYDE, SolveOptions};
use crate::young::young_integral_path;

/// Smallest ensemble accepted by [`ensemble_spectrum`].
pub const MIN_ENSEMBLE: usize = 50;

/// Largest grid (nodes including `t = 0`) accepted by the Cholesky method.
pub const CHOLESKY_MAX_POINTS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FbmMethod {
    Cholesky,
    Circulant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbmSpec {
    pub hurst: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub method: FbmMethod,
}

impl FbmSpec {
    pub fn new(hurst: f64, dt: f64, horizon: f64, seed: u64, method: FbmMethod) -> Result<Self> {
        let spec = FbmSpec { hurst, dt, horizon, seed, method };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.5 && self.hurst < 1.0) {
            return domain(format!("Hurst index must lie in (0.5, 1), got {}", self.hurst));
        }
        if !(self.dt > 0.0 && self.horizon > 0.0) {
            return domain(format!("need dt > 0 and horizon > 0, got dt = {}, horizon = {}", self.dt, self.horizon));
        }
        let n = self.horizon / self.dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return domain(format!("horizon {} is not a multiple of dt = {}", self.horizon, self.dt));
        }
        if self.method == FbmMethod::Cholesky && self.steps() + 1 > CHOLESKY_MAX_POINTS {
            return domain(format!(
                "cholesky is limited to {CHOLESKY_MAX_POINTS} grid points, got {}",
                self.steps() + 1
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(0.0, self.horizon, self.steps())
    }

    /// Same spec with the seed of ensemble member `i`.
    pub fn member(&self, i: u64) -> Self {
        FbmSpec { seed: member_seed(self.seed, i), ..*self }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of ensemble member `i`: `splitmix64(seed ^ splitmix64(i))`.
pub fn member_seed(seed: u64, i: u64) -> u64 {
    splitmix64(seed ^ splitmix64(i))
}

/// `E B(t)B(s)`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.abs().powf(h2) + t.abs().powf(h2) - (t - s).abs().powf(h2))
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

enum Kernel {
    Cholesky(DMatrix<f64>),
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
}

/// Reusable sampler: the factorization is computed once per grid.
pub struct FbmGenerator {
    spec: FbmSpec,
    times: Vec<f64>,
    kernel: Kernel,
}

impl FbmGenerator {
    pub fn new(spec: &FbmSpec) -> Result<Self> {
        spec.validate()?;
        let times = spec.grid();
        let n = spec.steps();
        let kernel = match spec.method {
            FbmMethod::Cholesky => {
                let cov = DMatrix::from_fn(n, n, |i, j| fbm_covariance(spec.hurst, times[i + 1], times[j + 1]));
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::Generation(format!(
                        "covariance is not positive definite (H = {}, dt = {})",
                        spec.hurst, spec.dt
                    ))
                })?;
                Kernel::Cholesky(chol.unpack())
            }
            FbmMethod::Circulant => {
                let m = 2 * n;
                let mut row: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
                for k in 0..=n {
                    row[k].re = fgn_autocov(spec.hurst, k);
                }
                for k in 1..n {
                    row[m - k].re = fgn_autocov(spec.hurst, k);
                }
                let fft = FftPlanner::new().plan_fft_forward(m);
                fft.process(&mut row);
                let top = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
                let mut sqrt_eig = Vec::with_capacity(m);
                for z in &row {
                    if z.re < -1e-10 * top {
                        return Err(Error::Generation(format!(
                            "circulant embedding has a negative eigenvalue {:e} (H = {}, dt = {})",
                            z.re, spec.hurst, spec.dt
                        )));
                    }
                    sqrt_eig.push((z.re.max(0.0) / m as f64).sqrt());
                }
                Kernel::Circulant { sqrt_eig, fft }
            }
        };
        Ok(FbmGenerator { spec: *spec, times, kernel })
    }

    pub fn spec(&self) -> &FbmSpec {
        &self.spec
    }

    /// Path for an explicit seed; the grid and method are those of the spec.
    pub fn sample(&self, seed: u64) -> Result<SampledPath> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.spec.steps();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        match &self.kernel {
            Kernel::Cholesky(l) => {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                values.extend((l * z).iter());
            }
            Kernel::Circulant { sqrt_eig, fft } => {
                let mut w: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let a: f64 = StandardNormal.sample(&mut rng);
                        let b: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut w);
                let scale = self.spec.dt.powf(self.spec.hurst);
                let mut acc = 0.0;
                for z in &w[..n] {
                    acc += scale * z.re;
                    values.push(acc);
                }
            }
        }
        SampledPath::scalar(self.times.clone(), values)
    }
}

/// One fBm path on `[0, horizon]` with `B(0) = 0`.
pub fn fbm_sample(spec: &FbmSpec) -> Result<SampledPath> {
    FbmGenerator::new(spec)?.sample(spec.seed)
}

/// `(1/n) Σ_{k<n} |||ω|||^p_{p-var,[k,k+1]}`.
pub fn gamma_p(omega: &SampledPath, p: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return domain("need n >= 1");
    }
    let pv = unit_window_pvar(omega, p, n)?;
    Ok(pv.iter().sum::<f64>() / n as f64)
}

/// `|||ω|||^p_{p-var,[k,k+1]}` for `k < n`.
fn unit_window_pvar(omega: &SampledPath, p: f64, n: usize) -> Result<Vec<f64>> {
    let ints: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    let omega = omega.with_nodes(&ints)?;
    (0..n)
        .map(|k| Ok(path::p_variation_seminorm(&omega, p, Interval::new(k as f64, k as f64 + 1.0)?)?.powf(p)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionThresholds {
    /// Largest accepted final value of the (H3) series.
    pub h3: f64,
    /// Largest accepted relative change of `Γ_p` between `n = N/2` and `n = N`.
    pub gamma_drift: f64,
    /// Largest accepted final value of each (H4) series.
    pub h4: f64,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        AssumptionThresholds { h3: 0.05, gamma_drift: 0.1, h4: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionVerdicts {
    pub h3: bool,
    pub h3_prime: bool,
    pub h4: bool,
}

/// Empirical (H3), (H3′) and (H4) series on `[0, horizon]`. Verdicts speak about this horizon only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub p: f64,
    pub horizon: usize,
    /// `(1/n)|||ω|||^p_{p-var,[n,n+1]}` for `n = 1..horizon-1`.
    pub h3_series: Vec<f64>,
    /// Running means `(1/n) Σ_{k<n}|||ω|||^p_{p-var,[k,k+1]}` for `n = 1..=horizon`.
    pub gamma_p_series: Vec<f64>,
    /// `|∫₀ⁿ c_ii dω| / n` for `n = 1..=horizon`, one series per diagonal entry.
    pub h4_series: Vec<Vec<f64>>,
    pub thresholds: AssumptionThresholds,
    pub verdicts: AssumptionVerdicts,
}

pub fn check_assumptions(
    omega: &SampledPath,
    c_diag: &[SampledPath],
    p: f64,
    horizon: usize,
    thresholds: AssumptionThresholds,
) -> Result<AssumptionReport> {
    if horizon < 20 {
        return domain(format!("need a horizon of at least 20 unit windows, got {horizon}"));
    }
    let span = Interval::new(0.0, horizon as f64)?;
    if !omega.span().contains(span.a) || !omega.span().contains(span.b) {
        return domain(format!("driver must span [0, {horizon}]"));
    }
    let pv = unit_window_pvar(omega, p, horizon)?;
    let h3_series: Vec<f64> = (1..horizon).map(|n| pv[n] / n as f64).collect();
    let mut run = 0.0;
    let gamma_p_series: Vec<f64> = pv
        .iter()
        .enumerate()
        .map(|(k, v)| {
            run += v;
            run / (k + 1) as f64
        })
        .collect();
    let ints: Vec<f64> = (0..=horizon).map(|k| k as f64).collect();
    let mut h4_series: Vec<Vec<f64>> = Vec::with_capacity(c_diag.len());
    for c in c_diag {
        if c.shape() != (1, 1) {
            return domain("diagonal coefficients must be scalar paths");
        }
        let grid = path::merged_times(&[omega, c], span, &ints)?;
        let cg = c.resample(&grid)?;
        let og = omega.resample(&grid)?;
        let integral = young_integral_path(&cg, &og, span)?;
        h4_series.push(
            (1..=horizon)
                .map(|n| {
                    let i = integral.node_index(n as f64).expect("integer node inserted");
                    integral.scalar_value(i).abs() / n as f64
                })
                .collect(),
        );
    }
    let g_half = gamma_p_series[horizon / 2 - 1];
    let g_end = gamma_p_series[horizon - 1];
    let drift = if g_end == 0.0 { 0.0 } else { (g_end - g_half).abs() / g_end };
    let verdicts = AssumptionVerdicts {
        h3: h3_series.last().is_some_and(|&v| v <= thresholds.h3),
        h3_prime: g_end.is_finite() && drift <= thresholds.gamma_drift,
        h4: h4_series.iter().all(|s| s.last().is_some_and(|&v| v <= thresholds.h4)),
    };
    Ok(AssumptionReport { p, horizon, h3_series, gamma_p_series, h4_series, thresholds, verdicts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub window: Interval,
    pub estimate: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentProbe {
    pub rows: Vec<MomentRow>,
    /// Least-squares slope of `log E|||Z|||^r` against `log |t - s|` over windows of positive length.
    pub slope: f64,
    /// Estimates are nondecreasing in the window length.
    pub monotone: bool,
    /// `slope >= H r - 0.15`.
    pub slope_ok: bool,
}

/// Monte-Carlo `E|||Z|||^r_{p-var,[s,t]}` over `samples` fBm paths on `[0, 1]`.
pub fn moment_bound_probe(spec: &FbmSpec, p: f64, r: f64, windows: &[Interval], samples: usize) -> Result<MomentProbe> {
    if r < 1.0 {
        return domain(format!("moment order must be >= 1, got {r}"));
    }
    if samples < 2 || windows.is_empty() {
        return domain("need at least two samples and one window");
    }
    if windows.iter().any(|w| w.a < 0.0 || w.b > 1.0) {
        return domain("windows must lie in [0, 1]");
    }
    let unit = FbmSpec { horizon: 1.0, ..*spec };
    let gen = FbmGenerator::new(&unit)?;
    let per_sample: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gen.sample(member_seed(spec.seed, i))?;
            let ends: Vec<f64> = windows.iter().flat_map(|w| [w.a, w.b]).collect();
            let z = z.with_nodes(&ends)?;
            windows
                .iter()
                .map(|&w| Ok(path::p_variation_seminorm(&z, p, w)?.powf(r)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let rows: Vec<MomentRow> = windows
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let mean = per_sample.iter().map(|v| v[k]).sum::<f64>() / n;
            let var = per_sample.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            MomentRow { window: w, estimate: mean, std_err: (var / n).sqrt() }
        })
        .collect();
    let mut by_len: Vec<&MomentRow> = rows.iter().collect();
    by_len.sort_by(|a, b| a.window.length().total_cmp(&b.window.length()));
    let monotone = by_len.windows(2).all(|w| w[1].estimate >= w[0].estimate);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.window.length() > 0.0 && row.estimate > 0.0)
        .map(|row| (row.window.length().ln(), row.estimate.ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    Ok(MomentProbe { rows, slope, monotone, slope_ok: slope >= spec.hurst * r - 0.15 })
}

/// Slope of the least-squares line through `pts`; NaN with fewer than two distinct abscissae.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    /// Monte-Carlo mean of `sup_{s<=t} log⁺‖Φ(s,t)^{±1}‖` over `[0, 1]`.
    pub mean: f64,
    pub std_err: f64,
    /// Empirical `E|||Z|||^p_{p-var,[0,1]}`.
    pub h_hat: f64,
    pub m0: f64,
    pub bound: f64,
    pub samples: usize,
    pub failures: usize,
    pub holds: bool,
}

/// Empirical side of the integrability inequality, with the sup taken over
/// pairs of the uniform subgrid of `[0, 1]` with `pair_cells` cells.
pub fn integrability_stat(
    eq: &LinearYDE,
    spec: &FbmSpec,
    samples: usize,
    pair_cells: usize,
    opts: &SolveOptions,
) -> Result<IntegrabilityReport> {
    if samples < 100 {
        return domain(format!("need at least 100 samples, got {samples}"));
    }
    if pair_cells == 0 {
        return domain("need at least one cell in the pair grid");
    }
    let unit = FbmSpec { horizon: 1.0, ..*spec };
    let gen = FbmGenerator::new(&unit)?;
    let nodes = uniform_grid(0.0, 1.0, pair_cells);
    let p = eq.params().p;
    let results: Vec<Result<(f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gen.sample(member_seed(spec.seed, i))?;
            let zp = path::p_variation_seminorm(&z, p, Interval::new(0.0, 1.0)?)?.powf(p);
            let flow = adjoint_fundamental(eq, &z, 0.0, &nodes, opts)?;
            let psi = flow.psi.as_ref().expect("adjoint requested");
            let mut sup = 0.0f64;
            for j in 0..nodes.len() {
                for k in j..nodes.len() {
                    // Φ(s,t) = Φ(0,t) Ψ(0,s)ᵀ and Φ(s,t)^{-1} = Φ(0,s) Ψ(0,t)ᵀ.
                    let fwd = &flow.phi[k] * psi[j].transpose();
                    let bwd = &flow.phi[j] * psi[k].transpose();
                    let n = spectral_norm(&fwd).max(spectral_norm(&bwd));
                    sup = sup.max(n.ln().max(0.0));
                }
            }
            Ok((sup, zp))
        })
        .collect();
    let mut ok = Vec::with_capacity(samples);
    let mut first = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let failures = samples - ok.len();
    if failures * 100 > samples {
        return Err(Error::Ensemble { failed: failures, total: samples, first: first.unwrap_or_default() });
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|v| v.0).sum::<f64>() / n;
    let var = ok.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let h_hat = ok.iter().map(|v| v.1).sum::<f64>() / n;
    let m0 = eq.m0(1.0)?;
    let bound = exponent_bound_value(m0, p, h_hat, opts.mu)?;
    Ok(IntegrabilityReport {
        mean,
        std_err: (var / n).sqrt(),
        h_hat,
        m0,
        bound,
        samples,
        failures,
        holds: mean <= bound,
    })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub index: usize,
    pub seed: u64,
    pub lambdas: Option<Vec<f64>>,
    /// Tail dispersion of the member's own exponent series.
    pub dispersion: Option<Vec<f64>>,
    pub gamma_p: Option<f64>,
    pub bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub horizon: f64,
    pub members: Vec<MemberResult>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// `moments[k][r-1] = E|λ_k|^r` for `r = 1..=4`.
    pub moments: Vec<[f64; 4]>,
    /// Mean over members of the single-run tail dispersion.
    pub tail_dispersion: Vec<f64>,
    /// Fraction of `|λ_k|` above the member's exponent bound.
    pub exceed_fraction: f64,
    /// `E|λ_k|² <= E bound²` for every `k`.
    pub second_moment_ok: bool,
    pub failures: usize,
    /// Set when any member failed.
    pub flagged: bool,
}

/// Runs the spectrum estimator on `samples` independent fBm drivers.
///
/// Member `i` uses seed `member_seed(spec.seed, i)`; results are merged in index order.
pub fn ensemble_spectrum(
    eq: &LinearYDE,
    spec: &FbmSpec,
    samples: usize,
    horizon: f64,
    opts: &SpectrumOptions,
) -> Result<EnsembleReport> {
    if samples < MIN_ENSEMBLE {
        return domain(format!("need at least {MIN_ENSEMBLE} ensemble members, got {samples}"));
    }
    if spec.horizon + 1e-9 < horizon {
        return domain(format!("driver horizon {} shorter than {horizon}", spec.horizon));
    }
    let gen = FbmGenerator::new(spec)?;
    let p = eq.params().p;
    let m0 = eq.m0(1.0)?;
    let n_int = horizon.floor() as usize;
    let members: Vec<MemberResult> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = member_seed(spec.seed, i as u64);
            let run = || -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
                let omega = gen.sample(seed)?;
                let (_, est) = lyapunov::discrete_spectrum(eq, &omega, 0.0, horizon, opts)?;
                let g = gamma_p(&omega, p, n_int.max(1))?;
                let b = exponent_bound_value(m0, p, g, opts.solve.mu)?;
                Ok((est.lambdas, est.dispersion, g, b))
            };
            match run() {
                Ok((l, d, g, b)) => MemberResult {
                    index: i,
                    seed,
                    lambdas: Some(l),
                    dispersion: Some(d),
                    gamma_p: Some(g),
                    bound: Some(b),
                    error: None,
                },
                Err(e) => MemberResult {
                    index: i,
                    seed,
                    lambdas: None,
                    dispersion: None,
                    gamma_p: None,
                    bound: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<&MemberResult> = members.iter().filter(|m| m.error.is_none()).collect();
    let failures = samples - ok.len();
    if ok.len() < 2 {
        return Err(Error::Ensemble {
            failed: failures,
            total: samples,
            first: members.iter().find_map(|m| m.error.clone()).unwrap_or_default(),
        });
    }
    let d = eq.dim();
    let n = ok.len() as f64;
    let lam = |m: &MemberResult, k: usize| m.lambdas.as_ref().expect("ok member")[k];
    let mean: Vec<f64> = (0..d).map(|k| ok.iter().map(|m| lam(m, k)).sum::<f64>() / n).collect();
    let variance: Vec<f64> = (0..d)
        .map(|k| ok.iter().map(|m| (lam(m, k) - mean[k]).powi(2)).sum::<f64>() / (n - 1.0))
        .collect();
    let std_dev = variance.iter().map(|v| v.sqrt()).collect();
    let moments = (0..d)
        .map(|k| {
            let mut out = [0.0; 4];
            for (r, o) in out.iter_mut().enumerate() {
                *o = ok.iter().map(|m| lam(m, k).abs().powi(r as i32 + 1)).sum::<f64>() / n;
            }
            out
        })
        .collect::<Vec<_>>();
    let tail_dispersion =
        (0..d).map(|k| ok.iter().map(|m| m.dispersion.as_ref().expect("ok member")[k]).sum::<f64>() / n).collect();
    let bound = |m: &MemberResult| m.bound.expect("ok member");
    let exceed = ok.iter().map(|m| (0..d).filter(|&k| lam(m, k).abs() > bound(m)).count()).sum::<usize>();
    let bound_sq = ok.iter().map(|m| bound(m).powi(2)).sum::<f64>() / n;
    let second_moment_ok = moments.iter().all(|m| m[1] <= bound_sq);
    Ok(EnsembleReport {
        horizon,
        mean,
        variance,
        std_dev,
        moments,
        tail_dispersion,
        exceed_fraction: exceed as f64 / (n * d as f64),
        second_moment_ok,
        failures,
        flagged: failures > 0,
        members,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|x| !x.is_finite()) {
        return domain("KS samples must be nonempty and finite");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(lambda) })
}

/// `Q(λ) = 2 Σ_{k>=1} (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS comparison of `B(s + t) - B(s)` against `B(t)` over independent paths.
pub fn increment_stationarity(spec: &FbmSpec, samples: usize, s: f64, t: f64) -> Result<KsResult> {
    if !(s >= 0.0 && t > 0.0 && s + t <= spec.horizon + 1e-9) {
        return domain(format!("need 0 <= s, 0 < t, s + t <= {}", spec.horizon));
    }
    let gen = FbmGenerator::new(spec)?;
    let at = |b: &SampledPath, x: f64| -> Result<f64> { Ok(b.value_at(x)?[0]) };
    let (shifted, plain): (Vec<f64>, Vec<f64>) = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let b1 = gen.sample(member_seed(spec.seed, 2 * i))?;
            let b2 = gen.sample(member_seed(spec.seed, 2 * i + 1))?;
            Ok((at(&b1, s + t)? - at(&b1, s)?, at(&b2, t)?))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    ks_two_sample(&shifted, &plain)
}
