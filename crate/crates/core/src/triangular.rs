//! Upper-triangular systems solved by substitution: the analytic oracle.
//!
//! Column `k` of the fundamental matrix is stored normalized by its diagonal
//! entry, `x_ik = z_ik · Y_k` with `log Y_k = ∫a_kk ds + ∫c_kk dω`. The
//! normalized entries obey kernels `exp(±∫(a_ii - a_kk))` that never grow
//! in the direction of integration, so long horizons do not overflow.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::path::{self, Interval, SampledPath};
use crate::solver::LinearYDE;
use crate::young::{young_integral_path, young_integral_path_trapezoid};

/// Default `limsup - liminf` tolerance of a running diagonal mean.
pub const EXACTNESS_TOL: f64 = 0.02;

/// A [`LinearYDE`] whose coefficients are upper triangular at every node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularYDE {
    eq: LinearYDE,
}

impl TriangularYDE {
    pub fn new(eq: LinearYDE) -> Result<Self> {
        if !eq.is_upper_triangular() {
            return domain("coefficients have nonzero strictly-lower entries");
        }
        Ok(TriangularYDE { eq })
    }

    pub fn inner(&self) -> &LinearYDE {
        &self.eq
    }

    pub fn dim(&self) -> usize {
        self.eq.dim()
    }
}

/// Running means `ā_kk(t) = (1/t)∫₀ᵗ a_kk ds` (trapezoidal) at the nodes of `A` and the integers in `(0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMeans {
    pub times: Vec<f64>,
    /// `abar[k][n]` is `ā_kk(times[n])`.
    pub abar: Vec<Vec<f64>>,
    pub finals: Vec<f64>,
    /// `max - min` of each running mean over the trailing half `[horizon/2, horizon]`.
    pub oscillation: Vec<f64>,
    pub exact: Vec<bool>,
    pub tolerance: f64,
}

impl DiagonalMeans {
    pub fn all_exact(&self) -> bool {
        self.exact.iter().all(|&e| e)
    }
}

pub fn diagonal_means(eq: &TriangularYDE, horizon: f64, tolerance: f64) -> Result<DiagonalMeans> {
    let a = eq.inner().a();
    if !(horizon > 0.0) || !a.span().contains(0.0) || !a.span().contains(horizon) {
        return domain(format!("coefficient A must cover [0, {horizon}]"));
    }
    let window = Interval::new(0.0, horizon)?;
    // Integer nodes keep the tail sampled even when A is given on a coarse grid.
    let ints: Vec<f64> = (1..horizon.ceil() as usize).map(|n| n as f64).collect();
    let times = path::merged_times(&[a], window, &ints)?;
    let a = a.resample(&times)?;
    let d = eq.dim();
    let mut abar = vec![Vec::with_capacity(times.len() - 1); d];
    for (k, series) in abar.iter_mut().enumerate() {
        let mut acc = 0.0;
        for n in 1..times.len() {
            let v0 = a.value(n - 1)[k * d + k];
            let v1 = a.value(n)[k * d + k];
            acc += 0.5 * (v0 + v1) * (times[n] - times[n - 1]);
            series.push(acc / times[n]);
        }
    }
    let times = times[1..].to_vec();
    let half = times.partition_point(|&t| t < horizon / 2.0).min(times.len() - 1);
    let finals: Vec<f64> = abar.iter().map(|s| *s.last().expect("nonempty")).collect();
    let oscillation: Vec<f64> = abar
        .iter()
        .map(|s| {
            let tail = &s[half..];
            tail.iter().copied().fold(f64::NEG_INFINITY, f64::max) - tail.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();
    let exact = oscillation.iter().map(|&o| o <= tolerance).collect();
    Ok(DiagonalMeans { times, abar, finals, oscillation, exact, tolerance })
}

/// `z₀ exp{∫ₐᵗ a ds + ∫ₐᵗ c dω}` with left-point sums for the `dω` integral.
pub fn solve_1d_explicit(
    a: &SampledPath,
    c: &SampledPath,
    omega: &SampledPath,
    z0: f64,
    window: Interval,
) -> Result<SampledPath> {
    let (times, log) = log_solution_1d(a, c, omega, window)?;
    SampledPath::scalar(times, log.iter().map(|l| z0 * l.exp()).collect())
}

/// Common grid and `∫ₐᵗ a ds + ∫ₐᵗ c dω` on it.
fn log_solution_1d(
    a: &SampledPath,
    c: &SampledPath,
    omega: &SampledPath,
    window: Interval,
) -> Result<(Vec<f64>, Vec<f64>)> {
    for p in [a, c, omega] {
        if p.shape() != (1, 1) {
            return domain("one-dimensional solve needs scalar paths");
        }
    }
    let times = path::merged_times(&[a, c, omega], window, &[])?;
    let clock = SampledPath::scalar(times.clone(), times.clone())?;
    let drift = young_integral_path_trapezoid(&a.resample(&times)?, &clock, window)?;
    let noise = young_integral_path(&c.resample(&times)?, &omega.resample(&times)?, window)?;
    let log = drift.scalar_values().iter().zip(noise.scalar_values()).map(|(x, y)| x + y).collect();
    Ok((times, log))
}

/// Variation of constants for `dx = (a x + h₁)dt + (c x + h₂)dω`.
///
/// The homogeneous factor is [`solve_1d_explicit`]; the forcing integrals use trapezoidal sums.
pub fn solve_1d_nonhomogeneous(
    a: &SampledPath,
    c: &SampledPath,
    h1: &SampledPath,
    h2: &SampledPath,
    omega: &SampledPath,
    x0: f64,
    window: Interval,
) -> Result<SampledPath> {
    let times = path::merged_times(&[a, c, h1, h2, omega], window, &[])?;
    let (times, log) = log_solution_1d(&a.resample(&times)?, &c.resample(&times)?, &omega.resample(&times)?, window)?;
    let h1 = h1.resample(&times)?;
    let h2 = h2.resample(&times)?;
    let om = omega.resample(&times)?;
    let mut acc = x0;
    let mut out = Vec::with_capacity(times.len());
    out.push(x0);
    for n in 1..times.len() {
        let (e0, e1) = ((-log[n - 1]).exp(), (-log[n]).exp());
        let dt = times[n] - times[n - 1];
        let dw = om.scalar_value(n) - om.scalar_value(n - 1);
        acc += 0.5 * (e0 * h1.scalar_value(n - 1) + e1 * h1.scalar_value(n)) * dt;
        acc += 0.5 * (e0 * h2.scalar_value(n - 1) + e1 * h2.scalar_value(n)) * dw;
        out.push(log[n].exp() * acc);
    }
    SampledPath::scalar(times, out)
}

/// Where the off-diagonal integral of entry `(i, k)` starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasePoint {
    Zero,
    /// `+∞`, realized at `t_max`.
    Infinity,
}

/// Fundamental matrix `X = Z · diag(Y)` on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularFundamental {
    pub times: Vec<f64>,
    /// `log Y_k(t)`, one `d`-vector per node.
    pub log_diag: Vec<Vec<f64>>,
    /// Unit upper-triangular `Z(t)`.
    pub normalized: Vec<DMatrix<f64>>,
    pub base_points: Vec<Vec<Option<BasePoint>>>,
    pub means: DiagonalMeans,
    pub t_max: f64,
    /// Estimate of the truncation error in `Z` caused by stopping improper integrals at `t_max`.
    pub tail_bound: f64,
    pub truncation_warning: Option<String>,
}

impl TriangularFundamental {
    /// `X(t_n)`.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut x = self.normalized[n].clone();
        for (k, l) in self.log_diag[n].iter().enumerate() {
            x.column_mut(k).scale_mut(l.exp());
        }
        x
    }

    pub fn log_abs_det(&self, n: usize) -> f64 {
        self.log_diag[n].iter().sum()
    }

    pub fn to_path(&self) -> Result<SampledPath> {
        let mats: Vec<DMatrix<f64>> = (0..self.times.len()).map(|n| self.matrix(n)).collect();
        SampledPath::from_matrices(self.times.clone(), &mats)
    }
}

/// Builds `X(t)` column by column, rows bottom to top.
///
/// `t_max = None` uses `2·horizon`; coefficients and driver must cover `[0, t_max]`.
/// A tail bound above `tail_tol` produces a truncation warning.
pub fn triangular_fundamental(
    eq: &TriangularYDE,
    omega: &SampledPath,
    horizon: f64,
    t_max: Option<f64>,
    tail_tol: f64,
) -> Result<TriangularFundamental> {
    let t_max = t_max.unwrap_or(2.0 * horizon);
    if !(horizon > 0.0 && t_max >= horizon) {
        return domain(format!("need 0 < horizon <= t_max, got horizon = {horizon}, t_max = {t_max}"));
    }
    let (a, c) = (eq.inner().a(), eq.inner().c());
    let full = Interval::new(0.0, t_max)?;
    for (name, p) in [("A", a), ("C", c), ("driver", omega)] {
        if !p.span().contains(0.0) || !p.span().contains(t_max) {
            return domain(format!("{name} must cover [0, {t_max}]"));
        }
    }
    let means = diagonal_means(eq, horizon, EXACTNESS_TOL)?;
    let times = path::merged_times(&[a, c, omega], full, &[horizon])?;
    let a = a.resample(&times)?;
    let c = c.resample(&times)?;
    let om = omega.resample(&times)?;
    let d = eq.dim();
    let m = times.len();
    let dt: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let dw: Vec<f64> = (1..m).map(|n| om.scalar_value(n) - om.scalar_value(n - 1)).collect();
    let entry = |p: &SampledPath, n: usize, i: usize, j: usize| p.value(n)[i * d + j];

    // log Y_k by trapezoidal sums.
    let mut log_y = vec![vec![0.0; d]; m];
    for n in 1..m {
        for k in 0..d {
            let w = 0.5 * (entry(&a, n - 1, k, k) + entry(&a, n, k, k)) * dt[n - 1]
                + 0.5 * (entry(&c, n - 1, k, k) + entry(&c, n, k, k)) * dw[n - 1];
            log_y[n][k] = log_y[n - 1][k] + w;
        }
    }

    let mut z = vec![DMatrix::<f64>::identity(d, d); m];
    let mut base_points = vec![vec![None; d]; d];
    let mut tail_bound = 0.0f64;
    for k in 0..d {
        for i in (0..k).rev() {
            let base = if means.finals[k] - means.finals[i] >= 0.0 { BasePoint::Zero } else { BasePoint::Infinity };
            base_points[i][k] = Some(base);
            // h = Σ_j a_ij z_jk, g = Σ_j c_ij z_jk; kernel exp(D(s) - D(t)) with D = log Y_k - log Y_i.
            let forcing = |p: &SampledPath, n: usize, z: &[DMatrix<f64>]| -> f64 {
                (i + 1..=k).map(|j| entry(p, n, i, j) * z[n][(j, k)]).sum()
            };
            let h: Vec<f64> = (0..m).map(|n| forcing(&a, n, &z)).collect();
            let g: Vec<f64> = (0..m).map(|n| forcing(&c, n, &z)).collect();
            let dd: Vec<f64> = (0..m).map(|n| log_y[n][k] - log_y[n][i]).collect();
            match base {
                BasePoint::Zero => {
                    let mut acc = 0.0;
                    z[0][(i, k)] = 0.0;
                    for n in 1..m {
                        let decay = (dd[n - 1] - dd[n]).exp();
                        acc = decay * acc + 0.5 * (decay * h[n - 1] + h[n]) * dt[n - 1]
                            + 0.5 * (decay * g[n - 1] + g[n]) * dw[n - 1];
                        z[n][(i, k)] = acc;
                    }
                }
                BasePoint::Infinity => {
                    let mut acc = 0.0;
                    z[m - 1][(i, k)] = 0.0;
                    for n in (0..m - 1).rev() {
                        let decay = (dd[n + 1] - dd[n]).exp();
                        acc = decay * acc - 0.5 * (h[n] + decay * h[n + 1]) * dt[n]
                            - 0.5 * (g[n] + decay * g[n + 1]) * dw[n];
                        z[n][(i, k)] = acc;
                    }
                    // Lemma-type tail: sup|h| / Δ · e^{-Δ (t_max - horizon)} with the observed gap Δ.
                    let gap = means.finals[i] - means.finals[k];
                    let h_tail = (0..m)
                        .filter(|&n| times[n] >= horizon)
                        .map(|n| h[n].abs() + g[n].abs())
                        .fold(0.0, f64::max);
                    tail_bound = tail_bound.max(h_tail / gap * (-gap * (t_max - horizon)).exp());
                }
            }
        }
    }
    let keep = times.partition_point(|&t| t <= horizon * (1.0 + 1e-12));
    let truncation_warning = (tail_bound > tail_tol)
        .then(|| format!("improper integrals truncated at t_max = {t_max}: tail bound {tail_bound:e} exceeds {tail_tol:e}"));
    Ok(TriangularFundamental {
        times: times[..keep].to_vec(),
        log_diag: log_y[..keep].to_vec(),
        normalized: z[..keep].to_vec(),
        base_points,
        means,
        t_max,
        tail_bound,
        truncation_warning,
    })
}

/// Largest relative residual `|X(t) - X(0) - ∫AX ds - ∫CX dω| / max|X|` over `[0, horizon]`.
pub fn fundamental_residual(eq: &TriangularYDE, omega: &SampledPath, fund: &TriangularFundamental) -> Result<f64> {
    let times = &fund.times;
    let a = eq.inner().a().resample(times)?;
    let c = eq.inner().c().resample(times)?;
    let om = omega.resample(times)?;
    let d = eq.dim();
    let x: Vec<DMatrix<f64>> = (0..times.len()).map(|n| fund.matrix(n)).collect();
    let mut integral = DMatrix::zeros(d, d);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for n in 1..times.len() {
        let dt = times[n] - times[n - 1];
        let dw = om.scalar_value(n) - om.scalar_value(n - 1);
        let f0 = a.matrix(n - 1) * &x[n - 1] * dt + c.matrix(n - 1) * &x[n - 1] * dw;
        let f1 = a.matrix(n) * &x[n] * dt + c.matrix(n) * &x[n] * dw;
        integral += (f0 + f1) * 0.5;
        worst = worst.max((&x[n] - &x[0] - &integral).amax());
        scale = scale.max(x[n].amax());
    }
    if !scale.is_finite() {
        return Err(Error::Degenerate("fundamental matrix overflowed".into()));
    }
    Ok(worst / scale.max(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularSpectrum {
    pub means: DiagonalMeans,
    /// `{ā_11, …, ā_dd}` sorted nonincreasing.
    pub spectrum: Vec<f64>,
    pub exact: bool,
    pub note: Option<String>,
}

/// Spectrum `{ā_kk}` from the diagonal means at `horizon`.
pub fn triangular_spectrum(eq: &TriangularYDE, horizon: f64, tolerance: f64) -> Result<TriangularSpectrum> {
    let means = diagonal_means(eq, horizon, tolerance)?;
    let mut spectrum = means.finals.clone();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let exact = means.all_exact();
    let note = (!exact).then(|| "possibly irregular: a diagonal running mean has no limit on the tail".to_string());
    Ok(TriangularSpectrum { means, spectrum, exact, note })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub regular: bool,
    pub means: DiagonalMeans,
}

/// Regular iff every diagonal running mean settles to within `tolerance` on the trailing half.
pub fn regularity_criterion(eq: &TriangularYDE, horizon: f64, tolerance: f64) -> Result<RegularityVerdict> {
    let means = diagonal_means(eq, horizon, tolerance)?;
    Ok(RegularityVerdict { regular: means.all_exact(), means })
}

/// Diagonal `d = 2` system with `a_22 = -1` and `a_11` switching between 1 and 0 at `t = 1, 4, 16, 64, …`.
///
/// The running mean of `a_11` keeps oscillating, so the system is not regular.
pub fn oscillating_block_fixture(t_end: f64, params: crate::young::YoungParams) -> Result<TriangularYDE> {
    let ramp = 1e-3;
    let mut times = vec![0.0];
    let mut vals = vec![1.0];
    let mut edge = 1.0;
    let mut level = 1.0;
    while edge < t_end {
        times.push(edge);
        vals.push(level);
        level = 1.0 - level;
        times.push((edge + ramp).min(t_end));
        vals.push(level);
        edge *= 4.0;
    }
    if *times.last().unwrap() < t_end {
        times.push(t_end);
        vals.push(level);
    }
    let mats: Vec<DMatrix<f64>> = vals.iter().map(|&v| DMatrix::from_row_slice(2, 2, &[v, 0.0, 0.0, -1.0])).collect();
    let a = SampledPath::from_matrices(times, &mats)?;
    let c = SampledPath::constant_matrix(&DMatrix::zeros(2, 2), 0.0, t_end)?;
    TriangularYDE::new(LinearYDE::new(a, c, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::uniform_grid;
    use crate::solver::{picard_solve, SolveOptions};
    use crate::young::YoungParams;
    use nalgebra::DVector;

    fn params() -> YoungParams {
        YoungParams::new(1.5, 2.5).unwrap()
    }

    fn tri_const(a: &[f64], c: &[f64], d: usize, t_end: f64) -> TriangularYDE {
        let span = Interval::new(0.0, t_end).unwrap();
        let a = DMatrix::from_row_slice(d, d, a);
        let c = DMatrix::from_row_slice(d, d, c);
        TriangularYDE::new(LinearYDE::constant(&a, &c, span, params()).unwrap()).unwrap()
    }

    fn wiggly(t_end: f64, n: usize) -> SampledPath {
        SampledPath::from_scalar_fn(uniform_grid(0.0, t_end, n), |t| 0.3 * (1.7 * t).sin() + 0.1 * (5.3 * t).cos())
            .unwrap()
    }

    #[test]
    fn rejects_lower_entries() {
        let span = Interval::new(0.0, 1.0).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let eq = LinearYDE::constant(&a, &DMatrix::zeros(2, 2), span, params()).unwrap();
        assert!(TriangularYDE::new(eq).is_err());
    }

    #[test]
    fn explicit_1d_cases() {
        let g = uniform_grid(0.0, 1.0, 200);
        let w = Interval::new(0.0, 1.0).unwrap();
        let om = wiggly(1.0, 200);
        let zero = SampledPath::from_scalar_fn(g.clone(), |_| 0.0).unwrap();
        let one = SampledPath::from_scalar_fn(g.clone(), |_| 1.0).unwrap();
        let two = SampledPath::from_scalar_fn(g, |_| 2.0).unwrap();
        let z = solve_1d_explicit(&zero, &one, &om, 1.5, w).unwrap();
        for n in 0..z.len() {
            let expect = 1.5 * (om.scalar_value(n) - om.scalar_value(0)).exp();
            assert!((z.scalar_value(n) - expect).abs() < 1e-12);
        }
        let z = solve_1d_explicit(&two, &zero, &om, 0.5, w).unwrap();
        assert!((z.scalar_value(z.len() - 1) - 0.5 * 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn nonhomogeneous_reduces_and_matches_augmented_system() {
        let n = 400;
        let g = uniform_grid(0.0, 1.0, n);
        let w = Interval::new(0.0, 1.0).unwrap();
        let om = wiggly(1.0, n);
        let a = SampledPath::from_scalar_fn(g.clone(), |t| 0.4 - t).unwrap();
        let c = SampledPath::from_scalar_fn(g.clone(), |t| 0.8 + 0.2 * t).unwrap();
        let h1 = SampledPath::from_scalar_fn(g.clone(), |t| (3.0 * t).cos()).unwrap();
        let h2 = SampledPath::from_scalar_fn(g.clone(), |t| 1.0 + t * t).unwrap();
        let zero = SampledPath::from_scalar_fn(g.clone(), |_| 0.0).unwrap();
        let plain = solve_1d_explicit(&a, &c, &om, 2.0, w).unwrap();
        let forced0 = solve_1d_nonhomogeneous(&a, &c, &zero, &zero, &om, 2.0, w).unwrap();
        assert_eq!(plain.scalar_values(), forced0.scalar_values());
        let pure = solve_1d_nonhomogeneous(&zero, &zero, &h1, &zero, &om, 1.0, w).unwrap();
        assert!((pure.scalar_value(n) - (1.0 + (3.0f64).sin() / 3.0)).abs() < 1e-5);

        let x = solve_1d_nonhomogeneous(&a, &c, &h1, &h2, &om, 0.7, w).unwrap();
        let am = a.map(2, 2, |t, v| vec![v[0], h1.value_at(t).unwrap()[0], 0.0, 0.0]).unwrap();
        let cm = c.map(2, 2, |t, v| vec![v[0], h2.value_at(t).unwrap()[0], 0.0, 0.0]).unwrap();
        let eq = LinearYDE::new(am, cm, params()).unwrap();
        let rep = picard_solve(&eq, &DVector::from_vec(vec![0.7, 1.0]), &om, w, &SolveOptions::default()).unwrap();
        for k in 0..=n {
            assert!((rep.solution.value(k)[0] - x.scalar_value(k)).abs() < 1e-4);
        }
    }

    #[test]
    fn closed_form_off_diagonal() {
        let eq = tri_const(&[1.0, 1.0, 0.0, 2.0], &[0.0; 4], 2, 4.0);
        let om = SampledPath::from_scalar_fn(uniform_grid(0.0, 4.0, 4000), |_| 0.0).unwrap();
        let f = triangular_fundamental(&eq, &om, 2.0, None, 1e-6).unwrap();
        assert_eq!(f.base_points[0][1], Some(BasePoint::Zero));
        for n in (0..f.times.len()).step_by(50) {
            let t = f.times[n];
            let x = f.matrix(n);
            let want = (2.0 * t).exp() - t.exp();
            assert!((x[(0, 1)] - want).abs() < 1e-5 * want.abs().max(1.0), "{t}");
            assert!((x[(0, 0)] - t.exp()).abs() < 1e-12 * t.exp());
        }
    }

    #[test]
    fn diagonal_system_is_diag_y() {
        let eq = tri_const(&[0.5, 0.0, 0.0, -0.3], &[1.0, 0.0, 0.0, 0.2], 2, 6.0);
        let om = wiggly(6.0, 600);
        let f = triangular_fundamental(&eq, &om, 3.0, None, 1e-6).unwrap();
        for n in 0..f.times.len() {
            assert_eq!(f.normalized[n], DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn residual_and_determinant() {
        let t_end = 8.0;
        let g = uniform_grid(0.0, t_end, 1600);
        let a = SampledPath::from_matrix_fn(g, 3, 3, |t| {
            DMatrix::from_row_slice(3, 3, &[0.5 + 0.2 * t.sin(), 1.0, -0.5, 0.0, -0.5, 0.3 * t.cos(), 0.0, 0.0, 0.1])
        })
        .unwrap();
        let c = SampledPath::constant_matrix(
            &DMatrix::from_row_slice(3, 3, &[0.2, 0.1, 0.0, 0.0, -0.1, 0.3, 0.0, 0.0, 0.4]),
            0.0,
            t_end,
        )
        .unwrap();
        let eq = TriangularYDE::new(LinearYDE::new(a, c, params()).unwrap()).unwrap();
        let om = wiggly(t_end, 1600);
        let f = triangular_fundamental(&eq, &om, 4.0, None, 1.0).unwrap();
        assert!(f.base_points[0][1] == Some(BasePoint::Infinity));
        assert!(fundamental_residual(&eq, &om, &f).unwrap() < 1e-4);
        for n in 0..f.times.len() {
            let ld = crate::linalg::log_det(&f.matrix(n)).unwrap().log_abs;
            assert!((ld - f.log_abs_det(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_t_max_barely_moves_improper_entries() {
        let eq = tri_const(&[0.5, 1.0, 0.0, -0.5], &[0.1, 0.2, 0.0, 0.0], 2, 120.0);
        let om = wiggly(120.0, 12000);
        let f1 = triangular_fundamental(&eq, &om, 30.0, Some(60.0), 1e-6).unwrap();
        let f2 = triangular_fundamental(&eq, &om, 30.0, Some(120.0), 1e-6).unwrap();
        assert_eq!(f1.base_points[0][1], Some(BasePoint::Infinity));
        for n in 0..f1.times.len() {
            assert!((f1.normalized[n][(0, 1)] - f2.normalized[n][(0, 1)]).abs() < 1e-6);
        }
        assert!(f1.truncation_warning.is_none());
    }

    #[test]
    fn spectrum_and_regularity() {
        let eq = tri_const(&[-1.0, 0.5, 0.0, 3.0], &[0.0; 4], 2, 50.0);
        let s = triangular_spectrum(&eq, 50.0, EXACTNESS_TOL).unwrap();
        assert_eq!(s.spectrum, vec![3.0, -1.0]);
        assert!(s.exact && s.note.is_none());

        let g = uniform_grid(0.0, 200.0, 20000);
        let a = SampledPath::from_matrix_fn(g, 1, 1, |t| DMatrix::from_element(1, 1, t.sin())).unwrap();
        let c = SampledPath::constant_matrix(&DMatrix::zeros(1, 1), 0.0, 200.0).unwrap();
        let eq = TriangularYDE::new(LinearYDE::new(a, c, params()).unwrap()).unwrap();
        let s = triangular_spectrum(&eq, 200.0, EXACTNESS_TOL).unwrap();
        assert!(s.spectrum[0].abs() < 0.02 && s.exact);

        let osc = oscillating_block_fixture(200.0, params()).unwrap();
        let v = regularity_criterion(&osc, 200.0, EXACTNESS_TOL).unwrap();
        assert!(!v.regular);
        assert!(v.means.oscillation[0] > 0.2);
        assert!(v.means.exact[1]);
    }
}
