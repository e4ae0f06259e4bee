//! Picard solution of `dx = A(t) x dt + C(t) x dω(t)` and its matrix flows.
//!
//! All solves run on a working grid: the union of the driver, coefficient and
//! requested nodes inside the window. On a cell `[t_i, t_{i+1}]` the integral
//! increment is discretized with the trapezoidal coefficient sum
//! `W_i = ½(A_i + A_{i+1}) Δt_i + ½(C_i + C_{i+1}) Δω_i` and the cell map
//! `x_{i+1} = exp(W_i) x_i`. The Picard map on a greedy interval `[a, b]` is
//!
//! ```text
//! F(x)(t_j) = x(a) + Σ_{a <= t_i < t_j} (exp(W_i) - I) x(t_i)
//! ```
//!
//! whose unique fixed point is the product of cell maps. Because every cell
//! map is an exact matrix exponential, the discrete flow composes exactly,
//! the adjoint flow is its exact inverse transpose, and `log det` equals the
//! trapezoidal sum of traces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::path::{self, greedy_partition, GreedyPartition, Interval, SampledPath};
use crate::young::YoungParams;

/// Coefficient pair `(A, C)` of a linear Young differential equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearYDE {
    a: SampledPath,
    c: SampledPath,
    d: usize,
    params: YoungParams,
}

fn coefficient_window(path: &SampledPath, window: Interval) -> Result<SampledPath> {
    if window.a == window.b {
        let v = path.value_at(window.a)?;
        let (r, c) = path.shape();
        return SampledPath::new(vec![window.a, window.a + 1.0], [v.clone(), v].concat(), r, c);
    }
    path.with_nodes(&[window.a, window.b])?.restrict(window)
}

impl LinearYDE {
    pub fn new(a: SampledPath, c: SampledPath, params: YoungParams) -> Result<Self> {
        let (d, k) = a.shape();
        if d != k {
            return domain(format!("A must be square, got {d}x{k}"));
        }
        if c.shape() != (d, d) {
            return domain(format!("C must be {d}x{d}, got {:?}", c.shape()));
        }
        Ok(LinearYDE { a, c, d, params })
    }

    /// Constant coefficients on `span`.
    pub fn constant(a: &DMatrix<f64>, c: &DMatrix<f64>, span: Interval, params: YoungParams) -> Result<Self> {
        if span.a >= span.b {
            return domain("constant coefficients need a span of positive length");
        }
        Self::new(
            SampledPath::constant_matrix(a, span.a, span.b)?,
            SampledPath::constant_matrix(c, span.a, span.b)?,
            params,
        )
    }

    pub fn a(&self) -> &SampledPath {
        &self.a
    }

    pub fn c(&self) -> &SampledPath {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn params(&self) -> &YoungParams {
        &self.params
    }

    /// Common span of both coefficients.
    pub fn span(&self) -> Interval {
        Interval {
            a: self.a.start().max(self.c.start()),
            b: self.a.end().min(self.c.end()),
        }
    }

    /// Coefficients `(-Aᵀ, -Cᵀ)` of the adjoint equation.
    pub fn adjoint(&self) -> Self {
        let neg_t = |path: &SampledPath| {
            let d = self.d;
            path.map(d, d, |_, v| {
                let mut out = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        out[j * d + i] = -v[i * d + j];
                    }
                }
                out
            })
            .expect("same shape")
        };
        LinearYDE { a: neg_t(&self.a), c: neg_t(&self.c), d: self.d, params: self.params }
    }

    /// True when every strictly-lower entry of `A` and `C` vanishes at every node.
    pub fn is_upper_triangular(&self) -> bool {
        let d = self.d;
        [&self.a, &self.c].iter().all(|path| {
            (0..path.len()).all(|n| {
                let v = path.value(n);
                (0..d).all(|i| (0..i).all(|j| v[i * d + j] == 0.0))
            })
        })
    }

    /// `‖A‖_{∞, window}` (Frobenius norm at grid nodes).
    pub fn a_sup(&self, window: Interval) -> Result<f64> {
        let a = coefficient_window(&self.a, window)?;
        a.sup_norm(a.span())
    }

    /// `‖C‖_{q-var, window} = |C(window.a)| + |||C|||_{q-var, window}`.
    pub fn c_qvar_norm(&self, window: Interval) -> Result<f64> {
        let c = coefficient_window(&self.c, window)?;
        if window.a == window.b {
            return Ok(path::norm(c.value(0)));
        }
        path::p_variation_norm(&c, self.params.q, c.span())
    }

    /// `M* = max(‖A‖_∞, 2K‖C‖_{q-var})` on `window`.
    pub fn m_star(&self, window: Interval) -> Result<f64> {
        Ok(self.a_sup(window)?.max(2.0 * self.params.k * self.c_qvar_norm(window)?))
    }

    /// `Â = ‖A‖_∞` over the coefficient span.
    pub fn a_hat(&self) -> f64 {
        (0..self.a.len()).map(|n| path::norm(self.a.value(n))).fold(0.0, f64::max)
    }

    /// `Ĉ = sup ‖C‖_{q-var,[s,t]}` over grid windows with `t - s <= δ` on `C`'s own grid.
    pub fn c_hat(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return domain(format!("window width must be positive, got {delta}"));
        }
        let c = &self.c;
        let times = c.times();
        let q = self.params.q;
        let mut best = 0.0f64;
        for s in 0..c.len() {
            let mut prof = path::PVarProfile::new(c, q, s);
            let mut v = 0.0;
            while prof.last() + 1 < c.len() && times[prof.last() + 1] - times[s] <= delta * (1.0 + 1e-12) {
                v = prof.push();
            }
            best = best.max(path::norm(c.value(s)) + v.powf(1.0 / q));
        }
        Ok(best)
    }

    /// `M₀ = max(Â, 2KĈ)` with windows of width `δ`.
    pub fn m0(&self, delta: f64) -> Result<f64> {
        Ok(self.a_hat().max(2.0 * self.params.k * self.c_hat(delta)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Contraction parameter; `None` uses `min(1, M*)/2`.
    pub mu: Option<f64>,
    /// Picard stops once successive iterates differ by less than
    /// `tol · max(1, ‖iterate‖_∞)` in the grid q-variation norm.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { mu: None, tol: 1e-12, max_iterations: 200 }
    }
}

/// `η = -log(1 - μ)`.
pub fn eta(mu: f64) -> f64 {
    -(1.0 - mu).ln()
}

/// Resolves `μ` for a given `M*`; a vanishing `M*` is replaced by 1.
pub(crate) fn resolve_mu(m_star: f64, mu: Option<f64>) -> Result<(f64, f64)> {
    let m = if m_star > 0.0 { m_star } else { 1.0 };
    let upper = m.min(1.0);
    let mu = mu.unwrap_or(upper / 2.0);
    if !(mu > 0.0 && mu < upper) {
        return domain(format!("μ must lie in (0, {upper}), got {mu}"));
    }
    Ok((m, mu))
}

/// Driver and coefficients on the working grid of one window.
struct Discretization {
    omega: SampledPath,
    /// Per-cell trapezoidal increments `W_i`.
    w: Vec<DMatrix<f64>>,
}

impl Discretization {
    fn new(eq: &LinearYDE, omega: &SampledPath, window: Interval, extra: &[f64]) -> Result<Self> {
        if omega.shape() != (1, 1) {
            return domain("the driver must be scalar");
        }
        if window.a >= window.b {
            return domain("a solve needs a window of positive length");
        }
        for (name, span) in [("driver", omega.span()), ("coefficients", eq.span())] {
            if !span.contains(window.a) || !span.contains(window.b) {
                return domain(format!(
                    "{name} span [{}, {}] does not cover [{}, {}]",
                    span.a, span.b, window.a, window.b
                ));
            }
        }
        let inside = |t: &f64| *t > window.a && *t < window.b;
        let mut times: Vec<f64> = omega
            .times()
            .iter()
            .chain(eq.a.times())
            .chain(eq.c.times())
            .chain(extra)
            .copied()
            .filter(inside)
            .collect();
        times.push(window.a);
        times.push(window.b);
        times.sort_by(|a, b| a.total_cmp(b));
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        let omega = omega.resample(&times)?;
        let a = eq.a.resample(&times)?;
        let c = eq.c.resample(&times)?;
        let w = (0..times.len() - 1)
            .map(|i| {
                let dt = times[i + 1] - times[i];
                let dw = omega.scalar_value(i + 1) - omega.scalar_value(i);
                (a.matrix(i) + a.matrix(i + 1)) * (0.5 * dt) + (c.matrix(i) + c.matrix(i + 1)) * (0.5 * dw)
            })
            .collect();
        Ok(Discretization { omega, w })
    }

    fn times(&self) -> &[f64] {
        self.omega.times()
    }

    fn window(&self) -> Interval {
        self.omega.span()
    }
}

/// States at every working-grid node plus per-interval Picard diagnostics.
pub(crate) struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
    pub partition: GreedyPartition,
    pub iterations: Vec<usize>,
    /// Successive-iterate distances per greedy interval.
    pub distances: Vec<Vec<f64>>,
    pub m_star: f64,
    pub mu: f64,
    pub omega_pvar: f64,
}

fn qvar_distance(times: &[f64], a: &[DMatrix<f64>], b: &[DMatrix<f64>], q: f64) -> f64 {
    let (r, c) = a[0].shape();
    let mut values = Vec::with_capacity(a.len() * r * c);
    for (x, y) in a.iter().zip(b) {
        for i in 0..r {
            for j in 0..c {
                values.push(x[(i, j)] - y[(i, j)]);
            }
        }
    }
    let path = SampledPath::new(times.to_vec(), values, r, c).expect("consistent grid");
    let start = path::norm(path.value(0));
    start + path::p_variation_pow_idx(&path, q, 0, path.len() - 1).powf(1.0 / q)
}

fn picard(
    eq: &LinearYDE,
    disc: &Discretization,
    x0: &DMatrix<f64>,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    let window = disc.window();
    let m_star = eq.m_star(window)?;
    let (m_eff, mu) = resolve_mu(m_star, opts.mu)?;
    let p = eq.params.p;
    let q = eq.params.q;
    let partition = greedy_partition(&disc.omega, p, mu, m_eff, window)?;
    let omega_pvar = path::p_variation_seminorm(&disc.omega, p, window)?;
    let times = disc.times();
    let d = eq.d;
    let steps: Vec<DMatrix<f64>> = disc.w.iter().map(|w| w.exp() - DMatrix::identity(d, d)).collect();

    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    let mut iterations = Vec::new();
    let mut distances = Vec::new();
    for seg in partition.indices.windows(2) {
        let (s, e) = (seg[0], seg[1]);
        let xs = states[s].clone();
        let mut cur = vec![xs.clone(); e - s + 1];
        let mut dists = Vec::new();
        let mut done = false;
        for it in 1..=opts.max_iterations {
            let mut next = Vec::with_capacity(cur.len());
            next.push(xs.clone());
            let mut acc = DMatrix::zeros(xs.nrows(), xs.ncols());
            for j in 1..cur.len() {
                acc += &steps[s + j - 1] * &cur[j - 1];
                next.push(&xs + &acc);
            }
            let dist = qvar_distance(&times[s..=e], &next, &cur, q);
            let scale = next.iter().map(|m| m.norm()).fold(1.0, f64::max);
            dists.push(dist);
            cur = next;
            if dist <= opts.tol * scale {
                iterations.push(it);
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::Iteration {
                start: times[s],
                end: times[e],
                iterations: opts.max_iterations,
                distance: *dists.last().unwrap_or(&f64::NAN),
            });
        }
        distances.push(dists);
        states.extend(cur.into_iter().skip(1));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        partition,
        iterations,
        distances,
        m_star,
        mu,
        omega_pvar,
    })
}

/// Result of [`picard_solve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Solution as a `d x 1` path on the working grid.
    pub solution: SampledPath,
    pub partition: GreedyPartition,
    /// Picard iterations per greedy interval.
    pub iterations: Vec<usize>,
    pub sup_norm: f64,
    /// `|||x|||_{p-var}` over the window.
    pub pvar_norm: f64,
    pub growth_bound: f64,
    pub pvar_bound: f64,
    pub m_star: f64,
    pub mu: f64,
    pub eta: f64,
    pub omega_pvar: f64,
}

impl SolveReport {
    pub fn bounds_hold(&self) -> bool {
        self.sup_norm <= self.growth_bound && self.pvar_norm <= self.pvar_bound
    }

    /// Solution value at the window end.
    pub fn final_value(&self) -> DVector<f64> {
        DVector::from_column_slice(self.solution.value(self.solution.len() - 1))
    }
}

/// `(growth, growth1)` bounds: `|x0| exp{η[2 + G]}` and `|x0| exp{(1+η)[3 + G]}`,
/// with `G = (2M*/μ)^p (T^p + |||ω|||^p)`.
pub fn growth_bounds(x0_norm: f64, m_star: f64, mu: f64, p: f64, length: f64, omega_pvar: f64) -> (f64, f64) {
    let m = if m_star > 0.0 { m_star } else { 1.0 };
    let g = (2.0 * m / mu).powf(p) * (length.powf(p) + omega_pvar.powf(p));
    let eta = eta(mu);
    (x0_norm * (eta * (2.0 + g)).exp(), x0_norm * ((1.0 + eta) * (3.0 + g)).exp())
}

/// Solves the vector equation from `x0` at `window.a` over `window`.
pub fn picard_solve(
    eq: &LinearYDE,
    x0: &DVector<f64>,
    omega: &SampledPath,
    window: Interval,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if x0.len() != eq.d {
        return domain(format!("initial value has length {}, expected {}", x0.len(), eq.d));
    }
    if !(opts.tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let disc = Discretization::new(eq, omega, window, &[])?;
    let x0m = DMatrix::from_column_slice(eq.d, 1, x0.as_slice());
    let traj = picard(eq, &disc, &x0m, opts)?;
    let values: Vec<f64> = traj.states.iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect();
    let solution = SampledPath::new(traj.times.clone(), values, eq.d, 1)?;
    let sup_norm = solution.sup_norm(window)?;
    let pvar_norm = path::p_variation_seminorm(&solution, eq.params.p, window)?;
    let (growth_bound, pvar_bound) =
        growth_bounds(x0.norm(), traj.m_star, traj.mu, eq.params.p, window.length(), traj.omega_pvar);
    Ok(SolveReport {
        solution,
        partition: traj.partition,
        iterations: traj.iterations,
        sup_norm,
        pvar_norm,
        growth_bound,
        pvar_bound,
        m_star: traj.m_star,
        mu: traj.mu,
        eta: eta(traj.mu),
        omega_pvar: traj.omega_pvar,
    })
}

/// Largest observed ratio of successive Picard distances over all greedy intervals.
///
/// Ratios are only taken while the distances are above roundoff.
pub fn picard_contraction(
    eq: &LinearYDE,
    x0: &DVector<f64>,
    omega: &SampledPath,
    window: Interval,
    opts: &SolveOptions,
) -> Result<f64> {
    let disc = Discretization::new(eq, omega, window, &[])?;
    let x0m = DMatrix::from_column_slice(eq.d, 1, x0.as_slice());
    let traj = picard(eq, &disc, &x0m, opts)?;
    let floor = 1e-13 * x0.norm().max(1.0);
    let mut worst = 0.0f64;
    for dists in &traj.distances {
        for w in dists.windows(2) {
            if w[0] > floor && w[1] > floor {
                worst = worst.max(w[1] / w[0]);
            }
        }
    }
    Ok(worst)
}

/// Fundamental matrices `Φ(base, t)` (and optionally adjoint `Ψ(base, t)`) at evaluation times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub base_time: f64,
    pub eval_times: Vec<f64>,
    pub phi: Vec<DMatrix<f64>>,
    pub psi: Option<Vec<DMatrix<f64>>>,
}

impl FlowMatrix {
    /// Index of an evaluation time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.eval_times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn phi_at(&self, t: f64) -> Option<&DMatrix<f64>> {
        self.index_of(t).map(|i| &self.phi[i])
    }

    /// `max_t ‖Ψ(base,t)ᵀ Φ(base,t) - I‖_F`, if the adjoint was computed.
    pub fn adjoint_defect(&self) -> Option<f64> {
        let psi = self.psi.as_ref()?;
        let d = self.phi.first()?.nrows();
        Some(
            psi.iter()
                .zip(&self.phi)
                .map(|(s, f)| (s.transpose() * f - DMatrix::identity(d, d)).norm())
                .fold(0.0, f64::max),
        )
    }
}

fn check_eval_times(omega: &SampledPath, t0: f64, eval_times: &[f64]) -> Result<f64> {
    let mut end = t0;
    for &t in eval_times {
        if !t.is_finite() || t < t0 {
            return domain(format!("evaluation time {t} precedes the base time {t0}"));
        }
        if !omega.span().contains(t) {
            return domain(format!("evaluation time {t} outside the driver span"));
        }
        end = end.max(t);
    }
    Ok(end)
}

/// States of the matrix equation started at `I` at `t0`, sampled at `eval_times`.
fn matrix_flow(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    eval_times: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<DMatrix<f64>>> {
    let end = check_eval_times(omega, t0, eval_times)?;
    let d = eq.d;
    if end == t0 {
        return Ok(vec![DMatrix::identity(d, d); eval_times.len()]);
    }
    let disc = Discretization::new(eq, omega, Interval::new(t0, end)?, eval_times)?;
    let traj = picard(eq, &disc, &DMatrix::identity(d, d), opts)?;
    let grid = SampledPath::scalar(traj.times.clone(), vec![0.0; traj.times.len()])?;
    eval_times
        .iter()
        .map(|&t| {
            let i = grid
                .node_index(t)
                .ok_or_else(|| Error::Domain(format!("evaluation time {t} missing from grid")))?;
            Ok(if i == 0 { DMatrix::identity(d, d) } else { traj.states[i].clone() })
        })
        .collect()
}

/// `Φ(t0, t)` for `t` in `eval_times` (all `>= t0`), solving the matrix equation with `Φ(t0,t0) = I`.
pub fn fundamental_matrix(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    eval_times: &[f64],
    opts: &SolveOptions,
) -> Result<FlowMatrix> {
    let phi = matrix_flow(eq, omega, t0, eval_times, opts)?;
    Ok(FlowMatrix { base_time: t0, eval_times: eval_times.to_vec(), phi, psi: None })
}

/// Forward flow together with the adjoint flow `dΨ = -AᵀΨ dt - CᵀΨ dω`, `Ψ(t0,t0) = I`.
pub fn adjoint_fundamental(
    eq: &LinearYDE,
    omega: &SampledPath,
    t0: f64,
    eval_times: &[f64],
    opts: &SolveOptions,
) -> Result<FlowMatrix> {
    let phi = matrix_flow(eq, omega, t0, eval_times, opts)?;
    let psi = matrix_flow(&eq.adjoint(), omega, t0, eval_times, opts)?;
    Ok(FlowMatrix { base_time: t0, eval_times: eval_times.to_vec(), phi, psi: Some(psi) })
}

/// Two-parameter flow `Φ(s, t)`; for `s > t` this is `Ψ(t, s)ᵀ`.
pub fn flow_matrix(eq: &LinearYDE, omega: &SampledPath, s: f64, t: f64, opts: &SolveOptions) -> Result<DMatrix<f64>> {
    if s <= t {
        Ok(matrix_flow(eq, omega, s, &[t], opts)?.remove(0))
    } else {
        Ok(matrix_flow(&eq.adjoint(), omega, t, &[s], opts)?.remove(0).transpose())
    }
}

/// `∫_{t0}^t tr A ds + ∫_{t0}^t tr C dω` with the solver's trapezoidal sums.
pub fn liouville_log_det(eq: &LinearYDE, omega: &SampledPath, t0: f64, t: f64) -> Result<f64> {
    if t < t0 {
        return Ok(-liouville_log_det(eq, omega, t, t0)?);
    }
    if t == t0 {
        return Ok(0.0);
    }
    let disc = Discretization::new(eq, omega, Interval::new(t0, t)?, &[])?;
    Ok(disc.w.iter().map(|w| w.trace()).sum())
}

/// Running version of [`liouville_log_det`] at the given times (all `>= t0`).
pub fn liouville_series(eq: &LinearYDE, omega: &SampledPath, t0: f64, times: &[f64]) -> Result<Vec<f64>> {
    let end = check_eval_times(omega, t0, times)?;
    if end == t0 {
        return Ok(vec![0.0; times.len()]);
    }
    let disc = Discretization::new(eq, omega, Interval::new(t0, end)?, times)?;
    let mut run = vec![0.0];
    for w in &disc.w {
        run.push(run.last().unwrap() + w.trace());
    }
    let grid = SampledPath::scalar(disc.times().to_vec(), run)?;
    times
        .iter()
        .map(|&t| Ok(grid.scalar_value(grid.node_index(t).expect("node inserted"))))
        .collect()
}

/// `log|det Φ|` of a computed flow matrix.
pub fn log_abs_det(phi: &DMatrix<f64>) -> Result<f64> {
    Ok(linalg::log_det(phi)?.log_abs)
}

/// One row of [`continuity_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub size: f64,
    /// p-variation norm of `x(·; x0 + size·e, ω) - x(·; x0, ω)`.
    pub x0_delta: f64,
    /// p-variation norm of `x(·; x0, ω + size·g) - x(·; x0, ω)`.
    pub omega_delta: f64,
}

/// Sensitivity of the solution map to perturbations of `x0` (along `e`) and `ω` (along `g`).
pub fn continuity_probe(
    eq: &LinearYDE,
    x0: &DVector<f64>,
    e: &DVector<f64>,
    omega: &SampledPath,
    g: &SampledPath,
    window: Interval,
    sizes: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<ProbeRow>> {
    let base = picard_solve(eq, x0, omega, window, opts)?;
    let g = g.resample(omega.times())?;
    let pvar_diff = |other: &SolveReport| -> Result<f64> {
        let (a, b) = (&base.solution, &other.solution);
        if a.times() != b.times() {
            return domain("perturbed solve used a different grid");
        }
        let values: Vec<f64> = a.raw_values().iter().zip(b.raw_values()).map(|(x, y)| y - x).collect();
        let diff = SampledPath::new(a.times().to_vec(), values, eq.d, 1)?;
        path::p_variation_norm(&diff, eq.params.p, window)
    };
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let moved = picard_solve(eq, &(x0 + e * size), omega, window, opts)?;
        let shifted_values: Vec<f64> = omega
            .raw_values()
            .iter()
            .zip(g.raw_values())
            .map(|(w, v)| w + size * v)
            .collect();
        let shifted = SampledPath::scalar(omega.times().to_vec(), shifted_values)?;
        let fixed_mu = SolveOptions { mu: Some(base.mu), ..*opts };
        let perturbed = picard_solve(eq, x0, &shifted, window, &fixed_mu)?;
        rows.push(ProbeRow { size, x0_delta: pvar_diff(&moved)?, omega_delta: pvar_diff(&perturbed)? });
    }
    Ok(rows)
}
