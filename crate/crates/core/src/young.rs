//! Young integration by Riemann–Stieltjes sums.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::{Interval, SampledPath};

/// Exponents of a Young pairing: integrand of finite q-variation against an integrator of finite p-variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungParams {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    /// Young–Loève constant `(1 - 2^{1-θ})^{-1}`.
    pub k: f64,
}

impl YoungParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return domain(format!("p must lie in (1, 2), got {p}"));
        }
        if !(q > p && q.is_finite()) {
            return domain(format!("q must exceed p = {p}, got {q}"));
        }
        let theta = 1.0 / p + 1.0 / q;
        if theta <= 1.0 {
            return domain(format!("need 1/p + 1/q > 1, got {theta}"));
        }
        let k = 1.0 / (1.0 - 2f64.powf(1.0 - theta));
        Ok(YoungParams { p, q, theta, k })
    }
}

/// `K · |||x|||_q · |||ω|||_p`, the Young–Loève bound on `|∫_s^t x dω - x(s)(ω(t) - ω(s))|`.
pub fn young_loeve_defect_bound(x_qvar: f64, omega_pvar: f64, params: &YoungParams) -> f64 {
    params.k * x_qvar * omega_pvar
}

/// Puts `x` and `ω` on the union of their grids over `window`.
///
/// Integrator nodes are kept exactly; the integrand is linearly interpolated.
/// Both paths are restricted to `window`, whose endpoints are added as nodes.
pub fn merge_grids(
    x: &SampledPath,
    omega: &SampledPath,
    window: Interval,
) -> Result<(SampledPath, SampledPath)> {
    for (name, path) in [("integrand", x), ("integrator", omega)] {
        let span = path.span();
        if !span.contains(window.a) || !span.contains(window.b) {
            return domain(format!("{name} does not cover [{}, {}]", window.a, window.b));
        }
    }
    if window.a >= window.b {
        return domain("merging needs a window of positive length");
    }
    let mut times: Vec<f64> = x
        .times()
        .iter()
        .chain(omega.times())
        .copied()
        .filter(|&t| t > window.a && t < window.b)
        .collect();
    times.push(window.a);
    times.push(window.b);
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    Ok((x.resample(&times)?, omega.resample(&times)?))
}

#[derive(Clone, Copy)]
enum Rule {
    Left,
    Trapezoid,
}

struct Product {
    rows: usize,
    inner: usize,
    cols: usize,
    scalar_integrator: bool,
}

fn product_shape(x: &SampledPath, omega: &SampledPath) -> Result<Product> {
    let (r, k) = x.shape();
    let (k2, c) = omega.shape();
    if (k2, c) == (1, 1) {
        return Ok(Product { rows: r, inner: k, cols: 1, scalar_integrator: true });
    }
    if k != k2 {
        return domain(format!("cannot multiply {r}x{k} integrand by {k2}x{c} increments"));
    }
    Ok(Product { rows: r, inner: k, cols: c, scalar_integrator: false })
}

fn out_shape(pr: &Product) -> (usize, usize) {
    if pr.scalar_integrator {
        (pr.rows, pr.inner)
    } else {
        (pr.rows, pr.cols)
    }
}

/// Adds `x · dω` (both flattened row-major) to `acc`.
fn accumulate(pr: &Product, acc: &mut [f64], x: &[f64], dw: &[f64], weight: f64) {
    if pr.scalar_integrator {
        let s = weight * dw[0];
        for (a, v) in acc.iter_mut().zip(x) {
            *a += v * s;
        }
        return;
    }
    for i in 0..pr.rows {
        for j in 0..pr.cols {
            let mut s = 0.0;
            for l in 0..pr.inner {
                s += x[i * pr.inner + l] * dw[l * pr.cols + j];
            }
            acc[i * pr.cols + j] += weight * s;
        }
    }
}

fn check_shared_grid(x: &SampledPath, omega: &SampledPath, window: Interval) -> Result<(usize, usize)> {
    let (i, j) = x.window_indices(window)?;
    let (k, l) = omega.window_indices(window)?;
    if i != k || j != l || x.times()[i..=j] != omega.times()[k..=l] {
        return domain("integrand and integrator must share the grid on the window; merge grids first");
    }
    Ok((i, j))
}

fn running_sums(
    x: &SampledPath,
    omega: &SampledPath,
    window: Interval,
    rule: Rule,
) -> Result<(Vec<f64>, Vec<f64>, (usize, usize))> {
    let (i0, i1) = check_shared_grid(x, omega, window)?;
    let pr = product_shape(x, omega)?;
    let shape = out_shape(&pr);
    let w = shape.0 * shape.1;
    let mut acc = vec![0.0; w];
    let mut out = Vec::with_capacity((i1 - i0 + 1) * w);
    out.extend_from_slice(&acc);
    let mut dw = vec![0.0; omega.width()];
    for n in i0..i1 {
        for (d, (a, b)) in dw.iter_mut().zip(omega.value(n).iter().zip(omega.value(n + 1))) {
            *d = b - a;
        }
        match rule {
            Rule::Left => accumulate(&pr, &mut acc, x.value(n), &dw, 1.0),
            Rule::Trapezoid => {
                accumulate(&pr, &mut acc, x.value(n), &dw, 0.5);
                accumulate(&pr, &mut acc, x.value(n + 1), &dw, 0.5);
            }
        }
        out.extend_from_slice(&acc);
    }
    let times = x.times()[i0..=i1].to_vec();
    Ok((times, out, shape))
}

/// Left-point sum `Σ x(t_i)(ω(t_{i+1}) - ω(t_i))` over the grid nodes of `window`.
///
/// A scalar integrator multiplies every entry of `x`; otherwise the product is the
/// matrix product `x · dω`.
pub fn young_integral(x: &SampledPath, omega: &SampledPath, window: Interval) -> Result<DMatrix<f64>> {
    integral_with(x, omega, window, Rule::Left)
}

/// Trapezoidal sum `Σ ½(x(t_i) + x(t_{i+1}))(ω(t_{i+1}) - ω(t_i))`.
///
/// Converges to the same Young integral as [`young_integral`]; the flow solver
/// uses it because it matches its per-cell update exactly.
pub fn young_integral_trapezoid(
    x: &SampledPath,
    omega: &SampledPath,
    window: Interval,
) -> Result<DMatrix<f64>> {
    integral_with(x, omega, window, Rule::Trapezoid)
}

fn integral_with(x: &SampledPath, omega: &SampledPath, window: Interval, rule: Rule) -> Result<DMatrix<f64>> {
    if window.a == window.b {
        let pr = product_shape(x, omega)?;
        let (r, c) = out_shape(&pr);
        x.window_indices(window)?;
        omega.window_indices(window)?;
        return Ok(DMatrix::zeros(r, c));
    }
    let (_, sums, (r, c)) = running_sums(x, omega, window, rule)?;
    let w = r * c;
    Ok(DMatrix::from_row_slice(r, c, &sums[sums.len() - w..]))
}

/// Running integral `t ↦ ∫_a^t x dω` (left-point sums) at every grid node of `window`.
pub fn young_integral_path(x: &SampledPath, omega: &SampledPath, window: Interval) -> Result<SampledPath> {
    path_with(x, omega, window, Rule::Left)
}

/// Running trapezoidal integral, see [`young_integral_trapezoid`].
pub fn young_integral_path_trapezoid(
    x: &SampledPath,
    omega: &SampledPath,
    window: Interval,
) -> Result<SampledPath> {
    path_with(x, omega, window, Rule::Trapezoid)
}

fn path_with(x: &SampledPath, omega: &SampledPath, window: Interval, rule: Rule) -> Result<SampledPath> {
    if window.a == window.b {
        return domain("a running integral needs a window of positive length");
    }
    let (times, sums, (r, c)) = running_sums(x, omega, window, rule)?;
    SampledPath::new(times, sums, r, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::uniform_grid;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn params_constant() {
        let yp = YoungParams::new(1.5, 2.0).unwrap();
        assert!((yp.theta - 7.0 / 6.0).abs() < 1e-15);
        let expected = 1.0 / (1.0 - 2f64.powf(-1.0 / 6.0));
        assert!((yp.k - expected).abs() < 1e-12);
        // (1 - 2^{-1/6})^{-1} evaluated in high precision
        assert!((yp.k - 9.165795148826).abs() < 1e-9);
        assert!((young_loeve_defect_bound(2.0, 3.0, &yp) - 54.99477).abs() < 1e-4);
        assert_eq!(young_loeve_defect_bound(0.0, 3.0, &yp), 0.0);
    }

    #[test]
    fn params_reject_bad_exponents() {
        assert!(YoungParams::new(2.0, 3.0).is_err());
        assert!(YoungParams::new(1.5, 1.4).is_err());
        assert!(YoungParams::new(1.9, 2.5).is_err());
    }

    #[test]
    fn constant_integrand_telescopes() {
        let g = uniform_grid(0.0, 1.0, 50);
        let x = SampledPath::from_scalar_fn(g.clone(), |_| 3.0).unwrap();
        let w = SampledPath::from_scalar_fn(g, |t| (5.0 * t).sin()).unwrap();
        let v = young_integral(&x, &w, unit()).unwrap()[(0, 0)];
        assert!((v - 3.0 * 5f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn integral_of_t_dt_converges() {
        let mut prev = f64::INFINITY;
        for n in [16, 64, 256, 1024] {
            let x = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, n), |t| t).unwrap();
            let v = young_integral(&x, &x, unit()).unwrap()[(0, 0)];
            let err = (v - 0.5).abs();
            assert!(err < prev);
            assert!((err - 0.5 / n as f64).abs() < 1e-12);
            prev = err;
        }
    }

    #[test]
    fn integration_by_parts_under_refinement() {
        let f = |t: f64| (3.0 * t).sin() + t * t;
        let mut prev = f64::INFINITY;
        for n in [64, 256, 1024, 4096] {
            let w = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, n), f).unwrap();
            let v = 2.0 * young_integral(&w, &w, unit()).unwrap()[(0, 0)];
            let err = (v - (f(1.0).powi(2) - f(0.0).powi(2))).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn running_integral_and_additivity() {
        let g = uniform_grid(0.0, 2.0, 40);
        let one = SampledPath::from_scalar_fn(g.clone(), |_| 1.0).unwrap();
        let w = SampledPath::from_scalar_fn(g.clone(), |t| t.cos()).unwrap();
        let win = Interval::new(0.0, 2.0).unwrap();
        let run = young_integral_path(&one, &w, win).unwrap();
        assert_eq!(run.scalar_value(0), 0.0);
        for i in 0..run.len() {
            assert!((run.scalar_value(i) - (w.scalar_value(i) - 1.0)).abs() < 1e-12);
        }
        let x = SampledPath::from_scalar_fn(g, |t| t.exp()).unwrap();
        let full = young_integral(&x, &w, win).unwrap()[(0, 0)];
        let a = young_integral(&x, &w, Interval::new(0.0, 0.7).unwrap()).unwrap()[(0, 0)];
        let b = young_integral(&x, &w, Interval::new(0.7, 2.0).unwrap()).unwrap()[(0, 0)];
        assert!((full - a - b).abs() < 1e-12);
        let run = young_integral_path(&x, &w, win).unwrap();
        assert!((run.scalar_value(run.len() - 1) - full).abs() < 1e-12);
    }

    #[test]
    fn matrix_integrand_vector_increments() {
        let g = uniform_grid(0.0, 1.0, 4);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = SampledPath::from_matrix_fn(g.clone(), 2, 2, |_| c.clone()).unwrap();
        let v = SampledPath::from_matrix_fn(g, 2, 1, |t| DMatrix::from_row_slice(2, 1, &[t, -t])).unwrap();
        let r = young_integral(&x, &v, unit()).unwrap();
        assert_eq!(r.shape(), (2, 1));
        assert!((r[(0, 0)] - (-1.0)).abs() < 1e-12);
        assert!((r[(1, 0)] - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected_and_merge_fixes_it() {
        let x = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 3), |t| t).unwrap();
        let w = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 4), |t| t * t).unwrap();
        assert!(young_integral(&x, &w, unit()).is_err());
        let (xm, wm) = merge_grids(&x, &w, unit()).unwrap();
        assert_eq!(xm.len(), 7);
        // integrator increments survive the merge
        let dw: f64 = young_integral(&SampledPath::from_scalar_fn(xm.times().to_vec(), |_| 1.0).unwrap(), &wm, unit())
            .unwrap()[(0, 0)];
        assert!((dw - 1.0).abs() < 1e-12);
        for (t, v) in wm.times().iter().zip(wm.scalar_values()) {
            if w.node_index(*t).is_some() {
                assert!((v - t * t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trapezoid_is_exact_for_linear_integrand() {
        let x = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 7), |t| t).unwrap();
        let v = young_integral_trapezoid(&x, &x, unit()).unwrap()[(0, 0)];
        assert!((v - 0.5).abs() < 1e-14);
    }
}
