use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ylyap::lyapunov::{discrete_spectrum, Method, SpectrumOptions};
use ylyap::path::{
    greedy_partition, holder_module, holder_seminorm, p_variation_seminorm, uniform_grid, wiener_shift, Interval,
    SampledPath,
};
use ylyap::solver::{liouville_log_det, picard_contraction, picard_solve, SolveOptions};
use ylyap::young::{young_integral, young_integral_path, young_loeve_defect_bound, YoungParams};
use ylyap::LinearYDE;

fn params() -> YoungParams {
    YoungParams::new(1.5, 2.5).unwrap()
}

/// Random walk on a grid with random positive spacings.
fn walk(len: std::ops::Range<usize>) -> impl Strategy<Value = SampledPath> {
    len.prop_flat_map(|n| (prop::collection::vec(0.05f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n)))
        .prop_map(|(gaps, steps)| {
            let mut t = vec![0.0];
            let mut v = vec![0.0];
            for (g, s) in gaps.iter().zip(&steps) {
                t.push(t.last().unwrap() + g);
                v.push(v.last().unwrap() + s);
            }
            SampledPath::scalar(t, v).unwrap()
        })
}

/// Two scalar walks on one uniform grid.
fn walk_pair(n: usize) -> impl Strategy<Value = (SampledPath, SampledPath)> {
    (prop::collection::vec(-1.0f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n)).prop_map(move |(a, b)| {
        let t = uniform_grid(0.0, 1.0, n);
        let cum = |s: &[f64]| {
            let mut v = vec![0.0];
            for x in s {
                v.push(v.last().unwrap() + x);
            }
            v
        };
        (SampledPath::scalar(t.clone(), cum(&a)).unwrap(), SampledPath::scalar(t, cum(&b)).unwrap())
    })
}

fn whole(x: &SampledPath) -> Interval {
    x.span()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pvar_superadditive_over_adjacent_windows(x in walk(4..40), p in 1.05f64..3.0, cut in 0.1f64..0.9) {
        let t = x.times();
        let k = ((t.len() - 1) as f64 * cut).round().clamp(1.0, (t.len() - 2) as f64) as usize;
        let (a, b, c) = (t[0], t[k], *t.last().unwrap());
        let left = p_variation_seminorm(&x, p, Interval::new(a, b).unwrap()).unwrap().powf(p);
        let right = p_variation_seminorm(&x, p, Interval::new(b, c).unwrap()).unwrap().powf(p);
        let all = p_variation_seminorm(&x, p, Interval::new(a, c).unwrap()).unwrap().powf(p);
        prop_assert!(left + right <= all * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn pvar_nonincreasing_in_p(x in walk(3..40), p in 1.0f64..3.0, dp in 0.01f64..1.0) {
        let lo = p_variation_seminorm(&x, p, whole(&x)).unwrap();
        let hi = p_variation_seminorm(&x, p + dp, whole(&x)).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
    }

    #[test]
    fn rvar_bounded_by_holder(x in walk(3..30), r in 1.1f64..4.0) {
        let alpha = 1.0 / r;
        let w = whole(&x);
        let rvar = p_variation_seminorm(&x, r, w).unwrap();
        let holder = holder_seminorm(&x, alpha, w).unwrap();
        prop_assert!(rvar <= w.length().powf(alpha) * holder * (1.0 + 1e-12));
    }

    #[test]
    fn holder_module_monotone_and_bounded(x in walk(3..30), alpha in 0.2f64..1.0, d1 in 0.05f64..2.0, d2 in 0.05f64..2.0) {
        let w = whole(&x);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let m_lo = holder_module(&x, alpha, lo, w).unwrap();
        let m_hi = holder_module(&x, alpha, hi, w).unwrap();
        prop_assert!(m_lo <= m_hi);
        prop_assert!(m_hi <= holder_seminorm(&x, alpha, w).unwrap());
    }

    #[test]
    fn product_bound(n in 4usize..30, cs in prop::collection::vec(-1.0f64..1.0, 12), xs in prop::collection::vec(-1.0f64..1.0, 6), q in 1.2f64..3.0) {
        // C(t) = C0 + C1 t + C2 t², x(t) = x0 + x1 t + x2 t².
        let times = uniform_grid(0.0, 1.0, n);
        let cmat = |t: f64| DMatrix::from_fn(2, 2, |i, j| cs[2 * i + j] + cs[4 + 2 * i + j] * t + cs[8 + 2 * i + j] * t * t);
        let xvec = |t: f64| DMatrix::from_fn(2, 1, |i, _| xs[i] + xs[2 + i] * t + xs[4 + i] * t * t);
        let c = SampledPath::from_matrix_fn(times.clone(), 2, 2, cmat).unwrap();
        let x = SampledPath::from_matrix_fn(times.clone(), 2, 1, xvec).unwrap();
        let cx = SampledPath::from_matrix_fn(times, 2, 1, |t| cmat(t) * xvec(t)).unwrap();
        let w = Interval::new(0.0, 1.0).unwrap();
        let lhs = p_variation_seminorm(&cx, q, w).unwrap();
        let rhs = c.sup_norm(w).unwrap() * p_variation_seminorm(&x, q, w).unwrap()
            + x.sup_norm(w).unwrap() * p_variation_seminorm(&c, q, w).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn greedy_partition_stable_under_refinement(x in walk(6..30), budget_scale in 0.3f64..2.0) {
        // Midpoint refinement leaves a piecewise linear path unchanged.
        let t = x.times();
        let mids: Vec<f64> = t.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let fine = x.with_nodes(&mids).unwrap();
        let w = whole(&x);
        let m_star = 1.0 / budget_scale;
        let mu = 0.5 * m_star.min(1.0);
        let coarse = greedy_partition(&x, 1.5, mu, m_star, w).unwrap();
        let refined = greedy_partition(&fine, 1.5, mu, m_star, w).unwrap();
        let cell = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        prop_assert!((refined.taus[1] - coarse.taus[1]).abs() <= cell * (1.0 + 1e-9));
    }

    #[test]
    fn young_grid_sums_additive_and_bilinear((x, w) in walk_pair(40), k in 1usize..39, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let t = x.times().to_vec();
        let all = Interval::new(0.0, 1.0).unwrap();
        let i = young_integral(&x, &w, all).unwrap()[0];
        let left = young_integral(&x, &w, Interval::new(0.0, t[k]).unwrap()).unwrap()[0];
        let right = young_integral(&x, &w, Interval::new(t[k], 1.0).unwrap()).unwrap()[0];
        prop_assert!((i - left - right).abs() <= 1e-12 * (1.0 + i.abs()));

        let comb = |a: &SampledPath, b: &SampledPath| {
            SampledPath::scalar(t.clone(), a.scalar_values().iter().zip(b.scalar_values()).map(|(u, v)| alpha * u + beta * v).collect()).unwrap()
        };
        let lin_x = young_integral(&comb(&x, &w), &w, all).unwrap()[0];
        let expect = alpha * i + beta * young_integral(&w, &w, all).unwrap()[0];
        prop_assert!((lin_x - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        let lin_w = young_integral(&x, &comb(&x, &w), all).unwrap()[0];
        let expect = alpha * young_integral(&x, &x, all).unwrap()[0] + beta * i;
        prop_assert!((lin_w - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
    }

    #[test]
    fn young_loeve_never_violated((x, w) in walk_pair(30), i in 0usize..29, len in 1usize..30) {
        let j = (i + len).min(30);
        let t = x.times();
        let win = Interval::new(t[i], t[j]).unwrap();
        let par = params();
        let defect = (young_integral(&x, &w, win).unwrap()[0] - x.scalar_value(i) * (w.scalar_value(j) - w.scalar_value(i))).abs();
        let bound = young_loeve_defect_bound(
            p_variation_seminorm(&x, par.q, win).unwrap(),
            p_variation_seminorm(&w, par.p, win).unwrap(),
            &par,
        );
        prop_assert!(defect <= bound * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn wiener_shift_helix(w in walk(4..30), k in 1usize..3, r_frac in 0.0f64..0.8) {
        let t = w.times();
        let r_idx = ((t.len() - 2) as f64 * r_frac) as usize;
        let r = t[r_idx];
        let shifted = wiener_shift(&w, r).unwrap();
        for (m, &s) in shifted.times().iter().enumerate().skip(k.min(shifted.len() - 1)) {
            let lhs = w.value_at(s + r).unwrap()[0] - w.scalar_value(0);
            let rhs = (w.value_at(r).unwrap()[0] - w.scalar_value(0)) + shifted.scalar_value(m);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}

/// Random `d×d` constant-coefficient equation on `[0, horizon]`.
fn const_eq(d: usize, horizon: f64) -> impl Strategy<Value = LinearYDE> {
    (prop::collection::vec(-1.0f64..1.0, d * d), prop::collection::vec(-0.5f64..0.5, d * d)).prop_map(move |(a, c)| {
        let span = Interval::new(0.0, horizon).unwrap();
        LinearYDE::constant(&DMatrix::from_vec(d, d, a), &DMatrix::from_vec(d, d, c), span, params()).unwrap()
    })
}

/// Rough deterministic driver: a walk with `per_unit` steps per unit time.
fn driver(horizon: f64, per_unit: usize) -> impl Strategy<Value = SampledPath> {
    let n = (horizon as usize) * per_unit;
    prop::collection::vec(-1.0f64..1.0, n).prop_map(move |steps| {
        let scale = (1.0 / per_unit as f64).powf(0.7);
        let mut v = vec![0.0];
        for s in steps {
            v.push(v.last().unwrap() + scale * s);
        }
        SampledPath::scalar(uniform_grid(0.0, horizon, n), v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solve_is_linear_in_x0(eq in const_eq(3, 2.0), w in driver(2.0, 32), x in prop::collection::vec(-1.0f64..1.0, 3), y in prop::collection::vec(-1.0f64..1.0, 3), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let opts = SolveOptions::default();
        let win = Interval::new(0.0, 2.0).unwrap();
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let sx = picard_solve(&eq, &x, &w, win, &opts).unwrap();
        let sy = picard_solve(&eq, &y, &w, win, &opts).unwrap();
        let sc = picard_solve(&eq, &(&x * alpha + &y * beta), &w, win, &opts).unwrap();
        prop_assert!(sx.bounds_hold() && sy.bounds_hold() && sc.bounds_hold());
        let scale = sc.sup_norm.max(sx.sup_norm).max(sy.sup_norm).max(1.0);
        for i in 0..sc.solution.len() {
            for k in 0..3 {
                let lin = alpha * sx.solution.value(i)[k] + beta * sy.solution.value(i)[k];
                prop_assert!((sc.solution.value(i)[k] - lin).abs() <= 2.0 * opts.tol * scale);
            }
        }
    }

    #[test]
    fn picard_ratio_within_mu(eq in const_eq(2, 1.0), w in driver(1.0, 64), x in prop::collection::vec(-1.0f64..1.0, 2)) {
        let opts = SolveOptions::default();
        let win = Interval::new(0.0, 1.0).unwrap();
        let rep = picard_solve(&eq, &DVector::from_vec(x.clone()), &w, win, &opts).unwrap();
        let ratio = picard_contraction(&eq, &DVector::from_vec(x), &w, win, &opts).unwrap();
        prop_assert!(ratio <= rep.mu + 0.1, "ratio {} vs mu {}", ratio, rep.mu);
    }

    #[test]
    fn liouville_finite(eq in const_eq(3, 3.0), w in driver(3.0, 16)) {
        prop_assert!(liouville_log_det(&eq, &w, 0.0, 3.0).unwrap().is_finite());
    }

    #[test]
    fn spectrum_sum_rule_and_ordering(eq in const_eq(3, 20.0), w in driver(20.0, 8)) {
        for method in [Method::Qr, Method::Svd] {
            let opts = SpectrumOptions { method, ..SpectrumOptions::default() };
            let (series, est) = discrete_spectrum(&eq, &w, 0.0, 20.0, &opts).unwrap();
            for (i, &t) in series.times.iter().enumerate() {
                let l = &series.lambdas[i];
                prop_assert!(l.windows(2).all(|p| p[0] >= p[1]));
                let sum: f64 = l.iter().sum();
                prop_assert!((sum - series.logdet[i] / t).abs() <= 1e-6, "sum {} vs {}", sum, series.logdet[i] / t);
            }
            prop_assert!(est.lambdas.windows(2).all(|p| p[0] >= p[1]));
        }
    }
}

#[test]
fn running_integral_matches_window_integrals() {
    let t = uniform_grid(0.0, 2.0, 64);
    let x = SampledPath::from_scalar_fn(t.clone(), |s| (3.0 * s).cos()).unwrap();
    let w = SampledPath::from_scalar_fn(t.clone(), |s| (5.0 * s).sin() + s).unwrap();
    let run = young_integral_path(&x, &w, Interval::new(0.0, 2.0).unwrap()).unwrap();
    for (k, &s) in t.iter().enumerate().skip(1) {
        let direct = young_integral(&x, &w, Interval::new(0.0, s).unwrap()).unwrap()[0];
        assert!((run.scalar_value(k) - direct).abs() <= 1e-12);
    }
}
