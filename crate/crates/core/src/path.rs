//! Sampled paths and their variation / Hölder seminorms.
//!
//! Every path lives on a strictly increasing finite grid. Norms are computed
//! exactly on that grid: the p-variation is the supremum over sub-partitions
//! made of grid nodes, which equals the p-variation of the piecewise-linear
//! interpolant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Relative tolerance used to match a time against grid nodes.
const NODE_TOL: f64 = 1e-9;

/// Slack accepted in the greedy-time equality.
const GREEDY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return domain(format!("interval endpoints must be finite, got [{a}, {b}]"));
        }
        if a > b {
            return domain(format!("interval [{a}, {b}] has a > b"));
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = NODE_TOL * t.abs().max(1.0);
        t >= self.a - tol && t <= self.b + tol
    }
}

/// A scalar, vector or matrix valued function sampled on a strictly increasing grid.
///
/// Values are stored row-major and flattened, one block of `rows * cols`
/// entries per grid node. Scalars have shape `(1, 1)`, column vectors `(d, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if times.len() < 2 {
            return domain(format!("a path needs at least 2 grid points, got {}", times.len()));
        }
        if rows == 0 || cols == 0 {
            return domain("path values must have a nonempty shape");
        }
        if times.iter().any(|t| !t.is_finite()) {
            return domain("grid times must be finite");
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return domain(format!("grid must be strictly increasing ({} then {})", w[0], w[1]));
        }
        if values.len() != times.len() * rows * cols {
            return domain(format!(
                "expected {} values for {} nodes of shape {rows}x{cols}, got {}",
                times.len() * rows * cols,
                times.len(),
                values.len()
            ));
        }
        Ok(SampledPath { times, values, rows, cols })
    }

    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values, 1, 1)
    }

    pub fn from_scalar_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::scalar(times, values)
    }

    pub fn from_matrices(times: Vec<f64>, mats: &[DMatrix<f64>]) -> Result<Self> {
        let Some(first) = mats.first() else {
            return domain("no matrices given");
        };
        let (rows, cols) = first.shape();
        let mut values = Vec::with_capacity(mats.len() * rows * cols);
        for m in mats {
            if m.shape() != (rows, cols) {
                return domain("all matrix values must share one shape");
            }
            for i in 0..rows {
                for j in 0..cols {
                    values.push(m[(i, j)]);
                }
            }
        }
        Self::new(times, values, rows, cols)
    }

    pub fn from_matrix_fn(
        times: Vec<f64>,
        rows: usize,
        cols: usize,
        f: impl Fn(f64) -> DMatrix<f64>,
    ) -> Result<Self> {
        let mats: Vec<_> = times.iter().map(|&t| f(t)).collect();
        if mats.iter().any(|m| m.shape() != (rows, cols)) {
            return domain(format!("matrix function must return {rows}x{cols} values"));
        }
        Self::from_matrices(times, &mats)
    }

    /// Constant matrix-valued path on `[a, b]` (two nodes; interpolation keeps it constant).
    pub fn constant_matrix(m: &DMatrix<f64>, a: f64, b: f64) -> Result<Self> {
        Self::from_matrices(vec![a, b], &[m.clone(), m.clone()])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of scalar entries per node.
    pub fn width(&self) -> usize {
        self.rows * self.cols
    }

    pub fn value(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn scalar_value(&self, i: usize) -> f64 {
        self.values[i * self.width()]
    }

    pub fn scalar_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.scalar_value(i)).collect()
    }

    pub fn matrix(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, self.value(i))
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn span(&self) -> Interval {
        Interval { a: self.start(), b: self.end() }
    }

    /// Index of the grid node at time `t`, if `t` is a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = NODE_TOL * t.abs().max(1.0);
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// Node indices of a window whose endpoints are grid nodes.
    pub fn window_indices(&self, window: Interval) -> Result<(usize, usize)> {
        let span = self.span();
        if !span.contains(window.a) || !span.contains(window.b) {
            return domain(format!(
                "window [{}, {}] outside grid span [{}, {}]",
                window.a, window.b, span.a, span.b
            ));
        }
        let (Some(i), Some(j)) = (self.node_index(window.a), self.node_index(window.b)) else {
            return domain(format!(
                "window endpoints [{}, {}] must be grid nodes; insert interpolation nodes first",
                window.a, window.b
            ));
        };
        Ok((i, j))
    }

    /// Linear interpolation at `t` within the grid span.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        if !self.span().contains(t) {
            return domain(format!("time {t} outside grid span [{}, {}]", self.start(), self.end()));
        }
        let t = t.clamp(self.start(), self.end());
        let w = self.width();
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let lam = (t - t0) / (t1 - t0);
        let (v0, v1) = (self.value(k - 1), self.value(k));
        Ok((0..w).map(|c| v0[c] + lam * (v1[c] - v0[c])).collect())
    }

    pub fn matrix_at(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.value_at(t)?))
    }

    /// Linear-interpolation resampling onto `times`.
    pub fn resample(&self, times: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * self.width());
        for &t in times {
            values.extend(self.value_at(t)?);
        }
        Self::new(times.to_vec(), values, self.rows, self.cols)
    }

    /// Adds nodes (by linear interpolation) at the given times when they are not on the grid.
    pub fn with_nodes(&self, extra: &[f64]) -> Result<Self> {
        let mut times = self.times.clone();
        for &t in extra {
            if self.node_index(t).is_none() {
                if !self.span().contains(t) {
                    return domain(format!("node {t} outside grid span"));
                }
                times.push(t);
            }
        }
        times.sort_by(|a, b| a.total_cmp(b));
        times.dedup();
        if times.len() == self.len() {
            return Ok(self.clone());
        }
        self.resample(&times)
    }

    /// Sub-path on a window whose endpoints are grid nodes.
    pub fn restrict(&self, window: Interval) -> Result<Self> {
        let (i, j) = self.window_indices(window)?;
        if j <= i {
            return domain("restriction needs a window with at least two nodes");
        }
        let w = self.width();
        Self::new(
            self.times[i..=j].to_vec(),
            self.values[i * w..(j + 1) * w].to_vec(),
            self.rows,
            self.cols,
        )
    }

    /// Node-wise map producing a path of possibly different shape.
    pub fn map(&self, rows: usize, cols: usize, f: impl Fn(f64, &[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(self.len() * rows * cols);
        for (i, &t) in self.times.iter().enumerate() {
            let v = f(t, self.value(i));
            if v.len() != rows * cols {
                return domain("mapped value has the wrong width");
            }
            values.extend(v);
        }
        Self::new(self.times.clone(), values, rows, cols)
    }

    /// Entry `(r, c)` as a scalar path.
    pub fn component(&self, r: usize, c: usize) -> Result<Self> {
        if r >= self.rows || c >= self.cols {
            return domain(format!("entry ({r}, {c}) outside shape {}x{}", self.rows, self.cols));
        }
        let k = r * self.cols + c;
        self.map(1, 1, |_, v| vec![v[k]])
    }

    pub fn sup_norm(&self, window: Interval) -> Result<f64> {
        let (i, j) = self.window_indices(window)?;
        Ok((i..=j).map(|k| norm(self.value(k))).fold(0.0, f64::max))
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        dist(self.value(i), self.value(j))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

pub(crate) fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Uniform grid of `n` cells (n + 1 nodes) on `[a, b]`.
/// Union of the nodes of several paths inside `window`, plus `extra`.
pub(crate) fn merged_times(paths: &[&SampledPath], window: Interval, extra: &[f64]) -> Result<Vec<f64>> {
    let mut t: Vec<f64> = paths
        .iter()
        .flat_map(|p| p.times().iter().copied())
        .chain(extra.iter().copied())
        .chain([window.a, window.b])
        .filter(|&s| s >= window.a && s <= window.b)
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
    if t.len() < 2 {
        return domain("window contains fewer than two nodes");
    }
    Ok(t)
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n).map(|k| if k == n { b } else { a + h * k as f64 }).collect()
}

/// Candidates per bounding block in [`PVarProfile`].
const BLOCK: usize = 32;

struct Block {
    /// Range into the candidate list.
    first: usize,
    last: usize,
    /// Largest `V` among the block's candidates.
    vmax: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Running p-th powers of the grid p-variation from node `i0`.
///
/// Entry for node `j` is `sup Σ |Δ|^p` over grid partitions of `[t_{i0}, t_j]`,
/// computed by the exact dynamic program `V[j] = max_i V[i] + |x_j - x_i|^p`.
/// Scalar paths only consider local extrema as interior points, which is exact
/// for `p >= 1`. Candidates are grouped in blocks with a bounding box; a block
/// is skipped when `max V + (distance to the far corner)^p` cannot beat the
/// current maximum.
pub(crate) struct PVarProfile<'a> {
    path: &'a SampledPath,
    p: f64,
    i0: usize,
    v: Vec<f64>,
    candidates: Vec<usize>,
    blocks: Vec<Block>,
}

impl<'a> PVarProfile<'a> {
    pub(crate) fn new(path: &'a SampledPath, p: f64, i0: usize) -> Self {
        PVarProfile { path, p, i0, v: vec![0.0], candidates: Vec::new(), blocks: Vec::new() }
    }

    /// Last node index covered so far.
    pub(crate) fn last(&self) -> usize {
        self.i0 + self.v.len() - 1
    }

    /// `V` at node `j` (absolute index).
    pub(crate) fn at(&self, j: usize) -> f64 {
        self.v[j - self.i0]
    }

    fn pow_dist(&self, i: usize, j: usize) -> f64 {
        let d2: f64 = self
            .path
            .value(i)
            .iter()
            .zip(self.path.value(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2.powf(0.5 * self.p)
    }

    /// Extends the profile by one node and returns its `V`.
    pub(crate) fn push(&mut self) -> f64 {
        let j = self.last() + 1;
        let xj = self.path.value(j);
        let mut best = (self.at(j - 1) + self.pow_dist(j - 1, j)).max(self.pow_dist(self.i0, j));

        let closed = self.blocks.last().map_or(0, |b| b.last);
        for &i in self.candidates[closed..].iter().rev() {
            best = best.max(self.at(i) + self.pow_dist(i, j));
        }
        for b in self.blocks.iter().rev() {
            let r2: f64 = xj
                .iter()
                .zip(b.lo.iter().zip(&b.hi))
                .map(|(x, (lo, hi))| {
                    let d = (x - lo).abs().max((hi - x).abs());
                    d * d
                })
                .sum();
            if b.vmax + r2.powf(0.5 * self.p) <= best {
                continue;
            }
            for &i in &self.candidates[b.first..b.last] {
                best = best.max(self.at(i) + self.pow_dist(i, j));
            }
        }
        self.v.push(best);

        // node j-1 becomes a candidate interior point once its right neighbour is known
        let k = j - 1;
        if k > self.i0 {
            let admit = self.path.width() > 1 || {
                let (a, b, c) = (
                    self.path.scalar_value(k - 1),
                    self.path.scalar_value(k),
                    self.path.scalar_value(k + 1),
                );
                (b - a) * (c - b) <= 0.0
            };
            if admit {
                self.candidates.push(k);
                if self.candidates.len() - closed == BLOCK {
                    self.close_block(closed);
                }
            }
        }
        best
    }

    fn close_block(&mut self, first: usize) {
        let last = self.candidates.len();
        let mut lo = self.path.value(self.candidates[first]).to_vec();
        let mut hi = lo.clone();
        let mut vmax = 0.0f64;
        for &i in &self.candidates[first..last] {
            vmax = vmax.max(self.at(i));
            for (c, x) in self.path.value(i).iter().enumerate() {
                lo[c] = lo[c].min(*x);
                hi[c] = hi[c].max(*x);
            }
        }
        self.blocks.push(Block { first, last, vmax, lo, hi });
    }
}


fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("variation exponent must be >= 1, got {p}"));
    }
    Ok(())
}

/// Grid p-variation seminorm `|||x|||_{p-var, window}`.
pub fn p_variation_seminorm(path: &SampledPath, p: f64, window: Interval) -> Result<f64> {
    check_p(p)?;
    let (i, j) = path.window_indices(window)?;
    let v = p_variation_pow_idx(path, p, i, j);
    if v.is_finite() && v > 1e-250 {
        return Ok(v.powf(1.0 / p));
    }
    // Rescale to stay inside the f64 range.
    let scale = path.sup_norm(window)?;
    if scale == 0.0 || !scale.is_finite() {
        return Ok(v.powf(1.0 / p));
    }
    let scaled = path.map(path.rows, path.cols, |_, v| v.iter().map(|x| x / scale).collect())?;
    Ok(scale * p_variation_pow_idx(&scaled, p, i, j).powf(1.0 / p))
}

/// `|||x|||^p` between node indices.
pub(crate) fn p_variation_pow_idx(path: &SampledPath, p: f64, i: usize, j: usize) -> f64 {
    if j <= i {
        return 0.0;
    }
    let mut prof = PVarProfile::new(path, p, i);
    let mut v = 0.0;
    while prof.last() < j {
        v = prof.push();
    }
    v
}

/// Full p-variation norm `|x(a)| + |||x|||_{p-var}`.
pub fn p_variation_norm(path: &SampledPath, p: f64, window: Interval) -> Result<f64> {
    let (i, _) = path.window_indices(window)?;
    Ok(norm(path.value(i)) + p_variation_seminorm(path, p, window)?)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Hölder exponent must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

/// `sup |x(t) - x(s)| / (t - s)^α` over grid pairs in the window.
pub fn holder_seminorm(path: &SampledPath, alpha: f64, window: Interval) -> Result<f64> {
    check_alpha(alpha)?;
    holder_quotient_max(path, alpha, window, f64::INFINITY)
}

/// Hölder module: the Hölder quotient restricted to pairs with `0 < t - s <= δ`.
pub fn holder_module(path: &SampledPath, alpha: f64, delta: f64, window: Interval) -> Result<f64> {
    check_alpha(alpha)?;
    if !(delta > 0.0) {
        return domain(format!("module width must be positive, got {delta}"));
    }
    holder_quotient_max(path, alpha, window, delta)
}

fn holder_quotient_max(path: &SampledPath, alpha: f64, window: Interval, delta: f64) -> Result<f64> {
    let (i0, i1) = path.window_indices(window)?;
    let times = path.times();
    let mut best = 0.0f64;
    for s in i0..i1 {
        for t in s + 1..=i1 {
            let dt = times[t] - times[s];
            if dt > delta * (1.0 + NODE_TOL) {
                break;
            }
            best = best.max(path.dist(s, t) / dt.powf(alpha));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecompactnessReport {
    /// `sup |c(window.a)|` over the family.
    pub sup_initial: f64,
    /// `(δ, sup_c m(c, δ))` for each requested δ.
    pub modules: Vec<(f64, f64)>,
}

impl PrecompactnessReport {
    /// True when the module sequence does not increase along the requested δ's.
    pub fn modules_nonincreasing(&self) -> bool {
        self.modules.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12))
    }
}

/// Evaluates the two precompactness quantities (bounded start, vanishing module) on a family.
pub fn precompactness_check(
    family: &[SampledPath],
    alpha: f64,
    window: Interval,
    deltas: &[f64],
) -> Result<PrecompactnessReport> {
    let Some(first) = family.first() else {
        return domain("precompactness check needs a nonempty family");
    };
    if family.iter().any(|c| c.shape() != first.shape()) {
        return domain("family members must share one shape");
    }
    let mut sup_initial = 0.0f64;
    for c in family {
        let (i, _) = c.window_indices(window)?;
        sup_initial = sup_initial.max(norm(c.value(i)));
    }
    let mut modules = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut sup = 0.0f64;
        for c in family {
            sup = sup.max(holder_module(c, alpha, delta, window)?);
        }
        modules.push((delta, sup));
    }
    Ok(PrecompactnessReport { sup_initial, modules })
}

/// Greedy times `τ_k` with `(τ_k - τ_{k-1}) + |||ω|||_{p-var,[τ_{k-1},τ_k]} = μ / M*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyPartition {
    /// `τ_0 = window.a < τ_1 < … < τ_count = window.b`.
    pub taus: Vec<f64>,
    /// Grid indices of the `τ`'s.
    pub indices: Vec<usize>,
    pub mu: f64,
    pub m_star: f64,
    /// Number of `τ_k` in `(a, b]`, i.e. the number of intervals.
    pub count: usize,
}

impl GreedyPartition {
    pub fn budget(&self) -> f64 {
        self.mu / self.m_star
    }

    /// Right-hand side of the interval-count bound, `(2M*/μ)^p (T^p + |||ω|||^p)`.
    pub fn count_bound(&self, p: f64, length: f64, omega_pvar: f64) -> f64 {
        (2.0 * self.m_star / self.mu).powf(p) * (length.powf(p) + omega_pvar.powf(p))
    }
}

/// Builds the greedy partition of `window` for the driver `omega`.
///
/// Each `τ_k` is the last grid node at which the nondecreasing function
/// `t ↦ (t - τ_{k-1}) + |||ω|||_{p-var,[τ_{k-1},t]}` stays within the budget
/// `μ/M*` (up to `1e-10`); an interval always advances by at least one cell.
pub fn greedy_partition(
    omega: &SampledPath,
    p: f64,
    mu: f64,
    m_star: f64,
    window: Interval,
) -> Result<GreedyPartition> {
    check_p(p)?;
    if !(m_star > 0.0 && m_star.is_finite()) {
        return domain(format!("M* must be positive, got {m_star}"));
    }
    if !(mu > 0.0 && mu < m_star.min(1.0)) {
        return domain(format!("μ must lie in (0, min(1, M*)) = (0, {}), got {mu}", m_star.min(1.0)));
    }
    let (i0, i1) = omega.window_indices(window)?;
    let budget = mu / m_star;
    let times = omega.times();
    let mut indices = vec![i0];
    let mut start = i0;
    while start < i1 {
        let mut prof = PVarProfile::new(omega, p, start);
        let mut end = start + 1;
        prof.push();
        while end < i1 {
            let v = prof.push();
            let g = (times[end + 1] - times[start]) + v.powf(1.0 / p);
            if g > budget + GREEDY_TOL {
                break;
            }
            end += 1;
        }
        indices.push(end);
        start = end;
    }
    let taus = indices.iter().map(|&i| times[i]).collect();
    let count = indices.len() - 1;
    Ok(GreedyPartition { taus, indices, mu, m_star, count })
}

/// Wiener shift `(θ_r ω)(t) = ω(t + r) - ω(r)` on the translated grid `{t_i - r : t_i >= r}`.
pub fn wiener_shift(path: &SampledPath, r: f64) -> Result<SampledPath> {
    if !path.span().contains(r) || r >= path.end() {
        return domain(format!(
            "shift {r} leaves fewer than two nodes of [{}, {}]",
            path.start(),
            path.end()
        ));
    }
    let path = path.with_nodes(&[r])?;
    let k = path.node_index(r).expect("node inserted");
    let w = path.width();
    let base = path.value(k).to_vec();
    let times: Vec<f64> = path.times()[k..].iter().map(|t| t - r).collect();
    let mut values = Vec::with_capacity(times.len() * w);
    for i in k..path.len() {
        values.extend(path.value(i).iter().zip(&base).map(|(v, b)| v - b));
    }
    let (rows, cols) = path.shape();
    // the first node is exactly 0 after translation
    let mut times = times;
    times[0] = 0.0;
    SampledPath::new(times, values, rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize) -> SampledPath {
        SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, n), |t| t).unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    /// Enumerates all sub-partitions of the grid nodes (endpoints fixed).
    fn brute_pvar(x: &[f64], p: f64) -> f64 {
        let n = x.len();
        let inner = n - 2;
        let mut best = 0.0f64;
        for mask in 0u32..(1 << inner) {
            let mut pts = vec![0];
            for k in 0..inner {
                if mask & (1 << k) != 0 {
                    pts.push(k + 1);
                }
            }
            pts.push(n - 1);
            let s: f64 = pts.windows(2).map(|w| (x[w[1]] - x[w[0]]).abs().powf(p)).sum();
            best = best.max(s);
        }
        best.powf(1.0 / p)
    }

    #[test]
    fn pvar_of_linear_path_is_increment() {
        for n in [1, 7, 64] {
            let v = p_variation_seminorm(&linear(n), 2.0, unit()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn pvar_of_constant_path_is_zero() {
        let c = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 10), |_| 3.0).unwrap();
        assert_eq!(p_variation_seminorm(&c, 1.3, unit()).unwrap(), 0.0);
    }

    #[test]
    fn pvar_zigzag_matches_enumeration() {
        let x = vec![0.0, 1.0, 0.0, 1.0];
        let path = SampledPath::scalar(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], x.clone()).unwrap();
        let expected = brute_pvar(&x, 1.5);
        assert!((expected - 3f64.powf(1.0 / 1.5)).abs() < 1e-12);
        let got = p_variation_seminorm(&path, 1.5, unit()).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn pvar_matches_enumeration_on_random_paths() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.random_range(3..12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = rng.random_range(1.0..3.0);
            let path = SampledPath::scalar(uniform_grid(0.0, 1.0, n - 1), x.clone()).unwrap();
            let got = p_variation_seminorm(&path, p, unit()).unwrap();
            assert!((got - brute_pvar(&x, p)).abs() < 1e-10);
        }
    }

    #[test]
    fn pvar_vector_path_matches_quadratic_dp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let mut values = vec![0.0; 2];
        for k in 1..n {
            let prev = [values[2 * (k - 1)], values[2 * (k - 1) + 1]];
            values.push(prev[0] + rng.random_range(-0.1..0.1));
            values.push(prev[1] + rng.random_range(-0.1..0.1));
        }
        let path = SampledPath::new(uniform_grid(0.0, 1.0, n - 1), values, 2, 1).unwrap();
        let p = 1.7;
        let mut v = vec![0.0f64; n];
        for j in 1..n {
            for i in 0..j {
                v[j] = v[j].max(v[i] + path.dist(i, j).powf(p));
            }
        }
        let got = p_variation_seminorm(&path, p, unit()).unwrap();
        assert!((got - v[n - 1].powf(1.0 / p)).abs() < 1e-10);
    }

    #[test]
    fn pvar_scalar_walk_matches_quadratic_dp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 700;
        let mut x = vec![0.0f64];
        for k in 1..n {
            x.push(x[k - 1] + rng.random_range(-0.1..0.1) + 0.01);
        }
        let path = SampledPath::scalar(uniform_grid(0.0, 1.0, n - 1), x.clone()).unwrap();
        for p in [1.0, 1.4, 2.5] {
            let mut v = vec![0.0f64; n];
            for j in 1..n {
                for i in 0..j {
                    v[j] = v[j].max(v[i] + (x[j] - x[i]).abs().powf(p));
                }
            }
            let got = p_variation_seminorm(&path, p, unit()).unwrap();
            assert!((got - v[n - 1].powf(1.0 / p)).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_window_gives_zero() {
        let w = Interval::new(0.5, 0.5).unwrap();
        let path = linear(10);
        assert_eq!(p_variation_seminorm(&path, 1.5, w).unwrap(), 0.0);
        assert_eq!(holder_seminorm(&path, 0.5, w).unwrap(), 0.0);
    }

    #[test]
    fn window_outside_grid_is_domain_error() {
        let path = linear(10);
        let w = Interval::new(0.0, 2.0).unwrap();
        assert!(matches!(p_variation_seminorm(&path, 1.5, w), Err(crate::Error::Domain(_))));
        assert!(p_variation_seminorm(&path, 0.5, unit()).is_err());
    }

    #[test]
    fn off_grid_endpoint_is_rejected_until_inserted() {
        let path = linear(4);
        let w = Interval::new(0.0, 0.3).unwrap();
        assert!(p_variation_seminorm(&path, 1.5, w).is_err());
        let refined = path.with_nodes(&[0.3]).unwrap();
        let v = p_variation_seminorm(&refined, 1.5, w).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn holder_examples() {
        assert!((holder_seminorm(&linear(10), 1.0, unit()).unwrap() - 1.0).abs() < 1e-12);
        let c = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 5), |_| 1.0).unwrap();
        assert_eq!(holder_seminorm(&c, 0.3, unit()).unwrap(), 0.0);
        let two = SampledPath::scalar(vec![0.0, 0.25], vec![0.0, 1.0]).unwrap();
        let w = Interval::new(0.0, 0.25).unwrap();
        assert!((holder_seminorm(&two, 0.5, w).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn holder_module_examples() {
        let path = SampledPath::scalar(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.1]).unwrap();
        let w = Interval::new(0.0, 2.0).unwrap();
        // admissible pairs: (0,1) -> 1, (1,2) -> 0.1
        assert!((holder_module(&path, 1.0, 1.0, w).unwrap() - 1.0).abs() < 1e-12);
        let full = holder_seminorm(&path, 0.7, w).unwrap();
        assert_eq!(holder_module(&path, 0.7, 5.0, w).unwrap(), full);
        assert!(holder_module(&path, 0.7, 0.0, w).is_err());
    }

    #[test]
    fn precompactness_examples() {
        let grid = uniform_grid(0.0, 1.0, 8);
        let zero = SampledPath::from_scalar_fn(grid.clone(), |_| 0.0).unwrap();
        let rep = precompactness_check(&[zero], 0.5, unit(), &[0.5, 0.25]).unwrap();
        assert_eq!(rep.sup_initial, 0.0);
        assert!(rep.modules.iter().all(|m| m.1 == 0.0));

        let fam = vec![
            SampledPath::from_scalar_fn(grid.clone(), |t| t).unwrap(),
            SampledPath::from_scalar_fn(grid, |t| 2.0 * t).unwrap(),
        ];
        let rep = precompactness_check(&fam, 0.5, unit(), &[0.25]).unwrap();
        assert_eq!(rep.sup_initial, 0.0);
        assert!((rep.modules[0].1 - 1.0).abs() < 1e-12);
        assert!(precompactness_check(&[], 0.5, unit(), &[0.1]).is_err());
    }

    #[test]
    fn greedy_partition_zero_driver_is_uniform() {
        let omega = SampledPath::from_scalar_fn(uniform_grid(0.0, 1.0, 100), |_| 0.0).unwrap();
        let g = greedy_partition(&omega, 1.5, 0.1, 1.0, unit()).unwrap();
        assert_eq!(g.count, 10);
        for (k, tau) in g.taus.iter().enumerate() {
            assert!((tau - 0.1 * k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_partition_linear_driver_steps() {
        let omega = linear(1000);
        // μ/M* = 0.2, Δ + Δ = 0.2
        let g = greedy_partition(&omega, 1.5, 0.4, 2.0, unit()).unwrap();
        assert_eq!(g.count, 10);
        for w in g.taus.windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_partition_rejects_bad_mu() {
        let omega = linear(10);
        assert!(greedy_partition(&omega, 1.5, 0.0, 1.0, unit()).is_err());
        assert!(greedy_partition(&omega, 1.5, 1.0, 2.0, unit()).is_err());
        assert!(greedy_partition(&omega, 1.5, 0.6, 0.5, unit()).is_err());
    }

    #[test]
    fn wiener_shift_examples() {
        let omega = SampledPath::from_scalar_fn(uniform_grid(0.0, 10.0, 100), |t| t).unwrap();
        let s = wiener_shift(&omega, 5.0).unwrap();
        assert_eq!(s.start(), 0.0);
        for (t, v) in s.times().iter().zip(s.scalar_values()) {
            assert!((t - v).abs() < 1e-12);
        }
        let z = wiener_shift(&omega.map(1, 1, |t, _| vec![t * t + 1.0]).unwrap(), 0.0).unwrap();
        assert_eq!(z.scalar_value(0), 0.0);
        assert!(wiener_shift(&omega, 10.0).is_err());
        assert!(wiener_shift(&omega, 11.0).is_err());
    }

    #[test]
    fn construction_checks() {
        assert!(SampledPath::scalar(vec![0.0], vec![1.0]).is_err());
        assert!(SampledPath::scalar(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SampledPath::scalar(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Interval::new(1.0, 0.0).is_err());
    }
}
