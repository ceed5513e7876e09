//! Grid-sampled continuous paths on `[0, T]` with a delay horizon `r`.
//!
//! A [`GridPath`] stores one vector per grid point; between grid points the
//! path is the linear interpolant. All norms are evaluated on the grid, so
//! the Hölder seminorm is exact for the sampled skeleton and a lower bound
//! for the underlying continuum path.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance used when matching times against grid points.
pub const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    delay: f64,
    delay_index: usize,
}

impl TimeGrid {
    /// Builds a grid from explicit points. `points[0]` must be 0, the points
    /// strictly increasing, and `delay` one of them (strictly before the end).
    pub fn new(points: Vec<f64>, delay: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("a grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidArgument("grid must start at 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid points must be strictly increasing".into()));
        }
        let horizon = *points.last().unwrap();
        if !(0.0..horizon).contains(&delay) {
            return Err(Error::out_of_range("delay", delay, 0.0, horizon));
        }
        let tol = TIME_EPS * horizon.max(1.0);
        let delay_index = points
            .iter()
            .position(|&t| (t - delay).abs() <= tol)
            .ok_or_else(|| Error::InvalidArgument(format!("delay {delay} is not a grid point")))?;
        Ok(Self {
            delay: points[delay_index],
            points,
            delay_index,
        })
    }

    /// Equispaced grid with `cells` cells on `[0, horizon]`; `delay` must land
    /// on one of the points.
    pub fn uniform(horizon: f64, delay: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid horizon {horizon}")));
        }
        let h = horizon / cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        points[cells] = horizon;
        // snap the delay onto its grid point so `new` finds it exactly
        let k = (delay / h).round();
        if (k * h - delay).abs() <= 1e-9 * horizon.max(1.0) && (k as usize) < cells {
            points[k as usize] = delay;
        }
        Self::new(points, delay)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn delay_index(&self) -> usize {
        self.delay_index
    }

    pub fn last_index(&self) -> usize {
        self.points.len() - 1
    }

    fn tol(&self) -> f64 {
        TIME_EPS * self.horizon().max(1.0)
    }

    /// Index of the grid point equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = self.tol();
        let i = self.points.partition_point(|&p| p < t - tol);
        (i < self.points.len() && (self.points[i] - t).abs() <= tol).then_some(i)
    }

    /// Index `i` of the cell `[t_i, t_{i+1})` containing `t`; `T` maps to the
    /// last cell. `t` is clamped into `[0, T]`.
    pub fn cell_of(&self, t: f64) -> usize {
        if let Some(i) = self.index_of(t) {
            return i.min(self.points.len() - 2);
        }
        let i = self.points.partition_point(|&p| p <= t);
        i.saturating_sub(1).min(self.points.len() - 2)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= -self.tol() && t <= self.horizon() + self.tol()
    }

    /// Keeps every `factor`-th point. The delay must survive the coarsening.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let cells = self.points.len() - 1;
        if factor == 0 || cells % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen {cells} cells by {factor}"
            )));
        }
        let points = self.points.iter().step_by(factor).copied().collect();
        Self::new(points, self.delay)
    }
}

/// A path in `R^k` sampled on a [`TimeGrid`], linear between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: Arc<TimeGrid>,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    /// `values` is row-major: `dim` entries per grid point.
    pub fn new(grid: Arc<TimeGrid>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("path dimension must be positive".into()));
        }
        if values.len() != dim * grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                dim * grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(grid.points()[pos / dim]));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn(grid: Arc<TimeGrid>, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(dim * grid.len());
        for &t in grid.points() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::InvalidArgument("closure returned wrong dimension".into()));
            }
            values.extend_from_slice(&v);
        }
        Self::new(grid, dim, values)
    }

    pub fn scalar_fn(grid: Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, 1, |t| vec![f(t)])
    }

    pub fn constant(grid: Arc<TimeGrid>, value: &[f64]) -> Self {
        let values = value.iter().copied().cycle().take(value.len() * grid.len()).collect();
        Self {
            dim: value.len(),
            grid,
            values,
        }
    }

    pub fn zeros(grid: Arc<TimeGrid>, dim: usize) -> Self {
        Self {
            values: vec![0.0; dim * grid.len()],
            grid,
            dim,
        }
    }

    /// Crate-internal constructor for buffers already known to be well formed.
    pub(crate) fn from_raw(grid: Arc<TimeGrid>, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dim * grid.len());
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at grid index `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn at_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.values[i * d..(i + 1) * d]
    }

    /// Linear interpolation at an arbitrary time in `[0, T]`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if let Some(i) = self.grid.index_of(t) {
            out.copy_from_slice(self.at(i));
            return;
        }
        let i = self.grid.cell_of(t);
        let pts = self.grid.points();
        let w = ((t - pts[i]) / (pts[i + 1] - pts[i])).clamp(0.0, 1.0);
        let (a, b) = (self.at(i), self.at(i + 1));
        for k in 0..self.dim {
            out[k] = a[k] + w * (b[k] - a[k]);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn same_grid(&self, other: &GridPath) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn zip_with(&self, other: &GridPath, f: impl Fn(f64, f64) -> f64) -> Result<GridPath> {
        if self.dim != other.dim || !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridPath::from_raw(self.grid.clone(), self.dim, values))
    }

    pub fn sub(&self, other: &GridPath) -> Result<GridPath> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridPath) -> Result<GridPath> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &GridPath, b: f64) -> Result<GridPath> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn scale(&self, c: f64) -> GridPath {
        let values = self.values.iter().map(|v| c * v).collect();
        GridPath::from_raw(self.grid.clone(), self.dim, values)
    }

    /// Adds `shift` to every grid value.
    pub fn shift(&self, shift: &[f64]) -> GridPath {
        let mut out = self.clone();
        for row in out.values.chunks_mut(self.dim) {
            for (v, s) in row.iter_mut().zip(shift) {
                *v += s;
            }
        }
        out
    }

    /// Samples this path at the points of another grid (linear interpolation).
    pub fn resample(&self, grid: Arc<TimeGrid>) -> GridPath {
        let mut values = vec![0.0; self.dim * grid.len()];
        for (i, &t) in grid.points().iter().enumerate() {
            self.eval_into(t, &mut values[i * self.dim..(i + 1) * self.dim]);
        }
        GridPath::from_raw(grid, self.dim, values)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The path frozen at `t`: equal to `x` on grid points `<= t` and constant at
/// `x(t)` (interpolated if `t` is off-grid) afterwards.
pub fn stop(x: &GridPath, t: f64) -> Result<GridPath> {
    let grid = x.grid();
    if !grid.contains(t) {
        return Err(Error::out_of_range("t", t, 0.0, grid.horizon()));
    }
    let frozen = x.eval(t);
    let mut out = x.clone();
    let pts = grid.points();
    let first_after = match grid.index_of(t) {
        Some(i) => i + 1,
        None => pts.partition_point(|&p| p <= t),
    };
    for i in first_after..pts.len() {
        out.at_mut(i).copy_from_slice(&frozen);
    }
    Ok(out)
}

/// `max_i |x(t_i)|` with the Euclidean norm.
pub fn sup_norm(x: &GridPath) -> f64 {
    x.values().chunks(x.dim()).map(norm).fold(0.0, f64::max)
}

/// Sup norm of the path stopped at the delay: `max_{t_i <= r} |x(t_i)|`.
pub fn stopped_sup_at_delay(x: &GridPath) -> f64 {
    let r = x.grid().delay_index();
    (0..=r).map(|i| norm(x.at(i))).fold(0.0, f64::max)
}

/// Delayed α-Hölder norm: `‖x^r‖_∞ + sup_{s≠t ≥ r} |x(s)−x(t)|/|s−t|^α`.
/// `alpha = 0` is the sup norm by convention.
pub fn holder_norm(x: &GridPath, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::out_of_range("alpha", alpha, 0.0, 1.0));
    }
    if alpha == 0.0 {
        return Ok(sup_norm(x));
    }
    Ok(stopped_sup_at_delay(x) + holder_seminorm(x, alpha)?)
}

/// `sup_{s≠t}|x(s)−x(t)|/|s−t|^α` over grid points of `[r, T]`, in ratio form
/// for every `alpha` including 0.
///
/// Exact over all grid pairs. A min/max segment tree bounds whole blocks of
/// partners at once, so blocks that cannot beat the running maximum are
/// skipped; the worst case stays quadratic.
pub fn holder_seminorm(x: &GridPath, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::out_of_range("alpha", alpha, 0.0, 1.0));
    }
    let grid = x.grid();
    let start = grid.delay_index();
    let times = &grid.points()[start..];
    let dim = x.dim();
    let vals = &x.values()[start * dim..];
    let n = times.len();
    if n < 2 {
        return Ok(0.0);
    }
    let gap_pow = |g: f64| if alpha == 0.0 { 1.0 } else { g.powf(alpha) };

    let mut best = 0.0f64;
    for i in 0..n - 1 {
        let r = dist(&vals[i * dim..(i + 1) * dim], &vals[(i + 1) * dim..(i + 2) * dim])
            / gap_pow(times[i + 1] - times[i]);
        best = best.max(r);
    }

    let tree = BoxTree::build(vals, dim, n);
    let mut stack: Vec<(usize, usize, usize)> = Vec::with_capacity(64);
    for i in 0..n - 1 {
        let xi = &vals[i * dim..(i + 1) * dim];
        stack.clear();
        stack.push((1, 0, tree.width));
        while let Some((node, lo, hi)) = stack.pop() {
            if hi <= i + 1 || lo >= n {
                continue;
            }
            if lo > i {
                let gap = times[lo] - times[i];
                let bound = tree.max_dist(node, xi) / gap_pow(gap);
                if bound <= best {
                    continue;
                }
                if hi - lo == 1 {
                    let r = dist(xi, &vals[lo * dim..(lo + 1) * dim]) / gap_pow(gap);
                    best = best.max(r);
                    continue;
                }
            }
            let mid = (lo + hi) / 2;
            // right child first so the nearer (left) block is popped first
            stack.push((2 * node + 1, mid, hi));
            stack.push((2 * node, lo, mid));
        }
    }
    Ok(best)
}

/// Per-coordinate min/max over dyadic index blocks.
struct BoxTree {
    width: usize,
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxTree {
    fn build(vals: &[f64], dim: usize, n: usize) -> Self {
        let width = n.next_power_of_two();
        let mut lo = vec![f64::INFINITY; 2 * width * dim];
        let mut hi = vec![f64::NEG_INFINITY; 2 * width * dim];
        for i in 0..n {
            let node = width + i;
            lo[node * dim..(node + 1) * dim].copy_from_slice(&vals[i * dim..(i + 1) * dim]);
            hi[node * dim..(node + 1) * dim].copy_from_slice(&vals[i * dim..(i + 1) * dim]);
        }
        for node in (1..width).rev() {
            for k in 0..dim {
                lo[node * dim + k] = lo[2 * node * dim + k].min(lo[(2 * node + 1) * dim + k]);
                hi[node * dim + k] = hi[2 * node * dim + k].max(hi[(2 * node + 1) * dim + k]);
            }
        }
        Self { width, dim, lo, hi }
    }

    /// Upper bound on the distance from `x` to any point in the node's box.
    fn max_dist(&self, node: usize, x: &[f64]) -> f64 {
        let base = node * self.dim;
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = (x[k] - self.lo[base + k]).abs().max((self.hi[base + k] - x[k]).abs());
            s += d * d;
        }
        s.sqrt()
    }
}

/// Delayed Cameron–Martin norm: `‖x^r‖_∞ + (∫_r^T |ẋ|²)^{1/2}` with `ẋ` the
/// cellwise difference quotient.
pub fn cm_norm(x: &GridPath) -> f64 {
    stopped_sup_at_delay(x) + energy(x).sqrt()
}

/// `∫_r^T |ẋ|² ds` for the piecewise-linear path.
pub fn energy(x: &GridPath) -> f64 {
    let grid = x.grid();
    let pts = grid.points();
    (grid.delay_index()..pts.len() - 1)
        .map(|i| {
            let d = dist(x.at(i + 1), x.at(i));
            d * d / (pts[i + 1] - pts[i])
        })
        .sum()
}

/// `|t−s|^{1/2} + ‖x^t − y^s‖_∞`.
pub fn d_infty(t: f64, x: &GridPath, s: f64, y: &GridPath) -> Result<f64> {
    let grid = x.grid();
    let (r, horizon) = (grid.delay(), grid.horizon());
    let tol = TIME_EPS * horizon.max(1.0);
    for v in [t, s] {
        if v < r - tol || v > horizon + tol {
            return Err(Error::out_of_range("time", v, r, horizon));
        }
    }
    let diff = stop(x, t)?.sub(&stop(y, s)?)?;
    Ok((t - s).abs().sqrt() + sup_norm(&diff))
}
