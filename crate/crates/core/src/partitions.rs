//! Balanced partitions of `[r, T]`, the one-cell-delayed interpolation
//! operator `L_n` and the cell-ratio weight `γ_n`.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64};
use crate::paths::{GridPath, TimeGrid, TIME_EPS};

/// Default cap on `mesh / min cell` accepted by sweeps.
pub const DEFAULT_BALANCE_CAP: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
    balance: f64,
}

impl Partition {
    /// Points `r = t_0 < ... < t_k = T`; the balance constant is computed.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("a partition needs at least two points".into()));
        }
        if points.iter().any(|t| !t.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("partition points must be strictly increasing".into()));
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for w in points.windows(2) {
            lo = lo.min(w[1] - w[0]);
            hi = hi.max(w[1] - w[0]);
        }
        Ok(Self {
            points,
            balance: hi / lo,
        })
    }

    /// As [`Partition::new`], rejecting `mesh > cap * min cell`.
    pub fn with_cap(points: Vec<f64>, cap: f64) -> Result<Self> {
        let p = Self::new(points)?;
        if p.balance > cap * (1.0 + 1e-12) {
            return Err(Error::Unbalanced {
                ratio: p.balance,
                cap,
            });
        }
        Ok(p)
    }

    pub fn uniform(r: f64, horizon: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument("partition needs at least one cell".into()));
        }
        if !(r < horizon) {
            return Err(Error::InvalidArgument(format!("need r < T, got r = {r}, T = {horizon}")));
        }
        let h = (horizon - r) / cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|i| r + i as f64 * h).collect();
        points[cells] = horizon;
        let mut p = Self::new(points)?;
        // equal cells by construction; rounding noise must not leak into c_T
        p.balance = 1.0;
        Ok(p)
    }

    /// Uniform partition of `[r, T]` whose points are taken verbatim from `grid`.
    pub fn uniform_on(grid: &TimeGrid, cells: usize) -> Result<Self> {
        let (start, end) = (grid.delay_index(), grid.last_index());
        let span = end - start;
        if cells == 0 || span % cells != 0 {
            return Err(Error::InvalidArgument(format!(
                "{cells} cells do not divide the {span} grid cells of [r, T]"
            )));
        }
        Self::from_indices(grid, (start..=end).step_by(span / cells))
    }

    /// Cell lengths growing geometrically so that the last is `ratio` times the
    /// first, snapped to grid points. The balance constant is recomputed
    /// after snapping.
    pub fn geometric_on(grid: &TimeGrid, cells: usize, ratio: f64) -> Result<Self> {
        let (start, end) = (grid.delay_index(), grid.last_index());
        let span = end - start;
        if cells == 0 || cells > span {
            return Err(Error::InvalidArgument(format!("cannot place {cells} cells on {span} grid cells")));
        }
        if !(ratio >= 1.0 && ratio.is_finite()) {
            return Err(Error::out_of_range("ratio", ratio, 1.0, f64::INFINITY));
        }
        let q = if cells > 1 { ratio.powf(1.0 / (cells - 1) as f64) } else { 1.0 };
        let weights: Vec<f64> = (0..cells).map(|j| q.powi(j as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut idx = vec![start];
        let mut acc = 0.0;
        for w in &weights[..cells - 1] {
            acc += w;
            let target = start + (acc / total * span as f64).round() as usize;
            let prev = *idx.last().unwrap();
            idx.push(target.max(prev + 1));
        }
        idx.push(end);
        if idx.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid too coarse for geometric partition".into()));
        }
        Self::from_indices(grid, idx)
    }

    /// Partition made of the grid points at `indices`; the first must be the
    /// delay index and the last the final grid index.
    pub fn from_indices(grid: &TimeGrid, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let pts = grid.points();
        let indices: Vec<usize> = indices.into_iter().collect();
        if indices.first() != Some(&grid.delay_index()) || indices.last() != Some(&grid.last_index()) {
            return Err(Error::InvalidArgument("partition must run from r to T".into()));
        }
        let uniform = {
            let step = indices.get(1).map(|i| i - indices[0]);
            let grid_uniform = pts.windows(3).all(|w| {
                ((w[2] - w[1]) - (w[1] - w[0])).abs() <= 1e-9 * (w[1] - w[0])
            });
            grid_uniform && indices.windows(2).all(|w| Some(w[1] - w[0]) == step)
        };
        let mut p = Self::new(indices.iter().map(|&i| pts[i]).collect())?;
        if uniform {
            p.balance = 1.0;
        }
        Ok(p)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `k_n`, the number of cells.
    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// `|T_n|`, the largest cell length.
    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_cell(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// `c_T`: mesh over smallest cell, at least 1.
    pub fn balance_constant(&self) -> f64 {
        self.balance
    }

    /// `Δt_i = t_i − t_{i−1}` for `i ≥ 1`.
    pub fn delta(&self, i: usize) -> f64 {
        self.points[i] - self.points[i - 1]
    }

    fn tol(&self) -> f64 {
        TIME_EPS * self.end().abs().max(1.0)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < self.start() - self.tol() || t > self.end() + self.tol() {
            return Err(Error::out_of_range("t", t, self.start(), self.end()));
        }
        Ok(())
    }

    /// `((i−1)∨0, i, i+1)` for `t ∈ [t_i, t_{i+1})`, and `(k−1, k, k)` at `T`.
    pub fn locate(&self, t: f64) -> Result<(usize, usize, usize)> {
        self.check_time(t)?;
        let k = self.cells();
        if t >= self.end() - self.tol() {
            return Ok((k - 1, k, k));
        }
        let i = self
            .points
            .partition_point(|&p| p <= t + self.tol())
            .saturating_sub(1)
            .min(k - 1);
        Ok((i.saturating_sub(1), i, i + 1))
    }

    /// `γ_n(s) = Δs_n / Δs̄_n`: 0 on the first cell, `Δt_i/Δt_{i+1}` on cell
    /// `i ≥ 1`, and 1 at `T`.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        let (_, i, next) = self.locate(s)?;
        if i == next {
            return Ok(1.0);
        }
        if i == 0 {
            return Ok(0.0);
        }
        Ok(self.delta(i) / self.delta(i + 1))
    }

    /// Grid index of every partition point; fails unless the partition is
    /// contained in `grid` and runs from its delay to its horizon.
    pub fn grid_indices(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        let idx = self
            .points
            .iter()
            .map(|&t| grid.index_of(t).ok_or(Error::PartitionNotOnGrid(t)))
            .collect::<Result<Vec<_>>>()?;
        if idx[0] != grid.delay_index() || *idx.last().unwrap() != grid.last_index() {
            return Err(Error::InvalidArgument(format!(
                "partition spans [{}, {}] but the grid spans [r, T] = [{}, {}]",
                self.start(),
                self.end(),
                grid.delay(),
                grid.horizon()
            )));
        }
        Ok(idx)
    }

    /// `L_n(x)`: `x(r∧t)` on `[0, t_1]`, and on `[t_i, t_{i+1}]` (`i ≥ 1`) the
    /// chord through `x(t_{i−1})` at `t_i` and `x(t_i)` at `t_{i+1}`.
    pub fn interpolate(&self, x: &GridPath) -> Result<GridPath> {
        let grid = x.grid().clone();
        let idx = self.grid_indices(&grid)?;
        let pts = grid.points();
        let dim = x.dim();
        let mut out = vec![0.0; dim * grid.len()];
        // [0, r]: x itself
        let r = idx[0];
        out[..(r + 1) * dim].copy_from_slice(&x.values()[..(r + 1) * dim]);
        // (r, t_1]: frozen at x(r)
        for g in r + 1..=idx[1] {
            out[g * dim..(g + 1) * dim].copy_from_slice(x.at(r));
        }
        for i in 1..self.cells() {
            let (a, b) = (x.at(idx[i - 1]), x.at(idx[i]));
            let (t0, t1) = (pts[idx[i]], pts[idx[i + 1]]);
            for g in idx[i] + 1..=idx[i + 1] {
                let w = (pts[g] - t0) / (t1 - t0);
                for k in 0..dim {
                    out[g * dim + k] = (1.0 - w) * a[k] + w * b[k];
                }
            }
        }
        Ok(GridPath::from_raw(grid, dim, out))
    }

    /// Cellwise slope of `L_n(x)` over partition cell `[t_i, t_{i+1}]`:
    /// 0 on cell 0, `(x(t_i) − x(t_{i−1}))/Δt_{i+1}` otherwise.
    pub fn interpolated_slope(&self, x: &GridPath, idx: &[usize], i: usize, out: &mut [f64]) {
        if i == 0 {
            out.fill(0.0);
            return;
        }
        let (a, b) = (x.at(idx[i - 1]), x.at(idx[i]));
        let dt = self.delta(i + 1);
        for k in 0..out.len() {
            out[k] = (b[k] - a[k]) / dt;
        }
    }

    /// `‖L_n(x)^t − x^t‖_∞` for `t ∈ [t_1, T]`.
    pub fn interpolation_error(&self, x: &GridPath, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if t < self.points[1] - self.tol() {
            return Err(Error::out_of_range("t", t, self.points[1], self.end()));
        }
        let ln = self.interpolate(x)?;
        let diff = crate::paths::stop(&ln, t)?.sub(&crate::paths::stop(x, t)?)?;
        Ok(crate::paths::sup_norm(&diff))
    }

    /// Right-hand side of the interpolation error bound, by brute force over
    /// the grid points of every cell starting at or before `t`:
    /// `max_j sup_{s∈[t_j,t_{j+1}]} |x(t_{(j−1)∨0}) − x^t(s)| ∨ |x(t_j) − x^t(s)|`.
    pub fn interpolation_error_bound(&self, x: &GridPath, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let grid = x.grid();
        let idx = self.grid_indices(grid)?;
        let xt = crate::paths::stop(x, t)?;
        let mut best = 0.0f64;
        for j in 0..self.cells() {
            if self.points[j] > t + self.tol() {
                break;
            }
            let (a, b) = (x.at(idx[j.saturating_sub(1)]), x.at(idx[j]));
            for g in idx[j]..=idx[j + 1] {
                let s = xt.at(g);
                best = best.max(dist(a, s)).max(dist(b, s));
            }
        }
        Ok(best)
    }

    /// One CSV row of points.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, std::slice::from_ref(self))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn write_rows<W: Write>(w: W, parts: &[Partition]) -> Result<()> {
    let mut out = csv_writer(w);
    for p in parts {
        let row: Vec<String> = p.points.iter().map(|&t| fmt_f64(t)).collect();
        out.write_record(&row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    out.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Partitions with strictly decreasing mesh and a common balance cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSweep {
    partitions: Vec<Partition>,
    cap: f64,
}

impl PartitionSweep {
    pub fn new(partitions: Vec<Partition>, cap: f64) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::InvalidArgument("empty sweep".into()));
        }
        for p in &partitions {
            if p.balance_constant() > cap * (1.0 + 1e-12) {
                return Err(Error::Unbalanced {
                    ratio: p.balance_constant(),
                    cap,
                });
            }
        }
        if partitions.windows(2).any(|w| w[1].mesh() >= w[0].mesh()) {
            return Err(Error::InvalidArgument("sweep meshes must be strictly decreasing".into()));
        }
        Ok(Self { partitions, cap })
    }

    /// Uniform partitions with the given cell counts, each a coarsening of
    /// `grid`.
    pub fn uniform_on(grid: &TimeGrid, cells: &[usize]) -> Result<Self> {
        let parts = cells
            .iter()
            .map(|&c| Partition::uniform_on(grid, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts, 1.0)
    }

    /// Dyadic cell counts `min, 2·min, ..., max`.
    pub fn dyadic_on(grid: &TimeGrid, min_cells: usize, max_cells: usize) -> Result<Self> {
        Self::uniform_on(grid, &dyadic_counts(min_cells, max_cells)?)
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// One CSV row per partition.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.partitions)
    }

    /// Checks every partition against `grid`.
    pub fn check_grid(&self, grid: &Arc<TimeGrid>) -> Result<()> {
        for p in &self.partitions {
            p.grid_indices(grid)?;
        }
        Ok(())
    }
}

/// `min, 2·min, ..., max`; both ends must be powers-of-two multiples.
pub fn dyadic_counts(min_cells: usize, max_cells: usize) -> Result<Vec<usize>> {
    if min_cells == 0 || max_cells < min_cells {
        return Err(Error::InvalidArgument(format!("bad dyadic range {min_cells}..{max_cells}")));
    }
    let mut out = vec![min_cells];
    while *out.last().unwrap() < max_cells {
        out.push(out.last().unwrap() * 2);
    }
    if *out.last().unwrap() != max_cells {
        return Err(Error::InvalidArgument(format!(
            "{max_cells} is not {min_cells} times a power of two"
        )));
    }
    Ok(out)
}
