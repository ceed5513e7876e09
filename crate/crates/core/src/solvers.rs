//! Grid solvers for path-dependent ODEs and SDEs.
//!
//! Every scheme advances a trajectory buffer one grid cell at a time through a
//! single increment rule `X(t_{i+1}) − X(t_i) = inc(t_i, X^{t_i})`. The Euler
//! scheme applies it to the buffer being built; the Picard recursion applies it
//! to the previous iterate. Because both sum the same increments in the same
//! order, the Picard fixed point is the Euler trajectory bit for bit.
//!
//! All integrals are left-point sums, which keeps adaptedness structural.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functionals::{
    correction_rho_view, Buf, Coef, Functional, PathView, RoleAssignment, Subject,
};
use crate::io::{fmt_f64, write_table};
use crate::partitions::Partition;
use crate::paths::{cm_norm, sup_norm, GridPath, TimeGrid, TIME_EPS};

/// States whose norm exceeds this abort the solve with [`Error::Divergence`].
pub const DIVERGENCE_GUARD: f64 = 1e8;

/// `x̂` on `[0, r]`.
#[derive(Debug, Clone)]
pub enum InitialSegment {
    Constant(Vec<f64>),
    /// Sampled by linear interpolation; must cover `[0, r]`.
    Path(GridPath),
}

impl InitialSegment {
    pub fn dim(&self) -> usize {
        match self {
            InitialSegment::Constant(v) => v.len(),
            InitialSegment::Path(p) => p.dim(),
        }
    }

    /// Buffer of length `dim·|grid|` with `x̂` on grid points up to `r` and
    /// `x̂(r)` afterwards.
    pub fn fill(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        let m = self.dim();
        let mut buf = vec![0.0; m * grid.len()];
        let r = grid.delay_index();
        match self {
            InitialSegment::Constant(v) => {
                for row in buf.chunks_mut(m) {
                    row.copy_from_slice(v);
                }
            }
            InitialSegment::Path(p) => {
                let covered = p.grid().horizon();
                if covered < grid.delay() - TIME_EPS * grid.horizon().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "initial segment ends at {covered}, before r = {}",
                        grid.delay()
                    )));
                }
                for (i, &t) in grid.points()[..=r].iter().enumerate() {
                    p.eval_into(t, &mut buf[i * m..(i + 1) * m]);
                }
                let (head, tail) = buf.split_at_mut((r + 1) * m);
                let last = &head[r * m..];
                for row in tail.chunks_mut(m) {
                    row.copy_from_slice(last);
                }
            }
        }
        if let Some(pos) = buf.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(grid.points()[pos / m]));
        }
        Ok(buf)
    }
}

/// `dX = b(t,X)dt + σ(t,X)dW` on `[r, T]` with `X = x̂` on `[0, r]`.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub b: Coef,
    pub sigma: Coef,
    pub initial: InitialSegment,
}

impl SdeModel {
    /// `b` must be `m × 1` and `σ` `m × d` with `m = dim(x̂)`.
    pub fn new(b: Coef, sigma: Coef, initial: InitialSegment) -> Result<Self> {
        let m = initial.dim();
        let (sm, _) = sigma.shape();
        if b.shape() != (m, 1) || sm != m {
            return Err(Error::InvalidArgument(format!(
                "b {:?} and sigma {:?} do not fit state dimension {m}",
                b.shape(),
                sigma.shape()
            )));
        }
        let need = b.min_state_dim().max(sigma.min_state_dim());
        if need > m {
            return Err(Error::InvalidArgument(format!(
                "coefficients read component {} of a {m}-dimensional state",
                need - 1
            )));
        }
        Ok(Self { b, sigma, initial })
    }

    /// `(m, d)`.
    pub fn dims(&self) -> (usize, usize) {
        self.sigma.shape()
    }

    pub fn subject(&self) -> Subject<'_> {
        Subject::Sde {
            b: self.b.as_ref(),
            sigma: self.sigma.as_ref(),
        }
    }
}

/// Outcome of a fixed-point iteration.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridPath,
    pub iterations: usize,
    /// Distance between iterate `n` and `n − 1`, starting at `n = 1`.
    pub successive_distances: Vec<f64>,
    pub converged: bool,
}

impl SolveReport {
    /// Columns `iteration,distance`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<_> = self
            .successive_distances
            .iter()
            .enumerate()
            .map(|(i, d)| vec![(i + 1).to_string(), fmt_f64(*d)])
            .collect();
        write_table(w, &["iteration", "distance"], &rows)
    }
}

fn check_state(state: &[f64], t: f64) -> Result<()> {
    let mut sq = 0.0;
    for v in state {
        if !v.is_finite() {
            return Err(Error::NonFinite(t));
        }
        sq += v * v;
    }
    let norm = sq.sqrt();
    if norm > DIVERGENCE_GUARD {
        return Err(Error::Divergence { time: t, norm });
    }
    Ok(())
}

/// Forward substitution: `buf[i+1] = buf[i] + inc(view of buf at i)`.
fn march<F>(grid: &Arc<TimeGrid>, m: usize, mut buf: Vec<f64>, mut inc: F) -> Result<GridPath>
where
    F: FnMut(&PathView<'_>, usize, &mut [f64]) -> Result<()>,
{
    let times = grid.points();
    let mut d = Buf::from_elem(0.0, m);
    for i in grid.delay_index()..grid.last_index() {
        inc(&PathView::at_index(times, m, &buf, i), i, &mut d)?;
        let (head, tail) = buf.split_at_mut((i + 1) * m);
        let next = &mut tail[..m];
        for k in 0..m {
            next[k] = head[i * m + k] + d[k];
        }
        check_state(next, times[i + 1])?;
    }
    Ok(GridPath::from_raw(grid.clone(), m, buf))
}

/// `x_{n+1}(t_{i+1}) = x_{n+1}(t_i) + inc(t_i, x_n)`, from `x_0 = x̂(r∧·)`.
fn picard<F, D>(
    grid: &Arc<TimeGrid>,
    m: usize,
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
    mut inc: F,
    distance: D,
) -> Result<SolveReport>
where
    F: FnMut(&PathView<'_>, usize, &mut [f64]) -> Result<()>,
    D: Fn(&GridPath) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let times = grid.points();
    let mut current = GridPath::from_raw(grid.clone(), m, start);
    let mut distances = Vec::new();
    let mut d = Buf::from_elem(0.0, m);
    for n in 1..=max_iter {
        let mut next = current.values().to_vec();
        for i in grid.delay_index()..grid.last_index() {
            inc(&PathView::at_index(times, m, current.values(), i), i, &mut d)?;
            for k in 0..m {
                next[(i + 1) * m + k] = next[i * m + k] + d[k];
            }
            check_state(&next[(i + 1) * m..(i + 2) * m], times[i + 1])?;
        }
        let next = GridPath::from_raw(grid.clone(), m, next);
        let dist = distance(&next.sub(&current)?);
        distances.push(dist);
        current = next;
        if dist < tol {
            return Ok(SolveReport {
                solution: current,
                iterations: n,
                successive_distances: distances,
                converged: true,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last_distance: distances.last().copied().unwrap_or(f64::INFINITY),
    })
}

fn cell_width(grid: &TimeGrid, i: usize) -> f64 {
    let p = grid.points();
    p[i + 1] - p[i]
}

fn check_field(f: &dyn Functional, m: usize) -> Result<()> {
    if f.shape() != (m, 1) || f.min_state_dim() > m {
        return Err(Error::InvalidArgument(format!(
            "vector field `{}` of shape {:?} does not act on R^{m}",
            f.label(),
            f.shape()
        )));
    }
    Ok(())
}

fn check_driver(x: &GridPath, grid: &Arc<TimeGrid>, dim: usize, what: &str) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "{what} has dimension {}, expected {dim}",
            x.dim()
        )));
    }
    if **x.grid() != **grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Mild solution of `x(t) = x̂(r) + ∫_r^{r∨t} F(s, x) ds` by Picard iteration,
/// stopping once successive iterates are `tol`-close in the Cameron–Martin
/// norm.
pub fn solve_mild_ode(
    f: &dyn Functional,
    x_hat: &InitialSegment,
    grid: &Arc<TimeGrid>,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let m = x_hat.dim();
    check_field(f, m)?;
    let start = x_hat.fill(grid)?;
    picard(
        grid,
        m,
        start,
        tol,
        max_iter,
        |view, i, out| {
            f.eval_into(view, out);
            let dt = cell_width(grid, i);
            out.iter_mut().for_each(|v| *v *= dt);
            Ok(())
        },
        cm_norm,
    )
}

/// `b − ½ρ + σḣ` with `ḣ` the forward difference quotient on each grid cell.
#[derive(Debug)]
struct SkeletonField {
    b: Coef,
    sigma: Coef,
    times: Arc<TimeGrid>,
    /// `d` slopes per grid cell.
    hdot: Vec<f64>,
}

impl SkeletonField {
    fn new(model: &SdeModel, h: &GridPath) -> Self {
        Self {
            b: model.b.clone(),
            sigma: model.sigma.clone(),
            times: h.grid().clone(),
            hdot: cell_slopes(h),
        }
    }
}

impl Functional for SkeletonField {
    fn label(&self) -> String {
        format!("skeleton({}, {})", self.b.label(), self.sigma.label())
    }

    fn shape(&self) -> (usize, usize) {
        self.b.shape()
    }

    fn min_state_dim(&self) -> usize {
        self.b.min_state_dim().max(self.sigma.min_state_dim())
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        let (m, d) = self.sigma.shape();
        self.b.eval_into(x, out);
        let mut rho = Buf::from_elem(0.0, m);
        // differentiability was checked when the field was built
        correction_rho_view(self.sigma.as_ref(), x, &mut rho).expect("sigma is vertically differentiable");
        let mut s = Buf::from_elem(0.0, m * d);
        self.sigma.eval_into(x, &mut s);
        let c = self.times.cell_of(x.time());
        let hd = &self.hdot[c * d..(c + 1) * d];
        for k in 0..m {
            let mut v = out[k] - 0.5 * rho[k];
            for l in 0..d {
                v += s[k * d + l] * hd[l];
            }
            out[k] = v;
        }
    }

    fn vertically_differentiable(&self) -> bool {
        false
    }
}

/// Skeleton ODE `ẋ_h = (b − ½ρ)(t, x_h) + σ(t, x_h)ḣ(t)` with `x_h = x̂` on
/// `[0, r]`.
pub fn skeleton(
    model: &SdeModel,
    h: &GridPath,
    grid: &Arc<TimeGrid>,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let (_, d) = model.dims();
    check_driver(h, grid, d, "h")?;
    if !model.sigma.vertically_differentiable() {
        return Err(Error::MissingDerivative(model.sigma.label()));
    }
    let field = SkeletonField::new(model, h);
    solve_mild_ode(&field, &model.initial, grid, tol, max_iter)
}

/// `inc = (drift)·dt + S·ΔW`, the one increment every SDE scheme uses.
fn sde_increment(drift: &[f64], s: &[f64], dt: f64, dw: &[f64], out: &mut [f64]) {
    let d = dw.len();
    for k in 0..out.len() {
        let mut v = drift[k] * dt;
        for l in 0..d {
            v += s[k * d + l] * dw[l];
        }
        out[k] = v;
    }
}

fn increment_of(w: &GridPath, i: usize, out: &mut [f64]) {
    let (a, b) = (w.at(i), w.at(i + 1));
    for l in 0..out.len() {
        out[l] = b[l] - a[l];
    }
}

fn euler_step<'a>(
    model: &'a SdeModel,
    w: &'a GridPath,
) -> impl FnMut(&PathView<'_>, usize, &mut [f64]) -> Result<()> + 'a {
    let (m, d) = model.dims();
    let mut drift = Buf::from_elem(0.0, m);
    let mut s = Buf::from_elem(0.0, m * d);
    let mut dw = Buf::from_elem(0.0, d);
    move |view, i, out| {
        model.b.eval_into(view, &mut drift);
        model.sigma.eval_into(view, &mut s);
        increment_of(w, i, &mut dw);
        sde_increment(&drift, &s, cell_width(w.grid(), i), &dw, out);
        Ok(())
    }
}

/// Euler–Maruyama on the grid of `w`, `X = x̂` on `[0, r]`.
pub fn euler_sde(model: &SdeModel, w: &GridPath) -> Result<GridPath> {
    let (m, d) = model.dims();
    let grid = w.grid().clone();
    check_driver(w, &grid, d, "w")?;
    march(&grid, m, model.initial.fill(&grid)?, euler_step(model, w))
}

/// Pathwise Picard iteration for the SDE on the fixed driving sample `w`,
/// stopping when successive iterates are `tol`-close in the sup norm.
pub fn picard_sde(model: &SdeModel, w: &GridPath, tol: f64, max_iter: usize) -> Result<SolveReport> {
    let (m, d) = model.dims();
    let grid = w.grid().clone();
    check_driver(w, &grid, d, "w")?;
    picard(&grid, m, model.initial.fill(&grid)?, tol, max_iter, euler_step(model, w), sup_norm)
}

/// Partition cell index for every grid cell in `[r, T)`; `usize::MAX` before `r`.
fn partition_cells(p: &Partition, grid: &TimeGrid) -> Result<(Vec<usize>, Vec<usize>)> {
    let idx = p.grid_indices(grid)?;
    let mut of = vec![usize::MAX; grid.len() - 1];
    for j in 0..p.cells() {
        for g in idx[j]..idx[j + 1] {
            of[g] = j;
        }
    }
    Ok((idx, of))
}

/// Forward difference quotients of `h` on every grid cell.
fn cell_slopes(h: &GridPath) -> Vec<f64> {
    let d = h.dim();
    let p = h.grid().points();
    let mut out = vec![0.0; d * (p.len() - 1)];
    for i in 0..p.len() - 1 {
        let dt = p[i + 1] - p[i];
        for l in 0..d {
            out[i * d + l] = (h.at(i + 1)[l] - h.at(i)[l]) / dt;
        }
    }
    out
}

/// Euler scheme for `dY = (B̲ + B_H ḣ + B̄ Ẇ_n)dt + Σ dW` with `W_n = L_n(w)`
/// and `Ẇ_n` its exact cellwise slope.
pub fn sequence_sde(
    roles: &RoleAssignment,
    initial: &InitialSegment,
    h: &GridPath,
    p: &Partition,
    w: &GridPath,
) -> Result<GridPath> {
    let (m, d) = roles.dims();
    let grid = w.grid().clone();
    check_driver(w, &grid, d, "w")?;
    check_driver(h, &grid, d, "h")?;
    check_initial(initial, m, roles.min_state_dim())?;
    let (idx, cell) = partition_cells(p, &grid)?;
    let hdot = cell_slopes(h);
    let mut drift = Buf::from_elem(0.0, m);
    let mut bh = Buf::from_elem(0.0, m * d);
    let mut bbar = Buf::from_elem(0.0, m * d);
    let mut s = Buf::from_elem(0.0, m * d);
    let mut wdot = Buf::from_elem(0.0, d);
    let mut dw = Buf::from_elem(0.0, d);
    let mut slope_cell = usize::MAX;
    march(&grid, m, initial.fill(&grid)?, |view, i, out| {
        if cell[i] != slope_cell {
            slope_cell = cell[i];
            p.interpolated_slope(w, &idx, slope_cell, &mut wdot);
        }
        roles.b_under.eval_into(view, &mut drift);
        roles.b_h.eval_into(view, &mut bh);
        roles.b_bar.eval_into(view, &mut bbar);
        roles.sigma.eval_into(view, &mut s);
        let hd = &hdot[i * d..(i + 1) * d];
        for k in 0..m {
            for l in 0..d {
                drift[k] += bh[k * d + l] * hd[l] + bbar[k * d + l] * wdot[l];
            }
        }
        increment_of(w, i, &mut dw);
        sde_increment(&drift, &s, cell_width(&grid, i), &dw, out);
        Ok(())
    })
}

/// Euler scheme for the limit `dY = ((B̲ + R) + B_H ḣ)dt + (B̄ + Σ)dW`.
pub fn limit_sde(roles: &RoleAssignment, initial: &InitialSegment, h: &GridPath, w: &GridPath) -> Result<GridPath> {
    let (m, d) = roles.dims();
    let grid = w.grid().clone();
    check_driver(w, &grid, d, "w")?;
    check_driver(h, &grid, d, "h")?;
    check_initial(initial, m, roles.min_state_dim())?;
    if !roles.b_bar.vertically_differentiable() {
        return Err(Error::MissingDerivative(roles.b_bar.label()));
    }
    let hdot = cell_slopes(h);
    let mut drift = Buf::from_elem(0.0, m);
    let mut bh = Buf::from_elem(0.0, m * d);
    let mut s = Buf::from_elem(0.0, m * d);
    let mut dw = Buf::from_elem(0.0, d);
    march(&grid, m, initial.fill(&grid)?, |view, i, out| {
        roles.limit_drift_view(view, &mut drift)?;
        roles.b_h.eval_into(view, &mut bh);
        roles.limit_diffusion_view(view, &mut s);
        let hd = &hdot[i * d..(i + 1) * d];
        for k in 0..m {
            for l in 0..d {
                drift[k] += bh[k * d + l] * hd[l];
            }
        }
        increment_of(w, i, &mut dw);
        sde_increment(&drift, &s, cell_width(&grid, i), &dw, out);
        Ok(())
    })
}

fn check_initial(initial: &InitialSegment, m: usize, need: usize) -> Result<()> {
    if initial.dim() != m || need > m {
        return Err(Error::InvalidArgument(format!(
            "initial segment of dimension {} for a {m}-dimensional equation",
            initial.dim()
        )));
    }
    Ok(())
}
