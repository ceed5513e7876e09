//! Non-anticipative coefficient functionals `(t, x) ↦ G(t, x)` and their
//! functional calculus.
//!
//! A functional never sees a whole [`GridPath`]: it is handed a [`PathView`],
//! which exposes exactly the stopped path `x^t`. Non-anticipativity is
//! therefore structural rather than a convention each implementation has to
//! honour.

mod builtins;
mod calculus;
mod conditions;
mod registry;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::paths::{GridPath, TIME_EPS};

pub use builtins::{
    Constant, Delayed, DriftCorrection, Integral, Nonlinearity, Pointwise, RunningSup, Scaled, Sum,
    WithBounds,
};
pub use calculus::{
    correction_rho, correction_rho_view, horizontal_derivative, horizontal_derivative_view,
    remainder_r, remainder_r_view, second_vertical_derivative, vertical_derivative,
    vertical_jacobian, C8Scalars, RoleAssignment, FD_HORIZONTAL, FD_VERTICAL,
};
pub use conditions::{check_conditions, Condition, ConditionReport, Subject, Violation};
pub use registry::{build, CoefSpec};

/// Small dense values stay on the stack for `m, d ≤ 2`.
pub type Buf = SmallVec<[f64; 4]>;

/// Shared handle to a coefficient.
pub type Coef = Arc<dyn Functional>;

/// Row-major dense matrix; vectors are `n × 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Buf,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: SmallVec::from_elem(0.0, rows * cols),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("matrix rows must be non-empty and equally long".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.cols + l]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        frob(&self.data)
    }
}

pub(crate) fn frob(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// The stopped path `x^t` as seen by a functional evaluated at time
/// `time() ≥ frozen_at()`.
///
/// Grid values strictly before `frozen_at` are available, followed by the
/// value at `frozen_at`; afterwards the path is constant. Evaluating at a time
/// beyond `frozen_at` is how horizontal derivatives `G(t + δ, x^t)` are formed.
#[derive(Debug, Clone)]
pub struct PathView<'a> {
    times: &'a [f64],
    dim: usize,
    prefix: &'a [f64],
    frozen_at: f64,
    current: Buf,
    time: f64,
}

impl<'a> PathView<'a> {
    /// View of `x^t` evaluated at `t`; `t` may fall between grid points.
    pub fn stopped(x: &'a GridPath, t: f64) -> Result<Self> {
        let grid = x.grid();
        if !grid.contains(t) {
            return Err(Error::out_of_range("t", t, 0.0, grid.horizon()));
        }
        let times = grid.points();
        let tol = TIME_EPS * grid.horizon().max(1.0);
        let n = times.partition_point(|&p| p < t - tol);
        let mut current = SmallVec::from_elem(0.0, x.dim());
        x.eval_into(t, &mut current);
        let frozen_at = if n < times.len() && (times[n] - t).abs() <= tol { times[n] } else { t };
        Ok(Self {
            times,
            dim: x.dim(),
            prefix: &x.values()[..n * x.dim()],
            frozen_at,
            current,
            time: frozen_at,
        })
    }

    /// View at grid index `i` of a trajectory buffer. Entries of `values`
    /// beyond index `i` are never read, so solvers may pass a partially filled
    /// buffer.
    pub fn at_index(times: &'a [f64], dim: usize, values: &'a [f64], i: usize) -> Self {
        Self {
            times,
            dim,
            prefix: &values[..i * dim],
            frozen_at: times[i],
            current: SmallVec::from_slice(&values[i * dim..(i + 1) * dim]),
            time: times[i],
        }
    }

    /// Evaluation time.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Time from which the path is frozen.
    pub fn frozen_at(&self) -> f64 {
        self.frozen_at
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `x(frozen_at)`.
    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// Number of grid knots strictly before `frozen_at`.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len() / self.dim
    }

    /// Knots of the stopped path: grid points before `frozen_at`, then
    /// `(frozen_at, x(frozen_at))`.
    pub fn knots(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.prefix
            .chunks(self.dim)
            .enumerate()
            .map(|(i, v)| (self.times[i], v))
            .chain(std::iter::once((self.frozen_at, &self.current[..])))
    }

    /// `x^t(s)` for any `s ≥ 0`.
    pub fn value_at(&self, s: f64, out: &mut [f64]) {
        let n = self.prefix_len();
        if s >= self.frozen_at || n == 0 {
            out.copy_from_slice(&self.current);
            return;
        }
        let i = self.times[..n].partition_point(|&p| p <= s).saturating_sub(1);
        let a = &self.prefix[i * self.dim..(i + 1) * self.dim];
        let (t1, b) = if i + 1 < n {
            (self.times[i + 1], &self.prefix[(i + 1) * self.dim..(i + 2) * self.dim])
        } else {
            (self.frozen_at, &self.current[..])
        };
        let w = ((s - self.times[i]) / (t1 - self.times[i])).clamp(0.0, 1.0);
        for k in 0..self.dim {
            out[k] = (1.0 - w) * a[k] + w * b[k];
        }
    }

    /// `‖x^t‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.knots().map(|(_, v)| frob(v)).fold(0.0, f64::max)
    }

    /// `x + h·e_k·1_{[t,T]}` stopped at `t`.
    pub fn bumped(&self, k: usize, h: f64) -> Self {
        let mut v = self.clone();
        v.current[k] += h;
        v
    }

    /// The same stopped path evaluated at a later time.
    pub fn extended(&self, time: f64) -> Self {
        debug_assert!(time >= self.frozen_at);
        let mut v = self.clone();
        v.time = time;
        v
    }
}

/// A non-anticipative map `(t, x) ↦ G(t, x) ∈ R^{rows × cols}`.
///
/// Derivative hooks return `false` when no closed form is implemented; the
/// calculus layer then falls back to finite differences. Jacobians are laid
/// out entry-major: `out[e * m + j] = ∂_{x_j} G_e` with `e = k * cols + l`,
/// and `out[(e * m + j) * m + i] = ∂_{x_i} ∂_{x_j} G_e` for second order.
pub trait Functional: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    fn shape(&self) -> (usize, usize);

    /// Smallest state dimension `m` the functional can read.
    fn min_state_dim(&self) -> usize {
        1
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]);

    fn vertical_analytic(&self, _x: &PathView<'_>, _out: &mut [f64]) -> bool {
        false
    }

    fn horizontal_analytic(&self, _x: &PathView<'_>, _out: &mut [f64]) -> bool {
        false
    }

    fn second_vertical_analytic(&self, _x: &PathView<'_>, _out: &mut [f64]) -> bool {
        false
    }

    fn vertically_differentiable(&self) -> bool {
        true
    }

    fn horizontally_differentiable(&self) -> bool {
        true
    }

    fn bounds(&self) -> DeclaredBounds {
        DeclaredBounds::default()
    }

    fn len(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    fn eval(&self, x: &PathView<'_>) -> Mat {
        let (rows, cols) = self.shape();
        let mut m = Mat::zeros(rows, cols);
        self.eval_into(x, &mut m.data);
        m
    }

    /// Convenience: `G(t, x)` for a full grid path.
    fn eval_path(&self, t: f64, x: &GridPath) -> Result<Mat> {
        Ok(self.eval(&PathView::stopped(x, t)?))
    }
}

/// `c·(1 + ‖x‖_∞^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub c: f64,
    pub exponent: f64,
}

impl Growth {
    pub fn bound(&self, sup: f64) -> f64 {
        self.c * (1.0 + sup.powf(self.exponent))
    }
}

/// `λ·‖x^t − y^s‖_∞^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBound {
    pub lambda: f64,
    pub alpha: f64,
}

/// Constants a functional declares about itself. Norms of matrices are
/// Frobenius; unset entries are simply not checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredBounds {
    /// `|G(t,x)| ≤ c(1 + ‖x‖_∞^κ)`
    pub growth: Option<Growth>,
    /// `|G(t,x) − G(t,y)| ≤ λ‖x − y‖_∞`
    pub lipschitz: Option<f64>,
    /// `|G(t,x) − G(s,y)| ≤ λ·d_∞((t,x),(s,y))`
    pub d_infty_lipschitz: Option<f64>,
    /// `|G(t,x) − G(s,y)| ≤ λ‖x^t − y^s‖_∞^α`
    pub d_infty_holder: Option<HolderBound>,
    /// `(Σ_e |∂_x G_e|²)^{1/2} ≤ c`
    pub vertical_bound: Option<f64>,
    /// `∂_x G` is `d_∞`-Lipschitz with this constant.
    pub vertical_lipschitz: Option<f64>,
    /// `|∂_t G| + (Σ_e |∂_xx G_e|²)^{1/2} ≤ c(1 + ‖x‖_∞^η)`
    pub second_order: Option<Growth>,
}

impl DeclaredBounds {
    /// Every bound multiplied by `|c|`.
    pub fn scaled(&self, c: f64) -> Self {
        let a = c.abs();
        let g = |x: Option<Growth>| x.map(|g| Growth { c: a * g.c, ..g });
        Self {
            growth: g(self.growth),
            lipschitz: self.lipschitz.map(|v| a * v),
            d_infty_lipschitz: self.d_infty_lipschitz.map(|v| a * v),
            d_infty_holder: self.d_infty_holder.map(|h| HolderBound { lambda: a * h.lambda, ..h }),
            vertical_bound: self.vertical_bound.map(|v| a * v),
            vertical_lipschitz: self.vertical_lipschitz.map(|v| a * v),
            second_order: g(self.second_order),
        }
    }

    /// Bounds valid for the sum of two functionals.
    pub fn added(&self, other: &Self) -> Self {
        fn both<T>(a: Option<T>, b: Option<T>, f: impl Fn(T, T) -> T) -> Option<T> {
            Some(f(a?, b?))
        }
        let growth = |a: Growth, b: Growth| Growth {
            c: a.c + b.c,
            exponent: a.exponent.max(b.exponent),
        };
        Self {
            growth: both(self.growth, other.growth, growth),
            lipschitz: both(self.lipschitz, other.lipschitz, |a, b| a + b),
            d_infty_lipschitz: both(self.d_infty_lipschitz, other.d_infty_lipschitz, |a, b| a + b),
            d_infty_holder: None,
            vertical_bound: both(self.vertical_bound, other.vertical_bound, |a, b| a + b),
            vertical_lipschitz: both(self.vertical_lipschitz, other.vertical_lipschitz, |a, b| a + b),
            second_order: both(self.second_order, other.second_order, growth),
        }
    }
}
