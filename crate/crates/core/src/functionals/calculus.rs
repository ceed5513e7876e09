//! Vertical and horizontal derivatives, the correction term `ρ`, the
//! remainder `R`, and coefficient role assignments.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use super::builtins::{Constant, DriftCorrection, Scaled};
use super::{Buf, Coef, Functional, Mat, PathView};
use crate::error::{Error, Result};
use crate::paths::{GridPath, TIME_EPS};

/// Relative vertical bump `ε_v`; the absolute bump is `ε_v·max(1, ‖x‖_∞)`.
pub const FD_VERTICAL: f64 = 1e-5;
/// Relative horizontal step: `δ = FD_HORIZONTAL·(T − t)`, at least `1e-8`.
pub const FD_HORIZONTAL: f64 = 1e-4;

type Scratch = SmallVec<[f64; 16]>;

fn before_horizon(x: &PathView<'_>) -> Result<()> {
    let horizon = x.horizon();
    if x.time() >= horizon - TIME_EPS * horizon.max(1.0) {
        return Err(Error::out_of_range("t", x.time(), 0.0, horizon));
    }
    Ok(())
}

fn at_horizon(x: &PathView<'_>) -> bool {
    x.time() >= x.horizon() - TIME_EPS * x.horizon().max(1.0)
}

/// Full vertical Jacobian, `out[e * m + j] = ∂_{x_j} G_e`, length `len·m`.
/// Uses the analytic form when available, central differences otherwise.
pub fn vertical_jacobian(f: &dyn Functional, x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
    if !f.vertically_differentiable() {
        return Err(Error::MissingDerivative(f.label()));
    }
    before_horizon(x)?;
    if f.vertical_analytic(x, out) {
        return Ok(());
    }
    fd_vertical(f, x, FD_VERTICAL, out);
    Ok(())
}

fn fd_vertical(f: &dyn Functional, x: &PathView<'_>, rel: f64, out: &mut [f64]) {
    let m = x.dim();
    let n = f.len();
    let eps = rel * x.sup_norm().max(1.0);
    let mut plus = Scratch::from_elem(0.0, n);
    let mut minus = Scratch::from_elem(0.0, n);
    for j in 0..m {
        f.eval_into(&x.bumped(j, eps), &mut plus);
        f.eval_into(&x.bumped(j, -eps), &mut minus);
        for e in 0..n {
            out[e * m + j] = (plus[e] - minus[e]) / (2.0 * eps);
        }
    }
}

/// `∂_x G_{k,l}(t, x) ∈ R^{1×m}`, defined for `t ∈ [r, T)`.
pub fn vertical_derivative(f: &dyn Functional, t: f64, x: &GridPath, k: usize, l: usize) -> Result<Buf> {
    let (rows, cols) = f.shape();
    if k >= rows || l >= cols {
        return Err(Error::InvalidArgument(format!("entry ({k}, {l}) outside {rows}x{cols}")));
    }
    let view = PathView::stopped(x, t)?;
    let m = x.dim();
    let mut jac = vec![0.0; f.len() * m];
    vertical_jacobian(f, &view, &mut jac)?;
    let e = k * cols + l;
    Ok(SmallVec::from_slice(&jac[e * m..(e + 1) * m]))
}

/// `∂_t G` at the view's time.
pub fn horizontal_derivative_view(f: &dyn Functional, x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
    if !f.horizontally_differentiable() {
        return Err(Error::NotHorizontallyDifferentiable(f.label()));
    }
    before_horizon(x)?;
    if f.horizontal_analytic(x, out) {
        return Ok(());
    }
    let t = x.time();
    let delta = (FD_HORIZONTAL * (x.horizon() - t)).max(1e-8);
    if t + delta > x.horizon() {
        return Err(Error::out_of_range("t + δ", t + delta, 0.0, x.horizon()));
    }
    let mut ahead = Scratch::from_elem(0.0, f.len());
    f.eval_into(&x.extended(t + delta), &mut ahead);
    f.eval_into(x, out);
    for (o, a) in out.iter_mut().zip(&ahead) {
        *o = (a - *o) / delta;
    }
    Ok(())
}

pub fn horizontal_derivative(f: &dyn Functional, t: f64, x: &GridPath) -> Result<Mat> {
    let (rows, cols) = f.shape();
    let mut out = Mat::zeros(rows, cols);
    horizontal_derivative_view(f, &PathView::stopped(x, t)?, &mut out.data)?;
    Ok(out)
}

/// `∂_{xx} G_{k,l}(t, x)` as a row-major `m × m` matrix
/// `[j][i] = ∂_{x_i} ∂_{x_j} G_{k,l}`.
pub fn second_vertical_derivative(
    f: &dyn Functional,
    t: f64,
    x: &GridPath,
    k: usize,
    l: usize,
) -> Result<Vec<f64>> {
    let (_, cols) = f.shape();
    let view = PathView::stopped(x, t)?;
    let m = x.dim();
    let n = f.len();
    let mut all = vec![0.0; n * m * m];
    if !f.vertically_differentiable() {
        return Err(Error::MissingDerivative(f.label()));
    }
    before_horizon(&view)?;
    if !f.second_vertical_analytic(&view, &mut all) {
        // differences of the first derivative; a wider step since the inner
        // derivative may itself be a difference quotient
        let eps = 1e-4 * view.sup_norm().max(1.0);
        let mut plus = vec![0.0; n * m];
        let mut minus = vec![0.0; n * m];
        for i in 0..m {
            vertical_jacobian(f, &view.bumped(i, eps), &mut plus)?;
            vertical_jacobian(f, &view.bumped(i, -eps), &mut minus)?;
            for ej in 0..n * m {
                all[ej * m + i] = (plus[ej] - minus[ej]) / (2.0 * eps);
            }
        }
    }
    let e = k * cols + l;
    Ok(all[e * m * m..(e + 1) * m * m].to_vec())
}

/// `Σ_l ∂_x A_{k,l}·V·e_l` for each `k`, with `A, V` of shape `m × d`.
fn contract(a: &dyn Functional, v: &[f64], x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
    let (m, d) = a.shape();
    let dim = x.dim();
    let mut jac = Scratch::from_elem(0.0, m * d * dim);
    vertical_jacobian(a, x, &mut jac)?;
    for k in 0..m {
        let mut s = 0.0;
        for l in 0..d {
            let row = &jac[(k * d + l) * dim..(k * d + l + 1) * dim];
            for j in 0..dim {
                s += row[j] * v[j * d + l];
            }
        }
        out[k] = s;
    }
    Ok(())
}

/// `ρ_k = Σ_l ∂_x σ_{k,l}·σ·e_l` for `t < T`, 0 at `T`.
pub fn correction_rho_view(sigma: &dyn Functional, x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
    if !sigma.vertically_differentiable() {
        return Err(Error::MissingDerivative(sigma.label()));
    }
    if at_horizon(x) {
        out.fill(0.0);
        return Ok(());
    }
    let mut s = Scratch::from_elem(0.0, sigma.len());
    sigma.eval_into(x, &mut s);
    contract(sigma, &s, x, out)
}

pub fn correction_rho(sigma: &dyn Functional, t: f64, x: &GridPath) -> Result<Buf> {
    let mut out = Buf::from_elem(0.0, sigma.shape().0);
    correction_rho_view(sigma, &PathView::stopped(x, t)?, &mut out)?;
    Ok(out)
}

/// `R_k = Σ_l ∂_x B̄_{k,l}·(½B̄ + Σ)·e_l` for `t < T`, 0 at `T`.
pub fn remainder_r_view(roles: &RoleAssignment, x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
    if !roles.b_bar.vertically_differentiable() {
        return Err(Error::MissingDerivative(roles.b_bar.label()));
    }
    if at_horizon(x) {
        out.fill(0.0);
        return Ok(());
    }
    let n = roles.b_bar.len();
    let mut v = Scratch::from_elem(0.0, n);
    let mut s = Scratch::from_elem(0.0, n);
    roles.b_bar.eval_into(x, &mut v);
    roles.sigma.eval_into(x, &mut s);
    for (a, b) in v.iter_mut().zip(&s) {
        *a = 0.5 * *a + b;
    }
    contract(roles.b_bar.as_ref(), &v, x, out)
}

pub fn remainder_r(roles: &RoleAssignment, t: f64, x: &GridPath) -> Result<Buf> {
    let mut out = Buf::from_elem(0.0, roles.dims().0);
    remainder_r_view(roles, &PathView::stopped(x, t)?, &mut out)?;
    Ok(out)
}

/// Scalars `(b̄_0, b̄)` with `b̄_0·B̄(t,x) = b̄(t)·Σ(t,x)`.
#[derive(Clone)]
pub struct C8Scalars {
    pub b0: f64,
    pub b: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl C8Scalars {
    pub fn constant(b0: f64, b: f64) -> Self {
        Self {
            b0,
            b: Arc::new(move |_| b),
        }
    }
}

impl fmt::Debug for C8Scalars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("C8Scalars")
            .field("b0", &self.b0)
            .field("b(0)", &(self.b)(0.0))
            .finish()
    }
}

/// Coefficients of the generalized sequence equation
/// `dY = (B̲ + B_H ḣ + B̄ Ẇ_n) dt + Σ dW` and of its limit.
#[derive(Debug, Clone)]
pub struct RoleAssignment {
    pub b_under: Coef,
    pub b_h: Coef,
    pub b_bar: Coef,
    pub sigma: Coef,
    pub c8: Option<C8Scalars>,
}

impl RoleAssignment {
    /// Checks shapes: `B̲` is `m × 1`, the others `m × d`.
    pub fn new(b_under: Coef, b_h: Coef, b_bar: Coef, sigma: Coef, c8: Option<C8Scalars>) -> Result<Self> {
        let (m, one) = b_under.shape();
        let shape = b_bar.shape();
        if one != 1 || shape.0 != m || b_h.shape() != shape || sigma.shape() != shape {
            return Err(Error::InvalidArgument(format!(
                "role shapes disagree: B_under {:?}, B_H {:?}, B_bar {:?}, Sigma {:?}",
                b_under.shape(),
                b_h.shape(),
                shape,
                sigma.shape()
            )));
        }
        Ok(Self { b_under, b_h, b_bar, sigma, c8 })
    }

    /// `B̲ = b − ½ρ, B_H = 0, B̄ = σ, Σ = 0`; then `R = ½ρ` and the limit is the
    /// original equation.
    pub fn forward(b: Coef, sigma: Coef) -> Result<Self> {
        require_vertical(&sigma)?;
        let (m, d) = sigma.shape();
        let zero: Coef = Arc::new(Constant::zero(m, d));
        Self::new(
            Arc::new(DriftCorrection::new(b, sigma.clone(), -0.5)),
            zero.clone(),
            sigma,
            zero,
            Some(C8Scalars::constant(0.0, 0.0)),
        )
    }

    /// `B̲ = b, B_H = σ, B̄ = −σ, Σ = σ`; then `R = −½ρ` and the limit is the
    /// skeleton equation.
    pub fn reverse(b: Coef, sigma: Coef) -> Result<Self> {
        require_vertical(&sigma)?;
        Self::new(
            b,
            sigma.clone(),
            Arc::new(Scaled::new(-1.0, sigma.clone())),
            sigma,
            Some(C8Scalars::constant(1.0, -1.0)),
        )
    }

    /// `(m, d)`.
    pub fn dims(&self) -> (usize, usize) {
        self.b_bar.shape()
    }

    pub fn min_state_dim(&self) -> usize {
        [&self.b_under, &self.b_h, &self.b_bar, &self.sigma]
            .iter()
            .map(|c| c.min_state_dim())
            .max()
            .unwrap()
    }

    /// Limit drift `B̲ + R` (without the `B_H ḣ` term).
    pub fn limit_drift_view(&self, x: &PathView<'_>, out: &mut [f64]) -> Result<()> {
        self.b_under.eval_into(x, out);
        let mut r = Buf::from_elem(0.0, out.len());
        remainder_r_view(self, x, &mut r)?;
        out.iter_mut().zip(&r).for_each(|(o, v)| *o += v);
        Ok(())
    }

    /// Limit diffusion `B̄ + Σ`.
    pub fn limit_diffusion_view(&self, x: &PathView<'_>, out: &mut [f64]) {
        self.b_bar.eval_into(x, out);
        let mut s = Buf::from_elem(0.0, out.len());
        self.sigma.eval_into(x, &mut s);
        out.iter_mut().zip(&s).for_each(|(o, v)| *o += v);
    }
}

fn require_vertical(sigma: &Coef) -> Result<()> {
    if sigma.vertically_differentiable() {
        Ok(())
    } else {
        Err(Error::MissingDerivative(sigma.label()))
    }
}

#[cfg(test)]
pub(super) mod tests_support {
    use super::*;

    /// Central differences regardless of any analytic form.
    pub fn fd_vertical(f: &dyn Functional, x: &PathView<'_>, out: &mut [f64]) {
        super::fd_vertical(f, x, FD_VERTICAL, out)
    }
}
