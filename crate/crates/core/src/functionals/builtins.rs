//! Built-in coefficient families with closed-form derivatives and declared
//! constants.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::calculus::correction_rho_view;
use super::{Coef, DeclaredBounds, Functional, Growth, HolderBound, Mat, PathView};

/// Scalar maps applied to one coordinate of the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Identity,
    Tanh,
    Sin,
    Cos,
}

impl Nonlinearity {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Tanh => x.tanh(),
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Self::Sin => x.cos(),
            Self::Cos => -x.sin(),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Self::Sin => -x.sin(),
            Self::Cos => -x.cos(),
        }
    }

    /// `sup |g|`, if finite.
    pub fn sup(self) -> Option<f64> {
        match self {
            Self::Identity => None,
            _ => Some(1.0),
        }
    }

    /// `sup |g'|`.
    pub fn lip(self) -> f64 {
        1.0
    }

    /// `sup |g''|`.
    pub fn lip_d1(self) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Tanh => 4.0 / (3.0 * 3f64.sqrt()),
            Self::Sin | Self::Cos => 1.0,
        }
    }

    fn growth(self, c: f64) -> Growth {
        match self.sup() {
            Some(s) => Growth { c: c * s, exponent: 0.0 },
            None => Growth { c, exponent: 1.0 },
        }
    }
}

/// `G(t, x) = A`.
#[derive(Debug, Clone)]
pub struct Constant {
    value: Mat,
}

impl Constant {
    pub fn new(value: Mat) -> Self {
        Self { value }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::new(Mat::zeros(rows, cols))
    }

    pub fn coef(value: Mat) -> Coef {
        Arc::new(Self::new(value))
    }
}

impl Functional for Constant {
    fn label(&self) -> String {
        format!("constant{:?}", self.value.data.as_slice())
    }

    fn shape(&self) -> (usize, usize) {
        (self.value.rows, self.value.cols)
    }

    fn eval_into(&self, _x: &PathView<'_>, out: &mut [f64]) {
        out.copy_from_slice(&self.value.data);
    }

    fn vertical_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn horizontal_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn second_vertical_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn bounds(&self) -> DeclaredBounds {
        DeclaredBounds {
            growth: Some(Growth { c: self.value.norm(), exponent: 0.0 }),
            lipschitz: Some(0.0),
            d_infty_lipschitz: Some(0.0),
            d_infty_holder: None,
            vertical_bound: Some(0.0),
            vertical_lipschitz: Some(0.0),
            second_order: Some(Growth { c: 0.0, exponent: 0.0 }),
        }
    }
}

/// `G_{k,l}(t, x) = A_{k,l}·g(x_k(t))`; needs state dimension = rows of `A`.
#[derive(Debug, Clone)]
pub struct Pointwise {
    scale: Mat,
    g: Nonlinearity,
}

impl Pointwise {
    pub fn new(scale: Mat, g: Nonlinearity) -> Self {
        Self { scale, g }
    }
}

impl Functional for Pointwise {
    fn label(&self) -> String {
        format!("pointwise({:?}, {:?})", self.g, self.scale.data.as_slice())
    }

    fn shape(&self) -> (usize, usize) {
        (self.scale.rows, self.scale.cols)
    }

    fn min_state_dim(&self) -> usize {
        self.scale.rows
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        let v = x.current();
        let cols = self.scale.cols;
        for k in 0..self.scale.rows {
            let gk = self.g.value(v[k]);
            for l in 0..cols {
                out[k * cols + l] = self.scale.get(k, l) * gk;
            }
        }
    }

    fn vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let (v, m, cols) = (x.current(), x.dim(), self.scale.cols);
        out.fill(0.0);
        for k in 0..self.scale.rows {
            let dk = self.g.d1(v[k]);
            for l in 0..cols {
                out[(k * cols + l) * m + k] = self.scale.get(k, l) * dk;
            }
        }
        true
    }

    fn horizontal_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn second_vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let (v, m, cols) = (x.current(), x.dim(), self.scale.cols);
        out.fill(0.0);
        for k in 0..self.scale.rows {
            let dk = self.g.d2(v[k]);
            for l in 0..cols {
                out[((k * cols + l) * m + k) * m + k] = self.scale.get(k, l) * dk;
            }
        }
        true
    }

    fn bounds(&self) -> DeclaredBounds {
        let a = self.scale.norm();
        DeclaredBounds {
            growth: Some(self.g.growth(a)),
            lipschitz: Some(a * self.g.lip()),
            d_infty_lipschitz: Some(a * self.g.lip()),
            d_infty_holder: None,
            vertical_bound: Some(a * self.g.lip()),
            vertical_lipschitz: Some(a * self.g.lip_d1()),
            second_order: Some(Growth { c: a * self.g.lip_d1(), exponent: 0.0 }),
        }
    }
}

/// `G(t, x) = A·outer(∫_0^t inner(x_c(s)) ds)` with left-point quadrature
/// over the knots of the stopped path, so that `∂_x G = 0` holds exactly.
#[derive(Debug, Clone)]
pub struct Integral {
    scale: Mat,
    outer: Nonlinearity,
    inner: Nonlinearity,
    component: usize,
    horizon: f64,
}

impl Integral {
    /// `horizon` only enters the declared constants.
    pub fn new(scale: Mat, outer: Nonlinearity, inner: Nonlinearity, component: usize, horizon: f64) -> Self {
        Self { scale, outer, inner, component, horizon }
    }

    fn integral(&self, x: &PathView<'_>) -> f64 {
        let c = self.component;
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (t, v) in x.knots() {
            if let Some((t0, f0)) = prev {
                acc += f0 * (t - t0);
            }
            prev = Some((t, self.inner.value(v[c])));
        }
        let (t_last, f_last) = prev.unwrap();
        acc + f_last * (x.time() - t_last)
    }
}

impl Functional for Integral {
    fn label(&self) -> String {
        format!("integral({:?} of {:?}(x{}))", self.outer, self.inner, self.component + 1)
    }

    fn shape(&self) -> (usize, usize) {
        (self.scale.rows, self.scale.cols)
    }

    fn min_state_dim(&self) -> usize {
        self.component + 1
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        let g = self.outer.value(self.integral(x));
        for (o, a) in out.iter_mut().zip(&self.scale.data) {
            *o = a * g;
        }
    }

    fn vertical_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn horizontal_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let d = self.outer.d1(self.integral(x)) * self.inner.value(x.current()[self.component]);
        for (o, a) in out.iter_mut().zip(&self.scale.data) {
            *o = a * d;
        }
        true
    }

    fn second_vertical_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn bounds(&self) -> DeclaredBounds {
        let a = self.scale.norm();
        let t = self.horizon;
        let growth = match (self.outer.sup(), self.inner.sup()) {
            (Some(s), _) => Growth { c: a * s, exponent: 0.0 },
            (None, Some(s)) => Growth { c: a * t * s, exponent: 0.0 },
            (None, None) => Growth { c: a * t, exponent: 1.0 },
        };
        let lip = a * self.outer.lip() * self.inner.lip() * t;
        DeclaredBounds {
            growth: Some(growth),
            lipschitz: Some(lip),
            d_infty_lipschitz: self
                .inner
                .sup()
                .map(|s| a * self.outer.lip() * (t * self.inner.lip()).max(s * t.sqrt())),
            d_infty_holder: None,
            vertical_bound: Some(0.0),
            vertical_lipschitz: Some(0.0),
            second_order: Some(match self.inner.sup() {
                Some(s) => Growth { c: a * self.outer.lip() * s, exponent: 0.0 },
                None => Growth { c: a * self.outer.lip(), exponent: 1.0 },
            }),
        }
    }
}

/// `G(t, x) = A·g(x_c((t − τ) ∨ 0))`. Vertically differentiable with zero
/// derivative, not horizontally differentiable.
#[derive(Debug, Clone)]
pub struct Delayed {
    scale: Mat,
    g: Nonlinearity,
    lag: f64,
    component: usize,
}

impl Delayed {
    pub fn new(scale: Mat, g: Nonlinearity, lag: f64, component: usize) -> Self {
        Self { scale, g, lag, component }
    }
}

impl Functional for Delayed {
    fn label(&self) -> String {
        format!("delayed({:?}(x{}(t - {})))", self.g, self.component + 1, self.lag)
    }

    fn shape(&self) -> (usize, usize) {
        (self.scale.rows, self.scale.cols)
    }

    fn min_state_dim(&self) -> usize {
        self.component + 1
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        let mut v = super::Buf::from_elem(0.0, x.dim());
        x.value_at((x.time() - self.lag).max(0.0), &mut v);
        let g = self.g.value(v[self.component]);
        for (o, a) in out.iter_mut().zip(&self.scale.data) {
            *o = a * g;
        }
    }

    fn vertical_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn horizontally_differentiable(&self) -> bool {
        false
    }

    fn bounds(&self) -> DeclaredBounds {
        let a = self.scale.norm();
        DeclaredBounds {
            growth: Some(self.g.growth(a)),
            lipschitz: Some(a * self.g.lip()),
            vertical_bound: Some(0.0),
            ..DeclaredBounds::default()
        }
    }
}

/// `G(t, x) = A·sup_{s ≤ t} |x(s)|^a` with `a ∈ (0, 1]`. Horizontal
/// derivative 0, no vertical derivative.
#[derive(Debug, Clone)]
pub struct RunningSup {
    scale: Mat,
    exponent: f64,
}

impl RunningSup {
    pub fn new(scale: Mat, exponent: f64) -> Self {
        Self { scale, exponent }
    }
}

impl Functional for RunningSup {
    fn label(&self) -> String {
        format!("running_sup(|x|^{})", self.exponent)
    }

    fn shape(&self) -> (usize, usize) {
        (self.scale.rows, self.scale.cols)
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        // |x|^a is maximised at a knot on every linear segment
        let s = x.sup_norm().powf(self.exponent);
        for (o, a) in out.iter_mut().zip(&self.scale.data) {
            *o = a * s;
        }
    }

    fn horizontal_analytic(&self, _x: &PathView<'_>, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }

    fn vertically_differentiable(&self) -> bool {
        false
    }

    fn bounds(&self) -> DeclaredBounds {
        let a = self.scale.norm();
        DeclaredBounds {
            growth: Some(Growth { c: a, exponent: self.exponent }),
            lipschitz: (self.exponent == 1.0).then_some(a),
            d_infty_holder: Some(HolderBound { lambda: a, alpha: self.exponent }),
            ..DeclaredBounds::default()
        }
    }
}

/// `c·G`.
#[derive(Debug, Clone)]
pub struct Scaled {
    factor: f64,
    inner: Coef,
}

impl Scaled {
    pub fn new(factor: f64, inner: Coef) -> Self {
        Self { factor, inner }
    }

    fn scale(&self, ok: bool, out: &mut [f64]) -> bool {
        if ok {
            out.iter_mut().for_each(|v| *v *= self.factor);
        }
        ok
    }
}

impl Functional for Scaled {
    fn label(&self) -> String {
        format!("{}*{}", self.factor, self.inner.label())
    }

    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn min_state_dim(&self) -> usize {
        self.inner.min_state_dim()
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        self.inner.eval_into(x, out);
        self.scale(true, out);
    }

    fn vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let ok = self.inner.vertical_analytic(x, out);
        self.scale(ok, out)
    }

    fn horizontal_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let ok = self.inner.horizontal_analytic(x, out);
        self.scale(ok, out)
    }

    fn second_vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        let ok = self.inner.second_vertical_analytic(x, out);
        self.scale(ok, out)
    }

    fn vertically_differentiable(&self) -> bool {
        self.inner.vertically_differentiable()
    }

    fn horizontally_differentiable(&self) -> bool {
        self.inner.horizontally_differentiable()
    }

    fn bounds(&self) -> DeclaredBounds {
        self.inner.bounds().scaled(self.factor)
    }
}

/// `Σ_i G_i`; all terms share one shape.
#[derive(Debug, Clone)]
pub struct Sum {
    terms: Vec<Coef>,
}

impl Sum {
    pub fn new(terms: Vec<Coef>) -> crate::Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| crate::Error::InvalidArgument("empty sum".into()))?
            .shape();
        if terms.iter().any(|t| t.shape() != first) {
            return Err(crate::Error::InvalidArgument("summands differ in shape".into()));
        }
        Ok(Self { terms })
    }

    fn accumulate(
        &self,
        out: &mut [f64],
        mut f: impl FnMut(&dyn Functional, &mut [f64]) -> bool,
    ) -> bool {
        let mut tmp = vec![0.0; out.len()];
        out.fill(0.0);
        for t in &self.terms {
            if !f(t.as_ref(), &mut tmp) {
                return false;
            }
            out.iter_mut().zip(&tmp).for_each(|(o, v)| *o += v);
        }
        true
    }
}

impl Functional for Sum {
    fn label(&self) -> String {
        self.terms.iter().map(|t| t.label()).collect::<Vec<_>>().join(" + ")
    }

    fn shape(&self) -> (usize, usize) {
        self.terms[0].shape()
    }

    fn min_state_dim(&self) -> usize {
        self.terms.iter().map(|t| t.min_state_dim()).max().unwrap_or(1)
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        self.accumulate(out, |t, buf| {
            t.eval_into(x, buf);
            true
        });
    }

    fn vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.accumulate(out, |t, buf| t.vertical_analytic(x, buf))
    }

    fn horizontal_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.accumulate(out, |t, buf| t.horizontal_analytic(x, buf))
    }

    fn second_vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.accumulate(out, |t, buf| t.second_vertical_analytic(x, buf))
    }

    fn vertically_differentiable(&self) -> bool {
        self.terms.iter().all(|t| t.vertically_differentiable())
    }

    fn horizontally_differentiable(&self) -> bool {
        self.terms.iter().all(|t| t.horizontally_differentiable())
    }

    fn bounds(&self) -> DeclaredBounds {
        self.terms[1..]
            .iter()
            .fold(self.terms[0].bounds(), |acc, t| acc.added(&t.bounds()))
    }
}

/// `b + c·ρ(σ)`, the drift of the skeleton and forward sequence equations
/// for `c = −1/2`.
#[derive(Debug, Clone)]
pub struct DriftCorrection {
    b: Coef,
    sigma: Coef,
    factor: f64,
}

impl DriftCorrection {
    pub fn new(b: Coef, sigma: Coef, factor: f64) -> Self {
        Self { b, sigma, factor }
    }
}

impl Functional for DriftCorrection {
    fn label(&self) -> String {
        format!("{} + {}*rho[{}]", self.b.label(), self.factor, self.sigma.label())
    }

    fn shape(&self) -> (usize, usize) {
        self.b.shape()
    }

    fn min_state_dim(&self) -> usize {
        self.b.min_state_dim().max(self.sigma.min_state_dim())
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        self.b.eval_into(x, out);
        let mut rho = super::Buf::from_elem(0.0, out.len());
        // σ is validated as vertically differentiable when the roles are built
        if correction_rho_view(self.sigma.as_ref(), x, &mut rho).is_ok() {
            out.iter_mut().zip(&rho).for_each(|(o, r)| *o += self.factor * r);
        }
    }

    fn horizontally_differentiable(&self) -> bool {
        self.b.horizontally_differentiable() && self.sigma.horizontally_differentiable()
    }

    fn bounds(&self) -> DeclaredBounds {
        let (b, s) = (self.b.bounds(), self.sigma.bounds());
        // |ρ| ≤ |∂_x σ|·|σ| for bounded σ
        let rho = match (s.growth, s.vertical_bound) {
            (Some(g), Some(v)) if g.exponent == 0.0 => Some(self.factor.abs() * g.c * v),
            _ => None,
        };
        // ρ(x) − ρ(y) = (∂_x σ(x) − ∂_x σ(y))σ(x) + ∂_x σ(y)(σ(x) − σ(y))
        let rho_lip = |lip_sigma: Option<f64>| -> Option<f64> {
            let g = s.growth.filter(|g| g.exponent == 0.0)?;
            Some(self.factor.abs() * (s.vertical_lipschitz? * g.c + s.vertical_bound? * lip_sigma?))
        };
        DeclaredBounds {
            growth: b.growth.zip(rho).map(|(g, r)| Growth { c: g.c + r, ..g }),
            lipschitz: b.lipschitz.zip(rho_lip(s.lipschitz)).map(|(a, r)| a + r),
            d_infty_lipschitz: b
                .d_infty_lipschitz
                .zip(rho_lip(s.d_infty_lipschitz))
                .map(|(a, r)| a + r),
            ..DeclaredBounds::default()
        }
    }
}

/// Overrides the declared constants of another functional.
#[derive(Debug, Clone)]
pub struct WithBounds {
    inner: Coef,
    bounds: DeclaredBounds,
}

impl WithBounds {
    pub fn new(inner: Coef, bounds: DeclaredBounds) -> Self {
        Self { inner, bounds }
    }
}

impl Functional for WithBounds {
    fn label(&self) -> String {
        self.inner.label()
    }

    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn min_state_dim(&self) -> usize {
        self.inner.min_state_dim()
    }

    fn eval_into(&self, x: &PathView<'_>, out: &mut [f64]) {
        self.inner.eval_into(x, out)
    }

    fn vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.inner.vertical_analytic(x, out)
    }

    fn horizontal_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.inner.horizontal_analytic(x, out)
    }

    fn second_vertical_analytic(&self, x: &PathView<'_>, out: &mut [f64]) -> bool {
        self.inner.second_vertical_analytic(x, out)
    }

    fn vertically_differentiable(&self) -> bool {
        self.inner.vertically_differentiable()
    }

    fn horizontally_differentiable(&self) -> bool {
        self.inner.horizontally_differentiable()
    }

    fn bounds(&self) -> DeclaredBounds {
        self.bounds
    }
}
