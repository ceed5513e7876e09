//! Monte Carlo spot checks of the growth, Lipschitz and boundedness
//! conditions against the constants a functional declares.
//!
//! Only declared constants are checked; an undeclared constant is reported as
//! skipped, never as satisfied.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::calculus::{horizontal_derivative_view, vertical_jacobian, RoleAssignment};
use super::{frob, DeclaredBounds, Functional, Growth, PathView};
use crate::error::{Error, Result};
use crate::paths::{cm_norm, d_infty, stopped_sup_at_delay, sup_norm, GridPath, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl Condition {
    pub const ALL: [Condition; 8] = [
        Condition::C1,
        Condition::C2,
        Condition::C3,
        Condition::C4,
        Condition::C5,
        Condition::C6,
        Condition::C7,
        Condition::C8,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C.{}", *self as usize + 1)
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: String = s.chars().filter(char::is_ascii_digit).collect();
        match digits.parse::<usize>() {
            Ok(n @ 1..=8) => Ok(Self::ALL[n - 1]),
            _ => Err(Error::InvalidArgument(format!("unknown condition `{s}`"))),
        }
    }
}

/// What is being checked: an ODE right-hand side, an SDE, or generalized roles.
#[derive(Clone, Copy)]
pub enum Subject<'a> {
    Ode(&'a dyn Functional),
    Sde {
        b: &'a dyn Functional,
        sigma: &'a dyn Functional,
    },
    Roles(&'a RoleAssignment),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub t: f64,
    /// `‖x‖_∞` of the witness path.
    pub path_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub samples: usize,
    pub checked: Vec<String>,
    pub skipped: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Ctx {
    report: ConditionReport,
}

impl Ctx {
    fn check(&mut self, ineq: &str, lhs: f64, rhs: f64, t: f64, x: &GridPath) {
        if !self.report.checked.iter().any(|c| c == ineq) {
            self.report.checked.push(ineq.to_string());
        }
        if !(lhs <= rhs + 1e-9 * (1.0 + rhs.abs())) {
            self.report.violations.push(Violation {
                inequality: ineq.to_string(),
                lhs,
                rhs,
                t,
                path_norm: sup_norm(x),
            });
        }
    }

    fn skip(&mut self, what: String) {
        if !self.report.skipped.contains(&what) {
            self.report.skipped.push(what);
        }
    }
}

/// `c` with `c(1 + ‖x‖^κ) ≤ c'(1 + ‖x‖)`, available for `κ ≤ 1`.
fn linear_constant(g: Growth) -> Option<f64> {
    match g.exponent {
        e if e == 0.0 || e == 1.0 => Some(g.c),
        e if e < 1.0 => Some(2.0 * g.c),
        _ => None,
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    grid: Arc<TimeGrid>,
    dim: usize,
}

impl Sampler {
    /// Offset Brownian-like path with a log-uniform scale in `[0.1, 1e3]`,
    /// or `[0.1, 10]` when `bounded`.
    fn path(&mut self, bounded: bool) -> GridPath {
        let hi = if bounded { 1.0 } else { 3.0 };
        let scale = 10f64.powf(self.rng.random_range(-1.0..hi));
        self.walk(scale, true)
    }

    fn walk(&mut self, scale: f64, offset: bool) -> GridPath {
        let pts = self.grid.points().to_vec();
        let mut v = vec![0.0; pts.len() * self.dim];
        for k in 0..self.dim {
            let z: f64 = self.rng.sample(StandardNormal);
            v[k] = if offset { scale * z } else { 0.0 };
        }
        for i in 1..pts.len() {
            let sd = scale * (pts[i] - pts[i - 1]).sqrt();
            for k in 0..self.dim {
                let z: f64 = self.rng.sample(StandardNormal);
                v[i * self.dim + k] = v[(i - 1) * self.dim + k] + sd * z;
            }
        }
        GridPath::from_raw(self.grid.clone(), self.dim, v)
    }

    /// `x + δ·(random walk)` with relative size `δ ∈ [1e-3, 1]`.
    fn nearby(&mut self, x: &GridPath) -> GridPath {
        let rel = 10f64.powf(self.rng.random_range(-3.0..0.0));
        let p = self.walk(rel * sup_norm(x).max(1.0), true);
        x.add(&p).expect("same grid")
    }

    /// Grid time in `[r, T)`.
    fn time(&mut self) -> f64 {
        let lo = self.grid.delay_index();
        let hi = self.grid.last_index();
        self.grid.points()[self.rng.random_range(lo..hi)]
    }
}

fn eval(f: &dyn Functional, t: f64, x: &GridPath) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    f.eval_into(&PathView::stopped(x, t).expect("t on grid"), &mut out);
    out
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn growth_or_skip(ctx: &mut Ctx, name: &str, f: &dyn Functional) -> Option<Growth> {
    let g = f.bounds().growth;
    if g.is_none() {
        ctx.skip(format!("{name}: no declared growth constant"));
    }
    g
}

/// Spot-checks `which` on `samples` random `(t, x, y)` triples drawn on `grid`
/// with state dimension `dim`.
pub fn check_conditions(
    subject: Subject<'_>,
    which: Condition,
    grid: &Arc<TimeGrid>,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        grid: grid.clone(),
        dim,
    };
    let mut ctx = Ctx {
        report: ConditionReport {
            condition: which,
            samples,
            checked: Vec::new(),
            skipped: Vec::new(),
            violations: Vec::new(),
        },
    };
    let span = grid.horizon() - grid.delay();

    match (which, subject) {
        (Condition::C1, Subject::Ode(f)) => {
            let Some(g) = growth_or_skip(&mut ctx, "F", f) else { return Ok(ctx.report) };
            let Some(c0) = linear_constant(g) else {
                ctx.skip(format!("F: growth exponent {} > 1", g.exponent));
                return Ok(ctx.report);
            };
            for _ in 0..samples {
                let (x, t) = (s.path(false), s.time());
                let var: f64 = cellwise_variation(&x);
                let rhs = c0 * (1.0 + stopped_sup_at_delay(&x) + var);
                ctx.check("|F(t,x)| <= c0(1 + |x^r| + int|x'|)", frob(&eval(f, t, &x)), rhs, t, &x);
            }
        }
        (Condition::C2, Subject::Ode(f)) => {
            let Some(l) = f.bounds().lipschitz else {
                ctx.skip("F: no declared Lipschitz constant".into());
                return Ok(ctx.report);
            };
            let lam = l * span.sqrt().max(1.0);
            for _ in 0..samples {
                let (x, t) = (s.path(true), s.time());
                let y = s.nearby(&x);
                let lhs = diff_norm(&eval(f, t, &x), &eval(f, t, &y));
                ctx.check("|F(t,x) - F(t,y)| <= lambda |x - y|_H", lhs, lam * cm_norm(&x.sub(&y)?), t, &x);
            }
        }
        (Condition::C3, Subject::Sde { b, sigma }) => {
            let gb = growth_or_skip(&mut ctx, "b", b).and_then(linear_constant);
            let gs = growth_or_skip(&mut ctx, "sigma", sigma).and_then(linear_constant);
            for _ in 0..samples {
                let (x, t) = (s.path(false), s.time());
                let n = sup_norm(&x);
                if let Some(c) = gb {
                    ctx.check("|b(t,x)| <= c0(1 + |x|)", frob(&eval(b, t, &x)), c * (1.0 + n), t, &x);
                }
                if let Some(c) = gs {
                    ctx.check("|sigma(t,x)| <= c0~(1 + |x|)", frob(&eval(sigma, t, &x)), c * (1.0 + n), t, &x);
                }
            }
        }
        (Condition::C4 | Condition::C5, Subject::Sde { b, sigma }) => {
            let bounded = which == Condition::C5;
            let lb = b.bounds().lipschitz;
            let ls = sigma.bounds().lipschitz;
            if lb.is_none() {
                ctx.skip("b: no declared Lipschitz constant".into());
            }
            if ls.is_none() {
                ctx.skip("sigma: no declared Lipschitz constant".into());
            }
            for _ in 0..samples {
                let (x, t) = (s.path(bounded), s.time());
                let y = s.nearby(&x);
                let dist = sup_norm(&x.sub(&y)?);
                let db = diff_norm(&eval(b, t, &x), &eval(b, t, &y));
                let ds = diff_norm(&eval(sigma, t, &x), &eval(sigma, t, &y));
                if bounded {
                    if let (Some(a), Some(c)) = (lb, ls) {
                        ctx.check("|b(t,x)-b(t,y)| + |sigma(t,x)-sigma(t,y)| <= lambda_n |x-y|", db + ds, (a + c) * dist, t, &x);
                    }
                } else {
                    if let Some(a) = lb {
                        ctx.check("|b(t,x) - b(t,y)| <= lambda0 |x - y|", db, a * dist, t, &x);
                    }
                    if let Some(c) = ls {
                        ctx.check("|sigma(t,x) - sigma(t,y)| <= lambda0~ |x - y|", ds, c * dist, t, &x);
                    }
                }
            }
        }
        (Condition::C6, Subject::Roles(roles)) => check_c6(&mut ctx, &mut s, roles, samples)?,
        (Condition::C7, Subject::Roles(roles)) => check_c7(&mut ctx, &mut s, roles, samples)?,
        (Condition::C8, Subject::Roles(roles)) => {
            let Some(c8) = roles.c8.as_ref() else {
                ctx.skip("no scalars (b0, b) declared".into());
                return Ok(ctx.report);
            };
            for _ in 0..samples {
                let (x, t) = (s.path(false), s.time());
                let bb = eval(roles.b_bar.as_ref(), t, &x);
                let sg = eval(roles.sigma.as_ref(), t, &x);
                let bt = (c8.b)(t);
                let lhs: Vec<f64> = bb.iter().map(|v| c8.b0 * v).collect();
                let rhs: Vec<f64> = sg.iter().map(|v| bt * v).collect();
                ctx.check("|b0 B_bar(t,x) - b(t) Sigma(t,x)| <= 0", diff_norm(&lhs, &rhs), 1e-12 * (1.0 + frob(&bb)), t, &x);
            }
        }
        (c, _) => {
            return Err(Error::InvalidArgument(format!(
                "condition {c} does not apply to this kind of subject"
            )))
        }
    }
    Ok(ctx.report)
}

/// `∫_r^T |ẋ| ds` for the piecewise-linear path.
fn cellwise_variation(x: &GridPath) -> f64 {
    let g = x.grid();
    (g.delay_index()..g.last_index())
        .map(|i| diff_norm(x.at(i + 1), x.at(i)))
        .sum()
}

fn check_c6(ctx: &mut Ctx, s: &mut Sampler, roles: &RoleAssignment, samples: usize) -> Result<()> {
    let bar = roles.b_bar.as_ref();
    if !bar.vertically_differentiable() || !bar.horizontally_differentiable() {
        let x = s.path(true);
        ctx.check("B_bar is of class C^{1,2}", 1.0, 0.0, s.grid.delay(), &x);
        return Ok(());
    }
    let (bu, bh) = (roles.b_under.bounds(), roles.b_h.bounds());
    let (bb, sg) = (bar.bounds(), roles.sigma.bounds());
    let drift = match (bu.growth, bh.growth) {
        (Some(a), Some(b)) if a.exponent.max(b.exponent) < 1.0 || a.c + b.c == 0.0 => Some(Growth {
            c: a.c + b.c,
            exponent: a.exponent.max(b.exponent),
        }),
        (Some(_), Some(_)) => {
            ctx.skip("B_under + B_H: declared growth exponent not below 1".into());
            None
        }
        _ => {
            ctx.skip("B_under or B_H: no declared growth constant".into());
            None
        }
    };
    let bounded = match (bb.growth, bb.vertical_bound, sg.growth) {
        (Some(a), Some(v), Some(c)) if a.exponent == 0.0 && c.exponent == 0.0 => Some(a.c + v + c.c),
        _ => {
            ctx.skip("B_bar, d_x B_bar, Sigma: no declared uniform bound".into());
            None
        }
    };
    let second = bb.second_order;
    if second.is_none() {
        ctx.skip("B_bar: no declared second-order growth".into());
    }
    let (m, d) = roles.dims();
    let dim = s.dim;
    for _ in 0..samples {
        let (x, t) = (s.path(false), s.time());
        let view = PathView::stopped(&x, t)?;
        let n = sup_norm(&x);
        if let Some(g) = drift {
            let lhs = frob(&eval(roles.b_under.as_ref(), t, &x)) + frob(&eval(roles.b_h.as_ref(), t, &x));
            ctx.check("|B_under| + |B_H| <= c(1 + |x|^kappa)", lhs, g.bound(n), t, &x);
        }
        let mut jac = vec![0.0; m * d * dim];
        vertical_jacobian(bar, &view, &mut jac)?;
        if let Some(c) = bounded {
            let lhs = frob(&eval(bar, t, &x)) + frob(&jac) + frob(&eval(roles.sigma.as_ref(), t, &x));
            ctx.check("|B_bar| + |d_x B_bar| + |Sigma| <= c", lhs, c, t, &x);
        }
        if let Some(g) = second {
            let mut dt = vec![0.0; m * d];
            horizontal_derivative_view(bar, &view, &mut dt)?;
            let mut hess = vec![0.0; m * d * dim * dim];
            if !bar.second_vertical_analytic(&view, &mut hess) {
                let eps = 1e-4 * view.sup_norm().max(1.0);
                let mut p = vec![0.0; m * d * dim];
                let mut q = vec![0.0; m * d * dim];
                for i in 0..dim {
                    vertical_jacobian(bar, &view.bumped(i, eps), &mut p)?;
                    vertical_jacobian(bar, &view.bumped(i, -eps), &mut q)?;
                    for e in 0..m * d * dim {
                        hess[e * dim + i] = (p[e] - q[e]) / (2.0 * eps);
                    }
                }
            }
            ctx.check("|d_t B_bar| + |d_xx B_bar| <= c(1 + |x|^eta)", frob(&dt) + frob(&hess), g.bound(n), t, &x);
        }
    }
    Ok(())
}

fn check_c7(ctx: &mut Ctx, s: &mut Sampler, roles: &RoleAssignment, samples: usize) -> Result<()> {
    let lip_under = roles.b_under.bounds().lipschitz;
    if lip_under.is_none() {
        ctx.skip("B_under: no declared Lipschitz constant".into());
    }
    let named: [(&str, &dyn Functional, DeclaredBounds); 3] = [
        ("B_H", roles.b_h.as_ref(), roles.b_h.bounds()),
        ("B_bar", roles.b_bar.as_ref(), roles.b_bar.bounds()),
        ("Sigma", roles.sigma.as_ref(), roles.sigma.bounds()),
    ];
    for (name, _, b) in &named {
        if b.d_infty_lipschitz.is_none() {
            ctx.skip(format!("{name}: no declared d_infty-Lipschitz constant"));
        }
    }
    let vlip = roles.b_bar.bounds().vertical_lipschitz;
    if vlip.is_none() {
        ctx.skip("d_x B_bar: no declared d_infty-Lipschitz constant".into());
    }
    let (m, d) = roles.dims();
    let dim = s.dim;
    for _ in 0..samples {
        let x = s.path(false);
        let y = s.nearby(&x);
        let (t, u) = (s.time(), s.time());
        if let Some(l) = lip_under {
            let lhs = diff_norm(&eval(roles.b_under.as_ref(), t, &x), &eval(roles.b_under.as_ref(), t, &y));
            ctx.check("|B_under(t,x) - B_under(t,y)| <= lambda |x - y|", lhs, l * sup_norm(&x.sub(&y)?), t, &x);
        }
        let dist = d_infty(t, &x, u, &y)?;
        for (name, f, b) in &named {
            if let Some(l) = b.d_infty_lipschitz {
                let lhs = diff_norm(&eval(*f, t, &x), &eval(*f, u, &y));
                ctx.check(&format!("|{name}(t,x) - {name}(s,y)| <= lambda d_infty"), lhs, l * dist, t, &x);
            }
        }
        if let Some(l) = vlip {
            if roles.b_bar.vertically_differentiable() {
                let mut jx = vec![0.0; m * d * dim];
                let mut jy = vec![0.0; m * d * dim];
                vertical_jacobian(roles.b_bar.as_ref(), &PathView::stopped(&x, t)?, &mut jx)?;
                vertical_jacobian(roles.b_bar.as_ref(), &PathView::stopped(&y, u)?, &mut jy)?;
                ctx.check("|d_x B_bar(t,x) - d_x B_bar(s,y)| <= lambda d_infty", diff_norm(&jx, &jy), l * dist, t, &x);
            }
        }
    }
    Ok(())
}
