//! Brownian sampling, Monte Carlo estimates, moment-bound constants and the
//! Girsanov machinery behind the reverse experiment.
//!
//! Randomness is counter based: draw `i` of a run uses the ChaCha8 stream
//! `i` under the run's master seed, so every estimate is a deterministic
//! function of `(seed, n_samples)` whatever the worker count.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::functionals::{Mat, PathView};
use crate::io::{fmt_f64, write_table};
use crate::partitions::Partition;
use crate::paths::{holder_seminorm, GridPath, TimeGrid};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Below this many hits a proportion gets an exact binomial interval.
pub const EXACT_CI_BELOW: u64 = 10;

/// The random stream of one Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// `W(0) = 0` with independent `N(0, Δt)` increments per coordinate.
pub fn sample_brownian(grid: &Arc<TimeGrid>, d: usize, spec: &RngSpec) -> GridPath {
    brownian_from(grid, d, &mut spec.rng())
}

pub(crate) fn brownian_from(grid: &Arc<TimeGrid>, d: usize, rng: &mut ChaCha8Rng) -> GridPath {
    let p = grid.points();
    let mut v = vec![0.0; d * p.len()];
    for i in 1..p.len() {
        let s = (p[i] - p[i - 1]).sqrt();
        for l in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            v[i * d + l] = v[(i - 1) * d + l] + s * z;
        }
    }
    GridPath::from_raw(grid.clone(), d, v)
}

/// Sample mean with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub n_samples: u64,
    /// `1.96·sqrt(variance/n)`, or for exact binomial intervals the larger
    /// distance from the mean to an endpoint.
    pub ci_half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl McEstimate {
    /// Normal-approximation estimate; summation runs in slice order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as u64;
        let mean = if n == 0 { f64::NAN } else { xs.iter().sum::<f64>() / n as f64 };
        let variance = if n < 2 {
            0.0
        } else {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        };
        Self::normal(mean, variance, n)
    }

    fn normal(mean: f64, variance: f64, n: u64) -> Self {
        let hw = Z95 * (variance / n as f64).sqrt();
        Self {
            mean,
            variance,
            n_samples: n,
            ci_half_width: hw,
            lower: mean - hw,
            upper: mean + hw,
        }
    }

    /// Proportion `count/n`; Clopper–Pearson when `count < 10`, normal
    /// approximation otherwise.
    pub fn proportion(count: u64, n: u64) -> Self {
        debug_assert!(count <= n && n > 0);
        let p = count as f64 / n as f64;
        let variance = if n < 2 { 0.0 } else { p * (1.0 - p) * n as f64 / (n - 1) as f64 };
        if count >= EXACT_CI_BELOW {
            let mut e = Self::normal(p, variance, n);
            e.lower = e.lower.max(0.0);
            e.upper = e.upper.min(1.0);
            return e;
        }
        let (lower, upper) = clopper_pearson(count, n);
        Self {
            mean: p,
            variance,
            n_samples: n,
            ci_half_width: (upper - p).max(p - lower),
            lower,
            upper,
        }
    }

    /// `|mean − target| ≤ k·ci_half_width`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.ci_half_width
    }
}

/// Exact 95% binomial interval.
pub fn clopper_pearson(count: u64, n: u64) -> (f64, f64) {
    let (c, n) = (count as f64, n as f64);
    let lower = if count == 0 {
        0.0
    } else {
        Beta::new(c, n - c + 1.0).map(|b| b.inverse_cdf(0.025)).unwrap_or(0.0)
    };
    let upper = if c == n {
        1.0
    } else {
        Beta::new(c + 1.0, n - c).map(|b| b.inverse_cdf(0.975)).unwrap_or(1.0)
    };
    (lower, upper)
}

/// Mean of `f` over draws `0..n` of `seed`, merged in draw order.
pub fn mc_mean<F>(exec: &Executor, n: u64, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&RngSpec) -> Result<f64> + Sync + Send,
{
    let xs = exec.try_map(n, |i| f(&RngSpec::new(seed, i)))?;
    Ok(McEstimate::from_samples(&xs))
}

/// One line of a check report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub estimate: f64,
    pub ci: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ReportRow {
    /// Passes when `estimate + ci ≤ bound`.
    pub fn upper_bound(quantity: impl Into<String>, est: &McEstimate, bound: f64) -> Self {
        Self {
            quantity: quantity.into(),
            estimate: est.mean,
            ci: est.ci_half_width,
            bound,
            pass: est.mean + est.ci_half_width <= bound,
        }
    }
}

/// Columns `quantity,estimate,ci,bound,pass`.
pub fn write_report<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let body: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.quantity.clone(),
                fmt_f64(r.estimate),
                fmt_f64(r.ci),
                fmt_f64(r.bound),
                r.pass.to_string(),
            ]
        })
        .collect();
    write_table(w, &["quantity", "estimate", "ci", "bound", "pass"], &body)
}

/// `k_{α,p,q} = 2^{p+q}(2^{q/p−α} − 1)^{−p}` for `p ≥ 1`, `q > 0`,
/// `0 ≤ α < q/p`.
pub fn kc_constant(alpha: f64, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::out_of_range("p", p, 1.0, f64::INFINITY));
    }
    if !(q > 0.0) {
        return Err(Error::out_of_range("q", q, 0.0, f64::INFINITY));
    }
    if !(alpha >= 0.0 && alpha < q / p) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: format!("[0, q/p) = [0, {})", q / p),
        });
    }
    Ok(2f64.powf(p + q) * (2f64.powf(q / p - alpha) - 1.0).powf(-p))
}

/// Parameters of a Kolmogorov–Chentsov check: `E|X_s − X_t|^p ≤ c0|s−t|^{1+q}`.
#[derive(Debug, Clone, Copy)]
pub struct KcParams {
    pub c0: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

/// Estimates `E[sup_{s≠t} |X_s − X_t|^p/|s−t|^{αp}]` over `[r, T]` on the grid
/// and compares it with `k_{α,p,q}·c0·(T − r)^{1+q−αp}`.
pub fn kc_check<S>(
    sampler: S,
    grid: &Arc<TimeGrid>,
    params: KcParams,
    n_samples: u64,
    seed: u64,
    exec: &Executor,
) -> Result<ReportRow>
where
    S: Fn(&Arc<TimeGrid>, &RngSpec) -> Result<GridPath> + Sync + Send,
{
    let KcParams { c0, p, q, alpha } = params;
    let k = kc_constant(alpha, p, q)?;
    let est = mc_mean(exec, n_samples, seed, |spec| {
        Ok(holder_seminorm(&sampler(grid, spec)?, alpha)?.powf(p))
    })?;
    let bound = k * c0 * (grid.horizon() - grid.delay()).powf(1.0 + q - alpha * p);
    Ok(ReportRow::upper_bound(
        format!("kc(alpha={alpha},p={p},q={q})"),
        &est,
        bound,
    ))
}

/// Mao's constant `w_p = ((p³/2)/(p − 1))^{p/2}` for `p ≥ 2`.
pub fn w_p(p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::out_of_range("p", p, 2.0, f64::INFINITY));
    }
    Ok((p.powi(3) / 2.0 / (p - 1.0)).powf(p / 2.0))
}

/// `ŵ_p = 3^p·w_p·c_T^{p/2}`.
pub fn w_hat_p(p: f64, balance: f64) -> Result<f64> {
    Ok(3f64.powf(p) * w_p(p)? * balance.powf(p / 2.0))
}

/// `E|Z|^k` for `Z ~ N(0, I_d)`: `2^{k/2} Γ((d+k)/2) / Γ(d/2)`.
pub fn gaussian_norm_moment(k: f64, d: usize) -> f64 {
    let d = d as f64;
    (0.5 * k * 2f64.ln() + ln_gamma(0.5 * (d + k)) - ln_gamma(0.5 * d)).exp()
}

/// `ŵ_{p,q} = E|Z|^{pq}·c_T^{pq}` with `Z` standard normal in `R^d`.
pub fn w_hat_pq(p: f64, q: f64, balance: f64, d: usize) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::InvalidArgument(format!("need p, q ≥ 1, got p = {p}, q = {q}")));
    }
    Ok(gaussian_norm_moment(p * q, d) * balance.powf(p * q))
}

/// Partition cell `i` with `t ∈ [t_i, t_{i+1})`, the last cell at `T`.
fn cell_index(p: &Partition, t: f64) -> Result<usize> {
    let (_, i, next) = p.locate(t)?;
    Ok(if i == next { i - 1 } else { i })
}

/// `∫_s^t X(u̲_n) dW_n(u)` for a process `X` given by its values at the
/// partition points (`x[j]` scalars) and `W_n = L_n(w)`: exact, since the
/// integrand is constant and `W_n` linear on every partition cell.
pub fn interpolated_integral(p: &Partition, x: &[f64], w: &GridPath, s: f64, t: f64) -> Result<Vec<f64>> {
    let d = w.dim();
    let mut out = vec![0.0; d];
    if t <= s {
        return Ok(out);
    }
    let idx = p.grid_indices(w.grid())?;
    let pts = p.points();
    let (a, b) = (cell_index(p, s)?, cell_index(p, t)?);
    let mut slope = vec![0.0; d];
    for i in a.max(1)..=b {
        let lo = s.max(pts[i]);
        let hi = t.min(pts[i + 1]);
        if hi <= lo {
            continue;
        }
        p.interpolated_slope(w, &idx, i, &mut slope);
        let xv = x[i - 1];
        for l in 0..d {
            out[l] += xv * slope[l] * (hi - lo);
        }
    }
    Ok(out)
}

/// Residual of the interpolation identity for grid times `s < t` in `[r, T]`:
/// the left side sums `X(u̲_n)` against the grid increments of `L_n(w)`, the
/// right side is the rescaled Itô sum of `X(u_n)` against `w` (split into
/// three terms when `s` and `t` lie in different cells). `x[j]` is the value
/// of `X` at partition point `j`.
pub fn interp_identity_check(p: &Partition, x: &[f64], w: &GridPath, s: f64, t: f64) -> Result<f64> {
    if x.len() != p.points().len() {
        return Err(Error::InvalidArgument(format!(
            "need one value per partition point ({}), got {}",
            p.points().len(),
            x.len()
        )));
    }
    let grid = w.grid();
    let (gs, gt) = match (grid.index_of(s), grid.index_of(t)) {
        (Some(a), Some(b)) if a <= b && a >= grid.delay_index() => (a, b),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "s = {s}, t = {t} must be ordered grid times in [r, T]"
            )))
        }
    };
    let d = w.dim();
    let pts = p.points();
    let idx = p.grid_indices(grid)?;
    let nw = p.interpolate(w)?;
    let gp = grid.points();
    let mut lhs = vec![0.0; d];
    for g in gs..gt {
        let i = cell_index(p, gp[g])?;
        let xv = x[i.saturating_sub(1)];
        for l in 0..d {
            lhs[l] += xv * (nw.at(g + 1)[l] - nw.at(g)[l]);
        }
    }
    // on the first cell W_n is frozen, so start from t_1
    let s = s.max(pts[1]);
    let mut rhs = vec![0.0; d];
    if s < t {
        let i = cell_index(p, s)?;
        let j = cell_index(p, t)?;
        let ito = |k: usize, l: usize| x[k - 1] * (w.at(idx[k])[l] - w.at(idx[k - 1])[l]);
        for l in 0..d {
            rhs[l] = if i == j {
                (t - s) / p.delta(i + 1) * ito(i, l)
            } else {
                let mid: f64 = (i + 1..j).map(|k| ito(k, l)).sum();
                (pts[i + 1] - s) / p.delta(i + 1) * ito(i, l) + mid + (t - pts[j]) / p.delta(j + 1) * ito(j, l)
            };
        }
    }
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `∫_s^t |Ẇ_n(u)|^q du`, exact for the piecewise-linear `W_n`.
pub fn interp_slope_integral(p: &Partition, w: &GridPath, s: f64, t: f64, q: f64) -> Result<f64> {
    if t <= s {
        return Ok(0.0);
    }
    let idx = p.grid_indices(w.grid())?;
    let pts = p.points();
    let mut slope = vec![0.0; w.dim()];
    let mut acc = 0.0;
    for i in cell_index(p, s)?.max(1)..=cell_index(p, t)? {
        let lo = s.max(pts[i]);
        let hi = t.min(pts[i + 1]);
        if hi > lo {
            p.interpolated_slope(w, &idx, i, &mut slope);
            acc += slope.iter().map(|v| v * v).sum::<f64>().sqrt().powf(q) * (hi - lo);
        }
    }
    Ok(acc)
}

/// Monte Carlo estimate of `E[(∫_s^t |Ẇ_n|^q du)^p]` against
/// `ŵ_{p,q}|T_n|^{−pq/2}(t − s)^p`; passes when the estimate is below the
/// bound plus its CI.
#[allow(clippy::too_many_arguments)]
pub fn interp_moment_check(
    p: &Partition,
    grid: &Arc<TimeGrid>,
    d: usize,
    (s, t): (f64, f64),
    q_exp: f64,
    p_exp: f64,
    n_samples: u64,
    seed: u64,
    exec: &Executor,
) -> Result<ReportRow> {
    let bound = w_hat_pq(p_exp, q_exp, p.balance_constant(), d)? * p.mesh().powf(-p_exp * q_exp / 2.0) * (t - s).powf(p_exp);
    let est = mc_mean(exec, n_samples, seed, |spec| {
        let w = sample_brownian(grid, d, spec);
        Ok(interp_slope_integral(p, &w, s, t, q_exp)?.powf(p_exp))
    })?;
    Ok(ReportRow {
        quantity: format!("interp_moment(p={p_exp},q={q_exp},s={s},t={t},n={})", p.cells()),
        estimate: est.mean,
        ci: est.ci_half_width,
        bound,
        pass: est.mean <= bound + est.ci_half_width,
    })
}

/// Monte Carlo check of
/// `E[max_v |∫_s^v X(u̲_n) dW_n|^p] ≤ ŵ_p (t−s)^{p/2} max_j E|X(t_j)|^p`
/// where `x_of(w, j)` gives `X` at partition point `j` from the Brownian path
/// (callers keep it adapted). The running maximum is attained at partition
/// points or at `s`, `t` because the integral is piecewise linear.
#[allow(clippy::too_many_arguments)]
pub fn adapted_interp_check<X>(
    p: &Partition,
    grid: &Arc<TimeGrid>,
    d: usize,
    (s, t): (f64, f64),
    p_exp: f64,
    x_of: X,
    n_samples: u64,
    seed: u64,
    exec: &Executor,
) -> Result<ReportRow>
where
    X: Fn(&GridPath, usize) -> f64 + Sync + Send,
{
    let pts = p.points();
    let mut knots = vec![s];
    knots.extend(pts.iter().copied().filter(|&v| v > s && v < t));
    knots.push(t);
    // partition points whose X enters: t_j ∈ [s̲_n, t̲_n]
    let lo = p.locate(s)?.0;
    let hi = p.locate(t)?.0;
    let samples = exec.try_map(n_samples, |i| {
        let w = sample_brownian(grid, d, &RngSpec::new(seed, i));
        let x: Vec<f64> = (0..pts.len()).map(|j| x_of(&w, j)).collect();
        let mut best = 0.0f64;
        for &v in &knots[1..] {
            let val = interpolated_integral(p, &x, &w, s, v)?;
            best = best.max(val.iter().map(|a| a * a).sum::<f64>().sqrt());
        }
        let moments: Vec<f64> = (lo..=hi).map(|j| x[j].abs().powf(p_exp)).collect();
        Ok((best.powf(p_exp), moments))
    })?;
    let lhs: Vec<f64> = samples.iter().map(|(a, _)| *a).collect();
    let est = McEstimate::from_samples(&lhs);
    let n = samples.len() as f64;
    let max_moment = (0..=hi - lo)
        .map(|k| samples.iter().map(|(_, m)| m[k]).sum::<f64>() / n)
        .fold(0.0, f64::max);
    let bound = w_hat_p(p_exp, p.balance_constant())? * (t - s).powf(p_exp / 2.0) * max_moment;
    Ok(ReportRow::upper_bound(
        format!("adapted_interp(p={p_exp},s={s},t={t},n={})", p.cells()),
        &est,
        bound,
    ))
}

/// `Z_T = exp(Σ X·ΔW − ½ Σ |X|²Δt)` with left-point sums on the grid of `w`
/// and `X^{(l)}(s) = Σ_j f_{j,l}(s)·Y_i^{(j,l)}` on partition cell `i`.
///
/// `y(i, view)` receives `w` stopped at `t_i`, so it cannot look ahead.
pub fn doleans_weight<F, Y>(f: F, y: Y, w: &GridPath, p: &Partition) -> Result<f64>
where
    F: Fn(f64) -> Mat,
    Y: Fn(usize, &PathView<'_>) -> Mat,
{
    let grid = w.grid();
    let idx = p.grid_indices(grid)?;
    let gp = grid.points();
    let d = w.dim();
    let mut log_z = 0.0;
    let mut xs = vec![0.0; d];
    for i in 0..p.cells() {
        let yi = y(i, &PathView::stopped(w, p.points()[i])?);
        for g in idx[i]..idx[i + 1] {
            let fs = f(gp[g]);
            if fs.rows != yi.rows || fs.cols != d || yi.cols != d {
                return Err(Error::InvalidArgument(format!(
                    "f is {}x{}, Y is {}x{}, noise has {d} coordinates",
                    fs.rows, fs.cols, yi.rows, yi.cols
                )));
            }
            for l in 0..d {
                xs[l] = (0..fs.rows).map(|j| fs.get(j, l) * yi.get(j, l)).sum();
            }
            let dt = gp[g + 1] - gp[g];
            for l in 0..d {
                log_z += xs[l] * (w.at(g + 1)[l] - w.at(g)[l]) - 0.5 * xs[l] * xs[l] * dt;
            }
        }
    }
    let z = log_z.exp();
    if !z.is_finite() {
        return Err(Error::NonFinite(grid.horizon()));
    }
    Ok(z)
}

/// Solves `y(t) = w(t) − ∫_r^{r∨t} (ḣ − L̇_n(y)) ds` on the grid by forward
/// substitution: the slope of `L_n(y)` on a partition cell only needs `y` at
/// its two left partition points, which are already known.
pub fn girsanov_driver(h: &GridPath, p: &Partition, w: &GridPath) -> Result<GridPath> {
    let grid = w.grid().clone();
    if h.dim() != w.dim() || !h.same_grid(w) {
        return Err(Error::GridMismatch);
    }
    let d = w.dim();
    let idx = p.grid_indices(&grid)?;
    let gp = grid.points();
    let mut y = w.values().to_vec();
    let mut slope = vec![0.0; d];
    for i in 0..p.cells() {
        if i > 0 {
            let dt = p.delta(i + 1);
            for l in 0..d {
                slope[l] = (y[idx[i] * d + l] - y[idx[i - 1] * d + l]) / dt;
            }
        }
        for g in idx[i]..idx[i + 1] {
            let dt = gp[g + 1] - gp[g];
            for l in 0..d {
                let dw = w.at(g + 1)[l] - w.at(g)[l];
                let dh = h.at(g + 1)[l] - h.at(g)[l];
                y[(g + 1) * d + l] = y[g * d + l] + dw - dh + slope[l] * dt;
            }
        }
    }
    GridPath::new(grid, d, y)
}

/// `max_t |w(t) − (y(t) + ∫_r^{r∨t} (ḣ − L̇_n(y)) ds)|` over the grid.
pub fn girsanov_residual(h: &GridPath, p: &Partition, w: &GridPath, y: &GridPath) -> Result<f64> {
    let grid = w.grid();
    let ln = p.interpolate(y)?;
    let r = grid.delay_index();
    let d = w.dim();
    let mut worst = 0.0f64;
    for g in 0..grid.len() {
        let k = g.max(r);
        for l in 0..d {
            let drift = (h.at(k)[l] - h.at(r)[l]) - (ln.at(k)[l] - ln.at(r)[l]);
            worst = worst.max((w.at(g)[l] - (y.at(g)[l] + drift)).abs());
        }
    }
    Ok(worst)
}

/// The driver `y = _{h,n}W` together with the density
/// `Z_T = exp(∫(ḣ − L̇_n(y))'dW − ½∫|ḣ − L̇_n(y)|²ds)`, written in the
/// product form `f = [ḣ; 1/Δt_{i+1}]`, `Y_i = [1; −(y(t_i) − y(t_{i−1}))]`.
pub fn girsanov_weight(h: &GridPath, p: &Partition, w: &GridPath) -> Result<(GridPath, f64)> {
    let y = girsanov_driver(h, p, w)?;
    let grid = w.grid();
    let d = w.dim();
    let idx = p.grid_indices(grid)?;
    let gp = grid.points();
    let f = |s: f64| {
        let g = grid.cell_of(s);
        let i = cell_index(p, s).unwrap_or(0);
        let mut m = Mat::zeros(2, d);
        for l in 0..d {
            m.data[l] = (h.at(g + 1)[l] - h.at(g)[l]) / (gp[g + 1] - gp[g]);
            m.data[d + l] = 1.0 / p.delta(i + 1);
        }
        m
    };
    // y on [0, t_i] is a function of w on [0, t_i] by the forward substitution
    let yi = |i: usize, _: &PathView<'_>| {
        let mut m = Mat::zeros(2, d);
        for l in 0..d {
            m.data[l] = 1.0;
            if i > 0 {
                m.data[d + l] = -(y.at(idx[i])[l] - y.at(idx[i - 1])[l]);
            }
        }
        m
    };
    let z = doleans_weight(f, yi, w, p)?;
    Ok((y, z))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    Ok(ols_slope(&lx, &ly))
}

pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests;
