//! Monte Carlo convergence experiments for the Wong–Zakai type approximations.
//!
//! Every draw samples one Brownian path on the master grid and reuses it for
//! the reference solution and for every partition of the sweep, so the rows
//! of a table are coupled and each statistic is a pure function of
//! `(config, seed)`.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::functionals::{
    build, correction_rho_view, remainder_r_view, vertical_jacobian, Buf, Coef, CoefSpec, PathView, RoleAssignment,
};
use crate::io::{fmt_f64, write_table};
use crate::partitions::{dyadic_counts, Partition, PartitionSweep, DEFAULT_BALANCE_CAP};
use crate::paths::{holder_norm, GridPath, TimeGrid};
use crate::solvers::{euler_sde, limit_sde, sequence_sde, skeleton, InitialSegment, SdeModel};
use crate::stochastics::{loglog_slope, sample_brownian, McEstimate, RngSpec};

/// The master grid must be at least this many times finer than the finest
/// partition.
pub const MIN_REFINEMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Forward,
    Reverse,
    GridRate,
    Remainder,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Forward => "forward",
            ExperimentKind::Reverse => "reverse",
            ExperimentKind::GridRate => "grid_rate",
            ExperimentKind::Remainder => "remainder",
        }
    }
}

/// `dX = b dt + σ dW` with a constant initial segment `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub b: CoefSpec,
    pub sigma: CoefSpec,
    pub x0: Vec<f64>,
}

/// Role assignment for the generalized sequence equation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum RolesSpec {
    #[default]
    Forward,
    Reverse,
    Custom {
        b_under: CoefSpec,
        b_h: CoefSpec,
        b_bar: CoefSpec,
        sigma: CoefSpec,
    },
}

/// A Cameron–Martin direction `h`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    #[default]
    Zero,
    /// `h(t) = slope·t`.
    Linear { slope: Vec<f64> },
    /// `h(t) = amplitude·sin(2π·frequency·t + phase)`.
    Sinusoid {
        amplitude: Vec<f64>,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl DriverSpec {
    pub fn sample(&self, grid: &Arc<TimeGrid>, d: usize) -> Result<GridPath> {
        let check = |v: &Vec<f64>| {
            if v.len() == d {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("h has {} coordinates, noise has {d}", v.len())))
            }
        };
        match self {
            DriverSpec::Zero => Ok(GridPath::zeros(grid.clone(), d)),
            DriverSpec::Linear { slope } => {
                check(slope)?;
                GridPath::from_fn(grid.clone(), d, |t| slope.iter().map(|s| s * t).collect())
            }
            DriverSpec::Sinusoid { amplitude, frequency, phase } => {
                check(amplitude)?;
                let w = 2.0 * std::f64::consts::PI * frequency;
                GridPath::from_fn(grid.clone(), d, |t| {
                    amplitude.iter().map(|a| a * (w * t + phase).sin()).collect()
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    /// Uniform partitions with `min_cells, 2·min_cells, ..., max_cells` cells.
    Dyadic { min_cells: usize, max_cells: usize },
    Uniform { cells: Vec<usize> },
    /// Geometrically graded cells, snapped to the master grid.
    Geometric { cells: Vec<usize>, ratio: f64 },
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::Dyadic { min_cells: 8, max_cells: 128 }
    }
}

impl SweepSpec {
    pub fn counts(&self) -> Result<Vec<usize>> {
        match self {
            SweepSpec::Dyadic { min_cells, max_cells } => dyadic_counts(*min_cells, *max_cells),
            SweepSpec::Uniform { cells } | SweepSpec::Geometric { cells, .. } => Ok(cells.clone()),
        }
    }

    pub fn build(&self, grid: &TimeGrid, cap: f64) -> Result<PartitionSweep> {
        let parts = match self {
            SweepSpec::Geometric { cells, ratio } => cells
                .iter()
                .map(|&c| Partition::geometric_on(grid, c, *ratio))
                .collect::<Result<Vec<_>>>()?,
            _ => self
                .counts()?
                .into_iter()
                .map(|c| Partition::uniform_on(grid, c))
                .collect::<Result<Vec<_>>>()?,
        };
        PartitionSweep::new(parts, cap)
    }
}

fn default_experiments() -> Vec<ExperimentKind> {
    vec![ExperimentKind::Forward]
}
fn default_master_grid() -> usize {
    4096
}
fn default_horizon() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.2
}
fn default_epsilons() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}
fn default_samples() -> u64 {
    2000
}
fn default_cap() -> f64 {
    DEFAULT_BALANCE_CAP
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    200
}
fn default_true() -> bool {
    true
}

/// Declarative description of a run; maps one to one onto the TOML config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_experiments")]
    pub experiments: Vec<ExperimentKind>,
    pub model: ModelSpec,
    #[serde(default)]
    pub roles: RolesSpec,
    #[serde(default)]
    pub h: DriverSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default = "default_cap")]
    pub balance_cap: f64,
    /// Number of cells of the master grid.
    #[serde(default = "default_master_grid")]
    pub master_grid: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub delay: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Picard tolerance for the skeleton flow.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Estimate the reference discretization bias by halving the master grid.
    #[serde(default = "default_true")]
    pub bias_footnote: bool,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(model: ModelSpec) -> Self {
        Self {
            experiments: default_experiments(),
            model,
            roles: RolesSpec::default(),
            h: DriverSpec::default(),
            sweep: SweepSpec::default(),
            balance_cap: default_cap(),
            master_grid: default_master_grid(),
            horizon: default_horizon(),
            delay: 0.0,
            alpha: default_alpha(),
            epsilons: default_epsilons(),
            n_samples: default_samples(),
            seed: 0,
            tol: default_tol(),
            max_iter: default_max_iter(),
            bias_footnote: true,
        }
    }

    /// Range checks that need no coefficient construction.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: self.alpha,
                range: "[0, 1/2)".into(),
            });
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("epsilons must be positive and finite".into()));
        }
        let up = self.epsilons.windows(2).all(|w| w[0] < w[1]);
        let down = self.epsilons.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::InvalidArgument("epsilons must be strictly sorted".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        if self.experiments.is_empty() {
            return Err(Error::InvalidArgument("no experiment selected".into()));
        }
        if !(self.horizon > self.delay && self.delay >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 ≤ delay < horizon, got delay = {}, horizon = {}",
                self.delay, self.horizon
            )));
        }
        let finest = *self.sweep.counts()?.iter().max().unwrap_or(&0);
        if self.master_grid < MIN_REFINEMENT * finest {
            return Err(Error::InvalidArgument(format!(
                "master grid of {} cells is not {MIN_REFINEMENT}x finer than the finest partition ({finest} cells)",
                self.master_grid
            )));
        }
        Ok(())
    }

    /// Validates and builds every object the runners need.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let grid = Arc::new(TimeGrid::uniform(self.horizon, self.delay, self.master_grid)?);
        let b = build(&self.model.b, self.horizon)?;
        let sigma = build(&self.model.sigma, self.horizon)?;
        let model = SdeModel::new(b, sigma, InitialSegment::Constant(self.model.x0.clone()))?;
        let (_, d) = model.dims();
        let sweep = self.sweep.build(&grid, self.balance_cap)?;
        let h = self.h.sample(&grid, d)?;
        Ok(Prepared {
            grid,
            model,
            h,
            sweep,
        })
    }

    /// The role assignment named by `roles`, built over the model.
    pub fn roles(&self, model: &SdeModel) -> Result<RoleAssignment> {
        match &self.roles {
            RolesSpec::Forward => RoleAssignment::forward(model.b.clone(), model.sigma.clone()),
            RolesSpec::Reverse => RoleAssignment::reverse(model.b.clone(), model.sigma.clone()),
            RolesSpec::Custom { b_under, b_h, b_bar, sigma } => RoleAssignment::new(
                build(b_under, self.horizon)?,
                build(b_h, self.horizon)?,
                build(b_bar, self.horizon)?,
                build(sigma, self.horizon)?,
                None,
            ),
        }
    }
}

/// Built objects shared by the runners.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<TimeGrid>,
    pub model: SdeModel,
    pub h: GridPath,
    pub sweep: PartitionSweep,
}

/// One sweep member.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mesh: f64,
    /// `P(distance ≥ ε)` per configured ε.
    pub exceed: Vec<(f64, McEstimate)>,
    /// `E[distance ∧ 1]`.
    pub pseudometric: Option<McEstimate>,
    /// `E[max_j |Y_n − Y|²(t_j)] / mesh^{2α}`.
    pub grid_rate: Option<McEstimate>,
    /// Reference discretization bias by self-refinement.
    pub bias_footnote: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub rows: Vec<ConvergenceRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl ConvergenceTable {
    pub const HEADER: [&'static str; 8] =
        ["n", "mesh", "epsilon", "p_exceed", "ci", "pseudometric", "grid_rate_stat", "bias_footnote"];

    /// One line per `(n, ε)`, or one per `n` when no exceedances were
    /// recorded; inapplicable fields are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut body = Vec::new();
        for row in &self.rows {
            let common = |eps: Option<f64>, p: Option<f64>, ci: Option<f64>| {
                vec![
                    row.n.to_string(),
                    fmt_f64(row.mesh),
                    opt(eps),
                    opt(p),
                    opt(ci),
                    opt(row.pseudometric.map(|e| e.mean)),
                    opt(row.grid_rate.map(|e| e.mean)),
                    opt(row.bias_footnote),
                ]
            };
            if row.exceed.is_empty() {
                body.push(common(None, None, row.grid_rate.map(|e| e.ci_half_width)));
            }
            for (eps, e) in &row.exceed {
                body.push(common(Some(*eps), Some(e.mean), Some(e.ci_half_width)));
            }
        }
        write_table(w, &Self::HEADER, &body)
    }

    /// Exceedance estimates at `epsilon` down the sweep.
    pub fn exceedance(&self, epsilon: f64) -> Vec<McEstimate> {
        self.rows
            .iter()
            .filter_map(|r| r.exceed.iter().find(|(e, _)| *e == epsilon).map(|(_, m)| *m))
            .collect()
    }
}

/// Distances of every sweep member for one draw, plus a footnote sample.
struct Draw {
    values: Vec<f64>,
    footnote: Option<f64>,
}

fn coarse_grid(grid: &TimeGrid) -> Option<Arc<TimeGrid>> {
    let c = grid.coarsen(2).ok()?;
    (c.delay_index() * 2 == grid.delay_index()).then(|| Arc::new(c))
}

fn holder_distance(a: &GridPath, b: &GridPath, alpha: f64) -> Result<f64> {
    holder_norm(&a.sub(b)?, alpha)
}

fn exceedance_table(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    sweep: &PartitionSweep,
    draws: &[Draw],
    fixed_footnote: Option<f64>,
) -> ConvergenceTable {
    let n = draws.len() as u64;
    let footnote = fixed_footnote.or_else(|| {
        let v: Vec<f64> = draws.iter().filter_map(|d| d.footnote).collect();
        (!v.is_empty()).then(|| McEstimate::from_samples(&v).mean)
    });
    let rows = sweep
        .partitions()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let dist: Vec<f64> = draws.iter().map(|d| d.values[j]).collect();
            let exceed = config
                .epsilons
                .iter()
                .map(|&eps| (eps, McEstimate::proportion(dist.iter().filter(|&&v| v >= eps).count() as u64, n)))
                .collect();
            let capped: Vec<f64> = dist.iter().map(|v| v.min(1.0)).collect();
            ConvergenceRow {
                n: p.cells(),
                mesh: p.mesh(),
                exceed,
                pseudometric: Some(McEstimate::from_samples(&capped)),
                grid_rate: None,
                bias_footnote: footnote,
            }
        })
        .collect();
    ConvergenceTable {
        kind,
        alpha: config.alpha,
        rows,
    }
}

/// `P(‖x_{W_n} − X‖_{α,r} ≥ ε)` along the sweep, with `x_{W_n}` the forward
/// sequence solution driven by `W_n = L_n(W)` and `X` the Euler solution on
/// the master grid.
pub fn run_forward(config: &ExperimentConfig, exec: &Executor) -> Result<ConvergenceTable> {
    let prep = config.prepare()?;
    let Prepared { grid, model, sweep, .. } = &prep;
    let (_, d) = model.dims();
    let roles = RoleAssignment::forward(model.b.clone(), model.sigma.clone())?;
    let zero = GridPath::zeros(grid.clone(), d);
    let coarse = coarse_grid(grid).filter(|_| config.bias_footnote);
    let draws = exec.try_map(config.n_samples, |i| {
        let w = sample_brownian(grid, d, &RngSpec::new(config.seed, i));
        let x = euler_sde(model, &w)?;
        let values = sweep
            .partitions()
            .iter()
            .map(|p| holder_distance(&sequence_sde(&roles, &model.initial, &zero, p, &w)?, &x, config.alpha))
            .collect::<Result<Vec<_>>>()?;
        let footnote = match &coarse {
            Some(c) => Some(holder_distance(&x.resample(c.clone()), &euler_sde(model, &w.resample(c.clone()))?, config.alpha)?),
            None => None,
        };
        Ok(Draw { values, footnote })
    })?;
    Ok(exceedance_table(ExperimentKind::Forward, config, sweep, &draws, None))
}

/// `P(‖Y_n − x_h‖_{α,r} ≥ ε)` where `Y_n` solves the reverse sequence
/// equation driven by a fresh Brownian sample; by uniqueness in law this is
/// the probability under the tilted measure.
pub fn run_reverse(config: &ExperimentConfig, exec: &Executor) -> Result<ConvergenceTable> {
    let prep = config.prepare()?;
    let Prepared { grid, model, h, sweep } = &prep;
    let (_, d) = model.dims();
    let roles = RoleAssignment::reverse(model.b.clone(), model.sigma.clone())?;
    let x_h = skeleton(model, h, grid, config.tol, config.max_iter)?.solution;
    let footnote = match coarse_grid(grid).filter(|_| config.bias_footnote) {
        Some(c) => {
            let coarse = skeleton(model, &h.resample(c.clone()), &c, config.tol, config.max_iter)?.solution;
            Some(holder_distance(&x_h.resample(c), &coarse, config.alpha)?)
        }
        None => None,
    };
    let draws = exec.try_map(config.n_samples, |i| {
        let b = sample_brownian(grid, d, &RngSpec::new(config.seed, i));
        let values = sweep
            .partitions()
            .iter()
            .map(|p| holder_distance(&sequence_sde(&roles, &model.initial, h, p, &b)?, &x_h, config.alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Draw { values, footnote: None })
    })?;
    Ok(exceedance_table(ExperimentKind::Reverse, config, sweep, &draws, footnote))
}

fn max_sq_at(y: &GridPath, x: &GridPath, idx: &[usize]) -> f64 {
    idx.iter()
        .map(|&g| y.at(g).iter().zip(x.at(g)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `E[max_j |Y_n(t_j) − Y(t_j)|²]/|T_n|^{2α}` with `Y_n` the sequence and `Y`
/// the limit solution for the configured roles, both on the same `W`.
pub fn run_grid_rate(config: &ExperimentConfig, exec: &Executor) -> Result<ConvergenceTable> {
    let prep = config.prepare()?;
    let Prepared { grid, model, h, sweep } = &prep;
    let roles = config.roles(model)?;
    let (_, d) = roles.dims();
    let indices = sweep
        .partitions()
        .iter()
        .map(|p| p.grid_indices(grid))
        .collect::<Result<Vec<_>>>()?;
    let coarse = coarse_grid(grid).filter(|_| config.bias_footnote);
    let draws = exec.try_map(config.n_samples, |i| {
        let w = sample_brownian(grid, d, &RngSpec::new(config.seed, i));
        let y = limit_sde(&roles, &model.initial, h, &w)?;
        let values = sweep
            .partitions()
            .iter()
            .zip(&indices)
            .map(|(p, idx)| Ok(max_sq_at(&sequence_sde(&roles, &model.initial, h, p, &w)?, &y, idx)))
            .collect::<Result<Vec<_>>>()?;
        let footnote = match &coarse {
            Some(c) => {
                let yc = limit_sde(&roles, &model.initial, &h.resample(c.clone()), &w.resample(c.clone()))?;
                Some(holder_distance(&y.resample(c.clone()), &yc, config.alpha)?)
            }
            None => None,
        };
        Ok(Draw { values, footnote })
    })?;
    let footnote = {
        let v: Vec<f64> = draws.iter().filter_map(|d| d.footnote).collect();
        (!v.is_empty()).then(|| McEstimate::from_samples(&v).mean)
    };
    let rows = sweep
        .partitions()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let scale = p.mesh().powf(2.0 * config.alpha);
            let stat: Vec<f64> = draws.iter().map(|d| d.values[j] / scale).collect();
            ConvergenceRow {
                n: p.cells(),
                mesh: p.mesh(),
                exceed: Vec::new(),
                pseudometric: None,
                grid_rate: Some(McEstimate::from_samples(&stat)),
                bias_footnote: footnote,
            }
        })
        .collect();
    Ok(ConvergenceTable {
        kind: ExperimentKind::GridRate,
        alpha: config.alpha,
        rows,
    })
}

/// The three terms of the remainder decomposition.
pub const REMAINDER_TERMS: [&str; 3] = ["taylor", "phi_gap", "compensated"];

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderRow {
    pub n: usize,
    pub mesh: f64,
    /// `E[max_j |∫_r^{t_j} term|²]` per term.
    pub second_moments: [McEstimate; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderTable {
    pub rows: Vec<RemainderRow>,
}

impl RemainderTable {
    /// Columns `n,mesh,term,estimate,ci`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut body = Vec::new();
        for row in &self.rows {
            for (name, e) in REMAINDER_TERMS.iter().zip(&row.second_moments) {
                body.push(vec![
                    row.n.to_string(),
                    fmt_f64(row.mesh),
                    name.to_string(),
                    fmt_f64(e.mean),
                    fmt_f64(e.ci_half_width),
                ]);
            }
        }
        write_table(w, &["n", "mesh", "term", "estimate", "ci"], &body)
    }

    /// Log-log slope of each term's second moment against the mesh.
    pub fn slopes(&self) -> Result<[f64; 3]> {
        let mesh: Vec<f64> = self.rows.iter().map(|r| r.mesh).collect();
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let ys: Vec<f64> = self.rows.iter().map(|r| r.second_moments[k].mean).collect();
            *slot = loglog_slope(&mesh, &ys)?;
        }
        Ok(out)
    }
}

/// Quantities frozen at `s̲_n` for one partition cell.
struct Frozen {
    bbar: Buf,
    jac: Vec<f64>,
    bh: Buf,
    sigma: Buf,
    r: Buf,
    y: Buf,
}

/// Running maxima of the three integrated remainder terms along `Y_n`.
fn remainder_terms(
    roles: &RoleAssignment,
    p: &Partition,
    y: &GridPath,
    w: &GridPath,
    nw: &GridPath,
    h: &GridPath,
) -> Result<[f64; 3]> {
    let (m, d) = roles.dims();
    let grid = y.grid();
    let times = grid.points();
    let idx = p.grid_indices(grid)?;
    let view = |g: usize| PathView::at_index(times, m, y.values(), g);
    let mut acc = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut best = [0.0f64; 3];
    let mut bbar_s = Buf::from_elem(0.0, m * d);
    let mut slope = Buf::from_elem(0.0, d);
    let mut dy = vec![0.0; m];
    let mut phi = vec![0.0; m];
    for i in 1..p.cells() {
        let under = idx[i - 1];
        let v = view(under);
        let mut fz = Frozen {
            bbar: Buf::from_elem(0.0, m * d),
            jac: vec![0.0; m * d * m],
            bh: Buf::from_elem(0.0, m * d),
            sigma: Buf::from_elem(0.0, m * d),
            r: Buf::from_elem(0.0, m),
            y: Buf::from_slice(y.at(under)),
        };
        roles.b_bar.eval_into(&v, &mut fz.bbar);
        vertical_jacobian(roles.b_bar.as_ref(), &v, &mut fz.jac)?;
        roles.b_h.eval_into(&v, &mut fz.bh);
        roles.sigma.eval_into(&v, &mut fz.sigma);
        remainder_r_view(roles, &v, &mut fz.r)?;
        p.interpolated_slope(w, &idx, i, &mut slope);
        let gamma = p.delta(i) / p.delta(i + 1);
        for g in idx[i]..idx[i + 1] {
            let dt = times[g + 1] - times[g];
            roles.b_bar.eval_into(&view(g), &mut bbar_s);
            for j in 0..m {
                dy[j] = y.at(g)[j] - fz.y[j];
                let mut f = 0.0;
                for l in 0..d {
                    f += fz.bh[j * d + l] * (h.at(g)[l] - h.at(under)[l])
                        + fz.bbar[j * d + l] * (nw.at(g)[l] - nw.at(under)[l])
                        + fz.sigma[j * d + l] * (w.at(g)[l] - w.at(under)[l]);
                }
                phi[j] = f;
            }
            for k in 0..m {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for l in 0..d {
                    let e = k * d + l;
                    let row = &fz.jac[e * m..(e + 1) * m];
                    let jdy: f64 = row.iter().zip(&dy).map(|(x, y)| x * y).sum();
                    let jphi: f64 = row.iter().zip(&phi).map(|(x, y)| x * y).sum();
                    a += (bbar_s[e] - fz.bbar[e] - jdy) * slope[l];
                    b += (jdy - jphi) * slope[l];
                    c += jphi * slope[l];
                }
                c -= fz.r[k] * gamma;
                acc[0][k] += a * dt;
                acc[1][k] += b * dt;
                acc[2][k] += c * dt;
            }
        }
        for t in 0..3 {
            best[t] = best[t].max(acc[t].iter().map(|v| v * v).sum::<f64>());
        }
    }
    Ok(best)
}

/// Second moments of the running maxima of the three remainder terms, per
/// sweep member.
pub fn remainder_diagnostics(config: &ExperimentConfig, exec: &Executor) -> Result<RemainderTable> {
    let prep = config.prepare()?;
    let Prepared { grid, model, h, sweep } = &prep;
    let roles = config.roles(model)?;
    let (_, d) = roles.dims();
    let draws = exec.try_map(config.n_samples, |i| {
        let w = sample_brownian(grid, d, &RngSpec::new(config.seed, i));
        sweep
            .partitions()
            .iter()
            .map(|p| {
                let y = sequence_sde(&roles, &model.initial, h, p, &w)?;
                let nw = p.interpolate(&w)?;
                remainder_terms(&roles, p, &y, &w, &nw, h)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = sweep
        .partitions()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let est = |t: usize| {
                let v: Vec<f64> = draws.iter().map(|dr| dr[j][t]).collect();
                McEstimate::from_samples(&v)
            };
            RemainderRow {
                n: p.cells(),
                mesh: p.mesh(),
                second_moments: [est(0), est(1), est(2)],
            }
        })
        .collect();
    Ok(RemainderTable { rows })
}

/// Worst deviations of the preset coefficient identities over random
/// `(t, x)`: forward limit drift vs `b`, forward limit diffusion vs `σ`,
/// reverse limit diffusion vs 0, reverse limit drift vs `b − ½ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetAlgebra {
    pub forward_drift: f64,
    pub forward_diffusion: f64,
    pub reverse_diffusion: f64,
    pub reverse_drift: f64,
    pub samples: usize,
}

impl PresetAlgebra {
    pub fn max(&self) -> f64 {
        self.forward_drift
            .max(self.forward_diffusion)
            .max(self.reverse_diffusion)
            .max(self.reverse_drift)
    }
}

pub fn preset_algebra(b: &Coef, sigma: &Coef, grid: &Arc<TimeGrid>, samples: usize, seed: u64) -> Result<PresetAlgebra> {
    let fwd = RoleAssignment::forward(b.clone(), sigma.clone())?;
    let rev = RoleAssignment::reverse(b.clone(), sigma.clone())?;
    let (m, d) = sigma.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PresetAlgebra {
        forward_drift: 0.0,
        forward_diffusion: 0.0,
        reverse_diffusion: 0.0,
        reverse_drift: 0.0,
        samples,
    };
    let times = grid.points();
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    for k in 0..samples {
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let x = sample_brownian(grid, m, &RngSpec::new(seed, k as u64)).scale(scale);
        let g = rng.random_range(grid.delay_index()..grid.last_index());
        let view = PathView::at_index(times, m, x.values(), g);
        let mut want_b = Buf::from_elem(0.0, m);
        let mut want_s = Buf::from_elem(0.0, m * d);
        let mut rho = Buf::from_elem(0.0, m);
        let mut got = Buf::from_elem(0.0, m);
        let mut got_s = Buf::from_elem(0.0, m * d);
        b.eval_into(&view, &mut want_b);
        sigma.eval_into(&view, &mut want_s);
        correction_rho_view(sigma.as_ref(), &view, &mut rho)?;

        fwd.limit_drift_view(&view, &mut got)?;
        out.forward_drift = out.forward_drift.max(dev(&got, &want_b));
        fwd.limit_diffusion_view(&view, &mut got_s);
        out.forward_diffusion = out.forward_diffusion.max(dev(&got_s, &want_s));

        rev.limit_diffusion_view(&view, &mut got_s);
        out.reverse_diffusion = out.reverse_diffusion.max(dev(&got_s, &vec![0.0; m * d]));
        rev.limit_drift_view(&view, &mut got)?;
        let skel: Vec<f64> = want_b.iter().zip(&rho).map(|(b, r)| b - 0.5 * r).collect();
        out.reverse_drift = out.reverse_drift.max(dev(&got, &skel));
    }
    Ok(out)
}
