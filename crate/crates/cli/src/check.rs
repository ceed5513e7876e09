//! Invariant suites behind `pathdep check`.

use std::fmt;
use std::sync::Arc;

use clap::ValueEnum;
use rand::Rng;

use pathdep::experiments::preset_algebra;
use pathdep::functionals::{build, vertical_jacobian, CoefSpec, Mat, Nonlinearity, PathView};
use pathdep::paths::{d_infty, holder_norm, sup_norm};
use pathdep::stochastics::{
    doleans_weight, interp_identity_check, kc_check, mc_mean, sample_brownian, KcParams, RngSpec,
};
use pathdep::{Executor, Partition, Result, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Norms,
    Interp,
    Kc,
    Martingale,
    Derivatives,
}

/// One named check with a witness describing the worst case seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    pub witness: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.witness)
    }
}

fn outcome(name: &str, pass: bool, witness: String) -> Outcome {
    Outcome {
        name: name.into(),
        pass,
        witness,
    }
}

pub fn run_suite(suite: Suite, seed: u64, exec: &Executor) -> Result<Vec<Outcome>> {
    match suite {
        Suite::Norms => norms(seed),
        Suite::Interp => interp(seed),
        Suite::Kc => kc(seed, exec),
        Suite::Martingale => martingale(seed, exec),
        Suite::Derivatives => derivatives(seed),
    }
}

fn unit_grid(cells: usize) -> Result<Arc<TimeGrid>> {
    Ok(Arc::new(TimeGrid::uniform(1.0, 0.0, cells)?))
}

fn norms(seed: u64) -> Result<Vec<Outcome>> {
    let g = unit_grid(128)?;
    let mut rng = RngSpec::new(seed, u64::MAX).rng();
    let (mut holder_gap, mut sup_gap, mut hom_err, mut d_gap, mut d_sym) = (f64::MIN, f64::MIN, 0.0f64, f64::MIN, 0.0f64);
    for k in 0..200u64 {
        let x = sample_brownian(&g, 2, &RngSpec::new(seed, 3 * k));
        let y = sample_brownian(&g, 2, &RngSpec::new(seed, 3 * k + 1)).scale(rng.random_range(0.1..3.0));
        let z = sample_brownian(&g, 2, &RngSpec::new(seed, 3 * k + 2));
        let alpha = rng.random_range(0.0..0.5);
        let sum = x.add(&y)?;
        holder_gap = holder_gap.max(holder_norm(&sum, alpha)? - holder_norm(&x, alpha)? - holder_norm(&y, alpha)?);
        sup_gap = sup_gap.max(sup_norm(&sum) - sup_norm(&x) - sup_norm(&y));
        let c = rng.random_range(-4.0..4.0);
        let hx = holder_norm(&x, alpha)?;
        hom_err = hom_err.max((holder_norm(&x.scale(c), alpha)? - c.abs() * hx).abs() / hx.max(1.0));
        let ts: Vec<f64> = (0..3).map(|_| g.points()[rng.random_range(0..=128)]).collect();
        let dxy = d_infty(ts[0], &x, ts[1], &y)?;
        d_sym = d_sym.max((dxy - d_infty(ts[1], &y, ts[0], &x)?).abs());
        d_gap = d_gap.max(dxy - d_infty(ts[0], &x, ts[2], &z)? - d_infty(ts[2], &z, ts[1], &y)?);
    }
    let tol = 1e-12;
    Ok(vec![
        outcome("holder triangle", holder_gap <= tol, format!("max excess {holder_gap:.3e}")),
        outcome("sup triangle", sup_gap <= tol, format!("max excess {sup_gap:.3e}")),
        outcome("holder homogeneity", hom_err <= 1e-12, format!("max relative error {hom_err:.3e}")),
        outcome("d_infty symmetry", d_sym <= tol, format!("max asymmetry {d_sym:.3e}")),
        outcome("d_infty triangle", d_gap <= tol, format!("max excess {d_gap:.3e}")),
    ])
}

fn interp(seed: u64) -> Result<Vec<Outcome>> {
    let g = unit_grid(256)?;
    let mut rng = RngSpec::new(seed, u64::MAX).rng();
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let cells = [4, 8, 16, 32][case as usize % 4];
        let p = if case % 3 == 0 {
            Partition::geometric_on(&g, cells, 1.05)?
        } else {
            Partition::uniform_on(&g, cells)?
        };
        let w = sample_brownian(&g, 1 + case as usize % 2, &RngSpec::new(seed, case));
        let x: Vec<f64> = (0..=p.cells()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = rng.random_range(0..256);
        let b = rng.random_range(a..=256);
        worst = worst.max(interp_identity_check(&p, &x, &w, g.points()[a], g.points()[b])?);
    }
    Ok(vec![outcome(
        "interpolation identity (100 cases)",
        worst <= 1e-12,
        format!("max residual {worst:.3e}"),
    )])
}

fn kc(seed: u64, exec: &Executor) -> Result<Vec<Outcome>> {
    let g = unit_grid(1024)?;
    [0.0, 0.2]
        .into_iter()
        .map(|alpha| {
            let params = KcParams {
                c0: 3.0,
                p: 4.0,
                q: 1.0,
                alpha,
            };
            let row = kc_check(|g, s| Ok(sample_brownian(g, 1, s)), &g, params, 2000, seed, exec)?;
            Ok(outcome(
                &row.quantity,
                row.pass,
                format!("estimate {:.4e} + ci {:.2e} vs bound {:.4e}", row.estimate, row.ci, row.bound),
            ))
        })
        .collect()
}

fn martingale(seed: u64, exec: &Executor) -> Result<Vec<Outcome>> {
    let g = unit_grid(64)?;
    let p = Partition::uniform_on(&g, 16)?;
    let one = |_: f64| Mat::from_rows(&[vec![1.0]]).expect("1x1");
    let step = 1.0 / 16.0;
    let past = |i: usize, view: &PathView<'_>| {
        let (mut now, mut before) = ([0.0], [0.0]);
        view.value_at(view.frozen_at(), &mut now);
        view.value_at((view.frozen_at() - step).max(0.0), &mut before);
        let inc = if i == 0 { 0.0 } else { now[0] - before[0] };
        Mat::from_rows(&[vec![inc]]).expect("1x1")
    };
    let est = mc_mean(exec, 100_000, seed, |s| doleans_weight(one, past, &sample_brownian(&g, 1, s), &p))?;
    Ok(vec![outcome(
        "E[Z_T] = 1",
        est.covers(1.0, 3.0),
        format!("mean {:.5} ± {:.5} (n = {})", est.mean, est.ci_half_width, est.n_samples),
    )])
}

fn derivative_specs() -> Vec<(&'static str, CoefSpec)> {
    let m2 = vec![vec![0.7, -0.2], vec![0.3, 0.5]];
    vec![
        (
            "pointwise tanh",
            CoefSpec::Pointwise {
                g: Nonlinearity::Tanh,
                scale: m2.clone(),
            },
        ),
        (
            "pointwise sin",
            CoefSpec::Pointwise {
                g: Nonlinearity::Sin,
                scale: m2.clone(),
            },
        ),
        (
            "integral",
            CoefSpec::Integral {
                scale: vec![vec![0.5], vec![-1.0]],
                outer: Nonlinearity::Sin,
                inner: Nonlinearity::Tanh,
                component: 1,
            },
        ),
        (
            "delayed",
            CoefSpec::Delayed {
                scale: m2.clone(),
                g: Nonlinearity::Cos,
                lag: 0.2,
                component: 0,
            },
        ),
        (
            "sum",
            CoefSpec::Sum {
                terms: vec![
                    CoefSpec::Pointwise {
                        g: Nonlinearity::Sin,
                        scale: m2.clone(),
                    },
                    CoefSpec::Scaled {
                        factor: -0.5,
                        of: Box::new(CoefSpec::Constant { value: m2 }),
                    },
                ],
            },
        ),
    ]
}

fn derivatives(seed: u64) -> Result<Vec<Outcome>> {
    let g = unit_grid(64)?;
    let mut rng = RngSpec::new(seed, u64::MAX).rng();
    let mut out = Vec::new();
    for (name, spec) in derivative_specs() {
        let f = build(&spec, 1.0)?;
        let len = f.shape().0 * f.shape().1;
        let mut worst = 0.0f64;
        for k in 0..50u64 {
            let x = sample_brownian(&g, 2, &RngSpec::new(seed, k));
            let i = rng.random_range(0..64);
            let view = PathView::at_index(g.points(), 2, x.values(), i);
            let mut jac = vec![0.0; len * 2];
            vertical_jacobian(f.as_ref(), &view, &mut jac)?;
            let eps = 1e-5 * view.sup_norm().max(1.0);
            let (mut plus, mut minus) = (vec![0.0; len], vec![0.0; len]);
            for j in 0..2 {
                f.eval_into(&view.bumped(j, eps), &mut plus);
                f.eval_into(&view.bumped(j, -eps), &mut minus);
                for e in 0..len {
                    let fd = (plus[e] - minus[e]) / (2.0 * eps);
                    worst = worst.max((fd - jac[e * 2 + j]).abs() / jac[e * 2 + j].abs().max(1.0));
                }
            }
        }
        out.push(outcome(
            &format!("vertical derivative vs FD: {name}"),
            worst <= 1e-6,
            format!("max relative error {worst:.3e}"),
        ));
    }
    let b = build(
        &CoefSpec::Pointwise {
            g: Nonlinearity::Sin,
            scale: vec![vec![0.5]],
        },
        1.0,
    )?;
    let sigma = build(
        &CoefSpec::Pointwise {
            g: Nonlinearity::Tanh,
            scale: vec![vec![0.8]],
        },
        1.0,
    )?;
    let alg = preset_algebra(&b, &sigma, &g, 100, seed)?;
    out.push(outcome(
        "preset algebra R = ±ρ/2",
        alg.max() <= 1e-10,
        format!("max deviation {:.3e} over {} samples", alg.max(), alg.samples),
    ));
    Ok(out)
}
