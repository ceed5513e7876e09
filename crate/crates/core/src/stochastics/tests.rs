use std::sync::Arc;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::functionals::{Constant, Coef, Nonlinearity, Pointwise, RoleAssignment};
use crate::solvers::{euler_sde, sequence_sde, InitialSegment, SdeModel};

fn grid(cells: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(1.0, 0.0, cells).unwrap())
}

fn exec() -> Executor {
    Executor::from_workers(None)
}

#[test]
fn kc_constant_examples() {
    let k = kc_constant(0.0, 4.0, 1.0).unwrap();
    assert_abs_diff_eq!(k, 32.0 * (2f64.powf(0.25) - 1.0).powi(-4), epsilon = 1e-9);
    assert!((k - 2.497e4).abs() < 5.0, "{k}");
    assert!(kc_constant(0.1, 4.0, 1.0).unwrap() > k);
    assert!(kc_constant(0.25 - 1e-6, 4.0, 1.0).unwrap() > 1e20);
    assert!(kc_constant(0.25, 4.0, 1.0).is_err());
    assert!(kc_constant(0.0, 0.5, 1.0).is_err());
    // strictly increasing and above 2^p
    let mut last = 16.0;
    for i in 0..20 {
        let v = kc_constant(i as f64 * 0.012, 4.0, 1.0).unwrap();
        assert!(v > last);
        last = v;
    }
}

#[test]
fn kc_check_brownian_and_deterministic() {
    let g = grid(256);
    let bm = |g: &Arc<TimeGrid>, s: &RngSpec| Ok(sample_brownian(g, 1, s));
    for (p, q, c0, alpha) in [(4.0, 1.0, 3.0, 0.0), (4.0, 1.0, 3.0, 0.2), (6.0, 2.0, 15.0, 0.25)] {
        let row = kc_check(bm, &g, KcParams { c0, p, q, alpha }, 300, 1, &exec()).unwrap();
        assert!(row.pass, "{row:?}");
    }
    let flat = |g: &Arc<TimeGrid>, _: &RngSpec| Ok(GridPath::constant(g.clone(), &[2.0]));
    let row = kc_check(flat, &g, KcParams { c0: 1.0, p: 4.0, q: 1.0, alpha: 0.1 }, 10, 1, &exec()).unwrap();
    assert_eq!(row.estimate, 0.0);
    assert!(row.pass);
    let line = |g: &Arc<TimeGrid>, _: &RngSpec| GridPath::scalar_fn(g.clone(), |t| t);
    let row = kc_check(line, &g, KcParams { c0: 1.0, p: 2.0, q: 1.0, alpha: 0.4 }, 4, 1, &exec()).unwrap();
    assert_abs_diff_eq!(row.estimate, 1.0, epsilon = 1e-12);
    assert!(row.pass && row.bound > 4.0);
}

#[test]
fn brownian_sampling_contract() {
    let g = grid(64);
    let a = sample_brownian(&g, 2, &RngSpec::new(9, 3));
    assert_eq!(a, sample_brownian(&g, 2, &RngSpec::new(9, 3)));
    assert_ne!(a, sample_brownian(&g, 2, &RngSpec::new(9, 4)));
    assert_eq!(a.at(0), &[0.0, 0.0]);
    let var = mc_mean(&exec(), 10_000, 5, |s| Ok(sample_brownian(&g, 1, s).at(64)[0].powi(2))).unwrap();
    assert!(var.covers(1.0, 3.0), "{var:?}");
    // E|W_s − W_t|^4 = 3|s−t|^2 with |s−t| = 0.25
    let m4 = mc_mean(&exec(), 10_000, 6, |s| {
        let w = sample_brownian(&g, 1, s);
        Ok((w.at(40)[0] - w.at(24)[0]).powi(4))
    })
    .unwrap();
    assert!(m4.covers(3.0 * 0.0625, 3.0), "{m4:?}");
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let g = grid(32);
    let f = |s: &RngSpec| Ok(sample_brownian(&g, 1, s).at(32)[0].exp());
    let a = mc_mean(&Executor::Sequential, 500, 11, f).unwrap();
    for workers in [2, 3, 8] {
        let b = mc_mean(&Executor::from_workers(Some(workers)), 500, 11, f).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn proportion_intervals() {
    let e = McEstimate::proportion(0, 2000);
    assert_eq!(e.mean, 0.0);
    assert_eq!(e.lower, 0.0);
    // two-sided: the upper end solves (1 − u)^n = 0.025
    assert_abs_diff_eq!(e.upper, 1.0 - 0.025f64.powf(1.0 / 2000.0), epsilon = 1e-9);
    let e = McEstimate::proportion(5, 100);
    assert!(e.lower > 0.0 && e.lower < 0.05 && e.upper > 0.1 && e.upper < 0.12, "{e:?}");
    let e = McEstimate::proportion(500, 1000);
    assert_abs_diff_eq!(e.ci_half_width, 1.96 * (0.25f64 * 1000.0 / 999.0 / 1000.0).sqrt(), epsilon = 1e-15);
    let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
    assert_abs_diff_eq!(e.variance, 5.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(e.ci_half_width, 1.96 * (e.variance / 4.0).sqrt(), epsilon = 1e-15);
}

#[test]
fn interp_identity_examples() {
    let g = grid(64);
    let p = Partition::uniform_on(&g, 8).unwrap();
    let w = sample_brownian(&g, 2, &RngSpec::new(1, 0));
    let ones = vec![1.0; 9];
    let pts = p.points().to_vec();
    for i in 1..8 {
        assert!(interp_identity_check(&p, &ones, &w, pts[i], pts[i + 1]).unwrap() < 1e-15);
    }
    assert_eq!(interp_identity_check(&p, &ones, &w, 0.5, 0.5).unwrap(), 0.0);
    assert!(interp_identity_check(&p, &ones, &w, 0.5, 0.25).is_err());
}

#[test]
fn interp_identity_holds_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let g = grid(256);
        let cells = [4, 8, 16, 32][case % 4];
        let p = if case % 3 == 0 {
            Partition::geometric_on(&g, cells, 1.05).unwrap()
        } else {
            Partition::uniform_on(&g, cells).unwrap()
        };
        let w = sample_brownian(&g, 1 + case % 2, &RngSpec::new(3, case as u64));
        let x: Vec<f64> = (0..=p.cells()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = rng.random_range(0..256);
        let b = rng.random_range(a..=256);
        let res = interp_identity_check(&p, &x, &w, g.points()[a], g.points()[b]).unwrap();
        assert!(res <= 1e-12, "case {case}: {res}");
    }
}

#[test]
fn interp_moment_examples() {
    let g = grid(128);
    let p = Partition::uniform_on(&g, 16).unwrap();
    let pts = p.points().to_vec();
    let row = interp_moment_check(&p, &g, 2, (pts[3], pts[4]), 2.0, 1.0, 4000, 1, &exec()).unwrap();
    assert_abs_diff_eq!(row.bound, 2.0, epsilon = 1e-12);
    assert!((row.estimate - 2.0).abs() <= 3.0 * row.ci, "{row:?}");
    assert!(row.pass);
    let row = interp_moment_check(&p, &g, 1, (0.0, pts[1]), 2.0, 1.0, 50, 1, &exec()).unwrap();
    assert_eq!(row.estimate, 0.0);
    for cells in [4, 8, 32, 64] {
        let p = Partition::uniform_on(&g, cells).unwrap();
        let row = interp_moment_check(&p, &g, 1, (0.2, 0.9), 1.0, 2.0, 500, 2, &exec()).unwrap();
        assert!(row.pass, "{row:?}");
    }
}

#[test]
fn adapted_interpolation_moment_bound() {
    let g = grid(128);
    let p = Partition::uniform_on(&g, 16).unwrap();
    let idx = p.grid_indices(&g).unwrap();
    let ones = |_: &GridPath, _: usize| 1.0;
    let walk = |w: &GridPath, j: usize| 1.0 + w.at(idx[j])[0].tanh();
    for (s, t) in [(0.0, 1.0), (0.3, 0.55), (0.5, 0.5625)] {
        let row = adapted_interp_check(&p, &g, 1, (s, t), 4.0, ones, 400, 1, &exec()).unwrap();
        assert!(row.pass, "{row:?}");
        let row = adapted_interp_check(&p, &g, 1, (s, t), 2.0, walk, 400, 2, &exec()).unwrap();
        assert!(row.pass && row.estimate > 0.0, "{row:?}");
    }
}

#[test]
fn bound_constants() {
    assert_abs_diff_eq!(w_p(2.0).unwrap(), 4.0, epsilon = 1e-12);
    assert!(w_p(1.5).is_err());
    assert_abs_diff_eq!(w_hat_p(2.0, 1.0).unwrap(), 36.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gaussian_norm_moment(2.0, 3), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gaussian_norm_moment(4.0, 1), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gaussian_norm_moment(1.0, 1), (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(w_hat_pq(1.0, 2.0, 2.0, 1).unwrap(), 4.0, epsilon = 1e-12);
}

#[test]
fn doleans_weight_examples() {
    let g = grid(64);
    let p = Partition::uniform_on(&g, 16).unwrap();
    let w = sample_brownian(&g, 1, &RngSpec::new(1, 1));
    let zero = |_: f64| Mat::zeros(1, 1);
    let one = |_: usize, _: &PathView<'_>| Mat::from_rows(&[vec![1.0]]).unwrap();
    assert_eq!(doleans_weight(zero, one, &w, &p).unwrap(), 1.0);

    let f1 = |_: f64| Mat::from_rows(&[vec![1.0]]).unwrap();
    let z = doleans_weight(f1, one, &w, &p).unwrap();
    let v = 1.0f64;
    assert_abs_diff_eq!(z, (v * w.at(64)[0] - 0.5 * v * v).exp(), epsilon = 1e-12);

    let past = |i: usize, view: &PathView<'_>| {
        let mut now = [0.0];
        let mut before = [0.0];
        view.value_at(view.frozen_at(), &mut now);
        view.value_at((view.frozen_at() - 1.0 / 16.0).max(0.0), &mut before);
        let inc = if i == 0 { 0.0 } else { now[0] - before[0] };
        Mat::from_rows(&[vec![inc]]).unwrap()
    };
    let est = mc_mean(&exec(), 20_000, 7, |s| {
        let w = sample_brownian(&g, 1, s);
        doleans_weight(f1, past, &w, &p)
    })
    .unwrap();
    assert!(est.covers(1.0, 3.0), "{est:?}");
    let est = mc_mean(&exec(), 20_000, 8, |s| doleans_weight(f1, one, &sample_brownian(&g, 1, s), &p)).unwrap();
    assert!(est.covers(1.0, 3.0), "{est:?}");
}

#[test]
fn girsanov_driver_reconstructs_the_noise() {
    let g = grid(128);
    let p = Partition::uniform_on(&g, 16).unwrap();
    let w = sample_brownian(&g, 1, &RngSpec::new(4, 0));
    let lin = GridPath::scalar_fn(g.clone(), |t| 0.7 * t).unwrap();
    let sine = GridPath::scalar_fn(g.clone(), |t| (6.0 * t).sin()).unwrap();
    for h in [GridPath::zeros(g.clone(), 1), lin, sine] {
        let y = girsanov_driver(&h, &p, &w).unwrap();
        assert!(girsanov_residual(&h, &p, &w, &y).unwrap() <= 1e-12);
    }
    // h = 0 and w = L_n(w'): the driver equation is still solved exactly
    let pl = p.interpolate(&w).unwrap();
    let y = girsanov_driver(&GridPath::zeros(g.clone(), 1), &p, &pl).unwrap();
    assert!(girsanov_residual(&GridPath::zeros(g.clone(), 1), &p, &pl, &y).unwrap() <= 1e-12);
}

#[test]
fn girsanov_driver_is_causal() {
    let g = grid(128);
    let p = Partition::uniform_on(&g, 16).unwrap();
    let h = GridPath::scalar_fn(g.clone(), |t| t * t).unwrap();
    let w = sample_brownian(&g, 1, &RngSpec::new(4, 1));
    let y = girsanov_driver(&h, &p, &w).unwrap();
    let mut v = w.values().to_vec();
    v[70..].iter_mut().for_each(|e| *e += 1.0);
    let y2 = girsanov_driver(&h, &p, &GridPath::new(g.clone(), 1, v).unwrap()).unwrap();
    assert_eq!(&y.values()[..70], &y2.values()[..70]);
}

#[test]
fn girsanov_driver_turns_the_reverse_sequence_into_the_sde() {
    let g = grid(256);
    let p = Partition::uniform_on(&g, 32).unwrap();
    let sigma: Coef = Arc::new(Pointwise::new(Mat::from_rows(&[vec![0.8]]).unwrap(), Nonlinearity::Tanh));
    let b: Coef = Arc::new(Constant::new(Mat::from_rows(&[vec![0.1]]).unwrap()));
    let model = SdeModel::new(b.clone(), sigma.clone(), InitialSegment::Constant(vec![0.3])).unwrap();
    let roles = RoleAssignment::reverse(b, sigma).unwrap();
    let h = GridPath::scalar_fn(g.clone(), |t| 0.5 * (2.0 * std::f64::consts::PI * t).sin()).unwrap();
    for k in 0..5 {
        let w = sample_brownian(&g, 1, &RngSpec::new(5, k));
        let driver = girsanov_driver(&h, &p, &w).unwrap();
        let y = sequence_sde(&roles, &model.initial, &h, &p, &driver).unwrap();
        let x = euler_sde(&model, &w).unwrap();
        assert!(crate::paths::sup_norm(&y.sub(&x).unwrap()) < 1e-10);
    }
}

#[test]
fn girsanov_weight_makes_the_driver_brownian() {
    let g = grid(64);
    let p = Partition::uniform_on(&g, 8).unwrap();
    let h = GridPath::scalar_fn(g.clone(), |t| 0.5 * (2.0 * std::f64::consts::PI * t).sin()).unwrap();
    let draws = exec()
        .try_map(20_000, |i| {
            let w = sample_brownian(&g, 1, &RngSpec::new(12, i));
            let (y, z) = girsanov_weight(&h, &p, &w)?;
            Ok((z, z * y.at(64)[0], z * y.at(64)[0].powi(2)))
        })
        .unwrap();
    let col = |k: usize| {
        let v: Vec<f64> = draws.iter().map(|t| [t.0, t.1, t.2][k]).collect();
        McEstimate::from_samples(&v)
    };
    assert!(col(0).covers(1.0, 3.0), "{:?}", col(0));
    assert!(col(1).covers(0.0, 3.0), "{:?}", col(1));
    assert!(col(2).covers(1.0, 3.0), "{:?}", col(2));
}

#[test]
fn loglog_slope_recovers_powers() {
    let xs = [0.1, 0.05, 0.025, 0.0125];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
    assert_abs_diff_eq!(loglog_slope(&xs, &ys).unwrap(), 1.7, epsilon = 1e-12);
    assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
}

#[test]
fn report_csv_columns() {
    let row = ReportRow::upper_bound("x", &McEstimate::from_samples(&[1.0, 1.0]), 2.0);
    let mut buf = Vec::new();
    write_report(&mut buf, &[row]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("quantity,estimate,ci,bound,pass\nx,1.0000000000000000e0,"));
    assert!(text.trim_end().ends_with("true"));
}
