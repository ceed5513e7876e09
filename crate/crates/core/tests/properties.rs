use std::sync::Arc;

use pathdep::paths::{d_infty, holder_norm, holder_seminorm, stop, sup_norm};
use pathdep::{GridPath, Partition, TimeGrid};
use proptest::prelude::*;

fn grid(cells: usize, delay_cells: usize) -> Arc<TimeGrid> {
    let r = delay_cells as f64 / cells as f64;
    Arc::new(TimeGrid::uniform(1.0, r, cells).unwrap())
}

/// A random walk on a uniform grid of `cells` cells over `[0, 1]`.
fn walk(cells: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, cells).prop_map(|steps| {
        let mut v = vec![0.0];
        for s in steps {
            v.push(v.last().unwrap() + s * 0.2);
        }
        v
    })
}

fn path(g: &Arc<TimeGrid>, values: Vec<f64>) -> GridPath {
    GridPath::new(g.clone(), 1, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holder_norm_is_a_norm(a in walk(64), b in walk(64), alpha in 0.0..0.5f64, c in -5.0..5.0f64) {
        let g = Arc::new(TimeGrid::uniform(1.0, 0.25, 64).unwrap());
        let (x, y) = (path(&g, a), path(&g, b));
        let nx = holder_norm(&x, alpha).unwrap();
        let ny = holder_norm(&y, alpha).unwrap();
        prop_assert!(holder_norm(&x.add(&y).unwrap(), alpha).unwrap() <= nx + ny + 1e-12);
        prop_assert!((holder_norm(&x.scale(c), alpha).unwrap() - c.abs() * nx).abs() <= 1e-12 * nx.max(1.0));
        prop_assert!(nx >= 0.0);
    }

    #[test]
    fn holder_seminorm_ignores_shifts_and_grows_in_alpha(a in walk(64), shift in -3.0..3.0f64) {
        let g = grid(64, 0);
        let x = path(&g, a);
        let s = holder_seminorm(&x, 0.3).unwrap();
        prop_assert!((holder_seminorm(&x.shift(&[shift]), 0.3).unwrap() - s).abs() <= 1e-12 * s.max(1.0));
        // on [0, 1], |t − s|^α shrinks as α grows
        prop_assert!(holder_seminorm(&x, 0.1).unwrap() <= s + 1e-12);
    }

    #[test]
    fn stopping_is_idempotent_and_freezes(a in walk(64), k in 0usize..=64) {
        let g = grid(64, 0);
        let x = path(&g, a);
        let t = g.points()[k];
        let s = stop(&x, t).unwrap();
        let again = stop(&s, t).unwrap();
        prop_assert_eq!(again.values(), s.values());
        for i in 0..=64 {
            let want = if i <= k { x.at(i)[0] } else { x.at(k)[0] };
            prop_assert_eq!(s.at(i)[0], want);
        }
        prop_assert!(sup_norm(&s) <= sup_norm(&x));
    }

    #[test]
    fn d_infty_is_a_pseudometric(a in walk(32), b in walk(32), i in 0usize..=32, j in 0usize..=32) {
        let g = grid(32, 0);
        let (x, y) = (path(&g, a), path(&g, b));
        let (t, s) = (g.points()[i], g.points()[j]);
        prop_assert_eq!(d_infty(t, &x, t, &x).unwrap(), 0.0);
        prop_assert!((d_infty(t, &x, s, &y).unwrap() - d_infty(s, &y, t, &x).unwrap()).abs() <= 1e-15);
        prop_assert!(d_infty(t, &x, s, &y).unwrap() >= (t - s).abs().sqrt() - 1e-15);
    }

    #[test]
    fn uniform_partitions_are_balanced(k in 0u32..5, delay_cells in 0usize..64) {
        let cells = 1usize << k;
        let g = grid(128, delay_cells);
        if let Ok(p) = Partition::uniform_on(&g, cells) {
            prop_assert_eq!(p.cells(), cells);
            prop_assert!((p.balance_constant() - 1.0).abs() <= 1e-9);
            prop_assert!((p.mesh() * cells as f64 - (1.0 - g.delay())).abs() <= 1e-12);
            let idx = p.grid_indices(&g).unwrap();
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(idx[0], g.delay_index());
            prop_assert_eq!(*idx.last().unwrap(), g.last_index());
        }
    }

    #[test]
    fn geometric_partitions_respect_the_grid(cells in 2usize..16, ratio in 1.0..1.3f64) {
        let g = grid(256, 32);
        let p = Partition::geometric_on(&g, cells, ratio).unwrap();
        p.grid_indices(&g).unwrap();
        prop_assert!(p.min_cell() > 0.0);
        prop_assert!(p.balance_constant() >= 1.0);
        for s in [0.2, 0.5, 0.77, 0.999] {
            let gamma = p.gamma(s).unwrap();
            prop_assert!(gamma >= 0.0 && gamma <= p.balance_constant() + 1e-12);
        }
    }

    #[test]
    fn interpolation_is_adapted_and_lagged(a in walk(128), b in walk(128), cut in 1usize..8) {
        let g = grid(128, 0);
        let p = Partition::uniform_on(&g, 8).unwrap();
        let idx = p.grid_indices(&g).unwrap();
        let x = path(&g, a.clone());
        // agrees with x up to t_cut, arbitrary afterwards
        let mixed: Vec<f64> = (0..=128).map(|i| if i <= idx[cut] { a[i] } else { b[i] }).collect();
        let y = path(&g, mixed);
        let (lx, ly) = (p.interpolate(&x).unwrap(), p.interpolate(&y).unwrap());
        // L_n on [0, t_{cut+1}] only reads x on [0, t_cut]
        for i in 0..=idx[cut + 1] {
            prop_assert_eq!(lx.at(i)[0], ly.at(i)[0]);
        }
        for i in 1..8 {
            prop_assert!((lx.at(idx[i + 1])[0] - x.at(idx[i])[0]).abs() <= 1e-12);
        }
        prop_assert_eq!(lx.at(idx[1])[0], x.at(0)[0]);
    }

    #[test]
    fn slope_matches_interpolant(a in walk(64), i in 0usize..8) {
        let g = grid(64, 0);
        let p = Partition::uniform_on(&g, 8).unwrap();
        let idx = p.grid_indices(&g).unwrap();
        let x = path(&g, a);
        let l = p.interpolate(&x).unwrap();
        let mut slope = [0.0];
        p.interpolated_slope(&x, &idx, i, &mut slope);
        let chord = (l.at(idx[i + 1])[0] - l.at(idx[i])[0]) / p.delta(i + 1);
        prop_assert!((slope[0] - chord).abs() <= 1e-9);
    }
}
