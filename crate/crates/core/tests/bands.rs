use std::f64::consts::PI;

use lptransport::bands::{band_edges, zone_grid, BandStructure, BandTable, Parity};
use lptransport::monodromy::monodromy;
use lptransport::PeriodicPotential;
use proptest::prelude::*;

fn free_energies(p: f64, k: f64, count: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (-20i64..=20).map(|g| (k + 2.0 * PI * g as f64 / p).powi(2)).collect();
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    e
}

#[test]
fn free_bands_match_closed_form() {
    let p = 2.0 * PI;
    let v = PeriodicPotential::zero(p).unwrap();
    let s = BandStructure::new(&v, 30.0).unwrap();
    assert!(s.bands() >= 5);
    for k in [-0.45, -0.2, 0.0, 0.1, 0.33, 0.5] {
        let exact = free_energies(p, k, s.bands());
        for n in 1..=s.bands() {
            let b = s.band_point(n, k).unwrap();
            assert!((b.energy - exact[n - 1]).abs() < 1e-9 * exact[n - 1].max(1.0), "n {n} k {k}");
        }
    }
    // All gaps of the free operator are closed.
    assert!(s.edges().iter().skip(1).take(s.edges().len() - 2).all(|e| e.closed));
}

#[test]
fn mathieu_edges_alternate_parity() {
    let v = PeriodicPotential::mathieu();
    let edges = band_edges(&v, 20.0).unwrap();
    assert_eq!(edges[0].parity, Parity::Periodic);
    for (i, e) in edges.iter().enumerate() {
        let d = monodromy(&v, e.energy).unwrap().discriminant;
        assert!((d - e.parity.level()).abs() < 1e-9, "edge {i}: Delta = {d}");
        if i > 0 {
            assert!(e.energy >= edges[i - 1].energy);
        }
    }
}

#[test]
fn velocity_matches_finite_difference() {
    let v = PeriodicPotential::new(2.0 * PI, vec![0.0, 1.2, 0.4]).unwrap();
    let s = BandStructure::new(&v, 25.0).unwrap();
    let h = 1e-6;
    for n in 1..=s.bands().min(6) {
        for k in [-0.41, -0.17, 0.08, 0.29] {
            let ep = s.band_point(n, k + h).unwrap().energy;
            let em = s.band_point(n, k - h).unwrap().energy;
            let fd = (ep - em) / (2.0 * h);
            let b = s.band_point(n, k).unwrap();
            assert!((b.velocity - fd).abs() < 1e-5 * fd.abs().max(1.0), "n {n} k {k}: {} vs {fd}", b.velocity);
        }
    }
}

#[test]
fn table_bands_are_ordered_and_symmetric() {
    let v = PeriodicPotential::mathieu();
    let t = BandTable::new(&v, 16, 30.0).unwrap();
    let k = &t.kgrid;
    for n in 0..t.bands() {
        for j in 0..k.len() {
            if n + 1 < t.bands() {
                assert!(t.energies[n][j] <= t.energies[n + 1][j] + 1e-12);
            }
            if let Some(m) = k.iter().position(|x| k[j] != 0.0 && (x + k[j]).abs() < 1e-12) {
                assert!((t.energies[n][j] - t.energies[n][m]).abs() < 1e-10);
                assert!((t.velocities[n][j] + t.velocities[n][m]).abs() < 1e-8);
            }
        }
    }
    assert!(t.velocity_identity_residual() < 1e-8);
    assert!(t.c2_hat > 0.0);
}

#[test]
fn bad_set_agrees_with_grid_scan() {
    // Oracle: indicator of "some adjacent pair within eps" on a fine grid
    // of [0, pi/p], doubled by symmetry.
    let p = 2.0 * PI;
    let v = PeriodicPotential::cosine(p, 1, 0.6).unwrap();
    let t = BandTable::new(&v, 8, 6.0).unwrap();
    let s = t.structure();
    let zone = PI / p;
    let samples = 400;
    for eps in [0.05, 0.2] {
        let mut count = 0;
        for i in 0..samples {
            let k = (i as f64 + 0.5) / samples as f64 * zone;
            let e: Vec<f64> = (1..=t.bands()).map(|n| s.band_point(n, k).unwrap().energy).collect();
            if e.windows(2).any(|w| w[1] - w[0] <= eps) {
                count += 1;
            }
        }
        let oracle = 2.0 * count as f64 / samples as f64 * zone;
        let b = t.bad_set_measure(eps).unwrap();
        assert!((b.measure - oracle).abs() <= 4.0 * zone / samples as f64, "eps {eps}: {} vs {oracle}", b.measure);
        assert!(b.edge_cover >= b.measure - 1e-12);
    }
}

#[test]
fn zone_grid_ends_at_zone_edge() {
    let g = zone_grid(2.0, 8);
    assert_eq!(g.len(), 8);
    assert!((g[7] - PI / 2.0).abs() < 1e-15);
    assert!(g.contains(&0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn band_function_is_even_and_within_band(
        amp in 0.1f64..2.0,
        k in -0.5f64..0.5,
        n in 1usize..5,
    ) {
        let v = PeriodicPotential::cosine(2.0 * PI, 1, amp).unwrap();
        let s = BandStructure::new(&v, 30.0).unwrap();
        prop_assume!(n <= s.bands());
        let a = s.band_point(n, k).unwrap();
        let b = s.band_point(n, -k).unwrap();
        prop_assert!((a.energy - b.energy).abs() < 1e-10 * a.energy.abs().max(1.0));
        prop_assert!((a.velocity + b.velocity).abs() < 1e-7 * a.velocity.abs().max(1.0));
        let (lo, hi) = s.band_interval(n).unwrap();
        prop_assert!(a.energy >= lo.energy - 1e-10 && a.energy <= hi.energy + 1e-10);
        // Delta(E_n(k)) = 2 cos(pk).
        let d = monodromy(&v, a.energy).unwrap().discriminant;
        prop_assert!((d - 2.0 * (2.0 * PI * k).cos()).abs() < 1e-8);
    }
}
