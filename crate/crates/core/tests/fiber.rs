use std::f64::consts::PI;

use lptransport::bands::BandStructure;
use lptransport::evolve::momentum;
use lptransport::fiber::{apply_q, fiber_eigensystem, floquet, inverse_floquet, m1_norm, zone_momenta};
use lptransport::{Gaussian, PeriodicPotential, WavePacket};
use num_complex::Complex64;
use proptest::prelude::*;

fn packet(center: f64, width: f64, xi: f64, cells: usize, m: usize) -> WavePacket {
    let g = Gaussian {
        center,
        width,
        wavenumber: xi,
    };
    WavePacket::gaussian(&g, 2.0 * PI, cells, m, 0.5).unwrap()
}

// psi(x - p) on the twisted box.
fn translate_one_cell(psi: &WavePacket) -> WavePacket {
    let m = psi.samples_per_cell();
    let n = psi.len();
    let a = psi.amplitudes();
    let wrap = Complex64::from_polar(1.0, -2.0 * PI * psi.twist());
    let out = (0..n)
        .map(|i| if i >= m { a[i - m] } else { a[n - m + i] * wrap })
        .collect();
    psi.with_amplitudes(out).unwrap()
}

#[test]
fn translation_multiplies_fibers_by_phase() {
    let psi = packet(0.7, 2.0, 0.4, 12, 16);
    let shifted = translate_one_cell(&psi);
    let a = floquet(&psi, 2.0 * PI).unwrap();
    let b = floquet(&shifted, 2.0 * PI).unwrap();
    for j in 0..a.cells {
        let phase = Complex64::from_polar(1.0, -a.kgrid[j] * 2.0 * PI);
        for (x, y) in a.row(j).iter().zip(b.row(j)) {
            assert!((x * phase - y).norm() < 1e-12);
        }
    }
}

#[test]
fn q_commutes_with_lattice_translation() {
    let v = PeriodicPotential::mathieu();
    let psi = packet(0.0, 2.0, 0.5, 24, 16);
    let q_then_t = translate_one_cell(&apply_q(&v, &psi, None).unwrap().packet);
    let t_then_q = apply_q(&v, &translate_one_cell(&psi), None).unwrap().packet;
    assert!(q_then_t.distance(&t_then_q).unwrap() < 1e-10);
}

#[test]
fn bloch_mode_is_a_q_eigenvector() {
    let v = PeriodicPotential::mathieu();
    let (cells, m) = (8, 64);
    let ks = zone_momenta(cells, 2.0 * PI, 0.5);
    let grid = packet(0.0, 1.0, 0.0, cells, m);
    for j in [1, 3] {
        let k = ks[j];
        let es = fiber_eigensystem(&v, k, 40).unwrap();
        for n in 0..2 {
            let c = es.eigenvectors.column(n);
            let mut psi = WavePacket::from_fn(grid.start(), 2.0 * PI, cells, m, 0.5, grid.origin(), |x| {
                (0..c.len())
                    .map(|i| {
                        let g = i as f64 - 40.0;
                        Complex64::from_polar(c[i], (k + g) * x)
                    })
                    .sum()
            })
            .unwrap();
            psi.normalize().unwrap();
            let q = apply_q(&v, &psi, Some(40)).unwrap();
            let expect = psi.scaled(Complex64::new(es.velocities[n], 0.0));
            assert!(q.packet.distance(&expect).unwrap() < 1e-9, "j {j} n {n}");
            // Against the discriminant route.
            let b = BandStructure::new(&v, 10.0).unwrap().band_point(n + 1, k).unwrap();
            assert!((b.velocity - es.velocities[n]).abs() < 1e-8);
        }
    }
}

#[test]
fn free_q_is_twice_momentum() {
    let v = PeriodicPotential::zero(2.0 * PI).unwrap();
    let psi = packet(1.0, 1.5, -0.8, 16, 16);
    let q = apply_q(&v, &psi, None).unwrap().packet;
    let d = momentum(&psi).scaled(Complex64::new(2.0, 0.0));
    assert!(q.distance(&d).unwrap() < 1e-10);
}

#[test]
fn q_converges_in_cutoff_and_is_bounded() {
    let v = PeriodicPotential::mathieu();
    let psi = packet(0.0, 2.0, 1.0, 16, 32);
    let a = apply_q(&v, &psi, Some(64)).unwrap();
    let b = apply_q(&v, &psi, Some(96)).unwrap();
    assert!(a.packet.distance(&b.packet).unwrap() < 1e-8);
    let speed = a.occupied_speed(0.0);
    assert!(a.packet.norm() <= speed * psi.norm() * (1.0 + 1e-12));
    assert!((a.band_weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn fiber_energies_match_discriminant() {
    for v in [PeriodicPotential::zero(2.0 * PI).unwrap(), PeriodicPotential::mathieu()] {
        let s = BandStructure::new(&v, 30.0).unwrap();
        for k in [-0.37, 0.0, 0.21, 0.5] {
            let es = fiber_eigensystem(&v, k, 48).unwrap();
            for n in 1..=s.bands() {
                let e = s.band_point(n, k).unwrap().energy;
                assert!((es.eigenvalues[n - 1] - e).abs() <= 1e-7 * e.abs().max(1.0), "n {n} k {k}");
            }
        }
    }
}

#[test]
fn m1_within_relative_bound() {
    for r in [1.0, 2.0, 5.0] {
        let v = PeriodicPotential::cosine(2.0 * PI, 1, r).unwrap();
        for k in [-0.5, -0.1, 0.3] {
            let n = m1_norm(&v, k, r, 24).unwrap();
            assert!(n * n <= 1.0 / r + 16.0, "R {r} k {k}: {n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn floquet_is_unitary_and_linear(
        c in -3.0f64..3.0,
        w in 0.8f64..3.0,
        xi in -2.0f64..2.0,
        s in -2.0f64..2.0,
    ) {
        let a = packet(c, w, xi, 10, 16);
        let b = WavePacket::from_fn(a.start(), 2.0 * PI, 10, 16, 0.5, a.origin(), |x| {
            Complex64::from_polar((-(x + c) * (x + c) / 2.0).exp(), -xi * x)
        })
        .unwrap();
        let fa = floquet(&a, 2.0 * PI).unwrap();
        prop_assert!((fa.norm_sqr() - a.norm_sqr()).abs() < 1e-12);
        let back = inverse_floquet(&fa).unwrap();
        prop_assert!(back.distance(&a).unwrap() < 1e-12);
        let comb = a.axpy(Complex64::new(s, 0.5), &b).unwrap();
        let fc = floquet(&comb, 2.0 * PI).unwrap();
        let fb = floquet(&b, 2.0 * PI).unwrap();
        for j in 0..fc.cells {
            for ((x, y), z) in fa.row(j).iter().zip(fb.row(j)).zip(fc.row(j)) {
                prop_assert!((x + Complex64::new(s, 0.5) * y - z).norm() < 1e-12);
            }
        }
    }
}
