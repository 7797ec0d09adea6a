use std::f64::consts::PI;

use lptransport::evolve::{
    default_dt, evolve, heisenberg_position, momentum, moments, propagation_differences,
    quadratic_difference_constant, velocity_average,
};
use lptransport::{Gaussian, PeriodicPotential, WavePacket};
use num_complex::Complex64;
use proptest::prelude::*;

fn packet(width: f64, xi: f64, cells: usize, m: usize) -> WavePacket {
    let g = Gaussian {
        center: 0.0,
        width,
        wavenumber: xi,
    };
    WavePacket::gaussian(&g, 2.0 * PI, cells, m, 0.5).unwrap()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn free_heisenberg_position_is_linear_in_time() {
    let v = PeriodicPotential::zero(2.0 * PI).unwrap();
    let psi = packet(2.0, 1.0, 32, 16);
    let t = 5.0;
    let xh = heisenberg_position(&v, &psi, t, 0.01).unwrap();
    let expect = psi.position_mul().axpy(c(2.0 * t), &momentum(&psi)).unwrap();
    assert!(xh.distance(&expect).unwrap() < 1e-7);
}

#[test]
fn free_second_moment_closed_form() {
    // <x^2>_t = w^2 + 4 t^2 (xi^2 + 1/(4 w^2)) for a centred Gaussian.
    let v = PeriodicPotential::zero(2.0 * PI).unwrap();
    let (w, xi) = (2.0, 0.7);
    let psi = packet(w, xi, 40, 16);
    let times = [0.0, 1.0, 3.0, 8.0];
    let s = moments(&v, &psi, &times, 0.01, None).unwrap();
    for (t, m2) in times.iter().zip(&s.second) {
        let exact = w * w + 4.0 * t * t * (xi * xi + 0.25 / (w * w));
        assert!((m2 - exact).abs() < 1e-8 * exact, "t {t}: {m2} vs {exact}");
    }
    assert_eq!(s.second[0], psi.position_mul().norm_sqr());
}

#[test]
fn strang_is_second_order() {
    let v = PeriodicPotential::mathieu();
    let psi = packet(2.0, 0.5, 16, 16);
    let t = 2.0;
    let a = evolve(&v, &psi, t, 0.04).unwrap();
    let b = evolve(&v, &psi, t, 0.02).unwrap();
    let d = evolve(&v, &psi, t, 0.01).unwrap();
    let ratio = a.distance(&b).unwrap() / b.distance(&d).unwrap();
    assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
}

#[test]
fn velocity_average_of_free_motion_is_momentum() {
    let v = PeriodicPotential::zero(2.0 * PI).unwrap();
    let psi = packet(2.0, 1.0, 32, 16);
    let d = momentum(&psi);
    for t in [1e-3, 3.0] {
        let avg = velocity_average(&v, &psi, t, 0.01, None).unwrap();
        assert!(avg.distance(&d).unwrap() < 1e-10, "t {t}");
    }
}

#[test]
fn velocity_average_small_time_limit() {
    let v = PeriodicPotential::mathieu();
    let psi = packet(2.0, 1.0, 24, 16);
    let avg = velocity_average(&v, &psi, 1e-3, 1e-4, None).unwrap();
    assert!(avg.distance(&momentum(&psi)).unwrap() < 1e-3);
}

#[test]
fn integral_identity_mathieu() {
    // X_H(t) psi - X psi = 2 int_0^t D(r) psi dr, by two independent routes.
    let v = PeriodicPotential::mathieu();
    let psi = packet(4.0, 1.0, 250, 32);
    let t = 50.0;
    let dt = default_dt(&v, &psi);
    let avg = velocity_average(&v, &psi, t, dt, None).unwrap();
    let xh = heisenberg_position(&v, &psi, t, dt).unwrap();
    let lhs = xh.axpy(c(-1.0), &psi.position_mul()).unwrap();
    let res = lhs.distance(&avg.scaled(c(2.0 * t))).unwrap();
    assert!(res < 1e-5, "residual {res}");
}

#[test]
fn simpson_quadrature_converges_to_identity() {
    let v = PeriodicPotential::mathieu();
    let psi = packet(2.0, 0.5, 40, 16);
    let t = 4.0;
    let dt = default_dt(&v, &psi);
    let lhs = heisenberg_position(&v, &psi, t, dt)
        .unwrap()
        .axpy(c(-1.0), &psi.position_mul())
        .unwrap();
    let err = |n| {
        let avg = velocity_average(&v, &psi, t, dt, Some(n)).unwrap();
        lhs.distance(&avg.scaled(c(2.0 * t))).unwrap()
    };
    // Simpson integrates the continuum D(r); the split-step dynamics differ
    // at O(t dt^2), which sets its floor.
    let (coarse, fine) = (err(41), err(161));
    assert!(fine < coarse && fine < 1e-5, "{coarse} -> {fine}");
    assert!(velocity_average(&v, &psi, t, dt, Some(4)).is_err());
}

#[test]
fn deep_well_packet_stays_put() {
    let v = PeriodicPotential::cosine(2.0 * PI, 1, 20.0).unwrap();
    let g = Gaussian {
        center: PI,
        width: 0.4,
        wavenumber: 0.0,
    };
    let psi = WavePacket::gaussian(&g, 2.0 * PI, 16, 32, 0.5).unwrap();
    let times = [0.0, 1.0, 2.0, 5.0];
    let s = moments(&v, &psi, &times, 0.002, None).unwrap();
    assert!(s.x_norm.iter().all(|x| *x < 3.0 * s.x_norm[0]), "{:?}", s.x_norm);
}

#[test]
fn quadratic_difference_constant_is_stable_under_refinement() {
    let v1 = PeriodicPotential::mathieu();
    let v2 = PeriodicPotential::new(2.0 * PI, vec![0.0, 2.0, 0.05]).unwrap();
    let times = [0.5, 1.0, 2.0];
    let gamma = |m| {
        let psi = packet(2.0, 0.5, 24, m);
        quadratic_difference_constant(&v1, &v2, &psi, &times, 0.005).unwrap()
    };
    let (a, b) = (gamma(16), gamma(32));
    assert!(a > 0.0 && ((a - b) / b).abs() < 0.02, "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn unitary_and_reversible(a1 in -2.0f64..2.0, a2 in -1.0f64..1.0, t in 0.5f64..4.0) {
        let v = PeriodicPotential::new(2.0 * PI, vec![0.0, a1, a2]).unwrap();
        let psi = packet(1.5, 0.5, 24, 16);
        let fwd = evolve(&v, &psi, t, 0.005).unwrap();
        prop_assert!((fwd.norm() - psi.norm()).abs() < 1e-12 * t.max(1.0));
        let back = evolve(&v, &fwd, -t, 0.005).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-9);
    }

    #[test]
    fn propagation_estimate(
        a1 in -1.0f64..1.0,
        a2 in -1.0f64..1.0,
        b1 in -1.0f64..1.0,
        b2 in -1.0f64..1.0,
    ) {
        let v1 = PeriodicPotential::new(2.0 * PI, vec![0.0, a1, a2]).unwrap();
        let v2 = PeriodicPotential::new(2.0 * PI, vec![0.0, b1, b2]).unwrap();
        let psi = packet(2.0, 0.3, 48, 16);
        let dist = v1.distance_bound(&v2).unwrap();
        let times = [2.0, 8.0];
        let d = propagation_differences(&v1, &v2, &psi, &times, 0.01).unwrap();
        for (t, x) in times.iter().zip(&d) {
            prop_assert!(*x <= t * dist * psi.norm() + 1e-6, "t {t}: {x} vs {}", t * dist);
        }
    }
}
