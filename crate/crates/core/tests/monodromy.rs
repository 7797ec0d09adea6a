use std::f64::consts::PI;

use lptransport::monodromy::{discriminant_scan, monodromy};
use lptransport::PeriodicPotential;
use proptest::prelude::*;

// Closed form for V = 0: Delta(z) = 2 cos(p sqrt z), continued to z < 0.
fn free_delta(p: f64, z: f64) -> f64 {
    if z >= 0.0 {
        2.0 * (p * z.sqrt()).cos()
    } else {
        2.0 * (p * (-z).sqrt()).cosh()
    }
}

#[test]
fn free_discriminant_closed_form() {
    for p in [1.0, 2.0 * PI, 5.0] {
        let v = PeriodicPotential::zero(p).unwrap();
        for i in 0..40 {
            let z = -2.0 + 0.7 * i as f64;
            let m = monodromy(&v, z).unwrap();
            let exact = free_delta(p, z);
            assert!((m.discriminant - exact).abs() < 1e-9 * exact.abs().max(1.0), "p {p} z {z}");
            // d/dz 2cos(p sqrt z) = -p sin(p sqrt z) / sqrt z
            if z > 0.1 {
                let s = z.sqrt();
                let d = -p * (p * s).sin() / s;
                assert!((m.derivative - d).abs() < 1e-8 * d.abs().max(1.0), "p {p} z {z}");
            }
        }
    }
}

#[test]
fn derivative_matches_central_difference() {
    let v = PeriodicPotential::new(2.0 * PI, vec![0.2, 1.5, -0.4]).unwrap();
    for z in [-1.0, 0.3, 2.7, 9.1] {
        let h = 1e-5;
        let fd = (monodromy(&v, z + h).unwrap().discriminant - monodromy(&v, z - h).unwrap().discriminant) / (2.0 * h);
        let m = monodromy(&v, z).unwrap();
        assert!((m.derivative - fd).abs() < 1e-6 * fd.abs().max(1.0), "z {z}: {} vs {fd}", m.derivative);
    }
}

#[test]
fn scan_rejects_unsorted_grid() {
    let v = PeriodicPotential::mathieu();
    assert!(discriminant_scan(&v, &[1.0, 0.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wronskian_is_one(
        period in 1.0f64..8.0,
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..4),
        z in -3.0f64..30.0,
    ) {
        let v = PeriodicPotential::new(period, coeffs).unwrap();
        let m = monodromy(&v, z).unwrap();
        prop_assert!(m.det_residual < 1e-10, "det residual {}", m.det_residual);
    }

    #[test]
    fn constant_shift_moves_energy(c in -3.0f64..3.0, z in -1.0f64..12.0) {
        let v = PeriodicPotential::new(2.0 * PI, vec![0.1, 1.0, 0.3]).unwrap();
        let w = PeriodicPotential::new(2.0 * PI, vec![0.1 + c, 1.0, 0.3]).unwrap();
        let a = monodromy(&v, z).unwrap().discriminant;
        let b = monodromy(&w, z + c).unwrap().discriminant;
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }
}
