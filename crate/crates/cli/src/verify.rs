use std::f64::consts::PI;

use lptransport::bands::{default_max_energy, BandStructure, BandTable};
use lptransport::evolve::{
    default_dt, evolve, heisenberg_position, momentum, propagation_differences, velocity_average,
};
use lptransport::fiber::{apply_q, fiber_eigensystem, floquet};
use lptransport::monodromy::discriminant_scan;
use lptransport::{Gaussian, PeriodicPotential, WavePacket};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::Failure;

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Exact identities of every module on one potential, plus the closed forms
/// when the potential is zero.
pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.potential_or_free()?;
    let p = v.period();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    let emax = cfg.max_energy.unwrap_or_else(|| default_max_energy(&v));
    let bottom = BandStructure::new(&v, 0.0_f64.min(emax))?.edges()[0].energy;
    let top = emax.max(bottom + 1.0);
    let grid: Vec<f64> = (0..200).map(|i| bottom + (top - bottom) * i as f64 / 199.0).collect();
    let scan = discriminant_scan(&v, &grid)?;
    let det = scan.iter().map(|m| (m.det() - 1.0).abs()).fold(0.0, f64::max);
    checks.push(check("wronskian", det, 1e-10));

    let mut parseval = 0.0f64;
    for _ in 0..4 {
        let g = Gaussian {
            center: rng.gen_range(-p / 2.0..p / 2.0),
            width: rng.gen_range(0.8..3.0),
            wavenumber: rng.gen_range(-2.0..2.0),
        };
        let psi = WavePacket::gaussian(&g, p, 12, 16, 0.5)?;
        let f = floquet(&psi, p)?;
        parseval = parseval.max((f.norm_sqr() - psi.norm_sqr()).abs());
    }
    checks.push(check("floquet_parseval", parseval, 1e-12));

    let table = BandTable::new(&v, cfg.kpoints, emax)?;
    checks.push(check("velocity_identity", table.velocity_identity_residual(), 1e-8));

    let mut fiber_gap = 0.0f64;
    let stride = (table.kgrid.len() / 8).max(1);
    for (j, &k) in table.kgrid.iter().enumerate().step_by(stride) {
        let es = fiber_eigensystem(&v, k, cfg.cutoff.unwrap_or(64))?;
        for n in 0..table.bands().min(es.retained()) {
            let e = table.energies[n][j];
            fiber_gap = fiber_gap.max((es.eigenvalues[n] - e).abs() / e.abs().max(1.0));
        }
    }
    checks.push(check("fiber_vs_discriminant", fiber_gap, 1e-7));

    let g = Gaussian {
        center: 0.0,
        width: 2.0,
        wavenumber: rng.gen_range(-1.0..1.0),
    };
    let psi = WavePacket::gaussian(&g, p, 48, 16, 0.5)?;
    let dt = default_dt(&v, &psi).max(0.005).min(0.01);
    let t = 2.0;
    let fwd = evolve(&v, &psi, t, dt)?;
    checks.push(check("unitarity", (fwd.norm() - psi.norm()).abs(), 1e-12));
    let back = evolve(&v, &fwd, -t, dt)?;
    checks.push(check("reversibility", back.distance(&psi)?, 1e-9));

    let mut coeffs = v.coefficients().to_vec();
    coeffs.resize(coeffs.len().max(3), 0.0);
    coeffs[1] += rng.gen_range(-0.5..0.5);
    coeffs[2] += rng.gen_range(-0.5..0.5);
    let w = PeriodicPotential::new(p, coeffs)?;
    let dist = v.distance_bound(&w)?;
    let times = [1.0, 4.0];
    let diffs = propagation_differences(&v, &w, &psi, &times, dt)?;
    let excess = times
        .iter()
        .zip(&diffs)
        .map(|(t, d)| d - t * dist * psi.norm())
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(check("propagation_estimate", excess, 1e-6));

    let avg = velocity_average(&v, &psi, t, dt, None)?;
    let xh = heisenberg_position(&v, &psi, t, dt)?;
    let ident = xh.axpy(c(-1.0), &psi.position_mul())?.distance(&avg.scaled(c(2.0 * t)))?;
    checks.push(check("velocity_integral_identity", ident, 1e-6));

    let q = apply_q(&v, &psi, cfg.cutoff)?;
    let excess = q.packet.norm() - q.occupied_speed(0.0) * psi.norm() * (1.0 + 1e-12);
    checks.push(check("q_bounded_by_band_speed", excess.max(0.0), 0.0));

    if v.is_zero() {
        let delta = scan
            .iter()
            .filter(|m| m.energy >= 0.0)
            .map(|m| (m.discriminant - 2.0 * (p * m.energy.sqrt()).cos()).abs())
            .fold(0.0, f64::max);
        checks.push(check("free_discriminant", delta, 1e-9));
        let mut band = 0.0f64;
        for (j, k) in table.kgrid.iter().enumerate() {
            let mut exact: Vec<f64> = (-40i64..=40).map(|g| (k + 2.0 * PI * g as f64 / p).powi(2)).collect();
            exact.sort_by(f64::total_cmp);
            for n in 0..table.bands() {
                band = band.max((table.energies[n][j] - exact[n]).abs() / exact[n].max(1.0));
            }
        }
        checks.push(check("free_band_energies", band, 1e-9));
        let d = momentum(&psi);
        checks.push(check("free_q_is_2d", q.packet.distance(&d.scaled(c(2.0)))?, 1e-10));
        let expect = psi.position_mul().axpy(c(2.0 * t), &d)?;
        checks.push(check("free_heisenberg", xh.distance(&expect)?, 1e-7));
    }

    let art = Artifacts::new(cfg)?;
    art.json("checks", &json!({ "period": p, "checks": checks }))?;
    for ch in &checks {
        eprintln!(
            "{:<28} {} {:.3e} (tol {:.0e})",
            ch.name,
            if ch.pass { "PASS" } else { "FAIL" },
            ch.value,
            ch.tolerance
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical("InvariantFailure", format!("failed: {}", failed.join(", "))))
    }
}
