//! One-period transfer matrix of `-u'' + V u = z u` and the Hill
//! discriminant.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};
use crate::potential::PeriodicPotential;

/// Monodromy matrix `M(z) = [[u1, u2], [u1', u2']]` at `x = p` together with
/// the discriminant and its energy derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyResult {
    pub energy: f64,
    pub u1: f64,
    pub u2: f64,
    pub du1: f64,
    pub du2: f64,
    pub discriminant: f64,
    pub derivative: f64,
    /// `|det M - 1|` relative to `max(1, |u1 u2'| + |u2 u1'|)`.
    pub det_residual: f64,
}

impl MonodromyResult {
    pub fn det(&self) -> f64 {
        self.u1 * self.du2 - self.u2 * self.du1
    }
}

/// Integration controls; the defaults are the ones every downstream
/// tolerance is calibrated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyOptions {
    pub tolerance: Tolerance,
    /// Steps per period at unit oscillation scale; the cap is
    /// `p / (steps_per_period * (1 + sqrt(|z| + R)))`.
    pub steps_per_period: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance {
                abs: 1e-14,
                rel: 1e-13,
            },
            steps_per_period: 32.0,
        }
    }
}

pub fn monodromy(potential: &PeriodicPotential, z: f64) -> Result<MonodromyResult> {
    monodromy_with(potential, z, &MonodromyOptions::default())
}

pub fn monodromy_with(
    potential: &PeriodicPotential,
    z: f64,
    opts: &MonodromyOptions,
) -> Result<MonodromyResult> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("energy must be finite, got {z}")));
    }
    let p = potential.period();
    let r = potential.sup_bound();
    let max_step = p / (opts.steps_per_period * (1.0 + (z.abs() + r).sqrt()));

    // Neumann column, Dirichlet column, then their z-derivatives.
    let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let rhs = |x: f64, y: &[f64; 8], d: &mut [f64; 8]| {
        let q = potential.eval(x) - z;
        d[0] = y[1];
        d[1] = q * y[0];
        d[2] = y[3];
        d[3] = q * y[2];
        d[4] = y[5];
        d[5] = q * y[4] - y[0];
        d[6] = y[7];
        d[7] = q * y[6] - y[2];
    };
    let (y, _) = ode::integrate(rhs, 0.0, p, y0, max_step, opts.tolerance)?;

    let (u1, du1, u2, du2) = (y[0], y[1], y[2], y[3]);
    let det = u1 * du2 - u2 * du1;
    let scale = (u1 * du2).abs() + (u2 * du1).abs();
    Ok(MonodromyResult {
        energy: z,
        u1,
        u2,
        du1,
        du2,
        discriminant: u1 + du2,
        derivative: y[4] + y[7],
        det_residual: (det - 1.0).abs() / scale.max(1.0),
    })
}

/// Evaluates the monodromy on a strictly increasing energy grid.
pub fn discriminant_scan(
    potential: &PeriodicPotential,
    grid: &[f64],
) -> Result<Vec<MonodromyResult>> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "energy grid must be strictly increasing".into(),
        ));
    }
    grid.par_iter().map(|&z| monodromy(potential, z)).collect()
}

pub fn write_csv<W: Write>(mut out: W, rows: &[MonodromyResult]) -> io::Result<()> {
    writeln!(out, "z,discriminant,derivative,det_residual")?;
    for r in rows {
        writeln!(
            out,
            "{:.11e},{:.11e},{:.11e},{:.11e}",
            r.energy, r.discriminant, r.derivative, r.det_residual
        )?;
    }
    Ok(())
}
