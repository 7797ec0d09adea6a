use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::floquet::{floquet, inverse_floquet, mode_index, FloquetField};
use super::{default_cutoff, fiber_eigensystem};
use crate::bands::{default_max_energy, BandStructure};
use crate::error::{Error, Result};
use crate::evolve::WavePacket;
use crate::potential::PeriodicPotential;

/// Largest fraction of `||psi||^2` allowed outside the reliable eigenpairs.
pub const SPECTRAL_WEIGHT_TOLERANCE: f64 = 1e-10;

/// `Q_H psi` with the fiber bookkeeping needed to judge it.
#[derive(Debug, Clone, Serialize)]
pub struct QResult {
    #[serde(skip)]
    pub packet: WavePacket,
    pub cutoff: usize,
    /// Fraction of `||psi||^2` not captured by the retained eigenpairs.
    pub lost_weight: f64,
    /// Fraction of `||psi||^2` in each band.
    pub band_weights: Vec<f64>,
    /// `max_j |v_n(k_j)|` for each band.
    pub band_speeds: Vec<f64>,
}

impl QResult {
    /// Largest `|v_n(k)|` over the lowest bands holding `1 - tail` of the
    /// packet's fiber mass.
    pub fn occupied_speed(&self, tail: f64) -> f64 {
        let mut acc = 0.0;
        let mut speed = 0.0f64;
        for (w, v) in self.band_weights.iter().zip(&self.band_speeds) {
            speed = speed.max(*v);
            acc += w;
            if acc >= 1.0 - tail {
                break;
            }
        }
        speed
    }
}

struct RowOut {
    coefficients: Vec<Complex64>,
    lost: f64,
    weights: Vec<f64>,
    speeds: Vec<f64>,
}

/// `Q_H psi = U^* (sum_n dE_n/dk P_n(k)) U psi` with fiber velocities.
/// `cutoff = None` picks the default plane-wave cutoff, enlarged to cover
/// the packet's cell modes.
pub fn apply_q(potential: &PeriodicPotential, psi: &WavePacket, cutoff: Option<usize>) -> Result<QResult> {
    apply_q_impl(potential, psi, cutoff, None)
}

/// As [`apply_q`], with `dE_n/dk` from the discriminant for the bands the
/// structure holds.
pub fn apply_q_with_bands(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    bands: &BandStructure,
    cutoff: Option<usize>,
) -> Result<QResult> {
    if bands.potential() != potential {
        return Err(Error::MetadataMismatch("band structure belongs to another potential".into()));
    }
    apply_q_impl(potential, psi, cutoff, Some(bands))
}

fn apply_q_impl(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    cutoff: Option<usize>,
    bands: Option<&BandStructure>,
) -> Result<QResult> {
    let p = potential.period();
    let mut field = floquet(psi, p)?;
    let m = field.samples_per_cell;
    let coeffs: Vec<Vec<Complex64>> = (0..field.cells).map(|j| field.cell_coefficients(j)).collect();
    let total: f64 = coeffs.iter().flatten().map(|c| c.norm_sqr()).sum();

    let cutoff = match cutoff {
        Some(c) if c >= 1 => c,
        Some(_) => return Err(Error::CutoffTooSmall("cutoff must be at least 1".into())),
        None => {
            let mut per_mode = vec![0.0; m];
            for row in &coeffs {
                for (w, c) in per_mode.iter_mut().zip(row) {
                    *w += c.norm_sqr();
                }
            }
            let gmax = (0..m)
                .filter(|&i| per_mode[i] > 1e-16 * total)
                .map(|i| mode_index(i, m).unsigned_abs() as usize)
                .max()
                .unwrap_or(0);
            default_cutoff(potential, default_max_energy(potential)).max((4 * gmax).div_ceil(3) + 8)
        }
    };
    let mm = cutoff as i64;

    let rows: Vec<RowOut> = (0..field.cells)
        .into_par_iter()
        .map(|j| -> Result<RowOut> {
            let k = field.kgrid[j];
            let es = fiber_eigensystem(potential, k, cutoff)?;
            let mut velocities = es.velocities.clone();
            if let Some(bs) = bands {
                for (n, v) in velocities.iter_mut().enumerate().take(bs.bands()) {
                    *v = bs.band_point(n + 1, k)?.velocity;
                }
            }
            let mut b = vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1];
            let mut lost = 0.0;
            for (idx, c) in coeffs[j].iter().enumerate() {
                let g = mode_index(idx, m);
                if g.abs() <= mm {
                    b[(g + mm) as usize] = *c;
                } else {
                    lost += c.norm_sqr();
                }
            }
            let u = &es.eigenvectors;
            let inside: f64 = b.iter().map(|c| c.norm_sqr()).sum();
            let mut captured = 0.0;
            let mut weights = Vec::with_capacity(es.retained());
            let mut d = vec![Complex64::new(0.0, 0.0); b.len()];
            for n in 0..es.retained() {
                let col = u.column(n);
                let proj: Complex64 = col.iter().zip(&b).map(|(a, c)| c * *a).sum();
                captured += proj.norm_sqr();
                weights.push(proj.norm_sqr());
                let s = proj * velocities[n];
                for (dd, a) in d.iter_mut().zip(col.iter()) {
                    *dd += s * *a;
                }
            }
            lost += (inside - captured).max(0.0);
            let coefficients = (0..m)
                .map(|idx| {
                    let g = mode_index(idx, m);
                    if g.abs() <= mm {
                        d[(g + mm) as usize]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            Ok(RowOut {
                coefficients,
                lost,
                weights,
                speeds: velocities.iter().map(|v| v.abs()).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let nb = rows.iter().map(|r| r.weights.len()).min().unwrap_or(0);
    let mut band_weights = vec![0.0; nb];
    let mut band_speeds = vec![0.0f64; nb];
    let mut lost = 0.0;
    for (j, r) in rows.iter().enumerate() {
        field.set_cell_coefficients(j, &r.coefficients);
        lost += r.lost;
        for n in 0..nb {
            band_weights[n] += r.weights[n];
            band_speeds[n] = band_speeds[n].max(r.speeds[n]);
        }
    }
    let lost_weight = if total > 0.0 { lost / total } else { 0.0 };
    if total > 0.0 {
        for w in &mut band_weights {
            *w /= total;
        }
    }
    if lost_weight > SPECTRAL_WEIGHT_TOLERANCE {
        return Err(Error::CutoffTooSmall(format!(
            "eigenpairs at cutoff {cutoff} capture only 1 - {lost_weight:e} of the packet"
        )));
    }
    let packet = inverse_floquet(&field)?.with_period(psi.period())?;
    Ok(QResult {
        packet,
        cutoff,
        lost_weight,
        band_weights,
        band_speeds,
    })
}

/// Per-quasimomentum values of `||(H(k) + 2R) U psi(k, .)||`.
#[derive(Debug, Clone, Serialize)]
pub struct UniformBound {
    pub kgrid: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    /// `max / min - 1` over the grid (0 for the zero state).
    pub variation: f64,
}

/// `sup_j ||(H(k_j) + 2R) U psi(k_j, .)||` over the box quasimomenta.
pub fn fiber_uniform_bound(potential: &PeriodicPotential, psi: &WavePacket, r: f64) -> Result<UniformBound> {
    if r < potential.sup_bound() {
        return Err(Error::InvalidParameter(format!(
            "R = {r} is below ||V|| = {}",
            potential.sup_bound()
        )));
    }
    let field: FloquetField = floquet(psi, potential.period())?;
    let m = field.samples_per_cell;
    let p = field.period;
    let band = potential.bandwidth() as i64;
    let mut values = Vec::with_capacity(field.cells);
    let mut tail = 0.0;
    let mut total = 0.0;
    for j in 0..field.cells {
        let c = field.cell_coefficients(j);
        let k = field.kgrid[j];
        // Coefficients on g in [-m/2 - J, m/2 + J] so that H c is exact.
        let half = (m / 2) as i64 + band;
        let mut ext = vec![Complex64::new(0.0, 0.0); (2 * half + 1) as usize];
        for (idx, a) in c.iter().enumerate() {
            let g = mode_index(idx, m);
            ext[(g + half) as usize] = *a;
            total += a.norm_sqr();
            if g.unsigned_abs() as usize > 3 * m / 8 {
                tail += a.norm_sqr();
            }
        }
        let mut norm = 0.0;
        for g in -half..=half {
            let q = 2.0 * std::f64::consts::PI * g as f64 / p + k;
            let i = (g + half) as usize;
            let mut y = ext[i] * (q * q + potential.fourier(0) + 2.0 * r);
            for d in 1..=band {
                let v = potential.fourier(d);
                if g - d >= -half {
                    y += ext[i - d as usize] * v;
                }
                if g + d <= half {
                    y += ext[i + d as usize] * v;
                }
            }
            norm += y.norm_sqr();
        }
        values.push((p * norm).sqrt());
    }
    if total > 0.0 && tail / total > SPECTRAL_WEIGHT_TOLERANCE {
        return Err(Error::CutoffTooSmall(format!(
            "{:e} of the packet sits in the top quarter of the cell modes",
            tail / total
        )));
    }
    let sup = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = if sup > 0.0 { sup / min - 1.0 } else { 0.0 };
    Ok(UniformBound {
        kgrid: field.kgrid.clone(),
        values,
        sup,
        variation,
    })
}

/// `max_i |psi(x_i)| (1 + |x_i - origin|^{s/2})`.
pub fn decay_constant(psi: &WavePacket, s: f64) -> f64 {
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm() * (1.0 + (psi.position(i) - psi.origin()).abs().powf(0.5 * s)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{momentum, Gaussian};
    use std::f64::consts::PI;

    fn packet(p: f64) -> WavePacket {
        let g = Gaussian {
            center: 0.0,
            width: 2.5,
            wavenumber: 1.0,
        };
        WavePacket::gaussian(&g, p, 16, 16, 0.5).unwrap()
    }

    #[test]
    fn free_q_is_twice_momentum() {
        let v = PeriodicPotential::zero(2.0 * PI).unwrap();
        let psi = packet(2.0 * PI);
        let q = apply_q(&v, &psi, None).unwrap();
        let d = momentum(&psi).scaled(Complex64::new(2.0, 0.0));
        assert!(q.packet.distance(&d).unwrap() < 1e-10 * d.norm());
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let v = PeriodicPotential::mathieu();
        let psi = packet(2.0 * PI).zeros_like();
        let q = apply_q(&v, &psi, None).unwrap();
        assert_eq!(q.packet.norm(), 0.0);
        assert_eq!(fiber_uniform_bound(&v, &psi, 2.0).unwrap().sup, 0.0);
    }

    #[test]
    fn tiny_cutoff_rejected() {
        let v = PeriodicPotential::mathieu();
        let psi = packet(2.0 * PI);
        assert!(matches!(apply_q(&v, &psi, Some(2)), Err(Error::CutoffTooSmall(_))));
    }

    #[test]
    fn decay_constant_of_gaussian_is_finite() {
        let psi = packet(2.0 * PI);
        let c = decay_constant(&psi, 4.0);
        assert!(c.is_finite() && c > 0.0);
    }
}
