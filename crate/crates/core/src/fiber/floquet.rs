use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bands::fold;
use crate::error::{Error, Result};
use crate::evolve::WavePacket;

/// `F[j][i] = sum_l e^{-i k_j (q_i + p l)} psi(q_i + p l)` on `L` box
/// quasimomenta `k_j` times `m` cell points `q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetField {
    pub start: f64,
    pub period: f64,
    pub cells: usize,
    pub samples_per_cell: usize,
    pub twist: f64,
    pub origin: f64,
    /// `k_j = 2 pi (j + twist) / (L p)` folded into `(-pi/p, pi/p]`.
    pub kgrid: Vec<f64>,
    /// Row-major, `data[j * m + i]`.
    pub data: Vec<Complex64>,
}

/// The `L` quasimomenta of a box of `cells` cells, folded into the zone.
pub fn zone_momenta(cells: usize, period: f64, twist: f64) -> Vec<f64> {
    (0..cells)
        .map(|j| fold(2.0 * PI * (j as f64 + twist) / (cells as f64 * period), period))
        .collect()
}

/// Floquet transform with respect to `period`; the box must hold an
/// integer number of cells of that length.
pub fn floquet(psi: &WavePacket, period: f64) -> Result<FloquetField> {
    let psi = psi.with_period(period)?;
    let l = psi.cells();
    let m = psi.samples_per_cell();
    let kgrid = zone_momenta(l, period, psi.twist());
    let fft = FftPlanner::new().plan_fft_forward(l);
    let amps = psi.amplitudes();
    let mut data = vec![Complex64::new(0.0, 0.0); l * m];
    let mut column = vec![Complex64::new(0.0, 0.0); l];
    for i in 0..m {
        for (ell, c) in column.iter_mut().enumerate() {
            let phase = -2.0 * PI * psi.twist() * ell as f64 / l as f64;
            *c = amps[i + ell * m] * Complex64::from_polar(1.0, phase);
        }
        fft.process(&mut column);
        let q = psi.position(i);
        for (j, c) in column.iter().enumerate() {
            data[j * m + i] = c * Complex64::from_polar(1.0, -kgrid[j] * q);
        }
    }
    Ok(FloquetField {
        start: psi.start(),
        period,
        cells: l,
        samples_per_cell: m,
        twist: psi.twist(),
        origin: psi.origin(),
        kgrid,
        data,
    })
}

/// `psi(q_i + p l) = (1/L) sum_j e^{i k_j (q_i + p l)} F[j][i]`.
pub fn inverse_floquet(field: &FloquetField) -> Result<WavePacket> {
    let (l, m) = (field.cells, field.samples_per_cell);
    if field.data.len() != l * m || field.kgrid.len() != l {
        return Err(Error::MetadataMismatch(format!(
            "field of {} samples and {} quasimomenta for a {l} x {m} grid",
            field.data.len(),
            field.kgrid.len()
        )));
    }
    let ifft = FftPlanner::new().plan_fft_inverse(l);
    let h = field.period / m as f64;
    let mut amps = vec![Complex64::new(0.0, 0.0); l * m];
    let mut column = vec![Complex64::new(0.0, 0.0); l];
    for i in 0..m {
        let q = field.start + i as f64 * h;
        for (j, c) in column.iter_mut().enumerate() {
            *c = field.data[j * m + i] * Complex64::from_polar(1.0, field.kgrid[j] * q);
        }
        ifft.process(&mut column);
        for (ell, c) in column.iter().enumerate() {
            let phase = 2.0 * PI * field.twist * ell as f64 / l as f64;
            amps[i + ell * m] = c * Complex64::from_polar(1.0 / l as f64, phase);
        }
    }
    WavePacket::new(field.start, field.period, l, m, field.twist, field.origin, amps)
}

impl FloquetField {
    pub fn row(&self, j: usize) -> &[Complex64] {
        let m = self.samples_per_cell;
        &self.data[j * m..(j + 1) * m]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [Complex64] {
        let m = self.samples_per_cell;
        &mut self.data[j * m..(j + 1) * m]
    }

    /// `||F_j||^2` in `L^2` of one cell.
    pub fn fiber_norm_sqr(&self, j: usize) -> f64 {
        let h = self.period / self.samples_per_cell as f64;
        h * self.row(j).iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `(1/L) sum_j ||F_j||^2`, equal to `||psi||^2`.
    pub fn norm_sqr(&self) -> f64 {
        (0..self.cells).map(|j| self.fiber_norm_sqr(j)).sum::<f64>() / self.cells as f64
    }

    /// Plane-wave coefficients `c_g` of row `j`, in FFT order
    /// (`g = idx` below `m/2`, `idx - m` above), so that
    /// `F[j][i] = sum_g c_g e^{2 pi i g q_i / p}`.
    pub fn cell_coefficients(&self, j: usize) -> Vec<Complex64> {
        let m = self.samples_per_cell;
        let mut c = self.row(j).to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut c);
        for (idx, a) in c.iter_mut().enumerate() {
            let g = mode_index(idx, m);
            *a *= Complex64::from_polar(1.0 / m as f64, -2.0 * PI * g as f64 * self.start / self.period);
        }
        c
    }

    /// Inverse of [`cell_coefficients`](Self::cell_coefficients).
    pub fn set_cell_coefficients(&mut self, j: usize, coefficients: &[Complex64]) {
        let m = self.samples_per_cell;
        let mut c: Vec<Complex64> = coefficients
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let g = mode_index(idx, m);
                a * Complex64::from_polar(1.0, 2.0 * PI * g as f64 * self.start / self.period)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(m).process(&mut c);
        self.row_mut(j).copy_from_slice(&c);
    }
}

/// Signed plane-wave index of FFT slot `idx` for `m` samples.
pub(crate) fn mode_index(idx: usize, m: usize) -> i64 {
    if idx < m.div_ceil(2) {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::Gaussian;

    fn packet() -> WavePacket {
        let g = Gaussian {
            center: 0.3,
            width: 3.0,
            wavenumber: 0.7,
        };
        WavePacket::gaussian(&g, 2.0 * PI, 12, 16, 0.5).unwrap()
    }

    #[test]
    fn parseval_and_round_trip() {
        let psi = packet();
        let f = floquet(&psi, 2.0 * PI).unwrap();
        assert!((f.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
        let back = inverse_floquet(&f).unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn single_cell_support_gives_flat_moduli() {
        let psi = WavePacket::from_fn(0.0, 1.0, 6, 8, 0.0, 0.0, |x| {
            if x < 1.0 {
                Complex64::new(1.0 + x, -x)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let f = floquet(&psi, 1.0).unwrap();
        for j in 0..6 {
            for i in 0..8 {
                assert!((f.row(j)[i].norm() - psi.amplitudes()[i].norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cell_coefficients_invert() {
        let psi = packet();
        let mut f = floquet(&psi, 2.0 * PI).unwrap();
        let orig = f.clone();
        for j in 0..f.cells {
            let c = f.cell_coefficients(j);
            let n2: f64 = c.iter().map(|a| a.norm_sqr()).sum::<f64>() * f.period;
            assert!((n2 - f.fiber_norm_sqr(j)).abs() < 1e-12 * (1.0 + n2));
            f.set_cell_coefficients(j, &c);
        }
        for (a, b) in f.data.iter().zip(&orig.data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn incommensurate_period_rejected() {
        assert!(matches!(floquet(&packet(), 5.0), Err(Error::IncommensurateBox { .. })));
    }
}
