use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::integer_ratio;

/// Gaussian packet `exp(-(x - c)^2 / (4 w^2) + i xi0 (x - c))`; `w` is the
/// standard deviation of `|psi|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
    pub wavenumber: f64,
}

impl Gaussian {
    /// Half-width beyond which `|psi|^2` is below `1e-16` of its peak.
    pub fn support_radius(&self) -> f64 {
        self.width * (2.0 * 16.0 * 10f64.ln()).sqrt()
    }

    /// Largest `|xi|` carrying more than `1e-16` of the spectral density.
    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber.abs() + (2.0 * 16.0 * 10f64.ln()).sqrt() / (2.0 * self.width)
    }
}

/// Samples `psi(x_i)`, `x_i = start + i h`, on a box of `cells` cells of
/// length `period` with `samples_per_cell` points each.
///
/// The box boundary condition is `psi(x + box) = exp(2 pi i twist) psi(x)`;
/// quasimomenta on the box are `2 pi (j + twist) / box`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    start: f64,
    period: f64,
    cells: usize,
    samples_per_cell: usize,
    twist: f64,
    /// Reference point of the position operator.
    origin: f64,
    amplitudes: Vec<Complex64>,
}

impl WavePacket {
    pub fn new(
        start: f64,
        period: f64,
        cells: usize,
        samples_per_cell: usize,
        twist: f64,
        origin: f64,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) || !start.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidParameter("box geometry must be finite with period > 0".into()));
        }
        if cells == 0 || samples_per_cell < 2 {
            return Err(Error::InvalidParameter(format!(
                "need cells >= 1 and samples per cell >= 2, got {cells} and {samples_per_cell}"
            )));
        }
        if !(0.0..1.0).contains(&twist) {
            return Err(Error::InvalidParameter(format!("twist must lie in [0, 1), got {twist}")));
        }
        if amplitudes.len() != cells * samples_per_cell {
            return Err(Error::MetadataMismatch(format!(
                "{} samples for a {cells} x {samples_per_cell} grid",
                amplitudes.len()
            )));
        }
        Ok(Self {
            start,
            period,
            cells,
            samples_per_cell,
            twist,
            origin,
            amplitudes,
        })
    }

    pub fn from_fn<F>(
        start: f64,
        period: f64,
        cells: usize,
        samples_per_cell: usize,
        twist: f64,
        origin: f64,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let h = period / samples_per_cell as f64;
        let amps = (0..cells * samples_per_cell)
            .map(|i| f(start + i as f64 * h))
            .collect();
        Self::new(start, period, cells, samples_per_cell, twist, origin, amps)
    }

    /// Unit-norm Gaussian on a box centred at the packet centre, with the
    /// position operator measured from that centre.
    pub fn gaussian(
        g: &Gaussian,
        period: f64,
        cells: usize,
        samples_per_cell: usize,
        twist: f64,
    ) -> Result<Self> {
        if !(g.width > 0.0) {
            return Err(Error::InvalidParameter(format!("packet width must be positive, got {}", g.width)));
        }
        let start = g.center - 0.5 * cells as f64 * period;
        let mut psi = Self::from_fn(start, period, cells, samples_per_cell, twist, g.center, |x| {
            let d = x - g.center;
            Complex64::from_polar((-d * d / (4.0 * g.width * g.width)).exp(), g.wavenumber * d)
        })?;
        psi.normalize()?;
        Ok(psi)
    }

    /// The same samples regrouped into cells of length `period`.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        let len = self.box_length();
        let cells = integer_ratio(len, period).ok_or(Error::IncommensurateBox {
            box_length: len,
            period,
        })?;
        let n = self.len();
        if n % cells != 0 {
            return Err(Error::IncommensurateBox {
                box_length: len,
                period,
            });
        }
        Ok(Self {
            period,
            cells,
            samples_per_cell: n / cells,
            ..self.clone()
        })
    }

    /// A packet on the same grid with new samples.
    pub fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != self.len() {
            return Err(Error::MetadataMismatch(format!(
                "{} samples for a grid of {}",
                amplitudes.len(),
                self.len()
            )));
        }
        Ok(Self {
            amplitudes,
            ..self.clone()
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); self.len()],
            ..self.clone()
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn samples_per_cell(&self) -> usize {
        self.samples_per_cell
    }

    pub fn twist(&self) -> f64 {
        self.twist
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.period / self.samples_per_cell as f64
    }

    pub fn box_length(&self) -> f64 {
        self.period * self.cells as f64
    }

    pub fn position(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Box wavenumbers `2 pi (j + twist) / box` in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.len();
        let len = self.box_length();
        (0..n)
            .map(|j| {
                let s = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * (s + self.twist) / len
            })
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.step() * self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(())
    }

    /// `<self, other>` with the grid measure.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.step())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.step()).sqrt())
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let amps = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a + c * b)
            .collect();
        self.with_amplitudes(amps)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    /// `(x - origin)^power psi`.
    pub fn position_power(&self, power: i32) -> Self {
        let h = self.step();
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * (self.start + i as f64 * h - self.origin).powi(power))
            .collect();
        Self {
            amplitudes: amps,
            ..self.clone()
        }
    }

    /// `X psi` with `X` measured from the origin.
    pub fn position_mul(&self) -> Self {
        self.position_power(1)
    }

    /// `<X>` relative to the origin, normalised by `||psi||^2`.
    pub fn mean_position(&self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::ZeroState);
        }
        let h = self.step();
        let s: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (self.start + i as f64 * h - self.origin) * a.norm_sqr())
            .sum();
        Ok(s * h / n2)
    }

    /// Fraction of `||psi||^2` in the outermost `fraction` of the box
    /// (split evenly between both ends).
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.len();
        let w = ((0.5 * fraction * n as f64).ceil() as usize).min(n / 2);
        let total: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self.amplitudes[..w]
            .iter()
            .chain(&self.amplitudes[n - w..])
            .map(|a| a.norm_sqr())
            .sum();
        edge / total
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        let same = self.len() == other.len()
            && self.cells == other.cells
            && self.start == other.start
            && self.period == other.period
            && self.twist == other.twist;
        if same {
            Ok(())
        } else {
            Err(Error::MetadataMismatch("packets live on different grids".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> WavePacket {
        let g = Gaussian {
            center: 1.0,
            width: 2.0,
            wavenumber: 0.5,
        };
        WavePacket::gaussian(&g, 2.0 * PI, 16, 32, 0.5).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_and_centred() {
        let psi = gauss();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!(psi.mean_position().unwrap().abs() < 1e-12);
        let x2: f64 = psi.position_mul().norm_sqr();
        assert!((x2 - 4.0).abs() < 1e-10, "{x2}");
        assert!(psi.edge_mass(0.05) < 1e-30);
    }

    #[test]
    fn regroup_keeps_samples() {
        let psi = gauss();
        let r = psi.with_period(4.0 * PI).unwrap();
        assert_eq!(r.cells(), 8);
        assert_eq!(r.samples_per_cell(), 64);
        assert_eq!(r.amplitudes(), psi.amplitudes());
        assert!(matches!(psi.with_period(3.0), Err(Error::IncommensurateBox { .. })));
    }

    #[test]
    fn wavenumbers_are_twisted() {
        let psi = gauss();
        let k = psi.wavenumbers();
        let len = psi.box_length();
        assert!((k[0] - PI / len).abs() < 1e-15);
        assert!((k[psi.len() - 1] + PI / len).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = gauss();
        let b = a.with_period(4.0 * PI).unwrap();
        assert!(a.distance(&b).is_err());
        assert!(a.with_amplitudes(vec![]).is_err());
    }
}
