//! Split-step evolution `e^{-itH} psi`, Heisenberg position, the velocity
//! average and moment series.
//!
//! One Strang step is `e^{-i dt V/2} e^{-i dt xi^2} e^{-i dt V/2}` with the
//! kinetic factor applied exactly in Fourier space.

mod packet;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

pub use packet::{Gaussian, WavePacket};

use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::potential::{integer_ratio, PeriodicPotential};

/// Outer fraction of the box watched by the boundary monitor.
pub const EDGE_FRACTION: f64 = 0.05;
/// Largest allowed fraction of the norm in the watched region.
pub const EDGE_THRESHOLD: f64 = 1e-8;

/// `min(h^2 / 2, 0.01 / (1 + R))`.
pub fn default_dt(potential: &PeriodicPotential, psi: &WavePacket) -> f64 {
    let h = psi.step();
    (0.5 * h * h).min(0.01 / (1.0 + potential.sup_bound()))
}

/// Smallest box length that keeps a packet of the given support diameter
/// away from the edges up to time `t` at speed `v_max`.
pub fn box_length_for(support: f64, v_max: f64, t: f64, period: f64) -> f64 {
    support + 2.0 * v_max * t.abs() + 10.0 * period
}

/// Cell count for [`box_length_for`], rounded up to a multiple of `multiple`.
pub fn cells_for(support: f64, v_max: f64, t: f64, period: f64, multiple: usize) -> usize {
    let cells = (box_length_for(support, v_max, t, period) / period).ceil() as usize;
    cells.div_ceil(multiple.max(1)) * multiple.max(1)
}

/// FFT plans and twist phases for one grid.
#[derive(Clone)]
pub struct Spectral {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `exp(-i kappa (x - start))`, removing the box twist before the FFT.
    untwist: Vec<Complex64>,
    wavenumbers: Vec<f64>,
    twisted: bool,
}

impl Spectral {
    pub fn new(grid: &WavePacket) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let kappa = 2.0 * std::f64::consts::PI * grid.twist() / grid.box_length();
        let h = grid.step();
        Self {
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            untwist: (0..n)
                .map(|i| Complex64::from_polar(1.0, -kappa * i as f64 * h))
                .collect(),
            wavenumbers: grid.wavenumbers(),
            twisted: grid.twist() != 0.0,
        }
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Applies the Fourier multiplier `m(xi)` in place.
    pub fn apply(&self, data: &mut [Complex64], multiplier: &[Complex64]) {
        let n = data.len();
        if self.twisted {
            for (a, u) in data.iter_mut().zip(&self.untwist) {
                *a *= u;
            }
        }
        self.fft.process(data);
        let scale = 1.0 / n as f64;
        for (a, m) in data.iter_mut().zip(multiplier) {
            *a *= m * scale;
        }
        self.ifft.process(data);
        if self.twisted {
            for (a, u) in data.iter_mut().zip(&self.untwist) {
                *a *= u.conj();
            }
        }
    }

    /// `D psi = -i psi'`.
    pub fn derivative(&self, psi: &WavePacket) -> WavePacket {
        let m: Vec<Complex64> = self.wavenumbers.iter().map(|&k| Complex64::new(k, 0.0)).collect();
        let mut out = psi.clone();
        self.apply(out.amplitudes_mut(), &m);
        out
    }
}

/// Applies `D = -i d/dx` spectrally.
pub fn momentum(psi: &WavePacket) -> WavePacket {
    Spectral::new(psi).derivative(psi)
}

/// Strang split-step propagator for a fixed step on a fixed grid.
#[derive(Clone)]
pub struct Propagator {
    spectral: Spectral,
    dt: f64,
    half_phase: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    /// Boundary monitor threshold; `None` disables the monitor.
    pub threshold: Option<f64>,
    /// Largest edge mass fraction seen so far.
    pub max_edge_mass: f64,
}

impl Propagator {
    /// Propagator with signed step `dt` (negative steps run backwards).
    pub fn new(potential: &PeriodicPotential, grid: &WavePacket, dt: f64) -> Result<Self> {
        check_commensurate(potential, grid)?;
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        let spectral = Spectral::new(grid);
        let mut p = Self {
            spectral,
            dt: 0.0,
            half_phase: Vec::new(),
            kinetic: Vec::new(),
            threshold: Some(EDGE_THRESHOLD),
            max_edge_mass: 0.0,
        };
        p.build(potential, grid, dt);
        Ok(p)
    }

    fn build(&mut self, potential: &PeriodicPotential, grid: &WavePacket, dt: f64) {
        self.dt = dt;
        self.half_phase = (0..grid.len())
            .map(|i| Complex64::from_polar(1.0, -0.5 * dt * potential.eval(grid.position(i))))
            .collect();
        self.kinetic = self
            .spectral
            .wavenumbers
            .iter()
            .map(|k| Complex64::from_polar(1.0, -dt * k * k))
            .collect();
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// One Strang step.
    pub fn step(&self, psi: &mut [Complex64]) {
        for (a, v) in psi.iter_mut().zip(&self.half_phase) {
            *a *= v;
        }
        self.spectral.apply(psi, &self.kinetic);
        for (a, v) in psi.iter_mut().zip(&self.half_phase) {
            *a *= v;
        }
    }

    /// Records the edge mass of `psi` and fails if it exceeds the threshold.
    pub fn monitor(&mut self, psi: &WavePacket, time: f64) -> Result<()> {
        let mass = psi.edge_mass(EDGE_FRACTION);
        self.max_edge_mass = self.max_edge_mass.max(mass);
        match self.threshold {
            Some(threshold) if mass > threshold => Err(Error::BoundaryContamination {
                mass,
                threshold,
                time,
            }),
            _ => Ok(()),
        }
    }

    /// Advances `psi` by `steps` steps, monitoring after each one.
    pub fn advance(&mut self, psi: &mut WavePacket, steps: usize, t0: f64) -> Result<()> {
        for s in 0..steps {
            self.step(psi.amplitudes_mut());
            if self.threshold.is_some() {
                self.monitor(psi, t0 + (s + 1) as f64 * self.dt)?;
            }
        }
        Ok(())
    }
}

fn check_commensurate(potential: &PeriodicPotential, grid: &WavePacket) -> Result<()> {
    let len = grid.box_length();
    match integer_ratio(len, potential.period()) {
        Some(_) => Ok(()),
        None => Err(Error::IncommensurateBox {
            box_length: len,
            period: potential.period(),
        }),
    }
}

/// Number of steps of size at most `dt` covering `t`, and the exact step.
pub fn step_count(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if t == 0.0 {
        return Ok((0, dt));
    }
    let n = (t.abs() / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t / n as f64))
}

/// `e^{-itH} psi` with steps of size at most `dt`.
pub fn evolve(potential: &PeriodicPotential, psi: &WavePacket, t: f64, dt: f64) -> Result<WavePacket> {
    let (n, step) = step_count(t, dt)?;
    let mut out = psi.clone();
    if n == 0 {
        check_commensurate(potential, psi)?;
        return Ok(out);
    }
    let mut prop = Propagator::new(potential, psi, step)?;
    prop.monitor(psi, 0.0)?;
    prop.advance(&mut out, n, 0.0)?;
    Ok(out)
}

/// `X_H(t) psi = e^{itH} X e^{-itH} psi`.
pub fn heisenberg_position(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    t: f64,
    dt: f64,
) -> Result<WavePacket> {
    let forward = evolve(potential, psi, t, dt)?;
    evolve(potential, &forward.position_mul(), -t, dt)
}

/// `(1/t) int_0^t D(r) psi dr` with `D(r) = e^{irH} D e^{-irH}`.
///
/// With `nodes = None` the integral is taken in the form that is exact for
/// the split-step dynamics: for one Strang step `S` of length `tau`,
/// `S^{-1} X S - X = 2 tau (D - tau V'/2)` conjugated by the half potential
/// step, so `X_H(t) - X = 2 tau sum_j S^{-j} (D - tau V'/2) S^j`. This is a
/// trapezoid rule on the step grid (`d/dr D(r) = -V'(r)`), and it makes the
/// integral identity hold to roundoff rather than to `O(t tau^2)`.
///
/// `nodes = Some(n)` uses composite Simpson on `n` equally spaced times
/// (odd, >= 3) instead.
///
/// Each node's contribution is carried forward to time `t` alongside the
/// state, so the quadrature costs one extra forward and one backward
/// evolution.
pub fn velocity_average(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    t: f64,
    dt: f64,
    nodes: Option<usize>,
) -> Result<WavePacket> {
    let spectral = Spectral::new(psi);
    if t == 0.0 {
        return Ok(spectral.derivative(psi));
    }
    let (intervals, per, step) = match nodes {
        None => {
            let (n, step) = step_count(t, dt)?;
            (n, 1, step)
        }
        Some(n) if n >= 3 && n % 2 == 1 => {
            let (per, step) = step_count(t / (n - 1) as f64, dt)?;
            (n - 1, per, step)
        }
        Some(n) => {
            return Err(Error::InvalidParameter(format!(
                "Simpson quadrature needs an odd node count >= 3, got {n}"
            )))
        }
    };
    let mut prop = Propagator::new(potential, psi, step)?;
    prop.monitor(psi, 0.0)?;
    let slope: Vec<f64> = (0..psi.len())
        .map(|i| 0.5 * step * potential.derivative(psi.position(i)))
        .collect();

    let mut state = psi.clone();
    let mut acc = psi.zeros_like();
    let width = t / intervals as f64;
    let last = if nodes.is_none() { intervals - 1 } else { intervals };
    for i in 0..=last {
        let d = spectral.derivative(&state);
        if nodes.is_none() {
            for ((a, b), (s, v)) in acc.amplitudes_mut().iter_mut().zip(d.amplitudes()).zip(state.amplitudes().iter().zip(&slope)) {
                *a += step * (b - s * v);
            }
        } else {
            let w = width / 3.0
                * if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
            for (a, b) in acc.amplitudes_mut().iter_mut().zip(d.amplitudes()) {
                *a += w * b;
            }
        }
        if i < intervals {
            let t0 = i as f64 * width;
            prop.advance(&mut state, per, t0)?;
            // The accumulator carries earlier contributions forward.
            let threshold = prop.threshold.take();
            prop.advance(&mut acc, per, t0)?;
            prop.threshold = threshold;
        }
    }
    let mut back = evolve(potential, &acc, -t, step.abs())?;
    for a in back.amplitudes_mut() {
        *a /= t;
    }
    Ok(back)
}

/// Moments of `e^{-itH} psi` at increasing times.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    /// `<X>` measured from the packet origin.
    pub mean: Vec<f64>,
    /// `|X|^2(t) = ||X e^{-itH} psi||^2`.
    pub second: Vec<f64>,
    /// `||X e^{-itH} psi||`.
    pub x_norm: Vec<f64>,
    /// `||X^2 e^{-itH} psi||`.
    pub x2_norm: Vec<f64>,
    /// `||(1/t) X_H(t) psi - ref||` via `||(1/t) X psi_t - e^{-itH} ref||`,
    /// when a reference is supplied (`NaN` at `t = 0`).
    pub reference_residual: Option<Vec<f64>>,
    /// Smallest `a` with `||X psi_t|| <= a (1 + t)` on the series.
    pub alpha_fit: f64,
    /// Smallest `b` with `||X^2 psi_t|| <= b (1 + t^2)` on the series.
    pub beta_fit: f64,
    pub max_edge_mass: f64,
}

impl MomentSeries {
    /// Least-squares exponent of `|X|^2` against `t` over `[t_lo, t_hi]`.
    pub fn second_moment_slope(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        let (t, y): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.second)
            .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
            .map(|(a, b)| (*a, *b))
            .unzip();
        Ok(loglog_fit(&t, &y)?.slope)
    }
}

/// Moment series at the given non-decreasing, non-negative times.
pub fn moments(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    times: &[f64],
    dt: f64,
    reference: Option<&WavePacket>,
) -> Result<MomentSeries> {
    moments_monitored(potential, psi, times, dt, reference, Some(EDGE_THRESHOLD))
}

/// As [`moments`] with an explicit edge-mass threshold; `None` records the
/// edge mass in `max_edge_mass` without failing.
pub fn moments_monitored(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    times: &[f64],
    dt: f64,
    reference: Option<&WavePacket>,
    threshold: Option<f64>,
) -> Result<MomentSeries> {
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be non-negative and non-decreasing".into()));
    }
    if let Some(r) = reference {
        psi.check_same_grid(r)?;
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut prop = Propagator::new(potential, psi, dt)?;
    // An infinite threshold still records the edge mass every step.
    prop.threshold = Some(threshold.unwrap_or(f64::INFINITY));
    prop.monitor(psi, 0.0)?;
    let mut state = psi.clone();
    let mut refstate = reference.cloned();
    let mut now = 0.0;
    let mut out = MomentSeries {
        times: times.to_vec(),
        mean: Vec::new(),
        second: Vec::new(),
        x_norm: Vec::new(),
        x2_norm: Vec::new(),
        reference_residual: reference.map(|_| Vec::new()),
        alpha_fit: 0.0,
        beta_fit: 0.0,
        max_edge_mass: 0.0,
    };
    for &t in times {
        if t > now {
            let (n, step) = step_count(t - now, dt)?;
            if (step - prop.dt()).abs() > 1e-15 * step {
                prop.build(potential, psi, step);
            }
            prop.advance(&mut state, n, now)?;
            if let Some(r) = refstate.as_mut() {
                let threshold = prop.threshold.take();
                prop.advance(r, n, now)?;
                prop.threshold = threshold;
            }
            now = t;
        }
        let x = state.position_mul();
        let x2 = state.position_power(2);
        let xn = x.norm();
        out.mean.push(state.mean_position()?);
        out.second.push(xn * xn);
        out.x_norm.push(xn);
        out.x2_norm.push(x2.norm());
        out.alpha_fit = out.alpha_fit.max(xn / (1.0 + t));
        out.beta_fit = out.beta_fit.max(x2.norm() / (1.0 + t * t));
        if let (Some(r), Some(res)) = (refstate.as_ref(), out.reference_residual.as_mut()) {
            if t == 0.0 {
                res.push(f64::NAN);
            } else {
                res.push(x.scaled(Complex64::new(1.0 / t, 0.0)).distance(r)?);
            }
        }
    }
    out.max_edge_mass = prop.max_edge_mass;
    Ok(out)
}

/// `max_t ||(e^{itH1} - e^{itH2}) psi|| / (t ||V1 - V2||)` and the raw
/// differences at each time.
pub fn propagation_differences(
    v1: &PeriodicPotential,
    v2: &PeriodicPotential,
    psi: &WavePacket,
    times: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let a = evolve(v1, psi, -t, dt)?;
            let b = evolve(v2, psi, -t, dt)?;
            a.distance(&b)
        })
        .collect()
}

/// `Gamma_fit = max_t ||X_{H1}(t) psi - X_{H2}(t) psi|| / ((sqrt t + t^2) ||V1 - V2||^{1/2})`.
pub fn quadratic_difference_constant(
    v1: &PeriodicPotential,
    v2: &PeriodicPotential,
    psi: &WavePacket,
    times: &[f64],
    dt: f64,
) -> Result<f64> {
    let dist = v1.distance_bound(v2)?;
    if dist == 0.0 {
        return Ok(0.0);
    }
    let mut gamma = 0.0f64;
    for &t in times.iter().filter(|t| **t > 0.0) {
        let a = heisenberg_position(v1, psi, t, dt)?;
        let b = heisenberg_position(v2, psi, t, dt)?;
        gamma = gamma.max(a.distance(&b)? / ((t.sqrt() + t * t) * dist.sqrt()));
    }
    Ok(gamma)
}
