//! Periodic cosine-series potentials and limit-periodic families built from
//! nested-period components.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V(x) = a_0 + sum_j a_j cos(2 pi j x / p)`.
///
/// The uniform bound `R = sum_j |a_j|` is exact for the sup norm up to the
/// (rare) case where the cosines cannot all reach their extrema together, in
/// which case it is an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub struct PeriodicPotential {
    period: f64,
    coefficients: Vec<f64>,
    bound: f64,
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    period: f64,
    coefficients: Vec<f64>,
}

impl TryFrom<PotentialRepr> for PeriodicPotential {
    type Error = Error;

    fn try_from(r: PotentialRepr) -> Result<Self> {
        PeriodicPotential::new(r.period, r.coefficients)
    }
}

impl From<PeriodicPotential> for PotentialRepr {
    fn from(p: PeriodicPotential) -> Self {
        PotentialRepr {
            period: p.period,
            coefficients: p.coefficients,
        }
    }
}

impl PeriodicPotential {
    pub fn new(period: f64, mut coefficients: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "potential coefficients must be finite".into(),
            ));
        }
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0.0);
        }
        let bound = coefficients.iter().map(|a| a.abs()).sum();
        Ok(Self {
            period,
            coefficients,
            bound,
        })
    }

    pub fn zero(period: f64) -> Result<Self> {
        Self::new(period, vec![0.0])
    }

    /// `amplitude * cos(2 pi harmonic x / period)`.
    pub fn cosine(period: f64, harmonic: usize, amplitude: f64) -> Result<Self> {
        let mut c = vec![0.0; harmonic + 1];
        c[harmonic] = amplitude;
        Self::new(period, c)
    }

    /// The Mathieu-type test potential `2 cos(x)` with period `2 pi`.
    pub fn mathieu() -> Self {
        Self::cosine(2.0 * PI, 1, 2.0).expect("valid literal potential")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Uniform bound `R >= ||V||_inf`.
    pub fn sup_bound(&self) -> f64 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.bound == 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let w = 2.0 * PI * x / self.period;
        let mut v = self.coefficients[0];
        for (j, a) in self.coefficients.iter().enumerate().skip(1) {
            if *a != 0.0 {
                v += a * (j as f64 * w).cos();
            }
        }
        v
    }

    /// `V'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, a)| -a * j as f64 * w * (j as f64 * w * x).sin())
            .sum()
    }

    /// Plane-wave matrix element `<e_g, V e_0>` for `e_g = e^{2 pi i g x / p}`.
    pub fn fourier(&self, g: i64) -> f64 {
        let j = g.unsigned_abs() as usize;
        match j {
            0 => self.coefficients[0],
            _ if j < self.coefficients.len() => 0.5 * self.coefficients[j],
            _ => 0.0,
        }
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Re-expresses the same function with period `new_period`, which must
    /// be an integer multiple of the current period.
    pub fn with_period(&self, new_period: f64) -> Result<Self> {
        let ratio = integer_ratio(new_period, self.period).ok_or(Error::IncommensurateBox {
            box_length: new_period,
            period: self.period,
        })?;
        let mut c = vec![0.0; (self.coefficients.len() - 1) * ratio + 1];
        for (j, a) in self.coefficients.iter().enumerate() {
            c[j * ratio] = *a;
        }
        Self::new(new_period, c)
    }

    /// Sum of two potentials whose periods are commensurate; the result has
    /// the longer period.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (long, short) = if self.period >= other.period {
            (self, other)
        } else {
            (other, self)
        };
        let short = short.with_period(long.period)?;
        let n = long.coefficients.len().max(short.coefficients.len());
        let c = (0..n)
            .map(|j| {
                long.coefficients.get(j).copied().unwrap_or(0.0)
                    + short.coefficients.get(j).copied().unwrap_or(0.0)
            })
            .collect();
        Self::new(long.period, c)
    }

    /// Pointwise difference bound `||self - other||_inf <= sum |a_j - b_j|`.
    pub fn distance_bound(&self, other: &Self) -> Result<f64> {
        let neg = Self::new(
            other.period,
            other.coefficients.iter().map(|a| -a).collect(),
        )?;
        Ok(self.add(&neg)?.sup_bound())
    }
}

/// Returns `Some(n)` when `long / short` is within 1e-9 of a positive integer.
pub(crate) fn integer_ratio(long: f64, short: f64) -> Option<usize> {
    let r = long / short;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * r.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// A limit-periodic potential `V = sum_n W_n` truncated at a finite depth,
/// where `W_n` has period `p_n` and `p_{n+1} = r_{n+1} p_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcFamily {
    base_period: f64,
    ratios: Vec<u32>,
    eta: f64,
    components: Vec<PeriodicPotential>,
}

impl EcFamily {
    /// Builds a family whose level-`n` component is
    /// `amplitudes[n] * cos(2 pi x / p_n)`.
    pub fn build(p0: f64, ratios: &[u32], eta: f64, amplitudes: &[f64]) -> Result<Self> {
        if amplitudes.len() != ratios.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for {} ratios, got {}",
                ratios.len() + 1,
                ratios.len(),
                amplitudes.len()
            )));
        }
        let periods = periods_from(p0, ratios)?;
        let components = periods
            .iter()
            .zip(amplitudes)
            .map(|(&p, &a)| PeriodicPotential::cosine(p, 1, a))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(p0, ratios, eta, components)
    }

    /// Builds a family from explicit components; component `n` must have
    /// period `p_n`.
    pub fn from_components(
        p0: f64,
        ratios: &[u32],
        eta: f64,
        components: Vec<PeriodicPotential>,
    ) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decay rate must be positive, got {eta}"
            )));
        }
        let periods = periods_from(p0, ratios)?;
        if components.len() != periods.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {}",
                periods.len(),
                components.len()
            )));
        }
        for (n, (w, p)) in components.iter().zip(&periods).enumerate() {
            if integer_ratio(*p, w.period()) != Some(1) {
                return Err(Error::InvalidParameter(format!(
                    "component {n} has period {} but level period is {p}",
                    w.period()
                )));
            }
        }
        let family = Self {
            base_period: p0,
            ratios: ratios.to_vec(),
            eta,
            components,
        };
        family.check_schedule()?;
        Ok(family)
    }

    /// Number of refinement levels; approximants exist for `0..=depth()`.
    pub fn depth(&self) -> usize {
        self.ratios.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn ratios(&self) -> &[u32] {
        &self.ratios
    }

    pub fn base_period(&self) -> f64 {
        self.base_period
    }

    pub fn component(&self, n: usize) -> Result<&PeriodicPotential> {
        self.components.get(n).ok_or(Error::LevelOutOfRange {
            level: n,
            depth: self.depth(),
        })
    }

    pub fn period(&self, n: usize) -> Result<f64> {
        Ok(self.component(n)?.period())
    }

    pub fn periods(&self) -> Vec<f64> {
        self.components.iter().map(|w| w.period()).collect()
    }

    /// `sum_{m > n} ||W_m||_inf` over the stored levels.
    pub fn tail(&self, n: usize) -> f64 {
        self.components
            .iter()
            .skip(n + 1)
            .map(|w| w.sup_bound())
            .fold(0.0, |a, b| a + b)
    }

    /// Uniform bound on every approximant.
    pub fn uniform_bound(&self) -> f64 {
        self.components.iter().map(|w| w.sup_bound()).sum()
    }

    /// `e^{eta p_{n+1}} tail(n)` for each level with a successor.
    pub fn schedule_values(&self) -> Vec<f64> {
        (0..self.depth())
            .map(|n| (self.eta * self.components[n + 1].period()).exp() * self.tail(n))
            .collect()
    }

    fn check_schedule(&self) -> Result<()> {
        let s = self.schedule_values();
        for (n, v) in s.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::ScheduleViolation {
                    level: n,
                    detail: format!("e^(eta p) tail = {v}"),
                });
            }
        }
        for n in 1..s.len() {
            if !(s[n] < s[n - 1] || (s[n] == 0.0 && s[n - 1] == 0.0)) {
                return Err(Error::ScheduleViolation {
                    level: n,
                    detail: format!(
                        "e^(eta p_(n+1)) tail(n) = {:.6e} does not decrease from {:.6e}",
                        s[n],
                        s[n - 1]
                    ),
                });
            }
        }
        Ok(())
    }

    /// `V_n = sum_{m <= n} W_m`, with period `p_n`.
    pub fn approximant(&self, n: usize) -> Result<PeriodicPotential> {
        let target = self.period(n)?;
        let mut v = PeriodicPotential::zero(target)?;
        for w in &self.components[..=n] {
            v = v.add(w)?;
        }
        Ok(v)
    }
}

fn periods_from(p0: f64, ratios: &[u32]) -> Result<Vec<f64>> {
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "base period must be positive, got {p0}"
        )));
    }
    let mut periods = vec![p0];
    for (i, &r) in ratios.iter().enumerate() {
        if r < 2 {
            return Err(Error::BadRatio {
                level: i + 1,
                ratio: r,
            });
        }
        let last = *periods.last().unwrap();
        periods.push(last * r as f64);
    }
    Ok(periods)
}

/// Amplitudes `a_n = e^{-eta p_{n+1}}` for levels `0..=ratios.len()`; the
/// period after the deepest stored level is extrapolated with ratio 2.
pub fn exponential_schedule(p0: f64, ratios: &[u32], eta: f64) -> Result<Vec<f64>> {
    let mut periods = periods_from(p0, ratios)?;
    periods.push(2.0 * periods.last().unwrap());
    Ok(periods[1..].iter().map(|p| (-eta * p).exp()).collect())
}
