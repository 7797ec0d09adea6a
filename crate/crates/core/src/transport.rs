//! Transport experiments: convergence of `X_H(t)/t` to `Q_H`, the
//! limit-periodic cascade `Q_n psi -> Q psi`, transport exponents and the
//! Floquet mass lower bound.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bands::BandTable;
use crate::error::{Error, Result};
use crate::evolve::{default_dt, moments_monitored, MomentSeries, WavePacket, EDGE_THRESHOLD};
use crate::fiber::{apply_q, floquet};
use crate::fit::{loglog_fit, LineFit};
use crate::potential::{exponential_schedule, EcFamily, PeriodicPotential};

/// `||(1/t) X_H(t) psi - Q_H psi||` along a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSeries {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub q_norm: f64,
    pub q_cutoff: usize,
    pub q_lost_weight: f64,
    /// `-slope` of `log residual` against `log t` over the last decade.
    pub decay_exponent: f64,
    pub decay_fit: LineFit,
    /// Smallest time in the fit window.
    pub fit_start: f64,
    pub moments: MomentSeries,
}

/// Times at which the fit runs: the last decade of `times`, or all of them
/// when they span less.
fn last_decade(times: &[f64]) -> (usize, f64) {
    let end = times.last().copied().unwrap_or(0.0);
    let lo = end / 10.0;
    let first = times.iter().position(|t| *t >= lo * (1.0 - 1e-12)).unwrap_or(0);
    (first, times[first])
}

/// Convergence of `X_H(t) psi / t` to `Q_H psi` for a periodic potential.
pub fn periodic_convergence(
    potential: &PeriodicPotential,
    psi: &WavePacket,
    times: &[f64],
    dt: f64,
) -> Result<ConvergenceSeries> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter("convergence needs at least two times".into()));
    }
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("convergence times must be positive".into()));
    }
    let q = apply_q(potential, psi, None)?;
    let series = moments_monitored(potential, psi, times, dt, Some(&q.packet), Some(EDGE_THRESHOLD))?;
    let residual = series.reference_residual.clone().unwrap_or_default();
    let (first, fit_start) = last_decade(times);
    let fit = if times.len() - first >= 2 {
        loglog_fit(&times[first..], &residual[first..])?
    } else {
        loglog_fit(times, &residual)?
    };
    Ok(ConvergenceSeries {
        times: times.to_vec(),
        residual,
        q_norm: q.packet.norm(),
        q_cutoff: q.cutoff,
        q_lost_weight: q.lost_weight,
        decay_exponent: -fit.slope,
        decay_fit: fit,
        fit_start,
        moments: series,
    })
}

/// `t_n = C1^5 p_{n+1}^{15/2} exp(5 kappa C2 sqrt(R) p_{n+1})`, clipped to a
/// horizon.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSchedule {
    /// Unclipped values, one per level `0..=depth`.
    pub raw: Vec<f64>,
    /// `min(raw, horizon)`.
    pub times: Vec<f64>,
    pub clipped: Vec<bool>,
    /// First level whose time exceeds the horizon.
    pub first_clipped: Option<usize>,
}

/// Time schedule of the cascade. The period after the deepest level is
/// extrapolated with ratio 2.
pub fn time_schedule(family: &EcFamily, c1: f64, kappa: f64, c2: f64, horizon: f64) -> Result<TimeSchedule> {
    if !(kappa >= 4.5) {
        return Err(Error::InvalidParameter(format!("kappa must be at least 9/2, got {kappa}")));
    }
    if !(c1 > 0.0 && c2 > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidParameter("C1, C2 and the horizon must be positive".into()));
    }
    let r = family.uniform_bound();
    let mut next = family.periods();
    next.remove(0);
    next.push(2.0 * family.periods().last().unwrap());
    // In logs, since the schedule overflows quickly.
    let raw: Vec<f64> = next
        .iter()
        .map(|p| (5.0 * c1.ln() + 7.5 * p.ln() + 5.0 * kappa * c2 * r.sqrt() * p).exp())
        .collect();
    let clipped: Vec<bool> = raw.iter().map(|t| *t > horizon).collect();
    Ok(TimeSchedule {
        times: raw.iter().map(|t| t.min(horizon)).collect(),
        first_clipped: clipped.iter().position(|c| *c),
        raw,
        clipped,
    })
}

/// Floquet mass of `psi` over `S_n = {pi/(4 p_n) <= |k| <= 3 pi/(4 p_n)}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FloquetMass {
    pub level: usize,
    pub period: f64,
    pub points: usize,
    /// `int_{S_n} ||U psi(k)||^2 dk / |T*|`.
    pub mass: f64,
    /// `mass / (||psi||^2 / 8)`.
    pub ratio: f64,
}

pub fn floquet_mass_lower_bound(family: &EcFamily, psi: &WavePacket, n: usize) -> Result<FloquetMass> {
    let p = family.period(n)?;
    let norm = psi.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    let field = floquet(psi, p)?;
    let (lo, hi) = (PI / (4.0 * p), 3.0 * PI / (4.0 * p));
    let tol = 1e-12 / p;
    let inside: Vec<usize> = (0..field.cells)
        .filter(|&j| {
            let a = field.kgrid[j].abs();
            a >= lo - tol && a <= hi + tol
        })
        .collect();
    if inside.len() < 8 {
        return Err(Error::GridTooCoarse(format!(
            "{} quasimomenta in S_{n} for period {p}; need 8",
            inside.len()
        )));
    }
    let mass = inside.iter().map(|&j| field.fiber_norm_sqr(j)).sum::<f64>() / field.cells as f64;
    Ok(FloquetMass {
        level: n,
        period: p,
        points: inside.len(),
        mass,
        ratio: mass / (norm / 8.0),
    })
}

/// `(beta_minus, beta_plus)`: min and max of the local slopes of
/// `log |X|^2(t)` against `log t`, halved and clamped to `[0, 2]`, over
/// `window = (t_lo, t_hi)`.
pub fn transport_exponents(series: &MomentSeries, window: (f64, f64)) -> Result<(f64, f64)> {
    let (t, y) = window_samples(series, window)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 1..t.len() {
        let s = 0.5 * (y[i] / y[i - 1]).ln() / (t[i] / t[i - 1]).ln();
        let s = s.clamp(0.0, 2.0);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

/// Least-squares `beta` from `log |X|^2 = 2 beta log t + c` over the window,
/// clamped to `[0, 2]`, with the fit.
pub fn beta_fit(series: &MomentSeries, window: (f64, f64)) -> Result<(f64, LineFit)> {
    let (t, y) = window_samples(series, window)?;
    let fit = loglog_fit(&t, &y)?;
    Ok(((0.5 * fit.slope).clamp(0.0, 2.0), fit))
}

fn window_samples(series: &MomentSeries, (lo, hi): (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::WindowTooShort(format!("[{lo}, {hi}] spans less than a decade")));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.second)
        .filter(|(t, _)| **t >= lo * (1.0 - 1e-12) && **t <= hi * (1.0 + 1e-12))
        .map(|(a, b)| (*a, *b))
        .unzip();
    if t.len() < 2 || t[t.len() - 1] < 10.0 * t[0] * (1.0 - 1e-12) {
        return Err(Error::WindowTooShort(format!(
            "{} samples in [{lo}, {hi}] do not cover a decade",
            t.len()
        )));
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("moments must be positive in the window".into()));
    }
    Ok((t, y))
}

/// Default demonstration family: `p_0 = 2 pi`, ratios `[2, 2, 2]`,
/// `W_0 = cos x`, `W_n = e^{-eta p_{n+1}} cos(2 pi x / p_n)` with
/// `eta = 0.2`, so that `tail(0) < 1e-2`.
pub fn default_family() -> EcFamily {
    let ratios = [2, 2, 2];
    let eta = 0.2;
    let mut amps = exponential_schedule(2.0 * PI, &ratios, eta).expect("valid schedule");
    amps[0] = 1.0;
    EcFamily::build(2.0 * PI, &ratios, eta, &amps).expect("valid family")
}

/// Knobs of [`cascade_with`].
#[derive(Debug, Clone, Serialize)]
pub struct CascadeOptions {
    pub horizon: f64,
    /// `None` uses the default step of the deepest approximant.
    pub dt: Option<f64>,
    pub c1: f64,
    pub kappa: f64,
    /// `None` estimates `C2` from the base approximant's band table.
    pub c2: Option<f64>,
    /// Upper cap on the estimated `C2`.
    pub c2_cap: f64,
    /// Number of log-spaced times over `[horizon / 10, horizon]`.
    pub time_points: usize,
    /// k-points of the band table used for `C2`.
    pub kpoints: usize,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            dt: None,
            c1: 1.0,
            kappa: 4.5,
            c2: None,
            c2_cap: 1.0,
            time_points: 11,
            kpoints: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub period: f64,
    /// `sum_{m > n} ||W_m||_inf`.
    pub tail: f64,
    pub schedule_time: f64,
    pub clipped: bool,
    pub q_norm: f64,
    pub q_cutoff: usize,
    pub q_lost_weight: f64,
    pub occupied_speed: f64,
    /// `None` when the box has too few quasimomenta in `S_n`.
    pub floquet_mass_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub depth: usize,
    pub horizon: f64,
    pub dt: f64,
    pub c2: f64,
    pub levels: Vec<LevelReport>,
    /// `||Q_{n+1} psi - Q_n psi||` for `n < depth`.
    pub differences: Vec<f64>,
    /// Largest ratio of consecutive differences, when there are two or more.
    pub tail_ratio: Option<f64>,
    /// Bound on the remaining differences beyond the deepest level.
    pub tail_bound: f64,
    /// `||Q_depth psi|| > tail_bound`.
    pub q_nonzero: bool,
    /// `||(1/t) X_H(t) psi - Q_depth psi||` under the deepest approximant.
    pub convergence_times: Vec<f64>,
    pub convergence: Vec<f64>,
    pub decay_exponent: Option<f64>,
    pub beta_fit: Option<f64>,
    pub beta_fit_residual: Option<f64>,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub max_edge_mass: f64,
    pub boundary_contaminated: bool,
    #[serde(skip)]
    pub series: Option<MomentSeries>,
}

/// One named check on a report.
#[derive(Debug, Clone, Serialize)]
pub struct Invariant {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Geometric bound on the differences beyond the last one: with ratio
/// `r = max d_{n+1}/d_n`, the tail is `d_last r / (1 - r)`. A single
/// difference is extended with `r = 1/2`; no differences give no tail.
pub fn geometric_tail(differences: &[f64]) -> (Option<f64>, f64) {
    match differences {
        [] => (None, 0.0),
        [d] => (None, *d),
        _ => {
            let r = differences
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
                .fold(0.0f64, f64::max);
            let last = *differences.last().unwrap();
            let tail = if r < 1.0 { last * r / (1.0 - r) } else { f64::INFINITY };
            (Some(r), tail)
        }
    }
}

impl TransportReport {
    /// Recomputes the positivity certificate from the stored fields.
    pub fn certificate_consistent(&self) -> bool {
        let (r, tail) = geometric_tail(&self.differences);
        let q = self.levels.last().map_or(0.0, |l| l.q_norm);
        let claim = q > 0.0 && q > tail;
        r == self.tail_ratio && tail == self.tail_bound && claim == self.q_nonzero
    }

    pub fn invariants(&self) -> Vec<Invariant> {
        let decreasing = self.differences.windows(2).all(|w| w[1] < w[0]);
        let mut out = vec![
            Invariant {
                name: "cauchy_differences_decrease",
                pass: decreasing,
                detail: format!("{:?}", self.differences),
            },
            Invariant {
                name: "certificate_consistent",
                pass: self.certificate_consistent(),
                detail: format!(
                    "||Q_D psi|| = {:.6e}, tail bound = {:.6e}",
                    self.levels.last().map_or(0.0, |l| l.q_norm),
                    self.tail_bound
                ),
            },
            Invariant {
                name: "boundary_clean",
                pass: !self.boundary_contaminated,
                detail: format!("max edge mass {:.3e}", self.max_edge_mass),
            },
        ];
        if let Some(b) = self.beta_fit {
            out.push(Invariant {
                name: "beta_fit_in_range",
                pass: (0.0..=2.0).contains(&b),
                detail: format!("{b}"),
            });
        }
        out
    }

    /// Rows `t, residual, second_moment, x_norm, x2_norm`.
    pub fn write_series_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,residual,second_moment,x_norm,x2_norm")?;
        if let Some(s) = &self.series {
            for i in 0..s.times.len() {
                writeln!(
                    out,
                    "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                    s.times[i],
                    self.convergence.get(i).copied().unwrap_or(f64::NAN),
                    s.second[i],
                    s.x_norm[i],
                    s.x2_norm[i]
                )?;
            }
        }
        Ok(())
    }
}

/// [`cascade_with`] with default options for the given horizon and step.
pub fn cascade(
    family: &EcFamily,
    psi: &WavePacket,
    depth: usize,
    horizon: f64,
    dt: Option<f64>,
) -> Result<TransportReport> {
    let opts = CascadeOptions {
        horizon,
        dt,
        ..CascadeOptions::default()
    };
    cascade_with(family, psi, depth, &opts)
}

/// `Q_n psi` for `n <= depth` on the packet's box, Cauchy differences, the
/// positivity certificate and transport diagnostics under the deepest
/// approximant.
pub fn cascade_with(family: &EcFamily, psi: &WavePacket, depth: usize, opts: &CascadeOptions) -> Result<TransportReport> {
    if depth > family.depth() {
        return Err(Error::DepthExceeded {
            requested: depth,
            depth: family.depth(),
        });
    }
    if !(opts.horizon > 0.0) || opts.time_points < 2 {
        return Err(Error::InvalidParameter("horizon must be positive with two or more time points".into()));
    }
    let deepest = family.approximant(depth)?;
    psi.with_period(deepest.period())?;

    let c2 = match opts.c2 {
        Some(c) => c,
        None => {
            let v0 = family.approximant(0)?;
            let table = BandTable::new(&v0, opts.kpoints, crate::bands::default_max_energy(&v0))?;
            if table.c2_hat.is_finite() && table.c2_hat > 0.0 {
                table.c2_hat.min(opts.c2_cap)
            } else {
                opts.c2_cap
            }
        }
    };
    let schedule = time_schedule(family, opts.c1, opts.kappa, c2, opts.horizon)?;

    let zero = psi.norm_sqr() == 0.0;
    let qs = (0..=depth)
        .into_par_iter()
        .map(|n| {
            let v = family.approximant(n)?;
            let q = apply_q(&v, psi, None)?;
            let floquet_ratio = match floquet_mass_lower_bound(family, psi, n) {
                Ok(m) => Some(m.ratio),
                Err(Error::GridTooCoarse(_)) | Err(Error::ZeroState) => None,
                Err(e) => return Err(e),
            };
            Ok((q, floquet_ratio))
        })
        .collect::<Result<Vec<_>>>()?;

    let levels: Vec<LevelReport> = qs
        .iter()
        .enumerate()
        .map(|(n, (q, fr))| LevelReport {
            level: n,
            period: family.periods()[n],
            tail: family.tail(n),
            schedule_time: schedule.times[n],
            clipped: schedule.clipped[n],
            q_norm: q.packet.norm(),
            q_cutoff: q.cutoff,
            q_lost_weight: q.lost_weight,
            occupied_speed: q.occupied_speed(1e-8),
            floquet_mass_ratio: *fr,
        })
        .collect();
    let differences = qs
        .windows(2)
        .map(|w| w[1].0.packet.distance(&w[0].0.packet))
        .collect::<Result<Vec<_>>>()?;
    let (tail_ratio, tail_bound) = geometric_tail(&differences);
    let q_last = levels.last().map_or(0.0, |l| l.q_norm);

    let dt = opts.dt.unwrap_or_else(|| default_dt(&deepest, psi));
    let mut report = TransportReport {
        depth,
        horizon: opts.horizon,
        dt,
        c2,
        levels,
        differences,
        tail_ratio,
        tail_bound,
        q_nonzero: q_last > 0.0 && q_last > tail_bound,
        convergence_times: Vec::new(),
        convergence: Vec::new(),
        decay_exponent: None,
        beta_fit: None,
        beta_fit_residual: None,
        beta_minus: None,
        beta_plus: None,
        max_edge_mass: 0.0,
        boundary_contaminated: false,
        series: None,
    };
    if zero {
        return Ok(report);
    }

    let times: Vec<f64> = (0..opts.time_points)
        .map(|i| opts.horizon * 10f64.powf(i as f64 / (opts.time_points - 1) as f64 - 1.0))
        .collect();
    let reference = &qs[depth].0.packet;
    let series = moments_monitored(&deepest, psi, &times, dt, Some(reference), None)?;
    let residual = series.reference_residual.clone().unwrap_or_default();
    let window = (times[0], opts.horizon);
    let (beta, fit) = beta_fit(&series, window)?;
    let (bm, bp) = transport_exponents(&series, window)?;
    report.decay_exponent = loglog_fit(&times, &residual).ok().map(|f| -f.slope);
    report.convergence_times = times;
    report.convergence = residual;
    report.beta_fit = Some(beta);
    report.beta_fit_residual = Some(fit.residual);
    report.beta_minus = Some(bm);
    report.beta_plus = Some(bp);
    report.max_edge_mass = series.max_edge_mass;
    report.boundary_contaminated = series.max_edge_mass > EDGE_THRESHOLD;
    report.series = Some(series);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{moments, Gaussian};

    fn free_packet(cells: usize) -> (PeriodicPotential, WavePacket) {
        let g = Gaussian {
            center: 0.0,
            width: 2.0,
            wavenumber: 1.0,
        };
        let v = PeriodicPotential::zero(2.0 * PI).unwrap();
        (v, WavePacket::gaussian(&g, 2.0 * PI, cells, 16, 0.5).unwrap())
    }

    #[test]
    fn free_convergence_saturates_first_term() {
        let (v, psi) = free_packet(24);
        let times = [1.0, 2.0, 5.0, 10.0];
        let s = periodic_convergence(&v, &psi, &times, 0.01).unwrap();
        let xn = psi.position_mul().norm();
        for (t, r) in times.iter().zip(&s.residual) {
            assert!((r - xn / t).abs() < 1e-7, "{t} {r} {}", xn / t);
        }
        assert!((s.decay_exponent - 1.0).abs() < 1e-6);
        assert!(periodic_convergence(&v, &psi, &[0.0, 1.0], 0.01).is_err());
    }

    #[test]
    fn schedule_is_monotone_and_clips() {
        let fam = default_family();
        let s = time_schedule(&fam, 1.0, 4.5, 0.05, 1e6).unwrap();
        assert!(s.raw.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.first_clipped, s.clipped.iter().position(|c| *c));
        assert!(s.times.iter().all(|t| *t <= 1e6));
        assert!(time_schedule(&fam, 1.0, 4.0, 0.05, 1e6).is_err());
    }

    #[test]
    fn geometric_tail_cases() {
        assert_eq!(geometric_tail(&[]), (None, 0.0));
        assert_eq!(geometric_tail(&[0.3]), (None, 0.3));
        let (r, t) = geometric_tail(&[1.0, 0.5, 0.1]);
        assert_eq!(r, Some(0.5));
        assert!((t - 0.1).abs() < 1e-15);
        assert_eq!(geometric_tail(&[1.0, 2.0]).1, f64::INFINITY);
    }

    #[test]
    fn exponents_of_free_and_constant_series() {
        let (v, psi) = free_packet(48);
        let times: Vec<f64> = (0..=10).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let s = moments(&v, &psi, &times, 0.01, None).unwrap();
        let (lo, hi) = transport_exponents(&s, (1.0, 10.0)).unwrap();
        assert!(lo > 0.5 && hi <= 1.0 + 1e-9, "{lo} {hi}");
        let mut flat = s.clone();
        flat.second = vec![3.0; flat.times.len()];
        assert_eq!(transport_exponents(&flat, (1.0, 10.0)).unwrap(), (0.0, 0.0));
        assert!(matches!(transport_exponents(&s, (2.0, 10.0)), Err(Error::WindowTooShort(_))));
    }

    #[test]
    fn floquet_mass_rejects_coarse_grid_and_zero() {
        let fam = default_family();
        let g = Gaussian {
            center: 0.0,
            width: 2.0,
            wavenumber: 1.0,
        };
        let psi = WavePacket::gaussian(&g, 2.0 * PI, 16, 16, 0.5).unwrap();
        assert!(matches!(floquet_mass_lower_bound(&fam, &psi, 3), Err(Error::GridTooCoarse(_))));
        let m = floquet_mass_lower_bound(&fam, &psi, 0).unwrap();
        assert!(m.points >= 8 && m.ratio > 0.0);
        assert_eq!(floquet_mass_lower_bound(&fam, &psi.zeros_like(), 0).unwrap_err(), Error::ZeroState);
    }

    #[test]
    fn cascade_rejects_excess_depth() {
        let fam = default_family();
        let (_, psi) = free_packet(16);
        assert!(matches!(cascade(&fam, &psi, 4, 10.0, None), Err(Error::DepthExceeded { .. })));
    }
}
