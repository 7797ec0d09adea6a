//! Band edges, band functions and group velocities from the Hill
//! discriminant.
//!
//! Edges are found by scanning `Delta` on a grid uniform in
//! `s = sqrt(E + R + (pi/p)^2)`, where the free discriminant
//! `2 cos(p sqrt E)` oscillates at a constant rate. The extrema of `Delta`
//! (zeros of `Delta'`) split the energy axis into monotone segments, each of
//! which holds at most one solution of `Delta = 2` and one of `Delta = -2`.
//! An extremum that touches `+-2` within [`TOUCH_TOLERANCE`] is a closed gap
//! and is reported as a pair of coincident edges.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::monodromy::{monodromy, MonodromyResult};
use crate::potential::PeriodicPotential;

/// Extrema with `||Delta| - 2|` below this are treated as closed gaps.
pub const TOUCH_TOLERANCE: f64 = 2e-12;

const SCAN_POINTS_PER_HALF_PERIOD: f64 = 32.0;
const ROOT_TOLERANCE: f64 = 1e-12;
/// Width in `Delta` of the window around a closed gap where band functions
/// use the one-sided linear limit.
const CLOSED_WINDOW: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    /// `Delta = 2`, Bloch phase 1.
    Periodic,
    /// `Delta = -2`, Bloch phase -1.
    Antiperiodic,
}

impl Parity {
    pub fn level(self) -> f64 {
        match self {
            Parity::Periodic => 2.0,
            Parity::Antiperiodic => -2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandEdge {
    pub energy: f64,
    pub parity: Parity,
    /// Part of a coincident pair at a closed gap.
    pub closed: bool,
}

/// Default energy cutoff `40 (2 pi / p)^2 + R`.
pub fn default_max_energy(potential: &PeriodicPotential) -> f64 {
    let g = 2.0 * PI / potential.period();
    40.0 * g * g + potential.sup_bound()
}

/// All solutions of `Delta(E) = +-2` with `E <= max_energy`, ascending.
pub fn band_edges(potential: &PeriodicPotential, max_energy: f64) -> Result<Vec<BandEdge>> {
    if max_energy < -potential.sup_bound() {
        return Ok(Vec::new());
    }
    let mut edges = BandStructure::new(potential, max_energy)?.edges;
    edges.retain(|e| e.energy <= max_energy);
    Ok(edges)
}

/// Edge data for every band whose bottom lies below a cutoff.
#[derive(Debug, Clone)]
pub struct BandStructure {
    potential: PeriodicPotential,
    max_energy: f64,
    /// `2 * bands()` edges; band `n` (1-based) is `[edges[2n-2], edges[2n-1]]`.
    edges: Vec<BandEdge>,
}

struct Node {
    energy: f64,
    delta: f64,
    derivative: f64,
}

impl From<MonodromyResult> for Node {
    fn from(m: MonodromyResult) -> Self {
        Node {
            energy: m.energy,
            delta: m.discriminant,
            derivative: m.derivative,
        }
    }
}

impl BandStructure {
    pub fn new(potential: &PeriodicPotential, max_energy: f64) -> Result<Self> {
        if !max_energy.is_finite() {
            return Err(Error::InvalidParameter("max_energy must be finite".into()));
        }
        let p = potential.period();
        let r = potential.sup_bound();
        let shift = r + (PI / p).powi(2);
        let ds = PI / (SCAN_POINTS_PER_HALF_PERIOD * p);
        let energy_at = |s: f64| s * s - shift;

        let mut edges: Vec<BandEdge> = Vec::new();
        let mut prev = Node::from(monodromy(potential, energy_at(0.0))?);
        let mut s = 0.0;
        let chunk = 64;
        loop {
            let nodes: Vec<Node> = (1..=chunk)
                .into_par_iter()
                .map(|i| monodromy(potential, energy_at(s + i as f64 * ds)).map(Node::from))
                .collect::<Result<_>>()?;
            s += chunk as f64 * ds;
            for node in nodes {
                scan_interval(potential, &prev, &node, &mut edges)?;
                prev = node;
            }
            let covered = energy_at(s) >= max_energy;
            let closes_top = edges.last().is_some_and(|e| e.energy > max_energy);
            if covered && (edges.len() % 2 == 0 || closes_top) {
                break;
            }
            if energy_at(s) > max_energy + 1e4 * (1.0 + max_energy.abs()) {
                return Err(Error::BracketFailure {
                    lo: max_energy,
                    hi: energy_at(s),
                });
            }
        }
        edges.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        if edges.len() % 2 == 1 {
            // Second half of a closed gap above the cutoff.
            edges.pop();
        }
        // Bands whose bottom lies above the cutoff are not kept.
        while edges.len() >= 2 && edges[edges.len() - 2].energy > max_energy {
            edges.truncate(edges.len() - 2);
        }
        check_parity_pattern(&edges)?;
        Ok(Self {
            potential: potential.clone(),
            max_energy,
            edges,
        })
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    pub fn max_energy(&self) -> f64 {
        self.max_energy
    }

    pub fn bands(&self) -> usize {
        self.edges.len() / 2
    }

    /// All edges of the stored bands (the top edge of the last band may lie
    /// above the cutoff).
    pub fn edges(&self) -> &[BandEdge] {
        &self.edges
    }

    /// `(bottom, top)` edges of band `n` (1-based).
    pub fn band_interval(&self, n: usize) -> Result<(BandEdge, BandEdge)> {
        if n == 0 || n > self.bands() {
            return Err(Error::RootNotBracketed {
                band: n,
                target: f64::NAN,
            });
        }
        Ok((self.edges[2 * n - 2], self.edges[2 * n - 1]))
    }

    /// `E_n(k)` and `dE_n/dk`, with the monodromy data at `E_n(k)`.
    pub fn band_point(&self, n: usize, k: f64) -> Result<BandPoint> {
        let p = self.potential.period();
        let kk = fold(k, p).abs();
        let target = 2.0 * (p * kk).cos();
        let (bottom, top) = self.band_interval(n)?;

        let at_zero = kk == 0.0;
        let at_edge = at_zero || (kk - PI / p).abs() <= 1e-15 * PI / p;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        // Edge reached at this k's end of the zone, with the distance to it.
        let (near, dist) = if target > 0.0 {
            (if bottom.parity == Parity::Periodic { bottom } else { top }, kk)
        } else {
            (if bottom.parity == Parity::Antiperiodic { bottom } else { top }, PI / p - kk)
        };

        let (energy, mut velocity) = if near.closed && (target - near.parity.level()).abs() <= CLOSED_WINDOW {
            // Near a closed gap Delta is quadratic, so E_n is linear in the
            // distance to the edge; solving Delta = target is ill-conditioned.
            let slope = self.closed_edge_slope(near.energy)?;
            let e = if near == bottom {
                near.energy + slope * dist
            } else {
                near.energy - slope * dist
            };
            (e, sign * slope)
        } else if at_edge {
            (near.energy, 0.0)
        } else {
            let e = solve_monotone(&self.potential, bottom.energy, top.energy, target)
                .map_err(|_| Error::RootNotBracketed { band: n, target })?;
            (e, f64::NAN)
        };
        let m = monodromy(&self.potential, energy)?;
        if velocity.is_nan() {
            velocity = -2.0 * p * (p * kk).sin() / m.derivative;
        }
        if fold(k, p) < 0.0 {
            velocity = -velocity;
        }
        Ok(BandPoint {
            energy,
            velocity,
            derivative: m.derivative,
            discriminant: m.discriminant,
        })
    }

    /// `p sqrt(2 / |Delta''(e)|)`, the speed with which two bands leave a
    /// closed gap at `e`.
    fn closed_edge_slope(&self, e: f64) -> Result<f64> {
        let h = 1e-5 * e.abs().max(1.0);
        let d2 = (monodromy(&self.potential, e + h)?.derivative
            - monodromy(&self.potential, e - h)?.derivative)
            / (2.0 * h);
        Ok(self.potential.period() * (2.0 / d2.abs()).sqrt())
    }

    /// `(E_n(k), dE_n/dk)`.
    pub fn band_function(&self, n: usize, k: f64) -> Result<(f64, f64)> {
        let b = self.band_point(n, k)?;
        Ok((b.energy, b.velocity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub energy: f64,
    pub velocity: f64,
    /// `Delta'(E_n(k))`.
    pub derivative: f64,
    /// `Delta(E_n(k))`, which should equal `2 cos(pk)`.
    pub discriminant: f64,
}

/// `(E_n(k), dE_n/dk)` for band `n` (1-based); computes the edges on demand.
pub fn band_function(potential: &PeriodicPotential, n: usize, k: f64) -> Result<(f64, f64)> {
    let mut cutoff = default_max_energy(potential);
    loop {
        let bs = BandStructure::new(potential, cutoff)?;
        if bs.bands() >= n {
            return bs.band_function(n, k);
        }
        cutoff = 2.0 * cutoff.abs() + 1.0;
    }
}

/// Folds `k` into `(-pi/p, pi/p]`.
pub fn fold(k: f64, p: f64) -> f64 {
    let g = 2.0 * PI / p;
    let mut r = k - g * (k / g).round();
    if r <= -PI / p {
        r += g;
    }
    if r > PI / p {
        r -= g;
    }
    r
}

fn scan_interval(
    potential: &PeriodicPotential,
    a: &Node,
    b: &Node,
    edges: &mut Vec<BandEdge>,
) -> Result<()> {
    // Split at an interior extremum, if any.
    let mut pieces: Vec<(f64, f64, bool)> = vec![(a.energy, a.delta, false)];
    if a.derivative.signum() != b.derivative.signum() && a.derivative != 0.0 {
        let e = bisect(a.energy, b.energy, |z| {
            monodromy(potential, z).map(|m| m.derivative.signum() == a.derivative.signum())
        })?;
        let d = monodromy(potential, e)?.discriminant;
        let touch = (d.abs() - 2.0).abs() <= TOUCH_TOLERANCE;
        if touch {
            let parity = if d > 0.0 {
                Parity::Periodic
            } else {
                Parity::Antiperiodic
            };
            for _ in 0..2 {
                edges.push(BandEdge {
                    energy: e,
                    parity,
                    closed: true,
                });
            }
        }
        pieces.push((e, d, touch));
    }
    pieces.push((b.energy, b.delta, false));

    for w in pieces.windows(2) {
        let (ea, da, ta) = w[0];
        let (eb, db, tb) = w[1];
        for parity in [Parity::Periodic, Parity::Antiperiodic] {
            let level = parity.level();
            let (fa, fb) = (da - level, db - level);
            let touching_end = (ta && da.signum() == level.signum()) || (tb && db.signum() == level.signum());
            if touching_end {
                continue;
            }
            if fa == 0.0 {
                continue; // counted as the right end of the previous interval
            }
            if fb == 0.0 || fa.signum() != fb.signum() {
                let e = if fb == 0.0 {
                    eb
                } else {
                    bisect(ea, eb, |z| {
                        monodromy(potential, z).map(|m| (m.discriminant - level).signum() == fa.signum())
                    })?
                };
                edges.push(BandEdge {
                    energy: e,
                    parity,
                    closed: false,
                });
            }
        }
    }
    Ok(())
}

/// Bisects `[lo, hi]` where `left(lo)` holds and `left(hi)` does not.
fn bisect<F>(mut lo: f64, mut hi: f64, left: F) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= ROOT_TOLERANCE * 1e-3 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if left(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BracketFailure { lo, hi })
}

/// Solves `Delta(E) = target` on a band, where `Delta` is monotone.
/// Newton steps are taken only while they stay inside the shrinking bracket.
fn solve_monotone(potential: &PeriodicPotential, lo: f64, hi: f64, target: f64) -> Result<f64> {
    let f_lo = monodromy(potential, lo)?.discriminant - target;
    let f_hi = monodromy(potential, hi)?.discriminant - target;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        // Targets within roundoff of +-2 at an open edge.
        let (f, e) = if f_lo.abs() < f_hi.abs() { (f_lo, lo) } else { (f_hi, hi) };
        if f.abs() <= 10.0 * TOUCH_TOLERANCE {
            return Ok(e);
        }
        return Err(Error::BracketFailure { lo, hi });
    }
    let lo_sign = f_lo.signum();
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let m = monodromy(potential, x)?;
        let f = m.discriminant - target;
        if f == 0.0 {
            return Ok(x);
        }
        if f.signum() == lo_sign {
            a = x;
        } else {
            b = x;
        }
        let newton = x - f / m.derivative;
        let next = if m.derivative != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let tol = ROOT_TOLERANCE * (1.0 + x.abs());
        if (next - x).abs() <= tol || b - a <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::BracketFailure { lo: a, hi: b })
}

fn check_parity_pattern(edges: &[BandEdge]) -> Result<()> {
    for (i, e) in edges.iter().enumerate() {
        // lambda_0 (+), lambda_1 lambda_2 (-), lambda_3 lambda_4 (+), ...
        let want = if ((i + 1) / 2) % 2 == 0 {
            Parity::Periodic
        } else {
            Parity::Antiperiodic
        };
        if e.parity != want {
            let lo = if i > 0 { edges[i - 1].energy } else { e.energy };
            return Err(Error::BracketFailure { lo, hi: e.energy });
        }
    }
    Ok(())
}

/// Band energies and velocities on a quasimomentum grid.
#[derive(Debug, Clone, Serialize)]
pub struct BandTable {
    pub period: f64,
    pub bound: f64,
    pub kgrid: Vec<f64>,
    /// `energies[n][j] = E_{n+1}(k_j)`.
    pub energies: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// `Delta'(E_{n+1}(k_j))`.
    pub derivatives: Vec<Vec<f64>>,
    pub edges: Vec<BandEdge>,
    /// Empirical constant making `sup |Delta'| = C p^2 exp(2 C sqrt(R) p)`.
    pub c2_hat: f64,
    pub sup_derivative: f64,
    #[serde(skip)]
    structure: BandStructure,
}

/// `K` points `k_j = -pi/p + (j + 1) 2 pi / (K p)`, so the grid ends at
/// `pi/p` and contains `0` for even `K`.
pub fn zone_grid(period: f64, kpoints: usize) -> Vec<f64> {
    let dk = 2.0 * PI / (kpoints as f64 * period);
    (0..kpoints)
        .map(|j| {
            let k = -PI / period + (j + 1) as f64 * dk;
            if k.abs() < 1e-14 * dk {
                0.0
            } else {
                k
            }
        })
        .collect()
}

impl BandTable {
    pub fn new(potential: &PeriodicPotential, kpoints: usize, max_energy: f64) -> Result<Self> {
        if kpoints < 2 {
            return Err(Error::InvalidParameter("need at least 2 k-points".into()));
        }
        let structure = BandStructure::new(potential, max_energy)?;
        let kgrid = zone_grid(potential.period(), kpoints);
        let nb = structure.bands();
        let points: Vec<BandPoint> = (0..nb * kpoints)
            .into_par_iter()
            .map(|idx| structure.band_point(idx / kpoints + 1, kgrid[idx % kpoints]))
            .collect::<Result<_>>()?;
        let rows = |f: fn(&BandPoint) -> f64| -> Vec<Vec<f64>> {
            points.chunks(kpoints).map(|c| c.iter().map(f).collect()).collect()
        };
        let energies = rows(|b| b.energy);
        let velocities = rows(|b| b.velocity);
        let derivatives = rows(|b| b.derivative);

        let sup_derivative = derivatives
            .iter()
            .flatten()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));
        let c2_hat = solve_c2(sup_derivative, potential.period(), potential.sup_bound());
        Ok(Self {
            period: potential.period(),
            bound: potential.sup_bound(),
            kgrid,
            energies,
            velocities,
            derivatives,
            edges: structure.edges().to_vec(),
            c2_hat,
            sup_derivative,
            structure,
        })
    }

    pub fn bands(&self) -> usize {
        self.energies.len()
    }

    pub fn structure(&self) -> &BandStructure {
        &self.structure
    }

    /// `max_{n,k} |v_n(k) Delta'(E_n(k)) + 2p sin(pk)| / (1 + |Delta'|)`.
    pub fn velocity_identity_residual(&self) -> f64 {
        let p = self.period;
        let mut worst = 0.0f64;
        for (vs, ds) in self.velocities.iter().zip(&self.derivatives) {
            for ((v, d), k) in vs.iter().zip(ds).zip(&self.kgrid) {
                let r = (v * d + 2.0 * p * (p * k).sin()).abs() / (1.0 + d.abs());
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Smallest `|E_m(k2) - E_m(k1)| / (k2 - k1)^2` over grid pairs in
    /// `[0, pi/p]`.
    pub fn holder_constant(&self) -> f64 {
        let idx: Vec<usize> = (0..self.kgrid.len()).filter(|&j| self.kgrid[j] >= 0.0).collect();
        let mut c = f64::INFINITY;
        for row in &self.energies {
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a + 1..] {
                    let dk = self.kgrid[j] - self.kgrid[i];
                    c = c.min((row[j] - row[i]).abs() / (dk * dk));
                }
            }
        }
        c
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,k,E,v")?;
        for (n, (es, vs)) in self.energies.iter().zip(&self.velocities).enumerate() {
            for ((e, v), k) in es.iter().zip(vs).zip(&self.kgrid) {
                writeln!(out, "{},{:.11e},{:.11e},{:.11e}", n + 1, k, e, v)?;
            }
        }
        Ok(())
    }

    /// Measure of the bad set `{k : exists n != m, |E_m(k) - E_n(k)| <= eps}`
    /// over the bands in the table.
    pub fn bad_set_measure(&self, epsilon: f64) -> Result<BadSet> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let half = self.kgrid.iter().filter(|k| **k >= 0.0).count();
        if half < 2 || self.bands() < 2 {
            return Err(Error::GridTooCoarse(format!(
                "{half} k-points in [0, pi/p] and {} bands",
                self.bands()
            )));
        }
        let zone = PI / self.period;
        let s = &self.structure;
        let energy = |n: usize, k: f64| s.band_point(n, k).map(|b| b.energy);

        // Adjacent bands n, n+1 are closest at k = pi/p (n odd) or 0 (n even)
        // and their separation grows monotonically away from there.
        let mut from_zero = 0.0f64;
        let mut from_edge = 0.0f64;
        for n in 1..self.bands() {
            let anchor = if n % 2 == 1 { zone } else { 0.0 };
            let gap = |k: f64| -> Result<f64> { Ok(energy(n + 1, k)? - energy(n, k)?) };
            let width = monotone_width(anchor, zone, epsilon, &gap)?;
            if anchor == 0.0 {
                from_zero = from_zero.max(width);
            } else {
                from_edge = from_edge.max(width);
            }
        }
        let measure = 2.0 * (from_zero + from_edge).min(zone);

        // Cover of the bad set by neighbourhoods of each band's extrema.
        // `|E_n(k) - E_n(edge)| <= eps` ends where `E_n = edge +- eps`, which
        // the discriminant converts back to a quasimomentum.
        let mut cover_zero = 0.0f64;
        let mut cover_edge = 0.0f64;
        for n in 1..=self.bands() {
            let (bottom, top) = s.band_interval(n)?;
            for (from, to) in [(bottom, top), (top, bottom)] {
                let width = if (to.energy - from.energy).abs() <= epsilon {
                    zone
                } else {
                    let e = from.energy + epsilon * (to.energy - from.energy).signum();
                    let c = (monodromy(&self.structure.potential, e)?.discriminant / 2.0).clamp(-1.0, 1.0);
                    let k = c.acos() / self.period;
                    if from.parity == Parity::Periodic {
                        k
                    } else {
                        zone - k
                    }
                };
                if from.parity == Parity::Periodic {
                    cover_zero = cover_zero.max(width);
                } else {
                    cover_edge = cover_edge.max(width);
                }
            }
        }
        let edge_cover = 2.0 * (cover_zero + cover_edge).min(zone);

        let c = self.c2_hat;
        let bound = 4.0 * (c * PI).sqrt() * (c * self.bound.sqrt() * self.period).exp() * epsilon.sqrt();
        Ok(BadSet {
            epsilon,
            measure,
            edge_cover,
            bound,
        })
    }
}

/// Length of `{k in [0, zone] : f(k) <= eps}` for `f` increasing in the
/// distance from `anchor` (which is `0` or `zone`).
fn monotone_width<F>(anchor: f64, zone: f64, eps: f64, f: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let far = zone - anchor;
    if f(anchor)? > eps {
        return Ok(0.0);
    }
    if f(far)? <= eps {
        return Ok(zone);
    }
    // Illinois regula falsi on the distance from the anchor.
    let at = |x: f64| if anchor == 0.0 { x } else { zone - x };
    let (mut x0, mut g0) = (0.0, f(at(0.0))? - eps);
    let (mut x1, mut g1) = (zone, f(at(zone))? - eps);
    let mut side = 0;
    for _ in 0..100 {
        let x = if g1 != g0 { (x0 * g1 - x1 * g0) / (g1 - g0) } else { 0.5 * (x0 + x1) };
        let x = if x > x0 && x < x1 { x } else { 0.5 * (x0 + x1) };
        let g = f(at(x))? - eps;
        if g.abs() <= 1e-14 * (1.0 + eps) {
            return Ok(x);
        }
        if g <= 0.0 {
            x0 = x;
            g0 = g;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        } else {
            x1 = x;
            g1 = g;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        }
        if x1 - x0 <= 1e-13 * zone {
            break;
        }
    }
    Ok(0.5 * (x0 + x1))
}

/// Solves `S = C p^2 exp(2 C sqrt(R) p)` for `C > 0`.
fn solve_c2(sup: f64, p: f64, r: f64) -> f64 {
    if sup <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * p * p * (2.0 * c * r.sqrt() * p).exp() - sup;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bad-set measure with its edge-neighbourhood cover and the comparison
/// value `4 sqrt(C pi) exp(C sqrt(R) p) sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadSet {
    pub epsilon: f64,
    /// Lebesgue measure of the bad set itself.
    pub measure: f64,
    /// Measure of the union over bands of `{k : |E_n(k) - E_n(edge)| <= eps}`,
    /// which contains the bad set and scales like `sqrt(eps)` at open gaps.
    pub edge_cover: f64,
    pub bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_edges_are_squares() {
        let v = PeriodicPotential::zero(PI).unwrap();
        let edges = band_edges(&v, 10.0).unwrap();
        let e: Vec<f64> = edges.iter().map(|e| e.energy).collect();
        let expect = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0];
        assert_eq!(e.len(), expect.len(), "{e:?}");
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8, "{e:?}");
        }
        assert!(edges[1].closed && edges[2].closed && !edges[0].closed);
    }

    #[test]
    fn empty_below_spectrum() {
        let v = PeriodicPotential::mathieu();
        assert!(band_edges(&v, -2.5).unwrap().is_empty());
    }

    #[test]
    fn free_band_functions() {
        let v = PeriodicPotential::zero(PI).unwrap();
        let bs = BandStructure::new(&v, 10.0).unwrap();
        let (e, vel) = bs.band_function(1, 0.5).unwrap();
        assert!((e - 0.25).abs() < 1e-10 && (vel - 1.0).abs() < 1e-8);
        let (e, vel) = bs.band_function(2, 0.5).unwrap();
        assert!((e - 2.25).abs() < 1e-10 && (vel + 3.0).abs() < 1e-8);
        let (_, vm) = bs.band_function(2, -0.5).unwrap();
        assert!((vm - 3.0).abs() < 1e-8);
    }

    #[test]
    fn closed_gap_one_sided_velocity() {
        let v = PeriodicPotential::zero(PI).unwrap();
        let bs = BandStructure::new(&v, 10.0).unwrap();
        // Bands 2 and 3 touch at k = 0, E = 4.
        let (e2, v2) = bs.band_function(2, 0.0).unwrap();
        let (e3, v3) = bs.band_function(3, 0.0).unwrap();
        assert!((e2 - 4.0).abs() < 1e-9 && (e3 - 4.0).abs() < 1e-9);
        assert!((v2 + 4.0).abs() < 1e-5, "{v2}");
        assert!((v3 - 4.0).abs() < 1e-5, "{v3}");
        // Bands 1 and 2 touch at k = pi/p = 1, E = 1.
        let (_, v1) = bs.band_function(1, 1.0).unwrap();
        let (_, v2) = bs.band_function(2, 1.0).unwrap();
        assert!((v1 - 2.0).abs() < 1e-5 && (v2 + 2.0).abs() < 1e-5);
    }

    #[test]
    fn out_of_range_band() {
        let v = PeriodicPotential::zero(PI).unwrap();
        let bs = BandStructure::new(&v, 10.0).unwrap();
        assert!(matches!(
            bs.band_function(9, 0.3),
            Err(Error::RootNotBracketed { band: 9, .. })
        ));
    }

    #[test]
    fn fold_into_zone() {
        let p = 2.0;
        assert!((fold(PI / p, p) - PI / p).abs() < 1e-15);
        assert!((fold(-PI / p, p) - PI / p).abs() < 1e-15);
        assert!((fold(0.3 + 2.0 * PI / p, p) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn c2_equation() {
        let c = solve_c2(50.0, 3.0, 2.0);
        assert!((c * 9.0 * (2.0 * c * 2f64.sqrt() * 3.0).exp() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn free_bad_set_zero_epsilon() {
        let v = PeriodicPotential::zero(PI).unwrap();
        let t = BandTable::new(&v, 16, 10.0).unwrap();
        let b = t.bad_set_measure(0.0).unwrap();
        assert!(b.measure < 1e-12, "{}", b.measure);
        let big = t.bad_set_measure(1e3).unwrap();
        assert!((big.measure - 2.0 * PI / PI).abs() < 1e-12);
    }
}
