//! Fiber operators `H(k) = (D + k)^2 + V` in the plane-wave basis
//! `e^{2 pi i g x / p}`, `|g| <= M`, the discrete Floquet transform and the
//! asymptotic velocity operator.

mod floquet;
mod velocity;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use floquet::{floquet, inverse_floquet, zone_momenta, FloquetField};
pub use velocity::{
    apply_q, apply_q_with_bands, decay_constant, fiber_uniform_bound, QResult, UniformBound,
    SPECTRAL_WEIGHT_TOLERANCE,
};

use crate::bands::fold;
use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;

/// `max(64, ceil(p sqrt(E_max + R) / pi) + 16)`.
pub fn default_cutoff(potential: &PeriodicPotential, max_energy: f64) -> usize {
    let e = (max_energy + potential.sup_bound()).max(0.0);
    let m = (potential.period() * e.sqrt() / PI).ceil() as usize + 16;
    m.max(64)
}

/// `2 pi g / p + k` for `g = -M..=M`.
pub fn shifted_momenta(period: f64, k: f64, cutoff: usize) -> Vec<f64> {
    let m = cutoff as i64;
    (-m..=m).map(|g| 2.0 * PI * g as f64 / period + k).collect()
}

/// The `(2M+1) x (2M+1)` real symmetric matrix of `H(k)`.
pub fn fiber_matrix(potential: &PeriodicPotential, k: f64, cutoff: usize) -> DMatrix<f64> {
    let n = 2 * cutoff + 1;
    let q = shifted_momenta(potential.period(), k, cutoff);
    let band = potential.bandwidth();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = q[i] * q[i] + potential.fourier(0);
        for d in 1..=band.min(n - 1 - i) {
            let v = potential.fourier(d as i64);
            h[(i, i + d)] = v;
            h[(i + d, i)] = v;
        }
    }
    h
}

/// Eigenpairs of `H(k)` kept after discarding the top quarter of the
/// truncated spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberEigensystem {
    pub k: f64,
    pub period: f64,
    pub cutoff: usize,
    pub eigenvalues: Vec<f64>,
    /// Columns are plane-wave coefficients of the eigenvectors, indexed by
    /// `g + M`.
    pub eigenvectors: DMatrix<f64>,
    /// `dE_n/dk = <u_n, 2(D + k) u_n>`.
    pub velocities: Vec<f64>,
    /// `||H(k) u_n - E_n u_n||` in the truncated basis.
    pub residuals: Vec<f64>,
}

/// Relative width of an eigenvalue cluster treated as degenerate.
const CLUSTER_TOLERANCE: f64 = 1e-8;

pub fn fiber_eigensystem(potential: &PeriodicPotential, k: f64, cutoff: usize) -> Result<FiberEigensystem> {
    if cutoff < 1 {
        return Err(Error::CutoffTooSmall("cutoff must be at least 1".into()));
    }
    if !k.is_finite() {
        return Err(Error::InvalidParameter(format!("quasimomentum must be finite, got {k}")));
    }
    let p = potential.period();
    let h = fiber_matrix(potential, k, cutoff);
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let keep = (3 * n) / 4;
    let order = &order[..keep.max(1)];

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, order.len());
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    let twice_q: Vec<f64> = shifted_momenta(p, k, cutoff).iter().map(|q| 2.0 * q).collect();
    let velocities = resolve_velocities(&eigenvalues, &mut vecs, &twice_q, fold(k, p), p);
    let residuals = (0..eigenvalues.len())
        .map(|c| {
            let u = vecs.column(c);
            (&h * u - u * eigenvalues[c]).norm()
        })
        .collect();
    Ok(FiberEigensystem {
        k,
        period: p,
        cutoff,
        eigenvalues,
        eigenvectors: vecs,
        velocities,
        residuals,
    })
}

/// Hellmann-Feynman velocities. Inside a degenerate cluster the basis is
/// rotated to diagonalise `2(D + k)`, and the one-sided velocities are
/// assigned so each band keeps the sign `(-1)^{n+1}` of its slope on
/// `(0, pi/p)`: ascending velocity with ascending band index for
/// `k in [0, pi/2p]`, descending for `k in (pi/2p, pi/p]`, mirrored for
/// negative `k`.
fn resolve_velocities(values: &[f64], vecs: &mut DMatrix<f64>, twice_q: &[f64], k: f64, p: f64) -> Vec<f64> {
    let n = values.len();
    let ascending = (k >= 0.0 && k <= PI / (2.0 * p)) || k < -PI / (2.0 * p);
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[j] - values[j - 1] <= CLUSTER_TOLERANCE * values[j].abs().max(1.0) {
            j += 1;
        }
        let s = j - i;
        if s == 1 {
            let u = vecs.column(i);
            out[i] = u.iter().zip(twice_q).map(|(a, w)| w * a * a).sum();
        } else {
            let block = vecs.columns(i, s).into_owned();
            let weighted = DMatrix::from_fn(block.nrows(), s, |r, c| twice_q[r] * block[(r, c)]);
            let small = block.transpose() * weighted;
            let e = SymmetricEigen::new(small);
            let mut idx: Vec<usize> = (0..s).collect();
            idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
            if !ascending {
                idx.reverse();
            }
            for (c, &t) in idx.iter().enumerate() {
                let col = &block * e.eigenvectors.column(t);
                vecs.set_column(i + c, &col);
                out[i + c] = e.eigenvalues[t];
            }
        }
        i = j;
    }
    out
}

impl FiberEigensystem {
    pub fn retained(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `(E_n(k), dE_n/dk)` for band `n` (1-based).
    pub fn band(&self, n: usize) -> Result<(f64, f64)> {
        if n == 0 || n > self.retained() {
            return Err(Error::CutoffTooSmall(format!(
                "band {n} requested, {} reliable eigenpairs at cutoff {}",
                self.retained(),
                self.cutoff
            )));
        }
        Ok((self.eigenvalues[n - 1], self.velocities[n - 1]))
    }

    /// `max |<u_a, u_b> - delta_ab|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let mut worst = 0.0f64;
        for a in 0..g.nrows() {
            for b in 0..g.ncols() {
                let d = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g[(a, b)] - d).abs());
            }
        }
        worst
    }
}

/// Operator norm of `(H(k) + 2R)^{1/2} (D + k) (H(k) + 2R)^{-1}` in the
/// basis `|g| <= M`.
pub fn m1_norm_truncated(potential: &PeriodicPotential, k: f64, r: f64, cutoff: usize) -> Result<f64> {
    if !(r > 0.0) || r < potential.sup_bound() {
        return Err(Error::InvalidParameter(format!(
            "R must be positive and at least ||V|| = {}, got {r}",
            potential.sup_bound()
        )));
    }
    if cutoff < 1 {
        return Err(Error::CutoffTooSmall("cutoff must be at least 1".into()));
    }
    let mut s = fiber_matrix(potential, k, cutoff);
    for i in 0..s.nrows() {
        s[(i, i)] += 2.0 * r;
    }
    let eig = SymmetricEigen::new(s);
    let u = &eig.eigenvectors;
    let q = shifted_momenta(potential.period(), k, cutoff);
    let kq = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| q[i] * u[(i, j)]);
    let mut a = u.transpose() * kq;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            a[(i, j)] *= eig.eigenvalues[i].sqrt() / eig.eigenvalues[j];
        }
    }
    let ata = a.transpose() * &a;
    let top = SymmetricEigen::new(ata).eigenvalues.max();
    Ok(top.max(0.0).sqrt())
}

/// [`m1_norm_truncated`] extrapolated in the cutoff: the truncated norm
/// approaches its supremum like `1/M^2`, so the values at `M` and `2M` are
/// combined as `(4 N(2M) - N(M)) / 3`.
pub fn m1_norm(potential: &PeriodicPotential, k: f64, r: f64, cutoff: usize) -> Result<f64> {
    let coarse = m1_norm_truncated(potential, k, r, cutoff)?;
    let fine = m1_norm_truncated(potential, k, r, 2 * cutoff)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
