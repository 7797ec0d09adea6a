//! Dormand–Prince 5(4) embedded Runge–Kutta pair with local extrapolation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 10_000_000;

/// Integrates `y' = f(x, y)` from `x0` to `x1 > x0` with steps capped at
/// `max_step`.
pub fn integrate<const N: usize, F>(
    f: F,
    x0: f64,
    x1: f64,
    y0: [f64; N],
    max_step: f64,
    tol: Tolerance,
) -> Result<([f64; N], Stats)>
where
    F: Fn(f64, &[f64; N], &mut [f64; N]),
{
    let span = x1 - x0;
    let mut stats = Stats::default();
    if span <= 0.0 {
        return Ok((y0, stats));
    }
    let min_step = 1e-14 * span.max(1.0);
    let mut x = x0;
    let mut y = y0;
    let mut h = max_step.min(span);

    let mut k1 = [0.0; N];
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];
    let mut tmp = [0.0; N];
    let mut ynew = [0.0; N];
    f(x, &y, &mut k1);

    while x < x1 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::StepUnderflow { x, step: h });
        }
        let last = x + h >= x1;
        if last {
            h = x1 - x;
        }
        for i in 0..N {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(x + C2 * h, &tmp, &mut k2);
        for i in 0..N {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(x + C3 * h, &tmp, &mut k3);
        for i in 0..N {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(x + C4 * h, &tmp, &mut k4);
        for i in 0..N {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(x + C5 * h, &tmp, &mut k5);
        for i in 0..N {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(x + h, &tmp, &mut k6);
        for i in 0..N {
            ynew[i] = y[i]
                + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let xnew = if last { x1 } else { x + h };
        f(xnew, &ynew, &mut k7);

        let mut err = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.abs + tol.rel * y[i].abs().max(ynew[i].abs());
            err += (e / scale) * (e / scale);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            x = xnew;
            y = ynew;
            k1 = k7;
            if last {
                break;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(max_step);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < min_step {
                return Err(Error::StepUnderflow { x, step: h });
            }
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let w = 3.0;
        let period = 2.0 * std::f64::consts::PI / w;
        let (y, stats) = integrate(
            |_, y: &[f64; 2], d: &mut [f64; 2]| {
                d[0] = y[1];
                d[1] = -w * w * y[0];
            },
            0.0,
            period,
            [1.0, 0.0],
            period / 16.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9, "{}", y[0]);
        assert!(y[1].abs() < 1e-8);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn exponential_growth() {
        let (y, _) = integrate(
            |_, y: &[f64; 1], d: &mut [f64; 1]| d[0] = y[0],
            0.0,
            2.0,
            [1.0],
            0.1,
            Tolerance::default(),
        )
        .unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
    }
}
