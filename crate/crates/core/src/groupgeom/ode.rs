//! Adaptive Dormand–Prince 5(4) integrator.

use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_steps: 200_000 }
    }
}

impl OdeOptions {
    pub fn tight() -> Self {
        OdeOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}: the flow appears to blow up (state {state:?})")]
    BlowUp { t: f64, state: Vec<f64> },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(y)` from `t = 0` to `t1` (either sign).
pub fn integrate<F>(mut f: F, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t1 == 0.0 || n == 0 {
        return Ok(y);
    }
    let dir = t1.signum();
    let span = t1.abs();
    let mut t = 0.0;
    let mut h = (0.05 * span).min(0.05);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    f(&y, &mut k[0])?;
    let h_min = 1e-13 * span.max(1.0);
    for _ in 0..opts.max_steps {
        if t >= span {
            return Ok(y);
        }
        if t + h > span {
            h = span - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += dir * h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(&tmp, &mut tail[0])?;
        }
        let mut err = 0.0;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][i];
                s4 += B4[s] * k[s][i];
            }
            y5[i] = y[i] + dir * h * s5;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            let e = h * (s5 - s4) / sc;
            err += e * e;
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            if h <= h_min {
                return Err(OdeError::NonFinite { t: dir * t });
            }
            h *= 0.1;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite { t: dir * t });
            }
            // first-same-as-last: stage 7 was evaluated at the new point
            let last = k[6].clone();
            k[0] = last;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < h_min && t < span {
            return Err(OdeError::BlowUp { t: dir * t, state: y });
        }
    }
    Err(OdeError::TooManySteps { t: dir * t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = integrate(
            |y, out| {
                out[0] = y[0];
                Ok(())
            },
            &[1.0],
            1.5,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 1.5f64.exp()).abs() < 1e-9 * 1.5f64.exp());
        let y = integrate(
            |y, out| {
                out[0] = y[0];
                Ok(())
            },
            &[1.0],
            -2.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rotation_is_accurate() {
        let y = integrate(
            |y, out| {
                out[0] = -y[1];
                out[1] = y[0];
                Ok(())
            },
            &[1.0, 0.0],
            10.0,
            &OdeOptions::tight(),
        )
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] - 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn blow_up_detected() {
        let r = integrate(
            |y, out| {
                out[0] = y[0] * y[0];
                Ok(())
            },
            &[1.0],
            2.0,
            &OdeOptions::default(),
        );
        assert!(matches!(r, Err(OdeError::BlowUp { .. }) | Err(OdeError::NonFinite { .. })), "{r:?}");
    }
}
