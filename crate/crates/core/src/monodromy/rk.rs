//! Adaptive explicit Runge–Kutta of order 8 with embedded 5th and 3rd order
//! error estimators, on a flat complex state vector.

use super::tableau::{A, B, C, E3, E5, STAGES};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug)]
pub(crate) enum RkFailure {
    Underflow { t: f64 },
    Budget { t: f64 },
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 6.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1`, overwriting `y`.
///
/// The error of each step is measured against `rtol · max(‖y‖∞, ‖y_new‖∞)`,
/// which keeps the control meaningful when ψ grows like `e^{|Im z| t}`.
pub(crate) fn integrate<F>(
    mut f: F,
    y: &mut [C64],
    t0: f64,
    t1: f64,
    rtol: f64,
    max_steps: usize,
) -> Result<StepStats, RkFailure>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let dim = y.len();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; STAGES];
    let mut stage = vec![C64::new(0.0, 0.0); dim];
    let mut y_new = vec![C64::new(0.0, 0.0); dim];
    let mut stats = StepStats::default();

    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(stats);
    }
    let mut t = t0;
    f(t, y, &mut k[0]);
    let y_norm = inf_norm(y).max(f64::MIN_POSITIVE);
    let f_norm = inf_norm(&k[0]);
    let mut h = if f_norm > 0.0 {
        (0.05 * y_norm / f_norm).min(span)
    } else {
        span
    };
    h = h.max(1e-6 * span);
    let mut last_accepted_reject = false;

    loop {
        if stats.accepted + stats.rejected >= max_steps {
            return Err(RkFailure::Budget { t });
        }
        let remaining = t1 - t;
        let mut final_step = false;
        if h >= remaining {
            h = remaining;
            final_step = true;
        }
        if h <= 1e-15 * t.abs().max(1.0) {
            return Err(RkFailure::Underflow { t });
        }

        for s in 1..STAGES {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += k[j][i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            f(t + C[s] * h, &stage, &mut rest[0]);
        }
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..dim {
            let mut acc = y[i];
            let mut e5 = C64::new(0.0, 0.0);
            let mut e3 = C64::new(0.0, 0.0);
            for s in 0..STAGES {
                let ks = k[s][i];
                if B[s] != 0.0 {
                    acc += ks * (h * B[s]);
                }
                if E5[s] != 0.0 {
                    e5 += ks * E5[s];
                }
                if E3[s] != 0.0 {
                    e3 += ks * E3[s];
                }
            }
            y_new[i] = acc;
            err5 += e5.norm_sqr();
            err3 += e3.norm_sqr();
        }
        let scale = rtol * inf_norm(y).max(inf_norm(&y_new)).max(f64::MIN_POSITIVE);
        let err5 = err5 / (scale * scale);
        let err3 = err3 / (scale * scale);
        let denom = err5 + 0.01 * err3;
        let err = if denom > 0.0 {
            h * err5 / (denom * dim as f64).sqrt()
        } else {
            0.0
        };
        if !err.is_finite() {
            stats.rejected += 1;
            h *= MIN_FACTOR;
            last_accepted_reject = true;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = if final_step { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            if final_step {
                return Ok(stats);
            }
            f(t, y, &mut k[0]);
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if last_accepted_reject {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_accepted_reject = false;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_FACTOR, 1.0);
            last_accepted_reject = true;
        }
    }
}

#[inline]
fn inf_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let lam = C64::new(-0.3, 2.0);
        let mut y = vec![C64::new(1.0, 0.0)];
        let stats = integrate(|_, y, out| out[0] = lam * y[0], &mut y, 0.0, 3.0, 1e-12, 10_000).unwrap();
        let want = (lam * 3.0).exp();
        assert!((y[0] - want).norm() < 1e-11, "{}", (y[0] - want).norm());
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_scalar() {
        // y' = cos(t) y → y = e^{sin t}
        let mut y = vec![C64::new(1.0, 0.0)];
        integrate(|t, y, out| out[0] = y[0] * t.cos(), &mut y, 0.0, 2.0, 1e-12, 10_000).unwrap();
        assert!((y[0].re - 2f64.sin().exp()).abs() < 1e-11);
    }

    #[test]
    fn tighter_tolerance_costs_more_steps() {
        let run = |rtol| {
            let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            integrate(
                |_, y, out| {
                    out[0] = y[1] * 10.0;
                    out[1] = -y[0] * 10.0;
                },
                &mut y,
                0.0,
                1.0,
                rtol,
                100_000,
            )
            .unwrap()
            .accepted
        };
        assert!(run(1e-12) > run(1e-6));
    }

    #[test]
    fn budget_is_enforced() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let r = integrate(|_, y, out| out[0] = y[0] * C64::new(0.0, 500.0), &mut y, 0.0, 1.0, 1e-13, 5);
        assert!(matches!(r, Err(RkFailure::Budget { .. })));
    }
}
