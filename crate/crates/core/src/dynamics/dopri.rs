//! Dormand–Prince 5(4) with FSAL, RMS error norm and sample-time clamping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_steps: 20_000_000,
        }
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (a, k) in terms {
            if *a != 0.0 {
                acc += k[i] * *a;
            }
        }
        *o = y[i] + acc * h;
    }
}

impl Dopri5 {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Dopri5 {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    fn scaled_rms(&self, e: impl Iterator<Item = (C64, f64)>, n: usize) -> f64 {
        let mut acc = 0.0;
        for (v, y) in e {
            let sk = self.abs_tol + self.rel_tol * y;
            let r = v.norm() / sk;
            acc += r * r;
        }
        (acc / n.max(1) as f64).sqrt()
    }

    /// Integrates y' = f(t, y) from `t0`, calling `on_sample(i, t_i, y(t_i))`
    /// at each requested time. Sample times must be sorted and ≥ t0; they are
    /// hit exactly.
    pub fn integrate<F, O>(&self, mut f: F, t0: f64, y0: Vec<C64>, samples: &[f64], mut on_sample: O) -> Result<Stats>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        O: FnMut(usize, f64, &[C64]) -> Result<()>,
    {
        let n = y0.len();
        let mut stats = Stats::default();
        let mut y = y0;
        let mut t = t0;
        let mut next = 0;
        while next < samples.len() && samples[next] <= t0 {
            on_sample(next, samples[next], &y)?;
            next += 1;
        }
        if next == samples.len() {
            return Ok(stats);
        }
        let t_end = samples[samples.len() - 1];

        let mut k1 = vec![ZERO; n];
        let mut k2 = vec![ZERO; n];
        let mut k3 = vec![ZERO; n];
        let mut k4 = vec![ZERO; n];
        let mut k5 = vec![ZERO; n];
        let mut k6 = vec![ZERO; n];
        let mut k7 = vec![ZERO; n];
        let mut tmp = vec![ZERO; n];
        let mut y_new = vec![ZERO; n];

        f(t, &y, &mut k1);
        stats.rhs_evals += 1;

        let mut h = self.initial_step(&mut f, t, &y, &k1, t_end - t, &mut tmp, &mut k2);
        stats.rhs_evals += 1;
        let mut rejected_last = false;

        loop {
            if stats.steps + stats.rejected >= self.max_steps {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
            let target = samples[next];
            let clamped = t + h >= target;
            let step = if clamped { target - t } else { h };
            if step <= 16.0 * f64::EPSILON * t.abs().max(1.0) && !clamped {
                return Err(Error::Stiffness { time: t, step });
            }

            axpy_into(&mut tmp, &y, step, &[(A21, &k1)]);
            f(t + C2 * step, &tmp, &mut k2);
            axpy_into(&mut tmp, &y, step, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * step, &tmp, &mut k3);
            axpy_into(&mut tmp, &y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * step, &tmp, &mut k4);
            axpy_into(&mut tmp, &y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * step, &tmp, &mut k5);
            axpy_into(&mut tmp, &y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + step, &tmp, &mut k6);
            axpy_into(&mut y_new, &y, step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            f(t + step, &y_new, &mut k7);
            stats.rhs_evals += 6;

            let err = self.scaled_rms(
                (0..n).map(|i| {
                    let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
                    (e, y[i].norm().max(y_new[i].norm()))
                }),
                n,
            );

            if err.is_finite() && err <= 1.0 {
                stats.steps += 1;
                t = if clamped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                let fac = if err == 0.0 { FAC_MAX } else { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX) };
                let fac = if rejected_last { fac.min(1.0) } else { fac };
                // a clamped step says nothing about the natural step size
                let grown = step * fac;
                h = if clamped { h.max(grown) } else { grown };
                rejected_last = false;
                if clamped {
                    on_sample(next, t, &y)?;
                    next += 1;
                    if next == samples.len() {
                        return Ok(stats);
                    }
                }
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0) } else { FAC_MIN };
                h = step * fac;
                rejected_last = true;
                if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::Stiffness { time: t, step: h });
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[C64], f0: &[C64], span: f64, y1: &mut [C64], f1: &mut [C64]) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        let d0 = self.scaled_rms(y.iter().map(|v| (*v, v.norm())), n);
        let d1 = self.scaled_rms(f0.iter().zip(y).map(|(v, yy)| (*v, yy.norm())), n);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for i in 0..n {
            y1[i] = y[i] + f0[i] * h0;
        }
        f(t + h0, y1, f1);
        let d2 = self.scaled_rms(
            f1.iter().zip(f0).zip(y).map(|((a, b), yy)| ((a - b) / h0, yy.norm())),
            n,
        );
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
        (100.0 * h0).min(h1).min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn exponential_decay_hits_samples() {
        let solver = Dopri5::new(1e-10, 1e-12);
        let samples: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let mut got = Vec::new();
        solver
            .integrate(
                |_, y, dy| dy[0] = -y[0] * 1.5,
                0.0,
                vec![c(1.0, 0.0)],
                &samples,
                |_, t, y| {
                    got.push((t, y[0].re));
                    Ok(())
                },
            )
            .unwrap();
        assert_eq!(got.len(), samples.len());
        for (t, v) in got {
            assert!((v - (-1.5 * t).exp()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn rotation_keeps_modulus() {
        let solver = Dopri5::default();
        let mut last = c(0.0, 0.0);
        solver
            .integrate(
                |_, y, dy| dy[0] = y[0] * c(0.0, -2.0),
                0.0,
                vec![c(1.0, 0.0)],
                &[10.0],
                |_, _, y| {
                    last = y[0];
                    Ok(())
                },
            )
            .unwrap();
        assert!((last - C64::from_polar(1.0, -20.0)).norm() < 1e-7);
    }

    #[test]
    fn blow_up_is_reported() {
        let solver = Dopri5::default();
        let r = solver.integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, vec![c(1.0, 0.0)], &[2.0], |_, _, _| Ok(()));
        assert!(matches!(r, Err(Error::Stiffness { .. }) | Err(Error::IntegrationFailure { .. })));
    }
}
