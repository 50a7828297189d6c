//! Adaptive Dormand–Prince 5(4) integrator for complex-valued systems.

use crate::error::{CascadeError, Result};
use crate::hilbert::C64;

/// Mixed error tolerance: component `i` is accepted when
/// `|err_i| <= atol + rtol * |y_i|` in the RMS sense.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerance {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
        }
    }
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

/// Step counters accumulated over the solver's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

/// Reusable solver with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerance,
    h: Option<f64>,
    h_max: f64,
    max_steps: u64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    stats: Stats,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: Tolerance) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Dopri5 {
            tol,
            h: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            y_new: z,
            stats: Stats::default(),
        }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Forget the step-size history, e.g. before jumping to an unrelated state.
    pub fn reset(&mut self) {
        self.h = None;
    }

    fn error_norm(&self, y: &[C64]) -> f64 {
        let n = y.len().max(1);
        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = E1 * self.k[0][i]
                + E3 * self.k[2][i]
                + E4 * self.k[3][i]
                + E5 * self.k[4][i]
                + E6 * self.k[5][i]
                + E7 * self.k[6][i];
            let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(self.y_new[i].norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        (acc / n as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[C64], span: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        // Hairer–Wanner starting-step heuristic
        let sc = |v: &C64| self.tol.atol + self.tol.rtol * v.norm();
        let n = y.len().max(1) as f64;
        let d0 = (y.iter().map(|v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(v, dv)| (dv.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k[0][i] * h0;
        }
        let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
        f(t + h0, &self.tmp, &mut f1);
        self.stats.evaluations += 1;
        let d2 = (y
            .iter()
            .zip(f1.iter().zip(&self.k[0]))
            .map(|(v, (a, b))| ((a - b).norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }

    /// Advances `y` in place from `t` to `t_end`.
    pub fn integrate<F>(&mut self, f: &mut F, t: f64, t_end: f64, y: &mut [C64]) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let span = t_end - t;
        if span == 0.0 {
            return Ok(());
        }
        if span < 0.0 || !span.is_finite() {
            return Err(CascadeError::Integration {
                time_ps: t,
                reason: format!("cannot integrate backwards or over a non-finite span to {t_end}"),
            });
        }
        let n = y.len();
        let mut t = t;
        f(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h.min(self.h_max),
            None => self.initial_step(f, t, y, span),
        };
        let mut steps = 0u64;
        let h_min = 1e-14 * t_end.abs().max(1.0);
        loop {
            let remaining = t_end - t;
            if remaining <= h_min {
                break;
            }
            let last = h >= remaining;
            let h_step = if last { remaining } else { h };

            for i in 0..n {
                self.tmp[i] = y[i] + self.k[0][i] * (h_step * A21);
            }
            f(t + C2 * h_step, &self.tmp, &mut self.k[1]);
            for i in 0..n {
                self.tmp[i] = y[i] + (self.k[0][i] * A31 + self.k[1][i] * A32) * h_step;
            }
            f(t + C3 * h_step, &self.tmp, &mut self.k[2]);
            for i in 0..n {
                self.tmp[i] = y[i]
                    + (self.k[0][i] * A41 + self.k[1][i] * A42 + self.k[2][i] * A43) * h_step;
            }
            f(t + C4 * h_step, &self.tmp, &mut self.k[3]);
            for i in 0..n {
                self.tmp[i] = y[i]
                    + (self.k[0][i] * A51
                        + self.k[1][i] * A52
                        + self.k[2][i] * A53
                        + self.k[3][i] * A54)
                        * h_step;
            }
            f(t + C5 * h_step, &self.tmp, &mut self.k[4]);
            for i in 0..n {
                self.tmp[i] = y[i]
                    + (self.k[0][i] * A61
                        + self.k[1][i] * A62
                        + self.k[2][i] * A63
                        + self.k[3][i] * A64
                        + self.k[4][i] * A65)
                        * h_step;
            }
            f(t + h_step, &self.tmp, &mut self.k[5]);
            for i in 0..n {
                self.y_new[i] = y[i]
                    + (self.k[0][i] * A71
                        + self.k[2][i] * A73
                        + self.k[3][i] * A74
                        + self.k[4][i] * A75
                        + self.k[5][i] * A76)
                        * h_step;
            }
            let t_new = if last { t_end } else { t + h_step };
            f(t_new, &self.y_new, &mut self.k[6]);
            self.stats.evaluations += 6;

            let err = self.error_norm(y) * h_step;
            if !err.is_finite() {
                return Err(CascadeError::Integration {
                    time_ps: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = t_new;
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                // keep the unclipped step so output points do not shrink it
                if !last || factor < 1.0 {
                    h = (h_step * factor).min(self.h_max);
                }
                if last {
                    break;
                }
            } else {
                self.stats.rejected += 1;
                h = h_step * factor.min(1.0);
            }
            steps += 1;
            if h < h_min || steps > self.max_steps {
                return Err(CascadeError::Integration {
                    time_ps: t,
                    reason: format!("step size collapsed to {h:e} ps after {steps} steps"),
                });
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // y' = -i ω y, exact solution e^{-iωt}
        let omega = 20.0;
        let mut solver = Dopri5::new(1, Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -omega) * y[0];
        let mut t = 0.0;
        for _ in 0..10 {
            solver.integrate(&mut f, t, t + 0.5, &mut y).unwrap();
            t += 0.5;
        }
        let exact = C64::from_polar(1.0, -omega * t);
        assert!((y[0] - exact).norm() < 1e-6, "{:e}", (y[0] - exact).norm());
    }

    #[test]
    fn time_dependent_decay() {
        // y' = -2t y → y = exp(-t²)
        let mut solver = Dopri5::new(1, Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * (-2.0 * t);
        solver.integrate(&mut f, 0.0, 2.0, &mut y).unwrap();
        assert!((y[0].re - (-4f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn tighter_tolerance_is_closer() {
        let run = |tol: Tolerance| {
            let mut solver = Dopri5::new(2, tol);
            let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            let mut f = |t: f64, y: &[C64], dy: &mut [C64]| {
                let w = 3.0 * (-(t - 2.0).powi(2)).exp();
                dy[0] = C64::new(0.0, -w) * y[1];
                dy[1] = C64::new(0.0, -w) * y[0];
            };
            solver.integrate(&mut f, -4.0, 8.0, &mut y).unwrap();
            y
        };
        // exact: area 3√π, populations cos², sin²
        let area = 3.0 * std::f64::consts::PI.sqrt();
        let coarse = run(Tolerance { rtol: 1e-5, atol: 1e-7 });
        let fine = run(Tolerance::default());
        let err = |y: &Vec<C64>| (y[0].norm_sqr() - area.cos().powi(2)).abs();
        assert!(err(&fine) < 1e-8);
        assert!(err(&fine) <= err(&coarse));
    }

    #[test]
    fn rejects_backwards_span() {
        let mut solver = Dopri5::new(1, Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut f = |_t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, 0.0);
        assert!(solver.integrate(&mut f, 1.0, 0.0, &mut y).is_err());
    }
}
