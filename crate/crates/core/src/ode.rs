//! Dormand–Prince 5(4) integrator for complex-valued systems in a real
//! parameter.

use crate::error::{Error, Result};
use crate::C64;

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

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;
const MAX_CONSECUTIVE_REJECTS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
    /// Disable error control and take equal steps no longer than this.
    pub fixed_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            max_steps: 1_000_000,
            fixed_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub last_h: f64,
}

impl std::ops::AddAssign for OdeStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
        self.last_h = o.last_h;
    }
}

/// Verdict of the per-step observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOutcome<const N: usize> {
    pub s: f64,
    pub y: [C64; N],
    pub stats: OdeStats,
    pub stopped: bool,
}

fn combo<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::default();
        for (w, k) in terms {
            acc += k[i] * *w;
        }
        *o += acc * h;
    }
    out
}

fn weighted_rms<const N: usize>(
    err: &[C64; N],
    y0: &[C64; N],
    y1: &[C64; N],
    o: &OdeOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = o.atol + o.rtol * y0[i].norm().max(y1[i].norm());
        acc += (err[i].norm() / scale).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrate `dy/ds = rhs(s, y)` from `s0` to `s1 > s0`.
///
/// `observe` runs after every accepted step and may stop the integration early.
pub fn dopri5<const N: usize, F, G>(
    mut rhs: F,
    s0: f64,
    y0: [C64; N],
    s1: f64,
    opts: &OdeOptions,
    mut observe: G,
) -> Result<OdeOutcome<N>>
where
    F: FnMut(f64, &[C64; N]) -> Result<[C64; N]>,
    G: FnMut(f64, &[C64; N]) -> Result<Control>,
{
    let mut stats = OdeStats::default();
    let span = s1 - s0;
    if span <= 0.0 {
        return Ok(OdeOutcome {
            s: s0,
            y: y0,
            stats,
            stopped: false,
        });
    }

    let mut s = s0;
    let mut y = y0;
    let mut k1 = rhs(s, &y)?;
    stats.evaluations += 1;

    let mut h = match (opts.fixed_step, opts.h_init) {
        (Some(fixed), _) => span / (span / fixed).ceil(),
        (None, Some(h0)) => h0,
        (None, None) => {
            let ny = weighted_rms(&y, &y, &y, opts);
            let nf = weighted_rms(&k1, &y, &y, opts);
            if ny < 1e-5 || nf < 1e-5 {
                1e-6 * span.max(1.0)
            } else {
                0.01 * ny / nf
            }
        }
    }
    .min(span);

    let mut rejects = 0;
    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepFailure { at: s, h });
        }
        let last = s + h >= s1 - 1e-14 * span.max(1.0);
        if last {
            h = s1 - s;
        }
        let k2 = rhs(s + C2 * h, &combo(&y, h, &[(A21, &k1)]))?;
        let k3 = rhs(s + C3 * h, &combo(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(
            s + C4 * h,
            &combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            s + C5 * h,
            &combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            s + h,
            &combo(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = combo(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = rhs(s + h, &y_new)?;
        stats.evaluations += 6;

        let zero = [C64::default(); N];
        let err_vec = combo(
            &zero,
            h,
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
        );
        let err = if opts.fixed_step.is_some() {
            0.0
        } else {
            weighted_rms(&err_vec, &y, &y_new, opts)
        };

        if err <= 1.0 {
            s = if last { s1 } else { s + h };
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            stats.last_h = h;
            rejects = 0;
            if observe(s, &y)? == Control::Stop {
                return Ok(OdeOutcome {
                    s,
                    y,
                    stats,
                    stopped: true,
                });
            }
            if last {
                return Ok(OdeOutcome {
                    s,
                    y,
                    stats,
                    stopped: false,
                });
            }
            if opts.fixed_step.is_none() {
                let factor = if err == 0.0 {
                    MAX_GROWTH
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
                };
                h *= factor;
            }
        } else {
            stats.rejected += 1;
            rejects += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_SHRINK, 1.0);
            if rejects > MAX_CONSECUTIVE_REJECTS || h < 1e-14 * span.max(s.abs()).max(1e-300) {
                return Err(Error::StepFailure { at: s, h });
            }
        }
        h = h.min(s1 - s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exponential_growth_is_accurate() {
        let lam = c(0.3, 2.0);
        let out = dopri5(
            |_, y: &[C64; 1]| Ok([y[0] * lam]),
            0.0,
            [c(1.0, 0.0)],
            3.0,
            &OdeOptions::with_tol(1e-12, 1e-14),
            |_, _| Ok(Control::Continue),
        )
        .unwrap();
        let exact = (lam * 3.0).exp();
        assert!((out.y[0] - exact).norm() < 1e-9 * exact.norm());
    }

    #[test]
    fn fixed_steps_show_fifth_order() {
        let run = |h: f64| {
            let opts = OdeOptions {
                fixed_step: Some(h),
                ..Default::default()
            };
            let out = dopri5(
                |s, y: &[C64; 2]| Ok([y[1], -y[0] * (1.0 + 0.1 * s)]),
                0.0,
                [c(1.0, 0.0), c(0.0, 1.0)],
                2.0,
                &opts,
                |_, _| Ok(Control::Continue),
            )
            .unwrap();
            out.y[0]
        };
        let reference = run(1e-3);
        let e1 = (run(0.1) - reference).norm();
        let e2 = (run(0.05) - reference).norm();
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn observer_can_stop() {
        let out = dopri5(
            |_, _y: &[C64; 1]| Ok([c(1.0, 0.0)]),
            0.0,
            [c(0.0, 0.0)],
            10.0,
            &OdeOptions::default(),
            |_, y| {
                Ok(if y[0].re > 2.0 {
                    Control::Stop
                } else {
                    Control::Continue
                })
            },
        )
        .unwrap();
        assert!(out.stopped);
        assert!(out.s < 10.0 && out.y[0].re > 2.0);
    }
}
