//! Guard-crossing localisation on dense output.

use thiserror::Error;

use super::integrator::DenseOutput;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error("guard does not change sign over [{t_start}, {t_end}] (g = {g_start:e} .. {g_end:e})")]
    BracketInvalid {
        t_start: f64,
        t_end: f64,
        g_start: f64,
        g_end: f64,
    },
}

/// A located guard crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPoint {
    pub t: f64,
    pub state: Vec<f64>,
    /// Guard value (minus level) at `state`.
    pub residual: f64,
}

/// Straight-line interpolation between two `(t, state)` points.
#[derive(Debug, Clone)]
pub struct LinearSegment {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub t1: f64,
    pub x1: Vec<f64>,
}

impl DenseOutput for LinearSegment {
    fn t_start(&self) -> f64 {
        self.t0
    }

    fn t_end(&self) -> f64 {
        self.t1
    }

    fn dimension(&self) -> usize {
        self.x0.len()
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = if self.t1 == self.t0 {
            0.0
        } else {
            (t - self.t0) / (self.t1 - self.t0)
        };
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.x0[i] + s * (self.x1[i] - self.x0[i]);
        }
    }
}

const MAX_ITERATIONS: usize = 200;

/// Locates the first time in the segment where `guard(x(t)) = level`,
/// to `|guard - level| ≤ tolerance`, by Illinois regula falsi with a
/// bisection fallback. States come from the segment's interpolant.
///
/// If the guard is already within tolerance at the left end, the left end is
/// returned. If the time bracket collapses to rounding level before the
/// tolerance is met (very steep guard), the endpoint on the `≥ level` side is
/// returned.
pub fn locate_event<D, G>(guard: G, segment: &D, level: f64, tolerance: f64) -> Result<EventPoint, EventError>
where
    D: DenseOutput + ?Sized,
    G: Fn(&[f64]) -> f64,
{
    let mut buf = vec![0.0; segment.dimension()];
    let g_at = |t: f64, buf: &mut Vec<f64>| {
        segment.eval(t, buf);
        guard(buf) - level
    };

    let t_start = segment.t_start();
    let t_end = segment.t_end();
    let g_start = g_at(t_start, &mut buf);
    if g_start.abs() <= tolerance {
        return Ok(EventPoint {
            t: t_start,
            state: buf,
            residual: g_start,
        });
    }
    let g_end = g_at(t_end, &mut buf);
    if g_start.signum() == g_end.signum() || t_end == t_start {
        if g_end.abs() <= tolerance {
            return Ok(EventPoint {
                t: t_end,
                state: buf,
                residual: g_end,
            });
        }
        return Err(EventError::BracketInvalid {
            t_start,
            t_end,
            g_start,
            g_end,
        });
    }

    // Keep `lo` on the g < 0 side and `hi` on the g ≥ 0 side.
    let rising = g_start < 0.0;
    let (mut lo, mut g_lo, mut hi, mut g_hi) = if rising {
        (t_start, g_start, t_end, g_end)
    } else {
        (t_end, g_end, t_start, g_start)
    };
    let mut side = 0i8;
    for iteration in 0..MAX_ITERATIONS {
        let width = (hi - lo).abs();
        if width <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        let mut t = if iteration % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        };
        if !t.is_finite() || (t - lo) * (t - hi) > 0.0 {
            t = 0.5 * (lo + hi);
        }
        let g = g_at(t, &mut buf);
        if g.abs() <= tolerance {
            return Ok(EventPoint {
                t,
                state: buf,
                residual: g,
            });
        }
        if g < 0.0 {
            lo = t;
            g_lo = g;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            g_hi = g;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let g = g_at(hi, &mut buf);
    Ok(EventPoint {
        t: hi,
        state: buf,
        residual: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(t0: f64, t1: f64, x0: f64, slope: f64) -> LinearSegment {
        LinearSegment {
            t0,
            x0: vec![x0],
            t1,
            x1: vec![x0 + slope * (t1 - t0)],
        }
    }

    #[test]
    fn unit_ramp_crosses_one_at_one() {
        let seg = ramp(0.0, 2.0, 0.0, 1.0);
        let ev = locate_event(|x| x[0] - 1.0, &seg, 0.0, 1e-9).unwrap();
        assert!((ev.t - 1.0).abs() <= 1e-9);
        assert!(ev.residual.abs() <= 1e-9);
    }

    #[test]
    fn left_endpoint_within_tolerance_is_returned() {
        let seg = ramp(3.0, 4.0, 1.0 - 1e-12, 1.0);
        let ev = locate_event(|x| x[0] - 1.0, &seg, 0.0, 1e-9).unwrap();
        assert_eq!(ev.t, 3.0);
    }

    #[test]
    fn same_sign_bracket_is_rejected() {
        let seg = ramp(0.0, 1.0, 0.0, 0.5);
        let err = locate_event(|x| x[0] - 1.0, &seg, 0.0, 1e-9).unwrap_err();
        assert!(matches!(err, EventError::BracketInvalid { .. }));
    }

    #[test]
    fn falling_guard_is_located() {
        let seg = ramp(0.0, 1.0, 1.0, -2.0);
        let ev = locate_event(|x| 0.25 - x[0], &seg, 0.0, 1e-12).unwrap();
        assert!((ev.t - 0.375).abs() < 1e-11);
    }

    #[test]
    fn nonlinear_guard_converges() {
        let seg = ramp(0.0, 3.0, 0.0, 1.0);
        let ev = locate_event(|x| x[0].powi(5) - 2.0, &seg, 0.0, 1e-10).unwrap();
        assert!((ev.t - 2f64.powf(0.2)).abs() < 1e-10);
    }
}
