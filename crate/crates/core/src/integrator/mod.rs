//! Explicit integration with terminal event detection.
//!
//! [`integrate_adaptive`] runs a Dormand-Prince 5(4) pair under a PI step
//! controller; [`integrate_fixed`] is a classic fixed-step RK4 march kept as a
//! cross-check. Both stop at the first root of any supplied [`Event`]. A root
//! is bracketed by the accepted step in which the event function goes from
//! positive to non-positive, then bisected by re-stepping from the start of
//! that step.

pub mod penalty;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Smallest step the adaptive controller may take before giving up.
pub const MIN_STEP: f64 = 1e-14;

/// Bisection stops once the bracket is narrower than this (seconds).
pub const EVENT_TIME_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Step of the fixed-step verifier and the penalty-contact model.
    pub fixed_step: f64,
    /// Ground stiffness of the penalty-contact model, N/m.
    pub contact_stiffness: f64,
    /// Integration horizon; reaching it without an event is an error.
    pub max_time: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1e-4,
            fixed_step: 1e-5,
            contact_stiffness: 1e8,
            max_time: 10.0,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("max_step", self.max_step)?;
        positive("fixed_step", self.fixed_step)?;
        positive("contact_stiffness", self.contact_stiffness)?;
        positive("max_time", self.max_time)?;
        if self.fixed_step > self.max_step {
            return Err(Error::invalid(
                "fixed_step",
                format!(
                    "must not exceed max_step ({} > {})",
                    self.fixed_step, self.max_step
                ),
            ));
        }
        Ok(())
    }
}

/// A terminal event: integration stops when `func` crosses from positive to
/// non-positive. An event whose value starts non-positive is armed only after
/// it has been seen positive.
pub struct Event<'a, const N: usize> {
    pub name: &'static str,
    pub func: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// Bisection accepts a point once `|func| < tol`.
    pub tol: f64,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(name: &'static str, tol: f64, func: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self {
            name,
            func: Box::new(func),
            tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<const N: usize> {
    /// Index into the event slice passed to the integrator.
    pub index: usize,
    pub name: &'static str,
    pub t: f64,
    pub y: [f64; N],
    pub value: f64,
    /// Final bisection bracket `(t_positive, t_non_positive)`.
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    /// Accepted steps, starting with the initial state and ending with the
    /// event state.
    pub samples: Vec<Sample<N>>,
    pub event: EventHit<N>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

type Stepper<'f, const N: usize> = dyn Fn(f64, &[f64; N], f64) -> [f64; N] + 'f;

// Dormand-Prince 5(4) tableau.
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
// b - b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand-Prince step. Returns the fifth-order solution and the
/// embedded error estimate.
fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &axpy(y, &[(A21, &k1)], h));
    let k3 = f(t + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(t + C4 * h, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(
        t + C5 * h,
        &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ),
    );
    let y_new = axpy(
        y,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        h,
    );
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err)
}

/// One classic fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k1)], h));
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k2)], h));
    let k4 = f(t + h, &axpy(y, &[(1.0, &k3)], h));
    axpy(
        y,
        &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        h,
    )
}

fn error_norm<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    err: &[f64; N],
    settings: &IntegratorSettings,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = settings.abs_tol + settings.rel_tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn is_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Tracks which events are armed and detects the earliest crossing within an
/// accepted step.
struct EventTracker<'e, 'a, const N: usize> {
    events: &'e [Event<'a, N>],
    last: Vec<f64>,
    armed: Vec<bool>,
}

impl<'e, 'a, const N: usize> EventTracker<'e, 'a, N> {
    fn new(events: &'e [Event<'a, N>], t0: f64, y0: &[f64; N]) -> Self {
        let last: Vec<f64> = events.iter().map(|e| (e.func)(t0, y0)).collect();
        let armed = last.iter().map(|v| *v > 0.0).collect();
        Self {
            events,
            last,
            armed,
        }
    }

    /// Checks the step `(t0, y0) -> (t0 + h, y1)`; on a crossing, bisects and
    /// returns the earliest hit.
    fn check(
        &mut self,
        stepper: &Stepper<'_, N>,
        t0: f64,
        y0: &[f64; N],
        h: f64,
        y1: &[f64; N],
    ) -> Option<EventHit<N>> {
        let t1 = t0 + h;
        let mut best: Option<EventHit<N>> = None;
        for (i, ev) in self.events.iter().enumerate() {
            let v1 = (ev.func)(t1, y1);
            if self.armed[i] && v1 <= 0.0 {
                let hit = bisect(ev, i, stepper, t0, y0, h, y1, v1);
                if best.as_ref().is_none_or(|b| hit.t < b.t) {
                    best = Some(hit);
                }
            }
            if v1 > 0.0 {
                self.armed[i] = true;
            }
            self.last[i] = v1;
        }
        best
    }
}

#[allow(clippy::too_many_arguments)]
fn bisect<const N: usize>(
    ev: &Event<'_, N>,
    index: usize,
    stepper: &Stepper<'_, N>,
    t0: f64,
    y0: &[f64; N],
    h: f64,
    y1: &[f64; N],
    v1: f64,
) -> EventHit<N> {
    let mut lo = 0.0;
    let mut hi = h;
    let mut hi_state = (*y1, v1);
    if v1.abs() < ev.tol {
        return EventHit {
            index,
            name: ev.name,
            t: t0 + h,
            y: *y1,
            value: v1,
            bracket: (t0, t0 + h),
        };
    }
    while hi - lo > EVENT_TIME_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let ym = stepper(t0, y0, mid);
        let vm = (ev.func)(t0 + mid, &ym);
        if vm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            hi_state = (ym, vm);
        }
        if vm.abs() < ev.tol {
            return EventHit {
                index,
                name: ev.name,
                t: t0 + mid,
                y: ym,
                value: vm,
                bracket: (t0 + lo, t0 + hi),
            };
        }
    }
    EventHit {
        index,
        name: ev.name,
        t: t0 + hi,
        y: hi_state.0,
        value: hi_state.1,
        bracket: (t0 + lo, t0 + hi),
    }
}

/// Adaptive Dormand-Prince integration from `(t0, y0)` up to the first event.
///
/// `admissible` is checked after every accepted step; leaving it without an
/// event firing in that step is a [`Error::DomainExit`].
pub fn integrate_adaptive<const N: usize, F, D>(
    deriv: F,
    t0: f64,
    y0: [f64; N],
    events: &[Event<'_, N>],
    admissible: D,
    settings: &IntegratorSettings,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    D: Fn(&[f64; N]) -> bool,
{
    settings.validate()?;
    const SAFETY: f64 = 0.9;
    const ALPHA: f64 = 0.7 / 5.0;
    const BETA: f64 = 0.4 / 5.0;
    const MIN_FACTOR: f64 = 0.2;
    const MAX_FACTOR: f64 = 5.0;

    let stepper = |t: f64, y: &[f64; N], h: f64| dopri_step(&deriv, t, y, h).0;
    let mut tracker = EventTracker::new(events, t0, &y0);
    let mut samples = vec![Sample { t: t0, y: y0 }];
    let mut t = t0;
    let mut y = y0;
    let mut h = (settings.max_step * 1e-2).max(MIN_STEP * 10.0);
    let mut err_prev: f64 = 1e-4;
    let mut accepted = 0;
    let mut rejected = 0;

    loop {
        if t - t0 >= settings.max_time {
            return Err(Error::NoEvent(settings.max_time));
        }
        h = h.min(settings.max_step);
        if h < MIN_STEP {
            return Err(Error::StepUnderflow { t, h });
        }
        let (y_new, err) = dopri_step(&deriv, t, &y, h);
        let norm = if is_finite(&y_new) {
            error_norm(&y, &y_new, &err, settings)
        } else {
            f64::INFINITY
        };

        if norm <= 1.0 {
            if let Some(hit) = tracker.check(&stepper, t, &y, h, &y_new) {
                samples.push(Sample { t: hit.t, y: hit.y });
                return Ok(Solution {
                    samples,
                    event: hit,
                    accepted_steps: accepted + 1,
                    rejected_steps: rejected,
                });
            }
            t += h;
            y = y_new;
            accepted += 1;
            samples.push(Sample { t, y });
            if !admissible(&y) {
                return Err(Error::DomainExit { t });
            }
            let factor = if norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * norm.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            err_prev = norm.max(1e-4);
            h *= factor;
        } else {
            rejected += 1;
            let factor = if norm.is_finite() {
                (SAFETY * norm.powf(-1.0 / 5.0)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
        }
    }
}

/// Fixed-step RK4 integration with the same event semantics as
/// [`integrate_adaptive`]. Uses `settings.fixed_step`.
pub fn integrate_fixed<const N: usize, F, D>(
    deriv: F,
    t0: f64,
    y0: [f64; N],
    events: &[Event<'_, N>],
    admissible: D,
    settings: &IntegratorSettings,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    D: Fn(&[f64; N]) -> bool,
{
    settings.validate()?;
    let h = settings.fixed_step;
    let stepper = |t: f64, y: &[f64; N], h: f64| rk4_step(&deriv, t, y, h);
    let mut tracker = EventTracker::new(events, t0, &y0);
    let mut samples = vec![Sample { t: t0, y: y0 }];
    let mut y = y0;
    let max_steps = (settings.max_time / h).ceil() as usize;

    for n in 0..max_steps {
        // t from the step count keeps the grid free of accumulated rounding
        let t = t0 + n as f64 * h;
        let y_new = rk4_step(&deriv, t, &y, h);
        if !is_finite(&y_new) {
            return Err(Error::NonFinite(t + h));
        }
        if let Some(hit) = tracker.check(&stepper, t, &y, h, &y_new) {
            samples.push(Sample { t: hit.t, y: hit.y });
            return Ok(Solution {
                samples,
                event: hit,
                accepted_steps: n + 1,
                rejected_steps: 0,
            });
        }
        y = y_new;
        samples.push(Sample { t: t + h, y });
        if !admissible(&y) {
            return Err(Error::DomainExit { t: t + h });
        }
    }
    Err(Error::NoEvent(settings.max_time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    fn after(t_stop: f64) -> Event<'static, 2> {
        Event::new("time", 1e-12, move |t, _| t_stop - t)
    }

    #[test]
    fn oscillator_energy_drift_over_ten_periods() {
        let settings = IntegratorSettings {
            max_step: 1e-2,
            fixed_step: 1e-3,
            max_time: 100.0,
            ..Default::default()
        };
        let sol = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[after(20.0 * PI)], |_| true, &settings)
            .unwrap();
        let drift = sol
            .samples
            .iter()
            .map(|s| (0.5 * (s.y[0] * s.y[0] + s.y[1] * s.y[1]) - 0.5).abs() / 0.5)
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "drift {drift}");
        let end = sol.event.y;
        assert!((end[0] - 1.0).abs() < 1e-7 && end[1].abs() < 1e-7);
    }

    #[test]
    fn event_root_is_bracketed() {
        // x = cos t crosses zero at pi/2
        let ev = Event::new("x", 1e-13, |_, y: &[f64; 2]| y[0]);
        let sol = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[ev], |_| true, &Default::default())
            .unwrap();
        assert!((sol.event.t - PI / 2.0).abs() < 1e-9, "{}", sol.event.t);
        let (a, b) = sol.event.bracket;
        assert!(a <= sol.event.t && sol.event.t <= b);
        assert!(b - a < 1e-4);
    }

    #[test]
    fn earliest_of_several_events_wins() {
        let evs = [
            Event::new("late", 1e-13, |_, y: &[f64; 2]| y[0] + 0.5),
            Event::new("early", 1e-13, |_, y: &[f64; 2]| y[0] - 0.5),
        ];
        let sol = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &evs, |_| true, &Default::default())
            .unwrap();
        assert_eq!(sol.event.name, "early");
        assert_eq!(sol.event.index, 1);
        assert!((sol.event.t - PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn unarmed_event_waits_until_positive() {
        // velocity starts at 0, goes negative, later positive then zero at t = 2 pi
        let ev = Event::new("v", 1e-13, |_, y: &[f64; 2]| y[1]);
        let sol = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[ev], |_| true, &Default::default())
            .unwrap();
        assert!((sol.event.t - 2.0 * PI).abs() < 1e-8, "{}", sol.event.t);
    }

    #[test]
    fn domain_exit_is_an_error() {
        let r = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[after(10.0)], |y| y[0] > 0.0, &Default::default());
        assert!(matches!(r, Err(Error::DomainExit { .. })));
    }

    #[test]
    fn missing_event_hits_horizon() {
        let settings = IntegratorSettings {
            max_time: 1.0,
            ..Default::default()
        };
        let r = integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[], |_| true, &settings);
        assert!(matches!(r, Err(Error::NoEvent(_))));
    }

    #[test]
    fn blowup_underflows_the_step() {
        // y' = y^2 from 1 escapes at t = 1
        let r = integrate_adaptive(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[], |_| true, &Default::default());
        assert!(matches!(r, Err(Error::StepUnderflow { .. })), "{r:?}");
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let t_end = 2.0;
        let err_at = |h: f64| {
            let n = (t_end / h).round() as usize;
            let mut y = [1.0, 0.0];
            for i in 0..n {
                y = rk4_step(&oscillator, i as f64 * h, &y, h);
            }
            ((y[0] - t_end.cos()).powi(2) + (y[1] + t_end.sin()).powi(2)).sqrt()
        };
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs.iter().map(|h| err_at(*h)).collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 4.0).abs() < 0.15, "slope {slope}");
        }
    }

    #[test]
    fn fixed_integrator_finds_the_same_root() {
        let ev = Event::new("x", 1e-13, |_, y: &[f64; 2]| y[0]);
        let sol = integrate_fixed(oscillator, 0.0, [1.0, 0.0], &[ev], |_| true, &Default::default()).unwrap();
        assert!((sol.event.t - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_runs_are_bit_identical() {
        let run = || {
            let ev = Event::new("x", 1e-13, |_, y: &[f64; 2]| y[0]);
            integrate_adaptive(oscillator, 0.0, [1.0, 0.0], &[ev], |_| true, &Default::default()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn settings_validation() {
        assert!(IntegratorSettings::default().validate().is_ok());
        let bad = IntegratorSettings {
            fixed_step: 1e-3,
            max_step: 1e-4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorSettings {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
