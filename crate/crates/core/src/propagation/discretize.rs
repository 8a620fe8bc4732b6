use super::control::PiecewiseConstantControl;
use crate::error::{Error, Result};
use crate::pulse::PeriodicPulse;

/// Piecewise-constant version of `pulse` on `[0, duration]`.
///
/// Piecewise-constant families (duty, constant) are reproduced exactly and
/// ignore `steps_per_period`. Other families are sampled at the midpoint of
/// each of `steps_per_period` equal steps per period; sample values are
/// indexed by position within the period, so every period repeats bit-for-bit.
pub fn discretize_pulse(
    pulse: &PeriodicPulse,
    duration: f64,
    steps_per_period: usize,
) -> Result<PiecewiseConstantControl> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::validation(format!(
            "pulse duration must be positive, got {duration}"
        )));
    }
    if steps_per_period < 2 {
        return Err(Error::validation(format!(
            "steps_per_period must be >= 2, got {steps_per_period}"
        )));
    }
    let period = pulse.period();
    let template: Vec<(f64, f64)> = match pulse.exact_period() {
        Some(pieces) => {
            let mut offset = 0.0;
            pieces
                .into_iter()
                .map(|(len, value)| {
                    offset += len;
                    (offset, value)
                })
                .collect()
        }
        None => {
            let h = period / steps_per_period as f64;
            (0..steps_per_period)
                .map(|i| ((i + 1) as f64 * h, pulse.value((i as f64 + 0.5) * h)))
                .collect()
        }
    };
    let mut breakpoints = vec![0.0];
    let mut values = Vec::new();
    'periods: for k in 0.. {
        let base = k as f64 * period;
        for (i, &(offset, value)) in template.iter().enumerate() {
            let end = if i + 1 == template.len() {
                (k + 1) as f64 * period
            } else {
                base + offset
            };
            let start = *breakpoints.last().unwrap();
            let end = end.min(duration);
            if end > start {
                breakpoints.push(end);
                values.push(value);
            }
            if end >= duration {
                break 'periods;
            }
        }
    }
    Ok(PiecewiseConstantControl::new(breakpoints, values)?.merged())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn duty_pulse_is_exact() {
        let p = PeriodicPulse::duty(2.0, 0.5, 1.0).unwrap();
        let u = discretize_pulse(&p, 5.0, 7).unwrap();
        assert_eq!(u.breakpoints(), &[0.0, 0.5, 2.0, 2.5, 4.0, 4.5, 5.0]);
        assert_eq!(u.values(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_pulse_is_one_piece() {
        let p = PeriodicPulse::constant(0.7, 1.0).unwrap();
        for steps in [2, 16, 1000] {
            let u = discretize_pulse(&p, 10.0, steps).unwrap();
            assert_eq!(u.values(), &[1.0]);
            assert_eq!(u.duration(), 10.0);
        }
    }

    #[test]
    fn cosine_midpoints_repeat_each_period() {
        let p = PeriodicPulse::cosine(2.0 * PI / 3.0, 1.0).unwrap();
        let u = discretize_pulse(&p, 3.0 * 2.0 * PI / 3.0, 16).unwrap();
        assert_eq!(u.n_pieces(), 48);
        assert_eq!(u.values()[..16], u.values()[16..32]);
        assert!((u.values()[0] - (PI / 16.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn primitive_converges_under_refinement() {
        let p = PeriodicPulse::cosine(1.0, 1.0).unwrap();
        let exact = |t: f64| (2.0 * PI * t).sin() / (2.0 * PI);
        let mut last = f64::INFINITY;
        for steps in [4, 8, 16, 32, 64] {
            let u = discretize_pulse(&p, 3.3, steps).unwrap();
            let err = [0.37, 1.21, 3.3]
                .iter()
                .map(|&t| (u.primitive(t) - exact(t)).abs())
                .fold(0.0, f64::max);
            assert!(err < last, "{steps}: {err} >= {last}");
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = PeriodicPulse::cosine(1.0, 1.0).unwrap();
        assert!(discretize_pulse(&p, 0.0, 8).is_err());
        assert!(discretize_pulse(&p, -1.0, 8).is_err());
        assert!(discretize_pulse(&p, 1.0, 1).is_err());
    }
}
