//! Learning-rate schedules.

use std::f64::consts::PI;

use crate::config::{OneCycleParams, PlateauParams};
use crate::error::{Error, Result};

/// Step at which the one-cycle warm-up peaks.
pub fn one_cycle_peak(total_steps: usize, params: &OneCycleParams) -> usize {
    (params.pct_start * total_steps as f64).round() as usize
}

/// One-cycle schedule: linear warm-up from `max_lr / div_factor` to `max_lr`
/// at step `round(pct_start · total_steps)`, then cosine annealing down to
/// `max_lr / final_div_factor` at the last step.
pub fn one_cycle_lr(step: usize, total_steps: usize, max_lr: f64, params: &OneCycleParams) -> Result<f64> {
    if step >= total_steps {
        return Err(Error::validation(format!(
            "one-cycle step {step} outside [0, {total_steps})"
        )));
    }
    let initial = max_lr / params.div_factor;
    let floor = max_lr / params.final_div_factor;
    let last = total_steps - 1;
    let peak = one_cycle_peak(total_steps, params).min(last);
    if step < peak {
        return Ok(initial + (max_lr - initial) * step as f64 / peak as f64);
    }
    if last == peak {
        return Ok(max_lr);
    }
    let progress = (step - peak) as f64 / (last - peak) as f64;
    Ok(floor + (max_lr - floor) * 0.5 * (1.0 + (PI * progress).cos()))
}

/// Halves (by `factor`) the learning rate after `patience` consecutive
/// epochs without a validation-F1 gain above `threshold`.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    lr: f64,
    best: Option<f64>,
    bad_epochs: usize,
    params: PlateauParams,
}

impl PlateauScheduler {
    pub fn new(lr: f64, params: PlateauParams) -> Self {
        PlateauScheduler {
            lr,
            best: None,
            bad_epochs: 0,
            params,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records one epoch's validation F1 and returns the lr for the next epoch.
    pub fn observe(&mut self, f1: f64) -> f64 {
        let improved = match self.best {
            None => true,
            Some(best) => f1 > best + self.params.threshold,
        };
        if improved {
            self.best = Some(f1);
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.params.patience {
                self.lr = (self.lr * self.params.factor).max(self.params.min_lr);
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oc() -> OneCycleParams {
        OneCycleParams::default()
    }

    #[test]
    fn one_cycle_landmarks() {
        let total = 1000;
        let max = 0.01;
        assert_eq!(one_cycle_lr(0, total, max, &oc()).unwrap(), max / 25.0);
        assert_eq!(one_cycle_lr(300, total, max, &oc()).unwrap(), max);
        let end = one_cycle_lr(999, total, max, &oc()).unwrap();
        assert!((end - max / 1e4).abs() < 1e-9 * max);
        assert!(one_cycle_lr(1000, total, max, &oc()).is_err());
    }

    #[test]
    fn one_cycle_trace_matches_closed_form() {
        let total = 37;
        let max = 3e-3;
        let peak = (0.3f64 * 37.0).round() as usize;
        assert_eq!(peak, 11);
        for step in 0..total {
            let got = one_cycle_lr(step, total, max, &oc()).unwrap();
            let want = if step < peak {
                max / 25.0 + (max - max / 25.0) * step as f64 / peak as f64
            } else {
                let t = (step - peak) as f64 / (total - 1 - peak) as f64;
                max / 1e4 + (max - max / 1e4) * (1.0 + (PI * t).cos()) / 2.0
            };
            assert_eq!(got, want, "step {step}");
        }
    }

    #[test]
    fn one_cycle_rises_then_falls() {
        let lrs: Vec<f64> = (0..100).map(|s| one_cycle_lr(s, 100, 1.0, &oc()).unwrap()).collect();
        assert!(lrs[..30].windows(2).all(|w| w[0] < w[1]));
        assert!(lrs[30..].windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn tiny_schedules() {
        assert_eq!(one_cycle_lr(0, 1, 1.0, &oc()).unwrap(), 1.0);
        assert_eq!(one_cycle_lr(1, 2, 1.0, &oc()).unwrap(), 1.0);
    }

    #[test]
    fn plateau_improving_keeps_lr() {
        let mut s = PlateauScheduler::new(1e-3, PlateauParams::default());
        for i in 0..50 {
            assert_eq!(s.observe(i as f64 * 0.01), 1e-3);
        }
    }

    #[test]
    fn plateau_flat_eleven_epochs_halves_once() {
        let mut s = PlateauScheduler::new(1e-3, PlateauParams::default());
        let lrs: Vec<f64> = (0..11).map(|_| s.observe(0.7)).collect();
        assert_eq!(lrs[9], 1e-3);
        assert_eq!(lrs[10], 5e-4);
    }

    #[test]
    fn plateau_flat_forty_epochs_halves_three_times() {
        let mut s = PlateauScheduler::new(1e-3, PlateauParams::default());
        let mut lr = 0.0;
        for _ in 0..40 {
            lr = s.observe(0.5);
        }
        assert_eq!(lr, 1.25e-4);
    }

    #[test]
    fn plateau_small_gain_is_not_improvement() {
        let mut s = PlateauScheduler::new(1e-3, PlateauParams::default());
        s.observe(0.5);
        for i in 1..=10 {
            s.observe(0.5 + i as f64 * 1e-6);
        }
        assert_eq!(s.lr(), 5e-4);
    }

    #[test]
    fn plateau_respects_floor() {
        let mut s = PlateauScheduler::new(2e-6, PlateauParams::default());
        for _ in 0..100 {
            s.observe(0.1);
        }
        assert_eq!(s.lr(), 1e-6);
    }
}
