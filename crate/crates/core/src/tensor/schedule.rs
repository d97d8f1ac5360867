use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear warm-up from `min_lr` to `max_lr`, then cosine annealing from
/// `max_lr` down to `min_lr` restarting every `annealing_period_epochs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub max_lr: f64,
    pub min_lr: f64,
    pub warmup_epochs: usize,
    pub annealing_period_epochs: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            max_lr: 0.03,
            min_lr: 0.001,
            warmup_epochs: 40,
            annealing_period_epochs: 100,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        // a flat zero schedule is allowed for frozen-weight runs
        let flat_zero = self.max_lr == 0.0 && self.min_lr == 0.0;
        if !flat_zero && !(self.max_lr >= self.min_lr && self.min_lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rates must satisfy max_lr >= min_lr > 0 (got {} / {})",
                self.max_lr, self.min_lr
            )));
        }
        if self.annealing_period_epochs == 0 {
            return Err(Error::Config("annealing period must be at least one epoch".into()));
        }
        Ok(())
    }

    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let span = self.max_lr - self.min_lr;
        if epoch < self.warmup_epochs {
            return self.min_lr + span * epoch as f64 / self.warmup_epochs as f64;
        }
        let phase = (epoch - self.warmup_epochs) % self.annealing_period_epochs;
        let x = phase as f64 / self.annealing_period_epochs as f64;
        self.min_lr + 0.5 * span * (1.0 + (std::f64::consts::PI * x).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at_epoch(0), 0.001);
        assert!((s.lr_at_epoch(40) - 0.03).abs() < 1e-15);
        assert!((s.lr_at_epoch(90) - 0.0155).abs() < 1e-12);
        assert!((s.lr_at_epoch(140) - 0.03).abs() < 1e-15);
        assert!((s.lr_at_epoch(20) - 0.0155).abs() < 1e-12);
    }

    #[test]
    fn bounded_by_min_and_max() {
        let s = LrSchedule::default();
        for e in 0..1000 {
            let lr = s.lr_at_epoch(e);
            assert!((s.min_lr..=s.max_lr).contains(&lr));
        }
    }

    #[test]
    fn invalid_rates_rejected() {
        let s = LrSchedule {
            max_lr: 0.001,
            min_lr: 0.03,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
