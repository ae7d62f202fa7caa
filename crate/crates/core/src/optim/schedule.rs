use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponentially decaying step size `α_t = alpha0 · decay^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub decay: f64,
}

impl StepSchedule {
    pub fn new(alpha0: f64, decay: f64) -> Result<Self> {
        let s = StepSchedule { alpha0, decay };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::invalid(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid(format!("decay must lie in (0, 1], got {}", self.decay)));
        }
        Ok(())
    }

    #[inline]
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha0 * self.decay.powi(t as i32)
    }

    /// The batch-SGD rows of the optimizer table (α₀ 0.20, decay 0.99995).
    pub fn bsgd_default() -> Self {
        StepSchedule { alpha0: 0.20, decay: 0.99995 }
    }

    /// The plain SGD row (α₀ 0.05, decay 0.99).
    pub fn sgd_default() -> Self {
        StepSchedule { alpha0: 0.05, decay: 0.99 }
    }
}

/// Constant-then-exponential cooling `τ_t = tau0 · tau_d^{max(t − t_const, 0)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSchedule {
    pub tau0: f64,
    pub tau_d: f64,
    pub t_const: usize,
}

impl Default for CoolingSchedule {
    fn default() -> Self {
        CoolingSchedule { tau0: 1.0, tau_d: 0.95, t_const: 5 }
    }
}

impl CoolingSchedule {
    pub fn new(tau0: f64, tau_d: f64, t_const: usize) -> Result<Self> {
        let c = CoolingSchedule { tau0, tau_d, t_const };
        c.validate()?;
        Ok(c)
    }

    /// A schedule that stays at 1 for the first `t_const` iterations.
    pub fn constant(t_const: usize) -> Self {
        CoolingSchedule { tau0: 1.0, tau_d: 0.95, t_const }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0 <= 1.0) {
            return Err(Error::invalid(format!("tau0 must lie in (0, 1], got {}", self.tau0)));
        }
        if !(self.tau_d > 0.0 && self.tau_d < 1.0) {
            return Err(Error::invalid(format!("tau_d must lie in (0, 1), got {}", self.tau_d)));
        }
        Ok(())
    }

    #[inline]
    pub fn tau(&self, t: usize) -> f64 {
        self.tau0 * self.tau_d.powi(t.saturating_sub(self.t_const) as i32)
    }
}
