//! Cooperative time and space limits for long-running evaluations.

use std::cell::Cell;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Limits checked periodically by the evaluators. The default imposes none.
#[derive(Clone, Debug, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
    /// Maximum number of values a flat intermediate may hold.
    pub max_values: Option<usize>,
    ticks: Cell<u32>,
}

impl Limits {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Limits {
            deadline: Some(Instant::now() + timeout),
            ..Default::default()
        }
    }

    pub fn max_values(mut self, n: usize) -> Self {
        self.max_values = Some(n);
        self
    }

    /// Cheap check meant for inner loops; looks at the clock every 4096 calls.
    #[inline]
    pub fn tick(&self) -> Result<()> {
        let t = self.ticks.get().wrapping_add(1);
        self.ticks.set(t);
        if t & 0xfff == 0 {
            self.check_time()?;
        }
        Ok(())
    }

    pub fn check_time(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }

    pub fn check_values(&self, n: usize) -> Result<()> {
        match self.max_values {
            Some(max) if n > max => Err(Error::TooLarge(max)),
            _ => Ok(()),
        }
    }
}
