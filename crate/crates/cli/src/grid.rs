//! Colon-separated grid specifications (`start:stop:step`).

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, CliError> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(CliError::Usage("grid bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(CliError::Usage(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if stop < start {
            return Err(CliError::Usage(format!(
                "grid must increase: stop {stop} below start {start}"
            )));
        }
        Ok(GridSpec { start, stop, step })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "grid must look like start:stop:step, got '{text}'"
            )));
        }
        let mut nums = [0.0; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse grid component '{part}'")))?;
        }
        GridSpec::new(nums[0], nums[1], nums[2])
    }

    /// Inclusive grid points, robust to the usual floating-point shortfall
    /// at the right endpoint.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 0.5).floor() as usize;
        (0..=count)
            .map(|k| self.start + self.step * k as f64)
            .filter(|&v| v <= self.stop + 1e-9 * self.step)
            .collect()
    }
}
