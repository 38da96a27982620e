use serde::Serialize;

use crate::error::{Error, Result};

/// Validated observations, optionally left-censored at `x0`.
///
/// Every value is finite and `>= x0 >= 0`. `x0 = 0` means no censoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    values: Vec<f64>,
    x0: f64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::censored(values, 0.0)
    }

    pub fn censored(values: Vec<f64>, x0: f64) -> Result<Self> {
        if !x0.is_finite() || x0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "censoring threshold must be finite and non-negative, got {x0}"
            )));
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeValue { index, value });
            }
            if value < x0 {
                return Err(Error::BelowThreshold { index, value, x0 });
            }
        }
        Ok(Self { values, x0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_censored(&self) -> bool {
        self.x0 > 0.0
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values multiplied by `c > 0`, threshold included.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::censored(self.values.iter().map(|v| v * c).collect(), self.x0 * c)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
