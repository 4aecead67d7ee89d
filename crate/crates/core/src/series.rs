use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A uniformly sampled scalar series, e.g. average road speed per minute.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpeedSeries {
    values: Vec<f64>,
    /// Sampling interval in minutes.
    period: f64,
    label: Option<String>,
    /// Unix timestamp (seconds) of the first sample.
    start_time: Option<i64>,
}

impl SpeedSeries {
    /// Builds a series with a one-minute period. Values must be nonempty and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_period(values, 1.0)
    }

    pub fn with_period(values: Vec<f64>, period: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "series is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                alloc::format!("non-finite value at index {i}"),
            ));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid("period", "sampling period must be positive"));
        }
        Ok(SpeedSeries {
            values,
            period,
            label: None,
            start_time: None,
        })
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn starting_at(mut self, unix_seconds: i64) -> Self {
        self.start_time = Some(unix_seconds);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn start_time(&self) -> Option<i64> {
        self.start_time
    }

    /// Keeps only the last `len` samples, shifting `start_time` accordingly.
    pub fn most_recent(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.values.len() {
            return Err(Error::SeriesTooShort {
                param: "L",
                needed: len.max(1),
                got: self.values.len(),
            });
        }
        let skip = self.values.len() - len;
        Ok(SpeedSeries {
            values: self.values[skip..].to_vec(),
            period: self.period,
            label: self.label.clone(),
            start_time: self
                .start_time
                .map(|t| t + libm::round(skip as f64 * self.period * 60.0) as i64),
        })
    }
}
