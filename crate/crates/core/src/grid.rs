//! Evenly spaced parameter axes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// `start, start + step, ..., stop`. Values are generated as
/// `start + index * step` so that equal grid points compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, Error> {
        let bad = |reason: &str| Error::InvalidAxis {
            name: format!("{start}:{stop}:{step}"),
            reason: reason.to_string(),
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(bad("bounds and step must be finite"));
        }
        if !(step > 0.0) {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop must not be below start"));
        }
        let spans = (stop - start) / step;
        if (spans - spans.round()).abs() > 1e-6 {
            return Err(bad("step must divide the range evenly"));
        }
        Ok(Axis { start, stop, step })
    }

    /// Degenerate axis holding a single value.
    pub fn point(value: f64) -> Self {
        Axis {
            start: value,
            stop: value,
            step: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, index: usize) -> f64 {
        self.start + index as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Parses `start:stop:step`, or a bare number as a single-point axis.
impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| Error::InvalidAxis {
            name: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected numbers in start:stop:step"))?;
        match nums.as_slice() {
            [v] => Ok(Axis::point(*v)),
            [start, stop, step] => Axis::new(*start, *stop, *step),
            _ => Err(bad("expected start:stop:step")),
        }
    }
}
