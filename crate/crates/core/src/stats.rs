//! Replication statistics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{AoiError, Result};

/// A sample mean with the half-width of its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// A mean AoI with its replication uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoiEstimate {
    pub mean: f64,
    /// Half-width of the 95% interval across replications.
    pub ci_half_width: f64,
    pub replications: usize,
    /// Per-UE intervals; empty when UEs are not fixed (dynamic system).
    pub per_ue: Vec<Interval>,
}

impl AoiEstimate {
    pub fn interval(&self) -> Interval {
        Interval {
            mean: self.mean,
            half_width: self.ci_half_width,
        }
    }
}

/// Two-sided 95% Student-t quantile with `dof` degrees of freedom.
pub fn t_quantile_95(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Mean and 95% Student-t half-width across independent samples. A single
/// sample has an unbounded interval.
pub fn mean_ci(samples: &[f64]) -> Result<Interval> {
    let n = samples.len();
    if n == 0 {
        return Err(AoiError::Empty);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(Interval {
            mean,
            half_width: f64::INFINITY,
        });
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Interval {
        mean,
        half_width: t_quantile_95(n - 1) * (var / n as f64).sqrt(),
    })
}
