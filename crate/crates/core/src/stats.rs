//! Box-plot summaries and least-squares trend lines.

use serde::Serialize;
use thiserror::Error;

use crate::model::Strategy;
use crate::scenario::{SweepSpec, SweepValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("linear fit needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all x values are equal")]
    DegenerateX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Unbiased sample variance; zero for a single sample.
    pub variance: f64,
}

impl FiveNumberSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Quartiles follow the median-of-halves rule: q1 and q3 are the medians of
/// the lower and upper halves, which exclude the overall median when `n` is odd.
pub fn summarize(samples: &[f64]) -> Result<FiveNumberSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    let (q1, q3) = if n == 1 {
        (sorted[0], sorted[0])
    } else {
        let half = n / 2;
        (median_sorted(&sorted[..half]), median_sorted(&sorted[n - half..]))
    };

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };

    Ok(FiveNumberSummary {
        n,
        min: sorted[0],
        q1,
        median: median_sorted(&sorted),
        q3,
        max: sorted[n - 1],
        mean,
        variance,
    })
}

/// One aggregate per (sweep value, strategy).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: SweepValue,
    pub strategy: Strategy,
    /// The summary, or why this value could not be simulated.
    pub outcome: Result<FiveNumberSummary, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// The sweep that produced the rows; its base config carries the seed.
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, value_index: usize, strategy: Strategy) -> Option<&SweepRow> {
        let value = self.spec.values.get(value_index)?;
        self.rows.iter().find(|r| r.value == *value && r.strategy == strategy)
    }

    /// Summaries for `strategy` in sweep-value order; `None` where a value failed.
    pub fn series(&self, strategy: Strategy) -> Vec<Option<FiveNumberSummary>> {
        (0..self.spec.values.len())
            .map(|i| self.row(i, strategy).and_then(|r| r.outcome.clone().ok()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
///
/// When `y` has no spread, `r_squared` is 1 if the residuals vanish.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints(n));
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateX);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
