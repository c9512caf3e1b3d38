//! Kolmogorov–Smirnov distance and the fitted-CDF goodness-of-fit index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::sum::NeumaierSum;

/// Right-continuous empirical distribution function of a sorted sample.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalCdf<'a> {
    sample: &'a [f64],
}

impl<'a> EmpiricalCdf<'a> {
    /// `sample` must be sorted ascending and non-empty.
    pub fn new(sample: &'a [f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        debug_assert!(sample.windows(2).all(|w| w[0] <= w[1]));
        Ok(EmpiricalCdf { sample })
    }

    /// Fraction of the sample `<= x`.
    pub fn value(&self, x: f64) -> f64 {
        let k = self.sample.partition_point(|&v| v <= x);
        k as f64 / self.sample.len() as f64
    }
}

/// Range slack allowed before a model CDF value counts as invalid.
const CDF_RANGE_SLACK: f64 = 1e-9;

/// Evaluate `cdf` at every sample point in parallel (deterministic: values
/// land by index).
pub fn cdf_values(sample: &[f64], cdf: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    if sample.len() < 2048 {
        return sample.iter().map(|&x| cdf(x)).collect();
    }
    sample.par_iter().map(|&x| cdf(x)).collect()
}

/// Validate that every value lies in `[-slack, 1 + slack]`, then clamp into
/// `[0, 1]` in place.
fn validate_and_clamp(sample: &[f64], values: &mut [f64]) -> Result<()> {
    for (&x, v) in sample.iter().zip(values.iter_mut()) {
        if !(-CDF_RANGE_SLACK..=1.0 + CDF_RANGE_SLACK).contains(v) {
            return Err(Error::InvalidModelCdf { value: *v, at: x });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Evaluate a model CDF over a sorted sample, validate the range, and clamp
/// into `[0, 1]`. The returned vector feeds [`ks_from_values`] and
/// [`gof_from_values`] without re-evaluating the model.
pub fn checked_cdf_values(sample: &[f64], cdf: impl Fn(f64) -> f64 + Sync) -> Result<Vec<f64>> {
    let mut values = cdf_values(sample, cdf);
    validate_and_clamp(sample, &mut values)?;
    Ok(values)
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of a
/// sorted sample and a model CDF.
///
/// At each sorted point both sides of the empirical step are compared, so
/// the supremum over the whole line is captured exactly. Model values may
/// stray outside `[0, 1]` by at most 1e-9 (they are clamped); anything
/// further is an error.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
    let values = checked_cdf_values(sample, cdf)?;
    ks_from_values(sample, &values)
}

/// K–S distance from precomputed, already-clamped model CDF values at the
/// sorted sample points.
pub fn ks_from_values(sample: &[f64], values: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    assert_eq!(sample.len(), values.len());
    let n = sample.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &f) in values.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        sup = sup.max((f - lo).abs()).max((f - hi).abs());
    }
    Ok(sup)
}

/// Goodness-of-fit index for a fitted piecewise model with `n_bins * n_moments`
/// parameters: `(mean_F - st_error) / mean_F` where `st_error` is the
/// degrees-of-freedom-adjusted RMS deviation between empirical and model CDF
/// over the sample points, and `mean_F` is the average model CDF value.
///
/// Undefined (an error) when the sample is not larger than the parameter
/// count.
pub fn gof_index(
    sample: &[f64],
    cdf: impl Fn(f64) -> f64 + Sync,
    n_bins: usize,
    n_moments: usize,
) -> Result<f64> {
    let values = checked_cdf_values(sample, cdf)?;
    gof_from_values(sample, &values, n_bins, n_moments)
}

/// Goodness-of-fit from precomputed model CDF values (see [`gof_index`]).
pub fn gof_from_values(
    sample: &[f64],
    values: &[f64],
    n_bins: usize,
    n_moments: usize,
) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    assert_eq!(n, values.len());
    let params = n_bins * n_moments;
    if n <= params {
        return Err(Error::DegreesOfFreedom { n, params });
    }
    let nf = n as f64;
    let mut sq = NeumaierSum::new();
    let mut mean = NeumaierSum::new();
    let mut i = 0;
    while i < n {
        // Tied sample values share one empirical step: F_emp jumps past the
        // whole run.
        let mut j = i + 1;
        while j < n && sample[j] == sample[i] {
            j += 1;
        }
        let f_emp = j as f64 / nf;
        for &f in &values[i..j] {
            let d = f_emp - f;
            sq.add(d * d);
            mean.add(f);
        }
        i = j;
    }
    let st_error = (sq.value() / (nf - params as f64)).sqrt();
    let mean_f = mean.value() / nf;
    if mean_f == 0.0 {
        return Err(Error::InvalidParameter(
            "model CDF is zero over the whole sample".into(),
        ));
    }
    Ok((mean_f - st_error) / mean_f)
}
