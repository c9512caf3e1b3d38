//! Gaussian kernel density baseline.

use crate::error::{Error, Result};

/// Kernel width multiples beyond which a Gaussian kernel's contribution is
/// below f64 resolution (`phi(-12) ~ 2e-33`); points outside this window are
/// counted as full/zero mass instead of being evaluated.
const WINDOW: f64 = 12.0;

/// Gaussian KDE over a fixed sample with a fixed bandwidth.
#[derive(Debug, Clone)]
pub struct KdeModel {
    sample: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeModel {
    /// Build a KDE; the sample is copied and sorted, `bandwidth` must be
    /// positive and finite.
    pub fn new(sample: &[f64], bandwidth: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bandwidth {bandwidth} must be positive and finite"
            )));
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample contains non-finite values".into(),
            ));
        }
        let mut sample = sample.to_vec();
        sample.sort_by(f64::total_cmp);
        Ok(KdeModel { sample, bandwidth })
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    /// Indices of sample points within the kernel window around `x`.
    fn window(&self, x: f64) -> (usize, usize) {
        let cut = WINDOW * self.bandwidth;
        let start = self.sample.partition_point(|&v| v < x - cut);
        let end = self.sample.partition_point(|&v| v <= x + cut);
        (start, end)
    }

    /// Mixture density `(1/nh) sum phi((x - x_i)/h)`.
    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let (start, end) = self.window(x);
        let mut acc = 0.0;
        for &xi in &self.sample[start..end] {
            let z = (x - xi) / h;
            acc += (-0.5 * z * z).exp();
        }
        acc / (self.sample.len() as f64 * h * std::f64::consts::TAU.sqrt())
    }

    /// Mixture distribution function `(1/n) sum Phi((x - x_i)/h)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let (start, end) = self.window(x);
        // Points far below x contribute Phi ~ 1 exactly at f64 resolution.
        let mut acc = start as f64;
        for &xi in &self.sample[start..end] {
            let z = (x - xi) / h;
            acc += 0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2);
        }
        (acc / self.sample.len() as f64).clamp(0.0, 1.0)
    }
}
