//! Per-bin raw sample moments and mass-weighted matching targets.

use crate::binning::BinPartition;
use crate::error::{Error, Result};
use crate::numeric::sum::NeumaierSum;

/// Raw moments of one bin's members together with the bin's share of the
/// total sample mass.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMomentVector {
    /// `raw[j]` is the mean of `x^j` over the bin members; `raw[0] == 1`.
    pub raw: Vec<f64>,
    /// Fraction of the whole sample that falls in this bin.
    pub mass: f64,
}

impl BinMomentVector {
    pub fn order(&self) -> usize {
        self.raw.len()
    }

    /// Truncate to the first `n_moments` orders (mass unchanged).
    pub fn truncated(&self, n_moments: usize) -> BinMomentVector {
        assert!(n_moments <= self.raw.len());
        BinMomentVector {
            raw: self.raw[..n_moments].to_vec(),
            mass: self.mass,
        }
    }
}

/// Raw moments `mean(x^j)` for `j = 0 .. n_moments - 1` over `members`,
/// accumulated with compensated summation. The returned mass is 1; use
/// [`partition_moments`] to get sample-share masses.
pub fn bin_raw_moments(members: &[f64], n_moments: usize) -> Result<BinMomentVector> {
    if n_moments < 1 {
        return Err(Error::InvalidParameter(
            "moment order must be at least 1".into(),
        ));
    }
    if members.is_empty() {
        return Err(Error::EmptyBin);
    }
    let mut sums = vec![NeumaierSum::new(); n_moments];
    for &x in members {
        let mut p = 1.0;
        sums[0].add(1.0);
        for s in &mut sums[1..] {
            p *= x;
            s.add(p);
        }
    }
    let count = members.len() as f64;
    let raw = sums.iter().map(|s| s.value() / count).collect();
    Ok(BinMomentVector { raw, mass: 1.0 })
}

/// Moment vectors for every bin of a partition, with `mass` set to the bin's
/// fraction of the sample count.
pub fn partition_moments(
    sample: &[f64],
    partition: &BinPartition,
    n_moments: usize,
) -> Result<Vec<BinMomentVector>> {
    let n = sample.len() as f64;
    partition
        .bins
        .iter()
        .map(|bin| {
            let mut m = bin_raw_moments(bin.members(sample), n_moments)?;
            m.mass = bin.count as f64 / n;
            Ok(m)
        })
        .collect()
}

/// Mass-weighted matching targets `mass * raw[j]`.
///
/// Matching these (rather than the bare means) makes each piece integrate to
/// its bin's sample share, so the assembled density integrates to one without
/// a separate normalization pass.
pub fn weighted_targets(m: &BinMomentVector) -> Vec<f64> {
    m.raw.iter().map(|&r| m.mass * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::quantile_partition;
    use approx::assert_relative_eq;

    #[test]
    fn small_bin_by_hand() {
        // Members {1, 2, 3}: mean 2, mean square 14/3, mean cube
        // (1 + 8 + 27)/3 = 12.
        let m = bin_raw_moments(&[1.0, 2.0, 3.0], 4).unwrap();
        assert_eq!(m.raw[0], 1.0);
        assert_eq!(m.raw[1], 2.0);
        assert_relative_eq!(m.raw[2], 14.0 / 3.0, max_relative = 1e-15);
        assert_eq!(m.raw[3], 12.0);
        assert_eq!(m.mass, 1.0);
    }

    #[test]
    fn zeroth_moment_is_exactly_one() {
        let members: Vec<f64> = (0..12345).map(|i| 1.0 + (i as f64) * 1e-4).collect();
        let m = bin_raw_moments(&members, 6).unwrap();
        assert_eq!(m.raw[0], 1.0);
    }

    #[test]
    fn empty_bin_is_rejected() {
        assert!(matches!(bin_raw_moments(&[], 3), Err(Error::EmptyBin)));
    }

    #[test]
    fn masses_sum_to_one() {
        let sample: Vec<f64> = (0..997).map(|i| (i as f64).sqrt()).collect();
        let p = quantile_partition(&sample, 7).unwrap();
        let ms = partition_moments(&sample, &p, 3).unwrap();
        let total: f64 = ms.iter().map(|m| m.mass).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn weighted_targets_scale_raw() {
        let m = BinMomentVector {
            raw: vec![1.0, 2.0, 5.0],
            mass: 0.25,
        };
        assert_eq!(weighted_targets(&m), vec![0.25, 0.5, 1.25]);
    }

    #[test]
    fn compensated_sum_survives_offset_data() {
        // Values clustered near 1e6: naive x^2 accumulation drifts.
        let members: Vec<f64> = (0..50_000).map(|i| 1e6 + (i as f64) * 1e-3).collect();
        let m = bin_raw_moments(&members, 3).unwrap();
        // mean = 1e6 + (n-1)/2 * 1e-3 exactly (arithmetic series).
        let mean = 1e6 + 0.5 * 49_999.0 * 1e-3;
        assert_relative_eq!(m.raw[1], mean, max_relative = 1e-15);
        // Var = (n^2 - 1)/12 * 1e-6; E[x^2] = mean^2 + var.
        let var = (50_000.0f64 * 50_000.0 - 1.0) / 12.0 * 1e-6;
        assert_relative_eq!(m.raw[2], mean * mean + var, max_relative = 1e-14);
    }
}
