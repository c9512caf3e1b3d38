//! Quantile-based binning: split a sorted sample into bins of (nearly) equal
//! member count, with boundaries taken from order statistics.

use crate::error::{Error, Result};

/// One bin of the partition. `range` indexes the sorted sample slice the bin
/// was built from, as `[start, end)`; `a` and `b` are the smallest and
/// largest member values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub a: f64,
    pub b: f64,
    pub count: usize,
    pub range: (usize, usize),
}

impl Bin {
    /// Members of this bin within the original sorted sample.
    pub fn members<'a>(&self, sample: &'a [f64]) -> &'a [f64] {
        &sample[self.range.0..self.range.1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    pub n_bins: usize,
    /// Interior boundaries actually in force, strictly increasing
    /// (`n_bins - 1` of them).
    pub boundaries: Vec<f64>,
    pub bins: Vec<Bin>,
    /// Number of requested boundaries dropped because ties or duplicates
    /// would have produced empty bins.
    pub merges: usize,
}

/// Interior boundaries for an `n_bins`-way equal-count split of a sorted
/// sample: boundary `i` is the order statistic of rank `ceil(i * N / n_bins)`
/// (1-based), for `i = 1 .. n_bins - 1`.
pub fn quantile_boundaries(sample: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    let n = sample.len();
    if n_bins < 1 {
        return Err(Error::InvalidParameter("bin count must be at least 1".into()));
    }
    if n_bins > n {
        return Err(Error::InsufficientData {
            needed: n_bins,
            got: n,
        });
    }
    debug_assert!(sample.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    let mut out = Vec::with_capacity(n_bins - 1);
    for i in 1..n_bins {
        let rank = (i * n).div_ceil(n_bins); // 1-based
        out.push(sample[rank - 1]);
    }
    Ok(out)
}

/// Split a sorted sample at the given boundary values.
///
/// Membership is half-open on the right: bin 1 takes `x <= b_1`, interior bin
/// `i` takes `b_(i-1) < x <= b_i`, and the last bin takes everything above the
/// final boundary. Duplicate boundaries (from ties in the sample) and
/// boundaries outside `[min, max)` would create empty bins; they are dropped,
/// which merges the empty bin into its populated neighbor, and the number of
/// dropped boundaries is reported as `merges`.
pub fn partition(sample: &[f64], boundaries: &[f64]) -> BinPartition {
    if sample.is_empty() {
        return BinPartition {
            n_bins: 0,
            boundaries: Vec::new(),
            bins: Vec::new(),
            merges: 0,
        };
    }
    let lo = sample[0];
    let hi = sample[sample.len() - 1];
    let mut effective: Vec<f64> = Vec::with_capacity(boundaries.len());
    for &b in boundaries {
        if b < lo || b >= hi {
            continue;
        }
        if effective.last().is_some_and(|&prev| b <= prev) {
            continue;
        }
        effective.push(b);
    }
    let merges = boundaries.len() - effective.len();

    let mut bins = Vec::with_capacity(effective.len() + 1);
    let mut start = 0usize;
    for &b in &effective {
        let end = sample.partition_point(|&x| x <= b);
        bins.push(Bin {
            a: sample[start],
            b: sample[end - 1],
            count: end - start,
            range: (start, end),
        });
        start = end;
    }
    bins.push(Bin {
        a: sample[start],
        b: hi,
        count: sample.len() - start,
        range: (start, sample.len()),
    });

    BinPartition {
        n_bins: bins.len(),
        boundaries: effective,
        bins,
        merges,
    }
}

/// Convenience: quantile boundaries followed by [`partition`].
pub fn quantile_partition(sample: &[f64], n_bins: usize) -> Result<BinPartition> {
    let boundaries = quantile_boundaries(sample, n_bins)?;
    Ok(partition(sample, &boundaries))
}
