//! Piecewise density assembly: joins per-bin fits into one model with
//! analytic CDF, feasibility checking, and JSON/CSV export.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::binning::BinPartition;
use crate::error::{Error, Result};
use crate::lagrange::{lagrange_from_values, LagrangeFit};
use crate::monomial::{monomial_from_coeffs, MonomialFit};
use crate::numeric::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Monomial,
    Lagrange,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Monomial => write!(f, "monomial"),
            BasisKind::Lagrange => write!(f, "lagrange"),
        }
    }
}

/// One bin's fitted polynomial in either basis.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceFit {
    Monomial(MonomialFit),
    Lagrange(LagrangeFit),
}

impl PieceFit {
    pub fn a(&self) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.a,
            PieceFit::Lagrange(f) => f.a,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.b,
            PieceFit::Lagrange(f) => f.b,
        }
    }

    pub fn n_moments(&self) -> usize {
        match self {
            PieceFit::Monomial(f) => f.n_moments(),
            PieceFit::Lagrange(f) => f.n_moments(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.eval(x),
            PieceFit::Lagrange(f) => f.eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.deriv(x),
            PieceFit::Lagrange(f) => f.deriv(x),
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.integral(),
            PieceFit::Lagrange(f) => f.integral(),
        }
    }

    pub fn integral_to(&self, x: f64) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.integral_to(x),
            PieceFit::Lagrange(f) => f.integral_to(x),
        }
    }

    pub fn condition_estimate(&self) -> f64 {
        match self {
            PieceFit::Monomial(f) => f.condition_estimate,
            PieceFit::Lagrange(f) => f.condition_estimate,
        }
    }
}

/// Per-bin fits for [`assemble`]; the variant fixes the basis.
#[derive(Debug, Clone)]
pub enum BinFits {
    Monomial(Vec<MonomialFit>),
    Lagrange(Vec<LagrangeFit>),
}

/// Assembled piecewise density. Zero in inter-bin gaps and outside the
/// support; each piece carries its analytic antiderivative.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    pub basis: BasisKind,
    pub n_bins: usize,
    pub n_moments: usize,
    pub pieces: Vec<PieceFit>,
    /// Sample mass per bin (fractions summing to 1).
    pub bin_masses: Vec<f64>,
    /// Cumulative analytic mass: `cdf_offsets[i]` is the mass of pieces
    /// `0..i`, so the last of the `n_bins + 1` entries is the total integral.
    pub cdf_offsets: Vec<f64>,
}

/// Join per-bin fits into one density.
///
/// The fits must come from the same partition (piece endpoints are checked
/// exactly). CDF offsets are accumulated from the analytic per-piece
/// integrals with compensated summation.
pub fn assemble(partition: &BinPartition, fits: BinFits) -> Result<PiecewiseDensity> {
    let (basis, pieces): (BasisKind, Vec<PieceFit>) = match fits {
        BinFits::Monomial(v) => (
            BasisKind::Monomial,
            v.into_iter().map(PieceFit::Monomial).collect(),
        ),
        BinFits::Lagrange(v) => (
            BasisKind::Lagrange,
            v.into_iter().map(PieceFit::Lagrange).collect(),
        ),
    };
    if pieces.len() != partition.n_bins {
        return Err(Error::MismatchedFits {
            bins: partition.n_bins,
            fits: pieces.len(),
        });
    }
    if pieces.is_empty() {
        return Err(Error::MismatchedFits { bins: 0, fits: 0 });
    }
    let n_moments = pieces[0].n_moments();
    for (piece, bin) in pieces.iter().zip(&partition.bins) {
        if piece.a() != bin.a || piece.b() != bin.b {
            return Err(Error::InvalidParameter(format!(
                "fit on [{}, {}] does not cover bin [{}, {}]",
                piece.a(),
                piece.b(),
                bin.a,
                bin.b
            )));
        }
        if piece.n_moments() != n_moments {
            return Err(Error::InvalidParameter(
                "all pieces must share one moment order".into(),
            ));
        }
    }
    let total: usize = partition.bins.iter().map(|b| b.count).sum();
    let bin_masses: Vec<f64> = partition
        .bins
        .iter()
        .map(|b| b.count as f64 / total as f64)
        .collect();
    let cdf_offsets = accumulate_offsets(&pieces);
    Ok(PiecewiseDensity {
        basis,
        n_bins: partition.n_bins,
        n_moments,
        pieces,
        bin_masses,
        cdf_offsets,
    })
}

fn accumulate_offsets(pieces: &[PieceFit]) -> Vec<f64> {
    let mut offsets = Vec::with_capacity(pieces.len() + 1);
    let mut acc = NeumaierSum::new();
    offsets.push(0.0);
    for p in pieces {
        acc.add(p.integral());
        offsets.push(acc.value());
    }
    offsets
}

impl PiecewiseDensity {
    /// Analytic total mass (the last CDF offset).
    pub fn total_mass(&self) -> f64 {
        *self.cdf_offsets.last().expect("nonempty")
    }

    /// Analytic integral of piece `i`.
    pub fn piece_integral(&self, i: usize) -> f64 {
        self.pieces[i].integral()
    }

    /// `[a_1, b_last]` — the modeled support.
    pub fn support(&self) -> (f64, f64) {
        (
            self.pieces.first().expect("nonempty").a(),
            self.pieces.last().expect("nonempty").b(),
        )
    }

    /// Index of the piece whose `[a, b]` contains `x`, if any.
    fn piece_index(&self, x: f64) -> Option<usize> {
        let idx = self.pieces.partition_point(|p| p.a() <= x);
        if idx == 0 {
            return None;
        }
        let i = idx - 1;
        (x <= self.pieces[i].b()).then_some(i)
    }

    /// Density at `x`: the piece polynomial inside bins, 0 in gaps and
    /// outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].eval(x),
            None => 0.0,
        }
    }

    /// Distribution function at `x`, clamped to `[0, 1]` against roundoff.
    /// Flat across gaps (zero density there).
    pub fn cdf(&self, x: f64) -> f64 {
        let raw = if x < self.pieces[0].a() {
            0.0
        } else {
            let idx = self.pieces.partition_point(|p| p.a() <= x);
            let i = idx - 1;
            if x <= self.pieces[i].b() {
                self.cdf_offsets[i] + self.pieces[i].integral_to(x)
            } else {
                // Past piece i (gap or beyond support): all mass up to and
                // including piece i.
                self.cdf_offsets[i + 1]
            }
        };
        raw.clamp(0.0, 1.0)
    }
}

/// Outcome of the non-negativity scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Smallest density value found over all pieces.
    pub min_value: f64,
    /// Location of that minimum.
    pub min_location: f64,
    /// Largest density value found (sets the tolerance scale).
    pub peak_value: f64,
    /// `true` iff `min_value >= -tolerance_used` ("nearly non-negative").
    pub feasible: bool,
    /// Absolute tolerance applied: `tolerance_factor * peak_value`.
    pub tolerance_used: f64,
}

impl FeasibilityReport {
    /// Strict non-negativity (no tolerance).
    pub fn strictly_feasible(&self) -> bool {
        self.min_value >= 0.0
    }
}

/// Scan the model for negative density values.
///
/// Each piece is sampled on a uniform grid of `samples_per_piece` points
/// (endpoints included) plus the real roots of its derivative (located by
/// sign scan at 64 points and bisection), so polynomial dips between grid
/// points are not missed. `tolerance_factor` scales the model's peak value
/// into the absolute tolerance for "nearly non-negative".
pub fn check_nonnegativity(
    model: &PiecewiseDensity,
    samples_per_piece: usize,
    tolerance_factor: f64,
) -> Result<FeasibilityReport> {
    if samples_per_piece < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 samples per piece".into(),
        ));
    }
    if !tolerance_factor.is_finite() || tolerance_factor < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance factor {tolerance_factor} must be finite and non-negative"
        )));
    }
    let mut min_value = f64::INFINITY;
    let mut min_location = f64::NAN;
    let mut peak_value = f64::NEG_INFINITY;
    let mut consider = |x: f64, v: f64| {
        if v < min_value {
            min_value = v;
            min_location = x;
        }
        if v > peak_value {
            peak_value = v;
        }
    };
    for piece in &model.pieces {
        let (a, b) = (piece.a(), piece.b());
        let step = (b - a) / (samples_per_piece - 1) as f64;
        for k in 0..samples_per_piece {
            let x = if k + 1 == samples_per_piece {
                b
            } else {
                a + step * k as f64
            };
            consider(x, piece.eval(x));
        }
        // Interior extrema: bisect sign changes of the derivative.
        const DERIV_SCAN: usize = 64;
        let dstep = (b - a) / DERIV_SCAN as f64;
        let mut prev_x = a;
        let mut prev_d = piece.deriv(a);
        for k in 1..=DERIV_SCAN {
            let x = if k == DERIV_SCAN { b } else { a + dstep * k as f64 };
            let d = piece.deriv(x);
            if prev_d == 0.0 {
                consider(prev_x, piece.eval(prev_x));
            } else if prev_d * d < 0.0 {
                let root = bisect_root(|t| piece.deriv(t), prev_x, x);
                consider(root, piece.eval(root));
            }
            prev_x = x;
            prev_d = d;
        }
    }
    let tolerance_used = tolerance_factor * peak_value.max(0.0);
    Ok(FeasibilityReport {
        min_value,
        min_location,
        peak_value,
        feasible: min_value >= -tolerance_used,
        tolerance_used,
    })
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if flo * fmid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

// --- serialization -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PieceRepr {
    a: f64,
    b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    basis: BasisKind,
    n_bins: usize,
    n_moments: usize,
    pieces: Vec<PieceRepr>,
    bin_masses: Vec<f64>,
}

impl Serialize for PiecewiseDensity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                PieceFit::Monomial(f) => PieceRepr {
                    a: f.a,
                    b: f.b,
                    coeffs: Some(f.coeffs.clone()),
                    nodes: None,
                    weights: None,
                },
                PieceFit::Lagrange(f) => PieceRepr {
                    a: f.a,
                    b: f.b,
                    coeffs: None,
                    nodes: Some(f.nodes.clone()),
                    weights: Some(f.weights.clone()),
                },
            })
            .collect();
        ModelRepr {
            basis: self.basis,
            n_bins: self.n_bins,
            n_moments: self.n_moments,
            pieces,
            bin_masses: self.bin_masses.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiecewiseDensity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ModelRepr::deserialize(deserializer)?;
        let mut pieces = Vec::with_capacity(repr.pieces.len());
        for p in repr.pieces {
            let piece = match repr.basis {
                BasisKind::Monomial => {
                    let coeffs = p
                        .coeffs
                        .ok_or_else(|| D::Error::custom("monomial piece missing coeffs"))?;
                    PieceFit::Monomial(
                        monomial_from_coeffs(p.a, p.b, coeffs).map_err(D::Error::custom)?,
                    )
                }
                BasisKind::Lagrange => {
                    let nodes = p
                        .nodes
                        .ok_or_else(|| D::Error::custom("lagrange piece missing nodes"))?;
                    let weights = p
                        .weights
                        .ok_or_else(|| D::Error::custom("lagrange piece missing weights"))?;
                    PieceFit::Lagrange(
                        lagrange_from_values(p.a, p.b, nodes, weights).map_err(D::Error::custom)?,
                    )
                }
            };
            pieces.push(piece);
        }
        if pieces.is_empty() {
            return Err(D::Error::custom("model has no pieces"));
        }
        if pieces.len() != repr.n_bins || repr.bin_masses.len() != repr.n_bins {
            return Err(D::Error::custom("piece/bin count mismatch"));
        }
        let cdf_offsets = accumulate_offsets(&pieces);
        Ok(PiecewiseDensity {
            basis: repr.basis,
            n_bins: repr.n_bins,
            n_moments: repr.n_moments,
            pieces,
            bin_masses: repr.bin_masses,
            cdf_offsets,
        })
    }
}

/// Write `x,pdf,cdf` rows for the given grid.
pub fn write_curve_csv<W: Write>(
    mut out: W,
    xs: &[f64],
    pdf: impl Fn(f64) -> f64,
    cdf: impl Fn(f64) -> f64,
) -> std::io::Result<()> {
    writeln!(out, "x,pdf,cdf")?;
    for &x in xs {
        writeln!(out, "{x},{},{}", pdf(x), cdf(x))?;
    }
    Ok(())
}

/// `n` equally spaced points covering `[lo, hi]` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::quantile_partition;
    use crate::lagrange::solve_lagrange;
    use crate::moments::{partition_moments, weighted_targets};
    use crate::monomial::solve_monomial;
    use approx::assert_relative_eq;

    fn fit_model(sample: &[f64], n_bins: usize, n_moments: usize, basis: BasisKind) -> PiecewiseDensity {
        let partition = quantile_partition(sample, n_bins).unwrap();
        let moments = partition_moments(sample, &partition, n_moments).unwrap();
        match basis {
            BasisKind::Monomial => {
                let fits = partition
                    .bins
                    .iter()
                    .zip(&moments)
                    .map(|(bin, m)| solve_monomial(bin.a, bin.b, &weighted_targets(m)).unwrap())
                    .collect();
                assemble(&partition, BinFits::Monomial(fits)).unwrap()
            }
            BasisKind::Lagrange => {
                let fits = partition
                    .bins
                    .iter()
                    .zip(&moments)
                    .map(|(bin, m)| solve_lagrange(bin.a, bin.b, &weighted_targets(m)).unwrap())
                    .collect();
                assemble(&partition, BinFits::Lagrange(fits)).unwrap()
            }
        }
    }

    fn ramp_sample(n: usize) -> Vec<f64> {
        // Smooth strictly increasing values on (0, 2).
        (0..n).map(|i| 2.0 * ((i as f64 + 0.5) / n as f64).sqrt()).collect()
    }

    #[test]
    fn single_constant_piece() {
        let partition = quantile_partition(&[1.0, 2.0, 3.0], 1).unwrap();
        // Constant density 1/2 on [1, 3]: targets are its raw moments
        // 1, 2, 13/3.
        let fit = solve_monomial(1.0, 3.0, &[1.0, 2.0, 13.0 / 3.0]).unwrap();
        let model = assemble(&partition, BinFits::Monomial(vec![fit])).unwrap();
        assert_relative_eq!(model.pdf(2.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(model.cdf(2.0), 0.5, max_relative = 1e-12);
        assert_eq!(model.cdf(0.0), 0.0);
        assert_eq!(model.pdf(0.0), 0.0);
        assert_eq!(model.cdf(4.0), 1.0);
        assert_eq!(model.pdf(4.0), 0.0);
        assert_relative_eq!(model.total_mass(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn two_equal_mass_bins_split_cdf() {
        let sample = ramp_sample(1000);
        let model = fit_model(&sample, 2, 4, BasisKind::Monomial);
        let b1 = model.pieces[0].b();
        assert_relative_eq!(model.cdf(b1), 0.5, epsilon = 1e-12);
        assert_relative_eq!(model.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn offsets_match_piece_integrals() {
        let sample = ramp_sample(997);
        for basis in [BasisKind::Monomial, BasisKind::Lagrange] {
            let model = fit_model(&sample, 7, 5, basis);
            for i in 0..model.pieces.len() {
                let delta = model.cdf_offsets[i + 1] - model.cdf_offsets[i];
                assert!((delta - model.piece_integral(i)).abs() < 1e-12);
                assert_relative_eq!(
                    model.piece_integral(i),
                    model.bin_masses[i],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn cdf_flat_in_gaps_and_monotone_on_smooth_fit() {
        let sample = ramp_sample(2000);
        let model = fit_model(&sample, 5, 4, BasisKind::Lagrange);
        // Gap between consecutive pieces: cdf identical on both sides.
        for i in 0..model.pieces.len() - 1 {
            let b = model.pieces[i].b();
            let a_next = model.pieces[i + 1].a();
            assert!(b < a_next);
            let mid = 0.5 * (b + a_next);
            assert_relative_eq!(model.cdf(mid), model.cdf(b), epsilon = 1e-12);
            assert_relative_eq!(model.cdf(a_next), model.cdf(mid), epsilon = 1e-12);
        }
        let (lo, hi) = model.support();
        let grid = uniform_grid(lo - 0.1, hi + 0.1, 2000);
        let mut prev = -1.0;
        for &x in &grid {
            let c = model.cdf(x);
            assert!(c >= prev - 1e-12, "cdf decreased at {x}");
            assert!((0.0..=1.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn mismatched_fit_count_rejected() {
        let partition = quantile_partition(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let fit = solve_monomial(1.0, 2.0, &[0.5, 0.75]).unwrap();
        let err = assemble(&partition, BinFits::Monomial(vec![fit])).unwrap_err();
        assert!(matches!(err, Error::MismatchedFits { bins: 2, fits: 1 }));
    }

    #[test]
    fn feasibility_constant_positive() {
        let partition = quantile_partition(&[0.0, 1.0], 1).unwrap();
        let fit = solve_monomial(0.0, 1.0, &[1.0, 0.5]).unwrap();
        let model = assemble(&partition, BinFits::Monomial(vec![fit])).unwrap();
        let rep = check_nonnegativity(&model, 16, 1e-3).unwrap();
        assert!(rep.feasible);
        assert!(rep.strictly_feasible());
        assert_relative_eq!(rep.min_value, 1.0, max_relative = 1e-10);
        assert_relative_eq!(rep.peak_value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn feasibility_catches_endpoint_negative() {
        // Density x on [-1, 1] (not a probability density, but a valid
        // polynomial piece): minimum -1 at the left endpoint.
        let partition = crate::binning::partition(&[-1.0, -0.5, 0.5, 1.0], &[]);
        let fit = monomial_from_coeffs(-1.0, 1.0, vec![0.0, 1.0, 0.0]).unwrap();
        let model = assemble(&partition, BinFits::Monomial(vec![fit])).unwrap();
        let rep = check_nonnegativity(&model, 32, 1e-3).unwrap();
        assert!(!rep.feasible);
        assert_relative_eq!(rep.min_value, -1.0, max_relative = 1e-12);
        assert_relative_eq!(rep.min_location, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn feasibility_finds_interior_dip() {
        // p(x) = (x - 0.5)^2 - 0.001 on [0, 1]: a shallow dip at 0.5 that a
        // 16-point grid with endpoints samples poorly; the derivative-root
        // refinement must land on it.
        let partition = crate::binning::partition(&[0.0, 0.25, 0.75, 1.0], &[]);
        let fit = monomial_from_coeffs(0.0, 1.0, vec![0.249, -1.0, 1.0]).unwrap();
        let model = assemble(&partition, BinFits::Monomial(vec![fit])).unwrap();
        let rep = check_nonnegativity(&model, 16, 1e-3).unwrap();
        assert_relative_eq!(rep.min_value, -0.001, max_relative = 1e-9);
        assert_relative_eq!(rep.min_location, 0.5, max_relative = 1e-6);
        assert!(!rep.strictly_feasible());
    }

    #[test]
    fn json_round_trip_both_bases() {
        let sample = ramp_sample(500);
        for basis in [BasisKind::Monomial, BasisKind::Lagrange] {
            let model = fit_model(&sample, 3, 4, basis);
            let text = serde_json::to_string(&model).unwrap();
            let back: PiecewiseDensity = serde_json::from_str(&text).unwrap();
            assert_eq!(back.basis, model.basis);
            assert_eq!(back.n_bins, model.n_bins);
            let (lo, hi) = model.support();
            for &x in &uniform_grid(lo, hi, 97) {
                assert_relative_eq!(back.pdf(x), model.pdf(x), max_relative = 1e-9, epsilon = 1e-12);
                assert_relative_eq!(back.cdf(x), model.cdf(x), max_relative = 1e-9, epsilon = 1e-12);
            }
            // Round-trip of the serialized form is exact.
            let again = serde_json::to_string(&back).unwrap();
            assert_eq!(text, again);
        }
    }

    #[test]
    fn curve_csv_shape() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &[0.0, 0.5, 1.0], |x| x, |x| x * x).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,pdf,cdf");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "0.5,0.5,0.25");
    }

    #[test]
    fn uniform_grid_hits_endpoints() {
        let g = uniform_grid(1.0, 4.0, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[6], 4.0);
    }
}
