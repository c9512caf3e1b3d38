//! Grid search over bin/moment counts with K–S-driven model selection.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::quantile_partition;
use crate::density::{
    assemble, check_nonnegativity, BasisKind, BinFits, FeasibilityReport, PiecewiseDensity,
};
use crate::error::{Error, Result};
use crate::gof::{checked_cdf_values, gof_from_values, ks_from_values};
use crate::lagrange::solve_lagrange;
use crate::moments::{partition_moments, weighted_targets};
use crate::monomial::solve_monomial;

/// Grid points per piece for the feasibility scan during selection.
const FEASIBILITY_SCAN_POINTS: usize = 128;

/// Search space and policy knobs for [`grid_search`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    /// Candidate bin counts, strictly ascending.
    pub nb_list: Vec<usize>,
    /// Candidate moment orders, strictly ascending.
    pub nm_list: Vec<usize>,
    /// Factor of the model's peak value tolerated below zero before a cell
    /// stops counting as nearly non-negative.
    pub feasibility_tolerance: f64,
    pub basis: BasisKind,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nb_list: (1..=19).collect(),
            nm_list: (3..=11).collect(),
            feasibility_tolerance: 1e-3,
            basis: BasisKind::Monomial,
        }
    }
}

impl GridConfig {
    pub fn with_basis(basis: BasisKind) -> Self {
        GridConfig {
            basis,
            ..GridConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("nb_list", &self.nb_list), ("nm_list", &self.nm_list)] {
            if list.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} is empty")));
            }
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly ascending"
                )));
            }
        }
        if self.nb_list[0] < 1 {
            return Err(Error::InvalidParameter("bin counts start at 1".into()));
        }
        let min_nm = match self.basis {
            BasisKind::Monomial => 1,
            BasisKind::Lagrange => 2,
        };
        if self.nm_list[0] < min_nm {
            return Err(Error::InvalidParameter(format!(
                "{} basis needs at least {min_nm} moments",
                self.basis
            )));
        }
        if !self.feasibility_tolerance.is_finite() || self.feasibility_tolerance < 0.0 {
            return Err(Error::InvalidParameter(
                "feasibility tolerance must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one `(n_bins, n_moments)` grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    /// Requested bin count (the partition may hold fewer after merges).
    pub n_bins: usize,
    pub n_moments: usize,
    pub ks: Option<f64>,
    /// `None` when the sample is not larger than `n_bins * n_moments`.
    pub gof: Option<f64>,
    /// Strictly non-negative everywhere scanned.
    pub feasible: bool,
    /// Dips below zero by no more than the tolerance.
    pub nearly_feasible: bool,
    pub solver_failed: bool,
    /// `n_bins` exceeded the sample size; the cell was not attempted.
    pub skipped: bool,
    pub min_value: Option<f64>,
    /// `max(0, -min_value) / peak` — the fallback ranking key.
    pub min_ratio: Option<f64>,
    /// Largest per-piece condition number of the cell's solves.
    pub condition: Option<f64>,
    /// Failure detail when `solver_failed` or `skipped`.
    pub error: Option<String>,
}

impl CellResult {
    fn unevaluated(n_bins: usize, n_moments: usize, skipped: bool, message: String) -> Self {
        CellResult {
            n_bins,
            n_moments,
            ks: None,
            gof: None,
            feasible: false,
            nearly_feasible: false,
            solver_failed: !skipped,
            skipped,
            min_value: None,
            min_ratio: None,
            condition: None,
            error: Some(message),
        }
    }
}

/// The selected model and its cell-level summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChosenModel {
    pub n_bins: usize,
    pub n_moments: usize,
    pub ks: f64,
    pub gof: Option<f64>,
    pub feasibility: FeasibilityReport,
    pub model: PiecewiseDensity,
}

/// Full grid-search outcome: every cell plus the chosen model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub basis: BasisKind,
    pub nb_list: Vec<usize>,
    pub nm_list: Vec<usize>,
    /// Row-major over `nb_list` then `nm_list`.
    pub cells: Vec<CellResult>,
    pub chosen: ChosenModel,
}

impl SelectionResult {
    pub fn cell(&self, n_bins: usize, n_moments: usize) -> Option<&CellResult> {
        let inb = self.nb_list.iter().position(|&v| v == n_bins)?;
        let inm = self.nm_list.iter().position(|&v| v == n_moments)?;
        self.cells.get(inb * self.nm_list.len() + inm)
    }
}

struct CellPayload {
    cell: CellResult,
    kept: Option<(PiecewiseDensity, FeasibilityReport)>,
}

/// Fit a piecewise density at fixed `(n_bins, n_moments)`: quantile
/// partition, per-bin moment matching, assembly. The sample must be sorted
/// ascending.
pub fn fit_model(
    sample: &[f64],
    n_bins: usize,
    n_moments: usize,
    basis: BasisKind,
) -> Result<PiecewiseDensity> {
    let partition = quantile_partition(sample, n_bins)?;
    let moments = partition_moments(sample, &partition, n_moments)?;
    let fits = match basis {
        BasisKind::Monomial => BinFits::Monomial(
            partition
                .bins
                .iter()
                .zip(&moments)
                .map(|(bin, m)| solve_monomial(bin.a, bin.b, &weighted_targets(m)))
                .collect::<Result<_>>()?,
        ),
        BasisKind::Lagrange => BinFits::Lagrange(
            partition
                .bins
                .iter()
                .zip(&moments)
                .map(|(bin, m)| solve_lagrange(bin.a, bin.b, &weighted_targets(m)))
                .collect::<Result<_>>()?,
        ),
    };
    assemble(&partition, fits)
}

fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: sample.len(),
        });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "sample contains non-finite values".into(),
        ));
    }
    if !sample.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("sample must be sorted".into()));
    }
    Ok(())
}

fn evaluate_nb_row(sample: &[f64], nb: usize, config: &GridConfig) -> Vec<CellPayload> {
    let skip_row = |msg: String, skipped: bool| -> Vec<CellPayload> {
        config
            .nm_list
            .iter()
            .map(|&nm| CellPayload {
                cell: CellResult::unevaluated(nb, nm, skipped, msg.clone()),
                kept: None,
            })
            .collect()
    };
    if nb > sample.len() {
        return skip_row(format!("{nb} bins exceed sample size {}", sample.len()), true);
    }
    let nm_max = *config.nm_list.last().expect("validated nonempty");
    let prepared = quantile_partition(sample, nb)
        .and_then(|p| partition_moments(sample, &p, nm_max).map(|m| (p, m)));
    let (partition, moments) = match prepared {
        Ok(pm) => pm,
        Err(e) => return skip_row(e.to_string(), false),
    };
    config
        .nm_list
        .iter()
        .map(|&nm| {
            let per_bin: Result<(BinFits, f64)> = (|| {
                let mut worst_condition = 0.0_f64;
                let fits = match config.basis {
                    BasisKind::Monomial => {
                        let mut v = Vec::with_capacity(partition.bins.len());
                        for (bin, m) in partition.bins.iter().zip(&moments) {
                            let fit = solve_monomial(
                                bin.a,
                                bin.b,
                                &weighted_targets(&m.truncated(nm)),
                            )?;
                            worst_condition = worst_condition.max(fit.condition_estimate);
                            v.push(fit);
                        }
                        BinFits::Monomial(v)
                    }
                    BasisKind::Lagrange => {
                        let mut v = Vec::with_capacity(partition.bins.len());
                        for (bin, m) in partition.bins.iter().zip(&moments) {
                            let fit = solve_lagrange(
                                bin.a,
                                bin.b,
                                &weighted_targets(&m.truncated(nm)),
                            )?;
                            worst_condition = worst_condition.max(fit.condition_estimate);
                            v.push(fit);
                        }
                        BinFits::Lagrange(v)
                    }
                };
                Ok((fits, worst_condition))
            })();
            let (fits, condition) = match per_bin {
                Ok(fc) => fc,
                Err(e) => {
                    return CellPayload {
                        cell: CellResult::unevaluated(nb, nm, false, e.to_string()),
                        kept: None,
                    }
                }
            };
            let evaluated: Result<(PiecewiseDensity, FeasibilityReport, f64, Option<f64>)> =
                (|| {
                    let model = assemble(&partition, fits)?;
                    let feas = check_nonnegativity(
                        &model,
                        FEASIBILITY_SCAN_POINTS,
                        config.feasibility_tolerance,
                    )?;
                    let values = checked_cdf_values(sample, |x| model.cdf(x))?;
                    let ks = ks_from_values(sample, &values)?;
                    let gof = match gof_from_values(sample, &values, nb, nm) {
                        Ok(g) => Some(g),
                        Err(Error::DegreesOfFreedom { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    Ok((model, feas, ks, gof))
                })();
            match evaluated {
                Ok((model, feas, ks, gof)) => {
                    let strict = feas.strictly_feasible();
                    let min_ratio = if feas.peak_value > 0.0 {
                        (-feas.min_value).max(0.0) / feas.peak_value
                    } else {
                        f64::INFINITY
                    };
                    CellPayload {
                        cell: CellResult {
                            n_bins: nb,
                            n_moments: nm,
                            ks: Some(ks),
                            gof,
                            feasible: strict,
                            nearly_feasible: feas.feasible && !strict,
                            solver_failed: false,
                            skipped: false,
                            min_value: Some(feas.min_value),
                            min_ratio: Some(min_ratio),
                            condition: Some(condition),
                            error: None,
                        },
                        kept: Some((model, feas)),
                    }
                }
                Err(e) => CellPayload {
                    cell: CellResult::unevaluated(nb, nm, false, e.to_string()),
                    kept: None,
                },
            }
        })
        .collect()
}

/// Exhaustive search over the configured grid.
///
/// Every cell is fitted and scored; the chosen cell is the smallest K–S
/// among strictly non-negative models, falling back to nearly non-negative
/// models, then to the least-negative model (ranked by `min_ratio`, then
/// K–S). Ties prefer fewer moments, then fewer bins. Rows with more bins
/// than samples are skipped and flagged.
pub fn grid_search(sample: &[f64], config: &GridConfig) -> Result<SelectionResult> {
    config.validate()?;
    check_sample(sample)?;
    let rows: Vec<Vec<CellPayload>> = config
        .nb_list
        .par_iter()
        .map(|&nb| evaluate_nb_row(sample, nb, config))
        .collect();
    let mut payloads: Vec<CellPayload> = rows.into_iter().flatten().collect();

    // Selection key: (class key, ks, n_moments, n_bins), lexicographic.
    let better = |key: &(f64, f64, usize, usize), best: &(f64, f64, usize, usize)| {
        key.0
            .total_cmp(&best.0)
            .then(key.1.total_cmp(&best.1))
            .then(key.2.cmp(&best.2))
            .then(key.3.cmp(&best.3))
            .is_lt()
    };
    let pick = |class: &dyn Fn(&CellResult) -> bool, by_ratio: bool| -> Option<usize> {
        let mut best: Option<(usize, (f64, f64, usize, usize))> = None;
        for (i, p) in payloads.iter().enumerate() {
            let c = &p.cell;
            let Some(ks) = c.ks else { continue };
            if !class(c) {
                continue;
            }
            let ratio = if by_ratio {
                c.min_ratio.unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            let key = (ratio, ks, c.n_moments, c.n_bins);
            if best.as_ref().is_none_or(|(_, b)| better(&key, b)) {
                best = Some((i, key));
            }
        }
        best.map(|(i, _)| i)
    };
    let chosen_index = pick(&|c| c.feasible, false)
        .or_else(|| pick(&|c| c.nearly_feasible, false))
        .or_else(|| pick(&|_| true, true))
        .ok_or(Error::NoEvaluableCell)?;

    let (model, feasibility) = payloads[chosen_index].kept.take().expect("evaluated cell");
    let cell = payloads[chosen_index].cell.clone();
    let chosen = ChosenModel {
        n_bins: cell.n_bins,
        n_moments: cell.n_moments,
        ks: cell.ks.expect("evaluated cell"),
        gof: cell.gof,
        feasibility,
        model,
    };
    Ok(SelectionResult {
        basis: config.basis,
        nb_list: config.nb_list.clone(),
        nm_list: config.nm_list.clone(),
        cells: payloads.into_iter().map(|p| p.cell).collect(),
        chosen,
    })
}

/// One entry of a sensitivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MatrixEntry {
    Value(f64),
    /// The statistic has no value here (e.g. too few degrees of freedom).
    Undefined,
    /// The solver failed for this cell.
    Failed,
    /// The cell was not attempted (more bins than samples).
    Skipped,
}

impl std::fmt::Display for MatrixEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixEntry::Value(v) => write!(f, "{v:.6e}"),
            MatrixEntry::Undefined => write!(f, "undefined"),
            MatrixEntry::Failed => write!(f, "failed"),
            MatrixEntry::Skipped => write!(f, "skipped"),
        }
    }
}

/// A statistic tabulated over the grid: rows follow `nb_list`, columns
/// follow `nm_list`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityMatrix {
    pub statistic: String,
    pub nb_list: Vec<usize>,
    pub nm_list: Vec<usize>,
    pub rows: Vec<Vec<MatrixEntry>>,
}

impl SensitivityMatrix {
    /// CSV with an `n_bins` label column and one column per moment count.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "n_bins")?;
        for nm in &self.nm_list {
            write!(out, ",nm_{nm}")?;
        }
        writeln!(out)?;
        for (nb, row) in self.nb_list.iter().zip(&self.rows) {
            write!(out, "{nb}")?;
            for entry in row {
                write!(out, ",{entry}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Tabulate K–S and goodness-of-fit matrices from a finished search.
pub fn matrices_from(result: &SelectionResult) -> (SensitivityMatrix, SensitivityMatrix) {
    let nm_len = result.nm_list.len();
    let build = |statistic: &str, value: &dyn Fn(&CellResult) -> Option<f64>| SensitivityMatrix {
        statistic: statistic.into(),
        nb_list: result.nb_list.clone(),
        nm_list: result.nm_list.clone(),
        rows: result
            .cells
            .chunks(nm_len)
            .map(|row| {
                row.iter()
                    .map(|c| {
                        if c.skipped {
                            MatrixEntry::Skipped
                        } else if c.solver_failed {
                            MatrixEntry::Failed
                        } else {
                            match value(c) {
                                Some(v) => MatrixEntry::Value(v),
                                None => MatrixEntry::Undefined,
                            }
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    (
        build("ks", &|c| c.ks),
        build("gof", &|c| c.gof),
    )
}

/// Run a grid search and tabulate both sensitivity matrices.
pub fn sensitivity_matrices(
    sample: &[f64],
    config: &GridConfig,
) -> Result<(SelectionResult, SensitivityMatrix, SensitivityMatrix)> {
    let result = grid_search(sample, config)?;
    let (ks, gof) = matrices_from(&result);
    Ok((result, ks, gof))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{draw_sample, DistributionSpec};

    fn small_sample(n: usize) -> Vec<f64> {
        let spec = DistributionSpec::benchmark("normal").unwrap();
        draw_sample(&spec, n, 7).unwrap()
    }

    fn small_config(basis: BasisKind) -> GridConfig {
        GridConfig {
            nb_list: vec![1, 2, 3],
            nm_list: vec![3, 4],
            feasibility_tolerance: 1e-3,
            basis,
        }
    }

    #[test]
    fn config_validation() {
        assert!(GridConfig::default().validate().is_ok());
        let mut c = GridConfig::default();
        c.nb_list = vec![];
        assert!(c.validate().is_err());
        let mut c = GridConfig::default();
        c.nm_list = vec![3, 3];
        assert!(c.validate().is_err());
        let mut c = GridConfig::with_basis(BasisKind::Lagrange);
        c.nm_list = vec![1, 2];
        assert!(c.validate().is_err());
        let mut c = GridConfig::default();
        c.feasibility_tolerance = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_shape_and_cell_lookup() {
        let sample = small_sample(400);
        let result = grid_search(&sample, &small_config(BasisKind::Monomial)).unwrap();
        assert_eq!(result.cells.len(), 6);
        for (i, cell) in result.cells.iter().enumerate() {
            assert_eq!(cell.n_bins, result.nb_list[i / 2]);
            assert_eq!(cell.n_moments, result.nm_list[i % 2]);
        }
        let c = result.cell(2, 4).unwrap();
        assert_eq!((c.n_bins, c.n_moments), (2, 4));
        assert!(result.cell(5, 4).is_none());
    }

    #[test]
    fn chosen_minimizes_ks_among_feasible() {
        let sample = small_sample(400);
        let result = grid_search(&sample, &small_config(BasisKind::Monomial)).unwrap();
        let chosen = &result.chosen;
        let any_feasible = result.cells.iter().any(|c| c.feasible);
        for c in &result.cells {
            if any_feasible && c.feasible {
                assert!(chosen.ks <= c.ks.unwrap() + 1e-15);
            }
        }
        let cell = result.cell(chosen.n_bins, chosen.n_moments).unwrap();
        assert_eq!(cell.ks.unwrap(), chosen.ks);
    }

    #[test]
    fn deterministic_across_runs() {
        let sample = small_sample(300);
        let config = small_config(BasisKind::Lagrange);
        let a = grid_search(&sample, &config).unwrap();
        let b = grid_search(&sample, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn oversized_bins_skipped() {
        let sample = small_sample(40);
        let config = GridConfig {
            nb_list: vec![2, 50],
            nm_list: vec![3],
            feasibility_tolerance: 1e-3,
            basis: BasisKind::Monomial,
        };
        let result = grid_search(&sample, &config).unwrap();
        let skipped = result.cell(50, 3).unwrap();
        assert!(skipped.skipped);
        assert!(!skipped.solver_failed);
        assert!(skipped.ks.is_none());
        assert!(result.cell(2, 3).unwrap().ks.is_some());
    }

    #[test]
    fn no_evaluable_cell_errors() {
        let sample = small_sample(10);
        let config = GridConfig {
            nb_list: vec![20],
            nm_list: vec![3],
            feasibility_tolerance: 1e-3,
            basis: BasisKind::Monomial,
        };
        let err = grid_search(&sample, &config).unwrap_err();
        assert!(matches!(err, Error::NoEvaluableCell));
    }

    #[test]
    fn unsorted_sample_rejected() {
        let err = grid_search(&[2.0, 1.0, 3.0], &small_config(BasisKind::Monomial)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn gof_undefined_when_sample_too_small() {
        // 10 samples, 3 bins x 4 moments = 12 params: gof must be None but
        // the cell still evaluates.
        let sample = small_sample(10);
        let config = GridConfig {
            nb_list: vec![3],
            nm_list: vec![4],
            feasibility_tolerance: 1e-3,
            basis: BasisKind::Monomial,
        };
        let result = grid_search(&sample, &config).unwrap();
        let cell = result.cell(3, 4).unwrap();
        assert!(cell.ks.is_some());
        assert!(cell.gof.is_none());
    }

    #[test]
    fn matrices_mirror_cells() {
        let sample = small_sample(10);
        let config = GridConfig {
            nb_list: vec![3, 20],
            nm_list: vec![3, 4],
            feasibility_tolerance: 1e-3,
            basis: BasisKind::Monomial,
        };
        let (result, ks_m, gof_m) = sensitivity_matrices(&sample, &config).unwrap();
        assert_eq!(ks_m.rows.len(), 2);
        assert_eq!(ks_m.rows[0].len(), 2);
        let c = result.cell(3, 3).unwrap();
        assert_eq!(ks_m.rows[0][0], MatrixEntry::Value(c.ks.unwrap()));
        // (3, 4) has 12 params vs 10 samples: gof undefined.
        assert_eq!(gof_m.rows[0][1], MatrixEntry::Undefined);
        assert_eq!(ks_m.rows[1][0], MatrixEntry::Skipped);
        assert_eq!(gof_m.rows[1][1], MatrixEntry::Skipped);

        let mut buf = Vec::new();
        ks_m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n_bins,nm_3,nm_4");
        assert!(lines[1].starts_with("3,"));
        assert_eq!(lines[2], "20,skipped,skipped");
        assert!(lines[1].contains('e'), "values use scientific notation");
    }

    #[test]
    fn fit_model_matches_grid_cell() {
        let sample = small_sample(400);
        let result = grid_search(&sample, &small_config(BasisKind::Monomial)).unwrap();
        let direct = fit_model(
            &sample,
            result.chosen.n_bins,
            result.chosen.n_moments,
            BasisKind::Monomial,
        )
        .unwrap();
        let ks = crate::gof::ks_statistic(&sample, |x| direct.cdf(x)).unwrap();
        assert_eq!(ks, result.chosen.ks);
    }
}
