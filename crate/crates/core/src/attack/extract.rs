// SPDX-License-Identifier: Apache-2.0

//! Weight recovery from overlapping-beam scans.
//!
//! Each scan position lights several cells at once. On column `j` the
//! measured change is `dI_m = sum_c I_mc * rho_c`, linear in the per-cell
//! divider ratios `rho_c = R_sh / (R_sh + R_c)`. Solving that system per
//! column for `rho` and mapping `1 / rho` through the calibration recovers
//! every cell. When each measurement lights a single cell of the column the
//! system is diagonal and the per-cell slope fit is used instead.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::attack::campaign::Backend;
use crate::attack::regression::{estimate_resistance, fit_line, CalibrationModel, RegressionFit};
use crate::crossbar::{CrossbarConfig, FaultEvent, WeightGrid};
use crate::error::{Error, Result};
use crate::laser::{beam_footprint, BeamSpec, CellCurrent, GeometryConfig, ScanPlan, ScanRegion};

/// Divider ratios are kept strictly inside (0, 1).
const RATIO_FLOOR: f64 = 1e-12;

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMeasurement {
    pub step_index: usize,
    /// Beam centre, um.
    pub position: (f64, f64),
    pub footprint: Vec<CellCurrent>,
    /// Observed column-current change, A, one entry per column.
    pub delta: Vec<f64>,
}

/// Acquire one measurement per (plan position, photocurrent) pair.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scan(
    backend: Backend,
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    geometry: &GeometryConfig,
    beam: &BeamSpec,
    plan: &ScanPlan,
    photocurrents: &[f64],
) -> Result<Vec<ScanMeasurement>> {
    let jobs: Vec<(usize, (f64, f64), f64)> = photocurrents
        .iter()
        .flat_map(|&i| plan.positions.iter().enumerate().map(move |(k, &p)| (k, p, i)))
        .collect();
    jobs.par_iter()
        .map(|&(step_index, position, current)| {
            let mut b = beam.centered_on(position);
            b.total_photocurrent = current;
            let footprint = beam_footprint(geometry, &b, config.rows, config.cols)?;
            let faults: Vec<FaultEvent> = footprint.iter().copied().map(Into::into).collect();
            let delta = backend.fault_response(config, weights, row_voltages, &faults)?;
            Ok(ScanMeasurement {
                step_index,
                position,
                footprint,
                delta,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEstimate {
    pub row: usize,
    pub col: usize,
    pub r_true: Option<f64>,
    /// Ohms.
    pub r_est: f64,
    pub err_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Region cells, row-major.
    pub cells: Vec<CellEstimate>,
    /// Relative least-squares residual `|A rho - dI| / |dI|` per column.
    pub column_residuals: Vec<(usize, f64)>,
}

impl Extraction {
    /// RMS of the per-cell relative error (fraction, not percent).
    pub fn rms_rel_error(&self) -> Option<f64> {
        let errs: Vec<f64> = self.cells.iter().filter_map(|c| c.err_pct).collect();
        if errs.is_empty() || errs.len() != self.cells.len() {
            return None;
        }
        let ms = errs.iter().map(|e| (e / 100.0).powi(2)).sum::<f64>() / errs.len() as f64;
        Some(ms.sqrt())
    }

    pub fn estimate(&self, row: usize, col: usize) -> Option<&CellEstimate> {
        self.cells.iter().find(|c| c.row == row && c.col == col)
    }
}

enum ColumnOutcome {
    Solved(Vec<(usize, f64)>, f64),
    Unresolved(Vec<(usize, usize)>),
}

/// Recover region resistances from scan measurements.
///
/// `truth`, when given, fills in per-cell errors.
pub fn extract_region(
    measurements: &[ScanMeasurement],
    model: &CalibrationModel,
    region: ScanRegion,
    truth: Option<&WeightGrid>,
) -> Result<Extraction> {
    if region.rows == 0 || region.cols == 0 {
        return Err(Error::Input("extraction region is empty".into()));
    }
    let ncols = measurements.first().map_or(0, |m| m.delta.len());
    if let Some(m) = measurements.iter().find(|m| m.delta.len() != ncols) {
        return Err(Error::Dimension {
            what: "scan measurement columns",
            expected: ncols,
            got: m.delta.len(),
        });
    }
    if region.col0 + region.cols > ncols {
        return Err(Error::Input(format!(
            "region columns {}..{} exceed the {ncols} measured columns",
            region.col0,
            region.col0 + region.cols
        )));
    }

    let outcomes: Vec<(usize, ColumnOutcome)> = (region.col0..region.col0 + region.cols)
        .into_par_iter()
        .map(|col| Ok((col, solve_column(measurements, model, region, col)?)))
        .collect::<Result<_>>()?;

    let mut unresolved = Vec::new();
    let mut estimates: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut column_residuals = Vec::new();
    for (col, outcome) in outcomes {
        match outcome {
            ColumnOutcome::Solved(rows, residual) => {
                for (row, r) in rows {
                    estimates.insert((row, col), r);
                }
                column_residuals.push((col, residual));
            }
            ColumnOutcome::Unresolved(cells) => unresolved.extend(cells),
        }
    }
    if !unresolved.is_empty() {
        unresolved.sort();
        return Err(Error::Identifiability(unresolved));
    }

    let cells = region
        .cells()
        .map(|(row, col)| {
            let r_est = estimates[&(row, col)];
            let r_true = truth.map(|w| w.resistance(row, col));
            CellEstimate {
                row,
                col,
                r_true,
                r_est,
                err_pct: r_true.map(|t| 100.0 * (r_est - t).abs() / t),
            }
        })
        .collect();
    Ok(Extraction {
        cells,
        column_residuals,
    })
}

fn solve_column(
    measurements: &[ScanMeasurement],
    model: &CalibrationModel,
    region: ScanRegion,
    col: usize,
) -> Result<ColumnOutcome> {
    // Unknowns: every region cell of this column plus any other cell of the
    // column that a footprint touches.
    let mut unknown_rows: Vec<usize> = (region.row0..region.row0 + region.rows).collect();
    for m in measurements {
        for c in m.footprint.iter().filter(|c| c.col == col) {
            if !unknown_rows.contains(&c.row) {
                unknown_rows.push(c.row);
            }
        }
    }
    unknown_rows.sort_unstable();
    let index: BTreeMap<usize, usize> = unknown_rows.iter().enumerate().map(|(k, &r)| (r, k)).collect();

    // Design rows: (per-unknown injected current, observed dI).
    let design: Vec<(Vec<(usize, f64)>, f64)> = measurements
        .iter()
        .filter_map(|m| {
            let entries: Vec<(usize, f64)> = m
                .footprint
                .iter()
                .filter(|c| c.col == col && c.current > 0.0)
                .map(|c| (index[&c.row], c.current))
                .collect();
            (!entries.is_empty()).then(|| (entries, m.delta[col]))
        })
        .collect();

    let diagonal = design.iter().all(|(e, _)| e.len() == 1);
    if diagonal {
        return Ok(solve_diagonal(&design, &unknown_rows, model, region, col));
    }

    let (nm, nk) = (design.len(), unknown_rows.len());
    if nm == 0 {
        return Ok(ColumnOutcome::Unresolved(
            (region.row0..region.row0 + region.rows).map(|r| (r, col)).collect(),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(nm, nk);
    let mut b = DVector::<f64>::zeros(nm);
    for (m, (entries, d)) in design.iter().enumerate() {
        for &(k, i) in entries {
            a[(m, k)] += i;
        }
        b[m] = *d;
    }
    // Pad to square so the SVD exposes the full right null space.
    let a_sq = if nm < nk { a.clone().resize(nk, nk, 0.0) } else { a.clone() };
    let svd = a_sq.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Solver("SVD failed".into()))?;
    let smax = svd.singular_values.max();
    let cutoff = RANK_TOL * smax.max(f64::MIN_POSITIVE) * nk.max(nm) as f64;

    let mut unresolved = Vec::new();
    for (k, &row) in unknown_rows.iter().enumerate() {
        if !region.contains(row, col) {
            continue;
        }
        let leak: f64 = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= cutoff)
            .map(|(s_idx, _)| v_t[(s_idx, k)].powi(2))
            .sum();
        if leak > 1e-12 {
            unresolved.push((row, col));
        }
    }
    if !unresolved.is_empty() {
        return Ok(ColumnOutcome::Unresolved(unresolved));
    }

    let b_sq = if nm < nk { b.clone().resize_vertically(nk, 0.0) } else { b.clone() };
    let rho = svd
        .solve(&b_sq, cutoff)
        .map_err(|e| Error::Solver(e.to_string()))?;
    let fitted = &a * &rho;
    let bn = b.norm();
    let residual = if bn > 0.0 { (fitted - &b).norm() / bn } else { 0.0 };

    let rows = unknown_rows
        .iter()
        .enumerate()
        .filter(|(_, &row)| region.contains(row, col))
        .map(|(k, &row)| {
            let ratio = rho[k].clamp(RATIO_FLOOR, 1.0 - RATIO_FLOOR);
            (row, model.estimate_kohm(1.0 / ratio) * 1e3)
        })
        .collect();
    Ok(ColumnOutcome::Solved(rows, residual))
}

fn solve_diagonal(
    design: &[(Vec<(usize, f64)>, f64)],
    unknown_rows: &[usize],
    model: &CalibrationModel,
    region: ScanRegion,
    col: usize,
) -> ColumnOutcome {
    let mut per_cell: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (entries, d) in design {
        let (k, i) = entries[0];
        per_cell.entry(k).or_default().push((i, *d));
    }
    let mut rows = Vec::new();
    let mut unresolved = Vec::new();
    let mut ss_res = 0.0;
    let mut ss_obs = 0.0;
    for (k, &row) in unknown_rows.iter().enumerate() {
        if !region.contains(row, col) {
            continue;
        }
        let Some(points) = per_cell.get(&k) else {
            unresolved.push((row, col));
            continue;
        };
        let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let fit = if distinct.len() >= 2 {
            fit_line(points).ok()
        } else {
            // One injection level: the ratio is read off directly.
            let (i, d) = points[0];
            let slope = d / i;
            Some(RegressionFit {
                slope,
                intercept: 0.0,
                r_squared: 1.0,
                reciprocal_slope: 1.0 / slope,
                points: points.len(),
            })
        };
        match fit {
            Some(fit) if fit.slope > 0.0 => {
                for &(i, d) in points {
                    let e = d - (fit.slope * i + fit.intercept);
                    ss_res += e * e;
                    ss_obs += d * d;
                }
                rows.push((row, estimate_resistance(model, &fit, None).r_est_kohm * 1e3));
            }
            _ => unresolved.push((row, col)),
        }
    }
    if !unresolved.is_empty() {
        return ColumnOutcome::Unresolved(unresolved);
    }
    let residual = if ss_obs > 0.0 { (ss_res / ss_obs).sqrt() } else { 0.0 };
    ColumnOutcome::Solved(rows, residual)
}
