// SPDX-License-Identifier: Apache-2.0

//! Laser spot geometry: which cells a spot covers, how the photocurrent
//! divides among them, and overlapping raster scans.
//!
//! Cell `(row, col)` is centred at `(col * pitch, row * pitch)` um. A cell is
//! illuminated when its centre lies inside the spot; its share of the
//! photocurrent is the profile sampled at the centre, normalised over every
//! lattice cell inside the spot (on or off the array). Off-array cells are
//! then dropped, so the shares sum to 1 for a spot fully on the array and to
//! less than 1 otherwise.

use serde::{Deserialize, Serialize};

use crate::crossbar::FaultEvent;
use crate::error::{Error, Result};

pub const MIN_BEAM_DIAMETER_UM: f64 = 1.0;
pub const MAX_BEAM_DIAMETER_UM: f64 = 50.0;

/// Tolerance for centres sitting exactly on the spot edge, in units of pitch^2.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// um per cell, both axes.
    pub cell_pitch: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { cell_pitch: 1.0 }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_pitch.is_finite() && self.cell_pitch > 0.0) {
            return Err(Error::Domain(format!("cell pitch must be > 0, got {}", self.cell_pitch)));
        }
        Ok(())
    }

    /// Centre of cell `(row, col)` in um.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (col as f64 * self.cell_pitch, row as f64 * self.cell_pitch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamProfile {
    UniformDisk,
    /// sigma = diameter / 4, truncated at the spot edge.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// (x, y) in um.
    pub center: (f64, f64),
    /// um, within [1, 50].
    pub diameter: f64,
    /// A.
    pub total_photocurrent: f64,
    pub profile: BeamProfile,
}

impl BeamSpec {
    pub fn new(center: (f64, f64), diameter: f64, total_photocurrent: f64, profile: BeamProfile) -> Result<Self> {
        let b = Self {
            center,
            diameter,
            total_photocurrent,
            profile,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_BEAM_DIAMETER_UM..=MAX_BEAM_DIAMETER_UM).contains(&self.diameter) {
            return Err(Error::Domain(format!(
                "beam diameter {} um outside 1–50 μm",
                self.diameter
            )));
        }
        if !(self.total_photocurrent.is_finite() && self.total_photocurrent >= 0.0) {
            return Err(Error::Domain(format!(
                "photocurrent must be >= 0, got {}",
                self.total_photocurrent
            )));
        }
        if !(self.center.0.is_finite() && self.center.1.is_finite()) {
            return Err(Error::Domain("beam centre must be finite".into()));
        }
        Ok(())
    }

    pub fn centered_on(mut self, center: (f64, f64)) -> Self {
        self.center = center;
        self
    }

    fn weight(&self, d2: f64) -> f64 {
        match self.profile {
            BeamProfile::UniformDisk => 1.0,
            BeamProfile::Gaussian => {
                let sigma = self.diameter / 4.0;
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Photocurrent delivered to one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCurrent {
    pub row: usize,
    pub col: usize,
    pub current: f64,
}

impl From<CellCurrent> for FaultEvent {
    fn from(c: CellCurrent) -> Self {
        FaultEvent::new(c.row, c.col, c.current)
    }
}

/// Cells illuminated by `beam` on a `rows x cols` array, row-major.
pub fn beam_footprint(
    geometry: &GeometryConfig,
    beam: &BeamSpec,
    rows: usize,
    cols: usize,
) -> Result<Vec<CellCurrent>> {
    geometry.validate()?;
    beam.validate()?;
    let p = geometry.cell_pitch;
    let r = beam.diameter / 2.0;
    let r2 = r * r + EDGE_EPS * p * p;
    let (cx, cy) = beam.center;

    let m_lo = ((cx - r) / p).floor() as i64;
    let m_hi = ((cx + r) / p).ceil() as i64;
    let n_lo = ((cy - r) / p).floor() as i64;
    let n_hi = ((cy + r) / p).ceil() as i64;

    let mut total = 0.0;
    let mut inside = Vec::new();
    for n in n_lo..=n_hi {
        for m in m_lo..=m_hi {
            let dx = m as f64 * p - cx;
            let dy = n as f64 * p - cy;
            let d2 = dx * dx + dy * dy;
            if d2 <= r2 {
                let w = beam.weight(d2);
                total += w;
                if n >= 0 && m >= 0 && (n as usize) < rows && (m as usize) < cols {
                    inside.push((n as usize, m as usize, w));
                }
            }
        }
    }
    if total == 0.0 {
        return Ok(Vec::new());
    }
    Ok(inside
        .into_iter()
        .map(|(row, col, w)| CellCurrent {
            row,
            col,
            current: beam.total_photocurrent * w / total,
        })
        .collect())
}

/// Rectangular block of cells to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ScanRegion {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row0 + self.rows).contains(&row) && (self.col0..self.col0 + self.cols).contains(&col)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row0..self.row0 + self.rows).flat_map(move |r| (self.col0..self.col0 + self.cols).map(move |c| (r, c)))
    }
}

/// Ordered raster of beam centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    /// (x, y) in um, row-major raster.
    pub positions: Vec<(f64, f64)>,
    pub step: f64,
    pub diameter: f64,
    /// Smallest number of distinct raster coordinates covering any region
    /// cell along either axis.
    pub min_axis_coverage: usize,
    /// Set when `step >= diameter`: footprints tile without overlapping.
    pub no_overlap: bool,
}

impl ScanPlan {
    /// Footprint coverage `ceil(diameter / step)` promised per axis.
    pub fn required_axis_coverage(&self) -> usize {
        (self.diameter / self.step - 1e-9).ceil().max(1.0) as usize
    }
}

fn axis_positions(first_cell: f64, last_cell: f64, r: f64, step: f64) -> Vec<f64> {
    let back = (r / step + 1e-9).floor();
    let start = first_cell - back * step;
    let end = last_cell + r + 1e-9 * step;
    let mut out = Vec::new();
    let mut k = 0.0;
    loop {
        let x = start + k * step;
        if x > end {
            break;
        }
        out.push(x);
        k += 1.0;
    }
    out
}

fn axis_coverage(cells: impl Iterator<Item = f64>, positions: &[f64], r: f64) -> usize {
    cells
        .map(|c| positions.iter().filter(|&&x| (x - c).abs() <= r * (1.0 + 1e-12)).count())
        .min()
        .unwrap_or(0)
}

/// Raster the beam over `region` with spacing `step` um.
///
/// The raster is anchored on the first cell centre of the region and runs
/// one beam radius past each edge so border cells see as many footprints as
/// interior ones.
pub fn plan_scan(geometry: &GeometryConfig, beam: &BeamSpec, step: f64, region: ScanRegion) -> Result<ScanPlan> {
    geometry.validate()?;
    beam.validate()?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Input(format!("scan step must be > 0, got {step}")));
    }
    if region.rows == 0 || region.cols == 0 {
        return Err(Error::Input("scan region is empty".into()));
    }
    if step >= 2.0 * beam.diameter {
        return Err(Error::CoverageGap {
            step,
            diameter: beam.diameter,
        });
    }
    let p = geometry.cell_pitch;
    let r = beam.diameter / 2.0;
    let xs = axis_positions(
        region.col0 as f64 * p,
        (region.col0 + region.cols - 1) as f64 * p,
        r,
        step,
    );
    let ys = axis_positions(
        region.row0 as f64 * p,
        (region.row0 + region.rows - 1) as f64 * p,
        r,
        step,
    );
    let cov_x = axis_coverage((region.col0..region.col0 + region.cols).map(|c| c as f64 * p), &xs, r);
    let cov_y = axis_coverage((region.row0..region.row0 + region.rows).map(|c| c as f64 * p), &ys, r);
    let positions = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    Ok(ScanPlan {
        positions,
        step,
        diameter: beam.diameter,
        min_axis_coverage: cov_x.min(cov_y),
        no_overlap: step >= beam.diameter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam(d: f64, profile: BeamProfile) -> BeamSpec {
        BeamSpec::new((5.0, 5.0), d, 10e-6, profile).unwrap()
    }

    #[test]
    fn sub_pitch_spot_hits_one_cell() {
        let fp = beam_footprint(&GeometryConfig::default(), &beam(1.0, BeamProfile::UniformDisk), 10, 10).unwrap();
        assert_eq!(fp.len(), 1);
        assert_eq!((fp[0].row, fp[0].col), (5, 5));
        assert_eq!(fp[0].current, 10e-6);
    }

    #[test]
    fn diameter_bounds() {
        assert!(BeamSpec::new((0.0, 0.0), 0.5, 1e-6, BeamProfile::UniformDisk).is_err());
        assert!(BeamSpec::new((0.0, 0.0), 60.0, 1e-6, BeamProfile::UniformDisk).is_err());
        assert!(BeamSpec::new((0.0, 0.0), 50.0, 1e-6, BeamProfile::UniformDisk).is_ok());
        assert!(BeamSpec::new((0.0, 0.0), 3.0, -1e-6, BeamProfile::UniformDisk).is_err());
    }

    #[test]
    fn off_array_beam_is_empty() {
        let b = BeamSpec::new((-100.0, -100.0), 3.0, 1e-6, BeamProfile::UniformDisk).unwrap();
        assert!(beam_footprint(&GeometryConfig::default(), &b, 8, 8).unwrap().is_empty());
    }

    #[test]
    fn partial_overlap_loses_current() {
        let b = BeamSpec::new((0.0, 0.0), 3.0, 1e-6, BeamProfile::UniformDisk).unwrap();
        let fp = beam_footprint(&GeometryConfig::default(), &b, 8, 8).unwrap();
        let sum: f64 = fp.iter().map(|c| c.current).sum();
        assert!(sum < 1e-6 && sum > 0.0);
        assert_eq!(fp.len(), 4);
    }

    #[test]
    fn step_limits() {
        let g = GeometryConfig::default();
        let b = beam(3.0, BeamProfile::UniformDisk);
        let region = ScanRegion { row0: 0, col0: 0, rows: 4, cols: 4 };
        assert!(matches!(plan_scan(&g, &b, 6.0, region), Err(Error::CoverageGap { .. })));
        assert!(plan_scan(&g, &b, 0.0, region).is_err());
        let tiled = plan_scan(&g, &b, 3.0, region).unwrap();
        assert!(tiled.no_overlap);
        assert!(!plan_scan(&g, &b, 1.5, region).unwrap().no_overlap);
    }
}
