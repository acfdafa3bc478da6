// SPDX-License-Identifier: Apache-2.0

//! CSV readers and writers. All output is written whole to a sibling temp
//! file and renamed into place.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{CampaignResult, Extraction};
use crate::crossbar::{ColumnReadout, WeightGrid};
use crate::device::Trajectory;
use crate::error::{Error, Result};
use crate::laser::ScanPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub row: usize,
    pub col: usize,
    pub r_ohm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRecord {
    pub col: usize,
    pub i_amps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t_s: f64,
    pub i_a: f64,
    pub v_v: f64,
    pub x_m: f64,
    pub r_ohm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPlanRecord {
    pub step_index: usize,
    pub x_um: f64,
    pub y_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub r_ohm: f64,
    pub i_inj_ua: f64,
    pub delta_i_ua: f64,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub row: usize,
    pub col: usize,
    pub r_true_ohm: Option<f64>,
    pub r_est_ohm: f64,
    pub err_pct: Option<f64>,
}

/// Parse a dense weight grid from `row,col,r_ohm` records in any order.
pub fn parse_weights<R: Read>(reader: R) -> Result<WeightGrid> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["row", "col", "r_ohm"] {
        return Err(Error::Input(format!(
            "weights header must be `row,col,r_ohm`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for rec in rdr.deserialize::<WeightRecord>() {
        records.push(rec?);
    }
    if records.is_empty() {
        return Err(Error::Input("weights file has no cells".into()));
    }
    let rows = records.iter().map(|r| r.row).max().unwrap_or(0).saturating_add(1);
    let cols = records.iter().map(|r| r.col).max().unwrap_or(0).saturating_add(1);
    let cells = rows
        .checked_mul(cols)
        .filter(|&n| n == records.len())
        .ok_or_else(|| {
            Error::Input(format!(
                "weights file has {} cells but indices span {rows}x{cols}",
                records.len()
            ))
        })?;
    let mut values = vec![f64::NAN; cells];
    for r in &records {
        let slot = &mut values[r.row * cols + r.col];
        if !slot.is_nan() {
            return Err(Error::Input(format!("cell ({}, {}) listed twice", r.row, r.col)));
        }
        if r.r_ohm.is_nan() {
            return Err(Error::Input(format!("cell ({}, {}) resistance is NaN", r.row, r.col)));
        }
        *slot = r.r_ohm;
    }
    WeightGrid::new(rows, cols, values)
}

pub fn read_weights(path: &Path) -> Result<WeightGrid> {
    parse_weights(fs::File::open(path)?)
}

pub fn weight_records(weights: &WeightGrid) -> Vec<WeightRecord> {
    (0..weights.rows())
        .flat_map(|row| {
            (0..weights.cols()).map(move |col| WeightRecord {
                row,
                col,
                r_ohm: weights.resistance(row, col),
            })
        })
        .collect()
}

pub fn readout_records(readout: &ColumnReadout) -> Vec<ReadoutRecord> {
    readout
        .currents
        .iter()
        .enumerate()
        .map(|(col, &i_amps)| ReadoutRecord { col, i_amps })
        .collect()
}

pub fn trajectory_records(trajectory: &Trajectory) -> Vec<TrajectoryRecord> {
    trajectory
        .points
        .iter()
        .map(|p| TrajectoryRecord {
            t_s: p.t,
            i_a: p.i,
            v_v: p.v,
            x_m: p.x,
            r_ohm: p.r,
        })
        .collect()
}

pub fn scan_plan_records(plan: &ScanPlan) -> Vec<ScanPlanRecord> {
    plan.positions
        .iter()
        .enumerate()
        .map(|(step_index, &(x_um, y_um))| ScanPlanRecord { step_index, x_um, y_um })
        .collect()
}

pub fn campaign_records(campaign: &CampaignResult) -> Vec<CampaignRecord> {
    campaign
        .samples
        .iter()
        .map(|s| CampaignRecord {
            r_ohm: s.resistance,
            i_inj_ua: s.injected * 1e6,
            delta_i_ua: s.delta * 1e6,
            col: s.col,
        })
        .collect()
}

pub fn extraction_records(extraction: &Extraction) -> Vec<ExtractionRecord> {
    extraction
        .cells
        .iter()
        .map(|c| ExtractionRecord {
            row: c.row,
            col: c.col,
            r_true_ohm: c.r_true,
            r_est_ohm: c.r_est,
            err_pct: c.err_pct,
        })
        .collect()
}

/// Serialize records to CSV bytes with a header row.
pub fn to_csv_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    write_atomic(path, &to_csv_bytes(records)?)
}

/// Write `bytes` to a temp file next to `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("`{}` is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp: PathBuf = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
