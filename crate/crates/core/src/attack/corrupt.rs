// SPDX-License-Identifier: Apache-2.0

use crate::crossbar::{ideal_column_currents, CrossbarConfig, WeightGrid};
use crate::device::{integrate_waveform, team_state_derivative, CurrentWaveform, TeamParams, TeamState, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    /// Ohms.
    pub r_before: f64,
    pub r_after: f64,
    /// `100 * (r_after - r_before) / r_before`.
    pub percent_change: f64,
    /// Final state does not move with the drive removed.
    pub permanent: bool,
    pub trajectory: Trajectory,
}

/// Drive one device through `waveform` and report the resistance shift.
pub fn corrupt_cell(params: &TeamParams, state: TeamState, waveform: &CurrentWaveform) -> Result<Corruption> {
    let trajectory = integrate_waveform(params, state, waveform)?;
    let r_before = trajectory.initial_resistance();
    let r_after = trajectory.final_resistance();
    let permanent = team_state_derivative(params, trajectory.final_state, 0.0) == 0.0;
    Ok(Corruption {
        r_before,
        r_after,
        percent_change: 100.0 * (r_after - r_before) / r_before,
        permanent,
        trajectory,
    })
}

/// Copy of `weights` with each listed cell scaled by `1 + percent_change / 100`.
pub fn apply_corruption(weights: &WeightGrid, cells: &[(usize, usize)], percent_change: f64) -> Result<WeightGrid> {
    let mut out = weights.clone();
    let factor = 1.0 + percent_change / 100.0;
    for &(row, col) in cells {
        if row >= weights.rows() || col >= weights.cols() {
            return Err(Error::Input(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                weights.rows(),
                weights.cols()
            )));
        }
        out.set_resistance(row, col, weights.resistance(row, col) * factor)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColumnDeviation {
    /// Max over probes of `|I_after - I_before| / |I_before|`.
    pub max_rel: f64,
    pub mean_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactStats {
    pub per_column: Vec<ColumnDeviation>,
    pub max_rel: f64,
    pub mean_rel: f64,
}

impl ImpactStats {
    /// Columns whose output moved at all.
    pub fn affected_columns(&self) -> Vec<usize> {
        self.per_column
            .iter()
            .enumerate()
            .filter(|(_, d)| d.max_rel > 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn rel(after: f64, before: f64) -> f64 {
    let diff = (after - before).abs();
    if diff == 0.0 {
        0.0
    } else if before == 0.0 {
        f64::INFINITY
    } else {
        diff / before.abs()
    }
}

/// Column-output deviation between two weight grids over a set of probe
/// input vectors.
pub fn inference_impact(
    config: &CrossbarConfig,
    before: &WeightGrid,
    after: &WeightGrid,
    probes: &[Vec<f64>],
) -> Result<ImpactStats> {
    if before.rows() != after.rows() || before.cols() != after.cols() {
        return Err(Error::Dimension {
            what: "corrupted grid cells",
            expected: before.rows() * before.cols(),
            got: after.rows() * after.cols(),
        });
    }
    if probes.is_empty() {
        return Err(Error::Input("inference impact needs at least one probe".into()));
    }
    let mut per_column = vec![ColumnDeviation::default(); config.cols];
    for probe in probes {
        let a = ideal_column_currents(config, before, probe)?;
        let b = ideal_column_currents(config, after, probe)?;
        for (j, dev) in per_column.iter_mut().enumerate() {
            let r = rel(b.currents[j], a.currents[j]);
            dev.max_rel = dev.max_rel.max(r);
            dev.mean_rel += r / probes.len() as f64;
        }
    }
    let max_rel = per_column.iter().map(|d| d.max_rel).fold(0.0, f64::max);
    let mean_rel = per_column.iter().map(|d| d.mean_rel).sum::<f64>() / per_column.len().max(1) as f64;
    Ok(ImpactStats {
        per_column,
        max_rel,
        mean_rel,
    })
}
