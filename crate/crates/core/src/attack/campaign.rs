// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::{
    delta_current, faulted_column_currents, ideal_column_currents, CrossbarConfig, FaultEvent,
    WeightGrid,
};
use crate::error::{Error, Result};
use crate::mna::mna_fault_delta;

/// Circuit solver behind a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Analytic virtual-ground model with the current divider.
    #[default]
    Ideal,
    /// Full nodal solve including wire and driver parasitics.
    Mna,
}

impl Backend {
    /// Column-current change caused by `faults`, as the attacker measures it.
    pub fn fault_response(
        self,
        config: &CrossbarConfig,
        weights: &WeightGrid,
        row_voltages: &[f64],
        faults: &[FaultEvent],
    ) -> Result<Vec<f64>> {
        match self {
            Backend::Ideal => {
                let before = ideal_column_currents(config, weights, row_voltages)?;
                let after = faulted_column_currents(config, weights, row_voltages, faults)?;
                delta_current(&before, &after)
            }
            Backend::Mna => mna_fault_delta(config, weights, row_voltages, faults),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignSample {
    pub row: usize,
    pub col: usize,
    /// True cell resistance, ohms (simulation ground truth).
    pub resistance: f64,
    /// A.
    pub injected: f64,
    /// A, on the target's column.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub samples: Vec<CampaignSample>,
    pub label: String,
}

impl CampaignResult {
    /// `(I_inj, dI)` pairs in campaign order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.injected, s.delta)).collect()
    }

    pub fn extend(&mut self, other: CampaignResult) {
        self.samples.extend(other.samples);
    }
}

/// Inject each current in turn on `target` and record the target column's
/// current change.
pub fn run_campaign(
    backend: Backend,
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    target: (usize, usize),
    currents: &[f64],
    label: impl Into<String>,
) -> Result<CampaignResult> {
    let (row, col) = target;
    if row >= config.rows || col >= config.cols {
        return Err(Error::Input(format!(
            "campaign target ({row}, {col}) outside {}x{} array",
            config.rows, config.cols
        )));
    }
    if currents.is_empty() {
        return Err(Error::Input("campaign needs at least one injection current".into()));
    }
    for (k, a) in currents.iter().enumerate() {
        if currents[..k].contains(a) {
            return Err(Error::Input(format!("injection current {a} A repeated")));
        }
    }
    let samples = currents
        .par_iter()
        .map(|&i| {
            let fault = FaultEvent::new(row, col, i);
            let delta = backend.fault_response(config, weights, row_voltages, &[fault])?;
            Ok(CampaignSample {
                row,
                col,
                resistance: weights.resistance(row, col),
                injected: i,
                delta: delta[col],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignResult {
        samples,
        label: label.into(),
    })
}
