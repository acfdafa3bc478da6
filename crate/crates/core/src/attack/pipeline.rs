// SPDX-License-Identifier: Apache-2.0

//! End-to-end attacker procedures built from the campaign, regression and
//! calibration steps.

use crate::attack::campaign::{run_campaign, Backend, CampaignResult};
use crate::attack::regression::{
    calibrate, estimate_resistance, fit_injection_slope, fit_line, CalibrationModel, Estimate, RegressionFit,
};
use crate::config::Preset;
use crate::crossbar::{CrossbarConfig, WeightGrid};
use crate::error::Result;
use crate::reference;

/// Calibration trained on the reference fault-current table.
pub fn reference_model() -> Result<CalibrationModel> {
    let training = reference::RESISTANCE_KOHM
        .iter()
        .enumerate()
        .map(|(k, &r)| Ok((r, fit_line(&reference::series_for(k))?)))
        .collect::<Result<Vec<_>>>()?;
    calibrate(&training)
}

/// Program `target` to `r_ohm`, inject each current, and fit the response.
pub fn probe_cell(
    backend: Backend,
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    target: (usize, usize),
    r_ohm: f64,
    currents: &[f64],
) -> Result<(CampaignResult, RegressionFit)> {
    let mut w = weights.clone();
    w.set_resistance(target.0, target.1, r_ohm)?;
    let campaign = run_campaign(
        backend,
        config,
        &w,
        row_voltages,
        target,
        currents,
        format!("R={r_ohm} ohm"),
    )?;
    let fit = fit_injection_slope(&campaign)?;
    Ok((campaign, fit))
}

/// Calibration trained on simulated campaigns over known resistances.
pub fn simulated_model(
    backend: Backend,
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    target: (usize, usize),
    resistances_kohm: &[f64],
    currents: &[f64],
) -> Result<(CalibrationModel, CampaignResult)> {
    let mut all = CampaignResult {
        samples: Vec::new(),
        label: "training".into(),
    };
    let mut training = Vec::with_capacity(resistances_kohm.len());
    for &r in resistances_kohm {
        let (campaign, fit) = probe_cell(backend, config, weights, row_voltages, target, r * 1e3, currents)?;
        all.extend(campaign);
        training.push((r, fit));
    }
    Ok((calibrate(&training)?, all))
}

/// A reference estimation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCase {
    pub name: &'static str,
    pub preset: Preset,
    pub r_true_kohm: f64,
    pub currents_ua: Vec<f64>,
    pub reference_estimate_kohm: Option<f64>,
    pub reference_error_pct: Option<f64>,
}

impl ValidationCase {
    pub fn crossbar(&self) -> CrossbarConfig {
        match self.preset {
            Preset::PaperWeakNonlinear => CrossbarConfig::paper_weak_nonlinear(1, 1),
            _ => CrossbarConfig::paper_linear(1, 1),
        }
    }

    /// Estimate the case's cell with `model` on a single-cell array.
    pub fn run(&self, backend: Backend, model: &CalibrationModel) -> Result<Estimate> {
        let config = self.crossbar();
        let weights = WeightGrid::uniform(1, 1, self.r_true_kohm * 1e3)?;
        let currents: Vec<f64> = self.currents_ua.iter().map(|i| i * 1e-6).collect();
        let (_, fit) = probe_cell(
            backend,
            &config,
            &weights,
            &config.single_row_read(0),
            (0, 0),
            self.r_true_kohm * 1e3,
            &currents,
        )?;
        Ok(estimate_resistance(model, &fit, Some(self.r_true_kohm)))
    }
}

pub fn validation_cases() -> Vec<ValidationCase> {
    vec![
        ValidationCase {
            name: "two-point",
            preset: Preset::PaperLinear,
            r_true_kohm: 17.0,
            currents_ua: vec![15.0, 20.0],
            reference_estimate_kohm: Some(17.4),
            reference_error_pct: Some(2.35),
        },
        ValidationCase {
            name: "two-point-nonlinear",
            preset: Preset::PaperWeakNonlinear,
            r_true_kohm: 17.0,
            currents_ua: vec![15.0, 20.0],
            reference_estimate_kohm: None,
            reference_error_pct: None,
        },
        ValidationCase {
            name: "four-point-nonlinear",
            preset: Preset::PaperWeakNonlinear,
            r_true_kohm: 17.0,
            currents_ua: vec![15.0, 20.0, 30.0, 40.0],
            reference_estimate_kohm: Some(16.94),
            reference_error_pct: Some(0.35),
        },
        ValidationCase {
            name: "in-range-nonlinear",
            preset: Preset::PaperWeakNonlinear,
            r_true_kohm: 10.0,
            currents_ua: vec![12.0, 15.0, 20.0, 30.0, 40.0],
            reference_estimate_kohm: None,
            reference_error_pct: Some(0.3),
        },
        ValidationCase {
            name: "out-of-range-nonlinear",
            preset: Preset::PaperWeakNonlinear,
            r_true_kohm: 10.0,
            currents_ua: vec![50.0, 60.0, 70.0, 80.0, 90.0, 100.0],
            reference_estimate_kohm: None,
            reference_error_pct: Some(5.75),
        },
    ]
}
