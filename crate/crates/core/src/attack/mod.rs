// SPDX-License-Identifier: Apache-2.0

//! The adversary's side: fault campaigns, slope regression and calibration
//! (passive weight extraction), overlapping-scan unmixing, and state
//! corruption (active attack).
//!
//! The attacker sees column currents only. Row inputs stay fixed and hidden,
//! which is why every estimate here is built from differential reads.

mod campaign;
mod corrupt;
mod extract;
mod pipeline;
mod regression;

pub use campaign::{run_campaign, Backend, CampaignResult, CampaignSample};
pub use corrupt::{
    apply_corruption, corrupt_cell, inference_impact, ColumnDeviation, Corruption, ImpactStats,
};
pub use extract::{extract_region, simulate_scan, CellEstimate, Extraction, ScanMeasurement};
pub use pipeline::{
    probe_cell, reference_model, simulated_model, validation_cases, ValidationCase,
};
pub use regression::{
    calibrate, estimate_resistance, fit_injection_slope, fit_line, CalibrationModel, Estimate,
    RegressionFit,
};
