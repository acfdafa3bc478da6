// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use crate::attack::campaign::CampaignResult;
use crate::error::{Error, Result};

/// Ordinary least squares of `dI` on `I_inj`, with intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    /// dI per unit I_inj.
    pub slope: f64,
    /// A.
    pub intercept: f64,
    pub r_squared: f64,
    /// I_inj per unit dI; the quantity the calibration consumes.
    pub reciprocal_slope: f64,
    pub points: usize,
}

/// OLS with intercept over `(x, y)` pairs.
pub fn fit_line(points: &[(f64, f64)]) -> Result<RegressionFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateDesign("all abscissae identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
        reciprocal_slope: 1.0 / slope,
        points: points.len(),
    })
}

pub fn fit_injection_slope(campaign: &CampaignResult) -> Result<RegressionFit> {
    fit_line(&campaign.points())
}

/// Linear map from reciprocal slope to resistance: `R_est = a * s + b` (kOhm).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    /// kOhm per unit reciprocal slope.
    pub a: f64,
    /// kOhm.
    pub b: f64,
    pub r_squared: f64,
    /// Training rows: known resistance (kOhm) and its slope fit.
    pub training: Vec<(f64, RegressionFit)>,
}

impl CalibrationModel {
    /// Model with fixed coefficients and no training record.
    pub fn from_coefficients(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            r_squared: f64::NAN,
            training: Vec::new(),
        }
    }

    pub fn estimate_kohm(&self, reciprocal_slope: f64) -> f64 {
        self.a * reciprocal_slope + self.b
    }

    /// Human-readable calibration report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# slope -> resistance calibration: R_est[kOhm] = a * (1/slope) + b");
        let _ = writeln!(s, "a_kohm = {:.6}", self.a);
        let _ = writeln!(s, "b_kohm = {:.6}", self.b);
        let _ = writeln!(s, "r_squared = {:.10}", self.r_squared);
        let _ = writeln!(s, "training_rows = {}", self.training.len());
        let _ = writeln!(
            s,
            "\n{:>10} {:>12} {:>14} {:>14} {:>14} {:>12}",
            "r_kohm", "slope", "intercept_ua", "recip_slope", "r_squared", "r_fit_kohm"
        );
        for (r, fit) in &self.training {
            let _ = writeln!(
                s,
                "{:>10.3} {:>12.6} {:>14.6} {:>14.6} {:>14.10} {:>12.4}",
                r,
                fit.slope,
                fit.intercept * 1e6,
                fit.reciprocal_slope,
                fit.r_squared,
                self.estimate_kohm(fit.reciprocal_slope)
            );
        }
        s
    }
}

/// OLS of known resistance (kOhm) on reciprocal slope.
pub fn calibrate(training: &[(f64, RegressionFit)]) -> Result<CalibrationModel> {
    let mut distinct: Vec<f64> = training.iter().map(|t| t.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDesign(
            "calibration needs at least two distinct training resistances".into(),
        ));
    }
    if let Some((r, _)) = training.iter().find(|(_, f)| !f.reciprocal_slope.is_finite()) {
        return Err(Error::DegenerateDesign(format!(
            "training row at {r} kOhm has zero slope"
        )));
    }
    let pts: Vec<(f64, f64)> = training
        .iter()
        .map(|(r, f)| (f.reciprocal_slope, *r))
        .collect();
    let line = fit_line(&pts)?;
    if line.slope.is_nan() || line.slope <= 0.0 {
        return Err(Error::DegenerateDesign(format!(
            "calibration gain must be positive, got {}",
            line.slope
        )));
    }
    Ok(CalibrationModel {
        a: line.slope,
        b: line.intercept,
        r_squared: line.r_squared,
        training: training.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub r_est_kohm: f64,
    /// `100 * |R_est - R| / R` when the truth is known.
    pub error_pct: Option<f64>,
}

impl Estimate {
    /// `100 - error_pct`.
    pub fn accuracy_pct(&self) -> Option<f64> {
        self.error_pct.map(|e| 100.0 - e)
    }
}

pub fn estimate_resistance(model: &CalibrationModel, fit: &RegressionFit, truth_kohm: Option<f64>) -> Estimate {
    let r_est_kohm = model.estimate_kohm(fit.reciprocal_slope);
    Estimate {
        r_est_kohm,
        error_pct: truth_kohm.map(|t| 100.0 * (r_est_kohm - t).abs() / t),
    }
}
