// SPDX-License-Identifier: Apache-2.0

//! 1T1R crossbar model and the analytic column-current solver.
//!
//! Columns are sensed by ideal virtual grounds, so column `j` carries
//! `sum_i V_i * G_ij`. A photocurrent injected on the row side of cell
//! `(i, j)` splits between the cell path to the column and the row-side
//! return path `R_sh(I) = r_sh0 * (1 + gamma * I)`; only the share that
//! crosses the cell reaches the sense amplifier:
//!
//! ```text
//! dI_j = I_inj * R_sh / (R_sh + R_ij)
//! ```
//!
//! The full nodal network in [`crate::mna`] is the independent check on
//! both the baseline and the divider.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default read voltage applied to the driven row.
pub const DEFAULT_READ_VOLTAGE: f64 = 0.2;

/// Row-side return-path resistance that reproduces the reference
/// fault-current table with a linear divider.
pub const PAPER_LINEAR_SHUNT_OHM: f64 = 1468.0;

/// Weak shunt nonlinearity (per ampere) emulating the transistor's mild
/// superlinearity; 4e-4 per uA.
pub const WEAK_NONLINEAR_GAMMA: f64 = 400.0;

/// Shunt resistance refit against the reference table with
/// [`WEAK_NONLINEAR_GAMMA`] held fixed. See [`crate::reference::fit_shunt_resistance`].
pub const WEAK_NONLINEAR_SHUNT_OHM: f64 = 1467.10;

/// Electrical parameters of the array and of the fault-injection path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Volts applied to the driven row in the single-row read scheme.
    pub read_voltage: f64,
    /// `r_sh0`, ohms.
    pub shunt_resistance: f64,
    /// `gamma`, per ampere.
    pub shunt_gamma: f64,
    /// Selector on-resistance, added in series with every cell.
    pub selector_on_resistance: f64,
    /// Wire resistance per cell segment, used only by the nodal solver.
    pub wire_res_per_segment: f64,
    /// Row driver source impedance, used only by the nodal solver.
    pub driver_resistance: f64,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self::paper_linear(256, 128)
    }
}

impl CrossbarConfig {
    pub fn paper_linear(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            read_voltage: DEFAULT_READ_VOLTAGE,
            shunt_resistance: PAPER_LINEAR_SHUNT_OHM,
            shunt_gamma: 0.0,
            selector_on_resistance: 0.0,
            wire_res_per_segment: 1.0,
            driver_resistance: 0.0,
        }
    }

    pub fn paper_weak_nonlinear(rows: usize, cols: usize) -> Self {
        Self {
            shunt_resistance: WEAK_NONLINEAR_SHUNT_OHM,
            shunt_gamma: WEAK_NONLINEAR_GAMMA,
            ..Self::paper_linear(rows, cols)
        }
    }

    /// Same network with all interconnect parasitics removed.
    pub fn without_parasitics(&self) -> Self {
        Self {
            wire_res_per_segment: 0.0,
            driver_resistance: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Input(format!(
                "array must have at least one row and column, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.shunt_resistance.is_finite() && self.shunt_resistance > 0.0) {
            return Err(Error::Domain(format!(
                "shunt resistance must be positive, got {}",
                self.shunt_resistance
            )));
        }
        for (name, v) in [
            ("selector on-resistance", self.selector_on_resistance),
            ("wire resistance", self.wire_res_per_segment),
            ("driver resistance", self.driver_resistance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.shunt_gamma.is_finite() && self.shunt_gamma >= 0.0) {
            return Err(Error::Domain(format!(
                "shunt nonlinearity must be >= 0, got {}",
                self.shunt_gamma
            )));
        }
        if !self.read_voltage.is_finite() {
            return Err(Error::Domain("read voltage must be finite".into()));
        }
        Ok(())
    }

    /// Return-path resistance seen by an injection of `current` amperes.
    pub fn shunt_at(&self, current: f64) -> f64 {
        self.shunt_resistance * (1.0 + self.shunt_gamma * current)
    }

    /// Fraction of an injected current that reaches the column through a
    /// cell of resistance `r_cell`.
    pub fn divider_ratio(&self, r_cell: f64, current: f64) -> f64 {
        let r_sh = self.shunt_at(current);
        r_sh / (r_sh + r_cell + self.selector_on_resistance)
    }

    /// Row voltages for the single-row read: `driven` at the read voltage,
    /// every other row grounded.
    pub fn single_row_read(&self, driven: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.rows];
        if let Some(slot) = v.get_mut(driven) {
            *slot = self.read_voltage;
        }
        v
    }
}

/// Per-cell resistance state of the array, row-major, in ohms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    rows: usize,
    cols: usize,
    resistance: Vec<f64>,
}

impl WeightGrid {
    pub fn new(rows: usize, cols: usize, resistance: Vec<f64>) -> Result<Self> {
        if resistance.len() != rows * cols {
            return Err(Error::Dimension {
                what: "weight grid",
                expected: rows * cols,
                got: resistance.len(),
            });
        }
        if let Some((k, r)) = resistance
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::Domain(format!(
                "cell ({}, {}) has nonpositive resistance {r}",
                k / cols,
                k % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            resistance,
        })
    }

    pub fn uniform(rows: usize, cols: usize, r: f64) -> Result<Self> {
        Self::new(rows, cols, vec![r; rows * cols])
    }

    /// Uniformly distributed resistances in `[r_min, r_max]`, reproducible from `seed`.
    pub fn random(rows: usize, cols: usize, r_min: f64, r_max: f64, seed: u64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min) {
            return Err(Error::Domain(format!(
                "resistance bounds must satisfy 0 < min <= max, got [{r_min}, {r_max}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..rows * cols)
            .map(|_| {
                if r_max > r_min {
                    rng.random_range(r_min..=r_max)
                } else {
                    r_min
                }
            })
            .collect();
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn resistance(&self, row: usize, col: usize) -> f64 {
        self.resistance[row * self.cols + col]
    }

    pub fn conductance(&self, row: usize, col: usize) -> f64 {
        1.0 / self.resistance(row, col)
    }

    pub fn set_resistance(&mut self, row: usize, col: usize, r: f64) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::Input(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Domain(format!("nonpositive resistance {r}")));
        }
        self.resistance[row * self.cols + col] = r;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.resistance
    }

    /// Fails if any cell lies outside `[r_min, r_max]`.
    pub fn check_bounds(&self, r_min: f64, r_max: f64) -> Result<()> {
        match self
            .resistance
            .iter()
            .position(|r| *r < r_min || *r > r_max)
        {
            Some(k) => Err(Error::Domain(format!(
                "cell ({}, {}) resistance {} outside [{r_min}, {r_max}]",
                k / self.cols,
                k % self.cols,
                self.resistance[k]
            ))),
            None => Ok(()),
        }
    }

    fn check_matches(&self, config: &CrossbarConfig) -> Result<()> {
        if self.rows != config.rows {
            return Err(Error::Dimension {
                what: "weight grid rows",
                expected: config.rows,
                got: self.rows,
            });
        }
        if self.cols != config.cols {
            return Err(Error::Dimension {
                what: "weight grid cols",
                expected: config.cols,
                got: self.cols,
            });
        }
        Ok(())
    }
}

/// A photocurrent injected on the row side of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultEvent {
    pub row: usize,
    pub col: usize,
    /// Amperes, positive into the injection node.
    pub current: f64,
}

impl FaultEvent {
    pub fn new(row: usize, col: usize, current: f64) -> Self {
        Self { row, col, current }
    }

    pub(crate) fn validate(&self, config: &CrossbarConfig) -> Result<()> {
        if self.row >= config.rows || self.col >= config.cols {
            return Err(Error::Input(format!(
                "fault target ({}, {}) outside {}x{} array",
                self.row, self.col, config.rows, config.cols
            )));
        }
        if !(self.current.is_finite() && self.current >= 0.0) {
            return Err(Error::Input(format!(
                "injected current must be >= 0, got {}",
                self.current
            )));
        }
        Ok(())
    }
}

/// Observed column output currents, one per column, in amperes.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReadout {
    pub currents: Vec<f64>,
    pub label: String,
}

impl ColumnReadout {
    pub fn new(currents: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            currents,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currents.is_empty()
    }
}

fn check_inputs(config: &CrossbarConfig, weights: &WeightGrid, row_voltages: &[f64]) -> Result<()> {
    config.validate()?;
    weights.check_matches(config)?;
    if row_voltages.len() != config.rows {
        return Err(Error::Dimension {
            what: "row voltages",
            expected: config.rows,
            got: row_voltages.len(),
        });
    }
    if row_voltages.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("row voltages must be finite".into()));
    }
    Ok(())
}

/// Fault-free column currents with virtual-ground sensing.
pub fn ideal_column_currents(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
) -> Result<ColumnReadout> {
    check_inputs(config, weights, row_voltages)?;
    let mut currents = vec![0.0; config.cols];
    for (i, &v) in row_voltages.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (j, out) in currents.iter_mut().enumerate() {
            *out += v / (weights.resistance(i, j) + config.selector_on_resistance);
        }
    }
    Ok(ColumnReadout::new(currents, "baseline"))
}

/// Per-column current change caused by `faults` alone.
///
/// Faults superpose; each one only moves its own column.
pub fn fault_delta(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    faults: &[FaultEvent],
) -> Result<Vec<f64>> {
    config.validate()?;
    weights.check_matches(config)?;
    let mut delta = vec![0.0; config.cols];
    for f in faults {
        f.validate(config)?;
        delta[f.col] += f.current * config.divider_ratio(weights.resistance(f.row, f.col), f.current);
    }
    Ok(delta)
}

/// Column currents with `faults` applied on top of the read.
pub fn faulted_column_currents(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    faults: &[FaultEvent],
) -> Result<ColumnReadout> {
    let mut readout = ideal_column_currents(config, weights, row_voltages)?;
    let delta = fault_delta(config, weights, faults)?;
    for (out, d) in readout.currents.iter_mut().zip(delta) {
        *out += d;
    }
    readout.label = "faulted".into();
    Ok(readout)
}

/// Elementwise `faulted - baseline`.
pub fn delta_current(baseline: &ColumnReadout, faulted: &ColumnReadout) -> Result<Vec<f64>> {
    if baseline.len() != faulted.len() {
        return Err(Error::Dimension {
            what: "readout",
            expected: baseline.len(),
            got: faulted.len(),
        });
    }
    Ok(faulted
        .currents
        .iter()
        .zip(&baseline.currents)
        .map(|(f, b)| f - b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relclose(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn zero_input_gives_zero_current() {
        let cfg = CrossbarConfig::paper_linear(8, 4);
        let w = WeightGrid::random(8, 4, 5e3, 20e3, 3).unwrap();
        let out = ideal_column_currents(&cfg, &w, &[0.0; 8]).unwrap();
        assert!(out.currents.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_cell_ohms_law() {
        let cfg = CrossbarConfig::paper_linear(1, 1);
        let w = WeightGrid::uniform(1, 1, 10e3).unwrap();
        let out = ideal_column_currents(&cfg, &w, &[0.2]).unwrap();
        assert!(relclose(out.currents[0], 20e-6, 1e-15));
    }

    #[test]
    fn dimension_and_domain_errors() {
        let cfg = CrossbarConfig::paper_linear(2, 2);
        let w = WeightGrid::uniform(2, 2, 1e4).unwrap();
        assert!(matches!(
            ideal_column_currents(&cfg, &w, &[0.1]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            WeightGrid::new(1, 2, vec![1e4, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            WeightGrid::new(1, 2, vec![1e4, -3.0]),
            Err(Error::Domain(_))
        ));
        let other = WeightGrid::uniform(3, 2, 1e4).unwrap();
        assert!(ideal_column_currents(&cfg, &other, &[0.0; 2]).is_err());
    }

    #[test]
    fn zero_injection_is_no_fault() {
        let cfg = CrossbarConfig::paper_linear(4, 4);
        let w = WeightGrid::random(4, 4, 5e3, 20e3, 1).unwrap();
        let d = fault_delta(&cfg, &w, &[FaultEvent::new(2, 1, 0.0)]).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn negative_or_out_of_bounds_fault_rejected() {
        let cfg = CrossbarConfig::paper_linear(4, 4);
        let w = WeightGrid::uniform(4, 4, 1e4).unwrap();
        assert!(fault_delta(&cfg, &w, &[FaultEvent::new(0, 0, -1e-6)]).is_err());
        assert!(fault_delta(&cfg, &w, &[FaultEvent::new(4, 0, 1e-6)]).is_err());
    }

    #[test]
    fn divider_reproduces_reference_point() {
        // 10 kOhm, 20 uA: reference 2.58 uA.
        let cfg = CrossbarConfig::paper_linear(1, 1);
        let w = WeightGrid::uniform(1, 1, 10e3).unwrap();
        let d = fault_delta(&cfg, &w, &[FaultEvent::new(0, 0, 20e-6)]).unwrap()[0];
        assert!(relclose(d, 20e-6 * 1468.0 / 11468.0, 1e-15));
        assert!((d - 2.58e-6).abs() / 2.58e-6 < 0.02);

        let w5 = WeightGrid::uniform(1, 1, 5e3).unwrap();
        let d5 = fault_delta(&cfg, &w5, &[FaultEvent::new(0, 0, 10e-6)]).unwrap()[0];
        assert!((d5 - 2.29e-6).abs() / 2.29e-6 < 0.02);
    }

    #[test]
    fn delta_only_in_target_column() {
        let cfg = CrossbarConfig::paper_linear(4, 5);
        let w = WeightGrid::random(4, 5, 5e3, 20e3, 9).unwrap();
        let v = cfg.single_row_read(0);
        let base = ideal_column_currents(&cfg, &w, &v).unwrap();
        let faulted =
            faulted_column_currents(&cfg, &w, &v, &[FaultEvent::new(3, 2, 15e-6)]).unwrap();
        let d = delta_current(&base, &faulted).unwrap();
        for (j, x) in d.iter().enumerate() {
            if j == 2 {
                assert!(*x > 0.0);
            } else {
                assert_eq!(*x, 0.0);
            }
        }
    }

    #[test]
    fn delta_of_identical_readouts_is_zero() {
        let r = ColumnReadout::new(vec![1e-6, 2e-6, -3e-6], "x");
        assert!(delta_current(&r, &r).unwrap().iter().all(|&d| d == 0.0));
        let short = ColumnReadout::new(vec![0.0], "y");
        assert!(delta_current(&r, &short).is_err());
    }

    #[test]
    fn random_grid_is_seeded_and_bounded() {
        let a = WeightGrid::random(16, 16, 5e3, 20e3, 42).unwrap();
        let b = WeightGrid::random(16, 16, 5e3, 20e3, 42).unwrap();
        let c = WeightGrid::random(16, 16, 5e3, 20e3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.check_bounds(5e3, 20e3).unwrap();
        assert!(a.check_bounds(6e3, 20e3).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = CrossbarConfig::paper_linear(2, 2);
        cfg.shunt_resistance = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = CrossbarConfig::paper_linear(0, 2);
        assert!(cfg.validate().is_err());
        cfg.rows = 2;
        cfg.wire_res_per_segment = -1.0;
        assert!(cfg.validate().is_err());
    }
}
