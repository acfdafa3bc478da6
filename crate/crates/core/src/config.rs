// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration in TOML.
//!
//! Every key is optional; an empty document is the default experiment.
//! Unknown keys are rejected and every error names the offending key path.
//!
//! ```toml
//! preset = "paper-linear"      # paper-linear | paper-weak-nonlinear | paper-team | custom
//! seed = 0
//! output_dir = "out"
//! backend = "ideal"            # ideal | mna
//!
//! [array]
//! rows = 256
//! cols = 128
//! read_voltage = 0.2           # V, applied to `driven_row` only
//! driven_row = 0
//! r_min_kohm = 5.0             # random grid bounds
//! r_max_kohm = 20.0
//! # weights_csv = "weights.csv"
//!
//! [crossbar]                   # optional overrides of the preset circuit
//! # shunt_ohm = 1468.0
//! # shunt_gamma = 0.0
//! # selector_on_ohm = 0.0
//! # wire_ohm = 1.0
//! # driver_ohm = 0.0
//!
//! [geometry]
//! pitch_um = 1.0
//!
//! [beam]
//! diameter = 3.0               # um, 1..=50
//! profile = "uniform-disk"     # uniform-disk | gaussian
//! step_um = 1.0
//!
//! [scan]
//! row0 = 0
//! col0 = 0
//! rows = 16
//! cols = 16
//! photocurrents_ua = [20.0]
//!
//! [campaign]
//! currents_ua = [10.0, 15.0, 20.0, 30.0, 40.0]
//! resistances_kohm = [5.0, 10.0, 12.0, 15.0, 20.0]
//!
//! [estimate]
//! target_kohm = 17.0
//! currents_ua = [15.0, 20.0]
//!
//! [team]
//! amplitude_ma = 1.2
//! duration_us = 100.0
//! shape = "sinusoid"           # sinusoid | triangular | rectangular
//! initial_r_ohm = 138.0
//! steps = 10000
//! # k_off = 6.537e-9
//!
//! [hysteresis]
//! amplitude_ma = 1.2
//! period_us = 100.0
//! cycles = 1
//!
//! [impact]
//! fraction = 0.05
//! probes = 16
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::Backend;
use crate::crossbar::{CrossbarConfig, WeightGrid};
use crate::device::{CurrentWaveform, TeamParams, TeamState, WaveformShape, DEFAULT_STEPS, PAPER_K_OFF};
use crate::error::{Error, Result};
use crate::laser::{BeamProfile, BeamSpec, GeometryConfig, ScanRegion, MAX_BEAM_DIAMETER_UM, MIN_BEAM_DIAMETER_UM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    PaperLinear,
    PaperWeakNonlinear,
    #[serde(alias = "paper-TEAM")]
    PaperTeam,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperLinear => "paper-linear",
            Preset::PaperWeakNonlinear => "paper-weak-nonlinear",
            Preset::PaperTeam => "paper-team",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-linear" => Ok(Preset::PaperLinear),
            "paper-weak-nonlinear" => Ok(Preset::PaperWeakNonlinear),
            "paper-team" | "paper-TEAM" => Ok(Preset::PaperTeam),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Config {
                path: "preset".into(),
                message: format!(
                    "unknown preset `{other}` (expected paper-linear, paper-weak-nonlinear, paper-team or custom)"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    pub read_voltage: f64,
    pub driven_row: usize,
    pub r_min_kohm: f64,
    pub r_max_kohm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_csv: Option<PathBuf>,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            rows: 256,
            cols: 128,
            read_voltage: 0.2,
            driven_row: 0,
            r_min_kohm: 5.0,
            r_max_kohm: 20.0,
            weights_csv: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossbarSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shunt_ohm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shunt_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selector_on_ohm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wire_ohm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver_ohm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub pitch_um: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { pitch_um: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    /// um.
    pub diameter: f64,
    pub profile: BeamProfile,
    pub step_um: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            diameter: 3.0,
            profile: BeamProfile::UniformDisk,
            step_um: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
    pub photocurrents_ua: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            row0: 0,
            col0: 0,
            rows: 16,
            cols: 16,
            photocurrents_ua: vec![20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub currents_ua: Vec<f64>,
    pub resistances_kohm: Vec<f64>,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            currents_ua: crate::reference::INJECTION_UA.to_vec(),
            resistances_kohm: crate::reference::RESISTANCE_KOHM.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    pub target_kohm: f64,
    pub currents_ua: Vec<f64>,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self {
            target_kohm: 17.0,
            currents_ua: vec![15.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeamSection {
    pub amplitude_ma: f64,
    pub duration_us: f64,
    pub shape: WaveformShape,
    pub initial_r_ohm: f64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_off: Option<f64>,
}

impl Default for TeamSection {
    fn default() -> Self {
        Self {
            amplitude_ma: 1.2,
            duration_us: 100.0,
            shape: WaveformShape::Sinusoid,
            initial_r_ohm: 138.0,
            steps: DEFAULT_STEPS,
            k_off: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HysteresisSection {
    pub amplitude_ma: f64,
    pub period_us: f64,
    pub cycles: u32,
}

impl Default for HysteresisSection {
    fn default() -> Self {
        Self {
            amplitude_ma: 1.2,
            period_us: 100.0,
            cycles: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactSection {
    /// Fraction of cells corrupted.
    pub fraction: f64,
    /// Random probe input vectors.
    pub probes: usize,
}

impl Default for ImpactSection {
    fn default() -> Self {
        Self {
            fraction: 0.05,
            probes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub backend: Backend,
    pub array: ArraySection,
    pub crossbar: CrossbarSection,
    pub geometry: GeometrySection,
    pub beam: BeamSection,
    pub scan: ScanSection,
    pub campaign: CampaignSection,
    pub estimate: EstimateSection,
    pub team: TeamSection,
    pub hysteresis: HysteresisSection,
    pub impact: ImpactSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::PaperLinear,
            seed: 0,
            output_dir: PathBuf::from("out"),
            backend: Backend::Ideal,
            array: ArraySection::default(),
            crossbar: CrossbarSection::default(),
            geometry: GeometrySection::default(),
            beam: BeamSection::default(),
            scan: ScanSection::default(),
            campaign: CampaignSection::default(),
            estimate: EstimateSection::default(),
            team: TeamSection::default(),
            hysteresis: HysteresisSection::default(),
            impact: ImpactSection::default(),
        }
    }
}

fn bad(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be >= 0, got {v}")))
    }
}

fn distinct_positive(path: &str, values: &[f64], min_len: usize) -> Result<()> {
    if values.len() < min_len {
        return Err(bad(path, format!("needs at least {min_len} value(s), got {}", values.len())));
    }
    for (k, &v) in values.iter().enumerate() {
        positive(&format!("{path}[{k}]"), v)?;
        if values[..k].contains(&v) {
            return Err(bad(&format!("{path}[{k}]"), format!("value {v} repeated")));
        }
    }
    Ok(())
}

/// Parse and validate a TOML experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| bad("<document>", e.message().to_string()))?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(if path == "." { "<document>" } else { &path }, e.inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.array;
        if a.rows == 0 || a.cols == 0 {
            return Err(bad("array", format!("dimensions must be >= 1, got {}x{}", a.rows, a.cols)));
        }
        if !a.read_voltage.is_finite() {
            return Err(bad("array.read_voltage", "must be finite"));
        }
        if a.driven_row >= a.rows {
            return Err(bad(
                "array.driven_row",
                format!("row {} outside 0..{}", a.driven_row, a.rows),
            ));
        }
        positive("array.r_min_kohm", a.r_min_kohm)?;
        positive("array.r_max_kohm", a.r_max_kohm)?;
        if a.r_min_kohm > a.r_max_kohm {
            return Err(bad("array.r_max_kohm", "must be >= array.r_min_kohm"));
        }

        let c = &self.crossbar;
        if let Some(v) = c.shunt_ohm {
            positive("crossbar.shunt_ohm", v)?;
        }
        for (path, v) in [
            ("crossbar.shunt_gamma", c.shunt_gamma),
            ("crossbar.selector_on_ohm", c.selector_on_ohm),
            ("crossbar.wire_ohm", c.wire_ohm),
            ("crossbar.driver_ohm", c.driver_ohm),
        ] {
            if let Some(v) = v {
                non_negative(path, v)?;
            }
        }

        positive("geometry.pitch_um", self.geometry.pitch_um)?;

        let b = &self.beam;
        if !(MIN_BEAM_DIAMETER_UM..=MAX_BEAM_DIAMETER_UM).contains(&b.diameter) {
            return Err(bad(
                "beam.diameter",
                format!("{} is outside the supported spot size range 1–50 μm", b.diameter),
            ));
        }
        positive("beam.step_um", b.step_um)?;
        if b.step_um >= 2.0 * b.diameter {
            return Err(bad(
                "beam.step_um",
                format!("step {} leaves coverage gaps; must be < 2 x diameter", b.step_um),
            ));
        }

        let s = &self.scan;
        if s.rows == 0 || s.cols == 0 {
            return Err(bad("scan", "region must contain at least one cell"));
        }
        if s.row0 + s.rows > a.rows || s.col0 + s.cols > a.cols {
            return Err(bad(
                "scan",
                format!(
                    "region rows {}..{} cols {}..{} exceeds the {}x{} array",
                    s.row0,
                    s.row0 + s.rows,
                    s.col0,
                    s.col0 + s.cols,
                    a.rows,
                    a.cols
                ),
            ));
        }
        distinct_positive("scan.photocurrents_ua", &s.photocurrents_ua, 1)?;

        distinct_positive("campaign.currents_ua", &self.campaign.currents_ua, 2)?;
        distinct_positive("campaign.resistances_kohm", &self.campaign.resistances_kohm, 2)?;

        positive("estimate.target_kohm", self.estimate.target_kohm)?;
        distinct_positive("estimate.currents_ua", &self.estimate.currents_ua, 2)?;

        let t = &self.team;
        non_negative("team.amplitude_ma", t.amplitude_ma)?;
        positive("team.duration_us", t.duration_us)?;
        if t.steps < 100 {
            return Err(bad("team.steps", format!("must be >= 100, got {}", t.steps)));
        }
        if let Some(k) = t.k_off {
            positive("team.k_off", k)?;
        }
        let params = self.team_params();
        if !(params.r_on..=params.r_off).contains(&t.initial_r_ohm) {
            return Err(bad(
                "team.initial_r_ohm",
                format!("must lie in [{}, {}] Ohm", params.r_on, params.r_off),
            ));
        }

        let h = &self.hysteresis;
        positive("hysteresis.amplitude_ma", h.amplitude_ma)?;
        positive("hysteresis.period_us", h.period_us)?;
        if h.cycles == 0 {
            return Err(bad("hysteresis.cycles", "must be >= 1"));
        }

        let i = &self.impact;
        if !(i.fraction.is_finite() && (0.0..=1.0).contains(&i.fraction)) {
            return Err(bad("impact.fraction", format!("must lie in [0, 1], got {}", i.fraction)));
        }
        if i.probes == 0 {
            return Err(bad("impact.probes", "must be >= 1"));
        }
        Ok(())
    }

    /// Circuit for the preset, with `[crossbar]` overrides applied.
    pub fn crossbar_config(&self) -> CrossbarConfig {
        let (rows, cols) = (self.array.rows, self.array.cols);
        let mut c = match self.preset {
            Preset::PaperWeakNonlinear => CrossbarConfig::paper_weak_nonlinear(rows, cols),
            _ => CrossbarConfig::paper_linear(rows, cols),
        };
        c.read_voltage = self.array.read_voltage;
        let o = &self.crossbar;
        if let Some(v) = o.shunt_ohm {
            c.shunt_resistance = v;
        }
        if let Some(v) = o.shunt_gamma {
            c.shunt_gamma = v;
        }
        if let Some(v) = o.selector_on_ohm {
            c.selector_on_resistance = v;
        }
        if let Some(v) = o.wire_ohm {
            c.wire_res_per_segment = v;
        }
        if let Some(v) = o.driver_ohm {
            c.driver_resistance = v;
        }
        c
    }

    /// Weight grid from `array.weights_csv`, or seeded random otherwise.
    pub fn weights(&self) -> Result<WeightGrid> {
        let w = match &self.array.weights_csv {
            Some(path) => crate::io::read_weights(path)?,
            None => WeightGrid::random(
                self.array.rows,
                self.array.cols,
                self.array.r_min_kohm * 1e3,
                self.array.r_max_kohm * 1e3,
                self.seed,
            )?,
        };
        if w.rows() != self.array.rows || w.cols() != self.array.cols {
            return Err(bad(
                "array.weights_csv",
                format!(
                    "grid is {}x{} but the array is {}x{}",
                    w.rows(),
                    w.cols(),
                    self.array.rows,
                    self.array.cols
                ),
            ));
        }
        Ok(w)
    }

    /// Single-row read pattern on `array.driven_row`.
    pub fn row_voltages(&self) -> Vec<f64> {
        self.crossbar_config().single_row_read(self.array.driven_row)
    }

    pub fn geometry(&self) -> GeometryConfig {
        GeometryConfig {
            cell_pitch: self.geometry.pitch_um,
        }
    }

    /// Beam template centred on the origin, carrying the first scan photocurrent.
    pub fn beam(&self) -> Result<BeamSpec> {
        BeamSpec::new(
            (0.0, 0.0),
            self.beam.diameter,
            self.scan.photocurrents_ua[0] * 1e-6,
            self.beam.profile,
        )
    }

    pub fn scan_region(&self) -> ScanRegion {
        ScanRegion {
            row0: self.scan.row0,
            col0: self.scan.col0,
            rows: self.scan.rows,
            cols: self.scan.cols,
        }
    }

    pub fn team_params(&self) -> TeamParams {
        TeamParams::paper_with_k_off(self.team.k_off.unwrap_or(PAPER_K_OFF))
    }

    pub fn team_initial_state(&self) -> Result<TeamState> {
        self.team_params().state_for_resistance(self.team.initial_r_ohm)
    }

    pub fn team_waveform(&self) -> Result<CurrentWaveform> {
        let duration = self.team.duration_us * 1e-6;
        CurrentWaveform::new(
            self.team.shape,
            self.team.amplitude_ma * 1e-3,
            duration,
            duration / self.team.steps as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!((c.array.rows, c.array.cols, c.seed), (256, 128, 0));
        assert_eq!(c.preset, Preset::PaperLinear);
    }

    #[test]
    fn beam_diameter_out_of_range() {
        let err = parse_config("[beam]\ndiameter = 60\n").unwrap_err().to_string();
        assert!(err.contains("beam.diameter"), "{err}");
        assert!(err.contains("1–50 μm"), "{err}");
    }

    #[test]
    fn unknown_keys_are_path_qualified() {
        let err = parse_config("[beam]\ndiameterr = 3\n").unwrap_err();
        let Error::Config { path, message } = err else { panic!() };
        assert!(path.starts_with("beam"), "{path}");
        assert!(message.contains("diameterr"), "{message}");
        assert!(parse_config("bogus = 1\n").is_err());
        let err = parse_config("[array]\nrows = \"x\"\n").unwrap_err().to_string();
        assert!(err.contains("array.rows"), "{err}");
    }

    #[test]
    fn round_trip() {
        let text = "preset = \"paper-weak-nonlinear\"\nseed = 9\nbackend = \"mna\"\n[array]\nrows = 8\ncols = 8\n[scan]\nrows = 4\ncols = 4\n[crossbar]\nwire_ohm = 0.5\n[team]\nk_off = 1e-9\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.crossbar_config().wire_res_per_segment, 0.5);
    }

    #[test]
    fn preset_names() {
        assert_eq!("paper-TEAM".parse::<Preset>().unwrap(), Preset::PaperTeam);
        assert_eq!(parse_config("preset = \"paper-TEAM\"").unwrap().preset, Preset::PaperTeam);
        assert!("nope".parse::<Preset>().is_err());
        assert!(parse_config("preset = \"nope\"").is_err());
    }
}
