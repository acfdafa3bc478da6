// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `xbar-lfi`.
//!
//! Every subcommand resolves an [`ExperimentConfig`], runs to completion in
//! memory and only then writes its artifacts into the output directory, each
//! file atomically. Reruns with the same config and seed produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xbar_lfi::attack::{
    apply_corruption, corrupt_cell, extract_region, inference_impact, probe_cell, reference_model, simulate_scan,
    simulated_model, validation_cases, Backend, CalibrationModel, CampaignResult,
};
use xbar_lfi::config::{load_config, parse_config, ExperimentConfig, Preset};
use xbar_lfi::crossbar::{ideal_column_currents, CrossbarConfig, WeightGrid};
use xbar_lfi::device::{CurrentWaveform, WaveformShape};
use xbar_lfi::io;
use xbar_lfi::laser::plan_scan;
use xbar_lfi::reference::{DELTA_UA, INJECTION_UA, RESISTANCE_KOHM};

#[derive(Debug, Parser)]
#[command(name = "xbar-lfi", version, about = "Laser fault injection on memristive crossbars")]
pub struct Cli {
    /// TOML experiment config; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// paper-linear | paper-weak-nonlinear | paper-team | custom
    #[arg(long, global = true, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate the fault-current table and compare it with the reference values.
    Table1,
    /// Fit the slope-to-resistance calibration.
    Calibrate,
    /// Run the single-cell estimation cases.
    Estimate,
    /// Overlapping-beam scan of a region followed by per-cell recovery.
    ScanExtract,
    /// I-V trace of the TEAM device under a sinusoidal sweep.
    Hysteresis,
    /// Resistance drift of one cell under the corrupting fault.
    Corrupt,
    /// Inference deviation after corrupting a fraction of the array.
    Impact,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Calibrate => "calibrate",
            Command::Estimate => "estimate",
            Command::ScanExtract => "scan-extract",
            Command::Hysteresis => "hysteresis",
            Command::Corrupt => "corrupt",
            Command::Impact => "impact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Ideal,
    Mna,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Ideal => Backend::Ideal,
            BackendArg::Mna => Backend::Mna,
        }
    }
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: xbar_lfi::Error| e.to_string())
}

/// What a finished run left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Config file (or defaults) with command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => parse_config("")?,
    };
    if let Some(p) = cli.preset {
        cfg.preset = p;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(b) = cli.backend {
        cfg.backend = b.into();
    }
    // Relative weight paths are taken from the config file's directory.
    if let (Some(w), Some(cfg_path)) = (&cfg.array.weights_csv, &cli.config) {
        if w.is_relative() {
            let base = cfg_path.parent().unwrap_or(Path::new("."));
            cfg.array.weights_csv = Some(base.join(w));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    run_command(cli.command, &cfg)
}

/// Run `command` and write its artifacts into `cfg.output_dir`.
pub fn run_command(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Artifacts::default();
    out.text("config.toml", cfg.to_toml()?);
    let summary = match command {
        Command::Table1 => table1(cfg, &mut out)?,
        Command::Calibrate => calibrate(cfg, &mut out)?,
        Command::Estimate => estimate(cfg, &mut out)?,
        Command::ScanExtract => scan_extract(cfg, &mut out)?,
        Command::Hysteresis => hysteresis(cfg, &mut out)?,
        Command::Corrupt => corrupt(cfg, &mut out)?,
        Command::Impact => impact(cfg, &mut out)?,
    };
    out.text(&format!("{}_report.txt", command.name()), summary.clone());
    let files = out.write(&cfg.output_dir)?;
    Ok(Outcome {
        out_dir: cfg.output_dir.clone(),
        files,
        summary,
    })
}

#[derive(Default)]
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn bytes(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn text(&mut self, name: &str, text: String) {
        self.bytes(name, text.into_bytes());
    }

    fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            io::write_atomic(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn ua(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v * 1e-6).collect()
}

fn header(s: &mut String, title: &str, cfg: &ExperimentConfig) {
    let _ = writeln!(s, "# {title}");
    let _ = writeln!(
        s,
        "preset = {}\nbackend = {:?}\nseed = {}\narray = {}x{}",
        cfg.preset.name(),
        cfg.backend,
        cfg.seed,
        cfg.array.rows,
        cfg.array.cols
    );
}

/// Cell probed by the single-cell campaigns: column 0 of the driven row.
fn probe_target(cfg: &ExperimentConfig) -> (usize, usize) {
    (cfg.array.driven_row, 0)
}

fn table1(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let config = cfg.crossbar_config();
    let weights = cfg.weights()?;
    let v = cfg.row_voltages();
    let currents = ua(&cfg.campaign.currents_ua);
    let mut all = CampaignResult {
        samples: Vec::new(),
        label: "table1".into(),
    };
    for &r in &cfg.campaign.resistances_kohm {
        let (c, _) = probe_cell(cfg.backend, &config, &weights, &v, probe_target(cfg), r * 1e3, &currents)?;
        all.extend(c);
    }
    out.bytes("table1.csv", io::to_csv_bytes(&io::campaign_records(&all))?);

    let mut s = String::new();
    header(&mut s, "fault-current table", cfg);
    let _ = writeln!(s, "shunt_ohm = {}\nshunt_gamma = {}", config.shunt_resistance, config.shunt_gamma);
    let reference = cfg.campaign.currents_ua == INJECTION_UA && cfg.campaign.resistances_kohm == RESISTANCE_KOHM;
    let _ = writeln!(
        s,
        "\n{:>8} {:>8} {:>12} {:>12} {:>9}",
        "i_ua", "r_kohm", "sim_ua", "table_ua", "err_pct"
    );
    let n_i = currents.len();
    let mut errs = Vec::new();
    for (k, sample) in all.samples.iter().enumerate() {
        let (b, a) = (k / n_i, k % n_i);
        let sim = sample.delta * 1e6;
        let (table, err) = if reference {
            let t = DELTA_UA[a][b];
            let e = 100.0 * (sim - t).abs() / t;
            errs.push(e);
            (format!("{t:.2}"), format!("{e:.3}"))
        } else {
            ("-".into(), "-".into())
        };
        let _ = writeln!(
            s,
            "{:>8.1} {:>8.1} {:>12.5} {:>12} {:>9}",
            sample.injected * 1e6,
            sample.resistance / 1e3,
            sim,
            table,
            err
        );
    }
    if reference {
        let max = errs.iter().copied().fold(0.0, f64::max);
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let _ = writeln!(s, "\nmax_rel_err_pct = {max:.4}\nmean_rel_err_pct = {mean:.4}");
    } else {
        let _ = writeln!(s, "\n(campaign grid differs from the reference table; no comparison)");
    }
    Ok(s)
}

fn calibrate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let reference = reference_model()?;
    let config = cfg.crossbar_config();
    let weights = cfg.weights()?;
    let (simulated, campaign) = simulated_model(
        cfg.backend,
        &config,
        &weights,
        &cfg.row_voltages(),
        probe_target(cfg),
        &cfg.campaign.resistances_kohm,
        &ua(&cfg.campaign.currents_ua),
    )?;
    out.bytes("calibration_campaign.csv", io::to_csv_bytes(&io::campaign_records(&campaign))?);

    let mut s = String::new();
    header(&mut s, "calibration", cfg);
    let _ = writeln!(s, "\n## trained on the reference fault-current table\n");
    s.push_str(&reference.report());
    let _ = writeln!(s, "\n## trained on simulated campaigns ({})\n", cfg.preset.name());
    s.push_str(&simulated.report());
    Ok(s)
}

fn estimate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let model = reference_model()?;
    let mut s = String::new();
    header(&mut s, "resistance estimation", cfg);
    let _ = writeln!(
        s,
        "\n{:<24} {:<22} {:>8} {:>10} {:>9} {:>10} {:>9}",
        "case", "preset", "r_kohm", "est_kohm", "err_pct", "ref_kohm", "ref_pct"
    );
    let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
    for case in validation_cases() {
        let e = case.run(cfg.backend, &model)?;
        let _ = writeln!(
            s,
            "{:<24} {:<22} {:>8.2} {:>10.4} {:>9} {:>10} {:>9}",
            case.name,
            case.preset.name(),
            case.r_true_kohm,
            e.r_est_kohm,
            opt(e.error_pct, 3),
            opt(case.reference_estimate_kohm, 2),
            opt(case.reference_error_pct, 2)
        );
    }

    let config = cfg.crossbar_config();
    let weights = cfg.weights()?;
    let truth = cfg.estimate.target_kohm;
    let (campaign, fit) = probe_cell(
        cfg.backend,
        &config,
        &weights,
        &cfg.row_voltages(),
        probe_target(cfg),
        truth * 1e3,
        &ua(&cfg.estimate.currents_ua),
    )?;
    let e = xbar_lfi::attack::estimate_resistance(&model, &fit, Some(truth));
    out.bytes("estimate_campaign.csv", io::to_csv_bytes(&io::campaign_records(&campaign))?);
    let _ = writeln!(
        s,
        "{:<24} {:<22} {:>8.2} {:>10.4} {:>9} {:>10} {:>9}",
        "configured",
        cfg.preset.name(),
        truth,
        e.r_est_kohm,
        opt(e.error_pct, 3),
        "-",
        "-"
    );
    Ok(s)
}

/// Calibration fitted on simulated campaigns at the region's first cell,
/// with the configured backend and array.
fn self_calibrated(cfg: &ExperimentConfig, config: &CrossbarConfig, weights: &WeightGrid) -> Result<CalibrationModel> {
    let region = cfg.scan_region();
    Ok(simulated_model(
        cfg.backend,
        config,
        weights,
        &cfg.row_voltages(),
        (region.row0, region.col0),
        &cfg.campaign.resistances_kohm,
        &ua(&cfg.campaign.currents_ua),
    )?
    .0)
}

fn scan_extract(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let config = cfg.crossbar_config();
    let weights = cfg.weights()?;
    let geometry = cfg.geometry();
    let beam = cfg.beam()?;
    let region = cfg.scan_region();
    let plan = plan_scan(&geometry, &beam, cfg.beam.step_um, region)?;
    let scans = simulate_scan(
        cfg.backend,
        &config,
        &weights,
        &cfg.row_voltages(),
        &geometry,
        &beam,
        &plan,
        &ua(&cfg.scan.photocurrents_ua),
    )?;
    let model = self_calibrated(cfg, &config, &weights)?;
    let ex = extract_region(&scans, &model, region, Some(&weights))?;
    out.bytes("weights.csv", io::to_csv_bytes(&io::weight_records(&weights))?);
    out.bytes("scan_plan.csv", io::to_csv_bytes(&io::scan_plan_records(&plan))?);
    out.bytes("extraction.csv", io::to_csv_bytes(&io::extraction_records(&ex))?);

    let mut s = String::new();
    header(&mut s, "scan extraction", cfg);
    let _ = writeln!(
        s,
        "region = rows {}..{}, cols {}..{}",
        region.row0,
        region.row0 + region.rows,
        region.col0,
        region.col0 + region.cols
    );
    let _ = writeln!(
        s,
        "beam = {} um {:?}, step {} um, {} positions, axis coverage {}",
        beam.diameter,
        beam.profile,
        plan.step,
        plan.positions.len(),
        plan.min_axis_coverage
    );
    let _ = writeln!(s, "photocurrents_ua = {:?}", cfg.scan.photocurrents_ua);
    let _ = writeln!(s, "calibration a_kohm = {:.6}, b_kohm = {:.6}", model.a, model.b);
    let worst = ex
        .cells
        .iter()
        .filter_map(|c| c.err_pct)
        .fold(0.0, f64::max);
    let worst_res = ex.column_residuals.iter().map(|c| c.1).fold(0.0, f64::max);
    let _ = writeln!(s, "cells = {}", ex.cells.len());
    if let Some(rms) = ex.rms_rel_error() {
        let _ = writeln!(s, "rms_rel_err_pct = {:.6}", rms * 100.0);
    }
    let _ = writeln!(s, "max_abs_err_pct = {worst:.6}");
    let _ = writeln!(s, "max_column_residual = {worst_res:.3e}");
    Ok(s)
}

fn hysteresis(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let params = cfg.team_params();
    let h = &cfg.hysteresis;
    let t = xbar_lfi::device::hysteresis_sweep(
        &params,
        cfg.team_initial_state()?,
        h.amplitude_ma * 1e-3,
        h.period_us * 1e-6,
        h.cycles,
    )?;
    out.bytes("hysteresis.csv", io::to_csv_bytes(&io::trajectory_records(&t))?);

    let (lo, hi) = t
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.r), hi.max(p.r)));
    let mut s = String::new();
    header(&mut s, "hysteresis sweep", cfg);
    let _ = writeln!(
        s,
        "amplitude_ma = {}\nperiod_us = {}\ncycles = {}\nk_off = {:e}",
        h.amplitude_ma, h.period_us, h.cycles, params.k_off
    );
    let _ = writeln!(s, "points = {}", t.points.len());
    let _ = writeln!(s, "r_initial_ohm = {:.4}\nr_final_ohm = {:.4}", t.initial_resistance(), t.final_resistance());
    let _ = writeln!(s, "r_min_ohm = {lo:.4}\nr_max_ohm = {hi:.4}");
    let _ = writeln!(s, "loop_area_vxa = {:.6e}", t.loop_area());
    Ok(s)
}

fn corrupt(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let params = cfg.team_params();
    let start = cfg.team_initial_state()?;
    let waveform = cfg.team_waveform()?;
    let c = corrupt_cell(&params, start, &waveform)?;
    out.bytes("corrupt.csv", io::to_csv_bytes(&io::trajectory_records(&c.trajectory))?);
    let weak = CurrentWaveform::new(WaveformShape::Sinusoid, 10e-6, waveform.duration, waveform.dt)?;
    let w = corrupt_cell(&params, start, &weak)?;

    let mut s = String::new();
    header(&mut s, "cell corruption", cfg);
    let _ = writeln!(
        s,
        "waveform = {:?}, {} mA peak, {} us\nk_off = {:e}",
        waveform.shape,
        waveform.peak * 1e3,
        waveform.duration * 1e6,
        params.k_off
    );
    let _ = writeln!(s, "r_before_ohm = {:.4}\nr_after_ohm = {:.4}", c.r_before, c.r_after);
    let _ = writeln!(s, "percent_change = {:.4}\npermanent = {}", c.percent_change, c.permanent);
    let _ = writeln!(s, "weak_10ua_percent_change = {:.6}", w.percent_change);
    Ok(s)
}

fn impact(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<String> {
    let config = cfg.crossbar_config();
    let before = cfg.weights()?;
    let (rows, cols) = (before.rows(), before.cols());
    let total = rows * cols;
    let count = ((cfg.impact.fraction * total as f64).round() as usize).clamp(1, total);
    if cfg.impact.probes == 0 {
        bail!("impact.probes must be >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picked = sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();
    let cells: Vec<(usize, usize)> = picked.iter().map(|k| (k / cols, k % cols)).collect();

    let c = corrupt_cell(&cfg.team_params(), cfg.team_initial_state()?, &cfg.team_waveform()?)?;
    let after = apply_corruption(&before, &cells, c.percent_change)?;
    let vmax = cfg.array.read_voltage;
    let probes: Vec<Vec<f64>> = (0..cfg.impact.probes)
        .map(|_| (0..rows).map(|_| rng.random_range(0.0..=vmax)).collect())
        .collect();
    let stats = inference_impact(&config, &before, &after, &probes)?;

    out.bytes("weights_before.csv", io::to_csv_bytes(&io::weight_records(&before))?);
    out.bytes("weights_after.csv", io::to_csv_bytes(&io::weight_records(&after))?);
    let r0 = ideal_column_currents(&config, &before, &probes[0])?;
    let r1 = ideal_column_currents(&config, &after, &probes[0])?;
    out.bytes("readout_before.csv", io::to_csv_bytes(&io::readout_records(&r0))?);
    out.bytes("readout_after.csv", io::to_csv_bytes(&io::readout_records(&r1))?);

    let mut s = String::new();
    header(&mut s, "inference impact", cfg);
    let _ = writeln!(s, "corrupted_cells = {count} ({:.2}%)", 100.0 * count as f64 / total as f64);
    let _ = writeln!(s, "cell_percent_change = {:.4}", c.percent_change);
    let _ = writeln!(s, "probes = {}", probes.len());
    let affected = stats.affected_columns();
    let _ = writeln!(s, "affected_columns = {} of {cols}", affected.len());
    let _ = writeln!(s, "max_rel_deviation = {:.6e}\nmean_rel_deviation = {:.6e}", stats.max_rel, stats.mean_rel);
    let _ = writeln!(s, "\n{:>6} {:>14} {:>14}", "col", "max_rel", "mean_rel");
    for j in affected {
        let d = &stats.per_column[j];
        let _ = writeln!(s, "{j:>6} {:>14.6e} {:>14.6e}", d.max_rel, d.mean_rel);
    }
    Ok(s)
}
