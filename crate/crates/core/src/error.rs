// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("singular nodal system: node {node} ({label}) has no path to a fixed-voltage node")]
    FloatingNode { node: usize, label: String },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error(
        "integration step too coarse: state moved {fraction:.3e} of its span in one step at t = {t:.3e} s; use a smaller dt"
    )]
    StepTooCoarse { fraction: f64, t: f64 },

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("cells not identifiable from the scan: {}", format_cells(.0))]
    Identifiability(Vec<(usize, usize)>),

    #[error("scan step {step} um leaves coverage gaps for a {diameter} um beam (step must be < 2 x diameter)")]
    CoverageGap { step: f64, diameter: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_cells(cells: &[(usize, usize)]) -> String {
    const SHOWN: usize = 16;
    let mut s = cells
        .iter()
        .take(SHOWN)
        .map(|(r, c)| format!("({r},{c})"))
        .collect::<Vec<_>>()
        .join(", ");
    if cells.len() > SHOWN {
        s.push_str(&format!(" ... and {} more", cells.len() - SHOWN));
    }
    s
}
